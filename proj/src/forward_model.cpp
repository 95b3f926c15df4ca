#include "ered/forward_model.hpp"

#include <cmath>
#include <complex>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

namespace ered {

std::string to_string(ForwardKind kind) {
    switch (kind) {
        case ForwardKind::denoise: return "denoise";
        case ForwardKind::deblur: return "deblur";
        case ForwardKind::super_resolution: return "super_resolution";
        case ForwardKind::despeckle: return "despeckle";
    }
    return "unknown";
}

ForwardKind forward_kind_from_string(const std::string& name) {
    if (name == "denoise") return ForwardKind::denoise;
    if (name == "deblur") return ForwardKind::deblur;
    if (name == "super_resolution" || name == "sr") return ForwardKind::super_resolution;
    if (name == "despeckle") return ForwardKind::despeckle;
    throw std::invalid_argument("unknown forward model kind \"" + name + "\"");
}

void ForwardModel::validate() const {
    if (sigma_y < 0.0) throw std::invalid_argument("forward model: sigma_y must be >= 0");
    if (kind == ForwardKind::deblur || kind == ForwardKind::super_resolution) {
        if (kernel.size() == 0) throw std::invalid_argument("forward model: missing kernel");
        if (kernel.channels() != 1)
            throw std::invalid_argument("forward model: kernel must be single-channel");
        double sum = 0.0;
        for (double v : kernel.data()) sum += v;
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("forward model: kernel sums to " + std::to_string(sum));
    }
    if (kind == ForwardKind::super_resolution && sr_factor < 1)
        throw std::invalid_argument("forward model: sr_factor must be >= 1");
    if (kind == ForwardKind::despeckle && looks < 1)
        throw std::invalid_argument("forward model: looks must be >= 1");
}

namespace {

int wrap(int a, int m) {
    const int r = a % m;
    return r < 0 ? r + m : r;
}

// FFTW planner calls are not thread-safe; executions of distinct plans are.
std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

using Cvec = std::vector<std::complex<double>>;

Cvec fft2(const std::vector<double>& in, int h, int w, bool inverse) {
    Cvec data(static_cast<std::size_t>(h) * w);
    for (std::size_t i = 0; i < data.size(); ++i) data[i] = in[i];
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        plan = fftw_plan_dft_2d(h, w, reinterpret_cast<fftw_complex*>(data.data()),
                                reinterpret_cast<fftw_complex*>(data.data()),
                                inverse ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    return data;
}

Cvec fft2_complex(Cvec data, int h, int w, bool inverse) {
    fftw_plan plan;
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        plan = fftw_plan_dft_2d(h, w, reinterpret_cast<fftw_complex*>(data.data()),
                                reinterpret_cast<fftw_complex*>(data.data()),
                                inverse ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
    }
    return data;
}

// Kernel embedded into an h x w field with its center at the origin,
// wrapping negative offsets.
std::vector<double> embed_kernel(const Image& kernel, int h, int w) {
    if (kernel.height() > h || kernel.width() > w)
        throw std::invalid_argument("kernel larger than image");
    std::vector<double> k(static_cast<std::size_t>(h) * w, 0.0);
    const int cy = kernel.height() / 2, cx = kernel.width() / 2;
    for (int i = 0; i < kernel.height(); ++i)
        for (int j = 0; j < kernel.width(); ++j)
            k[static_cast<std::size_t>(wrap(i - cy, h)) * w + wrap(j - cx, w)] += kernel(i, j);
    return k;
}

Image filter_fft(const Image& x, const Image& kernel, bool adjoint) {
    const int h = x.height(), w = x.width();
    const Cvec kf = fft2(embed_kernel(kernel, h, w), h, w, false);
    Image out(h, w, x.channels());
    std::vector<double> channel(static_cast<std::size_t>(h) * w);
    const double scale = 1.0 / (static_cast<double>(h) * w);
    for (int ch = 0; ch < x.channels(); ++ch) {
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) channel[static_cast<std::size_t>(r) * w + c] = x(r, c, ch);
        Cvec xf = fft2(channel, h, w, false);
        for (std::size_t i = 0; i < xf.size(); ++i)
            xf[i] *= adjoint ? std::conj(kf[i]) : kf[i];
        const Cvec back = fft2_complex(std::move(xf), h, w, true);
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c)
                out(r, c, ch) = back[static_cast<std::size_t>(r) * w + c].real() * scale;
    }
    return out;
}

Image filter_direct(const Image& x, const Image& kernel, bool adjoint) {
    const int h = x.height(), w = x.width();
    const int cy = kernel.height() / 2, cx = kernel.width() / 2;
    Image out(h, w, x.channels(), 0.0);
    for (int ch = 0; ch < x.channels(); ++ch)
        for (int r = 0; r < h; ++r)
            for (int c = 0; c < w; ++c) {
                double acc = 0.0;
                for (int i = 0; i < kernel.height(); ++i)
                    for (int j = 0; j < kernel.width(); ++j) {
                        const int dy = i - cy, dx = j - cx;
                        const int sr = adjoint ? wrap(r + dy, h) : wrap(r - dy, h);
                        const int sc = adjoint ? wrap(c + dx, w) : wrap(c - dx, w);
                        acc += kernel(i, j) * x(sr, sc, ch);
                    }
                out(r, c, ch) = acc;
            }
    return out;
}

Image decimate(const Image& x, int factor) {
    if (x.height() % factor != 0 || x.width() % factor != 0)
        throw std::invalid_argument("super_resolution: factor " + std::to_string(factor) +
                                    " does not divide image " + x.shape_string());
    Image out(x.height() / factor, x.width() / factor, x.channels());
    for (int r = 0; r < out.height(); ++r)
        for (int c = 0; c < out.width(); ++c)
            for (int ch = 0; ch < x.channels(); ++ch)
                out(r, c, ch) = x(r * factor, c * factor, ch);
    return out;
}

Image zero_fill(const Image& y, int factor) {
    Image out(y.height() * factor, y.width() * factor, y.channels(), 0.0);
    for (int r = 0; r < y.height(); ++r)
        for (int c = 0; c < y.width(); ++c)
            for (int ch = 0; ch < y.channels(); ++ch)
                out(r * factor, c * factor, ch) = y(r, c, ch);
    return out;
}

void require_gaussian(const ForwardModel& model, const char* what) {
    if (!model.gaussian())
        throw std::invalid_argument(std::string(what) +
                                    ": despeckle has no linear degradation operator");
}

}  // namespace

Image convolve_circular_fft(const Image& x, const Image& kernel) {
    return filter_fft(x, kernel, false);
}
Image correlate_circular_fft(const Image& x, const Image& kernel) {
    return filter_fft(x, kernel, true);
}
Image convolve_circular_direct(const Image& x, const Image& kernel) {
    return filter_direct(x, kernel, false);
}
Image correlate_circular_direct(const Image& x, const Image& kernel) {
    return filter_direct(x, kernel, true);
}

Image apply_operator(const ForwardModel& model, const Image& x) {
    model.validate();
    require_gaussian(model, "apply_operator");
    switch (model.kind) {
        case ForwardKind::denoise: return x;
        case ForwardKind::deblur: return convolve_circular_fft(x, model.kernel);
        case ForwardKind::super_resolution:
            return decimate(convolve_circular_fft(x, model.kernel), model.sr_factor);
        default: break;
    }
    throw std::logic_error("apply_operator: unreachable");
}

Image apply_operator_adjoint(const ForwardModel& model, const Image& r) {
    model.validate();
    require_gaussian(model, "apply_operator_adjoint");
    switch (model.kind) {
        case ForwardKind::denoise: return r;
        case ForwardKind::deblur: return correlate_circular_fft(r, model.kernel);
        case ForwardKind::super_resolution:
            return correlate_circular_fft(zero_fill(r, model.sr_factor), model.kernel);
        default: break;
    }
    throw std::logic_error("apply_operator_adjoint: unreachable");
}

Image degrade(const ForwardModel& model, const Image& x, Rng& rng) {
    model.validate();
    if (model.kind == ForwardKind::despeckle) {
        Image y = x;
        const double shape = static_cast<double>(model.looks);
        for (double& v : y.data()) v *= rng.gamma(shape, 1.0 / shape);
        return y;
    }
    Image y = apply_operator(model, x);
    if (model.sigma_y > 0.0)
        for (double& v : y.data()) v += model.sigma_y * rng.normal();
    return y;
}

double fidelity_eval(const ForwardModel& model, const Image& x, const Image& y) {
    model.validate();
    if (model.kind == ForwardKind::despeckle) {
        if (!x.same_shape(y))
            throw std::invalid_argument("fidelity_eval: shape mismatch");
        double f = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] <= kPositivityFloor)
                throw std::domain_error("despeckle fidelity: value " + std::to_string(x[i]) +
                                        " at or below the positivity floor");
            f += std::log(x[i]) + y[i] / x[i];
        }
        return model.looks * f;
    }
    if (!(model.sigma_y > 0.0))
        throw std::invalid_argument("fidelity_eval: sigma_y must be > 0 for Gaussian fidelity");
    Image residual = apply_operator(model, x);
    residual -= y;
    return dot(residual, residual) / (2.0 * model.sigma_y * model.sigma_y);
}

Image fidelity_grad(const ForwardModel& model, const Image& x, const Image& y) {
    model.validate();
    if (model.kind == ForwardKind::despeckle) {
        if (!x.same_shape(y))
            throw std::invalid_argument("fidelity_grad: shape mismatch");
        Image g(x.height(), x.width(), x.channels());
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i] <= kPositivityFloor)
                throw std::domain_error("despeckle fidelity: value " + std::to_string(x[i]) +
                                        " at or below the positivity floor");
            g[i] = model.looks * (1.0 / x[i] - y[i] / (x[i] * x[i]));
        }
        return g;
    }
    if (!(model.sigma_y > 0.0))
        throw std::invalid_argument("fidelity_grad: sigma_y must be > 0 for Gaussian fidelity");
    Image residual = apply_operator(model, x);
    residual -= y;
    Image g = apply_operator_adjoint(model, residual);
    g *= 1.0 / (model.sigma_y * model.sigma_y);
    return g;
}

ImageShape observation_shape(const ForwardModel& model, const ImageShape& x_shape) {
    if (model.kind == ForwardKind::super_resolution) {
        if (x_shape.height % model.sr_factor != 0 || x_shape.width % model.sr_factor != 0)
            throw std::invalid_argument("super_resolution: factor does not divide image");
        return {x_shape.height / model.sr_factor, x_shape.width / model.sr_factor,
                x_shape.channels};
    }
    return x_shape;
}

Image load_kernel(const std::string& path, bool* renormalized) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error(path + ": cannot open kernel file");
    int h = 0, w = 0;
    if (!(in >> h >> w)) throw std::runtime_error(path + ": bad kernel header");
    if (h <= 0 || w <= 0) throw std::runtime_error(path + ": nonpositive kernel dimensions");
    Image k(h, w, 1);
    for (int i = 0; i < h * w; ++i) {
        double v;
        if (!(in >> v)) throw std::runtime_error(path + ": truncated or malformed kernel row");
        if (!std::isfinite(v)) throw std::runtime_error(path + ": non-finite kernel value");
        k[static_cast<std::size_t>(i)] = v;
    }
    double sum = 0.0;
    for (double v : k.data()) sum += v;
    if (std::abs(sum) < 1e-12)
        throw std::runtime_error(path + ": kernel sums to zero, cannot normalize");
    if (renormalized) *renormalized = std::abs(sum - 1.0) > 1e-6;
    for (double& v : k.data()) v /= sum;
    // trim the leftover rounding so validate()'s 1e-12 budget holds
    double check = 0.0;
    for (double v : k.data()) check += v;
    k[k.size() - 1] += 1.0 - check;
    return k;
}

double operator_norm_estimate(const ForwardModel& model, const ImageShape& x_shape,
                              int iterations, Rng& rng) {
    require_gaussian(model, "operator_norm_estimate");
    Image v(x_shape.height, x_shape.width, x_shape.channels);
    for (double& e : v.data()) e = rng.normal();
    double lambda = 0.0;
    for (int i = 0; i < iterations; ++i) {
        const double n = norm2(v);
        if (n == 0.0) break;
        v *= 1.0 / n;
        v = apply_operator_adjoint(model, apply_operator(model, v));
        lambda = norm2(v);
    }
    return std::sqrt(lambda);
}

}  // namespace ered
