#include "ered/image.hpp"

#include <cmath>
#include <stdexcept>

namespace ered {

namespace {

void validate_shape(int height, int width, int channels) {
    if (height <= 0 || width <= 0)
        throw std::invalid_argument("image dimensions must be positive");
    if (channels != 1 && channels != 3)
        throw std::invalid_argument("image channels must be 1 or 3");
}

void require_same_shape(const Image& a, const Image& b, const char* op) {
    if (!a.same_shape(b))
        throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                    a.shape_string() + " vs " + b.shape_string());
}

}  // namespace

Image::Image(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels),
      data_(static_cast<std::size_t>(height) * width * channels, fill) {
    validate_shape(height, width, channels);
}

Image::Image(int height, int width, int channels, std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
    validate_shape(height, width, channels);
    if (data_.size() != static_cast<std::size_t>(height) * width * channels)
        throw std::invalid_argument("image data length does not match shape");
}

std::string Image::shape_string() const {
    return std::to_string(height_) + "x" + std::to_string(width_) + "x" +
           std::to_string(channels_);
}

bool Image::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

Image& Image::operator+=(const Image& other) {
    require_same_shape(*this, other, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
}

Image& Image::operator-=(const Image& other) {
    require_same_shape(*this, other, "operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= other.data_[i];
    return *this;
}

Image& Image::operator*=(double s) {
    for (double& v : data_) v *= s;
    return *this;
}

Image& Image::axpy(double s, const Image& other) {
    require_same_shape(*this, other, "axpy");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += s * other.data_[i];
    return *this;
}

Image& Image::clamp_min(double floor) {
    for (double& v : data_)
        if (v < floor) v = floor;
    return *this;
}

double dot(const Image& a, const Image& b) {
    require_same_shape(a, b, "dot");
    double s = 0.0;
    auto da = a.data();
    auto db = b.data();
    for (std::size_t i = 0; i < da.size(); ++i) s += da[i] * db[i];
    return s;
}

double norm2(const Image& a) { return std::sqrt(dot(a, a)); }

double norm_inf(const Image& a) {
    double m = 0.0;
    for (double v : a.data()) m = std::max(m, std::abs(v));
    return m;
}

double mse(const Image& a, const Image& b) {
    require_same_shape(a, b, "mse");
    double s = 0.0;
    auto da = a.data();
    auto db = b.data();
    for (std::size_t i = 0; i < da.size(); ++i) {
        const double d = da[i] - db[i];
        s += d * d;
    }
    return s / static_cast<double>(da.size());
}

double psnr(const Image& x, const Image& ref, double peak) {
    require_same_shape(x, ref, "psnr");
    if (peak <= 0.0) throw std::invalid_argument("psnr: peak must be positive");
    const double err = mse(x, ref);
    if (err == 0.0) return kPsnrCap;
    return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / err));
}

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimK1 = 0.01;
constexpr double kSsimK2 = 0.03;
constexpr double kSsimRange = 1.0;

const std::vector<double>& ssim_window() {
    static const std::vector<double> w = [] {
        std::vector<double> g(kSsimWindow * kSsimWindow);
        const int half = kSsimWindow / 2;
        double sum = 0.0;
        for (int i = 0; i < kSsimWindow; ++i)
            for (int j = 0; j < kSsimWindow; ++j) {
                const double dy = i - half, dx = j - half;
                g[i * kSsimWindow + j] =
                    std::exp(-(dy * dy + dx * dx) / (2.0 * kSsimSigma * kSsimSigma));
                sum += g[i * kSsimWindow + j];
            }
        for (double& v : g) v /= sum;
        return g;
    }();
    return w;
}

}  // namespace

double ssim(const Image& x, const Image& ref) {
    require_same_shape(x, ref, "ssim");
    if (x.height() < kSsimWindow || x.width() < kSsimWindow)
        throw std::invalid_argument("ssim: image smaller than the 11x11 window");

    const auto& w = ssim_window();
    const double c1 = (kSsimK1 * kSsimRange) * (kSsimK1 * kSsimRange);
    const double c2 = (kSsimK2 * kSsimRange) * (kSsimK2 * kSsimRange);

    double total = 0.0;
    std::size_t count = 0;
    for (int ch = 0; ch < x.channels(); ++ch) {
        for (int r = 0; r + kSsimWindow <= x.height(); ++r) {
            for (int c = 0; c + kSsimWindow <= x.width(); ++c) {
                double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
                for (int i = 0; i < kSsimWindow; ++i)
                    for (int j = 0; j < kSsimWindow; ++j) {
                        const double wij = w[i * kSsimWindow + j];
                        const double a = x(r + i, c + j, ch);
                        const double b = ref(r + i, c + j, ch);
                        mx += wij * a;
                        my += wij * b;
                        mxx += wij * a * a;
                        myy += wij * b * b;
                        mxy += wij * a * b;
                    }
                const double vx = mxx - mx * mx;
                const double vy = myy - my * my;
                const double cov = mxy - mx * my;
                const double val = ((2 * mx * my + c1) * (2 * cov + c2)) /
                                   ((mx * mx + my * my + c1) * (vx + vy + c2));
                total += val;
                ++count;
            }
        }
    }
    return total / static_cast<double>(count);
}

Metrics compute_metrics(const Image& x, const Image& ref, double peak) {
    Metrics m;
    m.mse = mse(x, ref);
    m.psnr = psnr(x, ref, peak);
    m.ssim = ssim(x, ref);
    return m;
}

}  // namespace ered
