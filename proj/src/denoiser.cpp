#include "ered/denoiser.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "ered/rng.hpp"

namespace ered {

std::string to_string(DenoiserKind kind) {
    switch (kind) {
        case DenoiserKind::gmm_oracle: return "gmm_oracle";
        case DenoiserKind::perturbed_oracle: return "perturbed_oracle";
        case DenoiserKind::linear_shrink: return "linear_shrink";
        case DenoiserKind::dct_threshold: return "dct_threshold";
        case DenoiserKind::external: return "external";
    }
    return "unknown";
}

DenoiserKind denoiser_kind_from_string(const std::string& name) {
    if (name == "gmm_oracle") return DenoiserKind::gmm_oracle;
    if (name == "perturbed_oracle") return DenoiserKind::perturbed_oracle;
    if (name == "linear_shrink") return DenoiserKind::linear_shrink;
    if (name == "dct_threshold") return DenoiserKind::dct_threshold;
    if (name == "external") return DenoiserKind::external;
    throw std::invalid_argument("unknown denoiser kind \"" + name + "\"");
}

void DenoiserHandle::validate() const {
    switch (kind) {
        case DenoiserKind::gmm_oracle:
        case DenoiserKind::perturbed_oracle:
            if (!prior) throw std::invalid_argument("oracle denoiser: missing prior");
            prior->validate();
            if (eps < 0.0) throw std::invalid_argument("perturbed oracle: eps must be >= 0");
            break;
        case DenoiserKind::linear_shrink:
            if (!(shrink > 0.0 && shrink <= 1.0))
                throw std::invalid_argument("linear_shrink: c must be in (0, 1]");
            break;
        case DenoiserKind::dct_threshold:
            if (dct_block < 2) throw std::invalid_argument("dct_threshold: block must be >= 2");
            if (dct_threshold_mult < 0.0)
                throw std::invalid_argument("dct_threshold: negative threshold multiplier");
            break;
        case DenoiserKind::external:
            if (command.empty()) throw std::invalid_argument("external denoiser: empty command");
            if (!(timeout_seconds > 0.0))
                throw std::invalid_argument("external denoiser: timeout must be positive");
            break;
    }
}

DenoiserHandle DenoiserHandle::gmm_oracle(std::shared_ptr<const GmmPrior> prior) {
    DenoiserHandle h;
    h.kind = DenoiserKind::gmm_oracle;
    h.prior = std::move(prior);
    h.validate();
    return h;
}

DenoiserHandle DenoiserHandle::perturbed_oracle(std::shared_ptr<const GmmPrior> prior,
                                                double eps, std::uint64_t seed) {
    DenoiserHandle h;
    h.kind = DenoiserKind::perturbed_oracle;
    h.prior = std::move(prior);
    h.eps = eps;
    h.perturb_seed = seed;
    h.validate();
    return h;
}

DenoiserHandle DenoiserHandle::linear_shrink(double c) {
    DenoiserHandle h;
    h.kind = DenoiserKind::linear_shrink;
    h.shrink = c;
    h.validate();
    return h;
}

DenoiserHandle DenoiserHandle::dct_threshold() {
    DenoiserHandle h;
    h.kind = DenoiserKind::dct_threshold;
    return h;
}

DenoiserHandle DenoiserHandle::external(std::string command, double timeout_seconds) {
    DenoiserHandle h;
    h.kind = DenoiserKind::external;
    h.command = std::move(command);
    h.timeout_seconds = timeout_seconds;
    h.validate();
    return h;
}

Image linear_shrink_denoise(const Image& x, double c) {
    if (!(c > 0.0 && c <= 1.0))
        throw std::invalid_argument("linear_shrink_denoise: c must be in (0, 1]");
    Image out = x;
    out *= c;
    return out;
}

namespace {

// Coefficients of the perturbation field's linear forms, deterministic
// per (seed, coordinate, dimension).
struct PerturbationField {
    std::vector<std::vector<double>> dirs;  // d vectors of length d
    std::vector<double> phases;
};

PerturbationField make_field(std::uint64_t seed, int d) {
    PerturbationField f;
    f.dirs.resize(d);
    f.phases.resize(d);
    for (int i = 0; i < d; ++i) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        f.dirs[i].resize(d);
        for (double& a : f.dirs[i]) a = rng.normal();
        f.phases[i] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    }
    return f;
}

}  // namespace

Image perturbed_oracle_denoise(const GmmPrior& prior, double sigma, double eps,
                               const Image& x, std::uint64_t seed) {
    Image out = gmm_mmse_denoise_image(prior, sigma, x);
    if (eps == 0.0) return out;
    const int d = static_cast<int>(x.size());
    const PerturbationField field = make_field(seed, d);
    for (int i = 0; i < d; ++i) {
        double phase = field.phases[i];
        for (int j = 0; j < d; ++j) phase += field.dirs[i][j] * x[j];
        out[i] += eps * std::sin(phase);
    }
    return out;
}

namespace {

// orthonormal DCT-II basis, row k column n
std::vector<double> dct_basis(int n) {
    std::vector<double> c(static_cast<std::size_t>(n) * n);
    const double a0 = std::sqrt(1.0 / n), ak = std::sqrt(2.0 / n);
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            c[k * n + j] = (k == 0 ? a0 : ak) *
                           std::cos(std::numbers::pi * (2 * j + 1) * k / (2.0 * n));
    return c;
}

}  // namespace

Image dct_threshold_denoise(const Image& x, double sigma, int block, double threshold_mult) {
    if (!(sigma > 0.0))
        throw std::invalid_argument("dct_threshold_denoise: sigma must be positive");
    if (x.height() < block || x.width() < block)
        throw std::invalid_argument("dct_threshold_denoise: image " + x.shape_string() +
                                    " smaller than " + std::to_string(block) + "x" +
                                    std::to_string(block) + " block");
    const int b = block;
    const std::vector<double> basis = dct_basis(b);
    const double thresh = threshold_mult * sigma;

    Image acc(x.height(), x.width(), x.channels(), 0.0);
    Image counts(x.height(), x.width(), x.channels(), 0.0);
    std::vector<double> patch(static_cast<std::size_t>(b) * b);
    std::vector<double> tmp(patch.size());
    std::vector<double> coef(patch.size());

    for (int ch = 0; ch < x.channels(); ++ch) {
        for (int r0 = 0; r0 + b <= x.height(); ++r0) {
            for (int c0 = 0; c0 + b <= x.width(); ++c0) {
                for (int i = 0; i < b; ++i)
                    for (int j = 0; j < b; ++j) patch[i * b + j] = x(r0 + i, c0 + j, ch);
                // coef = C * patch * C^T
                for (int i = 0; i < b; ++i)
                    for (int j = 0; j < b; ++j) {
                        double s = 0.0;
                        for (int k = 0; k < b; ++k) s += basis[i * b + k] * patch[k * b + j];
                        tmp[i * b + j] = s;
                    }
                for (int i = 0; i < b; ++i)
                    for (int j = 0; j < b; ++j) {
                        double s = 0.0;
                        for (int k = 0; k < b; ++k) s += tmp[i * b + k] * basis[j * b + k];
                        coef[i * b + j] = s;
                    }
                for (std::size_t t = 1; t < coef.size(); ++t)  // DC stays
                    if (std::abs(coef[t]) < thresh) coef[t] = 0.0;
                // patch = C^T * coef * C
                for (int i = 0; i < b; ++i)
                    for (int j = 0; j < b; ++j) {
                        double s = 0.0;
                        for (int k = 0; k < b; ++k) s += basis[k * b + i] * coef[k * b + j];
                        tmp[i * b + j] = s;
                    }
                for (int i = 0; i < b; ++i)
                    for (int j = 0; j < b; ++j) {
                        double s = 0.0;
                        for (int k = 0; k < b; ++k) s += tmp[i * b + k] * basis[k * b + j];
                        acc(r0 + i, c0 + j, ch) += s;
                        counts(r0 + i, c0 + j, ch) += 1.0;
                    }
            }
        }
    }
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] /= counts[i];
    return acc;
}

Denoiser::Denoiser(DenoiserHandle handle) : handle_(std::move(handle)) {
    handle_.validate();
}

Image Denoiser::denoise(const Image& x, double sigma) {
    switch (handle_.kind) {
        case DenoiserKind::gmm_oracle:
            return gmm_mmse_denoise_image(*handle_.prior, sigma, x);
        case DenoiserKind::perturbed_oracle:
            return perturbed_oracle_denoise(*handle_.prior, sigma, handle_.eps, x,
                                            handle_.perturb_seed);
        case DenoiserKind::linear_shrink:
            return linear_shrink_denoise(x, handle_.shrink);
        case DenoiserKind::dct_threshold:
            return dct_threshold_denoise(x, sigma, handle_.dct_block,
                                         handle_.dct_threshold_mult);
        case DenoiserKind::external:
            if (!client_)
                client_ = std::make_unique<ExternalDenoiserClient>(handle_.command,
                                                                   handle_.timeout_seconds);
            return client_->denoise(x, sigma);
    }
    throw std::logic_error("Denoiser::denoise: unknown kind");
}

const GmmPrior* Denoiser::oracle_prior() const {
    if (handle_.kind == DenoiserKind::gmm_oracle ||
        handle_.kind == DenoiserKind::perturbed_oracle)
        return handle_.prior.get();
    return nullptr;
}

std::optional<double> Denoiser::known_lipschitz() const {
    if (handle_.kind == DenoiserKind::linear_shrink) return handle_.shrink;
    return std::nullopt;
}

}  // namespace ered
