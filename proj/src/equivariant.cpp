#include "ered/equivariant.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "ered/gauss_hermite.hpp"

namespace ered {

void EquivariantConfig::validate() const {
    transform.validate();
    if (n_mc < 1) throw std::invalid_argument("equivariant config: n_mc must be >= 1");
    if (!(sigma > 0.0)) throw std::invalid_argument("equivariant config: sigma must be > 0");
    if (!(lambda > 0.0)) throw std::invalid_argument("equivariant config: lambda must be > 0");
}

Image equivariant_denoise(Denoiser& denoiser, const EquivariantConfig& cfg,
                          const Image& x, Rng& rng) {
    cfg.validate();
    Image acc(x.height(), x.width(), x.channels(), 0.0);
    if (cfg.enumerate_finite && enumerable(cfg.transform)) {
        for (const auto& wi : enumerate_group(cfg.transform))
            acc.axpy(wi.weight,
                     jtvp(wi.instance, x, denoiser.denoise(apply(wi.instance, x), cfg.sigma)));
        return acc;
    }
    const ImageShape shape = ImageShape::of(x);
    for (int i = 0; i < cfg.n_mc; ++i) {
        const TransformInstance t = sample(cfg.transform, shape, rng, cfg.sigma);
        acc.axpy(1.0 / cfg.n_mc,
                 jtvp(t, x, denoiser.denoise(apply(t, x), cfg.sigma)));
    }
    return acc;
}

Image equivariant_score_estimate(Denoiser& denoiser, const EquivariantConfig& cfg,
                                 const Image& x, Rng& rng) {
    cfg.validate();
    const double inv_s2 = 1.0 / (cfg.sigma * cfg.sigma);
    Image acc(x.height(), x.width(), x.channels(), 0.0);

    auto accumulate = [&](const TransformInstance& t, double weight) {
        const Image gx = apply(t, x);
        // E[J_G^T G(x)] for a noising draw is x exactly; substituting the
        // closed form removes that term's sampling variance.
        Image term = (t.kind == TransformKind::gaussian_noising)
                         ? x
                         : jtvp(t, x, gx);
        term -= jtvp(t, x, denoiser.denoise(gx, cfg.sigma));
        acc.axpy(weight * inv_s2, term);
    };

    if (cfg.enumerate_finite && enumerable(cfg.transform)) {
        for (const auto& wi : enumerate_group(cfg.transform))
            accumulate(wi.instance, wi.weight);
        return acc;
    }
    const ImageShape shape = ImageShape::of(x);
    for (int i = 0; i < cfg.n_mc; ++i)
        accumulate(sample(cfg.transform, shape, rng, cfg.sigma), 1.0 / cfg.n_mc);
    return acc;
}

SampledDirection single_sample_direction(Denoiser& denoiser, const EquivariantConfig& cfg,
                                         const Image& x, Rng& rng) {
    cfg.validate();
    const TransformInstance t = sample(cfg.transform, ImageShape::of(x), rng, cfg.sigma);
    Image gx = apply(t, x);
    gx -= denoiser.denoise(gx, cfg.sigma);
    Image dir = jtvp(t, x, gx);
    dir *= cfg.lambda / (cfg.sigma * cfg.sigma);
    return {std::move(dir), t};
}

namespace {

double noising_sigma_of(const TransformSpec& spec, double sigma) {
    return spec.noise_scale >= 0.0 ? spec.noise_scale : sigma;
}

// Tensor-product Gauss-Hermite expectation of f(x + s*z), z ~ N(0, I_d).
// f accumulates into a caller-provided buffer to serve both the scalar
// and vector cases.
template <typename Fn>
void gauss_hermite_expect(const Image& x, double s, int order, Fn&& accumulate) {
    const int d = static_cast<int>(x.size());
    const auto [nodes, weights] = gauss_hermite_nodes(order);
    const double norm = std::pow(std::numbers::pi, -0.5 * d);
    std::vector<int> idx(d, 0);
    Image point = x;
    while (true) {
        double w = norm;
        for (int i = 0; i < d; ++i) {
            point[i] = x[i] + s * std::numbers::sqrt2 * nodes[idx[i]];
            w *= weights[idx[i]];
        }
        accumulate(point, w);
        int i = 0;
        for (; i < d; ++i) {
            if (++idx[i] < order) break;
            idx[i] = 0;
        }
        if (i == d) break;
    }
}

constexpr int kGaussHermiteOrder = 32;
constexpr int kGaussHermiteMaxDim = 4;

}  // namespace

OracleScore oracle_equivariant_score(const GmmPrior& prior, const TransformSpec& group,
                                     double sigma, const Image& x, int n_mc, Rng* rng) {
    group.validate();
    OracleScore result{Image(x.height(), x.width(), x.channels(), 0.0), true, 0.0};

    if (enumerable(group)) {
        for (const auto& wi : enumerate_group(group)) {
            const Image gx = apply(wi.instance, x);
            result.value.axpy(-wi.weight,
                              jtvp(wi.instance, x, gmm_score_image(prior, sigma, gx)));
        }
        return result;
    }

    if (group.kind == TransformKind::gaussian_noising &&
        static_cast<int>(x.size()) <= kGaussHermiteMaxDim) {
        const double s = noising_sigma_of(group, sigma);
        gauss_hermite_expect(x, s, kGaussHermiteOrder, [&](const Image& p, double w) {
            result.value.axpy(-w, gmm_score_image(prior, sigma, p));
        });
        return result;
    }

    if (!rng)
        throw std::invalid_argument(
            "oracle_equivariant_score: group requires Monte-Carlo estimation, pass an rng");
    result.exact = false;
    const ImageShape shape = ImageShape::of(x);
    std::vector<Image> draws;
    draws.reserve(n_mc);
    for (int i = 0; i < n_mc; ++i) {
        const TransformInstance t = sample(group, shape, *rng, sigma);
        const Image gx = apply(t, x);
        Image s_i = jtvp(t, x, gmm_score_image(prior, sigma, gx));
        s_i *= -1.0;
        result.value.axpy(1.0 / n_mc, s_i);
        draws.push_back(std::move(s_i));
    }
    double var = 0.0;
    for (const auto& s_i : draws) {
        Image diff = s_i;
        diff -= result.value;
        var += dot(diff, diff);
    }
    if (n_mc > 1) result.std_error = std::sqrt(var / (n_mc * (n_mc - 1.0)));
    return result;
}

OracleValue oracle_equivariant_regularizer(const GmmPrior& prior,
                                           const TransformSpec& group, double sigma,
                                           const Image& x, int n_mc, Rng* rng) {
    group.validate();
    OracleValue result;

    if (enumerable(group)) {
        for (const auto& wi : enumerate_group(group))
            result.value -= wi.weight * gmm_log_density(prior, sigma, apply(wi.instance, x));
        return result;
    }

    if (group.kind == TransformKind::gaussian_noising &&
        static_cast<int>(x.size()) <= kGaussHermiteMaxDim) {
        const double s = noising_sigma_of(group, sigma);
        gauss_hermite_expect(x, s, kGaussHermiteOrder, [&](const Image& p, double w) {
            result.value -= w * gmm_log_density(prior, sigma, p);
        });
        return result;
    }

    if (!rng)
        throw std::invalid_argument(
            "oracle_equivariant_regularizer: group requires Monte-Carlo estimation, pass an rng");
    result.exact = false;
    const ImageShape shape = ImageShape::of(x);
    double mean = 0.0, m2 = 0.0;
    for (int i = 0; i < n_mc; ++i) {
        const TransformInstance t = sample(group, shape, *rng, sigma);
        const double v = -gmm_log_density(prior, sigma, apply(t, x));
        const double delta = v - mean;
        mean += delta / (i + 1);
        m2 += delta * (v - mean);
    }
    result.value = mean;
    if (n_mc > 1) result.std_error = std::sqrt(m2 / (n_mc - 1.0) / n_mc);
    return result;
}

}  // namespace ered
