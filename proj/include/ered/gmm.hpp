#pragma once

#include <span>
#include <vector>

#include "ered/image.hpp"
#include "ered/rng.hpp"
#include "ered/transform.hpp"

namespace ered {

// Isotropic Gaussian mixture prior. Smoothing by N(0, sigma^2 I) stays
// closed-form: each component variance becomes tau_j^2 + sigma^2, which
// is why only isotropic components are supported.
struct GmmComponent {
    double weight = 1.0;
    std::vector<double> mean;
    double tau = 1.0;
};

struct GmmPrior {
    std::vector<GmmComponent> components;

    int dim() const {
        return components.empty() ? 0 : static_cast<int>(components[0].mean.size());
    }
    void validate() const;  // weights sum to 1 within 1e-12, tau > 0, finite means
};

// log p_sigma(x) with log-sum-exp stabilization; sigma >= 0.
double gmm_log_density(const GmmPrior& prior, double sigma, std::span<const double> x);

// Posterior component responsibilities at x under p_sigma; sum to 1.
std::vector<double> gmm_responsibilities(const GmmPrior& prior, double sigma,
                                         std::span<const double> x);

// grad log p_sigma(x) = sum_j gamma_j(x) (mu_j - x) / (tau_j^2 + sigma^2).
std::vector<double> gmm_score(const GmmPrior& prior, double sigma,
                              std::span<const double> x);

// MMSE denoiser, computed as the responsibility-weighted posterior mean
//   sum_j gamma_j(x) (tau_j^2 x + sigma^2 mu_j) / (tau_j^2 + sigma^2),
// an algebraically independent route from x + sigma^2 * score. sigma > 0.
std::vector<double> gmm_mmse_denoise(const GmmPrior& prior, double sigma,
                                     std::span<const double> x);

// Image wrappers; prior dimension must equal the flattened image size.
double gmm_log_density(const GmmPrior& prior, double sigma, const Image& x);
Image gmm_score_image(const GmmPrior& prior, double sigma, const Image& x);
Image gmm_mmse_denoise_image(const GmmPrior& prior, double sigma, const Image& x);

// Random mixture for randomized identity checks: component count in
// [1, max_components], means in [-mean_range, mean_range]^d, tau in
// [0.3, 1.5], Dirichlet-ish weights.
GmmPrior make_random_gmm(int dim, int max_components, Rng& rng, double mean_range = 2.0);

// Orbit-averages the component means over a finite transform group so
// the prior becomes invariant to every group element. Components whose
// means collide after transformation are merged.
GmmPrior symmetrize_gmm(const GmmPrior& prior, const TransformSpec& group,
                        const ImageShape& shape);

}  // namespace ered
