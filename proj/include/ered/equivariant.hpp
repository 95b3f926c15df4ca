#pragma once

#include "ered/denoiser.hpp"
#include "ered/gmm.hpp"
#include "ered/image.hpp"
#include "ered/rng.hpp"
#include "ered/transform.hpp"

namespace ered {

struct EquivariantConfig {
    TransformSpec transform;
    int n_mc = 1;
    bool enumerate_finite = true;  // exact |G|-term averages for finite groups
    double sigma = 0.0;            // denoiser noise level, > 0
    double lambda = 1.0;           // regularization weight, > 0

    void validate() const;
};

// Group-averaged denoiser: mean of J_G^T(x) D_sigma(G(x)) over n_mc
// sampled transforms, or the exact enumeration when the group is finite
// and enumeration is enabled.
Image equivariant_denoise(Denoiser& denoiser, const EquivariantConfig& cfg,
                          const Image& x, Rng& rng);

// Estimate of the equivariant regularizer gradient,
//   (1/sigma^2) (E[J_G^T(x) G(x)] - D~_sigma(x)),
// with both expectations taken over the same sampled transforms. For
// noising instances the first term is E[x + sigma z] = x in closed form.
// Does not depend on cfg.lambda.
Image equivariant_score_estimate(Denoiser& denoiser, const EquivariantConfig& cfg,
                                 const Image& x, Rng& rng);

struct SampledDirection {
    Image direction;
    TransformInstance instance;
};

// One stochastic step direction: draws a single G and returns
// (lambda/sigma^2) J_G^T(x) (G(x) - D_sigma(G(x))) with the instance for
// trace logging.
SampledDirection single_sample_direction(Denoiser& denoiser, const EquivariantConfig& cfg,
                                         const Image& x, Rng& rng);

// ---- exact references for GMM priors ----

struct OracleScore {
    Image value;
    bool exact = true;       // false when Monte-Carlo estimated
    double std_error = 0.0;  // CI half-scale of the norm for MC estimates
};

struct OracleValue {
    double value = 0.0;
    bool exact = true;
    double std_error = 0.0;
};

// s_sigma_pi(x) = -E[J_G^T(x) grad log p_sigma(G(x))], the gradient of
// the equivariant regularizer. Exact by enumeration for finite groups;
// for pure Gaussian noising it is evaluated by 32-point tensor
// Gauss-Hermite quadrature when dim <= 4; otherwise Monte-Carlo with a
// reported standard error (rng required).
OracleScore oracle_equivariant_score(const GmmPrior& prior, const TransformSpec& group,
                                     double sigma, const Image& x, int n_mc = 4096,
                                     Rng* rng = nullptr);

// r_sigma_pi(x) = -E[log p_sigma(G(x))], same evaluation strategies.
OracleValue oracle_equivariant_regularizer(const GmmPrior& prior,
                                           const TransformSpec& group, double sigma,
                                           const Image& x, int n_mc = 4096,
                                           Rng* rng = nullptr);

}  // namespace ered
