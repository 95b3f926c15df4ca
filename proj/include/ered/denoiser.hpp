#pragma once

#include <memory>
#include <optional>
#include <string>

#include "ered/ednz.hpp"
#include "ered/gmm.hpp"
#include "ered/image.hpp"

namespace ered {

enum class DenoiserKind {
    gmm_oracle,       // exact MMSE denoiser of a GMM prior
    perturbed_oracle, // MMSE plus a fixed bounded field of sup-norm eps
    linear_shrink,    // x -> c*x, Lipschitz constant exactly c
    dct_threshold,    // sliding-window DCT hard thresholding
    external,         // child process speaking the EDNZ protocol
};

std::string to_string(DenoiserKind kind);
DenoiserKind denoiser_kind_from_string(const std::string& name);

struct DenoiserHandle {
    DenoiserKind kind = DenoiserKind::linear_shrink;
    std::shared_ptr<const GmmPrior> prior;  // gmm_oracle / perturbed_oracle
    double eps = 0.0;                       // perturbed_oracle
    std::uint64_t perturb_seed = 7;
    double shrink = 1.0;                    // linear_shrink, c in (0, 1]
    int dct_block = 8;
    double dct_threshold_mult = 3.0;
    std::string command;                    // external
    double timeout_seconds = 60.0;

    void validate() const;

    static DenoiserHandle gmm_oracle(std::shared_ptr<const GmmPrior> prior);
    static DenoiserHandle perturbed_oracle(std::shared_ptr<const GmmPrior> prior,
                                           double eps, std::uint64_t seed = 7);
    static DenoiserHandle linear_shrink(double c);
    static DenoiserHandle dct_threshold();
    static DenoiserHandle external(std::string command, double timeout_seconds = 60.0);
};

Image linear_shrink_denoise(const Image& x, double c);

// MMSE output plus eps * u(x) where u is a fixed smooth field with
// sup-norm 1 (coordinate-wise sine of a seeded linear form), making the
// denoiser error exactly eps in sup norm. The field is deterministic
// given (seed, dimension), so the denoiser stays a fixed function.
Image perturbed_oracle_denoise(const GmmPrior& prior, double sigma, double eps,
                               const Image& x, std::uint64_t seed = 7);

// Sliding-window DCT hard thresholding at mult*sigma (DC kept), uniform
// patch aggregation. Deterministic. Throws if the image is smaller than
// the block.
Image dct_threshold_denoise(const Image& x, double sigma, int block = 8,
                            double threshold_mult = 3.0);

// Runtime denoiser bound to one worker. External children are spawned
// lazily and never shared between workers; the math kinds are pure.
class Denoiser {
public:
    explicit Denoiser(DenoiserHandle handle);

    Image denoise(const Image& x, double sigma);

    // The prior behind oracle kinds, for convergence diagnostics.
    const GmmPrior* oracle_prior() const;
    // Known Lipschitz constant, when the kind has one by construction.
    std::optional<double> known_lipschitz() const;
    const DenoiserHandle& handle() const { return handle_; }

private:
    DenoiserHandle handle_;
    std::unique_ptr<ExternalDenoiserClient> client_;
};

}  // namespace ered
