#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ered/denoiser.hpp"
#include "ered/equivariant.hpp"
#include "ered/forward_model.hpp"
#include "ered/gmm.hpp"
#include "ered/image.hpp"
#include "ered/transform.hpp"

namespace ered {

enum class StepKind { constant, polynomial };

struct StepSchedule {
    StepKind kind = StepKind::constant;
    double delta0 = 1.0;
    double alpha = 0.75;  // polynomial exponent, delta_k = delta0 / (k+1)^alpha

    double at(long k) const;
    // true when the schedule is square-summable but not summable
    // (polynomial with alpha in (1/2, 1]); constant schedules are not.
    bool diminishing_valid() const;
    void validate() const;
};

enum class SigmaKind { constant, annealed };

struct SigmaSchedule {
    SigmaKind kind = SigmaKind::constant;
    double sigma0 = 0.1;
    double sigma_final = 0.1;
    double anneal_fraction = 0.5;  // log-linear decay over this head fraction, then hold

    double at(long k, long total_iterations) const;
    void validate() const;
};

enum class InitPolicy { auto_default, observation, adjoint, constant, explicit_image };

struct EredRunConfig {
    double lambda = 1.0;  // >= 0; zero disables the regularization direction
    StepSchedule step;
    SigmaSchedule sigma;
    long iterations = 100;
    TransformSpec transform;
    DenoiserHandle denoiser;
    std::uint64_t seed = 0;
    InitPolicy x0_policy = InitPolicy::auto_default;
    double x0_constant = 0.5;
    Image x0_explicit;
    long trace_stride = 1;
    bool positivity_floor = false;  // required for despeckle
    bool lambda_only = false;       // f == 0: restoration driven by the prior only
    bool keep_snapshots = false;

    void validate() const;
};

struct TraceRow {
    long k = 0;
    double fidelity = 0.0;
    double grad_norm = 0.0;         // |grad F_sigma_pi| from the oracle; NaN if unavailable
    double objective = 0.0;         // f + lambda * r_sigma_pi; NaN if unavailable
    double direction_norm = 0.0;
    double xi_mean_norm = 0.0;      // |running mean of xi|
    double xi_second_moment = 0.0;  // running mean of |xi|^2
    double xi_sq = 0.0;             // instantaneous |xi_k|^2 (in-memory only)
    double sigma_k = 0.0;
    double delta_k = 0.0;
    std::string transform_id;
    std::shared_ptr<const Image> snapshot;  // only when keep_snapshots
};

enum class RunStatus { completed, diverged };

struct RunTrace {
    std::vector<TraceRow> rows;
    Image final_image;
    RunStatus status = RunStatus::completed;
    long abort_iteration = -1;
    std::string abort_message;
    double max_iterate_norm = 0.0;  // boundedness monitor; divergence aborts, never projects
    bool diminishing_steps = false;
    bool oracle_diagnostics = false;
    double wall_time_seconds = 0.0;
};

// The stochastic restoration loop: one sampled transform per iteration,
//   x_{k+1} = x_k - delta_k grad f(x_k)
//             - delta_k (lambda/sigma_k^2) J_G^T(x_k)(G(x_k) - D(G(x_k))).
// Identical seeds give bit-identical traces. When the denoiser is an
// oracle kind and the group admits an exact mean, per-iteration noise
// diagnostics (xi statistics, oracle gradient norms) are recorded.
RunTrace ered_run(const EredRunConfig& cfg, const ForwardModel& model, const Image& y);

// Same loop with the transform forced to the identity group.
RunTrace red_run(const EredRunConfig& cfg, const ForwardModel& model, const Image& y);

// |grad f(x) + lambda * s_sigma_pi(x)| with the exact equivariant score
// of the prior. Throws unless cfg.denoiser is an oracle kind. sigma
// defaults to the schedule's initial value.
double grad_norm_oracle(const GmmPrior& prior, const EredRunConfig& cfg,
                        const ForwardModel& model, const Image& y, const Image& x,
                        std::optional<double> sigma = std::nullopt);

// CSV columns: k,f,grad_norm,direction_norm,xi_mean_norm,xi_second_moment,sigma_k,delta_k
void write_trace_csv(const RunTrace& trace, const std::string& path);
std::string trace_csv_string(const RunTrace& trace);

}  // namespace ered
