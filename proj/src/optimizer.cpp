#include "ered/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace ered {

double StepSchedule::at(long k) const {
    switch (kind) {
        case StepKind::constant: return delta0;
        case StepKind::polynomial: return delta0 / std::pow(static_cast<double>(k + 1), alpha);
    }
    throw std::logic_error("StepSchedule::at: unknown kind");
}

bool StepSchedule::diminishing_valid() const {
    return kind == StepKind::polynomial && alpha > 0.5 && alpha <= 1.0;
}

void StepSchedule::validate() const {
    if (!(delta0 > 0.0)) throw std::invalid_argument("step schedule: delta0 must be > 0");
}

double SigmaSchedule::at(long k, long total_iterations) const {
    validate();
    if (kind == SigmaKind::constant) return sigma0;
    const double span = anneal_fraction * static_cast<double>(total_iterations);
    double t = span <= 0.0 ? 1.0 : static_cast<double>(k) / span;
    t = std::min(1.0, std::max(0.0, t));
    return std::exp((1.0 - t) * std::log(sigma0) + t * std::log(sigma_final));
}

void SigmaSchedule::validate() const {
    if (!(sigma0 > 0.0)) throw std::invalid_argument("sigma schedule: sigma0 must be > 0");
    if (kind == SigmaKind::annealed) {
        if (!(sigma_final > 0.0))
            throw std::invalid_argument("sigma schedule: sigma_final must be > 0");
        if (sigma_final > sigma0)
            throw std::invalid_argument("sigma schedule: sigma_final must be <= sigma0");
        if (anneal_fraction < 0.0 || anneal_fraction > 1.0)
            throw std::invalid_argument("sigma schedule: anneal_fraction must be in [0, 1]");
    }
}

void EredRunConfig::validate() const {
    if (lambda < 0.0) throw std::invalid_argument("run config: lambda must be >= 0");
    step.validate();
    sigma.validate();
    if (iterations < 1) throw std::invalid_argument("run config: iterations must be >= 1");
    transform.validate();
    denoiser.validate();
    if (trace_stride < 1) throw std::invalid_argument("run config: trace stride must be >= 1");
    if (x0_policy == InitPolicy::explicit_image && x0_explicit.size() == 0)
        throw std::invalid_argument("run config: explicit x0 policy without an image");
}

namespace {

Image initial_iterate(const EredRunConfig& cfg, const ForwardModel& model, const Image& y) {
    InitPolicy policy = cfg.x0_policy;
    if (policy == InitPolicy::auto_default) {
        policy = (model.kind == ForwardKind::deblur ||
                  model.kind == ForwardKind::super_resolution)
                     ? InitPolicy::adjoint
                     : InitPolicy::observation;
    }
    switch (policy) {
        case InitPolicy::observation:
            if (model.kind == ForwardKind::super_resolution)
                throw std::invalid_argument(
                    "x0 policy 'observation' is shape-incompatible with super_resolution");
            return y;
        case InitPolicy::adjoint:
            if (!model.gaussian()) return y;
            return apply_operator_adjoint(model, y);
        case InitPolicy::constant: {
            const ImageShape s = model.kind == ForwardKind::super_resolution
                                     ? ImageShape{y.height() * model.sr_factor,
                                                  y.width() * model.sr_factor, y.channels()}
                                     : ImageShape::of(y);
            return Image(s.height, s.width, s.channels, cfg.x0_constant);
        }
        case InitPolicy::explicit_image:
            return cfg.x0_explicit;
        case InitPolicy::auto_default:
            break;
    }
    throw std::logic_error("initial_iterate: unreachable");
}

// Exact per-iteration diagnostics are only affordable when the group
// mean is available in closed form.
bool diagnostics_feasible(const TransformSpec& transform, std::size_t dim) {
    if (enumerable(transform)) return true;
    return transform.kind == TransformKind::gaussian_noising && dim <= 4;
}

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

RunTrace ered_run(const EredRunConfig& cfg, const ForwardModel& model, const Image& y) {
    cfg.validate();
    model.validate();
    if (model.kind == ForwardKind::despeckle && !cfg.positivity_floor && !cfg.lambda_only)
        throw std::invalid_argument("despeckle runs require the positivity floor flag");

    const auto t_start = std::chrono::steady_clock::now();

    Rng rng(cfg.seed);
    Denoiser denoiser(cfg.denoiser);
    const GmmPrior* oracle = denoiser.oracle_prior();

    Image x = initial_iterate(cfg, model, y);
    if (cfg.positivity_floor) x.clamp_min(std::nextafter(kPositivityFloor, 1.0));

    RunTrace trace;
    trace.diminishing_steps = cfg.step.diminishing_valid();
    trace.oracle_diagnostics = oracle != nullptr && diagnostics_feasible(cfg.transform, x.size());
    trace.rows.reserve(static_cast<std::size_t>(cfg.iterations / cfg.trace_stride + 2));

    // running noise statistics
    Image xi_mean(x.height(), x.width(), x.channels(), 0.0);
    double xi_sq_running = 0.0;
    long xi_count = 0;

    auto oracle_gradient = [&](const Image& at, double sigma_k) -> Image {
        Image g = oracle_equivariant_score(*oracle, cfg.transform, sigma_k, at).value;
        g *= cfg.lambda;
        if (!cfg.lambda_only) g += fidelity_grad(model, at, y);
        return g;
    };
    auto oracle_objective = [&](const Image& at, double sigma_k) -> double {
        const double r = oracle_equivariant_regularizer(*oracle, cfg.transform, sigma_k, at).value;
        const double f = cfg.lambda_only ? 0.0 : fidelity_eval(model, at, y);
        return f + cfg.lambda * r;
    };

    for (long k = 0; k < cfg.iterations; ++k) {
        const double sigma_k = cfg.sigma.at(k, cfg.iterations);
        const double delta_k = cfg.step.at(k);

        Image grad_f = cfg.lambda_only
                           ? Image(x.height(), x.width(), x.channels(), 0.0)
                           : fidelity_grad(model, x, y);

        Image direction(x.height(), x.width(), x.channels(), 0.0);
        std::string transform_id = "none";
        if (cfg.lambda > 0.0) {
            EquivariantConfig ecfg;
            ecfg.transform = cfg.transform;
            ecfg.sigma = sigma_k;
            ecfg.lambda = cfg.lambda;
            SampledDirection sampled = single_sample_direction(denoiser, ecfg, x, rng);
            direction = std::move(sampled.direction);
            transform_id = sampled.instance.describe();
        }

        double grad_norm = kNaN, objective = kNaN, xi_sq = kNaN;
        if (trace.oracle_diagnostics) {
            const Image exact_grad = oracle_gradient(x, sigma_k);
            grad_norm = norm2(exact_grad);
            Image xi = grad_f + direction;
            xi -= exact_grad;
            xi_sq = dot(xi, xi);
            ++xi_count;
            xi_mean.axpy(1.0, xi);  // normalized on read-out
            xi_sq_running += (xi_sq - xi_sq_running) / static_cast<double>(xi_count);
        }

        const bool log_now = (k % cfg.trace_stride == 0);
        if (log_now) {
            TraceRow row;
            row.k = k;
            row.fidelity = cfg.lambda_only ? 0.0 : fidelity_eval(model, x, y);
            row.grad_norm = grad_norm;
            row.objective = trace.oracle_diagnostics ? oracle_objective(x, sigma_k) : kNaN;
            row.direction_norm = norm2(grad_f + direction);
            row.xi_mean_norm =
                xi_count > 0 ? norm2(xi_mean) / static_cast<double>(xi_count) : kNaN;
            row.xi_second_moment = xi_count > 0 ? xi_sq_running : kNaN;
            row.xi_sq = xi_sq;
            row.sigma_k = sigma_k;
            row.delta_k = delta_k;
            row.transform_id = transform_id;
            if (cfg.keep_snapshots) row.snapshot = std::make_shared<Image>(x);
            trace.rows.push_back(std::move(row));
        }

        x.axpy(-delta_k, grad_f);
        x.axpy(-delta_k, direction);
        if (cfg.positivity_floor) x.clamp_min(std::nextafter(kPositivityFloor, 1.0));

        trace.max_iterate_norm = std::max(trace.max_iterate_norm, norm2(x));
        if (!x.all_finite()) {
            trace.status = RunStatus::diverged;
            trace.abort_iteration = k;
            std::ostringstream msg;
            msg << "non-finite iterate at k=" << k << " (delta_k=" << delta_k
                << ", |grad f|=" << norm2(grad_f) << ", |direction|=" << norm2(direction)
                << ")";
            trace.abort_message = msg.str();
            trace.final_image = std::move(x);
            trace.wall_time_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
                    .count();
            return trace;
        }
    }

    // terminal row records the state after the last update
    {
        const double sigma_k = cfg.sigma.at(cfg.iterations, cfg.iterations);
        TraceRow row;
        row.k = cfg.iterations;
        row.fidelity = cfg.lambda_only ? 0.0 : fidelity_eval(model, x, y);
        row.grad_norm = trace.oracle_diagnostics ? norm2(oracle_gradient(x, sigma_k)) : kNaN;
        row.objective = trace.oracle_diagnostics ? oracle_objective(x, sigma_k) : kNaN;
        row.direction_norm = 0.0;
        row.xi_mean_norm = xi_count > 0 ? norm2(xi_mean) / static_cast<double>(xi_count) : kNaN;
        row.xi_second_moment = xi_count > 0 ? xi_sq_running : kNaN;
        row.xi_sq = kNaN;
        row.sigma_k = sigma_k;
        row.delta_k = 0.0;
        row.transform_id = "terminal";
        if (cfg.keep_snapshots) row.snapshot = std::make_shared<Image>(x);
        trace.rows.push_back(std::move(row));
    }

    trace.final_image = std::move(x);
    trace.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return trace;
}

RunTrace red_run(const EredRunConfig& cfg, const ForwardModel& model, const Image& y) {
    EredRunConfig red = cfg;
    red.transform = TransformSpec::make(TransformKind::identity);
    return ered_run(red, model, y);
}

double grad_norm_oracle(const GmmPrior& prior, const EredRunConfig& cfg,
                        const ForwardModel& model, const Image& y, const Image& x,
                        std::optional<double> sigma) {
    if (cfg.denoiser.kind != DenoiserKind::gmm_oracle &&
        cfg.denoiser.kind != DenoiserKind::perturbed_oracle)
        throw std::invalid_argument(
            "grad_norm_oracle: requires an oracle denoiser (gmm_oracle or perturbed_oracle)");
    const double s = sigma.value_or(cfg.sigma.sigma0);
    Image g = oracle_equivariant_score(prior, cfg.transform, s, x).value;
    g *= cfg.lambda;
    if (!cfg.lambda_only) g += fidelity_grad(model, x, y);
    return norm2(g);
}

std::string trace_csv_string(const RunTrace& trace) {
    std::ostringstream out;
    out << "k,f,grad_norm,direction_norm,xi_mean_norm,xi_second_moment,sigma_k,delta_k\n";
    char buf[512];
    for (const auto& row : trace.rows) {
        std::snprintf(buf, sizeof(buf),
                      "%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", row.k,
                      row.fidelity, row.grad_norm, row.direction_norm, row.xi_mean_norm,
                      row.xi_second_moment, row.sigma_k, row.delta_k);
        out << buf;
    }
    return out.str();
}

void write_trace_csv(const RunTrace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << trace_csv_string(trace);
    if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace ered
