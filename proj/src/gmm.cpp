#include "ered/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ered {

namespace {

void require_dim(const GmmPrior& prior, std::span<const double> x) {
    if (static_cast<int>(x.size()) != prior.dim())
        throw std::invalid_argument("gmm: point dimension " + std::to_string(x.size()) +
                                    " does not match prior dimension " +
                                    std::to_string(prior.dim()));
}

// per-component log w_j + log N(x; mu_j, (tau_j^2 + sigma^2) I)
std::vector<double> component_log_terms(const GmmPrior& prior, double sigma,
                                        std::span<const double> x) {
    const int d = prior.dim();
    std::vector<double> terms(prior.components.size());
    for (std::size_t j = 0; j < prior.components.size(); ++j) {
        const auto& comp = prior.components[j];
        const double var = comp.tau * comp.tau + sigma * sigma;
        double quad = 0.0;
        for (int i = 0; i < d; ++i) {
            const double delta = x[i] - comp.mean[i];
            quad += delta * delta;
        }
        terms[j] = std::log(comp.weight) -
                   0.5 * d * std::log(2.0 * std::numbers::pi * var) -
                   0.5 * quad / var;
    }
    return terms;
}

double log_sum_exp(const std::vector<double>& terms) {
    const double m = *std::max_element(terms.begin(), terms.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double t : terms) s += std::exp(t - m);
    return m + std::log(s);
}

}  // namespace

void GmmPrior::validate() const {
    if (components.empty()) throw std::invalid_argument("gmm: no components");
    const std::size_t d = components[0].mean.size();
    if (d == 0) throw std::invalid_argument("gmm: zero-dimensional mean");
    double sum = 0.0;
    for (const auto& c : components) {
        if (c.mean.size() != d) throw std::invalid_argument("gmm: inconsistent mean dimensions");
        if (!(c.tau > 0.0)) throw std::invalid_argument("gmm: tau must be positive");
        if (c.weight < 0.0) throw std::invalid_argument("gmm: negative weight");
        for (double m : c.mean)
            if (!std::isfinite(m)) throw std::invalid_argument("gmm: non-finite mean");
        sum += c.weight;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("gmm: weights sum to " + std::to_string(sum));
}

double gmm_log_density(const GmmPrior& prior, double sigma, std::span<const double> x) {
    require_dim(prior, x);
    return log_sum_exp(component_log_terms(prior, sigma, x));
}

std::vector<double> gmm_responsibilities(const GmmPrior& prior, double sigma,
                                         std::span<const double> x) {
    require_dim(prior, x);
    const auto terms = component_log_terms(prior, sigma, x);
    const double lse = log_sum_exp(terms);
    std::vector<double> gamma(terms.size());
    for (std::size_t j = 0; j < terms.size(); ++j) gamma[j] = std::exp(terms[j] - lse);
    return gamma;
}

std::vector<double> gmm_score(const GmmPrior& prior, double sigma,
                              std::span<const double> x) {
    const auto gamma = gmm_responsibilities(prior, sigma, x);
    const int d = prior.dim();
    std::vector<double> g(d, 0.0);
    for (std::size_t j = 0; j < prior.components.size(); ++j) {
        const auto& comp = prior.components[j];
        const double inv_var = 1.0 / (comp.tau * comp.tau + sigma * sigma);
        for (int i = 0; i < d; ++i) g[i] += gamma[j] * (comp.mean[i] - x[i]) * inv_var;
    }
    return g;
}

std::vector<double> gmm_mmse_denoise(const GmmPrior& prior, double sigma,
                                     std::span<const double> x) {
    if (!(sigma > 0.0))
        throw std::invalid_argument("gmm_mmse_denoise: sigma must be strictly positive");
    const auto gamma = gmm_responsibilities(prior, sigma, x);
    const int d = prior.dim();
    const double s2 = sigma * sigma;
    std::vector<double> out(d, 0.0);
    for (std::size_t j = 0; j < prior.components.size(); ++j) {
        const auto& comp = prior.components[j];
        const double t2 = comp.tau * comp.tau;
        const double inv = 1.0 / (t2 + s2);
        for (int i = 0; i < d; ++i)
            out[i] += gamma[j] * (t2 * x[i] + s2 * comp.mean[i]) * inv;
    }
    return out;
}

double gmm_log_density(const GmmPrior& prior, double sigma, const Image& x) {
    return gmm_log_density(prior, sigma, x.data());
}

Image gmm_score_image(const GmmPrior& prior, double sigma, const Image& x) {
    return Image(x.height(), x.width(), x.channels(), gmm_score(prior, sigma, x.data()));
}

Image gmm_mmse_denoise_image(const GmmPrior& prior, double sigma, const Image& x) {
    return Image(x.height(), x.width(), x.channels(),
                 gmm_mmse_denoise(prior, sigma, x.data()));
}

GmmPrior make_random_gmm(int dim, int max_components, Rng& rng, double mean_range) {
    if (dim < 1 || max_components < 1)
        throw std::invalid_argument("make_random_gmm: bad arguments");
    const int n = static_cast<int>(rng.uniform_int(1, max_components));
    GmmPrior prior;
    double wsum = 0.0;
    for (int j = 0; j < n; ++j) {
        GmmComponent c;
        c.weight = rng.uniform(0.1, 1.0);
        wsum += c.weight;
        c.tau = rng.uniform(0.3, 1.5);
        c.mean.resize(dim);
        for (double& m : c.mean) m = rng.uniform(-mean_range, mean_range);
        prior.components.push_back(std::move(c));
    }
    for (auto& c : prior.components) c.weight /= wsum;
    // renormalize exactly so validate()'s 1e-12 budget is met
    double check = 0.0;
    for (auto& c : prior.components) check += c.weight;
    prior.components.back().weight += 1.0 - check;
    prior.validate();
    return prior;
}

GmmPrior symmetrize_gmm(const GmmPrior& prior, const TransformSpec& group,
                        const ImageShape& shape) {
    prior.validate();
    const auto elements = enumerate_group(group);
    if (static_cast<std::size_t>(shape.height) * shape.width * shape.channels !=
        static_cast<std::size_t>(prior.dim()))
        throw std::invalid_argument("symmetrize_gmm: shape does not match prior dimension");

    GmmPrior out;
    for (const auto& comp : prior.components) {
        Image mean_img(shape.height, shape.width, shape.channels,
                       std::vector<double>(comp.mean.begin(), comp.mean.end()));
        for (const auto& wi : elements) {
            const Image moved = apply(wi.instance, mean_img);
            GmmComponent c;
            c.weight = comp.weight * wi.weight;
            c.tau = comp.tau;
            c.mean.assign(moved.data().begin(), moved.data().end());
            // merge exact duplicates (group elements often fix a mean)
            bool merged = false;
            for (auto& existing : out.components) {
                if (existing.tau == c.tau && existing.mean == c.mean) {
                    existing.weight += c.weight;
                    merged = true;
                    break;
                }
            }
            if (!merged) out.components.push_back(std::move(c));
        }
    }
    out.validate();
    return out;
}

}  // namespace ered
