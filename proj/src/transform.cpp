#include "ered/transform.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace ered {

std::string to_string(TransformKind kind) {
    switch (kind) {
        case TransformKind::identity: return "identity";
        case TransformKind::rot90: return "rot90";
        case TransformKind::flip: return "flip";
        case TransformKind::circular_translation: return "circular_translation";
        case TransformKind::subpixel_rotation: return "subpixel_rotation";
        case TransformKind::gaussian_noising: return "gaussian_noising";
        case TransformKind::mixture: return "mixture";
    }
    return "unknown";
}

TransformKind transform_kind_from_string(const std::string& name) {
    if (name == "identity") return TransformKind::identity;
    if (name == "rot90" || name == "rotation") return TransformKind::rot90;
    if (name == "flip") return TransformKind::flip;
    if (name == "circular_translation" || name == "translation")
        return TransformKind::circular_translation;
    if (name == "subpixel_rotation") return TransformKind::subpixel_rotation;
    if (name == "gaussian_noising" || name == "noising")
        return TransformKind::gaussian_noising;
    if (name == "mixture") return TransformKind::mixture;
    throw std::invalid_argument("unknown transform kind \"" + name + "\"");
}

void TransformSpec::validate() const {
    if (kind == TransformKind::circular_translation && max_shift < 0)
        throw std::invalid_argument("circular_translation: max_shift must be >= 0");
    if (kind == TransformKind::mixture) {
        if (components.empty() || components.size() != weights.size())
            throw std::invalid_argument("mixture: components and weights must match and be nonempty");
        double sum = 0.0;
        for (double w : weights) {
            if (w < 0.0) throw std::invalid_argument("mixture: negative weight");
            sum += w;
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("mixture: weights must sum to 1");
        for (const auto& c : components) {
            if (c.kind == TransformKind::mixture)
                throw std::invalid_argument("mixture: nested mixtures are not supported");
            c.validate();
        }
    }
}

TransformSpec TransformSpec::make(TransformKind kind) {
    TransformSpec s;
    s.kind = kind;
    return s;
}

TransformSpec TransformSpec::make_mixture(std::vector<TransformSpec> components,
                                          std::vector<double> weights) {
    TransformSpec s;
    s.kind = TransformKind::mixture;
    s.components = std::move(components);
    s.weights = std::move(weights);
    s.validate();
    return s;
}

std::string TransformInstance::describe() const {
    std::ostringstream os;
    switch (kind) {
        case TransformKind::identity: os << "identity"; break;
        case TransformKind::rot90: os << "rot90:k=" << rot_quarters; break;
        case TransformKind::flip:
            os << "flip:h=" << flip_horizontal << ",v=" << flip_vertical;
            break;
        case TransformKind::circular_translation:
            os << "shift:dr=" << shift_rows << ",dc=" << shift_cols;
            break;
        case TransformKind::subpixel_rotation: os << "subrot:theta=" << angle; break;
        case TransformKind::gaussian_noising: os << "noising"; break;
        case TransformKind::mixture: os << "mixture"; break;
    }
    return os.str();
}

namespace {

int wrap(int a, int m) {
    const int r = a % m;
    return r < 0 ? r + m : r;
}

void require_square(const Image& x, const char* what) {
    if (x.height() != x.width())
        throw std::invalid_argument(std::string(what) + ": requires a square image, got " +
                                    x.shape_string());
}

Image rotate_quarters(const Image& x, int quarters) {
    const int k = wrap(quarters, 4);
    if (k == 0) return x;
    require_square(x, "rot90");
    const int n = x.height();
    Image out(n, n, x.channels());
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            for (int ch = 0; ch < x.channels(); ++ch) {
                // one quarter turn counter-clockwise: (r,c) <- (c, n-1-r)
                int sr = r, sc = c;
                for (int i = 0; i < k; ++i) {
                    const int nr = sc, nc = n - 1 - sr;
                    sr = nr;
                    sc = nc;
                }
                out(r, c, ch) = x(sr, sc, ch);
            }
    return out;
}

Image flip_image(const Image& x, bool horizontal, bool vertical) {
    if (!horizontal && !vertical) return x;
    Image out(x.height(), x.width(), x.channels());
    for (int r = 0; r < x.height(); ++r)
        for (int c = 0; c < x.width(); ++c)
            for (int ch = 0; ch < x.channels(); ++ch)
                out(r, c, ch) = x(vertical ? x.height() - 1 - r : r,
                                  horizontal ? x.width() - 1 - c : c, ch);
    return out;
}

Image shift_image(const Image& x, int dr, int dc) {
    if (dr == 0 && dc == 0) return x;
    Image out(x.height(), x.width(), x.channels());
    for (int r = 0; r < x.height(); ++r)
        for (int c = 0; c < x.width(); ++c)
            for (int ch = 0; ch < x.channels(); ++ch)
                out(r, c, ch) =
                    x(wrap(r - dr, x.height()), wrap(c - dc, x.width()), ch);
    return out;
}

// Bilinear resampling stencil for a rotation by `angle` about the image
// center with periodic padding. For each output pixel the four source
// indices and weights define one row of the interpolation operator W;
// apply() computes Wx and the adjoint scatters the same weights.
struct BilinearTap {
    int src[4];
    double w[4];
};

std::vector<BilinearTap> rotation_stencil(int n, double angle) {
    std::vector<BilinearTap> taps(static_cast<std::size_t>(n) * n);
    const double cy = (n - 1) / 2.0;
    const double cx = (n - 1) / 2.0;
    const double cs = std::cos(angle), sn = std::sin(angle);
    for (int r = 0; r < n; ++r) {
        for (int c = 0; c < n; ++c) {
            const double u = r - cy, v = c - cx;
            // pull-back: sample the input at the point that maps to (r,c)
            const double su = cs * u + sn * v + cy;
            const double sv = -sn * u + cs * v + cx;
            const int i0 = static_cast<int>(std::floor(su));
            const int j0 = static_cast<int>(std::floor(sv));
            const double fr = su - i0, fc = sv - j0;
            const int i0w = wrap(i0, n), i1w = wrap(i0 + 1, n);
            const int j0w = wrap(j0, n), j1w = wrap(j0 + 1, n);
            BilinearTap& t = taps[static_cast<std::size_t>(r) * n + c];
            t.src[0] = i0w * n + j0w;
            t.src[1] = i0w * n + j1w;
            t.src[2] = i1w * n + j0w;
            t.src[3] = i1w * n + j1w;
            t.w[0] = (1 - fr) * (1 - fc);
            t.w[1] = (1 - fr) * fc;
            t.w[2] = fr * (1 - fc);
            t.w[3] = fr * fc;
        }
    }
    return taps;
}

Image subpixel_rotate(const Image& x, double angle) {
    require_square(x, "subpixel_rotation");
    const int n = x.height();
    const int ch = x.channels();
    const auto taps = rotation_stencil(n, angle);
    Image out(n, n, ch);
    for (std::size_t p = 0; p < taps.size(); ++p) {
        const BilinearTap& t = taps[p];
        for (int k = 0; k < ch; ++k) {
            double acc = 0.0;
            for (int q = 0; q < 4; ++q)
                acc += t.w[q] * x[static_cast<std::size_t>(t.src[q]) * ch + k];
            out[p * ch + k] = acc;
        }
    }
    return out;
}

Image subpixel_rotate_adjoint(const Image& v, double angle) {
    require_square(v, "subpixel_rotation");
    const int n = v.height();
    const int ch = v.channels();
    const auto taps = rotation_stencil(n, angle);
    Image out(n, n, ch, 0.0);
    for (std::size_t p = 0; p < taps.size(); ++p) {
        const BilinearTap& t = taps[p];
        for (int k = 0; k < ch; ++k) {
            const double val = v[p * ch + k];
            for (int q = 0; q < 4; ++q)
                out[static_cast<std::size_t>(t.src[q]) * ch + k] += t.w[q] * val;
        }
    }
    return out;
}

TransformInstance sample_component(const TransformSpec& spec, const ImageShape& shape,
                                   Rng& rng, double noising_sigma) {
    TransformInstance t;
    t.kind = spec.kind;
    switch (spec.kind) {
        case TransformKind::identity:
            break;
        case TransformKind::rot90:
            t.rot_quarters = static_cast<int>(rng.uniform_int(0, 3));
            break;
        case TransformKind::flip: {
            const long m = rng.uniform_int(0, 3);
            t.flip_horizontal = (m & 1) != 0;
            t.flip_vertical = (m & 2) != 0;
            break;
        }
        case TransformKind::circular_translation:
            t.shift_rows = static_cast<int>(rng.uniform_int(-spec.max_shift, spec.max_shift));
            t.shift_cols = static_cast<int>(rng.uniform_int(-spec.max_shift, spec.max_shift));
            break;
        case TransformKind::subpixel_rotation:
            t.angle = rng.uniform(-std::numbers::pi, std::numbers::pi);
            break;
        case TransformKind::gaussian_noising: {
            const double sigma = spec.noise_scale >= 0.0 ? spec.noise_scale : noising_sigma;
            if (sigma < 0.0)
                throw std::invalid_argument("gaussian_noising: no noise scale available");
            Image z(shape.height, shape.width, shape.channels);
            for (double& v : z.data()) v = sigma * rng.normal();
            t.noise = std::make_shared<Image>(std::move(z));
            break;
        }
        case TransformKind::mixture:
            throw std::logic_error("sample_component called with mixture");
    }
    return t;
}

}  // namespace

TransformInstance sample(const TransformSpec& spec, const ImageShape& shape, Rng& rng,
                         double noising_sigma) {
    spec.validate();
    if (spec.kind != TransformKind::mixture)
        return sample_component(spec, shape, rng, noising_sigma);
    // two-stage draw: component by weight, then within the component
    const double u = rng.uniform(0.0, 1.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < spec.components.size(); ++i) {
        acc += spec.weights[i];
        if (u <= acc || i + 1 == spec.components.size())
            return sample_component(spec.components[i], shape, rng, noising_sigma);
    }
    return sample_component(spec.components.back(), shape, rng, noising_sigma);
}

Image apply(const TransformInstance& t, const Image& x) {
    switch (t.kind) {
        case TransformKind::identity:
            return x;
        case TransformKind::rot90:
            return rotate_quarters(x, t.rot_quarters);
        case TransformKind::flip:
            return flip_image(x, t.flip_horizontal, t.flip_vertical);
        case TransformKind::circular_translation:
            return shift_image(x, t.shift_rows, t.shift_cols);
        case TransformKind::subpixel_rotation:
            return subpixel_rotate(x, t.angle);
        case TransformKind::gaussian_noising: {
            if (!t.noise || !t.noise->same_shape(x))
                throw std::invalid_argument("gaussian_noising: instance realized for shape " +
                                            (t.noise ? t.noise->shape_string() : "<none>") +
                                            ", applied to " + x.shape_string());
            Image out = x;
            out += *t.noise;
            return out;
        }
        case TransformKind::mixture:
            throw std::logic_error("apply: unresolved mixture instance");
    }
    throw std::logic_error("apply: unknown kind");
}

Image jtvp(const TransformInstance& t, const Image& x, const Image& v) {
    if (!x.same_shape(v))
        throw std::invalid_argument("jtvp: shape mismatch " + x.shape_string() + " vs " +
                                    v.shape_string());
    switch (t.kind) {
        case TransformKind::identity:
            return v;
        case TransformKind::rot90:
            return rotate_quarters(v, -t.rot_quarters);
        case TransformKind::flip:
            // the flip permutations are involutions
            return flip_image(v, t.flip_horizontal, t.flip_vertical);
        case TransformKind::circular_translation:
            return shift_image(v, -t.shift_rows, -t.shift_cols);
        case TransformKind::subpixel_rotation:
            return subpixel_rotate_adjoint(v, t.angle);
        case TransformKind::gaussian_noising:
            return v;
        case TransformKind::mixture:
            throw std::logic_error("jtvp: unresolved mixture instance");
    }
    throw std::logic_error("jtvp: unknown kind");
}

bool enumerable(const TransformSpec& spec) {
    switch (spec.kind) {
        case TransformKind::identity:
        case TransformKind::rot90:
        case TransformKind::flip:
            return true;
        case TransformKind::mixture:
            for (const auto& c : spec.components)
                if (!enumerable(c)) return false;
            return true;
        default:
            return false;
    }
}

std::vector<WeightedInstance> enumerate_group(const TransformSpec& spec) {
    spec.validate();
    if (!enumerable(spec))
        throw std::invalid_argument("enumerate_group: " + to_string(spec.kind) +
                                    " is not a finite group");
    std::vector<WeightedInstance> out;
    switch (spec.kind) {
        case TransformKind::identity: {
            out.push_back({TransformInstance{}, 1.0});
            break;
        }
        case TransformKind::rot90: {
            for (int k = 0; k < 4; ++k) {
                TransformInstance t;
                t.kind = TransformKind::rot90;
                t.rot_quarters = k;
                out.push_back({t, 0.25});
            }
            break;
        }
        case TransformKind::flip: {
            for (int m = 0; m < 4; ++m) {
                TransformInstance t;
                t.kind = TransformKind::flip;
                t.flip_horizontal = (m & 1) != 0;
                t.flip_vertical = (m & 2) != 0;
                out.push_back({t, 0.25});
            }
            break;
        }
        case TransformKind::mixture: {
            for (std::size_t i = 0; i < spec.components.size(); ++i) {
                for (auto& wi : enumerate_group(spec.components[i]))
                    out.push_back({wi.instance, wi.weight * spec.weights[i]});
            }
            break;
        }
        default:
            break;
    }
    return out;
}

Image mean_jtg(const TransformSpec& spec, const Image& x, int n_mc, Rng& rng,
               bool enumerate_finite, double noising_sigma) {
    if (n_mc < 1) throw std::invalid_argument("mean_jtg: n_mc must be >= 1");
    Image acc(x.height(), x.width(), x.channels(), 0.0);
    if (enumerate_finite && enumerable(spec)) {
        for (const auto& wi : enumerate_group(spec))
            acc.axpy(wi.weight, jtvp(wi.instance, x, apply(wi.instance, x)));
        return acc;
    }
    const ImageShape shape = ImageShape::of(x);
    for (int i = 0; i < n_mc; ++i) {
        const TransformInstance t = sample(spec, shape, rng, noising_sigma);
        acc.axpy(1.0 / n_mc, jtvp(t, x, apply(t, x)));
    }
    return acc;
}

bool is_linear_isometry(TransformKind kind) {
    return kind == TransformKind::identity || kind == TransformKind::rot90 ||
           kind == TransformKind::flip || kind == TransformKind::circular_translation;
}

}  // namespace ered
