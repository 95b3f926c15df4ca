#pragma once

#include <memory>
#include <string>
#include <vector>

#include "ered/image.hpp"
#include "ered/rng.hpp"

namespace ered {

enum class TransformKind {
    identity,
    rot90,
    flip,
    circular_translation,
    subpixel_rotation,
    gaussian_noising,
    mixture,
};

std::string to_string(TransformKind kind);
TransformKind transform_kind_from_string(const std::string& name);

// A transformation family with its sampling distribution:
//   identity              the trivial group
//   rot90                 quarter-turn rotations, uniform over {0,1,2,3}
//   flip                  axis flips {id, horizontal, vertical, both}, uniform
//   circular_translation  periodic integer shifts, uniform on [-max_shift, max_shift]^2
//   subpixel_rotation     rotation by a uniform angle on [-pi, pi], bilinear
//                         interpolation about the image center, periodic padding
//   gaussian_noising      x + sigma*z with z ~ N(0, I); sigma follows the
//                         denoiser noise level unless noise_scale >= 0
//   mixture               two-stage draw over component specs
struct TransformSpec {
    TransformKind kind = TransformKind::identity;
    int max_shift = 8;
    double noise_scale = -1.0;  // gaussian_noising; negative = tied to denoiser sigma
    std::vector<TransformSpec> components;
    std::vector<double> weights;

    void validate() const;  // throws std::invalid_argument

    static TransformSpec make(TransformKind kind);
    static TransformSpec make_mixture(std::vector<TransformSpec> components,
                                      std::vector<double> weights);
};

struct ImageShape {
    int height = 0;
    int width = 0;
    int channels = 1;

    static ImageShape of(const Image& img) {
        return {img.height(), img.width(), img.channels()};
    }
};

// One realized group element. apply() is deterministic given the
// realized parameters; instances are immutable after sampling.
struct TransformInstance {
    TransformKind kind = TransformKind::identity;
    int rot_quarters = 0;              // rot90
    bool flip_horizontal = false;      // flip
    bool flip_vertical = false;
    int shift_rows = 0;                // circular_translation
    int shift_cols = 0;
    double angle = 0.0;                // subpixel_rotation
    std::shared_ptr<const Image> noise;  // gaussian_noising: realized sigma*z

    std::string describe() const;
};

// Draws one instance from the spec's sampling law. The target shape is
// needed up front so noise draws are realized at sampling time;
// noising_sigma supplies the denoiser noise level when the spec ties
// its scale to it.
TransformInstance sample(const TransformSpec& spec, const ImageShape& shape, Rng& rng,
                         double noising_sigma = 0.0);

// G(x). Rotation kinds require square images.
Image apply(const TransformInstance& t, const Image& x);

// v -> J_G^T(x) * v. All kinds here are linear or affine in x, so the
// Jacobian does not depend on x:
//   rot90/flip/circular_translation: inverse permutation (exact adjoint)
//   gaussian_noising: identity
//   subpixel_rotation: adjoint of the bilinear interpolation operator
//   (weight scatter), which is not the inverse rotation.
Image jtvp(const TransformInstance& t, const Image& x, const Image& v);

// True for kinds whose group is finite and can be averaged exactly.
bool enumerable(const TransformSpec& spec);

struct WeightedInstance {
    TransformInstance instance;
    double weight = 0.0;
};

// The full finite group with its Haar (uniform) weights; mixtures of
// enumerable components concatenate with scaled weights.
std::vector<WeightedInstance> enumerate_group(const TransformSpec& spec);

// Monte-Carlo (or enumerated) average of J_G^T(x) G(x).
Image mean_jtg(const TransformSpec& spec, const Image& x, int n_mc, Rng& rng,
               bool enumerate_finite = true, double noising_sigma = 0.0);

bool is_linear_isometry(TransformKind kind);

}  // namespace ered
