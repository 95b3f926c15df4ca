#pragma once

#include <string>

#include "ered/image.hpp"
#include "ered/rng.hpp"
#include "ered/transform.hpp"

namespace ered {

enum class ForwardKind { denoise, deblur, super_resolution, despeckle };

std::string to_string(ForwardKind kind);
ForwardKind forward_kind_from_string(const std::string& name);

// Degradation model y ~ noise(A x). All convolutions are circular
// (periodic boundary), which makes A diagonal in Fourier space and the
// adjoint exact.
//   denoise           A = I, additive Gaussian noise
//   deblur            circular convolution with the kernel, Gaussian noise
//   super_resolution  blur then decimate by sr_factor, Gaussian noise
//   despeckle         y_i = x_i * s_i with s_i ~ Gamma(looks, 1/looks)
struct ForwardModel {
    ForwardKind kind = ForwardKind::denoise;
    Image kernel;        // deblur / super_resolution; must sum to 1
    int sr_factor = 1;   // >= 1, must divide the image dimensions
    double sigma_y = 0.0;
    int looks = 1;       // despeckle number of looks

    void validate() const;
    bool gaussian() const { return kind != ForwardKind::despeckle; }
};

// Lower bound applied to despeckle iterates/evaluations; the Gamma
// likelihood has a log singularity at zero.
inline constexpr double kPositivityFloor = 1e-6;

Image degrade(const ForwardModel& model, const Image& x, Rng& rng);

// A x and A^T r for the Gaussian kinds (throws for despeckle, which has
// no linear operator).
Image apply_operator(const ForwardModel& model, const Image& x);
Image apply_operator_adjoint(const ForwardModel& model, const Image& r);

// f(x): Gaussian kinds (1/(2 sigma_y^2)) |A x - y|^2, despeckle
// looks * sum_i (log x_i + y_i / x_i).
double fidelity_eval(const ForwardModel& model, const Image& x, const Image& y);
Image fidelity_grad(const ForwardModel& model, const Image& x, const Image& y);

ImageShape observation_shape(const ForwardModel& model, const ImageShape& x_shape);

// Plain-text kernel file: first line "h w", then h rows of w reals.
// Kernels off unit sum by more than 1e-6 are renormalized;
// *renormalized reports that a correction happened.
Image load_kernel(const std::string& path, bool* renormalized = nullptr);

// Circular convolution/correlation, FFT path (production) and direct
// spatial path (kept as the independent reference for operator checks).
Image convolve_circular_fft(const Image& x, const Image& kernel);
Image correlate_circular_fft(const Image& x, const Image& kernel);
Image convolve_circular_direct(const Image& x, const Image& kernel);
Image correlate_circular_direct(const Image& x, const Image& kernel);

// Largest singular value of A by power iteration on A^T A.
double operator_norm_estimate(const ForwardModel& model, const ImageShape& x_shape,
                              int iterations, Rng& rng);

}  // namespace ered
