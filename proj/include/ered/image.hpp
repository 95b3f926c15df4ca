#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace ered {

// Dense row-major real tensor of shape H x W x C with C in {1,3}.
// Stores 64-bit floats regardless of the file bit depth: the convergence
// diagnostics downstream need resolution far below 8-bit quantization.
// Pixel (r, c, ch) lives at offset (r*width + c)*channels + ch.
//
// Instances are treated as immutable once shared across workers; all
// public operations on images are pure.
class Image {
public:
    Image() = default;
    Image(int height, int width, int channels, double fill = 0.0);
    Image(int height, int width, int channels, std::vector<double> data);

    int height() const { return height_; }
    int width() const { return width_; }
    int channels() const { return channels_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(int r, int c, int ch = 0) {
        return data_[static_cast<std::size_t>((r * width_ + c) * channels_ + ch)];
    }
    double operator()(int r, int c, int ch = 0) const {
        return data_[static_cast<std::size_t>((r * width_ + c) * channels_ + ch)];
    }
    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    std::span<double> data() { return data_; }
    std::span<const double> data() const { return data_; }

    bool same_shape(const Image& other) const {
        return height_ == other.height_ && width_ == other.width_ &&
               channels_ == other.channels_;
    }
    std::string shape_string() const;

    bool all_finite() const;

    // elementwise arithmetic; shapes must match
    Image& operator+=(const Image& other);
    Image& operator-=(const Image& other);
    Image& operator*=(double s);
    // this += s * other
    Image& axpy(double s, const Image& other);
    Image& clamp_min(double floor);

    friend Image operator+(Image a, const Image& b) { return a += b; }
    friend Image operator-(Image a, const Image& b) { return a -= b; }
    friend Image operator*(Image a, double s) { return a *= s; }
    friend Image operator*(double s, Image a) { return a *= s; }

private:
    int height_ = 0;
    int width_ = 0;
    int channels_ = 0;
    std::vector<double> data_;
};

double dot(const Image& a, const Image& b);
double norm2(const Image& a);       // euclidean norm
double norm_inf(const Image& a);
double mse(const Image& a, const Image& b);

struct Metrics {
    double psnr = 0.0;
    double ssim = 0.0;
    double mse = 0.0;
};

// PSNR is capped at 99 dB when the MSE vanishes so that serialized
// metrics stay finite.
inline constexpr double kPsnrCap = 99.0;

double psnr(const Image& x, const Image& ref, double peak = 1.0);

// SSIM with the 11x11 Gaussian window (sigma 1.5), k1=0.01, k2=0.03 and
// dynamic range 1.0, averaged over channels. Throws if the image is
// smaller than the window.
double ssim(const Image& x, const Image& ref);

Metrics compute_metrics(const Image& x, const Image& ref, double peak = 1.0);

}  // namespace ered
