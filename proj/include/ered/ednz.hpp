#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ered/image.hpp"

namespace ered {

// EDNZ wire frame, little-endian:
//   magic "EDNZ" (4 bytes), version u32 = 1,
//   H u32, W u32, C u32, sigma f32,
//   payload H*W*C f32, row-major.
// Requests and responses use the same framing; one request per frame,
// frames are pipelined sequentially on the child's standard streams.
struct EdnzFrame {
    std::uint32_t height = 0;
    std::uint32_t width = 0;
    std::uint32_t channels = 0;
    float sigma = 0.0f;
    std::vector<float> payload;

    static EdnzFrame from_image(const Image& img, double sigma);
    Image to_image() const;
};

inline constexpr std::uint32_t kEdnzVersion = 1;
inline constexpr std::size_t kEdnzHeaderBytes = 24;

std::vector<std::uint8_t> ednz_serialize(const EdnzFrame& frame);

// Parses a complete frame from a byte buffer. Throws std::runtime_error
// with a diagnostic (offending field, expected vs got) on any violation.
EdnzFrame ednz_parse(const std::uint8_t* data, std::size_t size);
EdnzFrame ednz_parse(const std::vector<std::uint8_t>& buf);

// Header-only parse, used to learn the payload length before the full
// frame has arrived.
struct EdnzHeader {
    std::uint32_t height, width, channels;
    float sigma;
    std::size_t payload_bytes() const {
        return static_cast<std::size_t>(height) * width * channels * 4;
    }
};
EdnzHeader ednz_parse_header(const std::uint8_t* data, std::size_t size);

// Child-process denoiser speaking the EDNZ protocol over stdin/stdout.
// Each instance owns one child; a worker must not share its client with
// other threads. The child is spawned lazily on first use and torn down
// (stdin closed, then killed if unresponsive) on destruction.
class ExternalDenoiserClient {
public:
    explicit ExternalDenoiserClient(std::string command, double timeout_seconds = 60.0);
    ~ExternalDenoiserClient();

    ExternalDenoiserClient(const ExternalDenoiserClient&) = delete;
    ExternalDenoiserClient& operator=(const ExternalDenoiserClient&) = delete;

    // Sends one request frame and blocks for the response. Throws on
    // protocol violation, timeout, shape mismatch or non-finite values.
    Image denoise(const Image& x, double sigma);

    bool running() const { return pid_ > 0; }

private:
    void spawn();
    void shutdown();
    void write_all(const std::uint8_t* data, std::size_t size);
    void read_exact(std::uint8_t* out, std::size_t size);

    std::string command_;
    double timeout_seconds_;
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
};

}  // namespace ered
