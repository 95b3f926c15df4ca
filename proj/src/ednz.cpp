#include "ered/ednz.hpp"

#include <cerrno>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

namespace ered {

namespace {

const char kMagic[4] = {'E', 'D', 'N', 'Z'};

void put_u32(std::vector<std::uint8_t>& buf, std::uint32_t v) {
    buf.push_back(static_cast<std::uint8_t>(v & 0xff));
    buf.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
    buf.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
    buf.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

std::uint32_t get_u32(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

float get_f32(const std::uint8_t* p) {
    std::uint32_t bits = get_u32(p);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

void put_f32(std::vector<std::uint8_t>& buf, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(buf, bits);
}

[[noreturn]] void frame_error(const std::string& what) {
    throw std::runtime_error("EDNZ frame error: " + what);
}

}  // namespace

EdnzFrame EdnzFrame::from_image(const Image& img, double sigma) {
    EdnzFrame f;
    f.height = static_cast<std::uint32_t>(img.height());
    f.width = static_cast<std::uint32_t>(img.width());
    f.channels = static_cast<std::uint32_t>(img.channels());
    f.sigma = static_cast<float>(sigma);
    f.payload.reserve(img.size());
    for (double v : img.data()) f.payload.push_back(static_cast<float>(v));
    return f;
}

Image EdnzFrame::to_image() const {
    std::vector<double> data(payload.begin(), payload.end());
    return Image(static_cast<int>(height), static_cast<int>(width),
                 static_cast<int>(channels), std::move(data));
}

std::vector<std::uint8_t> ednz_serialize(const EdnzFrame& frame) {
    std::vector<std::uint8_t> buf;
    buf.reserve(kEdnzHeaderBytes + frame.payload.size() * 4);
    buf.insert(buf.end(), kMagic, kMagic + 4);
    put_u32(buf, kEdnzVersion);
    put_u32(buf, frame.height);
    put_u32(buf, frame.width);
    put_u32(buf, frame.channels);
    put_f32(buf, frame.sigma);
    for (float v : frame.payload) put_f32(buf, v);
    return buf;
}

EdnzHeader ednz_parse_header(const std::uint8_t* data, std::size_t size) {
    if (size < kEdnzHeaderBytes) frame_error("truncated header");
    if (std::memcmp(data, kMagic, 4) != 0)
        frame_error("bad magic, expected \"EDNZ\" got \"" +
                    std::string(reinterpret_cast<const char*>(data), 4) + "\"");
    const std::uint32_t version = get_u32(data + 4);
    if (version != kEdnzVersion)
        frame_error("unsupported version " + std::to_string(version));
    EdnzHeader h;
    h.height = get_u32(data + 8);
    h.width = get_u32(data + 12);
    h.channels = get_u32(data + 16);
    h.sigma = get_f32(data + 20);
    if (h.height == 0 || h.width == 0) frame_error("zero image dimension");
    if (h.channels != 1 && h.channels != 3)
        frame_error("channels must be 1 or 3, got " + std::to_string(h.channels));
    return h;
}

EdnzFrame ednz_parse(const std::uint8_t* data, std::size_t size) {
    const EdnzHeader h = ednz_parse_header(data, size);
    const std::size_t need = kEdnzHeaderBytes + h.payload_bytes();
    if (size != need)
        frame_error("payload length mismatch, expected " + std::to_string(need) +
                    " bytes got " + std::to_string(size));
    EdnzFrame f;
    f.height = h.height;
    f.width = h.width;
    f.channels = h.channels;
    f.sigma = h.sigma;
    const std::size_t n = static_cast<std::size_t>(h.height) * h.width * h.channels;
    f.payload.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        f.payload[i] = get_f32(data + kEdnzHeaderBytes + 4 * i);
    return f;
}

EdnzFrame ednz_parse(const std::vector<std::uint8_t>& buf) {
    return ednz_parse(buf.data(), buf.size());
}

ExternalDenoiserClient::ExternalDenoiserClient(std::string command, double timeout_seconds)
    : command_(std::move(command)), timeout_seconds_(timeout_seconds) {
    if (command_.empty())
        throw std::invalid_argument("external denoiser: empty command");
}

ExternalDenoiserClient::~ExternalDenoiserClient() { shutdown(); }

void ExternalDenoiserClient::spawn() {
    int in_pipe[2];   // parent -> child
    int out_pipe[2];  // child -> parent
    if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0)
        throw std::runtime_error("external denoiser: pipe() failed");

    const int pid = fork();
    if (pid < 0) throw std::runtime_error("external denoiser: fork() failed");
    if (pid == 0) {
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        close(in_pipe[0]);
        close(in_pipe[1]);
        close(out_pipe[0]);
        close(out_pipe[1]);
        execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    pid_ = pid;
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
}

void ExternalDenoiserClient::shutdown() {
    if (to_child_ >= 0) {
        close(to_child_);
        to_child_ = -1;
    }
    if (from_child_ >= 0) {
        close(from_child_);
        from_child_ = -1;
    }
    if (pid_ > 0) {
        // give the child a moment to exit on EOF, then force it
        int status = 0;
        for (int i = 0; i < 50; ++i) {
            if (waitpid(pid_, &status, WNOHANG) == pid_) {
                pid_ = -1;
                return;
            }
            usleep(10'000);
        }
        kill(pid_, SIGKILL);
        waitpid(pid_, &status, 0);
        pid_ = -1;
    }
}

void ExternalDenoiserClient::write_all(const std::uint8_t* data, std::size_t size) {
    std::size_t off = 0;
    while (off < size) {
        const ssize_t n = ::write(to_child_, data + off, size - off);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw std::runtime_error("external denoiser: write failed (" +
                                     std::string(std::strerror(errno)) + ")");
        }
        off += static_cast<std::size_t>(n);
    }
}

void ExternalDenoiserClient::read_exact(std::uint8_t* out, std::size_t size) {
    std::size_t off = 0;
    while (off < size) {
        pollfd pfd{from_child_, POLLIN, 0};
        const int timeout_ms = static_cast<int>(timeout_seconds_ * 1000.0);
        const int pr = poll(&pfd, 1, timeout_ms);
        if (pr == 0)
            throw std::runtime_error("external denoiser: timeout after " +
                                     std::to_string(timeout_seconds_) + " s waiting for response");
        if (pr < 0) {
            if (errno == EINTR) continue;
            throw std::runtime_error("external denoiser: poll failed");
        }
        const ssize_t n = ::read(from_child_, out + off, size - off);
        if (n == 0)
            throw std::runtime_error("external denoiser: child closed stream after " +
                                     std::to_string(off) + " of " + std::to_string(size) +
                                     " expected bytes");
        if (n < 0) {
            if (errno == EINTR) continue;
            throw std::runtime_error("external denoiser: read failed (" +
                                     std::string(std::strerror(errno)) + ")");
        }
        off += static_cast<std::size_t>(n);
    }
}

Image ExternalDenoiserClient::denoise(const Image& x, double sigma) {
    if (pid_ < 0) spawn();

    const EdnzFrame request = EdnzFrame::from_image(x, sigma);
    const std::vector<std::uint8_t> bytes = ednz_serialize(request);
    write_all(bytes.data(), bytes.size());

    std::vector<std::uint8_t> header(kEdnzHeaderBytes);
    read_exact(header.data(), header.size());
    const EdnzHeader h = ednz_parse_header(header.data(), header.size());
    if (h.height != request.height || h.width != request.width ||
        h.channels != request.channels) {
        throw std::runtime_error(
            "external denoiser: response shape mismatch, sent " + x.shape_string() +
            " got " + std::to_string(h.height) + "x" + std::to_string(h.width) + "x" +
            std::to_string(h.channels));
    }

    std::vector<std::uint8_t> full(kEdnzHeaderBytes + h.payload_bytes());
    std::memcpy(full.data(), header.data(), kEdnzHeaderBytes);
    read_exact(full.data() + kEdnzHeaderBytes, h.payload_bytes());
    const EdnzFrame response = ednz_parse(full.data(), full.size());

    Image out = response.to_image();
    if (!out.all_finite())
        throw std::runtime_error("external denoiser: response contains non-finite values");
    return out;
}

}  // namespace ered
