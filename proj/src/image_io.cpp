#include "ered/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <png.h>

#include "ered/ednz.hpp"

namespace ered {

namespace {

std::string lower_extension(const std::string& path) {
    const auto pos = path.find_last_of('.');
    if (pos == std::string::npos) return "";
    std::string ext = path.substr(pos + 1);
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext;
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void io_error(const std::string& path, const std::string& what) {
    throw std::runtime_error(path + ": " + what);
}

// ---- PNG ----

Image load_png(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) io_error(path, "cannot open file");

    png_byte sig[8];
    if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0)
        io_error(path, "not a PNG file");

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        io_error(path, "libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        io_error(path, "corrupt PNG");
    }
    png_init_io(png, f.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);

    const int bit_depth = png_get_bit_depth(png, info);
    const int color_type = png_get_color_type(png, info);

    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (bit_depth == 16) png_set_swap(png);  // libpng reads big-endian
    png_read_update_info(png, info);

    const int h = static_cast<int>(png_get_image_height(png, info));
    const int w = static_cast<int>(png_get_image_width(png, info));
    const int ch = png_get_channels(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (ch != 1 && ch != 3) {
        png_destroy_read_struct(&png, &info, nullptr);
        io_error(path, "unsupported channel count " + std::to_string(ch));
    }

    const std::size_t row_bytes = png_get_rowbytes(png, info);
    std::vector<png_byte> raw(static_cast<std::size_t>(h) * row_bytes);
    std::vector<png_bytep> rows(h);
    for (int r = 0; r < h; ++r) rows[r] = raw.data() + r * row_bytes;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);

    Image img(h, w, ch);
    const std::size_t n = img.size();
    if (depth == 16) {
        const auto* p = reinterpret_cast<const std::uint16_t*>(raw.data());
        for (std::size_t i = 0; i < n; ++i) img[i] = p[i] / 65535.0;
    } else {
        for (std::size_t i = 0; i < n; ++i) img[i] = raw[i] / 255.0;
    }
    return img;
}

void save_png(const Image& img, const std::string& path, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16)
        throw std::invalid_argument("save_image: bit depth must be 8 or 16");
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) io_error(path, "cannot open file for writing");

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        io_error(path, "libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        io_error(path, "PNG write failed");
    }
    png_init_io(png, f.get());
    const int color = img.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(png, info, img.width(), img.height(), bit_depth, color,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    if (bit_depth == 16) png_set_swap(png);

    const std::size_t n = img.size();
    const double maxval = bit_depth == 16 ? 65535.0 : 255.0;
    if (bit_depth == 16) {
        std::vector<std::uint16_t> raw(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double v = std::clamp(img[i], 0.0, 1.0);
            raw[i] = static_cast<std::uint16_t>(std::lround(v * maxval));
        }
        std::vector<png_bytep> rows(img.height());
        for (int r = 0; r < img.height(); ++r)
            rows[r] = reinterpret_cast<png_bytep>(raw.data() +
                                                  static_cast<std::size_t>(r) * img.width() * img.channels());
        png_write_image(png, rows.data());
        png_write_end(png, nullptr);
    } else {
        std::vector<png_byte> raw(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double v = std::clamp(img[i], 0.0, 1.0);
            raw[i] = static_cast<png_byte>(std::lround(v * maxval));
        }
        std::vector<png_bytep> rows(img.height());
        for (int r = 0; r < img.height(); ++r)
            rows[r] = raw.data() + static_cast<std::size_t>(r) * img.width() * img.channels();
        png_write_image(png, rows.data());
        png_write_end(png, nullptr);
    }
    png_destroy_write_struct(&png, &info);
}

// ---- PNM (PGM/PPM) ----

int pnm_next_token(std::istream& in, std::string& tok) {
    tok.clear();
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {}
            continue;
        }
        if (!std::isspace(c)) break;
    }
    if (c == EOF) return 0;
    do {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    } while (c != EOF && !std::isspace(c));
    return 1;
}

Image load_pnm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) io_error(path, "cannot open file");
    std::string tok;
    if (!pnm_next_token(in, tok)) io_error(path, "empty PNM file");
    const std::string magic = tok;
    const bool ascii = (magic == "P2" || magic == "P3");
    const bool binary = (magic == "P5" || magic == "P6");
    if (!ascii && !binary) io_error(path, "unsupported PNM magic \"" + magic + "\"");
    const int ch = (magic == "P3" || magic == "P6") ? 3 : 1;

    long w = 0, h = 0, maxval = 0;
    auto read_long = [&](long& out) {
        if (!pnm_next_token(in, tok)) io_error(path, "truncated PNM header");
        try {
            out = std::stol(tok);
        } catch (...) {
            io_error(path, "bad PNM header token \"" + tok + "\"");
        }
    };
    read_long(w);
    read_long(h);
    read_long(maxval);
    if (w <= 0 || h <= 0) io_error(path, "nonpositive PNM dimensions");
    if (maxval <= 0 || maxval > 65535) io_error(path, "unsupported PNM maxval");

    Image img(static_cast<int>(h), static_cast<int>(w), ch);
    const std::size_t n = img.size();
    if (ascii) {
        for (std::size_t i = 0; i < n; ++i) {
            long v;
            read_long(v);
            if (v < 0 || v > maxval) io_error(path, "PNM sample out of range");
            img[i] = static_cast<double>(v) / maxval;
        }
    } else {
        // binary payload starts after exactly one whitespace byte (already consumed)
        if (maxval < 256) {
            std::vector<std::uint8_t> raw(n);
            in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n));
            if (static_cast<std::size_t>(in.gcount()) != n) io_error(path, "truncated PNM payload");
            for (std::size_t i = 0; i < n; ++i) img[i] = raw[i] / static_cast<double>(maxval);
        } else {
            std::vector<std::uint8_t> raw(2 * n);
            in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(2 * n));
            if (static_cast<std::size_t>(in.gcount()) != 2 * n) io_error(path, "truncated PNM payload");
            for (std::size_t i = 0; i < n; ++i) {
                const int v = (raw[2 * i] << 8) | raw[2 * i + 1];  // big-endian per spec
                img[i] = v / static_cast<double>(maxval);
            }
        }
    }
    return img;
}

void save_pnm(const Image& img, const std::string& path, int bit_depth) {
    if (bit_depth != 8 && bit_depth != 16)
        throw std::invalid_argument("save_image: bit depth must be 8 or 16");
    const std::string ext = lower_extension(path);
    if (ext == "ppm" && img.channels() != 3)
        throw std::invalid_argument("save_image: PPM requires 3 channels");
    if (ext == "pgm" && img.channels() != 1)
        throw std::invalid_argument("save_image: PGM requires 1 channel");

    std::ofstream out(path, std::ios::binary);
    if (!out) io_error(path, "cannot open file for writing");
    const long maxval = bit_depth == 16 ? 65535 : 255;
    out << (img.channels() == 3 ? "P6" : "P5") << "\n"
        << img.width() << " " << img.height() << "\n"
        << maxval << "\n";
    const std::size_t n = img.size();
    if (bit_depth == 8) {
        std::vector<std::uint8_t> raw(n);
        for (std::size_t i = 0; i < n; ++i)
            raw[i] = static_cast<std::uint8_t>(std::lround(std::clamp(img[i], 0.0, 1.0) * maxval));
        out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(n));
    } else {
        std::vector<std::uint8_t> raw(2 * n);
        for (std::size_t i = 0; i < n; ++i) {
            const int v = static_cast<int>(std::lround(std::clamp(img[i], 0.0, 1.0) * maxval));
            raw[2 * i] = static_cast<std::uint8_t>((v >> 8) & 0xff);
            raw[2 * i + 1] = static_cast<std::uint8_t>(v & 0xff);
        }
        out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(2 * n));
    }
    if (!out) io_error(path, "write failed");
}

// ---- raw EDNZ tensor ----

Image load_ednz(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) io_error(path, "cannot open file");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return ednz_parse(bytes).to_image();
}

void save_ednz(const Image& img, const std::string& path) {
    const auto bytes = ednz_serialize(EdnzFrame::from_image(img, 0.0));
    std::ofstream out(path, std::ios::binary);
    if (!out) io_error(path, "cannot open file for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) io_error(path, "write failed");
}

}  // namespace

Image load_image(const std::string& path) {
    const std::string ext = lower_extension(path);
    if (ext == "png") return load_png(path);
    if (ext == "pgm" || ext == "ppm" || ext == "pnm") return load_pnm(path);
    if (ext == "ednz") return load_ednz(path);
    io_error(path, "unsupported image format \"." + ext + "\"");
}

void save_image(const Image& img, const std::string& path, int bit_depth) {
    if (!img.all_finite())
        throw std::invalid_argument("save_image: image contains non-finite values");
    const std::string ext = lower_extension(path);
    if (ext == "png") return save_png(img, path, bit_depth);
    if (ext == "pgm" || ext == "ppm") return save_pnm(img, path, bit_depth);
    if (ext == "ednz") return save_ednz(img, path);
    io_error(path, "unsupported image format \"." + ext + "\"");
}

}  // namespace ered
