#pragma once

#include "isoseq/errors.hpp"

#include <png.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

namespace isoseq {

struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels; // row-major, one byte per pixel

    std::uint8_t at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

struct RgbaImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels; // row-major, 4 bytes per pixel

    void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b, std::uint8_t a) {
        std::size_t i = (static_cast<std::size_t>(y) * width + x) * 4;
        pixels[i] = r;
        pixels[i + 1] = g;
        pixels[i + 2] = b;
        pixels[i + 3] = a;
    }
};

namespace detail {

inline bool looks_like_png(const std::uint8_t* b, std::size_t n) {
    static const std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
    return n >= 8 && std::memcmp(b, sig, 8) == 0;
}

inline GrayImage decode_png_gray(const std::uint8_t* bytes, std::size_t size) {
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&img, bytes, size))
        throw DecodeError(std::string("png: ") + img.message);
    img.format = PNG_FORMAT_GRAY;
    GrayImage out;
    out.width = static_cast<int>(img.width);
    out.height = static_cast<int>(img.height);
    if (out.width <= 0 || out.height <= 0) {
        png_image_free(&img);
        throw EmptyImage("png has zero dimension");
    }
    out.pixels.resize(PNG_IMAGE_SIZE(img));
    if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr))
        throw DecodeError(std::string("png: ") + img.message);
    return out;
}

// Binary PGM ("P5"). Samples are scaled to 8 bits; two-byte samples are
// big-endian per the netpbm spec.
inline GrayImage decode_pgm(const std::uint8_t* bytes, std::size_t size) {
    std::size_t pos = 0;
    auto peek = [&]() -> int { return pos < size ? bytes[pos] : -1; };
    auto skip_space = [&]() {
        while (pos < size) {
            if (std::isspace(peek())) {
                ++pos;
            } else if (peek() == '#') {
                while (pos < size && bytes[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
    };
    auto read_int = [&]() -> long {
        skip_space();
        if (pos >= size || !std::isdigit(peek())) throw DecodeError("pgm: bad header");
        long v = 0;
        while (pos < size && std::isdigit(peek())) {
            v = v * 10 + (bytes[pos] - '0');
            if (v > 1 << 30) throw DecodeError("pgm: header value out of range");
            ++pos;
        }
        return v;
    };

    if (size < 2 || bytes[0] != 'P' || bytes[1] != '5') throw DecodeError("pgm: bad magic");
    pos = 2;
    long w = read_int();
    long h = read_int();
    long maxval = read_int();
    if (w == 0 || h == 0) throw EmptyImage("pgm has zero dimension");
    if (w < 0 || h < 0 || maxval <= 0 || maxval > 65535) throw DecodeError("pgm: bad header");
    if (pos >= size || !std::isspace(peek())) throw DecodeError("pgm: bad header");
    ++pos; // single whitespace before the raster

    GrayImage out;
    out.width = static_cast<int>(w);
    out.height = static_cast<int>(h);
    out.pixels.resize(static_cast<std::size_t>(w) * h);
    std::size_t n = out.pixels.size();
    if (maxval < 256) {
        if (size - pos < n) throw DecodeError("pgm: truncated raster");
        for (std::size_t i = 0; i < n; ++i) {
            long v = bytes[pos + i];
            out.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * v / maxval));
        }
    } else {
        if (size - pos < 2 * n) throw DecodeError("pgm: truncated raster");
        for (std::size_t i = 0; i < n; ++i) {
            long v = (bytes[pos + 2 * i] << 8) | bytes[pos + 2 * i + 1];
            out.pixels[i] = static_cast<std::uint8_t>(std::lround(255.0 * v / maxval));
        }
    }
    return out;
}

} // namespace detail

/// Decode a PNG or binary PGM ("P5") into 8-bit grayscale. PNG color inputs
/// are converted to luminance by libpng.
inline GrayImage decode_image(const std::uint8_t* bytes, std::size_t size) {
    if (size == 0) throw DecodeError("empty image buffer");
    if (detail::looks_like_png(bytes, size)) return detail::decode_png_gray(bytes, size);
    if (size >= 2 && bytes[0] == 'P' && bytes[1] == '5') return detail::decode_pgm(bytes, size);
    throw DecodeError("unrecognized image format (need PNG or binary PGM)");
}

inline GrayImage decode_image(const std::vector<std::uint8_t>& bytes) {
    return decode_image(bytes.data(), bytes.size());
}

namespace detail {

inline std::vector<std::uint8_t> encode_png(const void* pixels, int width, int height,
                                            png_uint_32 format) {
    png_image img;
    std::memset(&img, 0, sizeof(img));
    img.version = PNG_IMAGE_VERSION;
    img.width = static_cast<png_uint_32>(width);
    img.height = static_cast<png_uint_32>(height);
    img.format = format;

    png_alloc_size_t bytes = 0;
    if (!png_image_write_to_memory(&img, nullptr, &bytes, 0, pixels, 0, nullptr))
        throw IoError(std::string("png encode: ") + img.message);
    std::vector<std::uint8_t> out(bytes);
    if (!png_image_write_to_memory(&img, out.data(), &bytes, 0, pixels, 0, nullptr))
        throw IoError(std::string("png encode: ") + img.message);
    out.resize(bytes);
    return out;
}

} // namespace detail

inline std::vector<std::uint8_t> encode_png(const GrayImage& img) {
    return detail::encode_png(img.pixels.data(), img.width, img.height, PNG_FORMAT_GRAY);
}

inline std::vector<std::uint8_t> encode_png(const RgbaImage& img) {
    return detail::encode_png(img.pixels.data(), img.width, img.height, PNG_FORMAT_RGBA);
}

/// Nearest-neighbor rescale by a positive factor (the CLI's plain map resize).
inline GrayImage resize_nearest(const GrayImage& img, double factor) {
    if (!(factor > 0.0)) throw InvalidParams("resize factor must be > 0");
    GrayImage out;
    out.width = std::max(1, static_cast<int>(std::lround(img.width * factor)));
    out.height = std::max(1, static_cast<int>(std::lround(img.height * factor)));
    out.pixels.resize(static_cast<std::size_t>(out.width) * out.height);
    for (int y = 0; y < out.height; ++y) {
        int sy = std::min(img.height - 1, static_cast<int>(y / factor));
        for (int x = 0; x < out.width; ++x) {
            int sx = std::min(img.width - 1, static_cast<int>(x / factor));
            out.pixels[static_cast<std::size_t>(y) * out.width + x] = img.at(sx, sy);
        }
    }
    return out;
}

} // namespace isoseq
