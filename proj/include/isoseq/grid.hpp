#pragma once

#include "isoseq/errors.hpp"
#include "isoseq/image.hpp"
#include "isoseq/io.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace isoseq {

struct GridCoord {
    int x = 0; // column, increasing right
    int y = 0; // row, increasing down

    friend bool operator==(GridCoord a, GridCoord b) { return a.x == b.x && a.y == b.y; }
    friend bool operator!=(GridCoord a, GridCoord b) { return !(a == b); }
    friend bool operator<(GridCoord a, GridCoord b) {
        return a.y != b.y ? a.y < b.y : a.x < b.x;
    }
};

/// Binary floor-plan raster. Row-major, origin top-left, y down. Immutable
/// after construction; safe for concurrent reads.
class OccupancyGrid {
public:
    static constexpr std::uint8_t Wall = 0;
    static constexpr std::uint8_t Floor = 1;

    OccupancyGrid(int width, int height, std::vector<std::uint8_t> cells, bool border_padded)
        : width_(width), height_(height), cells_(std::move(cells)),
          border_padded_(border_padded) {
        if (width_ < 3 || height_ < 3) throw InvalidParams("grid must be at least 3x3");
        if (cells_.size() != static_cast<std::size_t>(width_) * height_)
            throw InvalidParams("grid cell count does not match dimensions");
        if (border_padded_ && !border_is_wall())
            throw FormatError("grid marked padded but border has floor cells");
    }

    int width() const { return width_; }
    int height() const { return height_; }
    bool border_padded() const { return border_padded_; }

    bool in_bounds(GridCoord p) const {
        return p.x >= 0 && p.x < width_ && p.y >= 0 && p.y < height_;
    }

    std::uint8_t cell(GridCoord p) const {
        return cells_[static_cast<std::size_t>(p.y) * width_ + p.x];
    }

    /// Unchecked floor test; callers guarantee bounds (or use in_bounds).
    bool floor_at(int x, int y) const {
        return cells_[static_cast<std::size_t>(y) * width_ + x] == Floor;
    }

    std::size_t floor_count() const {
        std::size_t n = 0;
        for (auto c : cells_) n += c;
        return n;
    }

    const std::vector<std::uint8_t>& cells() const { return cells_; }

private:
    bool border_is_wall() const {
        for (int x = 0; x < width_; ++x)
            if (floor_at(x, 0) || floor_at(x, height_ - 1)) return false;
        for (int y = 0; y < height_; ++y)
            if (floor_at(0, y) || floor_at(width_ - 1, y)) return false;
        return true;
    }

    int width_;
    int height_;
    std::vector<std::uint8_t> cells_;
    bool border_padded_;
};

/// Bounds-checked floor query.
inline bool is_floor(const OccupancyGrid& grid, GridCoord p) {
    if (!grid.in_bounds(p))
        throw OutOfBounds("coordinate (" + std::to_string(p.x) + "," + std::to_string(p.y) +
                          ") outside grid");
    return grid.cell(p) == OccupancyGrid::Floor;
}

namespace detail {

inline OccupancyGrid threshold_and_pad(const GrayImage& img) {
    if (img.width <= 0 || img.height <= 0) throw EmptyImage("image has zero dimension");
    int w = img.width + 2, h = img.height + 2;
    std::vector<std::uint8_t> cells(static_cast<std::size_t>(w) * h, OccupancyGrid::Wall);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            // luminance >= 0.5 in [0,1] is v >= 128 on 8-bit samples
            if (img.at(x, y) >= 128)
                cells[static_cast<std::size_t>(y + 1) * w + (x + 1)] = OccupancyGrid::Floor;
    return OccupancyGrid(w, h, std::move(cells), true);
}

} // namespace detail

/// Decode a PNG/PGM floor plan and binarize: luminance >= 0.5 is FLOOR,
/// everything else WALL. The result carries a mandatory one-pixel WALL
/// border so downstream visibility scans never leave the grid.
inline OccupancyGrid load_floorplan(const std::uint8_t* bytes, std::size_t size) {
    return detail::threshold_and_pad(decode_image(bytes, size));
}

inline OccupancyGrid load_floorplan(const std::vector<std::uint8_t>& bytes) {
    return load_floorplan(bytes.data(), bytes.size());
}

/// Render back to grayscale (FLOOR = 255, WALL = 0).
inline GrayImage grid_to_image(const OccupancyGrid& grid) {
    GrayImage img;
    img.width = grid.width();
    img.height = grid.height();
    img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            img.pixels[static_cast<std::size_t>(y) * img.width + x] =
                grid.floor_at(x, y) ? 255 : 0;
    return img;
}

// "IGRD" grid file: magic, width/height as u32 LE, one padding-flag byte,
// then rows bit-packed MSB-first (1 = FLOOR), each row starting a new byte.

inline std::vector<std::uint8_t> save_grid(const OccupancyGrid& grid) {
    std::vector<std::uint8_t> out;
    out.insert(out.end(), {'I', 'G', 'R', 'D'});
    put_u32le(out, static_cast<std::uint32_t>(grid.width()));
    put_u32le(out, static_cast<std::uint32_t>(grid.height()));
    out.push_back(grid.border_padded() ? 1 : 0);
    int row_bytes = (grid.width() + 7) / 8;
    for (int y = 0; y < grid.height(); ++y) {
        std::size_t base = out.size();
        out.resize(base + row_bytes, 0);
        for (int x = 0; x < grid.width(); ++x)
            if (grid.floor_at(x, y)) out[base + x / 8] |= static_cast<std::uint8_t>(0x80 >> (x % 8));
    }
    return out;
}

/// Load an "IGRD" file. Grids saved without the padded flag get the WALL
/// border applied here; flagged grids are loaded verbatim (no re-padding).
inline OccupancyGrid load_grid(const std::vector<std::uint8_t>& bytes) {
    ByteReader r(bytes);
    if (!r.expect_magic("IGRD")) throw FormatError("not an IGRD file");
    int w = static_cast<int>(r.u32le());
    int h = static_cast<int>(r.u32le());
    if (w <= 0 || h <= 0 || w > (1 << 20) || h > (1 << 20))
        throw FormatError("IGRD: implausible dimensions");
    std::uint8_t padded = r.u8();
    if (padded > 1) throw FormatError("IGRD: bad padding flag");
    int row_bytes = (w + 7) / 8;
    std::vector<std::uint8_t> cells(static_cast<std::size_t>(w) * h, OccupancyGrid::Wall);
    std::vector<std::uint8_t> row(row_bytes);
    for (int y = 0; y < h; ++y) {
        r.bytes(row.data(), row.size());
        for (int x = 0; x < w; ++x)
            if (row[x / 8] & (0x80 >> (x % 8)))
                cells[static_cast<std::size_t>(y) * w + x] = OccupancyGrid::Floor;
    }
    if (padded) return OccupancyGrid(w, h, std::move(cells), true);
    // unpadded payload: wrap it in the mandatory border
    std::vector<std::uint8_t> padded_cells(static_cast<std::size_t>(w + 2) * (h + 2),
                                           OccupancyGrid::Wall);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            padded_cells[static_cast<std::size_t>(y + 1) * (w + 2) + (x + 1)] =
                cells[static_cast<std::size_t>(y) * w + x];
    return OccupancyGrid(w + 2, h + 2, std::move(padded_cells), true);
}

} // namespace isoseq
