#pragma once

#include "isoseq/errors.hpp"
#include "isoseq/grid.hpp"
#include "isoseq/io.hpp"
#include "isoseq/pathgen.hpp"
#include "isoseq/visibility.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace isoseq {

/// t isovists spaced s trajectory pixels apart, centered on the trajectory
/// point under the middle frame (P_t). Frames are stored in time order.
struct IsovistSequence {
    int t = 0;
    int s = 0;
    GridCoord center;
    double heading = 0.0; // at the center index
    std::vector<Isovist> frames;
};

/// Trajectory pixels covered by one sequence: t*s - (s-1).
inline int footprint(int t, int s) {
    if (t < 1 || t % 2 == 0) throw InvalidParams("sequence length t must be odd and >= 1");
    if (s < 1) throw InvalidParams("spacing s must be >= 1");
    return t * s - (s - 1);
}

/// One sequence per window start (stride 1). The window starting at index k
/// takes frames at k, k+s, ..., k+(t-1)*s, each rotated into the walking
/// direction at its own index; the center is the point at k+(footprint-1)/2.
inline std::vector<IsovistSequence> extract_sequences(const Trajectory& traj,
                                                      const OccupancyGrid& grid, int t, int s,
                                                      int radius) {
    int fp = footprint(t, s);
    if (traj.points.size() < static_cast<std::size_t>(fp))
        throw TrajectoryTooShort("trajectory length " + std::to_string(traj.points.size()) +
                                 " is below the sequence footprint " + std::to_string(fp));

    std::vector<IsovistSequence> out;
    out.reserve(traj.points.size() - fp + 1);
    for (std::size_t k = 0; k + fp <= traj.points.size(); ++k) {
        IsovistSequence seq;
        seq.t = t;
        seq.s = s;
        std::size_t center_idx = k + (fp - 1) / 2;
        seq.center = traj.points[center_idx];
        seq.heading = heading_at(traj, center_idx);
        seq.frames.reserve(t);
        for (int j = 0; j < t; ++j) {
            std::size_t idx = k + static_cast<std::size_t>(j) * s;
            Isovist iso = compute_isovist(grid, traj.points[idx], radius);
            seq.frames.push_back(rotate_isovist(iso, heading_at(traj, idx)));
        }
        out.push_back(std::move(seq));
    }
    return out;
}

struct DatasetHeader {
    std::uint32_t t = 0;
    std::uint32_t s = 0;
    std::uint32_t window = 0; // W = 2R+1
    std::uint32_t count = 0;
};

struct Dataset {
    DatasetHeader header;
    std::vector<IsovistSequence> records;
};

// "ISQ1" dataset: magic, version byte, t/s/W/count as u32 LE, then per
// record: center x,y (i32 LE), heading (f64 LE), frames bit-packed row-major
// (MSB first, each frame padded to a whole byte) in time order. Frame origins
// are not persisted; read_dataset sets them to the record's center.

namespace detail {

constexpr std::uint8_t kDatasetVersion = 1;

inline std::size_t frame_bytes(std::uint32_t window) {
    return (static_cast<std::size_t>(window) * window + 7) / 8;
}

} // namespace detail

inline std::vector<std::uint8_t> serialize_dataset(const std::vector<IsovistSequence>& seqs) {
    if (seqs.empty()) throw EmptyInput("dataset has no sequences");
    int t = seqs.front().t, s = seqs.front().s;
    int w = seqs.front().frames.empty() ? 0 : seqs.front().frames.front().size();
    for (const auto& seq : seqs) {
        if (seq.t != t || seq.s != s || static_cast<int>(seq.frames.size()) != t)
            throw HeaderMismatch("sequences disagree on t/s");
        for (const auto& f : seq.frames)
            if (f.size() != w) throw HeaderMismatch("sequences disagree on window size");
    }

    std::vector<std::uint8_t> out;
    out.insert(out.end(), {'I', 'S', 'Q', '1'});
    out.push_back(detail::kDatasetVersion);
    put_u32le(out, static_cast<std::uint32_t>(t));
    put_u32le(out, static_cast<std::uint32_t>(s));
    put_u32le(out, static_cast<std::uint32_t>(w));
    put_u32le(out, static_cast<std::uint32_t>(seqs.size()));

    std::size_t fb = detail::frame_bytes(static_cast<std::uint32_t>(w));
    for (const auto& seq : seqs) {
        put_i32le(out, seq.center.x);
        put_i32le(out, seq.center.y);
        put_f64le(out, seq.heading);
        for (const auto& frame : seq.frames) {
            std::size_t base = out.size();
            out.resize(base + fb, 0);
            for (std::size_t i = 0; i < frame.window.size(); ++i)
                if (frame.window[i]) out[base + i / 8] |= static_cast<std::uint8_t>(0x80 >> (i % 8));
        }
    }
    return out;
}

inline Dataset parse_dataset(const std::vector<std::uint8_t>& bytes) {
    ByteReader r(bytes);
    if (!r.expect_magic("ISQ1")) throw FormatError("not an ISQ1 dataset");
    if (r.u8() != detail::kDatasetVersion) throw FormatError("unsupported ISQ1 version");

    Dataset ds;
    ds.header.t = r.u32le();
    ds.header.s = r.u32le();
    ds.header.window = r.u32le();
    ds.header.count = r.u32le();
    if (ds.header.t == 0 || ds.header.t % 2 == 0 || ds.header.s == 0)
        throw FormatError("ISQ1: invalid t/s");
    if (ds.header.window == 0 || ds.header.window % 2 == 0)
        throw FormatError("ISQ1: window size must be odd");

    int w = static_cast<int>(ds.header.window);
    int radius = (w - 1) / 2;
    std::size_t fb = detail::frame_bytes(ds.header.window);
    std::vector<std::uint8_t> packed(fb);
    ds.records.reserve(ds.header.count);
    for (std::uint32_t i = 0; i < ds.header.count; ++i) {
        IsovistSequence seq;
        seq.t = static_cast<int>(ds.header.t);
        seq.s = static_cast<int>(ds.header.s);
        seq.center.x = r.i32le();
        seq.center.y = r.i32le();
        seq.heading = r.f64le();
        seq.frames.reserve(seq.t);
        for (int j = 0; j < seq.t; ++j) {
            r.bytes(packed.data(), fb);
            Isovist iso;
            iso.radius = radius;
            iso.origin = seq.center;
            iso.window.resize(static_cast<std::size_t>(w) * w);
            for (std::size_t b = 0; b < iso.window.size(); ++b)
                iso.window[b] = (packed[b / 8] >> (7 - b % 8)) & 1;
            seq.frames.push_back(std::move(iso));
        }
        ds.records.push_back(std::move(seq));
    }
    return ds;
}

inline void write_dataset(const std::vector<IsovistSequence>& seqs, const std::string& path) {
    write_file(path, serialize_dataset(seqs));
}

inline Dataset read_dataset(const std::string& path) { return parse_dataset(read_file(path)); }

} // namespace isoseq
