#pragma once

#include "isoseq/errors.hpp"
#include "isoseq/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <vector>

namespace isoseq {

/// Binary visibility window of side 2R+1 centered on `origin`.
/// 1 = visible floor; walls, occluded floor and out-of-range cells are 0.
struct Isovist {
    int radius = 0;
    GridCoord origin;
    std::vector<std::uint8_t> window; // (2R+1)^2 row-major

    int size() const { return 2 * radius + 1; }

    std::uint8_t at(int u, int v) const {
        return window[static_cast<std::size_t>(v) * size() + u];
    }

    friend bool operator==(const Isovist& a, const Isovist& b) {
        return a.radius == b.radius && a.origin == b.origin && a.window == b.window;
    }
};

/// All grid cells the closed segment between the centers of a and b passes
/// through, in walk order from a to b. When the segment crosses a cell corner
/// exactly, both side cells are included (consecutive cells stay 8-adjacent).
inline std::vector<GridCoord> supercover_line(GridCoord a, GridCoord b) {
    std::vector<GridCoord> cells;
    int x = a.x, y = a.y;
    int dx = b.x - a.x, dy = b.y - a.y;
    cells.push_back(a);
    int xstep = 1, ystep = 1;
    if (dx < 0) {
        xstep = -1;
        dx = -dx;
    }
    if (dy < 0) {
        ystep = -1;
        dy = -dy;
    }
    int ddx = 2 * dx, ddy = 2 * dy;
    if (ddx >= ddy) {
        int errorprev = dx, error = dx;
        for (int i = 0; i < dx; ++i) {
            x += xstep;
            error += ddy;
            if (error > ddx) {
                y += ystep;
                error -= ddx;
                if (error + errorprev < ddx) {
                    cells.push_back({x, y - ystep});
                } else if (error + errorprev > ddx) {
                    cells.push_back({x - xstep, y});
                } else { // passes exactly through the corner
                    cells.push_back({x, y - ystep});
                    cells.push_back({x - xstep, y});
                }
            }
            cells.push_back({x, y});
            errorprev = error;
        }
    } else {
        int errorprev = dy, error = dy;
        for (int i = 0; i < dy; ++i) {
            y += ystep;
            error += ddx;
            if (error > ddy) {
                x += xstep;
                error -= ddy;
                if (error + errorprev < ddy) {
                    cells.push_back({x - xstep, y});
                } else if (error + errorprev > ddy) {
                    cells.push_back({x, y - ystep});
                } else {
                    cells.push_back({x - xstep, y});
                    cells.push_back({x, y - ystep});
                }
            }
            cells.push_back({x, y});
            errorprev = error;
        }
    }
    return cells;
}

/// Center-to-center ray oracle: b is visible from a iff b is FLOOR and every
/// supercover cell from a up to (excluding) b is FLOOR. A FLOOR cell sees
/// itself.
inline bool line_of_sight(const OccupancyGrid& grid, GridCoord a, GridCoord b) {
    if (!grid.in_bounds(a) || !grid.in_bounds(b))
        throw OutOfBounds("line_of_sight endpoint outside grid");
    if (grid.cell(b) != OccupancyGrid::Floor) return false;
    for (GridCoord c : supercover_line(a, b)) {
        if (c == b) continue;
        if (grid.cell(c) != OccupancyGrid::Floor) return false;
    }
    return true;
}

namespace detail {

// Exact slope arithmetic for the shadow caster: slopes are fractions with a
// positive denominator, compared by cross-multiplication.
struct Slope {
    std::int64_t num;
    std::int64_t den; // > 0
};

inline int slope_cmp(Slope a, Slope b) {
    std::int64_t l = a.num * b.den, r = b.num * a.den;
    return l < r ? -1 : l > r ? 1 : 0;
}

/// Sector boundary. Open bounds arise behind wall shadows (shadows are closed
/// sets: a ray grazing a wall corner counts as blocked, matching the
/// supercover oracle's corner rule); the initial quadrant diagonals are
/// closed.
struct Bound {
    Slope s;
    bool open;
};

inline bool sector_nonempty(Bound lo, Bound hi) {
    int c = slope_cmp(lo.s, hi.s);
    if (c != 0) return c < 0;
    return !lo.open && !hi.open;
}

struct QuadrantScan {
    const OccupancyGrid* grid;
    Isovist* iso;
    int quadrant; // 0 N, 1 S, 2 E, 3 W
    int radius;

    GridCoord transform(std::int64_t depth, std::int64_t col) const {
        int d = static_cast<int>(depth), c = static_cast<int>(col);
        switch (quadrant) {
        case 0: return {iso->origin.x + c, iso->origin.y - d};
        case 1: return {iso->origin.x + c, iso->origin.y + d};
        case 2: return {iso->origin.x + d, iso->origin.y + c};
        default: return {iso->origin.x - d, iso->origin.y + c};
        }
    }

    bool wall_at(std::int64_t depth, std::int64_t col) const {
        GridCoord p = transform(depth, col);
        return !grid->in_bounds(p) || grid->cell(p) != OccupancyGrid::Floor;
    }

    // Angular span of the full cell square as seen from the origin. Since the
    // square subtends a contiguous interval and is convex, every center ray
    // with slope inside the closed span intersects the square.
    static Slope span_lo(std::int64_t depth, std::int64_t col) {
        std::int64_t n = 2 * col - 1;
        return n >= 0 ? Slope{n, 2 * depth + 1} : Slope{n, 2 * depth - 1};
    }
    static Slope span_hi(std::int64_t depth, std::int64_t col) {
        std::int64_t n = 2 * col + 1;
        return n >= 0 ? Slope{n, 2 * depth - 1} : Slope{n, 2 * depth + 1};
    }

    void mark(std::int64_t depth, std::int64_t col) const {
        // Euclidean cutoff R+0.5: depth^2+col^2 <= R^2+R exactly, because
        // (R+0.5)^2 = R^2+R+0.25 and the left side is integral.
        if (depth * depth + col * col > static_cast<std::int64_t>(radius) * radius + radius)
            return;
        GridCoord p = transform(depth, col);
        if (!grid->in_bounds(p) || grid->cell(p) != OccupancyGrid::Floor) return;
        int u = 0, v = 0;
        switch (quadrant) {
        case 0:
            u = static_cast<int>(col) + radius;
            v = -static_cast<int>(depth) + radius;
            break;
        case 1:
            u = static_cast<int>(col) + radius;
            v = static_cast<int>(depth) + radius;
            break;
        case 2:
            u = static_cast<int>(depth) + radius;
            v = static_cast<int>(col) + radius;
            break;
        default:
            u = -static_cast<int>(depth) + radius;
            v = static_cast<int>(col) + radius;
            break;
        }
        iso->window[static_cast<std::size_t>(v) * iso->size() + u] = 1;
    }

    void scan(std::int64_t depth, Bound start, Bound end) const {
        if (depth > radius || !sector_nonempty(start, end)) return;

        // Candidate columns: everything whose center or square span can touch
        // the sector, with one overhang column past the diagonals so walls
        // just outside the quadrant still clip the exact-diagonal rays.
        std::int64_t lo_col = floor_div(depth * start.s.num, start.s.den) - 2;
        std::int64_t hi_col = -floor_div(-depth * end.s.num, end.s.den) + 2;
        lo_col = std::max(lo_col, -depth - 1);
        hi_col = std::min(hi_col, depth + 1);

        // Wall runs and their closed shadow spans, in column order.
        struct Shadow {
            Slope lo, hi;
            std::int64_t first_col, last_col;
        };
        Shadow shadows[8];
        std::vector<Shadow> shadow_overflow;
        std::size_t n_shadows = 0;
        auto push_shadow = [&](Shadow sh) {
            if (n_shadows < 8)
                shadows[n_shadows] = sh;
            else
                shadow_overflow.push_back(sh);
            ++n_shadows;
        };
        auto shadow_at = [&](std::size_t i) -> const Shadow& {
            return i < 8 ? shadows[i] : shadow_overflow[i - 8];
        };

        std::int64_t run_start = 0;
        bool in_run = false;
        for (std::int64_t col = lo_col; col <= hi_col; ++col) {
            if (wall_at(depth, col)) {
                if (!in_run) {
                    run_start = col;
                    in_run = true;
                }
            } else if (in_run) {
                push_shadow({span_lo(depth, run_start), span_hi(depth, col - 1), run_start,
                             col - 1});
                in_run = false;
            }
        }
        if (in_run)
            push_shadow({span_lo(depth, run_start), span_hi(depth, hi_col), run_start, hi_col});

        // Reveal floor cells whose center slope lies inside the sector and
        // outside every blocking shadow of this row. A same-row run blocks a
        // cell only when it sits between the origin direction and the cell;
        // runs beyond the cell would touch the center ray past its endpoint.
        for (std::int64_t col = std::max(lo_col, -depth); col <= std::min(hi_col, depth); ++col) {
            if (wall_at(depth, col)) continue;
            Slope center{col, depth};
            int cl = slope_cmp(center, start.s);
            if (cl < 0 || (cl == 0 && start.open)) continue;
            int ch = slope_cmp(center, end.s);
            if (ch > 0 || (ch == 0 && end.open)) continue;
            bool blocked = false;
            for (std::size_t i = 0; i < n_shadows && !blocked; ++i) {
                const Shadow& sh = shadow_at(i);
                bool origin_side = (col >= 0 && sh.last_col < col) || (col <= 0 && sh.first_col > col);
                blocked = origin_side && slope_cmp(center, sh.lo) >= 0 &&
                          slope_cmp(center, sh.hi) <= 0;
            }
            if (!blocked) mark(depth, col);
        }

        // Recurse into the sector minus the row's shadows.
        Bound cur = start;
        for (std::size_t i = 0; i < n_shadows; ++i) {
            const Shadow& sh = shadow_at(i);
            int rel = slope_cmp(sh.hi, cur.s);
            if (rel < 0 || (rel == 0 && cur.open)) continue; // already behind cur
            Bound child_hi{sh.lo, true};
            if (slope_cmp(child_hi.s, end.s) > 0) child_hi = end;
            if (sector_nonempty(cur, child_hi)) scan(depth + 1, cur, child_hi);
            cur = Bound{sh.hi, true};
            if (slope_cmp(cur.s, end.s) > 0) return; // rest of the sector is gone
        }
        if (sector_nonempty(cur, end)) scan(depth + 1, cur, end);
    }

    static std::int64_t floor_div(std::int64_t num, std::int64_t den) {
        std::int64_t q = num / den;
        if (num % den != 0 && ((num < 0) != (den < 0))) --q;
        return q;
    }
};

} // namespace detail

/// Recursive shadow casting over four quadrant sweeps with exact rational
/// slope arithmetic. Walls cast the closed angular shadow of their full cell
/// square, so the result matches the center-to-center supercover oracle on
/// all but degenerate tie configurations. Window cell = 1 iff the grid cell
/// is FLOOR, within Euclidean distance R+0.5 of the origin, and not occluded.
inline Isovist compute_isovist(const OccupancyGrid& grid, GridCoord origin, int radius) {
    if (!grid.in_bounds(origin)) throw OutOfBounds("isovist origin outside grid");
    if (grid.cell(origin) != OccupancyGrid::Floor)
        throw OriginNotFloor("isovist origin is not a floor cell");
    if (radius < 1) throw InvalidParams("isovist radius must be >= 1");

    Isovist iso;
    iso.radius = radius;
    iso.origin = origin;
    iso.window.assign(static_cast<std::size_t>(2 * radius + 1) * (2 * radius + 1), 0);
    iso.window[static_cast<std::size_t>(radius) * iso.size() + radius] = 1; // self-visibility

    for (int q = 0; q < 4; ++q) {
        detail::QuadrantScan scan{&grid, &iso, q, radius};
        scan.scan(1, detail::Bound{{-1, 1}, false}, detail::Bound{{1, 1}, false});
    }
    return iso;
}

/// Resample the window rotated by +heading about its center (nearest
/// neighbor; samples falling outside the window read as 0). Multiples of
/// pi/2 permute cells losslessly.
inline Isovist rotate_isovist(const Isovist& iso, double heading) {
    if (!std::isfinite(heading)) throw InvalidParams("heading must be finite");
    Isovist out;
    out.radius = iso.radius;
    out.origin = iso.origin;
    int w = iso.size();
    out.window.assign(static_cast<std::size_t>(w) * w, 0);
    double c = std::cos(heading), s = std::sin(heading);
    int r = iso.radius;
    for (int v = 0; v < w; ++v) {
        for (int u = 0; u < w; ++u) {
            double dx = u - r, dy = v - r;
            long sx = std::lround(dx * c - dy * s);
            long sy = std::lround(dx * s + dy * c);
            long su = sx + r, sv = sy + r;
            if (su < 0 || su >= w || sv < 0 || sv >= w) continue;
            out.window[static_cast<std::size_t>(v) * w + u] =
                iso.window[static_cast<std::size_t>(sv) * w + su];
        }
    }
    return out;
}

} // namespace isoseq
