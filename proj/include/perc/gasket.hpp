#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <queue>
#include <unordered_map>
#include <vector>

#include "perc/space.hpp"

namespace perc {

// Unbounded Sierpinski gasket with the intrinsic (shortest-path) metric
// and the self-similar measure assigning a cell of side L the mass L^s,
// s = log3/log2.
//
// Geometry is carried on the triangular lattice: a vertex (u,v) at unit
// h sits at ambient h*(u + v/2, v*sqrt(3)/2), and the upward cell with
// base corner (u,v) belongs to the gasket iff u >= 0, v >= 0 and
// (u & v) == 0.  Cells of one depth meet only at vertices, so shortest
// paths between depth-h vertices run along lattice edges and the graph
// distance times h is the exact intrinsic distance.  Distances to points
// generated by digit descent are tracked exactly through the descent, so
// ball decompositions and sampling acceptance are certified.
class GasketSpace : public Space {
public:
    GasketSpace() : Space(make_descriptor()) {}

    Point origin() const override { return GasketAddress{0, {0}, {0.0, 0.0}}; }

    static double ahlfors_s() { return std::log(3.0) / std::log(2.0); }

    // --- lattice plumbing -------------------------------------------------

    struct Lattice {
        long long u = 0;
        long long v = 0;
        int e = 0; // unit is 2^e
    };

    static bool valid_cell(long long u, long long v) {
        return u >= 0 && v >= 0 &&
               ((static_cast<unsigned long long>(u) &
                 static_cast<unsigned long long>(v)) == 0ULL);
    }

    static bool is_vertex(long long u, long long v) {
        return valid_cell(u, v) || valid_cell(u - 1, v) || valid_cell(u, v - 1);
    }

    static std::array<double, 2> ambient_of(const Lattice& a) {
        const double h = std::ldexp(1.0, a.e);
        return {h * (static_cast<double>(a.u) + 0.5 * static_cast<double>(a.v)),
                h * 0.8660254037844386467637231707529362 *
                    static_cast<double>(a.v)};
    }

    // Address convention: the first D-1 digits subdivide the root cell of
    // side 2^level down to a unit cell at e = level - D + 1; the last
    // digit names one of its three corners.
    static Lattice to_lattice(const GasketAddress& g) {
        const int D = static_cast<int>(g.digits.size());
        if (D < 1) throw UsageError("gasket address needs a corner digit");
        Lattice a;
        a.e = g.level - D + 1;
        long long side = 1LL << (D - 1);
        for (int k = 0; k + 1 < D; ++k) {
            const std::uint8_t d = g.digits[k];
            side >>= 1;
            if (d == 1) a.u += side;
            else if (d == 2) a.v += side;
            else if (d != 0) throw UsageError("gasket digit out of range");
        }
        const std::uint8_t last = g.digits.back();
        if (last == 1) a.u += 1;
        else if (last == 2) a.v += 1;
        else if (last != 0) throw UsageError("gasket digit out of range");
        return a;
    }

    static GasketAddress from_lattice(Lattice a) {
        long long cu = a.u, cv = a.v;
        std::uint8_t corner = 0;
        if (!valid_cell(cu, cv)) {
            if (valid_cell(a.u - 1, a.v)) {
                cu = a.u - 1;
                corner = 1;
            } else if (valid_cell(a.u, a.v - 1)) {
                cv = a.v - 1;
                corner = 2;
            } else {
                throw UsageError("lattice point is not a gasket vertex");
            }
        }
        int extra = 0;
        while ((cu + cv) >> extra > 0) ++extra; // smallest 2^extra > cu+cv
        GasketAddress g;
        g.level = a.e + extra; // root cell side 2^extra in units of a.e
        long long side = 1LL << extra;
        for (int k = 0; k < extra; ++k) {
            side >>= 1;
            if (cu >= side) {
                g.digits.push_back(1);
                cu -= side;
            } else if (cv >= side) {
                g.digits.push_back(2);
                cv -= side;
            } else {
                g.digits.push_back(0);
            }
        }
        g.digits.push_back(corner);
        g.ambient = ambient_of(a);
        return g;
    }

    const GasketAddress& address(const Point& p) const {
        const auto* g = std::get_if<GasketAddress>(&p);
        if (!g) throw UsageError("point does not belong to the gasket");
        return *g;
    }

    // Decode invariant; tolerance 1e-12 on the ambient pair.
    static bool ambient_consistent(const GasketAddress& g) {
        const auto amb = ambient_of(to_lattice(g));
        return std::abs(amb[0] - g.ambient[0]) <= 1e-12 &&
               std::abs(amb[1] - g.ambient[1]) <= 1e-12;
    }

    Proposal proposal(const Point& center, double r) const override;

    std::optional<std::vector<double>> index_coords(const Point& p) const override {
        const auto amb = address(p).ambient;
        return std::vector<double>{amb[0], amb[1]};
    }

    bool sup_distance_is_envelope() const override { return true; }

    nlohmann::json to_json() const override { return {{"kind", "gasket"}}; }

protected:
    double distance_impl(const Point& p, const Point& q) const override;
    MassInterval ball_measure_impl(const Point& x, double r) const override;

private:
    static SpaceDescriptor make_descriptor() {
        SpaceDescriptor d;
        d.kind = "gasket";
        d.ahlfors_exponent = ahlfors_s();
        d.regularity_constant = 5.0; // verified empirically in the test suite
        d.sigma = 2.0;
        d.geodesic = true;
        d.unit_ball_mass = 1.0;
        return d;
    }

    struct KeyHash {
        std::size_t operator()(std::uint64_t k) const {
            return static_cast<std::size_t>(splitmix64(k));
        }
    };

    static std::uint64_t pack(long long u, long long v) {
        return (static_cast<std::uint64_t>(u + (1LL << 30)) << 32) |
               static_cast<std::uint64_t>(v + (1LL << 30));
    }
    static long long unpack_u(std::uint64_t k) {
        return static_cast<long long>(k >> 32) - (1LL << 30);
    }
    static long long unpack_v(std::uint64_t k) {
        return static_cast<long long>(k & 0xFFFFFFFFULL) - (1LL << 30);
    }

    template <typename Fn>
    static void for_each_neighbor(long long u, long long v, Fn&& fn) {
        if (valid_cell(u, v)) {
            fn(u + 1, v);
            fn(u, v + 1);
        }
        if (valid_cell(u - 1, v)) {
            fn(u - 1, v);
            fn(u - 1, v + 1);
        }
        if (valid_cell(u, v - 1)) {
            fn(u, v - 1);
            fn(u + 1, v - 1);
        }
    }

    static double lattice_euclid(long long u1, long long v1, long long u2,
                                 long long v2) {
        const double du = static_cast<double>(u1 - u2);
        const double dv = static_cast<double>(v1 - v2);
        const double x = du + 0.5 * dv;
        const double y = 0.8660254037844386467637231707529362 * dv;
        return std::sqrt(x * x + y * y);
    }

    // A point carried as its unit cell plus exact intrinsic distances to
    // the cell's three corners (a1 = base, a2 = base+u, a3 = base+v).
    // Cells of one scale meet the rest of the gasket only at corners, so
    // these three numbers determine every distance out of the cell.
    struct Frame {
        long long u = 0;
        long long v = 0;
        int e = 0;
        double g[3];
    };

    static Frame frame_of(const GasketAddress& a);
    // Exact one-level lift: distances to the parent's corners via the
    // constant corner/midpoint distance table.
    static Frame lift(const Frame& f);
    // Joins two frames over distinct same-scale cells by multi-source A*
    // between their corner vertices.
    static double corner_join(const Frame& A, const Frame& B);

    // Snap a vertex one level coarser; moves along at most one edge.
    static Lattice coarsen(Lattice a);

    static std::unordered_map<std::uint64_t, long long, KeyHash>
    bfs_distances(long long su, long long sv, long long radius);

    // --- exact ball decomposition ----------------------------------------

    struct CoverCell {
        long long u = 0;
        long long v = 0;
        int e = 0;
        double corner_dist[3]; // exact center distances of the corners
        bool full = false;     // certified inside the open ball
    };

    struct BallDecomposition {
        double lower = 0.0;
        double upper = 0.0;
        std::vector<CoverCell> cover;
        double center_shift = 0.0; // snap applied to a too-deep center
    };

    // Max intrinsic distance from a corner of the unit cell to any of
    // its points, in side units; pinned by an exhaustive graph check in
    // the test suite.
    static constexpr double kCornerEccentricity = 1.0;

    // r_lo/r_hi bracket the query radius around a possibly snapped
    // center: full requires the cell inside B(c', r_lo), empty requires
    // disjointness from B(c', r_hi).
    static void refine_cell(long long u, long long v, int e, const double g[3],
                            double r_lo, double r_hi, int depth_left,
                            bool keep_cover, BallDecomposition& out);

    BallDecomposition decompose_ball(const Point& x, double r,
                                     double ratio_goal, bool keep_cover,
                                     bool allow_snap) const;
};

// ---------------------------------------------------------------------------

inline GasketSpace::Frame GasketSpace::frame_of(const GasketAddress& a) {
    const Lattice p = to_lattice(a);
    Frame f;
    f.e = p.e;
    const double h = std::ldexp(1.0, p.e);
    int corner;
    if (valid_cell(p.u, p.v)) {
        f.u = p.u;
        f.v = p.v;
        corner = 0;
    } else if (valid_cell(p.u - 1, p.v)) {
        f.u = p.u - 1;
        f.v = p.v;
        corner = 1;
    } else if (valid_cell(p.u, p.v - 1)) {
        f.u = p.u;
        f.v = p.v - 1;
        corner = 2;
    } else {
        throw GeometryError("gasket address decodes off the lattice");
    }
    for (int i = 0; i < 3; ++i) f.g[i] = i == corner ? 0.0 : h;
    return f;
}

inline GasketSpace::Frame GasketSpace::lift(const Frame& f) {
    // D[child][child corner][parent corner]: graph distance in edges of
    // the child scale between the child's corner and the parent's
    // corner; exact because every value matches the Euclidean lower
    // bound rounded up.
    static constexpr int D[3][3][3] = {
        {{0, 2, 2}, {1, 1, 2}, {1, 2, 1}},
        {{1, 1, 2}, {2, 0, 2}, {2, 1, 1}},
        {{1, 2, 1}, {2, 1, 1}, {2, 2, 0}},
    };
    const int child = (f.u & 1) ? 1 : (f.v & 1) ? 2 : 0;
    const double h = std::ldexp(1.0, f.e);
    Frame out;
    out.u = f.u >> 1;
    out.v = f.v >> 1;
    out.e = f.e + 1;
    for (int j = 0; j < 3; ++j) {
        double best = kInf;
        for (int i = 0; i < 3; ++i) {
            best = std::min(best, f.g[i] + D[child][i][j] * h);
        }
        out.g[j] = best;
    }
    return out;
}

inline double GasketSpace::corner_join(const Frame& A, const Frame& B) {
    const double h = std::ldexp(1.0, A.e);
    const long long src[3][2] = {
        {A.u, A.v}, {A.u + 1, A.v}, {A.u, A.v + 1}};
    const long long dst[3][2] = {
        {B.u, B.v}, {B.u + 1, B.v}, {B.u, B.v + 1}};
    auto heuristic = [&](long long u, long long v) {
        double best = kInf;
        for (int j = 0; j < 3; ++j) {
            best = std::min(best, h * lattice_euclid(u, v, dst[j][0],
                                                     dst[j][1]) + B.g[j]);
        }
        return best;
    };
    struct Entry {
        double f;
        double g;
        long long u, v;
        bool operator>(const Entry& o) const {
            if (f != o.f) return f > o.f;
            if (g != o.g) return g > o.g;
            if (u != o.u) return u > o.u;
            return v > o.v;
        }
    };
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> open;
    std::unordered_map<std::uint64_t, double, KeyHash> best;
    for (int i = 0; i < 3; ++i) {
        const std::uint64_t k = pack(src[i][0], src[i][1]);
        auto [slot, inserted] = best.try_emplace(k, A.g[i]);
        if (!inserted) slot->second = std::min(slot->second, A.g[i]);
    }
    for (int i = 0; i < 3; ++i) {
        open.push({best[pack(src[i][0], src[i][1])] +
                       heuristic(src[i][0], src[i][1]),
                   best[pack(src[i][0], src[i][1])], src[i][0], src[i][1]});
    }
    double answer = kInf;
    while (!open.empty()) {
        const Entry cur = open.top();
        open.pop();
        if (cur.f >= answer) break;
        auto it = best.find(pack(cur.u, cur.v));
        if (it != best.end() && it->second < cur.g) continue;
        for (int j = 0; j < 3; ++j) {
            if (cur.u == dst[j][0] && cur.v == dst[j][1]) {
                answer = std::min(answer, cur.g + B.g[j]);
            }
        }
        if (best.size() > (1u << 20)) {
            throw GeometryError("gasket distance search exceeded node cap");
        }
        for_each_neighbor(cur.u, cur.v, [&](long long nu, long long nv) {
            const double ng = cur.g + h;
            auto [slot, inserted] = best.try_emplace(pack(nu, nv), ng);
            if (!inserted) {
                if (slot->second <= ng) return;
                slot->second = ng;
            }
            open.push({ng + heuristic(nu, nv), ng, nu, nv});
        });
    }
    if (answer == kInf) {
        throw GeometryError("gasket distance search failed to connect");
    }
    return answer;
}

inline GasketSpace::Lattice GasketSpace::coarsen(Lattice a) {
    if ((a.u & 1) == 0 && (a.v & 1) == 0) return {a.u / 2, a.v / 2, a.e + 1};
    const long long cand[3][2] = {{a.u, a.v}, {a.u - 1, a.v}, {a.u, a.v - 1}};
    for (const auto& c : cand) {
        if (!valid_cell(c[0], c[1])) continue;
        const long long corners[3][2] = {
            {c[0], c[1]}, {c[0] + 1, c[1]}, {c[0], c[1] + 1}};
        for (const auto& k : corners) {
            if ((k[0] & 1) == 0 && (k[1] & 1) == 0)
                return {k[0] / 2, k[1] / 2, a.e + 1};
        }
    }
    throw GeometryError("gasket vertex could not be coarsened");
}

inline std::unordered_map<std::uint64_t, long long, GasketSpace::KeyHash>
GasketSpace::bfs_distances(long long su, long long sv, long long radius) {
    std::unordered_map<std::uint64_t, long long, KeyHash> dist;
    std::queue<std::pair<long long, long long>> q;
    dist[pack(su, sv)] = 0;
    q.push({su, sv});
    while (!q.empty()) {
        auto [u, v] = q.front();
        q.pop();
        const long long d = dist[pack(u, v)];
        if (d >= radius) continue;
        for_each_neighbor(u, v, [&](long long nu, long long nv) {
            if (dist.try_emplace(pack(nu, nv), d + 1).second) q.push({nu, nv});
        });
    }
    return dist;
}

inline double GasketSpace::distance_impl(const Point& p, const Point& q) const {
    {
        Lattice a = to_lattice(address(p));
        Lattice b = to_lattice(address(q));
        while (a.e > b.e) {
            a.u <<= 1;
            a.v <<= 1;
            --a.e;
        }
        while (b.e > a.e) {
            b.u <<= 1;
            b.v <<= 1;
            --b.e;
        }
        if (a.u == b.u && a.v == b.v) return 0.0;
    }

    Frame A = frame_of(address(p));
    Frame B = frame_of(address(q));
    while (A.e < B.e) A = lift(A);
    while (B.e < A.e) B = lift(B);
    if (A.u == B.u && A.v == B.v) {
        // The shallower point is a corner of the shared cell (its frame
        // holds a zero), so the through-corner minimum is exact.
        return std::min({A.g[0] + B.g[0], A.g[1] + B.g[1], A.g[2] + B.g[2]});
    }
    // Lifting while the cells stay far apart is exact and keeps the
    // corner search small; cells sharing a parent are never this far.
    constexpr double kMaxSpan = 64.0;
    while (lattice_euclid(A.u, A.v, B.u, B.v) > kMaxSpan) {
        A = lift(A);
        B = lift(B);
    }
    return corner_join(A, B);
}

inline void GasketSpace::refine_cell(long long u, long long v, int e,
                                     const double g[3], double r_lo,
                                     double r_hi, int depth_left,
                                     bool keep_cover, BallDecomposition& out) {
    const double gmin = std::min({g[0], g[1], g[2]});
    if (gmin >= r_hi) return; // disjoint from the (widened) open ball
    const double h = std::ldexp(1.0, e);
    const double mass = std::pow(h, ahlfors_s());
    if (gmin + kCornerEccentricity * h < r_lo) {
        out.lower += mass;
        out.upper += mass;
        if (keep_cover) out.cover.push_back({u, v, e, {g[0], g[1], g[2]}, true});
        return;
    }
    if (depth_left <= 0) {
        out.upper += mass;
        if (keep_cover) out.cover.push_back({u, v, e, {g[0], g[1], g[2]}, false});
        return;
    }
    // Children enter only through their corners; midpoint distances are
    // exactly (1/2, 1/2, 1) side units away from the parent corners.
    const double hh = 0.5 * h;
    const double m12 = std::min({g[0] + hh, g[1] + hh, g[2] + h});
    const double m13 = std::min({g[0] + hh, g[2] + hh, g[1] + h});
    const double m23 = std::min({g[1] + hh, g[2] + hh, g[0] + h});
    const double child1[3] = {g[0], m12, m13};
    const double child2[3] = {m12, g[1], m23};
    const double child3[3] = {m13, m23, g[2]};
    refine_cell(2 * u, 2 * v, e - 1, child1, r_lo, r_hi, depth_left - 1,
                keep_cover, out);
    refine_cell(2 * u + 1, 2 * v, e - 1, child2, r_lo, r_hi, depth_left - 1,
                keep_cover, out);
    refine_cell(2 * u, 2 * v + 1, e - 1, child3, r_lo, r_hi, depth_left - 1,
                keep_cover, out);
}

inline GasketSpace::BallDecomposition
GasketSpace::decompose_ball(const Point& x, double r, double ratio_goal,
                            bool keep_cover, bool allow_snap) const {
    Lattice c = to_lattice(address(x));
    int e0 = c.e;
    while (std::ldexp(1.0, e0) > r / 4.0) --e0;
    while (std::ldexp(1.0, e0 + 1) <= r / 4.0) ++e0;
    double center_shift = 0.0;
    if (allow_snap) {
        while (c.e < e0 - 9) {
            center_shift += std::ldexp(1.0, c.e + 1);
            c = coarsen(c);
        }
    }
    while (c.e > e0) {
        c.u <<= 1;
        c.v <<= 1;
        --c.e;
    }
    const double r_lo = r - center_shift;
    const double r_hi = r + center_shift;
    const double h0 = std::ldexp(1.0, c.e);
    const long long radius_edges =
        static_cast<long long>(std::ceil(r_hi / h0)) + 2;
    const auto dist = bfs_distances(c.u, c.v, radius_edges);
    auto corner_dist = [&](long long u, long long v) {
        auto it = dist.find(pack(u, v));
        return it == dist.end()
                   ? kInf
                   : std::ldexp(static_cast<double>(it->second), c.e);
    };

    BallDecomposition out;
    out.center_shift = center_shift;
    int depth_left = 2;
    for (;;) {
        out.lower = out.upper = 0.0;
        out.cover.clear();
        std::unordered_map<std::uint64_t, bool, KeyHash> seen;
        for (const auto& [key, gd] : dist) {
            const long long u = unpack_u(key);
            const long long v = unpack_v(key);
            const long long cells[3][2] = {{u, v}, {u - 1, v}, {u, v - 1}};
            for (const auto& cell : cells) {
                if (!valid_cell(cell[0], cell[1])) continue;
                if (!seen.try_emplace(pack(cell[0], cell[1]), true).second)
                    continue;
                const double g[3] = {corner_dist(cell[0], cell[1]),
                                     corner_dist(cell[0] + 1, cell[1]),
                                     corner_dist(cell[0], cell[1] + 1)};
                refine_cell(cell[0], cell[1], c.e, g, r_lo, r_hi, depth_left,
                            keep_cover, out);
            }
        }
        if (out.lower > 0.0 && out.upper / out.lower <= ratio_goal) break;
        if (depth_left >= 24) break;
        depth_left += 2;
    }
    return out;
}

inline MassInterval GasketSpace::ball_measure_impl(const Point& x,
                                                   double r) const {
    const auto d =
        decompose_ball(x, r, 1.0 + 1e-2, /*keep_cover=*/false, /*snap=*/true);
    return {d.lower, d.upper};
}

inline Proposal GasketSpace::proposal(const Point& center, double r) const {
    // Snapping keeps the corner search bounded when the center sits at a
    // deep level; the cover then dominates B(center, r) and acceptance is
    // decided by an exact distance to the true center.
    auto deco = std::make_shared<BallDecomposition>(decompose_ball(
        center, r, 1.25, /*keep_cover=*/true, /*snap=*/true));
    if (deco->cover.empty()) {
        throw SamplingError("gasket window decomposition is empty");
    }
    std::vector<double> cum;
    cum.reserve(deco->cover.size());
    double total = 0.0;
    for (const auto& cell : deco->cover) {
        total += std::pow(std::ldexp(1.0, cell.e), ahlfors_s());
        cum.push_back(total);
    }
    auto cumulative = std::make_shared<std::vector<double>>(std::move(cum));

    return {total,
            [this, deco, cumulative, r,
             center](Rng& rng) -> std::optional<Point> {
                const auto& cum = *cumulative;
                const double t = uniform01(rng) * cum.back();
                const std::size_t idx = static_cast<std::size_t>(
                    std::lower_bound(cum.begin(), cum.end(), t) - cum.begin());
                const CoverCell& cell =
                    deco->cover[std::min(idx, deco->cover.size() - 1)];

                long long u = cell.u, v = cell.v;
                int e = cell.e;
                double g[3] = {cell.corner_dist[0], cell.corner_dist[1],
                               cell.corner_dist[2]};
                constexpr int kDescentDepth = 10;
                for (int k = 0; k < kDescentDepth; ++k) {
                    const double h = std::ldexp(1.0, e);
                    const double hh = 0.5 * h;
                    const double m12 =
                        std::min({g[0] + hh, g[1] + hh, g[2] + h});
                    const double m13 =
                        std::min({g[0] + hh, g[2] + hh, g[1] + h});
                    const double m23 =
                        std::min({g[1] + hh, g[2] + hh, g[0] + h});
                    const std::uint64_t pick = uniform_index(rng, 3);
                    u <<= 1;
                    v <<= 1;
                    --e;
                    if (pick == 1) {
                        u += 1;
                        g[0] = m12;
                        g[2] = m23;
                    } else if (pick == 2) {
                        v += 1;
                        g[0] = m13;
                        g[1] = m23;
                    } else {
                        g[1] = m12;
                        g[2] = m13;
                    }
                }
                const std::uint64_t corner = uniform_index(rng, 3);
                const double d = g[corner];
                if (corner == 1) u += 1;
                else if (corner == 2) v += 1;
                const double shift = deco->center_shift;
                if (!(d < r + shift)) return std::nullopt;
                Point p(from_lattice({u, v, e}));
                if (shift > 0.0 && !(distance(center, p) < r)) {
                    return std::nullopt;
                }
                return p;
            }};
}

} // namespace perc
