#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <unordered_map>
#include <vector>

#include "perc/boolean_sampler.hpp"
#include "perc/space.hpp"

namespace perc {

namespace detail {

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }
    std::size_t find(std::size_t i) {
        while (parent_[i] != i) {
            parent_[i] = parent_[parent_[i]];
            i = parent_[i];
        }
        return i;
    }
    void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

private:
    std::vector<std::size_t> parent_;
};

} // namespace detail

// Component label per germ; two germs share a label iff a percolative
// chain of pairwise-intersecting balls links them.  Candidate pairs come
// from a spatial index (coordinate grid or ultrametric cylinder
// buckets), every candidate is confirmed with balls_intersect, and the
// index is conservative: the embedding satisfies d_embed <= d, so no
// intersecting pair is pruned.
inline std::vector<std::size_t> connected_components(const Space& space,
                                                     const std::vector<Germ>& germs) {
    const std::size_t n = germs.size();
    detail::UnionFind uf(n);
    auto confirm = [&](std::size_t i, std::size_t j) {
        if (uf.find(i) == uf.find(j)) return;
        if (space.balls_intersect(germs[i].center, germs[i].radius,
                                  germs[j].center, germs[j].radius)) {
            uf.unite(i, j);
        }
    };

    if (n > 1 && space.ultrametric()) {
        // A ball is a cylinder; two balls meet iff the coarser cylinder
        // contains the finer one, i.e. they agree above the coarser
        // level.  Bucket everything at each germ's own level.
        std::vector<int> level(n);
        for (std::size_t i = 0; i < n; ++i) {
            level[i] = space.cylinder_level(germs[i].radius);
        }
        std::vector<int> levels(level.begin(), level.end());
        std::sort(levels.begin(), levels.end());
        levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
        for (int L : levels) {
            std::unordered_map<std::uint64_t, std::vector<std::size_t>> bucket;
            for (std::size_t i = 0; i < n; ++i) {
                if (level[i] <= L) {
                    bucket[space.prefix_key(germs[i].center, L)].push_back(i);
                }
            }
            for (const auto& [key, members] : bucket) {
                // A germ whose own cylinder sits at this level meets
                // every member of the bucket (they all lie inside its
                // ball), so it can serve as the union hub.
                const auto hub =
                    std::find_if(members.begin(), members.end(),
                                 [&](std::size_t i) { return level[i] == L; });
                if (hub == members.end()) continue;
                for (std::size_t i : members) {
                    if (i != *hub) confirm(*hub, i);
                }
            }
        }
    } else if (n > 1) {
        std::vector<std::vector<double>> pos(n);
        std::vector<double> rad(n);
        bool have_coords = true;
        for (std::size_t i = 0; i < n; ++i) {
            auto c = space.index_coords(germs[i].center);
            if (!c) {
                have_coords = false;
                break;
            }
            pos[i] = std::move(*c);
            rad[i] = space.index_radius(germs[i].radius);
        }
        if (!have_coords) {
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = i + 1; j < n; ++j) confirm(i, j);
            }
        } else {
            std::vector<double> sorted = rad;
            std::nth_element(sorted.begin(), sorted.begin() + n / 2,
                             sorted.end());
            const double cell = std::max(sorted[n / 2], 1e-12);
            const std::size_t dim = pos[0].size();
            auto cell_key = [&](const std::vector<double>& x,
                                const std::vector<long long>& off) {
                std::uint64_t h = 0x243F6A8885A308D3ULL;
                for (std::size_t d = 0; d < dim; ++d) {
                    const long long c =
                        static_cast<long long>(std::floor(x[d] / cell)) +
                        off[d];
                    h = splitmix64(h ^ static_cast<std::uint64_t>(c));
                }
                return h;
            };
            std::unordered_map<std::uint64_t, std::vector<std::size_t>> grid;
            std::vector<std::size_t> oversize;
            const std::vector<long long> zero(dim, 0);
            for (std::size_t i = 0; i < n; ++i) {
                if (rad[i] > cell) oversize.push_back(i);
                grid[cell_key(pos[i], zero)].push_back(i);
            }
            // Two in-grid balls meet only if their cells are within
            // Chebyshev distance 2 (radii <= cell each, so d <= 2 cell).
            std::vector<long long> off(dim, -2);
            for (std::size_t i = 0; i < n; ++i) {
                if (rad[i] > cell) continue;
                std::fill(off.begin(), off.end(), -2);
                for (;;) {
                    auto it = grid.find(cell_key(pos[i], off));
                    if (it != grid.end()) {
                        for (std::size_t j : it->second) {
                            if (j > i && rad[j] <= cell) confirm(i, j);
                        }
                    }
                    std::size_t d = 0;
                    while (d < dim && ++off[d] > 2) {
                        off[d] = -2;
                        ++d;
                    }
                    if (d == dim) break;
                }
            }
            for (std::size_t i : oversize) {
                for (std::size_t j = 0; j < n; ++j) {
                    if (j != i) confirm(i, j);
                }
            }
        }
    }

    std::vector<std::size_t> label(n);
    std::unordered_map<std::size_t, std::size_t> remap;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t root = uf.find(i);
        auto [it, inserted] = remap.try_emplace(root, remap.size());
        label[i] = it->second;
    }
    return label;
}

inline std::vector<std::size_t> connected_components(const Space& space,
                                                     const BooleanSample& s) {
    return connected_components(space, s.germs);
}

struct ClusterReport {
    Point anchor;
    double m_value = 0.0;
    bool censored = false;
    std::size_t component_size = 0;
    bool envelope_flag = false;

    nlohmann::json to_json() const {
        return {{"anchor", point_to_json(anchor)},
                {"m_value", m_value},
                {"censored", censored},
                {"component_size", component_size},
                {"envelope_flag", envelope_flag}};
    }
};

// M(anchor) on one realization: zero when the anchor lies in no ball
// (sup of the empty set), otherwise the max sup-distance over the balls
// of the anchor's component.  Censoring is conservative: flagged when a
// component ball can reach the halo boundary, or when the sample's law
// is unbounded and the far-ball influence bound is positive.
inline ClusterReport cluster_radius(const Space& space, const BooleanSample& s,
                                    const Point& anchor) {
    ClusterReport rep;
    rep.anchor = anchor;
    rep.envelope_flag = space.sup_distance_is_envelope();
    if (s.germs.empty()) return rep;

    const auto label = connected_components(space, s.germs);
    std::size_t anchor_comp = 0;
    bool covered = false;
    for (std::size_t i = 0; i < s.germs.size(); ++i) {
        if (space.distance(anchor, s.germs[i].center) < s.germs[i].radius) {
            anchor_comp = label[i];
            covered = true;
            break;
        }
    }
    if (!covered) return rep;

    for (std::size_t i = 0; i < s.germs.size(); ++i) {
        if (label[i] != anchor_comp) continue;
        ++rep.component_size;
        rep.m_value = std::max(
            rep.m_value, space.ball_sup_distance(anchor, s.germs[i].center,
                                                 s.germs[i].radius));
        const double to_boundary =
            s.halo_radius - space.distance(s.window_center, s.germs[i].center);
        if (to_boundary < s.germs[i].radius) rep.censored = true;
    }
    if (s.influence_bound > 0 && !s.law.bounded()) rep.censored = true;
    return rep;
}

// Largest radius the sample could have drawn; used to check that event
// neighborhoods sit safely inside the halo.
inline double max_possible_radius(const BooleanSample& s) {
    double cap = std::min(s.radius_cap, s.law.bounded() ? s.law.support_sup()
                                                        : kInf);
    if (std::isfinite(cap)) return cap;
    double m = 0.0;
    for (const auto& g : s.germs) m = std::max(m, g.radius);
    return m;
}

inline void require_halo_covers(const Space& space, const BooleanSample& s,
                                const Point& x, double reach) {
    const double need = space.distance(s.window_center, x) + reach +
                        max_possible_radius(s);
    if (need > s.halo_radius) {
        throw CoverageError("event neighborhood (reach " +
                            std::to_string(reach) +
                            ") is not covered by the halo; enlarge the window");
    }
}

// G(x,r): inside B(x, 10 sigma^3 r), some chain of balls joins B(x,r) to
// the annulus between 8 sigma r and 9 sigma^2 r.
inline bool event_G(const Space& space, const BooleanSample& s, const Point& x,
                    double r, double sigma) {
    if (!(r > 0)) throw DomainError("event scale must be positive");
    const double reach = 10.0 * std::pow(sigma, 3.0) * r;
    require_halo_covers(space, s, x, reach);

    std::vector<Germ> local;
    for (const auto& g : s.germs) {
        if (space.distance(x, g.center) < reach) local.push_back(g);
    }
    if (local.empty()) return false;
    const auto label = connected_components(space, local);
    std::size_t ncomp = 0;
    for (std::size_t l : label) ncomp = std::max(ncomp, l + 1);
    std::vector<char> hits_center(ncomp, 0), hits_annulus(ncomp, 0);
    const double a_in = 8.0 * sigma * r;
    const double a_out = 9.0 * sigma * sigma * r;
    for (std::size_t i = 0; i < local.size(); ++i) {
        if (!hits_center[label[i]] &&
            space.balls_intersect(local[i].center, local[i].radius, x, r)) {
            hits_center[label[i]] = 1;
        }
        if (!hits_annulus[label[i]] &&
            space.ball_meets_annulus(local[i].center, local[i].radius, x, a_in,
                                     a_out)) {
            hits_annulus[label[i]] = 1;
        }
        if (hits_center[label[i]] && hits_annulus[label[i]]) return true;
    }
    return false;
}

inline double tau_of(double sigma) { return sigma / (10.0 * sigma - 9.0); }

// H(x,r): some germ beyond B(x, 10 sigma^3 r) carries a radius exceeding
// d(x, center) / (10 tau).
inline bool event_H(const Space& space, const BooleanSample& s, const Point& x,
                    double r, double sigma) {
    if (!(r > 0)) throw DomainError("event scale must be positive");
    const double reach = 10.0 * std::pow(sigma, 3.0) * r;
    const double tau = tau_of(sigma);
    for (const auto& g : s.germs) {
        const double d = space.distance(x, g.center);
        if (d >= reach && g.radius > d / (10.0 * tau)) return true;
    }
    return false;
}

// H~(x,r): some germ in B(x, 100 sigma^6 r) has radius >= r.
inline bool event_Htilde(const Space& space, const BooleanSample& s,
                         const Point& x, double r, double sigma) {
    if (!(r > 0)) throw DomainError("event scale must be positive");
    const double reach = 100.0 * std::pow(sigma, 6.0) * r;
    for (const auto& g : s.germs) {
        if (g.radius >= r && space.distance(x, g.center) < reach) return true;
    }
    return false;
}

// Sufficient single-ball cover of B(o,r): a germ with d(o,center) < R - r.
inline bool single_ball_covers(const Space& space, const BooleanSample& s,
                               const Point& o, double r) {
    if (!(r > 0)) throw DomainError("radius must be positive");
    for (const auto& g : s.germs) {
        if (space.distance(o, g.center) < g.radius - r) return true;
    }
    return false;
}

} // namespace perc
