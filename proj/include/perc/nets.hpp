#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "perc/space.hpp"

namespace perc {

// Covering-condition report: a finite set O of annulus points that is
// eps*l-separated while the balls B(y, l), y in O, cover the annulus
// B(x, sigma*r_scale) \ B(x, r_scale) (validated against fresh probes).
struct NetReport {
    std::vector<Point> points;
    double separation = 0.0;      // smallest pairwise distance in O
    double covering_radius = 0.0; // the l of the covering clause
    std::size_t cardinality = 0;
    // condition parameters
    Point center;
    double l = 0.0;
    double r_scale = 0.0;
    double eps = 0.0;
    bool passed = false;

    nlohmann::json to_json() const {
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& p : points) pts.push_back(point_to_json(p));
        return {{"points", std::move(pts)},
                {"separation", separation},
                {"covering_radius", covering_radius},
                {"cardinality", cardinality},
                {"center", point_to_json(center)},
                {"l", l},
                {"r_scale", r_scale},
                {"eps", eps},
                {"passed", passed}};
    }
};

namespace detail {

// Embedding prefilter: index_coords gives d_embed <= d, so a pair far
// apart in the embedding is certified separated, and a pair far apart
// is certified uncovered, without an exact distance call.
inline double embed_distance(const std::optional<std::vector<double>>& a,
                             const std::optional<std::vector<double>>& b) {
    if (!a || !b || a->size() != b->size()) return 0.0;
    double d2 = 0.0;
    for (std::size_t i = 0; i < a->size(); ++i) {
        const double t = (*a)[i] - (*b)[i];
        d2 += t * t;
    }
    return std::sqrt(d2);
}

inline std::vector<Point> annulus_probes(const Space& space, const Point& x,
                                         double r_in, double r_out,
                                         std::size_t want, Rng& rng) {
    const Proposal prop = space.proposal(x, r_out);
    std::vector<Point> probes;
    probes.reserve(want);
    const std::size_t cap = std::max<std::size_t>(want * 200, 20000);
    for (std::size_t i = 0; i < cap && probes.size() < want; ++i) {
        auto p = prop.draw(rng);
        if (!p) continue;
        const double d = space.distance(x, *p);
        if (d >= r_in && d < r_out) probes.push_back(std::move(*p));
    }
    return probes;
}

} // namespace detail

// Greedy maximal eps*l-separated subset of probe points of the annulus
// B(x, sigma*r_scale) \ B(x, r_scale), with the covering clause
// re-validated against an independent probe set.
inline NetReport greedy_net(const Space& space, const Point& x, double l,
                            double r_scale, double eps,
                            std::size_t probe_budget, Rng& rng,
                            double sigma_override = 0.0) {
    if (!(l > 0 && r_scale > 0)) throw DomainError("net scales must be positive");
    if (!(eps > 0 && eps <= 1)) throw DomainError("eps must lie in (0,1]");
    NetReport rep;
    rep.center = x;
    rep.l = l;
    rep.r_scale = r_scale;
    rep.eps = eps;
    rep.covering_radius = l;

    const double sigma = sigma_override > 1.0 ? sigma_override : space.sigma();
    const double r_out = sigma * r_scale;
    const double sep = eps * l;

    auto build_probes = detail::annulus_probes(space, x, r_scale, r_out,
                                               probe_budget, rng);
    if (build_probes.empty()) {
        throw GeometryError("annulus B(x," + std::to_string(r_out) +
                            ") \\ B(x," + std::to_string(r_scale) +
                            ") produced no probe points");
    }

    std::vector<std::optional<std::vector<double>>> net_embed;
    for (auto& p : build_probes) {
        const auto pe = space.index_coords(p);
        bool separated = true;
        for (std::size_t i = 0; i < rep.points.size(); ++i) {
            if (detail::embed_distance(pe, net_embed[i]) >= sep) continue;
            if (space.distance(p, rep.points[i]) < sep) {
                separated = false;
                break;
            }
        }
        if (separated) {
            rep.points.push_back(std::move(p));
            net_embed.push_back(pe);
        }
    }
    rep.cardinality = rep.points.size();

    rep.separation = kInf;
    for (std::size_t i = 0; i < rep.points.size(); ++i) {
        for (std::size_t j = i + 1; j < rep.points.size(); ++j) {
            rep.separation = std::min(
                rep.separation, space.distance(rep.points[i], rep.points[j]));
        }
    }
    if (rep.points.size() < 2) rep.separation = kInf;

    // Fresh probes for the covering clause.
    auto check_probes = detail::annulus_probes(space, x, r_scale, r_out,
                                               probe_budget, rng);
    bool covered_all = true;
    for (const auto& p : check_probes) {
        const auto pe = space.index_coords(p);
        bool covered = false;
        for (std::size_t i = 0; i < rep.points.size(); ++i) {
            // Greedy maximality leaves every probe within sep <= l of
            // the net, but validate against l directly.
            if (detail::embed_distance(pe, net_embed[i]) > l) continue;
            if (space.distance(p, rep.points[i]) <= l) {
                covered = true;
                break;
            }
        }
        if (!covered) {
            covered_all = false;
            break;
        }
    }
    rep.passed = covered_all && rep.separation >= sep;
    return rep;
}

inline NetReport greedy_net(const Space& space, const Point& x, double l,
                            double r_scale, double eps,
                            std::size_t probe_budget = 2000,
                            std::uint64_t seed = 0x6E657473ULL) {
    Rng rng = make_stream(seed, 0);
    return greedy_net(space, x, l, r_scale, eps, probe_budget, rng);
}

// The K and L nets: 1/5-condition nets with l = r at the two dilation
// scales, whose 10 sigma^3 r neighborhoods must be mutually disjoint.
inline std::pair<NetReport, NetReport> nets_K_L(const Space& space,
                                                const Point& x, double r,
                                                double sigma,
                                                std::size_t probe_budget = 2000,
                                                std::uint64_t seed = 0x6B6CULL) {
    if (!(r > 0)) throw DomainError("net scale must be positive");
    Rng rng = make_stream(seed, 0);
    const double s3 = sigma * sigma * sigma;
    NetReport K = greedy_net(space, x, r, 10.0 * s3 * r, 0.2, probe_budget,
                             rng, sigma);
    NetReport L = greedy_net(space, x, r, 80.0 * s3 * sigma * r, 0.2,
                             probe_budget, rng, sigma);
    const double dilation = 10.0 * s3 * r;
    for (const auto& y : K.points) {
        for (const auto& z : L.points) {
            if (space.distance(y, z) <= 2.0 * dilation) {
                throw GeometryError(
                    "K and L net dilations are not disjoint");
            }
        }
    }
    return {std::move(K), std::move(L)};
}

// Constructive chaining constant: the max of #K * #L over random
// centers and scales; feeds lambda0 and the scaling inequality.
inline double measure_c1(const Space& space, double sigma, int trials = 20,
                         std::size_t probe_budget = 2000,
                         std::uint64_t seed = 0xC1C1ULL) {
    Rng rng = make_stream(seed, 1);
    double c1 = 1.0;
    for (int t = 0; t < trials; ++t) {
        const double r = std::pow(10.0, 2.0 * uniform01(rng) - 1.0);
        const Point x = space.sample_point(space.origin(), 10.0 * r, rng);
        const auto [K, L] =
            nets_K_L(space, x, r, sigma, probe_budget, splitmix64(seed + t));
        c1 = std::max(c1, static_cast<double>(K.cardinality) *
                              static_cast<double>(L.cardinality));
    }
    return c1;
}

struct AhlforsReport {
    double s_hat = 0.0;
    double c_v_hat = 1.0;
    int violations = 0; // sandwich failures against the declared (s, C_V)
};

// Least-squares fit of log mu(B(x,r)) against log r over random centers
// and the given radius grid, plus a sandwich check against the
// declared constants.
inline AhlforsReport check_ahlfors(const Space& space, int trials,
                                   const std::vector<double>& r_grid,
                                   std::uint64_t seed = 0xA51FULL) {
    if (trials < 100) throw DomainError("check_ahlfors needs trials >= 100");
    if (r_grid.empty()) throw DomainError("radius grid must be non-empty");
    Rng rng = make_stream(seed, 2);
    const double s_decl = space.descriptor().ahlfors_exponent;
    const double cv_decl = space.descriptor().regularity_constant;

    std::vector<double> lx, ly;
    AhlforsReport rep;
    for (int t = 0; t < trials; ++t) {
        const Point x = space.sample_point(space.origin(), 10.0, rng);
        const double r = r_grid[t % r_grid.size()];
        const MassInterval m = space.ball_measure(x, r);
        lx.push_back(std::log(r));
        ly.push_back(std::log(m.mid()));
        const double lo_ref = std::pow(r, s_decl) / cv_decl;
        const double hi_ref = cv_decl * std::pow(r, s_decl);
        if (m.hi < lo_ref * (1.0 - 1e-9) || m.lo > hi_ref * (1.0 + 1e-9)) {
            ++rep.violations;
        }
    }
    const double n = static_cast<double>(lx.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    rep.s_hat = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    for (std::size_t i = 0; i < lx.size(); ++i) {
        const double ratio = std::exp(ly[i] - rep.s_hat * lx[i]);
        rep.c_v_hat = std::max({rep.c_v_hat, ratio, 1.0 / ratio});
    }
    return rep;
}

struct PerfectnessReport {
    bool ok = true;
    Point worst_x;
    double worst_r = 0.0;
};

// Random (x, r) over six decades of r; each annulus between r and
// sigma r around x must yield a witness point within the probe budget.
inline PerfectnessReport check_uniformly_perfect(const Space& space,
                                                 double sigma, int trials,
                                                 std::uint64_t seed = 0x9EFULL) {
    if (!(sigma > 1)) throw DomainError("sigma must exceed 1");
    Rng rng = make_stream(seed, 3);
    PerfectnessReport rep;
    rep.worst_x = space.origin();
    const std::size_t budget_total = 100000;
    const std::size_t budget = std::max<std::size_t>(
        budget_total / static_cast<std::size_t>(trials), 50);
    for (int t = 0; t < trials; ++t) {
        const double r = std::pow(10.0, 6.0 * uniform01(rng) - 3.0);
        const Point x = space.sample_point(space.origin(), 5.0 * r, rng);
        bool found = false;
        try {
            const Proposal prop = space.proposal(x, sigma * r);
            for (std::size_t i = 0; i < budget && !found; ++i) {
                auto p = prop.draw(rng);
                if (!p) continue;
                const double d = space.distance(x, *p);
                if (d >= r && d < sigma * r) found = true;
            }
        } catch (const SamplingError&) {
            found = false;
        }
        if (!found) {
            rep.ok = false;
            rep.worst_x = x;
            rep.worst_r = r;
            return rep;
        }
    }
    return rep;
}

// Greedy maximal eps*r-separated subset of B(x,r); its size is the
// covering/packing count at resolution eps.
inline std::size_t covering_number(const Space& space, const Point& x,
                                   double r, double eps,
                                   std::size_t probe_budget, Rng& rng) {
    if (!(eps > 0 && eps < 1)) throw DomainError("eps must lie in (0,1)");
    const double sep = eps * r;
    const Proposal prop = space.proposal(x, r);
    std::vector<Point> net;
    std::vector<std::optional<std::vector<double>>> net_embed;
    std::size_t seen = 0;
    for (std::size_t i = 0; i < probe_budget * 4 && seen < probe_budget; ++i) {
        auto p = prop.draw(rng);
        if (!p) continue;
        ++seen;
        if (space.distance(x, *p) >= r) continue;
        const auto pe = space.index_coords(*p);
        bool separated = true;
        for (std::size_t k = 0; k < net.size(); ++k) {
            if (detail::embed_distance(pe, net_embed[k]) >= sep) continue;
            if (space.distance(*p, net[k]) < sep) {
                separated = false;
                break;
            }
        }
        if (separated) {
            net.push_back(std::move(*p));
            net_embed.push_back(pe);
        }
    }
    return net.size();
}

struct CoveringFit {
    std::vector<double> eps;
    std::vector<std::size_t> counts;
    double c = 1.0;
    double net_exponent = 0.0;
};

// Regression of log count against log(1/eps) over eps = 1/2 .. eps_min
// (halving steps).  eps_min trades resolution against the probe budget;
// high-dimensional backends need a coarser floor.
inline CoveringFit covering_fit(const Space& space, const Point& x, double r,
                                std::size_t probe_budget = 4000,
                                std::uint64_t seed = 0xC0Fe1ULL,
                                double eps_min = 1.0 / 64.0) {
    CoveringFit fit;
    Rng rng = make_stream(seed, 4);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (double eps = 0.5; eps >= eps_min - 1e-12; eps /= 2.0) {
        const std::size_t budget = std::max<std::size_t>(
            probe_budget, static_cast<std::size_t>(50.0 / (eps * eps)));
        const std::size_t count =
            covering_number(space, x, r, eps, budget, rng);
        fit.eps.push_back(eps);
        fit.counts.push_back(count);
        const double lx = std::log(1.0 / eps);
        const double ly = std::log(static_cast<double>(std::max<std::size_t>(count, 1)));
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double n = static_cast<double>(fit.eps.size());
    fit.net_exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    fit.c = std::exp((sy - fit.net_exponent * sx) / n);
    return fit;
}

} // namespace perc
