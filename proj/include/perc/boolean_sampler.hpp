#pragma once

#include <cstring>
#include <string>
#include <vector>

#include <json.hpp>

#include "perc/radius_law.hpp"
#include "perc/space.hpp"

namespace perc {

struct Germ {
    Point center;
    double radius = 0.0;
};

// One realization of the Boolean model restricted to a halo ball around
// the observation window.  `influence_bound` caps the probability that
// a germ beyond the halo could still intersect the window, so downstream
// estimators can quote a truncation-bias ceiling.
struct BooleanSample {
    nlohmann::json space;
    double lambda = 0.0;
    RadiusLaw law = RadiusLaw::dirac(1.0);
    Point window_center;
    double window_radius = 0.0;
    double halo_radius = 0.0;
    std::vector<Germ> germs;
    std::uint64_t seed = 0;
    double influence_bound = 0.0;
    double radius_cap = kInf; // sampling truncation point (inf = none)

    nlohmann::json to_json() const;
    static BooleanSample from_json(const nlohmann::json& j);
    std::vector<std::uint8_t> to_binary() const;
    static BooleanSample from_binary(const std::vector<std::uint8_t>& buf);
};

// Exact Poisson draw by inversion; large means are split into sub-30
// chunks whose sum is again exactly Poisson (no normal approximation).
inline std::uint64_t poisson_draw(Rng& rng, double mean) {
    if (!(mean >= 0)) throw DomainError("poisson mean must be nonnegative");
    std::uint64_t total = 0;
    while (mean > 30.0) {
        constexpr double chunk = 25.0;
        std::uint64_t n = 0;
        double p = std::exp(-chunk);
        double cum = p;
        const double u = uniform_open(rng);
        while (u > cum) {
            ++n;
            p *= chunk / static_cast<double>(n);
            cum += p;
            if (n > 10000) throw SamplingError("poisson inversion stalled");
        }
        total += n;
        mean -= chunk;
    }
    std::uint64_t n = 0;
    double p = std::exp(-mean);
    double cum = p;
    const double u = uniform_open(rng);
    while (u > cum) {
        ++n;
        p *= mean / static_cast<double>(n);
        cum += p;
        if (n > 10000) throw SamplingError("poisson inversion stalled");
    }
    return total + n;
}

// Probability bound for a germ beyond the halo reaching the window: any
// such ball needs R > gap/2 around a center in a shell whose mass is at
// most C_V (2R)^s, and the Mecke/Markov step gives
// lambda C_V 2^s E[R^s; R > gap/2].
inline double far_ball_influence_bound(double s, double c_v, double lambda,
                                       const RadiusLaw& law, double gap) {
    if (!(gap > 0)) throw DomainError("halo gap must be positive");
    const double raw =
        lambda * c_v * std::pow(2.0, s) * law.tail_moment(s, gap / 2.0);
    return std::clamp(raw, 0.0, 1.0);
}

inline double far_ball_influence_bound(const Space& space, double lambda,
                                       const RadiusLaw& law,
                                       double window_radius,
                                       double halo_radius) {
    if (!(halo_radius > window_radius)) {
        throw DomainError("halo must exceed the window");
    }
    return far_ball_influence_bound(space.descriptor().ahlfors_exponent,
                                    space.descriptor().regularity_constant,
                                    lambda, law, halo_radius - window_radius);
}

// Draws the Boolean model in B(window_center, halo_factor * window_radius).
// Germ count is exactly Poisson(lambda * mu(halo ball)): a
// Poisson(lambda * dominating_mass) number of dominated proposals is
// thinned by rejection, which also hands back mu-distributed centers on
// backends whose ball masses are only known as intervals.  Unbounded
// radius laws are truncated at their 1 - 1e-6 quantile (conditioning on
// R <= cap); the influence bound is computed from the untruncated law.
inline BooleanSample sample_boolean_model(const Space& space, double lambda,
                                          const RadiusLaw& law,
                                          const Point& window_center,
                                          double window_radius,
                                          double halo_factor, Rng& rng) {
    if (!(lambda > 0)) throw ConfigError("lambda must be positive");
    if (!(window_radius > 0)) throw ConfigError("window radius must be positive");
    if (!(halo_factor >= 1.0)) throw ConfigError("halo factor must be >= 1");

    BooleanSample out;
    out.space = space.to_json();
    out.lambda = lambda;
    out.law = law;
    out.window_center = window_center;
    out.window_radius = window_radius;
    out.halo_radius = halo_factor * window_radius;
    out.influence_bound = far_ball_influence_bound(
        space, lambda, law, window_radius, out.halo_radius);

    double u_scale = 1.0;
    if (!law.bounded()) {
        out.radius_cap = law.quantile(1.0 - 1e-6);
        u_scale = 1.0 - 1e-6;
        // The sample carries the law it was actually drawn from (the
        // conditional law given R <= cap); the influence bound above was
        // already computed from the untruncated law and covers both far
        // balls and the truncated mass.
        if (const auto* p = std::get_if<ParetoLaw>(&law.kind())) {
            out.law = RadiusLaw::pareto_truncated(p->tail_exponent,
                                                  out.radius_cap);
        }
    }

    const Proposal prop = space.proposal(window_center, out.halo_radius);
    if (!std::isfinite(prop.dominating_mass) || !(prop.dominating_mass > 0)) {
        throw ConfigError("halo ball has invalid proposal mass");
    }
    const std::uint64_t proposals =
        poisson_draw(rng, lambda * prop.dominating_mass);
    out.germs.reserve(proposals / 2 + 1);
    for (std::uint64_t i = 0; i < proposals; ++i) {
        auto center = prop.draw(rng);
        if (!center) continue;
        const double radius = law.quantile(uniform_open(rng) * u_scale);
        out.germs.push_back({std::move(*center), radius});
    }
    return out;
}

inline BooleanSample sample_boolean_model(const Space& space, double lambda,
                                          const RadiusLaw& law,
                                          const Point& window_center,
                                          double window_radius,
                                          double halo_factor,
                                          std::uint64_t seed,
                                          std::uint64_t replication = 0) {
    Rng rng = make_stream(seed, replication);
    BooleanSample s = sample_boolean_model(space, lambda, law, window_center,
                                           window_radius, halo_factor, rng);
    s.seed = seed;
    return s;
}

// --- serialization ---------------------------------------------------------

inline nlohmann::json BooleanSample::to_json() const {
    nlohmann::json germs_j = nlohmann::json::array();
    for (const auto& g : germs) {
        germs_j.push_back({{"center", point_to_json(g.center)},
                           {"radius", g.radius}});
    }
    return {{"space", space},
            {"lambda", lambda},
            {"law", law.to_json()},
            {"window_center", point_to_json(window_center)},
            {"window_radius", window_radius},
            {"halo_radius", halo_radius},
            {"germs", std::move(germs_j)},
            {"seed", seed},
            {"influence_bound", influence_bound},
            {"radius_cap", std::isfinite(radius_cap)
                               ? nlohmann::json(radius_cap)
                               : nlohmann::json()}};
}

inline BooleanSample BooleanSample::from_json(const nlohmann::json& j) {
    BooleanSample s;
    s.space = j.at("space");
    s.lambda = j.at("lambda").get<double>();
    s.law = RadiusLaw::from_json(j.at("law"));
    s.window_center = point_from_json(j.at("window_center"));
    s.window_radius = j.at("window_radius").get<double>();
    s.halo_radius = j.at("halo_radius").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.influence_bound = j.at("influence_bound").get<double>();
    s.radius_cap = j.at("radius_cap").is_null()
                       ? kInf
                       : j.at("radius_cap").get<double>();
    for (const auto& g : j.at("germs")) {
        s.germs.push_back({point_from_json(g.at("center")),
                           g.at("radius").get<double>()});
    }
    return s;
}

namespace detail {

// Little-endian scalar plumbing for the "PBM1" dump (asserted at build
// time via the serialization round-trip tests on the target platform).
template <typename T>
void put(std::vector<std::uint8_t>& buf, T v) {
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    buf.insert(buf.end(), raw, raw + sizeof(T));
}

template <typename T>
T get(const std::vector<std::uint8_t>& buf, std::size_t& pos) {
    if (pos + sizeof(T) > buf.size()) {
        throw ConfigError("truncated binary sample");
    }
    T v;
    std::memcpy(&v, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
}

inline void put_str(std::vector<std::uint8_t>& buf, const std::string& s) {
    put<std::uint64_t>(buf, s.size());
    buf.insert(buf.end(), s.begin(), s.end());
}

inline std::string get_str(const std::vector<std::uint8_t>& buf,
                           std::size_t& pos) {
    const auto n = get<std::uint64_t>(buf, pos);
    if (pos + n > buf.size()) throw ConfigError("truncated binary sample");
    std::string s(buf.begin() + static_cast<std::ptrdiff_t>(pos),
                  buf.begin() + static_cast<std::ptrdiff_t>(pos + n));
    pos += n;
    return s;
}

inline void put_point(std::vector<std::uint8_t>& buf, const Point& p) {
    if (const auto* e = std::get_if<EuclideanCoords>(&p)) {
        put<std::uint8_t>(buf, 0);
        put<std::uint8_t>(buf, static_cast<std::uint8_t>(e->x.size()));
        for (double c : e->x) put<double>(buf, c);
    } else if (const auto* d = std::get_if<DyadicWord>(&p)) {
        put<std::uint8_t>(buf, 1);
        put<std::uint32_t>(buf, static_cast<std::uint32_t>(d->one_bits.size()));
        for (int b : d->one_bits) put<std::int32_t>(buf, b);
    } else if (const auto* g = std::get_if<GasketAddress>(&p)) {
        put<std::uint8_t>(buf, 2);
        put<std::int32_t>(buf, g->level);
        put<std::uint32_t>(buf, static_cast<std::uint32_t>(g->digits.size()));
        for (std::uint8_t dg : g->digits) put<std::uint8_t>(buf, dg);
        put<double>(buf, g->ambient[0]);
        put<double>(buf, g->ambient[1]);
    } else {
        put<std::uint8_t>(buf, 3);
        put<std::uint8_t>(buf,
                          static_cast<std::uint8_t>(std::get<TwoPointSite>(p).site));
    }
}

inline Point get_point(const std::vector<std::uint8_t>& buf, std::size_t& pos) {
    switch (get<std::uint8_t>(buf, pos)) {
    case 0: {
        EuclideanCoords e;
        const int dim = get<std::uint8_t>(buf, pos);
        e.x.reserve(dim);
        for (int i = 0; i < dim; ++i) e.x.push_back(get<double>(buf, pos));
        return e;
    }
    case 1: {
        DyadicWord w;
        const auto n = get<std::uint32_t>(buf, pos);
        w.one_bits.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i) {
            w.one_bits.push_back(get<std::int32_t>(buf, pos));
        }
        return w;
    }
    case 2: {
        GasketAddress g;
        g.level = get<std::int32_t>(buf, pos);
        const auto n = get<std::uint32_t>(buf, pos);
        g.digits.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i) {
            g.digits.push_back(get<std::uint8_t>(buf, pos));
        }
        g.ambient[0] = get<double>(buf, pos);
        g.ambient[1] = get<double>(buf, pos);
        return g;
    }
    case 3:
        return TwoPointSite{get<std::uint8_t>(buf, pos)};
    default:
        throw ConfigError("unknown point tag in binary sample");
    }
}

} // namespace detail

inline std::vector<std::uint8_t> BooleanSample::to_binary() const {
    std::vector<std::uint8_t> buf;
    buf.insert(buf.end(), {'P', 'B', 'M', '1'});
    detail::put_str(buf, space.dump());
    detail::put<double>(buf, lambda);
    detail::put_str(buf, law.to_json().dump());
    detail::put_point(buf, window_center);
    detail::put<double>(buf, window_radius);
    detail::put<double>(buf, halo_radius);
    detail::put<std::uint64_t>(buf, seed);
    detail::put<double>(buf, influence_bound);
    detail::put<double>(buf, radius_cap);
    detail::put<std::uint64_t>(buf, germs.size());
    for (const auto& g : germs) {
        detail::put_point(buf, g.center);
        detail::put<double>(buf, g.radius);
    }
    return buf;
}

inline BooleanSample
BooleanSample::from_binary(const std::vector<std::uint8_t>& buf) {
    if (buf.size() < 4 || buf[0] != 'P' || buf[1] != 'B' || buf[2] != 'M' ||
        buf[3] != '1') {
        throw ConfigError("bad binary sample header");
    }
    std::size_t pos = 4;
    BooleanSample s;
    s.space = nlohmann::json::parse(detail::get_str(buf, pos));
    s.lambda = detail::get<double>(buf, pos);
    s.law = RadiusLaw::from_json(
        nlohmann::json::parse(detail::get_str(buf, pos)));
    s.window_center = detail::get_point(buf, pos);
    s.window_radius = detail::get<double>(buf, pos);
    s.halo_radius = detail::get<double>(buf, pos);
    s.seed = detail::get<std::uint64_t>(buf, pos);
    s.influence_bound = detail::get<double>(buf, pos);
    s.radius_cap = detail::get<double>(buf, pos);
    const auto n = detail::get<std::uint64_t>(buf, pos);
    s.germs.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        Point c = detail::get_point(buf, pos);
        const double r = detail::get<double>(buf, pos);
        s.germs.push_back({std::move(c), r});
    }
    return s;
}

} // namespace perc
