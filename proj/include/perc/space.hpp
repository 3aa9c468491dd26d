#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "perc/common.hpp"
#include "perc/point.hpp"
#include "perc/rng.hpp"

namespace perc {

struct SpaceDescriptor {
    std::string kind;
    double ahlfors_exponent = 0.0;   // s
    double regularity_constant = 1.0; // C_V
    double sigma = 2.0;              // uniform-perfectness parameter
    bool geodesic = false;           // d(x,z) < R1+R2 characterizes ball intersection
    double unit_ball_mass = 0.0;     // mu(B(origin, 1))
};

// Dominated proposal scheme for Poisson sampling in a window ball.
// `draw` either produces a point of the ball or reports a thinned-away
// proposal; a Poisson(lambda * dominating_mass) number of proposals with
// rejections discarded is distributed exactly as the restriction of the
// Poisson process to the ball.
struct Proposal {
    double dominating_mass = 0.0;
    std::function<std::optional<Point>(Rng&)> draw;
};

struct AnnulusDecision {
    bool meets = false;
    double resolution = 0.0; // witness-net resolution; 0 for exact tests
};

class Space {
public:
    virtual ~Space() = default;

    const SpaceDescriptor& descriptor() const { return desc_; }
    double sigma() const { return desc_.sigma; }

    // Any sigma' in (1, sigma] certifies the same uniform perfectness;
    // configs may tighten it to shrink the event-geometry scales.
    void set_sigma(double sigma) {
        if (!(sigma > 1.0)) throw DomainError("sigma must exceed 1");
        desc_.sigma = sigma;
    }

    virtual Point origin() const = 0;

    double distance(const Point& p, const Point& q) const {
        return distance_impl(p, q);
    }

    MassInterval ball_measure(const Point& x, double r) const {
        if (!(r > 0)) throw DomainError("ball_measure requires r > 0");
        return ball_measure_impl(x, r);
    }

    virtual Proposal proposal(const Point& center, double r) const = 0;

    // mu-distributed point of B(center, r); rejection with a hard cap.
    Point sample_point(const Point& center, double r, Rng& rng) const {
        const Proposal prop = proposal(center, r);
        if (!(prop.dominating_mass > 0)) {
            throw SamplingError("window ball has zero proposal mass");
        }
        for (std::size_t tries = 0; tries < kRejectionCap; ++tries) {
            if (auto p = prop.draw(rng)) return *p;
        }
        throw SamplingError("rejection cap exhausted sampling " + desc_.kind +
                            " window of radius " + std::to_string(r));
    }

    virtual bool balls_intersect(const Point& c1, double r1, const Point& c2,
                                 double r2) const {
        if (!(r1 > 0 && r2 > 0)) throw DomainError("radii must be positive");
        // Geodesic rule; non-geodesic backends override.
        return distance(c1, c2) < r1 + r2;
    }

    // sup_{y in B(c,r)} d(x,y).  Default is the triangle envelope.
    virtual double ball_sup_distance(const Point& x, const Point& c,
                                     double r) const {
        return distance(x, c) + r;
    }

    // Whether ball_sup_distance is an unattained upper envelope rather
    // than the exact supremum.
    virtual bool sup_distance_is_envelope() const { return false; }

    bool ball_meets_annulus(const Point& c, double r, const Point& center,
                            double r_in, double r_out) const {
        return annulus_decision(c, r, center, r_in, r_out).meets;
    }

    AnnulusDecision annulus_decision(const Point& c, double r,
                                     const Point& center, double r_in,
                                     double r_out) const {
        if (!(r > 0)) throw DomainError("ball radius must be positive");
        if (!(0 < r_in && r_in < r_out)) {
            throw GeometryError("degenerate annulus [" + std::to_string(r_in) +
                                ", " + std::to_string(r_out) + ")");
        }
        return annulus_impl(c, r, center, r_in, r_out);
    }

    // Euclidean embedding used by the clustering grid for candidate
    // pruning; must satisfy d_embed <= d together with index_radius so
    // no intersecting pair is pruned.  nullopt means no embedding
    // (ultrametric backends use cylinder keys instead).
    virtual std::optional<std::vector<double>> index_coords(const Point&) const {
        return std::nullopt;
    }
    virtual double index_radius(double r) const { return r; }

    virtual bool ultrametric() const { return false; }
    // Cylinder level of a ball: the ball B(c,r) equals the set of points
    // agreeing with c at all indices above the level.
    virtual int cylinder_level(double /*r*/) const {
        throw UsageError(desc_.kind + " is not ultrametric");
    }
    virtual std::uint64_t prefix_key(const Point&, int /*level*/) const {
        throw UsageError(desc_.kind + " is not ultrametric");
    }

    virtual nlohmann::json to_json() const = 0;

protected:
    explicit Space(SpaceDescriptor desc) : desc_(std::move(desc)) {}

    virtual double distance_impl(const Point& p, const Point& q) const = 0;
    virtual MassInterval ball_measure_impl(const Point& x, double r) const = 0;
    virtual AnnulusDecision annulus_impl(const Point& c, double r,
                                         const Point& center, double r_in,
                                         double r_out) const;

    static constexpr std::size_t kRejectionCap = 1'000'000;

    SpaceDescriptor desc_;
};

using SpacePtr = std::shared_ptr<const Space>;

// Witness-net fallback: probe B(c,r) at resolution min(r, r_in)/20 and
// report a certified hit or "no witness found".  The probe stream is
// seeded from the query so the predicate is deterministic.
inline AnnulusDecision Space::annulus_impl(const Point& c, double r,
                                           const Point& center, double r_in,
                                           double r_out) const {
    const double delta = std::min(r, r_in) / 20.0;
    const double s = desc_.ahlfors_exponent;
    const double per_cell = std::pow(r / delta, s);
    const std::size_t budget = static_cast<std::size_t>(
        std::clamp(50.0 * per_cell, 200.0, 20000.0));

    std::uint64_t h = splitmix64(0x616E6E756C7573ULL);
    for (double v : {r, r_in, r_out, distance(c, center)}) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(v));
        std::memcpy(&bits, &v, sizeof(bits));
        h = splitmix64(h ^ bits);
    }
    Rng rng(h);

    const Proposal prop = proposal(c, r);
    std::size_t seen = 0;
    for (std::size_t i = 0; i < budget * 4 && seen < budget; ++i) {
        auto p = prop.draw(rng);
        if (!p) continue;
        ++seen;
        const double d = distance(center, *p);
        if (d >= r_in && d < r_out) return {true, delta};
    }
    return {false, delta};
}

} // namespace perc
