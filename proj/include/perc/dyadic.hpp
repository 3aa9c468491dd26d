#pragma once

#include <cmath>

#include "perc/space.hpp"

namespace perc {

// Finitely supported two-sided binary expansions under the valuation
// metric d(x,y) = 2^(highest index where the words differ).  The group
// operation is xor, the metric is an ultrametric, and the Haar-style
// measure is normalized so a closed ball of radius 2^k has mass 2^k,
// giving s = 1, C_V = 2.  Sampling fills bits down to `min_index`;
// measures and predicates are exact in the idealized space.
class DyadicSpace : public Space {
public:
    explicit DyadicSpace(int min_index = -20)
        : Space(make_descriptor()), min_index_(min_index) {}

    int min_index() const { return min_index_; }

    Point origin() const override { return DyadicWord{}; }

    // Largest distance-spectrum value strictly below r (the spectrum is
    // the powers of two).
    static double pred(double r) {
        if (!(r > 0)) throw DomainError("pred requires r > 0");
        int e = 0;
        const double m = std::frexp(r, &e); // r = m * 2^e, m in [0.5, 1)
        return m == 0.5 ? std::ldexp(1.0, e - 2) : std::ldexp(1.0, e - 1);
    }

    Proposal proposal(const Point& center, double r) const override {
        const auto& c = word(center);
        const int level = cylinder_level(r);
        const double mass = std::ldexp(1.0, level);
        return {mass, [this, c, level](Rng& rng) -> std::optional<Point> {
                    DyadicWord w;
                    for (int idx : c.one_bits) {
                        if (idx > level) w.one_bits.push_back(idx);
                    }
                    // ascending order: random low bits first
                    DyadicWord low;
                    for (int i = min_index_; i <= level; ++i) {
                        if (fair_bit(rng)) low.one_bits.push_back(i);
                    }
                    low.one_bits.insert(low.one_bits.end(), w.one_bits.begin(),
                                        w.one_bits.end());
                    return Point(std::move(low));
                }};
    }

    bool balls_intersect(const Point& c1, double r1, const Point& c2,
                         double r2) const override {
        if (!(r1 > 0 && r2 > 0)) throw DomainError("radii must be positive");
        // Balls nest: intersection forces containment.
        return distance(c1, c2) < std::max(r1, r2);
    }

    double ball_sup_distance(const Point& x, const Point& c,
                             double r) const override {
        return std::max(distance(x, c), pred(r));
    }

    bool ultrametric() const override { return true; }

    int cylinder_level(double r) const override {
        int e = 0;
        const double m = std::frexp(r, &e);
        return m == 0.5 ? e - 2 : e - 1;
    }

    std::uint64_t prefix_key(const Point& p, int level) const override {
        const auto& w = word(p);
        std::uint64_t h = 0x9E3779B97F4A7C15ULL;
        for (auto it = w.one_bits.rbegin();
             it != w.one_bits.rend() && *it > level; ++it) {
            h = splitmix64(h ^ static_cast<std::uint64_t>(
                                   static_cast<std::int64_t>(*it)));
        }
        return h;
    }

    nlohmann::json to_json() const override {
        return {{"kind", "dyadic"}, {"min_index", min_index_}};
    }

protected:
    double distance_impl(const Point& p, const Point& q) const override {
        const auto& a = word(p);
        const auto& b = word(q);
        auto ia = a.one_bits.rbegin();
        auto ib = b.one_bits.rbegin();
        while (ia != a.one_bits.rend() && ib != b.one_bits.rend()) {
            if (*ia > *ib) return std::ldexp(1.0, *ia);
            if (*ib > *ia) return std::ldexp(1.0, *ib);
            ++ia;
            ++ib;
        }
        if (ia != a.one_bits.rend()) return std::ldexp(1.0, *ia);
        if (ib != b.one_bits.rend()) return std::ldexp(1.0, *ib);
        return 0.0;
    }

    MassInterval ball_measure_impl(const Point&, double r) const override {
        const double m = pred(r); // open ball = closed ball of radius pred(r)
        return {m, m};
    }

    AnnulusDecision annulus_impl(const Point& c, double r, const Point& center,
                                 double r_in, double r_out) const override {
        const double scale = pred(r); // closed-ball radius of B(c,r)
        const double d0 = distance_impl(c, center);
        if (d0 > scale) {
            // All points of the ball sit at distance d0 from center.
            return {r_in <= d0 && d0 < r_out, 0.0};
        }
        // center's own ball: attained distances are {0} and the spectrum
        // values <= scale.
        const double top = std::min(scale, pred(r_out));
        return {top >= r_in, 0.0};
    }

private:
    static SpaceDescriptor make_descriptor() {
        SpaceDescriptor d;
        d.kind = "dyadic";
        d.ahlfors_exponent = 1.0;
        d.regularity_constant = 2.0;
        d.sigma = 2.0;
        d.geodesic = false;
        d.unit_ball_mass = 0.5; // open unit ball = closed ball of radius 1/2
        return d;
    }

    const DyadicWord& word(const Point& p) const {
        const auto* w = std::get_if<DyadicWord>(&p);
        if (!w) throw UsageError("point does not belong to the dyadic space");
        return *w;
    }

    int min_index_;
};

} // namespace perc
