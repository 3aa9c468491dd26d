#pragma once

#include "perc/space.hpp"

namespace perc {

// Two atoms of mass one at distance `gap`.  Deliberately fails both
// Ahlfors regularity at small scales and uniform perfectness; serves as
// a negative control for the geometry verification passes.
class TwoPointSpace : public Space {
public:
    explicit TwoPointSpace(double gap = 1.0)
        : Space(make_descriptor(gap)), gap_(gap) {
        if (!(gap > 0)) throw ConfigError("two_point gap must be positive");
    }

    double gap() const { return gap_; }

    Point origin() const override { return TwoPointSite{0}; }

    Proposal proposal(const Point& center, double r) const override {
        const int c = site(center);
        const double g = gap_;
        return {2.0, [c, g, r](Rng& rng) -> std::optional<Point> {
                    const int pick = fair_bit(rng) ? 1 : 0;
                    const double d = pick == c ? 0.0 : g;
                    if (d >= r) return std::nullopt;
                    return Point(TwoPointSite{pick});
                }};
    }

    nlohmann::json to_json() const override {
        return {{"kind", "two_point"}, {"gap", gap_}};
    }

protected:
    double distance_impl(const Point& p, const Point& q) const override {
        return site(p) == site(q) ? 0.0 : gap_;
    }

    MassInterval ball_measure_impl(const Point&, double r) const override {
        const double m = r > gap_ ? 2.0 : 1.0;
        return {m, m};
    }

    AnnulusDecision annulus_impl(const Point& c, double r, const Point& center,
                                 double r_in, double r_out) const override {
        // Attained distances from `center` over B(c,r) are a subset of
        // {0, gap}; enumerate them.
        const double d0 = distance_impl(c, center);
        if (d0 >= r_in && d0 < r_out) return {true, 0.0};
        if (r > gap_) { // ball holds both sites
            const double other = d0 == 0.0 ? gap_ : 0.0;
            return {other >= r_in && other < r_out, 0.0};
        }
        return {false, 0.0};
    }

private:
    static SpaceDescriptor make_descriptor(double gap) {
        SpaceDescriptor d;
        d.kind = "two_point";
        d.ahlfors_exponent = 1.0; // nominal; regularity fails by design
        d.regularity_constant = 1.0;
        d.sigma = 2.0;
        d.geodesic = false;
        d.unit_ball_mass = gap >= 1.0 ? 1.0 : 2.0;
        return d;
    }

    int site(const Point& p) const {
        const auto* t = std::get_if<TwoPointSite>(&p);
        if (!t || (t->site != 0 && t->site != 1)) {
            throw UsageError("point does not belong to the two-site space");
        }
        return t->site;
    }

    double gap_;
};

} // namespace perc
