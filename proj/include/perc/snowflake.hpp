#pragma once

#include <cmath>

#include "perc/space.hpp"

namespace perc {

// Snowflake transform: the base metric raised to a power alpha in (0,1),
// measure unchanged.  Balls correspond under r -> r^(1/alpha), so every
// operation delegates to the base space with pulled-back radii.  The
// regularity exponent becomes s/alpha with the same constant.
class SnowflakeSpace : public Space {
public:
    SnowflakeSpace(SpacePtr base, double alpha)
        : Space(make_descriptor(*base, alpha)), base_(std::move(base)),
          alpha_(alpha) {
        if (!(alpha > 0.0 && alpha < 1.0)) {
            throw ConfigError("snowflake alpha must lie in (0,1)");
        }
    }

    const Space& base() const { return *base_; }
    double alpha() const { return alpha_; }

    double pull_back(double r) const {
        if (!(r > 0)) throw DomainError("radius must be positive");
        return std::pow(r, 1.0 / alpha_);
    }

    Point origin() const override { return base_->origin(); }

    Proposal proposal(const Point& center, double r) const override {
        return base_->proposal(center, pull_back(r));
    }

    bool balls_intersect(const Point& c1, double r1, const Point& c2,
                         double r2) const override {
        return base_->balls_intersect(c1, pull_back(r1), c2, pull_back(r2));
    }

    double ball_sup_distance(const Point& x, const Point& c,
                             double r) const override {
        return std::pow(base_->ball_sup_distance(x, c, pull_back(r)), alpha_);
    }

    bool sup_distance_is_envelope() const override {
        return base_->sup_distance_is_envelope();
    }

    std::optional<std::vector<double>> index_coords(const Point& p) const override {
        return base_->index_coords(p);
    }
    double index_radius(double r) const override {
        return base_->index_radius(pull_back(r));
    }

    bool ultrametric() const override { return base_->ultrametric(); }
    int cylinder_level(double r) const override {
        return base_->cylinder_level(pull_back(r));
    }
    std::uint64_t prefix_key(const Point& p, int level) const override {
        return base_->prefix_key(p, level);
    }

    nlohmann::json to_json() const override {
        return {{"kind", "snowflake"},
                {"alpha", alpha_},
                {"base", base_->to_json()}};
    }

protected:
    double distance_impl(const Point& p, const Point& q) const override {
        return std::pow(base_->distance(p, q), alpha_);
    }

    MassInterval ball_measure_impl(const Point& x, double r) const override {
        return base_->ball_measure(x, pull_back(r));
    }

    AnnulusDecision annulus_impl(const Point& c, double r, const Point& center,
                                 double r_in, double r_out) const override {
        return base_->annulus_decision(c, pull_back(r), center,
                                       pull_back(r_in), pull_back(r_out));
    }

private:
    static SpaceDescriptor make_descriptor(const Space& base, double alpha) {
        SpaceDescriptor d = base.descriptor();
        d.kind = "snowflake";
        d.ahlfors_exponent = base.descriptor().ahlfors_exponent / alpha;
        // mu(B(x,r)) = mu(B_base(x, r^{1/a})) ~ C_V^{+-1} r^{s/a}
        d.regularity_constant = base.descriptor().regularity_constant;
        // A base annulus B(x,R)\B(x,R/sigma) maps to ratio sigma^alpha.
        d.sigma = std::pow(base.descriptor().sigma, alpha);
        d.geodesic = false; // concavity of t^alpha breaks the geodesic rule
        d.unit_ball_mass = base.ball_measure(base.origin(), 1.0).mid();
        return d;
    }

    SpacePtr base_;
    double alpha_;
};

} // namespace perc
