#pragma once

#include <cmath>
#include <numbers>

#include "perc/space.hpp"

namespace perc {

inline double unit_ball_volume(int dim) {
    return std::pow(std::numbers::pi, dim / 2.0) / std::tgamma(dim / 2.0 + 1.0);
}

class EuclideanSpace : public Space {
public:
    explicit EuclideanSpace(int dim)
        : Space(make_descriptor(dim)), dim_(dim), omega_(unit_ball_volume(dim)) {
        if (dim < 1 || dim > 8) throw ConfigError("euclidean dim must be in [1,8]");
    }

    int dim() const { return dim_; }

    Point origin() const override {
        return EuclideanCoords{std::vector<double>(dim_, 0.0)};
    }

    Proposal proposal(const Point& center, double r) const override {
        const auto& c = coords(center);
        const double mass = std::pow(2.0 * r, dim_); // bounding box
        return {mass, [this, c, r](Rng& rng) -> std::optional<Point> {
                    std::vector<double> y(dim_);
                    double d2 = 0.0;
                    for (int i = 0; i < dim_; ++i) {
                        const double o = (2.0 * uniform01(rng) - 1.0) * r;
                        y[i] = c.x[i] + o;
                        d2 += o * o;
                    }
                    if (d2 >= r * r) return std::nullopt;
                    return Point(EuclideanCoords{std::move(y)});
                }};
    }

    std::optional<std::vector<double>> index_coords(const Point& p) const override {
        return coords(p).x;
    }

    nlohmann::json to_json() const override {
        return {{"kind", "euclidean"}, {"dim", dim_}};
    }

protected:
    double distance_impl(const Point& p, const Point& q) const override {
        const auto& a = coords(p);
        const auto& b = coords(q);
        double d2 = 0.0;
        for (int i = 0; i < dim_; ++i) {
            const double t = a.x[i] - b.x[i];
            d2 += t * t;
        }
        return std::sqrt(d2);
    }

    MassInterval ball_measure_impl(const Point&, double r) const override {
        const double m = omega_ * std::pow(r, dim_);
        return {m, m};
    }

    // The attained distances from `center` over the open ball form the
    // interval (d-r, d+r) clipped at zero, so the annulus test is exact.
    AnnulusDecision annulus_impl(const Point& c, double r, const Point& center,
                                 double r_in, double r_out) const override {
        const double d = distance_impl(c, center);
        return {d + r > r_in && d - r < r_out, 0.0};
    }

    const EuclideanCoords& coords(const Point& p) const {
        const auto* e = std::get_if<EuclideanCoords>(&p);
        if (!e || static_cast<int>(e->x.size()) != dim_) {
            throw UsageError("point does not belong to euclidean R^" +
                             std::to_string(dim_));
        }
        return *e;
    }

private:
    static SpaceDescriptor make_descriptor(int dim) {
        SpaceDescriptor d;
        d.kind = "euclidean";
        d.ahlfors_exponent = dim;
        const double omega = unit_ball_volume(dim);
        d.regularity_constant = std::max(omega, 1.0 / omega);
        d.sigma = 2.0;
        d.geodesic = true;
        d.unit_ball_mass = omega;
        return d;
    }

    int dim_;
    double omega_;
};

} // namespace perc
