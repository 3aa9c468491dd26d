#pragma once

#include <cmath>
#include <string>

#include "perc/euclidean.hpp"
#include "perc/quadrature.hpp"
#include "perc/space.hpp"

namespace perc {

// Euclidean geometry with an absolutely continuous measure g(x)dx.
// Built-in densities:
//   "uniform": g = 1 (plain Lebesgue, useful as a consistency control)
//   "cosine":  g(x) = 1 + 0.5*cos(x_1), bounded in [1/2, 3/2]
// The metric is Euclidean, so the annulus test stays exact; only the
// measure changes.  Sampling thins box proposals by g/g_max pointwise,
// which keeps the Poisson law exact even where ball masses come from
// quadrature.
class WeightedEuclideanSpace : public Space {
public:
    WeightedEuclideanSpace(int dim, std::string density)
        : Space(make_descriptor(dim, density)), dim_(dim),
          density_(std::move(density)), omega_(unit_ball_volume(dim)) {
        if (dim < 1 || dim > 8) throw ConfigError("weighted dim must be in [1,8]");
        if (density_ != "uniform" && density_ != "cosine") {
            throw ConfigError("unknown density: " + density_);
        }
    }

    int dim() const { return dim_; }
    const std::string& density() const { return density_; }

    double g(const std::vector<double>& x) const {
        return density_ == "uniform" ? 1.0 : 1.0 + 0.5 * std::cos(x[0]);
    }
    double g_max() const { return density_ == "uniform" ? 1.0 : 1.5; }
    double g_min() const { return density_ == "uniform" ? 1.0 : 0.5; }

    Point origin() const override {
        return EuclideanCoords{std::vector<double>(dim_, 0.0)};
    }

    Proposal proposal(const Point& center, double r) const override {
        const auto& c = coords(center);
        const double mass = std::pow(2.0 * r, dim_) * g_max();
        return {mass, [this, c, r](Rng& rng) -> std::optional<Point> {
                    std::vector<double> y(dim_);
                    double d2 = 0.0;
                    for (int i = 0; i < dim_; ++i) {
                        const double o = (2.0 * uniform01(rng) - 1.0) * r;
                        y[i] = c.x[i] + o;
                        d2 += o * o;
                    }
                    if (d2 >= r * r) return std::nullopt;
                    if (uniform01(rng) * g_max() >= g(y)) return std::nullopt;
                    return Point(EuclideanCoords{std::move(y)});
                }};
    }

    std::optional<std::vector<double>> index_coords(const Point& p) const override {
        return coords(p).x;
    }

    nlohmann::json to_json() const override {
        return {{"kind", "weighted"}, {"dim", dim_}, {"density", density_}};
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

    // mu(B(c,r)) = omega_n r^n + 0.5 cos(c_1) * I(r) where I(r) is the
    // cosine slice integral over B(0,r); the sine component vanishes by
    // symmetry.  dim 1 and 2 are closed form, higher dims use adaptive
    // quadrature on the slice profile.
    MassInterval ball_measure_impl(const Point& x, double r) const override {
        const double lebesgue = omega_ * std::pow(r, dim_);
        if (density_ == "uniform") return {lebesgue, lebesgue};
        const double c1 = coords(x).x[0];
        double slice = 0.0;
        if (dim_ == 1) {
            slice = 2.0 * std::sin(r);
        } else if (dim_ == 2) {
            slice = 2.0 * std::numbers::pi * r * std::cyl_bessel_j(1.0, r);
        } else {
            const double wm1 = unit_ball_volume(dim_ - 1);
            const double ex = (dim_ - 1) / 2.0;
            slice = integrate(
                [&](double t) {
                    return std::cos(t) * wm1 * std::pow(r * r - t * t, ex);
                },
                -r, r, 1e-11, 1e-300);
        }
        const double m = lebesgue + 0.5 * std::cos(c1) * slice;
        return {m, m};
    }

    AnnulusDecision annulus_impl(const Point& c, double r, const Point& center,
                                 double r_in, double r_out) const override {
        const double d = distance_impl(c, center);
        return {d + r > r_in && d - r < r_out, 0.0};
    }

private:
    static SpaceDescriptor make_descriptor(int dim, const std::string& density) {
        SpaceDescriptor d;
        d.kind = "weighted";
        d.ahlfors_exponent = dim;
        const double omega = unit_ball_volume(dim);
        const double lo = density == "uniform" ? 1.0 : 0.5;
        const double hi = density == "uniform" ? 1.0 : 1.5;
        d.regularity_constant = std::max(hi * omega, 1.0 / (lo * omega));
        d.sigma = 2.0;
        d.geodesic = true;
        d.unit_ball_mass = omega; // cosine perturbation integrates near this
        return d;
    }

    const EuclideanCoords& coords(const Point& p) const {
        const auto* e = std::get_if<EuclideanCoords>(&p);
        if (!e || static_cast<int>(e->x.size()) != dim_) {
            throw UsageError("point does not belong to weighted R^" +
                             std::to_string(dim_));
        }
        return *e;
    }

    int dim_;
    std::string density_;
    double omega_;
};

} // namespace perc
