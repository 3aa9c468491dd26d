#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <variant>

#include <json.hpp>

#include "perc/common.hpp"
#include "perc/quadrature.hpp"
#include "perc/rng.hpp"

namespace perc {

// Radius distributions.  All sampling goes through the inverse CDF so a
// law consumes exactly one uniform per draw.  Tail moments
// int_r^inf R^s rho(dR) are analytic wherever a closed form exists;
// divergent moments are reported as +inf, never as overflow.

struct DiracLaw {
    double radius;
};

// Support [1, inf); the unit scale keeps the tail exponent alone in
// charge of moment finiteness.
struct ParetoLaw {
    double tail_exponent;
};

struct ParetoTruncatedLaw {
    double tail_exponent;
    double cap;
};

struct ExponentialLaw {
    double rate;
};

class RadiusLaw {
public:
    using Kind = std::variant<DiracLaw, ParetoLaw, ParetoTruncatedLaw, ExponentialLaw>;

    static RadiusLaw dirac(double radius) {
        require(radius > 0, "dirac radius must be positive");
        return RadiusLaw(DiracLaw{radius});
    }
    static RadiusLaw pareto(double a) {
        require(a > 0, "pareto tail exponent must be positive");
        return RadiusLaw(ParetoLaw{a});
    }
    static RadiusLaw pareto_truncated(double a, double cap) {
        require(a > 0, "pareto tail exponent must be positive");
        require(cap > 1.0, "truncation cap must exceed the unit scale");
        return RadiusLaw(ParetoTruncatedLaw{a, cap});
    }
    static RadiusLaw exponential(double rate) {
        require(rate > 0, "exponential rate must be positive");
        return RadiusLaw(ExponentialLaw{rate});
    }

    const Kind& kind() const { return kind_; }

    // Inverse CDF at u in (0,1).
    double quantile(double u) const {
        return std::visit(
            [&](const auto& law) { return quantile_impl(law, u); }, kind_);
    }

    double sample(Rng& rng) const { return quantile(uniform_open(rng)); }

    // int_r^inf R^s rho(dR); +inf when the integral diverges.
    double tail_moment(double s, double r) const {
        if (s <= 0) throw DomainError("tail_moment requires s > 0");
        if (r < 0) throw DomainError("tail_moment requires r >= 0");
        return std::visit(
            [&](const auto& law) { return tail_impl(law, s, r); }, kind_);
    }

    double moment(double s) const { return tail_moment(s, 0.0); }

    // rho([0, r]).
    double cdf(double r) const {
        if (r < 0) return 0.0;
        return std::visit([&](const auto& law) { return cdf_impl(law, r); },
                          kind_);
    }

    // E[h(R); R > r] for a nonnegative h, via the quantile transform
    // E[h(R); R > r] = int_{F(r)}^1 h(F^{-1}(u)) du.
    template <typename H>
    double tail_expectation(H&& h, double r, double rel_tol = 1e-8) const {
        if (const auto* d = std::get_if<DiracLaw>(&kind_)) {
            return d->radius > r ? h(d->radius) : 0.0;
        }
        const double u0 = cdf(r);
        if (u0 >= 1.0) return 0.0;
        return integrate([&](double u) { return h(quantile(u)); }, u0,
                         1.0 - 1e-12, rel_tol);
    }

    // Smallest bound B with rho([0,B]) >= q; used for radius truncation.
    double upper_quantile(double q) const { return quantile(q); }

    bool bounded() const {
        return std::visit(
            [](const auto& law) { return bounded_impl(law); }, kind_);
    }

    // Largest radius the law can produce; +inf for unbounded laws.
    double support_sup() const {
        return std::visit(
            [](const auto& law) { return sup_impl(law); }, kind_);
    }

    std::string exact_form() const {
        return std::visit(
            [](const auto& law) { return form_impl(law); }, kind_);
    }

    nlohmann::json to_json() const {
        return std::visit([](const auto& law) { return json_impl(law); }, kind_);
    }

    static RadiusLaw from_json(const nlohmann::json& j) {
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "dirac") return dirac(j.at("radius").get<double>());
        if (kind == "pareto") return pareto(j.at("a").get<double>());
        if (kind == "pareto_truncated")
            return pareto_truncated(j.at("a").get<double>(), j.at("cap").get<double>());
        if (kind == "exponential") return exponential(j.at("rate").get<double>());
        throw ConfigError("unknown radius law kind: " + kind);
    }

private:
    explicit RadiusLaw(Kind k) : kind_(std::move(k)) {}

    static void require(bool ok, const char* msg) {
        if (!ok) throw DomainError(msg);
    }

    static double quantile_impl(const DiracLaw& law, double) { return law.radius; }
    static double quantile_impl(const ParetoLaw& law, double u) {
        return std::pow(1.0 - u, -1.0 / law.tail_exponent);
    }
    static double quantile_impl(const ParetoTruncatedLaw& law, double u) {
        const double z = 1.0 - std::pow(law.cap, -law.tail_exponent);
        return std::pow(1.0 - z * u, -1.0 / law.tail_exponent);
    }
    static double quantile_impl(const ExponentialLaw& law, double u) {
        return -std::log1p(-u) / law.rate;
    }

    static double tail_impl(const DiracLaw& law, double s, double r) {
        return r < law.radius ? std::pow(law.radius, s) : 0.0;
    }
    static double tail_impl(const ParetoLaw& law, double s, double r) {
        const double a = law.tail_exponent;
        if (a <= s) return kInf;
        const double m = std::max(r, 1.0);
        return a / (a - s) * std::pow(m, s - a);
    }
    static double tail_impl(const ParetoTruncatedLaw& law, double s, double r) {
        const double a = law.tail_exponent;
        const double T = law.cap;
        if (r >= T) return 0.0;
        const double m = std::max(r, 1.0);
        const double z = 1.0 - std::pow(T, -a);
        if (a == s) return a / z * std::log(T / m);
        return a / (z * (a - s)) * (std::pow(m, s - a) - std::pow(T, s - a));
    }
    static double tail_impl(const ExponentialLaw& law, double s, double r) {
        const double rate = law.rate;
        if (r == 0.0 && s == std::floor(s)) {
            return std::tgamma(s + 1.0) / std::pow(rate, s);
        }
        return integrate_to_infinity(
            [&](double R) { return std::pow(R, s) * rate * std::exp(-rate * R); },
            r, 1e-10);
    }

    static double cdf_impl(const DiracLaw& law, double r) {
        return r >= law.radius ? 1.0 : 0.0;
    }
    static double cdf_impl(const ParetoLaw& law, double r) {
        return r < 1.0 ? 0.0 : 1.0 - std::pow(r, -law.tail_exponent);
    }
    static double cdf_impl(const ParetoTruncatedLaw& law, double r) {
        if (r < 1.0) return 0.0;
        if (r >= law.cap) return 1.0;
        const double z = 1.0 - std::pow(law.cap, -law.tail_exponent);
        return (1.0 - std::pow(r, -law.tail_exponent)) / z;
    }
    static double cdf_impl(const ExponentialLaw& law, double r) {
        return -std::expm1(-law.rate * r);
    }

    static bool bounded_impl(const DiracLaw&) { return true; }
    static bool bounded_impl(const ParetoLaw&) { return false; }
    static bool bounded_impl(const ParetoTruncatedLaw&) { return true; }
    static bool bounded_impl(const ExponentialLaw&) { return false; }

    static double sup_impl(const DiracLaw& law) { return law.radius; }
    static double sup_impl(const ParetoLaw&) { return kInf; }
    static double sup_impl(const ParetoTruncatedLaw& law) { return law.cap; }
    static double sup_impl(const ExponentialLaw&) { return kInf; }

    static std::string form_impl(const DiracLaw& law) {
        std::ostringstream os;
        os << "delta_{" << law.radius << "}";
        return os.str();
    }
    static std::string form_impl(const ParetoLaw& law) {
        std::ostringstream os;
        os << law.tail_exponent << "*R^-" << (law.tail_exponent + 1.0)
           << " on [1,inf)";
        return os.str();
    }
    static std::string form_impl(const ParetoTruncatedLaw& law) {
        std::ostringstream os;
        os << law.tail_exponent << "*R^-" << (law.tail_exponent + 1.0)
           << " on [1," << law.cap << "] (renormalized)";
        return os.str();
    }
    static std::string form_impl(const ExponentialLaw& law) {
        std::ostringstream os;
        os << law.rate << "*exp(-" << law.rate << "*R) on (0,inf)";
        return os.str();
    }

    static nlohmann::json json_impl(const DiracLaw& law) {
        return {{"kind", "dirac"}, {"radius", law.radius}};
    }
    static nlohmann::json json_impl(const ParetoLaw& law) {
        return {{"kind", "pareto"}, {"a", law.tail_exponent}};
    }
    static nlohmann::json json_impl(const ParetoTruncatedLaw& law) {
        return {{"kind", "pareto_truncated"}, {"a", law.tail_exponent}, {"cap", law.cap}};
    }
    static nlohmann::json json_impl(const ExponentialLaw& law) {
        return {{"kind", "exponential"}, {"rate", law.rate}};
    }

    Kind kind_;
};

} // namespace perc
