#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "perc/bounds.hpp"
#include "perc/dyadic.hpp"

using namespace perc;

TEST_CASE("tau closed form") {
    CHECK(tau(1.0) == doctest::Approx(1.0));
    CHECK(tau(2.0) == doctest::Approx(2.0 / 11.0));
    CHECK(tau(1e6) == doctest::Approx(0.1).epsilon(1e-4));
    CHECK_THROWS_AS(tau(0.5), DomainError);
}

TEST_CASE("event bounds reproduce the closed forms") {
    // (10 sigma^3)^s lambda C_V r^s with sigma=2, s=2, C_V=1,
    // lambda=1e-4, r=1: 6400 * 1e-4 = 0.64.
    const auto b = event_bounds(1e-4, 1.0, 2.0, 2.0, RadiusLaw::dirac(1.0), 1.0);
    CHECK(b.g_bound == doctest::Approx(0.64));
    CHECK(b.htilde_raw == 0.0); // strict tail: the atom at 1 is excluded
    CHECK_FALSE(b.divergent_tail);
    const auto bb = event_bounds(1e-4, 1.0, 2.0, 2.0, RadiusLaw::dirac(1.0), 0.5);
    CHECK(bb.htilde_raw == doctest::Approx(std::pow(6400.0, 2.0) * 1e-4));

    // h: (10 tau)^s lambda C_V tail(s, sigma^3 r / tau).
    const double t = tau(2.0);
    const auto law = RadiusLaw::pareto(4.0);
    const auto b2 = event_bounds(1e-3, 2.0, 2.0, 2.0, law, 0.5);
    const double expect_h = std::pow(10.0 * t, 2.0) * 1e-3 * 2.0 *
                            law.tail_moment(2.0, 8.0 * 0.5 / t);
    CHECK(b2.h_raw == doctest::Approx(expect_h).epsilon(1e-12));
}

TEST_CASE("bounds are monotone in r before clamping") {
    const auto law = RadiusLaw::pareto(3.5);
    double last_g = 0.0, last_h = kInf, last_ht = kInf;
    for (int i = 0; i < 50; ++i) {
        const double r = 0.01 * std::pow(1.2, i);
        const auto b = event_bounds(1e-5, 1.5, 2.0, 2.0, law, r);
        CHECK(b.g_raw >= last_g);
        CHECK(b.h_raw <= last_h * (1.0 + 1e-12));
        CHECK(b.htilde_raw <= last_ht * (1.0 + 1e-12));
        CHECK(b.g_bound >= 0.0);
        CHECK(b.g_bound <= 1.0);
        CHECK(b.h_bound <= 1.0);
        CHECK(b.htilde_bound <= 1.0);
        last_g = b.g_raw;
        last_h = b.h_raw;
        last_ht = b.htilde_raw;
    }
}

TEST_CASE("divergent tails are flagged and clamp to one") {
    const auto b = event_bounds(0.1, 1.0, 2.0, 2.0, RadiusLaw::pareto(1.5), 1.0);
    CHECK(b.divergent_tail);
    CHECK(b.h_bound == 1.0);
    CHECK(b.htilde_bound == 1.0);
}

TEST_CASE("lambda0 worked example") {
    // All constants one, Dirac(1): min(1/(2*10^2), 1/(4*10^2)) = 1/400.
    const auto l0 = lambda0(1.0, 1.0, 1.0, 1.0, RadiusLaw::dirac(1.0));
    CHECK(l0.value == doctest::Approx(0.0025));
    CHECK_FALSE(l0.no_subcritical);
    // Infinite s-moment: no subcritical regime exists.
    const auto l1 = lambda0(1.0, 1.0, 2.0, 2.0, RadiusLaw::pareto(1.5));
    CHECK(l1.no_subcritical);
}

TEST_CASE("recursion machine: squaring cascade") {
    const auto cert = recursion_certify([](double) { return 0.5; },
                                        [](double) { return 0.0; }, 2.0);
    CHECK(cert.accepted);
    CHECK(cert.decays);
    CHECK(cert.envelope[0] == 0.5);
    CHECK(cert.envelope[5] == std::pow(2.0, -32.0)); // 0.5^(2^5)
}

TEST_CASE("recursion machine: fixed point at one half") {
    const auto cert = recursion_certify([](double) { return 0.5; },
                                        [](double) { return 0.25; }, 2.0);
    CHECK(cert.accepted);
    CHECK_FALSE(cert.decays);
    CHECK(cert.envelope.back() == doctest::Approx(0.5));
}

TEST_CASE("recursion machine: reciprocal envelope decay") {
    const auto g = [](double r) { return std::min(0.25, 1.0 / r); };
    const auto cert =
        recursion_certify([](double) { return 0.5; }, g, 2.0, 0.5);
    CHECK(cert.accepted);
    CHECK(cert.decays);
    // Frozen envelope prefix for r1 = 1, grid step 20.
    const double expect[6] = {0.5,        0.3,        0.0925,
                              0.00868125, 8.16141e-5, 3.19161e-7};
    for (int k = 1; k <= 5; ++k) {
        CHECK(cert.envelope[k] ==
              doctest::Approx(expect[k]).epsilon(1e-5));
    }
    // Envelope ~ 1/r, so r^{theta-1} env dr is summable only below
    // theta = 1.
    CHECK(cert.theta_checked);
    CHECK(cert.theta_integrable);
    const auto cert1 =
        recursion_certify([](double) { return 0.5; }, g, 2.0, 1.0);
    CHECK_FALSE(cert1.theta_integrable);
}

TEST_CASE("recursion machine: hypothesis refusal carries a witness") {
    const auto cert = recursion_certify([](double r) { return r / 25.0; },
                                        [](double) { return 0.0; }, 2.0);
    CHECK_FALSE(cert.accepted);
    CHECK(cert.witness_value > 0.5);
    const auto cert2 = recursion_certify([](double) { return 0.1; },
                                         [](double) { return 0.3; }, 2.0);
    CHECK_FALSE(cert2.accepted);
    CHECK(cert2.witness_value == doctest::Approx(0.3));
}

TEST_CASE("subcritical intensities satisfy the recursion hypotheses") {
    // For lambda <= lambda0 the base bound and the correction term obey
    // (a) and (b) by construction; check over assorted constants.
    Rng rng = make_stream(0x1A3, 0);
    for (int t = 0; t < 5; ++t) {
        const double c1 = 1.0 + 9.0 * uniform01(rng);
        const double cv = 1.0 + 2.0 * uniform01(rng);
        const double s = 1.0 + uniform01(rng);
        const double sigma = 1.0 + uniform01(rng);
        const auto law = RadiusLaw::pareto(2.0 * s + 1.0);
        const auto l0 = lambda0(c1, cv, s, sigma, law);
        REQUIRE_FALSE(l0.no_subcritical);
        const double lam = 0.999 * l0.value; // shade below the boundary ulp
        auto f0 = [&](double r) {
            return c1 * event_bounds(lam, cv, s, sigma, law, r).g_bound;
        };
        auto g = [&](double r) {
            return c1 * event_bounds(lam, cv, s, sigma, law, r).htilde_bound;
        };
        const auto cert = recursion_certify(f0, g, std::pow(sigma, 3.0));
        CAPTURE(c1);
        CAPTURE(s);
        CAPTURE(sigma);
        CHECK(cert.accepted);
        CHECK(cert.decays);
    }
}

TEST_CASE("cover bound and dichotomy") {
    // 1 - exp(-lambda/(2^s C_V) tail(s, 2r)).
    const auto law = RadiusLaw::dirac(5.0);
    const double v = cover_lower_bound(0.4, 1.0, 2.0, law, 1.0);
    CHECK(v == doctest::Approx(-std::expm1(-0.4 / 4.0 * 25.0)));
    CHECK(cover_lower_bound(0.4, 1.0, 2.0, RadiusLaw::pareto(1.5), 1.0) == 1.0);

    CHECK(whole_cover_dichotomy(RadiusLaw::pareto(1.9), 2.0) ==
          CoverVerdict::COVERS_EVERYTHING);
    CHECK(whole_cover_dichotomy(RadiusLaw::pareto(2.1), 2.0) ==
          CoverVerdict::PROPER_SUBSET);
    CHECK(whole_cover_dichotomy(RadiusLaw::pareto(2.0), 2.0) ==
          CoverVerdict::COVERS_EVERYTHING); // boundary: integral diverges
}

TEST_CASE("ultrametric tail closed form on the dyadic backend") {
    DyadicSpace dy;
    const auto ut = ultrametric_tail_bound(dy, 0.5, RadiusLaw::dirac(4.0), 2.0);
    // E[mu(B(x,R)); R > 2] = mu(radius-4 ball) = 2, so 1 - e^{-1}.
    CHECK(ut.exact == doctest::Approx(-std::expm1(-1.0)).epsilon(1e-9));
    CHECK(ut.envelope >= ut.exact - 1e-12);
    // Envelope dominates the exact value across scales.
    for (int i = 0; i < 20; ++i) {
        const double r = 0.3 * std::pow(1.35, i);
        const auto u = ultrametric_tail_bound(dy, 0.3, RadiusLaw::pareto(2.0), r);
        CHECK(u.envelope >= u.exact - 1e-9);
    }
}

TEST_CASE("mean cluster lower bound") {
    // Infinite (s+beta)-moment propagates to an infinite bound.
    CHECK(mean_cluster_lower_bound(0.1, 1.0, 2.0, 1.0,
                                   RadiusLaw::pareto(2.5)) == kInf);
    const double v =
        mean_cluster_lower_bound(0.1, 1.0, 2.0, 1.0, RadiusLaw::pareto(4.0));
    CHECK(v > 0.0);
    CHECK(std::isfinite(v));
}

TEST_CASE("layer cake identity") {
    for (const auto& law : {RadiusLaw::dirac(2.0), RadiusLaw::pareto(5.0)}) {
        const auto rep = cavalieri_residual(law, 1.0, 2.0);
        CHECK(rep.residual <= 1e-6);
        CHECK(rep.worst_violation <= 1e-12);
        CHECK(std::isfinite(rep.lhs));
    }
    // Divergent moment: identity still reports, residual not finite-checked.
    const auto rep = cavalieri_residual(RadiusLaw::pareto(2.0), 1.0, 2.0);
    CHECK(rep.lhs == kInf);
}

TEST_CASE("envelopes clamp into probability range") {
    const auto law = RadiusLaw::pareto(4.0);
    CHECK(scaling_envelope(10.0, 1.0, 2.0, 2.0, law, 5.0, 0.9, 1.0) == 1.0);
    CHECK(cluster_tail_envelope(10.0, 1.0, 2.0, 2.0, law, 0.2, 1.0) <= 1.0);
    CHECK(cluster_tail_envelope(1e-9, 1.0, 2.0, 2.0, law, 0.0, 1.0) >= 0.0);
    CHECK_THROWS_AS(scaling_envelope(1.0, 1.0, 2.0, 2.0, law, 1.0, 1.5, 1.0),
                    DomainError);
}

TEST_CASE("snowflake exponent transformation") {
    CHECK(snowflake_exponent(2.0, 0.5) == doctest::Approx(4.0));
    CHECK(snowflake_exponent(1.0, 0.25) == doctest::Approx(4.0));
    CHECK_THROWS_AS(snowflake_exponent(2.0, 1.5), DomainError);
}

TEST_CASE("bound sheet serializes with the fixed schema") {
    const auto sheet = make_bound_sheet(1e-3, 1.0, 2.0, 2.0,
                                        RadiusLaw::dirac(1.0), 2.0,
                                        {0.1, 0.2, 0.4});
    CHECK(sheet.r.size() == 3);
    const std::string csv = sheet.to_csv();
    CHECK(csv.rfind("r,g_bound,h_bound,htilde_bound,envelope\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
    const auto j = sheet.to_json();
    CHECK(j.at("rows").size() == 3);
    CHECK(j.at("lambda0").get<double>() > 0.0);
}
