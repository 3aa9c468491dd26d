#include <doctest.h>

#include <cmath>
#include <numbers>

#include "perc/boolean_sampler.hpp"
#include "perc/space_factory.hpp"

using namespace perc;

TEST_CASE("poisson_draw matches mean and variance") {
    Rng rng = make_stream(0x9015, 0);
    for (double mean : {0.5, 3.0, 100.0}) {
        const int n = 20000;
        double sum = 0.0, sum2 = 0.0;
        for (int i = 0; i < n; ++i) {
            const double k = static_cast<double>(poisson_draw(rng, mean));
            sum += k;
            sum2 += k * k;
        }
        const double m = sum / n;
        const double v = sum2 / n - m * m;
        CAPTURE(mean);
        CHECK(std::abs(m - mean) <= 4.0 * std::sqrt(mean / n));
        CHECK(v == doctest::Approx(mean).epsilon(0.1));
    }
}

TEST_CASE("germ count is Poisson with mean lambda mu(halo ball)") {
    const auto space = make_space({{"kind", "euclidean"}, {"dim", 2}});
    const auto law = RadiusLaw::dirac(1.0);
    const double lambda = 0.3;
    const double wr = 2.0, hf = 2.0;
    const double mass = space->ball_measure(space->origin(), wr * hf).mid();
    const double mean = lambda * mass;
    const int n = 3000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto s = sample_boolean_model(*space, lambda, law,
                                            space->origin(), wr, hf, 42,
                                            static_cast<std::uint64_t>(i));
        const double k = static_cast<double>(s.germs.size());
        sum += k;
        sum2 += k * k;
    }
    const double m = sum / n;
    const double v = sum2 / n - m * m;
    CHECK(std::abs(m - mean) <= 4.0 * std::sqrt(mean / n));
    CHECK(v == doctest::Approx(mean).epsilon(0.15));
}

TEST_CASE("thinned centers follow the weighted density") {
    // Cosine density on the line: compare germ mass in [-pi, 0) vs
    // [0, pi) around center pi/2, where the density integrals differ.
    const auto space = make_space(
        {{"kind", "weighted"}, {"dim", 1}, {"density", "cosine"}});
    const auto law = RadiusLaw::dirac(0.1);
    Rng rng = make_stream(0x7F1D, 1);
    double left = 0, right = 0;
    for (int i = 0; i < 400; ++i) {
        const auto s = sample_boolean_model(*space, 5.0, law, space->origin(),
                                            std::numbers::pi, 1.5, rng);
        for (const auto& g : s.germs) {
            const double x = std::get<EuclideanCoords>(g.center).x[0];
            (x < 0 ? left : right) += 1.0;
        }
    }
    // mass(-pi,0) = pi - 0.5 * (1 - cos(pi)) ... per g = 1 + cos(x)/2:
    // integral over (-pi,0) = pi + 0.5*(sin(0)-sin(-pi)) = pi; same on
    // (0,pi): both equal pi, so instead compare (0,pi/2) vs (pi/2,pi).
    double lo = 0, hi = 0;
    Rng rng2 = make_stream(0x7F1D, 1);
    for (int i = 0; i < 400; ++i) {
        const auto s = sample_boolean_model(*space, 5.0, law, space->origin(),
                                            std::numbers::pi, 1.5, rng2);
        for (const auto& g : s.germs) {
            const double x = std::get<EuclideanCoords>(g.center).x[0];
            if (x >= 0 && x < std::numbers::pi / 2) lo += 1.0;
            if (x >= std::numbers::pi / 2 && x < std::numbers::pi) hi += 1.0;
        }
    }
    // integral of 1 + cos/2 over (0, pi/2) = pi/2 + 1/2; over (pi/2, pi)
    // = pi/2 - 1/2.
    const double expect = (std::numbers::pi / 2 + 0.5) /
                          (std::numbers::pi / 2 - 0.5);
    CHECK(lo / hi == doctest::Approx(expect).epsilon(0.08));
    CHECK(left + right > 0);
}

TEST_CASE("identical seeds reproduce identical samples") {
    const auto space = make_space({{"kind", "gasket"}});
    const auto law = RadiusLaw::pareto(3.0);
    const auto a = sample_boolean_model(*space, 0.2, law, space->origin(),
                                        4.0, 2.0, 7, 3);
    const auto b = sample_boolean_model(*space, 0.2, law, space->origin(),
                                        4.0, 2.0, 7, 3);
    const auto c = sample_boolean_model(*space, 0.2, law, space->origin(),
                                        4.0, 2.0, 7, 4);
    REQUIRE(a.germs.size() == b.germs.size());
    for (std::size_t i = 0; i < a.germs.size(); ++i) {
        CHECK(a.germs[i].radius == b.germs[i].radius);
        CHECK(space->distance(a.germs[i].center, b.germs[i].center) == 0.0);
    }
    CHECK(a.to_binary() == b.to_binary());
    CHECK(a.to_binary() != c.to_binary());
}

TEST_CASE("replication streams are statistically independent") {
    // First uniform of consecutive streams should be uncorrelated.
    const int n = 5000;
    double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
    for (int i = 0; i < n; ++i) {
        Rng r1 = make_stream(99, static_cast<std::uint64_t>(i));
        Rng r2 = make_stream(99, static_cast<std::uint64_t>(i + 1));
        const double x = uniform01(r1), y = uniform01(r2);
        sx += x;
        sy += y;
        sxy += x * y;
        sxx += x * x;
        syy += y * y;
    }
    const double corr = (n * sxy - sx * sy) /
                        std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
    CHECK(std::abs(corr) < 0.05);
}

TEST_CASE("unbounded laws are truncated with the cap recorded") {
    const auto space = make_space({{"kind", "euclidean"}, {"dim", 1}});
    const auto law = RadiusLaw::pareto(2.0);
    const auto s = sample_boolean_model(*space, 3.0, law, space->origin(),
                                        10.0, 2.0, 11, 0);
    CHECK(s.radius_cap == doctest::Approx(std::pow(1e-6, -0.5)));
    CHECK(s.law.bounded()); // effective (conditional) law
    CHECK(s.law.support_sup() == doctest::Approx(s.radius_cap));
    for (const auto& g : s.germs) CHECK(g.radius <= s.radius_cap);
    CHECK(s.influence_bound > 0.0);
}

TEST_CASE("far ball influence bound matches the closed form") {
    // lambda C_V 2^s tail(s, gap/2) with s=2, C_V=1, lambda=0.01,
    // Pareto(4), gap=10: 0.01 * 4 * (4/2) * 5^-2 = 0.0032.
    CHECK(far_ball_influence_bound(2.0, 1.0, 0.01, RadiusLaw::pareto(4.0),
                                   10.0) == doctest::Approx(0.0032));
    // Bounded law beyond its support has zero influence.
    CHECK(far_ball_influence_bound(2.0, 1.0, 0.5, RadiusLaw::dirac(1.0),
                                   10.0) == 0.0);
}

TEST_CASE("serialization round trips exactly") {
    const auto space = make_space({{"kind", "dyadic"}});
    const auto law = RadiusLaw::dirac(4.0);
    const auto s = sample_boolean_model(*space, 0.5, law, space->origin(),
                                        8.0, 3.0, 5, 2);
    SUBCASE("json") {
        const auto back = BooleanSample::from_json(s.to_json());
        CHECK(back.to_json() == s.to_json());
        CHECK(back.germs.size() == s.germs.size());
    }
    SUBCASE("binary") {
        const auto buf = s.to_binary();
        const auto back = BooleanSample::from_binary(buf);
        CHECK(back.to_binary() == buf);
        CHECK(back.lambda == s.lambda);
        CHECK(back.halo_radius == s.halo_radius);
        REQUIRE(back.germs.size() == s.germs.size());
        for (std::size_t i = 0; i < s.germs.size(); ++i) {
            CHECK(back.germs[i].radius == s.germs[i].radius);
            CHECK(space->distance(back.germs[i].center, s.germs[i].center) ==
                  0.0);
        }
    }
}

TEST_CASE("config validation rejects bad sampler parameters") {
    const auto space = make_space({{"kind", "euclidean"}, {"dim", 2}});
    const auto law = RadiusLaw::dirac(1.0);
    Rng rng = make_stream(1, 0);
    CHECK_THROWS_AS(sample_boolean_model(*space, 0.0, law, space->origin(),
                                         1.0, 2.0, rng),
                    ConfigError);
    CHECK_THROWS_AS(sample_boolean_model(*space, 1.0, law, space->origin(),
                                         0.0, 2.0, rng),
                    ConfigError);
    CHECK_THROWS_AS(sample_boolean_model(*space, 1.0, law, space->origin(),
                                         1.0, 0.5, rng),
                    ConfigError);
}
