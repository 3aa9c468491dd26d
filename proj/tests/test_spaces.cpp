#include <doctest.h>

#include <cmath>
#include <numbers>

#include "perc/space_factory.hpp"

using namespace perc;

namespace {

std::vector<SpacePtr> all_backends() {
    return {
        make_space({{"kind", "euclidean"}, {"dim", 2}}),
        make_space({{"kind", "euclidean"}, {"dim", 1}}),
        make_space({{"kind", "dyadic"}}),
        make_space({{"kind", "gasket"}}),
        make_space({{"kind", "weighted"}, {"dim", 2}, {"density", "cosine"}}),
        make_space({{"kind", "weighted"}, {"dim", 1}, {"density", "cosine"}}),
        make_space({{"kind", "snowflake"},
                    {"alpha", 0.5},
                    {"base", {{"kind", "euclidean"}, {"dim", 2}}}}),
        make_space({{"kind", "two_point"}, {"gap", 1.0}}),
    };
}

} // namespace

TEST_CASE("metric axioms hold on sampled triples") {
    for (const auto& space : all_backends()) {
        Rng rng = make_stream(0xBEEF, 0);
        for (int t = 0; t < 60; ++t) {
            const Point x = space->sample_point(space->origin(), 4.0, rng);
            const Point y = space->sample_point(space->origin(), 4.0, rng);
            const Point z = space->sample_point(space->origin(), 4.0, rng);
            const double dxy = space->distance(x, y);
            const double dyx = space->distance(y, x);
            const double dxz = space->distance(x, z);
            const double dyz = space->distance(y, z);
            CAPTURE(space->descriptor().kind);
            CHECK(space->distance(x, x) == doctest::Approx(0.0).epsilon(1e-12));
            CHECK(dxy >= 0.0);
            CHECK(dxy == doctest::Approx(dyx).epsilon(1e-9));
            CHECK(dxz <= dxy + dyz + 1e-9 * (1.0 + dxz));
        }
    }
}

TEST_CASE("ultrametric backends satisfy the strong triangle inequality") {
    const auto space = make_space({{"kind", "dyadic"}});
    Rng rng = make_stream(0xDAD, 1);
    for (int t = 0; t < 100; ++t) {
        const Point x = space->sample_point(space->origin(), 8.0, rng);
        const Point y = space->sample_point(space->origin(), 8.0, rng);
        const Point z = space->sample_point(space->origin(), 8.0, rng);
        CHECK(space->distance(x, z) <=
              std::max(space->distance(x, y), space->distance(y, z)) + 1e-12);
    }
}

TEST_CASE("ball measures sit inside the declared regularity sandwich") {
    for (const auto& space : all_backends()) {
        if (space->descriptor().kind == "two_point") continue;
        const double s = space->descriptor().ahlfors_exponent;
        const double cv = space->descriptor().regularity_constant;
        Rng rng = make_stream(0x5A5A, 2);
        for (int t = 0; t < 40; ++t) {
            const double r = std::pow(10.0, 2.0 * uniform01(rng) - 1.0);
            const Point x = space->sample_point(space->origin(), 3.0, rng);
            const MassInterval m = space->ball_measure(x, r);
            CAPTURE(space->descriptor().kind);
            CAPTURE(r);
            CHECK(m.lo <= m.hi);
            CHECK(m.hi >= std::pow(r, s) / cv * (1.0 - 1e-9));
            CHECK(m.lo <= cv * std::pow(r, s) * (1.0 + 1e-9));
        }
    }
}

TEST_CASE("euclidean ball measure is exact") {
    const auto space = make_space({{"kind", "euclidean"}, {"dim", 2}});
    const MassInterval m = space->ball_measure(space->origin(), 1.5);
    CHECK(m.exact());
    CHECK(m.lo == doctest::Approx(std::numbers::pi * 2.25).epsilon(1e-12));
}

TEST_CASE("dyadic cylinder structure is consistent with distances") {
    const auto space = make_space({{"kind", "dyadic"}});
    CHECK(space->ultrametric());
    Rng rng = make_stream(0xD1AD, 3);
    for (int t = 0; t < 50; ++t) {
        const Point x = space->sample_point(space->origin(), 8.0, rng);
        const Point y = space->sample_point(space->origin(), 8.0, rng);
        const double d = space->distance(x, y);
        const int level = space->cylinder_level(4.0);
        // Same cylinder key at a level iff distance below the level scale.
        const bool same = space->prefix_key(x, level) == space->prefix_key(y, level);
        if (d < 4.0) {
            CHECK(same);
        } else {
            CHECK_FALSE(same);
        }
    }
}

TEST_CASE("gasket corner distances are exact at dyadic scales") {
    GasketSpace g;
    const Point o = g.origin();
    // Geodesics run along edges: the corner at ambient (2^k, 0) is at
    // metric distance exactly 2^k.
    for (int k = 0; k <= 6; ++k) {
        const double side = static_cast<double>(1 << k);
        const Point p = GasketSpace::from_lattice({1, 0, k});
        const auto amb = g.index_coords(p);
        REQUIRE(amb.has_value());
        CHECK((*amb)[0] == doctest::Approx(side).epsilon(1e-12));
        CHECK(g.distance(o, p) == doctest::Approx(side).epsilon(1e-12));
    }
}

TEST_CASE("gasket corner eccentricity is one across unit cells") {
    // Two corners of any cell at one scale are joined by an edge of the
    // gasket at that scale, so their distance equals the cell side.
    GasketSpace g;
    Rng rng = make_stream(0x6A5, 4);
    for (int t = 0; t < 30; ++t) {
        const Point x = g.sample_point(g.origin(), 8.0, rng);
        const auto amb = g.index_coords(x);
        REQUIRE(amb.has_value());
        const double d_euclid_origin =
            std::hypot((*amb)[0], (*amb)[1]);
        // Metric distance dominates the ambient distance and never
        // exceeds the L1-style path bound.
        const double d = g.distance(g.origin(), x);
        CHECK(d >= d_euclid_origin - 1e-9);
        CHECK(d <= (*amb)[0] + (*amb)[1] * 2.0 + 1e-9);
    }
}

TEST_CASE("gasket ball measures bracket the exact corner values") {
    GasketSpace g;
    const Point o = g.origin();
    const double s = std::log(3.0) / std::log(2.0);
    for (int k = 0; k <= 3; ++k) {
        const double r = static_cast<double>(1 << k);
        const MassInterval m = g.ball_measure(o, r);
        const double exact = std::pow(r, s); // 3^k unit cells of mass 1
        CAPTURE(r);
        CHECK(m.lo <= exact * (1.0 + 1e-9));
        CHECK(m.hi >= exact * (1.0 - 1e-9));
        CHECK(m.hi / m.lo <= 1.011);
    }
}

TEST_CASE("weighted space masses match Monte Carlo integration") {
    for (int dim : {1, 2}) {
        const auto w = make_space(
            {{"kind", "weighted"}, {"dim", dim}, {"density", "cosine"}});
        const auto u = make_space({{"kind", "euclidean"}, {"dim", dim}});
        Rng rng = make_stream(0xFACE, 5);
        for (int t = 0; t < 4; ++t) {
            const Point x = u->sample_point(u->origin(), 2.0, rng);
            const double r = 0.5 + 1.5 * uniform01(rng);
            // MC estimate: volume of the Euclidean ball times the mean
            // density over uniform samples of it.
            const Proposal prop = u->proposal(x, r);
            double acc = 0.0;
            const int n = 40000;
            int kept = 0;
            while (kept < n) {
                auto p = prop.draw(rng);
                if (!p) continue;
                if (u->distance(x, *p) >= r) continue;
                ++kept;
                const auto& c = std::get<EuclideanCoords>(*p).x;
                acc += 1.0 + 0.5 * std::cos(c[0]);
            }
            const double vol = u->ball_measure(x, r).mid();
            const double mc = vol * acc / n;
            const double exact = w->ball_measure(x, r).mid();
            CAPTURE(dim);
            CAPTURE(r);
            CHECK(exact == doctest::Approx(mc).epsilon(0.02));
        }
    }
}

TEST_CASE("snowflake transforms distances and masses consistently") {
    const auto base = make_space({{"kind", "euclidean"}, {"dim", 2}});
    const auto snow = make_space({{"kind", "snowflake"},
                                  {"alpha", 0.5},
                                  {"base", {{"kind", "euclidean"}, {"dim", 2}}}});
    CHECK(snow->descriptor().ahlfors_exponent == doctest::Approx(4.0));
    Rng rng = make_stream(0x51, 6);
    for (int t = 0; t < 30; ++t) {
        const Point x = base->sample_point(base->origin(), 2.0, rng);
        const Point y = base->sample_point(base->origin(), 2.0, rng);
        CHECK(snow->distance(x, y) ==
              doctest::Approx(std::sqrt(base->distance(x, y))).epsilon(1e-12));
        const double r = 0.3 + uniform01(rng);
        CHECK(snow->ball_measure(x, r).mid() ==
              doctest::Approx(base->ball_measure(x, r * r).mid()).epsilon(1e-12));
    }
}

TEST_CASE("two point control space has the declared geometry") {
    const auto tp = make_space({{"kind", "two_point"}, {"gap", 1.0}});
    Rng rng = make_stream(0x22, 7);
    const Point a = tp->origin();
    const Point b = tp->sample_point(a, 3.0, rng);
    CHECK(tp->distance(a, a) == 0.0);
    const MassInterval m = tp->ball_measure(a, 0.5);
    CHECK(m.mid() == doctest::Approx(1.0));
    const MassInterval m2 = tp->ball_measure(a, 2.0);
    CHECK(m2.mid() == doctest::Approx(2.0));
    (void)b;
}

TEST_CASE("factory rejects unknown kinds and honors sigma overrides") {
    CHECK_THROWS_AS(make_space({{"kind", "moebius"}}), ConfigError);
    const auto sp = make_space({{"kind", "euclidean"}, {"dim", 2}, {"sigma", 1.25}});
    CHECK(sp->sigma() == doctest::Approx(1.25));
    CHECK_THROWS_AS(
        make_space({{"kind", "euclidean"}, {"dim", 2}, {"sigma", 0.9}}),
        DomainError);
}

TEST_CASE("space json descriptors round trip through the factory") {
    for (const auto& space : all_backends()) {
        const auto clone = make_space(space->to_json());
        CHECK(clone->descriptor().kind == space->descriptor().kind);
        CHECK(clone->descriptor().ahlfors_exponent ==
              doctest::Approx(space->descriptor().ahlfors_exponent));
        Rng rng = make_stream(0xCAFE, 8);
        const Point x = space->sample_point(space->origin(), 2.0, rng);
        CHECK(clone->distance(space->origin(), x) ==
              doctest::Approx(space->distance(space->origin(), x)));
    }
}

TEST_CASE("sampled points land inside the requested ball") {
    for (const auto& space : all_backends()) {
        Rng rng = make_stream(0xBA11, 9);
        for (int t = 0; t < 30; ++t) {
            const Point x = space->sample_point(space->origin(), 2.5, rng);
            CHECK(space->distance(space->origin(), x) < 2.5);
        }
    }
}
