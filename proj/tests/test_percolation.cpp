#include <doctest.h>

#include <cmath>

#include "perc/percolation.hpp"
#include "perc/space_factory.hpp"

using namespace perc;

namespace {

// Reference clustering: transitive closure of pairwise intersection.
std::vector<std::size_t> brute_components(const Space& space,
                                          const std::vector<Germ>& germs) {
    const std::size_t n = germs.size();
    std::vector<std::size_t> label(n);
    for (std::size_t i = 0; i < n; ++i) label[i] = i;
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                if (label[i] == label[j]) continue;
                if (space.balls_intersect(germs[i].center, germs[i].radius,
                                          germs[j].center, germs[j].radius)) {
                    const std::size_t m = std::min(label[i], label[j]);
                    label[i] = label[j] = m;
                    changed = true;
                }
            }
        }
    }
    return label;
}

bool same_partition(const std::vector<std::size_t>& a,
                    const std::vector<std::size_t>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = i + 1; j < a.size(); ++j) {
            if ((a[i] == a[j]) != (b[i] == b[j])) return false;
        }
    }
    return true;
}

Point pt(double x, double y) { return EuclideanCoords{{x, y}}; }

} // namespace

TEST_CASE("union-find components equal brute-force transitive closure") {
    const std::vector<nlohmann::json> spaces = {
        {{"kind", "euclidean"}, {"dim", 2}},
        {{"kind", "dyadic"}},
        {{"kind", "gasket"}},
        {{"kind", "weighted"}, {"dim", 2}, {"density", "cosine"}},
        {{"kind", "snowflake"},
         {"alpha", 0.5},
         {"base", {{"kind", "euclidean"}, {"dim", 2}}}},
    };
    for (const auto& sj : spaces) {
        const auto space = make_space(sj);
        const auto law = RadiusLaw::pareto(3.0);
        // Aim for ~15 germs per sample regardless of the halo mass.
        const double lam =
            15.0 / space->ball_measure(space->origin(), 8.0).mid();
        int nonempty = 0;
        for (int t = 0; t < 50; ++t) {
            const auto s = sample_boolean_model(
                *space, lam, law, space->origin(), 4.0, 2.0, 0xC0DE,
                static_cast<std::uint64_t>(t));
            if (s.germs.size() > 60) continue;
            if (!s.germs.empty()) ++nonempty;
            const auto fast = connected_components(*space, s.germs);
            const auto slow = brute_components(*space, s.germs);
            CAPTURE(sj.dump());
            REQUIRE(same_partition(fast, slow));
        }
        CHECK(nonempty > 10);
    }
}

TEST_CASE("component labels are normalized and stable") {
    const auto space = make_space({{"kind", "euclidean"}, {"dim", 2}});
    const std::vector<Germ> germs = {
        {pt(0, 0), 1.0}, {pt(1.5, 0), 1.0}, {pt(10, 0), 1.0}, {pt(11, 0), 0.4}};
    const auto label = connected_components(*space, germs);
    CHECK(label[0] == label[1]); // overlap
    CHECK(label[2] != label[0]);
    CHECK(label[2] == label[3]); // 10 + 1 > |11-10| -> overlap
    CHECK(*std::max_element(label.begin(), label.end()) <= 1);
}

TEST_CASE("cluster radius of an uncovered anchor is zero") {
    const auto space = make_space({{"kind", "euclidean"}, {"dim", 2}});
    BooleanSample s;
    s.space = space->to_json();
    s.lambda = 1.0;
    s.law = RadiusLaw::dirac(1.0);
    s.window_center = space->origin();
    s.window_radius = 5.0;
    s.halo_radius = 15.0;
    s.germs = {{pt(3.0, 0.0), 1.0}}; // does not cover the origin
    const auto rep = cluster_radius(*space, s, space->origin());
    CHECK(rep.m_value == 0.0);
    CHECK_FALSE(rep.censored);
    CHECK(rep.component_size == 0);
}

TEST_CASE("cluster radius accumulates the covering chain") {
    const auto space = make_space({{"kind", "euclidean"}, {"dim", 2}});
    BooleanSample s;
    s.space = space->to_json();
    s.lambda = 1.0;
    s.law = RadiusLaw::dirac(1.0);
    s.window_center = space->origin();
    s.window_radius = 5.0;
    s.halo_radius = 15.0;
    // Chain: covers origin, then extends right to x = 4.4.
    s.germs = {{pt(0.2, 0.0), 1.0}, {pt(1.8, 0.0), 1.0}, {pt(3.4, 0.0), 1.0}};
    const auto rep = cluster_radius(*space, s, space->origin());
    CHECK(rep.component_size == 3);
    CHECK(rep.m_value == doctest::Approx(4.4));
    CHECK_FALSE(rep.censored);

    // A ball able to reach the halo boundary marks the report censored.
    s.germs.push_back({pt(14.5, 0.0), 1.0});
    const auto rep2 = cluster_radius(*space, s, space->origin());
    CHECK_FALSE(rep2.censored); // different component: no censor
    s.germs.back() = {pt(4.8, 0.0), 12.0};
    const auto rep3 = cluster_radius(*space, s, space->origin());
    CHECK(rep3.censored);
}

TEST_CASE("events respond to hand-built configurations") {
    const auto space = make_space({{"kind", "euclidean"}, {"dim", 2}});
    const double sigma = 2.0;
    BooleanSample s;
    s.space = space->to_json();
    s.lambda = 1.0;
    s.law = RadiusLaw::dirac(1.0);
    s.window_center = space->origin();
    s.window_radius = 40.0;
    s.halo_radius = 120.0;

    const double r = 0.1;
    // G: single ball meeting both B(x,r) and the annulus [8 sigma r, 9 sigma^2 r).
    s.germs = {{pt(0.5, 0.0), 1.2}};
    CHECK(event_G(*space, s, space->origin(), r, sigma));
    // Ball covering the center but ending before the annulus at 1.6.
    s.germs = {{pt(0.0, 0.0), 1.0}};
    CHECK_FALSE(event_G(*space, s, space->origin(), r, sigma));
    // Two-ball chain bridging center to annulus.
    s.germs = {{pt(0.0, 0.0), 1.0}, {pt(1.5, 0.0), 0.7}};
    CHECK(event_G(*space, s, space->origin(), r, sigma));

    // H: germ beyond 10 sigma^3 r = 8 with radius > d / (10 tau),
    // tau = 2/11 so threshold = 11 d / 20.
    s.germs = {{pt(9.0, 0.0), 5.5}};
    CHECK(event_H(*space, s, space->origin(), r, sigma));
    s.germs = {{pt(9.0, 0.0), 4.0}};
    CHECK_FALSE(event_H(*space, s, space->origin(), r, sigma));
    s.germs = {{pt(7.0, 0.0), 50.0}};
    CHECK_FALSE(event_H(*space, s, space->origin(), r, sigma)); // inside reach

    // H~: germ within 100 sigma^6 r with radius >= r.
    s.germs = {{pt(30.0, 0.0), 0.1}};
    CHECK(event_Htilde(*space, s, space->origin(), r, sigma));
    s.germs = {{pt(30.0, 0.0), 0.05}};
    CHECK_FALSE(event_Htilde(*space, s, space->origin(), r, sigma));
}

TEST_CASE("event_G rejects windows whose halo is too small") {
    const auto space = make_space({{"kind", "euclidean"}, {"dim", 2}});
    BooleanSample s;
    s.space = space->to_json();
    s.lambda = 1.0;
    s.law = RadiusLaw::dirac(1.0);
    s.window_center = space->origin();
    s.window_radius = 1.0;
    s.halo_radius = 3.0;
    s.germs = {{pt(0.0, 0.0), 1.0}};
    CHECK_THROWS_AS(event_G(*space, s, space->origin(), 1.0, 2.0),
                    CoverageError);
}

TEST_CASE("inclusion of the cluster tail event in G union H") {
    const auto space = make_space({{"kind", "euclidean"}, {"dim", 2}});
    const double sigma = 2.0;
    const double r = 0.02;
    const auto law = RadiusLaw::dirac(1.0);
    int exceed = 0;
    for (int t = 0; t < 800; ++t) {
        const auto s =
            sample_boolean_model(*space, 0.05, law, space->origin(), 1.0, 3.0,
                                 0xF00D, static_cast<std::uint64_t>(t));
        const auto rep = cluster_radius(*space, s, space->origin());
        if (rep.censored) continue;
        if (rep.m_value >= 9.0 * sigma * sigma * r) {
            ++exceed;
            CHECK((event_G(*space, s, space->origin(), r, sigma) ||
                   event_H(*space, s, space->origin(), r, sigma)));
        }
    }
    CHECK(exceed > 20); // the check must not be vacuous
}

TEST_CASE("ultrametric clustering path agrees with brute force") {
    const auto space = make_space({{"kind", "dyadic"}});
    const auto law = RadiusLaw::dirac(4.0);
    for (int t = 0; t < 40; ++t) {
        const auto s =
            sample_boolean_model(*space, 0.4, law, space->origin(), 8.0, 3.0,
                                 0xDA, static_cast<std::uint64_t>(t));
        REQUIRE(same_partition(connected_components(*space, s.germs),
                               brute_components(*space, s.germs)));
    }
}

TEST_CASE("single ball cover witness") {
    const auto space = make_space({{"kind", "euclidean"}, {"dim", 2}});
    BooleanSample s;
    s.space = space->to_json();
    s.lambda = 1.0;
    s.law = RadiusLaw::dirac(5.0);
    s.window_center = space->origin();
    s.window_radius = 2.0;
    s.halo_radius = 20.0;
    s.germs = {{pt(3.0, 0.0), 5.0}};
    CHECK(single_ball_covers(*space, s, space->origin(), 1.0));
    s.germs = {{pt(4.5, 0.0), 5.0}};
    CHECK_FALSE(single_ball_covers(*space, s, space->origin(), 1.0));
}

TEST_CASE("max_possible_radius prefers the recorded cap") {
    BooleanSample s;
    s.law = RadiusLaw::pareto(3.0);
    s.radius_cap = 100.0;
    CHECK(max_possible_radius(s) == 100.0);
    s.law = RadiusLaw::dirac(2.0);
    s.radius_cap = kInf;
    CHECK(max_possible_radius(s) == 2.0);
}
