#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <variant>
#include <vector>

#include <json.hpp>

#include "perc/common.hpp"

namespace perc {

// Locations in the five backends.  Snowflake and weighted spaces reuse
// the representation of their base geometry, so the variant carries
// only the concrete shapes.

struct EuclideanCoords {
    std::vector<double> x;

    bool operator==(const EuclideanCoords&) const = default;
};

// Finitely supported two-sided binary word: the set of indices whose
// bit is one, sorted ascending.  The group operation is xor, so the
// valuation metric d(x,y) = 2^(max index in the symmetric difference)
// is an ultrametric.
struct DyadicWord {
    std::vector<int> one_bits;

    bool operator==(const DyadicWord&) const = default;
};

// A vertex of the unbounded gasket: corner of a depth-`depth` cell of
// the scaled copy 2^level * base_cell, identified by the base-3 digit
// path plus the decoded ambient position.
struct GasketAddress {
    int level = 0;
    std::vector<std::uint8_t> digits; // values 0,1,2; last digit names the corner
    std::array<double, 2> ambient{0.0, 0.0};

    bool operator==(const GasketAddress& o) const {
        return level == o.level && digits == o.digits;
    }
};

// Two-site discrete space used as a negative control in geometry checks.
struct TwoPointSite {
    int site = 0; // 0 or 1

    bool operator==(const TwoPointSite&) const = default;
};

using Point = std::variant<EuclideanCoords, DyadicWord, GasketAddress, TwoPointSite>;

inline nlohmann::json point_to_json(const Point& p) {
    nlohmann::json j;
    if (const auto* e = std::get_if<EuclideanCoords>(&p)) {
        j["kind"] = "euclidean";
        j["coords"] = e->x;
    } else if (const auto* d = std::get_if<DyadicWord>(&p)) {
        j["kind"] = "dyadic";
        j["one_bits"] = d->one_bits;
    } else if (const auto* g = std::get_if<GasketAddress>(&p)) {
        j["kind"] = "gasket";
        j["level"] = g->level;
        j["digits"] = g->digits;
        j["ambient"] = {g->ambient[0], g->ambient[1]};
    } else if (const auto* t = std::get_if<TwoPointSite>(&p)) {
        j["kind"] = "two_point";
        j["site"] = t->site;
    }
    return j;
}

inline Point point_from_json(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "euclidean") {
        return EuclideanCoords{j.at("coords").get<std::vector<double>>()};
    }
    if (kind == "dyadic") {
        DyadicWord w{j.at("one_bits").get<std::vector<int>>()};
        std::sort(w.one_bits.begin(), w.one_bits.end());
        return w;
    }
    if (kind == "gasket") {
        GasketAddress g;
        g.level = j.at("level").get<int>();
        g.digits = j.at("digits").get<std::vector<std::uint8_t>>();
        const auto amb = j.at("ambient").get<std::vector<double>>();
        g.ambient = {amb.at(0), amb.at(1)};
        return g;
    }
    if (kind == "two_point") {
        return TwoPointSite{j.at("site").get<int>()};
    }
    throw ConfigError("unknown point kind: " + kind);
}

} // namespace perc
