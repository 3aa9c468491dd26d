#pragma once

#include <json.hpp>

#include "perc/dyadic.hpp"
#include "perc/euclidean.hpp"
#include "perc/gasket.hpp"
#include "perc/snowflake.hpp"
#include "perc/two_point.hpp"
#include "perc/weighted.hpp"

namespace perc {

// Builds a space from its JSON descriptor, e.g.
//   {"kind": "euclidean", "dim": 2}
//   {"kind": "snowflake", "alpha": 0.5, "base": {"kind": "euclidean", "dim": 1}}
inline SpacePtr make_space(const nlohmann::json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    auto with_sigma = [&](std::shared_ptr<Space> sp) -> SpacePtr {
        if (j.contains("sigma")) sp->set_sigma(j.at("sigma").get<double>());
        return sp;
    };
    if (kind == "euclidean") {
        return with_sigma(std::make_shared<EuclideanSpace>(j.at("dim").get<int>()));
    }
    if (kind == "dyadic") {
        return with_sigma(std::make_shared<DyadicSpace>(j.value("min_index", -20)));
    }
    if (kind == "gasket") {
        return with_sigma(std::make_shared<GasketSpace>());
    }
    if (kind == "weighted") {
        return with_sigma(std::make_shared<WeightedEuclideanSpace>(
            j.at("dim").get<int>(), j.value("density", "uniform")));
    }
    if (kind == "snowflake") {
        return with_sigma(std::make_shared<SnowflakeSpace>(
            make_space(j.at("base")), j.at("alpha").get<double>()));
    }
    if (kind == "two_point") {
        return with_sigma(std::make_shared<TwoPointSpace>(j.value("gap", 1.0)));
    }
    throw ConfigError("unknown space kind: " + kind);
}

} // namespace perc
