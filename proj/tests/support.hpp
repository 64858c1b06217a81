#pragma once
#include <fstream>
#include <string>

#include <json.hpp>

#include "hs/geometry.hpp"

namespace test {

inline const nlohmann::json& frozen() {
    static const nlohmann::json j = [] {
        std::ifstream f(HS_ORACLE_PATH);
        return nlohmann::json::parse(f);
    }();
    return j;
}

inline const nlohmann::json& battery() {
    static const nlohmann::json j = [] {
        std::ifstream f(HS_BATTERY_PATH);
        return nlohmann::json::parse(f);
    }();
    return j;
}

inline hs::DomainSpec spec(const std::string& name) {
    nlohmann::json j = battery().at("domains").at(name);
    j["name"] = name;
    return hs::DomainSpec::from_json(j);
}

inline hs::DomainSpec square(int res = 64, double scale = 1.0) {
    hs::DomainSpec s;
    s.name = "square";
    s.family = "rectangle";
    s.params = {{"width", 1.0}, {"height", 1.0}, {"scale", scale}};
    s.resolution = res;
    return s;
}

// Left wall Dirichlet, the rest Neumann.
inline hs::DomainSpec quarter_mode_square(int res = 64) {
    hs::DomainSpec s = square(res);
    s.name = "square_left_dirichlet";
    s.bc_default = hs::Bc::Neumann;
    s.overrides.push_back({"left", std::nullopt, hs::Bc::Dirichlet});
    return s;
}

} // namespace test
