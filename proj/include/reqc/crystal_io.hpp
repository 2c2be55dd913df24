#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "reqc/crystal.hpp"
#include "reqc/errors.hpp"

namespace reqc {

inline constexpr int kCrystalFormatVersion = 1;

namespace detail {

inline const char* to_string(Species s) {
    return s == Species::readout ? "readout" : "qubit_dopant";
}

inline const char* to_string(Level l) {
    switch (l) {
        case Level::zero: return "zero";
        case Level::one: return "one";
        case Level::aux: return "aux";
        case Level::e: return "e";
    }
    return "zero";
}

inline Species species_from_string(const std::string& s, const std::string& where) {
    if (s == "qubit_dopant") return Species::qubit_dopant;
    if (s == "readout") return Species::readout;
    throw schema_error(where + ": unknown species '" + s + "'");
}

inline Level level_from_string(const std::string& s, const std::string& where) {
    if (s == "zero") return Level::zero;
    if (s == "one") return Level::one;
    if (s == "aux") return Level::aux;
    if (s == "e") return Level::e;
    throw schema_error(where + ": unknown level '" + s + "'");
}

template <typename T>
T require(const nlohmann::json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw schema_error(where + ": missing field '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw schema_error(where + ": field '" + key + "': " + e.what());
    }
}

}  // namespace detail

inline nlohmann::json crystal_to_json(const Crystal& c) {
    nlohmann::json j;
    j["format_version"] = kCrystalFormatVersion;
    j["params"] = {{"box_side", c.params.box_side},
                   {"density", c.params.density},
                   {"bandwidth_hz", c.params.bandwidth_hz},
                   {"dmu_default", c.params.dmu_default},
                   {"seed", c.params.seed}};
    auto& ions = j["ions"] = nlohmann::json::array();
    for (const auto& ion : c.ions)
        ions.push_back({{"id", ion.id},
                        {"pos", {ion.pos.x, ion.pos.y, ion.pos.z}},
                        {"shift", ion.shift_hz},
                        {"dmu", ion.dmu},
                        {"species", detail::to_string(ion.species)},
                        {"level", detail::to_string(ion.level)}});
    return j;
}

inline Crystal crystal_from_json(const nlohmann::json& j) {
    const int version = detail::require<int>(j, "format_version", "crystal file");
    if (version != kCrystalFormatVersion)
        throw schema_error("crystal file: unsupported format_version " + std::to_string(version));

    Crystal c;
    const auto& pj = j.contains("params") ? j.at("params") : nlohmann::json();
    if (!pj.is_object()) throw schema_error("crystal file: missing 'params' object");
    c.params.box_side = detail::require<double>(pj, "box_side", "params");
    c.params.density = detail::require<double>(pj, "density", "params");
    c.params.bandwidth_hz = detail::require<double>(pj, "bandwidth_hz", "params");
    c.params.dmu_default = detail::require<double>(pj, "dmu_default", "params");
    c.params.seed = detail::require<std::uint64_t>(pj, "seed", "params");
    validate(c.params);

    if (!j.contains("ions") || !j.at("ions").is_array())
        throw schema_error("crystal file: missing 'ions' array");
    std::size_t index = 0;
    for (const auto& ij : j.at("ions")) {
        const std::string where = "ions[" + std::to_string(index++) + "]";
        Ion ion;
        ion.id = detail::require<int>(ij, "id", where);
        const auto pos = detail::require<std::vector<double>>(ij, "pos", where);
        if (pos.size() != 3) throw schema_error(where + ": 'pos' must have 3 components");
        ion.pos = {pos[0], pos[1], pos[2]};
        ion.shift_hz = detail::require<double>(ij, "shift", where);
        ion.dmu = detail::require<double>(ij, "dmu", where);
        ion.species = detail::species_from_string(
            detail::require<std::string>(ij, "species", where), where);
        ion.level =
            detail::level_from_string(detail::require<std::string>(ij, "level", where), where);

        if (!(ion.dmu > 0)) throw schema_error(where + ": 'dmu' must be positive");
        if (ion.shift_hz < 0 || ion.shift_hz >= c.params.bandwidth_hz)
            throw schema_error(where + ": 'shift' outside [0, bandwidth)");
        auto inside = [&](double v) { return v >= 0 && v <= c.params.box_side; };
        if (!inside(ion.pos.x) || !inside(ion.pos.y) || !inside(ion.pos.z))
            throw schema_error(where + ": 'pos' outside the periodic box");
        c.ions.push_back(ion);
    }
    return c;
}

inline void save_crystal(const Crystal& c, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw error("cannot open '" + path + "' for writing");
    out << crystal_to_json(c).dump(1) << "\n";
    if (!out) throw error("write to '" + path + "' failed");
}

inline Crystal load_crystal(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw error("cannot open '" + path + "' for reading");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw schema_error("crystal file '" + path + "': " + e.what());
    }
    return crystal_from_json(j);
}

}  // namespace reqc
