#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "larf/errors.hpp"

namespace larf {

inline void save_json(const nlohmann::json& doc, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write file: " + path);
    out << doc.dump(2) << '\n';
    if (!out) throw IoError("write failed: " + path);
}

inline nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open file: " + path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("invalid JSON in " + path + ": " + e.what());
    }
    return doc;
}

} // namespace larf
