#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "larf/csv.hpp"
#include "larf/errors.hpp"
#include "larf/json_io.hpp"

namespace larf {

// Column-layout descriptor for an external CSV dataset: names the target
// column and optionally pins the expected shape as a load-time check.
struct DatasetSchema {
    std::string name;
    ColumnRef target = std::string("y");
    bool has_header = true;
    std::optional<std::size_t> expected_m;
    std::optional<std::size_t> expected_n;
};

inline DatasetSchema schema_from_json(const nlohmann::json& j) {
    if (j.value("type", "larf-dataset-schema") != "larf-dataset-schema")
        throw IoError("not a dataset schema document");
    DatasetSchema s;
    s.name = j.value("name", "");
    if (j.contains("target")) {
        if (j.at("target").is_number_integer())
            s.target = j.at("target").get<std::size_t>();
        else
            s.target = j.at("target").get<std::string>();
    }
    s.has_header = j.value("has_header", true);
    if (j.contains("expected_m") && !j.at("expected_m").is_null())
        s.expected_m = j.at("expected_m").get<std::size_t>();
    if (j.contains("expected_n") && !j.at("expected_n").is_null())
        s.expected_n = j.at("expected_n").get<std::size_t>();
    return s;
}

inline Dataset load_csv_with_schema(const std::string& path, const DatasetSchema& schema) {
    Dataset data = load_csv(path, schema.target, schema.has_header);
    if (schema.expected_m && data.n_features() != *schema.expected_m)
        throw InvalidSpec("dataset '" + schema.name + "': expected " +
                          std::to_string(*schema.expected_m) + " features, file has " +
                          std::to_string(data.n_features()));
    if (schema.expected_n && data.n_rows() != *schema.expected_n)
        throw InvalidSpec("dataset '" + schema.name + "': expected " +
                          std::to_string(*schema.expected_n) + " rows, file has " +
                          std::to_string(data.n_rows()));
    return data;
}

} // namespace larf
