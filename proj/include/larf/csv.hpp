#pragma once

#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "larf/dataset.hpp"
#include "larf/errors.hpp"

namespace larf {

// Target column selector: 0-based index or header name.
using ColumnRef = std::variant<std::size_t, std::string>;

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

// Strict numeric parse; rejects empty cells, partial parses, and non-numerics.
inline double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
    if (cell.empty()) throw ParseError(row, col, "empty cell");
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last)
        throw ParseError(row, col, "not a number: '" + cell + "'");
    return value;
}

inline std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (detail::trim(line).empty()) continue;
        lines.push_back(line);
    }
    return lines;
}

} // namespace detail

// Loads a numeric feature matrix (no target column). Zero data rows allowed;
// column count must be consistent.
inline std::pair<Matrix, std::vector<std::string>>
load_feature_csv(const std::string& path, bool has_header) {
    auto lines = detail::read_lines(path);
    std::vector<std::string> names;
    std::size_t first_row = 0;
    if (has_header && !lines.empty()) {
        names = detail::split_line(lines[0]);
        first_row = 1;
    }
    const std::size_t n = lines.size() - first_row;
    std::size_t m = names.size();
    std::vector<std::vector<double>> rows;
    rows.reserve(n);
    for (std::size_t r = first_row; r < lines.size(); ++r) {
        auto cells = detail::split_line(lines[r]);
        if (m == 0) m = cells.size();
        if (cells.size() != m)
            throw ParseError(r + 1, cells.size(), "expected " + std::to_string(m) + " columns, got " +
                                                      std::to_string(cells.size()));
        std::vector<double> row(m);
        for (std::size_t c = 0; c < m; ++c) row[c] = detail::parse_cell(cells[c], r + 1, c + 1);
        rows.push_back(std::move(row));
    }
    Matrix x(rows.size(), static_cast<Eigen::Index>(m));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < m; ++c)
            x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return {std::move(x), std::move(names)};
}

// Loads a training dataset: all columns numeric, one designated target.
inline Dataset load_csv(const std::string& path, const ColumnRef& target, bool has_header) {
    auto [all, names] = load_feature_csv(path, has_header);
    const auto m_total = static_cast<std::size_t>(all.cols());
    if (all.rows() == 0) throw EmptyDataset("no data rows in " + path);

    std::size_t target_col = 0;
    if (std::holds_alternative<std::size_t>(target)) {
        target_col = std::get<std::size_t>(target);
        if (target_col >= m_total)
            throw MissingTarget("target column index " + std::to_string(target_col) +
                                " out of range (file has " + std::to_string(m_total) + " columns)");
    } else {
        const auto& name = std::get<std::string>(target);
        if (!has_header) throw MissingTarget("target by name requires a header row");
        auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end()) throw MissingTarget("target column '" + name + "' not found");
        target_col = static_cast<std::size_t>(it - names.begin());
    }

    Matrix x(all.rows(), all.cols() - 1);
    Vector y(all.rows());
    std::vector<std::string> feature_names;
    for (std::size_t c = 0, out = 0; c < m_total; ++c) {
        if (c == target_col) continue;
        x.col(static_cast<Eigen::Index>(out)) = all.col(static_cast<Eigen::Index>(c));
        if (!names.empty()) feature_names.push_back(names[c]);
        ++out;
    }
    y = all.col(static_cast<Eigen::Index>(target_col));
    return Dataset(std::move(x), std::move(y), std::move(feature_names));
}

// Shortest round-trip formatting: reloading reproduces the exact double.
inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

inline void write_csv(const std::string& path, const Dataset& data,
                      const std::string& target_name = "y") {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write file: " + path);
    for (std::size_t c = 0; c < data.n_features(); ++c) {
        out << (data.feature_names.empty() ? "x" + std::to_string(c + 1) : data.feature_names[c]);
        out << ',';
    }
    out << target_name << '\n';
    for (Eigen::Index r = 0; r < data.features.rows(); ++r) {
        for (Eigen::Index c = 0; c < data.features.cols(); ++c)
            out << format_double(data.features(r, c)) << ',';
        out << format_double(data.targets(r)) << '\n';
    }
    if (!out) throw IoError("write failed: " + path);
}

} // namespace larf
