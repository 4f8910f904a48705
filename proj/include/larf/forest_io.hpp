#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "larf/errors.hpp"
#include "larf/forest.hpp"
#include "larf/json_io.hpp"

namespace larf {

constexpr int kForestSchemaVersion = 1;

inline nlohmann::json forest_to_json(const Forest& forest) {
    nlohmann::json doc;
    doc["schema_version"] = kForestSchemaVersion;
    doc["type"] = "larf-forest";
    doc["kind"] = to_string(forest.kind);
    doc["min_leaf_size"] = forest.min_leaf_size;
    doc["rng_seed"] = forest.rng_seed;
    doc["n_features"] = forest.n_features;
    doc["n_train_rows"] = forest.n_train_rows;
    doc["config"] = {
        {"n_trees", forest.config.n_trees},
        {"kind", to_string(forest.config.kind)},
        {"min_leaf_size", forest.config.min_leaf_size},
        {"max_depth", forest.config.max_depth},
        {"features_per_split", forest.config.features_per_split},
        {"rng_seed", forest.config.rng_seed},
    };
    nlohmann::json trees = nlohmann::json::array();
    for (const Tree& tree : forest.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const TreeNode& nd : tree.nodes) {
            if (nd.is_leaf()) {
                nodes.push_back({{"members", nd.members}, {"mean", nd.mean_target}});
            } else {
                nodes.push_back(
                    {{"f", nd.feature}, {"t", nd.threshold}, {"l", nd.left}, {"r", nd.right}});
            }
        }
        trees.push_back({{"nodes", std::move(nodes)}});
    }
    doc["trees"] = std::move(trees);
    return doc;
}

inline Forest forest_from_json(const nlohmann::json& doc) {
    if (doc.value("type", "") != "larf-forest") throw IoError("not a forest document");
    if (doc.value("schema_version", 0) != kForestSchemaVersion)
        throw IoError("unsupported forest schema_version");
    Forest forest;
    forest.kind = forest_kind_from_string(doc.at("kind").get<std::string>());
    forest.min_leaf_size = doc.at("min_leaf_size").get<std::size_t>();
    forest.rng_seed = doc.at("rng_seed").get<std::uint64_t>();
    forest.n_features = doc.at("n_features").get<std::size_t>();
    forest.n_train_rows = doc.at("n_train_rows").get<std::size_t>();
    const auto& cfg = doc.at("config");
    forest.config.n_trees = cfg.at("n_trees").get<std::size_t>();
    forest.config.kind = forest_kind_from_string(cfg.at("kind").get<std::string>());
    forest.config.min_leaf_size = cfg.at("min_leaf_size").get<std::size_t>();
    forest.config.max_depth = cfg.at("max_depth").get<int>();
    forest.config.features_per_split = cfg.at("features_per_split").get<std::size_t>();
    forest.config.rng_seed = cfg.at("rng_seed").get<std::uint64_t>();
    for (const auto& tj : doc.at("trees")) {
        Tree tree;
        for (const auto& nj : tj.at("nodes")) {
            TreeNode nd;
            if (nj.contains("members")) {
                nd.members = nj.at("members").get<std::vector<std::uint32_t>>();
                nd.mean_target = nj.at("mean").get<double>();
            } else {
                nd.feature = nj.at("f").get<int>();
                nd.threshold = nj.at("t").get<double>();
                nd.left = nj.at("l").get<int>();
                nd.right = nj.at("r").get<int>();
            }
            tree.nodes.push_back(std::move(nd));
        }
        forest.trees.push_back(std::move(tree));
    }
    return forest;
}

// 64-bit FNV-1a over the serialized document; used to tag which forest a
// model was trained with.
inline std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

} // namespace larf
