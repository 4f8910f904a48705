#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "larf/forest_io.hpp"
#include "larf/models.hpp"

namespace larf {

constexpr int kModelSchemaVersion = 1;

namespace detail {

inline nlohmann::json vector_to_json(const Vector& v) {
    nlohmann::json arr = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

inline Vector vector_from_json(const nlohmann::json& arr) {
    Vector v(static_cast<Eigen::Index>(arr.size()));
    for (std::size_t i = 0; i < arr.size(); ++i) v(static_cast<Eigen::Index>(i)) = arr[i].get<double>();
    return v;
}

inline nlohmann::json matrix_to_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

template <typename MatrixT>
inline MatrixT matrix_from_json(const nlohmann::json& rows) {
    const auto r = rows.size();
    const auto c = r == 0 ? 0 : rows[0].size();
    MatrixT m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
    for (std::size_t i = 0; i < r; ++i) {
        if (rows[i].size() != c) throw IoError("ragged matrix in document");
        for (std::size_t j = 0; j < c; ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j].get<double>();
    }
    return m;
}

} // namespace detail

// Self-contained model document: forest (plus its hash), kernel, trained
// parameters, standardization statistics, and the standardized training rows
// the leaf attention reads at prediction time.
inline nlohmann::json model_to_json(const TrainedModel& model) {
    nlohmann::json forest_doc = forest_to_json(*model.forest);
    nlohmann::json doc;
    doc["schema_version"] = kModelSchemaVersion;
    doc["type"] = "larf-model";
    doc["variant"] = to_string(model.variant);
    doc["kernel"] = {{"tau0", model.kernel.tau0}, {"taus", model.kernel.taus}};
    doc["varsigma"] = model.varsigma;
    doc["training_mse"] = model.training_mse;
    doc["qp_converged"] = model.qp_converged;
    doc["params"] = {{"gammas", detail::matrix_to_json(model.params.gammas)},
                     {"epsilons", detail::vector_to_json(model.params.epsilons)}};
    doc["standardizer"] = {{"mean", detail::vector_to_json(model.standardizer.mean)},
                           {"scale", detail::vector_to_json(model.standardizer.scale)}};
    doc["train_data"] = {{"features", detail::matrix_to_json(model.train_data.features)},
                         {"targets", detail::vector_to_json(model.train_data.targets)},
                         {"feature_names", model.train_data.feature_names}};
    doc["forest_hash"] = fnv1a_hex(forest_doc.dump());
    doc["forest"] = std::move(forest_doc);
    return doc;
}

inline TrainedModel model_from_json(const nlohmann::json& doc) {
    if (doc.value("type", "") != "larf-model") throw IoError("not a model document");
    if (doc.value("schema_version", 0) != kModelSchemaVersion)
        throw IoError("unsupported model schema_version");
    TrainedModel model;
    model.variant = variant_from_string(doc.at("variant").get<std::string>());
    model.kernel.tau0 = doc.at("kernel").at("tau0").get<double>();
    model.kernel.taus = doc.at("kernel").at("taus").get<std::vector<double>>();
    model.varsigma = doc.at("varsigma").get<double>();
    model.training_mse = doc.at("training_mse").get<double>();
    model.qp_converged = doc.at("qp_converged").get<bool>();
    model.params.gammas = detail::matrix_from_json<Eigen::MatrixXd>(doc.at("params").at("gammas"));
    model.params.epsilons = detail::vector_from_json(doc.at("params").at("epsilons"));
    model.standardizer.mean = detail::vector_from_json(doc.at("standardizer").at("mean"));
    model.standardizer.scale = detail::vector_from_json(doc.at("standardizer").at("scale"));
    Matrix x = detail::matrix_from_json<Matrix>(doc.at("train_data").at("features"));
    Vector y = detail::vector_from_json(doc.at("train_data").at("targets"));
    auto names = doc.at("train_data").at("feature_names").get<std::vector<std::string>>();
    model.train_data = Dataset(std::move(x), std::move(y), std::move(names));
    auto forest = std::make_shared<Forest>(forest_from_json(doc.at("forest")));
    const std::string stored_hash = doc.at("forest_hash").get<std::string>();
    if (fnv1a_hex(forest_to_json(*forest).dump()) != stored_hash)
        throw IoError("forest hash mismatch: model document is inconsistent");
    model.forest = std::move(forest);
    model.validate();
    return model;
}

inline void save_model(const TrainedModel& model, const std::string& path) {
    save_json(model_to_json(model), path);
}

inline TrainedModel load_model(const std::string& path) { return model_from_json(load_json(path)); }

} // namespace larf
