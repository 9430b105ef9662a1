#pragma once

#include <set>
#include <string>

#include <json.hpp>

#include "rumordyn/errors.hpp"
#include "rumordyn/feature_pipeline.hpp"

namespace rumordyn {

// Output documents are validated against these shapes before anything is
// written; a violation is a bug surfaced as exit code 5, never a bad file.

namespace detail {

inline void require_keys(const nlohmann::json& j, const std::set<std::string>& required,
                         const std::string& what, bool exact = true) {
    if (!j.is_object()) raise(Errc::schema_violation, what + ": expected an object");
    for (const auto& k : required)
        if (!j.contains(k)) raise(Errc::schema_violation, what + ": missing key '" + k + "'");
    if (exact)
        for (const auto& [k, v] : j.items())
            if (!required.count(k))
                raise(Errc::schema_violation, what + ": unexpected key '" + k + "'");
}

} // namespace detail

inline void validate_fit_result_schema(const nlohmann::json& j) {
    detail::require_keys(
        j, {"a", "b", "c", "iterations", "rmse", "window_days", "status", "day0_shift"},
        "fit result");
    for (const char* k : {"a", "b", "c", "rmse"})
        if (!j.at(k).is_number()) raise(Errc::schema_violation, std::string("fit result: '") + k + "' must be a number");
    for (const char* k : {"iterations", "window_days", "day0_shift"})
        if (!j.at(k).is_number_integer())
            raise(Errc::schema_violation, std::string("fit result: '") + k + "' must be an integer");
    const auto status = j.at("status").get<std::string>();
    if (status != "ok" && status != "no_decay")
        raise(Errc::schema_violation, "fit result: bad status '" + status + "'");
}

inline void validate_model_schema(const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("kind"))
        raise(Errc::schema_violation, "model: missing 'kind'");
    const auto kind = j.at("kind").get<std::string>();
    const auto n_features = j.at("feature_names").get<std::vector<std::string>>().size();
    const auto& norm = j.at("normalization");
    for (const char* k : {"min", "max", "constant"})
        if (norm.at(k).size() != n_features)
            raise(Errc::schema_violation, "model: normalization arrays must match feature count");
    if (kind == "linear") {
        detail::require_keys(j,
                             {"kind", "target", "feature_names", "normalization", "weights",
                              "intercept", "ridge_used", "ridge_lambda"},
                             "linear model");
        if (j.at("weights").size() != n_features)
            raise(Errc::schema_violation, "linear model: one weight per feature required");
    } else if (kind == "cart") {
        detail::require_keys(
            j, {"kind", "target", "feature_names", "normalization", "hyper", "tree"},
            "cart model");
    } else {
        raise(Errc::schema_violation, "model: unknown kind '" + kind + "'");
    }
}

inline void validate_cv_schema(const nlohmann::json& j) {
    detail::require_keys(j, {"model", "target", "k", "seed", "fold_mse", "mean_mse", "std_mse"},
                         "cv result");
    if (j.at("fold_mse").size() != j.at("k").get<std::size_t>())
        raise(Errc::schema_violation, "cv result: fold_mse must have k entries");
}

inline void validate_filter_report_schema(const nlohmann::json& j) {
    detail::require_keys(j, {"total", "accepted", "rejections"}, "filter report");
    const auto total = j.at("total").get<std::size_t>();
    const auto accepted = j.at("accepted").get<std::size_t>();
    if (accepted + j.at("rejections").size() != total)
        raise(Errc::schema_violation, "filter report: accepted + rejected != total");
}

inline void validate_report_schema(const nlohmann::json& j) {
    detail::require_keys(j, {"seed", "k", "weights", "importances", "cv", "correlations"},
                         "report", /*exact=*/false);
    for (const char* k : {"linear_a", "cart_a", "linear_b", "cart_b"})
        if (!j.at("cv").contains(k))
            raise(Errc::schema_violation, std::string("report: cv missing '") + k + "'");
    if (!j.at("correlations").is_array())
        raise(Errc::schema_violation, "report: correlations must be an array");
}

inline void validate_feature_matrix_schema(const FeatureMatrix& m) {
    for (const auto& col : base_feature_columns())
        if (!m.has_column(col))
            raise(Errc::schema_violation, "feature matrix: missing column '" + col + "'");
    const bool a = m.has_column("label_a"), b = m.has_column("label_b"),
               c = m.has_column("label_c");
    if (a != b || b != c)
        raise(Errc::schema_violation, "feature matrix: label columns must appear together");
}

} // namespace rumordyn
