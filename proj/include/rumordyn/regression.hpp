#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rumordyn/errors.hpp"
#include "rumordyn/feature_pipeline.hpp"
#include "rumordyn/rng.hpp"

namespace rumordyn {

struct Dataset {
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> rows;
    std::vector<double> targets;

    std::size_t n_rows() const { return rows.size(); }
    std::size_t n_features() const { return feature_names.size(); }

    void validate() const {
        if (rows.size() != targets.size())
            raise(Errc::dimension_mismatch, "row/target count mismatch");
        for (const auto& r : rows) {
            if (r.size() != feature_names.size())
                raise(Errc::dimension_mismatch, "ragged feature row");
            for (double v : r)
                if (!std::isfinite(v)) raise(Errc::invalid_params, "non-finite feature value");
        }
        for (double t : targets)
            if (!std::isfinite(t)) raise(Errc::invalid_params, "non-finite target");
        for (std::size_t i = 0; i < feature_names.size(); ++i)
            for (std::size_t j = i + 1; j < feature_names.size(); ++j)
                if (feature_names[i] == feature_names[j])
                    raise(Errc::invalid_params, "duplicate feature name " + feature_names[i]);
    }
};

// ---------------------------------------------------------------------------
// Linear regression via the normal equations

struct LinearModel {
    std::vector<double> weights; // one per feature
    double intercept = 0.0;
    bool ridge_used = false;
    double ridge_lambda = 0.0;
};

namespace detail {

// Cholesky solve of an SPD system; returns false on a non-positive pivot.
inline bool cholesky_solve(std::vector<std::vector<double>> m, std::vector<double> rhs,
                           std::vector<double>& out) {
    const std::size_t n = m.size();
    double max_diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(m[i][i]));
    const double tol = 1e-12 * std::max(max_diag, 1.0);
    for (std::size_t j = 0; j < n; ++j) {
        double d = m[j][j];
        for (std::size_t k = 0; k < j; ++k) d -= m[j][k] * m[j][k];
        if (d <= tol) return false;
        m[j][j] = std::sqrt(d);
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = m[i][j];
            for (std::size_t k = 0; k < j; ++k) s -= m[i][k] * m[j][k];
            m[i][j] = s / m[j][j];
        }
    }
    // forward then backward substitution
    for (std::size_t i = 0; i < n; ++i) {
        double s = rhs[i];
        for (std::size_t k = 0; k < i; ++k) s -= m[i][k] * rhs[k];
        rhs[i] = s / m[i][i];
    }
    out.assign(n, 0.0);
    for (std::size_t ii = n; ii-- > 0;) {
        double s = rhs[ii];
        for (std::size_t k = ii + 1; k < n; ++k) s -= m[k][ii] * out[k];
        out[ii] = s / m[ii][ii];
    }
    return true;
}

} // namespace detail

// Exact least squares through X'X theta = X'y with an always-on intercept
// column. Rank-deficient designs either fall back to a small ridge or fail.
inline LinearModel fit_linear(const Dataset& data, bool ridge_fallback = true,
                              double ridge_lambda = 1e-8) {
    data.validate();
    const std::size_t p = data.n_features() + 1; // intercept first
    const std::size_t n = data.n_rows();
    std::vector<std::vector<double>> xtx(p, std::vector<double>(p, 0.0));
    std::vector<double> xty(p, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        std::vector<double> x(p, 1.0);
        for (std::size_t j = 1; j < p; ++j) x[j] = data.rows[r][j - 1];
        for (std::size_t i = 0; i < p; ++i) {
            xty[i] += x[i] * data.targets[r];
            for (std::size_t j = 0; j <= i; ++j) xtx[i][j] += x[i] * x[j];
        }
    }
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i + 1; j < p; ++j) xtx[i][j] = xtx[j][i];

    LinearModel model;
    std::vector<double> theta;
    if (n >= p && detail::cholesky_solve(xtx, xty, theta)) {
        model.intercept = theta[0];
        model.weights.assign(theta.begin() + 1, theta.end());
        return model;
    }
    if (!ridge_fallback)
        raise(Errc::rank_deficient, "design matrix is rank deficient (ridge fallback disabled)");
    for (std::size_t i = 0; i < p; ++i) xtx[i][i] += ridge_lambda;
    if (!detail::cholesky_solve(xtx, xty, theta))
        raise(Errc::rank_deficient, "ridge-regularized system still not solvable");
    model.intercept = theta[0];
    model.weights.assign(theta.begin() + 1, theta.end());
    model.ridge_used = true;
    model.ridge_lambda = ridge_lambda;
    return model;
}

inline double predict(const LinearModel& m, const std::vector<double>& row) {
    if (row.size() != m.weights.size())
        raise(Errc::dimension_mismatch, "row width does not match linear model");
    double y = m.intercept;
    for (std::size_t j = 0; j < row.size(); ++j) y += m.weights[j] * row[j];
    return y;
}

// ---------------------------------------------------------------------------
// CART regression tree

struct CartHyper {
    int max_depth = 4;
    int min_samples_leaf = 5;
    double ccp_alpha = 0.0;
};

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    double value = 0.0; // mean target of the node's training rows
    int left = -1;
    int right = -1;
    double sse = 0.0; // training squared error at this node
    std::size_t count = 0;
};

struct RegressionTree {
    std::vector<TreeNode> nodes; // nodes[0] is the root
    CartHyper hyper;
    std::size_t n_features = 0;

    bool is_leaf(int idx) const { return nodes[std::size_t(idx)].feature < 0; }

    int depth(int idx = 0) const {
        const auto& nd = nodes[std::size_t(idx)];
        if (nd.feature < 0) return 0;
        return 1 + std::max(depth(nd.left), depth(nd.right));
    }

    std::size_t leaf_count(int idx = 0) const {
        const auto& nd = nodes[std::size_t(idx)];
        if (nd.feature < 0) return 1;
        return leaf_count(nd.left) + leaf_count(nd.right);
    }
};

struct SplitChoice {
    std::size_t feature = 0;
    double threshold = 0.0;
    double score = 0.0; // summed child SSE
};

namespace detail {

inline double subset_sse(const std::vector<double>& targets, const std::vector<std::size_t>& idx,
                         double* mean_out = nullptr) {
    double sum = 0.0;
    for (auto i : idx) sum += targets[i];
    const double mean = idx.empty() ? 0.0 : sum / double(idx.size());
    double sse = 0.0;
    for (auto i : idx) {
        const double d = targets[i] - mean;
        sse += d * d;
    }
    if (mean_out) *mean_out = mean;
    return sse;
}

} // namespace detail

// Best (feature, threshold) by minimum summed child squared error. Candidate
// thresholds are midpoints between consecutive distinct sorted values; ties
// resolve to the lowest feature index, then the lowest threshold.
inline std::optional<SplitChoice> best_split(const Dataset& data,
                                             const std::vector<std::size_t>& idx,
                                             int min_samples_leaf) {
    std::optional<SplitChoice> best;
    std::vector<double> vals;
    for (std::size_t j = 0; j < data.n_features(); ++j) {
        vals.clear();
        for (auto i : idx) vals.push_back(data.rows[i][j]);
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
        for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
            const double thr = (vals[k] + vals[k + 1]) / 2.0;
            std::vector<std::size_t> left, right;
            for (auto i : idx)
                (data.rows[i][j] <= thr ? left : right).push_back(i);
            if (left.size() < std::size_t(min_samples_leaf) ||
                right.size() < std::size_t(min_samples_leaf))
                continue;
            const double score =
                detail::subset_sse(data.targets, left) + detail::subset_sse(data.targets, right);
            if (!best || score < best->score) best = SplitChoice{j, thr, score};
        }
    }
    return best;
}

namespace detail {

inline int build_node(const Dataset& data, const std::vector<std::size_t>& idx, int depth,
                      const CartHyper& hyper, RegressionTree& tree) {
    TreeNode node;
    node.count = idx.size();
    node.sse = subset_sse(data.targets, idx, &node.value);
    const int me = int(tree.nodes.size());
    tree.nodes.push_back(node);

    double lo = data.targets[idx.front()], hi = lo;
    for (auto i : idx) {
        lo = std::min(lo, data.targets[i]);
        hi = std::max(hi, data.targets[i]);
    }
    if (depth >= hyper.max_depth || idx.size() < 2 * std::size_t(hyper.min_samples_leaf) ||
        lo == hi)
        return me;

    auto split = best_split(data, idx, hyper.min_samples_leaf);
    if (!split) return me;

    std::vector<std::size_t> left, right;
    for (auto i : idx)
        (data.rows[i][split->feature] <= split->threshold ? left : right).push_back(i);
    tree.nodes[std::size_t(me)].feature = int(split->feature);
    tree.nodes[std::size_t(me)].threshold = split->threshold;
    const int l = build_node(data, left, depth + 1, hyper, tree);
    tree.nodes[std::size_t(me)].left = l;
    const int r = build_node(data, right, depth + 1, hyper, tree);
    tree.nodes[std::size_t(me)].right = r;
    return me;
}

inline double subtree_sse(const RegressionTree& t, int idx) {
    const auto& nd = t.nodes[std::size_t(idx)];
    if (nd.feature < 0) return nd.sse;
    return subtree_sse(t, nd.left) + subtree_sse(t, nd.right);
}

// Weakest-link cost-complexity pruning: collapse internal nodes whose
// per-leaf improvement rate falls below alpha. Strict comparison keeps
// alpha == 0 a no-op.
inline void prune(RegressionTree& t, double alpha) {
    if (!(alpha > 0.0)) return;
    for (;;) {
        double best_g = std::numeric_limits<double>::infinity();
        int best_node = -1;
        for (int i = 0; i < int(t.nodes.size()); ++i) {
            const auto& nd = t.nodes[std::size_t(i)];
            if (nd.feature < 0) continue;
            const std::size_t leaves = t.leaf_count(i);
            const double g = (nd.sse - subtree_sse(t, i)) / double(leaves - 1);
            if (g < best_g) {
                best_g = g;
                best_node = i;
            }
        }
        if (best_node < 0 || !(best_g < alpha)) return;
        auto& nd = t.nodes[std::size_t(best_node)];
        nd.feature = -1;
        nd.left = nd.right = -1;
    }
}

} // namespace detail

inline RegressionTree fit_cart(const Dataset& data, const CartHyper& hyper = {}) {
    data.validate();
    if (data.n_rows() == 0) raise(Errc::too_few_rows, "cannot fit a tree on zero rows");
    if (hyper.min_samples_leaf < 1 || hyper.max_depth < 0)
        raise(Errc::invalid_params, "bad CART hyperparameters");
    RegressionTree tree;
    tree.hyper = hyper;
    tree.n_features = data.n_features();
    std::vector<std::size_t> idx(data.n_rows());
    std::iota(idx.begin(), idx.end(), 0);
    detail::build_node(data, idx, 0, hyper, tree);
    detail::prune(tree, hyper.ccp_alpha);
    return tree;
}

inline double predict(const RegressionTree& t, const std::vector<double>& row) {
    if (row.size() != t.n_features)
        raise(Errc::dimension_mismatch, "row width does not match tree");
    int cur = 0;
    while (!t.is_leaf(cur)) {
        const auto& nd = t.nodes[std::size_t(cur)];
        cur = (row[std::size_t(nd.feature)] <= nd.threshold) ? nd.left : nd.right;
    }
    return t.nodes[std::size_t(cur)].value;
}

// Total squared-error reduction credited to each split feature, normalized to
// sum to one. A single-leaf tree has no reductions and reports all zeros.
inline std::vector<double> feature_importances(const RegressionTree& t) {
    std::vector<double> imp(t.n_features, 0.0);
    for (const auto& nd : t.nodes) {
        if (nd.feature < 0) continue;
        const double reduction =
            nd.sse - (t.nodes[std::size_t(nd.left)].sse + t.nodes[std::size_t(nd.right)].sse);
        imp[std::size_t(nd.feature)] += reduction;
    }
    const double total = std::accumulate(imp.begin(), imp.end(), 0.0);
    if (total > 0.0)
        for (double& v : imp) v /= total;
    return imp;
}

// ---------------------------------------------------------------------------
// Cross-validation

enum class ModelKind { linear, cart };

inline const char* model_kind_name(ModelKind k) {
    return k == ModelKind::linear ? "linear" : "cart";
}

struct CvResult {
    std::vector<double> fold_mse;
    double mean_mse = 0.0;
    double std_mse = 0.0;
    std::uint64_t seed = 0;
    int k = 0;
};

// Seeded shuffle into k near-equal folds: disjoint, covering, sizes differing
// by at most one.
inline std::vector<std::vector<std::size_t>> fold_partition(std::size_t n, int k,
                                                            std::uint64_t seed) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(seed);
    rng.shuffle(perm);
    std::vector<std::vector<std::size_t>> folds;
    std::size_t start = 0;
    for (int f = 0; f < k; ++f) {
        const std::size_t size = n / std::size_t(k) + (std::size_t(f) < n % std::size_t(k) ? 1 : 0);
        folds.emplace_back(perm.begin() + long(start), perm.begin() + long(start + size));
        start += size;
    }
    return folds;
}

// Normalization ranges come from the training fold only and are applied
// (clamped) to the held-out fold.
inline CvResult cross_validate(const Dataset& raw, ModelKind kind, int k = 5,
                               std::uint64_t seed = 0, const CartHyper& hyper = {},
                               bool ridge_fallback = true) {
    raw.validate();
    if (k < 2) raise(Errc::invalid_params, "cross-validation needs k >= 2");
    if (raw.n_rows() < std::size_t(k))
        raise(Errc::too_few_rows, "need at least k rows for k-fold CV");

    const std::size_t n = raw.n_rows();
    const auto folds = fold_partition(n, k, seed);

    CvResult cv;
    cv.seed = seed;
    cv.k = k;
    for (int f = 0; f < k; ++f) {
        const std::vector<std::size_t>& val = folds[std::size_t(f)];

        Dataset train;
        train.feature_names = raw.feature_names;
        std::vector<std::vector<double>> val_rows;
        std::vector<double> val_targets;
        {
            std::vector<bool> in_val(n, false);
            for (auto i : val) in_val[i] = true;
            for (std::size_t i = 0; i < n; ++i) {
                if (in_val[i]) {
                    val_rows.push_back(raw.rows[i]);
                    val_targets.push_back(raw.targets[i]);
                } else {
                    train.rows.push_back(raw.rows[i]);
                    train.targets.push_back(raw.targets[i]);
                }
            }
        }

        NormalizationRanges ranges = fit_ranges(train.rows);
        train.rows = apply_ranges(train.rows, ranges);
        val_rows = apply_ranges(val_rows, ranges);

        double sse = 0.0;
        if (kind == ModelKind::linear) {
            LinearModel m = fit_linear(train, ridge_fallback);
            for (std::size_t i = 0; i < val_rows.size(); ++i) {
                const double e = predict(m, val_rows[i]) - val_targets[i];
                sse += e * e;
            }
        } else {
            RegressionTree t = fit_cart(train, hyper);
            for (std::size_t i = 0; i < val_rows.size(); ++i) {
                const double e = predict(t, val_rows[i]) - val_targets[i];
                sse += e * e;
            }
        }
        cv.fold_mse.push_back(sse / double(val_rows.size()));
    }
    cv.mean_mse = std::accumulate(cv.fold_mse.begin(), cv.fold_mse.end(), 0.0) / double(k);
    double var = 0.0;
    for (double m : cv.fold_mse) var += (m - cv.mean_mse) * (m - cv.mean_mse);
    cv.std_mse = std::sqrt(var / double(k - 1));
    return cv;
}

// ---------------------------------------------------------------------------
// Correlation and report tables

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) raise(Errc::dimension_mismatch, "pearson needs equal lengths");
    if (x.size() < 2) raise(Errc::invalid_params, "pearson needs at least 2 points");
    const double n = double(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) raise(Errc::constant_series, "pearson of a constant series");
    return sxy / std::sqrt(sxx * syy);
}

struct CorrelationRow {
    std::string feature;
    std::optional<double> r_a, r_b, r_c; // blank cells carry a note instead
    std::string note;
};

// Pearson r of each named feature column against the three fitted labels.
inline std::vector<CorrelationRow> correlation_report(
    const FeatureMatrix& m, const std::vector<std::string>& features) {
    std::vector<CorrelationRow> rows;
    const auto col = [&](const std::string& name) {
        std::vector<double> v;
        const std::size_t j = m.column_index(name);
        for (const auto& r : m.rows) v.push_back(r[j]);
        return v;
    };
    const std::vector<double> la = col("label_a"), lb = col("label_b"), lc = col("label_c");
    for (const auto& f : features) {
        CorrelationRow row;
        row.feature = f;
        const std::vector<double> x = col(f);
        auto cell = [&](const std::vector<double>& label) -> std::optional<double> {
            try {
                return pearson(x, label);
            } catch (const Error& e) {
                if (e.code() == Errc::constant_series) {
                    row.note = "constant series";
                    return std::nullopt;
                }
                throw;
            }
        };
        row.r_a = cell(la);
        row.r_b = cell(lb);
        row.r_c = cell(lc);
        rows.push_back(std::move(row));
    }
    return rows;
}

struct ImportanceRow {
    std::string feature;
    double weight = 0.0;     // signed linear weight
    double importance = 0.0; // normalized tree importance
};

inline std::vector<ImportanceRow> importance_report(const LinearModel& linear,
                                                    const RegressionTree& tree,
                                                    const std::vector<std::string>& features) {
    if (linear.weights.size() != features.size() || tree.n_features != features.size())
        raise(Errc::dimension_mismatch, "models were not trained on the given feature set");
    const auto imp = feature_importances(tree);
    std::vector<ImportanceRow> rows;
    for (std::size_t j = 0; j < features.size(); ++j)
        rows.push_back({features[j], linear.weights[j], imp[j]});
    return rows;
}

// ---------------------------------------------------------------------------
// Persistence

inline nlohmann::json ranges_json(const NormalizationRanges& r) {
    return {{"min", r.min},
            {"max", r.max},
            {"constant", std::vector<int>(r.constant.begin(), r.constant.end())}};
}

inline NormalizationRanges ranges_from_json(const nlohmann::json& j) {
    NormalizationRanges r;
    r.min = j.at("min").get<std::vector<double>>();
    r.max = j.at("max").get<std::vector<double>>();
    for (int c : j.at("constant").get<std::vector<int>>()) r.constant.push_back(c != 0);
    if (r.min.size() != r.max.size() || r.min.size() != r.constant.size())
        raise(Errc::schema_violation, "normalization ranges are ragged");
    return r;
}

inline nlohmann::json linear_model_json(const LinearModel& m,
                                        const std::vector<std::string>& features,
                                        const NormalizationRanges& ranges,
                                        const std::string& target) {
    return {{"kind", "linear"},
            {"target", target},
            {"feature_names", features},
            {"normalization", ranges_json(ranges)},
            {"weights", m.weights},
            {"intercept", m.intercept},
            {"ridge_used", m.ridge_used},
            {"ridge_lambda", m.ridge_lambda}};
}

namespace detail {

inline nlohmann::json tree_node_json(const RegressionTree& t, int idx) {
    const auto& nd = t.nodes[std::size_t(idx)];
    if (nd.feature < 0) return {{"value", nd.value}};
    return {{"feature", nd.feature},
            {"threshold", nd.threshold},
            {"left", tree_node_json(t, nd.left)},
            {"right", tree_node_json(t, nd.right)}};
}

inline int tree_node_from_json(const nlohmann::json& j, RegressionTree& t) {
    TreeNode nd;
    const int me = int(t.nodes.size());
    t.nodes.push_back(nd);
    if (j.contains("value")) {
        t.nodes[std::size_t(me)].value = j.at("value").get<double>();
        return me;
    }
    t.nodes[std::size_t(me)].feature = j.at("feature").get<int>();
    t.nodes[std::size_t(me)].threshold = j.at("threshold").get<double>();
    const int l = tree_node_from_json(j.at("left"), t);
    t.nodes[std::size_t(me)].left = l;
    const int r = tree_node_from_json(j.at("right"), t);
    t.nodes[std::size_t(me)].right = r;
    return me;
}

} // namespace detail

inline nlohmann::json tree_model_json(const RegressionTree& t,
                                      const std::vector<std::string>& features,
                                      const NormalizationRanges& ranges,
                                      const std::string& target) {
    return {{"kind", "cart"},
            {"target", target},
            {"feature_names", features},
            {"normalization", ranges_json(ranges)},
            {"hyper",
             {{"max_depth", t.hyper.max_depth},
              {"min_samples_leaf", t.hyper.min_samples_leaf},
              {"ccp_alpha", t.hyper.ccp_alpha}}},
            {"tree", detail::tree_node_json(t, 0)}};
}

inline RegressionTree tree_model_from_json(const nlohmann::json& j) {
    RegressionTree t;
    t.n_features = j.at("feature_names").get<std::vector<std::string>>().size();
    t.hyper.max_depth = j.at("hyper").at("max_depth").get<int>();
    t.hyper.min_samples_leaf = j.at("hyper").at("min_samples_leaf").get<int>();
    t.hyper.ccp_alpha = j.at("hyper").at("ccp_alpha").get<double>();
    detail::tree_node_from_json(j.at("tree"), t);
    return t;
}

inline nlohmann::json cv_json(const CvResult& cv, ModelKind kind, const std::string& target) {
    return {{"model", model_kind_name(kind)}, {"target", target},   {"k", cv.k},
            {"seed", cv.seed},                {"fold_mse", cv.fold_mse},
            {"mean_mse", cv.mean_mse},        {"std_mse", cv.std_mse}};
}

} // namespace rumordyn
