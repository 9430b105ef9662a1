#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "rumordyn/regression.hpp"
#include "rumordyn/rng.hpp"
#include "rumordyn/schemas.hpp"

using namespace rumordyn;

namespace {

Dataset make_dataset(std::vector<std::string> names, std::vector<std::vector<double>> rows,
                     std::vector<double> targets) {
    Dataset d;
    d.feature_names = std::move(names);
    d.rows = std::move(rows);
    d.targets = std::move(targets);
    return d;
}

double training_mse(const Dataset& d, const LinearModel& m) {
    double sse = 0.0;
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        const double e = predict(m, d.rows[i]) - d.targets[i];
        sse += e * e;
    }
    return sse / double(d.n_rows());
}

double training_mse(const Dataset& d, const RegressionTree& t) {
    double sse = 0.0;
    for (std::size_t i = 0; i < d.n_rows(); ++i) {
        const double e = predict(t, d.rows[i]) - d.targets[i];
        sse += e * e;
    }
    return sse / double(d.n_rows());
}

// Independent oracle: plain gradient descent on the least-squares objective,
// step size from a power-iteration estimate of the Gram spectral radius.
std::vector<double> gd_least_squares(const Dataset& d, int max_iter = 200000) {
    const std::size_t p = d.n_features() + 1;
    const std::size_t n = d.n_rows();
    auto aug = [&](std::size_t r, std::size_t j) {
        return j == 0 ? 1.0 : d.rows[r][j - 1];
    };
    // largest eigenvalue of X'X via power iteration
    std::vector<double> v(p, 1.0), w(p, 0.0);
    double lambda = 1.0;
    for (int it = 0; it < 200; ++it) {
        std::fill(w.begin(), w.end(), 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            double dot = 0.0;
            for (std::size_t j = 0; j < p; ++j) dot += aug(r, j) * v[j];
            for (std::size_t j = 0; j < p; ++j) w[j] += aug(r, j) * dot;
        }
        double norm = 0.0;
        for (double x : w) norm += x * x;
        norm = std::sqrt(norm);
        lambda = norm;
        for (std::size_t j = 0; j < p; ++j) v[j] = w[j] / norm;
    }
    const double step = 1.0 / lambda;
    std::vector<double> theta(p, 0.0), grad(p, 0.0);
    for (int it = 0; it < max_iter; ++it) {
        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t r = 0; r < n; ++r) {
            double pred = 0.0;
            for (std::size_t j = 0; j < p; ++j) pred += aug(r, j) * theta[j];
            const double e = pred - d.targets[r];
            for (std::size_t j = 0; j < p; ++j) grad[j] += e * aug(r, j);
        }
        double gnorm = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            theta[j] -= step * grad[j];
            gnorm += grad[j] * grad[j];
        }
        if (std::sqrt(gnorm) < 1e-11) break;
    }
    return theta;
}

// Independent oracle: enumerate every (feature, midpoint) split by direct
// row scans and return the argmin with the same tie-breaking order.
struct OracleSplit {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    double score = 0.0;
};

OracleSplit exhaustive_best_split(const Dataset& d, int min_leaf) {
    OracleSplit best;
    for (std::size_t j = 0; j < d.n_features(); ++j) {
        std::vector<double> uniq;
        for (const auto& r : d.rows) uniq.push_back(r[j]);
        std::sort(uniq.begin(), uniq.end());
        uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
        for (std::size_t u = 0; u + 1 < uniq.size(); ++u) {
            const double thr = (uniq[u] + uniq[u + 1]) / 2.0;
            double suml = 0.0, sumr = 0.0;
            std::size_t nl = 0, nr = 0;
            for (std::size_t i = 0; i < d.n_rows(); ++i)
                if (d.rows[i][j] <= thr) {
                    suml += d.targets[i];
                    ++nl;
                } else {
                    sumr += d.targets[i];
                    ++nr;
                }
            if (nl < std::size_t(min_leaf) || nr < std::size_t(min_leaf)) continue;
            const double ml = suml / double(nl), mr = sumr / double(nr);
            double sse = 0.0;
            for (std::size_t i = 0; i < d.n_rows(); ++i) {
                const double m = d.rows[i][j] <= thr ? ml : mr;
                const double e = d.targets[i] - m;
                sse += e * e;
            }
            if (!best.found || sse < best.score) best = {true, j, thr, sse};
        }
    }
    return best;
}

} // namespace

TEST_CASE("noiseless line is fit exactly") {
    Dataset d = make_dataset({"x"}, {}, {});
    for (int i = 0; i < 10; ++i) {
        d.rows.push_back({double(i) / 9.0});
        d.targets.push_back(2.0 * d.rows.back()[0] + 1.0);
    }
    auto m = fit_linear(d);
    CHECK(m.weights[0] == Catch::Approx(2.0).margin(1e-12));
    CHECK(m.intercept == Catch::Approx(1.0).margin(1e-12));
    CHECK_FALSE(m.ridge_used);
}

TEST_CASE("normal equations agree with a gradient-descent oracle") {
    Rng rng(101);
    Dataset d = make_dataset({"x1", "x2", "x3", "x4", "x5"}, {}, {});
    for (int i = 0; i < 20; ++i) {
        std::vector<double> row;
        for (int j = 0; j < 5; ++j) row.push_back(rng.uniform());
        const double y = 0.4 - 1.2 * row[0] + 0.8 * row[1] + 2.5 * row[2] - 0.3 * row[3] +
                         0.05 * row[4] + rng.normal(0.0, 0.1);
        d.rows.push_back(row);
        d.targets.push_back(y);
    }
    auto m = fit_linear(d);
    auto theta = gd_least_squares(d);
    CHECK(m.intercept == Catch::Approx(theta[0]).margin(1e-6));
    for (std::size_t j = 0; j < 5; ++j)
        CHECK(m.weights[j] == Catch::Approx(theta[j + 1]).margin(1e-6));
}

TEST_CASE("training residuals are orthogonal to every feature column") {
    Rng rng(555);
    Dataset d = make_dataset({"a", "b", "c"}, {}, {});
    for (int i = 0; i < 40; ++i) {
        d.rows.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
        d.targets.push_back(rng.normal());
    }
    auto m = fit_linear(d);
    for (std::size_t j = 0; j < 3; ++j) {
        double dot = 0.0, res_sum = 0.0;
        for (std::size_t i = 0; i < d.n_rows(); ++i) {
            const double r = d.targets[i] - predict(m, d.rows[i]);
            dot += r * d.rows[i][j];
            res_sum += r;
        }
        CHECK(std::abs(dot) < 1e-8);
        CHECK(std::abs(res_sum) < 1e-8); // intercept column
    }
}

TEST_CASE("fitted weights are a local optimum of training MSE") {
    Rng rng(99);
    Dataset d = make_dataset({"a", "b"}, {}, {});
    for (int i = 0; i < 25; ++i) {
        d.rows.push_back({rng.uniform(), rng.uniform()});
        d.targets.push_back(rng.normal(0.0, 1.0));
    }
    auto m = fit_linear(d);
    const double base = training_mse(d, m);
    for (std::size_t j = 0; j < 2; ++j)
        for (double dw : {-1e-3, 1e-3}) {
            LinearModel probe = m;
            probe.weights[j] += dw;
            CHECK(training_mse(d, probe) >= base - 1e-15);
        }
}

TEST_CASE("duplicate columns are rank deficient without the ridge fallback") {
    Dataset d = make_dataset({"a", "a_copy"}, {}, {});
    Rng rng(3);
    for (int i = 0; i < 12; ++i) {
        const double x = rng.uniform();
        d.rows.push_back({x, x});
        d.targets.push_back(3.0 * x);
    }
    try {
        fit_linear(d, /*ridge_fallback=*/false);
        FAIL("expected rank_deficient");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::rank_deficient);
    }
    auto m = fit_linear(d);
    CHECK(m.ridge_used);
    CHECK(m.ridge_lambda == 1e-8);
    CHECK(training_mse(d, m) < 1e-10);
}

TEST_CASE("constant target collapses the tree to one leaf") {
    Dataset d = make_dataset({"x"}, {}, {});
    for (int i = 0; i < 20; ++i) {
        d.rows.push_back({double(i)});
        d.targets.push_back(7.5);
    }
    auto t = fit_cart(d);
    CHECK(t.leaf_count() == 1);
    CHECK(predict(t, {533.0}) == 7.5);
}

TEST_CASE("one-dimensional step data yields the oracle depth-1 tree") {
    Dataset d = make_dataset({"x"}, {}, {});
    Rng rng(17);
    double below_max = 0.0, above_min = 1.0;
    for (int i = 0; i < 20; ++i) {
        const double x = (i % 2 == 0) ? rng.uniform(0.0, 0.49) : rng.uniform(0.51, 1.0);
        d.rows.push_back({x});
        d.targets.push_back(x < 0.5 ? 0.0 : 1.0);
        if (x < 0.5) below_max = std::max(below_max, x);
        else above_min = std::min(above_min, x);
    }
    auto t = fit_cart(d);
    CHECK(t.depth() == 1);
    REQUIRE(t.nodes[0].feature == 0);
    CHECK(t.nodes[0].threshold > below_max);
    CHECK(t.nodes[0].threshold <= above_min);
    CHECK(training_mse(d, t) == 0.0);
    CHECK(predict(t, {0.7}) == 1.0);
    CHECK(predict(t, {0.2}) == 0.0);
}

TEST_CASE("training MSE never exceeds the target variance") {
    Rng rng(271828);
    for (int trial = 0; trial < 20; ++trial) {
        Dataset d = make_dataset({"u", "v"}, {}, {});
        const int n = 10 + int(rng.bounded(40));
        for (int i = 0; i < n; ++i) {
            d.rows.push_back({rng.uniform(), rng.uniform()});
            d.targets.push_back(rng.normal(0.0, 2.0));
        }
        double mean = 0.0;
        for (double y : d.targets) mean += y;
        mean /= double(n);
        double var = 0.0;
        for (double y : d.targets) var += (y - mean) * (y - mean);
        var /= double(n);
        auto t = fit_cart(d);
        CHECK(training_mse(d, t) <= var + 1e-12);
    }
}

TEST_CASE("deeper trees never fit the training data worse") {
    Rng rng(31337);
    Dataset d = make_dataset({"x", "y"}, {}, {});
    for (int i = 0; i < 60; ++i) {
        d.rows.push_back({rng.uniform(), rng.uniform()});
        d.targets.push_back(std::sin(6.0 * d.rows.back()[0]) + rng.normal(0.0, 0.2));
    }
    double prev = 1e300;
    for (int depth = 0; depth <= 6; ++depth) {
        CartHyper h;
        h.max_depth = depth;
        h.min_samples_leaf = 2;
        const double mse = training_mse(d, fit_cart(d, h));
        CHECK(mse <= prev + 1e-12);
        prev = mse;
    }
}

TEST_CASE("root split equals exhaustive search on small datasets") {
    Rng rng(606);
    int checked = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const int min_leaf = 1 + int(rng.bounded(3));
        const std::size_t n_rows = std::size_t(2 * min_leaf) + rng.bounded(12 - 2 * min_leaf + 1);
        const std::size_t n_feat = 1 + rng.bounded(3);
        Dataset d;
        for (std::size_t j = 0; j < n_feat; ++j) d.feature_names.push_back("f" + std::to_string(j));
        for (std::size_t i = 0; i < n_rows; ++i) {
            std::vector<double> row;
            for (std::size_t j = 0; j < n_feat; ++j) row.push_back(rng.uniform());
            d.rows.push_back(row);
            d.targets.push_back(rng.normal());
        }
        auto oracle = exhaustive_best_split(d, min_leaf);
        auto mine = best_split(d, [&] {
            std::vector<std::size_t> idx(n_rows);
            std::iota(idx.begin(), idx.end(), 0);
            return idx;
        }(), min_leaf);
        REQUIRE(oracle.found == mine.has_value());
        if (!oracle.found) continue;
        CHECK(mine->feature == oracle.feature);
        CHECK(mine->threshold == oracle.threshold);
        ++checked;
    }
    CHECK(checked >= 40);
}

TEST_CASE("pruning contract") {
    Rng rng(8);
    Dataset d = make_dataset({"x"}, {}, {});
    for (int i = 0; i < 64; ++i) {
        d.rows.push_back({rng.uniform()});
        d.targets.push_back(std::floor(4.0 * d.rows.back()[0]) + rng.normal(0.0, 0.05));
    }
    CartHyper h;
    h.max_depth = 6;
    h.min_samples_leaf = 2;
    auto base = fit_cart(d, h);
    REQUIRE(base.leaf_count() > 2);

    CartHyper zero = h; // alpha defaults to 0
    auto unpruned = fit_cart(d, zero);
    CHECK(unpruned.leaf_count() == base.leaf_count());

    CartHyper inf = h;
    inf.ccp_alpha = 1e18;
    auto collapsed = fit_cart(d, inf);
    CHECK(collapsed.leaf_count() == 1);

    CartHyper mild = h;
    mild.ccp_alpha = 0.05;
    auto pruned = fit_cart(d, mild);
    CHECK(pruned.leaf_count() <= base.leaf_count());
    CHECK(pruned.leaf_count() >= 1);
}

TEST_CASE("tree importances sum to one and credit the split feature") {
    Dataset d = make_dataset({"noise", "signal"}, {}, {});
    Rng rng(44);
    for (int i = 0; i < 30; ++i) {
        d.rows.push_back({rng.uniform(), rng.uniform()});
        d.targets.push_back(d.rows.back()[1] > 0.5 ? 4.0 : -4.0);
    }
    auto t = fit_cart(d);
    auto imp = feature_importances(t);
    CHECK(std::abs(imp[0] + imp[1] - 1.0) < 1e-9);
    if (t.leaf_count() == 2) { // single split
        CHECK(imp[1] == 1.0);
        CHECK(imp[0] == 0.0);
    }
    CHECK(imp[1] > 0.9);
}

TEST_CASE("predict handles edge models and rejects bad rows") {
    Dataset d = make_dataset({"x"}, {{0.0}, {1.0}}, {3.0, 3.0});
    auto t = fit_cart(d);
    CHECK(predict(t, {42.0}) == 3.0);
    LinearModel lm;
    lm.weights = {0.0, 0.0};
    lm.intercept = 1.25;
    CHECK(predict(lm, {9.0, -4.0}) == 1.25);
    CHECK_THROWS_AS(predict(lm, {1.0}), Error);
    CHECK_THROWS_AS(predict(t, {1.0, 2.0}), Error);
}

TEST_CASE("cross-validation is exact on protected noiseless linear data") {
    // extreme feature values appear in more rows than any single fold can
    // hold, so held-out rows are never clamped and the fit stays exact
    Dataset d = make_dataset({"x1", "x2"}, {}, {});
    Rng rng(2121);
    for (int copy = 0; copy < 8; ++copy) {
        d.rows.push_back({0.0, 1.0});
        d.rows.push_back({1.0, 0.0});
    }
    for (int i = 0; i < 14; ++i) d.rows.push_back({rng.uniform(), rng.uniform()});
    for (auto& row : d.rows) d.targets.push_back(3.0 * row[0] - 2.0 * row[1] + 0.5);
    auto cv = cross_validate(d, ModelKind::linear, 5, 77);
    CHECK(cv.mean_mse < 1e-12);
}

TEST_CASE("cross-validation is deterministic per seed") {
    Rng rng(31);
    Dataset d = make_dataset({"x"}, {}, {});
    for (int i = 0; i < 40; ++i) {
        d.rows.push_back({rng.uniform()});
        d.targets.push_back(rng.normal());
    }
    auto c1 = cross_validate(d, ModelKind::cart, 5, 7);
    auto c2 = cross_validate(d, ModelKind::cart, 5, 7);
    CHECK(c1.fold_mse == c2.fold_mse);
    CHECK(c1.mean_mse == c2.mean_mse);
    auto c3 = cross_validate(d, ModelKind::cart, 5, 8);
    CHECK(c1.fold_mse != c3.fold_mse);
}

TEST_CASE("fold partition is disjoint, covering, near-equal") {
    for (std::size_t n : {10u, 23u, 120u}) {
        for (int k : {2, 5, 7}) {
            auto folds = fold_partition(n, k, 999);
            std::set<std::size_t> seen;
            std::size_t min_size = n, max_size = 0;
            for (const auto& f : folds) {
                min_size = std::min(min_size, f.size());
                max_size = std::max(max_size, f.size());
                for (auto i : f) CHECK(seen.insert(i).second);
            }
            CHECK(seen.size() == n);
            CHECK(max_size - min_size <= 1);
        }
    }
}

TEST_CASE("pearson closed form and failure modes") {
    std::vector<double> x = {1, 2, 3}, y = {2, 4, 7};
    CHECK(pearson(x, x) == Catch::Approx(1.0).margin(1e-12));
    std::vector<double> neg = {-1, -2, -3};
    CHECK(pearson(x, neg) == Catch::Approx(-1.0).margin(1e-12));
    // 15 / sqrt(228)
    CHECK(pearson(x, y) == Catch::Approx(0.9933992677987828).margin(1e-10));
    CHECK_THROWS_AS(pearson(x, {1, 1, 1}), Error);
    CHECK_THROWS_AS(pearson(x, {1, 2}), Error);
}

TEST_CASE("pearson is invariant under positive affine maps") {
    Rng rng(616);
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 3 + rng.bounded(20);
        std::vector<double> x(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = rng.normal();
            y[i] = rng.normal();
        }
        const double r = pearson(x, y);
        const double scale = rng.uniform(0.1, 10.0), shift = rng.uniform(-5.0, 5.0);
        std::vector<double> xs(n);
        for (std::size_t i = 0; i < n; ++i) xs[i] = scale * x[i] + shift;
        CHECK(pearson(xs, y) == Catch::Approx(r).margin(1e-12));
        for (std::size_t i = 0; i < n; ++i) xs[i] = -scale * x[i] + shift;
        CHECK(pearson(xs, y) == Catch::Approx(-r).margin(1e-12));
    }
}

TEST_CASE("correlation report matches analytic fixtures") {
    FeatureMatrix m;
    m.columns = {"loc", "top1", "label_a", "label_b", "label_c"};
    // loc tracks label_a exactly; top1 is constant; label_b repeats the
    // (1,2,3) vs (2,4,7) pattern against loc
    for (int rep = 0; rep < 4; ++rep)
        for (int i = 0; i < 3; ++i) {
            const double x = double(i + 1);
            const double yb = (i == 0) ? 2.0 : (i == 1 ? 4.0 : 7.0);
            m.rows.push_back({x, 5.5, 2.0 * x + 3.0, yb, -x});
        }
    auto rows = correlation_report(m, {"loc", "top1"});
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].r_a.has_value());
    CHECK(*rows[0].r_a == Catch::Approx(1.0).margin(1e-10));
    CHECK(*rows[0].r_b == Catch::Approx(0.9933992677987828).margin(1e-10));
    CHECK(*rows[0].r_c == Catch::Approx(-1.0).margin(1e-10));
    CHECK_FALSE(rows[1].r_a.has_value()); // constant feature -> blank + note
    CHECK(rows[1].note == "constant series");
}

TEST_CASE("correlation ranking is invariant under column rescaling") {
    Rng rng(3141);
    FeatureMatrix m;
    m.columns = {"loc", "top1", "sfr_1", "label_a", "label_b", "label_c"};
    for (int i = 0; i < 30; ++i) {
        const double x = rng.uniform(), y = rng.uniform(), z = rng.uniform();
        const double la = 0.8 * x + 0.1 * rng.normal();
        m.rows.push_back({x, y, z, la, 2.0 * y + 0.3 * rng.normal(), z + x});
    }
    auto base = correlation_report(m, {"loc", "top1", "sfr_1"});
    FeatureMatrix scaled = m;
    for (auto& row : scaled.rows) {
        row[0] *= 1000.0;
        row[1] = row[1] * 1e-6 + 42.0;
    }
    auto after = correlation_report(scaled, {"loc", "top1", "sfr_1"});
    for (std::size_t i = 0; i < base.size(); ++i) {
        CHECK(*after[i].r_a == Catch::Approx(*base[i].r_a).margin(1e-12));
        CHECK(*after[i].r_b == Catch::Approx(*base[i].r_b).margin(1e-12));
        CHECK(*after[i].r_c == Catch::Approx(*base[i].r_c).margin(1e-12));
    }
    // argmax feature per label column unchanged
    for (int col = 0; col < 3; ++col) {
        auto pick = [col](const std::vector<CorrelationRow>& rows) {
            std::size_t best = 0;
            for (std::size_t i = 1; i < rows.size(); ++i) {
                auto val = [&](std::size_t r) {
                    const auto& row = rows[r];
                    return std::abs(col == 0 ? *row.r_a : col == 1 ? *row.r_b : *row.r_c);
                };
                if (val(i) > val(best)) best = i;
            }
            return rows[best].feature;
        };
        CHECK(pick(base) == pick(after));
    }
}

TEST_CASE("importance report pairs signed weights with importances") {
    Rng rng(909);
    Dataset d = make_dataset({"planted", "bystander"}, {}, {});
    for (int i = 0; i < 40; ++i) {
        d.rows.push_back({rng.uniform(), rng.uniform()});
        d.targets.push_back(5.0 * d.rows.back()[0] + rng.normal(0.0, 0.1));
    }
    auto lm = fit_linear(d);
    auto tree = fit_cart(d);
    auto rows = importance_report(lm, tree, d.feature_names);
    REQUIRE(rows.size() == 2);
    CHECK(std::abs(rows[0].weight) > std::abs(rows[1].weight)); // planted dominates
    double total = rows[0].importance + rows[1].importance;
    CHECK(std::abs(total - 1.0) < 1e-9);
}

TEST_CASE("model persistence round-trips predictions") {
    Rng rng(5252);
    Dataset d = make_dataset({"x1", "x2", "x3"}, {}, {});
    for (int i = 0; i < 50; ++i) {
        d.rows.push_back({rng.uniform(), rng.uniform(), rng.uniform()});
        d.targets.push_back(std::cos(3.0 * d.rows.back()[0]) + 0.5 * d.rows.back()[2] +
                            rng.normal(0.0, 0.05));
    }
    NormalizationRanges ranges = fit_ranges(d.rows);
    Dataset norm = d;
    norm.rows = apply_ranges(d.rows, ranges);

    auto lm = fit_linear(norm);
    auto lj = linear_model_json(lm, d.feature_names, ranges, "a");
    validate_model_schema(lj);
    LinearModel lm2;
    lm2.weights = lj.at("weights").get<std::vector<double>>();
    lm2.intercept = lj.at("intercept").get<double>();
    auto r2 = ranges_from_json(lj.at("normalization"));
    CHECK(r2.min == ranges.min);

    CartHyper h;
    h.max_depth = 5;
    h.min_samples_leaf = 3;
    auto tree = fit_cart(norm, h);
    auto tj = tree_model_json(tree, d.feature_names, ranges, "b");
    validate_model_schema(tj);
    auto tree2 = tree_model_from_json(tj);
    for (int i = 0; i < 50; ++i) {
        std::vector<double> row = {rng.uniform(), rng.uniform(), rng.uniform()};
        auto z = apply_ranges({row}, ranges)[0];
        CHECK(predict(lm2, z) == predict(lm, z));
        CHECK(predict(tree2, z) == predict(tree, z));
    }

    auto cv = cross_validate(d, ModelKind::cart, 5, 11, h);
    auto cj = cv_json(cv, ModelKind::cart, "b");
    validate_cv_schema(cj);
}
