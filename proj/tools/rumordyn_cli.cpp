// Command-line front end: one subcommand per pipeline stage, emitting the
// plot-ready CSV/JSON files. Exit codes: 0 ok, 2 invalid parameters, 3 fit
// failure, 4 missing input, 5 schema violation.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rumordyn/corpus.hpp"
#include "rumordyn/feature_pipeline.hpp"
#include "rumordyn/file_io.hpp"
#include "rumordyn/influence_fit.hpp"
#include "rumordyn/regression.hpp"
#include "rumordyn/schemas.hpp"
#include "rumordyn/spread_model.hpp"

namespace {

using namespace rumordyn;
namespace fs = std::filesystem;

int exit_code_for(Errc code) {
    switch (code) {
        case Errc::invalid_params:
        case Errc::non_finite_state:
            return 2;
        case Errc::parse_error:
        case Errc::missing_series:
        case Errc::duplicate_id:
        case Errc::missing_input:
            return 4;
        case Errc::schema_violation:
            return 5;
        default:
            return 3; // fit / data-domain failures
    }
}

struct SimulateArgs {
    ModelParams params;
    SimulateConfig cfg;
    std::string out;
    bool no_early_stop = false;
};

int run_simulate(const SimulateArgs& args) {
    SimulateConfig cfg = args.cfg;
    cfg.early_stop = !args.no_early_stop;
    Trajectory traj = simulate(args.params, cfg);
    if (!args.out.empty()) atomic_write_text_file(args.out, trajectory_csv(traj));
    const auto& f = traj.final_state();
    std::printf("steps = %zu\n", traj.states.size());
    std::printf("final s = %.9f\nfinal i = %.9f\nfinal r1 = %.9f\nfinal r2 = %.9f\n", f.s, f.i,
                f.r1, f.r2);
    std::printf("informed_fraction = %.9f\n", traj.informed_fraction());
    return 0;
}

struct FitArgs {
    std::string series_file;
    std::string outbreak;
    std::size_t window = 7;
    std::string out;
};

int run_fit(const FitArgs& args) {
    SearchSeries series =
        parse_series_csv(read_text_file(args.series_file), fs::path(args.series_file).stem());
    SearchSeries window = extract_window(series, Date::parse(args.outbreak), args.window);
    FitResult fit = fit_exponential(window);
    nlohmann::json j = fit_result_json(fit);
    validate_fit_result_schema(j);
    if (!args.out.empty()) atomic_write_text_file(args.out, j.dump(2) + "\n");

    const double y0_tilde = std::exp(fit.b);
    const auto [low, high] = intensity_bounds(y0_tilde);
    std::printf("a = %.6f\nb = %.6f\nc = %.6f\n", fit.a, fit.b, fit.c);
    std::printf("status = %s\niterations = %d\nrmse = %.6g\nday0_shift = %d\n",
                fit_status_name(fit.status), fit.iterations, fit.rmse, fit.day0_shift);
    if (fit.a != 0.0)
        std::printf("window_intensity = %.6f\n",
                    total_intensity(fit.a, fit.b, fit.window_days - 1));
    std::printf("y0_tilde = %.6f\n", y0_tilde);
    std::printf("intensity_bounds = [%.6f, %.6f]\n", low, high);
    std::printf("bound_multipliers = [%.6f, %.6f]\n", low / y0_tilde, high / y0_tilde);
    return 0;
}

struct LabelArgs {
    std::string manifest_file;
    std::string out;
    std::string report_out;
    double rmse_ceiling = 0.35;
    std::size_t window = 7;
    unsigned jobs = 1;
};

int run_label(const LabelArgs& args) {
    CorpusManifest manifest = parse_manifest(read_text_file(args.manifest_file),
                                             fs::path(args.manifest_file).parent_path());
    Corpus corpus = load_corpus(manifest);
    FilterConfig cfg;
    cfg.window_length = args.window;
    cfg.rmse_ceiling = args.rmse_ceiling;
    cfg.jobs = args.jobs;
    if (manifest.allowlist_file)
        cfg.allowlist = parse_allowlist(read_text_file(*manifest.allowlist_file));
    auto [labeled, report] = filter_and_label(corpus, cfg);
    nlohmann::json rj = filter_report_json(report);
    validate_filter_report_schema(rj);
    const std::string labeled_jsonl = corpus_jsonl(labeled);
    parse_corpus_jsonl(labeled_jsonl); // schema check by round trip
    atomic_write_text_file(args.out, labeled_jsonl);
    if (!args.report_out.empty()) atomic_write_text_file(args.report_out, rj.dump(2) + "\n");
    std::printf("total = %zu\naccepted = %zu\nrejected = %zu\n", report.total, report.accepted,
                report.rejections.size());
    return 0;
}

struct FeaturizeArgs {
    std::string manifest_file;
    std::string corpus_file; // overrides the manifest rumor file (labeled corpus)
    std::string out;
    std::string baseline_start = "2019-11-01";
    std::string baseline_end = "2019-12-31";
};

int run_featurize(const FeaturizeArgs& args) {
    CorpusManifest manifest = parse_manifest(read_text_file(args.manifest_file),
                                             fs::path(args.manifest_file).parent_path());
    if (!args.corpus_file.empty()) manifest.rumor_file = args.corpus_file;
    Corpus corpus = load_corpus(manifest);
    BaselineWindow baseline{Date::parse(args.baseline_start), Date::parse(args.baseline_end)};
    std::vector<FeatureVector> vectors;
    for (const auto& r : corpus.records)
        vectors.push_back(build_features(r, corpus.series_for(r.fundamental_entity),
                                         corpus.series_for(r.top1_entity),
                                         corpus.series_for(r.top2_entity), corpus.sentiment,
                                         baseline));
    FeatureMatrix m = feature_matrix(vectors);
    validate_feature_matrix_schema(m);
    atomic_write_text_file(args.out, feature_matrix_csv(m));
    std::printf("rows = %zu\ncolumns = %zu\n", m.rows.size(), m.columns.size());
    return 0;
}

struct TrainArgs {
    std::string features_file;
    std::string model = "linear";
    std::string target = "a";
    int k = 5;
    std::uint64_t seed = 0;
    bool all_features = false;
    CartHyper hyper;
    std::string out_dir = ".";
};

std::vector<std::string> model_feature_set(const FeatureMatrix& m, bool all_features) {
    if (!all_features) return default_model_features();
    std::vector<std::string> cols;
    for (const auto& c : m.columns)
        if (c.rfind("label_", 0) != 0) cols.push_back(c);
    return cols;
}

Dataset dataset_from_matrix(const FeatureMatrix& m, const std::vector<std::string>& features,
                            const std::string& target) {
    const std::string label_col = "label_" + target;
    if (!m.has_column(label_col))
        raise(Errc::missing_input, "feature matrix has no '" + label_col +
                                       "' column; run the label stage first");
    Dataset d;
    d.feature_names = features;
    std::vector<std::size_t> feat_idx;
    for (const auto& f : features) feat_idx.push_back(m.column_index(f));
    const std::size_t label_idx = m.column_index(label_col);
    for (const auto& row : m.rows) {
        std::vector<double> r;
        r.reserve(feat_idx.size());
        for (auto j : feat_idx) r.push_back(row[j]);
        d.rows.push_back(std::move(r));
        d.targets.push_back(row[label_idx]);
    }
    return d;
}

int run_train(const TrainArgs& args) {
    FeatureMatrix m = parse_feature_matrix_csv(read_text_file(args.features_file));
    validate_feature_matrix_schema(m);
    const auto features = model_feature_set(m, args.all_features);
    Dataset raw = dataset_from_matrix(m, features, args.target);
    const ModelKind kind = (args.model == "linear") ? ModelKind::linear : ModelKind::cart;

    CvResult cv = cross_validate(raw, kind, args.k, args.seed, args.hyper);
    nlohmann::json cvj = cv_json(cv, kind, args.target);
    validate_cv_schema(cvj);

    // Final model on all rows, with its normalization embedded for reuse.
    NormalizationRanges ranges = fit_ranges(raw.rows);
    Dataset full = raw;
    full.rows = apply_ranges(raw.rows, ranges);
    nlohmann::json mj;
    if (kind == ModelKind::linear) {
        mj = linear_model_json(fit_linear(full), features, ranges, args.target);
    } else {
        mj = tree_model_json(fit_cart(full, args.hyper), features, ranges, args.target);
    }
    validate_model_schema(mj);

    const fs::path dir(args.out_dir);
    const std::string stem = args.model + "_" + args.target;
    atomic_write_text_file(dir / ("model_" + stem + ".json"), mj.dump(2) + "\n");
    atomic_write_text_file(dir / ("cv_" + stem + ".json"), cvj.dump(2) + "\n");
    std::printf("model = %s\ntarget = %s\nmean_mse = %.9g\nstd_mse = %.9g\nseed = %llu\n",
                args.model.c_str(), args.target.c_str(), cv.mean_mse, cv.std_mse,
                static_cast<unsigned long long>(cv.seed));
    return 0;
}

struct ReportArgs {
    std::string features_file;
    std::string manifest_file; // optional, for the keyword cloud export
    int k = 5;
    std::uint64_t seed = 0;
    CartHyper hyper;
    std::string out_dir = ".";
};

std::string fmt_cell(const std::optional<double>& v) {
    if (!v) return "";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", *v);
    return buf;
}

int run_report(const ReportArgs& args) {
    FeatureMatrix m = parse_feature_matrix_csv(read_text_file(args.features_file));
    validate_feature_matrix_schema(m);
    const auto features = default_model_features();

    Dataset raw_a = dataset_from_matrix(m, features, "a");
    Dataset raw_b = dataset_from_matrix(m, features, "b");

    // Table 1: linear weights for a, tree importances for b (all-data fits).
    NormalizationRanges ranges = fit_ranges(raw_a.rows);
    Dataset norm_a = raw_a;
    norm_a.rows = apply_ranges(raw_a.rows, ranges);
    Dataset norm_b = raw_b;
    norm_b.rows = norm_a.rows;
    LinearModel linear_a = fit_linear(norm_a);
    RegressionTree cart_b = fit_cart(norm_b, args.hyper);
    auto table1 = importance_report(linear_a, cart_b, features);

    nlohmann::json cvs;
    cvs["linear_a"] = cv_json(cross_validate(raw_a, ModelKind::linear, args.k, args.seed),
                              ModelKind::linear, "a");
    cvs["cart_a"] = cv_json(cross_validate(raw_a, ModelKind::cart, args.k, args.seed, args.hyper),
                            ModelKind::cart, "a");
    cvs["linear_b"] = cv_json(cross_validate(raw_b, ModelKind::linear, args.k, args.seed),
                              ModelKind::linear, "b");
    cvs["cart_b"] = cv_json(cross_validate(raw_b, ModelKind::cart, args.k, args.seed, args.hyper),
                            ModelKind::cart, "b");

    // Table 2: Pearson r between the six analysis features and the labels.
    const std::vector<std::string> corr_features = {"loc", "top1", "sfr_1", "pe", "ane", "ra"};
    auto table2 = correlation_report(m, corr_features);

    nlohmann::json report{{"seed", args.seed}, {"k", args.k}};
    {
        nlohmann::json weights;
        for (std::size_t j = 0; j < features.size(); ++j)
            weights[features[j]] = linear_a.weights[j];
        weights["intercept"] = linear_a.intercept;
        report["weights"] = weights;
        nlohmann::json imps;
        const auto imp = feature_importances(cart_b);
        for (std::size_t j = 0; j < features.size(); ++j) imps[features[j]] = imp[j];
        report["importances"] = imps;

        // per-fold weight spread alongside the all-data fit
        std::vector<double> wmin(features.size(), 1e300), wmax(features.size(), -1e300);
        const auto folds = fold_partition(raw_a.n_rows(), args.k, args.seed);
        for (const auto& fold : folds) {
            std::vector<bool> held(raw_a.n_rows(), false);
            for (auto i : fold) held[i] = true;
            Dataset train;
            train.feature_names = features;
            for (std::size_t i = 0; i < raw_a.n_rows(); ++i) {
                if (held[i]) continue;
                train.rows.push_back(raw_a.rows[i]);
                train.targets.push_back(raw_a.targets[i]);
            }
            NormalizationRanges fr = fit_ranges(train.rows);
            train.rows = apply_ranges(train.rows, fr);
            LinearModel fm = fit_linear(train);
            for (std::size_t j = 0; j < features.size(); ++j) {
                wmin[j] = std::min(wmin[j], fm.weights[j]);
                wmax[j] = std::max(wmax[j], fm.weights[j]);
            }
        }
        nlohmann::json spread;
        for (std::size_t j = 0; j < features.size(); ++j)
            spread[features[j]] = {wmin[j], wmax[j]};
        report["weights_fold_range"] = spread;
    }
    report["cv"] = cvs;
    {
        nlohmann::json rows = nlohmann::json::array();
        for (const auto& r : table2) {
            nlohmann::json row{{"feature", r.feature}};
            row["r_a"] = r.r_a ? nlohmann::json(*r.r_a) : nlohmann::json();
            row["r_b"] = r.r_b ? nlohmann::json(*r.r_b) : nlohmann::json();
            row["r_c"] = r.r_c ? nlohmann::json(*r.r_c) : nlohmann::json();
            if (!r.note.empty()) row["note"] = r.note;
            rows.push_back(row);
        }
        report["correlations"] = rows;
    }

    const fs::path dir(args.out_dir);
    std::string t1 = "feature,weight_for_a,importance_for_b\n";
    for (const auto& r : table1) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "%s,%.10g,%.10g\n", r.feature.c_str(), r.weight,
                      r.importance);
        t1 += buf;
    }
    std::string t2 = "feature,coefficient_for_a,coefficient_for_b,coefficient_for_c\n";
    for (const auto& r : table2)
        t2 += r.feature + "," + fmt_cell(r.r_a) + "," + fmt_cell(r.r_b) + "," + fmt_cell(r.r_c) +
              "\n";

    // Table 3, when semantic columns were merged in: correlations of the
    // semantic outputs plus RA, and tree importances with them included.
    // The source table labels the importance column "c" while its text
    // discusses b; both labels are kept and the mismatch noted.
    if (m.has_column("sem_1")) {
        std::vector<std::string> sem_features = features;
        for (const char* s : {"sem_1", "sem_2", "sem_3"}) sem_features.push_back(s);
        Dataset raw_sb = dataset_from_matrix(m, sem_features, "b");
        NormalizationRanges sr = fit_ranges(raw_sb.rows);
        Dataset norm_sb = raw_sb;
        norm_sb.rows = apply_ranges(raw_sb.rows, sr);
        RegressionTree cart_sem = fit_cart(norm_sb, args.hyper);
        const auto sem_imp = feature_importances(cart_sem);
        auto sem_corr = correlation_report(m, {"sem_1", "sem_2", "sem_3", "ra"});
        std::string t3 = "feature,coefficient_for_a,coefficient_for_b,importance_of_c\n";
        nlohmann::json sem_rows = nlohmann::json::array();
        for (const auto& r : sem_corr) {
            std::size_t j = std::find(sem_features.begin(), sem_features.end(),
                                      r.feature == "ra" ? "ra" : r.feature) -
                            sem_features.begin();
            const double imp = sem_imp[j];
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.10g", imp);
            t3 += r.feature + "," + fmt_cell(r.r_a) + "," + fmt_cell(r.r_b) + "," + buf + "\n";
            nlohmann::json row{{"feature", r.feature}, {"importance", imp}};
            row["r_a"] = r.r_a ? nlohmann::json(*r.r_a) : nlohmann::json();
            row["r_b"] = r.r_b ? nlohmann::json(*r.r_b) : nlohmann::json();
            sem_rows.push_back(row);
        }
        report["semantic"] = sem_rows;
        report["table3_note"] =
            "importance column labeled for c in the source table; its text discusses b";
        atomic_write_text_file(dir / "table3.csv", t3);
    }

    validate_report_schema(report);
    atomic_write_text_file(dir / "report.json", report.dump(2) + "\n");
    atomic_write_text_file(dir / "table1.csv", t1);
    atomic_write_text_file(dir / "table2.csv", t2);

    if (!args.manifest_file.empty()) {
        CorpusManifest manifest = parse_manifest(read_text_file(args.manifest_file),
                                                 fs::path(args.manifest_file).parent_path());
        auto records = parse_corpus_jsonl(read_text_file(manifest.rumor_file));
        atomic_write_text_file(dir / "keywords.csv", keyword_csv(keyword_counts(records)));
    }
    std::printf("report written to %s\n", dir.string().c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rumor spread simulation, influence fitting, and feature analysis"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* simulate_cmd = app.add_subcommand("simulate", "Integrate the four-state mean-field model");
    simulate_cmd->add_option("--alpha", sim.params.alpha, "Removal probability on contact")
        ->capture_default_str();
    simulate_cmd->add_option("--beta", sim.params.beta, "Infection probability on contact")
        ->capture_default_str();
    simulate_cmd->add_option("--delta", sim.params.delta, "Infected->removed refutation probability")
        ->capture_default_str();
    simulate_cmd->add_option("--epsilon", sim.params.epsilon, "Forgetting rate")
        ->capture_default_str();
    simulate_cmd->add_option("--theta", sim.params.theta, "Infected->refuted probability")
        ->capture_default_str();
    simulate_cmd->add_option("--k", sim.params.k_avg, "Average network degree")
        ->capture_default_str();
    simulate_cmd->add_option("--i0", sim.params.i0, "Initial infected density")
        ->capture_default_str();
    simulate_cmd->add_option("--dt", sim.cfg.dt, "Integration step")->capture_default_str();
    simulate_cmd->add_option("--horizon", sim.cfg.horizon, "Time horizon")->capture_default_str();
    simulate_cmd->add_flag("--no-early-stop", sim.no_early_stop,
                           "Integrate the full horizon even after spreaders die out");
    simulate_cmd->add_option("--out", sim.out, "Trajectory CSV path");

    FitArgs fit;
    auto* fit_cmd = app.add_subcommand("fit", "Fit the exponential influence model to a series");
    fit_cmd->add_option("--series", fit.series_file, "Input series CSV (date,frequency)")
        ->required();
    fit_cmd->add_option("--outbreak", fit.outbreak, "Outbreak date (YYYY-MM-DD)")->required();
    fit_cmd->add_option("--window", fit.window, "Window length in days")->capture_default_str();
    fit_cmd->add_option("--out", fit.out, "FitResult JSON path");

    LabelArgs label;
    auto* label_cmd = app.add_subcommand("label", "Fit and label every rumor in a corpus");
    label_cmd->add_option("--manifest", label.manifest_file, "Corpus manifest JSON")->required();
    label_cmd->add_option("--out", label.out, "Labeled corpus JSON-lines path")->required();
    label_cmd->add_option("--report", label.report_out, "Filter report JSON path");
    label_cmd->add_option("--rmse-ceiling", label.rmse_ceiling, "Log-space rmse acceptance ceiling")
        ->capture_default_str();
    label_cmd->add_option("--window", label.window, "Fit window length in days")
        ->capture_default_str();
    label_cmd->add_option("--jobs", label.jobs, "Worker threads for fitting")
        ->capture_default_str();

    FeaturizeArgs feat;
    auto* feat_cmd = app.add_subcommand("featurize", "Write the feature-matrix CSV for a corpus");
    feat_cmd->add_option("--manifest", feat.manifest_file, "Corpus manifest JSON")->required();
    feat_cmd->add_option("--corpus", feat.corpus_file,
                         "Corpus JSON-lines overriding the manifest rumor file");
    feat_cmd->add_option("--out", feat.out, "Feature matrix CSV path")->required();
    feat_cmd->add_option("--baseline-start", feat.baseline_start, "Awareness baseline start date")
        ->capture_default_str();
    feat_cmd->add_option("--baseline-end", feat.baseline_end, "Awareness baseline end date")
        ->capture_default_str();

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "Cross-validate and fit a regression model");
    train_cmd->add_option("--features", train.features_file, "Feature matrix CSV")->required();
    train_cmd->add_option("--model", train.model, "Model kind")
        ->check(CLI::IsMember({"linear", "cart"}))
        ->capture_default_str();
    train_cmd->add_option("--target", train.target, "Label to predict")
        ->check(CLI::IsMember({"a", "b", "c"}))
        ->capture_default_str();
    train_cmd->add_option("--k", train.k, "Cross-validation folds")->capture_default_str();
    train_cmd->add_option("--seed", train.seed, "Shuffle seed")->capture_default_str();
    train_cmd->add_flag("--all-features", train.all_features,
                        "Use every feature column instead of the default eight");
    train_cmd->add_option("--max-depth", train.hyper.max_depth, "CART depth limit")
        ->capture_default_str();
    train_cmd->add_option("--min-samples-leaf", train.hyper.min_samples_leaf,
                          "CART minimum rows per leaf")
        ->capture_default_str();
    train_cmd->add_option("--ccp-alpha", train.hyper.ccp_alpha,
                          "CART cost-complexity pruning strength")
        ->capture_default_str();
    train_cmd->add_option("--out-dir", train.out_dir, "Output directory")->capture_default_str();

    ReportArgs report;
    auto* report_cmd = app.add_subcommand("report", "Write weight/importance/correlation tables");
    report_cmd->add_option("--features", report.features_file, "Feature matrix CSV")->required();
    report_cmd->add_option("--manifest", report.manifest_file,
                           "Corpus manifest (adds the keyword-cloud CSV)");
    report_cmd->add_option("--k", report.k, "Cross-validation folds")->capture_default_str();
    report_cmd->add_option("--seed", report.seed, "Shuffle seed")->capture_default_str();
    report_cmd->add_option("--max-depth", report.hyper.max_depth, "CART depth limit")
        ->capture_default_str();
    report_cmd->add_option("--min-samples-leaf", report.hyper.min_samples_leaf,
                           "CART minimum rows per leaf")
        ->capture_default_str();
    report_cmd->add_option("--ccp-alpha", report.hyper.ccp_alpha,
                           "CART cost-complexity pruning strength")
        ->capture_default_str();
    report_cmd->add_option("--out-dir", report.out_dir, "Output directory")
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (simulate_cmd->parsed()) return run_simulate(sim);
        if (fit_cmd->parsed()) return run_fit(fit);
        if (label_cmd->parsed()) return run_label(label);
        if (feat_cmd->parsed()) return run_featurize(feat);
        if (train_cmd->parsed()) return run_train(train);
        if (report_cmd->parsed()) return run_report(report);
    } catch (const rumordyn::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
