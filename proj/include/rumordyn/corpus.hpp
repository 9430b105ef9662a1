#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "rumordyn/csv.hpp"
#include "rumordyn/errors.hpp"
#include "rumordyn/feature_pipeline.hpp"
#include "rumordyn/file_io.hpp"
#include "rumordyn/influence_fit.hpp"
#include "rumordyn/search_series.hpp"

namespace rumordyn {

struct CorpusManifest {
    std::filesystem::path rumor_file;
    std::filesystem::path series_directory; // one CSV per entity, percent-encoded name
    std::filesystem::path sentiment_file;
    int schema_version = 1;
    std::optional<std::filesystem::path> allowlist_file; // manual-override rumor ids
};

inline CorpusManifest parse_manifest(const std::string& text,
                                     const std::filesystem::path& base_dir) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::parse_error, std::string("manifest: ") + e.what());
    }
    CorpusManifest m;
    try {
        auto resolve = [&](const std::string& p) {
            std::filesystem::path path(p);
            return path.is_absolute() ? path : base_dir / path;
        };
        m.rumor_file = resolve(j.at("rumor_file").get<std::string>());
        m.series_directory = resolve(j.at("series_directory").get<std::string>());
        m.sentiment_file = resolve(j.at("sentiment_file").get<std::string>());
        m.schema_version = j.at("schema_version").get<int>();
        if (j.contains("allowlist_file"))
            m.allowlist_file = resolve(j.at("allowlist_file").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::parse_error, std::string("manifest: ") + e.what());
    }
    if (m.schema_version != 1)
        raise(Errc::schema_violation,
              "unsupported schema_version " + std::to_string(m.schema_version));
    return m;
}

// --- rumor record JSON-lines -------------------------------------------------

inline nlohmann::json record_json(const RumorRecord& r) {
    nlohmann::json j{{"id", r.id},
                     {"text", r.text},
                     {"fundamental_entity", r.fundamental_entity},
                     {"top1_entity", r.top1_entity},
                     {"top2_entity", r.top2_entity},
                     {"outbreak_date", r.outbreak_date.to_string()},
                     {"ner_flags",
                      {{"PER", r.per},
                       {"ORG", r.org},
                       {"LOC", r.loc},
                       {"NZ", r.nz},
                       {"N", r.n},
                       {"V", r.v}}},
                     {"resulting_amount", r.resulting_amount}};
    if (r.semantic) j["semantic"] = *r.semantic;
    if (r.labels) j["labels"] = {{"a", (*r.labels)[0]}, {"b", (*r.labels)[1]}, {"c", (*r.labels)[2]}};
    return j;
}

inline RumorRecord record_from_json(const nlohmann::json& j, std::size_t line_no) {
    RumorRecord r;
    auto fail = [&](const std::string& field, const std::string& why) -> void {
        raise(Errc::parse_error,
              "line " + std::to_string(line_no) + ", field '" + field + "': " + why);
    };
    auto flag = [&](const nlohmann::json& flags, const char* name) -> bool {
        if (!flags.contains(name)) fail(std::string("ner_flags.") + name, "missing");
        const auto& v = flags.at(name);
        if (v.is_boolean()) return v.get<bool>();
        if (v.is_number()) return v.get<double>() != 0.0;
        fail(std::string("ner_flags.") + name, "expected boolean or 0/1");
        return false;
    };
    try {
        r.id = j.at("id").get<std::string>();
        r.text = j.at("text").get<std::string>();
        r.fundamental_entity = j.at("fundamental_entity").get<std::string>();
        r.top1_entity = j.at("top1_entity").get<std::string>();
        r.top2_entity = j.at("top2_entity").get<std::string>();
        try {
            r.outbreak_date = Date::parse(j.at("outbreak_date").get<std::string>());
        } catch (const Error& e) {
            fail("outbreak_date", e.what());
        }
        const auto& flags = j.at("ner_flags");
        r.per = flag(flags, "PER");
        r.org = flag(flags, "ORG");
        r.loc = flag(flags, "LOC");
        r.nz = flag(flags, "NZ");
        r.n = flag(flags, "N");
        r.v = flag(flags, "V");
        r.resulting_amount = j.at("resulting_amount").get<double>();
        if (j.contains("semantic")) {
            auto v = j.at("semantic").get<std::vector<double>>();
            if (v.size() != 3) fail("semantic", "expected exactly 3 values");
            r.semantic = std::array<double, 3>{v[0], v[1], v[2]};
        }
        if (j.contains("labels")) {
            const auto& lab = j.at("labels");
            r.labels = std::array<double, 3>{lab.at("a").get<double>(),
                                             lab.at("b").get<double>(),
                                             lab.at("c").get<double>()};
        }
    } catch (const nlohmann::json::exception& e) {
        raise(Errc::parse_error, "line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
        r.validate();
    } catch (const Error& e) {
        raise(Errc::parse_error, "line " + std::to_string(line_no) + ": " + e.what());
    }
    return r;
}

inline std::vector<RumorRecord> parse_corpus_jsonl(const std::string& text) {
    std::vector<RumorRecord> records;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            raise(Errc::parse_error, "line " + std::to_string(line_no) + ": " + e.what());
        }
        RumorRecord r = record_from_json(j, line_no);
        if (!seen.insert(r.id).second)
            raise(Errc::duplicate_id, "duplicate rumor id '" + r.id + "' on line " +
                                          std::to_string(line_no));
        records.push_back(std::move(r));
    }
    return records;
}

inline std::string corpus_jsonl(const std::vector<RumorRecord>& records) {
    std::string out;
    for (const auto& r : records) {
        out += record_json(r).dump();
        out += '\n';
    }
    return out;
}

// --- corpus loading ----------------------------------------------------------

struct Corpus {
    std::vector<RumorRecord> records;
    std::map<std::string, SearchSeries> series; // keyed by entity name
    SentimentSeries sentiment;

    const SearchSeries& series_for(const std::string& entity) const {
        auto it = series.find(entity);
        if (it == series.end())
            raise(Errc::missing_series, "no series for entity '" + entity + "'");
        return it->second;
    }
};

inline std::filesystem::path series_path(const CorpusManifest& m, const std::string& entity) {
    return m.series_directory / (percent_encode(entity) + ".csv");
}

// Parses and cross-validates everything the manifest references: records,
// one series per named entity, and the sentiment series.
inline Corpus load_corpus(const CorpusManifest& manifest) {
    Corpus corpus;
    corpus.records = parse_corpus_jsonl(read_text_file(manifest.rumor_file));
    for (const auto& r : corpus.records) {
        for (const std::string& entity : {r.fundamental_entity, r.top1_entity, r.top2_entity}) {
            if (entity.empty() || corpus.series.count(entity)) continue;
            const auto path = series_path(manifest, entity);
            if (!std::filesystem::exists(path))
                raise(Errc::missing_series,
                      "rumor " + r.id + ": no series file for entity '" + entity + "' (" +
                          path.string() + ")");
            try {
                corpus.series[entity] = parse_series_csv(read_text_file(path), entity);
            } catch (const Error& e) {
                raise(e.code(), path.string() + ": " + e.what());
            }
        }
    }
    try {
        corpus.sentiment = parse_sentiment_csv(read_text_file(manifest.sentiment_file));
    } catch (const Error& e) {
        raise(e.code(), manifest.sentiment_file.string() + ": " + e.what());
    }
    return corpus;
}

inline std::set<std::string> parse_allowlist(const std::string& text) {
    std::set<std::string> ids;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (!line.empty() && line[0] != '#') ids.insert(line);
    }
    return ids;
}

// --- filtering and labeling ----------------------------------------------------

struct FilterConfig {
    std::size_t window_length = 7;
    double rmse_ceiling = 0.35; // log-space acceptance ceiling
    FitConfig fit;
    std::set<std::string> allowlist; // ids accepted regardless of rmse/decay
    unsigned jobs = 1;
};

struct FilterReport {
    std::size_t total = 0;
    std::size_t accepted = 0;
    std::map<std::string, std::string> rejections; // id -> reason code
};

inline nlohmann::json filter_report_json(const FilterReport& r) {
    return {{"total", r.total}, {"accepted", r.accepted}, {"rejections", r.rejections}};
}

// Runs the influence fit on every rumor's fundamental-entity window and writes
// (a, b, c) labels into the accepted records. Failures become report entries,
// never exceptions. Replaces the paper's manual filtering pass.
inline std::pair<std::vector<RumorRecord>, FilterReport> filter_and_label(
    const Corpus& corpus, const FilterConfig& cfg = {}) {
    const std::size_t n = corpus.records.size();
    struct Outcome {
        bool accepted = false;
        std::string reason;
        std::array<double, 3> labels{};
    };
    std::vector<Outcome> outcomes(n);

    auto run_one = [&](std::size_t i) {
        const RumorRecord& r = corpus.records[i];
        Outcome& out = outcomes[i];
        try {
            const SearchSeries& series = corpus.series_for(r.fundamental_entity);
            SearchSeries window = extract_window(series, r.outbreak_date, cfg.window_length);
            FitResult fit = fit_exponential(window, cfg.fit);
            const bool allowlisted = cfg.allowlist.count(r.id) > 0;
            if (fit.status == FitStatus::no_decay && !allowlisted) {
                out.reason = "no_decay";
                return;
            }
            if (fit.rmse > cfg.rmse_ceiling && !allowlisted) {
                out.reason = "rmse_above_ceiling";
                return;
            }
            out.accepted = true;
            out.labels = {fit.a, fit.b, fit.c};
        } catch (const Error& e) {
            switch (e.code()) {
                case Errc::degenerate_series: out.reason = "degenerate"; break;
                case Errc::window_out_of_range:
                case Errc::missing_series: out.reason = "window_out_of_range"; break;
                case Errc::zero_traffic:
                case Errc::non_positive_residual: out.reason = "zero_traffic"; break;
                default: out.reason = errc_name(e.code()); break;
            }
        }
    };

    const unsigned jobs = std::max(1u, cfg.jobs);
    if (jobs == 1 || n < 2) {
        for (std::size_t i = 0; i < n; ++i) run_one(i);
    } else {
        std::vector<std::thread> pool;
        std::size_t chunk = (n + jobs - 1) / jobs;
        for (unsigned w = 0; w < jobs; ++w) {
            std::size_t lo = w * chunk, hi = std::min(n, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back([&, lo, hi] {
                for (std::size_t i = lo; i < hi; ++i) run_one(i);
            });
        }
        for (auto& t : pool) t.join();
    }

    std::vector<RumorRecord> labeled;
    FilterReport report;
    report.total = n;
    for (std::size_t i = 0; i < n; ++i) {
        if (outcomes[i].accepted) {
            RumorRecord r = corpus.records[i];
            r.labels = outcomes[i].labels;
            labeled.push_back(std::move(r));
            ++report.accepted;
        } else {
            report.rejections[corpus.records[i].id] = outcomes[i].reason;
        }
    }
    return {std::move(labeled), std::move(report)};
}

// --- keyword cloud -------------------------------------------------------------

// The two extracted keywords per rumor are its top entities; their counts feed
// the word-cloud style plot.
inline std::map<std::string, std::size_t> keyword_counts(const std::vector<RumorRecord>& records) {
    std::map<std::string, std::size_t> counts;
    for (const auto& r : records) {
        if (!r.top1_entity.empty()) ++counts[r.top1_entity];
        if (!r.top2_entity.empty()) ++counts[r.top2_entity];
    }
    return counts;
}

inline std::string keyword_csv(const std::map<std::string, std::size_t>& counts) {
    std::vector<std::pair<std::string, std::size_t>> ordered(counts.begin(), counts.end());
    std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    std::string out = "keyword,count\n";
    for (const auto& [k, c] : ordered) {
        out += csv::escape(k);
        out += ',';
        out += std::to_string(c);
        out += '\n';
    }
    return out;
}

} // namespace rumordyn
