#pragma once

// Shared test fixtures: the worked single-rumor example and a synthetic
// on-disk corpus with known generating parameters.

#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rumordyn/corpus.hpp"
#include "rumordyn/feature_pipeline.hpp"
#include "rumordyn/file_io.hpp"
#include "rumordyn/rng.hpp"
#include "rumordyn/search_series.hpp"

namespace rumordyn::testfx {

inline SearchSeries constant_series(const std::string& entity, Date from, Date to, double value) {
    SearchSeries s;
    s.entity = entity;
    s.start = from;
    for (long i = 0; i <= from.days_until(to); ++i) s.frequencies.push_back(value);
    return s;
}

// The worked example rumor: celebrity donation, outbreak 2020-01-26, entity
// baselines 11,000 / 2,200,000 / 800, the printed precursor week, sentiment
// 0.0032, and 224,000 search results.
struct WorkedFixture {
    RumorRecord record;
    SearchSeries key, top1, top2;
    SentimentSeries sentiment;

    WorkedFixture() {
        record.id = "louis-koo";
        record.text = "celebrity donated 10 million yuan";
        record.fundamental_entity = "Louis Koo";
        record.top1_entity = "Wuhan";
        record.top2_entity = "donated";
        record.outbreak_date = Date::parse("2020-01-26");
        record.per = true;
        record.org = false;
        record.loc = true;
        record.nz = false;
        record.n = false;
        record.v = true;
        record.resulting_amount = 224000.0;

        const Date b0 = Date::parse("2019-11-01");
        const Date end = Date::parse("2020-02-05");
        key = constant_series("Louis Koo", b0, end, 11000.0);
        const double week[7] = {13850, 10584, 10278, 12281, 10105, 8738, 10548};
        for (int i = 0; i < 7; ++i) {
            long idx = b0.days_until(record.outbreak_date.plus_days(i - 7));
            key.frequencies[std::size_t(idx)] = week[i];
        }
        top1 = constant_series("Wuhan", b0, end, 2200000.0);
        top2 = constant_series("donated", b0, end, 800.0);
        sentiment.points = {{Date::parse("2020-01-25"), 0.0030},
                            {Date::parse("2020-01-26"), 0.0032},
                            {Date::parse("2020-01-27"), 0.0031}};
    }
};

// Synthetic corpus written to disk through the production writers. Most
// rumors carry clean exponential windows with known (a, b, c); a few are
// deliberately defective to exercise the filter's rejection paths.
struct SyntheticCorpus {
    std::filesystem::path dir;
    std::filesystem::path manifest_path;
    std::map<std::string, std::array<double, 3>> truth; // id -> (a, b, c)
    std::vector<std::string> degenerate_ids, growing_ids, noisy_ids;
    std::size_t total = 0;

    SyntheticCorpus(const std::filesystem::path& where, std::size_t n_rumors = 40,
                    std::uint64_t seed = 20200126, bool with_semantic = false) {
        dir = where;
        std::filesystem::remove_all(dir);
        std::filesystem::create_directories(dir / "series");
        Rng rng(seed);

        const Date series_start = Date::parse("2019-11-01");
        const Date series_end = Date::parse("2020-02-15");
        SentimentSeries sent;
        for (long i = 0; i <= Date::parse("2020-01-01").days_until(series_end); ++i) {
            const Date d = Date::parse("2020-01-01").plus_days(i);
            sent.points.emplace_back(d, 0.002 + 0.001 * std::sin(0.21 * double(i)));
        }
        std::string sent_csv = "date,value\n";
        for (const auto& [d, v] : sent.points) {
            char buf[48];
            std::snprintf(buf, sizeof(buf), "%s,%.6f\n", d.to_string().c_str(), v);
            sent_csv += buf;
        }
        atomic_write_text_file(dir / "sentiment.csv", sent_csv);

        std::vector<RumorRecord> records;
        auto write_series = [&](const SearchSeries& s) {
            atomic_write_text_file(dir / "series" / (percent_encode(s.entity) + ".csv"),
                                   series_csv(s));
        };

        // shared top entities so the keyword counts have repeats
        std::vector<std::string> top1_pool = {"Wuhan, China", "hospital", "virus", "market",
                                              "government"};
        std::vector<std::string> top2_pool = {"donated", "banned", "cured"};
        for (const auto& e : top1_pool)
            write_series(constant_series(e, series_start, series_end,
                                         std::round(std::exp(rng.uniform(11.0, 14.0)))));
        for (const auto& e : top2_pool)
            write_series(constant_series(e, series_start, series_end,
                                         std::round(std::exp(rng.uniform(5.5, 7.5)))));

        for (std::size_t i = 0; i < n_rumors; ++i) {
            RumorRecord r;
            char idb[32];
            std::snprintf(idb, sizeof(idb), "r%03u", unsigned(i));
            r.id = idb;
            r.text = "synthetic rumor " + std::to_string(i);
            r.fundamental_entity = "entity " + std::to_string(i);
            r.top1_entity = top1_pool[i % top1_pool.size()];
            r.top2_entity = top2_pool[i % top2_pool.size()];
            r.outbreak_date = Date::parse("2020-01-10").plus_days(long(rng.bounded(25)));
            r.per = rng.uniform() < 0.5;
            r.org = rng.uniform() < 0.3;
            r.loc = rng.uniform() < 0.6;
            r.nz = rng.uniform() < 0.2;
            r.n = rng.uniform() < 0.5;
            r.v = rng.uniform() < 0.5;
            r.resulting_amount = std::round(std::exp(rng.uniform(8.0, 13.0)));
            if (with_semantic)
                r.semantic = std::array<double, 3>{rng.uniform(), rng.uniform(), rng.uniform()};

            const double base_level = std::round(std::exp(rng.uniform(7.0, 9.0)));
            SearchSeries s;
            s.entity = r.fundamental_entity;
            s.start = series_start;
            const long n_days = series_start.days_until(series_end) + 1;
            const long outbreak_idx = series_start.days_until(r.outbreak_date);
            for (long d = 0; d < n_days; ++d) {
                double v = base_level * (1.0 + 0.05 * std::sin(0.37 * double(d) + double(i)));
                s.frequencies.push_back(std::round(v));
            }

            const std::size_t kind = i % 10;
            if (kind == 7) {
                // constant window: rejected as degenerate
                for (long t = 0; t < 7; ++t)
                    s.frequencies[std::size_t(outbreak_idx + t)] = base_level;
                degenerate_ids.push_back(r.id);
            } else if (kind == 8) {
                // growing window: flagged no_decay and rejected
                for (long t = 0; t < 7; ++t)
                    s.frequencies[std::size_t(outbreak_idx + t)] =
                        std::round(base_level * (2.0 + 0.8 * double(t)));
                growing_ids.push_back(r.id);
            } else if (kind == 9) {
                // violent alternation: decays on average but far from the model
                const double a = -0.6, b = 10.0;
                for (long t = 0; t < 7; ++t) {
                    const double clean = std::exp(a * double(t) + b) + base_level;
                    const double fac = (t % 2 == 0) ? 2.4 : 0.4;
                    s.frequencies[std::size_t(outbreak_idx + t)] = std::round(clean * fac);
                }
                noisy_ids.push_back(r.id);
            } else {
                const double a = rng.uniform(-0.55, -0.28);
                const double b = rng.uniform(9.0, 11.0);
                const double c = rng.uniform(0.0, 3e4);
                for (long t = 0; t < 7; ++t) {
                    const double clean = std::exp(a * double(t) + b) + c;
                    auto& cell = s.frequencies[std::size_t(outbreak_idx + t)];
                    cell = std::round(clean);
                }
                // peak must dominate the neighborhood or the fitter re-anchors
                for (long t = -3; t < 0; ++t) {
                    auto& cell = s.frequencies[std::size_t(outbreak_idx + t)];
                    cell = std::min(cell, std::round(0.6 * (std::exp(b) + c)));
                }
                truth[r.id] = {a, b, c};
            }
            write_series(s);
            records.push_back(std::move(r));
        }
        total = records.size();
        atomic_write_text_file(dir / "rumors.jsonl", corpus_jsonl(records));

        nlohmann::json manifest{{"rumor_file", "rumors.jsonl"},
                                {"series_directory", "series"},
                                {"sentiment_file", "sentiment.csv"},
                                {"schema_version", 1}};
        manifest_path = dir / "manifest.json";
        atomic_write_text_file(manifest_path, manifest.dump(2) + "\n");
    }
};

} // namespace rumordyn::testfx
