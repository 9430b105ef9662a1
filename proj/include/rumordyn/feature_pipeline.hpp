#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rumordyn/csv.hpp"
#include "rumordyn/date.hpp"
#include "rumordyn/errors.hpp"
#include "rumordyn/search_series.hpp"

namespace rumordyn {

// One rumor's raw annotations, as delivered by the (out-of-scope) collection
// tooling: NER flags, the three key entities, and the search-engine portrait.
struct RumorRecord {
    std::string id;
    std::string text;
    std::string fundamental_entity; // least-searched key entity
    std::string top1_entity;
    std::string top2_entity;
    Date outbreak_date;
    bool per = false, org = false, loc = false, nz = false, n = false, v = false;
    double resulting_amount = 0.0;
    std::optional<std::array<double, 3>> semantic;
    std::optional<std::array<double, 3>> labels; // fitted (a, b, c)

    void validate() const {
        if (id.empty()) raise(Errc::parse_error, "record id must be non-empty");
        if (fundamental_entity.empty())
            raise(Errc::parse_error, "rumor " + id + ": fundamental_entity must be non-empty");
        if (!(resulting_amount >= 0.0))
            raise(Errc::parse_error, "rumor " + id + ": resulting_amount must be >= 0");
    }
};

// Daily mean sentiment of social-media posts. Dates strictly increasing, not
// necessarily gap-free; lookups are exact-date.
struct SentimentSeries {
    std::vector<std::pair<Date, double>> points;

    void validate() const {
        for (std::size_t i = 1; i < points.size(); ++i)
            if (!(points[i - 1].first < points[i].first))
                raise(Errc::parse_error, "sentiment dates must be strictly increasing");
        for (const auto& [d, v] : points)
            if (!std::isfinite(v)) raise(Errc::parse_error, "sentiment values must be finite");
    }
};

inline double locate_sentiment(const SentimentSeries& sent, Date date) {
    auto it = std::lower_bound(sent.points.begin(), sent.points.end(), date,
                               [](const auto& p, Date d) { return p.first < d; });
    if (it == sent.points.end() || it->first != date)
        raise(Errc::date_not_covered, "no sentiment value for " + date.to_string());
    return it->second;
}

inline SentimentSeries parse_sentiment_csv(const std::string& text) {
    SentimentSeries s;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        auto fields = csv::parse_line(line, line_no);
        if (line_no == 1) {
            if (fields.size() != 2 || fields[0] != "date" || fields[1] != "value")
                raise(Errc::parse_error, "line 1: expected header 'date,value'");
            continue;
        }
        if (fields.size() != 2)
            raise(Errc::parse_error, "line " + std::to_string(line_no) + ": expected 2 fields");
        Date d;
        try {
            d = Date::parse(fields[0]);
        } catch (const Error& e) {
            raise(Errc::parse_error,
                  "line " + std::to_string(line_no) + ", field 'date': " + e.what());
        }
        char* end = nullptr;
        const double value = std::strtod(fields[1].c_str(), &end);
        if (end == fields[1].c_str() || *end != '\0' || !std::isfinite(value))
            raise(Errc::parse_error,
                  "line " + std::to_string(line_no) + ", field 'value': number required");
        s.points.emplace_back(d, value);
    }
    s.validate();
    return s;
}

// Default historical-awareness baseline: the last two months of 2019,
// before the pandemic reshaped search traffic.
struct BaselineWindow {
    Date from = Date::from_ymd(2019, 11, 1);
    Date to = Date::from_ymd(2019, 12, 31);
};

// ln of the average daily search frequency over the baseline window.
inline double historical_awareness(const SearchSeries& series, const BaselineWindow& w = {}) {
    if (w.from > w.to) raise(Errc::empty_window, "baseline window is empty");
    if (!series.covers(w.from, w.to))
        raise(Errc::empty_window, "series '" + series.entity + "' does not cover baseline " +
                                      w.from.to_string() + ".." + w.to.to_string());
    double sum = 0.0;
    long days = w.from.days_until(w.to) + 1;
    for (long i = 0; i < days; ++i) sum += series.at(w.from.plus_days(i));
    double mean = sum / double(days);
    if (mean <= 0.0)
        raise(Errc::zero_traffic, "series '" + series.entity + "' has zero baseline traffic");
    return std::log(mean);
}

struct SfrSequence {
    std::array<double, 7> values{}; // ln frequency, day -7 first; values[6] is SFR-1
    bool zero_replaced = false;     // some day had zero traffic and was counted as 1
};

// ln of the precursor week: daily frequencies for days -7..-1 before the
// outbreak. Zero days would make ln undefined; they count as 1 and flag the rumor.
inline SfrSequence sfr_sequence(const SearchSeries& series, Date outbreak_date) {
    Date from = outbreak_date.plus_days(-7);
    Date to = outbreak_date.plus_days(-1);
    if (!series.covers(from, to))
        raise(Errc::window_out_of_range,
              "series '" + series.entity + "' does not cover precursor week " +
                  from.to_string() + ".." + to.to_string());
    SfrSequence out;
    for (int i = 0; i < 7; ++i) {
        double f = series.at(from.plus_days(i));
        if (f <= 0.0) {
            f = 1.0;
            out.zero_replaced = true;
        }
        out.values[std::size_t(i)] = std::log(f);
    }
    return out;
}

struct FeatureVector {
    std::string id;
    double per = 0, org = 0, loc = 0, nz = 0, n = 0, v = 0;
    double top1 = 0, top2 = 0, ane = 0; // ln average daily frequency per entity
    std::array<double, 7> sfr{};
    double pe = 0;
    double ra = 0;
    std::optional<std::array<double, 3>> semantic;
    std::optional<std::array<double, 3>> labels;
    bool zero_day_flag = false;
};

// Assemble the unnormalized numeric features for one rumor. Sub-operation
// failures are re-raised with the rumor id attached.
inline FeatureVector build_features(const RumorRecord& record, const SearchSeries& key_series,
                                    const SearchSeries& top1_series,
                                    const SearchSeries& top2_series, const SentimentSeries& sent,
                                    const BaselineWindow& baseline = {}) {
    record.validate();
    FeatureVector f;
    f.id = record.id;
    f.per = record.per ? 1.0 : 0.0;
    f.org = record.org ? 1.0 : 0.0;
    f.loc = record.loc ? 1.0 : 0.0;
    f.nz = record.nz ? 1.0 : 0.0;
    f.n = record.n ? 1.0 : 0.0;
    f.v = record.v ? 1.0 : 0.0;
    try {
        f.ane = historical_awareness(key_series, baseline);
        f.top1 = historical_awareness(top1_series, baseline);
        f.top2 = historical_awareness(top2_series, baseline);
        auto sfr = sfr_sequence(key_series, record.outbreak_date);
        f.sfr = sfr.values;
        f.zero_day_flag = sfr.zero_replaced;
        f.pe = locate_sentiment(sent, record.outbreak_date);
    } catch (const Error& e) {
        raise(e.code(), "rumor " + record.id + ": " + e.what());
    }
    f.ra = record.resulting_amount > 0.0 ? std::log(record.resulting_amount) : 0.0;
    f.semantic = record.semantic;
    f.labels = record.labels;
    return f;
}

// Rectangular feature matrix with named columns; labels ride along as
// label_a/label_b/label_c columns when every row carries them.
struct FeatureMatrix {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t column_index(const std::string& name) const {
        auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end())
            raise(Errc::schema_violation, "feature matrix has no column '" + name + "'");
        return std::size_t(it - columns.begin());
    }

    bool has_column(const std::string& name) const {
        return std::find(columns.begin(), columns.end(), name) != columns.end();
    }
};

inline const std::vector<std::string>& base_feature_columns() {
    static const std::vector<std::string> cols = {
        "per", "org", "loc", "nz", "n", "v", "top1", "top2", "ane",
        "sfr_7", "sfr_6", "sfr_5", "sfr_4", "sfr_3", "sfr_2", "sfr_1", "pe", "ra"};
    return cols;
}

// The eight features the paper models with (its Table-1 set).
inline const std::vector<std::string>& default_model_features() {
    static const std::vector<std::string> cols = {"per", "org", "loc", "top1",
                                                  "sfr_1", "pe",  "ane", "ra"};
    return cols;
}

inline FeatureMatrix feature_matrix(const std::vector<FeatureVector>& vectors) {
    FeatureMatrix m;
    m.columns = base_feature_columns();
    bool all_semantic = !vectors.empty();
    bool all_labels = !vectors.empty();
    bool any_semantic = false, any_labels = false;
    for (const auto& fv : vectors) {
        all_semantic = all_semantic && fv.semantic.has_value();
        all_labels = all_labels && fv.labels.has_value();
        any_semantic = any_semantic || fv.semantic.has_value();
        any_labels = any_labels || fv.labels.has_value();
    }
    if (any_semantic && !all_semantic)
        raise(Errc::schema_violation, "semantic columns present on some records but not all");
    if (any_labels && !all_labels)
        raise(Errc::schema_violation, "labels present on some records but not all");
    if (all_semantic) {
        m.columns.insert(m.columns.end(), {"sem_1", "sem_2", "sem_3"});
    }
    if (all_labels) {
        m.columns.insert(m.columns.end(), {"label_a", "label_b", "label_c"});
    }
    for (const auto& fv : vectors) {
        std::vector<double> row = {fv.per,    fv.org,    fv.loc,    fv.nz,    fv.n,
                                   fv.v,      fv.top1,   fv.top2,   fv.ane,   fv.sfr[0],
                                   fv.sfr[1], fv.sfr[2], fv.sfr[3], fv.sfr[4], fv.sfr[5],
                                   fv.sfr[6], fv.pe,     fv.ra};
        if (all_semantic)
            row.insert(row.end(), fv.semantic->begin(), fv.semantic->end());
        if (all_labels)
            row.insert(row.end(), fv.labels->begin(), fv.labels->end());
        m.rows.push_back(std::move(row));
    }
    return m;
}

// Per-column min-max state, fitted on training rows and reusable on held-out
// rows. Constant columns map to 0 and are flagged.
struct NormalizationRanges {
    std::vector<double> min;
    std::vector<double> max;
    std::vector<bool> constant;

    std::size_t size() const { return min.size(); }
};

inline NormalizationRanges fit_ranges(const std::vector<std::vector<double>>& rows) {
    if (rows.size() < 2) raise(Errc::too_few_rows, "min-max normalization needs >= 2 rows");
    const std::size_t n_cols = rows.front().size();
    NormalizationRanges r;
    r.min.assign(n_cols, 0.0);
    r.max.assign(n_cols, 0.0);
    r.constant.assign(n_cols, false);
    for (std::size_t j = 0; j < n_cols; ++j) {
        double lo = rows[0][j], hi = rows[0][j];
        for (const auto& row : rows) {
            lo = std::min(lo, row[j]);
            hi = std::max(hi, row[j]);
        }
        r.min[j] = lo;
        r.max[j] = hi;
        r.constant[j] = (lo == hi);
    }
    return r;
}

// Applies fitted ranges; values outside the training range clamp into [0,1]
// and are counted so the caller can warn.
inline std::vector<std::vector<double>> apply_ranges(
    const std::vector<std::vector<double>>& rows, const NormalizationRanges& r,
    std::size_t* clamped_count = nullptr) {
    std::vector<std::vector<double>> out = rows;
    std::size_t clamped = 0;
    for (auto& row : out) {
        if (row.size() != r.size())
            raise(Errc::dimension_mismatch, "row width does not match normalization ranges");
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (r.constant[j]) {
                row[j] = 0.0;
                continue;
            }
            double z = (row[j] - r.min[j]) / (r.max[j] - r.min[j]);
            if (z < 0.0 || z > 1.0) {
                z = std::clamp(z, 0.0, 1.0);
                ++clamped;
            }
            row[j] = z;
        }
    }
    if (clamped_count) *clamped_count = clamped;
    return out;
}

inline std::pair<std::vector<std::vector<double>>, NormalizationRanges> minmax_normalize(
    const std::vector<std::vector<double>>& rows) {
    NormalizationRanges r = fit_ranges(rows);
    return {apply_ranges(rows, r), r};
}

inline std::string feature_matrix_csv(const FeatureMatrix& m) {
    std::string out;
    for (std::size_t j = 0; j < m.columns.size(); ++j) {
        if (j) out += ',';
        out += csv::escape(m.columns[j]);
    }
    out += '\n';
    char buf[40];
    for (const auto& row : m.rows) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j) out += ',';
            std::snprintf(buf, sizeof(buf), "%.17g", row[j]);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

inline FeatureMatrix parse_feature_matrix_csv(const std::string& text) {
    FeatureMatrix m;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
        auto fields = csv::parse_line(line, line_no);
        if (line_no == 1) {
            m.columns = fields;
            continue;
        }
        if (fields.size() != m.columns.size())
            raise(Errc::parse_error, "line " + std::to_string(line_no) + ": expected " +
                                         std::to_string(m.columns.size()) + " fields");
        std::vector<double> row;
        row.reserve(fields.size());
        for (std::size_t j = 0; j < fields.size(); ++j) {
            char* end = nullptr;
            double val = std::strtod(fields[j].c_str(), &end);
            if (end == fields[j].c_str() || *end != '\0' || !std::isfinite(val))
                raise(Errc::parse_error, "line " + std::to_string(line_no) + ", column '" +
                                             m.columns[j] + "': number required");
            row.push_back(val);
        }
        m.rows.push_back(std::move(row));
    }
    if (m.columns.empty()) raise(Errc::parse_error, "feature matrix has no header");
    return m;
}

} // namespace rumordyn
