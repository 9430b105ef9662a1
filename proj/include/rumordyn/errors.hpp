#pragma once

#include <stdexcept>
#include <string>

namespace rumordyn {

// Machine-readable failure categories. The CLI maps these onto exit codes;
// the corpus filter records them as per-rumor rejection reasons.
enum class Errc {
    invalid_params,
    non_finite_state,
    window_out_of_range,
    non_positive_residual,
    degenerate_series,
    zero_traffic,
    empty_window,
    date_not_covered,
    too_few_rows,
    rank_deficient,
    dimension_mismatch,
    constant_series,
    parse_error,
    missing_series,
    duplicate_id,
    missing_input,
    schema_violation,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::invalid_params: return "invalid_params";
        case Errc::non_finite_state: return "non_finite_state";
        case Errc::window_out_of_range: return "window_out_of_range";
        case Errc::non_positive_residual: return "non_positive_residual";
        case Errc::degenerate_series: return "degenerate_series";
        case Errc::zero_traffic: return "zero_traffic";
        case Errc::empty_window: return "empty_window";
        case Errc::date_not_covered: return "date_not_covered";
        case Errc::too_few_rows: return "too_few_rows";
        case Errc::rank_deficient: return "rank_deficient";
        case Errc::dimension_mismatch: return "dimension_mismatch";
        case Errc::constant_series: return "constant_series";
        case Errc::parse_error: return "parse_error";
        case Errc::missing_series: return "missing_series";
        case Errc::duplicate_id: return "duplicate_id";
        case Errc::missing_input: return "missing_input";
        case Errc::schema_violation: return "schema_violation";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& msg)
        : std::runtime_error(std::string(errc_name(code)) + ": " + msg), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& msg) { throw Error(code, msg); }

} // namespace rumordyn
