#pragma once

// JSON mappings for the outcome and statistics types.

#include <optional>
#include <string>

#include "json.hpp"

#include "aitrand/ait_tests.hpp"
#include "aitrand/number_theory.hpp"
#include "aitrand/stats.hpp"

namespace aitrand {

using nlohmann::json;

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(BookStackOutcome, ones_before, ones_after, diff)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(BorelBlockResult, m, min_count, max_count, spread, max_deviation, threshold, pass)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(BorelOutcome, m_max, per_m, aggregate_metric, pass)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(EntropyEstimate, window_n, t, cap, match_lengths, h_hat, saturated_count,
                                   cap_saturated)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(WalkOutcome, y_max, y_min, range, y_final)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SSRun, k, bits_consumed, verdict_complete, numbers_total, numbers_resolved,
                                   witnesses_tested, draws_rejected)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(FiveNumberSummary, min, q1, median, q3, max, mean, sd)

inline void to_json(json& j, const StatTestResult& r) {
  j = json{{"method", std::string(to_string(r.method))},
           {"statistic", r.statistic},
           {"p_value", r.p_value},
           {"significant", r.significant},
           {"ties", r.ties}};
  if (r.df) j["df"] = *r.df;
}

inline void from_json(const json& j, StatTestResult& r) {
  r.method = stat_method_from_string(j.at("method").get<std::string>());
  j.at("statistic").get_to(r.statistic);
  j.at("p_value").get_to(r.p_value);
  j.at("significant").get_to(r.significant);
  j.at("ties").get_to(r.ties);
  r.df = j.contains("df") ? std::optional<double>(j.at("df").get<double>()) : std::nullopt;
}

// Optional members are written only when present.
template <class T>
void put_optional(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

template <class T>
void get_optional(const json& j, const char* key, std::optional<T>& v) {
  v = j.contains(key) ? std::optional<T>(j.at(key).get<T>()) : std::nullopt;
}

}  // namespace aitrand
