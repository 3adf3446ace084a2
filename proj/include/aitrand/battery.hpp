#pragma once

// Battery orchestration: configuration, per-string test execution, group
// comparison and report emission.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

#include "aitrand/ait_tests.hpp"
#include "aitrand/bitstream.hpp"
#include "aitrand/digest.hpp"
#include "aitrand/errors.hpp"
#include "aitrand/number_theory.hpp"
#include "aitrand/serialization.hpp"
#include "aitrand/sources.hpp"
#include "aitrand/stats.hpp"

namespace aitrand {

inline constexpr std::string_view kReportSchema = "aitrand.report/1";
inline constexpr std::uint64_t kDefaultStringBits = 1ull << 20;
inline constexpr std::uint64_t kLongRunBits = 1ull << 30;
inline constexpr std::uint64_t kDefaultGroupSize = 10;

// ---------------------------------------------------------------------------
// Sources
// ---------------------------------------------------------------------------

enum class SourceKind { prng, weak_prng, champernowne, biased, file };

inline std::string_view to_string(SourceKind k) noexcept {
  switch (k) {
    case SourceKind::prng: return "prng";
    case SourceKind::weak_prng: return "weak_prng";
    case SourceKind::champernowne: return "champernowne";
    case SourceKind::biased: return "biased";
    case SourceKind::file: return "file";
  }
  return "unknown";
}

inline SourceKind source_kind_from_string(std::string_view s) {
  if (s == "prng") return SourceKind::prng;
  if (s == "weak_prng" || s == "weak") return SourceKind::weak_prng;
  if (s == "champernowne") return SourceKind::champernowne;
  if (s == "biased") return SourceKind::biased;
  if (s == "file") return SourceKind::file;
  throw ConfigError("unknown source kind '" + std::string(s) + "'");
}

struct SourceDescriptor {
  SourceKind kind = SourceKind::prng;
  std::uint64_t seed = 0;  // generators only
  double bias_p = 0.5;     // biased only
  std::string path;        // file only
  std::uint64_t bit_len = 0;  // requested length; for files 0 means the whole file
  bool vn_normalize = false;  // von Neumann post-processing after generation/loading
  BitOrder bit_order = BitOrder::msb_first;  // file only

  friend bool operator==(const SourceDescriptor&, const SourceDescriptor&) = default;
};

inline BitString materialize(const SourceDescriptor& d) {
  BitString raw;
  switch (d.kind) {
    case SourceKind::prng: raw = gen_prng(d.seed, d.bit_len); break;
    case SourceKind::weak_prng: raw = gen_weak_prng(d.seed, d.bit_len); break;
    case SourceKind::champernowne: raw = gen_champernowne(d.bit_len); break;
    case SourceKind::biased: raw = gen_biased(d.seed, d.bias_p, d.bit_len); break;
    case SourceKind::file:
      raw = load_raw_file(d.path, d.bit_len == 0 ? std::nullopt : std::optional<std::uint64_t>(d.bit_len),
                          d.bit_order);
      break;
  }
  return d.vn_normalize ? vn_normalize(raw) : raw;
}

inline std::string describe(const SourceDescriptor& d) {
  std::ostringstream os;
  os << to_string(d.kind);
  switch (d.kind) {
    case SourceKind::prng:
    case SourceKind::weak_prng: os << "(seed=" << d.seed << ")"; break;
    case SourceKind::biased: os << "(seed=" << d.seed << ",p=" << d.bias_p << ")"; break;
    case SourceKind::champernowne: break;
    case SourceKind::file: os << "(" << d.path << ")"; break;
  }
  if (d.vn_normalize) os << "+vn";
  return os.str();
}

inline void to_json(json& j, const SourceDescriptor& d) {
  j = json{{"kind", std::string(to_string(d.kind))}, {"bits", d.bit_len}};
  switch (d.kind) {
    case SourceKind::prng:
    case SourceKind::weak_prng: j["seed"] = d.seed; break;
    case SourceKind::biased:
      j["seed"] = d.seed;
      j["p"] = d.bias_p;
      break;
    case SourceKind::champernowne: break;
    case SourceKind::file:
      j["path"] = d.path;
      j["bit_order"] = d.bit_order == BitOrder::msb_first ? "msb" : "lsb";
      break;
  }
  if (d.vn_normalize) j["vn_normalize"] = true;
}

inline void from_json(const json& j, SourceDescriptor& d) {
  d = SourceDescriptor{};
  d.kind = source_kind_from_string(j.at("kind").get<std::string>());
  d.bit_len = j.value("bits", d.kind == SourceKind::file ? std::uint64_t{0} : kDefaultStringBits);
  d.seed = j.value("seed", std::uint64_t{0});
  d.bias_p = j.value("p", 0.5);
  d.path = j.value("path", std::string{});
  d.vn_normalize = j.value("vn_normalize", false);
  const std::string order = j.value("bit_order", std::string("msb"));
  if (order != "msb" && order != "lsb") throw ConfigError("bit_order must be 'msb' or 'lsb'");
  d.bit_order = order == "msb" ? BitOrder::msb_first : BitOrder::lsb_first;
}

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

enum class TestKind { book_stack, borel, ss_carmichael, entropy, walk };

inline constexpr TestKind kAllTests[] = {TestKind::book_stack, TestKind::borel, TestKind::ss_carmichael,
                                         TestKind::entropy, TestKind::walk};

inline std::string_view to_string(TestKind t) noexcept {
  switch (t) {
    case TestKind::book_stack: return "book_stack";
    case TestKind::borel: return "borel";
    case TestKind::ss_carmichael: return "ss_carmichael";
    case TestKind::entropy: return "entropy";
    case TestKind::walk: return "walk";
  }
  return "unknown";
}

inline TestKind test_kind_from_string(std::string_view s) {
  for (TestKind t : kAllTests) {
    if (to_string(t) == s) return t;
  }
  throw ConfigError("unknown test '" + std::string(s) + "'");
}

// Name of the scalar each test contributes to the group statistics.
inline std::string_view metric_name(TestKind t) noexcept {
  switch (t) {
    case TestKind::book_stack: return "ones_after";
    case TestKind::borel: return "aggregate_metric";
    case TestKind::ss_carmichael: return "bits_consumed";
    case TestKind::entropy: return "h_hat";
    case TestKind::walk: return "range";
  }
  return "unknown";
}

struct SourceGroup {
  std::string name;
  std::vector<SourceDescriptor> strings;
};

struct EntropyParams {
  std::uint64_t window = 4096;
  std::uint64_t t = 4096;
};

struct CarmichaelParams {
  std::uint64_t bound = kDefaultCarmichaelBound;
  std::string file;  // when set, the list is loaded instead of enumerated
};

struct BatteryConfig {
  std::vector<SourceGroup> groups;
  std::vector<TestKind> tests;
  EntropyParams entropy;
  std::optional<unsigned> borel_m_limit;
  CarmichaelParams carmichael;
  double significance = kDefaultSignificance;
  std::string output_dir;
  unsigned jobs = 1;
};

namespace detail {

inline std::vector<std::uint64_t> group_seeds(const json& g, SourceKind kind) {
  if (g.contains("seeds")) return g.at("seeds").get<std::vector<std::uint64_t>>();
  const auto count = g.value("count", kDefaultGroupSize);
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t i = 0; i < count; ++i) seeds.push_back(kind == SourceKind::weak_prng ? 2 * i + 1 : i + 1);
  return seeds;
}

inline SourceGroup parse_group(const json& g) {
  SourceGroup group;
  group.name = g.at("name").get<std::string>();
  if (g.contains("strings")) {
    for (const auto& s : g.at("strings")) group.strings.push_back(s.get<SourceDescriptor>());
    return group;
  }
  // Shorthand: one descriptor template expanded over seeds or paths.
  SourceDescriptor base = g.get<SourceDescriptor>();
  switch (base.kind) {
    case SourceKind::file:
      for (const auto& p : g.at("paths")) {
        SourceDescriptor d = base;
        d.path = p.get<std::string>();
        group.strings.push_back(d);
      }
      break;
    case SourceKind::champernowne:
      for (std::uint64_t i = 0, n = g.value("count", std::uint64_t{1}); i < n; ++i) group.strings.push_back(base);
      break;
    default:
      for (const std::uint64_t seed : group_seeds(g, base.kind)) {
        SourceDescriptor d = base;
        d.seed = seed;
        group.strings.push_back(d);
      }
  }
  return group;
}

}  // namespace detail

// Config file schema:
//   groups: [{name, kind, seeds|count, bits, p, vn_normalize, paths, bit_order} | {name, strings: [...]}]
//   tests: ["book_stack", "borel", "ss_carmichael", "entropy", "walk"]   (default: all)
//   entropy: {window, t}; borel: {m_limit}; carmichael: {bound} | {file}
//   significance: number (default 0.05); jobs: integer
inline BatteryConfig parse_config(const json& j) {
  try {
    BatteryConfig cfg;
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    if (!j.contains("groups") || !j.at("groups").is_array()) throw ConfigError("config needs a 'groups' array");
    for (const auto& g : j.at("groups")) cfg.groups.push_back(detail::parse_group(g));
    if (j.contains("tests")) {
      for (const auto& t : j.at("tests")) cfg.tests.push_back(test_kind_from_string(t.get<std::string>()));
    } else {
      cfg.tests.assign(std::begin(kAllTests), std::end(kAllTests));
    }
    if (j.contains("entropy")) {
      cfg.entropy.window = j["entropy"].value("window", cfg.entropy.window);
      cfg.entropy.t = j["entropy"].value("t", cfg.entropy.t);
    }
    if (j.contains("borel") && j["borel"].contains("m_limit")) cfg.borel_m_limit = j["borel"]["m_limit"].get<unsigned>();
    if (j.contains("carmichael")) {
      cfg.carmichael.bound = j["carmichael"].value("bound", cfg.carmichael.bound);
      cfg.carmichael.file = j["carmichael"].value("file", std::string{});
    }
    cfg.significance = j.value("significance", cfg.significance);
    cfg.output_dir = j.value("out", std::string{});
    cfg.jobs = j.value("jobs", 1u);
    return cfg;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
}

inline BatteryConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

// Output file names written by emit_report for a set of tests.
inline std::vector<std::string> report_file_names(const std::vector<TestKind>& tests) {
  std::vector<std::string> names{"report.json"};
  for (TestKind t : tests) {
    for (const char* suffix : {"_summary.csv", "_boxplot.csv", "_ks.csv", "_shapiro.csv", "_welch.csv"}) {
      names.push_back(std::string(to_string(t)) + suffix);
    }
  }
  return names;
}

inline void validate_config(const BatteryConfig& cfg) {
  if (cfg.groups.empty()) throw ConfigError("config has no source groups");
  std::set<std::string> names;
  if (cfg.tests.empty()) throw ConfigError("config selects no tests");
  if (std::set<TestKind>(cfg.tests.begin(), cfg.tests.end()).size() != cfg.tests.size()) {
    throw ConfigError("a test is listed twice");
  }
  if (!(cfg.significance > 0.0 && cfg.significance < 1.0)) throw ConfigError("significance must be in (0, 1)");
  if (cfg.jobs == 0) throw ConfigError("jobs must be at least 1");
  if (cfg.entropy.window < 2 || cfg.entropy.t < 1) throw ConfigError("entropy needs window >= 2 and t >= 1");
  if (cfg.borel_m_limit && *cfg.borel_m_limit == 0) throw ConfigError("borel m_limit must be at least 1");

  std::vector<std::filesystem::path> outputs;
  if (!cfg.output_dir.empty()) {
    const auto dir = std::filesystem::weakly_canonical(cfg.output_dir);
    outputs.push_back(dir);
    for (const auto& n : report_file_names(cfg.tests)) outputs.push_back(dir / n);
  }
  for (const auto& g : cfg.groups) {
    if (g.name.empty()) throw ConfigError("source group without a name");
    if (!names.insert(g.name).second) throw ConfigError("duplicate group name '" + g.name + "'");
    if (g.strings.empty()) throw ConfigError("source group '" + g.name + "' is empty");
    for (const auto& d : g.strings) {
      const std::string where = "group '" + g.name + "', " + describe(d) + ": ";
      if (d.kind != SourceKind::file && d.bit_len == 0) throw ConfigError(where + "bit length must be at least 1");
      if ((d.kind == SourceKind::prng || d.kind == SourceKind::biased) && d.seed == 0) {
        throw ConfigError(where + "seed must be nonzero");
      }
      if (d.kind == SourceKind::weak_prng && (d.seed % 2 == 0 || d.seed >= (1ull << 31))) {
        throw ConfigError(where + "RANDU seed must be odd and below 2^31");
      }
      if (d.kind == SourceKind::biased && !(d.bias_p > 0.0 && d.bias_p < 1.0)) {
        throw ConfigError(where + "bias p must be in (0, 1)");
      }
      if (d.kind == SourceKind::file) {
        if (d.path.empty()) throw ConfigError(where + "missing path");
        std::error_code ec;
        if (!std::filesystem::is_regular_file(d.path, ec)) throw ConfigError(where + "file not readable");
        const auto canon = std::filesystem::weakly_canonical(d.path);
        for (const auto& o : outputs) {
          if (canon == o) throw ConfigError(where + "input path collides with the output location");
        }
      }
    }
  }
  if (!cfg.carmichael.file.empty()) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(cfg.carmichael.file, ec)) {
      throw ConfigError("Carmichael list " + cfg.carmichael.file + " not readable");
    }
  } else if (cfg.carmichael.bound < 561 &&
             std::find(cfg.tests.begin(), cfg.tests.end(), TestKind::ss_carmichael) != cfg.tests.end()) {
    throw ConfigError("Carmichael bound below 561 yields an empty set");
  }
}

// ---------------------------------------------------------------------------
// Report types
// ---------------------------------------------------------------------------

struct StringResult {
  std::string label;
  SourceDescriptor source;
  std::uint64_t bit_len = 0;
  std::string sha256;
  std::optional<BookStackOutcome> book_stack;
  std::optional<BorelOutcome> borel;
  std::optional<SSRun> ss_carmichael;
  std::optional<EntropyEstimate> entropy;
  std::optional<WalkOutcome> walk;
  std::map<std::string, std::string> errors;  // test name (or "source") -> message

  friend bool operator==(const StringResult&, const StringResult&) = default;
};

struct GroupReport {
  std::string name;
  std::vector<StringResult> strings;

  friend bool operator==(const GroupReport&, const GroupReport&) = default;
};

struct GroupStats {
  std::string name;
  std::vector<double> values;
  bool included = false;  // at least two usable values
  std::optional<FiveNumberSummary> summary;
  std::optional<StatTestResult> shapiro_wilk;
  std::optional<std::string> shapiro_error;

  friend bool operator==(const GroupStats&, const GroupStats&) = default;
};

struct PairResult {
  std::string a;
  std::string b;
  StatTestResult result;

  friend bool operator==(const PairResult&, const PairResult&) = default;
};

// Pairwise comparison of named metric vectors. Pairs are listed for i < j in
// group order (upper triangle).
struct Comparison {
  std::vector<GroupStats> groups;
  std::vector<PairResult> ks;
  std::optional<std::vector<PairResult>> welch;  // absent when some group rejects normality
  std::vector<std::string> warnings;

  friend bool operator==(const Comparison&, const Comparison&) = default;
};

struct TestReport {
  TestKind test = TestKind::walk;
  std::string metric;
  Comparison comparison;

  friend bool operator==(const TestReport&, const TestReport&) = default;
};

struct BatteryReport {
  std::string schema{kReportSchema};
  std::string generated_at;
  double significance = kDefaultSignificance;
  json provenance = json::object();
  std::vector<GroupReport> groups;
  std::vector<TestReport> tests;
  std::vector<std::string> warnings;

  friend bool operator==(const BatteryReport&, const BatteryReport&) = default;
};

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

inline Comparison compare_sources(const std::vector<std::pair<std::string, std::vector<double>>>& metric_vectors,
                                  double threshold = kDefaultSignificance) {
  if (metric_vectors.empty()) throw ParameterError("no metric vectors to compare");
  Comparison c;
  for (const auto& [name, values] : metric_vectors) {
    GroupStats g;
    g.name = name;
    g.values = values;
    g.included = values.size() >= 2;
    if (!g.included) {
      c.warnings.push_back("group '" + name + "' has " + std::to_string(values.size()) +
                           " usable values; excluded from statistics");
    } else {
      g.summary = five_number_summary(values);
      try {
        g.shapiro_wilk = shapiro_wilk(values, threshold);
      } catch (const Error& e) {
        g.shapiro_error = e.what();
        c.warnings.push_back("Shapiro-Wilk unavailable for group '" + name + "': " + e.what());
      }
    }
    c.groups.push_back(std::move(g));
  }

  std::vector<const GroupStats*> used;
  for (const auto& g : c.groups) {
    if (g.included) used.push_back(&g);
  }
  for (std::size_t i = 0; i < used.size(); ++i) {
    for (std::size_t j = i + 1; j < used.size(); ++j) {
      c.ks.push_back({used[i]->name, used[j]->name, ks_two_sample(used[i]->values, used[j]->values, threshold)});
    }
  }

  const bool normal = !used.empty() && std::all_of(used.begin(), used.end(), [&](const GroupStats* g) {
    return g->shapiro_wilk && g->shapiro_wilk->p_value >= threshold;
  });
  if (normal) {
    std::vector<PairResult> welch;
    for (std::size_t i = 0; i < used.size(); ++i) {
      for (std::size_t j = i + 1; j < used.size(); ++j) {
        welch.push_back({used[i]->name, used[j]->name, welch_t(used[i]->values, used[j]->values, threshold)});
      }
    }
    c.welch = std::move(welch);
  } else if (!used.empty()) {
    c.warnings.push_back("Welch t-test suppressed: normality rejected or unavailable for at least one group");
  }
  return c;
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

namespace detail {

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::optional<double> metric_value(const StringResult& r, TestKind t) {
  switch (t) {
    case TestKind::book_stack:
      if (r.book_stack) return static_cast<double>(r.book_stack->ones_after);
      break;
    case TestKind::borel:
      if (r.borel) return r.borel->aggregate_metric;
      break;
    case TestKind::ss_carmichael:
      if (r.ss_carmichael) return static_cast<double>(r.ss_carmichael->bits_consumed);
      break;
    case TestKind::entropy:
      if (r.entropy) return r.entropy->h_hat;
      break;
    case TestKind::walk:
      if (r.walk) return static_cast<double>(r.walk->range);
      break;
  }
  return std::nullopt;
}

inline void run_one_test(StringResult& r, const BitString& x, TestKind t, const BatteryConfig& cfg,
                         const CarmichaelSet* cs) {
  switch (t) {
    case TestKind::book_stack: r.book_stack = book_stack_metric(x); break;
    case TestKind::borel: r.borel = borel_normality(x, cfg.borel_m_limit); break;
    case TestKind::ss_carmichael: r.ss_carmichael = ss_carmichael_metric(x, *cs); break;
    case TestKind::entropy: r.entropy = entropy_sliding(x, cfg.entropy.window, cfg.entropy.t); break;
    case TestKind::walk: r.walk = random_walk_range(x); break;
  }
}

inline json build_provenance(const BatteryConfig& cfg, const CarmichaelSet* cs, const std::string& cs_digest) {
  json p;
  p["significance_threshold"] = cfg.significance;
  p["tests"] = json::array();
  for (TestKind t : cfg.tests) p["tests"].push_back({{"test", to_string(t)}, {"metric", metric_name(t)}});
  p["bit_order"] = "bits read MSB-first within each byte unless a file source sets bit_order=lsb";
  p["generators"] = {
      {"prng", "xorshift64*: s^=s>>12; s^=s<<25; s^=s>>27; out=s*2685821657736338717 mod 2^64; words MSB-first"},
      {"weak_prng", "RANDU x<-65539x mod 2^31, emit bit 30 of each state"},
      {"champernowne", "concatenated binary 1,2,3,..."},
      {"biased", "bit i = [xorshift64* word i / 2^64 < p]"},
      {"vn_normalize", "pairs 01->0, 10->1, 00/11 dropped, trailing odd bit dropped"}};
  p["borel"] = {{"m_limit", cfg.borel_m_limit.value_or(kDefaultBorelMLimit)},
                {"m_max_rule", "max(1, min(floor(log2 log2 |x|), m_limit, 16))"},
                {"threshold", "sqrt(log2|x| / |x|)"},
                {"aggregate_metric", "max over m, j of |N_j^m - |x|_m 2^-m|"},
                {"blocks", "non-overlapping, trailing remainder discarded"}};
  p["entropy"] = {{"window", cfg.entropy.window},
                  {"t", cfg.entropy.t},
                  {"cap", entropy_match_cap(std::max<std::uint64_t>(cfg.entropy.window, 2))},
                  {"cap_rule", "2 * ceil(log2 window)"},
                  {"positions", "i_k = window + floor(k (|x| - cap - window) / t), k = 0..t-1"},
                  {"match_length", "longest match starting in [i - window, i - 1], at least 1, at most cap"},
                  {"estimate", "t log2(window) / sum L, clamped to [0, 1]"},
                  {"cap_saturated", "more than half of the positions hit the cap"}};
  p["book_stack"] = {{"alphabet", "bytes, identity initial stack"}, {"partial_byte", "discarded"}};
  p["walk"] = {{"step", "+1 for bit 1, -1 for bit 0, start 0"}};
  if (cs) {
    p["ss_carmichael"] = {
        {"carmichael_source", cfg.carmichael.file.empty() ? "enumerated" : "file"},
        {"carmichael_bound", cs->bound},
        {"carmichael_count", cs->numbers.size()},
        {"carmichael_sha256", cs_digest},
        {"witness_encoding", "read ceil(log2(n-3)) bits as v, i = 2 + v, reject i > n-2; bits never reused"},
        {"max_consecutive_rejections", kMaxConsecutiveRejections},
        {"iteration", "rounds k = 1, 2, ...; pending n ascending; up to k witnesses per n, stop at first witness"}};
    if (!cfg.carmichael.file.empty()) p["ss_carmichael"]["carmichael_file"] = cfg.carmichael.file;
  }
  p["statistics"] = {{"quartiles", "linear interpolation at (n-1)q on sorted data"},
                     {"sd", "sample standard deviation, divisor n-1"},
                     {"ks", "exact lattice-path p when pooled sample has no ties and n*m <= 10000, else asymptotic"},
                     {"shapiro_wilk", "Royston AS R94"},
                     {"welch", "Welch-Satterthwaite df, two-sided Student t p; only when no group rejects normality"},
                     {"min_group_size", 2}};
  return p;
}

}  // namespace detail

inline BatteryReport run_battery(const BatteryConfig& cfg) {
  validate_config(cfg);
  const bool needs_cs = std::find(cfg.tests.begin(), cfg.tests.end(), TestKind::ss_carmichael) != cfg.tests.end();
  std::optional<CarmichaelSet> cs;
  std::string cs_digest;
  if (needs_cs) {
    cs = cfg.carmichael.file.empty() ? enumerate_carmichael(cfg.carmichael.bound)
                                     : load_carmichael_file(cfg.carmichael.file);
    if (cs->numbers.empty()) throw ConfigError("Carmichael set is empty");
    std::string text;
    for (auto n : cs->numbers) text += std::to_string(n) + "\n";
    cs_digest = sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  }

  BatteryReport report;
  report.generated_at = detail::utc_timestamp();
  report.significance = cfg.significance;
  report.provenance = detail::build_provenance(cfg, cs ? &*cs : nullptr, cs_digest);

  struct Task {
    std::size_t group;
    std::size_t index;
  };
  std::vector<Task> tasks;
  for (std::size_t g = 0; g < cfg.groups.size(); ++g) {
    GroupReport gr;
    gr.name = cfg.groups[g].name;
    gr.strings.resize(cfg.groups[g].strings.size());
    report.groups.push_back(std::move(gr));
    for (std::size_t i = 0; i < cfg.groups[g].strings.size(); ++i) {
      tasks.push_back({g, i});
      const auto& d = cfg.groups[g].strings[i];
      if (d.kind != SourceKind::file && d.bit_len > kLongRunBits) {
        report.warnings.push_back("long run: " + describe(d) + " requests " + std::to_string(d.bit_len) + " bits");
      }
    }
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < tasks.size();) {
      const Task task = tasks[k];
      const SourceDescriptor& d = cfg.groups[task.group].strings[task.index];
      StringResult& r = report.groups[task.group].strings[task.index];
      r.label = describe(d);
      r.source = d;
      BitString x;
      try {
        x = materialize(d);
      } catch (const Error& e) {
        r.errors["source"] = e.what();
        continue;
      }
      r.bit_len = x.size();
      r.sha256 = sha256_hex(x.bytes());
      for (TestKind t : cfg.tests) {
        try {
          detail::run_one_test(r, x, t, cfg, cs ? &*cs : nullptr);
        } catch (const Error& e) {
          r.errors[std::string(to_string(t))] = e.what();
        }
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::min<std::size_t>(cfg.jobs, std::max<std::size_t>(tasks.size(), 1)));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  for (const auto& g : report.groups) {
    for (const auto& s : g.strings) {
      for (const auto& [test, msg] : s.errors) {
        report.warnings.push_back("group '" + g.name + "', " + s.label + ", " + test + ": " + msg);
      }
    }
  }

  for (TestKind t : cfg.tests) {
    std::vector<std::pair<std::string, std::vector<double>>> vectors;
    for (const auto& g : report.groups) {
      std::vector<double> values;
      for (const auto& s : g.strings) {
        if (auto v = detail::metric_value(s, t)) values.push_back(*v);
      }
      vectors.emplace_back(g.name, std::move(values));
    }
    TestReport tr;
    tr.test = t;
    tr.metric = std::string(metric_name(t));
    tr.comparison = compare_sources(vectors, cfg.significance);
    report.tests.push_back(std::move(tr));
  }
  return report;
}

// ---------------------------------------------------------------------------
// JSON mapping of the report
// ---------------------------------------------------------------------------

inline void to_json(json& j, const StringResult& r) {
  j = json{{"label", r.label}, {"source", r.source}, {"bit_len", r.bit_len}, {"sha256", r.sha256}};
  json outcomes = json::object();
  put_optional(outcomes, "book_stack", r.book_stack);
  put_optional(outcomes, "borel", r.borel);
  put_optional(outcomes, "ss_carmichael", r.ss_carmichael);
  put_optional(outcomes, "entropy", r.entropy);
  put_optional(outcomes, "walk", r.walk);
  j["outcomes"] = std::move(outcomes);
  j["errors"] = r.errors;
}

inline void from_json(const json& j, StringResult& r) {
  j.at("label").get_to(r.label);
  j.at("source").get_to(r.source);
  j.at("bit_len").get_to(r.bit_len);
  j.at("sha256").get_to(r.sha256);
  const json& o = j.at("outcomes");
  get_optional(o, "book_stack", r.book_stack);
  get_optional(o, "borel", r.borel);
  get_optional(o, "ss_carmichael", r.ss_carmichael);
  get_optional(o, "entropy", r.entropy);
  get_optional(o, "walk", r.walk);
  j.at("errors").get_to(r.errors);
}

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(GroupReport, name, strings)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(PairResult, a, b, result)

inline void to_json(json& j, const GroupStats& g) {
  j = json{{"name", g.name}, {"values", g.values}, {"included", g.included}};
  put_optional(j, "summary", g.summary);
  put_optional(j, "shapiro_wilk", g.shapiro_wilk);
  put_optional(j, "shapiro_error", g.shapiro_error);
}

inline void from_json(const json& j, GroupStats& g) {
  j.at("name").get_to(g.name);
  j.at("values").get_to(g.values);
  j.at("included").get_to(g.included);
  get_optional(j, "summary", g.summary);
  get_optional(j, "shapiro_wilk", g.shapiro_wilk);
  get_optional(j, "shapiro_error", g.shapiro_error);
}

inline void to_json(json& j, const Comparison& c) {
  j = json{{"groups", c.groups}, {"ks", c.ks}, {"warnings", c.warnings}};
  j["welch"] = c.welch ? json(*c.welch) : json(nullptr);
}

inline void from_json(const json& j, Comparison& c) {
  j.at("groups").get_to(c.groups);
  j.at("ks").get_to(c.ks);
  j.at("warnings").get_to(c.warnings);
  c.welch = j.at("welch").is_null() ? std::nullopt
                                    : std::optional<std::vector<PairResult>>(j.at("welch").get<std::vector<PairResult>>());
}

inline void to_json(json& j, const TestReport& t) {
  j = json{{"test", std::string(to_string(t.test))}, {"metric", t.metric}, {"comparison", t.comparison}};
}

inline void from_json(const json& j, TestReport& t) {
  t.test = test_kind_from_string(j.at("test").get<std::string>());
  j.at("metric").get_to(t.metric);
  j.at("comparison").get_to(t.comparison);
}

inline void to_json(json& j, const BatteryReport& r) {
  j = json{{"schema", r.schema},         {"generated_at", r.generated_at}, {"significance", r.significance},
           {"provenance", r.provenance}, {"groups", r.groups},             {"tests", r.tests},
           {"warnings", r.warnings}};
}

inline void from_json(const json& j, BatteryReport& r) {
  j.at("schema").get_to(r.schema);
  j.at("generated_at").get_to(r.generated_at);
  j.at("significance").get_to(r.significance);
  r.provenance = j.at("provenance");
  j.at("groups").get_to(r.groups);
  j.at("tests").get_to(r.tests);
  j.at("warnings").get_to(r.warnings);
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

enum class ReportFormat { json, csv, both };

namespace detail {

inline std::string fmt_number(double v, int digits) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.*g", digits, v);
  return buf;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + p.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + p.string());
}

inline std::string summary_csv(const Comparison& c, int digits) {
  std::string s = "source,min,q1,median,q3,max,mean,sd\n";
  for (const auto& g : c.groups) {
    s += g.name;
    if (g.summary) {
      for (double v : {g.summary->min, g.summary->q1, g.summary->median, g.summary->q3, g.summary->max,
                       g.summary->mean, g.summary->sd}) {
        s += "," + fmt_number(v, digits);
      }
    } else {
      s += ",,,,,,,";
    }
    s += "\n";
  }
  return s;
}

inline std::string pairs_csv(const std::vector<PairResult>& pairs) {
  std::string s = "source_a,source_b,method,statistic,df,p_value,significant\n";
  for (const auto& p : pairs) {
    s += p.a + "," + p.b + "," + std::string(to_string(p.result.method)) + "," + fmt_number(p.result.statistic, 6) +
         "," + (p.result.df ? fmt_number(*p.result.df, 6) : std::string()) + "," + fmt_number(p.result.p_value, 6) +
         "," + (p.result.significant ? "1" : "0") + "\n";
  }
  return s;
}

inline std::string shapiro_csv(const Comparison& c) {
  std::string s = "source,n,w,p_value,significant,error\n";
  for (const auto& g : c.groups) {
    s += g.name + "," + std::to_string(g.values.size()) + ",";
    if (g.shapiro_wilk) {
      s += fmt_number(g.shapiro_wilk->statistic, 6) + "," + fmt_number(g.shapiro_wilk->p_value, 6) + "," +
           (g.shapiro_wilk->significant ? "1" : "0") + ",";
    } else {
      s += ",,,";
      if (g.shapiro_error) s += "\"" + *g.shapiro_error + "\"";
    }
    s += "\n";
  }
  return s;
}

}  // namespace detail

inline std::string report_to_json_text(const BatteryReport& r) { return json(r).dump(2) + "\n"; }

// Writes report.json and/or per-test CSV files into `dir`. Summary tables use 6
// significant digits; the *_boxplot.csv files use 17 so they round-trip exactly.
inline std::vector<std::filesystem::path> emit_report(const BatteryReport& r, const std::filesystem::path& dir,
                                                      ReportFormat format = ReportFormat::both) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& name, const std::string& text) {
    detail::write_text(dir / name, text);
    written.push_back(dir / name);
  };
  if (format != ReportFormat::csv) put("report.json", report_to_json_text(r));
  if (format != ReportFormat::json) {
    for (const auto& t : r.tests) {
      const std::string base(to_string(t.test));
      put(base + "_summary.csv", detail::summary_csv(t.comparison, 6));
      put(base + "_boxplot.csv", detail::summary_csv(t.comparison, 17));
      put(base + "_ks.csv", detail::pairs_csv(t.comparison.ks));
      put(base + "_shapiro.csv", detail::shapiro_csv(t.comparison));
      if (t.comparison.welch) put(base + "_welch.csv", detail::pairs_csv(*t.comparison.welch));
    }
  }
  return written;
}

}  // namespace aitrand
