// aitrand command-line front end.
//
//   aitrand analyze --config cfg.json --out DIR [--jobs N] [--format json|csv|both]
//   aitrand gen --kind prng|weak|champernowne|biased [--seed S] [--p P] --bits N --out FILE [--vn-normalize]
//   aitrand test <book-stack|borel|walk|entropy|ss> --input FILE [test flags]
//   aitrand carmichael --bound B --out FILE
//
// Exit codes: 0 success, 1 configuration or usage error, 2 data error.

#include <cstdlib>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "aitrand/battery.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitData = 2;

unsigned default_jobs() {
  if (const char* env = std::getenv("AITRAND_JOBS")) {
    try {
      const unsigned long v = std::stoul(env);
      if (v > 0) return static_cast<unsigned>(v);
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring invalid AITRAND_JOBS='" << env << "'\n";
  }
  return 1;
}

struct AnalyzeArgs {
  std::string config;
  std::string out;
  unsigned jobs = 1;
  std::string format = "both";
};

struct GenArgs {
  std::string kind;
  std::uint64_t seed = 0;
  double p = 0.5;
  std::uint64_t bits = 0;
  std::string out;
  bool vn = false;
};

struct TestArgs {
  std::string name;
  std::string input;
  std::optional<std::uint64_t> bits;
  bool lsb_first = false;
  std::optional<unsigned> m_limit;
  std::uint64_t window = 4096;
  std::uint64_t t = 4096;
  std::uint64_t bound = aitrand::kDefaultCarmichaelBound;
  std::string carmichael_file;
};

struct CarmichaelArgs {
  std::uint64_t bound = 0;
  std::string out;
};

int run_analyze(const AnalyzeArgs& a) {
  aitrand::BatteryConfig cfg = aitrand::load_config(a.config);
  cfg.output_dir = a.out;
  cfg.jobs = a.jobs;
  const aitrand::ReportFormat format = a.format == "json"  ? aitrand::ReportFormat::json
                                       : a.format == "csv" ? aitrand::ReportFormat::csv
                                                           : aitrand::ReportFormat::both;
  const aitrand::BatteryReport report = aitrand::run_battery(cfg);
  const auto files = aitrand::emit_report(report, a.out, format);
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << "\n";
  for (const auto& t : report.tests) {
    for (const auto& w : t.comparison.warnings) std::cerr << "warning: " << aitrand::to_string(t.test) << ": " << w << "\n";
  }
  std::cout << "wrote " << files.size() << " files to " << a.out << "\n";
  return kExitOk;
}

int run_gen(const GenArgs& a) {
  aitrand::SourceDescriptor d;
  d.kind = aitrand::source_kind_from_string(a.kind);
  if (d.kind == aitrand::SourceKind::file) throw aitrand::ConfigError("gen cannot produce kind 'file'");
  d.seed = a.seed;
  d.bias_p = a.p;
  d.bit_len = a.bits;
  d.vn_normalize = a.vn;
  const aitrand::BitString x = aitrand::materialize(d);
  aitrand::write_raw_file(a.out, x);
  std::cout << nlohmann::json{{"out", a.out}, {"bit_len", x.size()}, {"bytes", x.bytes().size()},
                              {"source", d}, {"sha256", aitrand::sha256_hex(x.bytes())}}
                   .dump()
            << "\n";
  return kExitOk;
}

int run_test(const TestArgs& a) {
  const aitrand::BitString x = aitrand::load_raw_file(
      a.input, a.bits, a.lsb_first ? aitrand::BitOrder::lsb_first : aitrand::BitOrder::msb_first);
  nlohmann::json out;
  std::string test_name;
  if (a.name == "book-stack") {
    test_name = "book_stack";
    out = aitrand::book_stack_metric(x);
  } else if (a.name == "borel") {
    test_name = "borel";
    out = aitrand::borel_normality(x, a.m_limit);
  } else if (a.name == "walk") {
    test_name = "walk";
    out = aitrand::random_walk_range(x);
  } else if (a.name == "entropy") {
    test_name = "entropy";
    out = aitrand::entropy_sliding(x, a.window, a.t);
  } else {
    test_name = "ss_carmichael";
    const aitrand::CarmichaelSet cs = a.carmichael_file.empty() ? aitrand::enumerate_carmichael(a.bound)
                                                                  : aitrand::load_carmichael_file(a.carmichael_file);
    out = aitrand::ss_carmichael_metric(x, cs);
    out["carmichael_count"] = cs.numbers.size();
  }
  out["test"] = test_name;
  out["input"] = a.input;
  out["bit_len"] = x.size();
  std::cout << out.dump() << "\n";
  return kExitOk;
}

int run_carmichael(const CarmichaelArgs& a) {
  const aitrand::CarmichaelSet cs = aitrand::enumerate_carmichael(a.bound);
  aitrand::write_carmichael_file(a.out, cs);
  std::cout << nlohmann::json{{"out", a.out}, {"bound", cs.bound}, {"count", cs.numbers.size()}}.dump() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Randomness test battery inspired by algorithmic information theory"};
  app.require_subcommand(1);

  AnalyzeArgs analyze;
  analyze.jobs = default_jobs();
  auto* analyze_cmd = app.add_subcommand("analyze", "Run the battery described by a JSON config");
  analyze_cmd->add_option("--config", analyze.config, "Battery config (JSON)")->required()->check(CLI::ExistingFile);
  analyze_cmd->add_option("--out", analyze.out, "Output directory")->required();
  analyze_cmd->add_option("--jobs", analyze.jobs, "Concurrent strings (default: $AITRAND_JOBS or 1)")
      ->check(CLI::PositiveNumber);
  analyze_cmd->add_option("--format", analyze.format, "Report formats")
      ->check(CLI::IsMember({"json", "csv", "both"}));

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen", "Write a generated bit string as a raw MSB-first file");
  gen_cmd->add_option("--kind", gen.kind, "Generator")
      ->required()
      ->check(CLI::IsMember({"prng", "weak", "weak_prng", "champernowne", "biased"}));
  gen_cmd->add_option("--seed", gen.seed, "Generator seed");
  gen_cmd->add_option("--p", gen.p, "Probability of a 1 bit (biased)");
  gen_cmd->add_option("--bits", gen.bits, "Number of bits to generate")->required();
  gen_cmd->add_option("--out", gen.out, "Output file")->required();
  gen_cmd->add_flag("--vn-normalize", gen.vn, "Apply von Neumann normalization");

  TestArgs test;
  auto* test_cmd = app.add_subcommand("test", "Run one test on a raw bit file and print a JSON record");
  test_cmd->add_option("name", test.name, "Test name")
      ->required()
      ->check(CLI::IsMember({"book-stack", "borel", "walk", "entropy", "ss"}));
  test_cmd->add_option("--input", test.input, "Raw bit file")->required();
  test_cmd->add_option("--bits", test.bits, "Use only the first N bits");
  test_cmd->add_flag("--lsb-first", test.lsb_first, "Read bits LSB-first within each byte");
  test_cmd->add_option("--m-limit", test.m_limit, "Borel: largest block length to consider");
  test_cmd->add_option("--window", test.window, "Entropy: window size in bits");
  test_cmd->add_option("--t", test.t, "Entropy: number of estimation positions");
  test_cmd->add_option("--bound", test.bound, "ss: enumerate Carmichael numbers up to this bound");
  test_cmd->add_option("--carmichael-file", test.carmichael_file, "ss: load Carmichael numbers from a file");

  CarmichaelArgs carm;
  auto* carm_cmd = app.add_subcommand("carmichael", "Enumerate Carmichael numbers up to a bound");
  carm_cmd->add_option("--bound", carm.bound, "Upper bound (inclusive)")->required();
  carm_cmd->add_option("--out", carm.out, "Output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*analyze_cmd) return run_analyze(analyze);
    if (*gen_cmd) return run_gen(gen);
    if (*test_cmd) return run_test(test);
    if (*carm_cmd) return run_carmichael(carm);
  } catch (const aitrand::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const aitrand::ParameterError& e) {
    std::cerr << "parameter error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const aitrand::Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitConfig;
}
