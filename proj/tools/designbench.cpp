// designbench: classify treatment-assignment designs exactly and stress them
// with replicated simulation.

#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "designbench/designbench.hpp"
#include "scenarios.hpp"

namespace {

using designbench::Json;

// Reads and parses a JSON file, reporting parse errors with line:column
// anchors instead of nlohmann's byte offsets.
Json parse_json_file(const std::string& path) {
  std::ifstream stream(path, std::ios::binary);
  if (!stream) {
    throw std::invalid_argument(path + ": cannot open file");
  }
  std::ostringstream buffer;
  buffer << stream.rdbuf();
  const std::string text = buffer.str();
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw std::invalid_argument(path + ":" + std::to_string(line) + ":" +
                                std::to_string(column) + ": " + e.what());
  }
}

Json outcome_to_json(const designbench::cli::ScenarioOutcome& outcome) {
  Json doc;
  doc["scenario"] = outcome.scenario;
  doc["config"] = {{"n", outcome.n},
                   {"replications", outcome.replications},
                   {"master_seed", outcome.master_seed},
                   {"sampling", outcome.sampling}};
  doc["reports"] = Json::array();
  for (const auto& [label, report] : outcome.reports) {
    doc["reports"].push_back({{"label", label}, {"report", designbench::to_json(report)}});
  }
  doc["mc_results"] = Json::array();
  for (const auto& [label, result] : outcome.results) {
    doc["mc_results"].push_back({{"label", label}, {"result", designbench::to_json(result)}});
  }
  doc["failed_runs"] = Json::array();
  for (const auto& failed : outcome.failed_runs) {
    doc["failed_runs"].push_back(
        {{"label", failed.label},
         {"estimator_id", std::string(designbench::estimator_name(failed.estimator))},
         {"error", failed.error}});
  }
  doc["claims"] = Json::array();
  for (const auto& claim : outcome.claims) {
    doc["claims"].push_back({{"name", claim.name}, {"detail", claim.detail},
                             {"pass", claim.pass}});
  }
  return doc;
}

std::string verdict_text(const designbench::TriState& state) {
  switch (state.verdict) {
    case designbench::Verdict::kTrue: return "true";
    case designbench::Verdict::kFalse: return "false";
    case designbench::Verdict::kUndefined: return "undefined (" + state.reason + ")";
  }
  return "?";
}

std::string reported_text(const designbench::ReportedValue& reported) {
  if (reported.value.has_value()) return designbench::format_double(*reported.value);
  return "undefined (" + reported.reason + ")";
}

void render_table(const designbench::cli::ScenarioOutcome& outcome, std::ostream& out) {
  out << "scenario " << outcome.scenario << "  (n=" << outcome.n
      << ", replications=" << outcome.replications << ", seed=" << outcome.master_seed
      << ", sampling=" << outcome.sampling << ")\n";
  for (const auto& [label, report] : outcome.reports) {
    out << "\ndesign report [" << label << "]\n";
    out << "  randomized                    " << (report.randomized ? "true" : "false")
        << "  (gamma=" << designbench::format_double(report.gamma) << ")\n";
    out << "  positivity                    " << (report.positivity ? "true" : "false")
        << "\n";
    out << "  overlap                       " << (report.overlap ? "true" : "false") << "\n";
    out << "  unconditionally unconfounded  "
        << verdict_text(report.unconditionally_unconfounded) << "\n";
    out << "  conditionally unconfounded    "
        << verdict_text(report.conditionally_unconfounded) << "\n";
    out << "  ate                           " << designbench::format_double(report.ate)
        << "\n";
    out << "  propensity by x               ";
    for (const auto& [x, score] : report.propensity_by_x) {
      out << "x=" << x << ": " << designbench::format_double(score) << "  ";
    }
    out << "\n";
    out << "  unconditional propensity      "
        << designbench::format_double(report.unconditional_propensity) << "\n";
    out << "  dim limit                     " << reported_text(report.dim_limit) << "\n";
    out << "  ht normalized variance        " << reported_text(report.ht_normalized_variance)
        << "\n";
  }
  if (!outcome.results.empty()) {
    out << "\nmonte carlo\n";
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"label", "estimator", "n", "reps", "failures", "mean", "variance",
                    "n*variance", "se(mean)"});
    for (const auto& [label, result] : outcome.results) {
      rows.push_back({label, std::string(designbench::estimator_name(result.estimator)),
                      std::to_string(result.sample_size),
                      std::to_string(result.replications), std::to_string(result.failures),
                      designbench::format_double(result.mean),
                      designbench::format_double(result.variance),
                      designbench::format_double(result.normalized_variance),
                      designbench::format_double(result.std_error_of_mean)});
    }
    std::vector<std::size_t> widths(rows.front().size(), 0);
    for (const auto& row : rows) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        widths[c] = std::max(widths[c], row[c].size());
      }
    }
    for (const auto& row : rows) {
      out << " ";
      for (std::size_t c = 0; c < row.size(); ++c) {
        out << " " << row[c] << std::string(widths[c] - row[c].size(), ' ');
      }
      out << "\n";
    }
  }
  for (const auto& failed : outcome.failed_runs) {
    out << "  " << designbench::estimator_name(failed.estimator) << " [" << failed.label
        << "]: " << failed.error << "\n";
  }
  if (!outcome.claims.empty()) {
    out << "\nclaims\n";
    int confirmed = 0;
    for (const auto& claim : outcome.claims) {
      out << "  " << claim.name << ": " << (claim.pass ? "CONFIRMED" : "FAILED") << "  ("
          << claim.detail << ")\n";
      confirmed += claim.pass ? 1 : 0;
    }
    out << confirmed << "/" << outcome.claims.size() << " claims confirmed\n";
  }
}

void render_csv(const designbench::cli::ScenarioOutcome& outcome, std::ostream& out) {
  out << designbench::mc_result_csv_header() << "\n";
  for (const auto& [label, result] : outcome.results) {
    out << designbench::mc_result_csv_row(result) << "\n";
  }
  // Keep stdout machine-readable; claims go to stderr.
  for (const auto& claim : outcome.claims) {
    std::cerr << claim.name << ": " << (claim.pass ? "CONFIRMED" : "FAILED") << "\n";
  }
}

enum class Format { kAuto, kTable, kJson, kCsv };

void emit(const designbench::cli::ScenarioOutcome& outcome, Format format) {
  if (format == Format::kAuto) {
    format = isatty(fileno(stdout)) ? Format::kTable : Format::kJson;
  }
  switch (format) {
    case Format::kTable: render_table(outcome, std::cout); break;
    case Format::kJson: std::cout << outcome_to_json(outcome).dump(2) << "\n"; break;
    case Format::kCsv: render_csv(outcome, std::cout); break;
    case Format::kAuto: break;
  }
}

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitDesign = 2;
constexpr int kExitClaims = 3;

int run_command(const designbench::cli::ScenarioConfig& cfg, Format format) {
  std::optional<designbench::PopulationSpec> population;
  std::optional<designbench::Mechanism> mechanism;
  if (cfg.scenario == "custom") {
    // File parsing and validation are configuration-stage failures.
    try {
      population = designbench::population_from_json(parse_json_file(cfg.population_file));
      mechanism = designbench::mechanism_from_json(parse_json_file(cfg.mechanism_file));
    } catch (const std::exception& e) {
      std::cerr << "designbench: " << e.what() << "\n";
      return kExitConfig;
    }
  }

  designbench::cli::ScenarioOutcome outcome;
  try {
    outcome = cfg.scenario == "custom"
                  ? designbench::cli::run_scenario(cfg, *population, *mechanism)
                  : designbench::cli::run_scenario(cfg);
  } catch (const std::exception& e) {
    std::cerr << "designbench: " << e.what() << "\n";
    return kExitDesign;
  }
  emit(outcome, format);
  return outcome.all_claims_pass() ? kExitOk : kExitClaims;
}

int classify_command(const std::string& population_file, const std::string& mechanism_file) {
  try {
    const auto population =
        designbench::population_from_json(parse_json_file(population_file));
    const auto mechanism = designbench::mechanism_from_json(parse_json_file(mechanism_file));
    const auto report = designbench::build_report(population, mechanism);
    std::cout << designbench::to_json(report).dump(2) << "\n";
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "designbench: " << e.what() << "\n";
    return kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact classification and Monte Carlo stress tests for "
               "treatment-assignment designs"};
  app.require_subcommand(1);

  designbench::cli::ScenarioConfig cfg;
  std::string estimators_text;
  std::string sampling_text;
  std::string format_text;

  CLI::App* run = app.add_subcommand("run", "run a built-in or custom scenario");
  run->add_option("--scenario", cfg.scenario, "one of the built-in scenarios, or \"custom\"")
      ->required()
      ->check(CLI::IsMember(designbench::cli::scenario_names()));
  run->add_option("--population", cfg.population_file,
                  "population JSON file (custom scenario)");
  run->add_option("--mechanism", cfg.mechanism_file, "mechanism JSON file (custom scenario)");
  run->add_option("--n", cfg.n, "sample size per replication")->check(CLI::Range(2, 100000000));
  run->add_option("--reps", cfg.replications, "number of replications")
      ->check(CLI::Range(static_cast<std::int64_t>(2), static_cast<std::int64_t>(100000000)));
  run->add_option("--seed", cfg.master_seed, "master seed for the replication streams");
  run->add_option("--estimators", estimators_text,
                  "comma-separated subset of dim,ht,ipw_x,hajek");
  run->add_option("--sampling", sampling_text, "iid (default) or fixed_counts")
      ->check(CLI::IsMember({"iid", "fixed_counts"}));
  run->add_option("--format", format_text, "table, json or csv (default: table on a "
                  "terminal, json otherwise)")
      ->check(CLI::IsMember({"table", "json", "csv"}));

  std::string classify_population, classify_mechanism;
  CLI::App* classify = app.add_subcommand(
      "classify", "print the exact design report for a population/mechanism pair");
  classify->add_option("--population", classify_population, "population JSON file")
      ->required();
  classify->add_option("--mechanism", classify_mechanism, "mechanism JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (classify->parsed()) {
    return classify_command(classify_population, classify_mechanism);
  }

  // run subcommand
  if (cfg.scenario == "custom") {
    if (cfg.population_file.empty() || cfg.mechanism_file.empty()) {
      std::cerr << "designbench: the custom scenario requires --population and --mechanism\n";
      return kExitConfig;
    }
  } else if (!cfg.population_file.empty() || !cfg.mechanism_file.empty()) {
    std::cerr << "designbench: --population/--mechanism are only valid with "
                 "--scenario custom\n";
    return kExitConfig;
  }
  if (!estimators_text.empty()) {
    std::stringstream stream(estimators_text);
    std::string token;
    while (std::getline(stream, token, ',')) {
      const auto id = designbench::parse_estimator(token);
      if (!id) {
        std::cerr << "designbench: unknown estimator \"" << token << "\"\n";
        return kExitConfig;
      }
      cfg.estimators.push_back(*id);
    }
  }
  if (sampling_text == "fixed_counts") {
    cfg.sampling = designbench::cli::ScenarioConfig::Sampling::kFixedCounts;
  } else if (sampling_text == "iid") {
    cfg.sampling = designbench::cli::ScenarioConfig::Sampling::kIid;
  }
  Format format = Format::kAuto;
  if (format_text == "table") format = Format::kTable;
  if (format_text == "json") format = Format::kJson;
  if (format_text == "csv") format = Format::kCsv;

  return run_command(cfg, format);
}
