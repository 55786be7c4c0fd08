#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "provalert/pipeline.hpp"
#include "provalert/synth.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInput = 3;

std::vector<std::string> read_lines(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

int cmd_analyze(const std::string& events_path, const std::string& rules_path,
                const provalert::RunConfig& cfg) {
  provalert::RuleSet rules;
  try {
    rules = provalert::load_rules(rules_path, cfg.risk_scores);
  } catch (const provalert::RuleLoadError& e) {
    std::cerr << "rule error: " << e.what() << "\n";
    return kExitConfig;
  }

  std::vector<std::string> lines;
  if (events_path == "-") {
    lines = read_lines(std::cin);
  } else {
    std::ifstream in(events_path);
    if (!in) {
      std::cerr << "cannot open events file: " << events_path << "\n";
      return kExitInput;
    }
    lines = read_lines(in);
  }

  provalert::NormalizeResult normalized = provalert::normalize_stream(lines);
  provalert::PipelineResult result =
      provalert::run_pipeline(normalized.events, rules, cfg);
  result.manifest["lines_skipped"] = normalized.skipped;

  if (cfg.llm_endpoint) {
    auto warnings = provalert::llm_recommend(result.alarms, *cfg.llm_endpoint);
    for (const auto& w : warnings) result.manifest["warnings"].push_back(w);
  }

  provalert::ReportDocument doc = provalert::render_report(result);
  if (!cfg.report_path.empty()) {
    try {
      provalert::write_report(doc, cfg.report_path);
    } catch (const provalert::ReportWriteFailure& e) {
      std::cerr << e.what() << "\n";
      return kExitInput;
    }
  }
  std::cout << doc.digest_text;
  return kExitOk;
}

int cmd_synth(const std::string& kind, std::uint64_t seed, int scale,
              const std::string& out_path, const std::string& truth_path) {
  provalert::Scenario s;
  try {
    s = provalert::generate_scenario(provalert::scenario_kind_from_name(kind),
                                     seed, scale);
  } catch (const provalert::UnknownKind& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  }

  std::ofstream out(out_path);
  if (!out) {
    std::cerr << "cannot write events: " << out_path << "\n";
    return kExitInput;
  }
  for (const auto& e : s.events) out << provalert::render_event_line(e) << "\n";

  if (!truth_path.empty()) {
    std::ofstream truth(truth_path);
    if (!truth) {
      std::cerr << "cannot write truth: " << truth_path << "\n";
      return kExitInput;
    }
    truth << provalert::scenario_truth_json(s);
  }
  std::cout << "wrote " << s.events.size() << " events ("
            << s.attack_nodes.size() << " attack nodes)\n";
  return kExitOk;
}

int cmd_score(const std::string& alarms_path, const std::string& truth_path,
              const std::string& level_name) {
  provalert::MetricLevel level;
  if (level_name == "node") {
    level = provalert::MetricLevel::Node;
  } else if (level_name == "path") {
    level = provalert::MetricLevel::InfoPath;
  } else if (level_name == "ttp") {
    level = provalert::MetricLevel::Ttp;
  } else {
    std::cerr << "unknown level: " << level_name << "\n";
    return kExitConfig;
  }

  std::ifstream report_in(alarms_path), truth_in(truth_path);
  if (!report_in || !truth_in) {
    std::cerr << "cannot open report or truth file\n";
    return kExitInput;
  }
  std::ostringstream report_buf, truth_buf;
  report_buf << report_in.rdbuf();
  truth_buf << truth_in.rdbuf();

  try {
    provalert::Scenario truth =
        provalert::scenario_truth_from_json(truth_buf.str());
    provalert::Metrics m =
        provalert::score_report_json(report_buf.str(), truth, level);
    std::cout << "level=" << level_name << " precision=" << m.precision
              << " recall=" << m.recall << " f1=" << m.f1 << "\n";
  } catch (const std::exception& e) {
    std::cerr << "score failed: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"command-line focused attack provenance analysis"};
  app.require_subcommand(1);

  // analyze
  auto* analyze = app.add_subcommand("analyze", "run the detection pipeline");
  std::string events_path, rules_path;
  provalert::RunConfig cfg;
  analyze->add_option("--events", events_path, "JSON-lines event file or '-'")
      ->required()
      ->envname("PROVALERT_EVENTS");
  analyze->add_option("--rules", rules_path, "YAML rule file")
      ->required()
      ->envname("PROVALERT_RULES");
  analyze->add_option("--contamination", cfg.contamination)
      ->check(CLI::Range(1e-9, 0.5))
      ->envname("PROVALERT_CONTAMINATION");
  analyze->add_option("--rs-high", cfg.risk_scores.high)
      ->envname("PROVALERT_RS_HIGH");
  analyze->add_option("--rs-medium", cfg.risk_scores.medium)
      ->envname("PROVALERT_RS_MEDIUM");
  analyze->add_option("--rs-low", cfg.risk_scores.low)
      ->envname("PROVALERT_RS_LOW");
  analyze->add_option("--nn", cfg.neighbors)->check(CLI::PositiveNumber)
      ->envname("PROVALERT_NN");
  analyze->add_option("--vs", cfg.vector_size)->check(CLI::Range(8, 4096))
      ->envname("PROVALERT_VS");
  analyze->add_option("--seed", cfg.seed)->envname("PROVALERT_SEED");
  analyze->add_option("--batch-size", cfg.batch_size)
      ->check(CLI::PositiveNumber)
      ->envname("PROVALERT_BATCH_SIZE");
  analyze->add_option("--report", cfg.report_path)
      ->envname("PROVALERT_REPORT");
  std::string llm_endpoint;
  analyze->add_option("--llm-endpoint", llm_endpoint)
      ->envname("PROVALERT_LLM_ENDPOINT");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a labeled scenario");
  std::string kind = "turla-chain", out_path = "events.jsonl", truth_path;
  std::uint64_t seed = 1;
  int scale = 100;
  synth->add_option("--kind", kind,
                    "turla-chain|hex-transform|base64-backdoor|log-deletion|"
                    "timestamp-forgery|priv-escalation");
  synth->add_option("--seed", seed);
  synth->add_option("--scale", scale)->check(CLI::Range(10, 1000000));
  synth->add_option("--out", out_path);
  synth->add_option("--truth", truth_path);

  // score
  auto* score = app.add_subcommand("score", "score a report against truth");
  std::string alarms_path, score_truth_path, level = "node";
  score->add_option("--alarms", alarms_path, "report JSON")->required();
  score->add_option("--truth", score_truth_path)->required();
  score->add_option("--level", level, "node|path|ttp");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  if (analyze->parsed()) {
    if (!llm_endpoint.empty()) cfg.llm_endpoint = llm_endpoint;
    return cmd_analyze(events_path, rules_path, cfg);
  }
  if (synth->parsed()) return cmd_synth(kind, seed, scale, out_path, truth_path);
  return cmd_score(alarms_path, score_truth_path, level);
}
