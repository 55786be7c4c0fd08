#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "provalert/anomaly_ensemble.hpp"
#include "provalert/audit_event.hpp"
#include "provalert/infopath.hpp"
#include "provalert/rule_engine.hpp"

namespace provalert {

struct RunConfig {
  std::string rules_path;
  double contamination = 0.5;
  RiskScoreTable risk_scores;  // H/M/L = 2.5/2.0/1.5
  int neighbors = 300;         // NN
  int vector_size = 60;        // VS
  std::uint64_t seed = 0;
  int batch_size = 5000;
  std::string report_path;
  std::optional<std::string> llm_endpoint;
};

/// One ranked, analyst-facing alarm: an anomalous InfoPath with its
/// command-lines, rule hits, and ensemble verdict.
struct SnapshotAlarm {
  int rank = 0;  // 1..5
  std::string host;
  InfoPath path;
  std::vector<std::string> images;                  // per node
  std::vector<std::vector<std::string>> cmdlines;   // per node
  std::vector<std::vector<std::string>> endpoints;  // per node
  std::vector<RuleMatch> rule_hits;
  int votes = 0;
  std::vector<std::string> explanations;  // one per nonempty command-line
};

struct PipelineResult {
  std::vector<SnapshotAlarm> alarms;    // Top-5 snapshot section
  std::vector<SnapshotAlarm> appendix;  // anomalous beyond the top 5
  nlohmann::json manifest;
};

/// Full run: ingest -> graph -> centralities -> edge weights -> rules ->
/// communities -> InfoPath search -> embedding selection -> ensemble ->
/// alarms. Hosts are analyzed independently; alarms merge globally.
PipelineResult run_pipeline(const std::vector<AuditEvent>& events,
                            const RuleSet& rules, const RunConfig& cfg);

struct ReportDocument {
  std::string json_text;    // machine-readable, schema in README
  std::string digest_text;  // human-readable plain text
};

/// Deterministic rendering: identical inputs give identical bytes.
ReportDocument render_report(const PipelineResult& result);

class ReportWriteFailure : public std::runtime_error {
 public:
  explicit ReportWriteFailure(const std::string& what)
      : std::runtime_error(what) {}
};

/// Writes <path> (JSON) and <path>.txt (digest).
void write_report(const ReportDocument& doc, const std::string& path);

/// Optional annotation hook: posts each alarm's chain to an external
/// text-completion endpoint and swaps in the returned explanation. Any
/// failure falls back to the deterministic template; the alarm set
/// itself never changes. Returns warnings (empty on full success).
std::vector<std::string> llm_recommend(std::vector<SnapshotAlarm>& alarms,
                                       const std::string& endpoint);

}  // namespace provalert
