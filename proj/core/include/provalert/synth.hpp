#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "provalert/audit_event.hpp"
#include "provalert/pipeline.hpp"
#include "provalert/provenance_graph.hpp"

namespace provalert {

enum class ScenarioKind {
  TurlaChain,
  HexTransform,
  Base64Backdoor,
  LogDeletion,
  TimestampForgery,
  PrivEscalation,
};

ScenarioKind scenario_kind_from_name(const std::string& name);  // throws
std::string scenario_kind_name(ScenarioKind k);
std::vector<ScenarioKind> all_scenario_kinds();

/// Seeded synthetic audit stream: benign background trees plus one
/// injected attack chain with ground-truth labels.
struct Scenario {
  std::string name;
  ScenarioKind kind = ScenarioKind::TurlaChain;
  std::uint64_t seed = 0;
  std::vector<AuditEvent> events;
  std::set<NodeId> attack_nodes;
  std::set<std::pair<NodeId, NodeId>> attack_edges;
  std::vector<std::string> markers;  // kind-specific command-lines
};

class UnknownKind : public std::runtime_error {
 public:
  explicit UnknownKind(const std::string& what) : std::runtime_error(what) {}
};

/// Deterministic per (kind, seed, scale). scale >= 10 is the approximate
/// total process-node count; the benign background fills everything the
/// attack chain does not use.
Scenario generate_scenario(ScenarioKind kind, std::uint64_t seed, int scale);

std::string scenario_truth_json(const Scenario& s);
Scenario scenario_truth_from_json(const std::string& text);  // truth only

enum class MetricLevel { Node, InfoPath, Ttp };

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  MetricLevel level = MetricLevel::Node;
};

Metrics score_alarms(const std::vector<SnapshotAlarm>& alarms,
                     const Scenario& truth, MetricLevel level);

/// Same scoring over a rendered JSON report (CLI path).
Metrics score_report_json(const std::string& report_json,
                          const Scenario& truth, MetricLevel level);

}  // namespace provalert
