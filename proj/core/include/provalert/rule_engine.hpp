#pragma once

#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "provalert/graph_analytics.hpp"
#include "provalert/provenance_graph.hpp"

namespace provalert {

enum class RiskLevel { High, Medium, Low };

/// Risk score multipliers per confidence level. Defaults follow the
/// three-level scheme H/M/L = 2.5/2.0/1.5 and are tunable via config.
struct RiskScoreTable {
  double high = 2.5;
  double medium = 2.0;
  double low = 1.5;

  double value(RiskLevel l) const {
    switch (l) {
      case RiskLevel::High: return high;
      case RiskLevel::Medium: return medium;
      default: return low;
    }
  }
};

/// One detection rule: regexes over a node's image, its command-lines,
/// and its parents' images. At least one pattern must be present.
struct Rule {
  std::string rule_id;
  RiskLevel level = RiskLevel::Low;
  std::optional<std::string> image_pattern;
  std::optional<std::string> cmdline_pattern;
  std::optional<std::string> parent_image_pattern;
  std::string description;

  // compiled forms (ECMAScript dialect)
  std::optional<std::regex> image_re;
  std::optional<std::regex> cmdline_re;
  std::optional<std::regex> parent_image_re;
};

struct RuleSet {
  std::vector<Rule> rules;
};

struct RuleMatch {
  std::string rule_id;
  NodeId node_id;
  std::optional<EdgeKey> matched_edge;  // (parent, node) or nullopt
  RiskLevel level = RiskLevel::Low;
  double rs = 1.5;
  std::string matched_text;
  std::string description;
};

class RuleLoadError : public std::runtime_error {
 public:
  enum class Kind { FileNotFound, InvalidPattern, DuplicateRuleId };
  RuleLoadError(Kind k, const std::string& what)
      : std::runtime_error(what), kind_(k) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Loads a YAML rule file (one document per rule). Throws RuleLoadError
/// naming the offending rule on bad regex or duplicate ids.
RuleSet load_rules(const std::string& path,
                   const RiskScoreTable& table = RiskScoreTable{});

/// Same loader over an in-memory YAML string (test fixtures).
RuleSet parse_rules(const std::string& yaml_text,
                    const RiskScoreTable& table = RiskScoreTable{});

/// Matches every rule against every node. A rule hits a node iff all
/// of its non-null patterns match (image vs node image, cmdline vs any
/// stored command-line, parent_image vs any parent's image). Output is
/// ordered by (node_id, rule_id, parent).
std::vector<RuleMatch> match_graph(const ProvenanceGraph& g, const RuleSet& rules,
                                   const RiskScoreTable& table = RiskScoreTable{});

/// ReEW = max(RS over matches on the edge) * EW; unmatched edges keep
/// reew = ew. Reads only ew, so re-running is idempotent.
EdgeWeights refine_edge_weights(const EdgeWeights& weights,
                                const std::vector<RuleMatch>& matches);

}  // namespace provalert
