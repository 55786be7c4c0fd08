#include "provalert/rule_engine.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <yaml-cpp/yaml.h>

namespace provalert {

namespace {

RiskLevel parse_level(const std::string& s, const std::string& rule_id) {
  if (s == "high" || s == "High" || s == "H") return RiskLevel::High;
  if (s == "medium" || s == "Medium" || s == "M") return RiskLevel::Medium;
  if (s == "low" || s == "Low" || s == "L") return RiskLevel::Low;
  throw RuleLoadError(RuleLoadError::Kind::InvalidPattern,
                      "rule '" + rule_id + "': unknown level '" + s + "'");
}

std::optional<std::regex> compile(const std::optional<std::string>& pat,
                                  const std::string& rule_id) {
  if (!pat) return std::nullopt;
  try {
    return std::regex(*pat, std::regex::ECMAScript | std::regex::optimize);
  } catch (const std::regex_error& e) {
    throw RuleLoadError(RuleLoadError::Kind::InvalidPattern,
                        "rule '" + rule_id + "': bad regex: " + e.what());
  }
}

RuleSet load_from_documents(const std::vector<YAML::Node>& docs,
                            const RiskScoreTable& table) {
  (void)table;
  RuleSet rs;
  std::set<std::string> seen;
  for (const auto& doc : docs) {
    if (!doc.IsMap()) continue;
    Rule r;
    r.rule_id = doc["rule_id"].as<std::string>("");
    if (r.rule_id.empty()) {
      throw RuleLoadError(RuleLoadError::Kind::InvalidPattern,
                          "rule without rule_id");
    }
    if (!seen.insert(r.rule_id).second) {
      throw RuleLoadError(RuleLoadError::Kind::DuplicateRuleId,
                          "duplicate rule_id '" + r.rule_id + "'");
    }
    r.level = parse_level(doc["level"].as<std::string>("low"), r.rule_id);
    if (doc["image"]) r.image_pattern = doc["image"].as<std::string>();
    if (doc["cmdline"]) r.cmdline_pattern = doc["cmdline"].as<std::string>();
    if (doc["parent_image"])
      r.parent_image_pattern = doc["parent_image"].as<std::string>();
    r.description = doc["description"].as<std::string>("");

    if (!r.image_pattern && !r.cmdline_pattern && !r.parent_image_pattern) {
      throw RuleLoadError(RuleLoadError::Kind::InvalidPattern,
                          "rule '" + r.rule_id + "': all patterns null");
    }
    r.image_re = compile(r.image_pattern, r.rule_id);
    r.cmdline_re = compile(r.cmdline_pattern, r.rule_id);
    r.parent_image_re = compile(r.parent_image_pattern, r.rule_id);
    rs.rules.push_back(std::move(r));
  }
  return rs;
}

}  // namespace

RuleSet parse_rules(const std::string& yaml_text, const RiskScoreTable& table) {
  std::vector<YAML::Node> docs = YAML::LoadAll(yaml_text);
  return load_from_documents(docs, table);
}

RuleSet load_rules(const std::string& path, const RiskScoreTable& table) {
  std::ifstream in(path);
  if (!in) {
    throw RuleLoadError(RuleLoadError::Kind::FileNotFound,
                        "cannot open rule file: " + path);
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_rules(buf.str(), table);
}

std::vector<RuleMatch> match_graph(const ProvenanceGraph& g, const RuleSet& rules,
                                   const RiskScoreTable& table) {
  std::unordered_map<NodeId, std::vector<NodeId>> parents;
  for (const auto& e : g.edges) parents[e.child].push_back(e.parent);
  for (auto& [id, p] : parents) std::sort(p.begin(), p.end());

  std::vector<RuleMatch> out;
  for (const auto& [node_id, node] : g.nodes) {  // map order = node_id order
    for (const auto& rule : rules.rules) {
      if (rule.image_re && !std::regex_search(node.image, *rule.image_re))
        continue;

      std::string matched_cmdline;
      if (rule.cmdline_re) {
        bool hit = false;
        for (const auto& c : node.cmdlines) {
          if (std::regex_search(c, *rule.cmdline_re)) {
            matched_cmdline = c;
            hit = true;
            break;
          }
        }
        if (!hit) continue;
      }

      const auto pit = parents.find(node_id);
      const std::vector<NodeId> no_parents;
      const std::vector<NodeId>& node_parents =
          pit == parents.end() ? no_parents : pit->second;

      std::vector<NodeId> matched_parents;
      if (rule.parent_image_re) {
        for (const auto& p : node_parents) {
          if (std::regex_search(g.nodes.at(p).image, *rule.parent_image_re))
            matched_parents.push_back(p);
        }
        if (matched_parents.empty()) continue;
      } else {
        matched_parents = node_parents;  // every incoming edge
      }

      RuleMatch base;
      base.rule_id = rule.rule_id;
      base.node_id = node_id;
      base.level = rule.level;
      base.rs = table.value(rule.level);
      base.matched_text = !matched_cmdline.empty() ? matched_cmdline : node.image;
      base.description = rule.description;

      if (matched_parents.empty()) {
        out.push_back(base);  // source node: no edge to record
      } else {
        for (const auto& p : matched_parents) {
          RuleMatch m = base;
          m.matched_edge = EdgeKey{p, node_id};
          out.push_back(std::move(m));
        }
      }
    }
  }

  std::sort(out.begin(), out.end(), [](const RuleMatch& a, const RuleMatch& b) {
    if (a.node_id != b.node_id) return a.node_id < b.node_id;
    if (a.rule_id != b.rule_id) return a.rule_id < b.rule_id;
    return a.matched_edge < b.matched_edge;
  });
  return out;
}

EdgeWeights refine_edge_weights(const EdgeWeights& weights,
                                const std::vector<RuleMatch>& matches) {
  EdgeWeights out = weights;
  out.reew = out.ew;
  std::map<EdgeKey, double> max_rs;
  for (const auto& m : matches) {
    if (!m.matched_edge) continue;
    auto it = out.ew.find(*m.matched_edge);
    if (it == out.ew.end()) continue;
    double& cur = max_rs[*m.matched_edge];
    cur = std::max(cur, m.rs);
  }
  for (const auto& [edge, rs] : max_rs) {
    out.reew[edge] = rs * out.ew.at(edge);
  }
  return out;
}

}  // namespace provalert
