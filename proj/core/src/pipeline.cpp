#include "provalert/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "httplib.h"
#include "provalert/cmdline_embedding.hpp"
#include "provalert/graph_analytics.hpp"
#include "provalert/provenance_graph.hpp"

namespace provalert {

namespace {

struct HostAnalysis {
  std::string host;
  ProvenanceGraph dag;
  EdgeWeights weights;
  CommunityPartition partition;
  std::vector<RuleMatch> matches;
  std::vector<InfoPath> paths;
};

struct PooledPath {
  std::size_t host_index = 0;
  InfoPath path;
};

HostAnalysis analyze_host(const std::string& host,
                          const std::vector<AuditEvent>& events,
                          const RuleSet& rules, const RunConfig& cfg,
                          nlohmann::json& host_manifest) {
  HostAnalysis a;
  a.host = host;

  GraphBuilder builder;
  std::size_t batches = 0;
  for (std::size_t off = 0; off < events.size();
       off += (std::size_t)cfg.batch_size) {
    std::size_t end = std::min(events.size(), off + (std::size_t)cfg.batch_size);
    for (std::size_t i = off; i < end; ++i) builder.add(events[i]);
    ++batches;
  }
  ProvenanceGraph built = std::move(builder).finish();
  host_manifest["events"] = events.size();
  host_manifest["batches"] = batches;
  host_manifest["nodes_built"] = built.nodes.size();
  host_manifest["edges_built"] = built.edges.size();

  ProvenanceGraph reduced = reduce_irrelevant(built);
  host_manifest["nodes_after_reduction"] = reduced.nodes.size();

  a.dag = to_dag(reduced);
  host_manifest["cycle_edges_removed"] = a.dag.removed_edges;

  PageRankResult pr = pagerank(a.dag);
  host_manifest["pagerank_converged"] = pr.converged;

  NodeScores scores;
  scores.pr = rareness_normalize(pr.raw);
  scores.cb = betweenness(a.dag);
  scores.pr_converged = pr.converged;

  a.weights = edge_weights(a.dag, scores);
  a.matches = match_graph(a.dag, rules, cfg.risk_scores);
  a.weights = refine_edge_weights(a.weights, a.matches);
  host_manifest["rule_matches"] = a.matches.size();

  a.partition = detect_communities(a.dag, a.weights, 1.0, cfg.seed);
  a.partition.cs = community_scores(a.dag, a.partition, a.weights);
  std::set<CommunityId> comms;
  for (const auto& [id, c] : a.partition.assignment) comms.insert(c);
  host_manifest["communities"] = comms.size();

  a.paths = search_infopaths(a.dag, a.weights, a.partition);
  host_manifest["infopaths"] = a.paths.size();
  return a;
}

std::string chain_text(const SnapshotAlarm& alarm) {
  std::ostringstream os;
  for (std::size_t i = 0; i < alarm.images.size(); ++i) {
    if (i) os << " -> ";
    os << alarm.images[i];
    if (!alarm.cmdlines[i].empty()) os << " (" << alarm.cmdlines[i].front() << ")";
  }
  if (!alarm.endpoints.empty() && !alarm.endpoints.back().empty()) {
    os << " -> " << alarm.endpoints.back().front();
  }
  return os.str();
}

const char* level_name(RiskLevel l) {
  switch (l) {
    case RiskLevel::High: return "High";
    case RiskLevel::Medium: return "Medium";
    default: return "Low";
  }
}

SnapshotAlarm make_alarm(int rank, const HostAnalysis& host, const InfoPath& p,
                         int votes) {
  SnapshotAlarm alarm;
  alarm.rank = rank;
  alarm.host = host.host;
  alarm.path = p;
  alarm.votes = votes;

  std::set<NodeId> on_path(p.nodes.begin(), p.nodes.end());
  std::set<std::pair<NodeId, NodeId>> path_edges;
  for (std::size_t i = 0; i + 1 < p.nodes.size(); ++i)
    path_edges.insert({p.nodes[i], p.nodes[i + 1]});

  for (const auto& id : p.nodes) {
    const ProcessNode& n = host.dag.nodes.at(id);
    alarm.images.push_back(n.image);
    alarm.cmdlines.push_back(n.cmdlines);
    alarm.endpoints.push_back(n.endpoints);
  }
  for (const auto& m : host.matches) {
    bool relevant = m.matched_edge ? path_edges.count(*m.matched_edge) > 0
                                   : on_path.count(m.node_id) > 0;
    if (relevant) alarm.rule_hits.push_back(m);
  }

  // Templated per-command-line explanation.
  for (std::size_t i = 0; i < p.nodes.size(); ++i) {
    for (const auto& c : alarm.cmdlines[i]) {
      std::string text = "command '" + c + "' on " + alarm.images[i];
      const RuleMatch* hit = nullptr;
      for (const auto& m : alarm.rule_hits) {
        if (m.node_id == p.nodes[i] && m.matched_text == c) {
          hit = &m;
          break;
        }
      }
      if (hit) {
        text += ": matched rule " + hit->rule_id + " [" +
                level_name(hit->level) + "] " + hit->description;
      } else {
        text += ": no known-rule hit; surfaced by " +
                std::to_string(votes) + "/6 detectors";
      }
      alarm.explanations.push_back(std::move(text));
    }
  }
  return alarm;
}

}  // namespace

PipelineResult run_pipeline(const std::vector<AuditEvent>& events,
                            const RuleSet& rules, const RunConfig& cfg) {
  PipelineResult result;
  nlohmann::json& manifest = result.manifest;
  manifest["config"] = {
      {"contamination", cfg.contamination},
      {"rs", {{"high", cfg.risk_scores.high},
              {"medium", cfg.risk_scores.medium},
              {"low", cfg.risk_scores.low}}},
      {"neighbors", cfg.neighbors},
      {"vector_size", cfg.vector_size},
      {"seed", cfg.seed},
      {"batch_size", cfg.batch_size},
  };
  manifest["events_total"] = events.size();
  manifest["warnings"] = nlohmann::json::array();

  std::vector<AuditEvent> normalized = normalize_events(events);
  std::map<std::string, std::vector<AuditEvent>> by_host;
  for (auto& e : normalized) by_host[e.host].push_back(e);

  std::vector<HostAnalysis> hosts;
  manifest["hosts"] = nlohmann::json::object();
  for (const auto& [host, host_events] : by_host) {
    nlohmann::json hm;
    hosts.push_back(analyze_host(host, host_events, rules, cfg, hm));
    if (!hosts.back().dag.nodes.empty() &&
        hm["pagerank_converged"] == false) {
      manifest["warnings"].push_back("pagerank did not converge on " + host);
    }
    manifest["hosts"][host] = std::move(hm);
  }

  // Merge candidate paths across hosts under the global ranking order.
  std::vector<PooledPath> pooled;
  for (std::size_t h = 0; h < hosts.size(); ++h) {
    for (const auto& p : hosts[h].paths) pooled.push_back({h, p});
  }
  std::sort(pooled.begin(), pooled.end(),
            [](const PooledPath& a, const PooledPath& b) {
              if (a.path.effective_length != b.path.effective_length)
                return a.path.effective_length < b.path.effective_length;
              if (a.path.diversity != b.path.diversity)
                return a.path.diversity > b.path.diversity;
              return a.path.nodes < b.path.nodes;
            });
  manifest["infopaths_total"] = pooled.size();

  // Embedding corpus: command-lines appearing on candidate paths.
  std::set<std::string> corpus_set;
  for (const auto& pp : pooled) {
    for (const auto& id : pp.path.nodes) {
      for (const auto& c : hosts[pp.host_index].dag.nodes.at(id).cmdlines) {
        if (!c.empty()) corpus_set.insert(c);
      }
    }
  }
  std::vector<std::string> corpus(corpus_set.begin(), corpus_set.end());

  std::map<std::string, std::vector<double>> vectors;
  if (corpus.size() >= 2) {
    EmbeddingConfig ecfg;
    ecfg.vector_size = cfg.vector_size;
    ecfg.seed = cfg.seed;
    EmbeddingSelection sel = select_embedding(corpus, ecfg);
    for (std::size_t i = 0; i < corpus.size(); ++i)
      vectors[corpus[i]] = sel.vectors[i];
    manifest["embedding"] = {
        {"chosen", strategy_name(sel.strategy)},
        {"separability", sel.report.per_strategy},
        {"corpus_size", corpus.size()},
    };
  } else {
    manifest["embedding"] = {{"chosen", nullptr}, {"corpus_size", corpus.size()}};
    manifest["warnings"].push_back(
        "fewer than 2 distinct on-path command-lines; embedding skipped");
  }

  // Ensemble voting over path feature rows.
  std::map<std::size_t, int> votes;
  std::set<std::size_t> anomalous;
  if (pooled.size() >= 2) {
    // Flat node lookup spanning all host graphs (node ids are
    // host-qualified, so no collisions).
    ProvenanceGraph merged;
    for (const auto& h : hosts) merged.nodes.insert(h.dag.nodes.begin(),
                                                    h.dag.nodes.end());
    std::vector<InfoPath> flat;
    flat.reserve(pooled.size());
    for (const auto& pp : pooled) flat.push_back(pp.path);

    Matrix X = featurize_paths(flat, merged, vectors, cfg.vector_size);
    DetectorConfig dcfg;
    dcfg.contamination = cfg.contamination;
    dcfg.neighbors = cfg.neighbors;
    dcfg.seed = cfg.seed;
    auto per_detector = run_detectors(X, dcfg);
    Verdict verdict = vote(per_detector);
    votes = verdict.votes;
    anomalous = verdict.anomalous;

    nlohmann::json jd = nlohmann::json::object();
    for (const auto& [name, flags] : per_detector) jd[name] = flags;
    manifest["detectors"] = std::move(jd);
    nlohmann::json jv = nlohmann::json::object();
    for (const auto& [i, v] : votes) jv[std::to_string(i)] = v;
    manifest["votes"] = std::move(jv);
  } else if (!pooled.empty()) {
    manifest["warnings"].push_back(
        "fewer than 2 candidate paths; ensemble skipped");
  }
  manifest["anomalous_paths"] = anomalous.size();

  int rank = 0;
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    if (!anomalous.count(i)) continue;
    ++rank;
    SnapshotAlarm alarm = make_alarm(rank, hosts[pooled[i].host_index],
                                     pooled[i].path, votes[i]);
    if (rank <= 5) {
      result.alarms.push_back(std::move(alarm));
    } else {
      result.appendix.push_back(std::move(alarm));
    }
  }
  manifest["alarms_snapshot"] = result.alarms.size();
  manifest["alarms_restored"] = result.appendix.size();
  return result;
}

namespace {

nlohmann::json alarm_to_json(const SnapshotAlarm& a) {
  nlohmann::json j;
  j["rank"] = a.rank;
  j["host"] = a.host;
  j["nodes"] = a.path.nodes;
  j["images"] = a.images;
  j["cmdlines"] = a.cmdlines;
  j["endpoints"] = a.endpoints;
  j["effective_length"] = a.path.effective_length;
  j["diversity"] = a.path.diversity;
  j["communities"] = a.path.communities;
  j["votes"] = a.votes;
  j["chain"] = chain_text(a);
  j["rule_hits"] = nlohmann::json::array();
  for (const auto& m : a.rule_hits) {
    nlohmann::json jm = {{"rule_id", m.rule_id},
                         {"node_id", m.node_id},
                         {"level", level_name(m.level)},
                         {"rs", m.rs},
                         {"matched_text", m.matched_text},
                         {"description", m.description}};
    if (m.matched_edge)
      jm["edge"] = {m.matched_edge->first, m.matched_edge->second};
    j["rule_hits"].push_back(std::move(jm));
  }
  j["explanations"] = a.explanations;
  return j;
}

void render_alarm_text(std::ostringstream& os, const SnapshotAlarm& a) {
  os << "#" << a.rank << " host=" << a.host << " votes=" << a.votes
     << "/6 length=" << a.path.effective_length
     << " diversity=" << a.path.diversity << "\n";
  os << "    chain: " << chain_text(a) << "\n";
  for (const auto& m : a.rule_hits) {
    os << "    rule: " << m.rule_id << " [" << level_name(m.level)
       << " rs=" << m.rs << "] " << m.description << "\n";
  }
  for (const auto& e : a.explanations) os << "    " << e << "\n";
}

}  // namespace

ReportDocument render_report(const PipelineResult& result) {
  ReportDocument doc;

  nlohmann::json j;
  j["alarms"] = nlohmann::json::array();
  for (const auto& a : result.alarms) j["alarms"].push_back(alarm_to_json(a));
  j["restored_for_review"] = nlohmann::json::array();
  for (const auto& a : result.appendix)
    j["restored_for_review"].push_back(alarm_to_json(a));
  j["manifest"] = result.manifest;
  doc.json_text = j.dump(2) + "\n";

  std::ostringstream os;
  os << "=== Snapshot Alarms (Top-5) ===\n";
  if (result.alarms.empty()) {
    os << "no anomalous InfoPaths\n";
  } else {
    for (const auto& a : result.alarms) render_alarm_text(os, a);
  }
  if (!result.appendix.empty()) {
    os << "=== Restored for further review (" << result.appendix.size()
       << ") ===\n";
    for (const auto& a : result.appendix) render_alarm_text(os, a);
  }
  doc.digest_text = os.str();
  return doc;
}

void write_report(const ReportDocument& doc, const std::string& path) {
  std::ofstream json_out(path, std::ios::binary);
  if (!json_out || !(json_out << doc.json_text)) {
    throw ReportWriteFailure("cannot write report: " + path);
  }
  std::ofstream text_out(path + ".txt", std::ios::binary);
  if (!text_out || !(text_out << doc.digest_text)) {
    throw ReportWriteFailure("cannot write digest: " + path + ".txt");
  }
}

std::vector<std::string> llm_recommend(std::vector<SnapshotAlarm>& alarms,
                                       const std::string& endpoint) {
  std::vector<std::string> warnings;

  // Split "<scheme>://<host:port><path>" into client base and path.
  std::string base = endpoint, path = "/";
  auto scheme_end = endpoint.find("://");
  if (scheme_end != std::string::npos) {
    auto path_start = endpoint.find('/', scheme_end + 3);
    if (path_start != std::string::npos) {
      base = endpoint.substr(0, path_start);
      path = endpoint.substr(path_start);
    }
  }

  httplib::Client client(base);
  client.set_connection_timeout(5, 0);
  client.set_read_timeout(10, 0);

  for (auto& alarm : alarms) {
    nlohmann::json req;
    req["chain"] = chain_text(alarm);
    req["cmdlines"] = alarm.cmdlines;
    req["rank"] = alarm.rank;

    auto res = client.Post(path, req.dump(), "application/json");
    if (!res || res->status != 200) {
      warnings.push_back("alarm #" + std::to_string(alarm.rank) +
                         ": endpoint unreachable; template kept");
      continue;
    }
    std::string text = res->body;
    auto parsed = nlohmann::json::parse(text, nullptr, false);
    if (parsed.is_object() && parsed.contains("text") &&
        parsed["text"].is_string()) {
      text = parsed["text"].get<std::string>();
    }
    if (text.empty()) {
      warnings.push_back("alarm #" + std::to_string(alarm.rank) +
                         ": malformed response; template kept");
      continue;
    }
    alarm.explanations = {text};
  }
  return warnings;
}

}  // namespace provalert
