#include "provalert/provenance_graph.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace provalert {

namespace {

void sort_edges(std::vector<Edge>& edges) {
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end(),
                          [](const Edge& a, const Edge& b) {
                            return a.parent == b.parent && a.child == b.child;
                          }),
              edges.end());
}

std::unordered_map<NodeId, std::vector<NodeId>> adjacency(
    const ProvenanceGraph& g, bool undirected) {
  std::unordered_map<NodeId, std::vector<NodeId>> adj;
  for (const auto& [id, n] : g.nodes) adj[id];
  for (const auto& e : g.edges) {
    adj[e.parent].push_back(e.child);
    if (undirected) adj[e.child].push_back(e.parent);
  }
  return adj;
}

}  // namespace

bool ProvenanceGraph::has_edge(const NodeId& parent, const NodeId& child) const {
  return std::any_of(edges.begin(), edges.end(), [&](const Edge& e) {
    return e.parent == parent && e.child == child;
  });
}

std::vector<NodeId> ProvenanceGraph::parents_of(const NodeId& id) const {
  std::vector<NodeId> out;
  for (const auto& e : edges)
    if (e.child == id) out.push_back(e.parent);
  return out;
}

std::vector<NodeId> ProvenanceGraph::children_of(const NodeId& id) const {
  std::vector<NodeId> out;
  for (const auto& e : edges)
    if (e.parent == id) out.push_back(e.child);
  return out;
}

NodeId make_node_id(const std::string& host, std::int64_t pid,
                    std::int64_t creation_ts) {
  return host + "/" + std::to_string(pid) + "@" + std::to_string(creation_ts);
}

void GraphBuilder::add(const AuditEvent& e) {
  auto live_key = [](const std::string& host, std::int64_t pid) {
    return host + "/" + std::to_string(pid);
  };
  auto node_for = [&](const std::string& host, std::int64_t pid,
                      std::int64_t ts) -> ProcessNode& {
    auto key = live_key(host, pid);
    auto it = live_.find(key);
    if (it != live_.end()) return graph_.nodes.at(it->second);
    // No prior ProcessStart: synthesize a placeholder instance.
    NodeId id = make_node_id(host, pid, 0);
    ProcessNode n;
    n.node_id = id;
    n.host = host;
    n.pid = pid;
    n.image = "<unknown>";
    n.first_ts = ts;
    n.last_ts = ts;
    live_[key] = id;
    return graph_.nodes.emplace(id, std::move(n)).first->second;
  };

  if (e.kind == EventKind::ProcessStart) {
    ProcessNode& parent = node_for(e.host, e.ppid, e.ts);
    parent.last_ts = std::max(parent.last_ts, e.ts);
    const NodeId parent_id = parent.node_id;

    NodeId child_id = make_node_id(e.host, e.pid, e.ts);
    auto [it, inserted] = graph_.nodes.try_emplace(child_id);
    ProcessNode& child = it->second;
    if (inserted) {
      child.node_id = child_id;
      child.host = e.host;
      child.pid = e.pid;
      child.image = e.image;
      child.first_ts = e.ts;
      child.last_ts = e.ts;
    }
    child.last_ts = std::max(child.last_ts, e.ts);
    if (!e.cmdline.empty()) child.cmdlines.push_back(e.cmdline);
    live_[live_key(e.host, e.pid)] = child_id;

    if (parent_id != child_id) {
      graph_.edges.push_back({parent_id, child_id, e.ts});
    }
  } else {
    ProcessNode& n = node_for(e.host, e.pid, e.ts);
    n.last_ts = std::max(n.last_ts, e.ts);
    n.endpoints.push_back(e.remote);
  }
}

void GraphBuilder::add_batch(const std::vector<AuditEvent>& events) {
  for (const auto& e : events) add(e);
}

ProvenanceGraph GraphBuilder::finish() && {
  sort_edges(graph_.edges);
  return std::move(graph_);
}

ProvenanceGraph build_graph(const std::vector<AuditEvent>& events) {
  GraphBuilder b;
  b.add_batch(events);
  return std::move(b).finish();
}

ProvenanceGraph reduce_irrelevant(const ProvenanceGraph& g) {
  auto adj = adjacency(g, /*undirected=*/true);
  std::unordered_set<NodeId> keep;
  std::unordered_set<NodeId> visited;

  for (const auto& [seed, node] : g.nodes) {
    if (visited.count(seed)) continue;
    std::vector<NodeId> component;
    bool has_cmdline = false;
    std::deque<NodeId> queue{seed};
    visited.insert(seed);
    while (!queue.empty()) {
      NodeId cur = queue.front();
      queue.pop_front();
      component.push_back(cur);
      for (const auto& c : g.nodes.at(cur).cmdlines) {
        if (!c.empty()) {
          has_cmdline = true;
          break;
        }
      }
      for (const auto& next : adj[cur]) {
        if (visited.insert(next).second) queue.push_back(next);
      }
    }
    if (has_cmdline) keep.insert(component.begin(), component.end());
  }

  ProvenanceGraph out;
  out.is_dag = g.is_dag;
  for (const auto& [id, n] : g.nodes)
    if (keep.count(id)) out.nodes.emplace(id, n);
  for (const auto& e : g.edges)
    if (keep.count(e.parent) && keep.count(e.child)) out.edges.push_back(e);
  return out;
}

namespace {

// Finds one directed cycle, returned as its edge sequence; empty if acyclic.
std::vector<Edge> find_cycle(const ProvenanceGraph& g) {
  std::unordered_map<NodeId, std::vector<const Edge*>> out_edges;
  for (const auto& e : g.edges) out_edges[e.parent].push_back(&e);

  enum class Mark { White, Gray, Black };
  std::unordered_map<NodeId, Mark> mark;
  for (const auto& [id, n] : g.nodes) mark[id] = Mark::White;

  std::vector<const Edge*> stack;
  std::vector<Edge> cycle;

  std::function<bool(const NodeId&)> dfs = [&](const NodeId& u) -> bool {
    mark[u] = Mark::Gray;
    for (const Edge* e : out_edges[u]) {
      if (mark[e->child] == Mark::Gray) {
        // Unwind stack back to the cycle entry point.
        cycle.push_back(*e);
        for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
          cycle.push_back(**it);
          if ((*it)->parent == e->child) break;
        }
        std::reverse(cycle.begin(), cycle.end());
        return true;
      }
      if (mark[e->child] == Mark::White) {
        stack.push_back(e);
        if (dfs(e->child)) return true;
        stack.pop_back();
      }
    }
    mark[u] = Mark::Black;
    return false;
  };

  for (const auto& [id, n] : g.nodes) {
    if (mark[id] == Mark::White && dfs(id)) return cycle;
  }
  return {};
}

}  // namespace

ProvenanceGraph to_dag(const ProvenanceGraph& g) {
  ProvenanceGraph out = g;
  out.removed_edges = 0;
  for (;;) {
    std::vector<Edge> cycle = find_cycle(out);
    if (cycle.empty()) break;
    // Latest first_ts loses; ties resolved by largest (parent, child).
    const Edge* victim = &cycle.front();
    for (const Edge& e : cycle) {
      if (e.first_ts > victim->first_ts ||
          (e.first_ts == victim->first_ts &&
           std::tie(e.parent, e.child) >
               std::tie(victim->parent, victim->child))) {
        victim = &e;
      }
    }
    Edge v = *victim;
    out.edges.erase(std::remove_if(out.edges.begin(), out.edges.end(),
                                   [&](const Edge& e) {
                                     return e.parent == v.parent &&
                                            e.child == v.child;
                                   }),
                    out.edges.end());
    ++out.removed_edges;
  }
  out.is_dag = true;
  return out;
}

bool is_acyclic(const ProvenanceGraph& g) {
  std::unordered_map<NodeId, int> indeg;
  auto adj = adjacency(g, /*undirected=*/false);
  for (const auto& [id, n] : g.nodes) indeg[id] = 0;
  for (const auto& e : g.edges) ++indeg[e.child];
  std::deque<NodeId> queue;
  for (const auto& [id, d] : indeg)
    if (d == 0) queue.push_back(id);
  std::size_t seen = 0;
  while (!queue.empty()) {
    NodeId u = queue.front();
    queue.pop_front();
    ++seen;
    for (const auto& v : adj[u])
      if (--indeg[v] == 0) queue.push_back(v);
  }
  return seen == g.nodes.size();
}

std::string graph_to_json(const ProvenanceGraph& g) {
  nlohmann::json j;
  j["is_dag"] = g.is_dag;
  j["removed_edges"] = g.removed_edges;
  j["nodes"] = nlohmann::json::array();
  for (const auto& [id, n] : g.nodes) {
    j["nodes"].push_back({{"node_id", n.node_id},
                          {"host", n.host},
                          {"pid", n.pid},
                          {"image", n.image},
                          {"cmdlines", n.cmdlines},
                          {"endpoints", n.endpoints},
                          {"first_ts", n.first_ts},
                          {"last_ts", n.last_ts}});
  }
  j["edges"] = nlohmann::json::array();
  for (const auto& e : g.edges) {
    j["edges"].push_back(
        {{"parent", e.parent}, {"child", e.child}, {"first_ts", e.first_ts}});
  }
  return j.dump(2);
}

ProvenanceGraph graph_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  ProvenanceGraph g;
  g.is_dag = j.value("is_dag", false);
  g.removed_edges = j.value("removed_edges", std::size_t{0});
  for (const auto& jn : j.at("nodes")) {
    ProcessNode n;
    n.node_id = jn.at("node_id");
    n.host = jn.value("host", "");
    n.pid = jn.value("pid", std::int64_t{0});
    n.image = jn.at("image");
    n.cmdlines = jn.value("cmdlines", std::vector<std::string>{});
    n.endpoints = jn.value("endpoints", std::vector<std::string>{});
    n.first_ts = jn.value("first_ts", std::int64_t{0});
    n.last_ts = jn.value("last_ts", std::int64_t{0});
    g.nodes.emplace(n.node_id, std::move(n));
  }
  for (const auto& je : j.at("edges")) {
    g.edges.push_back({je.at("parent"), je.at("child"),
                       je.value("first_ts", std::int64_t{0})});
  }
  sort_edges(g.edges);
  return g;
}

}  // namespace provalert
