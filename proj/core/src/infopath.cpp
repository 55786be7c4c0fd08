#include "provalert/infopath.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <set>
#include <unordered_map>

namespace provalert {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Tolerance for "same length" when reconstructing tied shortest paths.
bool close(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

}  // namespace

Terminals find_terminals(const ProvenanceGraph& g) {
  std::unordered_map<NodeId, int> indeg, outdeg;
  for (const auto& [id, n] : g.nodes) {
    indeg[id] = 0;
    outdeg[id] = 0;
  }
  for (const auto& e : g.edges) {
    ++outdeg[e.parent];
    ++indeg[e.child];
  }
  Terminals t;
  for (const auto& [id, n] : g.nodes) {
    if (indeg[id] == 0 && outdeg[id] == 0) continue;  // isolated
    if (indeg[id] == 0) t.sources.push_back(id);
    if (outdeg[id] == 0) t.sinks.push_back(id);
  }
  return t;
}

double edge_length(const EdgeWeights& weights, const CommunityPartition& part,
                   const EdgeKey& edge) {
  double reew = weights.reew.empty() ? weights.ew.at(edge)
                                     : weights.reew.at(edge);
  double cs = part.cs.empty() ? 1.0 : part.cs.at(part.assignment.at(edge.second));
  return 1.0 / (reew * cs);
}

std::vector<InfoPath> search_infopaths(const ProvenanceGraph& g,
                                       const EdgeWeights& weights,
                                       const CommunityPartition& partition) {
  Terminals term = find_terminals(g);

  // Forward adjacency with precomputed lengths, children sorted by id so
  // greedy reconstruction yields the lexicographically smallest path.
  std::unordered_map<NodeId, std::vector<std::pair<NodeId, double>>> fwd, rev;
  for (const auto& e : g.edges) {
    double len = edge_length(weights, partition, {e.parent, e.child});
    fwd[e.parent].push_back({e.child, len});
    rev[e.child].push_back({e.parent, len});
  }
  for (auto& [id, v] : fwd) std::sort(v.begin(), v.end());
  for (auto& [id, v] : rev) std::sort(v.begin(), v.end());

  std::vector<InfoPath> out;

  for (const auto& sink : term.sinks) {
    // Distance from every node to this sink (Dijkstra on reversed graph).
    std::unordered_map<NodeId, double> dist;
    using QItem = std::pair<double, NodeId>;
    std::priority_queue<QItem, std::vector<QItem>, std::greater<>> pq;
    dist[sink] = 0.0;
    pq.push({0.0, sink});
    while (!pq.empty()) {
      auto [d, u] = pq.top();
      pq.pop();
      if (d > dist.at(u)) continue;
      auto it = rev.find(u);
      if (it == rev.end()) continue;
      for (const auto& [v, len] : it->second) {
        double nd = d + len;
        auto dit = dist.find(v);
        if (dit == dist.end() || nd < dit->second) {
          dist[v] = nd;
          pq.push({nd, v});
        }
      }
    }

    for (const auto& source : term.sources) {
      auto dit = dist.find(source);
      if (dit == dist.end() || source == sink) continue;

      InfoPath p;
      p.effective_length = dit->second;
      NodeId cur = source;
      p.nodes.push_back(cur);
      // Greedy walk: smallest-id child that stays on a shortest path.
      while (cur != sink) {
        double remaining = dist.at(cur);
        bool advanced = false;
        for (const auto& [child, len] : fwd.at(cur)) {
          auto cdist = dist.find(child);
          if (cdist == dist.end()) continue;
          if (close(len + cdist->second, remaining)) {
            cur = child;
            p.nodes.push_back(cur);
            advanced = true;
            break;
          }
        }
        if (!advanced) break;  // numeric dead end; cannot happen in practice
      }
      if (p.nodes.back() != sink) continue;

      std::set<std::string> images;
      for (const auto& id : p.nodes) images.insert(g.nodes.at(id).image);
      p.diversity = (int)images.size();
      if (!partition.assignment.empty()) {
        for (const auto& id : p.nodes)
          p.communities.push_back(partition.assignment.at(id));
      }
      out.push_back(std::move(p));
    }
  }
  return rank_infopaths(std::move(out));
}

std::vector<InfoPath> rank_infopaths(std::vector<InfoPath> paths) {
  std::sort(paths.begin(), paths.end(), [](const InfoPath& a, const InfoPath& b) {
    if (a.effective_length != b.effective_length)
      return a.effective_length < b.effective_length;
    if (a.diversity != b.diversity) return a.diversity > b.diversity;
    return a.nodes < b.nodes;
  });
  return paths;
}

}  // namespace provalert
