// Independent reference implementations used to cross-check the library:
// a dense linear solve for the PageRank fixed point, brute-force all-pairs
// shortest-path enumeration for betweenness, and exhaustive simple-path
// minimization for shortest InfoPaths.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "provalert/graph_analytics.hpp"
#include "provalert/provenance_graph.hpp"

namespace oracles {

using provalert::EdgeKey;
using provalert::NodeId;
using provalert::ProvenanceGraph;

// Solves PR(v) = (1-d) + d * sum over edges u->v of PR(u)/outdeg(u)
// directly as a dense linear system (Gaussian elimination with partial
// pivoting). Independent of the library's power iteration.
inline std::map<NodeId, double> pagerank_linear_solve(const ProvenanceGraph& g,
                                                      double d = 0.85) {
  std::vector<NodeId> ids;
  for (const auto& [id, n] : g.nodes) ids.push_back(id);
  std::map<NodeId, std::size_t> idx;
  for (std::size_t i = 0; i < ids.size(); ++i) idx[ids[i]] = i;
  const std::size_t n = ids.size();
  std::map<NodeId, int> outdeg;
  for (const auto& e : g.edges) outdeg[e.parent]++;

  // (I - d*M) x = (1-d) * 1, with M(v,u) = 1/outdeg(u) for each edge u->v.
  std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    a[i][i] = 1.0;
    a[i][n] = 1.0 - d;
  }
  for (const auto& e : g.edges)
    a[idx[e.child]][idx[e.parent]] -= d / outdeg[e.parent];

  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
    std::swap(a[col], a[piv]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a[r][col] == 0.0) continue;
      double f = a[r][col] / a[col][col];
      for (std::size_t c = col; c <= n; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::map<NodeId, double> out;
  for (std::size_t i = 0; i < n; ++i) out[ids[i]] = a[i][n] / a[i][i];
  return out;
}

// Enumerates every directed path up to length n-1 and counts, for each
// ordered (s, t) pair, how often each interior node sits on a shortest
// s->t path. Exponential; only for tiny graphs.
inline std::map<NodeId, double> betweenness_bruteforce(const ProvenanceGraph& g) {
  std::vector<NodeId> ids;
  for (const auto& [id, n] : g.nodes) ids.push_back(id);
  std::map<NodeId, double> cb;
  for (const auto& id : ids) cb[id] = 0.0;

  for (const auto& s : ids) {
    for (const auto& t : ids) {
      if (s == t) continue;
      // gather all simple s->t paths by DFS
      std::vector<std::vector<NodeId>> paths;
      std::vector<NodeId> cur = {s};
      std::function<void(const NodeId&)> dfs = [&](const NodeId& v) {
        if (v == t) {
          paths.push_back(cur);
          return;
        }
        for (const auto& e : g.edges) {
          if (e.parent != v) continue;
          if (std::find(cur.begin(), cur.end(), e.child) != cur.end()) continue;
          cur.push_back(e.child);
          dfs(e.child);
          cur.pop_back();
        }
      };
      dfs(s);
      if (paths.empty()) continue;
      std::size_t best = std::numeric_limits<std::size_t>::max();
      for (const auto& p : paths) best = std::min(best, p.size());
      for (const auto& p : paths) {
        if (p.size() != best) continue;
        for (std::size_t i = 1; i + 1 < p.size(); ++i) cb[p[i]] += 1.0;
      }
    }
  }
  return cb;
}

// All simple source->sink paths with their summed edge lengths; returns
// the minimum total length per (source, sink) pair. Exhaustive.
struct PathOracleResult {
  std::map<std::pair<NodeId, NodeId>, double> best_length;
  std::map<std::pair<NodeId, NodeId>, std::vector<NodeId>> best_path;
};

inline PathOracleResult shortest_paths_bruteforce(
    const ProvenanceGraph& g, const std::map<EdgeKey, double>& length) {
  std::map<NodeId, int> indeg, outdeg;
  for (const auto& [id, n] : g.nodes) indeg[id] = outdeg[id] = 0;
  for (const auto& e : g.edges) {
    outdeg[e.parent]++;
    indeg[e.child]++;
  }
  std::vector<NodeId> sources, sinks;
  for (const auto& [id, n] : g.nodes) {
    if (indeg[id] == 0 && outdeg[id] > 0) sources.push_back(id);
    if (outdeg[id] == 0 && indeg[id] > 0) sinks.push_back(id);
  }

  PathOracleResult res;
  for (const auto& s : sources) {
    std::vector<NodeId> cur = {s};
    double cur_len = 0.0;
    std::function<void(const NodeId&)> dfs = [&](const NodeId& v) {
      if (outdeg[v] == 0 && v != s) {
        auto key = std::make_pair(s, v);
        auto it = res.best_length.find(key);
        bool better = it == res.best_length.end() || cur_len < it->second ||
                      (cur_len == it->second && cur < res.best_path[key]);
        if (better) {
          res.best_length[key] = cur_len;
          res.best_path[key] = cur;
        }
        return;
      }
      for (const auto& e : g.edges) {
        if (e.parent != v) continue;
        cur.push_back(e.child);
        cur_len += length.at({e.parent, e.child});
        dfs(e.child);
        cur_len -= length.at({e.parent, e.child});
        cur.pop_back();
      }
    };
    dfs(s);
  }
  return res;
}

// A small seeded digraph for oracle sweeps. Self-loops excluded;
// acyclic_only additionally restricts edges to ascending index order.
inline ProvenanceGraph random_digraph(std::uint64_t seed, int max_nodes,
                                      bool acyclic_only) {
  std::uint64_t state = seed * 0x9e3779b97f4a7c15ull + 1;
  auto next = [&]() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  };
  int n = 2 + (int)(next() % (std::uint64_t)(max_nodes - 1));
  ProvenanceGraph g;
  for (int i = 0; i < n; ++i) {
    auto id = "n" + std::to_string(i);
    auto& node = g.nodes[id];
    node.node_id = id;
    node.image = id;
    node.cmdlines = {"cmd" + std::to_string(i)};
  }
  int tries = n * 3;
  for (int i = 0; i < tries; ++i) {
    int a = (int)(next() % (std::uint64_t)n);
    int b = (int)(next() % (std::uint64_t)n);
    if (a == b) continue;
    if (acyclic_only && a > b) std::swap(a, b);
    auto pa = "n" + std::to_string(a);
    auto pb = "n" + std::to_string(b);
    if (!g.has_edge(pa, pb)) g.edges.push_back({pa, pb, (std::int64_t)i + 1});
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.is_dag = acyclic_only;
  return g;
}

}  // namespace oracles
