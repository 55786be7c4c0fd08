#include "provalert/graph_analytics.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <random>
#include <unordered_map>
#include <vector>

namespace provalert {

namespace {

std::map<NodeId, double> minmax_normalize(std::map<NodeId, double> m) {
  if (m.empty()) return m;
  double lo = m.begin()->second, hi = m.begin()->second;
  for (const auto& [k, v] : m) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi == lo) {
    for (auto& [k, v] : m) v = 0.5;
  } else {
    for (auto& [k, v] : m) v = (v - lo) / (hi - lo);
  }
  return m;
}

struct IndexedGraph {
  std::vector<NodeId> ids;                   // sorted
  std::unordered_map<NodeId, int> index;
  std::vector<std::vector<int>> out;
  std::vector<std::vector<int>> in;

  explicit IndexedGraph(const ProvenanceGraph& g) {
    ids.reserve(g.nodes.size());
    for (const auto& [id, n] : g.nodes) ids.push_back(id);
    for (int i = 0; i < (int)ids.size(); ++i) index[ids[i]] = i;
    out.resize(ids.size());
    in.resize(ids.size());
    for (const auto& e : g.edges) {
      int p = index.at(e.parent), c = index.at(e.child);
      out[p].push_back(c);
      in[c].push_back(p);
    }
  }
};

}  // namespace

PageRankResult pagerank(const ProvenanceGraph& g, double d, double eps,
                        int max_iter) {
  IndexedGraph ix(g);
  const int n = (int)ix.ids.size();
  std::vector<double> pr(n, 1.0), next(n);
  std::vector<int> out_degree(n);
  for (int i = 0; i < n; ++i) out_degree[i] = (int)ix.out[i].size();

  bool converged = n == 0;
  for (int iter = 0; iter < max_iter && !converged; ++iter) {
    double max_change = 0.0;
    for (int v = 0; v < n; ++v) {
      double sum = 0.0;
      for (int u : ix.in[v]) sum += pr[u] / out_degree[u];
      next[v] = (1.0 - d) + d * sum;
      max_change = std::max(max_change, std::abs(next[v] - pr[v]));
    }
    pr.swap(next);
    converged = max_change < eps;
  }

  PageRankResult res;
  res.converged = converged;
  for (int i = 0; i < n; ++i) res.raw[ix.ids[i]] = pr[i];
  return res;
}

std::map<NodeId, double> rareness_normalize(const std::map<NodeId, double>& raw) {
  std::map<NodeId, double> out = raw;
  if (out.empty()) return out;
  double lo = out.begin()->second, hi = out.begin()->second;
  for (const auto& [k, v] : out) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (auto& [k, v] : out) v = (hi == lo) ? 0.5 : (hi - v) / (hi - lo);
  return out;
}

std::map<NodeId, double> betweenness_raw(const ProvenanceGraph& g) {
  IndexedGraph ix(g);
  const int n = (int)ix.ids.size();
  std::vector<double> cb(n, 0.0);

  // Per source: BFS for distances and path counts, then a reverse-order
  // pass accumulating psi(v) = number of shortest-path continuations
  // from v to any later node within the shortest-path DAG of s.
  // sigma(s,v) * psi(v) is then the number of shortest s->t paths with
  // v interior, summed over all t.
  std::vector<int> dist(n);
  std::vector<double> sigma(n), psi(n);
  std::vector<int> order;
  order.reserve(n);

  for (int s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(psi.begin(), psi.end(), 0.0);
    order.clear();

    std::deque<int> queue{s};
    dist[s] = 0;
    sigma[s] = 1.0;
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop_front();
      order.push_back(u);
      for (int w : ix.out[u]) {
        if (dist[w] < 0) {
          dist[w] = dist[u] + 1;
          queue.push_back(w);
        }
        if (dist[w] == dist[u] + 1) sigma[w] += sigma[u];
      }
    }
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
      int v = *it;
      for (int w : ix.out[v]) {
        if (dist[w] == dist[v] + 1) psi[v] += 1.0 + psi[w];
      }
      if (v != s) cb[v] += sigma[v] * psi[v];
    }
  }

  std::map<NodeId, double> out;
  for (int i = 0; i < n; ++i) out[ix.ids[i]] = cb[i];
  return out;
}

std::map<NodeId, double> betweenness(const ProvenanceGraph& g) {
  return minmax_normalize(betweenness_raw(g));
}

EdgeWeights edge_weights(const ProvenanceGraph& g, const NodeScores& scores) {
  EdgeWeights w;
  if (g.edges.empty()) return w;

  std::map<EdgeKey, double> sums;
  for (const auto& e : g.edges) {
    sums[{e.parent, e.child}] = scores.pr.at(e.parent) + scores.pr.at(e.child) +
                                scores.cb.at(e.parent) + scores.cb.at(e.child);
  }

  double lo = sums.begin()->second, hi = sums.begin()->second;
  for (const auto& [k, v] : sums) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (const auto& [k, v] : sums) {
    double norm;
    if (sums.size() == 1) {
      norm = 1.0;
    } else if (hi == lo) {
      norm = 0.5;
    } else {
      norm = (v - lo) / (hi - lo);
    }
    w.ew[k] = std::max(norm, EdgeWeights::kEpsilon);
  }
  w.reew = w.ew;
  return w;
}

namespace {

// Undirected weighted view for modularity optimization.
struct UGraph {
  int n = 0;
  std::vector<std::unordered_map<int, double>> adj;  // no self loops
  std::vector<double> strength;
  double total_weight = 0.0;  // m = sum of undirected edge weights
};

UGraph undirected_view(const IndexedGraph& ix, const ProvenanceGraph& g,
                       const EdgeWeights& weights) {
  UGraph u;
  u.n = (int)ix.ids.size();
  u.adj.resize(u.n);
  u.strength.assign(u.n, 0.0);
  for (const auto& e : g.edges) {
    int a = ix.index.at(e.parent), b = ix.index.at(e.child);
    if (a == b) continue;
    double w = weights.ew.empty() ? 1.0 : weights.ew.at({e.parent, e.child});
    u.adj[a][b] += w;
    u.adj[b][a] += w;
  }
  for (int i = 0; i < u.n; ++i) {
    for (const auto& [j, w] : u.adj[i]) u.strength[i] += w;
    u.total_weight += u.strength[i];
  }
  u.total_weight /= 2.0;
  return u;
}

// One level of greedy modularity moving. Returns the community of each
// node; communities are relabeled to a dense range.
std::vector<int> local_moving(const UGraph& u, double resolution,
                              std::mt19937_64& rng) {
  std::vector<int> comm(u.n);
  std::iota(comm.begin(), comm.end(), 0);
  std::vector<double> tot(u.strength);  // sum of strengths per community

  std::vector<int> visit(u.n);
  std::iota(visit.begin(), visit.end(), 0);
  std::shuffle(visit.begin(), visit.end(), rng);

  const double m = u.total_weight;
  if (m <= 0.0) return comm;

  bool improved = true;
  int rounds = 0;
  while (improved && rounds < 100) {
    improved = false;
    ++rounds;
    for (int i : visit) {
      int best = comm[i];
      tot[comm[i]] -= u.strength[i];

      std::unordered_map<int, double> links;  // community -> k_{i,in}
      links[comm[i]] = 0.0;
      for (const auto& [j, w] : u.adj[i]) links[comm[j]] += w;

      double best_gain = links[comm[i]] -
                         resolution * u.strength[i] * tot[comm[i]] / (2.0 * m);
      for (const auto& [c, k_in] : links) {
        double gain = k_in - resolution * u.strength[i] * tot[c] / (2.0 * m);
        if (gain > best_gain + 1e-12 ||
            (std::abs(gain - best_gain) <= 1e-12 && c < best)) {
          best_gain = gain;
          best = c;
        }
      }
      if (best != comm[i]) improved = true;
      comm[i] = best;
      tot[best] += u.strength[i];
    }
  }

  std::unordered_map<int, int> relabel;
  for (int i = 0; i < u.n; ++i) {
    auto [it, inserted] = relabel.try_emplace(comm[i], (int)relabel.size());
    comm[i] = it->second;
  }
  return comm;
}

UGraph aggregate(const UGraph& u, const std::vector<int>& comm, int n_comm) {
  UGraph a;
  a.n = n_comm;
  a.adj.resize(n_comm);
  a.strength.assign(n_comm, 0.0);
  std::vector<double> self_loop(n_comm, 0.0);
  for (int i = 0; i < u.n; ++i) {
    for (const auto& [j, w] : u.adj[i]) {
      if (comm[i] == comm[j]) {
        self_loop[comm[i]] += w;  // counted twice overall
      } else {
        a.adj[comm[i]][comm[j]] += w;
      }
    }
  }
  for (int c = 0; c < n_comm; ++c) {
    a.strength[c] = self_loop[c];
    for (const auto& [j, w] : a.adj[c]) a.strength[c] += w;
    a.total_weight += a.strength[c];
  }
  a.total_weight /= 2.0;
  return a;
}

}  // namespace

CommunityPartition detect_communities(const ProvenanceGraph& g,
                                      const EdgeWeights& weights,
                                      double resolution, std::uint64_t seed) {
  CommunityPartition part;
  if (g.nodes.empty()) return part;

  IndexedGraph ix(g);
  const int n = (int)ix.ids.size();
  UGraph level = undirected_view(ix, g, weights);
  std::mt19937_64 rng(seed);

  std::vector<int> membership(n);
  std::iota(membership.begin(), membership.end(), 0);

  for (int depth = 0; depth < 20; ++depth) {
    std::vector<int> comm = local_moving(level, resolution, rng);
    int n_comm = comm.empty() ? 0 : *std::max_element(comm.begin(), comm.end()) + 1;
    for (int i = 0; i < n; ++i) membership[i] = comm[membership[i]];
    if (n_comm == level.n) break;  // no coarsening, converged
    level = aggregate(level, comm, n_comm);
  }

  // Connectivity refinement: any community whose induced undirected
  // subgraph is disconnected is split into its connected pieces.
  std::vector<std::vector<int>> undirected_adj(n);
  for (const auto& e : g.edges) {
    int a = ix.index.at(e.parent), b = ix.index.at(e.child);
    if (a == b) continue;
    undirected_adj[a].push_back(b);
    undirected_adj[b].push_back(a);
  }
  std::vector<int> piece(n, -1);
  int next_piece = 0;
  for (int i = 0; i < n; ++i) {
    if (piece[i] >= 0) continue;
    int id = next_piece++;
    std::deque<int> queue{i};
    piece[i] = id;
    while (!queue.empty()) {
      int u = queue.front();
      queue.pop_front();
      for (int w : undirected_adj[u]) {
        if (piece[w] < 0 && membership[w] == membership[u]) {
          piece[w] = id;
          queue.push_back(w);
        }
      }
    }
  }

  // Deterministic community ids: order by smallest member node id.
  std::vector<int> first_member(next_piece, -1);
  for (int i = 0; i < n; ++i)
    if (first_member[piece[i]] < 0) first_member[piece[i]] = i;
  std::vector<int> order(next_piece);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return ix.ids[first_member[a]] < ix.ids[first_member[b]];
  });
  std::vector<int> final_label(next_piece);
  for (int r = 0; r < next_piece; ++r) final_label[order[r]] = r;

  for (int i = 0; i < n; ++i) part.assignment[ix.ids[i]] = final_label[piece[i]];
  return part;
}

std::map<CommunityId, double> community_scores(const ProvenanceGraph& g,
                                               const CommunityPartition& p,
                                               const EdgeWeights& weights) {
  std::map<CommunityId, double> sum, count;
  std::map<CommunityId, double> cs;
  for (const auto& [id, c] : p.assignment) cs[c] = 0.1;  // edgeless floor

  const auto& w = weights.reew.empty() ? weights.ew : weights.reew;
  for (const auto& e : g.edges) {
    CommunityId cp = p.assignment.at(e.parent);
    CommunityId cc = p.assignment.at(e.child);
    if (cp != cc) continue;
    sum[cp] += w.at({e.parent, e.child});
    count[cp] += 1.0;
  }

  std::map<CommunityId, double> mean;
  for (const auto& [c, s] : sum) mean[c] = s / count[c];
  if (mean.empty()) return cs;

  double lo = mean.begin()->second, hi = mean.begin()->second;
  for (const auto& [c, m] : mean) {
    lo = std::min(lo, m);
    hi = std::max(hi, m);
  }
  for (const auto& [c, m] : mean) {
    cs[c] = (hi == lo) ? 1.0 : 0.1 + 0.9 * (m - lo) / (hi - lo);
  }
  return cs;
}

}  // namespace provalert
