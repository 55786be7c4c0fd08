#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "provalert/provenance_graph.hpp"

namespace provalert {

using EdgeKey = std::pair<NodeId, NodeId>;

struct NodeScores {
  std::map<NodeId, double> pr;  // rareness-normalized PageRank, [0,1]
  std::map<NodeId, double> cb;  // normalized betweenness, [0,1]
  double damping = 0.85;
  bool pr_converged = true;
};

struct EdgeWeights {
  static constexpr double kEpsilon = 1e-6;
  std::map<EdgeKey, double> ew;    // [kEpsilon, 1]
  std::map<EdgeKey, double> reew;  // after rule refinement; == ew if none
};

using CommunityId = int;

struct CommunityPartition {
  std::map<NodeId, CommunityId> assignment;
  std::map<CommunityId, double> cs;  // community score, (0, 1]
};

struct PageRankResult {
  std::map<NodeId, double> raw;
  bool converged = true;
};

/// Iterates PR(v) = (1 - d) + d * sum over in-neighbors u of PR(u)/L(u)
/// until the max per-node change drops below eps. No stochastic
/// normalization; dangling nodes simply contribute nothing.
PageRankResult pagerank(const ProvenanceGraph& g, double d = 0.85,
                        double eps = 1e-10, int max_iter = 200);

/// Min-max inversion: the rarest (lowest) raw score maps to 1.0, the
/// most prominent to 0.0. All-equal input maps everything to 0.5.
std::map<NodeId, double> rareness_normalize(const std::map<NodeId, double>& raw);

/// Unweighted shortest-path betweenness: for every ordered pair (s, t),
/// each shortest path contributes 1 per interior occurrence of v.
/// Result is min-max normalized to [0,1] (all-equal -> 0.5).
std::map<NodeId, double> betweenness(const ProvenanceGraph& g);

/// Raw path-count betweenness, before normalization.
std::map<NodeId, double> betweenness_raw(const ProvenanceGraph& g);

/// EW(m,n) = PR(m) + PR(n) + CB(m) + CB(n), min-max normalized over all
/// edges and clamped below at kEpsilon. A single edge gets 1.0.
EdgeWeights edge_weights(const ProvenanceGraph& g, const NodeScores& scores);

/// Modularity-driven partition over the undirected view of g, using ew
/// as edge weights. Every returned community is weakly connected (a
/// refinement pass splits any that is not). Deterministic per seed.
CommunityPartition detect_communities(const ProvenanceGraph& g,
                                      const EdgeWeights& weights,
                                      double resolution = 1.0,
                                      std::uint64_t seed = 0);

/// CS(c) = mean refined edge weight over intra-community edges,
/// min-max mapped across communities into [0.1, 1.0]. Edgeless
/// communities sit at the 0.1 floor; a single scored community gets 1.0.
std::map<CommunityId, double> community_scores(const ProvenanceGraph& g,
                                               const CommunityPartition& p,
                                               const EdgeWeights& weights);

}  // namespace provalert
