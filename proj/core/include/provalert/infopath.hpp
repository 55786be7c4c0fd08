#pragma once

#include <string>
#include <vector>

#include "provalert/graph_analytics.hpp"
#include "provalert/provenance_graph.hpp"

namespace provalert {

/// One candidate attack chain: a source-to-sink node sequence under
/// inverted, community-adjusted edge lengths.
struct InfoPath {
  std::vector<NodeId> nodes;             // length >= 2
  double effective_length = 0.0;         // sum of 1/(reew * cs) per edge
  int diversity = 1;                     // distinct images on the path
  std::vector<CommunityId> communities;  // per node, in path order
};

struct Terminals {
  std::vector<NodeId> sources;  // zero in-degree, excluding isolated nodes
  std::vector<NodeId> sinks;    // zero out-degree, excluding isolated nodes
};

Terminals find_terminals(const ProvenanceGraph& g);

/// Edge length used for retrieval: rare, rule-boosted edges in
/// high-impact communities come out shortest. The community factor is
/// the child endpoint's community score.
double edge_length(const EdgeWeights& weights, const CommunityPartition& part,
                   const EdgeKey& edge);

/// Shortest path per reachable (source, sink) pair under edge_length.
/// Ties between equal-length paths resolve to the lexicographically
/// smallest node-id sequence.
std::vector<InfoPath> search_infopaths(const ProvenanceGraph& g,
                                       const EdgeWeights& weights,
                                       const CommunityPartition& partition);

/// Ascending effective length, then descending diversity, then
/// lexicographic node sequence. Total and deterministic.
std::vector<InfoPath> rank_infopaths(std::vector<InfoPath> paths);

}  // namespace provalert
