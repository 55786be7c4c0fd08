#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "provalert/audit_event.hpp"

namespace provalert {

using NodeId = std::string;

/// A live process instance. Command-lines and network endpoints are
/// kept as in-node memory attributes instead of separate graph nodes.
struct ProcessNode {
  NodeId node_id;
  std::string host;
  std::int64_t pid = 0;
  std::string image;
  std::vector<std::string> cmdlines;   // event order
  std::vector<std::string> endpoints;  // event order, "ip:port"
  std::int64_t first_ts = 0;
  std::int64_t last_ts = 0;
};

struct Edge {
  NodeId parent;
  NodeId child;
  std::int64_t first_ts = 0;

  auto operator<=>(const Edge&) const = default;
};

struct ProvenanceGraph {
  std::map<NodeId, ProcessNode> nodes;
  std::vector<Edge> edges;  // kept sorted, unique (parent, child)
  bool is_dag = false;
  std::size_t removed_edges = 0;  // set by to_dag

  bool has_edge(const NodeId& parent, const NodeId& child) const;
  std::vector<NodeId> parents_of(const NodeId& id) const;
  std::vector<NodeId> children_of(const NodeId& id) const;
};

/// Stable identity for a process instance; creation ts disambiguates
/// pid reuse.
NodeId make_node_id(const std::string& host, std::int64_t pid,
                    std::int64_t creation_ts);

/// Folds a normalized event stream into a process-call graph. Events
/// referencing a pid with no prior ProcessStart get a synthetic
/// "<unknown>" node.
ProvenanceGraph build_graph(const std::vector<AuditEvent>& events);

/// Incremental construction: feed normalized event batches in order,
/// then take the merged graph. Single writer; the finished graph is
/// immutable and shareable.
class GraphBuilder {
 public:
  void add(const AuditEvent& event);
  void add_batch(const std::vector<AuditEvent>& events);
  ProvenanceGraph finish() &&;

 private:
  ProvenanceGraph graph_;
  std::map<std::string, NodeId> live_;  // (host, pid) -> live instance
};

/// Drops every weakly connected component that carries no nonempty
/// command-line anywhere.
ProvenanceGraph reduce_irrelevant(const ProvenanceGraph& g);

/// Breaks cycles by removing, per cycle, the edge with the latest
/// first_ts (ties: largest (parent, child)). Node set is unchanged.
ProvenanceGraph to_dag(const ProvenanceGraph& g);

/// True iff the edge set admits a topological order.
bool is_acyclic(const ProvenanceGraph& g);

/// JSON round-trip for debugging and test fixtures.
std::string graph_to_json(const ProvenanceGraph& g);
ProvenanceGraph graph_from_json(const std::string& text);

}  // namespace provalert
