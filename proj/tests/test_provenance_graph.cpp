#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "provalert/provenance_graph.hpp"

using namespace provalert;

namespace {

AuditEvent start(std::int64_t ts, std::int64_t pid, std::int64_t ppid,
                 const std::string& image, const std::string& cmdline,
                 const std::string& host = "h1") {
  AuditEvent e;
  e.event_id = "s" + std::to_string(ts) + "-" + std::to_string(pid);
  e.kind = EventKind::ProcessStart;
  e.ts = ts;
  e.host = host;
  e.pid = pid;
  e.ppid = ppid;
  e.image = image;
  e.cmdline = cmdline;
  return e;
}

AuditEvent connect(std::int64_t ts, std::int64_t pid, const std::string& image,
                   const std::string& remote, const std::string& host = "h1") {
  AuditEvent e;
  e.event_id = "n" + std::to_string(ts) + "-" + std::to_string(pid);
  e.kind = EventKind::NetConnect;
  e.ts = ts;
  e.host = host;
  e.pid = pid;
  e.image = image;
  e.remote = remote;
  return e;
}

const ProcessNode* node_by_image(const ProvenanceGraph& g,
                                 const std::string& image) {
  for (const auto& [id, n] : g.nodes)
    if (n.image == image) return &n;
  return nullptr;
}

}  // namespace

TEST_CASE("build_graph reconstructs the staged compiler chain") {
  const std::string csc_cmd =
      "/noconfig /fullpaths @C:\\Users\\u\\AppData\\Local\\Temp\\4krwc2ua.cmdline";
  std::vector<AuditEvent> events = {
      start(1, 100, 1, "Explorer.exe", ""),
      start(2, 200, 100, "Powershell", "powershell -nop -w hidden"),
      start(3, 300, 200, "csc.exe", csc_cmd),
      start(4, 400, 300, "WMI.exe", "tasklist"),
      connect(5, 300, "csc.exe", "154.26.156.62:4444"),
  };
  auto g = build_graph(events);
  REQUIRE(g.nodes.size() == 5);  // chain + synthetic parent of Explorer.exe

  auto* csc = node_by_image(g, "csc.exe");
  auto* wmi = node_by_image(g, "WMI.exe");
  auto* ps = node_by_image(g, "Powershell");
  auto* exp = node_by_image(g, "Explorer.exe");
  REQUIRE(csc != nullptr);
  REQUIRE(wmi != nullptr);
  REQUIRE(ps != nullptr);
  REQUIRE(exp != nullptr);
  CHECK(g.has_edge(exp->node_id, ps->node_id));
  CHECK(g.has_edge(ps->node_id, csc->node_id));
  CHECK(g.has_edge(csc->node_id, wmi->node_id));
  REQUIRE(csc->cmdlines.size() == 1);
  CHECK(csc->cmdlines[0] == csc_cmd);
  REQUIRE(wmi->cmdlines.size() == 1);
  CHECK(wmi->cmdlines[0] == "tasklist");
  REQUIRE(csc->endpoints.size() == 1);
  CHECK(csc->endpoints[0] == "154.26.156.62:4444");
}

TEST_CASE("build_graph on empty input gives an empty graph") {
  auto g = build_graph({});
  CHECK(g.nodes.empty());
  CHECK(g.edges.empty());
}

TEST_CASE("pid reuse creates distinct node instances") {
  std::vector<AuditEvent> events = {
      start(1, 100, 1, "bash", "bash -i"),
      start(10, 100, 1, "zsh", "zsh"),
  };
  auto g = build_graph(events);
  // two instances of pid 100 plus the shared synthetic parent
  int instances = 0;
  for (const auto& [id, n] : g.nodes)
    if (n.pid == 100) ++instances;
  CHECK(instances == 2);
}

TEST_CASE("events for an unseen pid get a synthetic unknown node") {
  auto g = build_graph({start(1, 50, 42, "bash", "bash -i")});
  auto* unknown = node_by_image(g, "<unknown>");
  REQUIRE(unknown != nullptr);
  CHECK(unknown->pid == 42);
  auto* bash = node_by_image(g, "bash");
  REQUIRE(bash != nullptr);
  CHECK(g.has_edge(unknown->node_id, bash->node_id));
}

TEST_CASE("incremental GraphBuilder matches one-shot build_graph") {
  std::vector<AuditEvent> events = {
      start(1, 1, 0, "init", "init"),
      start(2, 2, 1, "bash", "bash -i"),
      connect(3, 2, "bash", "10.0.0.5:443"),
      start(4, 3, 2, "ls", "ls -la"),
  };
  GraphBuilder b;
  b.add_batch({events[0], events[1]});
  b.add_batch({events[2], events[3]});
  auto g1 = std::move(b).finish();
  auto g2 = build_graph(events);
  CHECK(g1.nodes.size() == g2.nodes.size());
  CHECK(g1.edges == g2.edges);
}

TEST_CASE("reduce_irrelevant drops command-line-free components only") {
  // component 1: three nodes, no cmdline anywhere
  // component 2: one cmdline-bearing node plus a bare neighbor
  std::vector<AuditEvent> events = {
      start(1, 10, 9, "svc-a", ""),
      start(2, 11, 10, "svc-b", ""),
      start(3, 20, 19, "WMI.exe", "tasklist"),
      start(4, 21, 20, "conhost", ""),
  };
  auto g = reduce_irrelevant(build_graph(events));
  CHECK(node_by_image(g, "svc-a") == nullptr);
  CHECK(node_by_image(g, "svc-b") == nullptr);
  // the matching component survives whole, cmdline-free neighbors included
  CHECK(node_by_image(g, "WMI.exe") != nullptr);
  CHECK(node_by_image(g, "conhost") != nullptr);
}

TEST_CASE("reduce_irrelevant on an empty graph is a no-op") {
  auto g = reduce_irrelevant(ProvenanceGraph{});
  CHECK(g.nodes.empty());
}

namespace {

ProvenanceGraph raw_graph(const std::vector<Edge>& edges) {
  ProvenanceGraph g;
  for (const auto& e : edges) {
    for (const auto& id : {e.parent, e.child}) {
      auto& n = g.nodes[id];
      n.node_id = id;
      n.image = id;
      n.cmdlines = {"cmd " + id};
    }
    g.edges.push_back(e);
  }
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

}  // namespace

TEST_CASE("to_dag breaks a 2-cycle by dropping the later edge") {
  auto g = to_dag(raw_graph({{"A", "B", 1}, {"B", "A", 5}}));
  CHECK(g.is_dag);
  CHECK(g.removed_edges == 1);
  CHECK(g.has_edge("A", "B"));
  CHECK_FALSE(g.has_edge("B", "A"));
}

TEST_CASE("to_dag leaves acyclic graphs untouched") {
  auto before = raw_graph({{"A", "B", 1}, {"B", "C", 2}, {"A", "C", 3}});
  auto g = to_dag(before);
  CHECK(g.is_dag);
  CHECK(g.removed_edges == 0);
  CHECK(g.edges == before.edges);
}

TEST_CASE("to_dag removes the latest edge of a 3-cycle") {
  auto g = to_dag(raw_graph({{"A", "B", 1}, {"B", "C", 2}, {"C", "A", 9}}));
  CHECK(g.is_dag);
  CHECK(g.removed_edges == 1);
  CHECK(g.has_edge("A", "B"));
  CHECK(g.has_edge("B", "C"));
  CHECK_FALSE(g.has_edge("C", "A"));
}

TEST_CASE("to_dag on random digraphs: acyclic, edges shrink, nodes stay") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 300; ++trial) {
    int n = 2 + (int)(rng() % 7);
    std::vector<Edge> edges;
    for (int i = 0; i < n * 2; ++i) {
      auto a = "n" + std::to_string(rng() % n);
      auto b = "n" + std::to_string(rng() % n);
      if (a == b) continue;
      edges.push_back({a, b, (std::int64_t)(rng() % 50 + 1)});
    }
    auto before = raw_graph(edges);
    auto g = to_dag(before);
    CHECK(g.is_dag);
    CHECK(is_acyclic(g));
    CHECK(g.nodes.size() == before.nodes.size());
    for (const auto& e : g.edges)
      CHECK(before.has_edge(e.parent, e.child));
  }
}

TEST_CASE("reduce_irrelevant keeps every component containing a cmdline") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    int n = 3 + (int)(rng() % 8);
    ProvenanceGraph g;
    for (int i = 0; i < n; ++i) {
      auto id = "n" + std::to_string(i);
      auto& node = g.nodes[id];
      node.node_id = id;
      node.image = id;
      if (rng() % 3 == 0) node.cmdlines = {"payload"};
    }
    for (int i = 0; i < n; ++i) {
      auto a = "n" + std::to_string(rng() % n);
      auto b = "n" + std::to_string(rng() % n);
      if (a != b && !g.has_edge(a, b)) g.edges.push_back({a, b, (std::int64_t)i + 1});
    }
    std::sort(g.edges.begin(), g.edges.end());
    auto r = reduce_irrelevant(g);
    // no node with a nonempty cmdline is ever dropped
    for (const auto& [id, node] : g.nodes)
      if (!node.cmdlines.empty()) CHECK(r.nodes.count(id) == 1);
    // survivors keep their edges intact
    for (const auto& e : r.edges) CHECK(g.has_edge(e.parent, e.child));
  }
}

TEST_CASE("graph JSON export round-trips") {
  std::vector<AuditEvent> events = {
      start(1, 1, 0, "init", "init"),
      start(2, 2, 1, "bash", "bash -i"),
      connect(3, 2, "bash", "10.0.0.5:443"),
  };
  auto g = to_dag(reduce_irrelevant(build_graph(events)));
  auto back = graph_from_json(graph_to_json(g));
  CHECK(back.nodes.size() == g.nodes.size());
  CHECK(back.edges == g.edges);
  for (const auto& [id, n] : g.nodes) {
    REQUIRE(back.nodes.count(id) == 1);
    CHECK(back.nodes.at(id).cmdlines == n.cmdlines);
    CHECK(back.nodes.at(id).endpoints == n.endpoints);
  }
}
