#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "provalert/graph_analytics.hpp"

using namespace provalert;

namespace {

ProvenanceGraph graph_of(const std::vector<std::pair<std::string, std::string>>& edges,
                         const std::vector<std::string>& extra_nodes = {}) {
  ProvenanceGraph g;
  auto ensure = [&](const std::string& id) {
    auto& n = g.nodes[id];
    n.node_id = id;
    n.image = id;
  };
  std::int64_t ts = 1;
  for (const auto& [a, b] : edges) {
    ensure(a);
    ensure(b);
    g.edges.push_back({a, b, ts++});
  }
  for (const auto& id : extra_nodes) ensure(id);
  std::sort(g.edges.begin(), g.edges.end());
  g.is_dag = true;
  return g;
}

}  // namespace

TEST_CASE("pagerank fixed points on hand-solvable graphs") {
  SUBCASE("isolated node settles at 1 - d") {
    auto g = graph_of({}, {"X"});
    auto r = pagerank(g);
    CHECK(r.raw.at("X") == doctest::Approx(0.15).epsilon(1e-12));
  }
  SUBCASE("single edge A->B") {
    auto r = pagerank(graph_of({{"A", "B"}}));
    CHECK(r.raw.at("A") == doctest::Approx(0.15).epsilon(1e-9));
    CHECK(r.raw.at("B") == doctest::Approx(0.2775).epsilon(1e-9));
  }
  SUBCASE("2-cycle solves x = 0.15 + 0.85x") {
    ProvenanceGraph g = graph_of({{"A", "B"}, {"B", "A"}});
    g.is_dag = false;
    auto r = pagerank(g);
    CHECK(r.raw.at("A") == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(r.raw.at("B") == doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("pagerank matches a dense linear solve on random digraphs") {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    auto g = oracles::random_digraph(seed, 8, /*acyclic_only=*/false);
    auto got = pagerank(g).raw;
    auto want = oracles::pagerank_linear_solve(g);
    for (const auto& [id, v] : want)
      CHECK(got.at(id) == doctest::Approx(v).epsilon(1e-8));
  }
}

TEST_CASE("rareness_normalize inverts min-max order") {
  SUBCASE("two values") {
    auto r = rareness_normalize({{"A", 0.15}, {"B", 0.2775}});
    CHECK(r.at("A") == doctest::Approx(1.0));
    CHECK(r.at("B") == doctest::Approx(0.0));
  }
  SUBCASE("all equal collapses to 0.5") {
    auto r = rareness_normalize({{"A", 0.3}, {"B", 0.3}, {"C", 0.3}});
    for (const auto& [id, v] : r) CHECK(v == doctest::Approx(0.5));
  }
  SUBCASE("three values map linearly") {
    auto r = rareness_normalize({{"A", 1.0}, {"B", 2.0}, {"C", 3.0}});
    CHECK(r.at("A") == doctest::Approx(1.0));
    CHECK(r.at("B") == doctest::Approx(0.5));
    CHECK(r.at("C") == doctest::Approx(0.0));
  }
  SUBCASE("argmin goes to 1, argmax to 0, everything in [0,1]") {
    std::map<NodeId, double> raw = {
        {"a", 0.9}, {"b", 0.1}, {"c", 0.4}, {"d", 0.7}};
    auto r = rareness_normalize(raw);
    CHECK(r.at("b") == doctest::Approx(1.0));
    CHECK(r.at("a") == doctest::Approx(0.0));
    for (const auto& [id, v] : r) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}

TEST_CASE("betweenness on fixtures") {
  SUBCASE("chain A->B->C") {
    auto g = graph_of({{"A", "B"}, {"B", "C"}});
    auto raw = betweenness_raw(g);
    CHECK(raw.at("B") == doctest::Approx(1.0));
    CHECK(raw.at("A") == doctest::Approx(0.0));
    CHECK(raw.at("C") == doctest::Approx(0.0));
    auto norm = betweenness(g);
    CHECK(norm.at("B") == doctest::Approx(1.0));
    CHECK(norm.at("A") == doctest::Approx(0.0));
    CHECK(norm.at("C") == doctest::Approx(0.0));
  }
  SUBCASE("single node normalizes to the 0.5 degenerate") {
    auto g = graph_of({}, {"X"});
    CHECK(betweenness(g).at("X") == doctest::Approx(0.5));
  }
  SUBCASE("star center with 2 in and 2 out has raw count 4") {
    auto g = graph_of({{"i1", "c"}, {"i2", "c"}, {"c", "o1"}, {"c", "o2"}});
    CHECK(betweenness_raw(g).at("c") == doctest::Approx(4.0));
  }
}

TEST_CASE("betweenness matches brute-force path enumeration on random DAGs") {
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    auto g = oracles::random_digraph(seed, 8, /*acyclic_only=*/true);
    auto got = betweenness_raw(g);
    auto want = oracles::betweenness_bruteforce(g);
    for (const auto& [id, v] : want)
      CHECK(got.at(id) == doctest::Approx(v).epsilon(1e-12));
  }
}

TEST_CASE("edge_weights normalizes per-edge centrality sums") {
  SUBCASE("three distinct sums hit 1e-6 floor, midpoint, and 1.0") {
    // chain a->b->c->d with scores chosen so edge sums are 1.2, 2.0, 2.8
    auto g = graph_of({{"a", "b"}, {"b", "c"}, {"c", "d"}});
    NodeScores s;
    s.pr = {{"a", 0.2}, {"b", 0.4}, {"c", 0.6}, {"d", 0.8}};
    s.cb = {{"a", 0.2}, {"b", 0.4}, {"c", 0.6}, {"d", 0.8}};
    auto w = edge_weights(g, s);
    CHECK(w.ew.at({"a", "b"}) == doctest::Approx(EdgeWeights::kEpsilon));
    CHECK(w.ew.at({"b", "c"}) == doctest::Approx(0.5));
    CHECK(w.ew.at({"c", "d"}) == doctest::Approx(1.0));
  }
  SUBCASE("equal sums collapse to 0.5") {
    auto g = graph_of({{"a", "b"}, {"c", "d"}});
    NodeScores s;
    for (const auto& id : {"a", "b", "c", "d"}) {
      s.pr[id] = 0.5;
      s.cb[id] = 0.5;
    }
    auto w = edge_weights(g, s);
    CHECK(w.ew.at({"a", "b"}) == doctest::Approx(0.5));
    CHECK(w.ew.at({"c", "d"}) == doctest::Approx(0.5));
  }
  SUBCASE("a single edge gets weight 1.0") {
    auto g = graph_of({{"a", "b"}});
    NodeScores s;
    s.pr = {{"a", 0.1}, {"b", 0.2}};
    s.cb = {{"a", 0.3}, {"b", 0.4}};
    CHECK(edge_weights(g, s).ew.at({"a", "b"}) == doctest::Approx(1.0));
  }
  SUBCASE("raising a node score never lowers an incident edge's sum rank") {
    auto g = graph_of({{"a", "b"}, {"b", "c"}});
    NodeScores s;
    s.pr = {{"a", 0.1}, {"b", 0.1}, {"c", 0.1}};
    s.cb = s.pr;
    auto before = edge_weights(g, s);
    s.pr["a"] = 0.9;
    auto after = edge_weights(g, s);
    // the boosted edge cannot fall below its previous normalized value
    CHECK(after.ew.at({"a", "b"}) >= before.ew.at({"a", "b"}) - 1e-12);
  }
}

TEST_CASE("detect_communities separates two cliques over a weak bridge") {
  auto g = graph_of({{"a1", "a2"}, {"a2", "a3"}, {"a1", "a3"},
                     {"b1", "b2"}, {"b2", "b3"}, {"b1", "b3"},
                     {"a3", "b1"}});
  EdgeWeights w;
  for (const auto& e : g.edges) w.ew[{e.parent, e.child}] = 1.0;
  w.ew[{"a3", "b1"}] = 0.01;  // weak bridge
  w.reew = w.ew;
  auto p = detect_communities(g, w, 1.0, 7);
  CHECK(p.assignment.at("a1") == p.assignment.at("a2"));
  CHECK(p.assignment.at("a2") == p.assignment.at("a3"));
  CHECK(p.assignment.at("b1") == p.assignment.at("b2"));
  CHECK(p.assignment.at("b2") == p.assignment.at("b3"));
  CHECK(p.assignment.at("a1") != p.assignment.at("b1"));
}

TEST_CASE("detect_communities handles a single node") {
  auto g = graph_of({}, {"X"});
  EdgeWeights w;
  auto p = detect_communities(g, w, 1.0, 1);
  CHECK(p.assignment.size() == 1);
  CHECK(p.assignment.count("X") == 1);
}

namespace {

bool community_connected(const ProvenanceGraph& g, const CommunityPartition& p,
                         CommunityId c) {
  std::vector<NodeId> members;
  for (const auto& [id, cid] : p.assignment)
    if (cid == c) members.push_back(id);
  if (members.size() <= 1) return true;
  std::set<NodeId> seen = {members[0]};
  std::vector<NodeId> stack = {members[0]};
  std::set<NodeId> member_set(members.begin(), members.end());
  while (!stack.empty()) {
    auto v = stack.back();
    stack.pop_back();
    for (const auto& e : g.edges) {
      NodeId other;
      if (e.parent == v) other = e.child;
      else if (e.child == v) other = e.parent;
      else continue;
      if (member_set.count(other) && !seen.count(other)) {
        seen.insert(other);
        stack.push_back(other);
      }
    }
  }
  return seen.size() == members.size();
}

}  // namespace

TEST_CASE("every community is weakly connected; partition is seed-stable") {
  for (std::uint64_t seed = 1; seed <= 150; ++seed) {
    auto g = oracles::random_digraph(seed, 10, /*acyclic_only=*/true);
    NodeScores s;
    s.pr = rareness_normalize(pagerank(g).raw);
    s.cb = betweenness(g);
    auto w = edge_weights(g, s);
    auto p1 = detect_communities(g, w, 1.0, seed);
    auto p2 = detect_communities(g, w, 1.0, seed);
    CHECK(p1.assignment == p2.assignment);
    std::set<CommunityId> cids;
    for (const auto& [id, cid] : p1.assignment) cids.insert(cid);
    for (auto c : cids) CHECK(community_connected(g, p1, c));
  }
}

TEST_CASE("community_scores maps mean refined weights into [0.1, 1]") {
  SUBCASE("a lone community scores 1.0") {
    auto g = graph_of({{"a", "b"}});
    EdgeWeights w;
    w.ew[{"a", "b"}] = 0.4;
    w.reew = w.ew;
    CommunityPartition p;
    p.assignment = {{"a", 0}, {"b", 0}};
    auto cs = community_scores(g, p, w);
    CHECK(cs.at(0) == doctest::Approx(1.0));
  }
  SUBCASE("means 0.2 and 0.8 land on the 0.1 floor and 1.0 ceiling") {
    auto g = graph_of({{"a", "b"}, {"c", "d"}});
    EdgeWeights w;
    w.ew[{"a", "b"}] = 0.2;
    w.ew[{"c", "d"}] = 0.8;
    w.reew = w.ew;
    CommunityPartition p;
    p.assignment = {{"a", 0}, {"b", 0}, {"c", 1}, {"d", 1}};
    auto cs = community_scores(g, p, w);
    CHECK(cs.at(0) == doctest::Approx(0.1));
    CHECK(cs.at(1) == doctest::Approx(1.0));
  }
  SUBCASE("an edgeless singleton sits at the floor") {
    auto g = graph_of({{"a", "b"}}, {"x"});
    EdgeWeights w;
    w.ew[{"a", "b"}] = 0.6;
    w.reew = w.ew;
    CommunityPartition p;
    p.assignment = {{"a", 0}, {"b", 0}, {"x", 1}};
    auto cs = community_scores(g, p, w);
    CHECK(cs.at(1) == doctest::Approx(0.1));
  }
}
