#include <catch2/catch.hpp>

#include <chronocanvas/chronology.hpp>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace chronocanvas;
using fixtures::id;

TEST_CASE("fig1 successor and predecessor sets") {
    Composition c = fixtures::fig1();
    CHECK(successors_of(c, id("m")) == std::set<ModuleId>{id("n"), id("o"), id("p"), id("q")});
    CHECK(successors_of(c, id("n")) == std::set<ModuleId>{id("o"), id("p"), id("q")});
    CHECK(successors_of(c, id("q")).empty());
    CHECK(predecessors_of(c, id("q")) == std::set<ModuleId>{id("m"), id("n"), id("o"), id("p")});
    CHECK(predecessors_of(c, id("m")).empty());
    CHECK_THROWS_AS(successors_of(c, id("zz")), Error);
}

TEST_CASE("fig1 between") {
    Composition c = fixtures::fig1();
    CHECK(between(c, id("m"), id("q")) == std::set<ModuleId>{id("n"), id("o"), id("p")});
    CHECK(between(c, id("o"), id("p")).empty());  // adjacent
    CHECK(between(c, id("q"), id("m")).empty());  // wrong way round
}

TEST_CASE("order relation matches brute-force DFS on random DAGs") {
    std::mt19937 rng(1234);
    for (int i = 0; i < 100; ++i) {
        Composition dag = oracle::random_dag(rng);
        OrderRelation rel = OrderRelation::of(dag);
        for (const ModuleId& m : dag.members()) {
            std::set<ModuleId> expected = oracle::reach_dfs(dag, m);
            CHECK(successors_of(dag, m) == expected);
            CHECK(rel.successors(m) == expected);
        }
        // duality: x in succ(y) <=> y in pred(x)
        for (const ModuleId& x : dag.members()) {
            for (const ModuleId& y : dag.members()) {
                bool fwd = rel.successors(y).count(x) != 0;
                bool back = rel.predecessors(x).count(y) != 0;
                CHECK(fwd == back);
                CHECK(predecessors_of(dag, x).count(y) == rel.predecessors(x).count(y));
            }
        }
        // between equals the intersection of the oracle sets
        std::vector<ModuleId> ids(dag.members().begin(), dag.members().end());
        for (const ModuleId& lo : ids) {
            for (const ModuleId& hi : ids) {
                if (lo == hi) continue;
                std::set<ModuleId> expect;
                for (const ModuleId& x : oracle::reach_dfs(dag, lo))
                    if (oracle::reach_dfs(dag, x).count(hi)) expect.insert(x);
                CHECK(between(dag, lo, hi) == expect);
            }
        }
    }
}

TEST_CASE("transitivity of the successor relation") {
    std::mt19937 rng(99);
    for (int i = 0; i < 30; ++i) {
        Composition dag = oracle::random_dag(rng);
        OrderRelation rel = OrderRelation::of(dag);
        for (const ModuleId& z : dag.members())
            for (const ModuleId& y : rel.successors(z))
                for (const ModuleId& x : rel.successors(y)) CHECK(rel.successors(z).count(x) == 1);
    }
}

TEST_CASE("timespan ranks follow the longest path") {
    Composition c = fixtures::fig1();
    std::vector<Timespan> spans = distill_timespans(c);
    REQUIRE(spans.size() == 5);
    std::map<std::string, int> rank;
    for (const Timespan& t : spans) rank[t.module.str()] = t.rank;
    CHECK(rank == std::map<std::string, int>{{"m", 0}, {"n", 1}, {"o", 2}, {"p", 3}, {"q", 4}});

    SECTION("ranks respect every edge on random DAGs") {
        std::mt19937 rng(5);
        for (int i = 0; i < 50; ++i) {
            Composition dag = oracle::random_dag(rng);
            std::map<ModuleId, int> r;
            for (const Timespan& t : distill_timespans(dag)) r[t.module] = t.rank;
            for (const FlowEdge& e : dag.edges()) CHECK(r.at(e.from) < r.at(e.to));
        }
    }
}

TEST_CASE("timespans with estimates") {
    Composition c = fixtures::fig1();
    std::map<ModuleId, double> est;
    for (const ModuleId& m : c.members()) est[m] = 60.0;
    std::vector<Timespan> spans = distill_timespans(c, &est);
    std::map<std::string, Timespan> by_id;
    for (const Timespan& t : spans) by_id[t.module.str()] = t;
    CHECK(by_id.at("m").est_start == 0.0);
    CHECK(by_id.at("m").est_end == 60.0);
    CHECK(by_id.at("p").est_start == 180.0);
    CHECK(by_id.at("q").est_end == 300.0);

    SECTION("missing estimate is reported") {
        est.erase(id("p"));
        CHECK_THROWS_AS(distill_timespans(c, &est), Error);
    }
    SECTION("single module composition") {
        Composition one("one");
        one.add_member(id("solo"));
        std::map<ModuleId, double> e{{id("solo"), 42.0}};
        std::vector<Timespan> s = distill_timespans(one, &e);
        REQUIRE(s.size() == 1);
        CHECK(s[0].rank == 0);
        CHECK(s[0].est_start == 0.0);
        CHECK(s[0].est_end == 42.0);
    }
}
