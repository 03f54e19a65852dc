#include <catch2/catch.hpp>

#include <chronocanvas/recommend.hpp>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace chronocanvas;
using fixtures::id;

namespace {

std::set<ModuleId> modules_of(const std::vector<Recommendation>& recs) {
    std::set<ModuleId> out;
    for (const Recommendation& r : recs) out.insert(r.module);
    return out;
}

CompositionDoc fig1_doc() { return {fixtures::fig1_registry(), fixtures::fig1()}; }

}  // namespace

TEST_CASE("ingesting the fig1 corpus") {
    CoOccurrenceStats stats = ingest_corpus(std::vector<CompositionDoc>{fig1_doc()});
    CHECK(stats.compositions() == 1);
    CHECK(stats.follows_count(id("m"), id("q")) == 1);
    CHECK(stats.follows_count(id("q"), id("m")) == 0);  // order-sensitive
    CHECK(stats.sibling_count(id("o"), id("p")) == 1);
    CHECK(stats.sibling_count(id("p"), id("o")) == 1);  // symmetric

    SECTION("empty corpus") {
        CoOccurrenceStats empty = ingest_corpus(std::vector<Composition>{});
        CHECK(empty.compositions() == 0);
        CHECK(empty.follows_count(id("m"), id("q")) == 0);
        CHECK(recommend_reachable(empty, {id("m")}).empty());
    }
}

TEST_CASE("corpus counts match a brute-force pair scan") {
    std::mt19937 rng(2024);
    std::vector<Composition> corpus;
    for (int i = 0; i < 20; ++i) corpus.push_back(oracle::random_dag(rng));
    CoOccurrenceStats stats = ingest_corpus(corpus);

    std::map<std::pair<ModuleId, ModuleId>, int> follows;
    std::map<std::pair<ModuleId, ModuleId>, int> siblings;
    for (const Composition& c : corpus) {
        for (const ModuleId& a : c.members())
            for (const ModuleId& b : oracle::reach_dfs(c, a)) ++follows[{a, b}];
        std::set<std::pair<ModuleId, ModuleId>> sib;
        for (const ModuleId& z : c.members()) {
            std::set<ModuleId> outs = c.out_neighbors(z);
            for (const ModuleId& u : outs)
                for (const ModuleId& v : outs)
                    if (u < v) sib.insert({u, v});
        }
        for (const auto& uv : sib) ++siblings[uv];
    }
    CHECK(stats.follows() == follows);
    CHECK(stats.siblings() == siblings);
}

TEST_CASE("reachable rule recommends everything downstream") {
    CoOccurrenceStats stats = ingest_corpus(std::vector<CompositionDoc>{fig1_doc()});
    std::vector<Recommendation> recs = recommend_reachable(stats, {id("m")});
    CHECK(modules_of(recs) == std::set<ModuleId>{id("n"), id("o"), id("p"), id("q")});
    for (const Recommendation& r : recs) {
        CHECK(r.rule == RecommendationRule::reachable);
        CHECK(r.score == 1.0);
    }

    SECTION("present modules are never recommended") {
        std::vector<Recommendation> all = recommend_reachable(
            stats, {id("m"), id("n"), id("o"), id("p"), id("q")});
        CHECK(all.empty());
    }
    SECTION("scores are monotone under corpus growth") {
        CoOccurrenceStats grown = stats;
        grown.ingest(fixtures::fig1());
        std::vector<Recommendation> before = recommend_reachable(stats, {id("m")});
        std::vector<Recommendation> after = recommend_reachable(grown, {id("m")});
        REQUIRE(before.size() == after.size());
        for (std::size_t i = 0; i < before.size(); ++i) CHECK(after[i].score >= before[i].score);
    }
}

TEST_CASE("gap rule recommends the in-between modules") {
    CoOccurrenceStats stats = ingest_corpus(std::vector<CompositionDoc>{fig1_doc()});
    std::vector<Recommendation> recs = recommend_gap(stats, id("m"), id("q"));
    CHECK(modules_of(recs) == std::set<ModuleId>{id("n"), id("o"), id("p")});
    for (const Recommendation& r : recs) CHECK(r.rule == RecommendationRule::gap_insert);

    SECTION("pair never co-present yields nothing") {
        CHECK(recommend_gap(stats, id("q"), id("m")).empty());
    }

    SECTION("difficulty of hi scales scores without reordering equal base counts") {
        auto with_difficulty = [](double d) {
            Registry reg;
            for (const char* m : {"u", "v", "w", "t"}) {
                Module mod;
                mod.id = id(m);
                if (std::string(m) == "t") mod.difficulty = d;
                reg.add(mod);
            }
            Composition c("gap");
            for (const char* m : {"u", "v", "w", "t"}) c.add_member(id(m));
            c.add_flow({id("u"), id("v"), {}});
            c.add_flow({id("u"), id("w"), {}});
            c.add_flow({id("v"), id("t"), {}});
            c.add_flow({id("w"), id("t"), {}});
            return ingest_corpus(std::vector<CompositionDoc>{{std::move(reg), std::move(c)}});
        };
        std::vector<Recommendation> hard = recommend_gap(with_difficulty(1.0), id("u"), id("t"));
        std::vector<Recommendation> easy = recommend_gap(with_difficulty(0.0), id("u"), id("t"));
        REQUIRE(hard.size() == 2);
        REQUIRE(easy.size() == 2);
        for (std::size_t i = 0; i < hard.size(); ++i) {
            CHECK(hard[i].module == easy[i].module);  // ranking unchanged
            CHECK(hard[i].score == Approx(2.0 * easy[i].score));
        }
    }
}

TEST_CASE("sibling rule recommends shared-predecessor partners") {
    CoOccurrenceStats stats = ingest_corpus(std::vector<CompositionDoc>{fig1_doc()});
    std::vector<Recommendation> recs = recommend_sibling(stats, id("o"));
    CHECK(modules_of(recs) == std::set<ModuleId>{id("p")});
    CHECK(recs[0].rule == RecommendationRule::sibling_supplement);

    SECTION("fan-out of one yields nothing") {
        CHECK(recommend_sibling(stats, id("n")).empty());
    }
    SECTION("standalone variant carries its own rule tag") {
        std::vector<Recommendation> alone = recommend_standalone(stats, id("o"));
        CHECK(modules_of(alone) == std::set<ModuleId>{id("p")});
        CHECK(alone[0].rule == RecommendationRule::standalone);
    }
    SECTION("duration window filters candidates") {
        std::map<ModuleId, double> est{{id("p"), 60.0}};
        CHECK(recommend_sibling(stats, id("o"), DurationWindow{50, 70}, &est).size() == 1);
        CHECK(recommend_sibling(stats, id("o"), DurationWindow{10, 20}, &est).empty());
        CHECK(recommend_sibling(stats, id("o"), DurationWindow{50, 70}, nullptr).empty());
    }
    SECTION("matches a brute-force shared-predecessor scan on a seeded corpus") {
        std::mt19937 rng(77);
        std::vector<Composition> corpus;
        for (int i = 0; i < 15; ++i) corpus.push_back(oracle::random_dag(rng));
        CoOccurrenceStats st = ingest_corpus(corpus);
        ModuleId anchor("d0");
        std::map<ModuleId, int> expect;
        for (const Composition& c : corpus) {
            std::set<ModuleId> partners;
            for (const ModuleId& z : c.members()) {
                std::set<ModuleId> outs = c.out_neighbors(z);
                if (outs.count(anchor))
                    for (const ModuleId& other : outs)
                        if (other != anchor) partners.insert(other);
            }
            for (const ModuleId& other : partners) ++expect[other];
        }
        std::vector<Recommendation> got = recommend_sibling(st, anchor);
        REQUIRE(got.size() == expect.size());
        for (const Recommendation& r : got)
            CHECK(r.score == Approx(static_cast<double>(expect.at(r.module)) /
                                    static_cast<double>(st.compositions())));
    }
}

TEST_CASE("type-set rule equals the set-builder definition") {
    Registry reg;
    auto add = [&](const char* m, const char* type) {
        Module mod;
        mod.id = id(m);
        if (type) mod.type_tag = type;
        reg.add(mod);
    };
    add("o", "video");
    add("p", "video");
    add("x", "video");
    add("y", "quiz");
    add("z", nullptr);

    CHECK(recommend_by_type(reg, {id("o"), id("p")}) == std::set<ModuleId>{id("x")});

    SECTION("anchors without tags yield nothing") {
        CHECK(recommend_by_type(reg, {id("z")}).empty());
    }
    SECTION("multiple anchor tags union") {
        CHECK(recommend_by_type(reg, {id("p"), id("y")}) == std::set<ModuleId>{id("o"), id("x")});
    }
    SECTION("unknown anchor is an error") {
        CHECK_THROWS_AS(recommend_by_type(reg, {id("nope")}), Error);
    }
    SECTION("same machinery over topic tags") {
        Registry topics;
        auto addt = [&](const char* m, const char* topic) {
            Module mod;
            mod.id = id(m);
            if (topic) mod.topic_tag = topic;
            topics.add(mod);
        };
        addt("a", "compilers");
        addt("b", "compilers");
        addt("c", "logic");
        CHECK(recommend_by_type(topics, {id("a")}, TagField::topic) ==
              std::set<ModuleId>{id("b")});
    }
    SECTION("matches a linear filter oracle on seeded registries") {
        std::mt19937 rng(31337);
        const char* types[] = {"video", "quiz", "article", nullptr};
        for (int round = 0; round < 50; ++round) {
            Registry r;
            std::uniform_int_distribution<int> n_dist(1, 12);
            std::uniform_int_distribution<int> t_dist(0, 3);
            int n = n_dist(rng);
            std::vector<ModuleId> ids;
            for (int i = 0; i < n; ++i) {
                Module mod;
                mod.id = ModuleId("r" + std::to_string(i));
                if (const char* t = types[t_dist(rng)]) mod.type_tag = t;
                r.add(mod);
                ids.push_back(mod.id);
            }
            std::set<ModuleId> anchors{ids[static_cast<std::size_t>(t_dist(rng)) % ids.size()]};
            std::set<std::string> tags;
            for (const ModuleId& a : anchors)
                if (r.at(a).type_tag) tags.insert(*r.at(a).type_tag);
            std::set<ModuleId> expect;
            for (const auto& [mid, mod] : r)
                if (!anchors.count(mid) && mod.type_tag && tags.count(*mod.type_tag))
                    expect.insert(mid);
            CHECK(recommend_by_type(r, anchors) == expect);
        }
    }
}

TEST_CASE("recommendation order is total and deterministic") {
    CoOccurrenceStats stats;
    stats.ingest(fixtures::fig1());
    stats.ingest(fixtures::fig2());
    std::vector<Recommendation> a = recommend_reachable(stats, {id("m"), id("a")});
    std::vector<Recommendation> b = recommend_reachable(stats, {id("m"), id("a")});
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].module == b[i].module);
        CHECK(a[i].score == b[i].score);
        if (i > 0) {
            bool ordered = a[i - 1].score > a[i].score ||
                           (a[i - 1].score == a[i].score && a[i - 1].module < a[i].module);
            CHECK(ordered);
        }
    }
}

TEST_CASE("weighted merge blends rule outputs") {
    CoOccurrenceStats stats = ingest_corpus(std::vector<CompositionDoc>{fig1_doc()});
    std::vector<Recommendation> merged = merge_weighted({
        {2.0, recommend_reachable(stats, {id("m")})},
        {1.0, recommend_sibling(stats, id("o"))},
    });
    REQUIRE_FALSE(merged.empty());
    // p scores from both rules: 2.0 * 1.0 + 1.0 * 1.0
    CHECK(merged[0].module == id("p"));
    CHECK(merged[0].score == Approx(3.0));
}
