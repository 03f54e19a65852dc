#include <catch2/catch.hpp>

#include <algorithm>
#include <random>
#include <thread>

#include <chronocanvas/estimate.hpp>

#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace chronocanvas;
using fixtures::id;

namespace {

SampleStore store_with(const ModuleId& m, const std::vector<double>& seconds) {
    SampleStore store;
    int u = 0;
    for (double s : seconds) store.record({m, "u" + std::to_string(u++), s, true, {}});
    return store;
}

}  // namespace

TEST_CASE("recording samples") {
    SampleStore store;
    store.record({id("m"), "u1", 300.0, true, {}});
    CHECK(store.count(id("m")) == 1);
    CHECK(store.total() == 1);

    SECTION("non-positive durations are rejected") {
        CHECK_THROWS_AS(store.record({id("m"), "u2", -5.0, true, {}}), Error);
        CHECK_THROWS_AS(store.record({id("m"), "u2", 0.0, true, {}}), Error);
        CHECK(store.count(id("m")) == 1);
    }
    SECTION("seeded bulk insert matches a fold recount") {
        std::mt19937 rng(11);
        std::uniform_real_distribution<double> dur(1.0, 1000.0);
        std::map<ModuleId, int> expect;
        for (int i = 0; i < 1000; ++i) {
            ModuleId m("mod" + std::to_string(i % 7));
            store.record({m, "u", dur(rng), true, {}});
            ++expect[m];
        }
        for (const auto& [m, n] : expect)
            CHECK(store.count(m) == static_cast<std::size_t>(n) + (m == id("m") ? 1 : 0));
    }
    SECTION("concurrent appends are serialized") {
        SampleStore shared;
        std::vector<std::thread> workers;
        for (int t = 0; t < 4; ++t)
            workers.emplace_back([&shared, t] {
                for (int i = 0; i < 250; ++i)
                    shared.record({id("m"), "t" + std::to_string(t), 1.0 + i, true, {}});
            });
        for (auto& w : workers) w.join();
        CHECK(shared.total() == 1000);
        CHECK(shared.count(id("m")) == 1000);
    }
}

TEST_CASE("the tri-modal fixture estimates to the genuine cluster") {
    // bounces (2 s, 3 s), a genuine cluster around 300 s, and two sessions
    // left open for days
    SampleStore store = store_with(id("n"), {2, 3, 290, 300, 310, 172800, 190000});
    EstimateReport report = estimate_module(store, id("n"));
    CHECK(report.n_raw == 7);
    CHECK(report.n_kept == 7);  // below min_n, no trim: the median still holds
    CHECK(report.robust_estimate == 300.0);
}

TEST_CASE("plain estimates") {
    SECTION("identical samples have zero spread") {
        SampleStore store = store_with(id("x"), std::vector<double>(5, 120.0));
        EstimateReport r = estimate_module(store, id("x"));
        CHECK(r.robust_estimate == 120.0);
        CHECK(r.spread == 0.0);
    }
    SECTION("single sample") {
        SampleStore store = store_with(id("x"), {60.0});
        EstimateReport r = estimate_module(store, id("x"));
        CHECK(r.robust_estimate == 60.0);
        CHECK(r.n_kept == 1);
    }
    SECTION("no samples at all") {
        SampleStore store;
        CHECK_THROWS_AS(estimate_module(store, id("x")), Error);
    }
    SECTION("robust estimate sits within the kept samples") {
        std::mt19937 rng(21);
        std::uniform_real_distribution<double> dur(1.0, 5000.0);
        for (int round = 0; round < 30; ++round) {
            std::vector<double> xs;
            std::uniform_int_distribution<int> n_dist(1, 60);
            int n = n_dist(rng);
            for (int i = 0; i < n; ++i) xs.push_back(dur(rng));
            SampleStore store = store_with(id("x"), xs);
            EstimateReport r = estimate_module(store, id("x"));
            std::sort(xs.begin(), xs.end());
            CHECK(r.robust_estimate >= xs.front());
            CHECK(r.robust_estimate <= xs.back());
            CHECK(r.n_kept <= r.n_raw);
        }
    }
}

TEST_CASE("estimates are permutation invariant") {
    std::mt19937 rng(33);
    std::vector<double> xs{2, 3, 290, 300, 310, 5000, 172800, 40, 280, 305, 320, 290};
    SampleStore a = store_with(id("x"), xs);
    std::shuffle(xs.begin(), xs.end(), rng);
    SampleStore b = store_with(id("x"), xs);
    EstimateReport ra = estimate_module(a, id("x"));
    EstimateReport rb = estimate_module(b, id("x"));
    CHECK(ra.robust_estimate == rb.robust_estimate);
    CHECK(ra.spread == rb.spread);
    CHECK(ra.n_kept == rb.n_kept);
}

TEST_CASE("trim drops at most the configured fraction per tail") {
    for (std::size_t n : {5u, 9u, 10u, 11u, 19u, 20u, 57u}) {
        std::vector<double> xs;
        for (std::size_t i = 0; i < n; ++i) xs.push_back(100.0 + static_cast<double>(i));
        SampleStore store = store_with(id("x"), xs);
        EstimateReport r = estimate_module(store, id("x"));
        std::size_t per_tail = n >= 10 ? static_cast<std::size_t>(0.10 * static_cast<double>(n)) : 0;
        CHECK(r.n_kept == n - 2 * per_tail);
    }
}

TEST_CASE("cohort filtering") {
    SampleStore store;
    store.record({id("x"), "kid", 900.0, true, std::string("primary")});
    store.record({id("x"), "kid2", 1000.0, true, std::string("primary")});
    store.record({id("x"), "grad", 60.0, true, std::string("postgrad")});
    CHECK(estimate_module(store, id("x"), std::string("postgrad")).robust_estimate == 60.0);
    CHECK(estimate_module(store, id("x"), std::string("primary")).robust_estimate == 950.0);
    CHECK_THROWS_AS(estimate_module(store, id("x"), std::string("nobody")), Error);
}

TEST_CASE("author comparison fields") {
    Registry reg = fixtures::fig1_registry();  // author estimates are 60 s
    SampleStore store = store_with(id("n"), {120.0, 120.0, 120.0});
    EstimateReport r = estimate_module(store, id("n"), {}, {}, &reg);
    REQUIRE(r.author_estimate.has_value());
    CHECK(*r.author_estimate == 60.0);
    CHECK(*r.author_delta_ratio == 2.0);
}

TEST_CASE("composition estimates over fig1 and fig2") {
    SECTION("fig1 with uniform 60 s estimates") {
        SampleStore store;  // falls back to author estimates
        CompositionEstimate ce =
            estimate_composition(store, fixtures::fig1_registry(), fixtures::fig1());
        CHECK(ce.critical_total == 300.0);
        // two root-to-sink paths: m,n,o,p,q and m,n,p,q
        REQUIRE(ce.per_path.size() == 2);
        CHECK(ce.per_path.at("m->n->o->p->q") == 300.0);
        CHECK(ce.per_path.at("m->n->p->q") == 240.0);
        CHECK(ce.min_total == 240.0);
        CHECK(ce.max_total == 300.0);
    }
    SECTION("fig2 labeled paths") {
        SampleStore store;
        CompositionEstimate ce =
            estimate_composition(store, fixtures::fig2_registry(), fixtures::fig2());
        CHECK(ce.per_path.at("a->b->d") == 240.0);
        CHECK(ce.per_path.at("a->c->d") == 210.0);
        CHECK(ce.min_total == 210.0);
        CHECK(ce.critical_total == 240.0);
    }
    SECTION("single module composition") {
        Registry reg;
        Module solo;
        solo.id = id("solo");
        solo.author_estimate_s = 42.0;
        reg.add(solo);
        Composition c("one");
        c.add_member(id("solo"));
        SampleStore store;
        CompositionEstimate ce = estimate_composition(store, reg, c);
        CHECK(ce.min_total == 42.0);
        CHECK(ce.max_total == 42.0);
        CHECK(ce.critical_total == 42.0);
    }
    SECTION("missing estimates list the offenders") {
        Registry reg;
        Module bare;
        bare.id = id("bare");
        reg.add(bare);
        Composition c("c");
        c.add_member(id("bare"));
        SampleStore store;
        try {
            estimate_composition(store, reg, c);
            FAIL("expected MissingEstimate");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::missing_estimate);
            CHECK(std::string(e.what()).find("bare") != std::string::npos);
        }
    }
}

TEST_CASE("composition totals match brute-force path enumeration") {
    std::mt19937 rng(414);
    for (int round = 0; round < 60; ++round) {
        Composition dag = oracle::random_dag(rng);
        Registry reg;
        std::map<ModuleId, double> est;
        std::uniform_real_distribution<double> dur(10.0, 600.0);
        for (const ModuleId& m : dag.members()) {
            Module mod;
            mod.id = m;
            mod.author_estimate_s = dur(rng);
            est[m] = *mod.author_estimate_s;
            reg.add(mod);
        }
        SampleStore store;
        CompositionEstimate ce = estimate_composition(store, reg, dag);
        std::vector<double> expect = oracle::path_totals(dag, est);
        std::vector<double> got;
        for (const auto& [sig, total] : ce.per_path) got.push_back(total);
        std::sort(expect.begin(), expect.end());
        std::sort(got.begin(), got.end());
        REQUIRE(got.size() == expect.size());
        for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == Approx(expect[i]));
        CHECK(ce.min_total == Approx(expect.front()));
        CHECK(ce.max_total == Approx(expect.back()));
        CHECK(ce.critical_total == Approx(expect.back()));
    }
}

TEST_CASE("critical total grows linearly when every estimate grows") {
    Composition c = fixtures::fig1();
    Registry base = fixtures::fig1_registry();
    SampleStore store;
    double before = estimate_composition(store, base, c).critical_total;
    Registry bumped;
    for (const auto& [mid, mod] : base) {
        Module m2 = mod;
        m2.author_estimate_s = *mod.author_estimate_s + 10.0;
        bumped.add(m2);
    }
    double after = estimate_composition(store, bumped, c).critical_total;
    CHECK(after - before == Approx(10.0 * 5));  // critical path has 5 modules
}

TEST_CASE("analytics findings") {
    SECTION("composition outlier at 60,60,60,600") {
        Registry reg;
        Composition c("four");
        for (const char* m : {"a", "b", "c", "slow"}) {
            Module mod;
            mod.id = id(m);
            mod.author_estimate_s = std::string(m) == "slow" ? 600.0 : 60.0;
            reg.add(mod);
            c.add_member(id(m));
        }
        SampleStore store;
        std::vector<Finding> findings = analytics(store, reg, c);
        REQUIRE(findings.size() == 1);
        CHECK(findings[0].kind == FindingKind::composition_outlier);
        CHECK(findings[0].module == id("slow"));
        CHECK(findings[0].reference == 60.0);
    }
    SECTION("author ratio inside tolerance yields nothing") {
        Registry reg;
        Module mod;
        mod.id = id("x");
        mod.author_estimate_s = 100.0;
        reg.add(mod);
        Composition c("c");
        c.add_member(id("x"));
        SampleStore store = store_with(id("x"), {105.0});
        CHECK(analytics(store, reg, c).empty());
    }
    SECTION("author ratio of 2 is flagged") {
        Registry reg;
        Module mod;
        mod.id = id("x");
        mod.author_estimate_s = 100.0;
        reg.add(mod);
        Composition c("c");
        c.add_member(id("x"));
        SampleStore store = store_with(id("x"), {200.0});
        std::vector<Finding> findings = analytics(store, reg, c);
        REQUIRE(findings.size() == 1);
        CHECK(findings[0].kind == FindingKind::over_author_estimate);
        CHECK(findings[0].value == Approx(2.0));
    }
}

TEST_CASE("search by duration window") {
    Registry reg;
    Module sixty;
    sixty.id = id("sixty");
    sixty.author_estimate_s = 60.0;
    reg.add(sixty);
    Module tri;
    tri.id = id("n");
    reg.add(tri);
    SampleStore store = store_with(id("n"), {2, 3, 290, 300, 310, 172800, 190000});

    CHECK(search_by_duration(reg, store, 50, 70) == std::set<ModuleId>{id("sixty")});
    CHECK(search_by_duration(reg, store, 0, 10).empty());  // robust 300 excluded
    CHECK(search_by_duration(reg, store, 250, 350) == std::set<ModuleId>{id("n")});
    CHECK(search_by_duration(Registry{}, store, 0, 1e9).empty());
}
