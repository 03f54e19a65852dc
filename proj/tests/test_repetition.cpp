#include <catch2/catch.hpp>

#include <random>

#include <chronocanvas/repetition.hpp>

#include "support/fixtures.hpp"

using namespace chronocanvas;
using fixtures::id;

namespace {

Registry sr_registry() {
    Registry reg;
    Module quiz;
    quiz.id = id("quiz");
    quiz.sr_aware = true;
    reg.add(quiz);
    Module article;
    article.id = id("article");
    reg.add(article);
    return reg;
}

}  // namespace

TEST_CASE("marking modules spaced-repetition-aware") {
    Registry reg = sr_registry();
    ReviewBook book;

    SECTION("assessments are accepted once marked") {
        mark_sr_aware(reg, id("article"), true);
        CHECK_NOTHROW(book.record(reg, {"u", id("article"), 2, 1000.0}));
    }
    SECTION("unmarking rejects later assessments without mutating") {
        mark_sr_aware(reg, id("quiz"), false);
        try {
            book.record(reg, {"u", id("quiz"), 2, 1000.0});
            FAIL("expected NotSrAware");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::not_sr_aware);
        }
        CHECK(book.log().empty());
        CHECK_FALSE(book.state_of("u", id("quiz")).has_value());
    }
    SECTION("unknown module") {
        CHECK_THROWS_AS(mark_sr_aware(reg, id("zz"), true), Error);
    }
}

TEST_CASE("interval schedule") {
    Registry reg = sr_registry();
    ReviewBook book;  // base 1 day, factor 2.5

    SECTION("first success uses the base interval") {
        ReviewState st = book.record(reg, {"u", id("quiz"), 2, 0.0});
        CHECK(st.interval_s == 86400.0);
        CHECK(st.due_at == 86400.0);
        CHECK(st.streak == 1);
    }
    SECTION("a 2,2,2 streak grows geometrically") {
        ReviewState st = book.record(reg, {"u", id("quiz"), 2, 0.0});
        CHECK(st.interval_s == 86400.0);
        st = book.record(reg, {"u", id("quiz"), 2, st.due_at});
        CHECK(st.interval_s == 216000.0);
        st = book.record(reg, {"u", id("quiz"), 2, st.due_at});
        CHECK(st.interval_s == 540000.0);
    }
    SECTION("grade 0 resets to base after any streak") {
        book.record(reg, {"u", id("quiz"), 3, 0.0});
        book.record(reg, {"u", id("quiz"), 3, 100.0});
        book.record(reg, {"u", id("quiz"), 3, 200.0});
        ReviewState st = book.record(reg, {"u", id("quiz"), 0, 300.0});
        CHECK(st.interval_s == 86400.0);
        CHECK(st.streak == 0);
    }
    SECTION("grade 1 keeps the interval and breaks the streak") {
        ReviewState st = book.record(reg, {"u", id("quiz"), 2, 0.0});
        st = book.record(reg, {"u", id("quiz"), 2, 100.0});
        double interval = st.interval_s;
        st = book.record(reg, {"u", id("quiz"), 1, 200.0});
        CHECK(st.interval_s == interval);
        CHECK(st.streak == 0);
        // next success restarts from base, not from the kept interval
        st = book.record(reg, {"u", id("quiz"), 2, 300.0});
        CHECK(st.interval_s == 86400.0);
    }
    SECTION("interval strictly increases under repeated success") {
        ReviewState st = book.record(reg, {"u", id("quiz"), 2, 0.0});
        double prev = st.interval_s;
        for (int i = 1; i < 12; ++i) {
            st = book.record(reg, {"u", id("quiz"), 2, st.due_at});
            CHECK(st.interval_s > prev);
            prev = st.interval_s;
        }
    }
    SECTION("grades outside the scale are rejected") {
        CHECK_THROWS_AS(book.record(reg, {"u", id("quiz"), 4, 0.0}), Error);
        CHECK_THROWS_AS(book.record(reg, {"u", id("quiz"), -1, 0.0}), Error);
    }
    SECTION("custom policy") {
        ReviewBook fast(SchedulePolicy{10.0, 3.0});
        fast.record(reg, {"u", id("quiz"), 2, 0.0});
        ReviewState st = fast.record(reg, {"u", id("quiz"), 2, 10.0});
        CHECK(st.interval_s == 30.0);
    }
}

TEST_CASE("due reviews") {
    Registry reg;
    for (const char* m : {"q1", "q2", "q3"}) {
        Module mod;
        mod.id = id(m);
        mod.sr_aware = true;
        reg.add(mod);
    }
    ReviewBook book;

    SECTION("empty book has nothing due") {
        CHECK(book.due("u", 1e12).empty());
    }
    SECTION("one overdue module") {
        book.record(reg, {"u", id("q1"), 2, 0.0});
        std::vector<DueReview> due = book.due("u", 86400.0 + 100.0);
        REQUIRE(due.size() == 1);
        CHECK(due[0].module == id("q1"));
        CHECK(due[0].overdue_s == 100.0);
    }
    SECTION("staggered dues sort most-overdue first") {
        book.record(reg, {"u", id("q1"), 2, 0.0});     // due 86400
        book.record(reg, {"u", id("q2"), 2, 5000.0});  // due 91400
        book.record(reg, {"u", id("q3"), 2, 9000.0});  // due 95400
        std::vector<DueReview> due = book.due("u", 200000.0);
        REQUIRE(due.size() == 3);
        CHECK(due[0].module == id("q1"));
        CHECK(due[1].module == id("q2"));
        CHECK(due[2].module == id("q3"));
        CHECK(due[0].overdue_s > due[1].overdue_s);
    }
    SECTION("never returns a future item") {
        std::mt19937 rng(8);
        std::uniform_int_distribution<int> grade(0, 3);
        std::uniform_real_distribution<double> when(0.0, 1e6);
        double t = 0.0;
        for (int i = 0; i < 500; ++i) {
            t += when(rng);
            book.record(reg, {"u", id(i % 2 ? "q1" : "q2"), grade(rng), t});
            double now = t + when(rng);
            for (const DueReview& d : book.due("u", now)) {
                CHECK(d.due_at <= now);
                CHECK(d.overdue_s >= 0.0);
            }
        }
    }
    SECTION("users are independent") {
        book.record(reg, {"alice", id("q1"), 2, 0.0});
        CHECK(book.due("bob", 1e9).empty());
    }
}

TEST_CASE("retention stats") {
    Registry reg = sr_registry();
    ReviewBook book;

    SECTION("mean grade and fail fraction") {
        book.record(reg, {"u1", id("quiz"), 2, 0.0});
        book.record(reg, {"u1", id("quiz"), 3, 1.0});
        book.record(reg, {"u2", id("quiz"), 3, 2.0});
        auto by_module = book.retention(RetentionScope::by_module);
        REQUIRE(by_module.count("quiz") == 1);
        CHECK(by_module.at("quiz").n == 3);
        CHECK(by_module.at("quiz").mean_grade == Approx(8.0 / 3.0));
        CHECK(by_module.at("quiz").fail_fraction == 0.0);
    }
    SECTION("no data yields an empty summary") {
        CHECK(book.retention(RetentionScope::by_module).empty());
        CHECK(book.retention(RetentionScope::by_user).empty());
    }
    SECTION("per-user and per-module totals reconcile") {
        mark_sr_aware(reg, id("article"), true);
        std::mt19937 rng(3);
        std::uniform_int_distribution<int> grade(0, 3);
        for (int i = 0; i < 40; ++i)
            book.record(reg, {i % 3 ? "a" : "b", id(i % 2 ? "quiz" : "article"),
                              grade(rng), static_cast<double>(i)});
        std::size_t by_user = 0, by_module = 0;
        for (const auto& [k, e] : book.retention(RetentionScope::by_user)) by_user += e.n;
        for (const auto& [k, e] : book.retention(RetentionScope::by_module)) by_module += e.n;
        CHECK(by_user == 40);
        CHECK(by_module == 40);
    }
    SECTION("grade 0 counts into the fail fraction") {
        book.record(reg, {"u", id("quiz"), 0, 0.0});
        book.record(reg, {"u", id("quiz"), 2, 1.0});
        CHECK(book.retention(RetentionScope::by_module).at("quiz").fail_fraction == 0.5);
    }
}

TEST_CASE("review book round-trips through its log") {
    Registry reg = sr_registry();
    ReviewBook book(SchedulePolicy{86400.0, 2.5});
    book.record(reg, {"u", id("quiz"), 2, 0.0});
    book.record(reg, {"u", id("quiz"), 2, 86400.0});
    ReviewBook copy = ReviewBook::from_log(book.policy(), book.log());
    REQUIRE(copy.state_of("u", id("quiz")).has_value());
    CHECK(copy.state_of("u", id("quiz"))->interval_s == book.state_of("u", id("quiz"))->interval_s);
    CHECK(copy.state_of("u", id("quiz"))->due_at == book.state_of("u", id("quiz"))->due_at);
}
