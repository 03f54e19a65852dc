#pragma once

// In-code builders for the two figure compositions used across the suites.

#include <chronocanvas/graph.hpp>

namespace fixtures {

using namespace chronocanvas;

inline ModuleId id(const char* s) { return ModuleId(s); }
inline ParticipantId pid(const char* s) { return ParticipantId(s); }

/// m -> n -> {o, p}, o -> p, p -> q.
inline Composition fig1() {
    Composition c("fig1");
    for (const char* m : {"m", "n", "o", "p", "q"}) c.add_member(id(m));
    c.add_flow({id("m"), id("n"), {}});
    c.add_flow({id("n"), id("o"), {}});
    c.add_flow({id("n"), id("p"), {}});
    c.add_flow({id("o"), id("p"), {}});
    c.add_flow({id("p"), id("q"), {}});
    return c;
}

inline Registry fig1_registry() {
    Registry reg;
    auto add = [&](const char* m, const char* type, double difficulty) {
        Module mod;
        mod.id = id(m);
        if (type) mod.type_tag = type;
        mod.author_estimate_s = 60.0;
        mod.difficulty = difficulty;
        mod.sr_aware = std::string(m) == "q";
        reg.add(mod);
    };
    add("m", nullptr, 0.25);
    add("n", "article", 0.5);
    add("o", "video", 0.5);
    add("p", "video", 0.5);
    add("q", "quiz", 0.75);
    return reg;
}

/// a -> b -> d for participant A, a -> c -> d for participant B.
inline Composition fig2() {
    Composition c("fig2");
    for (const char* m : {"a", "b", "c", "d"}) c.add_member(id(m));
    c.add_flow({id("a"), id("b"), {pid("A")}});
    c.add_flow({id("b"), id("d"), {pid("A")}});
    c.add_flow({id("a"), id("c"), {pid("B")}});
    c.add_flow({id("c"), id("d"), {pid("B")}});
    return c;
}

inline Registry fig2_registry() {
    Registry reg;
    auto add = [&](const char* m, double est) {
        Module mod;
        mod.id = id(m);
        mod.author_estimate_s = est;
        mod.topic_tag = "compilers";
        reg.add(mod);
    };
    add("a", 60.0);
    add("b", 120.0);
    add("c", 90.0);
    add("d", 60.0);
    return reg;
}

}  // namespace fixtures
