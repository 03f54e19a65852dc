#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "chronocanvas/graph.hpp"

namespace chronocanvas {

namespace detail {

inline std::set<ModuleId> reachable_from(const Composition& c, const ModuleId& start) {
    std::set<ModuleId> seen;
    std::vector<ModuleId> stack{start};
    while (!stack.empty()) {
        ModuleId cur = stack.back();
        stack.pop_back();
        for (const auto& next : c.out_neighbors(cur))
            if (seen.insert(next).second) stack.push_back(next);
    }
    seen.erase(start);
    return seen;
}

inline void require_in(const Composition& c, const ModuleId& id) {
    if (!c.contains(id))
        throw Error(Errc::unknown_module,
                    "module '" + id.str() + "' is not in composition '" + c.id() + "'");
}

/// Kahn topological order; deterministic because the ready set is ordered.
inline std::vector<ModuleId> topological_order(const Composition& c) {
    std::map<ModuleId, int> indegree;
    for (const auto& m : c.members()) indegree[m] = 0;
    for (const auto& e : c.edges()) ++indegree[e.to];
    std::set<ModuleId> ready;
    for (const auto& [m, d] : indegree)
        if (d == 0) ready.insert(m);
    std::vector<ModuleId> order;
    order.reserve(indegree.size());
    while (!ready.empty()) {
        ModuleId cur = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(cur);
        for (const auto& next : c.out_neighbors(cur))
            if (--indegree[next] == 0) ready.insert(next);
    }
    if (order.size() != c.members().size())
        throw Error(Errc::cycle, "composition '" + c.id() + "' is not acyclic");
    return order;
}

}  // namespace detail

/// Everything that transitively follows `id`, excluding `id` itself.
inline std::set<ModuleId> successors_of(const Composition& c, const ModuleId& id) {
    detail::require_in(c, id);
    return detail::reachable_from(c, id);
}

/// Everything that transitively precedes `id` (the dual of successors_of).
inline std::set<ModuleId> predecessors_of(const Composition& c, const ModuleId& id) {
    detail::require_in(c, id);
    std::set<ModuleId> result;
    for (const auto& m : c.members())
        if (m != id && detail::reachable_from(c, m).count(id)) result.insert(m);
    return result;
}

/// Modules strictly between lo and hi: successors of lo that are also
/// predecessors of hi.
inline std::set<ModuleId> between(const Composition& c, const ModuleId& lo, const ModuleId& hi) {
    detail::require_in(c, lo);
    detail::require_in(c, hi);
    std::set<ModuleId> succ = detail::reachable_from(c, lo);
    std::set<ModuleId> result;
    for (const auto& m : succ)
        if (detail::reachable_from(c, m).count(hi)) result.insert(m);
    return result;
}

/// The full transitive order relation of a composition, computed once and then
/// queried read-only. Compositions are immutable snapshots, so there is no
/// invalidation to manage; rebuild after mutating.
class OrderRelation {
public:
    static OrderRelation of(const Composition& c) {
        OrderRelation rel;
        for (const auto& m : c.members()) {
            std::set<ModuleId> succ = detail::reachable_from(c, m);
            for (const auto& s : succ) rel.predecessors_[s].insert(m);
            rel.successors_[m] = std::move(succ);
            rel.predecessors_.try_emplace(m);
        }
        return rel;
    }

    const std::set<ModuleId>& successors(const ModuleId& id) const { return lookup(successors_, id); }
    const std::set<ModuleId>& predecessors(const ModuleId& id) const { return lookup(predecessors_, id); }

    bool follows(const ModuleId& earlier, const ModuleId& later) const {
        auto it = successors_.find(earlier);
        return it != successors_.end() && it->second.count(later) != 0;
    }

    const std::map<ModuleId, std::set<ModuleId>>& all_successors() const { return successors_; }

private:
    static const std::set<ModuleId>& lookup(const std::map<ModuleId, std::set<ModuleId>>& m,
                                            const ModuleId& id) {
        auto it = m.find(id);
        if (it == m.end())
            throw Error(Errc::unknown_module, "module '" + id.str() + "' is not in the relation");
        return it->second;
    }

    std::map<ModuleId, std::set<ModuleId>> successors_;
    std::map<ModuleId, std::set<ModuleId>> predecessors_;
};

/// A module's slot in the derived schedule of a composition. Rank is the
/// longest-path depth from any source: a learner must finish every
/// predecessor on their path, so the latest start dominates.
struct Timespan {
    ModuleId module;
    int rank = 0;
    std::optional<double> est_start;
    std::optional<double> est_end;
};

/// One timespan per module, ordered by (rank, id). When `estimates` is given
/// (seconds per module), est_start is the max est_end over predecessors and
/// est_end adds the module's own estimate; a module without an estimate then
/// raises MissingEstimate.
inline std::vector<Timespan> distill_timespans(const Composition& c,
                                               const std::map<ModuleId, double>* estimates = nullptr) {
    std::vector<ModuleId> order = detail::topological_order(c);
    std::map<ModuleId, Timespan> spans;
    for (const auto& m : order) {
        Timespan span{m, 0, std::nullopt, std::nullopt};
        for (const auto& pred : c.in_neighbors(m)) {
            const Timespan& ps = spans.at(pred);
            span.rank = std::max(span.rank, ps.rank + 1);
            if (estimates) span.est_start = std::max(span.est_start.value_or(0.0), *ps.est_end);
        }
        if (estimates) {
            auto it = estimates->find(m);
            if (it == estimates->end())
                throw Error(Errc::missing_estimate, "no estimate for module '" + m.str() + "'");
            if (!span.est_start) span.est_start = 0.0;
            span.est_end = *span.est_start + it->second;
        }
        spans.emplace(m, span);
    }
    std::vector<Timespan> out;
    out.reserve(spans.size());
    for (const auto& [m, span] : spans) out.push_back(span);
    std::stable_sort(out.begin(), out.end(), [](const Timespan& a, const Timespan& b) {
        return a.rank != b.rank ? a.rank < b.rank : a.module < b.module;
    });
    return out;
}

}  // namespace chronocanvas
