#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "chronocanvas/core.hpp"

namespace chronocanvas {

/// An e-learning unit: an opaque metadata node on the canvas. Content (the
/// article, the quiz, ...) never enters the library.
struct Module {
    ModuleId id;
    std::optional<std::string> type_tag;
    std::optional<std::string> topic_tag;
    std::optional<double> author_estimate_s;
    bool sr_aware = false;
    std::optional<double> difficulty;  // in [0,1]

    void validate() const {
        if (id.empty()) throw Error(Errc::schema_error, "module without id");
        if (author_estimate_s && *author_estimate_s <= 0.0)
            throw Error(Errc::non_positive_duration,
                        "author estimate for '" + id.str() + "' must be > 0");
        if (difficulty && (*difficulty < 0.0 || *difficulty > 1.0))
            throw Error(Errc::schema_error,
                        "difficulty for '" + id.str() + "' must lie in [0,1]");
    }
};

/// A flow: the user is sent from `from` to `to`. An empty participant set
/// means the edge is shared by the whole group; otherwise it belongs to the
/// listed participants only.
struct FlowEdge {
    ModuleId from;
    ModuleId to;
    std::set<ParticipantId> participants;
};

/// The registry of all known modules (the set every composition draws from).
class Registry {
public:
    ModuleId add(Module module) {
        module.validate();
        if (module.type_tag) module.type_tag = normalize_tag(*module.type_tag);
        if (module.topic_tag) module.topic_tag = normalize_tag(*module.topic_tag);
        auto [it, inserted] = modules_.emplace(module.id, std::move(module));
        if (!inserted)
            throw Error(Errc::duplicate_id, "module '" + it->first.str() + "' already registered");
        return it->first;
    }

    const Module& at(const ModuleId& id) const {
        auto it = modules_.find(id);
        if (it == modules_.end())
            throw Error(Errc::unknown_module, "module '" + id.str() + "' is not registered");
        return it->second;
    }

    const Module* find(const ModuleId& id) const noexcept {
        auto it = modules_.find(id);
        return it == modules_.end() ? nullptr : &it->second;
    }

    bool contains(const ModuleId& id) const noexcept { return modules_.count(id) != 0; }

    void set_sr_aware(const ModuleId& id, bool flag) {
        auto it = modules_.find(id);
        if (it == modules_.end())
            throw Error(Errc::unknown_module, "module '" + id.str() + "' is not registered");
        it->second.sr_aware = flag;
    }

    std::size_t size() const noexcept { return modules_.size(); }

    auto begin() const { return modules_.begin(); }
    auto end() const { return modules_.end(); }

private:
    std::map<ModuleId, Module> modules_;
};

/// A DAG of modules connected by flow edges. Acyclicity is a closed
/// invariant: edges are rejected eagerly if they would close a cycle, so a
/// stored composition is always a valid chronology.
class Composition {
public:
    Composition() = default;
    explicit Composition(std::string id) : id_(std::move(id)) {}

    const std::string& id() const noexcept { return id_; }
    void set_id(std::string id) { id_ = std::move(id); }

    /// Membership is set-semantic: a composition cannot contain a module twice.
    void add_member(const ModuleId& id) {
        if (!modules_.insert(id).second)
            throw Error(Errc::duplicate_id, "module '" + id.str() + "' already in composition");
    }

    bool contains(const ModuleId& id) const noexcept { return modules_.count(id) != 0; }

    const std::set<ModuleId>& members() const noexcept { return modules_; }

    /// Inserts a flow edge. Re-adding an existing (from,to) pair merges the
    /// participant labels; a shared edge (empty label set) stays shared.
    void add_flow(const FlowEdge& edge) {
        if (edge.from == edge.to)
            throw Error(Errc::self_loop, "flow '" + edge.from.str() + "' -> itself");
        require_member(edge.from);
        require_member(edge.to);
        auto key = std::make_pair(edge.from, edge.to);
        auto it = edges_.find(key);
        if (it == edges_.end()) {
            if (reaches(edge.to, edge.from))
                throw Error(Errc::cycle, "flow '" + edge.from.str() + "' -> '" + edge.to.str() +
                                             "' would close a cycle");
            edges_.emplace(key, edge.participants);
        } else {
            if (it->second.empty() || edge.participants.empty())
                it->second.clear();
            else
                it->second.insert(edge.participants.begin(), edge.participants.end());
        }
    }

    bool has_edge(const ModuleId& from, const ModuleId& to) const noexcept {
        return edges_.count(std::make_pair(from, to)) != 0;
    }

    std::vector<FlowEdge> edges() const {
        std::vector<FlowEdge> out;
        out.reserve(edges_.size());
        for (const auto& [key, parts] : edges_) out.push_back({key.first, key.second, parts});
        return out;
    }

    std::size_t edge_count() const noexcept { return edges_.size(); }

    std::set<ModuleId> out_neighbors(const ModuleId& id) const {
        std::set<ModuleId> out;
        for (auto it = edges_.lower_bound({id, ModuleId{}}); it != edges_.end(); ++it) {
            if (it->first.first != id) break;
            out.insert(it->first.second);
        }
        return out;
    }

    std::set<ModuleId> in_neighbors(const ModuleId& id) const {
        std::set<ModuleId> in;
        for (const auto& [key, parts] : edges_)
            if (key.second == id) in.insert(key.first);
        return in;
    }

    std::set<ModuleId> sources() const {
        std::set<ModuleId> src = modules_;
        for (const auto& [key, parts] : edges_) src.erase(key.second);
        return src;
    }

    std::set<ModuleId> sinks() const {
        std::set<ModuleId> snk = modules_;
        for (const auto& [key, parts] : edges_) snk.erase(key.first);
        return snk;
    }

    /// The subgraph a given participant traverses: shared edges plus edges
    /// labeled with that participant. Modules left without any incident edge
    /// are dropped. An unknown participant therefore sees the shared-only view.
    Composition participant_view(const ParticipantId& participant) const {
        Composition view(id_);
        std::set<ModuleId> touched;
        for (const auto& [key, parts] : edges_) {
            if (parts.empty() || parts.count(participant)) {
                touched.insert(key.first);
                touched.insert(key.second);
            }
        }
        for (const auto& m : touched) view.modules_.insert(m);
        for (const auto& [key, parts] : edges_)
            if (parts.empty() || parts.count(participant)) view.edges_.emplace(key, parts);
        return view;
    }

private:
    void require_member(const ModuleId& id) const {
        if (!modules_.count(id))
            throw Error(Errc::unknown_module,
                        "module '" + id.str() + "' is not a member of composition '" + id_ + "'");
    }

    // true iff `to` is reachable from `from` over existing edges
    bool reaches(const ModuleId& from, const ModuleId& to) const {
        if (from == to) return true;
        std::set<ModuleId> seen;
        std::vector<ModuleId> stack{from};
        while (!stack.empty()) {
            ModuleId cur = stack.back();
            stack.pop_back();
            if (!seen.insert(cur).second) continue;
            for (const auto& next : out_neighbors(cur)) {
                if (next == to) return true;
                stack.push_back(next);
            }
        }
        return false;
    }

    std::string id_;
    std::set<ModuleId> modules_;
    std::map<std::pair<ModuleId, ModuleId>, std::set<ParticipantId>> edges_;
};

/// A composition file pairs the graph with the module records it references.
struct CompositionDoc {
    Registry registry;
    Composition composition;
};

}  // namespace chronocanvas
