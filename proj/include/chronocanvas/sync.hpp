#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "chronocanvas/graph.hpp"

namespace chronocanvas {

enum class VotingMethod { plurality, condorcet };

inline const char* to_string(VotingMethod m) {
    return m == VotingMethod::plurality ? "plurality" : "condorcet";
}

/// Who acts for the group in a realtime scope. `none` lets every participant
/// vote; `fixed` pins one designated participant; `hot_seat` rotates the
/// holder by a heuristic.
struct SeatPolicy {
    enum class Kind { none, fixed, hot_seat };
    enum class Rotation { round_robin, instructor_priority };
    Kind kind = Kind::none;
    std::optional<ParticipantId> holder;  // fixed: required; hot_seat: optional initial holder
    Rotation rotation = Rotation::round_robin;
};

/// Barrier release rule. `all` waits for everyone; `quorum` releases once k
/// have arrived; `timeout` releases once timeout_s has elapsed since the
/// first arrival. Quorum and timeout releases flag the missing participants
/// as stragglers.
struct StragglerPolicy {
    enum class Kind { all, quorum, timeout };
    Kind kind = Kind::all;
    int quorum = 1;
    double timeout_s = 0.0;
};

struct TimeWindow {
    double start = 0.0;
    double end = 0.0;
};

enum class LatePolicy { block, allow };

struct RealtimeConfig {
    VotingMethod voting = VotingMethod::plurality;
    SeatPolicy seat;
};

struct WaitForMeConfig {
    std::set<ModuleId> sync_points;
    StragglerPolicy straggler;
    bool instructors_count = false;  // instructors do not hold up barriers by default
};

struct TimeslotConfig {
    std::map<ModuleId, TimeWindow> windows;
    LatePolicy late = LatePolicy::block;
};

using ModeConfig = std::variant<RealtimeConfig, WaitForMeConfig, TimeslotConfig>;

/// A node in the nested synchronization-mode tree. A child governs the subset
/// of modules in its scope; every constraint on the path from the root down
/// to a module's leaf applies when entering that module. An empty scope on
/// the root means the whole composition.
struct ModeNode {
    ModeConfig config = WaitForMeConfig{};
    std::set<ModuleId> scope;
    std::vector<ModeNode> children;
};

struct PollId {
    int value = -1;
};

struct Ballot {
    ParticipantId voter;
    std::vector<std::string> ranking;  // plurality: exactly one option
};

struct PollOutcome {
    std::string winner;
    VotingMethod method = VotingMethod::plurality;
    bool had_condorcet_winner = false;
    std::map<std::string, int> scores;  // plurality counts, or Copeland pairwise wins
};

struct BarrierStatus {
    std::set<ParticipantId> arrived;
    std::set<ParticipantId> waiting_for;
    std::set<ParticipantId> stragglers;
    bool released = false;
};

struct AdvanceResult {
    bool entered = false;
    std::optional<Errc> blocked_by;

    static AdvanceResult ok() { return {true, std::nullopt}; }
    static AdvanceResult blocked(Errc why) { return {false, why}; }
};

enum class Progress { on_track, behind, ahead };

inline const char* to_string(Progress p) {
    switch (p) {
        case Progress::on_track: return "on_track";
        case Progress::behind: return "behind";
        case Progress::ahead: return "ahead";
    }
    return "unknown";
}

struct TimeslotStatus {
    ParticipantId participant;
    std::optional<ModuleId> module;  // empty once done
    Progress progress = Progress::on_track;
};

/// One entry of the append-only session log. Everything the engine does is an
/// event; identical event sequences produce identical logs.
struct SessionEvent {
    int seq = 0;
    double at = 0.0;
    std::string kind;
    std::optional<ParticipantId> participant;
    std::optional<ModuleId> module;
    std::map<std::string, std::string> detail;
};

namespace detail {

inline std::string join_ids(const std::set<ParticipantId>& ids) {
    std::string out;
    for (const auto& id : ids) {
        if (!out.empty()) out += ",";
        out += id.str();
    }
    return out;
}

inline std::string join_strings(const std::vector<std::string>& xs, const char* sep) {
    std::string out;
    for (const auto& x : xs) {
        if (!out.empty()) out += sep;
        out += x;
    }
    return out;
}

}  // namespace detail

/// A live collaborative run of a composition under a nested tree of sync
/// modes. The session is a serial state machine over an explicit event-time
/// clock: no wall-clock reads, so identical inputs replay identically.
/// Distinct sessions are independent; one session must be driven from a
/// single ordered intake.
class Session {
public:
    struct Poll {
        PollId id;
        ModuleId module;
        std::vector<std::string> options;
        VotingMethod method = VotingMethod::plurality;
        double opened_at = 0.0;
        std::map<ParticipantId, std::vector<std::string>> ballots;
        std::optional<PollOutcome> outcome;
    };

    Session(Composition composition, std::vector<Participant> participants, ModeNode mode_tree,
            double opened_at = 0.0)
        : composition_(std::move(composition)),
          mode_tree_(std::move(mode_tree)),
          participants_(std::move(participants)),
          clock_(opened_at) {
        if (participants_.empty())
            throw Error(Errc::empty_participants, "a session needs at least one participant");
        for (const auto& p : participants_) {
            if (!roles_.emplace(p.id, p.role).second)
                throw Error(Errc::duplicate_id, "participant '" + p.id.str() + "' joined twice");
        }
        flatten_and_validate();
        init_views_and_positions();
        init_barriers();
        init_seats();
        std::set<ParticipantId> ids;
        for (const auto& p : participants_) ids.insert(p.id);
        push_event(opened_at, "session_opened", std::nullopt, std::nullopt,
                   {{"participants", detail::join_ids(ids)}});
    }

    // --- queries ---------------------------------------------------------

    const Composition& composition() const noexcept { return composition_; }
    const ModeNode& mode_tree() const noexcept { return mode_tree_; }
    const std::vector<Participant>& participants() const noexcept { return participants_; }
    const std::vector<SessionEvent>& log() const noexcept { return log_; }
    double clock() const noexcept { return clock_; }

    const Composition& view_of(const ParticipantId& p) const { return views_.at(require(p)); }

    /// Current module, or nullopt once the participant is done.
    std::optional<ModuleId> position(const ParticipantId& p) const {
        return positions_.at(require(p));
    }

    bool done(const ParticipantId& p) const { return !positions_.at(require(p)).has_value(); }

    const std::map<ParticipantId, std::optional<ModuleId>>& positions() const noexcept {
        return positions_;
    }

    bool realtime_governs(const ModuleId& m) const { return realtime_node_of(m) >= 0; }

    const RealtimeConfig* realtime_config_at(const ModuleId& m) const {
        int idx = realtime_node_of(m);
        return idx < 0 ? nullptr : &std::get<RealtimeConfig>(nodes_[idx].config);
    }

    std::optional<StragglerPolicy> straggler_policy_at(const ModuleId& sync_point) const {
        auto it = barriers_.find(sync_point);
        if (it == barriers_.end()) return std::nullopt;
        return std::get<WaitForMeConfig>(nodes_[it->second.node].config).straggler;
    }

    std::optional<TimeWindow> window_at(const ModuleId& m) const {
        std::optional<TimeWindow> found;
        for (int idx : chain_of(m)) {
            if (const auto* ts = std::get_if<TimeslotConfig>(&nodes_[idx].config)) {
                auto it = ts->windows.find(m);
                if (it != ts->windows.end()) found = it->second;  // deepest wins
            }
        }
        return found;
    }

    std::optional<ParticipantId> seat_holder() const {
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            auto it = seat_holder_.find(static_cast<int>(i));
            if (it != seat_holder_.end()) return it->second;
        }
        return std::nullopt;
    }

    /// Holder of the seat governing a given module, if any seat is active there.
    std::optional<ParticipantId> seat_holder_at(const ModuleId& m) const {
        int idx = realtime_node_of(m);
        if (idx < 0) return std::nullopt;
        auto it = seat_holder_.find(idx);
        if (it == seat_holder_.end()) return std::nullopt;
        return it->second;
    }

    std::vector<ModuleId> sync_points() const {
        std::vector<ModuleId> out;
        for (const auto& [sp, b] : barriers_) out.push_back(sp);
        return out;
    }

    BarrierStatus barrier_status(const ModuleId& sync_point) const {
        const BarrierState& b = barrier(sync_point);
        BarrierStatus st;
        for (const auto& [p, t] : b.arrivals) st.arrived.insert(p);
        for (const auto& p : b.counted)
            if (!b.arrivals.count(p)) st.waiting_for.insert(p);
        st.stragglers = b.stragglers;
        st.released = b.released;
        return st;
    }

    /// behind: the window of the participant's position already closed;
    /// ahead: it has not opened yet. Done participants are on_track.
    std::vector<TimeslotStatus> timeslot_check(double now) const {
        std::vector<TimeslotStatus> out;
        for (const auto& p : participants_) {
            TimeslotStatus st{p.id, positions_.at(p.id), Progress::on_track};
            if (st.module) {
                std::optional<TimeWindow> w = window_at(*st.module);
                if (w && w->end < now)
                    st.progress = Progress::behind;
                else if (w && w->start > now)
                    st.progress = Progress::ahead;
            }
            out.push_back(std::move(st));
        }
        return out;
    }

    // --- commands --------------------------------------------------------

    PollId open_poll(const ModuleId& module, std::vector<std::string> options,
                     std::optional<VotingMethod> method, double at) {
        advance_clock(at);
        if (!composition_.contains(module))
            throw Error(Errc::unknown_module, "no module '" + module.str() + "' in session");
        const RealtimeConfig* rt = realtime_config_at(module);
        if (!rt)
            throw Error(Errc::not_realtime_scope,
                        "module '" + module.str() + "' is not governed by a realtime scope");
        auto open = open_poll_at_.find(module);
        if (open != open_poll_at_.end())
            throw Error(Errc::poll_already_open,
                        "an open poll already exists at '" + module.str() + "'");
        std::set<std::string> distinct(options.begin(), options.end());
        if (options.empty() || distinct.size() != options.size())
            throw Error(Errc::schema_error, "poll options must be nonempty and distinct");
        Poll poll;
        poll.id.value = static_cast<int>(polls_.size());
        poll.module = module;
        poll.options = std::move(options);
        poll.method = method.value_or(rt->voting);
        poll.opened_at = at;
        open_poll_at_[module] = poll.id.value;
        push_event(at, "poll_opened", std::nullopt, module,
                   {{"options", detail::join_strings(poll.options, ",")},
                    {"method", to_string(poll.method)}});
        polls_.push_back(std::move(poll));
        return polls_.back().id;
    }

    void cast_ballot(PollId id, const Ballot& ballot, double at) {
        advance_clock(at);
        Poll& poll = poll_ref(id);
        require(ballot.voter);
        const RealtimeConfig* rt = realtime_config_at(poll.module);
        if (rt && rt->seat.kind != SeatPolicy::Kind::none) {
            const ParticipantId& holder = seat_holder_.at(realtime_node_of(poll.module));
            if (ballot.voter != holder)
                throw Error(Errc::not_seat_holder, "'" + ballot.voter.str() +
                                                       "' does not hold the seat ('" +
                                                       holder.str() + "' does)");
        }
        validate_ballot(poll, ballot);
        poll.ballots[ballot.voter] = ballot.ranking;  // resubmission replaces
        push_event(at, "ballot_cast", ballot.voter, poll.module,
                   {{"ranking", detail::join_strings(ballot.ranking, ">")}});
    }

    /// Resolves and closes the poll. Plurality: most votes. Condorcet: the
    /// option beating every other pairwise; when none exists the Copeland
    /// leader (most pairwise wins) is used. All ties break by option id.
    PollOutcome tally(PollId id, double at) {
        advance_clock(at);
        Poll& poll = poll_ref(id);
        if (poll.ballots.empty())
            throw Error(Errc::no_ballots, "poll at '" + poll.module.str() + "' has no ballots");
        PollOutcome outcome = poll.method == VotingMethod::plurality ? tally_plurality(poll)
                                                                     : tally_condorcet(poll);
        poll.outcome = outcome;
        open_poll_at_.erase(poll.module);
        resolved_winner_[poll.module] = outcome.winner;
        push_event(at, "poll_resolved", std::nullopt, poll.module,
                   {{"winner", outcome.winner},
                    {"method", to_string(outcome.method)},
                    {"condorcet_winner", outcome.had_condorcet_winner ? "true" : "false"}});
        return outcome;
    }

    /// Moves a participant along one edge of their view, subject to every
    /// mode on the target's governing chain. Entering an unreleased barrier
    /// records the arrival and reports blocked instead of throwing: the
    /// arrival itself must persist, and the release (whenever the straggler
    /// policy is satisfied) then moves every queued participant in.
    AdvanceResult advance(const ParticipantId& participant, const ModuleId& to, double at) {
        advance_clock(at);
        require(participant);
        const std::optional<ModuleId>& pos = positions_.at(participant);
        if (!pos)
            throw Error(Errc::illegal_move, "'" + participant.str() + "' is already done");
        if (!composition_.contains(to))
            throw Error(Errc::unknown_module, "no module '" + to.str() + "' in session");
        if (!views_.at(participant).has_edge(*pos, to))
            throw Error(Errc::illegal_move, "no flow '" + pos->str() + "' -> '" + to.str() +
                                                "' in view of '" + participant.str() + "'");

        if (std::optional<TimeWindow> w = window_at(to)) {
            if (at < w->start)
                throw Error(Errc::window_not_open, "window for '" + to.str() + "' opens at " +
                                                       std::to_string(w->start));
            if (at > w->end && timeslot_late_policy(to) == LatePolicy::block)
                throw Error(Errc::window_closed, "window for '" + to.str() + "' closed at " +
                                                     std::to_string(w->end));
        }

        // Voted progression applies to moves out of a realtime-governed
        // module; entering the realtime scope from outside is not gated.
        if (realtime_governs(*pos)) {
            auto it = resolved_winner_.find(*pos);
            if (it == resolved_winner_.end() || it->second != to.str())
                throw Error(Errc::poll_required, "leaving '" + pos->str() +
                                                     "' requires a resolved poll selecting '" +
                                                     to.str() + "'");
        }

        auto bit = barriers_.find(to);
        if (bit != barriers_.end()) {
            BarrierState& b = bit->second;
            bool first_time = !b.arrivals.count(participant);
            if (first_time) {
                b.arrivals.emplace(participant, at);
                std::map<std::string, std::string> d;
                if (b.released && b.stragglers.count(participant)) d["straggler"] = "true";
                push_event(at, "barrier_arrival", participant, to, d);
            }
            if (!b.released) {
                try_release(to, b, at);
                if (!b.released) {
                    b.blocked.insert(participant);
                    return AdvanceResult::blocked(Errc::barrier_blocked);
                }
            }
        }

        move(participant, to, at, {});
        return AdvanceResult::ok();
    }

    /// Marks the participant's current module finished; at a sink of their
    /// view this also marks the participant done.
    void complete(const ParticipantId& participant, double at) {
        advance_clock(at);
        require(participant);
        std::optional<ModuleId>& pos = positions_.at(participant);
        if (!pos)
            throw Error(Errc::illegal_move, "'" + participant.str() + "' is already done");
        ModuleId m = *pos;
        push_event(at, "completed", participant, m, {});
        if (views_.at(participant).out_neighbors(m).empty()) {
            pos = std::nullopt;
            push_event(at, "done", participant, m, {});
        }
    }

    ParticipantId rotate_seat(double at) {
        advance_clock(at);
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const auto* rt = std::get_if<RealtimeConfig>(&nodes_[i].config);
            if (!rt || rt->seat.kind != SeatPolicy::Kind::hot_seat) continue;
            int idx = static_cast<int>(i);
            const std::vector<ParticipantId>& order = rotation_order_.at(idx);
            ParticipantId& holder = seat_holder_.at(idx);
            auto pos = std::find(order.begin(), order.end(), holder);
            holder = order[(static_cast<std::size_t>(pos - order.begin()) + 1) % order.size()];
            push_event(at, "seat_rotated", holder, std::nullopt, {});
            return holder;
        }
        throw Error(Errc::not_seat_mode, "no hot-seat realtime scope in this session");
    }

    /// Instructor override: releases a barrier regardless of policy.
    void force_release(const ModuleId& sync_point, const ParticipantId& by, double at) {
        advance_clock(at);
        require(by);
        if (roles_.at(by) != Role::instructor)
            throw Error(Errc::illegal_move,
                        "only an instructor may force-release ('" + by.str() + "' is a learner)");
        BarrierState& b = barrier(sync_point);
        if (b.released) return;
        push_event(at, "instructor_override", by, sync_point, {});
        release(sync_point, b, at);
    }

    /// Opaque data hook: a participant points at a prior module (e.g. to back
    /// an argument). No chat content is carried, only the reference.
    void reference(const ParticipantId& participant, const ModuleId& module, double at) {
        advance_clock(at);
        require(participant);
        if (!composition_.contains(module))
            throw Error(Errc::unknown_module, "no module '" + module.str() + "' in session");
        push_event(at, "reference", participant, module, {});
    }

    /// Advances the session clock only; timeout barriers due by `at` release.
    void tick(double at) {
        advance_clock(at);
        push_event(at, "tick", std::nullopt, std::nullopt, {});
    }

    const std::vector<Poll>& polls() const noexcept { return polls_; }

private:
    struct FlatNode {
        ModeConfig config;
        std::set<ModuleId> scope;
        int parent = -1;
    };

    struct BarrierState {
        int node = -1;
        std::set<ParticipantId> counted;
        std::map<ParticipantId, double> arrivals;
        std::set<ParticipantId> blocked;
        std::set<ParticipantId> stragglers;
        bool released = false;
        double released_at = 0.0;
    };

    // --- setup -----------------------------------------------------------

    void flatten_and_validate() {
        ModeNode root = mode_tree_;
        if (root.scope.empty()) root.scope = composition_.members();
        flatten(root, -1);
        for (const auto& node : nodes_) {
            for (const auto& m : node.scope)
                if (!composition_.contains(m))
                    throw Error(Errc::invalid_mode_tree,
                                "mode scope names unknown module '" + m.str() + "'");
        }
        for (const auto& m : composition_.members()) {
            if (!leaf_of_.count(m))
                throw Error(Errc::invalid_mode_tree,
                            "module '" + m.str() + "' is not covered by any leaf mode");
        }
    }

    void flatten(const ModeNode& node, int parent) {
        int idx = static_cast<int>(nodes_.size());
        nodes_.push_back({node.config, node.scope, parent});
        if (parent >= 0) {
            for (const auto& m : node.scope)
                if (!nodes_[parent].scope.count(m))
                    throw Error(Errc::invalid_mode_tree, "child scope escapes parent at '" +
                                                             m.str() + "'");
        }
        validate_config(nodes_[idx]);
        if (node.children.empty()) {
            for (const auto& m : node.scope) {
                if (leaf_of_.count(m))
                    throw Error(Errc::invalid_mode_tree,
                                "module '" + m.str() + "' is covered by two leaf modes");
                leaf_of_[m] = idx;
            }
            return;
        }
        std::set<ModuleId> seen;
        for (const auto& child : node.children) {
            if (child.scope.empty())
                throw Error(Errc::invalid_mode_tree, "child mode must declare a scope");
            for (const auto& m : child.scope)
                if (!seen.insert(m).second)
                    throw Error(Errc::invalid_mode_tree,
                                "module '" + m.str() + "' appears in two sibling scopes");
            flatten(child, idx);
        }
    }

    void validate_config(const FlatNode& node) {
        if (const auto* wfm = std::get_if<WaitForMeConfig>(&node.config)) {
            for (const auto& sp : wfm->sync_points)
                if (!node.scope.count(sp))
                    throw Error(Errc::invalid_mode_tree,
                                "sync point '" + sp.str() + "' lies outside its scope");
            if (wfm->straggler.kind == StragglerPolicy::Kind::quorum && wfm->straggler.quorum < 1)
                throw Error(Errc::invalid_mode_tree, "quorum must be at least 1");
            if (wfm->straggler.kind == StragglerPolicy::Kind::timeout &&
                !(wfm->straggler.timeout_s > 0.0))
                throw Error(Errc::invalid_mode_tree, "timeout must be positive");
        } else if (const auto* ts = std::get_if<TimeslotConfig>(&node.config)) {
            for (const auto& [m, w] : ts->windows) {
                if (!node.scope.count(m))
                    throw Error(Errc::invalid_mode_tree,
                                "window for '" + m.str() + "' lies outside its scope");
                if (w.end < w.start)
                    throw Error(Errc::invalid_mode_tree, "window for '" + m.str() + "' ends before it starts");
            }
        } else if (const auto* rt = std::get_if<RealtimeConfig>(&node.config)) {
            if (rt->seat.kind == SeatPolicy::Kind::fixed && !rt->seat.holder)
                throw Error(Errc::invalid_mode_tree, "fixed seat needs a designated holder");
            if (rt->seat.holder && !roles_.count(*rt->seat.holder))
                throw Error(Errc::invalid_mode_tree,
                            "seat holder '" + rt->seat.holder->str() + "' is not a participant");
        }
    }

    void init_views_and_positions() {
        for (const auto& p : participants_) {
            Composition view = composition_.participant_view(p.id);
            // An edgeless composition yields an empty view; fall back to the
            // full composition so single-module sessions still have a start.
            if (view.members().empty()) view = composition_;
            std::set<ModuleId> sources = view.sources();
            if (sources.empty())
                throw Error(Errc::invalid_mode_tree,
                            "view of '" + p.id.str() + "' has no source module");
            positions_.emplace(p.id, *sources.begin());
            views_.emplace(p.id, std::move(view));
        }
    }

    void init_barriers() {
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const auto* wfm = std::get_if<WaitForMeConfig>(&nodes_[i].config);
            if (!wfm) continue;
            for (const auto& sp : wfm->sync_points) {
                if (barriers_.count(sp))
                    throw Error(Errc::invalid_mode_tree,
                                "sync point '" + sp.str() + "' declared twice");
                BarrierState b;
                b.node = static_cast<int>(i);
                for (const auto& p : participants_) {
                    if (p.role == Role::instructor && !wfm->instructors_count) continue;
                    if (views_.at(p.id).contains(sp)) b.counted.insert(p.id);
                }
                barriers_.emplace(sp, std::move(b));
            }
        }
    }

    void init_seats() {
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            const auto* rt = std::get_if<RealtimeConfig>(&nodes_[i].config);
            if (!rt || rt->seat.kind == SeatPolicy::Kind::none) continue;
            int idx = static_cast<int>(i);
            std::vector<ParticipantId> order;
            if (rt->seat.rotation == SeatPolicy::Rotation::instructor_priority) {
                for (const auto& p : participants_)
                    if (p.role == Role::instructor) order.push_back(p.id);
                for (const auto& p : participants_)
                    if (p.role != Role::instructor) order.push_back(p.id);
            } else {
                for (const auto& p : participants_) order.push_back(p.id);
            }
            rotation_order_[idx] = order;
            seat_holder_[idx] = rt->seat.holder ? *rt->seat.holder : order.front();
        }
    }

    // --- helpers ---------------------------------------------------------

    const ParticipantId& require(const ParticipantId& p) const {
        if (!roles_.count(p))
            throw Error(Errc::not_participant, "'" + p.str() + "' is not in this session");
        return p;
    }

    std::vector<int> chain_of(const ModuleId& m) const {
        std::vector<int> chain;
        auto it = leaf_of_.find(m);
        for (int idx = it == leaf_of_.end() ? -1 : it->second; idx >= 0; idx = nodes_[idx].parent)
            chain.push_back(idx);
        std::reverse(chain.begin(), chain.end());
        return chain;
    }

    int realtime_node_of(const ModuleId& m) const {
        int found = -1;
        for (int idx : chain_of(m))
            if (std::holds_alternative<RealtimeConfig>(nodes_[idx].config)) found = idx;
        return found;
    }

    LatePolicy timeslot_late_policy(const ModuleId& m) const {
        LatePolicy policy = LatePolicy::block;
        for (int idx : chain_of(m))
            if (const auto* ts = std::get_if<TimeslotConfig>(&nodes_[idx].config))
                if (ts->windows.count(m)) policy = ts->late;
        return policy;
    }

    BarrierState& barrier(const ModuleId& sp) {
        auto it = barriers_.find(sp);
        if (it == barriers_.end())
            throw Error(Errc::unknown_sync_point, "'" + sp.str() + "' is not a sync point");
        return it->second;
    }

    const BarrierState& barrier(const ModuleId& sp) const {
        return const_cast<Session*>(this)->barrier(sp);
    }

    Poll& poll_ref(PollId id) {
        if (id.value < 0 || id.value >= static_cast<int>(polls_.size()))
            throw Error(Errc::poll_closed, "no such poll");
        Poll& poll = polls_[static_cast<std::size_t>(id.value)];
        if (poll.outcome)
            throw Error(Errc::poll_closed, "poll at '" + poll.module.str() + "' already resolved");
        return poll;
    }

    void validate_ballot(const Poll& poll, const Ballot& ballot) const {
        if (ballot.ranking.empty())
            throw Error(Errc::invalid_ballot, "ballot must rank at least one option");
        std::set<std::string> seen;
        for (const auto& option : ballot.ranking) {
            if (!seen.insert(option).second)
                throw Error(Errc::invalid_ballot, "option '" + option + "' ranked twice");
            if (std::find(poll.options.begin(), poll.options.end(), option) == poll.options.end())
                throw Error(Errc::invalid_ballot, "unknown option '" + option + "'");
        }
        if (poll.method == VotingMethod::plurality && ballot.ranking.size() != 1)
            throw Error(Errc::invalid_ballot, "a plurality ballot chooses exactly one option");
    }

    static PollOutcome tally_plurality(const Poll& poll) {
        PollOutcome outcome;
        outcome.method = VotingMethod::plurality;
        for (const auto& option : poll.options) outcome.scores[option] = 0;
        for (const auto& [voter, ranking] : poll.ballots) ++outcome.scores[ranking.front()];
        int best = -1;
        for (const auto& [option, count] : outcome.scores) {
            if (count > best) {
                best = count;
                outcome.winner = option;  // map order = option id order, so first max wins ties
            }
        }
        return outcome;
    }

    /// Pairwise preference counting over (possibly partial) rankings: a
    /// ballot expresses a preference between two options only when it ranks
    /// both, or ranks one and omits the other (ranked beats unranked).
    static PollOutcome tally_condorcet(const Poll& poll) {
        PollOutcome outcome;
        outcome.method = VotingMethod::condorcet;
        std::vector<std::string> opts(poll.options);
        std::sort(opts.begin(), opts.end());
        std::size_t n = opts.size();
        auto index_of = [&](const std::string& o) {
            return static_cast<std::size_t>(std::find(opts.begin(), opts.end(), o) - opts.begin());
        };
        std::vector<std::vector<int>> prefer(n, std::vector<int>(n, 0));
        for (const auto& [voter, ranking] : poll.ballots) {
            std::map<std::string, std::size_t> rank;
            for (std::size_t i = 0; i < ranking.size(); ++i) rank[ranking[i]] = i;
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = i + 1; j < n; ++j) {
                    auto ri = rank.find(opts[i]);
                    auto rj = rank.find(opts[j]);
                    if (ri == rank.end() && rj == rank.end()) continue;
                    if (rj == rank.end() || (ri != rank.end() && ri->second < rj->second))
                        ++prefer[i][j];
                    else
                        ++prefer[j][i];
                }
            }
        }
        std::vector<int> wins(n, 0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j && prefer[i][j] > prefer[j][i]) ++wins[i];
        for (const auto& o : opts) outcome.scores[o] = wins[index_of(o)];
        for (std::size_t i = 0; i < n; ++i) {
            if (wins[i] == static_cast<int>(n) - 1) {
                outcome.winner = opts[i];
                outcome.had_condorcet_winner = true;
                return outcome;
            }
        }
        // No Condorcet winner: Copeland leader, ties broken by option id.
        std::size_t best = 0;
        for (std::size_t i = 1; i < n; ++i)
            if (wins[i] > wins[best]) best = i;
        outcome.winner = opts[best];
        return outcome;
    }

    void advance_clock(double at) {
        if (at < clock_)
            throw Error(Errc::schema_error, "event at t=" + std::to_string(at) +
                                                " precedes session clock t=" +
                                                std::to_string(clock_));
        // Timeout barriers whose deadline passed release at their deadline,
        // keeping the log ordered by event time.
        std::vector<std::pair<double, ModuleId>> due;
        for (auto& [sp, b] : barriers_) {
            if (b.released || b.arrivals.empty()) continue;
            const auto& policy =
                std::get<WaitForMeConfig>(nodes_[b.node].config).straggler;
            if (policy.kind != StragglerPolicy::Kind::timeout) continue;
            double first = b.arrivals.begin()->second;
            for (const auto& [p, t] : b.arrivals) first = std::min(first, t);
            double deadline = first + policy.timeout_s;
            if (deadline <= at) due.push_back({deadline, sp});
        }
        std::sort(due.begin(), due.end());
        for (const auto& [deadline, sp] : due) {
            BarrierState& b = barriers_.at(sp);
            if (!b.released) release(sp, b, deadline);
        }
        clock_ = std::max(clock_, at);
    }

    void try_release(const ModuleId& sp, BarrierState& b, double now) {
        const auto& policy = std::get<WaitForMeConfig>(nodes_[b.node].config).straggler;
        std::size_t counted_arrived = 0;
        for (const auto& p : b.counted)
            if (b.arrivals.count(p)) ++counted_arrived;
        bool eligible = false;
        switch (policy.kind) {
            case StragglerPolicy::Kind::all:
                eligible = counted_arrived == b.counted.size();
                break;
            case StragglerPolicy::Kind::quorum:
                eligible = counted_arrived >=
                           std::min<std::size_t>(static_cast<std::size_t>(policy.quorum),
                                                 b.counted.size());
                break;
            case StragglerPolicy::Kind::timeout: {
                eligible = counted_arrived == b.counted.size();
                if (!eligible && !b.arrivals.empty()) {
                    double first = b.arrivals.begin()->second;
                    for (const auto& [p, t] : b.arrivals) first = std::min(first, t);
                    eligible = now >= first + policy.timeout_s;
                }
                break;
            }
        }
        if (eligible) release(sp, b, now);
    }

    void release(const ModuleId& sp, BarrierState& b, double now) {
        b.released = true;
        b.released_at = now;
        for (const auto& p : b.counted)
            if (!b.arrivals.count(p)) b.stragglers.insert(p);
        std::map<std::string, std::string> d;
        if (!b.stragglers.empty()) d["stragglers"] = detail::join_ids(b.stragglers);
        push_event(now, "barrier_released", std::nullopt, sp, d);
        for (const auto& p : participants_) {
            if (!b.blocked.count(p.id)) continue;
            move(p.id, sp, now, {{"via", "barrier_release"}});
        }
        b.blocked.clear();
    }

    void move(const ParticipantId& p, const ModuleId& to, double at,
              std::map<std::string, std::string> d) {
        positions_.at(p) = to;
        push_event(at, "advanced", p, to, std::move(d));
    }

    void push_event(double at, std::string kind, std::optional<ParticipantId> participant,
                    std::optional<ModuleId> module, std::map<std::string, std::string> d) {
        SessionEvent e;
        e.seq = static_cast<int>(log_.size());
        e.at = at;
        e.kind = std::move(kind);
        e.participant = std::move(participant);
        e.module = std::move(module);
        e.detail = std::move(d);
        log_.push_back(std::move(e));
    }

    Composition composition_;
    ModeNode mode_tree_;
    std::vector<Participant> participants_;
    std::map<ParticipantId, Role> roles_;
    std::map<ParticipantId, Composition> views_;
    std::map<ParticipantId, std::optional<ModuleId>> positions_;
    std::vector<FlatNode> nodes_;
    std::map<ModuleId, int> leaf_of_;
    std::map<ModuleId, BarrierState> barriers_;
    std::map<int, ParticipantId> seat_holder_;
    std::map<int, std::vector<ParticipantId>> rotation_order_;
    std::vector<Poll> polls_;
    std::map<ModuleId, int> open_poll_at_;
    std::map<ModuleId, std::string> resolved_winner_;
    std::vector<SessionEvent> log_;
    double clock_ = 0.0;
};

}  // namespace chronocanvas
