#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "chronocanvas/sync.hpp"

namespace chronocanvas {

/// A deterministic stand-in for a learner. speed_factor scales module
/// estimates into required engaged time; engagement_ratio is the share of
/// wall time actually spent engaged, so completing a module occupies
/// speed_factor * estimate / engagement_ratio seconds of wall clock.
struct VirtualLearner {
    ParticipantId participant;
    double speed_factor = 1.0;
    double skill = 0.5;             // in [0,1]
    double engagement_ratio = 1.0;  // in (0,1]

    void validate() const {
        if (!(speed_factor > 0.0))
            throw Error(Errc::schema_error, "speed_factor must be > 0");
        if (skill < 0.0 || skill > 1.0)
            throw Error(Errc::schema_error, "skill must lie in [0,1]");
        if (!(engagement_ratio > 0.0) || engagement_ratio > 1.0)
            throw Error(Errc::schema_error, "engagement_ratio must lie in (0,1]");
    }
};

struct SimulationScenario {
    std::string id;
    Registry registry;
    Composition composition;
    std::vector<Participant> participants;
    std::vector<VirtualLearner> learners;
    ModeNode mode_tree;
    double allocated_s = 0.0;
    std::map<ModuleId, double> estimates;  // seconds per module
    // A module's engaged time counts toward ALT iff |skill - difficulty| is
    // within this band; material that is far too easy or far too hard earns
    // nothing. Configurable and openly synthetic.
    double success_band = 0.3;
    bool jitter = false;        // seeded duration noise; off keeps runs exact
    double jitter_frac = 0.1;
};

struct ParticipantAlt {
    double allocated_s = 0.0;
    double engaged_s = 0.0;
    double alt_s = 0.0;
    double idle_s = 0.0;  // non-engaged time before finishing (or end of allocation)
    double alt_ratio = 0.0;
    bool finished = false;
    double finished_at = 0.0;
};

struct AltReport {
    std::map<ParticipantId, ParticipantAlt> per_participant;
    ParticipantAlt total;
};

struct SimulationResult {
    Session session;
    AltReport report;
};

namespace detail {

struct SimEvent {
    double at = 0.0;
    int join_idx = 0;
    long seq = 0;
    enum class Kind { complete, retry_advance, tick } kind = Kind::complete;
    ModuleId target;  // retry_advance only

    bool operator>(const SimEvent& other) const {
        if (at != other.at) return at > other.at;
        if (join_idx != other.join_idx) return join_idx > other.join_idx;
        return seq > other.seq;
    }
};

struct Walker {
    ParticipantId id;
    int join_idx = 0;
    VirtualLearner params;
    std::optional<ModuleId> engaging;
    double entered_at = 0.0;
    std::optional<ModuleId> blocked_at;  // sync point we are queued at
    bool stuck = false;
    bool finished = false;
    double finished_at = 0.0;
    double engaged = 0.0;
    double alt = 0.0;
};

}  // namespace detail

/// Drives a session with virtual learners and accounts allocated, engaged and
/// academic learning time. The run is a pure function of (scenario, seed):
/// the event queue is ordered by (time, join order, insertion), and the only
/// randomness is optional duration jitter.
class ScenarioRunner {
public:
    ScenarioRunner(const SimulationScenario& scenario, std::uint64_t seed)
        : scn_(scenario), rng_(seed) {
        if (!(scn_.allocated_s > 0.0))
            throw Error(Errc::schema_error, "allocated_s must be > 0");
        for (const auto& l : scn_.learners) l.validate();
    }

    SimulationResult run() {
        Session session(scn_.composition, scn_.participants, scn_.mode_tree, 0.0);
        init_walkers(session);
        while (!queue_.empty()) {
            detail::SimEvent ev = queue_.top();
            queue_.pop();
            detail::Walker& w = walkers_[static_cast<std::size_t>(ev.join_idx)];
            switch (ev.kind) {
                case detail::SimEvent::Kind::complete:
                    on_complete(session, w, ev.at);
                    break;
                case detail::SimEvent::Kind::retry_advance:
                    attempt_advance(session, w, ev.target, ev.at);
                    break;
                case detail::SimEvent::Kind::tick:
                    session.tick(ev.at);
                    break;
            }
            resume_released(session, ev.at);
        }
        return {std::move(session), make_report()};
    }

private:
    void init_walkers(Session& session) {
        std::map<ParticipantId, VirtualLearner> by_id;
        for (const auto& l : scn_.learners) by_id[l.participant] = l;
        int join = 0;
        for (const auto& p : session.participants()) {
            auto it = by_id.find(p.id);
            if (it == by_id.end())
                throw Error(Errc::schema_error,
                            "no virtual learner for participant '" + p.id.str() + "'");
            detail::Walker w;
            w.id = p.id;
            w.join_idx = join++;
            w.params = it->second;
            w.engaging = session.position(p.id);
            w.entered_at = 0.0;
            walkers_.push_back(std::move(w));
        }
        for (auto& w : walkers_) schedule_completion(w, 0.0);
    }

    double estimate_of(const ModuleId& m) const {
        auto it = scn_.estimates.find(m);
        if (it == scn_.estimates.end())
            throw Error(Errc::missing_estimate, "no estimate for module '" + m.str() + "'");
        return it->second;
    }

    double difficulty_of(const ModuleId& m) const {
        const Module* mod = scn_.registry.find(m);
        return mod && mod->difficulty ? *mod->difficulty : 0.0;
    }

    double required_engaged(const detail::Walker& w, const ModuleId& m) {
        double need = w.params.speed_factor * estimate_of(m);
        if (scn_.jitter) {
            std::uniform_real_distribution<double> u(-1.0, 1.0);
            need *= 1.0 + scn_.jitter_frac * u(rng_);
        }
        return need;
    }

    void schedule_completion(detail::Walker& w, double now) {
        double wall = required_engaged(w, *w.engaging) / w.params.engagement_ratio;
        push(now + wall, w.join_idx, detail::SimEvent::Kind::complete, {});
    }

    void push(double at, int join_idx, detail::SimEvent::Kind kind, ModuleId target) {
        queue_.push({at, join_idx, seq_++, kind, std::move(target)});
    }

    /// Engagement accrues uniformly over the wall span of a module, clipped
    /// to the allocated window [0, allocated_s].
    void accrue(detail::Walker& w, const ModuleId& m, double from, double to) {
        double lo = std::max(from, 0.0);
        double hi = std::min(to, scn_.allocated_s);
        if (hi <= lo) return;
        double engaged = (hi - lo) * w.params.engagement_ratio;
        w.engaged += engaged;
        if (std::abs(w.params.skill - difficulty_of(m)) <= scn_.success_band) w.alt += engaged;
    }

    void on_complete(Session& session, detail::Walker& w, double at) {
        if (w.stuck || w.finished || !w.engaging) return;
        ModuleId m = *w.engaging;
        accrue(w, m, w.entered_at, at);
        w.engaging = std::nullopt;
        session.complete(w.id, at);
        if (session.done(w.id)) {
            w.finished = true;
            w.finished_at = at;
            return;
        }
        const Composition& view = session.view_of(w.id);
        std::set<ModuleId> nexts = view.out_neighbors(m);
        ModuleId target = *nexts.begin();  // virtual learners take the first flow
        if (session.realtime_governs(m)) {
            vote_and_maybe_move(session, w, m, target, at);
        } else {
            attempt_advance(session, w, target, at);
        }
    }

    void attempt_advance(Session& session, detail::Walker& w, const ModuleId& target, double at) {
        if (w.stuck || w.finished) return;
        try {
            AdvanceResult res = session.advance(w.id, target, at);
            if (res.entered) {
                start_engaging(w, target, at);
            } else {
                w.blocked_at = target;
                schedule_barrier_timeout(session, target, at);
            }
        } catch (const Error& e) {
            if (e.code() == Errc::window_not_open) {
                std::optional<TimeWindow> win = session.window_at(target);
                push(win->start, w.join_idx, detail::SimEvent::Kind::retry_advance, target);
            } else if (e.code() == Errc::window_closed || e.code() == Errc::illegal_move) {
                w.stuck = true;  // idles out the rest of the allocation
            } else {
                throw;
            }
        }
    }

    void schedule_barrier_timeout(Session& session, const ModuleId& sync_point, double arrival) {
        std::optional<StragglerPolicy> policy = session.straggler_policy_at(sync_point);
        if (!policy || policy->kind != StragglerPolicy::Kind::timeout) return;
        auto [it, inserted] = first_arrival_.emplace(sync_point, arrival);
        if (inserted) {
            // exact deadline tick so the release (and resumed engagement)
            // happens at first arrival + timeout, not at the next stray event
            push(it->second + policy->timeout_s, 0, detail::SimEvent::Kind::tick, {});
        }
    }

    void vote_and_maybe_move(Session& session, detail::Walker& w, const ModuleId& at_module,
                             const ModuleId& target, double at) {
        std::set<ModuleId> options_set = session.composition().out_neighbors(at_module);
        auto poll_it = open_polls_.find(at_module);
        PollId poll;
        if (poll_it == open_polls_.end()) {
            std::vector<std::string> options;
            for (const auto& o : options_set) options.push_back(o.str());
            poll = session.open_poll(at_module, options, std::nullopt, at);
            open_polls_[at_module] = poll;
        } else {
            poll = poll_it->second;
        }
        std::optional<ParticipantId> holder = session.seat_holder_at(at_module);
        if (!holder || *holder == w.id) {
            std::vector<std::string> ranking{target.str()};
            for (const auto& o : options_set)
                if (o != target) ranking.push_back(o.str());
            if (session.realtime_config_at(at_module)->voting == VotingMethod::plurality)
                ranking.resize(1);
            session.cast_ballot(poll, {w.id, ranking}, at);
        }
        voted_[at_module].insert(w.id);

        // The group moves once every participant standing at this module has
        // finished it (and, under a seat, the holder has spoken).
        bool ready = true;
        for (const auto& p : session.participants()) {
            std::optional<ModuleId> pos = session.position(p.id);
            if (pos && *pos == at_module && !voted_[at_module].count(p.id)) ready = false;
        }
        if (holder && !voted_[at_module].count(*holder)) ready = false;
        if (!ready) return;

        PollOutcome outcome = session.tally(poll, at);
        ModuleId winner{outcome.winner};
        open_polls_.erase(at_module);
        std::set<ParticipantId> movers = voted_[at_module];
        voted_.erase(at_module);
        for (auto& other : walkers_) {
            if (!movers.count(other.id)) continue;
            attempt_advance(session, other, winner, at);
        }
    }

    void start_engaging(detail::Walker& w, const ModuleId& m, double at) {
        w.engaging = m;
        w.entered_at = at;
        w.blocked_at = std::nullopt;
        schedule_completion(w, at);
    }

    /// After any engine interaction, walkers queued at a barrier whose
    /// position has moved (the barrier released) resume engagement at the
    /// current event time.
    void resume_released(Session& session, double at) {
        for (auto& w : walkers_) {
            if (!w.blocked_at) continue;
            std::optional<ModuleId> pos = session.position(w.id);
            if (pos && *pos == *w.blocked_at) start_engaging(w, *pos, at);
        }
    }

    AltReport make_report() const {
        AltReport report;
        for (const auto& w : walkers_) {
            ParticipantAlt a;
            a.allocated_s = scn_.allocated_s;
            a.engaged_s = w.engaged;
            a.alt_s = w.alt;
            double active_end = w.finished ? std::min(w.finished_at, scn_.allocated_s)
                                           : scn_.allocated_s;
            a.idle_s = std::max(0.0, active_end - w.engaged);
            a.alt_ratio = a.alt_s / a.allocated_s;
            a.finished = w.finished;
            a.finished_at = w.finished_at;
            report.per_participant.emplace(w.id, a);

            report.total.allocated_s += a.allocated_s;
            report.total.engaged_s += a.engaged_s;
            report.total.alt_s += a.alt_s;
            report.total.idle_s += a.idle_s;
        }
        report.total.alt_ratio =
            report.total.allocated_s > 0.0 ? report.total.alt_s / report.total.allocated_s : 0.0;
        return report;
    }

    SimulationScenario scn_;
    std::mt19937_64 rng_;
    std::vector<detail::Walker> walkers_;
    std::priority_queue<detail::SimEvent, std::vector<detail::SimEvent>, std::greater<>> queue_;
    long seq_ = 0;
    std::map<ModuleId, PollId> open_polls_;
    std::map<ModuleId, std::set<ParticipantId>> voted_;
    std::map<ModuleId, double> first_arrival_;
};

inline SimulationResult run_scenario(const SimulationScenario& scenario, std::uint64_t seed) {
    return ScenarioRunner(scenario, seed).run();
}

inline SimulationResult run_scenario(const SimulationScenario& scenario,
                                     const std::vector<VirtualLearner>& learners,
                                     std::uint64_t seed) {
    SimulationScenario copy = scenario;
    copy.learners = learners;
    return ScenarioRunner(copy, seed).run();
}

struct ScenarioRanking {
    std::string id;
    AltReport report;
};

/// Runs every scenario under the same seed and ranks by total ALT ratio,
/// descending; ties break by scenario id.
inline std::vector<ScenarioRanking> compare_scenarios(
    const std::vector<SimulationScenario>& scenarios, std::uint64_t seed) {
    std::vector<ScenarioRanking> out;
    for (const auto& scn : scenarios) out.push_back({scn.id, run_scenario(scn, seed).report});
    std::stable_sort(out.begin(), out.end(), [](const ScenarioRanking& a, const ScenarioRanking& b) {
        double ra = a.report.total.alt_ratio;
        double rb = b.report.total.alt_ratio;
        return ra != rb ? ra > rb : a.id < b.id;
    });
    return out;
}

}  // namespace chronocanvas
