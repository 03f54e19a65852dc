#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chronocanvas/graph.hpp"

namespace chronocanvas {

/// Post-module self-assessment on the familiar flashcard grading scale:
/// 0 = again, 1 = hard, 2 = good, 3 = easy.
struct SelfAssessment {
    std::string user;
    ModuleId module;
    int grade = 0;
    double at = 0.0;  // event-time, seconds since epoch
};

/// Expanding-interval review schedule. Spacing gaps are a policy choice, not
/// a universal constant, so both knobs are configurable: grade 0 resets to
/// the base interval, grade 1 keeps the current interval, grades >= 2 grow it
/// geometrically (the first success starts at base).
struct SchedulePolicy {
    double base_interval_s = 86400.0;  // 1 day
    double growth_factor = 2.5;
};

struct ReviewState {
    std::string user;
    ModuleId module;
    double interval_s = 0.0;
    double due_at = 0.0;
    int streak = 0;  // consecutive grades >= 2
};

struct DueReview {
    ModuleId module;
    double overdue_s = 0.0;
    double due_at = 0.0;
};

struct RetentionEntry {
    std::size_t n = 0;
    double mean_grade = 0.0;
    double fail_fraction = 0.0;  // share of grade-0 outcomes
};

enum class RetentionScope { by_module, by_user };

inline void mark_sr_aware(Registry& registry, const ModuleId& module, bool flag) {
    registry.set_sr_aware(module, flag);
}

/// Pure scheduling step: folds one assessment into the (possibly absent)
/// prior state under the given policy.
inline ReviewState apply_assessment(const SchedulePolicy& policy,
                                    const std::optional<ReviewState>& prior,
                                    const SelfAssessment& assessment) {
    if (assessment.grade < 0 || assessment.grade > 3)
        throw Error(Errc::invalid_grade,
                    "grade must be in 0..3, got " + std::to_string(assessment.grade));
    ReviewState state = prior ? *prior
                              : ReviewState{assessment.user, assessment.module,
                                            policy.base_interval_s, 0.0, 0};
    switch (assessment.grade) {
        case 0:
            state.interval_s = policy.base_interval_s;
            state.streak = 0;
            break;
        case 1:
            state.streak = 0;
            break;
        default:  // 2 or 3
            state.interval_s = state.streak == 0 ? policy.base_interval_s
                                                 : state.interval_s * policy.growth_factor;
            ++state.streak;
            break;
    }
    state.due_at = assessment.at + state.interval_s;
    return state;
}

/// Per-user review ledger: the append-only assessment log plus the derived
/// (user, module) review states.
class ReviewBook {
public:
    explicit ReviewBook(SchedulePolicy policy = {}) : policy_(policy) {}

    /// Rebuilds a book from a persisted assessment log. The log was checked
    /// against the registry when first recorded, so sr-awareness is not
    /// re-validated here.
    static ReviewBook from_log(SchedulePolicy policy, const std::vector<SelfAssessment>& log) {
        ReviewBook book(policy);
        for (const auto& a : log) book.apply(a);
        return book;
    }

    const SchedulePolicy& policy() const noexcept { return policy_; }

    /// Records a self-assessment and returns the updated review state.
    /// Rejected assessments (non-sr-aware module, bad grade) never mutate.
    ReviewState record(const Registry& registry, const SelfAssessment& assessment) {
        const Module& mod = registry.at(assessment.module);
        if (!mod.sr_aware)
            throw Error(Errc::not_sr_aware,
                        "module '" + assessment.module.str() + "' is not spaced-repetition-aware");
        return apply(assessment);
    }

    /// All of a user's reviews with due_at <= now, most overdue first.
    std::vector<DueReview> due(const std::string& user, double now) const {
        std::vector<DueReview> out;
        for (const auto& [key, state] : states_) {
            if (key.first != user || state.due_at > now) continue;
            out.push_back({state.module, now - state.due_at, state.due_at});
        }
        std::stable_sort(out.begin(), out.end(), [](const DueReview& a, const DueReview& b) {
            return a.overdue_s != b.overdue_s ? a.overdue_s > b.overdue_s : a.module < b.module;
        });
        return out;
    }

    std::map<std::string, RetentionEntry> retention(RetentionScope scope) const {
        std::map<std::string, std::pair<std::size_t, std::pair<double, std::size_t>>> acc;
        for (const auto& a : log_) {
            std::string key = scope == RetentionScope::by_module ? a.module.str() : a.user;
            auto& [n, rest] = acc[key];
            ++n;
            rest.first += a.grade;
            if (a.grade == 0) ++rest.second;
        }
        std::map<std::string, RetentionEntry> out;
        for (const auto& [key, v] : acc) {
            RetentionEntry e;
            e.n = v.first;
            e.mean_grade = v.second.first / static_cast<double>(v.first);
            e.fail_fraction = static_cast<double>(v.second.second) / static_cast<double>(v.first);
            out[key] = e;
        }
        return out;
    }

    std::optional<ReviewState> state_of(const std::string& user, const ModuleId& module) const {
        auto it = states_.find(std::make_pair(user, module));
        if (it == states_.end()) return std::nullopt;
        return it->second;
    }

    const std::vector<SelfAssessment>& log() const noexcept { return log_; }

private:
    ReviewState apply(const SelfAssessment& assessment) {
        auto key = std::make_pair(assessment.user, assessment.module);
        auto it = states_.find(key);
        std::optional<ReviewState> prior;
        if (it != states_.end()) prior = it->second;
        ReviewState state = apply_assessment(policy_, prior, assessment);
        states_[key] = state;
        log_.push_back(assessment);
        return state;
    }

    SchedulePolicy policy_;
    std::vector<SelfAssessment> log_;
    std::map<std::pair<std::string, ModuleId>, ReviewState> states_;
};

}  // namespace chronocanvas
