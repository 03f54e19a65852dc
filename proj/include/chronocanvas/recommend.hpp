#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "chronocanvas/chronology.hpp"
#include "chronocanvas/graph.hpp"

namespace chronocanvas {

enum class RecommendationRule { reachable, gap_insert, sibling_supplement, standalone, type_set };

inline const char* to_string(RecommendationRule r) {
    switch (r) {
        case RecommendationRule::reachable: return "reachable";
        case RecommendationRule::gap_insert: return "gap_insert";
        case RecommendationRule::sibling_supplement: return "sibling_supplement";
        case RecommendationRule::standalone: return "standalone";
        case RecommendationRule::type_set: return "type_set";
    }
    return "unknown";
}

struct Recommendation {
    ModuleId module;
    RecommendationRule rule;
    double score = 0.0;  // normalized corpus frequency in [0,1] before weighting
};

/// Inclusive duration window used to filter sibling/standalone candidates by
/// their time estimate ("fits the desired composition estimate better").
struct DurationWindow {
    double lo_s = 0.0;
    double hi_s = 0.0;
};

/// Corpus-wide co-occurrence counts. `follows` is order-sensitive transitive
/// following; `sibling` counts compositions in which two modules share an
/// immediate predecessor. A pair counts at most once per composition.
class CoOccurrenceStats {
public:
    void ingest(const Composition& composition, const Registry* registry = nullptr) {
        OrderRelation rel = OrderRelation::of(composition);
        for (const auto& [from, succ] : rel.all_successors())
            for (const auto& to : succ) ++follows_[{from, to}];

        std::set<std::pair<ModuleId, ModuleId>> sib_pairs;
        for (const auto& m : composition.members()) {
            std::set<ModuleId> outs = composition.out_neighbors(m);
            for (auto a = outs.begin(); a != outs.end(); ++a)
                for (auto b = std::next(a); b != outs.end(); ++b) sib_pairs.insert({*a, *b});
        }
        for (const auto& pair : sib_pairs) ++siblings_[pair];

        if (registry) {
            for (const auto& m : composition.members()) {
                const Module* mod = registry->find(m);
                if (mod && mod->difficulty) {
                    difficulty_sum_[m] += *mod->difficulty;
                    ++difficulty_n_[m];
                }
            }
        }
        closures_.push_back(rel);
        ++n_compositions_;
    }

    std::size_t compositions() const noexcept { return n_compositions_; }

    int follows_count(const ModuleId& earlier, const ModuleId& later) const {
        auto it = follows_.find({earlier, later});
        return it == follows_.end() ? 0 : it->second;
    }

    int sibling_count(const ModuleId& a, const ModuleId& b) const {
        auto it = siblings_.find(a < b ? std::make_pair(a, b) : std::make_pair(b, a));
        return it == siblings_.end() ? 0 : it->second;
    }

    const std::map<std::pair<ModuleId, ModuleId>, int>& follows() const { return follows_; }
    const std::map<std::pair<ModuleId, ModuleId>, int>& siblings() const { return siblings_; }

    /// Mean difficulty across corpus occurrences; 0 when never rated.
    double mean_difficulty(const ModuleId& m) const {
        auto it = difficulty_n_.find(m);
        if (it == difficulty_n_.end() || it->second == 0) return 0.0;
        return difficulty_sum_.at(m) / static_cast<double>(it->second);
    }

    const std::vector<OrderRelation>& per_composition() const { return closures_; }

private:
    std::size_t n_compositions_ = 0;
    std::map<std::pair<ModuleId, ModuleId>, int> follows_;
    std::map<std::pair<ModuleId, ModuleId>, int> siblings_;  // keyed (min,max)
    std::map<ModuleId, double> difficulty_sum_;
    std::map<ModuleId, int> difficulty_n_;
    std::vector<OrderRelation> closures_;
};

inline CoOccurrenceStats ingest_corpus(const std::vector<CompositionDoc>& corpus) {
    CoOccurrenceStats stats;
    for (const auto& doc : corpus) stats.ingest(doc.composition, &doc.registry);
    return stats;
}

inline CoOccurrenceStats ingest_corpus(const std::vector<Composition>& corpus) {
    CoOccurrenceStats stats;
    for (const auto& c : corpus) stats.ingest(c);
    return stats;
}

namespace detail {

inline void sort_recommendations(std::vector<Recommendation>& recs) {
    std::stable_sort(recs.begin(), recs.end(), [](const Recommendation& a, const Recommendation& b) {
        return a.score != b.score ? a.score > b.score : a.module < b.module;
    });
}

inline std::vector<Recommendation> sibling_candidates(const CoOccurrenceStats& stats,
                                                      const ModuleId& anchor,
                                                      RecommendationRule rule,
                                                      const std::optional<DurationWindow>& window,
                                                      const std::map<ModuleId, double>* estimates) {
    std::vector<Recommendation> recs;
    if (stats.compositions() == 0) return recs;
    const double n = static_cast<double>(stats.compositions());
    for (const auto& [pair, count] : stats.siblings()) {
        ModuleId other;
        if (pair.first == anchor)
            other = pair.second;
        else if (pair.second == anchor)
            other = pair.first;
        else
            continue;
        if (window) {
            if (!estimates) continue;
            auto it = estimates->find(other);
            if (it == estimates->end()) continue;
            if (it->second < window->lo_s || it->second > window->hi_s) continue;
        }
        recs.push_back({other, rule, static_cast<double>(count) / n});
    }
    sort_recommendations(recs);
    return recs;
}

}  // namespace detail

/// Modules that transitively follow any of the present modules somewhere in
/// the corpus: whatever other authors placed downstream. Present modules are
/// never recommended back.
inline std::vector<Recommendation> recommend_reachable(const CoOccurrenceStats& stats,
                                                       const std::set<ModuleId>& present) {
    std::vector<Recommendation> recs;
    if (stats.compositions() == 0) return recs;
    const double n = static_cast<double>(stats.compositions());
    std::map<ModuleId, double> best;
    for (const auto& [pair, count] : stats.follows()) {
        if (!present.count(pair.first) || present.count(pair.second)) continue;
        double score = static_cast<double>(count) / n;
        auto [it, inserted] = best.emplace(pair.second, score);
        if (!inserted) it->second = std::max(it->second, score);
    }
    for (const auto& [m, score] : best) recs.push_back({m, RecommendationRule::reachable, score});
    detail::sort_recommendations(recs);
    return recs;
}

/// Modules that lie between lo and hi in at least one corpus composition:
/// candidates to insert into the gap. When the corpus carries difficulty
/// metadata for hi, scores scale by (1 + mean difficulty of hi), so gap
/// fillers in front of generally-difficult modules are pushed harder.
inline std::vector<Recommendation> recommend_gap(const CoOccurrenceStats& stats, const ModuleId& lo,
                                                 const ModuleId& hi) {
    std::vector<Recommendation> recs;
    if (stats.compositions() == 0) return recs;
    std::map<ModuleId, int> counts;
    for (const OrderRelation& rel : stats.per_composition()) {
        if (!rel.follows(lo, hi)) continue;
        for (const auto& mid : rel.successors(lo))
            if (rel.follows(mid, hi)) ++counts[mid];
    }
    counts.erase(lo);
    counts.erase(hi);
    const double n = static_cast<double>(stats.compositions());
    const double boost = 1.0 + stats.mean_difficulty(hi);
    for (const auto& [m, count] : counts)
        recs.push_back({m, RecommendationRule::gap_insert, boost * static_cast<double>(count) / n});
    detail::sort_recommendations(recs);
    return recs;
}

/// Modules that share an immediate predecessor with `anchor` somewhere in the
/// corpus: supplements or alternatives. The optional window keeps only
/// candidates whose estimate (from `estimates`) fits.
inline std::vector<Recommendation> recommend_sibling(
    const CoOccurrenceStats& stats, const ModuleId& anchor,
    const std::optional<DurationWindow>& window = std::nullopt,
    const std::map<ModuleId, double>* estimates = nullptr) {
    return detail::sibling_candidates(stats, anchor, RecommendationRule::sibling_supplement, window,
                                      estimates);
}

/// The standalone variant of the sibling rule: the caller has only `anchor`
/// and no composition context, e.g. when shopping for a replacement under a
/// time budget.
inline std::vector<Recommendation> recommend_standalone(
    const CoOccurrenceStats& stats, const ModuleId& anchor,
    const std::optional<DurationWindow>& window = std::nullopt,
    const std::map<ModuleId, double>* estimates = nullptr) {
    return detail::sibling_candidates(stats, anchor, RecommendationRule::standalone, window,
                                      estimates);
}

enum class TagField { type, topic };

/// All registry modules carrying any of the anchors' tags, minus the anchors
/// themselves. Works over type tags or topic tags.
inline std::set<ModuleId> recommend_by_type(const Registry& registry,
                                            const std::set<ModuleId>& anchors,
                                            TagField field = TagField::type) {
    std::set<std::string> tags;
    for (const auto& a : anchors) {
        const Module& mod = registry.at(a);
        const std::optional<std::string>& tag = field == TagField::type ? mod.type_tag : mod.topic_tag;
        if (tag) tags.insert(*tag);
    }
    std::set<ModuleId> result;
    if (tags.empty()) return result;
    for (const auto& [id, mod] : registry) {
        if (anchors.count(id)) continue;
        const std::optional<std::string>& tag = field == TagField::type ? mod.type_tag : mod.topic_tag;
        if (tag && tags.count(*tag)) result.insert(id);
    }
    return result;
}

/// Linear blend of rule outputs with caller-supplied weights. Each module's
/// merged score is the weighted sum of its per-rule scores; the reported rule
/// is the one that contributed most.
inline std::vector<Recommendation> merge_weighted(
    const std::vector<std::pair<double, std::vector<Recommendation>>>& weighted_rules) {
    std::map<ModuleId, double> totals;
    std::map<ModuleId, std::pair<double, RecommendationRule>> top;
    for (const auto& [weight, recs] : weighted_rules) {
        for (const auto& rec : recs) {
            double part = weight * rec.score;
            totals[rec.module] += part;
            auto it = top.find(rec.module);
            if (it == top.end() || part > it->second.first) top[rec.module] = {part, rec.rule};
        }
    }
    std::vector<Recommendation> merged;
    merged.reserve(totals.size());
    for (const auto& [m, score] : totals) merged.push_back({m, top.at(m).second, score});
    detail::sort_recommendations(merged);
    return merged;
}

}  // namespace chronocanvas
