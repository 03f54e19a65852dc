#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "chronocanvas/chronology.hpp"
#include "chronocanvas/graph.hpp"

namespace chronocanvas {

/// One observed time-on-module measurement. `completed` is kept as a hint
/// only; bounces and left-open tabs are handled by trimming, not by the flag.
struct DurationSample {
    ModuleId module;
    std::string user;
    double seconds = 0.0;
    bool completed = true;
    std::optional<std::string> cohort;
};

/// Two-sided quantile trim: drop floor(fraction * n) samples from each tail
/// when n >= min_n, then take the median of what is left. Shape-agnostic, so
/// it survives both bounce visits and sessions left open for days without
/// assuming any particular distribution.
struct TrimPolicy {
    double fraction = 0.10;
    std::size_t min_n = 10;
};

struct EstimateReport {
    ModuleId module;
    std::size_t n_raw = 0;
    std::size_t n_kept = 0;
    double robust_estimate = 0.0;
    double spread = 0.0;  // interquartile range of kept samples
    std::optional<double> author_estimate;
    std::optional<double> author_delta_ratio;  // robust / author
};

struct CompositionEstimate {
    std::string composition;
    std::map<std::string, double> per_path;  // "a->b->c" -> total seconds
    double min_total = 0.0;
    double max_total = 0.0;
    double critical_total = 0.0;
};

/// Append-only store of duration samples. Appends may come from concurrent
/// threads; reads copy a snapshot under the same lock.
class SampleStore {
public:
    SampleStore() = default;

    SampleStore(const SampleStore& other) {
        std::lock_guard lock(other.mu_);
        samples_ = other.samples_;
        total_ = other.total_;
    }

    void record(DurationSample sample) {
        if (!(sample.seconds > 0.0) || !std::isfinite(sample.seconds))
            throw Error(Errc::non_positive_duration,
                        "sample for '" + sample.module.str() + "' must have finite seconds > 0");
        if (sample.cohort) sample.cohort = normalize_tag(*sample.cohort);
        std::lock_guard lock(mu_);
        ++total_;
        samples_[sample.module].push_back(std::move(sample));
    }

    std::vector<DurationSample> samples_for(const ModuleId& module,
                                            const std::optional<std::string>& cohort = {}) const {
        std::lock_guard lock(mu_);
        auto it = samples_.find(module);
        if (it == samples_.end()) return {};
        if (!cohort) return it->second;
        std::vector<DurationSample> out;
        std::string want = normalize_tag(*cohort);
        for (const auto& s : it->second)
            if (s.cohort && *s.cohort == want) out.push_back(s);
        return out;
    }

    std::size_t count(const ModuleId& module) const {
        std::lock_guard lock(mu_);
        auto it = samples_.find(module);
        return it == samples_.end() ? 0 : it->second.size();
    }

    std::size_t total() const {
        std::lock_guard lock(mu_);
        return total_;
    }

    std::set<ModuleId> modules() const {
        std::lock_guard lock(mu_);
        std::set<ModuleId> out;
        for (const auto& [m, v] : samples_) out.insert(m);
        return out;
    }

private:
    mutable std::mutex mu_;
    std::map<ModuleId, std::vector<DurationSample>> samples_;
    std::size_t total_ = 0;
};

namespace detail {

inline double median_sorted(const std::vector<double>& xs) {
    std::size_t n = xs.size();
    if (n % 2 == 1) return xs[n / 2];
    return 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

// R-7 linear interpolation quantile over a sorted vector.
inline double quantile_sorted(const std::vector<double>& xs, double q) {
    if (xs.size() == 1) return xs.front();
    double h = q * static_cast<double>(xs.size() - 1);
    std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= xs.size()) return xs.back();
    return xs[lo] + (h - static_cast<double>(lo)) * (xs[lo + 1] - xs[lo]);
}

}  // namespace detail

/// Robust per-module estimate: trimmed median over the (optionally
/// cohort-filtered) samples. Requires at least one kept sample.
inline EstimateReport estimate_module(const SampleStore& store, const ModuleId& module,
                                      const std::optional<std::string>& cohort = {},
                                      const TrimPolicy& policy = {},
                                      const Registry* registry = nullptr) {
    std::vector<DurationSample> samples = store.samples_for(module, cohort);
    if (samples.empty())
        throw Error(Errc::insufficient_data, "no samples for module '" + module.str() + "'");

    std::vector<double> xs;
    xs.reserve(samples.size());
    for (const auto& s : samples) xs.push_back(s.seconds);
    std::sort(xs.begin(), xs.end());

    std::size_t drop = 0;
    if (xs.size() >= policy.min_n)
        drop = static_cast<std::size_t>(std::floor(policy.fraction * static_cast<double>(xs.size())));
    std::vector<double> kept(xs.begin() + drop, xs.end() - drop);

    EstimateReport report;
    report.module = module;
    report.n_raw = xs.size();
    report.n_kept = kept.size();
    report.robust_estimate = detail::median_sorted(kept);
    report.spread = detail::quantile_sorted(kept, 0.75) - detail::quantile_sorted(kept, 0.25);
    if (registry) {
        const Module* mod = registry->find(module);
        if (mod && mod->author_estimate_s) {
            report.author_estimate = mod->author_estimate_s;
            report.author_delta_ratio = report.robust_estimate / *mod->author_estimate_s;
        }
    }
    return report;
}

/// Robust estimate when samples exist, else the author estimate, else nothing.
inline std::optional<double> usable_estimate(const SampleStore& store, const Registry& registry,
                                             const ModuleId& module, const TrimPolicy& policy = {}) {
    if (store.count(module) > 0)
        return estimate_module(store, module, std::nullopt, policy).robust_estimate;
    const Module* mod = registry.find(module);
    if (mod && mod->author_estimate_s) return mod->author_estimate_s;
    return std::nullopt;
}

namespace detail {

inline void enumerate_paths(const Composition& c, const ModuleId& cur, std::vector<ModuleId>& path,
                            double total, const std::map<ModuleId, double>& est,
                            std::map<std::string, double>& out) {
    path.push_back(cur);
    total += est.at(cur);
    std::set<ModuleId> nexts = c.out_neighbors(cur);
    if (nexts.empty()) {
        std::string sig;
        for (const auto& m : path) {
            if (!sig.empty()) sig += "->";
            sig += m.str();
        }
        out.emplace(std::move(sig), total);
    } else {
        for (const auto& next : nexts) enumerate_paths(c, next, path, total, est, out);
    }
    path.pop_back();
}

}  // namespace detail

/// Totals every root-to-sink path using each module's usable estimate.
/// critical_total is the duration-weighted longest path, computed by dynamic
/// programming over the topological order rather than from the enumerated
/// paths.
inline CompositionEstimate estimate_composition(const SampleStore& store, const Registry& registry,
                                                const Composition& composition,
                                                const TrimPolicy& policy = {}) {
    std::map<ModuleId, double> est;
    std::string missing;
    for (const auto& m : composition.members()) {
        std::optional<double> e = usable_estimate(store, registry, m, policy);
        if (e)
            est[m] = *e;
        else
            missing += (missing.empty() ? "" : ", ") + m.str();
    }
    if (!missing.empty())
        throw Error(Errc::missing_estimate, "no usable estimate for: " + missing);

    CompositionEstimate result;
    result.composition = composition.id();
    std::vector<ModuleId> path;
    for (const auto& src : composition.sources())
        detail::enumerate_paths(composition, src, path, 0.0, est, result.per_path);

    if (!result.per_path.empty()) {
        result.min_total = result.per_path.begin()->second;
        result.max_total = result.per_path.begin()->second;
        for (const auto& [sig, total] : result.per_path) {
            result.min_total = std::min(result.min_total, total);
            result.max_total = std::max(result.max_total, total);
        }
    }

    std::map<ModuleId, double> longest;
    for (const auto& m : detail::topological_order(composition)) {
        double start = 0.0;
        for (const auto& pred : composition.in_neighbors(m))
            start = std::max(start, longest.at(pred));
        longest[m] = start + est.at(m);
        result.critical_total = std::max(result.critical_total, longest[m]);
    }
    return result;
}

enum class FindingKind { over_author_estimate, composition_outlier };

inline const char* to_string(FindingKind k) {
    switch (k) {
        case FindingKind::over_author_estimate: return "over_author_estimate";
        case FindingKind::composition_outlier: return "composition_outlier";
    }
    return "unknown";
}

/// An author-facing analytics result: `value` is the offending quantity,
/// `reference` the bar it was measured against.
struct Finding {
    FindingKind kind;
    ModuleId module;
    double value = 0.0;
    double reference = 0.0;
};

struct AnalyticsConfig {
    double over_author_threshold = 1.25;  // robust/author ratio above this is flagged
    double outlier_factor = 2.0;          // estimate above factor * composition median is flagged
    TrimPolicy trim;
};

/// The two banal-but-useful author analytics: "users are spending longer on
/// this module than you thought" and "this fourth one takes a lot longer than
/// the rest of your composition".
inline std::vector<Finding> analytics(const SampleStore& store, const Registry& registry,
                                      const Composition& composition,
                                      const AnalyticsConfig& config = {}) {
    std::vector<Finding> findings;
    std::map<ModuleId, double> est;
    for (const auto& m : composition.members()) {
        std::optional<double> e = usable_estimate(store, registry, m, config.trim);
        if (e) est[m] = *e;
    }

    for (const auto& m : composition.members()) {
        if (store.count(m) == 0) continue;
        EstimateReport report = estimate_module(store, m, std::nullopt, config.trim, &registry);
        if (report.author_delta_ratio && *report.author_delta_ratio > config.over_author_threshold)
            findings.push_back({FindingKind::over_author_estimate, m, *report.author_delta_ratio,
                                config.over_author_threshold});
    }

    if (est.size() >= 2) {
        std::vector<double> values;
        values.reserve(est.size());
        for (const auto& [m, e] : est) values.push_back(e);
        std::sort(values.begin(), values.end());
        double median = detail::median_sorted(values);
        for (const auto& [m, e] : est)
            if (e > config.outlier_factor * median)
                findings.push_back({FindingKind::composition_outlier, m, e, median});
    }

    std::stable_sort(findings.begin(), findings.end(), [](const Finding& a, const Finding& b) {
        if (a.kind != b.kind) return a.kind < b.kind;
        return a.module < b.module;
    });
    return findings;
}

/// Registry modules whose usable estimate lies inside the closed window.
inline std::set<ModuleId> search_by_duration(const Registry& registry, const SampleStore& store,
                                             double lo_s, double hi_s,
                                             const TrimPolicy& policy = {}) {
    std::set<ModuleId> out;
    for (const auto& [id, mod] : registry) {
        std::optional<double> e = usable_estimate(store, registry, id, policy);
        if (e && *e >= lo_s && *e <= hi_s) out.insert(id);
    }
    return out;
}

}  // namespace chronocanvas
