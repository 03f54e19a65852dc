// chronocanvas: chronology-aware canvas engine CLI.
//
// Machine-readable output goes to stdout as JSON (or the documented line
// formats); human diagnostics go to stderr. Exit codes: 0 success, 1 runtime
// error, 2 validation/usage error.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <chronocanvas/chronocanvas.hpp>

namespace fs = std::filesystem;
using namespace chronocanvas;

namespace {

struct ExitWith {
    int code;
    std::string message;
};

/// Input-file problems are validation failures (exit 2); a missing file stays
/// a runtime error (exit 1) so the caller can tell the two apart.
template <class F>
auto load_stage(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        if (e.code() == Errc::io_error) throw;
        throw ExitWith{2, e.what()};
    }
}

std::vector<std::string> split_commas(const std::string& csv) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : csv) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::vector<fs::path> json_files_in(const fs::path& dir) {
    if (!fs::is_directory(dir))
        throw Error(Errc::io_error, "'" + dir.string() + "' is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().extension() == ".json")
            files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    return files;
}

json estimate_report_json(const EstimateReport& r) {
    json j;
    j["module"] = r.module.str();
    j["n_raw"] = r.n_raw;
    j["n_kept"] = r.n_kept;
    j["robust_estimate_s"] = r.robust_estimate;
    j["spread_s"] = r.spread;
    if (r.author_estimate) j["author_estimate_s"] = *r.author_estimate;
    if (r.author_delta_ratio) j["author_delta_ratio"] = *r.author_delta_ratio;
    return j;
}

// --- subcommands -------------------------------------------------------------

int run_chrono(const std::string& file, const std::string& of, bool successors, bool predecessors,
               const std::string& between_csv, bool timespans) {
    CompositionDoc doc = load_stage([&] { return load_composition(file); });
    if (!between_csv.empty()) {
        std::vector<std::string> pair = split_commas(between_csv);
        if (pair.size() != 2) throw ExitWith{2, "--between needs exactly two ids: lo,hi"};
        for (const ModuleId& m : between(doc.composition, ModuleId(pair[0]), ModuleId(pair[1])))
            std::cout << m.str() << "\n";
        return 0;
    }
    if (timespans) {
        std::map<ModuleId, double> est;
        bool complete = true;
        for (const ModuleId& m : doc.composition.members()) {
            const Module& mod = doc.registry.at(m);
            if (mod.author_estimate_s)
                est[m] = *mod.author_estimate_s;
            else
                complete = false;
        }
        std::vector<Timespan> spans =
            distill_timespans(doc.composition, complete ? &est : nullptr);
        json out = json::array();
        for (const Timespan& t : spans) {
            json tj;
            tj["module"] = t.module.str();
            tj["rank"] = t.rank;
            if (t.est_start) tj["est_start_s"] = *t.est_start;
            if (t.est_end) tj["est_end_s"] = *t.est_end;
            out.push_back(std::move(tj));
        }
        std::cout << out.dump(2) << "\n";
        return 0;
    }
    if (of.empty()) throw ExitWith{2, "chrono needs --of <id> (or --between lo,hi / --timespans)"};
    ModuleId anchor(of);
    std::set<ModuleId> result;
    if (predecessors && !successors)
        result = predecessors_of(doc.composition, anchor);
    else
        result = successors_of(doc.composition, anchor);
    for (const ModuleId& m : result) std::cout << m.str() << "\n";
    return 0;
}

int run_recommend(const std::string& corpus_dir, const std::string& present_csv,
                  const std::string& gap_csv, const std::string& sibling_id,
                  const std::string& standalone_id, const std::string& typeof_csv, bool by_topic) {
    std::vector<CompositionDoc> corpus;
    Registry merged;
    load_stage([&] {
        for (const fs::path& file : json_files_in(corpus_dir)) {
            json j = io_detail::parse_file(file);
            if (!j.is_object() || !j.contains("modules") || !j.contains("edges")) continue;
            CompositionDoc doc = composition_from_json(j, file.string());
            for (const auto& [mid, mod] : doc.registry)
                if (!merged.contains(mid)) merged.add(mod);
            corpus.push_back(std::move(doc));
        }
        return 0;
    });
    if (corpus.empty()) throw ExitWith{2, "no composition files in '" + corpus_dir + "'"};
    CoOccurrenceStats stats = ingest_corpus(corpus);

    auto print = [](const std::vector<Recommendation>& recs) {
        for (const Recommendation& r : recs)
            std::cout << to_string(r.rule) << " " << r.module.str() << " " << r.score << "\n";
    };
    if (!present_csv.empty()) {
        std::set<ModuleId> present;
        for (const std::string& m : split_commas(present_csv)) present.insert(ModuleId(m));
        print(recommend_reachable(stats, present));
    }
    if (!gap_csv.empty()) {
        std::vector<std::string> pair = split_commas(gap_csv);
        if (pair.size() != 2) throw ExitWith{2, "--gap needs exactly two ids: lo,hi"};
        print(recommend_gap(stats, ModuleId(pair[0]), ModuleId(pair[1])));
    }
    if (!sibling_id.empty()) print(recommend_sibling(stats, ModuleId(sibling_id)));
    if (!standalone_id.empty()) print(recommend_standalone(stats, ModuleId(standalone_id)));
    if (!typeof_csv.empty()) {
        std::set<ModuleId> anchors;
        for (const std::string& m : split_commas(typeof_csv)) anchors.insert(ModuleId(m));
        for (const ModuleId& m :
             recommend_by_type(merged, anchors, by_topic ? TagField::topic : TagField::type))
            std::cout << "type_set " << m.str() << " 1\n";
    }
    return 0;
}

int run_estimate(const std::string& comp_file, const std::string& samples_file) {
    CompositionDoc doc = load_stage([&] { return load_composition(comp_file); });
    SampleStore store;
    load_stage([&] {
        for (const DurationSample& s : load_samples(samples_file)) store.record(s);
        return 0;
    });
    json out;
    out["schema_version"] = kSchemaVersion;
    out["composition"] = doc.composition.id();
    json reports = json::array();
    for (const ModuleId& m : doc.composition.members()) {
        if (store.count(m) == 0) continue;
        reports.push_back(estimate_report_json(estimate_module(store, m, {}, {}, &doc.registry)));
    }
    out["modules"] = std::move(reports);
    CompositionEstimate ce = estimate_composition(store, doc.registry, doc.composition);
    json cj;
    cj["min_total_s"] = ce.min_total;
    cj["max_total_s"] = ce.max_total;
    cj["critical_total_s"] = ce.critical_total;
    json paths = json::object();
    for (const auto& [sig, total] : ce.per_path) paths[sig] = total;
    cj["per_path_s"] = std::move(paths);
    out["composition_estimate"] = std::move(cj);
    json findings = json::array();
    for (const Finding& f : analytics(store, doc.registry, doc.composition)) {
        json fj;
        fj["kind"] = to_string(f.kind);
        fj["module"] = f.module.str();
        fj["value"] = f.value;
        fj["reference"] = f.reference;
        findings.push_back(std::move(fj));
    }
    out["findings"] = std::move(findings);
    std::cout << out.dump(2) << "\n";
    return 0;
}

int run_review(const std::string& state_file, const std::string& assess, double now, bool due,
               const std::string& user, const std::string& comp_file, const std::string& retention,
               double base_s, double factor) {
    ReviewBook book = fs::exists(state_file)
                          ? load_stage([&] { return load_review_book(state_file); })
                          : ReviewBook(SchedulePolicy{base_s, factor});
    if (!assess.empty()) {
        auto colon = assess.rfind(':');
        if (colon == std::string::npos || colon == 0 || colon + 1 >= assess.size())
            throw ExitWith{2, "--assess wants <module>:<grade>"};
        ModuleId module(assess.substr(0, colon));
        int grade = std::stoi(assess.substr(colon + 1));
        if (comp_file.empty())
            throw ExitWith{2, "--assess needs --composition to check spaced-repetition awareness"};
        CompositionDoc doc = load_stage([&] { return load_composition(comp_file); });
        ReviewState state = book.record(doc.registry, {user, module, grade, now});
        save_review_book(state_file, book);
        json out;
        out["user"] = state.user;
        out["module"] = state.module.str();
        out["interval_s"] = state.interval_s;
        out["due_at"] = state.due_at;
        out["streak"] = state.streak;
        std::cout << out.dump(2) << "\n";
        return 0;
    }
    if (due) {
        json out = json::array();
        for (const DueReview& d : book.due(user, now)) {
            json dj;
            dj["module"] = d.module.str();
            dj["due_at"] = d.due_at;
            dj["overdue_s"] = d.overdue_s;
            out.push_back(std::move(dj));
        }
        std::cout << out.dump(2) << "\n";
        return 0;
    }
    if (!retention.empty()) {
        RetentionScope scope =
            retention == "user" ? RetentionScope::by_user : RetentionScope::by_module;
        json out = json::object();
        for (const auto& [key, e] : book.retention(scope)) {
            out[key] = {{"n", e.n},
                        {"mean_grade", e.mean_grade},
                        {"fail_fraction", e.fail_fraction}};
        }
        std::cout << out.dump(2) << "\n";
        return 0;
    }
    throw ExitWith{2, "review needs one of --assess, --due, --retention"};
}

int run_session(const std::string& scenario_file, const std::string& assert_log_file) {
    SessionScenario scn = load_stage([&] { return load_session_scenario(scenario_file); });
    Session session = replay_scenario(scn);
    json out;
    out["schema_version"] = kSchemaVersion;
    out["scenario"] = scn.id;
    out["final_state"] = session_state_json(session);
    out["log"] = session_log_json(session);
    std::cout << out.dump(2) << "\n";
    if (!assert_log_file.empty()) {
        json expected = load_stage([&] { return io_detail::parse_file(assert_log_file); });
        if (expected.is_object() && expected.contains("log")) expected = expected["log"];
        // canonicalize through key-sorted json so field order never matters
        nlohmann::json want = nlohmann::json::parse(expected.dump());
        nlohmann::json got = nlohmann::json::parse(out["log"].dump());
        if (want != got) {
            std::cerr << "log divergence: replay does not match '" << assert_log_file << "'\n";
            return 1;
        }
        std::cerr << "log matches '" << assert_log_file << "'\n";
    }
    return 0;
}

int run_simulate(const std::string& scenario_file, std::uint64_t seed,
                 const std::string& report_file) {
    SimulationScenario scn = load_stage([&] { return load_simulation_scenario(scenario_file); });
    SimulationResult res = run_scenario(scn, seed);
    json out;
    out["schema_version"] = kSchemaVersion;
    out["scenario"] = scn.id;
    out["seed"] = seed;
    out["report"] = alt_report_json(res.report);
    out["log"] = session_log_json(res.session);
    std::cout << out.dump(2) << "\n";
    if (!report_file.empty()) {
        std::ofstream rf(report_file, std::ios::binary);
        if (!rf) throw Error(Errc::io_error, "cannot write '" + report_file + "'");
        rf << out.dump(2) << "\n";
    }
    return 0;
}

int run_compare(const std::string& dir, std::uint64_t seed) {
    std::vector<SimulationScenario> scenarios;
    load_stage([&] {
        for (const fs::path& file : json_files_in(dir)) {
            json j = io_detail::parse_file(file);
            if (!j.is_object() || !j.contains("learners")) continue;
            scenarios.push_back(load_simulation_scenario(file));
        }
        return 0;
    });
    if (scenarios.size() < 2) throw ExitWith{2, "compare needs at least two scenarios in '" + dir + "'"};
    std::vector<ScenarioRanking> ranking = compare_scenarios(scenarios, seed);
    json out = json::array();
    std::cerr << "rank  alt_ratio  scenario\n";
    int rank = 1;
    for (const ScenarioRanking& r : ranking) {
        json rj;
        rj["rank"] = rank;
        rj["scenario"] = r.id;
        rj["alt_ratio"] = r.report.total.alt_ratio;
        rj["alt_s"] = r.report.total.alt_s;
        rj["engaged_s"] = r.report.total.engaged_s;
        rj["allocated_s"] = r.report.total.allocated_s;
        rj["idle_s"] = r.report.total.idle_s;
        out.push_back(std::move(rj));
        std::cerr << rank << "     " << r.report.total.alt_ratio << "      " << r.id << "\n";
        ++rank;
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

int run_validate(const std::string& file) {
    if (!fs::exists(file)) throw Error(Errc::io_error, "no such file: '" + file + "'");
    ValidationReport report = validate_file(file);
    json out;
    out["schema_version"] = kSchemaVersion;
    out["file"] = report.file;
    out["kind"] = report.kind;
    out["valid"] = report.valid;
    json issues = json::array();
    for (const ValidationIssue& issue : report.issues) {
        issues.push_back({{"code", issue.code}, {"message", issue.message}});
        std::cerr << issue.code << ": " << issue.message << "\n";
    }
    out["issues"] = std::move(issues);
    std::cout << out.dump(2) << "\n";
    return report.valid ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"chronocanvas: chronology-aware module composition engine"};
    app.require_subcommand(1);

    // chrono
    std::string chrono_file, chrono_of, chrono_between;
    bool chrono_succ = false, chrono_pred = false, chrono_spans = false;
    CLI::App* chrono = app.add_subcommand("chrono", "order relations of a composition");
    chrono->add_option("composition", chrono_file, "composition JSON file")->required();
    chrono->add_option("--of", chrono_of, "anchor module id");
    chrono->add_flag("--successors", chrono_succ, "print transitive successors (default)");
    chrono->add_flag("--predecessors", chrono_pred, "print transitive predecessors");
    chrono->add_option("--between", chrono_between, "lo,hi: modules strictly in between");
    chrono->add_flag("--timespans", chrono_spans, "print derived timespans");

    // recommend
    std::string rec_corpus, rec_present, rec_gap, rec_sibling, rec_standalone, rec_typeof;
    bool rec_topic = false;
    CLI::App* recommend = app.add_subcommand("recommend", "corpus-based module recommendations");
    recommend->add_option("--corpus", rec_corpus, "directory of composition JSON files")->required();
    recommend->add_option("--present", rec_present, "modules already on the canvas (csv)");
    recommend->add_option("--gap", rec_gap, "lo,hi: recommend gap fillers");
    recommend->add_option("--sibling", rec_sibling, "anchor for supplements/alternatives");
    recommend->add_option("--standalone", rec_standalone, "single anchor, no composition context");
    recommend->add_option("--type-of", rec_typeof, "anchors for the type-set rule (csv)");
    recommend->add_flag("--topic", rec_topic, "use topic tags instead of type tags");

    // estimate
    std::string est_comp, est_samples;
    CLI::App* estimate = app.add_subcommand("estimate", "robust duration estimates and analytics");
    estimate->add_option("composition", est_comp, "composition JSON file")->required();
    estimate->add_option("--samples", est_samples, "JSON-lines duration samples")->required();

    // review
    std::string rev_state, rev_assess, rev_user = "default", rev_comp, rev_retention;
    double rev_now = 0.0, rev_base = 86400.0, rev_factor = 2.5;
    bool rev_due = false;
    CLI::App* review = app.add_subcommand("review", "spaced-repetition assessments and schedule");
    review->add_option("--state", rev_state, "review state JSON file")->required();
    review->add_option("--assess", rev_assess, "<module>:<grade> with grade in 0..3");
    review->add_option("--now", rev_now, "event time in seconds")->required();
    review->add_flag("--due", rev_due, "list due reviews, most overdue first");
    review->add_option("--user", rev_user, "user id (default 'default')");
    review->add_option("--composition", rev_comp, "composition file naming sr-aware modules");
    review->add_option("--retention", rev_retention, "retention stats by 'module' or 'user'");
    review->add_option("--base-s", rev_base, "base interval for a fresh state file");
    review->add_option("--factor", rev_factor, "growth factor for a fresh state file");

    // session run
    std::string ses_file, ses_assert;
    CLI::App* session = app.add_subcommand("session", "collaborative session engine");
    CLI::App* session_run = session->add_subcommand("run", "replay a scenario and print state+log");
    session_run->add_option("scenario", ses_file, "session scenario JSON")->required();
    session_run->add_option("--assert-log", ses_assert, "expected log JSON; exit 1 on divergence");
    session->require_subcommand(1);

    // simulate
    std::string sim_file, sim_report;
    std::uint64_t sim_seed = 0;
    CLI::App* simulate = app.add_subcommand("simulate", "run virtual learners, report ALT");
    simulate->add_option("scenario", sim_file, "simulation scenario JSON")->required();
    simulate->add_option("--seed", sim_seed, "RNG seed (default 0)");
    simulate->add_option("--report", sim_report, "also write the report to this file");

    // compare
    std::string cmp_dir;
    std::uint64_t cmp_seed = 0;
    CLI::App* compare = app.add_subcommand("compare", "rank scenario files by ALT ratio");
    compare->add_option("dir", cmp_dir, "directory of simulation scenarios")->required();
    compare->add_option("--seed", cmp_seed, "RNG seed (default 0)");

    // validate
    std::string val_file;
    CLI::App* validate = app.add_subcommand("validate", "schema and invariant check");
    validate->add_option("file", val_file, "any chronocanvas file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        std::cerr << app.help();
        return 2;
    }

    try {
        if (chrono->parsed())
            return run_chrono(chrono_file, chrono_of, chrono_succ, chrono_pred, chrono_between,
                              chrono_spans);
        if (recommend->parsed())
            return run_recommend(rec_corpus, rec_present, rec_gap, rec_sibling, rec_standalone,
                                 rec_typeof, rec_topic);
        if (estimate->parsed()) return run_estimate(est_comp, est_samples);
        if (review->parsed())
            return run_review(rev_state, rev_assess, rev_now, rev_due, rev_user, rev_comp,
                              rev_retention, rev_base, rev_factor);
        if (session->parsed()) return run_session(ses_file, ses_assert);
        if (simulate->parsed()) return run_simulate(sim_file, sim_seed, sim_report);
        if (compare->parsed()) return run_compare(cmp_dir, cmp_seed);
        if (validate->parsed()) return run_validate(val_file);
    } catch (const ExitWith& e) {
        std::cerr << e.message << "\n";
        return e.code;
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
