#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "chronocanvas/estimate.hpp"
#include "chronocanvas/graph.hpp"
#include "chronocanvas/repetition.hpp"
#include "chronocanvas/simulate.hpp"
#include "chronocanvas/sync.hpp"

namespace chronocanvas {

using json = nlohmann::ordered_json;

namespace io_detail {

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::io_error, "cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline std::size_t line_of_offset(const std::string& text, std::size_t offset) {
    std::size_t line = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

inline json parse_text(const std::string& text, const std::string& origin) {
    try {
        return json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(Errc::parse_error, origin + " line " +
                                           std::to_string(line_of_offset(text, e.byte)) + ": " +
                                           e.what());
    }
}

inline json parse_file(const std::filesystem::path& path) {
    return parse_text(read_file(path), path.string());
}

inline void require_schema_version(const json& j, const std::string& origin) {
    if (!j.is_object() || !j.contains("schema_version"))
        throw Error(Errc::schema_error, origin + ": missing schema_version");
    if (!j["schema_version"].is_number_integer() ||
        j["schema_version"].get<int>() != kSchemaVersion)
        throw Error(Errc::schema_error, origin + ": unsupported schema_version (want " +
                                            std::to_string(kSchemaVersion) + ")");
}

inline const json& require(const json& j, const char* field, const std::string& where) {
    if (!j.is_object() || !j.contains(field))
        throw Error(Errc::schema_error, where + ": missing field '" + field + "'");
    return j[field];
}

inline std::string require_string(const json& j, const char* field, const std::string& where) {
    const json& v = require(j, field, where);
    if (!v.is_string())
        throw Error(Errc::schema_error, where + ": field '" + field + "' must be a string");
    return v.get<std::string>();
}

inline double require_number(const json& j, const char* field, const std::string& where) {
    const json& v = require(j, field, where);
    if (!v.is_number())
        throw Error(Errc::schema_error, where + ": field '" + field + "' must be a number");
    return v.get<double>();
}

inline Role parse_role(const std::string& s, const std::string& where) {
    if (s == "learner") return Role::learner;
    if (s == "instructor") return Role::instructor;
    throw Error(Errc::schema_error, where + ": unknown role '" + s + "'");
}

}  // namespace io_detail

// --- composition files -----------------------------------------------------

inline CompositionDoc composition_from_json(const json& j, const std::string& origin) {
    io_detail::require_schema_version(j, origin);
    CompositionDoc doc;
    doc.composition.set_id(io_detail::require_string(j, "id", origin));

    const json& modules = io_detail::require(j, "modules", origin);
    if (!modules.is_array()) throw Error(Errc::schema_error, origin + ": 'modules' must be an array");
    std::size_t i = 0;
    for (const json& mj : modules) {
        std::string where = origin + " modules[" + std::to_string(i++) + "]";
        Module m;
        m.id = ModuleId(io_detail::require_string(mj, "id", where));
        if (mj.contains("type") && !mj["type"].is_null()) m.type_tag = mj["type"].get<std::string>();
        if (mj.contains("topic") && !mj["topic"].is_null())
            m.topic_tag = mj["topic"].get<std::string>();
        if (mj.contains("author_estimate_s") && !mj["author_estimate_s"].is_null())
            m.author_estimate_s = mj["author_estimate_s"].get<double>();
        if (mj.contains("sr_aware")) m.sr_aware = mj["sr_aware"].get<bool>();
        if (mj.contains("difficulty") && !mj["difficulty"].is_null())
            m.difficulty = mj["difficulty"].get<double>();
        try {
            doc.registry.add(m);
            doc.composition.add_member(m.id);
        } catch (const Error& e) {
            throw Error(e.code(), where + ": " + e.what());
        }
    }

    const json& edges = io_detail::require(j, "edges", origin);
    if (!edges.is_array()) throw Error(Errc::schema_error, origin + ": 'edges' must be an array");
    i = 0;
    for (const json& ej : edges) {
        std::string where = origin + " edges[" + std::to_string(i++) + "]";
        FlowEdge edge;
        edge.from = ModuleId(io_detail::require_string(ej, "from", where));
        edge.to = ModuleId(io_detail::require_string(ej, "to", where));
        if (ej.contains("participants"))
            for (const json& p : ej["participants"])
                edge.participants.insert(ParticipantId(p.get<std::string>()));
        try {
            doc.composition.add_flow(edge);
        } catch (const Error& e) {
            throw Error(e.code(), where + ": " + e.what());
        }
    }
    return doc;
}

inline json composition_to_json(const Registry& registry, const Composition& composition) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["id"] = composition.id();
    json modules = json::array();
    for (const ModuleId& id : composition.members()) {
        const Module& m = registry.at(id);
        json mj;
        mj["id"] = m.id.str();
        if (m.type_tag) mj["type"] = *m.type_tag;
        if (m.topic_tag) mj["topic"] = *m.topic_tag;
        if (m.author_estimate_s) mj["author_estimate_s"] = *m.author_estimate_s;
        mj["sr_aware"] = m.sr_aware;
        if (m.difficulty) mj["difficulty"] = *m.difficulty;
        modules.push_back(std::move(mj));
    }
    j["modules"] = std::move(modules);
    json edges = json::array();
    for (const FlowEdge& e : composition.edges()) {
        json ej;
        ej["from"] = e.from.str();
        ej["to"] = e.to.str();
        if (!e.participants.empty()) {
            json parts = json::array();
            for (const ParticipantId& p : e.participants) parts.push_back(p.str());
            ej["participants"] = std::move(parts);
        }
        edges.push_back(std::move(ej));
    }
    j["edges"] = std::move(edges);
    return j;
}

inline CompositionDoc load_composition(const std::filesystem::path& path) {
    return composition_from_json(io_detail::parse_file(path), path.string());
}

// --- duration samples (JSON lines) ------------------------------------------

/// One sample object per line. A leading {"schema_version":1} header line is
/// accepted (and written) but not required.
inline std::vector<DurationSample> load_samples(const std::filesystem::path& path) {
    std::string text = io_detail::read_file(path);
    std::vector<DurationSample> out;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::string where = path.string() + " line " + std::to_string(lineno);
        json j = io_detail::parse_text(line, where);
        if (j.is_object() && j.contains("schema_version") && !j.contains("module")) {
            io_detail::require_schema_version(j, where);
            continue;
        }
        DurationSample s;
        s.module = ModuleId(io_detail::require_string(j, "module", where));
        s.user = io_detail::require_string(j, "user", where);
        s.seconds = io_detail::require_number(j, "seconds", where);
        s.completed = io_detail::require(j, "completed", where).get<bool>();
        if (j.contains("cohort") && !j["cohort"].is_null())
            s.cohort = j["cohort"].get<std::string>();
        out.push_back(std::move(s));
    }
    return out;
}

inline void save_samples(const std::filesystem::path& path,
                         const std::vector<DurationSample>& samples) {
    std::ofstream outf(path, std::ios::binary);
    if (!outf) throw Error(Errc::io_error, "cannot write '" + path.string() + "'");
    outf << json{{"schema_version", kSchemaVersion}}.dump() << "\n";
    for (const auto& s : samples) {
        json j;
        j["module"] = s.module.str();
        j["user"] = s.user;
        j["seconds"] = s.seconds;
        j["completed"] = s.completed;
        if (s.cohort) j["cohort"] = *s.cohort;
        outf << j.dump() << "\n";
    }
}

// --- review state ------------------------------------------------------------

inline ReviewBook review_book_from_json(const json& j, const std::string& origin) {
    io_detail::require_schema_version(j, origin);
    SchedulePolicy policy;
    if (j.contains("scheduler")) {
        const json& s = j["scheduler"];
        if (s.contains("base_interval_s")) policy.base_interval_s = s["base_interval_s"].get<double>();
        if (s.contains("growth_factor")) policy.growth_factor = s["growth_factor"].get<double>();
    }
    std::vector<SelfAssessment> log;
    if (j.contains("assessments")) {
        std::size_t i = 0;
        for (const json& aj : j["assessments"]) {
            std::string where = origin + " assessments[" + std::to_string(i++) + "]";
            SelfAssessment a;
            a.user = io_detail::require_string(aj, "user", where);
            a.module = ModuleId(io_detail::require_string(aj, "module", where));
            a.grade = static_cast<int>(io_detail::require_number(aj, "grade", where));
            a.at = io_detail::require_number(aj, "at", where);
            log.push_back(std::move(a));
        }
    }
    return ReviewBook::from_log(policy, log);
}

inline json review_book_to_json(const ReviewBook& book) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["scheduler"] = {{"base_interval_s", book.policy().base_interval_s},
                      {"growth_factor", book.policy().growth_factor}};
    json assessments = json::array();
    for (const auto& a : book.log())
        assessments.push_back({{"user", a.user},
                               {"module", a.module.str()},
                               {"grade", a.grade},
                               {"at", a.at}});
    j["assessments"] = std::move(assessments);
    return j;
}

inline ReviewBook load_review_book(const std::filesystem::path& path) {
    return review_book_from_json(io_detail::parse_file(path), path.string());
}

inline void save_review_book(const std::filesystem::path& path, const ReviewBook& book) {
    std::ofstream outf(path, std::ios::binary);
    if (!outf) throw Error(Errc::io_error, "cannot write '" + path.string() + "'");
    outf << review_book_to_json(book).dump(2) << "\n";
}

// --- mode trees ---------------------------------------------------------------

inline ModeNode mode_node_from_json(const json& j, const std::string& where) {
    ModeNode node;
    std::string kind = io_detail::require_string(j, "kind", where);
    if (kind == "realtime") {
        RealtimeConfig rt;
        if (j.contains("voting")) {
            std::string v = j["voting"].get<std::string>();
            if (v == "plurality")
                rt.voting = VotingMethod::plurality;
            else if (v == "condorcet")
                rt.voting = VotingMethod::condorcet;
            else
                throw Error(Errc::schema_error, where + ": unknown voting method '" + v + "'");
        }
        if (j.contains("seat")) {
            const json& s = j["seat"];
            std::string type = io_detail::require_string(s, "type", where + " seat");
            if (type == "none")
                rt.seat.kind = SeatPolicy::Kind::none;
            else if (type == "fixed")
                rt.seat.kind = SeatPolicy::Kind::fixed;
            else if (type == "hot_seat")
                rt.seat.kind = SeatPolicy::Kind::hot_seat;
            else
                throw Error(Errc::schema_error, where + ": unknown seat type '" + type + "'");
            if (s.contains("holder")) rt.seat.holder = ParticipantId(s["holder"].get<std::string>());
            if (s.contains("rotation")) {
                std::string r = s["rotation"].get<std::string>();
                if (r == "round_robin")
                    rt.seat.rotation = SeatPolicy::Rotation::round_robin;
                else if (r == "instructor_priority")
                    rt.seat.rotation = SeatPolicy::Rotation::instructor_priority;
                else
                    throw Error(Errc::schema_error, where + ": unknown rotation '" + r + "'");
            }
        }
        node.config = rt;
    } else if (kind == "wait_for_me") {
        WaitForMeConfig wfm;
        if (j.contains("sync_points"))
            for (const json& sp : j["sync_points"])
                wfm.sync_points.insert(ModuleId(sp.get<std::string>()));
        if (j.contains("straggler")) {
            const json& s = j["straggler"];
            std::string p = io_detail::require_string(s, "policy", where + " straggler");
            if (p == "all")
                wfm.straggler.kind = StragglerPolicy::Kind::all;
            else if (p == "quorum")
                wfm.straggler.kind = StragglerPolicy::Kind::quorum;
            else if (p == "timeout")
                wfm.straggler.kind = StragglerPolicy::Kind::timeout;
            else
                throw Error(Errc::schema_error, where + ": unknown straggler policy '" + p + "'");
            if (s.contains("quorum")) wfm.straggler.quorum = s["quorum"].get<int>();
            if (s.contains("timeout_s")) wfm.straggler.timeout_s = s["timeout_s"].get<double>();
        }
        if (j.contains("instructors_count"))
            wfm.instructors_count = j["instructors_count"].get<bool>();
        node.config = wfm;
    } else if (kind == "timeslot") {
        TimeslotConfig ts;
        if (j.contains("windows")) {
            for (const auto& [key, value] : j["windows"].items()) {
                if (!value.is_array() || value.size() != 2)
                    throw Error(Errc::schema_error,
                                where + ": window for '" + key + "' must be [start,end]");
                ts.windows[ModuleId(key)] = {value[0].get<double>(), value[1].get<double>()};
            }
        }
        if (j.contains("late")) {
            std::string l = j["late"].get<std::string>();
            if (l == "block")
                ts.late = LatePolicy::block;
            else if (l == "allow")
                ts.late = LatePolicy::allow;
            else
                throw Error(Errc::schema_error, where + ": unknown late policy '" + l + "'");
        }
        node.config = ts;
    } else {
        throw Error(Errc::schema_error, where + ": unknown mode kind '" + kind + "'");
    }
    if (j.contains("scope"))
        for (const json& m : j["scope"]) node.scope.insert(ModuleId(m.get<std::string>()));
    if (j.contains("children")) {
        std::size_t i = 0;
        for (const json& c : j["children"])
            node.children.push_back(
                mode_node_from_json(c, where + " children[" + std::to_string(i++) + "]"));
    }
    return node;
}

inline json mode_node_to_json(const ModeNode& node) {
    json j;
    if (const auto* rt = std::get_if<RealtimeConfig>(&node.config)) {
        j["kind"] = "realtime";
        j["voting"] = to_string(rt->voting);
        json seat;
        switch (rt->seat.kind) {
            case SeatPolicy::Kind::none: seat["type"] = "none"; break;
            case SeatPolicy::Kind::fixed: seat["type"] = "fixed"; break;
            case SeatPolicy::Kind::hot_seat: seat["type"] = "hot_seat"; break;
        }
        if (rt->seat.holder) seat["holder"] = rt->seat.holder->str();
        seat["rotation"] = rt->seat.rotation == SeatPolicy::Rotation::round_robin
                               ? "round_robin"
                               : "instructor_priority";
        j["seat"] = std::move(seat);
    } else if (const auto* wfm = std::get_if<WaitForMeConfig>(&node.config)) {
        j["kind"] = "wait_for_me";
        json sps = json::array();
        for (const auto& sp : wfm->sync_points) sps.push_back(sp.str());
        j["sync_points"] = std::move(sps);
        json straggler;
        switch (wfm->straggler.kind) {
            case StragglerPolicy::Kind::all: straggler["policy"] = "all"; break;
            case StragglerPolicy::Kind::quorum:
                straggler["policy"] = "quorum";
                straggler["quorum"] = wfm->straggler.quorum;
                break;
            case StragglerPolicy::Kind::timeout:
                straggler["policy"] = "timeout";
                straggler["timeout_s"] = wfm->straggler.timeout_s;
                break;
        }
        j["straggler"] = std::move(straggler);
        if (wfm->instructors_count) j["instructors_count"] = true;
    } else if (const auto* ts = std::get_if<TimeslotConfig>(&node.config)) {
        j["kind"] = "timeslot";
        json windows = json::object();
        for (const auto& [m, w] : ts->windows) windows[m.str()] = json::array({w.start, w.end});
        j["windows"] = std::move(windows);
        j["late"] = ts->late == LatePolicy::block ? "block" : "allow";
    }
    if (!node.scope.empty()) {
        json scope = json::array();
        for (const auto& m : node.scope) scope.push_back(m.str());
        j["scope"] = std::move(scope);
    }
    if (!node.children.empty()) {
        json children = json::array();
        for (const auto& c : node.children) children.push_back(mode_node_to_json(c));
        j["children"] = std::move(children);
    }
    return j;
}

// --- session scenarios ----------------------------------------------------------

struct ScenarioEvent {
    double at = 0.0;
    std::string kind;
    json args;
};

struct SessionScenario {
    std::string id;
    std::string composition_ref;
    CompositionDoc doc;
    std::vector<Participant> participants;
    ModeNode mode_tree;
    std::vector<ScenarioEvent> events;
};

inline std::vector<Participant> participants_from_json(const json& j, const std::string& origin) {
    std::vector<Participant> out;
    std::size_t i = 0;
    for (const json& pj : j) {
        std::string where = origin + " participants[" + std::to_string(i++) + "]";
        Participant p;
        p.id = ParticipantId(io_detail::require_string(pj, "id", where));
        if (pj.contains("role")) p.role = io_detail::parse_role(pj["role"].get<std::string>(), where);
        out.push_back(std::move(p));
    }
    return out;
}

inline SessionScenario load_session_scenario(const std::filesystem::path& path) {
    std::string origin = path.string();
    json j = io_detail::parse_file(path);
    io_detail::require_schema_version(j, origin);
    SessionScenario scn;
    scn.id = io_detail::require_string(j, "id", origin);
    scn.composition_ref = io_detail::require_string(j, "composition_ref", origin);
    scn.doc = load_composition(path.parent_path() / scn.composition_ref);
    scn.participants = participants_from_json(io_detail::require(j, "participants", origin), origin);
    scn.mode_tree = mode_node_from_json(io_detail::require(j, "mode_tree", origin),
                                        origin + " mode_tree");
    std::size_t i = 0;
    for (const json& ej : io_detail::require(j, "events", origin)) {
        std::string where = origin + " events[" + std::to_string(i++) + "]";
        ScenarioEvent e;
        e.at = io_detail::require_number(ej, "at", where);
        e.kind = io_detail::require_string(ej, "kind", where);
        e.args = ej;
        // args may be inlined next to at/kind or nested under "args"
        if (ej.contains("args") && ej["args"].is_object())
            for (const auto& [key, value] : ej["args"].items()) e.args[key] = value;
        scn.events.push_back(std::move(e));
    }
    return scn;
}

inline json participants_to_json(const std::vector<Participant>& participants) {
    json out = json::array();
    for (const Participant& p : participants)
        out.push_back({{"id", p.id.str()},
                       {"role", p.role == Role::instructor ? "instructor" : "learner"}});
    return out;
}

inline json session_scenario_to_json(const SessionScenario& scn) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["id"] = scn.id;
    j["composition_ref"] = scn.composition_ref;
    j["participants"] = participants_to_json(scn.participants);
    j["mode_tree"] = mode_node_to_json(scn.mode_tree);
    json events = json::array();
    for (const ScenarioEvent& e : scn.events) events.push_back(e.args);  // original objects
    j["events"] = std::move(events);
    return j;
}

/// Replays a scenario's events through a fresh session. Engine rejections
/// abort with the offending event index; a blocked barrier entry is a normal
/// outcome, not a rejection.
inline Session replay_scenario(const SessionScenario& scn) {
    Session session(scn.doc.composition, scn.participants, scn.mode_tree, 0.0);
    std::map<ModuleId, PollId> open_polls;
    for (std::size_t i = 0; i < scn.events.size(); ++i) {
        const ScenarioEvent& e = scn.events[i];
        std::string where = "event[" + std::to_string(i) + "] (" + e.kind + ")";
        try {
            if (e.kind == "advance") {
                session.advance(ParticipantId(io_detail::require_string(e.args, "participant", where)),
                                ModuleId(io_detail::require_string(e.args, "to", where)), e.at);
            } else if (e.kind == "complete") {
                session.complete(ParticipantId(io_detail::require_string(e.args, "participant", where)),
                                 e.at);
            } else if (e.kind == "open_poll") {
                ModuleId m(io_detail::require_string(e.args, "module", where));
                std::vector<std::string> options;
                for (const json& o : io_detail::require(e.args, "options", where))
                    options.push_back(o.get<std::string>());
                std::optional<VotingMethod> method;
                if (e.args.contains("method")) {
                    std::string v = e.args["method"].get<std::string>();
                    method = v == "condorcet" ? VotingMethod::condorcet : VotingMethod::plurality;
                }
                open_polls[m] = session.open_poll(m, options, method, e.at);
            } else if (e.kind == "cast_ballot") {
                ModuleId m(io_detail::require_string(e.args, "module", where));
                auto it = open_polls.find(m);
                if (it == open_polls.end())
                    throw Error(Errc::poll_closed, "no open poll at '" + m.str() + "'");
                Ballot b;
                b.voter = ParticipantId(io_detail::require_string(e.args, "voter", where));
                for (const json& r : io_detail::require(e.args, "ranking", where))
                    b.ranking.push_back(r.get<std::string>());
                session.cast_ballot(it->second, b, e.at);
            } else if (e.kind == "tally") {
                ModuleId m(io_detail::require_string(e.args, "module", where));
                auto it = open_polls.find(m);
                if (it == open_polls.end())
                    throw Error(Errc::poll_closed, "no open poll at '" + m.str() + "'");
                session.tally(it->second, e.at);
                open_polls.erase(it);
            } else if (e.kind == "rotate_seat") {
                session.rotate_seat(e.at);
            } else if (e.kind == "force_release") {
                session.force_release(ModuleId(io_detail::require_string(e.args, "sync_point", where)),
                                      ParticipantId(io_detail::require_string(e.args, "by", where)),
                                      e.at);
            } else if (e.kind == "reference") {
                session.reference(ParticipantId(io_detail::require_string(e.args, "participant", where)),
                                  ModuleId(io_detail::require_string(e.args, "module", where)), e.at);
            } else if (e.kind == "tick") {
                session.tick(e.at);
            } else {
                throw Error(Errc::schema_error, "unknown event kind '" + e.kind + "'");
            }
        } catch (const Error& err) {
            throw Error(err.code(), where + ": " + err.what());
        }
    }
    return session;
}

// --- session state / log serialization --------------------------------------------

inline json session_log_json(const Session& session) {
    json log = json::array();
    for (const SessionEvent& e : session.log()) {
        json ej;
        ej["seq"] = e.seq;
        ej["at"] = e.at;
        ej["kind"] = e.kind;
        if (e.participant) ej["participant"] = e.participant->str();
        if (e.module) ej["module"] = e.module->str();
        if (!e.detail.empty()) {
            json d = json::object();
            for (const auto& [k, v] : e.detail) d[k] = v;
            ej["detail"] = std::move(d);
        }
        log.push_back(std::move(ej));
    }
    return log;
}

inline json session_state_json(const Session& session) {
    json state;
    state["clock"] = session.clock();
    json positions = json::object();
    for (const auto& [p, pos] : session.positions())
        positions[p.str()] = pos ? json(pos->str()) : json("done");
    state["positions"] = std::move(positions);

    json barriers = json::array();
    for (const ModuleId& sp : session.sync_points()) {
        BarrierStatus st = session.barrier_status(sp);
        json bj;
        bj["sync_point"] = sp.str();
        bj["released"] = st.released;
        json arrived = json::array();
        for (const auto& p : st.arrived) arrived.push_back(p.str());
        bj["arrived"] = std::move(arrived);
        json waiting = json::array();
        for (const auto& p : st.waiting_for) waiting.push_back(p.str());
        bj["waiting_for"] = std::move(waiting);
        json stragglers = json::array();
        for (const auto& p : st.stragglers) stragglers.push_back(p.str());
        bj["stragglers"] = std::move(stragglers);
        barriers.push_back(std::move(bj));
    }
    state["barriers"] = std::move(barriers);

    json polls = json::array();
    for (const Session::Poll& poll : session.polls()) {
        json pj;
        pj["module"] = poll.module.str();
        pj["method"] = to_string(poll.method);
        pj["options"] = poll.options;
        json ballots = json::object();
        for (const auto& [voter, ranking] : poll.ballots) ballots[voter.str()] = ranking;
        pj["ballots"] = std::move(ballots);
        pj["winner"] = poll.outcome ? json(poll.outcome->winner) : json(nullptr);
        polls.push_back(std::move(pj));
    }
    state["polls"] = std::move(polls);
    state["seat"] = session.seat_holder() ? json(session.seat_holder()->str()) : json(nullptr);
    return state;
}

// --- simulation scenarios -----------------------------------------------------------

inline SimulationScenario load_simulation_scenario(const std::filesystem::path& path) {
    std::string origin = path.string();
    json j = io_detail::parse_file(path);
    io_detail::require_schema_version(j, origin);
    SimulationScenario scn;
    scn.id = io_detail::require_string(j, "id", origin);
    std::string ref = io_detail::require_string(j, "composition_ref", origin);
    CompositionDoc doc = load_composition(path.parent_path() / ref);
    scn.registry = std::move(doc.registry);
    scn.composition = std::move(doc.composition);
    scn.participants = participants_from_json(io_detail::require(j, "participants", origin), origin);
    scn.mode_tree = mode_node_from_json(io_detail::require(j, "mode_tree", origin),
                                        origin + " mode_tree");
    scn.allocated_s = io_detail::require_number(j, "allocated_s", origin);
    std::size_t i = 0;
    for (const json& lj : io_detail::require(j, "learners", origin)) {
        std::string where = origin + " learners[" + std::to_string(i++) + "]";
        VirtualLearner l;
        l.participant = ParticipantId(io_detail::require_string(lj, "participant", where));
        if (lj.contains("speed_factor")) l.speed_factor = lj["speed_factor"].get<double>();
        if (lj.contains("skill")) l.skill = lj["skill"].get<double>();
        if (lj.contains("engagement_ratio")) l.engagement_ratio = lj["engagement_ratio"].get<double>();
        l.validate();
        scn.learners.push_back(std::move(l));
    }
    if (j.contains("success_band")) scn.success_band = j["success_band"].get<double>();
    if (j.contains("jitter")) scn.jitter = j["jitter"].get<bool>();
    if (j.contains("jitter_frac")) scn.jitter_frac = j["jitter_frac"].get<double>();

    if (j.contains("estimates"))
        for (const auto& [key, value] : j["estimates"].items())
            scn.estimates[ModuleId(key)] = value.get<double>();
    std::string missing;
    for (const ModuleId& m : scn.composition.members()) {
        if (scn.estimates.count(m)) continue;
        const Module* mod = scn.registry.find(m);
        if (mod && mod->author_estimate_s)
            scn.estimates[m] = *mod->author_estimate_s;
        else
            missing += (missing.empty() ? "" : ", ") + m.str();
    }
    if (!missing.empty())
        throw Error(Errc::missing_estimate, origin + ": no estimate for: " + missing);
    return scn;
}

/// The composition is stored by reference in scenario files, so the caller
/// names the ref; resolved estimates are written back explicitly.
inline json simulation_scenario_to_json(const SimulationScenario& scn,
                                        const std::string& composition_ref) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["id"] = scn.id;
    j["composition_ref"] = composition_ref;
    j["participants"] = participants_to_json(scn.participants);
    json learners = json::array();
    for (const VirtualLearner& l : scn.learners)
        learners.push_back({{"participant", l.participant.str()},
                            {"speed_factor", l.speed_factor},
                            {"skill", l.skill},
                            {"engagement_ratio", l.engagement_ratio}});
    j["learners"] = std::move(learners);
    j["mode_tree"] = mode_node_to_json(scn.mode_tree);
    j["allocated_s"] = scn.allocated_s;
    j["success_band"] = scn.success_band;
    if (scn.jitter) {
        j["jitter"] = true;
        j["jitter_frac"] = scn.jitter_frac;
    }
    json estimates = json::object();
    for (const auto& [m, secs] : scn.estimates) estimates[m.str()] = secs;
    j["estimates"] = std::move(estimates);
    return j;
}

inline json alt_report_json(const AltReport& report) {
    auto one = [](const ParticipantAlt& a) {
        json j;
        j["allocated_s"] = a.allocated_s;
        j["engaged_s"] = a.engaged_s;
        j["alt_s"] = a.alt_s;
        j["idle_s"] = a.idle_s;
        j["alt_ratio"] = a.alt_ratio;
        j["finished"] = a.finished;
        if (a.finished) j["finished_at"] = a.finished_at;
        return j;
    };
    json j;
    json per = json::object();
    for (const auto& [p, a] : report.per_participant) per[p.str()] = one(a);
    j["participants"] = std::move(per);
    j["total"] = one(report.total);
    return j;
}

// --- validation -----------------------------------------------------------------------

struct ValidationIssue {
    std::string code;
    std::string message;
};

struct ValidationReport {
    std::string file;
    std::string kind;
    bool valid = false;
    std::vector<ValidationIssue> issues;
};

/// Schema + invariant check for any of the shipped file formats. The format
/// is sniffed from the extension and top-level fields.
inline ValidationReport validate_file(const std::filesystem::path& path) {
    ValidationReport report;
    report.file = path.string();
    try {
        if (path.extension() == ".jsonl") {
            report.kind = "samples";
            SampleStore store;
            for (const DurationSample& s : load_samples(path)) store.record(s);
            report.valid = true;
            return report;
        }
        json j = io_detail::parse_file(path);
        if (!j.is_object()) throw Error(Errc::schema_error, "top level must be an object");
        if (j.contains("events")) {
            report.kind = "session_scenario";
            SessionScenario scn = load_session_scenario(path);
            Session probe(scn.doc.composition, scn.participants, scn.mode_tree, 0.0);
            (void)probe;
        } else if (j.contains("learners")) {
            report.kind = "simulation_scenario";
            SimulationScenario scn = load_simulation_scenario(path);
            Session probe(scn.composition, scn.participants, scn.mode_tree, 0.0);
            (void)probe;
        } else if (j.contains("assessments") || j.contains("scheduler")) {
            report.kind = "review_state";
            (void)review_book_from_json(j, path.string());
        } else if (j.contains("log")) {
            report.kind = "session_log";
            io_detail::require_schema_version(j, path.string());
            if (!j["log"].is_array())
                throw Error(Errc::schema_error, path.string() + ": 'log' must be an array");
            int seq = 0;
            double last_at = 0.0;
            for (const json& e : j["log"]) {
                std::string where = path.string() + " log[" + std::to_string(seq) + "]";
                if (static_cast<int>(io_detail::require_number(e, "seq", where)) != seq)
                    throw Error(Errc::schema_error, where + ": seq must be consecutive");
                double at = io_detail::require_number(e, "at", where);
                if (at < last_at)
                    throw Error(Errc::schema_error, where + ": event times must not decrease");
                last_at = at;
                io_detail::require_string(e, "kind", where);
                ++seq;
            }
        } else if (j.contains("modules") || j.contains("edges")) {
            report.kind = "composition";
            CompositionDoc doc = composition_from_json(j, path.string());
            (void)detail::topological_order(doc.composition);  // closed invariant
        } else {
            throw Error(Errc::schema_error, "unrecognized file format");
        }
        report.valid = true;
    } catch (const Error& e) {
        report.valid = false;
        report.issues.push_back({to_string(e.code()), e.what()});
    }
    return report;
}

}  // namespace chronocanvas
