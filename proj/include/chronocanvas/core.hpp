#pragma once

#include <algorithm>
#include <cctype>
#include <compare>
#include <stdexcept>
#include <string>

namespace chronocanvas {

inline constexpr int kSchemaVersion = 1;

/// Error codes surfaced by every module. One enum so callers can switch on
/// failures without string matching.
enum class Errc {
    // graph
    duplicate_id,
    unknown_module,
    self_loop,
    cycle,
    // estimation
    non_positive_duration,
    insufficient_data,
    missing_estimate,
    // repetition
    not_sr_aware,
    invalid_grade,
    // synchronization
    invalid_mode_tree,
    empty_participants,
    not_realtime_scope,
    poll_already_open,
    not_participant,
    poll_closed,
    not_seat_holder,
    invalid_ballot,
    no_ballots,
    illegal_move,
    barrier_blocked,
    window_not_open,
    window_closed,
    poll_required,
    not_seat_mode,
    unknown_sync_point,
    // persistence
    schema_error,
    parse_error,
    io_error,
};

inline const char* to_string(Errc c) {
    switch (c) {
        case Errc::duplicate_id: return "duplicate_id";
        case Errc::unknown_module: return "unknown_module";
        case Errc::self_loop: return "self_loop";
        case Errc::cycle: return "cycle";
        case Errc::non_positive_duration: return "non_positive_duration";
        case Errc::insufficient_data: return "insufficient_data";
        case Errc::missing_estimate: return "missing_estimate";
        case Errc::not_sr_aware: return "not_sr_aware";
        case Errc::invalid_grade: return "invalid_grade";
        case Errc::invalid_mode_tree: return "invalid_mode_tree";
        case Errc::empty_participants: return "empty_participants";
        case Errc::not_realtime_scope: return "not_realtime_scope";
        case Errc::poll_already_open: return "poll_already_open";
        case Errc::not_participant: return "not_participant";
        case Errc::poll_closed: return "poll_closed";
        case Errc::not_seat_holder: return "not_seat_holder";
        case Errc::invalid_ballot: return "invalid_ballot";
        case Errc::no_ballots: return "no_ballots";
        case Errc::illegal_move: return "illegal_move";
        case Errc::barrier_blocked: return "barrier_blocked";
        case Errc::window_not_open: return "window_not_open";
        case Errc::window_closed: return "window_closed";
        case Errc::poll_required: return "poll_required";
        case Errc::not_seat_mode: return "not_seat_mode";
        case Errc::unknown_sync_point: return "unknown_sync_point";
        case Errc::schema_error: return "schema_error";
        case Errc::parse_error: return "parse_error";
        case Errc::io_error: return "io_error";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

/// Opaque module identifier. Nonempty, stable across persistence round-trips.
class ModuleId {
public:
    ModuleId() = default;

    explicit ModuleId(std::string value) : value_(std::move(value)) {
        if (value_.empty()) throw Error(Errc::schema_error, "module id must be nonempty");
    }

    const std::string& str() const noexcept { return value_; }
    bool empty() const noexcept { return value_.empty(); }

    auto operator<=>(const ModuleId&) const = default;

private:
    std::string value_;
};

/// Opaque participant identifier (a session member; may be a learner or an
/// instructor, see Participant).
class ParticipantId {
public:
    ParticipantId() = default;

    explicit ParticipantId(std::string value) : value_(std::move(value)) {
        if (value_.empty()) throw Error(Errc::schema_error, "participant id must be nonempty");
    }

    const std::string& str() const noexcept { return value_; }

    auto operator<=>(const ParticipantId&) const = default;

private:
    std::string value_;
};

enum class Role { learner, instructor };

struct Participant {
    ParticipantId id;
    Role role = Role::learner;
};

/// Tags are free-form but case-normalized so "Video" and "video" compare equal.
inline std::string normalize_tag(std::string tag) {
    std::transform(tag.begin(), tag.end(), tag.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return tag;
}

}  // namespace chronocanvas
