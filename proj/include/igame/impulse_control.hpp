#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <vector>

#include "igame/errors.hpp"
#include "igame/problem_model.hpp"

namespace igame {

/// Action time meaning "never acts"; compares greater than any horizon.
inline constexpr double kNever = std::numeric_limits<double>::infinity();

struct ImpulseEvent {
    double time = 0.0;
    std::vector<double> action;

    bool operator==(const ImpulseEvent&) const = default;
};

/// Realised impulse control of one player: events sorted by time.
class ImpulseSchedule {
public:
    explicit ImpulseSchedule(Player player = Player::I) : player_(player) {}

    ImpulseSchedule(Player player, std::vector<ImpulseEvent> events) : player_(player), events_(std::move(events)) {
        for (std::size_t i = 1; i < events_.size(); ++i)
            if (events_[i].time < events_[i - 1].time)
                throw PreconditionError("impulse times must be non-decreasing");
    }

    Player player() const { return player_; }
    const std::vector<ImpulseEvent>& events() const { return events_; }
    std::size_t size() const { return events_.size(); }
    bool empty() const { return events_.empty(); }

    void push_back(ImpulseEvent e) {
        if (!events_.empty() && e.time < events_.back().time)
            throw PreconditionError("impulse times must be non-decreasing");
        events_.push_back(std::move(e));
    }

    bool operator==(const ImpulseSchedule&) const = default;

private:
    Player player_;
    std::vector<ImpulseEvent> events_;
};

/// Number of impulses up to and including tau.
inline std::size_t impulse_count(const ImpulseSchedule& s, double t0, double tau) {
    if (tau < t0) throw PreconditionError("impulse_count requires t0 <= tau");
    return static_cast<std::size_t>(std::count_if(s.events().begin(), s.events().end(),
                                                  [&](const ImpulseEvent& e) { return e.time <= tau; }));
}

/// Sub-schedule of the events timed in [tau, sigma].
inline ImpulseSchedule restrict(const ImpulseSchedule& s, double tau, double sigma) {
    if (sigma < tau) throw PreconditionError("restrict requires tau <= sigma");
    ImpulseSchedule out(s.player());
    for (const auto& e : s.events())
        if (e.time >= tau && e.time <= sigma) out.push_back(e);
    return out;
}

/// u1 followed by u2; u1 must end by `split` and u2 start after it.
inline ImpulseSchedule concat(const ImpulseSchedule& u1, const ImpulseSchedule& u2, double split) {
    if (u1.player() != u2.player()) throw PreconditionError("concat requires schedules of the same player");
    for (const auto& e : u1.events())
        if (e.time > split) throw PreconditionError("concat: first schedule has events after the split");
    for (const auto& e : u2.events())
        if (!(e.time > split)) throw PreconditionError("concat: second schedule has events at or before the split");
    auto events = u1.events();
    events.insert(events.end(), u2.events().begin(), u2.events().end());
    return ImpulseSchedule(u1.player(), std::move(events));
}

struct TimelineEntry {
    double time = 0.0;
    Player player = Player::I;
    std::vector<double> action;
    bool discarded = false;  ///< player-I event suppressed by a simultaneous player-II event

    bool operator==(const TimelineEntry&) const = default;
};

using MergedTimeline = std::vector<TimelineEntry>;

/// Time-ordered merge of both players' events. When both act at the same
/// instant only player II's action counts; player I's event is kept but
/// flagged discarded. Within one timestamp II entries precede I entries.
inline MergedTimeline merge_with_priority(const ImpulseSchedule& u, const ImpulseSchedule& v) {
    if (u.player() != Player::I || v.player() != Player::II)
        throw PreconditionError("merge_with_priority expects (player I, player II) schedules");
    MergedTimeline out;
    out.reserve(u.size() + v.size());
    std::size_t i = 0, j = 0;
    const auto& ue = u.events();
    const auto& ve = v.events();
    while (i < ue.size() || j < ve.size()) {
        const bool take_v = j < ve.size() && (i >= ue.size() || ve[j].time <= ue[i].time);
        if (take_v) {
            out.push_back({ve[j].time, Player::II, ve[j].action, false});
            ++j;
        } else {
            const bool collides = std::any_of(ve.begin(), ve.end(), [&](const ImpulseEvent& e) {
                return e.time == ue[i].time;
            });
            out.push_back({ue[i].time, Player::I, ue[i].action, collides});
            ++i;
        }
    }
    return out;
}

/// Accumulated impulse gain process at time s: chi summed over player II
/// events minus c summed over effective player I events, both up to s.
inline double accumulate_theta(const MergedTimeline& timeline, const ProblemSpec& spec, double s) {
    double theta = 0.0;
    for (const auto& e : timeline) {
        if (e.time > s) continue;
        if (e.player == Player::II)
            theta += spec.gain(e.time, e.action);
        else if (!e.discarded)
            theta -= spec.cost(e.time, e.action);
    }
    return theta;
}

}  // namespace igame
