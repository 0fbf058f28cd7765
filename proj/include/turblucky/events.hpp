#pragma once

#include <cstdint>
#include <vector>

namespace turblucky {

struct Event {
  std::int64_t t_us = 0;
  int x = 0;
  int y = 0;
  int polarity = 1;  // -1 or +1

  bool operator==(const Event&) const = default;
};

// Total order used whenever event lists are merged; t first.
inline bool event_before(const Event& a, const Event& b) {
  if (a.t_us != b.t_us) return a.t_us < b.t_us;
  if (a.y != b.y) return a.y < b.y;
  if (a.x != b.x) return a.x < b.x;
  return a.polarity < b.polarity;
}

struct EventStream {
  std::vector<Event> events;
  std::int64_t duration_us = 0;
  int width = 0;
  int height = 0;

  std::size_t size() const { return events.size(); }
  bool operator==(const EventStream&) const = default;
};

// Sorted timestamps, in-bounds coordinates, t in [0, duration), p in {-1,+1}.
void validate_events(const EventStream& stream);

}  // namespace turblucky
