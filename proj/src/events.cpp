#include "turblucky/events.hpp"

#include <string>

#include "turblucky/error.hpp"

namespace turblucky {

void validate_events(const EventStream& stream) {
  require(stream.width > 0 && stream.height > 0, "event sensor dims must be positive");
  require(stream.duration_us > 0, "event stream duration must be positive");
  std::int64_t prev = 0;
  for (std::size_t i = 0; i < stream.events.size(); ++i) {
    const Event& e = stream.events[i];
    if (e.x < 0 || e.x >= stream.width || e.y < 0 || e.y >= stream.height)
      throw ValidationError("event " + std::to_string(i) + " outside sensor bounds");
    if (e.t_us < 0 || e.t_us >= stream.duration_us)
      throw ValidationError("event " + std::to_string(i) + " timestamp outside [0, duration)");
    if (e.polarity != 1 && e.polarity != -1)
      throw ValidationError("event " + std::to_string(i) + " polarity must be -1 or +1");
    if (e.t_us < prev)
      throw ValidationError("events not sorted by timestamp at index " + std::to_string(i));
    prev = e.t_us;
  }
}

}  // namespace turblucky
