#pragma once

#include <cstdint>
#include <span>

#include "turblucky/events.hpp"
#include "turblucky/turbulence.hpp"

namespace turblucky {

struct EventSimConfig {
  double contrast_threshold = 0.2;  // log-intensity units
  double log_eps = 1e-3;
  double noise_rate = 0.5;  // background events per pixel per second
  std::uint64_t seed = 0;
};

void validate_event_sim_config(const EventSimConfig& cfg);

// Reference-level DVS model. Each pixel keeps a reference log intensity; whenever the
// current value is >= C away from it, floor(|dl| / C) events fire with timestamps
// interpolated inside the step and the reference moves by the emitted amount.
// Background noise is a per-pixel Poisson process over [0, duration_us).
EventStream simulate_events(std::span<const Image> trace, std::span<const std::int64_t> timestamps_us,
                            std::int64_t duration_us, const EventSimConfig& cfg);

inline EventStream simulate_events(const IntensityTrace& trace, std::int64_t duration_us,
                                   const EventSimConfig& cfg) {
  return simulate_events(trace.images, trace.timestamps_us, duration_us, cfg);
}

}  // namespace turblucky
