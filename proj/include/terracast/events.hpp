#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "terracast/geo.hpp"

namespace terracast {

enum class Animal { tiger, leopard, boar, other };
enum class Victim { human, cattle };
enum class Outcome { killed, injured };

inline std::string_view to_string(Animal a) {
  switch (a) {
    case Animal::tiger: return "tiger";
    case Animal::leopard: return "leopard";
    case Animal::boar: return "boar";
    default: return "other";
  }
}
inline std::string_view to_string(Victim v) { return v == Victim::human ? "human" : "cattle"; }
inline std::string_view to_string(Outcome o) { return o == Outcome::killed ? "killed" : "injured"; }

// Unknown species collapse to `other`; the field is carried but never used as a model feature.
inline Animal parse_animal(std::string_view s) {
  if (s == "tiger") return Animal::tiger;
  if (s == "leopard") return Animal::leopard;
  if (s == "boar" || s == "wild boar") return Animal::boar;
  return Animal::other;
}

struct ConflictEvent {
  std::string id;
  GeoPoint location;
  TimePeriod period;
  int day = 1;  // kept only so cleaned files round-trip exactly
  Animal animal = Animal::other;
  Victim victim = Victim::cattle;
  Outcome outcome = Outcome::killed;
  std::string village;
};

// An event reduced to what the tiler needs.
struct ProjectedEvent {
  PlanarPoint pos;
  TimePeriod period;
};

inline std::vector<ProjectedEvent> project_events(std::span<const ConflictEvent> events,
                                                  const GeoPoint& origin) {
  std::vector<ProjectedEvent> out;
  out.reserve(events.size());
  for (const auto& e : events) out.push_back({project(e.location, origin), e.period});
  return out;
}

inline std::int64_t count_in_region(std::span<const ProjectedEvent> events, const RegionRect& region,
                                    const TimePeriod& period) {
  return std::count_if(events.begin(), events.end(), [&](const ProjectedEvent& e) {
    return e.period == period && region.contains(e.pos);
  });
}

// Sum over events of I(l_i in r) for the query period.
inline std::int64_t count_in_region(std::span<const ConflictEvent> events, const RegionRect& region,
                                    const TimePeriod& period, const GeoPoint& origin) {
  std::int64_t n = 0;
  for (const auto& e : events)
    if (e.period == period && region.contains(project(e.location, origin))) ++n;
  return n;
}

}  // namespace terracast
