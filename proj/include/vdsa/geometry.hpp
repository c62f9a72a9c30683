#pragma once

#include <cmath>

namespace vdsa {

/// Motorway coordinates: x along the carriageway, y lateral (m).
struct Position {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Position&) const = default;
};

inline double distance(const Position& a, const Position& b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Maps a motorway x coordinate onto the REM route distance.
struct RouteMapping {
  double offset_m = 0.0;
  double scale = 1.0;

  double to_route(double x) const { return (x - offset_m) / scale; }
  double to_motorway(double route_distance) const { return route_distance * scale + offset_m; }
  bool operator==(const RouteMapping&) const = default;
};

}  // namespace vdsa
