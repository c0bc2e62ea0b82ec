#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "lfl/error.hpp"
#include "lfl/geometry.hpp"

namespace lfl {

struct StraightSegment {
  Vec2 start;
  Vec2 end;
};

// Circular arc from start_angle to end_angle about center. A counter-clockwise
// arc has end_angle > start_angle; a clockwise arc has end_angle < start_angle.
struct ArcSegment {
  Vec2 center;
  double radius = 0.0;
  double start_angle = 0.0;
  double end_angle = 0.0;
  bool ccw = true;
};

using Segment = std::variant<StraightSegment, ArcSegment>;

Vec2 segment_start(const Segment& s);
Vec2 segment_end(const Segment& s);
double segment_length(const Segment& s);

struct Obstacle {
  Vec2 center;
  double radius = 0.0;
  std::optional<double> present_from;
  std::optional<double> present_until;

  bool active_at(double t) const;
};

// Closest point on the path centerline to a query point.
struct PathProjection {
  Vec2 point;
  Vec2 tangent;          // unit, in the direction of travel
  double distance = 0.0; // unsigned, m
  double signed_offset = 0.0;  // positive when the query point lies left of the path
  double arc_length = 0.0;     // path coordinate of `point`, m from the track start
  std::size_t segment = 0;
};

class Track {
 public:
  static constexpr double kContinuityTolerance = 1e-9;
  static constexpr double kBlendWidth = 0.002;

  std::vector<Segment> segments;
  double line_width = 0.02;
  double reflect_line = 0.08;
  double reflect_surface = 0.92;
  std::vector<Obstacle> obstacles;
  // Linear reflectance ramp over kBlendWidth centered on the line edge.
  bool edge_blend = false;

  // Throws ValidationError (or ContinuityError) when an invariant is broken.
  void validate(double min_arc_radius = 0.0) const;

  double length() const;
  bool closed() const;

  PathProjection project(Vec2 p) const;
  Vec2 point_at(double arc_length) const;
  Vec2 tangent_at(double arc_length) const;
  Pose pose_at(double arc_length) const;
};

class ContinuityError : public ValidationError {
 public:
  ContinuityError(const std::string& what, std::size_t segment_number)
      : ValidationError(what), segment_number_(segment_number) {}
  // 1-based index of the segment whose start does not meet its predecessor.
  std::size_t segment_number() const { return segment_number_; }

 private:
  std::size_t segment_number_;
};

struct TrackLoadOptions {
  // Arcs tighter than this are rejected; 0 disables the check.
  double min_arc_radius = 0.15;
};

Track load_track(std::string_view document, const TrackLoadOptions& options = {});
Track load_track_file(const std::string& path, const TrackLoadOptions& options = {});
std::string serialize_track(const Track& track);

// Names accepted by bundled_track(): "paper", "tuning", "straight".
std::vector<std::string> bundled_track_names();
std::string bundled_track_document(std::string_view name);
Track bundled_track(std::string_view name);

double reflectance_at(const Track& track, Vec2 p);

// Signed distance in cm from `reference` (the IR sensor midpoint) to the nearest
// centerline point, positive when the line lies to the left of the pose heading.
// Empty when the distance exceeds 1 m.
std::optional<double> lateral_error_cm(const Track& track, const Pose& reference);

inline constexpr double kOffTrackDistance = 1.0;
inline constexpr double kBeamHalfAngle = deg_to_rad(7.5);

// Distance from the ultrasonic mount along its heading to the nearest obstacle
// active at time t, using a center ray and two rays at +-7.5 degrees.
std::optional<double> raycast_obstacle(const Track& track, const Pose& mount, double max_range,
                                       double t);

}  // namespace lfl
