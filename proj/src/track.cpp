#include "lfl/track.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace lfl {

namespace {

double arc_sweep(const ArcSegment& a) { return std::abs(a.end_angle - a.start_angle); }

Vec2 arc_point(const ArcSegment& a, double angle) {
  return a.center + unit_from_angle(angle) * a.radius;
}

// Angle swept from start_angle to `angle` in the arc's travel direction, in [0, 2pi).
double swept_to(const ArcSegment& a, double angle) {
  double d = a.ccw ? angle - a.start_angle : a.start_angle - angle;
  d = std::fmod(d, kTwoPi);
  if (d < 0) d += kTwoPi;
  return d;
}

struct LocalProjection {
  Vec2 point;
  Vec2 tangent;
  double along = 0.0;  // m from the segment start
};

LocalProjection project_straight(const StraightSegment& s, Vec2 p) {
  Vec2 d = s.end - s.start;
  double len = norm(d);
  Vec2 t = d * (1.0 / len);
  double u = std::clamp(dot(p - s.start, t), 0.0, len);
  return {s.start + t * u, t, u};
}

Vec2 arc_tangent(const ArcSegment& a, double angle) {
  Vec2 radial = unit_from_angle(angle);
  return a.ccw ? Vec2{-radial.y, radial.x} : Vec2{radial.y, -radial.x};
}

LocalProjection project_arc(const ArcSegment& a, Vec2 p) {
  Vec2 rel = p - a.center;
  double phi = std::atan2(rel.y, rel.x);
  double sweep = arc_sweep(a);
  double swept = swept_to(a, phi);
  if (swept > sweep) {
    Vec2 s = arc_point(a, a.start_angle);
    Vec2 e = arc_point(a, a.end_angle);
    swept = norm(p - s) <= norm(p - e) ? 0.0 : sweep;
  }
  double angle = a.ccw ? a.start_angle + swept : a.start_angle - swept;
  return {arc_point(a, angle), arc_tangent(a, angle), swept * a.radius};
}

LocalProjection project_segment(const Segment& seg, Vec2 p) {
  return std::visit(
      [&](const auto& s) {
        if constexpr (std::is_same_v<std::decay_t<decltype(s)>, StraightSegment>) {
          return project_straight(s, p);
        } else {
          return project_arc(s, p);
        }
      },
      seg);
}

struct Token {
  std::string_view text;
  int column = 0;
};

std::vector<Token> tokenize(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (line[i] == '#') break;
    if (std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j])) && line[j] != '#') ++j;
    out.push_back({line.substr(i, j - i), static_cast<int>(i) + 1});
    i = j;
  }
  return out;
}

double parse_number(const Token& tok, int line_no) {
  double v = 0.0;
  const char* first = tok.text.data();
  const char* last = first + tok.text.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw ParseError("expected a number, got '" + std::string(tok.text) + "'", line_no, tok.column);
  }
  return v;
}

void expect_arity(const std::vector<Token>& toks, std::size_t lo, std::size_t hi, int line_no) {
  if (toks.size() < lo || toks.size() > hi) {
    int col = toks.size() > hi ? toks[hi].column : toks.back().column;
    throw ParseError("'" + std::string(toks[0].text) + "' expects " + std::to_string(lo - 1) +
                         (lo == hi ? "" : "-" + std::to_string(hi - 1)) + " arguments",
                     line_no, col);
  }
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

Vec2 segment_start(const Segment& s) {
  if (const auto* st = std::get_if<StraightSegment>(&s)) return st->start;
  const auto& a = std::get<ArcSegment>(s);
  return arc_point(a, a.start_angle);
}

Vec2 segment_end(const Segment& s) {
  if (const auto* st = std::get_if<StraightSegment>(&s)) return st->end;
  const auto& a = std::get<ArcSegment>(s);
  return arc_point(a, a.end_angle);
}

double segment_length(const Segment& s) {
  if (const auto* st = std::get_if<StraightSegment>(&s)) return norm(st->end - st->start);
  const auto& a = std::get<ArcSegment>(s);
  return a.radius * arc_sweep(a);
}

bool Obstacle::active_at(double t) const {
  if (present_from && t < *present_from) return false;
  if (present_until && t >= *present_until) return false;
  return true;
}

void Track::validate(double min_arc_radius) const {
  if (segments.empty()) throw ValidationError("segments: track has no segments");
  if (!(line_width > 0.0)) throw ValidationError("line_width: must be positive");
  if (!(reflect_line >= 0.0 && reflect_line < reflect_surface && reflect_surface <= 1.0)) {
    throw ValidationError("reflect: require 0 <= line < surface <= 1");
  }
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const std::string label = "segment " + std::to_string(i + 1);
    if (const auto* st = std::get_if<StraightSegment>(&segments[i])) {
      if (!(norm(st->end - st->start) > 0.0)) throw ValidationError(label + ": zero-length straight");
    } else {
      const auto& a = std::get<ArcSegment>(segments[i]);
      if (!(a.radius > 0.0)) throw ValidationError(label + ": arc radius must be positive");
      if (min_arc_radius > 0.0 && a.radius < min_arc_radius) {
        throw ValidationError(label + ": arc radius " + format_double(a.radius) +
                              " m is below the minimum " + format_double(min_arc_radius) + " m");
      }
      double sweep = a.end_angle - a.start_angle;
      if (a.ccw ? !(sweep > 0.0) : !(sweep < 0.0)) {
        throw ValidationError(label + ": arc angles disagree with its direction");
      }
      if (std::abs(sweep) > kTwoPi) throw ValidationError(label + ": arc sweeps more than a full turn");
    }
    if (i > 0) {
      double gap = norm(segment_start(segments[i]) - segment_end(segments[i - 1]));
      if (gap > kContinuityTolerance) {
        throw ContinuityError("segment " + std::to_string(i + 1) + ": starts " + format_double(gap) +
                                  " m from the end of segment " + std::to_string(i),
                              i + 1);
      }
    }
  }
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    const auto& o = obstacles[i];
    const std::string label = "obstacle " + std::to_string(i + 1);
    if (!(o.radius > 0.0)) throw ValidationError(label + ": radius must be positive");
    if (o.present_from && o.present_until && !(*o.present_from < *o.present_until)) {
      throw ValidationError(label + ": present_from must precede present_until");
    }
  }
}

double Track::length() const {
  double total = 0.0;
  for (const auto& s : segments) total += segment_length(s);
  return total;
}

bool Track::closed() const {
  return !segments.empty() &&
         norm(segment_start(segments.front()) - segment_end(segments.back())) <= kContinuityTolerance;
}

PathProjection Track::project(Vec2 p) const {
  PathProjection best;
  best.distance = std::numeric_limits<double>::infinity();
  double offset = 0.0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    LocalProjection lp = project_segment(segments[i], p);
    double d = norm(p - lp.point);
    if (d < best.distance) {
      best.point = lp.point;
      best.tangent = lp.tangent;
      best.distance = d;
      best.signed_offset = cross(lp.tangent, p - lp.point) >= 0.0 ? d : -d;
      best.arc_length = offset + lp.along;
      best.segment = i;
    }
    offset += segment_length(segments[i]);
  }
  return best;
}

Pose Track::pose_at(double s) const {
  double total = length();
  if (closed()) {
    s = std::fmod(s, total);
    if (s < 0) s += total;
  } else {
    s = std::clamp(s, 0.0, total);
  }
  for (std::size_t i = 0; i < segments.size(); ++i) {
    double len = segment_length(segments[i]);
    if (s <= len || i + 1 == segments.size()) {
      double u = std::min(s, len);
      if (const auto* st = std::get_if<StraightSegment>(&segments[i])) {
        Vec2 t = (st->end - st->start) * (1.0 / len);
        return {st->start + t * u, std::atan2(t.y, t.x)};
      }
      const auto& a = std::get<ArcSegment>(segments[i]);
      double angle = a.ccw ? a.start_angle + u / a.radius : a.start_angle - u / a.radius;
      Vec2 t = arc_tangent(a, angle);
      return {arc_point(a, angle), std::atan2(t.y, t.x)};
    }
    s -= len;
  }
  return {};
}

Vec2 Track::point_at(double s) const { return pose_at(s).position; }
Vec2 Track::tangent_at(double s) const { return unit_from_angle(pose_at(s).heading); }

Track load_track(std::string_view document, const TrackLoadOptions& options) {
  Track track;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= document.size()) {
    std::size_t nl = document.find('\n', pos);
    std::string_view line = document.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? document.size() + 1 : nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    auto toks = tokenize(line);
    if (toks.empty()) continue;
    std::string_view kw = toks[0].text;
    auto num = [&](std::size_t i) { return parse_number(toks[i], line_no); };
    if (kw == "line_width") {
      expect_arity(toks, 2, 2, line_no);
      track.line_width = num(1);
    } else if (kw == "reflect") {
      expect_arity(toks, 5, 5, line_no);
      if (toks[1].text != "line") throw ParseError("expected 'line'", line_no, toks[1].column);
      if (toks[3].text != "surface") throw ParseError("expected 'surface'", line_no, toks[3].column);
      track.reflect_line = num(2);
      track.reflect_surface = num(4);
    } else if (kw == "straight") {
      expect_arity(toks, 5, 5, line_no);
      track.segments.push_back(StraightSegment{{num(1), num(2)}, {num(3), num(4)}});
    } else if (kw == "arc") {
      expect_arity(toks, 7, 7, line_no);
      bool ccw = false;
      if (toks[6].text == "ccw") {
        ccw = true;
      } else if (toks[6].text != "cw") {
        throw ParseError("expected 'ccw' or 'cw'", line_no, toks[6].column);
      }
      track.segments.push_back(ArcSegment{{num(1), num(2)}, num(3), num(4), num(5), ccw});
    } else if (kw == "obstacle") {
      if (toks.size() != 4 && toks.size() != 6) expect_arity(toks, 4, 4, line_no);
      Obstacle o{{num(1), num(2)}, num(3), std::nullopt, std::nullopt};
      if (toks.size() == 6) {
        o.present_from = num(4);
        o.present_until = num(5);
      }
      track.obstacles.push_back(o);
    } else {
      throw ParseError("unknown directive '" + std::string(kw) + "'", line_no, toks[0].column);
    }
  }
  track.validate(options.min_arc_radius);
  return track;
}

Track load_track_file(const std::string& path, const TrackLoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open track file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return load_track(ss.str(), options);
}

std::string serialize_track(const Track& track) {
  std::ostringstream os;
  os << "line_width " << format_double(track.line_width) << "\n";
  os << "reflect line " << format_double(track.reflect_line) << " surface "
     << format_double(track.reflect_surface) << "\n";
  for (const auto& seg : track.segments) {
    if (const auto* s = std::get_if<StraightSegment>(&seg)) {
      os << "straight " << format_double(s->start.x) << ' ' << format_double(s->start.y) << ' '
         << format_double(s->end.x) << ' ' << format_double(s->end.y) << "\n";
    } else {
      const auto& a = std::get<ArcSegment>(seg);
      os << "arc " << format_double(a.center.x) << ' ' << format_double(a.center.y) << ' '
         << format_double(a.radius) << ' ' << format_double(a.start_angle) << ' '
         << format_double(a.end_angle) << (a.ccw ? " ccw" : " cw") << "\n";
    }
  }
  for (const auto& o : track.obstacles) {
    os << "obstacle " << format_double(o.center.x) << ' ' << format_double(o.center.y) << ' '
       << format_double(o.radius);
    if (o.present_from || o.present_until) {
      os << ' ' << format_double(o.present_from.value_or(-1e300)) << ' '
         << format_double(o.present_until.value_or(1e300));
    }
    os << "\n";
  }
  return os.str();
}

double reflectance_at(const Track& track, Vec2 p) {
  double d = track.project(p).distance;
  double half = track.line_width / 2.0;
  if (!track.edge_blend) return d <= half ? track.reflect_line : track.reflect_surface;
  double lo = half - Track::kBlendWidth / 2.0;
  double hi = half + Track::kBlendWidth / 2.0;
  if (d <= lo) return track.reflect_line;
  if (d >= hi) return track.reflect_surface;
  double w = (d - lo) / (hi - lo);
  return track.reflect_line + w * (track.reflect_surface - track.reflect_line);
}

std::optional<double> lateral_error_cm(const Track& track, const Pose& reference) {
  PathProjection pr = track.project(reference.position);
  if (pr.distance > kOffTrackDistance) return std::nullopt;
  Vec2 left{-std::sin(reference.heading), std::cos(reference.heading)};
  double side = dot(pr.point - reference.position, left);
  return (side >= 0.0 ? pr.distance : -pr.distance) * 100.0;
}

std::optional<double> raycast_obstacle(const Track& track, const Pose& mount, double max_range,
                                       double t) {
  if (!(max_range > 0.0 && max_range <= 4.0)) {
    throw ValidationError("max_range: must lie in (0, 4] m");
  }
  std::optional<double> best;
  const double offsets[] = {0.0, kBeamHalfAngle, -kBeamHalfAngle};
  for (const auto& o : track.obstacles) {
    if (!o.active_at(t)) continue;
    Vec2 rel = mount.position - o.center;
    double c = dot(rel, rel) - o.radius * o.radius;
    for (double off : offsets) {
      Vec2 dir = unit_from_angle(mount.heading + off);
      double hit;
      if (c <= 0.0) {
        hit = 0.0;
      } else {
        double b = dot(dir, rel);
        double disc = b * b - c;
        if (disc < 0.0) continue;
        hit = -b - std::sqrt(disc);
        if (hit < 0.0) continue;
      }
      if (hit <= max_range && (!best || hit < *best)) best = hit;
    }
  }
  return best;
}

}  // namespace lfl
