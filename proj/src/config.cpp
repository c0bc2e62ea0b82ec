#include "lfl/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "lfl/error.hpp"
#include "lfl/rng.hpp"

namespace lfl {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string fmt_double(double v) {
  // Shortest representation that round-trips.
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

struct Binding {
  std::string key;
  std::function<void(ScenarioConfig&, const std::string&)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

template <typename Get>
Binding real_binding(std::string key, Get ref) {
  return {key,
          [key, ref](ScenarioConfig& c, const std::string& v) { ref(c) = to_double(key, v); },
          [ref](const ScenarioConfig& c) { return fmt_double(ref(const_cast<ScenarioConfig&>(c))); }};
}

template <typename Get>
Binding int_binding(std::string key, Get ref, long long lo, long long hi) {
  return {key,
          [key, ref, lo, hi](ScenarioConfig& c, const std::string& v) {
            long long x = to_int(key, v);
            if (x < lo || x > hi) {
              throw ConfigError(key + ": " + v + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
            }
            ref(c) = static_cast<std::remove_reference_t<decltype(ref(c))>>(x);
          },
          [ref](const ScenarioConfig& c) { return std::to_string(ref(const_cast<ScenarioConfig&>(c))); }};
}

template <typename Get>
Binding bool_binding(std::string key, Get ref) {
  return {key, [key, ref](ScenarioConfig& c, const std::string& v) { ref(c) = to_bool(key, v); },
          [ref](const ScenarioConfig& c) { return std::string(ref(const_cast<ScenarioConfig&>(c)) ? "true" : "false"); }};
}

#define LFL_REF(expr) [](ScenarioConfig& c) -> decltype(auto) { return (c.expr); }

const std::vector<Binding>& scenario_bindings() {
  static const std::vector<Binding> bindings = [] {
    std::vector<Binding> b;
    b.push_back({"seed", [](ScenarioConfig& c, const std::string& v) {
                   long long x = to_int("seed", v);
                   if (x < 0) throw ConfigError("seed: must be non-negative");
                   c.seed = static_cast<std::uint64_t>(x);
                 },
                 [](const ScenarioConfig& c) { return std::to_string(c.seed); }});
    b.push_back(real_binding("sim.duration", LFL_REF(duration)));
    b.push_back(real_binding("sim.physics_step", LFL_REF(physics_step)));
    b.push_back(bool_binding("sim.fsm", LFL_REF(fsm_enabled)));

    b.push_back(real_binding("plant.wheel_base", LFL_REF(plant.geometry.wheel_base)));
    b.push_back(real_binding("plant.wheel_diameter", LFL_REF(plant.geometry.wheel_diameter)));
    b.push_back(real_binding("plant.sensor_forward_offset", LFL_REF(plant.geometry.sensor_forward_offset)));
    b.push_back(real_binding("plant.sensor_lateral_spacing", LFL_REF(plant.geometry.sensor_lateral_spacing)));
    b.push_back(real_binding("plant.ultrasonic_forward_offset", LFL_REF(plant.geometry.ultrasonic_forward_offset)));
    b.push_back(real_binding("plant.motor_tau", LFL_REF(plant.motor_tau)));
    b.push_back(int_binding("plant.dead_zone", LFL_REF(plant.dead_zone), 0, 255));
    b.push_back(real_binding("plant.gain_left", LFL_REF(plant.gain_left)));
    b.push_back(real_binding("plant.gain_right", LFL_REF(plant.gain_right)));

    b.push_back(real_binding("ir.gain", LFL_REF(ir.gain)));
    b.push_back(real_binding("ir.noise_sigma", LFL_REF(ir.noise_sigma)));
    b.push_back(bool_binding("ir.invert", LFL_REF(ir.invert)));
    b.push_back(int_binding("ir.samples_per_tick", LFL_REF(ir.samples_per_tick), 1, 5));
    for (const char* side : {"left", "right"}) {
      std::string key = std::string("ir.threshold_") + side;
      bool left = std::string(side) == "left";
      b.push_back({key,
                   [key, left](ScenarioConfig& c, const std::string& v) {
                     auto& slot = left ? c.threshold_left : c.threshold_right;
                     if (v == "auto") {
                       slot.reset();
                       return;
                     }
                     long long x = to_int(key, v);
                     if (x < 0 || x > 1023) throw ConfigError(key + ": outside [0, 1023]");
                     slot = static_cast<int>(x);
                   },
                   [left](const ScenarioConfig& c) {
                     const auto& slot = left ? c.threshold_left : c.threshold_right;
                     return slot ? std::to_string(*slot) : std::string("auto");
                   }});
    }

    b.push_back(real_binding("us.temperature", LFL_REF(ultrasonic.temperature)));
    b.push_back(real_binding("us.jitter_sigma", LFL_REF(ultrasonic.timing_jitter_sigma)));
    b.push_back(real_binding("us.max_range", LFL_REF(ultrasonic.max_range)));
    b.push_back(real_binding("us.min_range", LFL_REF(ultrasonic.min_range)));

    b.push_back({"controller.kind",
                 [](ScenarioConfig& c, const std::string& v) {
                   if (v == "pid") {
                     c.controller.kind = ControllerKind::kPid;
                   } else if (v == "onoff") {
                     c.controller.kind = ControllerKind::kOnOff;
                   } else {
                     throw ConfigError("controller.kind: expected pid or onoff, got '" + v + "'");
                   }
                 },
                 [](const ScenarioConfig& c) {
                   return std::string(c.controller.kind == ControllerKind::kPid ? "pid" : "onoff");
                 }});
    b.push_back(real_binding("pid.kp", LFL_REF(controller.gains.kp)));
    b.push_back(real_binding("pid.ki", LFL_REF(controller.gains.ki)));
    b.push_back(real_binding("pid.kd", LFL_REF(controller.gains.kd)));
    b.push_back(real_binding("pid.t_s", LFL_REF(controller.gains.t_s)));
    b.push_back(int_binding("pid.base_pwm", LFL_REF(controller.base_pwm), 0, 255));
    b.push_back(bool_binding("pid.cross_wired", LFL_REF(controller.pid_cross_wired)));
    b.push_back(int_binding("onoff.v_turn", LFL_REF(controller.onoff_turn), 0, 255));

    b.push_back(real_binding("fsm.obstacle_threshold", LFL_REF(supervisor.obstacle_threshold)));
    b.push_back(int_binding("fsm.detect_confirmations", LFL_REF(supervisor.detect_confirmations), 1, 100));
    b.push_back(real_binding("fsm.stop_duration", LFL_REF(supervisor.stop_duration)));
    b.push_back(real_binding("fsm.reverse_duration", LFL_REF(supervisor.reverse_duration)));
    b.push_back(real_binding("fsm.turn_duration", LFL_REF(supervisor.turn_duration)));
    b.push_back(real_binding("fsm.forward_distance", LFL_REF(supervisor.forward_distance)));
    b.push_back(int_binding("fsm.reverse_pwm", LFL_REF(supervisor.reverse_pwm), 0, 255));
    b.push_back(int_binding("fsm.turn_pwm_left", LFL_REF(supervisor.turn_pwm_left), 0, 255));
    b.push_back(int_binding("fsm.turn_pwm_right", LFL_REF(supervisor.turn_pwm_right), 0, 255));
    b.push_back(int_binding("fsm.forward_pwm", LFL_REF(supervisor.forward_pwm), 0, 255));
    b.push_back(int_binding("fsm.spiral_pwm", LFL_REF(supervisor.spiral_pwm), 0, 255));
    b.push_back(real_binding("fsm.spiral_start_radius", LFL_REF(supervisor.spiral_start_radius)));
    b.push_back(real_binding("fsm.spiral_end_radius", LFL_REF(supervisor.spiral_end_radius)));
    b.push_back(real_binding("fsm.recover_timeout", LFL_REF(supervisor.recover_timeout)));
    b.push_back(int_binding("fsm.search_pwm", LFL_REF(supervisor.search_pwm), 0, 255));

    b.push_back(real_binding("init.start_s", LFL_REF(placement.start_arc_length)));
    b.push_back(real_binding("init.lateral_offset", LFL_REF(placement.lateral_offset)));
    b.push_back(real_binding("init.heading_offset", LFL_REF(placement.heading_offset)));
    b.push_back(real_binding("init.lateral_sigma", LFL_REF(placement.lateral_sigma)));
    b.push_back(real_binding("init.heading_sigma", LFL_REF(placement.heading_sigma)));
    b.push_back(real_binding("init.speed", LFL_REF(placement.initial_speed)));
    return b;
  }();
  return bindings;
}

#undef LFL_REF

// Keys read outside ScenarioConfig, with their defaults.
const std::vector<std::pair<std::string, std::string>>& extra_defaults() {
  static const std::vector<std::pair<std::string, std::string>> d = {
      {"track.name", "paper"},
      {"track.file", ""},
      {"track.edge_blend", "false"},
      {"track.min_arc_radius", "0.15"},
  };
  return d;
}

}  // namespace

Config Config::parse(std::string_view text) {
  Config c;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    std::string body = trim(line);
    if (body.empty()) continue;
    auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no, 1);
    std::string key = trim(std::string_view(body).substr(0, eq));
    std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ParseError("empty key", line_no, 1);
    c.values_[key] = value;
  }
  return c;
}

Config Config::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse(ss.str());
  } catch (const ParseError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void Config::set(const std::string& key, const std::string& value) { values_[key] = value; }

void Config::apply_override(std::string_view assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string_view::npos) throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  std::string key = trim(assignment.substr(0, eq));
  if (key.empty()) throw ConfigError("override '" + std::string(assignment) + "' has an empty key");
  values_[key] = trim(assignment.substr(eq + 1));
}

std::optional<std::string> Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
  return get(key).value_or(fallback);
}

double Config::get_double(const std::string& key, double fallback) const {
  auto v = get(key);
  return v ? to_double(key, *v) : fallback;
}

long long Config::get_int(const std::string& key, long long fallback) const {
  auto v = get(key);
  return v ? to_int(key, *v) : fallback;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  auto v = get(key);
  return v ? to_bool(key, *v) : fallback;
}

std::string Config::serialize() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::string Config::fingerprint() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(serialize())));
  return buf;
}

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& b : scenario_bindings()) k.push_back(b.key);
    for (const auto& [key, _] : extra_defaults()) k.push_back(key);
    return k;
  }();
  return keys;
}

void check_known_keys(const Config& config) {
  const auto& keys = known_config_keys();
  for (const auto& [k, _] : config.values()) {
    bool known = std::find(keys.begin(), keys.end(), k) != keys.end() || k.rfind("lab.", 0) == 0 ||
                 k.rfind("power.", 0) == 0;
    if (!known) throw ConfigError("unknown config key '" + k + "'");
  }
}

ScenarioConfig scenario_from_config(const Config& config) {
  ScenarioConfig sc;
  for (const auto& b : scenario_bindings()) {
    if (auto v = config.get(b.key)) b.set(sc, *v);
  }
  if (!(sc.controller.gains.kp >= 0 && sc.controller.gains.ki >= 0 && sc.controller.gains.kd >= 0)) {
    throw ConfigError("pid: gains must be non-negative");
  }
  if (!(sc.controller.gains.t_s > 0)) throw ConfigError("pid.t_s: must be positive");
  if (!(sc.plant.geometry.wheel_base > 0)) throw ConfigError("plant.wheel_base: must be positive");
  if (!(sc.ir.noise_sigma >= 0)) throw ConfigError("ir.noise_sigma: must be non-negative");
  if (!(sc.ultrasonic.max_range > 0 && sc.ultrasonic.max_range <= 4.0)) {
    throw ConfigError("us.max_range: must lie in (0, 4] m");
  }
  if (!(sc.ultrasonic.timing_jitter_sigma >= 0)) throw ConfigError("us.jitter_sigma: must be non-negative");
  if (!(sc.ultrasonic.temperature >= -40 && sc.ultrasonic.temperature <= 60)) {
    throw ConfigError("us.temperature: outside [-40, 60] C");
  }
  if (!(sc.duration > 0)) throw ConfigError("sim.duration: must be positive");
  sc.supervisor.wheel_base = sc.plant.geometry.wheel_base;
  sc.supervisor.dead_zone = sc.plant.dead_zone;
  return sc;
}

Track track_from_config(const Config& config) {
  TrackLoadOptions opts;
  opts.min_arc_radius = config.get_double("track.min_arc_radius", 0.15);
  std::string file = config.get_string("track.file", "");
  Track t;
  try {
    t = file.empty() ? load_track(bundled_track_document(config.get_string("track.name", "paper")), opts)
                     : load_track_file(file, opts);
  } catch (const ParseError& e) {
    throw ConfigError("track: " + std::string(e.what()));
  } catch (const Error& e) {
    throw ConfigError("track: " + std::string(e.what()));
  }
  t.edge_blend = config.get_bool("track.edge_blend", false);
  return t;
}

Config resolved_config(const Config& config) {
  ScenarioConfig sc = scenario_from_config(config);
  Config out = config;
  for (const auto& b : scenario_bindings()) out.set(b.key, b.get(sc));
  for (const auto& [k, v] : extra_defaults()) {
    if (!config.has(k)) out.set(k, v);
  }
  return out;
}

}  // namespace lfl
