#include "thz/scene.hpp"

#include <algorithm>
#include <limits>

#include "json.hpp"

namespace thz {

SceneConfig SceneConfig::from_file(const std::string& path) {
  return from_kv(KeyValueFile::load(path));
}

SceneConfig SceneConfig::from_kv(const KeyValueFile& kv) {
  SceneConfig c;
  c.room_size_m = kv.get_double("room_size_m", c.room_size_m);
  c.walls = static_cast<int>(kv.get_int("walls", c.walls));
  c.panels = static_cast<int>(kv.get_int("panels", c.panels));
  c.subarrays_per_panel = static_cast<int>(kv.get_int("subarrays_per_panel", c.subarrays_per_panel));
  c.M = static_cast<int>(kv.get_int("M", c.M));
  c.Q = static_cast<int>(kv.get_int("Q", c.Q));
  c.R = static_cast<int>(kv.get_int("R", c.R));
  c.delta_m = kv.get_double("delta_m", c.delta_m);
  c.users = static_cast<int>(kv.get_int("users", c.users));
  c.speed_mps = kv.get_double("speed_mps", c.speed_mps);
  c.obstacle_radius_m = kv.get_double("obstacle_radius_m", c.obstacle_radius_m);
  c.body_offset_m = kv.get_double("body_offset_m", c.body_offset_m);
  c.refractive_index = kv.get_double("refractive_index", c.refractive_index);
  c.surface_roughness_m = kv.get_double("surface_roughness_m", c.surface_roughness_m);
  c.turn_probability = kv.get_double("turn_probability", c.turn_probability);
  c.boresight_offset_max_deg = kv.get_double("boresight_offset_max_deg", c.boresight_offset_max_deg);
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", static_cast<long>(c.seed)));
  return c;
}

void SceneConfig::validate() const {
  if (room_size_m <= 0.0) throw std::invalid_argument("room_size_m must be positive");
  if (walls < 1 || walls > 4) throw std::invalid_argument("walls must be in 1..4");
  if (panels < 1) throw std::invalid_argument("panels must be positive");
  if (subarrays_per_panel < 1) throw std::invalid_argument("subarrays_per_panel must be positive");
  if (M < 1 || Q < 1) throw std::invalid_argument("antenna counts must be >= 1");
  if (R < 1 || R > Q) throw std::invalid_argument("need 1 <= R <= Q");
  if (delta_m <= 0.0) throw std::invalid_argument("delta_m must be positive");
  if (users < 0) throw std::invalid_argument("users must be non-negative");
  if (users > panels * subarrays_per_panel)
    throw std::invalid_argument("more users than subarrays (need N >= U)");
  if (obstacle_radius_m <= 0.0) throw std::invalid_argument("obstacle_radius_m must be positive");
  if (body_offset_m <= obstacle_radius_m)
    throw std::invalid_argument("body_offset_m must exceed obstacle_radius_m");
  if (refractive_index <= 1.0) throw std::invalid_argument("refractive_index must exceed 1");
  if (surface_roughness_m < 0.0) throw std::invalid_argument("surface_roughness_m must be >= 0");
  if (turn_probability < 0.0 || turn_probability > 1.0)
    throw std::invalid_argument("turn_probability must be in [0,1]");
}

namespace {

// Wall order: west (x=0), north (y=L), east (x=L), south (y=0).
struct Wall {
  Vec2 origin;
  Vec2 along;
  double boresight;
};

std::vector<Wall> room_walls(double L) {
  return {
      {{0.0, 0.0}, {0.0, 1.0}, 0.0},        // west, facing +x
      {{0.0, L}, {1.0, 0.0}, -kPi / 2.0},   // north, facing -y
      {{L, 0.0}, {0.0, 1.0}, kPi},          // east, facing -x
      {{0.0, 0.0}, {1.0, 0.0}, kPi / 2.0},  // south, facing +y
  };
}

Obstacle body_for(const User& u, const SceneConfig& c) {
  Obstacle o;
  o.center = u.position - unit_from_bearing(u.heading) * c.body_offset_m;
  o.radius = c.obstacle_radius_m;
  o.refractive_index = c.refractive_index;
  o.surface_roughness = c.surface_roughness_m;
  o.owner_user = u.user_id;
  return o;
}

void reflect_into_room(Vec2& p, double& heading, double L) {
  // A step is at most a small fraction of the room, so a few passes suffice.
  for (int pass = 0; pass < 8; ++pass) {
    bool moved = false;
    if (p.x < 0.0) { p.x = -p.x; heading = kPi - heading; moved = true; }
    if (p.x > L) { p.x = 2.0 * L - p.x; heading = kPi - heading; moved = true; }
    if (p.y < 0.0) { p.y = -p.y; heading = -heading; moved = true; }
    if (p.y > L) { p.y = 2.0 * L - p.y; heading = -heading; moved = true; }
    if (!moved) break;
  }
  heading = wrap_angle(heading);
}

}  // namespace

Scene build_scene(const SceneConfig& config) {
  config.validate();
  Scene scene;
  scene.room_size = config.room_size_m;
  scene.config = config;
  Rng rng(config.seed);

  const auto walls = room_walls(config.room_size_m);
  const int N = config.subarrays_per_panel;
  const double spacing_along_wall = config.room_size_m / N;
  for (int b = 0; b < config.panels; ++b) {
    const Wall& wall = walls[b % config.walls];
    for (int n = 0; n < N; ++n) {
      RisSubarray sub;
      sub.panel_id = b;
      sub.subarray_index = n;
      double along = (n + 0.5) * spacing_along_wall;
      sub.position = wall.origin + wall.along * along;
      sub.boresight = wall.boresight;
      sub.num_antennas = config.M;
      sub.antenna_spacing = config.delta_m;
      sub.subarray_spacing = spacing_along_wall;
      scene.subarrays.push_back(sub);
    }
  }

  const double margin = 0.5;
  for (int u = 0; u < config.users; ++u) {
    User user;
    user.user_id = u;
    user.position = {uniform(rng, margin, config.room_size_m - margin),
                     uniform(rng, margin, config.room_size_m - margin)};
    user.heading = uniform(rng, -kPi, kPi);
    user.speed = config.speed_mps;
    user.num_antennas = config.Q;
    user.num_rf_chains = config.R;
    double off = deg2rad(config.boresight_offset_max_deg);
    user.boresight_offset = uniform(rng, -off, off);
    scene.users.push_back(user);
    scene.obstacles.push_back(body_for(user, config));
  }

  // Nearest-available association, injective by construction.
  std::vector<bool> taken(scene.subarrays.size(), false);
  for (const User& user : scene.users) {
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t s = 0; s < scene.subarrays.size(); ++s) {
      if (taken[s]) continue;
      double d = (scene.subarrays[s].position - user.position).norm();
      if (d < best_d) { best_d = d; best = static_cast<int>(s); }
    }
    taken[best] = true;
    scene.association[best] = user.user_id;
  }
  return scene;
}

Scene step_mobility(const Scene& scene, double dt, Rng& rng) {
  if (dt <= 0.0) throw std::invalid_argument("dt must be positive");
  Scene next = scene;
  for (size_t i = 0; i < next.users.size(); ++i) {
    User& u = next.users[i];
    u.position = u.position + unit_from_bearing(u.heading) * (u.speed * dt);
    reflect_into_room(u.position, u.heading, next.room_size);
    // Stationary users do not re-orient; their body stays put too.
    if (u.speed > 0.0 && uniform(rng, 0.0, 1.0) < scene.config.turn_probability)
      u.heading = uniform(rng, -kPi, kPi);
    next.obstacles[i] = body_for(u, next.config);
  }
  return next;
}

double user_boresight(const User& user, const RisSubarray& sub) {
  return bearing_of(user.position, sub.position) + user.boresight_offset;
}

bool segment_hits_disc(const Vec2& a, const Vec2& b, const Vec2& center, double radius) {
  Vec2 d = b - a;
  double len2 = d.dot(d);
  double t = len2 > 0.0 ? std::clamp((center - a).dot(d) / len2, 0.0, 1.0) : 0.0;
  Vec2 closest = a + d * t;
  return (closest - center).norm() < radius;
}

namespace {

bool segment_blocked(const Scene& scene, const Vec2& a, const Vec2& b, int skip_obstacle) {
  for (size_t i = 0; i < scene.obstacles.size(); ++i) {
    if (static_cast<int>(i) == skip_obstacle) continue;
    if (segment_hits_disc(a, b, scene.obstacles[i].center, scene.obstacles[i].radius)) return true;
  }
  return false;
}

// Signed reflection imbalance at circle parameter t: zero when the normal
// bisects the directions toward v and p.
double reflection_balance(const Vec2& c, double R, double t, const Vec2& v, const Vec2& p) {
  Vec2 n = unit_from_bearing(t);
  Vec2 s = c + n * R;
  double av = wrap_angle(bearing_of(s, v) - t);
  double ap = wrap_angle(bearing_of(s, p) - t);
  return av + ap;
}

struct SpecularPoint {
  bool found = false;
  Vec2 point;
  double psi = 0.0;
  double r1 = 0.0;  // user -> point
  double r2 = 0.0;  // point -> subarray
};

// Fermat search: the specular point of a convex reflector minimizes the
// total path length over the arc facing both endpoints.
SpecularPoint find_specular(const Vec2& center, double R, const Vec2& v, const Vec2& p) {
  SpecularPoint out;
  if ((v - center).norm() <= R || (p - center).norm() <= R) return out;

  auto visible = [&](double t) {
    Vec2 n = unit_from_bearing(t);
    Vec2 s = center + n * R;
    return n.dot(v - s) > 0.0 && n.dot(p - s) > 0.0;
  };
  auto path_len = [&](double t) {
    Vec2 s = center + unit_from_bearing(t) * R;
    return (v - s).norm() + (p - s).norm();
  };

  const int samples = 720;
  double best_t = 0.0, best_len = std::numeric_limits<double>::infinity();
  bool any = false;
  for (int i = 0; i < samples; ++i) {
    double t = -kPi + (2.0 * kPi * i) / samples;
    if (!visible(t)) continue;
    double len = path_len(t);
    if (len < best_len) { best_len = len; best_t = t; any = true; }
  }
  if (!any) return out;

  // Golden-section refinement of the length minimum.
  const double step = 2.0 * kPi / samples;
  double a = best_t - step, b = best_t + step;
  const double gr = (std::sqrt(5.0) + 1.0) / 2.0;
  double c1 = b - (b - a) / gr, c2 = a + (b - a) / gr;
  for (int i = 0; i < 60 && std::abs(b - a) > 1e-12; ++i) {
    if (path_len(c1) < path_len(c2)) b = c2; else a = c1;
    c1 = b - (b - a) / gr;
    c2 = a + (b - a) / gr;
  }
  double t = 0.5 * (a + b);

  // Bisection polish on the signed balance to the 1e-6 rad tolerance.
  double lo = t - step, hi = t + step;
  double flo = reflection_balance(center, R, lo, v, p);
  double fhi = reflection_balance(center, R, hi, v, p);
  if (flo * fhi < 0.0) {
    for (int i = 0; i < 80 && (hi - lo) > 1e-13; ++i) {
      double mid = 0.5 * (lo + hi);
      double fm = reflection_balance(center, R, mid, v, p);
      if (flo * fm <= 0.0) { hi = mid; fhi = fm; } else { lo = mid; flo = fm; }
    }
    t = 0.5 * (lo + hi);
  }
  if (!visible(t)) return out;

  Vec2 n = unit_from_bearing(t);
  Vec2 s = center + n * R;
  double av = wrap_angle(bearing_of(s, v) - t);
  double ap = wrap_angle(bearing_of(s, p) - t);
  if (std::abs(av + ap) > 1e-6) return out;
  out.found = true;
  out.point = s;
  out.psi = std::abs(av - ap) / 2.0;  // equals |av| and |ap| at balance
  out.r1 = (p - s).norm();
  out.r2 = (v - s).norm();
  return out;
}

}  // namespace

std::vector<PathParams> ground_truth_paths(const Scene& scene, const RisSubarray& sub,
                                           const User& user) {
  // Locate the subarray in the scene to verify the association.
  int sub_index = -1;
  for (size_t i = 0; i < scene.subarrays.size(); ++i) {
    const RisSubarray& s = scene.subarrays[i];
    if (s.panel_id == sub.panel_id && s.subarray_index == sub.subarray_index) {
      sub_index = static_cast<int>(i);
      break;
    }
  }
  auto it = sub_index >= 0 ? scene.association.find(sub_index) : scene.association.end();
  if (it == scene.association.end() || it->second != user.user_id)
    throw std::invalid_argument("subarray is not associated to this user");

  const Vec2 v = sub.position;
  const Vec2 p = user.position;
  const double boresight = user_boresight(user, sub);

  if (!segment_blocked(scene, v, p, -1)) {
    PathParams path;
    path.kind = PathKind::LoS;
    path.aoa = bearing_of(v, p);
    path.aod = wrap_angle(bearing_of(p, v) - boresight);
    double d = (p - v).norm();
    path.toa = d / kSpeedOfLight;
    path.r2 = d;
    return {path};
  }

  PathParams best;
  double best_len = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < scene.obstacles.size(); ++i) {
    const Obstacle& ob = scene.obstacles[i];
    SpecularPoint sp = find_specular(ob.center, ob.radius, v, p);
    if (!sp.found) continue;
    if (sp.psi <= 0.0 || sp.psi > kPi / 2.0) continue;
    if (segment_blocked(scene, v, sp.point, static_cast<int>(i))) continue;
    if (segment_blocked(scene, sp.point, p, static_cast<int>(i))) continue;
    double len = sp.r1 + sp.r2;
    if (len >= best_len) continue;
    best_len = len;
    best.kind = PathKind::NLoS;
    best.aoa = bearing_of(v, sp.point);
    best.aod = wrap_angle(bearing_of(p, sp.point) - boresight);
    best.toa = len / kSpeedOfLight;
    best.incidence = sp.psi;
    best.r1 = sp.r1;
    best.r2 = sp.r2;
    best.reflection_point = sp.point;
    best.reflector = static_cast<int>(i);
    best.refl_eta = ob.refractive_index;
    best.refl_sigma = ob.surface_roughness;
  }
  if (best.kind == PathKind::NLoS) return {best};

  PathParams blocked;
  blocked.kind = PathKind::Blocked;
  return {blocked};
}

std::string Scene::to_json() const {
  nlohmann::ordered_json j;
  j["room_size_m"] = room_size;
  j["seed"] = config.seed;
  auto& subs = j["subarrays"] = nlohmann::ordered_json::array();
  for (const auto& s : subarrays) {
    subs.push_back({{"panel", s.panel_id},
                    {"index", s.subarray_index},
                    {"position", {s.position.x, s.position.y}},
                    {"boresight", s.boresight},
                    {"M", s.num_antennas},
                    {"delta_m", s.antenna_spacing},
                    {"Delta_N", s.subarray_spacing}});
  }
  auto& us = j["users"] = nlohmann::ordered_json::array();
  for (const auto& u : users) {
    us.push_back({{"id", u.user_id},
                  {"position", {u.position.x, u.position.y}},
                  {"heading", u.heading},
                  {"speed", u.speed},
                  {"Q", u.num_antennas},
                  {"R", u.num_rf_chains},
                  {"boresight_offset", u.boresight_offset}});
  }
  auto& obs = j["obstacles"] = nlohmann::ordered_json::array();
  for (const auto& o : obstacles) {
    obs.push_back({{"center", {o.center.x, o.center.y}},
                   {"radius", o.radius},
                   {"eta", o.refractive_index},
                   {"sigma", o.surface_roughness},
                   {"owner", o.owner_user}});
  }
  auto& assoc = j["association"] = nlohmann::ordered_json::array();
  for (const auto& [s, u] : association) assoc.push_back({{"subarray", s}, {"user", u}});
  return j.dump(2);
}

}  // namespace thz
