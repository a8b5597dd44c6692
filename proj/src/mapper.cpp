#include "thz/mapper.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "json.hpp"

namespace thz {

void AwarenessMap::resize() {
  if (cell_size <= 0.0 || room_size <= 0.0)
    throw std::invalid_argument("map sizes must be positive");
  cells = std::max(1, static_cast<int>(std::ceil(room_size / cell_size - 1e-9)));
  E.assign(size_t(cells) * cells, 0);
  sigma.assign(size_t(cells) * cells, 0);
}

int AwarenessMap::cell_of(double coord) const {
  int c = static_cast<int>(std::floor(coord / cell_size));
  return std::clamp(c, 0, cells - 1);
}

void AwarenessMap::begin_frame() {
  std::fill(E.begin(), E.end(), 0);
  ++frame;
}

std::string AwarenessMap::to_csv() const {
  std::vector<double> norm = normalize_map(sigma);
  std::ostringstream out;
  out.precision(17);
  for (int cy = 0; cy < cells; ++cy) {
    for (int cx = 0; cx < cells; ++cx) {
      if (cx) out << ',';
      out << norm[index(cx, cy)];
    }
    out << '\n';
  }
  return out.str();
}

std::string AwarenessMap::header_json() const {
  nlohmann::ordered_json j;
  j["cell_size_m"] = cell_size;
  j["room_size_m"] = room_size;
  j["cells"] = cells;
  j["frame"] = frame;
  return j.dump(2);
}

Vec2 invert_los(double phi, double tau, const Vec2& subarray_position) {
  if (tau < 0.0) throw std::invalid_argument("delay must be non-negative");
  return subarray_position + unit_from_bearing(phi) * (kSpeedOfLight * tau);
}

IncidenceResult solve_incidence(double gain_mag, double r_total, double f_hz, double k_per_m,
                                double eta, double sigma) {
  if (r_total <= 0.0) throw std::invalid_argument("path length must be positive");
  double free_space = kSpeedOfLight / (4.0 * kPi * f_hz * r_total) *
                      std::exp(-k_per_m * r_total / 2.0);
  double target = gain_mag / free_space;  // |gamma rho| to solve for

  auto loss = [&](double psi) {
    return std::abs(fresnel_coefficient(psi, eta)) * rayleigh_factor(psi, sigma, f_hz);
  };

  IncidenceResult out;
  const double lo0 = 1e-9, hi0 = kPi / 2.0;
  // |gamma rho| is monotone increasing in psi for this model.
  if (target >= loss(hi0)) {
    out.psi = kPi / 2.0;
    out.flagged = target > loss(hi0) + 1e-9;
    return out;
  }
  if (target <= loss(lo0)) {
    out.psi = kPi / 4.0;
    out.flagged = true;
    return out;
  }
  double lo = lo0, hi = hi0;
  for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
    double mid = 0.5 * (lo + hi);
    if (loss(mid) < target) lo = mid; else hi = mid;
  }
  out.psi = 0.5 * (lo + hi);
  return out;
}

LocalizationResult invert_nlos(double phi, double aod_rel, double tau, double psi,
                               const Vec2& subarray_position, double body_radius) {
  LocalizationResult res;
  res.link_kind = PathKind::NLoS;

  const double apex = 2.0 * psi;            // interior angle at the reflection point
  const double at_user = std::abs(aod_rel); // interior angle at the user
  const double at_sub = kPi - apex - at_user;
  const double tol = 1e-3;
  if (apex <= tol || apex >= kPi - tol || at_user <= tol || at_sub <= tol) {
    res.valid = false;
    res.degenerate = true;
    return res;
  }

  const double total = kSpeedOfLight * tau;
  const double denom = std::sin(at_sub) + std::sin(at_user);
  res.r1 = total * std::sin(at_sub) / denom;   // user -> reflection point
  res.r2 = total * std::sin(at_user) / denom;  // reflection point -> subarray

  res.reflection_point = subarray_position + unit_from_bearing(phi) * res.r2;
  // Reflection law: the outgoing bearing at the reflection point is the
  // incoming one deflected by the apex angle, side chosen by the AoD sign.
  double depart = phi + kPi - (aod_rel >= 0.0 ? 1.0 : -1.0) * apex;
  res.user_position = res.reflection_point + unit_from_bearing(depart) * res.r1;

  Vec2 to_sub = (subarray_position - res.reflection_point).normalized();
  Vec2 to_user = (res.user_position - res.reflection_point).normalized();
  Vec2 bisect = to_sub + to_user;
  if (bisect.norm() > 1e-12) {
    Vec2 n = bisect.normalized();
    res.obstacle_center = res.reflection_point - n * body_radius;
    double cos_in = n.dot(to_sub), cos_out = n.dot(to_user);
    res.residual = std::abs(cos_in - cos_out);
  } else {
    res.obstacle_center = res.reflection_point;
    res.degenerate = true;
    res.valid = false;
  }
  return res;
}

std::vector<int> raster_ray(const AwarenessMap& map, Vec2 a, Vec2 b) {
  // Amanatides-Woo grid traversal, endpoints clamped to the room.
  auto clampv = [&](Vec2 v) {
    v.x = std::clamp(v.x, 0.0, map.room_size - 1e-9);
    v.y = std::clamp(v.y, 0.0, map.room_size - 1e-9);
    return v;
  };
  a = clampv(a);
  b = clampv(b);
  int cx = map.cell_of(a.x), cy = map.cell_of(a.y);
  const int ex = map.cell_of(b.x), ey = map.cell_of(b.y);
  std::vector<int> cells{map.index(cx, cy)};
  Vec2 d = b - a;
  int step_x = d.x > 0 ? 1 : -1, step_y = d.y > 0 ? 1 : -1;
  double t_max_x, t_delta_x, t_max_y, t_delta_y;
  const double inf = std::numeric_limits<double>::infinity();
  if (d.x != 0.0) {
    double next = (cx + (step_x > 0 ? 1 : 0)) * map.cell_size;
    t_max_x = (next - a.x) / d.x;
    t_delta_x = map.cell_size / std::abs(d.x);
  } else {
    t_max_x = inf;
    t_delta_x = inf;
  }
  if (d.y != 0.0) {
    double next = (cy + (step_y > 0 ? 1 : 0)) * map.cell_size;
    t_max_y = (next - a.y) / d.y;
    t_delta_y = map.cell_size / std::abs(d.y);
  } else {
    t_max_y = inf;
    t_delta_y = inf;
  }
  int guard = 4 * map.cells + 4;
  while ((cx != ex || cy != ey) && guard-- > 0) {
    if (t_max_x < t_max_y) {
      cx += step_x;
      t_max_x += t_delta_x;
    } else {
      cy += step_y;
      t_max_y += t_delta_y;
    }
    if (cx < 0 || cy < 0 || cx >= map.cells || cy >= map.cells) break;
    cells.push_back(map.index(cx, cy));
  }
  return cells;
}

namespace {

bool clip_to_room(Vec2& p, double room) {
  bool clipped = p.x < 0.0 || p.y < 0.0 || p.x > room || p.y > room;
  p.x = std::clamp(p.x, 0.0, room);
  p.y = std::clamp(p.y, 0.0, room);
  return clipped;
}

}  // namespace

void update_map(AwarenessMap& map, LocalizationResult& result, const Vec2& subarray_position) {
  if (!result.valid) return;  // degenerate estimates never reach the map
  result.clipped |= clip_to_room(result.user_position, map.room_size);

  std::set<int> occupant, touched;
  occupant.insert(map.index(map.cell_of(result.user_position.x),
                            map.cell_of(result.user_position.y)));
  if (result.link_kind == PathKind::NLoS) {
    Vec2 oc = result.obstacle_center;
    result.clipped |= clip_to_room(oc, map.room_size);
    occupant.insert(map.index(map.cell_of(oc.x), map.cell_of(oc.y)));
    for (int c : raster_ray(map, subarray_position, result.reflection_point)) touched.insert(c);
    for (int c : raster_ray(map, result.reflection_point, result.user_position))
      touched.insert(c);
  } else {
    for (int c : raster_ray(map, subarray_position, result.user_position)) touched.insert(c);
  }
  for (int c : occupant) {
    map.E[c] = 1;
    touched.insert(c);
  }
  for (int c : touched) ++map.sigma[c];
}

std::vector<double> normalize_map(const std::vector<int>& sigma) {
  std::vector<double> out(sigma.size(), 0.0);
  int max = 0;
  for (int v : sigma) max = std::max(max, v);
  if (max == 0) return out;
  for (size_t i = 0; i < sigma.size(); ++i)
    out[i] = static_cast<double>(sigma[i]) / max;
  return out;
}

}  // namespace thz
