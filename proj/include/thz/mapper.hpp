#pragma once

#include <string>
#include <vector>

#include "thz/channel.hpp"
#include "thz/common.hpp"
#include "thz/scene.hpp"

namespace thz {

/// Tracking mesh E (reset every frame) and cumulative blockage score
/// mesh Sigma over a square room grid.
struct AwarenessMap {
  double cell_size = 0.25;
  double room_size = 24.0;
  int cells = 96;
  std::vector<std::uint8_t> E;  // row-major, y * cells + x
  std::vector<int> sigma;
  int frame = 0;

  AwarenessMap() { resize(); }
  AwarenessMap(double room, double cell) : cell_size(cell), room_size(room) { resize(); }

  int cell_of(double coord) const;
  int index(int cx, int cy) const { return cy * cells + cx; }

  void begin_frame();

  std::string to_csv() const;       // normalized scores, row per y-cell
  std::string header_json() const;

 private:
  void resize();
};

struct LocalizationResult {
  bool valid = true;
  bool clipped = false;
  bool degenerate = false;
  PathKind link_kind = PathKind::LoS;
  Vec2 user_position;
  Vec2 reflection_point;   // NLoS
  Vec2 obstacle_center;    // NLoS, corrected by the known body radius
  double r1 = 0.0, r2 = 0.0;
  double residual = 0.0;   // incidence-consistency diagnostic
};

/// LoS branch of the mapping algorithm: p = v + c*tau*(cos phi, sin phi).
Vec2 invert_los(double phi, double tau, const Vec2& subarray_position);

struct IncidenceResult {
  double psi = kPi / 4.0;
  bool flagged = false;  // target loss outside the achievable range
};

/// Solves |gamma(psi) rho(psi)| = |alpha| * 4 pi f r / (c e^{-k r / 2})
/// for psi by bisection on (0, pi/2].
IncidenceResult solve_incidence(double gain_mag, double r_total, double f_hz, double k_per_m,
                                double eta, double sigma = 0.0);

/// NLoS branch: law-of-sines triangle split of the total path, with the
/// departure bearing at the reflection point from the reflection law.
/// `aod_rel` is the departure angle relative to the bearing user->subarray
/// (boresight offset already removed).
LocalizationResult invert_nlos(double phi, double aod_rel, double tau, double psi,
                               const Vec2& subarray_position, double body_radius);

/// Grid cells crossed by the segment a-b, inclusive of both endpoints.
std::vector<int> raster_ray(const AwarenessMap& map, Vec2 a, Vec2 b);

/// Mesh update for one localization: occupant cells get
/// E=1 and Sigma+1, ray cells get Sigma+1; each cell at most once per
/// estimate. Out-of-room positions are clipped and flagged.
void update_map(AwarenessMap& map, LocalizationResult& result, const Vec2& subarray_position);

std::vector<double> normalize_map(const std::vector<int>& sigma);

}  // namespace thz
