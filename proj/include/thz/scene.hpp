#pragma once

#include <map>
#include <string>
#include <vector>

#include "thz/common.hpp"
#include "thz/config.hpp"

namespace thz {

/// One RIS unit: a square subarray sharing a single RF chain.
struct RisSubarray {
  int panel_id = 0;
  int subarray_index = 0;
  Vec2 position;            // on a wall, meters
  double boresight = 0.0;   // inward normal bearing, radians
  int num_antennas = 64;    // M
  double antenna_spacing = 0.0;   // delta_m, meters
  double subarray_spacing = 0.0;  // Delta_N, meters
};

struct User {
  int user_id = 0;
  Vec2 position;
  double heading = 0.0;  // radians
  double speed = 0.0;    // m/s
  int num_antennas = 32; // Q
  int num_rf_chains = 1; // R
  /// Misalignment of the device ULA boresight relative to the bearing
  /// toward the serving subarray. The device aims its array at the RIS
  /// after initial beam alignment; this residual offset is known to the
  /// device (reported orientation) and therefore to the mapper.
  double boresight_offset = 0.0;
};

/// Human body modeled as a disc rigidly attached behind the device.
struct Obstacle {
  Vec2 center;
  double radius = 0.25;
  double refractive_index = 2.1;  // eta, dimensionless
  double surface_roughness = 0.0; // sigma, meters
  int owner_user = -1;
};

enum class PathKind { LoS, NLoS, Blocked };

/// Ground-truth geometry of one propagation path.
struct PathParams {
  PathKind kind = PathKind::Blocked;
  double aoa = 0.0;        // phi, global bearing of the arrival ray at the subarray
  double aod = 0.0;        // theta, departure angle relative to the user boresight
  double toa = 0.0;        // tau, seconds
  double incidence = 0.0;  // psi, radians (NLoS only), measured from the surface normal
  double r1 = 0.0;         // user -> reflection point (NLoS) or 0
  double r2 = 0.0;         // reflection point -> subarray (NLoS), or the LoS distance
  Vec2 reflection_point;   // NLoS only
  int reflector = -1;      // obstacle index, NLoS only
  double refl_eta = 2.1;   // reflector refractive index (NLoS)
  double refl_sigma = 0.0; // reflector roughness, meters (NLoS)
  cd gain = 0.0;           // filled by the channel module
};

struct SceneConfig {
  double room_size_m = 24.0;
  int walls = 3;
  int panels = 3;
  int subarrays_per_panel = 16;
  int M = 64;
  int Q = 32;
  int R = 1;
  double delta_m = 0.5 * kSpeedOfLight / 0.275e12;  // half wavelength at 0.275 THz
  int users = 1;
  double speed_mps = 1.25;
  double obstacle_radius_m = 0.25;
  double body_offset_m = 0.35;
  double refractive_index = 2.1;
  double surface_roughness_m = 0.0;
  double turn_probability = 0.2;
  double boresight_offset_max_deg = 30.0;
  std::uint64_t seed = 1;

  static SceneConfig from_file(const std::string& path);
  static SceneConfig from_kv(const KeyValueFile& kv);
  void validate() const;
};

struct Scene {
  double room_size = 24.0;
  std::vector<RisSubarray> subarrays;
  std::vector<User> users;
  std::vector<Obstacle> obstacles;
  std::map<int, int> association;  // subarray index -> user index (injective)
  SceneConfig config;

  std::string to_json() const;
};

Scene build_scene(const SceneConfig& config);

/// Advances all users one random-walk step; obstacles follow their owners.
Scene step_mobility(const Scene& scene, double dt, Rng& rng);

/// Bearing of the device ULA boresight for a user served by `sub`.
double user_boresight(const User& user, const RisSubarray& sub);

/// Segment a-b intersects the disc?
bool segment_hits_disc(const Vec2& a, const Vec2& b, const Vec2& center, double radius);

/// Returns the single dominant path between an associated subarray/user
/// pair: LoS when unobstructed, otherwise the shortest single-bounce
/// specular reflection off an obstacle disc, otherwise Blocked.
std::vector<PathParams> ground_truth_paths(const Scene& scene, const RisSubarray& sub,
                                           const User& user);

}  // namespace thz
