#pragma once

#include "thz/scene.hpp"

namespace thz::testing {

inline RisSubarray make_subarray(Vec2 pos, double boresight, int M = 64,
                                 double spacing = 0.5 * kSpeedOfLight / 0.275e12) {
  RisSubarray sub;
  sub.position = pos;
  sub.boresight = boresight;
  sub.num_antennas = M;
  sub.antenna_spacing = spacing;
  return sub;
}

inline User make_user(Vec2 pos, double heading = 0.0, int Q = 32, double offset = 0.0) {
  User u;
  u.position = pos;
  u.heading = heading;
  u.num_antennas = Q;
  u.boresight_offset = offset;
  return u;
}

// Single subarray/user scene with the association already wired up.
inline Scene make_pair_scene(const RisSubarray& sub, const User& user) {
  Scene s;
  s.room_size = 24.0;
  s.config.turn_probability = 0.0;
  s.subarrays.push_back(sub);
  s.users.push_back(user);
  s.association[0] = user.user_id;
  return s;
}

}  // namespace thz::testing
