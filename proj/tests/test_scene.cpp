#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "helpers.hpp"
#include "thz/scene.hpp"

using namespace thz;
using namespace thz::testing;

TEST_CASE("48 subarrays evenly spaced over three walls") {
  SceneConfig c;
  c.users = 0;
  Scene s = build_scene(c);
  REQUIRE(s.subarrays.size() == 48);
  // West wall panel: x = 0, y = (n + 0.5) * 24 / 16.
  for (int n = 0; n < 16; ++n) {
    CHECK(s.subarrays[n].position.x == doctest::Approx(0.0));
    CHECK(s.subarrays[n].position.y == doctest::Approx((n + 0.5) * 1.5));
    CHECK(s.subarrays[n].boresight == doctest::Approx(0.0));
  }
  CHECK(s.subarrays[16].position.y == doctest::Approx(24.0));  // north wall
  CHECK(s.subarrays[16].boresight == doctest::Approx(-kPi / 2.0));
  CHECK(s.subarrays[32].position.x == doctest::Approx(24.0));  // east wall
  CHECK(s.subarrays[32].boresight == doctest::Approx(kPi));
}

TEST_CASE("zero users gives empty lists") {
  SceneConfig c;
  c.users = 0;
  Scene s = build_scene(c);
  CHECK(s.users.empty());
  CHECK(s.obstacles.empty());
  CHECK(s.association.empty());
}

TEST_CASE("same seed twice gives identical serialized scenes") {
  SceneConfig c;
  c.users = 5;
  c.seed = 7;
  std::string first = build_scene(c).to_json();
  CHECK(first == build_scene(c).to_json());
  c.seed = 8;
  CHECK(first != build_scene(c).to_json());
}

TEST_CASE("association is injective and every user is served") {
  SceneConfig c;
  c.users = 20;
  c.seed = 3;
  Scene s = build_scene(c);
  std::set<int> subs, users;
  for (const auto& [sub, user] : s.association) {
    subs.insert(sub);
    users.insert(user);
  }
  CHECK(subs.size() == 20);
  CHECK(users.size() == 20);
}

TEST_CASE("zero speed leaves positions unchanged") {
  Scene s = make_pair_scene(make_subarray({0, 12}, 0.0), make_user({12, 12}, 0.3));
  s.users[0].speed = 0.0;
  s.obstacles.push_back(Obstacle{});
  Rng rng(1);
  Scene next = step_mobility(s, 0.1, rng);
  CHECK(next.users[0].position.x == doctest::Approx(12.0));
  CHECK(next.users[0].position.y == doctest::Approx(12.0));
}

TEST_CASE("walking speed moves 0.125 m in 0.1 s") {
  Scene s = make_pair_scene(make_subarray({0, 12}, 0.0), make_user({12, 12}, 0.3));
  s.users[0].speed = 1.25;
  s.obstacles.push_back(Obstacle{});
  Rng rng(1);
  Scene next = step_mobility(s, 0.1, rng);
  double moved = (next.users[0].position - s.users[0].position).norm();
  CHECK(moved == doctest::Approx(0.125).epsilon(1e-12));
}

TEST_CASE("wall reflection mirrors position and heading") {
  Scene s = make_pair_scene(make_subarray({0, 12}, 0.0), make_user({0.05, 12.0}, kPi));
  s.users[0].speed = 1.25;
  s.obstacles.push_back(Obstacle{});
  Rng rng(1);
  // Step crosses x = 0: raw x would be 0.05 - 0.125 = -0.075.
  Scene next = step_mobility(s, 0.1, rng);
  CHECK(next.users[0].position.x == doctest::Approx(0.075));
  CHECK(next.users[0].position.y == doctest::Approx(12.0));
  CHECK(next.users[0].heading == doctest::Approx(0.0));
}

TEST_CASE("mobility keeps everyone inside the room") {
  SceneConfig c;
  c.users = 10;
  c.speed_mps = 2.5;
  c.seed = 11;
  Scene s = build_scene(c);
  Rng rng(42);
  for (int step = 0; step < 1000; ++step) {
    s = step_mobility(s, 0.5, rng);
    for (const User& u : s.users) {
      CHECK(u.position.x >= 0.0);
      CHECK(u.position.x <= 24.0);
      CHECK(u.position.y >= 0.0);
      CHECK(u.position.y <= 24.0);
    }
  }
}

TEST_CASE("identical seeds give identical trajectories") {
  SceneConfig c;
  c.users = 4;
  c.seed = 5;
  Scene a = build_scene(c), b = build_scene(c);
  Rng ra(9), rb(9);
  for (int step = 0; step < 50; ++step) {
    a = step_mobility(a, 0.1, ra);
    b = step_mobility(b, 0.1, rb);
  }
  CHECK(a.to_json() == b.to_json());
}

TEST_CASE("segment disc intersection") {
  CHECK(segment_hits_disc({0, 0}, {4, 0}, {2, 0.1}, 0.2));
  CHECK_FALSE(segment_hits_disc({0, 0}, {4, 0}, {2, 0.5}, 0.2));
  CHECK_FALSE(segment_hits_disc({0, 0}, {1, 0}, {3, 0}, 0.5));  // past the endpoint
  CHECK(segment_hits_disc({0, 0}, {0, 0}, {0.1, 0}, 0.2));      // degenerate segment
}

TEST_CASE("line of sight geometry matches hand values") {
  Scene s = make_pair_scene(make_subarray({0, 0}, 0.0), make_user({3, 4}));
  auto paths = ground_truth_paths(s, s.subarrays[0], s.users[0]);
  REQUIRE(paths.size() == 1);
  CHECK(paths[0].kind == PathKind::LoS);
  CHECK(paths[0].aoa == doctest::Approx(std::atan2(4.0, 3.0)).epsilon(1e-12));
  CHECK(paths[0].toa == doctest::Approx(5.0 / kSpeedOfLight).epsilon(1e-12));
  CHECK(paths[0].aod == doctest::Approx(0.0));  // boresight aimed at the subarray
  CHECK(paths[0].r2 == doctest::Approx(5.0));
}

TEST_CASE("LoS delay equals distance over c for random scenes") {
  SceneConfig c;
  c.users = 8;
  c.seed = 21;
  Scene s = build_scene(c);
  for (const auto& [si, ui] : s.association) {
    auto paths = ground_truth_paths(s, s.subarrays[si], s.users[ui]);
    if (paths[0].kind != PathKind::LoS) continue;
    double d = (s.users[ui].position - s.subarrays[si].position).norm();
    CHECK(paths[0].toa * kSpeedOfLight == doctest::Approx(d).epsilon(1e-12));
  }
}

TEST_CASE("obstacle on the segment blocks line of sight") {
  Scene s = make_pair_scene(make_subarray({0, 0}, 0.0), make_user({3, 4}));
  s.obstacles.push_back({{1.5, 2.0}, 0.3, 2.1, 0.0, -1});
  auto paths = ground_truth_paths(s, s.subarrays[0], s.users[0]);
  CHECK(paths[0].kind != PathKind::LoS);
}

TEST_CASE("unassociated pair is rejected") {
  Scene s = make_pair_scene(make_subarray({0, 0}, 0.0), make_user({3, 4}));
  User stranger = make_user({5, 5});
  stranger.user_id = 9;
  CHECK_THROWS(ground_truth_paths(s, s.subarrays[0], stranger));
}

namespace {

// Independent Fermat oracle: dense scan of the disc boundary for the
// visible point minimizing the total path, then local ternary refinement.
double brute_force_min_path(const Vec2& c, double R, const Vec2& v, const Vec2& p) {
  auto path_len = [&](double t) {
    Vec2 n = unit_from_bearing(t);
    Vec2 s = c + n * R;
    if (n.dot(v - s) <= 0.0 || n.dot(p - s) <= 0.0)
      return std::numeric_limits<double>::infinity();
    return (v - s).norm() + (p - s).norm();
  };
  const int N = 2000000;
  double best_t = 0.0, best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < N; ++i) {
    double t = -kPi + 2.0 * kPi * i / N;
    double len = path_len(t);
    if (len < best) { best = len; best_t = t; }
  }
  double lo = best_t - 1e-5, hi = best_t + 1e-5;
  for (int i = 0; i < 100; ++i) {
    double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
    if (path_len(m1) < path_len(m2)) hi = m2; else lo = m1;
  }
  return path_len(0.5 * (lo + hi));
}

}  // namespace

TEST_CASE("blocking disc admits no single bounce off itself") {
  // Both endpoints sit inside the tangent half-space at the only balance
  // point, so the blocker cannot act as its own mirror.
  Scene s = make_pair_scene(make_subarray({0, 0}, 0.0), make_user({4, 0}));
  s.obstacles.push_back({{2.0, 0.2}, 0.25, 2.1, 0.0, -1});
  auto paths = ground_truth_paths(s, s.subarrays[0], s.users[0]);
  CHECK(paths[0].kind == PathKind::Blocked);
}

TEST_CASE("blocked link falls back to the specular bounce off a mirror body") {
  Scene s = make_pair_scene(make_subarray({0, 0}, 0.0), make_user({4, 0}));
  s.obstacles.push_back({{2.0, 0.1}, 0.15, 2.1, 0.0, -1});  // blocks the direct segment
  Obstacle ob{{2.0, 2.25}, 0.25, 2.1, 0.0, -1};             // the mirror
  s.obstacles.push_back(ob);
  auto paths = ground_truth_paths(s, s.subarrays[0], s.users[0]);
  REQUIRE(paths[0].kind == PathKind::NLoS);
  const PathParams& path = paths[0];
  CHECK(path.reflector == 1);

  // Total length matches the independent Fermat minimum.
  double oracle = brute_force_min_path(ob.center, ob.radius, {0, 0}, {4, 0});
  CHECK(path.r1 + path.r2 == doctest::Approx(oracle).epsilon(1e-9));
  CHECK(path.toa == doctest::Approx((path.r1 + path.r2) / kSpeedOfLight).epsilon(1e-12));

  // Reflection law at the returned point, measured from the disc normal.
  Vec2 n = (path.reflection_point - ob.center).normalized();
  Vec2 to_v = (s.subarrays[0].position - path.reflection_point).normalized();
  Vec2 to_p = (s.users[0].position - path.reflection_point).normalized();
  double ang_in = std::acos(std::clamp(n.dot(to_v), -1.0, 1.0));
  double ang_out = std::acos(std::clamp(n.dot(to_p), -1.0, 1.0));
  CHECK(std::abs(ang_in - ang_out) < 1e-6);
  CHECK(path.incidence == doctest::Approx(ang_in).epsilon(1e-5));
  CHECK(path.incidence > 0.0);
  CHECK(path.incidence <= kPi / 2.0);

  // Bearings are consistent with the reflection point.
  CHECK(path.aoa ==
        doctest::Approx(bearing_of(s.subarrays[0].position, path.reflection_point)));
  double boresight = user_boresight(s.users[0], s.subarrays[0]);
  CHECK(path.aod == doctest::Approx(wrap_angle(
                        bearing_of(s.users[0].position, path.reflection_point) - boresight)));

  // Segment distances measured from the returned point.
  CHECK(path.r1 == doctest::Approx((s.users[0].position - path.reflection_point).norm()));
  CHECK(path.r2 == doctest::Approx((s.subarrays[0].position - path.reflection_point).norm()));

  // Symmetric geometry: the bounce splits the path at the midpoint.
  CHECK(path.r1 == doctest::Approx(path.r2).epsilon(1e-9));
}

TEST_CASE("the nearest of several mirrors carries the bounce") {
  Scene s = make_pair_scene(make_subarray({0, 0}, 0.0), make_user({4, 0}));
  s.obstacles.push_back({{2.0, 0.1}, 0.15, 2.1, 0.0, -1});   // blocks the direct segment
  s.obstacles.push_back({{2.0, 2.25}, 0.25, 2.1, 0.0, -1});  // near mirror
  s.obstacles.push_back({{2.0, -5.0}, 0.25, 2.1, 0.0, -1});  // far mirror
  auto paths = ground_truth_paths(s, s.subarrays[0], s.users[0]);
  REQUIRE(paths[0].kind == PathKind::NLoS);
  CHECK(paths[0].reflector == 1);
  double near_len = brute_force_min_path({2.0, 2.25}, 0.25, {0, 0}, {4, 0});
  double far_len = brute_force_min_path({2.0, -5.0}, 0.25, {0, 0}, {4, 0});
  CHECK(near_len < far_len);
  CHECK(paths[0].r1 + paths[0].r2 == doctest::Approx(near_len).epsilon(1e-9));
}

TEST_CASE("fully obstructed link reports Blocked") {
  Scene s = make_pair_scene(make_subarray({0, 0}, 0.0), make_user({4, 0}));
  // Disc swallowing the subarray blocks the direct path and admits no bounce.
  s.obstacles.push_back({{0.0, 0.0}, 0.5, 2.1, 0.0, -1});
  auto paths = ground_truth_paths(s, s.subarrays[0], s.users[0]);
  CHECK(paths[0].kind == PathKind::Blocked);
}
