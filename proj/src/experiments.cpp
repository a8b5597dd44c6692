#include "thz/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace thz {

std::string scheme_name(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::ProposedJSC: return "proposed_jsc";
    case SchemeKind::CommOnlyBeamTracking: return "comm_only_beam_tracking";
    case SchemeKind::StandaloneSensing: return "standalone_sensing";
  }
  throw std::invalid_argument("unknown scheme");
}

Scheme make_scheme(SchemeKind kind) {
  Scheme s;
  s.kind = kind;
  if (kind == SchemeKind::StandaloneSensing) s.sensing_fraction = 0.25;
  return s;
}

double overhead_fraction(const Scheme& s) {
  switch (s.kind) {
    case SchemeKind::ProposedJSC:
      return 0.0;  // sensing rides on the data waveform
    case SchemeKind::CommOnlyBeamTracking:
      if (s.training_period_s <= 0.0)
        throw std::invalid_argument("training period must be positive");
      return std::min(1.0, s.training_duration_s / s.training_period_s);
    case SchemeKind::StandaloneSensing:
      return s.sensing_fraction;
  }
  throw std::invalid_argument("unknown scheme");
}

double e2e_delay(const FrameContext& ctx, const Scheme& scheme, const DelayModel& model) {
  const double inf = std::numeric_limits<double>::infinity();
  if (ctx.outage) return inf;
  if (ctx.utilization >= 1.0) return inf;
  double rate = ctx.rate_bps * (1.0 - scheme.sensing_fraction);
  if (rate <= 0.0) return inf;
  double d = 2.0 * model.payload_bits / rate;  // uplink + downlink transmission
  d += model.processing_delay_s;
  double mu = model.server_rate_bps / model.payload_bits;
  d += ctx.utilization / (mu * (1.0 - ctx.utilization));
  if (ctx.trains) d += scheme.training_duration_s;
  return d;
}

double reliability(const std::vector<double>& delays, double threshold) {
  if (delays.empty()) throw std::invalid_argument("no delay samples");
  size_t ok = 0;
  for (double d : delays)
    if (d < threshold) ++ok;
  return static_cast<double>(ok) / static_cast<double>(delays.size());
}

double spectral_efficiency(const Scheme& scheme, const std::vector<double>& served_snr_linear) {
  if (served_snr_linear.empty()) return 0.0;
  double s = 0.0;
  for (double snr : served_snr_linear) s += std::log2(1.0 + snr);
  return (1.0 - overhead_fraction(scheme)) * s / served_snr_linear.size();
}

// ---------------------------------------------------------------------------

TrackingConfig TrackingConfig::from_kv(const KeyValueFile& kv) {
  TrackingConfig c;
  c.scene = SceneConfig::from_kv(kv);
  c.sounding.J = static_cast<int>(kv.get_int("sounding_j", c.sounding.J));
  c.sounding.T = static_cast<int>(kv.get_int("sounding_t", c.sounding.T));
  c.subcarriers = static_cast<int>(kv.get_int("subcarriers", c.subcarriers));
  c.sounding.K = c.subcarriers;
  c.sounding.transmit_power = kv.get_double("transmit_power", c.sounding.transmit_power);
  c.f_hz = kv.get_double("center_frequency_thz", c.f_hz / 1e12) * 1e12;
  c.bandwidth_hz = kv.get_double("bandwidth_ghz", c.bandwidth_hz / 1e9) * 1e9;
  c.water_vapor = kv.get_double("water_vapor", c.water_vapor);
  c.snr_db = kv.get_double("snr_db", c.snr_db);
  c.frame_dt_s = kv.get_double("frame_dt_s", c.frame_dt_s);
  c.frames = static_cast<int>(kv.get_int("frames", c.frames));
  c.map_cell_m = kv.get_double("map_cell_m", c.map_cell_m);
  c.classify_epsilon = kv.get_double("classify_epsilon", c.classify_epsilon);
  if (c.frames <= 0) throw std::invalid_argument("frames must be positive");
  if (c.frame_dt_s <= 0.0) throw std::invalid_argument("frame_dt_s must be positive");
  return c;
}

namespace {

// Re-generates the link with the noise floor set from the measured
// signal power so that every entry sees the requested SNR.
MeasurementTensor snapshots_at_snr(const Scene& scene, const RisSubarray& sub,
                                   const User& user, const SoundingConfig& sounding,
                                   CarrierConfig carrier, double snr_db) {
  carrier.noise_power = 0.0;
  MeasurementTensor clean = generate_snapshots(scene, sub, user, sounding, carrier);
  if (snr_db >= 1e8 || clean.blocked) return clean;
  double power = tensor_signal_power(clean.chi);
  carrier.noise_power = power / std::pow(10.0, snr_db / 10.0);
  return generate_snapshots(scene, sub, user, sounding, carrier);
}

nlohmann::ordered_json path_json(const PathParams& p) {
  nlohmann::ordered_json j;
  j["kind"] = p.kind == PathKind::LoS ? "los" : (p.kind == PathKind::NLoS ? "nlos" : "blocked");
  j["aoa"] = p.aoa;
  j["aod"] = p.aod;
  j["toa"] = p.toa;
  j["incidence"] = p.incidence;
  j["gain_re"] = p.gain.real();
  j["gain_im"] = p.gain.imag();
  return j;
}

}  // namespace

std::string SessionLog::records_jsonl() const {
  std::ostringstream out;
  for (const LinkRecord& r : records) {
    nlohmann::ordered_json j;
    j["frame"] = r.frame;
    j["subarray"] = r.subarray;
    j["user"] = r.user;
    j["truth"] = path_json(r.truth);
    j["failed"] = r.failed;
    if (!r.failed) {
      j["estimate"] = {{"aoa", r.estimate.aoa},
                       {"aod", r.estimate.aod},
                       {"toa", r.estimate.toa},
                       {"gain_mag", std::abs(r.estimate.gain)},
                       {"kind", r.estimate.link_kind == PathKind::LoS ? "los" : "nlos"}};
      j["localization"] = {{"valid", r.localization.valid},
                           {"clipped", r.localization.clipped},
                           {"degenerate", r.localization.degenerate},
                           {"x", r.localization.user_position.x},
                           {"y", r.localization.user_position.y},
                           {"obstacle_x", r.localization.obstacle_center.x},
                           {"obstacle_y", r.localization.obstacle_center.y}};
    }
    out << j.dump() << '\n';
  }
  return out.str();
}

SessionLog run_tracking_session(const TrackingConfig& config) {
  SessionLog log;
  log.config = config;

  SoundingConfig sounding = config.sounding;
  sounding.K = config.subcarriers;
  CarrierConfig carrier =
      make_carrier(config.f_hz, config.bandwidth_hz, config.subcarriers, config.water_vapor, 0.0);

  Scene scene = build_scene(config.scene);
  log.map = AwarenessMap(scene.room_size, config.map_cell_m);
  Rng mobility_rng(config.scene.seed ^ 0x9e3779b97f4a7c15ull);

  double epsilon = config.classify_epsilon;
  if (epsilon <= 0.0)
    epsilon = calibrate_threshold(carrier, scene.room_size, config.scene.refractive_index,
                                  config.scene.surface_roughness_m, 4001, config.scene.seed);
  const double kabs = carrier.absorption[carrier.num_subcarriers / 2];
  SearchGrid grid;

  for (int frame = 0; frame < config.frames; ++frame) {
    if (frame > 0) scene = step_mobility(scene, config.frame_dt_s, mobility_rng);
    log.map.begin_frame();

    for (const auto& [sub_idx, user_idx] : scene.association) {
      const RisSubarray& sub = scene.subarrays[sub_idx];
      const User& user = scene.users[user_idx];

      SoundingConfig snd = sounding;
      std::uint64_t salt = std::uint64_t(frame) * 1009 + std::uint64_t(sub_idx) * 7;
      snd.combiner_seed = sounding.combiner_seed + salt;
      snd.precoder_seed = sounding.precoder_seed + salt;
      snd.noise_seed = sounding.noise_seed + salt;

      LinkRecord rec;
      rec.frame = frame;
      rec.subarray = sub_idx;
      rec.user = user_idx;

      MeasurementTensor mt = snapshots_at_snr(scene, sub, user, snd, carrier, config.snr_db);
      rec.truth = mt.truth_paths.front();
      if (mt.blocked) {
        rec.failed = true;
        log.records.push_back(rec);
        continue;
      }

      CpdOptions opts;
      opts.seed = config.scene.seed + salt;
      FactorTriple ft = cpd_als(mt.chi, 1, opts);
      rec.estimate = estimate_path(ft.A.col(0), ft.B.col(0), ft.C.col(0), mt, grid, epsilon);

      if (rec.estimate.link_kind == PathKind::LoS) {
        rec.localization.link_kind = PathKind::LoS;
        rec.localization.user_position =
            invert_los(rec.estimate.aoa, rec.estimate.toa, sub.position);
      } else {
        double r_total = kSpeedOfLight * rec.estimate.toa;
        IncidenceResult inc =
            solve_incidence(std::abs(rec.estimate.gain), r_total, config.f_hz, kabs,
                            config.scene.refractive_index, config.scene.surface_roughness_m);
        double aod_rel = rec.estimate.aod + user.boresight_offset;
        rec.localization =
            invert_nlos(rec.estimate.aoa, aod_rel, rec.estimate.toa, inc.psi, sub.position,
                        config.scene.obstacle_radius_m);
        rec.localization.clipped |= inc.flagged;
      }
      update_map(log.map, rec.localization, sub.position);
      log.records.push_back(rec);
    }
  }
  return log;
}

// ---------------------------------------------------------------------------

namespace {

struct MobilityProfile {
  double predict_prob = 1.0;
  int recovery_frames = 1;
};

MobilityProfile profile_for(double speed, const DelayModel& m) {
  if (speed < 1e-9) return {m.predict_prob_static, m.recovery_frames_low};
  if (speed <= 1.5) return {m.predict_prob_low, m.recovery_frames_low};
  return {m.predict_prob_high, m.recovery_frames_high};
}

}  // namespace

std::vector<ReliabilityCell> reliability_sweep(const ReliabilityConfig& config) {
  if (config.max_users < 2) throw std::invalid_argument("need at least two users");
  if (config.runs < 1 || config.frames < 2)
    throw std::invalid_argument("need at least one run of two frames");
  const DelayModel& model = config.model;
  const double mu = model.server_rate_bps / model.payload_bits;
  const int train_every = model.frames_per_training();
  const double snr = model.snr_linear();
  const double rate = model.link_rate_bps();
  const std::vector<SchemeKind> kinds = {SchemeKind::ProposedJSC,
                                         SchemeKind::CommOnlyBeamTracking,
                                         SchemeKind::StandaloneSensing};

  std::vector<ReliabilityCell> cells;
  for (double speed : config.speeds_mps) {
    MobilityProfile prof = profile_for(speed, model);
    const int U_max = config.max_users;
    const int F = config.frames;
    // ok/total counts per (U, scheme); full delay lists would not fit.
    std::vector<std::vector<std::pair<long, long>>> counts(
        size_t(U_max) + 1, std::vector<std::pair<long, long>>(kinds.size(), {0, 0}));

    for (int run = 0; run < config.runs; ++run) {
      SceneConfig sc = config.scene;
      sc.users = U_max;
      sc.speed_mps = speed;
      sc.seed = config.seed + 1000003ull * run + 17ull * static_cast<std::uint64_t>(speed * 100);
      Scene scene = build_scene(sc);
      Rng rng(sc.seed ^ 0xd1b54a32d192ed03ull);

      // Tagged-user analysis: the probe is always user 0; larger
      // populations only add load and blocker bodies around it, so the
      // per-U comparison is a clean coupled difference.
      auto it = std::find_if(scene.association.begin(), scene.association.end(),
                             [&](const auto& kv) { return kv.second == 0; });
      if (it == scene.association.end())
        throw std::runtime_error("tagged user without a serving subarray");
      const int serving = it->first;

      // Per-body blocking history of the tagged link, computed once per
      // run. Outage bookkeeping is done per body so that growing the
      // population only adds outage and training conditions; together
      // with the queue this makes every frame's delay monotone in U.
      std::vector<std::vector<char>> hit(U_max, std::vector<char>(F, 0));
      for (int t = 0; t < F; ++t) {
        if (t > 0) scene = step_mobility(scene, model.frame_period_s, rng);
        for (int i = 0; i < U_max; ++i)
          hit[i][t] = segment_hits_disc(scene.subarrays[serving].position,
                                        scene.users[0].position, scene.obstacles[i].center,
                                        scene.obstacles[i].radius);
      }
      // One prediction draw per blocking onset, shared by all schemes.
      std::vector<std::vector<double>> onset_draw(U_max, std::vector<double>(F, 2.0));
      for (int i = 0; i < U_max; ++i)
        for (int t = 1; t < F; ++t)
          if (hit[i][t] && !hit[i][t - 1]) onset_draw[i][t] = uniform(rng, 0.0, 1.0);

      // Outage / training contribution of one body under one scheme.
      // A body already blocking at the last scheduled training (or at
      // session start) is routed around, so it never causes outage.
      auto body_events = [&](int i, SchemeKind kind, std::vector<char>& outage,
                             std::vector<char>& trains) {
        if (kind == SchemeKind::CommOnlyBeamTracking) {
          for (int t = 0; t < F; ++t) {
            int last_train = t - t % train_every;
            if (hit[i][t] && !hit[i][last_train]) outage[t] = 1;
          }
          return;
        }
        double p = kind == SchemeKind::StandaloneSensing ? 1.0 : prof.predict_prob;
        for (int t = 1; t < F; ++t) {
          if (!(hit[i][t] && !hit[i][t - 1])) continue;
          if (onset_draw[i][t] < p) {
            trains[t] = 1;  // predicted: reroute before the blocker lands
          } else {
            int until = std::min(F, t + prof.recovery_frames);
            for (int s = t; s < until; ++s)
              if (hit[i][s]) outage[s] = 1;
            if (until < F) trains[until] = 1;
          }
        }
      };

      for (size_t si = 0; si < kinds.size(); ++si) {
        Scheme scheme = make_scheme(kinds[si]);
        std::vector<char> outage(F, 0), trains(F, 0);
        for (int U = 2; U <= U_max; ++U) {
          // Accumulate the bodies the population grew by.
          for (int i = (U == 2 ? 0 : U - 1); i < U; ++i)
            body_events(i, scheme.kind, outage, trains);
          const double lambda = U / model.frame_period_s;
          const double rho = lambda / mu;
          auto& bucket = counts[U][si];
          for (int t = 0; t < F; ++t) {
            FrameContext ctx;
            ctx.rate_bps = rate;
            ctx.utilization = rho;
            ctx.outage = outage[t] != 0;
            ctx.trains = trains[t] != 0;
            if (scheme.kind == SchemeKind::CommOnlyBeamTracking)
              ctx.trains = (t % train_every == 0);
            if (e2e_delay(ctx, scheme, model) < model.reliability_threshold_s) ++bucket.first;
            ++bucket.second;
          }
        }
      }
    }

    for (int U = 2; U <= U_max; ++U)
      for (size_t si = 0; si < kinds.size(); ++si) {
        ReliabilityCell cell;
        cell.speed = speed;
        cell.users = U;
        cell.scheme = kinds[si];
        cell.reliability =
            static_cast<double>(counts[U][si].first) / static_cast<double>(counts[U][si].second);
        cell.spectral_efficiency =
            spectral_efficiency(make_scheme(kinds[si]), std::vector<double>{snr});
        cells.push_back(cell);
      }
  }
  return cells;
}

// ---------------------------------------------------------------------------

std::vector<BandwidthCell> bandwidth_sweep(const BandwidthConfig& config) {
  if (config.bandwidths_hz.empty()) throw std::invalid_argument("no bandwidths given");
  if (config.placements < 1) throw std::invalid_argument("need at least one placement");
  const double snr = std::pow(10.0, config.snr_db / 10.0);

  // One LoS placement set, reused verbatim at every bandwidth so the
  // noise draws are common random numbers.
  std::vector<SceneConfig> placements;
  for (int i = 0; placements.size() < size_t(config.placements) && i < config.placements * 20;
       ++i) {
    SceneConfig sc;
    sc.room_size_m = config.room_size;
    sc.walls = 1;
    sc.panels = 1;
    sc.subarrays_per_panel = 1;
    sc.M = config.M;
    sc.Q = config.Q;
    sc.users = 1;
    sc.seed = config.seed + 7919ull * i;
    Scene probe = build_scene(sc);
    auto paths = ground_truth_paths(probe, probe.subarrays[0], probe.users[0]);
    if (paths.front().kind != PathKind::LoS) continue;  // needs a clear link
    placements.push_back(sc);
  }
  if (placements.size() < size_t(config.placements))
    throw std::runtime_error("could not draw enough unobstructed placements");

  SoundingConfig sounding;
  sounding.J = config.J;
  sounding.T = config.T;
  sounding.K = config.subcarriers;
  SearchGrid grid;

  std::vector<BandwidthCell> out;
  for (double W : config.bandwidths_hz) {
    CarrierConfig carrier = make_carrier(config.f_hz, W, config.subcarriers, 0.01, 0.0);
    double se = 0.0;
    for (size_t i = 0; i < placements.size(); ++i) {
      Scene scene = build_scene(placements[i]);
      const RisSubarray& sub = scene.subarrays[0];
      const User& user = scene.users[0];
      SoundingConfig snd = sounding;
      snd.combiner_seed = config.seed + 3ull * i + 1;
      snd.precoder_seed = config.seed + 3ull * i + 2;
      snd.noise_seed = config.seed + 3ull * i + 3;

      MeasurementTensor mt = snapshots_at_snr(scene, sub, user, snd, carrier, config.snr_db);
      CpdOptions opts;
      opts.seed = config.seed + i;
      FactorTriple ft = cpd_als(mt.chi, 1, opts);
      SensingEstimate est =
          estimate_path(ft.A.col(0), ft.B.col(0), ft.C.col(0), mt, grid, 1e-30);
      Vec2 pos = invert_los(est.aoa, est.toa, sub.position);
      se += std::pow((pos - user.position).norm(), 2.0);
    }
    BandwidthCell cell;
    cell.bandwidth_hz = W;
    cell.rmse_m = std::sqrt(se / placements.size());
    cell.rate_bps = W * std::log2(1.0 + snr);
    out.push_back(cell);
  }
  return out;
}

double isolated_cell_fraction(const AwarenessMap& map) {
  int occupied = 0, isolated = 0;
  for (int cy = 0; cy < map.cells; ++cy)
    for (int cx = 0; cx < map.cells; ++cx) {
      if (map.sigma[map.index(cx, cy)] == 0) continue;
      ++occupied;
      bool lonely = true;
      for (int dy = -1; dy <= 1 && lonely; ++dy)
        for (int dx = -1; dx <= 1 && lonely; ++dx) {
          if (dx == 0 && dy == 0) continue;
          int nx = cx + dx, ny = cy + dy;
          if (nx < 0 || ny < 0 || nx >= map.cells || ny >= map.cells) continue;
          if (map.sigma[map.index(nx, ny)] > 0) lonely = false;
        }
      if (lonely) ++isolated;
    }
  return occupied == 0 ? 0.0 : static_cast<double>(isolated) / occupied;
}

std::string metrics_csv(const std::vector<ReliabilityCell>& cells,
                        const std::vector<BandwidthCell>& bw, double bw_default_hz,
                        std::uint64_t seed) {
  std::ostringstream out;
  out.precision(17);
  out << "scheme,U,W,mobility,reliability,se,rmse,seed\n";
  for (const ReliabilityCell& c : cells)
    out << scheme_name(c.scheme) << ',' << c.users << ',' << bw_default_hz << ',' << c.speed
        << ',' << c.reliability << ',' << c.spectral_efficiency << ",," << seed << '\n';
  for (const BandwidthCell& c : bw)
    out << "sensing_pipeline,," << c.bandwidth_hz << ",,," << c.rate_bps / c.bandwidth_hz << ','
        << c.rmse_m << ',' << seed << '\n';
  return out.str();
}

}  // namespace thz
