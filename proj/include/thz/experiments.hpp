#pragma once

#include <string>
#include <vector>

#include "thz/estimator.hpp"
#include "thz/mapper.hpp"
#include "thz/signal.hpp"

namespace thz {

enum class SchemeKind { ProposedJSC, CommOnlyBeamTracking, StandaloneSensing };

std::string scheme_name(SchemeKind kind);

struct Scheme {
  SchemeKind kind = SchemeKind::ProposedJSC;
  double training_period_s = 10e-3;    // baseline retrain interval (coherence)
  double training_duration_s = 1e-3;
  double sensing_fraction = 0.0;       // dedicated sensing resources (standalone)
};

Scheme make_scheme(SchemeKind kind);

/// Fraction of resources lost to non-communication duties.
double overhead_fraction(const Scheme& s);

/// All delay-model constants in one place so sweeps stay reproducible.
struct DelayModel {
  double payload_bits = 1e6;          // per frame, per direction
  double processing_delay_s = 2e-3;
  double frame_period_s = 2e-3;
  double coherence_s = 10e-3;
  double training_duration_s = 1e-3;
  double snr_db = 20.0;
  double link_bandwidth_hz = 10e9;
  double server_rate_bps = 1.1e10;    // shared service capacity (M/M/1)
  double reliability_threshold_s = 20e-3;

  // Map-prediction quality vs. mobility: probability that a blockage
  // onset is predicted in time, and frames needed to recover a miss.
  double predict_prob_static = 1.0;
  double predict_prob_low = 0.9;
  double predict_prob_high = 0.5;
  int recovery_frames_low = 1;
  int recovery_frames_high = 4;

  double snr_linear() const { return std::pow(10.0, snr_db / 10.0); }
  double link_rate_bps() const { return link_bandwidth_hz * std::log2(1.0 + snr_linear()); }
  int frames_per_training() const {
    return std::max(1, static_cast<int>(std::lround(coherence_s / frame_period_s)));
  }
};

struct FrameContext {
  double rate_bps = 0.0;
  double utilization = 0.0;  // rho of the shared queue
  bool trains = false;
  bool outage = false;
};

/// Uplink+downlink transmission, processing, the M/M/1 mean wait
/// rho / (mu (1 - rho)), and beam training when the scheme retrains
/// this frame. Outage or rho >= 1 gives +infinity.
double e2e_delay(const FrameContext& ctx, const Scheme& scheme, const DelayModel& model);

/// Fraction of delays strictly below the threshold.
double reliability(const std::vector<double>& delays, double threshold);

/// (1 - overhead) * mean log2(1 + SNR) over served frames.
double spectral_efficiency(const Scheme& scheme, const std::vector<double>& served_snr_linear);

// ---------------------------------------------------------------------------
// Tracking sessions (full sensing pipeline)

struct TrackingConfig {
  SceneConfig scene;
  SoundingConfig sounding;
  double f_hz = 0.275e12;
  double bandwidth_hz = 10e9;
  int subcarriers = 2048;
  double water_vapor = 0.01;
  double snr_db = 1e9;  // effectively noiseless by default
  double frame_dt_s = 0.1;
  int frames = 10;
  double map_cell_m = 0.25;
  double classify_epsilon = 0.0;  // 0: calibrate automatically

  static TrackingConfig from_kv(const KeyValueFile& kv);
};

struct LinkRecord {
  int frame = 0;
  int subarray = 0;
  int user = 0;
  PathParams truth;
  SensingEstimate estimate;
  LocalizationResult localization;
  bool failed = false;
};

struct SessionLog {
  std::vector<LinkRecord> records;
  AwarenessMap map;
  TrackingConfig config;

  std::string records_jsonl() const;
};

/// Frame loop: mobility -> snapshots -> decomposition -> path
/// estimation -> map update, logging truth against estimates.
SessionLog run_tracking_session(const TrackingConfig& config);

// ---------------------------------------------------------------------------
// Monte-Carlo sweeps

struct ReliabilityConfig {
  int max_users = 20;
  int runs = 200;
  int frames = 500;
  std::vector<double> speeds_mps = {0.0, 1.25, 2.5};  // static / walking / fast
  DelayModel model;
  SceneConfig scene;
  std::uint64_t seed = 1;
};

struct ReliabilityCell {
  double speed = 0.0;
  int users = 0;
  SchemeKind scheme = SchemeKind::ProposedJSC;
  double reliability = 0.0;
  double spectral_efficiency = 0.0;
};

/// Coupled-population Monte Carlo with a tagged probe user: each run
/// simulates max_users users and scores the first user's link under
/// every prefix population U, so per-U comparisons are paired samples.
std::vector<ReliabilityCell> reliability_sweep(const ReliabilityConfig& config);

struct BandwidthConfig {
  std::vector<double> bandwidths_hz = {7e9, 10e9, 15e9};
  int placements = 60;
  // Enough subcarriers that the delay ambiguity window K/W covers the
  // room diagonal even at the widest swept bandwidth.
  int subcarriers = 2048;
  // Extra combiners push the angle-error floor below the ranging error
  // at every swept bandwidth.
  int J = 32, T = 16;
  int M = 512, Q = 32;
  double f_hz = 0.275e12;
  // Per-subcarrier SNR, i.e. fixed SNR per Hz. Low enough that ranging
  // is noise limited rather than search-grid limited, but above the
  // rank-1 detection edge of the snapshot tensor.
  double snr_db = -15.0;
  // Small sweep room: at short range the tangential error r * d_phi sits
  // below the radial error c * d_tau, so the sweep isolates how ranging
  // sharpens with bandwidth.
  double room_size = 6.0;
  std::uint64_t seed = 1;
};

struct BandwidthCell {
  double bandwidth_hz = 0.0;
  double rmse_m = 0.0;
  double rate_bps = 0.0;
};

/// Bandwidth sweep: same placements and noise draws at every
/// bandwidth; localization RMSE from the full pipeline, achievable rate
/// from the Shannon bound at the fixed per-Hz SNR.
std::vector<BandwidthCell> bandwidth_sweep(const BandwidthConfig& config);

/// Fraction of occupied map cells with no occupied 8-neighbor; the
/// quantization-artifact score used for map-quality comparisons.
double isolated_cell_fraction(const AwarenessMap& map);

std::string metrics_csv(const std::vector<ReliabilityCell>& cells,
                        const std::vector<BandwidthCell>& bw, double bw_default_hz,
                        std::uint64_t seed);

}  // namespace thz
