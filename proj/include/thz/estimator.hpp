#pragma once

#include <Eigen/Dense>

#include "thz/cpd.hpp"
#include "thz/signal.hpp"

namespace thz {

struct SearchGrid {
  double angle_min = -kPi / 2.0;
  double angle_max = kPi / 2.0;
  double angle_step = deg2rad(0.5);
  double delay_min = 0.0;
  double delay_max = 250e-9;   // >= 2x room diagonal travel time for a 24 m room
  double delay_step = 0.0;     // 0: derive 1/(4W) from the carrier
  int refine_iters = 20;       // golden-section passes
  /// Runs the literal arg-min form of the delay search instead of the
  /// argmax of the normalized correlation (comparison hook only).
  bool toa_literal_argmin = false;
};

struct SensingEstimate {
  double aoa = 0.0;  // global bearing
  double aod = 0.0;  // relative to the user boresight
  double toa = 0.0;
  cd gain = 0.0;
  PathKind link_kind = PathKind::LoS;
  double score_aoa = 0.0, score_aod = 0.0, score_toa = 0.0;
};

/// One-dimensional normalized-correlation searches. Angles are local to
/// the array whose steering model is used; the pipeline converts AoA
/// back to a global bearing with the subarray boresight.
std::pair<double, double> estimate_aoa(const Eigen::VectorXcd& a_col,
                                       const CombinerBank& combiners, double spacing,
                                       double wavelength, const SearchGrid& grid);

std::pair<double, double> estimate_aod(const Eigen::VectorXcd& b_col,
                                       const PrecoderTrack& precoders, double spacing,
                                       double wavelength, const SearchGrid& grid);

std::pair<double, double> estimate_toa(const Eigen::VectorXcd& c_col,
                                       const CarrierConfig& carrier, const SearchGrid& grid);

/// Least-squares amplitude of the delay ramp: (Lambda(tau)^H c) / ||Lambda||^2.
cd recover_gain(const Eigen::VectorXcd& c_col, double tau, const CarrierConfig& carrier);

PathKind classify_link(cd gain, double epsilon);

/// Full sensing pipeline for one factor column triple; resolves the CP
/// scale ambiguity by referring amplitudes to the unit-norm steering
/// responses at the estimated angles.
SensingEstimate estimate_path(const Eigen::VectorXcd& a_col, const Eigen::VectorXcd& b_col,
                              const Eigen::VectorXcd& c_col, const MeasurementTensor& meta,
                              const SearchGrid& grid, double classify_epsilon);

/// Geometric mean of the median LoS and NLoS gain magnitudes over a
/// labeled calibration sweep of random links, with every magnitude
/// normalized by the lossless level at that link's range. The result is
/// a relative threshold on the reflection loss.
double calibrate_threshold(const CarrierConfig& carrier, double room_size, double eta,
                           double sigma, int samples, std::uint64_t seed);

}  // namespace thz
