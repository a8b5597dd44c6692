#include "thz/estimator.hpp"

#include <algorithm>
#include <functional>
#include <limits>

namespace thz {

namespace {

// Golden-section maximization of f on [a, b].
double golden_max(const std::function<double(double)>& f, double a, double b, int iters) {
  const double gr = (std::sqrt(5.0) + 1.0) / 2.0;
  double c = b - (b - a) / gr;
  double d = a + (b - a) / gr;
  for (int i = 0; i < iters; ++i) {
    if (f(c) > f(d)) b = d; else a = c;
    c = b - (b - a) / gr;
    d = a + (b - a) / gr;
  }
  return 0.5 * (a + b);
}

// Coarse grid argmax followed by golden-section refinement around the peak.
std::pair<double, double> grid_refine(const std::function<double(double)>& score, double lo,
                                      double hi, double step, int refine_iters) {
  double best_x = lo, best_s = -std::numeric_limits<double>::infinity();
  for (double x = lo; x <= hi + 0.5 * step; x += step) {
    double s = score(std::min(x, hi));
    if (s > best_s) { best_s = s; best_x = std::min(x, hi); }
  }
  double a = std::max(lo, best_x - step);
  double b = std::min(hi, best_x + step);
  double x = golden_max(score, a, b, refine_iters);
  return {x, score(x)};
}

Eigen::VectorXcd delay_ramp(double tau, const CarrierConfig& carrier) {
  const int K = carrier.num_subcarriers;
  Eigen::VectorXcd ramp(K);
  double rate = 2.0 * kPi * carrier.bandwidth * tau / K;
  for (int k = 0; k < K; ++k) ramp(k) = std::polar(1.0, -rate * k);
  return ramp;
}

double normalized_corr(const Eigen::VectorXcd& col, const Eigen::VectorXcd& model) {
  double d = col.norm() * model.norm();
  return d > 0.0 ? std::abs(cd(col.adjoint() * model)) / d : 0.0;
}

// The coarse scan must sample the array main lobe (width ~ lambda / (n d)
// in sine space) at least twice or large apertures step over the peak.
double angle_step_for(double grid_step, int n, double spacing, double wavelength) {
  double lobe = wavelength / (2.0 * n * spacing);
  return std::min(grid_step, lobe);
}

}  // namespace

std::pair<double, double> estimate_aoa(const Eigen::VectorXcd& a_col,
                                       const CombinerBank& combiners, double spacing,
                                       double wavelength, const SearchGrid& grid) {
  if (a_col.size() != combiners.W.cols())
    throw std::invalid_argument("factor column length must equal J");
  if (a_col.norm() == 0.0) throw std::invalid_argument("all-zero factor column");
  const int M = static_cast<int>(combiners.W.rows());
  auto score = [&](double phi) {
    Eigen::VectorXcd zeta =
        combiners.W.transpose() * steering_vector(M, spacing, wavelength, phi);
    return normalized_corr(a_col, zeta);
  };
  return grid_refine(score, grid.angle_min, grid.angle_max,
                     angle_step_for(grid.angle_step, M, spacing, wavelength),
                     grid.refine_iters);
}

std::pair<double, double> estimate_aod(const Eigen::VectorXcd& b_col,
                                       const PrecoderTrack& precoders, double spacing,
                                       double wavelength, const SearchGrid& grid) {
  if (b_col.size() != precoders.Omega.cols())
    throw std::invalid_argument("factor column length must equal T");
  if (b_col.norm() == 0.0) throw std::invalid_argument("all-zero factor column");
  const int Q = static_cast<int>(precoders.Omega.rows());
  auto score = [&](double theta) {
    // The snapshot-mode factor carries conj(Omega^H a_t).
    Eigen::VectorXcd xi =
        (precoders.Omega.adjoint() * steering_vector(Q, spacing, wavelength, theta))
            .conjugate();
    return normalized_corr(b_col, xi);
  };
  return grid_refine(score, grid.angle_min, grid.angle_max,
                     angle_step_for(grid.angle_step, Q, spacing, wavelength),
                     grid.refine_iters);
}

std::pair<double, double> estimate_toa(const Eigen::VectorXcd& c_col,
                                       const CarrierConfig& carrier, const SearchGrid& grid) {
  if (carrier.num_subcarriers < 2)
    throw std::invalid_argument("delay is unobservable with a single subcarrier");
  if (c_col.size() != carrier.num_subcarriers)
    throw std::invalid_argument("factor column length must equal K");
  if (c_col.norm() == 0.0) throw std::invalid_argument("all-zero factor column");
  // The delay model is periodic with period K/W; search one period.
  double period = carrier.num_subcarriers / carrier.bandwidth;
  double hi = std::min(grid.delay_max, period * (1.0 - 1e-12));
  double step = grid.delay_step > 0.0 ? grid.delay_step : 1.0 / (4.0 * carrier.bandwidth);
  auto corr = [&](double tau) { return normalized_corr(c_col, delay_ramp(tau, carrier)); };
  if (grid.toa_literal_argmin) {
    auto neg = [&](double tau) { return -corr(tau); };
    auto [tau, s] = grid_refine(neg, grid.delay_min, hi, step, grid.refine_iters);
    return {tau, corr(tau)};
  }
  return grid_refine(corr, grid.delay_min, hi, step, grid.refine_iters);
}

cd recover_gain(const Eigen::VectorXcd& c_col, double tau, const CarrierConfig& carrier) {
  Eigen::VectorXcd ramp = delay_ramp(tau, carrier);
  return cd(ramp.adjoint() * c_col) / ramp.squaredNorm();
}

PathKind classify_link(cd gain, double epsilon) {
  if (epsilon <= 0.0) throw std::invalid_argument("threshold must be positive");
  return std::abs(gain) >= epsilon ? PathKind::LoS : PathKind::NLoS;
}

SensingEstimate estimate_path(const Eigen::VectorXcd& a_col, const Eigen::VectorXcd& b_col,
                              const Eigen::VectorXcd& c_col, const MeasurementTensor& meta,
                              const SearchGrid& grid, double classify_epsilon) {
  const double lambda = meta.carrier.wavelength();
  const double spacing = meta.antenna_spacing;

  auto [phi_local, sa] = estimate_aoa(a_col, meta.combiners, spacing, lambda, grid);
  auto [theta, sb] = estimate_aod(b_col, meta.precoders, spacing, lambda, grid);
  auto [tau, sc] = estimate_toa(c_col, meta.carrier, grid);

  SensingEstimate est;
  est.aoa = wrap_angle(phi_local + meta.subarray_boresight);
  est.aod = theta;
  est.toa = tau;
  est.score_aoa = sa;
  est.score_aod = sb;
  est.score_toa = sc;

  // Undo the CP scale ambiguity: express the amplitude relative to the
  // model responses at the estimated angles, pushing all scale into C.
  const int M = static_cast<int>(meta.combiners.W.rows());
  const int Q = static_cast<int>(meta.precoders.Omega.rows());
  Eigen::VectorXcd zeta =
      meta.combiners.W.transpose() * steering_vector(M, spacing, lambda, phi_local);
  Eigen::VectorXcd xi =
      (meta.precoders.Omega.adjoint() * steering_vector(Q, spacing, lambda, theta))
          .conjugate();
  cd s1 = cd(zeta.adjoint() * a_col) / zeta.squaredNorm();
  cd s2 = cd(xi.adjoint() * b_col) / xi.squaredNorm();
  est.gain = s1 * s2 * recover_gain(c_col, tau, meta.carrier);

  // Classification compares the reflection loss, i.e. the gain relative
  // to the lossless magnitude at the measured range, so that path length
  // cancels and one relative threshold serves all links.
  const double kabs = meta.carrier.absorption.empty()
                          ? 0.0
                          : meta.carrier.absorption[meta.carrier.num_subcarriers / 2];
  double r = std::max(kSpeedOfLight * tau, 1e-6);
  double reference = std::abs(los_gain(meta.carrier.center_frequency, r, kabs, tau));
  est.link_kind = classify_link(cd(std::abs(est.gain) / reference), classify_epsilon);
  return est;
}

double calibrate_threshold(const CarrierConfig& carrier, double room_size, double eta,
                           double sigma, int samples, std::uint64_t seed) {
  if (samples < 2) throw std::invalid_argument("need at least two calibration samples");
  Rng rng(seed);
  const double f = carrier.center_frequency;
  const double kabs = carrier.absorption.empty()
                          ? 0.0
                          : carrier.absorption[carrier.num_subcarriers / 2];
  // Magnitudes are taken relative to the lossless level at the link's
  // own range, so LoS samples sit at 1 and NLoS samples at |gamma rho|.
  // Incidence stays below ~63 deg: steeper bounces off a convex body
  // are self-occluded in this scene family.
  std::vector<double> los_mags, nlos_mags;
  for (int i = 0; i < samples; ++i) {
    double r = uniform(rng, 1.0, room_size * std::sqrt(2.0));
    double ref = std::abs(los_gain(f, r, kabs, r / kSpeedOfLight));
    los_mags.push_back(std::abs(los_gain(f, r, kabs, r / kSpeedOfLight)) / ref);
    double r1 = uniform(rng, 0.5, room_size);
    double r2 = uniform(rng, 0.5, room_size);
    double rt = r1 + r2;
    double psi = uniform(rng, 0.05, 1.1);
    double nref = std::abs(los_gain(f, rt, kabs, rt / kSpeedOfLight));
    nlos_mags.push_back(
        std::abs(nlos_gain(f, r1, r2, kabs, psi, eta, sigma, rt / kSpeedOfLight)) / nref);
  }
  auto median = [](std::vector<double>& v) {
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    return v[v.size() / 2];
  };
  return std::sqrt(median(los_mags) * median(nlos_mags));
}

}  // namespace thz
