#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "thz/common.hpp"
#include "thz/scene.hpp"

namespace thz {

/// Piecewise-linear molecular absorption stand-in: k(f) at 1% water
/// vapor, scaled linearly by the vapor fraction. Users may substitute a
/// spectroscopic table via the two-column text file format.
class AbsorptionTable {
 public:
  AbsorptionTable();  // built-in 8-point table, 0.1-0.45 THz
  static AbsorptionTable from_file(const std::string& path);

  /// k(f) in 1/m. Throws if f is outside the table range.
  double coefficient(double f_hz, double water_vapor_fraction) const;

  const std::vector<double>& frequencies_thz() const { return f_thz_; }
  const std::vector<double>& values_per_m() const { return k_ref_; }

 private:
  std::vector<double> f_thz_;
  std::vector<double> k_ref_;  // at 1% vapor
};

/// Convenience wrapper around the default table.
double absorption_coefficient(double f_hz, double water_vapor_fraction);

struct CarrierConfig {
  double center_frequency = 0.275e12;  // f, Hz
  double bandwidth = 10e9;             // W, Hz
  int num_subcarriers = 64;            // K
  std::vector<double> absorption;      // k(f_k), 1/m, per subcarrier
  double noise_power = 0.0;            // W per measurement

  /// Physical subcarrier frequency: f + (k - K/2) * W / K.
  double subcarrier_frequency(int k) const {
    return center_frequency + (k - num_subcarriers / 2.0) * bandwidth / num_subcarriers;
  }
  double wavelength() const { return kSpeedOfLight / center_frequency; }

  void validate() const;
};

CarrierConfig make_carrier(double f_hz, double bandwidth_hz, int num_subcarriers,
                           double water_vapor_fraction, double noise_power);

struct ChannelMatrix {
  Eigen::MatrixXcd entries;  // M x Q
  int subcarrier_index = 0;
  std::vector<PathParams> paths;
};

/// Unit-norm ULA steering vector, element q = exp(j 2pi (d/lambda) q sin(angle)) / sqrt(n).
Eigen::VectorXcd steering_vector(int num_antennas, double spacing, double wavelength,
                                 double angle);

cd los_gain(double f_hz, double r_m, double k_per_m, double tau_s);

/// Transverse-electric Fresnel reflection coefficient, in [-1, 0).
double fresnel_coefficient(double psi, double eta);

/// Rayleigh roughness attenuation, in (0, 1].
double rayleigh_factor(double psi, double sigma_m, double f_hz);

cd nlos_gain(double f_hz, double r1_m, double r2_m, double k_per_m, double psi, double eta,
             double sigma_m, double tau_s);

/// Path gain at a given frequency from the path geometry (reflector
/// material taken from the scene obstacle for NLoS paths).
cd path_gain(const PathParams& path, double f_hz, double k_per_m, double eta, double sigma_m);

/// Frequency-domain channel at subcarrier k. Steering vectors
/// are evaluated at the carrier wavelength; the per-subcarrier delay and
/// absorption enter through the path gains.
ChannelMatrix channel_matrix(const std::vector<PathParams>& paths, const RisSubarray& sub,
                             const User& user, const CarrierConfig& carrier, int k);

}  // namespace thz
