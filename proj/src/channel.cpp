#include "thz/channel.hpp"

#include <fstream>
#include <sstream>

namespace thz {

namespace {

// Shipped stand-in values (data/absorption_table.txt carries the same rows).
const double kTableF[] = {0.10, 0.15, 0.20, 0.25, 0.275, 0.30, 0.35, 0.45};
const double kTableK[] = {0.0008, 0.0014, 0.0022, 0.0029, 0.0033, 0.0040, 0.0058, 0.0110};

}  // namespace

AbsorptionTable::AbsorptionTable()
    : f_thz_(std::begin(kTableF), std::end(kTableF)),
      k_ref_(std::begin(kTableK), std::end(kTableK)) {}

AbsorptionTable AbsorptionTable::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open absorption table: " + path);
  AbsorptionTable t;
  t.f_thz_.clear();
  t.k_ref_.clear();
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    double f, k;
    if (!(ls >> f >> k)) throw std::runtime_error("malformed absorption table row: " + line);
    t.f_thz_.push_back(f);
    t.k_ref_.push_back(k);
  }
  if (t.f_thz_.size() < 2) throw std::runtime_error("absorption table needs at least two rows");
  for (size_t i = 1; i < t.f_thz_.size(); ++i)
    if (t.f_thz_[i] <= t.f_thz_[i - 1])
      throw std::runtime_error("absorption table frequencies must be increasing");
  return t;
}

double AbsorptionTable::coefficient(double f_hz, double water_vapor_fraction) const {
  if (water_vapor_fraction < 0.0 || water_vapor_fraction > 1.0)
    throw std::invalid_argument("water vapor fraction must be in [0,1]");
  double f_thz = f_hz / 1e12;
  if (f_thz < f_thz_.front() || f_thz > f_thz_.back())
    throw std::out_of_range("frequency outside absorption table range");
  size_t hi = 1;
  while (hi + 1 < f_thz_.size() && f_thz_[hi] < f_thz) ++hi;
  double t = (f_thz - f_thz_[hi - 1]) / (f_thz_[hi] - f_thz_[hi - 1]);
  double k1pct = k_ref_[hi - 1] + t * (k_ref_[hi] - k_ref_[hi - 1]);
  return k1pct * (water_vapor_fraction / 0.01);
}

double absorption_coefficient(double f_hz, double water_vapor_fraction) {
  static const AbsorptionTable table;
  return table.coefficient(f_hz, water_vapor_fraction);
}

void CarrierConfig::validate() const {
  if (center_frequency <= 0.0) throw std::invalid_argument("center frequency must be positive");
  if (bandwidth <= 0.0) throw std::invalid_argument("bandwidth must be positive");
  if (num_subcarriers < 1) throw std::invalid_argument("need at least one subcarrier");
  if (absorption.size() != static_cast<size_t>(num_subcarriers))
    throw std::invalid_argument("absorption vector length must equal K");
  for (double k : absorption)
    if (k < 0.0) throw std::invalid_argument("absorption must be non-negative");
  if (noise_power < 0.0) throw std::invalid_argument("noise power must be non-negative");
}

CarrierConfig make_carrier(double f_hz, double bandwidth_hz, int num_subcarriers,
                           double water_vapor_fraction, double noise_power) {
  CarrierConfig c;
  c.center_frequency = f_hz;
  c.bandwidth = bandwidth_hz;
  c.num_subcarriers = num_subcarriers;
  c.noise_power = noise_power;
  c.absorption.resize(num_subcarriers);
  for (int k = 0; k < num_subcarriers; ++k)
    c.absorption[k] = absorption_coefficient(c.subcarrier_frequency(k), water_vapor_fraction);
  c.validate();
  return c;
}

Eigen::VectorXcd steering_vector(int num_antennas, double spacing, double wavelength,
                                 double angle) {
  if (num_antennas < 1) throw std::invalid_argument("num_antennas must be >= 1");
  if (spacing <= 0.0 || wavelength <= 0.0)
    throw std::invalid_argument("spacing and wavelength must be positive");
  Eigen::VectorXcd a(num_antennas);
  double phase_step = 2.0 * kPi * (spacing / wavelength) * std::sin(angle);
  double scale = 1.0 / std::sqrt(static_cast<double>(num_antennas));
  for (int q = 0; q < num_antennas; ++q)
    a(q) = std::polar(scale, phase_step * q);
  return a;
}

cd los_gain(double f_hz, double r_m, double k_per_m, double tau_s) {
  if (r_m <= 0.0) throw std::invalid_argument("distance must be positive");
  double mag = kSpeedOfLight / (4.0 * kPi * f_hz * r_m) * std::exp(-k_per_m * r_m / 2.0);
  return std::polar(mag, -2.0 * kPi * f_hz * tau_s);
}

double fresnel_coefficient(double psi, double eta) {
  if (eta <= 1.0) throw std::invalid_argument("refractive index must exceed 1");
  return -std::exp(-2.0 * std::cos(psi) / std::sqrt(eta * eta - 1.0));
}

double rayleigh_factor(double psi, double sigma_m, double f_hz) {
  if (sigma_m < 0.0) throw std::invalid_argument("roughness must be non-negative");
  double c = std::cos(psi);
  double x = 8.0 * kPi * kPi * f_hz * f_hz * sigma_m * sigma_m * c * c /
             (kSpeedOfLight * kSpeedOfLight);
  return std::exp(-x);
}

cd nlos_gain(double f_hz, double r1_m, double r2_m, double k_per_m, double psi, double eta,
             double sigma_m, double tau_s) {
  if (r1_m <= 0.0 || r2_m <= 0.0) throw std::invalid_argument("distances must be positive");
  double r = r1_m + r2_m;
  double mag = kSpeedOfLight / (4.0 * kPi * f_hz * r) * std::exp(-k_per_m * r / 2.0);
  double refl = fresnel_coefficient(psi, eta) * rayleigh_factor(psi, sigma_m, f_hz);
  return std::polar(mag, -2.0 * kPi * f_hz * tau_s) * refl;
}

cd path_gain(const PathParams& path, double f_hz, double k_per_m, double eta, double sigma_m) {
  switch (path.kind) {
    case PathKind::LoS:
      return los_gain(f_hz, path.r2, k_per_m, path.toa);
    case PathKind::NLoS:
      return nlos_gain(f_hz, path.r1, path.r2, k_per_m, path.incidence, eta, sigma_m, path.toa);
    case PathKind::Blocked:
      return 0.0;
  }
  return 0.0;
}

ChannelMatrix channel_matrix(const std::vector<PathParams>& paths, const RisSubarray& sub,
                             const User& user, const CarrierConfig& carrier, int k) {
  ChannelMatrix H;
  H.subcarrier_index = k;
  H.paths = paths;
  H.entries = Eigen::MatrixXcd::Zero(sub.num_antennas, user.num_antennas);
  const double fk = carrier.subcarrier_frequency(k);
  const double kabs = carrier.absorption.empty() ? 0.0 : carrier.absorption[k];
  const double lambda = carrier.wavelength();
  for (const PathParams& path : paths) {
    if (path.kind == PathKind::Blocked) continue;
    cd alpha = path_gain(path, fk, kabs, path.refl_eta, path.refl_sigma);
    double aoa_local = wrap_angle(path.aoa - sub.boresight);
    Eigen::VectorXcd ar =
        steering_vector(sub.num_antennas, sub.antenna_spacing, lambda, aoa_local);
    Eigen::VectorXcd at =
        steering_vector(user.num_antennas, sub.antenna_spacing, lambda, path.aod);
    H.entries += alpha * ar * at.adjoint();
  }
  return H;
}

}  // namespace thz
