#include "thz/signal.hpp"

#include <fstream>

#include "json.hpp"

namespace thz {

void SoundingConfig::validate() const {
  if (J < 1 || T < 1 || K < 1) throw std::invalid_argument("J, T, K must be >= 1");
  if (streams != 1) throw std::invalid_argument("only a single stream is supported");
  if (transmit_power <= 0.0) throw std::invalid_argument("transmit power must be positive");
}

CombinerBank make_combiners(int M, int J, std::uint64_t seed) {
  if (M < 1 || J < 1) throw std::invalid_argument("M and J must be >= 1");
  if (J > 4 * M) throw std::invalid_argument("J must not exceed 4M");
  Rng rng(seed);
  CombinerBank bank;
  bank.W.resize(M, J);
  double scale = 1.0 / std::sqrt(static_cast<double>(M));
  for (int j = 0; j < J; ++j)
    for (int m = 0; m < M; ++m) bank.W(m, j) = scale * unit_phasor(rng);
  return bank;
}

PrecoderTrack make_precoders(int Q, int T, double power, std::uint64_t seed,
                             std::optional<double> steer_toward, double spacing,
                             double wavelength) {
  if (Q < 1 || T < 1) throw std::invalid_argument("Q and T must be >= 1");
  if (power <= 0.0) throw std::invalid_argument("power must be positive");
  Rng rng(seed);
  PrecoderTrack track;
  track.Omega.resize(Q, T);
  if (steer_toward) {
    Eigen::VectorXcd at = steering_vector(Q, spacing, wavelength, *steer_toward);
    for (int t = 0; t < T; ++t)
      track.Omega.col(t) = std::sqrt(power) * unit_phasor(rng) * at;
  } else {
    double scale = std::sqrt(power / Q);
    for (int t = 0; t < T; ++t)
      for (int q = 0; q < Q; ++q) track.Omega(q, t) = scale * unit_phasor(rng);
  }
  return track;
}

FactorTriple model_factors(const std::vector<PathParams>& paths, const RisSubarray& sub,
                           const User& user, const CombinerBank& combiners,
                           const PrecoderTrack& precoders, const CarrierConfig& carrier) {
  int P = 0;
  for (const auto& p : paths)
    if (p.kind != PathKind::Blocked) ++P;
  const int J = static_cast<int>(combiners.W.cols());
  const int T = static_cast<int>(precoders.Omega.cols());
  const int K = carrier.num_subcarriers;
  FactorTriple f;
  f.A = Eigen::MatrixXcd::Zero(J, std::max(P, 1));
  f.B = Eigen::MatrixXcd::Zero(T, std::max(P, 1));
  f.C = Eigen::MatrixXcd::Zero(K, std::max(P, 1));
  double lambda = carrier.wavelength();
  int col = 0;
  for (const PathParams& path : paths) {
    if (path.kind == PathKind::Blocked) continue;
    double aoa_local = wrap_angle(path.aoa - sub.boresight);
    Eigen::VectorXcd ar =
        steering_vector(sub.num_antennas, sub.antenna_spacing, lambda, aoa_local);
    Eigen::VectorXcd at =
        steering_vector(user.num_antennas, sub.antenna_spacing, lambda, path.aod);
    f.A.col(col) = combiners.W.transpose() * ar;
    f.B.col(col) = (precoders.Omega.adjoint() * at).conjugate();
    for (int k = 0; k < K; ++k)
      f.C(k, col) = path_gain(path, carrier.subcarrier_frequency(k), carrier.absorption[k],
                              path.refl_eta, path.refl_sigma);
    ++col;
  }
  f.fit = 0.0;
  return f;
}

MeasurementTensor generate_snapshots(const Scene& scene, const RisSubarray& sub,
                                     const User& user, const SoundingConfig& sounding,
                                     const CarrierConfig& carrier) {
  sounding.validate();
  carrier.validate();
  if (sounding.K != carrier.num_subcarriers)
    throw std::invalid_argument("sounding K must match the carrier subcarrier count");

  MeasurementTensor mt;
  mt.sounding = sounding;
  mt.carrier = carrier;
  mt.antenna_spacing = sub.antenna_spacing;
  mt.subarray_boresight = sub.boresight;
  mt.combiners = make_combiners(sub.num_antennas, sounding.J, sounding.combiner_seed);
  mt.precoders = make_precoders(user.num_antennas, sounding.T, sounding.transmit_power,
                                sounding.precoder_seed);
  mt.truth_paths = ground_truth_paths(scene, sub, user);
  mt.blocked = mt.truth_paths.empty() || mt.truth_paths.front().kind == PathKind::Blocked;

  mt.chi = Tensor3(sounding.J, sounding.T, sounding.K);
  if (!mt.blocked) {
    FactorTriple f =
        model_factors(mt.truth_paths, sub, user, mt.combiners, mt.precoders, carrier);
    for (int p = 0; p < f.A.cols(); ++p)
      for (int k = 0; k < sounding.K; ++k)
        for (int t = 0; t < sounding.T; ++t)
          for (int j = 0; j < sounding.J; ++j)
            mt.chi.at(j, t, k) += f.A(j, p) * f.B(t, p) * f.C(k, p);
  }
  if (carrier.noise_power > 0.0) {
    Rng rng(sounding.noise_seed);
    for (cd& v : mt.chi.data) v += complex_gaussian(rng, carrier.noise_power);
  }
  return mt;
}

double tensor_signal_power(const Tensor3& t) {
  if (t.data.empty()) return 0.0;
  double s = 0.0;
  for (const cd& v : t.data) s += std::norm(v);
  return s / static_cast<double>(t.data.size());
}

void save_tensor(const MeasurementTensor& mt, const std::string& bin_path,
                 const std::string& json_path) {
  std::ofstream bin(bin_path, std::ios::binary);
  if (!bin) throw std::runtime_error("cannot write " + bin_path);
  // Row-major (J, T, K), re/im interleaved doubles.
  for (int j = 0; j < mt.chi.n1; ++j)
    for (int t = 0; t < mt.chi.n2; ++t)
      for (int k = 0; k < mt.chi.n3; ++k) {
        const cd& v = mt.chi.at(j, t, k);
        double re = v.real(), im = v.imag();
        bin.write(reinterpret_cast<const char*>(&re), sizeof(double));
        bin.write(reinterpret_cast<const char*>(&im), sizeof(double));
      }

  nlohmann::ordered_json j;
  j["J"] = mt.chi.n1;
  j["T"] = mt.chi.n2;
  j["K"] = mt.chi.n3;
  j["blocked"] = mt.blocked;
  j["carrier"] = {{"f_hz", mt.carrier.center_frequency},
                  {"bandwidth_hz", mt.carrier.bandwidth},
                  {"noise_power", mt.carrier.noise_power},
                  {"absorption", mt.carrier.absorption}};
  j["seeds"] = {{"combiner", mt.sounding.combiner_seed},
                {"precoder", mt.sounding.precoder_seed},
                {"noise", mt.sounding.noise_seed}};
  j["transmit_power"] = mt.sounding.transmit_power;
  j["antenna_spacing"] = mt.antenna_spacing;
  j["subarray_boresight"] = mt.subarray_boresight;
  auto dump_mat = [](const Eigen::MatrixXcd& m) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      nlohmann::ordered_json col = nlohmann::ordered_json::array();
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        col.push_back({m(r, c).real(), m(r, c).imag()});
      arr.push_back(col);
    }
    return arr;
  };
  j["combiners"] = dump_mat(mt.combiners.W);
  j["precoders"] = dump_mat(mt.precoders.Omega);
  std::ofstream js(json_path);
  if (!js) throw std::runtime_error("cannot write " + json_path);
  js << j.dump(2) << "\n";
}

MeasurementTensor load_tensor(const std::string& bin_path, const std::string& json_path) {
  std::ifstream js(json_path);
  if (!js) throw std::runtime_error("cannot open " + json_path);
  nlohmann::json j = nlohmann::json::parse(js);
  MeasurementTensor mt;
  int J = j.at("J"), T = j.at("T"), K = j.at("K");
  mt.blocked = j.at("blocked");
  mt.carrier.center_frequency = j.at("carrier").at("f_hz");
  mt.carrier.bandwidth = j.at("carrier").at("bandwidth_hz");
  mt.carrier.noise_power = j.at("carrier").at("noise_power");
  mt.carrier.absorption = j.at("carrier").at("absorption").get<std::vector<double>>();
  mt.carrier.num_subcarriers = K;
  mt.sounding.J = J;
  mt.sounding.T = T;
  mt.sounding.K = K;
  mt.sounding.combiner_seed = j.at("seeds").at("combiner");
  mt.sounding.precoder_seed = j.at("seeds").at("precoder");
  mt.sounding.noise_seed = j.at("seeds").at("noise");
  mt.sounding.transmit_power = j.at("transmit_power");
  mt.antenna_spacing = j.at("antenna_spacing");
  mt.subarray_boresight = j.at("subarray_boresight");
  auto read_mat = [](const nlohmann::json& arr) {
    Eigen::MatrixXcd m(arr.at(0).size(), arr.size());
    for (size_t c = 0; c < arr.size(); ++c)
      for (size_t r = 0; r < arr.at(c).size(); ++r)
        m(r, c) = cd(arr.at(c).at(r).at(0), arr.at(c).at(r).at(1));
    return m;
  };
  mt.combiners.W = read_mat(j.at("combiners"));
  mt.precoders.Omega = read_mat(j.at("precoders"));

  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw std::runtime_error("cannot open " + bin_path);
  mt.chi = Tensor3(J, T, K);
  for (int jj = 0; jj < J; ++jj)
    for (int t = 0; t < T; ++t)
      for (int k = 0; k < K; ++k) {
        double re, im;
        bin.read(reinterpret_cast<char*>(&re), sizeof(double));
        bin.read(reinterpret_cast<char*>(&im), sizeof(double));
        if (!bin) throw std::runtime_error("tensor binary truncated: " + bin_path);
        mt.chi.at(jj, t, k) = cd(re, im);
      }
  return mt;
}

}  // namespace thz
