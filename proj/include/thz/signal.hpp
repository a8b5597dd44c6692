#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "thz/channel.hpp"
#include "thz/cpd.hpp"
#include "thz/scene.hpp"

namespace thz {

struct SoundingConfig {
  int J = 16;  // measurements per snapshot
  int T = 16;  // snapshots
  int K = 64;  // subcarriers (must match the carrier)
  int streams = 1;
  double transmit_power = 1.0;  // p, W
  std::uint64_t combiner_seed = 1;
  std::uint64_t precoder_seed = 2;
  std::uint64_t noise_seed = 3;

  void validate() const;
};

struct CombinerBank {
  Eigen::MatrixXcd W;  // M x J, unit-norm columns
};

struct PrecoderTrack {
  Eigen::MatrixXcd Omega;  // Q x T, columns of squared norm p
};

struct MeasurementTensor {
  Tensor3 chi;  // J x T x K
  CombinerBank combiners;
  PrecoderTrack precoders;
  CarrierConfig carrier;
  SoundingConfig sounding;
  bool blocked = false;
  std::vector<PathParams> truth_paths;
  double antenna_spacing = 0.0;  // of the recording subarray
  double subarray_boresight = 0.0;
};

CombinerBank make_combiners(int M, int J, std::uint64_t seed);

PrecoderTrack make_precoders(int Q, int T, double power, std::uint64_t seed,
                             std::optional<double> steer_toward = std::nullopt,
                             double spacing = 0.0, double wavelength = 0.0);

/// Records J x T x K uplink snapshots of one subarray/user link through
/// the frequency-domain channel, channel frozen over the T snapshots.
MeasurementTensor generate_snapshots(const Scene& scene, const RisSubarray& sub,
                                     const User& user, const SoundingConfig& sounding,
                                     const CarrierConfig& carrier);

/// Noiseless CP factors of the measurement model for the given paths:
/// A = W^T a_r, B = conj(Omega^H a_t), C[k] = alpha(f_k).
FactorTriple model_factors(const std::vector<PathParams>& paths, const RisSubarray& sub,
                           const User& user, const CombinerBank& combiners,
                           const PrecoderTrack& precoders, const CarrierConfig& carrier);

double tensor_signal_power(const Tensor3& t);

/// Flat binary dump (first index fastest, re/im interleaved doubles)
/// plus a JSON sidecar with dimensions and metadata.
void save_tensor(const MeasurementTensor& mt, const std::string& bin_path,
                 const std::string& json_path);
MeasurementTensor load_tensor(const std::string& bin_path, const std::string& json_path);

}  // namespace thz
