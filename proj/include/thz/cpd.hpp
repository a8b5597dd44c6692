#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "thz/common.hpp"

namespace thz {

/// Dense complex three-mode tensor, laid out with the first index fastest.
struct Tensor3 {
  int n1 = 0, n2 = 0, n3 = 0;
  std::vector<cd> data;

  Tensor3() = default;
  Tensor3(int a, int b, int c) : n1(a), n2(b), n3(c), data(size_t(a) * b * c, cd(0.0)) {}

  cd& at(int i, int j, int k) { return data[size_t(i) + size_t(n1) * (j + size_t(n2) * k)]; }
  const cd& at(int i, int j, int k) const {
    return data[size_t(i) + size_t(n1) * (j + size_t(n2) * k)];
  }

  double frobenius_norm() const;
};

struct FactorTriple {
  Eigen::MatrixXcd A;  // n1 x P
  Eigen::MatrixXcd B;  // n2 x P
  Eigen::MatrixXcd C;  // n3 x P
  double fit = 1.0;    // relative reconstruction error in [0, 1]
  int iterations = 0;
  bool diagonal_loading_used = false;
  std::vector<double> fit_history;
};

/// Permutation/scale relation between an estimate and a reference triple.
struct AmbiguityNote {
  std::vector<int> permutation;           // estimate column -> truth column
  std::vector<cd> scale_a, scale_b, scale_c;
  std::vector<double> congruence;         // per matched column, product of |corr| over modes
  bool ambiguous = false;                 // two candidate matches within 1e-6
};

/// Mode-m unfolding with columns ordered so X_(1) = A (C kr B)^T holds.
Eigen::MatrixXcd mode_unfold(const Tensor3& t, int mode);

/// Inverse of mode_unfold.
Tensor3 refold(const Eigen::MatrixXcd& m, int mode, int n1, int n2, int n3);

/// Column-wise Kronecker product (IxP, JxP) -> (IJxP), row index i_A * J + i_B...
/// column p is kron(A.col(p), B.col(p)) with B's index fastest.
Eigen::MatrixXcd khatri_rao(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B);

Tensor3 reconstruct(const FactorTriple& f, int n1, int n2, int n3);

struct CpdOptions {
  double tol = 1e-8;
  int max_iter = 500;
  int restarts = 3;
  std::optional<FactorTriple> init;
  std::uint64_t seed = 0;
};

/// Alternating least squares CP decomposition.
FactorTriple cpd_als(const Tensor3& tensor, int rank, const CpdOptions& opts = {});

/// Greedy column matching between an estimate and the ground truth.
AmbiguityNote match_columns(const FactorTriple& estimate, const FactorTriple& truth);

/// Generic Kruskal condition: min(J,P)+min(T,P)+min(K,P) >= 2P+2.
bool kruskal_uniqueness_check(int J, int T, int K, int P);

}  // namespace thz
