#include "thz/cpd.hpp"

#include <algorithm>
#include <limits>

namespace thz {

double Tensor3::frobenius_norm() const {
  double s = 0.0;
  for (const cd& v : data) s += std::norm(v);
  return std::sqrt(s);
}

Eigen::MatrixXcd mode_unfold(const Tensor3& t, int mode) {
  switch (mode) {
    case 1: {
      Eigen::MatrixXcd m(t.n1, t.n2 * t.n3);
      for (int k = 0; k < t.n3; ++k)
        for (int j = 0; j < t.n2; ++j)
          for (int i = 0; i < t.n1; ++i) m(i, k * t.n2 + j) = t.at(i, j, k);
      return m;
    }
    case 2: {
      Eigen::MatrixXcd m(t.n2, t.n3 * t.n1);
      for (int k = 0; k < t.n3; ++k)
        for (int j = 0; j < t.n2; ++j)
          for (int i = 0; i < t.n1; ++i) m(j, k * t.n1 + i) = t.at(i, j, k);
      return m;
    }
    case 3: {
      Eigen::MatrixXcd m(t.n3, t.n2 * t.n1);
      for (int k = 0; k < t.n3; ++k)
        for (int j = 0; j < t.n2; ++j)
          for (int i = 0; i < t.n1; ++i) m(k, j * t.n1 + i) = t.at(i, j, k);
      return m;
    }
    default:
      throw std::invalid_argument("mode must be 1, 2, or 3");
  }
}

Tensor3 refold(const Eigen::MatrixXcd& m, int mode, int n1, int n2, int n3) {
  Tensor3 t(n1, n2, n3);
  for (int k = 0; k < n3; ++k)
    for (int j = 0; j < n2; ++j)
      for (int i = 0; i < n1; ++i) {
        switch (mode) {
          case 1: t.at(i, j, k) = m(i, k * n2 + j); break;
          case 2: t.at(i, j, k) = m(j, k * n1 + i); break;
          case 3: t.at(i, j, k) = m(k, j * n1 + i); break;
          default: throw std::invalid_argument("mode must be 1, 2, or 3");
        }
      }
  return t;
}

Eigen::MatrixXcd khatri_rao(const Eigen::MatrixXcd& A, const Eigen::MatrixXcd& B) {
  if (A.cols() != B.cols()) throw std::invalid_argument("khatri_rao: column counts differ");
  Eigen::MatrixXcd out(A.rows() * B.rows(), A.cols());
  for (Eigen::Index p = 0; p < A.cols(); ++p)
    for (Eigen::Index ia = 0; ia < A.rows(); ++ia)
      for (Eigen::Index ib = 0; ib < B.rows(); ++ib)
        out(ia * B.rows() + ib, p) = A(ia, p) * B(ib, p);
  return out;
}

Tensor3 reconstruct(const FactorTriple& f, int n1, int n2, int n3) {
  Tensor3 t(n1, n2, n3);
  for (int p = 0; p < f.A.cols(); ++p)
    for (int k = 0; k < n3; ++k)
      for (int j = 0; j < n2; ++j)
        for (int i = 0; i < n1; ++i)
          t.at(i, j, k) += f.A(i, p) * f.B(j, p) * f.C(k, p);
  return t;
}

namespace {

Eigen::MatrixXcd random_factor(int rows, int cols, Rng& rng) {
  Eigen::MatrixXcd m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = cd(gaussian(rng), gaussian(rng));
  return m;
}

// Solves the Khatri-Rao normal equations for one factor. X is the mode
// unfolding (rows = factor rows), Kr the matching Khatri-Rao product.
Eigen::MatrixXcd solve_factor(const Eigen::MatrixXcd& X, const Eigen::MatrixXcd& Kr,
                              const Eigen::MatrixXcd& gram, bool& loaded) {
  Eigen::MatrixXcd G = gram;
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(G);
  double smax = svd.singularValues()(0);
  double smin = svd.singularValues()(svd.singularValues().size() - 1);
  if (!(smin > 1e-12 * smax)) {
    double lambda = 1e-10 * G.trace().real();
    if (lambda <= 0.0) lambda = 1e-30;
    G.diagonal().array() += lambda;
    loaded = true;
  }
  // factor^T = G^{-1} Kr^H X^T
  Eigen::MatrixXcd rhs = Kr.adjoint() * X.transpose();
  return G.ldlt().solve(rhs).transpose();
}

double relative_fit(const Eigen::MatrixXcd& X1, const FactorTriple& f, double x_norm) {
  Eigen::MatrixXcd recon = f.A * khatri_rao(f.C, f.B).transpose();
  double err = (X1 - recon).norm();
  return x_norm > 0.0 ? err / x_norm : err;
}

FactorTriple run_als(const Tensor3& tensor, int rank, const CpdOptions& opts, Rng& rng) {
  const int n1 = tensor.n1, n2 = tensor.n2, n3 = tensor.n3;
  Eigen::MatrixXcd X1 = mode_unfold(tensor, 1);
  Eigen::MatrixXcd X2 = mode_unfold(tensor, 2);
  Eigen::MatrixXcd X3 = mode_unfold(tensor, 3);
  const double x_norm = tensor.frobenius_norm();

  FactorTriple f;
  if (opts.init) {
    f = *opts.init;
  } else {
    f.A = random_factor(n1, rank, rng);
    f.B = random_factor(n2, rank, rng);
    f.C = random_factor(n3, rank, rng);
  }

  double prev_fit = relative_fit(X1, f, x_norm);
  f.fit_history.push_back(prev_fit);
  for (int it = 0; it < opts.max_iter; ++it) {
    Eigen::MatrixXcd gram_bc =
        (f.C.adjoint() * f.C).cwiseProduct(f.B.adjoint() * f.B);
    f.A = solve_factor(X1, khatri_rao(f.C, f.B), gram_bc, f.diagonal_loading_used);

    Eigen::MatrixXcd gram_ca =
        (f.C.adjoint() * f.C).cwiseProduct(f.A.adjoint() * f.A);
    f.B = solve_factor(X2, khatri_rao(f.C, f.A), gram_ca, f.diagonal_loading_used);

    Eigen::MatrixXcd gram_ba =
        (f.B.adjoint() * f.B).cwiseProduct(f.A.adjoint() * f.A);
    f.C = solve_factor(X3, khatri_rao(f.B, f.A), gram_ba, f.diagonal_loading_used);

    double fit = relative_fit(X1, f, x_norm);
    f.fit_history.push_back(fit);
    f.iterations = it + 1;
    if (std::abs(prev_fit - fit) < opts.tol) { prev_fit = fit; break; }
    prev_fit = fit;
  }
  f.fit = prev_fit;
  return f;
}

}  // namespace

FactorTriple cpd_als(const Tensor3& tensor, int rank, const CpdOptions& opts) {
  if (rank < 1) throw std::invalid_argument("rank must be >= 1");
  if (tensor.n1 < 1 || tensor.n2 < 1 || tensor.n3 < 1)
    throw std::invalid_argument("tensor dimensions must be >= 1");
  Rng rng(opts.seed == 0 ? 0x9e3779b97f4a7c15ull : opts.seed);
  int runs = opts.init ? 1 : std::max(1, opts.restarts);
  FactorTriple best;
  bool have = false;
  for (int r = 0; r < runs; ++r) {
    FactorTriple f = run_als(tensor, rank, opts, rng);
    if (!have || f.fit < best.fit) { best = std::move(f); have = true; }
    if (best.fit < opts.tol) break;
  }
  return best;
}

AmbiguityNote match_columns(const FactorTriple& estimate, const FactorTriple& truth) {
  const int P = static_cast<int>(truth.A.cols());
  if (estimate.A.cols() != P) throw std::invalid_argument("match_columns: rank mismatch");
  auto col_corr = [](const Eigen::MatrixXcd& E, const Eigen::MatrixXcd& T, int pe, int pt) {
    double d = E.col(pe).norm() * T.col(pt).norm();
    return d > 0.0 ? std::abs(cd(T.col(pt).adjoint() * E.col(pe))) / d : 0.0;
  };

  AmbiguityNote note;
  note.permutation.assign(P, -1);
  std::vector<bool> taken(P, false);
  // Greedy: repeatedly take the globally best remaining (estimate, truth) pair.
  for (int step = 0; step < P; ++step) {
    double best = -1.0;
    int be = -1, bt = -1;
    auto score = [&](int pe, int pt) {
      return col_corr(estimate.A, truth.A, pe, pt) *
             col_corr(estimate.B, truth.B, pe, pt) *
             col_corr(estimate.C, truth.C, pe, pt);
    };
    for (int pe = 0; pe < P; ++pe) {
      if (note.permutation[pe] >= 0) continue;
      for (int pt = 0; pt < P; ++pt) {
        if (taken[pt]) continue;
        double s = score(pe, pt);
        if (s > best) { best = s; be = pe; bt = pt; }
      }
    }
    // Ambiguous only when a conflicting pair (sharing the chosen row or
    // column) scores essentially the same as the winner.
    double rival = -1.0;
    for (int pe = 0; pe < P; ++pe) {
      if (note.permutation[pe] >= 0 || pe == be) continue;
      rival = std::max(rival, score(pe, bt));
    }
    for (int pt = 0; pt < P; ++pt) {
      if (taken[pt] || pt == bt) continue;
      rival = std::max(rival, score(be, pt));
    }
    if (rival >= 0.0 && best - rival < 1e-6) note.ambiguous = true;
    note.permutation[be] = bt;
    taken[bt] = true;
  }

  note.scale_a.resize(P);
  note.scale_b.resize(P);
  note.scale_c.resize(P);
  note.congruence.resize(P);
  for (int pe = 0; pe < P; ++pe) {
    int pt = note.permutation[pe];
    auto scale = [&](const Eigen::MatrixXcd& E, const Eigen::MatrixXcd& T) {
      double n2 = T.col(pt).squaredNorm();
      return n2 > 0.0 ? cd(T.col(pt).adjoint() * E.col(pe)) / n2 : cd(0.0);
    };
    note.scale_a[pe] = scale(estimate.A, truth.A);
    note.scale_b[pe] = scale(estimate.B, truth.B);
    note.scale_c[pe] = scale(estimate.C, truth.C);
    note.congruence[pe] = col_corr(estimate.A, truth.A, pe, pt) *
                          col_corr(estimate.B, truth.B, pe, pt) *
                          col_corr(estimate.C, truth.C, pe, pt);
  }
  return note;
}

bool kruskal_uniqueness_check(int J, int T, int K, int P) {
  if (J < 1 || T < 1 || K < 1 || P < 1)
    throw std::invalid_argument("dimensions must be positive");
  return std::min(J, P) + std::min(T, P) + std::min(K, P) >= 2 * P + 2;
}

}  // namespace thz
