#include "hh/hermite_core.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <functional>

namespace hh {

// ------------------------------------------------------------------ basis

TruncatedBasis::TruncatedBasis(int dim_n, int cutoff_K) : n_(dim_n), K_(cutoff_K) {
  if (dim_n < 1) throw std::invalid_argument("TruncatedBasis: n must be >= 1");
  if (cutoff_K < 0) throw std::invalid_argument("TruncatedBasis: K must be >= 0");
  MultiIndex cur(n_, 0);
  std::function<void(int, int)> fill = [&](int pos, int left) {
    if (pos == n_ - 1) {
      cur[pos] = left;
      indices_.push_back(cur);
      return;
    }
    for (int v = 0; v <= left; ++v) {
      cur[pos] = v;
      fill(pos + 1, left - v);
    }
  };
  for (int d = 0; d <= K_; ++d) fill(0, d);
  for (int i = 0; i < size(); ++i) {
    degrees_.push_back(total_degree(indices_[i]));
    lookup_[indices_[i]] = i;
  }
}

int TruncatedBasis::position(const MultiIndex& mu) const {
  for (int v : mu)
    if (v < 0) return -1;
  auto it = lookup_.find(mu);
  return it == lookup_.end() ? -1 : it->second;
}

std::vector<bool> TruncatedBasis::interior(int band) const {
  std::vector<bool> m(size());
  for (int i = 0; i < size(); ++i) m[i] = degrees_[i] <= K_ - band;
  return m;
}

BasisPtr make_basis(int dim_n, int cutoff_K) {
  return std::make_shared<const TruncatedBasis>(dim_n, cutoff_K);
}

int default_cutoff(int dim_n) { return dim_n == 1 ? 16 : (dim_n == 2 ? 8 : 6); }

// --------------------------------------------------------- operator matrix

OperatorMatrix::OperatorMatrix(BasisPtr b, double lam, MatC m, int bnd)
    : basis(std::move(b)), lambda(lam), entries(std::move(m)), band(bnd) {
  if (lambda == 0.0) throw std::invalid_argument("OperatorMatrix: lambda must be nonzero");
  if (entries.rows() != basis->size() || entries.cols() != basis->size())
    throw std::invalid_argument("OperatorMatrix: size does not match basis");
}

OperatorMatrix OperatorMatrix::zero(BasisPtr b, double lam) {
  const int s = b->size();
  return OperatorMatrix(b, lam, MatC::Zero(s, s));
}

OperatorMatrix OperatorMatrix::identity(BasisPtr b, double lam) {
  const int s = b->size();
  return OperatorMatrix(b, lam, MatC::Identity(s, s));
}

OperatorMatrix OperatorMatrix::adjoint() const {
  return OperatorMatrix(basis, lambda, entries.adjoint(), band);
}

MatC OperatorMatrix::interior_block(int extra_band) const {
  auto mask = basis->interior(band + extra_band);
  std::vector<int> keep;
  for (int i = 0; i < size(); ++i)
    if (mask[i]) keep.push_back(i);
  MatC out(keep.size(), keep.size());
  for (std::size_t r = 0; r < keep.size(); ++r)
    for (std::size_t c = 0; c < keep.size(); ++c) out(r, c) = entries(keep[r], keep[c]);
  return out;
}

static void check_compatible(const OperatorMatrix& a, const OperatorMatrix& b, const char* op) {
  if (a.basis->size() != b.basis->size() || a.basis->dim() != b.basis->dim())
    throw std::invalid_argument(std::string(op) + ": bases differ");
}

OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b) {
  check_compatible(a, b, "operator+");
  return OperatorMatrix(a.basis, a.lambda, a.entries + b.entries, std::max(a.band, b.band));
}

OperatorMatrix operator-(const OperatorMatrix& a, const OperatorMatrix& b) {
  check_compatible(a, b, "operator-");
  return OperatorMatrix(a.basis, a.lambda, a.entries - b.entries, std::max(a.band, b.band));
}

OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b) {
  check_compatible(a, b, "operator*");
  return OperatorMatrix(a.basis, a.lambda, a.entries * b.entries, a.band + b.band);
}

OperatorMatrix operator*(cplx c, const OperatorMatrix& a) {
  return OperatorMatrix(a.basis, a.lambda, c * a.entries, a.band);
}

OperatorMatrix commutator(const OperatorMatrix& a, const OperatorMatrix& b) { return a * b - b * a; }

double interior_max_diff(const OperatorMatrix& a, const OperatorMatrix& b, int extra_band) {
  check_compatible(a, b, "interior_max_diff");
  auto mask = a.basis->interior(std::max(a.band, b.band) + extra_band);
  double worst = 0.0;
  for (int r = 0; r < a.size(); ++r) {
    if (!mask[r]) continue;
    for (int c = 0; c < a.size(); ++c)
      if (mask[c]) worst = std::max(worst, std::abs(a.entries(r, c) - b.entries(r, c)));
  }
  return worst;
}

// ------------------------------------------------------------- evaluation

std::vector<double> hermite_functions(int kmax, double x) {
  std::vector<double> h(kmax + 1);
  h[0] = std::pow(kPi, -0.25) * std::exp(-0.5 * x * x);
  if (kmax >= 1) h[1] = std::sqrt(2.0) * x * h[0];
  for (int k = 1; k < kmax; ++k)
    h[k + 1] = std::sqrt(2.0 / (k + 1)) * x * h[k] - std::sqrt(static_cast<double>(k) / (k + 1)) * h[k - 1];
  return h;
}

double hermite_eval(const MultiIndex& mu, double lambda, const std::vector<double>& xi) {
  if (lambda == 0.0) throw std::invalid_argument("hermite_eval: lambda must be nonzero");
  if (mu.size() != xi.size()) throw std::invalid_argument("hermite_eval: dimension mismatch");
  const double a = std::abs(lambda);
  const double s = std::sqrt(a);
  double v = 1.0;
  for (std::size_t j = 0; j < mu.size(); ++j) {
    if (mu[j] < 0) throw std::invalid_argument("hermite_eval: negative index");
    if (mu[j] > 200) throw std::out_of_range("hermite_eval: degree beyond the stable range (200)");
    v *= std::pow(a, 0.25) * hermite_functions(mu[j], s * xi[j])[mu[j]];
  }
  return v;
}

GaussHermite gauss_hermite(int order) {
  if (order < 1) throw std::invalid_argument("gauss_hermite: order must be positive");
  MatR J = MatR::Zero(order, order);
  for (int k = 1; k < order; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(k / 2.0);
  Eigen::SelfAdjointEigenSolver<MatR> es(J);
  GaussHermite g;
  for (int i = 0; i < order; ++i) {
    double x = es.eigenvalues()(i);
    for (int it = 0; it < 3; ++it) {
      auto h = hermite_functions(order, x);
      const double hn = h[order];
      const double dh = std::sqrt(2.0 * order) * h[order - 1] - x * hn;
      if (dh == 0.0) break;
      x -= hn / dh;
    }
    auto h = hermite_functions(order - 1, x);
    double s = 0.0;
    for (double v : h) s += v * v;
    g.nodes.push_back(x);
    g.fweights.push_back(1.0 / s);
    g.weights.push_back(std::exp(-x * x) / s);
  }
  return g;
}

// ------------------------------------------------------------- operators

OperatorMatrix ladder_matrix(int j, double lambda, LadderKind kind, BasisPtr basis) {
  if (j < 0 || j >= basis->dim()) throw std::invalid_argument("ladder_matrix: coordinate out of range");
  if (lambda == 0.0) throw std::invalid_argument("ladder_matrix: lambda must be nonzero");
  const double a = std::abs(lambda);
  const int s = basis->size();
  MatC m = MatC::Zero(s, s);
  for (int c = 0; c < s; ++c) {
    MultiIndex mu = basis->index(c);
    if (kind == LadderKind::Annihilation) {
      if (mu[j] == 0) continue;
      const double v = std::sqrt(2.0 * mu[j] * a);
      mu[j] -= 1;
      m(basis->position(mu), c) = v;
    } else {
      const double v = std::sqrt((2.0 * mu[j] + 2.0) * a);
      mu[j] += 1;
      const int r = basis->position(mu);
      if (r >= 0) m(r, c) = v;
    }
  }
  return OperatorMatrix(basis, lambda, m, kind == LadderKind::Creation ? 1 : 0);
}

OperatorMatrix hermite_operator(double lambda, BasisPtr basis) {
  const int s = basis->size();
  MatC m = MatC::Zero(s, s);
  for (int i = 0; i < s; ++i) m(i, i) = (2.0 * basis->degree(i) + basis->dim()) * std::abs(lambda);
  return OperatorMatrix(basis, lambda, m);
}

std::vector<std::pair<int, OperatorMatrix>> spectral_projections(double lambda, BasisPtr basis) {
  std::vector<std::pair<int, OperatorMatrix>> out;
  const int s = basis->size();
  for (int k = 0; k <= basis->cutoff(); ++k) {
    MatC m = MatC::Zero(s, s);
    for (int i = 0; i < s; ++i)
      if (basis->degree(i) == k) m(i, i) = 1.0;
    out.emplace_back(k, OperatorMatrix(basis, lambda, m));
  }
  return out;
}

std::vector<int> dyadic_band(int N, double lambda, int dim_n, int K) {
  if (lambda == 0.0) throw std::invalid_argument("dyadic_band: lambda must be nonzero");
  const double lo = std::ldexp(1.0, N), hi = std::ldexp(1.0, N + 1);
  std::vector<int> ks;
  for (int k = 0; k <= K; ++k) {
    const double e = (2.0 * k + dim_n) * std::abs(lambda);
    if (e >= lo && e < hi) ks.push_back(k);
  }
  return ks;
}

OperatorMatrix dyadic_projection(int N, double lambda, BasisPtr basis) {
  auto ks = dyadic_band(N, lambda, basis->dim(), basis->cutoff());
  const int s = basis->size();
  MatC m = MatC::Zero(s, s);
  for (int i = 0; i < s; ++i)
    if (std::find(ks.begin(), ks.end(), basis->degree(i)) != ks.end()) m(i, i) = 1.0;
  return OperatorMatrix(basis, lambda, m);
}

OperatorMatrix xi_grad_matrix(double lambda, BasisPtr basis) {
  if (lambda == 0.0) throw std::invalid_argument("xi_grad_matrix: lambda must be nonzero");
  // xi_j d_j = (A_j^2 - A_j*^2)/(4|lambda|) - 1/2, whose matrix elements do not
  // depend on lambda.
  const int s = basis->size();
  MatC m = MatC::Zero(s, s);
  for (int c = 0; c < s; ++c) {
    const MultiIndex& mu = basis->index(c);
    m(c, c) += -0.5 * basis->dim();
    for (int j = 0; j < basis->dim(); ++j) {
      if (mu[j] >= 2) {
        MultiIndex nu = mu;
        nu[j] -= 2;
        m(basis->position(nu), c) += 0.5 * std::sqrt(static_cast<double>(mu[j]) * (mu[j] - 1));
      }
      MultiIndex nu = mu;
      nu[j] += 2;
      const int r = basis->position(nu);
      if (r >= 0) m(r, c) += -0.5 * std::sqrt((mu[j] + 1.0) * (mu[j] + 2.0));
    }
  }
  return OperatorMatrix(basis, lambda, m);
}

}  // namespace hh
