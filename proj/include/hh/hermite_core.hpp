#pragma once
// Scaled Hermite basis on R^n, ladder operators and spectral projections of
// the scaled Hermite operator H(lambda) = -Laplacian + lambda^2 |xi|^2.

#include "hh/common.hpp"

#include <map>
#include <memory>
#include <utility>

namespace hh {

// Multi-indices {mu : |mu| <= K} enumerated by total degree, then
// lexicographically within a degree.
class TruncatedBasis {
 public:
  TruncatedBasis(int dim_n, int cutoff_K);

  int dim() const { return n_; }
  int cutoff() const { return K_; }
  int size() const { return static_cast<int>(indices_.size()); }
  const MultiIndex& index(int i) const { return indices_[i]; }
  int degree(int i) const { return degrees_[i]; }
  // Position of mu, or -1 when mu lies outside the truncation.
  int position(const MultiIndex& mu) const;
  static std::string index_order() { return "graded-lex"; }

  // Mask of positions with degree <= K - band.
  std::vector<bool> interior(int band) const;

 private:
  int n_;
  int K_;
  std::vector<MultiIndex> indices_;
  std::vector<int> degrees_;
  std::map<MultiIndex, int> lookup_;
};

using BasisPtr = std::shared_ptr<const TruncatedBasis>;
BasisPtr make_basis(int dim_n, int cutoff_K);
// Default truncation: K = 16 for n = 1, K = 8 for n = 2, K = 6 otherwise.
int default_cutoff(int dim_n);

// Operator on L^2(R^n) written in the scaled basis Phi_mu^lambda.
// `band` counts the top degrees whose entries are affected by truncation.
struct OperatorMatrix {
  BasisPtr basis;
  double lambda = 1.0;
  MatC entries;
  int band = 0;

  OperatorMatrix() = default;
  OperatorMatrix(BasisPtr b, double lam, MatC m, int bnd = 0);
  static OperatorMatrix zero(BasisPtr b, double lam);
  static OperatorMatrix identity(BasisPtr b, double lam);

  int size() const { return static_cast<int>(entries.rows()); }
  OperatorMatrix adjoint() const;
  // Entries restricted to rows/columns of degree <= K - extra_band - band.
  MatC interior_block(int extra_band = 0) const;
};

OperatorMatrix operator+(const OperatorMatrix& a, const OperatorMatrix& b);
OperatorMatrix operator-(const OperatorMatrix& a, const OperatorMatrix& b);
OperatorMatrix operator*(const OperatorMatrix& a, const OperatorMatrix& b);
OperatorMatrix operator*(cplx c, const OperatorMatrix& a);
OperatorMatrix commutator(const OperatorMatrix& a, const OperatorMatrix& b);

// Largest entry modulus of the difference on the common interior block.
double interior_max_diff(const OperatorMatrix& a, const OperatorMatrix& b, int extra_band = 0);

// ---------------------------------------------------------------- evaluation

// Normalised one-dimensional Hermite functions h_0..h_kmax at x.
std::vector<double> hermite_functions(int kmax, double x);

// Phi_mu^lambda(xi) = |lambda|^{n/4} Phi_mu(|lambda|^{1/2} xi).
// Throws std::out_of_range if a coordinate degree exceeds 200.
double hermite_eval(const MultiIndex& mu, double lambda, const std::vector<double>& xi);

// Gauss-Hermite rule for weight exp(-x^2). `fweights` integrate functions of
// the form polynomial * exp(-x^2) directly: int g ~ sum fweights_i g(x_i).
struct GaussHermite {
  std::vector<double> nodes;
  std::vector<double> weights;
  std::vector<double> fweights;
};
GaussHermite gauss_hermite(int order);

// ------------------------------------------------------------------ operators

enum class LadderKind { Annihilation, Creation };

// A_j(lambda) = d/dxi_j + |lambda| xi_j and its adjoint A_j*(lambda):
//   A_j Phi_mu = sqrt(2 mu_j |lambda|) Phi_{mu-e_j},
//   A_j* Phi_mu = sqrt((2 mu_j + 2) |lambda|) Phi_{mu+e_j}.
// j is zero-based. Creation drops the top degree (band 1).
OperatorMatrix ladder_matrix(int j, double lambda, LadderKind kind, BasisPtr basis);

// Diagonal (2|mu| + n)|lambda|.
OperatorMatrix hermite_operator(double lambda, BasisPtr basis);

// P_k(lambda) for k = 0..K.
std::vector<std::pair<int, OperatorMatrix>> spectral_projections(double lambda, BasisPtr basis);

// Sum of P_k over 2^N <= (2k+n)|lambda| < 2^{N+1}.
OperatorMatrix dyadic_projection(int N, double lambda, BasisPtr basis);
// Degrees k selected by the dyadic band N.
std::vector<int> dyadic_band(int N, double lambda, int dim_n, int K);

// Matrix of sum_j xi_j d/dxi_j; couples mu only to mu and mu +- 2 e_j.
OperatorMatrix xi_grad_matrix(double lambda, BasisPtr basis);

}  // namespace hh
