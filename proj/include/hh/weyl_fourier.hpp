#pragma once
// Schroedinger representation, special Hermite functions, Weyl transform,
// group Fourier transform and Fourier multipliers on H^n.

#include "hh/heisenberg_geometry.hpp"
#include "hh/hermite_core.hpp"

#include <optional>
#include <string>

namespace hh {

// ------------------------------------------------------------------ lambda grids

struct LambdaGrid {
  std::vector<double> points;   // ascending, nonzero
  std::vector<double> weights;  // quadrature weights for int d(lambda)
  std::size_t size() const { return points.size(); }
};

// Signed geometric grid +-{lmin * ratio^k <= lmax}; trapezoid weights in
// u = ln|lambda| (w = |lambda| du, halved at both ends of each half-line).
LambdaGrid make_log_grid(double lmin, double lmax, double ratio, bool both_signs = true);
// Parses "min,max,ratio".
LambdaGrid parse_lambda_grid(const std::string& spec, bool both_signs = true);

// ------------------------------------------------------------------ families

struct MultiplierFamily {
  BasisPtr basis;
  LambdaGrid grid;
  std::vector<OperatorMatrix> matrices;
  std::vector<OperatorMatrix> d_lambda;  // empty when no analytic derivative
  bool diagonal = false;

  static MultiplierFamily build(BasisPtr b, const LambdaGrid& g,
                                const std::function<OperatorMatrix(double)>& value,
                                const std::function<OperatorMatrix(double)>& derivative = nullptr,
                                bool diagonal = false);
  bool has_derivative() const { return !d_lambda.empty(); }
  double sup_norm() const;  // max over the grid of the operator norm

  // JSON manifest plus one CSV matrix per lambda in `dir`.
  void save(const std::string& dir) const;
  static MultiplierFamily load(const std::string& dir);
};

// ------------------------------------------------------------- representation

// Matrix of pi_lambda(z) at t = 0 in the scaled basis: entry (nu, mu) is
// <pi_lambda(z) Phi_mu, Phi_nu>. Exact within the truncation.
OperatorMatrix rep_matrix(double lambda, const std::vector<cplx>& z, BasisPtr basis);
MatC rep_entries(double lambda, const std::vector<cplx>& z, const TruncatedBasis& basis);

// (2 pi)^{-n/2} <pi_lambda(z) Phi_alpha, Phi_beta>.
cplx special_hermite(const MultiIndex& alpha, const MultiIndex& beta, double lambda, const std::vector<cplx>& z);

// W_lambda(g) = int g(z) pi_lambda(z) dz by the lattice rule of g's grid.
OperatorMatrix weyl_transform(const PlaneFunction& g, double lambda, BasisPtr basis, Diagnostics* diag = nullptr);

// g(z) = (2 pi)^{-n} |lambda|^n tr(pi_lambda(z)^* m), the special Hermite
// expansion whose Weyl transform is m. Refuses content in m's boundary band.
PlaneFunction inverse_weyl(const OperatorMatrix& m, const ZGrid& grid, double tol = 1e-8);

// Coefficient of Phi_{a,b}^lambda in inverse_weyl(m):
// (2 pi)^{-n/2} |lambda|^n (-1)^{|a|+|b|} m(a, b).
cplx weyl_dictionary_coefficient(const OperatorMatrix& m, int row_a, int col_b);

// f^lambda(z) = int f(z,t) e^{i lambda t} dt on the t-grid.
PlaneFunction lambda_slice(const GridFunction& f, double lambda);

// f-hat(lambda) = W_lambda(f^lambda) over the grid.
MultiplierFamily group_fourier(const GridFunction& f, const LambdaGrid& grid, BasisPtr basis,
                               Diagnostics* diag = nullptr);

// Fraction of the discrete t-spectrum energy in the top 10% of frequencies.
double nyquist_fraction(const GridFunction& f);

PlaneFunction apply_weyl_multiplier(const OperatorMatrix& m, const PlaneFunction& h);

// T_M f(z,t) = (2 pi)^{-1} int e^{-i lambda t} T^lambda_{M(lambda)} f^lambda(z) d lambda.
// Warns when the lambda grid reaches past the t-grid Nyquist frequency, where
// slices alias onto each other.
GridFunction apply_fourier_multiplier(const MultiplierFamily& M, const GridFunction& f, Diagnostics* diag = nullptr);

// ||g||^2 against |lambda|^n ||W g||_HS^2: returns the ratio ||g||^2 / (|lambda|^n ||W g||^2).
double weyl_plancherel_ratio(const PlaneFunction& g, double lambda, BasisPtr basis);

// ------------------------------------------------------------ test functions

// h(z) = sum c_{pq} z^p conj(z)^q exp(-a |z|^2), n = 1, with closed-form
// derivatives; band-limited in the scaled special Hermite basis when a = |lambda|/4.
struct PolyGaussian {
  std::vector<std::pair<int, int>> powers;
  std::vector<cplx> coeffs;
  double a = 0.25;

  cplx operator()(cplx z) const;
  cplx d_z(cplx z) const;
  cplx d_zbar(cplx z) const;
  PlaneFunction sample(const ZGrid& g) const;
};

// Random PolyGaussian of total degree <= degree drawn from `seed`.
PolyGaussian random_poly_gaussian(std::uint64_t seed, int degree, double a);

// Weyl intertwining identities at one lambda for one test function. Residuals are
// max entry differences on the interior block, relative to max|W(h)|.
struct IntertwiningReport {
  double lambda = 0.0;
  // literal: W(Z h) = i W(h) A*, W(Zbar h) = i W(h) A,
  //          lambda W(z h) = 2i [W(h), A], lambda W(zbar h) = 2i [A*, W(h)]
  double literal_Z = 0, literal_Zbar = 0, literal_z = 0, literal_zbar = 0;
  // derived: W(Z h) = -(i/2) A* W(h), W(Zbar h) = -(i/2) A W(h),
  //          lambda W(z h) = i [W(h), A], lambda W(zbar h) = i [A*, W(h)]
  double derived_Z = 0, derived_Zbar = 0, derived_z = 0, derived_zbar = 0;
};
IntertwiningReport intertwining_residuals(const PolyGaussian& h, double lambda, BasisPtr basis, const ZGrid& grid);

// Dense-class wave packet (n = 1):
//   f^lambda(z) = B(lambda) |lambda| sum_i c_i Phi^lambda_{a_i, b_i}(z),
//   B(lambda) = exp(-(lambda - lambda0)^2 / (2 sigma^2)),
//   f(z,t) = (2 pi)^{-1} int e^{-i lambda t} f^lambda(z) d lambda.
struct WavePacket {
  double lambda0 = 1.0;
  double sigma = 0.15;
  std::vector<int> a, b;
  std::vector<cplx> c;

  double envelope(double lambda) const;
  double d_envelope(double lambda) const;
  // Exact f-hat(lambda) and its lambda-derivative.
  OperatorMatrix hat(double lambda, BasisPtr basis) const;
  OperatorMatrix d_hat(double lambda, BasisPtr basis) const;
  cplx slice(double lambda, cplx z) const;
  // Samples f(z,t) by a uniform lambda rule on lambda0 +- 8 sigma.
  GridFunction sample(const ZGrid& zg, const TGrid& tg, int lambda_nodes = 321) const;
};

// Seeded packet with `terms` random (a, b) pairs of degree <= max_degree.
WavePacket random_wave_packet(std::uint64_t seed, int terms, int max_degree, double lambda0, double sigma);

}  // namespace hh
