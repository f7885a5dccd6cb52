#pragma once
// Laguerre functions, the heat approximate identity phi_r and psi_r, the
// operator Gamma_lambda^k, and kernel-moment experiments for T_M psi_r.

#include "hh/multiplier_algebra.hpp"

namespace hh {

// ------------------------------------------------------------------ Laguerre

// L_k^a(x) by the three-term recurrence.
double laguerre_eval(int k, double a, double x);
// L_0^a(x) .. L_kmax^a(x).
std::vector<double> laguerre_all(int kmax, double a, double x);

// phi_{k,lambda}^{n-1}(z) = L_k^{n-1}(|lambda||z|^2/2) exp(-|lambda||z|^2/4).
double laguerre_function(int k, double lambda, const std::vector<cplx>& z);
// Same as a function of s = |z|.
double laguerre_function_radial(int k, int n, double lambda, double s);

// ------------------------------------------------------------------ heat slices

// Tail control for sum_k exp(-rate (2k+n)|lambda|) |lambda|^n phi_{k,lambda}.
struct HeatProfile {
  double r = 1.0;
  int n = 1;
  double tail_tol = 1e-10;
  int k_budget = 200000;

  // Smallest k_max with dropped tail <= tail_tol * retained sum, using
  // |phi_{k,lambda}| <= C(k+n-1, k). Throws ResolutionError past k_budget.
  int k_max(double lambda, double rate) const;
};

struct HeatSlice {
  PlaneFunction values;
  OperatorMatrix weyl;  // diagonal exp(-2r(2k+n)|lambda|) on P_k
  int k_max = 0;
};

// phi_r^lambda(z) = (2 pi)^{-n} sum_k exp(-2r(2k+n)|lambda|) |lambda|^n phi_{k,lambda}(z)
// by the certified series.
HeatSlice heat_slice(double r, double lambda, BasisPtr basis, const ZGrid& grid, double tail_tol = 1e-10);
// Series value at s = |z|.
double heat_slice_series(double r, double lambda, int n, double s, double tail_tol = 1e-10);
// Mehler form (2 pi)^{-n} |lambda|^n (2 sinh(2r|lambda|))^{-n} exp(-|lambda| s^2 coth(2r|lambda|) / 4).
double heat_slice_closed(double r, double lambda, int n, double s);

struct HeatNormalization {
  double c = 0.0;          // least-squares W(phi_r^lambda) ~ c diag(exp(-2r(2k+n)|lambda|))
  double off_diagonal = 0.0;  // largest off-diagonal entry, interior block
  double residual = 0.0;      // max |W - c D| on the interior block
};
// Weyl transform of the sampled slice against the diagonal heat matrix.
HeatNormalization measure_heat_normalization(double r, double lambda, BasisPtr basis, const ZGrid& grid);

// ------------------------------------------------------------------ radial kernels

// F(z,t) = (2 pi)^{-1} int e^{-i lambda t} F^lambda(|z|) d lambda with
// F^lambda(s) = (2 pi)^{-n} |lambda|^n sum_k c(k, lambda) phi_{k,lambda}(s),
// where |c(k, lambda)| <= bound * exp(-rate (2k+n)|lambda|).
struct KernelSeries {
  int n = 1;
  double rate = 1.0;
  double bound = 1.0;
  std::function<cplx(int, double)> coef;
  // Optional closed form of (F^lambda(s), dF^lambda/ds); replaces the series.
  std::function<std::pair<double, double>(double lambda, double s)> closed;
};

// phi_r: c = exp(-2r(2k+n)|lambda|).  psi_r = phi_{r/2} - phi_r: c = b_{2r}((2k+n)|lambda|).
KernelSeries phi_series(double r, int n, bool use_closed_form = true);
KernelSeries psi_series(double r, int n, bool use_closed_form = true);
// T_M psi_r for the Hermite multiplier M(lambda) = a(H(lambda)), |a| <= bound.
KernelSeries multiplier_psi_series(const HermiteSymbol& M, double r, int n, double bound = 1.0);

// Gauss-Legendre panels over lambda > 0, fine enough for |t| <= t_max.
struct LambdaQuadrature {
  std::vector<double> nodes, weights;
};
LambdaQuadrature lambda_quadrature(double rate, int n, double t_max);

struct RadialSamples {
  std::vector<double> s, t;
  MatC F, Fs, Ft;  // rows t, columns s; derivatives when requested
};

// Evaluates the kernel at the given radii and times.
RadialSamples radial_kernel(const KernelSeries& ks, const std::vector<double>& s, const std::vector<double>& t,
                            bool derivatives = false, double tail_tol = 1e-13);

// Samples of the kernel on a product grid.
GridFunction sample_kernel(const KernelSeries& ks, const ZGrid& zg, const TGrid& tg);

GridFunction approximate_identity(double r, const ZGrid& zg, const TGrid& tg);
GridFunction psi(double r, const ZGrid& zg, const TGrid& tg);

// ------------------------------------------------------------------ b_r and Gamma

// l-th derivative of b_r(x) = exp(-r x / 2) - exp(-r x).
double b_function(double r, double x, int l = 0);

// Gamma^k a = d_lambda a(k) - (k/2lambda)(a(k) - a(k-1)) - ((k+n)/2lambda)(a(k+1) - a(k)),
// lambda > 0, combined in long double. d_lambda from d_sym when given, else
// a central difference with step 1e-4 lambda.
cplx gamma_operator(const HermiteSymbol& sym, int k, double lambda, int n,
                    const std::function<cplx(int, double)>& d_sym = nullptr);

// The symbol (Gamma a)(k, lambda), for iteration.
HermiteSymbol gamma_symbol(const HermiteSymbol& sym, int n, const std::function<cplx(int, double)>& d_sym = nullptr);

struct LaguerreDerivativeReport {
  double residual = 0.0;   // max_z |FD - series| / max_z |series|
  double scale = 0.0;      // max_z |series|
  int k_max = 0;
};

// Central difference d/dlambda of sum_k b((2k+n)lambda) lambda^n phi_{k,lambda}(z)
// against sum_k [(2k+n) b' - (k/2lambda) D_- b - ((k+n)/2lambda) D_+ b] lambda^n phi_{k,lambda}(z)
// at the radii of `grid`; b decays so that |b(x)| <= exp(-rate x). lambda > 0.
LaguerreDerivativeReport verify_laguerre_derivative(const std::function<double(double)>& b,
                                       const std::function<double(double)>& db, double rate, double lambda,
                                       const ZGrid& grid, double step);

// ------------------------------------------------------------------ moments

enum class MomentField { None, T, X, Y };
std::string to_string(MomentField f);
MomentField parse_moment_field(const std::string& s);

struct MomentOptions {
  double s_extent = 14.0;   // radial box in units of sqrt(r)
  double t_extent = 16.0;   // time box in units of r
  int s_panels = 14;
  int t_panels = 16;
  double r_min = 0x1p-12;   // admissible r for the scaled quadrature
  double r_max = 0x1p+4;
};

// int |T_M psi_r|^2 rho^l dz dt, rho = |z|^4 + t^2, for M = a(H(lambda)).
// Throws ResolutionError naming the admissible r-range.
double kernel_moment(const HermiteSymbol& M, double r, double l, int n, const MomentOptions& opt = {});
// Same with the vector field applied (X, Y: any coordinate, by symmetry). Requires 0 < r < 1.
double gradient_kernel_moment(const HermiteSymbol& M, double r, double l, int n, MomentField field,
                              const MomentOptions& opt = {});
// (2 pi)^{-1-n} int |lambda|^n sum_k C(k+n-1,k) |a b_{2r}|^2 d lambda.
double kernel_moment_plancherel(const HermiteSymbol& M, double r, int n);

HermiteSymbol identity_symbol();
HermiteSymbol zero_symbol();

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<double> r, moment;
};
// Least squares of log moment against log r, dropping the two extreme points
// when at least 5 are given.
SlopeFit fit_loglog_slope(const std::vector<double>& r, const std::vector<double>& moment, bool drop_extremes = true);

// ------------------------------------------------------------------ envelope

struct EnvelopeRow {
  int N = 0;
  double opnorm = 0.0;      // max over lambda of ||chi_N delta^a dbar^b W(d^l psi_r)||_op
  double scaled = 0.0;      // opnorm * 2^{N (l + (|a|+|b|)/2)}
  double ratio = 0.0;       // opnorm(N) / opnorm(N-1), 0 for the first row
  int lambdas_used = 0;
};
struct EnvelopeReport {
  std::vector<EnvelopeRow> rows;
  double envelope_fit = 0.0;  // max ratio / 2^{-(l + (|a|+|b|)/2)} over rows with r 2^N >= 4
  bool pass = false;          // envelope_fit <= 1.5 and at least one ratio tested
};
// W(d^l psi_r^lambda) = diag((Gamma^l b_{2r})(k, lambda)). delta includes the
// |lambda|^{-1/2} scaling. lambdas whose band leaves the interior are skipped.
EnvelopeReport band_kernel_envelope(const MultiIndex& alpha, const MultiIndex& beta, int l, int N_min, int N_max,
                                  double r, const LambdaGrid& grid, BasisPtr basis);

// ------------------------------------------------------------------ approximate identity

// int phi_r by the scaled radial quadrature.
double approximate_identity_integral(double r, int n);
// Max relative deviation over `points` random samples of the two scaling laws.
std::pair<double, double> scaling_deviation(double r, int n, int points, std::uint64_t seed);
// ||phi_r * phi_s - phi_s * phi_r|| / ||phi_r * phi_s|| on the given grid.
double commutator_defect(double r, double s, const ZGrid& zg, const TGrid& tg);
double symmetry_defect(double r, const ZGrid& zg, const TGrid& tg);
double telescoping_defect(int N, const ZGrid& zg, const TGrid& tg);
// int |phi_r| (1 + rho/r)^eta.
double weighted_l1(double r, int n, double eta);
// int |phi_r((z,t)(z0,t0)^{-1}) - phi_r(z,t)| / (rho(z0,t0)/r)^eta, n = 1, by the lattice rule.
double translation_ratio(double r, const HPoint& p0, double eta, int nodes = 41);

}  // namespace hh
