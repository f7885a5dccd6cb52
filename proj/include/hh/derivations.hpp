#pragma once
// Noncommutative derivations delta_j, delta-bar_j, the operator Theta and the
// multiplier hypothesis functional.

#include "hh/weyl_fourier.hpp"

namespace hh {

// delta_j m = |lambda|^{-1/2} [m, A_j],  delta-bar_j m = |lambda|^{-1/2} [A_j*, m].
// j is zero-based; the boundary band widens by 1.
OperatorMatrix delta(int j, const OperatorMatrix& m);
OperatorMatrix delta_bar(int j, const OperatorMatrix& m);

// delta^alpha then delta-bar^beta, coordinates in increasing order.
// Throws ResolutionError when the widened band leaves no interior.
OperatorMatrix delta_power(const MultiIndex& alpha, const MultiIndex& beta, const OperatorMatrix& m);

struct DerivationRequest {
  MultiIndex alpha, beta;
  int s = 0;
  int order() const { return total_degree(alpha) + total_degree(beta) + 2 * s; }
};

// Default bound on l = |alpha| + |beta| + 2s: 2 ceil((n + 3) / 2).
int max_derivation_order(int dim_n);

// Literal: m' - (1/2lambda)[m, xi.grad] + (1/(2 lambda sqrt(lambda))) sum (delta_j m A_j* + dbar_j m A_j).
// Calibrated: m' + (1/(4 lambda sqrt(lambda))) sum (delta_j m A_j* + dbar_j m A_j)
//           = m' + (n/2lambda) m + (1/4lambda^2) sum (A_j* m A_j - A_j m A_j*).
// m' is the entrywise lambda-derivative in the scaled basis.
enum class ThetaVariant { Literal, Calibrated };
std::string to_string(ThetaVariant v);

// Theta from a value and its entrywise derivative at lambda = m.lambda > 0.
OperatorMatrix theta_apply(const OperatorMatrix& m, const OperatorMatrix& dm, ThetaVariant v = ThetaVariant::Calibrated);

// Entrywise d/dlambda at grid point i: the analytic derivative when stored,
// else a four-point central difference in ln(lambda) (three-point next to an
// end). Throws at an end point or across lambda = 0.
OperatorMatrix family_derivative(const MultiplierFamily& M, std::size_t i);
std::size_t grid_index(const LambdaGrid& g, double lambda);

// Theta at a grid point. Unsupported for lambda < 0.
OperatorMatrix theta(const MultiplierFamily& M, std::size_t i, ThetaVariant v = ThetaVariant::Calibrated);
OperatorMatrix theta(const MultiplierFamily& M, double lambda, ThetaVariant v = ThetaVariant::Calibrated);

// Theta applied at every lambda > 0 point where it is defined; the result has
// no stored derivative.
MultiplierFamily theta_family(const MultiplierFamily& M, ThetaVariant v = ThetaVariant::Calibrated);

// ------------------------------------------------------------ verifications

struct ThetaIdentityReport {
  cplx c = 0.0;                 // least-squares constant in (itf)^ ~ c Theta f^
  double deviation = 0.0;       // ||(itf)^ - c Theta f^|| / ||(itf)^|| over interior lambda
  double deviation_unit = 0.0;  // same with c = 1
  double deviation_2pi = 0.0;   // same with c = (2 pi)^{n/2}
  bool inconclusive = false;
  std::vector<double> lambdas;        // interior lambdas used
  std::vector<cplx> local_c;          // per-lambda best constant
};

// (itf)^(lambda) against Theta(lambda) f^(lambda) on the positive points of
// `grid`, both transforms computed from the samples of f.
ThetaIdentityReport verify_theta_identity(const GridFunction& f, const LambdaGrid& grid, BasisPtr basis,
                                   ThetaVariant v = ThetaVariant::Calibrated);

// Multiplier family given by closed forms in lambda.
struct SmoothFamily {
  std::function<OperatorMatrix(double)> value;
  std::function<OperatorMatrix(double)> derivative;
};

struct LambdaDerivativeReport {
  double lhs_norm = 0.0;
  double residual_derived = 0.0;  // relative L^2 residual of the derived first-order formula
  double residual_literal = 0.0;  // same for the literal formula
};

// For g = f^lambda frozen at `lambda`, compares the central difference
// [T^{l+h}_{m(l+h)} g - T^{l-h}_{m(l-h)} g] / 2h with
//   derived: T_{Theta m} g - (i / (4 sqrt(l))) sum_j (T_{dbar_j m}(z_j g) - T_{delta_j m}(zbar_j g)),
//   literal: T_{Theta m} g + sum_j l^{-1/2} (T_{delta_j m}(z_j g) - l^{-1/2} T_{dbar_j m}(zbar_j g)).
// Theta is the calibrated form. n = 1, lambda > 0.
LambdaDerivativeReport verify_lambda_derivative(const SmoothFamily& m, const GridFunction& f, double lambda, double step,
                                  BasisPtr basis);

struct HypothesisValue {
  double value = 0.0;
  bool empty_band = false;  // chi_N vanished on every grid point used
};

// 2^{N(l-n-1)} int_{lambda>0} ||lambda^{-(|alpha|+|beta|)/2} delta^alpha dbar^beta Theta^s M chi_N||_HS^2 lambda^n d lambda
// by the grid weights, over the points where Theta^s is defined.
HypothesisValue hypothesis_functional(const MultiplierFamily& M, const DerivationRequest& req, int N,
                                      ThetaVariant v = ThetaVariant::Calibrated);

}  // namespace hh
