#pragma once
// Finite doubling spaces: graph Laplacians, heat kernels with Gaussian-bound
// fits, functional calculus F(L), Sobolev norms of cut-off symbols, the
// maximal operator M_{F(L)} and weighted spectral-multiplier experiments.

#include "hh/common.hpp"

#include <cstdint>
#include <optional>

namespace hh {

// ------------------------------------------------------------------ spaces

enum class SpaceKind { Path, Grid2d, Tree };
std::string to_string(SpaceKind k);
SpaceKind parse_space_kind(const std::string& s);

struct DoublingReport {
  double dimension = 0.0;         // slope of log mu(B(x,r)) against log(r + 1/2), interior centers
  double volume_exponent = 0.0;   // least D with mu(B(x,r)) <= (1 + d(x,y)/r)^D mu(B(y,r))
  double doubling_constant = 0.0; // max mu(B(x,2r)) / mu(B(x,r))
  bool monotone = false;          // mu(B(x,r)) nondecreasing in r for every x
};

// Path and grid: counting measure, combinatorial Laplacian D - A. Tree:
// complete binary tree, degree measure, L = I - D^{-1} A (self-adjoint in
// L^2(mu)). All three annihilate constants.
struct DiscreteSpace {
  SpaceKind kind = SpaceKind::Path;
  int size = 0;
  MatR distance;   // shortest-path metric
  VecR measure;
  MatR laplacian;  // acts on functions: (L f)(x) = sum_y laplacian(x, y) f(y)
  VecR eigenvalues;
  MatR eigenvectors;  // mu-orthonormal: V^T diag(mu) V = I
  DoublingReport doubling;
  MatR ball_table;  // (x, k): mu(B(x, k)) for integer k up to the diameter

  double ball_measure(int x, double r) const;
};

// size: nodes for Path, side length for Grid2d, depth for Tree. At most 4096 nodes.
DiscreteSpace build_space(SpaceKind kind, int size);

// ------------------------------------------------------------------ functional calculus

struct SymbolFunction {
  std::function<double(double)> F;
  std::optional<double> constant;  // exact c I for constant symbols

  static SymbolFunction from(std::function<double(double)> f);
  static SymbolFunction constant_value(double c);
  double operator()(double x) const { return constant ? *constant : F(x); }
};

// F(L) as a matrix acting on functions.
MatR spectral_multiplier(const DiscreteSpace& X, const SymbolFunction& F);
// F(L^{1/m}).
MatR spectral_multiplier_root(const DiscreteSpace& X, const SymbolFunction& F, double m);
// Kernel with respect to mu: (F(L) f)(x) = sum_y K(x, y) f(y) mu(y).
MatR multiplier_kernel(const DiscreteSpace& X, const MatR& op);

// p_t(x, y), the kernel of e^{-tL} with respect to mu.
MatR heat_kernel(const DiscreteSpace& X, double t);

struct GaussianFit {
  double C = 0.0, c = 0.0, m = 0.0;  // log least-squares fit of the bound's profile
  double residual = 0.0;             // RMS relative error of that fit on the bulk pairs
  double envelope_C = 0.0;           // smallest C making the bound hold on all significant pairs
  int pairs = 0;                     // (t, x, y) samples used for the envelope
  bool holds = false;
};
// |p_t(x,y)| <= C / mu(B(x, t^{1/m})) exp(-d^{m/(m-1)} / (c t^{1/(m-1)})).
// Bulk pairs: p_t(x,y) >= 1e-2 p_t(x,x); significant pairs: p_t(x,y) >= 1e-12 max p_t.
GaussianFit fit_gaussian_bound(const DiscreteSpace& X, const std::vector<double>& ts);

// ------------------------------------------------------------------ Sobolev norms

// phi(x) = theta(x) - theta(2x), theta = 1 on [0, 1/2], 0 on [1, inf), quintic
// smoothstep between: supported in [1/4, 1], sum_l phi(2^{-l} x) = 1 for x > 0.
double dyadic_cutoff(double x);
double partition_theta(double x);

struct SobolevOptions {
  double support_lo = 0.25, support_hi = 1.0;  // support of eta
  double box = 32.0;                           // period; wide enough that fractional powers do not wrap
  int points = 65536;
};

// ||(1 - d^2/dx^2)^{s/2} (eta delta_t F)||_{L^q} by the FFT on a periodic grid;
// q = infinity for the sup norm. Warns when the top quarter of the frequency
// range carries more than 1e-10 of the energy (oscillation past the Nyquist
// limit aliases and is not detected).
double sobolev_norm(const SymbolFunction& F, double t, double s, double q,
                    const std::function<double(double)>& eta = dyadic_cutoff, const SobolevOptions& opt = {},
                    Diagnostics* diag = nullptr);
// sup over the given t of the above.
double sobolev_sup(const SymbolFunction& F, const std::vector<double>& ts, double s, double q,
                   const std::function<double(double)>& eta = dyadic_cutoff);

// ------------------------------------------------------------------ balls and maximal operators

struct Ball {
  int center = 0;
  double radius = 0.0;
  std::vector<int> points;
};
// B(x, r) for every x and r in {0, 1, 2, 4, ...} up to the diameter.
std::vector<Ball> ball_system(const DiscreteSpace& X);

// Hardy-Littlewood maximal function over the ball system, mu-averages of |g|.
VecR hardy_littlewood(const DiscreteSpace& X, const std::vector<Ball>& balls, const VecR& g);

// M_{F(L)} f(x) = sup_{Q containing x} max_{xi in Q} |F(L)(f chi_{X \ 3Q})(xi)|.
VecR maximal_mfl(const DiscreteSpace& X, const std::vector<Ball>& balls, const MatR& op, const VecR& f);

struct MaximalBoundReport {
  std::vector<double> C;     // per f: max of M_{F(L)} f / ((M|f|^2)^{1/2} + (M|F(L)f|^2)^{1/2})
  double fitted = 0.0;       // max over f
  double spread = 0.0;       // max C / min C over f
  bool pass = false;         // spread <= 2
  // Split F(L) = F(L)(1 - e^{-r^m L})^N + F(L)(I - (I - e^{-r^m L})^N), r the ball radius:
  double split_defect = 0.0;     // max |regular + remainder - full| / max |full|
  double regular_C = 0.0;        // max regular part / (M|f|^2)^{1/2}
  double remainder_C = 0.0;      // max remainder part / (M|F(L)f|^2)^{1/2}
  double m = 2.0;
  int N = 1;
};
// N is the least integer above s / m.
MaximalBoundReport maximal_bound_experiment(const DiscreteSpace& X, const SymbolFunction& F,
                                            const std::vector<VecR>& fs, double m, double s);

// Gaussian-envelope wave packet on X: A exp(-d(x, c)^2 / 2 sigma^2) cos(omega d(x, c) + phase).
VecR graph_wave_packet(const DiscreteSpace& X, std::uint64_t seed);

// ------------------------------------------------------------------ weights

double graph_ap_characteristic(const DiscreteSpace& X, const std::vector<Ball>& balls, const VecR& w, double p);
// mu(x)-weighted (sum |f|^p w mu)^{1/p}.
double graph_weighted_norm(const DiscreteSpace& X, const VecR& f, const VecR& w, double p);
// Vertex degree^eps.
VecR degree_weight(const DiscreteSpace& X, double eps);

struct SpectralRow {
  double eps = 0.0;
  double characteristic = 0.0;  // [w]_{A_{p/2}}
  double ratio = 0.0;           // max over f
};
struct SpectralWeightedReport {
  double p = 4.0;
  double symbol_norm = 0.0;     // sup_t ||eta delta_t F||_{W_s^infty} + |F(0)|
  double exponent = 1.0;        // max{1, 1/(p-2)}
  std::vector<SpectralRow> rows;
  double envelope = 0.0;        // max ratio / ([w]^exponent symbol_norm)
};
// p > 2.
SpectralWeightedReport weighted_spectral_experiment(const DiscreteSpace& X, const SymbolFunction& F,
                                                    const std::vector<double>& eps, double p, double s,
                                                    const std::vector<VecR>& fs);

// int |K_{F(L^{1/m})}(x, y)|^2 dmu(x) against C / mu(B(y, 1/R)) ||delta_R F||_{L^q}^2 for F
// supported on [0, R]: the smallest such C over y.
double restriction_constant(const DiscreteSpace& X, const SymbolFunction& F, double R, double m, double q);

}  // namespace hh
