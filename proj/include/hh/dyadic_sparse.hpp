#pragma once
// Dyadic cube systems on a bounded grid region, sparse families, sparse and
// maximal operators, A_p characteristics, the truncated operators T^N and the
// fitted-constant experiments built on them.

#include "hh/heat_laguerre.hpp"

#include <compare>
#include <cstdint>

namespace hh {

// ------------------------------------------------------------------ cubes

struct Cube {
  int level = 0;
  std::size_t center = 0;           // grid index of the center
  std::vector<std::size_t> points;  // grid indices, ascending
  int parent = -1;                  // index in the next coarser level, -1 at j_min
  std::vector<int> children;        // indices in the next finer level
  double measure = 0.0;
};

struct CubeRef {
  int level = 0;
  int index = 0;
  auto operator<=>(const CubeRef&) const = default;
};

// Cells are sets of grid points of the product grid; level j has scale eta^j.
struct CubeSystem {
  ZGrid zgrid;
  TGrid tgrid;
  double eta = 0.5;
  int j_min = 0, j_max = 0;
  double separation = 4.5;       // net separation in units of eta^j
  double a = 0.0;                // max over cells of max_{p in Q} d(p, center) / eta^j
  double b = 0.0;                // min over cells of (inner radius) / eta^j
  double coverage_defect = 0.0;  // largest uncovered grid-mass fraction over levels
  std::vector<std::vector<Cube>> levels;  // levels[j - j_min]
  std::vector<std::vector<int>> label;    // label[j - j_min][grid index] = cube index

  int level_count() const { return j_max - j_min + 1; }
  const Cube& cube(int j, int idx) const { return levels[j - j_min][idx]; }
  const Cube& cube(CubeRef r) const { return cube(r.level, r.index); }
  std::size_t point_count() const { return zgrid.count() * tgrid.nt; }
  double cell_measure() const { return zgrid.cell() * tgrid.spacing(); }
  double scale(int j) const { return std::pow(eta, j); }
  HPoint point(std::size_t p) const;
  // d(p, q) = rho(q^{-1} p)^{1/4}.
  double distance(std::size_t p, std::size_t q) const;
  // Grid points of gamma Q = B(center, a gamma eta^j).
  std::vector<std::size_t> dilate(CubeRef q, double gamma) const;
  bool in_dilate(CubeRef q, double gamma, std::size_t p) const;
  // Q and all cubes below it, coarse to fine.
  std::vector<CubeRef> descendants(CubeRef q) const;

  std::vector<double> coords;  // per point: x_1..x_n, y_1..y_n, t
};

// Greedy maximal (separation eta^j)-nets in the quasi-metric: the finest net
// over grid points, each coarser net over the centers below it. Points go to
// the nearest finest center, cells to the nearest coarser center; ties to the
// lower index. Throws ResolutionError when the finest net separation spans
// fewer than two z nodes or two t nodes (in t-units of separation^2).
CubeSystem build_cube_system(const ZGrid& zg, const TGrid& tg, int j_min, int j_max, double eta,
                             double separation = 4.5);

struct CubeSystemReport {
  bool covering = false;   // every grid point labelled on every level
  bool nesting = false;    // finer cells lie inside exactly one coarser cell
  bool parents = false;    // parent links agree with the labels
  bool inner_ball = false; // B(center, eta^j) contained in the cell on the grid
  double a = 0.0, b = 0.0, coverage_defect = 0.0;
  std::vector<int> cubes_per_level;
  bool pass = false;       // all of the above, a <= 8, coverage defect <= 0.5%
};
// Exhaustive check of the four cube properties.
CubeSystemReport verify_cube_system(const CubeSystem& sys);

// ------------------------------------------------------------------ functions

// Smooth bump sum supported in the inner half of the grid box, real valued.
GridFunction smooth_test_function(const ZGrid& zg, const TGrid& tg, std::uint64_t seed, int bumps = 3);

// sup over cubes containing x of (avg_Q |f|^order)^{1/order}. Single grid
// points and the whole region count as cubes. Real values in the samples.
GridFunction maximal_function(const CubeSystem& sys, const GridFunction& f, int order);

struct Weight {
  ZGrid zgrid;
  TGrid tgrid;
  VecR values;  // > 0
};
// Cell averages of rho^eps (a 4^{2n+1} midpoint rule per cell), positive at the origin.
Weight power_weight(const ZGrid& zg, const TGrid& tg, double eps);
Weight constant_weight(const ZGrid& zg, const TGrid& tg, double c);

// sup over all cubes and the whole region of (avg w)(avg w^{-1/(p-1)})^{p-1}.
// p <= 1 is Unsupported.
double ap_characteristic(const CubeSystem& sys, const Weight& w, double p);

// (int |f|^p w)^{1/p}.
double weighted_lp_norm(const GridFunction& f, const Weight& w, double p);

// ------------------------------------------------------------------ sparse families

struct SparseCube {
  CubeRef cube;
  int generation = 0;
  int parent = -1;             // index into SparseFamily::cubes
  double local_average = 0.0; // (avg_{3Q} |f|^2)^{1/2}
};

struct SparseFamily {
  std::vector<SparseCube> cubes;
  std::vector<std::vector<int>> generations;  // indices into cubes
  double alpha = 0.0;            // largest threshold factor used
  int alpha_raises = 0;          // selections where alpha was raised to keep |E| <= |Q|/2^{2n+4}
  bool truncated = false;        // depth cap reached
  double uncovered_exceptional = 0.0;  // grid mass of exceptional sets left outside the selections
};

// Maximal function on the points of Q for the exceptional set; receives f chi_{3Q}.
using LocalMaximal = std::function<std::vector<double>(const CubeSystem&, CubeRef, const GridFunction&)>;

struct SparseRule {
  double alpha = 4.0;
  int depth_cap = 12;
  LocalMaximal maximal;  // null: the |f| condition only
};

// Recursive selection from Q0: E = {|f| > alpha A} u {maximal > alpha A} in Q,
// A = (avg_{3Q} |f|^2)^{1/2}, then the maximal subcubes with |Q' n E| > |Q'| / 2^{2n+3}.
SparseFamily build_sparse_family(const CubeSystem& sys, const GridFunction& f, CubeRef q0, const SparseRule& rule);

struct SparseFamilyReport {
  bool disjoint = false;           // per generation
  bool nested = false;             // Omega_{k+1} inside Omega_k
  double half_measure_max = 0.0;   // max |Omega_{k+1} n Q| / |Q|
  double first_generation_ratio = 0.0;  // sum |Q_j^1| / |Q0|
  bool pass = false;               // disjoint, nested, half_measure_max <= 1/2
};
SparseFamilyReport verify_sparse_family(const CubeSystem& sys, const SparseFamily& fam);

// A_{r,S} f = sum_Q (avg_Q |f|^r)^{1/r} chi_Q.
GridFunction sparse_operator(const CubeSystem& sys, const SparseFamily& fam, int r, const GridFunction& f);
// sum_Q (avg_{3Q} |f|^2)^{1/2} chi_Q with the recorded local averages.
GridFunction sparse_bound(const CubeSystem& sys, const SparseFamily& fam);

// ------------------------------------------------------------------ truncated operators

// Resolution rule for T^N: h_z <= 2 sqrt(r) and h_t <= r with r = 2^{-N-1}.
void check_truncation_resolution(int N, const ZGrid& zg, const TGrid& tg);

struct TruncatedKernel {
  int N = 0;
  GridFunction kernel;  // K^N = sum_{j=1}^N T_M psi_{2^{-j}}
  MatC slices;          // t_transform(kernel) transposed: rows lambda_j, columns z nodes
};

TruncatedKernel make_truncated_kernel(const GridFunction& kernel, int N);
TruncatedKernel truncated_kernel(const HermiteSymbol& M, int N, const ZGrid& zg, const TGrid& tg);

// T^N f = K^N * f.
GridFunction truncated_operator(const TruncatedKernel& K, const GridFunction& f);
GridFunction truncated_operator(const HermiteSymbol& M, int N, const GridFunction& f);

// (K * (f chi_src)) at the listed grid points.
VecC apply_restricted(const TruncatedKernel& K, const GridFunction& f, const std::vector<char>& src,
                      const std::vector<std::size_t>& dst);

struct GrandMaximal {
  GridFunction star;     // T^{N*} f = sup_{Q containing x} |T^N(f chi_{H \ 3Q})(x)|
  GridFunction maximal;  // M_{T^N} f = sup_{Q containing x} max_{Q} |T^N(f chi_{H \ 3Q})|
};
GrandMaximal grand_maximal(const TruncatedKernel& K, const CubeSystem& sys, const GridFunction& f);

// On the points of q0: sup over Q in D(q0) containing x of max_Q |T^N(f chi_{3q0 \ 3Q})|.
std::vector<double> local_grand_maximal(const TruncatedKernel& K, const CubeSystem& sys, CubeRef q0,
                                        const GridFunction& f);
SparseRule truncated_rule(const TruncatedKernel& K, double alpha = 4.0);

// Kernel split by the cutoff: K1 = K phi(rho), K2 = K (1 - phi(rho)) with phi = 1
// on rho < 1/2, 0 on rho >= 1 and a quintic smoothstep between.
double cutoff_profile(double rho_value);
std::pair<TruncatedKernel, TruncatedKernel> split_kernel(const TruncatedKernel& K);

// ------------------------------------------------------------------ experiments

struct FittedConstant {
  std::vector<int> N;
  std::vector<double> C;
  double spread = 0.0;  // max C / min C
  bool pass = false;    // spread <= 2
};
FittedConstant fitted_constant(const std::vector<int>& N, const std::vector<double>& C);

struct PointwiseBoundReport {
  FittedConstant star;     // T^{N*} f <= C (Lambda(T^N f) + Lambda_2 f + Lambda(Lambda_2 f))
  FittedConstant maximal;  // M_{T^N} f <= C (Lambda_2 f + T^{N*} f)
};
PointwiseBoundReport pointwise_bound_experiment(const HermiteSymbol& M, const CubeSystem& sys, const GridFunction& f,
                                                const std::vector<int>& Ns);

struct WeakTypeReport {
  FittedConstant constant;  // sup_level level^2 |{T^{N*} f > level}| / ||f||_2^2
  std::vector<std::vector<std::pair<double, double>>> sweeps;  // per N: (level, measure)
};
WeakTypeReport weak_type_experiment(const HermiteSymbol& M, const CubeSystem& sys, const GridFunction& f,
                                    const std::vector<int>& Ns, int levels = 12);

struct OscillationReport {
  FittedConstant near;  // |T_1^N f_2(x) - T_1^N f_2(x_Q)| <= C Lambda_2 f(x_Q)
  FittedConstant far;   // |T_2^N f_2(x)| <= C Lambda_2 f(x)
  int cubes_sampled = 0;
};
// Sampled on the cubes of level `level` whose complement of 3Q meets supp f.
OscillationReport oscillation_experiment(const HermiteSymbol& M, const CubeSystem& sys, const GridFunction& f,
                                         const std::vector<int>& Ns, int level);

struct SparseDominationReport {
  double C = 0.0;                  // fitted on the first function
  std::vector<double> held_out;    // max ratio per held-out function
  double worst = 0.0;              // max held_out / C
  std::vector<int> family_sizes;
  bool pass = false;               // worst <= 2
};
// |T^N(f chi_{3Q0})| <= C sum_{Q in F} (avg_{3Q} |f|^2)^{1/2} chi_Q on the points of Q0.
SparseDominationReport sparse_domination_experiment(const TruncatedKernel& K, const CubeSystem& sys, CubeRef q0,
                                                    const std::vector<GridFunction>& fs, double alpha = 4.0);

struct WeightedRow {
  double eps = 0.0;
  double characteristic = 0.0;  // [w]_{A_{p/2}}
  double ratio = 0.0;           // max over f of ||T^N f||_{L^p(w)} / ||f||_{L^p(w)}
};
struct WeightedNormReport {
  double p = 4.0;
  double exponent_literal = 1.0;  // max{1, 1/(p-2)}
  double exponent_half = 0.5;     // max{1/2, 1/(p-2)}
  std::vector<WeightedRow> rows;
  double c_literal = 0.0;         // max ratio / [w]^exponent_literal
  double c_half = 0.0;
  bool finite = false;
};
// Weights rho^eps; p > 2 required.
WeightedNormReport weighted_norm_experiment(const TruncatedKernel& K, const CubeSystem& sys,
                                            const std::vector<double>& eps, double p,
                                            const std::vector<GridFunction>& fs);

}  // namespace hh
