#pragma once
// Group law, homogeneous norm, product grids and group convolution on H^n.

#include "hh/common.hpp"

#include <cstdint>
#include <string>

namespace hh {

struct HPoint {
  std::vector<cplx> z;
  double t = 0.0;
};

// (z,t)(w,s) = (z+w, t+s+1/2 Im z.conj(w)).
HPoint group_mul(const HPoint& p, const HPoint& q);
HPoint group_inv(const HPoint& p);
double homogeneous_norm(const HPoint& p);
double rho(const HPoint& p);
HPoint dilate(const HPoint& p, double s);
// Im sum_j z_j conj(w_j).
double symplectic(const std::vector<cplx>& z, const std::vector<cplx>& w);

// max |pq| / (|p| + |q|) over seeded random pairs in the box |z_i|, |t| <= scale.
double quasi_triangle_constant(int dim_n, int samples, std::uint64_t seed, double scale = 2.0);

// ------------------------------------------------------------------ grids

// Uniform lattice on [-R, R]^{2n} with an odd number of nodes per axis, so
// that differences of nodes are nodes. Coordinates ordered x_1..x_n, y_1..y_n.
struct ZGrid {
  int n = 1;
  int nz = 33;
  double half_width = 6.0;

  ZGrid() = default;
  ZGrid(int dim_n, int nodes_per_axis, double R);
  double spacing() const { return half_width / ((nz - 1) / 2); }
  double cell() const;  // weight of one node: h^{2n}
  std::size_t count() const;
  double coord(int axis_index) const { return (axis_index - (nz - 1) / 2) * spacing(); }
  std::vector<int> digits(std::size_t i) const;
  std::size_t flat(const std::vector<int>& d) const;
  std::vector<cplx> point(std::size_t i) const;
  // Box half-width capturing exp(-|lambda_min||z|^2/4): 6/sqrt(|lambda_min|).
  static double capture_radius(double lambda_min) { return 6.0 / std::sqrt(std::abs(lambda_min)); }
};

// Periodic uniform grid of nt = 2^m points on [-T, T).
struct TGrid {
  int nt = 64;
  double T = 8.0;

  TGrid() = default;
  TGrid(int points, double half_length);
  double spacing() const { return 2.0 * T / nt; }
  double node(int k) const { return -T + k * spacing(); }
  // Frequencies pi j / T resolved by the grid, j = -nt/2 .. nt/2 - 1.
  double frequency(int j) const { return kPi * j / T; }
};

// Samples of a function on C^n.
struct PlaneFunction {
  ZGrid grid;
  VecC values;

  PlaneFunction() = default;
  explicit PlaneFunction(const ZGrid& g) : grid(g), values(VecC::Zero(g.count())) {}
  static PlaneFunction sample(const ZGrid& g, const std::function<cplx(const std::vector<cplx>&)>& fn);
  double l2_norm() const;
  cplx inner(const PlaneFunction& other) const;  // int f conj(g)
};

// Samples f(z,t); layout z-major, t-minor.
struct GridFunction {
  ZGrid zgrid;
  TGrid tgrid;
  VecC values;

  GridFunction() = default;
  GridFunction(const ZGrid& zg, const TGrid& tg) : zgrid(zg), tgrid(tg), values(VecC::Zero(zg.count() * tg.nt)) {}
  static GridFunction sample(const ZGrid& zg, const TGrid& tg,
                             const std::function<cplx(const std::vector<cplx>&, double)>& fn);
  std::size_t index(std::size_t zi, int ti) const { return zi * tgrid.nt + ti; }
  cplx& at(std::size_t zi, int ti) { return values[index(zi, ti)]; }
  cplx at(std::size_t zi, int ti) const { return values[index(zi, ti)]; }
  double weight() const { return zgrid.cell() * tgrid.spacing(); }
  double l2_norm() const;
  double l1_norm() const;
  cplx integral() const;
};

// Fraction of the L^1 mass in the outer 10% shell of the box.
double shell_mass_fraction(const GridFunction& g);
double shell_mass_fraction(const PlaneFunction& g);

// Group convolution (f*g)(p) = int f(q) g(q^{-1} p) dq. The t-integral is done
// exactly for trigonometric interpolants on the periodic t-grid, which keeps the
// twist 1/2 Im(w.conj z) exact; the z-integral is the lattice sum.
GridFunction convolve(const GridFunction& f, const GridFunction& g, Diagnostics* diag = nullptr);

// Same quantity by an explicit double loop over grid points (for checks).
GridFunction convolve_bruteforce(const GridFunction& f, const GridFunction& g);

// DFT index j to signed frequency index (lambda_j = pi j / T).
int signed_frequency(int j, int nt);
// slices(zi, j) = int f(z_i, t) e^{i lambda_j t} dt on the periodic t-grid.
MatC t_transform(const GridFunction& f);
// Inverse of t_transform.
GridFunction t_synthesis(const MatC& slices, const ZGrid& zg, const TGrid& tg);

// ------------------------------------------------------------ vector fields

enum class HField { T, X, Y };
// Centered second-order differences; j is zero-based.
GridFunction vector_field_apply(HField field, int j, const GridFunction& f);

enum class ZField { Z, Zbar };
// Z_j(l) = d/dz_j - (l/4) conj(z_j),  Zbar_j(l) = d/dconj(z_j) + (l/4) z_j.
PlaneFunction z_field_apply(ZField field, int j, const PlaneFunction& h, double lambda);

// ------------------------------------------------------------ serialization

// CSV with columns x_1..x_n, y_1..y_n, t, re, im after a "# {json}" header.
void write_csv(const GridFunction& f, const std::string& path);
GridFunction read_csv(const std::string& path);

}  // namespace hh
