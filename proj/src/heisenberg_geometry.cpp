#include "hh/heisenberg_geometry.hpp"

#include <json.hpp>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace hh {

// ---------------------------------------------------------------- group law

double symplectic(const std::vector<cplx>& z, const std::vector<cplx>& w) {
  double s = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) s += std::imag(z[j] * std::conj(w[j]));
  return s;
}

HPoint group_mul(const HPoint& p, const HPoint& q) {
  if (p.z.size() != q.z.size()) throw std::invalid_argument("group_mul: dimension mismatch");
  HPoint r;
  r.z.resize(p.z.size());
  for (std::size_t j = 0; j < p.z.size(); ++j) r.z[j] = p.z[j] + q.z[j];
  r.t = p.t + q.t + 0.5 * symplectic(p.z, q.z);
  return r;
}

HPoint group_inv(const HPoint& p) {
  HPoint r;
  r.z.resize(p.z.size());
  for (std::size_t j = 0; j < p.z.size(); ++j) r.z[j] = -p.z[j];
  r.t = -p.t;
  return r;
}

double rho(const HPoint& p) {
  double z2 = 0.0;
  for (const auto& v : p.z) z2 += std::norm(v);
  return z2 * z2 + p.t * p.t;
}

double homogeneous_norm(const HPoint& p) { return std::pow(rho(p), 0.25); }

HPoint dilate(const HPoint& p, double s) {
  HPoint r = p;
  for (auto& v : r.z) v *= s;
  r.t *= s * s;
  return r;
}

double quasi_triangle_constant(int dim_n, int samples, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  auto draw = [&] {
    HPoint p;
    for (int j = 0; j < dim_n; ++j) p.z.emplace_back(u(rng), u(rng));
    p.t = u(rng);
    return p;
  };
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    HPoint p = draw(), q = draw();
    const double den = homogeneous_norm(p) + homogeneous_norm(q);
    if (den > 0) worst = std::max(worst, homogeneous_norm(group_mul(p, q)) / den);
  }
  return worst;
}

// -------------------------------------------------------------------- grids

ZGrid::ZGrid(int dim_n, int nodes_per_axis, double R) : n(dim_n), nz(nodes_per_axis), half_width(R) {
  if (dim_n < 1) throw std::invalid_argument("ZGrid: n must be >= 1");
  if (nz < 3 || nz % 2 == 0) throw std::invalid_argument("ZGrid: nodes per axis must be odd and >= 3");
  if (!(R > 0)) throw std::invalid_argument("ZGrid: half-width must be positive");
}

double ZGrid::cell() const { return std::pow(spacing(), 2 * n); }

std::size_t ZGrid::count() const {
  std::size_t c = 1;
  for (int a = 0; a < 2 * n; ++a) c *= nz;
  return c;
}

std::vector<int> ZGrid::digits(std::size_t i) const {
  std::vector<int> d(2 * n);
  for (int a = 2 * n - 1; a >= 0; --a) {
    d[a] = static_cast<int>(i % nz);
    i /= nz;
  }
  return d;
}

std::size_t ZGrid::flat(const std::vector<int>& d) const {
  std::size_t i = 0;
  for (int a = 0; a < 2 * n; ++a) i = i * nz + d[a];
  return i;
}

std::vector<cplx> ZGrid::point(std::size_t i) const {
  auto d = digits(i);
  std::vector<cplx> z(n);
  for (int j = 0; j < n; ++j) z[j] = cplx(coord(d[j]), coord(d[n + j]));
  return z;
}

TGrid::TGrid(int points, double half_length) : nt(points), T(half_length) {
  if (points < 2 || (points & (points - 1)) != 0) throw std::invalid_argument("TGrid: point count must be a power of two");
  if (!(half_length > 0)) throw std::invalid_argument("TGrid: T must be positive");
}

PlaneFunction PlaneFunction::sample(const ZGrid& g, const std::function<cplx(const std::vector<cplx>&)>& fn) {
  PlaneFunction f(g);
  for (std::size_t i = 0; i < g.count(); ++i) f.values[i] = fn(g.point(i));
  return f;
}

double PlaneFunction::l2_norm() const { return std::sqrt(values.squaredNorm() * grid.cell()); }

cplx PlaneFunction::inner(const PlaneFunction& other) const {
  return other.values.dot(values) * grid.cell();
}

GridFunction GridFunction::sample(const ZGrid& zg, const TGrid& tg,
                                  const std::function<cplx(const std::vector<cplx>&, double)>& fn) {
  GridFunction f(zg, tg);
  parallel_for(zg.count(), [&](std::size_t zi) {
    const auto z = zg.point(zi);
    for (int k = 0; k < tg.nt; ++k) f.at(zi, k) = fn(z, tg.node(k));
  });
  return f;
}

double GridFunction::l2_norm() const { return std::sqrt(values.squaredNorm() * weight()); }
double GridFunction::l1_norm() const { return values.cwiseAbs().sum() * weight(); }
cplx GridFunction::integral() const { return values.sum() * weight(); }

static bool in_z_shell(const ZGrid& g, std::size_t zi) {
  const int c = (g.nz - 1) / 2;
  for (int d : g.digits(zi))
    if (std::abs(d - c) > 0.9 * c) return true;
  return false;
}

double shell_mass_fraction(const GridFunction& g) {
  double total = 0.0, shell = 0.0;
  for (std::size_t zi = 0; zi < g.zgrid.count(); ++zi) {
    const bool zs = in_z_shell(g.zgrid, zi);
    for (int k = 0; k < g.tgrid.nt; ++k) {
      const double a = std::abs(g.at(zi, k));
      total += a;
      if (zs || std::abs(g.tgrid.node(k)) > 0.9 * g.tgrid.T) shell += a;
    }
  }
  return total > 0 ? shell / total : 0.0;
}

double shell_mass_fraction(const PlaneFunction& g) {
  double total = 0.0, shell = 0.0;
  for (std::size_t zi = 0; zi < g.grid.count(); ++zi) {
    const double a = std::abs(g.values[zi]);
    total += a;
    if (in_z_shell(g.grid, zi)) shell += a;
  }
  return total > 0 ? shell / total : 0.0;
}

// -------------------------------------------------------------- convolution

namespace {

void check_same_grid(const GridFunction& f, const GridFunction& g) {
  if (f.zgrid.n != g.zgrid.n || f.zgrid.nz != g.zgrid.nz || f.zgrid.half_width != g.zgrid.half_width ||
      f.tgrid.nt != g.tgrid.nt || f.tgrid.T != g.tgrid.T)
    throw std::invalid_argument("convolve: grids differ");
}

}  // namespace

int signed_frequency(int j, int nt) { return j < nt / 2 ? j : j - nt; }

// slices(zi, j) = int f(z_i, t) e^{i lambda_j t} dt under the trapezoid rule.
MatC t_transform(const GridFunction& f) {
  const int nt = f.tgrid.nt;
  const std::size_t nzp = f.zgrid.count();
  MatC out(nzp, nt);
  Eigen::FFT<double> fft;
  std::vector<cplx> in(nt), spec(nt);
  for (std::size_t zi = 0; zi < nzp; ++zi) {
    for (int k = 0; k < nt; ++k) in[k] = f.at(zi, k);
    fft.inv(spec, in);
    // e^{i lambda_j t_k} = (-1)^j e^{2 pi i jk/nt}; inv() carries a 1/nt.
    for (int j = 0; j < nt; ++j) {
      const double sgn = (signed_frequency(j, nt) % 2 == 0) ? 1.0 : -1.0;
      out(zi, j) = spec[j] * (sgn * nt * f.tgrid.spacing());
    }
  }
  return out;
}

GridFunction t_synthesis(const MatC& slices, const ZGrid& zg, const TGrid& tg) {
  GridFunction out(zg, tg);
  const int nt = tg.nt;
  Eigen::FFT<double> fft;
  std::vector<cplx> in(nt), vals(nt);
  for (std::size_t zi = 0; zi < zg.count(); ++zi) {
    for (int j = 0; j < nt; ++j) {
      const double sgn = (signed_frequency(j, nt) % 2 == 0) ? 1.0 : -1.0;
      in[j] = slices(zi, j) * sgn;
    }
    fft.fwd(vals, in);
    for (int k = 0; k < nt; ++k) out.at(zi, k) = vals[k] / (2.0 * tg.T);
  }
  return out;
}

namespace {

// Integer coordinates of node i relative to the centre.
std::vector<int> centred(const ZGrid& g, std::size_t i) {
  auto d = g.digits(i);
  const int c = (g.nz - 1) / 2;
  for (auto& v : d) v -= c;
  return d;
}

}  // namespace

GridFunction convolve(const GridFunction& f, const GridFunction& g, Diagnostics* diag) {
  check_same_grid(f, g);
  if (diag && shell_mass_fraction(g) > 0.01)
    diag->warn("convolve: second factor carries more than 1% of its L1 mass in the outer 10% shell");
  const ZGrid& zg = f.zgrid;
  const int nt = f.tgrid.nt, n = zg.n, c = (zg.nz - 1) / 2;
  const std::size_t np = zg.count();
  const double h = zg.spacing();
  MatC F = t_transform(f), G = t_transform(g);
  std::vector<std::vector<int>> cc(np);
  for (std::size_t i = 0; i < np; ++i) cc[i] = centred(zg, i);

  MatC H = MatC::Zero(np, nt);
  // The twist 1/2 Im(w.conj z) is h^2/2 times an integer on the lattice.
  const int span = 2 * n * c * c;
  for (int j = 0; j < nt; ++j) {
    if (F.col(j).cwiseAbs().maxCoeff() == 0.0 || G.col(j).cwiseAbs().maxCoeff() == 0.0) continue;
    const double lam = f.tgrid.frequency(signed_frequency(j, nt));
    std::vector<cplx> phase(2 * span + 1);
    for (int m = -span; m <= span; ++m) phase[m + span] = std::polar(1.0, 0.5 * lam * h * h * m);
    parallel_for(np, [&](std::size_t zi) {
      const auto& zc = cc[zi];
      cplx acc = 0.0;
      std::vector<int> diff(2 * n);
      for (std::size_t wi = 0; wi < np; ++wi) {
        const cplx fw = F(wi, j);
        if (fw == 0.0) continue;
        const auto& wc = cc[wi];
        bool inside = true;
        for (int a = 0; a < 2 * n; ++a) {
          diff[a] = zc[a] - wc[a] + c;
          if (diff[a] < 0 || diff[a] >= zg.nz) {
            inside = false;
            break;
          }
        }
        if (!inside) continue;
        // Im(w conj z) = sum_j (wy zx - wx zy)
        int m = 0;
        for (int q = 0; q < n; ++q) m += wc[n + q] * zc[q] - wc[q] * zc[n + q];
        acc += fw * G(zg.flat(diff), j) * phase[m + span];
      }
      H(zi, j) = acc * zg.cell();
    });
  }
  return t_synthesis(H, zg, f.tgrid);
}

GridFunction convolve_bruteforce(const GridFunction& f, const GridFunction& g) {
  check_same_grid(f, g);
  const ZGrid& zg = f.zgrid;
  const TGrid& tg = f.tgrid;
  const int nt = tg.nt, c = (zg.nz - 1) / 2;
  const std::size_t np = zg.count();
  // Trigonometric interpolant of g in t, coefficients by direct sums.
  MatC coef(np, nt);
  for (std::size_t i = 0; i < np; ++i)
    for (int j = 0; j < nt; ++j) {
      const double lam = tg.frequency(signed_frequency(j, nt));
      cplx s = 0.0;
      for (int k = 0; k < nt; ++k) s += g.at(i, k) * std::polar(1.0, lam * tg.node(k));
      coef(i, j) = s * tg.spacing();
    }
  auto g_interp = [&](std::size_t i, double t) {
    cplx s = 0.0;
    for (int j = 0; j < nt; ++j) s += coef(i, j) * std::polar(1.0, -tg.frequency(signed_frequency(j, nt)) * t);
    return s / (2.0 * tg.T);
  };
  GridFunction out(zg, tg);
  for (std::size_t zi = 0; zi < np; ++zi) {
    const auto zc = centred(zg, zi);
    const auto z = zg.point(zi);
    for (int k = 0; k < nt; ++k) {
      cplx acc = 0.0;
      for (std::size_t wi = 0; wi < np; ++wi) {
        const auto wc = centred(zg, wi);
        std::vector<int> d(zc.size());
        bool inside = true;
        for (std::size_t a = 0; a < d.size(); ++a) {
          d[a] = zc[a] - wc[a] + c;
          if (d[a] < 0 || d[a] >= zg.nz) inside = false;
        }
        if (!inside) continue;
        const auto w = zg.point(wi);
        const double tau = 0.5 * symplectic(w, z);
        const std::size_t di = zg.flat(d);
        for (int m = 0; m < nt; ++m)
          acc += f.at(wi, m) * g_interp(di, tg.node(k) - tg.node(m) - tau);
      }
      out.at(zi, k) = acc * f.weight();
    }
  }
  return out;
}

// ------------------------------------------------------------ vector fields

namespace {

// Second-order derivative along z-axis `axis` at node zi; one-sided at the edges.
template <class Get>
cplx axis_derivative(const ZGrid& g, std::size_t zi, int axis, const Get& get) {
  auto d = g.digits(zi);
  const double h = g.spacing();
  const int v = d[axis];
  auto at = [&](int idx) {
    d[axis] = idx;
    return get(g.flat(d));
  };
  if (v == 0) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
  if (v == g.nz - 1) return (3.0 * at(v) - 4.0 * at(v - 1) + at(v - 2)) / (2.0 * h);
  return (at(v + 1) - at(v - 1)) / (2.0 * h);
}

}  // namespace

GridFunction vector_field_apply(HField field, int j, const GridFunction& f) {
  const int n = f.zgrid.n, nt = f.tgrid.nt;
  if (field != HField::T && (j < 0 || j >= n)) throw std::invalid_argument("vector_field_apply: coordinate out of range");
  GridFunction out(f.zgrid, f.tgrid);
  const double dt = f.tgrid.spacing();
  parallel_for(f.zgrid.count(), [&](std::size_t zi) {
    const auto z = f.zgrid.point(zi);
    for (int k = 0; k < nt; ++k) {
      const cplx ft = (f.at(zi, (k + 1) % nt) - f.at(zi, (k + nt - 1) % nt)) / (2.0 * dt);
      if (field == HField::T) {
        out.at(zi, k) = ft;
        continue;
      }
      const int axis = field == HField::X ? j : n + j;
      const cplx fa = axis_derivative(f.zgrid, zi, axis, [&](std::size_t q) { return f.at(q, k); });
      out.at(zi, k) = field == HField::X ? fa + 0.5 * z[j].imag() * ft : fa - 0.5 * z[j].real() * ft;
    }
  });
  return out;
}

PlaneFunction z_field_apply(ZField field, int j, const PlaneFunction& h, double lambda) {
  if (lambda == 0.0) throw std::invalid_argument("z_field_apply: lambda must be nonzero");
  const int n = h.grid.n;
  if (j < 0 || j >= n) throw std::invalid_argument("z_field_apply: coordinate out of range");
  PlaneFunction out(h.grid);
  auto get = [&](std::size_t q) { return h.values[q]; };
  const cplx I(0.0, 1.0);
  for (std::size_t zi = 0; zi < h.grid.count(); ++zi) {
    const cplx dx = axis_derivative(h.grid, zi, j, get);
    const cplx dy = axis_derivative(h.grid, zi, n + j, get);
    const cplx z = h.grid.point(zi)[j];
    if (field == ZField::Z)
      out.values[zi] = 0.5 * (dx - I * dy) - 0.25 * lambda * std::conj(z) * h.values[zi];
    else
      out.values[zi] = 0.5 * (dx + I * dy) + 0.25 * lambda * z * h.values[zi];
  }
  return out;
}

// ------------------------------------------------------------ serialization

void write_csv(const GridFunction& f, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_csv: cannot open " + path);
  nlohmann::json meta = {{"n", f.zgrid.n},
                         {"nz", f.zgrid.nz},
                         {"half_width", f.zgrid.half_width},
                         {"nt", f.tgrid.nt},
                         {"T", f.tgrid.T}};
  os << "# " << meta.dump() << "\n";
  const int n = f.zgrid.n;
  for (int j = 1; j <= n; ++j) os << "x_" << j << ",";
  for (int j = 1; j <= n; ++j) os << "y_" << j << ",";
  os << "t,re,im\n";
  char buf[128];
  for (std::size_t zi = 0; zi < f.zgrid.count(); ++zi) {
    const auto z = f.zgrid.point(zi);
    std::string zpart;
    for (int j = 0; j < n; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g,", z[j].real());
      zpart += buf;
    }
    for (int j = 0; j < n; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g,", z[j].imag());
      zpart += buf;
    }
    for (int k = 0; k < f.tgrid.nt; ++k) {
      const cplx v = f.at(zi, k);
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", f.tgrid.node(k), v.real(), v.imag());
      os << zpart << buf;
    }
  }
}

GridFunction read_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_csv: cannot open " + path);
  std::string line;
  std::getline(is, line);
  if (line.rfind("# ", 0) != 0) throw std::runtime_error("read_csv: missing metadata header in " + path);
  auto meta = nlohmann::json::parse(line.substr(2));
  ZGrid zg(meta.at("n").get<int>(), meta.at("nz").get<int>(), meta.at("half_width").get<double>());
  TGrid tg(meta.at("nt").get<int>(), meta.at("T").get<double>());
  GridFunction f(zg, tg);
  std::getline(is, line);  // column names
  const int cols = 2 * zg.n + 3;
  std::size_t row = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    if (static_cast<int>(v.size()) != cols) throw std::runtime_error("read_csv: malformed row in " + path);
    if (row >= static_cast<std::size_t>(f.values.size())) throw std::runtime_error("read_csv: too many rows in " + path);
    f.values[row++] = cplx(v[cols - 2], v[cols - 1]);
  }
  if (row != static_cast<std::size_t>(f.values.size())) throw std::runtime_error("read_csv: too few rows in " + path);
  return f;
}

}  // namespace hh
