#include "hh/heat_laguerre.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace hh {

namespace {

constexpr int kGaussOrder = 16;

// Composite 16-point Gauss-Legendre rule on [a, b].
void gl_panels(double a, double b, int panels, std::vector<double>& x, std::vector<double>& w) {
  using Rule = boost::math::quadrature::gauss<double, kGaussOrder>;
  const auto& xs = Rule::abscissa();
  const auto& ws = Rule::weights();
  const double h = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    const double mid = a + (p + 0.5) * h, half = 0.5 * h;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      x.push_back(mid - half * xs[i]);
      w.push_back(half * ws[i]);
      if (xs[i] != 0.0) {
        x.push_back(mid + half * xs[i]);
        w.push_back(half * ws[i]);
      }
    }
  }
}

double sphere_area(int n) {
  // |S^{2n-1}| = 2 pi^n / (n-1)!
  return 2.0 * std::pow(kPi, n) / std::tgamma(static_cast<double>(n));
}

double log_binomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// Slice values F^lambda(s_i) and dF/ds from the Laguerre series.
void series_slice(const KernelSeries& ks, double lambda, const std::vector<double>& s, int kmax, VecC& F, VecC* Fs) {
  const int n = ks.n;
  const double al = std::abs(lambda), a = n - 1.0;
  std::vector<cplx> c(kmax + 1);
  for (int k = 0; k <= kmax; ++k) c[k] = ks.coef(k, lambda);
  const double pref = std::pow(2 * kPi, -n) * std::pow(al, n);
  F.resize(s.size());
  if (Fs) Fs->resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double x = 0.5 * al * s[i] * s[i];
    const double e = std::exp(-0.5 * x);
    const auto L = laguerre_all(kmax, a, x);
    cplx sum = 0.0, dsum = 0.0;
    for (int k = kmax; k >= 0; --k) sum += c[k] * L[k];
    if (Fs) {
      // d/dx L_k^a = -L_{k-1}^{a+1}
      const auto L1 = laguerre_all(std::max(kmax - 1, 0), a + 1.0, x);
      for (int k = kmax; k >= 1; --k) dsum -= c[k] * L1[k - 1];
    }
    F[i] = pref * e * sum;
    if (Fs) (*Fs)[i] = pref * e * al * s[i] * (dsum - 0.5 * sum);
  }
}

}  // namespace

// ------------------------------------------------------------------ Laguerre

double laguerre_eval(int k, double a, double x) {
  if (k < 0) throw std::invalid_argument("laguerre_eval: negative degree");
  double l0 = 1.0;
  if (k == 0) return l0;
  double l1 = 1.0 + a - x;
  for (int j = 1; j < k; ++j) {
    const double l2 = ((2 * j + 1 + a - x) * l1 - (j + a) * l0) / (j + 1);
    l0 = l1;
    l1 = l2;
  }
  return l1;
}

std::vector<double> laguerre_all(int kmax, double a, double x) {
  std::vector<double> out(kmax + 1);
  out[0] = 1.0;
  if (kmax >= 1) out[1] = 1.0 + a - x;
  for (int j = 1; j < kmax; ++j) out[j + 1] = ((2 * j + 1 + a - x) * out[j] - (j + a) * out[j - 1]) / (j + 1);
  return out;
}

double laguerre_function_radial(int k, int n, double lambda, double s) {
  const double x = 0.5 * std::abs(lambda) * s * s;
  return laguerre_eval(k, n - 1.0, x) * std::exp(-0.5 * x);
}

double laguerre_function(int k, double lambda, const std::vector<cplx>& z) {
  double s2 = 0.0;
  for (const auto& v : z) s2 += std::norm(v);
  return laguerre_function_radial(k, static_cast<int>(z.size()), lambda, std::sqrt(s2));
}

// ------------------------------------------------------------------ heat slices

int HeatProfile::k_max(double lambda, double rate) const {
  const double al = std::abs(lambda);
  if (!(al > 0) || !(rate > 0)) throw std::invalid_argument("HeatProfile::k_max: lambda and rate must be nonzero");
  const double q0 = std::exp(-2 * rate * al);
  // terms t_k = exp(-rate (2k+n) al) C(k+n-1, k), relative to t_0
  double sum = 0.0;
  for (int k = 0; k <= k_budget; ++k) {
    const double lt = -2 * rate * al * k + log_binomial(k + n - 1, k);
    sum += std::exp(lt);
    // ratio bound for all later terms
    const double q = q0 * (k + 1.0 + n - 1.0) / (k + 1.0);
    if (q < 1.0) {
      const double next = std::exp(lt) * q;
      if (next / (1.0 - q) <= tail_tol * sum) return k;
    }
  }
  throw ResolutionError("heat series: tail not certified within k_max budget " + std::to_string(k_budget) +
                        " at |lambda| = " + std::to_string(al) + ", rate = " + std::to_string(rate));
}

double heat_slice_series(double r, double lambda, int n, double s, double tail_tol) {
  HeatProfile hp{r, n, tail_tol};
  const int kmax = hp.k_max(lambda, 2 * r);
  const double al = std::abs(lambda);
  const double x = 0.5 * al * s * s;
  auto L = laguerre_all(kmax, n - 1.0, x);
  long double sum = 0.0L;
  for (int k = kmax; k >= 0; --k) sum += std::exp(-2 * r * (2 * k + n) * al) * L[k];
  return std::pow(2 * kPi, -n) * std::pow(al, n) * std::exp(-0.5 * x) * static_cast<double>(sum);
}

double heat_slice_closed(double r, double lambda, int n, double s) {
  const double al = std::abs(lambda), u = 2 * r * al;
  return std::pow(2 * kPi, -n) * std::pow(al / (2 * std::sinh(u)), n) * std::exp(-0.25 * al * s * s / std::tanh(u));
}

HeatSlice heat_slice(double r, double lambda, BasisPtr basis, const ZGrid& grid, double tail_tol) {
  if (!(r > 0)) throw std::invalid_argument("heat_slice: r must be positive");
  HeatSlice out;
  const int n = grid.n;
  out.k_max = HeatProfile{r, n, tail_tol}.k_max(lambda, 2 * r);
  out.values = PlaneFunction(grid);
  std::map<double, double> cache;
  for (std::size_t i = 0; i < grid.count(); ++i) {
    double s2 = 0.0;
    for (const auto& v : grid.point(i)) s2 += std::norm(v);
    auto it = cache.find(s2);
    if (it == cache.end()) it = cache.emplace(s2, heat_slice_series(r, lambda, n, std::sqrt(s2), tail_tol)).first;
    out.values.values[i] = it->second;
  }
  MatC d = MatC::Zero(basis->size(), basis->size());
  for (int i = 0; i < basis->size(); ++i) d(i, i) = std::exp(-2 * r * (2 * basis->degree(i) + n) * std::abs(lambda));
  out.weyl = OperatorMatrix(basis, lambda, d);
  return out;
}

HeatNormalization measure_heat_normalization(double r, double lambda, BasisPtr basis, const ZGrid& grid) {
  auto hs = heat_slice(r, lambda, basis, grid);
  auto W = weyl_transform(hs.values, lambda, basis);
  const MatC w = W.interior_block(1);
  const MatC d = hs.weyl.interior_block(1);
  HeatNormalization out;
  cplx num = 0.0;
  double den = 0.0;
  for (int i = 0; i < d.rows(); ++i) {
    num += std::conj(d(i, i)) * w(i, i);
    den += std::norm(d(i, i));
  }
  out.c = num.real() / den;
  for (int i = 0; i < w.rows(); ++i)
    for (int j = 0; j < w.cols(); ++j) {
      if (i != j) out.off_diagonal = std::max(out.off_diagonal, std::abs(w(i, j)));
      out.residual = std::max(out.residual, std::abs(w(i, j) - out.c * d(i, j)));
    }
  return out;
}

// ------------------------------------------------------------------ radial kernels

KernelSeries phi_series(double r, int n, bool use_closed_form) {
  KernelSeries ks;
  ks.n = n;
  ks.rate = 2 * r;
  ks.coef = [r, n](int k, double l) { return cplx(std::exp(-2 * r * (2 * k + n) * std::abs(l))); };
  if (use_closed_form)
    ks.closed = [r, n](double l, double s) {
      const double al = std::abs(l);
      const double v = heat_slice_closed(r, l, n, s);
      return std::pair{v, -0.5 * al * s / std::tanh(2 * r * al) * v};
    };
  return ks;
}

KernelSeries psi_series(double r, int n, bool use_closed_form) {
  KernelSeries ks;
  ks.n = n;
  ks.rate = r;
  ks.coef = [r, n](int k, double l) { return cplx(b_function(2 * r, (2 * k + n) * std::abs(l))); };
  if (use_closed_form) {
    auto a = phi_series(0.5 * r, n).closed, b = phi_series(r, n).closed;
    ks.closed = [a, b](double l, double s) {
      auto [va, da] = a(l, s);
      auto [vb, db] = b(l, s);
      return std::pair{va - vb, da - db};
    };
  }
  return ks;
}

KernelSeries multiplier_psi_series(const HermiteSymbol& M, double r, int n, double bound) {
  KernelSeries ks;
  ks.n = n;
  ks.rate = r;
  ks.bound = bound;
  ks.coef = [M, r, n](int k, double l) { return M(k, l) * b_function(2 * r, (2 * k + n) * std::abs(l)); };
  return ks;
}

LambdaQuadrature lambda_quadrature(double rate, int n, double t_max) {
  if (!(rate > 0)) throw std::invalid_argument("lambda_quadrature: rate must be positive");
  // integrands decay like mu^{n+2} exp(-n mu) in mu = rate * lambda
  const double mu_max = 45.0 / n + 10.0;
  // at most 8 radians of e^{-i lambda t} per 16-point panel
  double h = 0.5;
  if (t_max > 0) h = std::min(h, 8.0 * rate / t_max);
  const double panels = std::ceil(mu_max / h);
  if (panels > 2e5) throw ResolutionError("lambda_quadrature: |t| up to " + std::to_string(t_max) +
                                          " needs too many panels at rate " + std::to_string(rate));
  LambdaQuadrature q;
  gl_panels(0.0, mu_max, static_cast<int>(panels), q.nodes, q.weights);
  for (auto& x : q.nodes) x /= rate;
  for (auto& w : q.weights) w /= rate;
  return q;
}

RadialSamples radial_kernel(const KernelSeries& ks, const std::vector<double>& s, const std::vector<double>& t,
                            bool derivatives, double tail_tol) {
  double tmax = 0.0;
  for (double v : t) tmax = std::max(tmax, std::abs(v));
  const auto q = lambda_quadrature(ks.rate, ks.n, tmax);
  const std::size_t nl = q.nodes.size(), ns = s.size(), nt = t.size();
  // rows: lambda nodes, first the positive then the negative ones
  MatC G(2 * nl, ns), Gs;
  if (derivatives) Gs.resize(2 * nl, ns);
  HeatProfile hp;
  hp.n = ks.n;
  hp.tail_tol = tail_tol;
  parallel_for(2 * nl, [&](std::size_t row) {
    const double lam = row < nl ? q.nodes[row] : -q.nodes[row - nl];
    VecC F(ns), Fs(ns);
    if (ks.closed) {
      for (std::size_t i = 0; i < ns; ++i) {
        auto [v, d] = ks.closed(lam, s[i]);
        F[i] = v;
        Fs[i] = d;
      }
    } else {
      series_slice(ks, lam, s, hp.k_max(lam, ks.rate), F, derivatives ? &Fs : nullptr);
    }
    G.row(row) = F.transpose();
    if (derivatives) Gs.row(row) = Fs.transpose();
  });
  MatC E(nt, 2 * nl), Et;
  if (derivatives) Et.resize(nt, 2 * nl);
  for (std::size_t j = 0; j < nt; ++j)
    for (std::size_t v = 0; v < 2 * nl; ++v) {
      const double lam = v < nl ? q.nodes[v] : -q.nodes[v - nl];
      const double w = q.weights[v < nl ? v : v - nl] / (2 * kPi);
      const cplx e = w * std::exp(cplx(0.0, -lam * t[j]));
      E(j, v) = e;
      if (derivatives) Et(j, v) = cplx(0.0, -lam) * e;
    }
  RadialSamples out;
  out.s = s;
  out.t = t;
  out.F = E * G;
  if (derivatives) {
    out.Fs = E * Gs;
    out.Ft = Et * G;
  }
  return out;
}

GridFunction sample_kernel(const KernelSeries& ks, const ZGrid& zg, const TGrid& tg) {
  if (zg.n != ks.n) throw std::invalid_argument("sample_kernel: dimension mismatch");
  std::map<double, std::size_t> radii;
  std::vector<double> s2(zg.count());
  for (std::size_t i = 0; i < zg.count(); ++i) {
    double v = 0.0;
    for (const auto& c : zg.point(i)) v += std::norm(c);
    s2[i] = v;
    radii.emplace(v, 0);
  }
  std::vector<double> s;
  for (auto& [k, idx] : radii) {
    idx = s.size();
    s.push_back(std::sqrt(k));
  }
  std::vector<double> t(tg.nt);
  for (int k = 0; k < tg.nt; ++k) t[k] = tg.node(k);
  auto rs = radial_kernel(ks, s, t);
  GridFunction g(zg, tg);
  for (std::size_t i = 0; i < zg.count(); ++i) {
    const std::size_t c = radii.at(s2[i]);
    for (int k = 0; k < tg.nt; ++k) g.at(i, k) = rs.F(k, c);
  }
  return g;
}

GridFunction approximate_identity(double r, const ZGrid& zg, const TGrid& tg) {
  return sample_kernel(phi_series(r, zg.n), zg, tg);
}

GridFunction psi(double r, const ZGrid& zg, const TGrid& tg) { return sample_kernel(psi_series(r, zg.n), zg, tg); }

// ------------------------------------------------------------------ b_r and Gamma

double b_function(double r, double x, int l) {
  if (l < 0 || l > 12) throw std::invalid_argument("b_function: order must be in [0, 12]");
  return std::pow(-0.5 * r, l) * std::exp(-0.5 * r * x) - std::pow(-r, l) * std::exp(-r * x);
}

cplx gamma_operator(const HermiteSymbol& sym, int k, double lambda, int n,
                    const std::function<cplx(int, double)>& d_sym) {
  if (!(lambda > 0)) throw Unsupported("gamma_operator: defined for lambda > 0 only");
  if (k < 0) throw std::invalid_argument("gamma_operator: negative k");
  using LC = std::complex<long double>;
  LC d;
  if (d_sym) {
    d = LC(d_sym(k, lambda));
  } else {
    const double h = 1e-4 * lambda;
    d = (LC(sym(k, lambda + h)) - LC(sym(k, lambda - h))) / (2.0L * h);
  }
  const LC a0(sym(k, lambda)), ap(sym(k + 1, lambda));
  const LC am = k > 0 ? LC(sym(k - 1, lambda)) : a0;
  const long double L = lambda;
  const LC g = d - (static_cast<long double>(k) / (2 * L)) * (a0 - am) -
               (static_cast<long double>(k + n) / (2 * L)) * (ap - a0);
  return cplx(static_cast<double>(g.real()), static_cast<double>(g.imag()));
}

HermiteSymbol gamma_symbol(const HermiteSymbol& sym, int n, const std::function<cplx(int, double)>& d_sym) {
  HermiteSymbol out;
  out.name = "Gamma(" + sym.name + ")";
  out.smoothness = sym.smoothness > 0 ? sym.smoothness - 1 : sym.smoothness;
  out.a = [sym, n, d_sym](int k, double l) { return gamma_operator(sym, k, l, n, d_sym); };
  return out;
}

LaguerreDerivativeReport verify_laguerre_derivative(const std::function<double(double)>& b,
                                       const std::function<double(double)>& db, double rate, double lambda,
                                       const ZGrid& grid, double step) {
  if (!(lambda > 0) || !(step > 0) || step >= lambda)
    throw std::invalid_argument("verify_laguerre_derivative: need 0 < step < lambda");
  const int n = grid.n;
  HeatProfile hp;
  hp.n = n;
  hp.tail_tol = 1e-16;
  const int kmax = hp.k_max(lambda - step, rate) + 2;
  std::vector<double> radii;
  {
    std::map<double, int> seen;
    for (std::size_t i = 0; i < grid.count(); ++i) {
      double s2 = 0.0;
      for (const auto& v : grid.point(i)) s2 += std::norm(v);
      if (seen.emplace(s2, 0).second) radii.push_back(std::sqrt(s2));
    }
  }
  auto kernel = [&](double lam, double s) {
    auto L = laguerre_all(kmax, n - 1.0, 0.5 * lam * s * s);
    long double sum = 0.0L;
    for (int k = kmax; k >= 0; --k) sum += b((2 * k + n) * lam) * L[k];
    return static_cast<double>(sum) * std::pow(lam, n) * std::exp(-0.25 * lam * s * s);
  };
  LaguerreDerivativeReport rep;
  rep.k_max = kmax;
  double worst = 0.0;
  for (double s : radii) {
    const double fd = (kernel(lambda + step, s) - kernel(lambda - step, s)) / (2 * step);
    auto L = laguerre_all(kmax, n - 1.0, 0.5 * lambda * s * s);
    long double sum = 0.0L;
    for (int k = kmax; k >= 0; --k) {
      const double x = (2 * k + n) * lambda;
      const double dm = k > 0 ? b(x) - b(x - 2 * lambda) : 0.0;
      const double dp = b(x + 2 * lambda) - b(x);
      sum += ((2 * k + n) * db(x) - k / (2 * lambda) * dm - (k + n) / (2 * lambda) * dp) * L[k];
    }
    const double rhs = static_cast<double>(sum) * std::pow(lambda, n) * std::exp(-0.25 * lambda * s * s);
    worst = std::max(worst, std::abs(fd - rhs));
    rep.scale = std::max(rep.scale, std::abs(rhs));
  }
  rep.residual = rep.scale > 0 ? worst / rep.scale : worst;
  return rep;
}

// ------------------------------------------------------------------ moments

std::string to_string(MomentField f) {
  switch (f) {
    case MomentField::None: return "none";
    case MomentField::T: return "T";
    case MomentField::X: return "Xi";
    case MomentField::Y: return "Yi";
  }
  return "none";
}

MomentField parse_moment_field(const std::string& s) {
  if (s == "none" || s.empty()) return MomentField::None;
  if (s == "T") return MomentField::T;
  if (s == "Xi" || s == "X") return MomentField::X;
  if (s == "Yi" || s == "Y") return MomentField::Y;
  throw std::invalid_argument("unknown field '" + s + "' (expected T, Xi, Yi or none)");
}

HermiteSymbol identity_symbol() {
  HermiteSymbol s;
  s.a = [](int, double) { return cplx(1.0); };
  s.name = "identity";
  s.smoothness = 100;
  return s;
}

HermiteSymbol zero_symbol() {
  HermiteSymbol s;
  s.a = [](int, double) { return cplx(0.0); };
  s.name = "zero";
  s.smoothness = 100;
  return s;
}

namespace {

double moment_impl(const HermiteSymbol& M, double r, double l, int n, MomentField field, const MomentOptions& opt) {
  if (!(r >= opt.r_min && r <= opt.r_max))
    throw ResolutionError("kernel_moment: r = " + std::to_string(r) + " outside the admissible range [" +
                          std::to_string(opt.r_min) + ", " + std::to_string(opt.r_max) + "]");
  if (l < 0) throw std::invalid_argument("kernel_moment: l must be nonnegative");
  std::vector<double> s, ws, t, wt;
  gl_panels(0.0, opt.s_extent * std::sqrt(r), opt.s_panels, s, ws);
  gl_panels(-opt.t_extent * r, opt.t_extent * r, opt.t_panels, t, wt);
  const bool deriv = field != MomentField::None;
  auto rs = radial_kernel(multiplier_psi_series(M, r, n), s, t, deriv);
  long double total = 0.0L;
  for (std::size_t j = 0; j < t.size(); ++j)
    for (std::size_t i = 0; i < s.size(); ++i) {
      double v = 0.0;
      switch (field) {
        case MomentField::None: v = std::norm(rs.F(j, i)); break;
        case MomentField::T: v = std::norm(rs.Ft(j, i)); break;
        case MomentField::X:
        case MomentField::Y:
          // angular average of |(x/s) F_s + (y/2) F_t|^2
          v = std::norm(rs.Fs(j, i)) / (2.0 * n) + s[i] * s[i] * std::norm(rs.Ft(j, i)) / (8.0 * n);
          break;
      }
      const double rho = std::pow(s[i], 4) + t[j] * t[j];
      total += ws[i] * wt[j] * std::pow(s[i], 2 * n - 1) * v * (l == 0 ? 1.0 : std::pow(rho, l));
    }
  return sphere_area(n) * static_cast<double>(total);
}

}  // namespace

double kernel_moment(const HermiteSymbol& M, double r, double l, int n, const MomentOptions& opt) {
  return moment_impl(M, r, l, n, MomentField::None, opt);
}

double gradient_kernel_moment(const HermiteSymbol& M, double r, double l, int n, MomentField field,
                              const MomentOptions& opt) {
  if (!(r > 0 && r < 1)) throw std::invalid_argument("gradient_kernel_moment: requires 0 < r < 1");
  return moment_impl(M, r, l, n, field, opt);
}

double kernel_moment_plancherel(const HermiteSymbol& M, double r, int n) {
  const auto q = lambda_quadrature(2 * r, n, 0.0);
  HeatProfile hp;
  hp.n = n;
  hp.tail_tol = 1e-14;
  long double total = 0.0L;
  for (std::size_t v = 0; v < q.nodes.size(); ++v) {
    for (double lam : {q.nodes[v], -q.nodes[v]}) {
      const int kmax = hp.k_max(lam, 2 * r);
      long double sum = 0.0L;
      for (int k = 0; k <= kmax; ++k)
        sum += std::norm(M(k, lam) * b_function(2 * r, (2 * k + n) * std::abs(lam))) * binomial(k + n - 1, k);
      total += q.weights[v] * std::pow(std::abs(lam), n) * sum;
    }
  }
  return std::pow(2 * kPi, -1 - n) * static_cast<double>(total);
}

SlopeFit fit_loglog_slope(const std::vector<double>& r, const std::vector<double>& moment, bool drop_extremes) {
  if (r.size() != moment.size() || r.size() < 2) throw std::invalid_argument("fit_loglog_slope: need >= 2 points");
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!(r[i] > 0) || !(moment[i] > 0)) throw std::invalid_argument("fit_loglog_slope: values must be positive");
    pts.emplace_back(r[i], moment[i]);
  }
  std::sort(pts.begin(), pts.end());
  if (drop_extremes && pts.size() >= 5) pts = std::vector(pts.begin() + 1, pts.end() - 1);
  SlopeFit f;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double m = static_cast<double>(pts.size());
  for (auto [x, y] : pts) {
    f.r.push_back(x);
    f.moment.push_back(y);
    const double lx = std::log(x), ly = std::log(y);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  f.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  f.intercept = (sy - f.slope * sx) / m;
  return f;
}

// ------------------------------------------------------------------ envelope

EnvelopeReport band_kernel_envelope(const MultiIndex& alpha, const MultiIndex& beta, int l, int N_min, int N_max,
                                  double r, const LambdaGrid& grid, BasisPtr basis) {
  if (l < 0 || l > 2) throw std::invalid_argument("band_kernel_envelope: l must be 0, 1 or 2");
  const int n = basis->dim(), K = basis->cutoff();
  const int order = total_degree(alpha) + total_degree(beta);
  const double expo = l + 0.5 * order;
  HermiteSymbol b;
  b.a = [r, n](int k, double lam) { return cplx(b_function(2 * r, (2 * k + n) * std::abs(lam))); };
  b.name = "b_2r";
  HermiteSymbol sym = b;
  if (l >= 1) {
    auto db = [r, n](int k, double lam) {
      return cplx((2 * k + n) * b_function(2 * r, (2 * k + n) * std::abs(lam), 1));
    };
    sym = gamma_symbol(b, n, db);
  }
  if (l == 2) sym = gamma_symbol(sym, n);

  EnvelopeReport rep;
  for (int N = N_min; N <= N_max; ++N) {
    EnvelopeRow row;
    row.N = N;
    for (double lam : grid.points) {
      if (!(lam > 0)) continue;
      auto ks = dyadic_band(N, lam, n, K);
      if (ks.empty() || ks.back() > K - order) continue;
      auto D = hermite_multiplier(sym, lam, basis);
      auto X = delta_power(alpha, beta, D);
      std::vector<int> rows;
      for (int i = 0; i < basis->size(); ++i)
        if (std::find(ks.begin(), ks.end(), basis->degree(i)) != ks.end()) rows.push_back(i);
      MatC sub(rows.size(), X.entries.cols());
      for (std::size_t i = 0; i < rows.size(); ++i) sub.row(i) = X.entries.row(rows[i]);
      Eigen::JacobiSVD<MatC> svd(sub);
      row.opnorm = std::max(row.opnorm, svd.singularValues()(0));
      ++row.lambdas_used;
    }
    row.scaled = row.opnorm * std::pow(2.0, N * expo);
    if (!rep.rows.empty() && rep.rows.back().lambdas_used > 0 && row.lambdas_used > 0 &&
        rep.rows.back().opnorm > 0)
      row.ratio = row.opnorm / rep.rows.back().opnorm;
    rep.rows.push_back(row);
  }
  int tested = 0;
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    const auto& prev = rep.rows[i - 1];
    if (r * std::ldexp(1.0, prev.N) < 4.0 || rep.rows[i].lambdas_used == 0 || prev.lambdas_used == 0) continue;
    rep.envelope_fit = std::max(rep.envelope_fit, rep.rows[i].ratio / std::pow(2.0, -expo));
    ++tested;
  }
  rep.pass = tested > 0 && rep.envelope_fit <= 1.5;
  return rep;
}

// ------------------------------------------------------------------ approximate identity

namespace {

// Integral of g(s, t, F) over C^n x R for the kernel at scale r.
double radial_integral(const KernelSeries& ks, double r,
                       const std::function<double(double, double, cplx)>& g, double s_extent = 20.0,
                       double t_extent = 16.0) {
  std::vector<double> s, ws, t, wt;
  gl_panels(0.0, s_extent * std::sqrt(r), 20, s, ws);
  gl_panels(-t_extent * r, t_extent * r, 32, t, wt);
  auto rs = radial_kernel(ks, s, t);
  long double total = 0.0L;
  for (std::size_t j = 0; j < t.size(); ++j)
    for (std::size_t i = 0; i < s.size(); ++i)
      total += ws[i] * wt[j] * std::pow(s[i], 2 * ks.n - 1) * g(s[i], t[j], rs.F(j, i));
  return sphere_area(ks.n) * static_cast<double>(total);
}

}  // namespace

double approximate_identity_integral(double r, int n) {
  return radial_integral(phi_series(r, n), r, [](double, double, cplx F) { return F.real(); });
}

std::pair<double, double> scaling_deviation(double r, int n, int points, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> us(0.0, 2.0), ut(-2.0, 2.0);
  std::vector<double> s, t;
  for (int i = 0; i < points; ++i) {
    s.push_back(std::sqrt(r) * us(rng));
    t.push_back(r * ut(rng));
  }
  auto eval = [&](double rr, const std::vector<double>& ss, const std::vector<double>& tt) {
    std::vector<double> out;
    for (std::size_t i = 0; i < ss.size(); ++i) out.push_back(radial_kernel(phi_series(rr, n), {ss[i]}, {tt[i]}).F(0, 0).real());
    return out;
  };
  const auto lhs = eval(r, s, t);
  std::vector<double> sp, tp, sq, tq;
  for (int i = 0; i < points; ++i) {
    sp.push_back(std::pow(r, -0.25) * s[i]);
    tp.push_back(std::pow(r, -0.5) * t[i]);
    sq.push_back(std::pow(r, -0.5) * s[i]);
    tq.push_back(t[i] / r);
  }
  const auto literal = eval(1.0, sp, tp), parabolic = eval(1.0, sq, tq);
  double scale = 0.0, dp = 0.0, dq = 0.0;
  for (int i = 0; i < points; ++i) {
    scale = std::max(scale, std::abs(lhs[i]));
    dp = std::max(dp, std::abs(lhs[i] - std::pow(r, -(n + 1) / 2.0) * literal[i]));
    dq = std::max(dq, std::abs(lhs[i] - std::pow(r, -(n + 1.0)) * parabolic[i]));
  }
  return {dp / scale, dq / scale};
}

double commutator_defect(double r, double s, const ZGrid& zg, const TGrid& tg) {
  auto f = approximate_identity(r, zg, tg), g = approximate_identity(s, zg, tg);
  auto fg = convolve(f, g), gf = convolve(g, f);
  return (fg.values - gf.values).norm() / fg.values.norm();
}

double symmetry_defect(double r, const ZGrid& zg, const TGrid& tg) {
  auto f = approximate_identity(r, zg, tg);
  double worst = 0.0;
  for (std::size_t i = 0; i < zg.count(); ++i) {
    auto d = zg.digits(i);
    for (auto& v : d) v = zg.nz - 1 - v;
    const std::size_t mi = zg.flat(d);
    for (int k = 0; k < tg.nt; ++k) worst = std::max(worst, std::abs(f.at(i, k) - f.at(mi, (tg.nt - k) % tg.nt)));
  }
  return worst / f.values.cwiseAbs().maxCoeff();
}

double telescoping_defect(int N, const ZGrid& zg, const TGrid& tg) {
  if (N < 1) throw std::invalid_argument("telescoping_defect: N must be >= 1");
  GridFunction sum(zg, tg);
  for (int j = 1; j <= N; ++j) sum.values += psi(std::ldexp(1.0, -j), zg, tg).values;
  auto top = approximate_identity(std::ldexp(1.0, -N - 1), zg, tg);
  auto bottom = approximate_identity(0.5, zg, tg);
  return (sum.values - (top.values - bottom.values)).cwiseAbs().maxCoeff() / top.values.cwiseAbs().maxCoeff();
}

double weighted_l1(double r, int n, double eta) {
  return radial_integral(phi_series(r, n), r, [r, eta](double s, double t, cplx F) {
    return std::abs(F) * std::pow(1.0 + (std::pow(s, 4) + t * t) / r, eta);
  });
}

double translation_ratio(double r, const HPoint& p0, double eta, int nodes) {
  if (p0.z.size() != 1) throw std::invalid_argument("translation_ratio: n = 1 only");
  // tabulate phi_r on a fine (s, t) grid, then interpolate bilinearly
  const double S = 20.0 * std::sqrt(r) + std::abs(p0.z[0]);
  const double T = 16.0 * r + std::abs(p0.t) + 0.5 * S * std::abs(p0.z[0]);
  const int ns = 400, ntab = 800;
  std::vector<double> s(ns), t(ntab);
  for (int i = 0; i < ns; ++i) s[i] = S * i / (ns - 1);
  for (int j = 0; j < ntab; ++j) t[j] = -T + 2 * T * j / (ntab - 1);
  auto tab = radial_kernel(phi_series(r, 1), s, t);
  auto phi = [&](double sv, double tv) {
    if (sv >= S || std::abs(tv) >= T) return 0.0;
    const double x = sv / S * (ns - 1), y = (tv + T) / (2 * T) * (ntab - 1);
    const int i = std::min(static_cast<int>(x), ns - 2), j = std::min(static_cast<int>(y), ntab - 2);
    const double fx = x - i, fy = y - j;
    return (1 - fx) * (1 - fy) * tab.F(j, i).real() + fx * (1 - fy) * tab.F(j, i + 1).real() +
           (1 - fx) * fy * tab.F(j + 1, i).real() + fx * fy * tab.F(j + 1, i + 1).real();
  };
  const HPoint inv = group_inv(p0);
  const double R = S, h = 2 * R / (nodes - 1), ht = 2 * T / (nodes - 1);
  long double total = 0.0L;
  for (int a = 0; a < nodes; ++a)
    for (int b = 0; b < nodes; ++b)
      for (int c = 0; c < nodes; ++c) {
        HPoint p{{cplx(-R + a * h, -R + b * h)}, -T + c * ht};
        const HPoint q = group_mul(p, inv);
        total += std::abs(phi(std::abs(q.z[0]), q.t) - phi(std::abs(p.z[0]), p.t));
      }
  const double integral = static_cast<double>(total) * h * h * ht;
  return integral / std::pow(rho(p0) / r, eta);
}

}  // namespace hh
