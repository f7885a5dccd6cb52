#include "hh/graph_spectral.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <random>
#include <sstream>

namespace hh {

std::string to_string(SpaceKind k) {
  switch (k) {
    case SpaceKind::Path: return "path";
    case SpaceKind::Grid2d: return "grid2d";
    case SpaceKind::Tree: return "tree";
  }
  return "?";
}

SpaceKind parse_space_kind(const std::string& s) {
  if (s == "path") return SpaceKind::Path;
  if (s == "grid2d") return SpaceKind::Grid2d;
  if (s == "tree") return SpaceKind::Tree;
  throw std::invalid_argument("unknown space kind '" + s + "' (expected path, grid2d or tree)");
}

// ------------------------------------------------------------------ spaces

double DiscreteSpace::ball_measure(int x, double r) const {
  if (r < 0.0) return 0.0;
  const double k = std::min(std::floor(r), static_cast<double>(ball_table.cols() - 1));
  return ball_table(x, static_cast<Eigen::Index>(k));
}

namespace {

MatR bfs_distances(const std::vector<std::vector<int>>& adj) {
  const int n = static_cast<int>(adj.size());
  MatR d = MatR::Constant(n, n, std::numeric_limits<double>::infinity());
  for (int s = 0; s < n; ++s) {
    std::queue<int> q;
    d(s, s) = 0.0;
    q.push(s);
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int v : adj[u])
        if (std::isinf(d(s, v))) {
          d(s, v) = d(s, u) + 1.0;
          q.push(v);
        }
    }
  }
  return d;
}

DoublingReport doubling_report(const DiscreteSpace& X, const std::vector<std::vector<int>>& adj) {
  DoublingReport rep;
  const int n = X.size;
  const double diam = X.distance.maxCoeff();
  std::size_t max_degree = 0;
  for (const auto& a : adj) max_degree = std::max(max_degree, a.size());

  // ball growth on centers whose largest ball avoids low-degree vertices
  const int r_max = std::max(1, static_cast<int>(std::floor(diam / 6.0)));
  std::vector<int> centers;
  for (int x = 0; x < n; ++x) {
    bool interior = true;
    for (int y = 0; y < n && interior; ++y)
      if (X.distance(x, y) <= r_max && adj[y].size() < max_degree) interior = false;
    if (interior) centers.push_back(x);
  }
  if (centers.empty())
    for (int x = 0; x < n; ++x) centers.push_back(x);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int cnt = 0;
  for (int x : centers)
    for (int r = 1; r <= r_max; ++r) {
      const double u = std::log(r + 0.5), v = std::log(X.ball_measure(x, r));
      sx += u;
      sy += v;
      sxx += u * u;
      sxy += u * v;
      ++cnt;
    }
  const double den = cnt * sxx - sx * sx;
  rep.dimension = den > 0.0 ? (cnt * sxy - sx * sy) / den : 0.0;

  // dyadic radii for the comparison constants
  std::vector<double> radii;
  for (double r = 1.0; r <= std::max(1.0, diam); r *= 2.0) radii.push_back(r);
  MatR vol(n, radii.size() + 1);
  for (int x = 0; x < n; ++x) {
    for (std::size_t k = 0; k < radii.size(); ++k) vol(x, k) = X.ball_measure(x, radii[k]);
    vol(x, radii.size()) = X.ball_measure(x, 2.0 * radii.back());
  }
  for (int x = 0; x < n; ++x)
    for (std::size_t k = 0; k < radii.size(); ++k) rep.doubling_constant = std::max(rep.doubling_constant, vol(x, k + 1) / vol(x, k));
  for (int x = 0; x < n; ++x)
    for (int y = 0; y < n; ++y) {
      if (x == y) continue;
      for (std::size_t k = 0; k < radii.size(); ++k) {
        const double ratio = vol(x, k) / vol(y, k);
        if (ratio > 1.0) rep.volume_exponent = std::max(rep.volume_exponent, std::log(ratio) / std::log1p(X.distance(x, y) / radii[k]));
      }
    }

  rep.monotone = true;
  for (int x = 0; x < n && rep.monotone; ++x) {
    double prev = 0.0;
    for (int r = 0; r <= static_cast<int>(diam); ++r) {
      const double v = X.ball_measure(x, r);
      if (v < prev) {
        rep.monotone = false;
        break;
      }
      prev = v;
    }
  }
  return rep;
}

}  // namespace

DiscreteSpace build_space(SpaceKind kind, int size) {
  std::vector<std::vector<int>> adj;
  auto link = [&](int a, int b) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  };
  switch (kind) {
    case SpaceKind::Path:
      if (size < 2) throw std::invalid_argument("build_space: a path needs at least 2 nodes");
      if (size > 4096) throw std::invalid_argument("build_space: at most 4096 nodes");
      adj.resize(size);
      for (int i = 0; i + 1 < size; ++i) link(i, i + 1);
      break;
    case SpaceKind::Grid2d:
      if (size < 2) throw std::invalid_argument("build_space: grid side must be at least 2");
      if (size * size > 4096) throw std::invalid_argument("build_space: at most 4096 nodes");
      adj.resize(size * size);
      for (int i = 0; i < size; ++i)
        for (int j = 0; j < size; ++j) {
          if (i + 1 < size) link(i * size + j, (i + 1) * size + j);
          if (j + 1 < size) link(i * size + j, i * size + j + 1);
        }
      break;
    case SpaceKind::Tree: {
      if (size < 1) throw std::invalid_argument("build_space: tree depth must be at least 1");
      if (size > 11) throw std::invalid_argument("build_space: at most 4096 nodes");
      const int nodes = (1 << (size + 1)) - 1;
      adj.resize(nodes);
      for (int i = 1; i < nodes; ++i) link(i, (i - 1) / 2);
      break;
    }
  }
  DiscreteSpace X;
  X.kind = kind;
  X.size = static_cast<int>(adj.size());
  X.distance = bfs_distances(adj);
  const int n = X.size;
  VecR degree(n);
  for (int i = 0; i < n; ++i) degree[i] = static_cast<double>(adj[i].size());
  MatR A = MatR::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j : adj[i]) A(i, j) = 1.0;

  MatR S;  // symmetric form M^{1/2} L M^{-1/2}
  if (kind == SpaceKind::Tree) {
    X.measure = degree;
    X.laplacian = MatR::Identity(n, n) - degree.cwiseInverse().asDiagonal() * A;
    const VecR is = degree.cwiseSqrt().cwiseInverse();
    S = MatR::Identity(n, n) - is.asDiagonal() * A * is.asDiagonal();
  } else {
    X.measure = VecR::Ones(n);
    X.laplacian = MatR(degree.asDiagonal()) - A;
    S = X.laplacian;
  }
  Eigen::SelfAdjointEigenSolver<MatR> es(S);
  X.eigenvalues = es.eigenvalues();
  X.eigenvectors = X.measure.cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors();
  const int diam = static_cast<int>(X.distance.maxCoeff());
  X.ball_table = MatR::Zero(n, diam + 1);
  for (int x = 0; x < n; ++x) {
    for (int y = 0; y < n; ++y) X.ball_table(x, static_cast<int>(X.distance(x, y))) += X.measure[y];
    for (int k = 1; k <= diam; ++k) X.ball_table(x, k) += X.ball_table(x, k - 1);
  }
  X.doubling = doubling_report(X, adj);
  return X;
}

// ------------------------------------------------------------------ functional calculus

SymbolFunction SymbolFunction::from(std::function<double(double)> f) {
  SymbolFunction s;
  s.F = std::move(f);
  return s;
}

SymbolFunction SymbolFunction::constant_value(double c) {
  SymbolFunction s;
  s.constant = c;
  s.F = [c](double) { return c; };
  return s;
}

namespace {

MatR calculus(const DiscreteSpace& X, const std::function<double(double)>& g) {
  VecR vals(X.eigenvalues.size());
  for (Eigen::Index i = 0; i < vals.size(); ++i) vals[i] = g(std::max(0.0, X.eigenvalues[i]));
  // V g(Lambda) V^T M
  return X.eigenvectors * vals.asDiagonal() * X.eigenvectors.transpose() * X.measure.asDiagonal();
}

}  // namespace

MatR spectral_multiplier(const DiscreteSpace& X, const SymbolFunction& F) {
  if (F.constant) return *F.constant * MatR::Identity(X.size, X.size);
  return calculus(X, F.F);
}

MatR spectral_multiplier_root(const DiscreteSpace& X, const SymbolFunction& F, double m) {
  if (!(m > 0.0)) throw std::invalid_argument("spectral_multiplier_root: m must be positive");
  if (F.constant) return *F.constant * MatR::Identity(X.size, X.size);
  return calculus(X, [&](double l) { return F.F(std::pow(l, 1.0 / m)); });
}

MatR multiplier_kernel(const DiscreteSpace& X, const MatR& op) { return op * X.measure.cwiseInverse().asDiagonal(); }

MatR heat_kernel(const DiscreteSpace& X, double t) {
  if (!(t > 0.0)) throw std::invalid_argument("heat_kernel: t must be positive");
  return multiplier_kernel(X, calculus(X, [t](double l) { return std::exp(-t * l); }));
}

GaussianFit fit_gaussian_bound(const DiscreteSpace& X, const std::vector<double>& ts) {
  struct Sample {
    double t, d, p;
    int x;
  };
  std::vector<Sample> bulk, significant;
  for (double t : ts) {
    const MatR p = heat_kernel(X, t);
    const double top = p.cwiseAbs().maxCoeff();
    for (int x = 0; x < X.size; ++x)
      for (int y = 0; y < X.size; ++y) {
        const double v = p(x, y);
        if (v >= 1e-12 * top) significant.push_back({t, X.distance(x, y), v, x});
        if (v >= 1e-2 * p(x, x)) bulk.push_back({t, X.distance(x, y), v, x});
      }
  }
  GaussianFit fit;
  if (bulk.empty()) return fit;
  auto volume = [&](int x, double r) { return X.ball_measure(x, r); };

  double best = std::numeric_limits<double>::infinity();
  for (double m = 1.1; m <= 6.0 + 1e-9; m += 0.05) {
    // log p + log mu(B) = log C - u / c, u = d^{m/(m-1)} / t^{1/(m-1)}: linear least squares
    double su = 0, sv = 0, suu = 0, suv = 0;
    std::vector<double> us(bulk.size()), vs(bulk.size());
    for (std::size_t i = 0; i < bulk.size(); ++i) {
      const auto& s = bulk[i];
      us[i] = std::pow(s.d, m / (m - 1.0)) / std::pow(s.t, 1.0 / (m - 1.0));
      vs[i] = std::log(s.p) + std::log(volume(s.x, std::pow(s.t, 1.0 / m)));
      su += us[i];
      sv += vs[i];
      suu += us[i] * us[i];
      suv += us[i] * vs[i];
    }
    const double k = static_cast<double>(bulk.size());
    const double den = k * suu - su * su;
    if (!(den > 0.0)) continue;
    const double slope = (k * suv - su * sv) / den;  // -1/c
    if (!(slope < 0.0)) continue;
    const double logC = (sv - slope * su) / k;
    double sse = 0.0;
    for (std::size_t i = 0; i < bulk.size(); ++i) sse += std::pow(logC + slope * us[i] - vs[i], 2);
    if (sse < best) {
      best = sse;
      fit.m = m;
      fit.c = -1.0 / slope;
      fit.C = std::exp(logC);
    }
  }
  if (fit.m == 0.0) return fit;
  double sq = 0.0;
  for (const auto& s : bulk) {
    const double model = fit.C / volume(s.x, std::pow(s.t, 1.0 / fit.m)) *
                         std::exp(-std::pow(s.d, fit.m / (fit.m - 1.0)) / (fit.c * std::pow(s.t, 1.0 / (fit.m - 1.0))));
    sq += std::pow((model - s.p) / s.p, 2);
  }
  fit.residual = std::sqrt(sq / bulk.size());
  double log_env = -std::numeric_limits<double>::infinity();
  for (const auto& s : significant) {
    const double u = std::pow(s.d, fit.m / (fit.m - 1.0)) / (fit.c * std::pow(s.t, 1.0 / (fit.m - 1.0)));
    log_env = std::max(log_env, std::log(s.p) + std::log(volume(s.x, std::pow(s.t, 1.0 / fit.m))) + u);
  }
  fit.envelope_C = std::exp(log_env);
  fit.pairs = static_cast<int>(significant.size());
  fit.holds = std::isfinite(fit.envelope_C) && fit.pairs > 0;
  return fit;
}

// ------------------------------------------------------------------ Sobolev norms

double partition_theta(double x) {
  if (x <= 0.5) return 1.0;
  if (x >= 1.0) return 0.0;
  const double s = (x - 0.5) / 0.5;
  return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

double dyadic_cutoff(double x) {
  if (x <= 0.0) return 0.0;
  return partition_theta(x) - partition_theta(2.0 * x);
}

double sobolev_norm(const SymbolFunction& F, double t, double s, double q, const std::function<double(double)>& eta,
                    const SobolevOptions& opt, Diagnostics* diag) {
  if (!(t > 0.0)) throw std::invalid_argument("sobolev_norm: t must be positive");
  if (!(q >= 1.0)) throw std::invalid_argument("sobolev_norm: q must be >= 1");
  const int M = opt.points;
  if (!(opt.box > 2.0 * opt.support_hi)) throw std::invalid_argument("sobolev_norm: period too short for the cutoff");
  const double box = opt.box, h = box / M;
  std::vector<cplx> g(M), spec, back;
  for (int i = 0; i < M; ++i) {
    const double x = i * h;
    const double e = x < opt.support_lo || x > opt.support_hi ? 0.0 : eta(x);
    g[i] = e == 0.0 ? 0.0 : e * F(t * x);
  }
  Eigen::FFT<double> fft;
  fft.fwd(spec, g);
  double total = 0.0, top = 0.0;
  for (int k = 0; k < M; ++k) {
    const int sk = k <= M / 2 ? k : k - M;
    const double e = std::norm(spec[k]);
    total += e;
    if (std::abs(sk) > 3 * M / 8) top += e;
    const double xi = 2.0 * kPi * sk / box;
    spec[k] *= std::pow(1.0 + xi * xi, 0.5 * s);
  }
  if (diag && total > 0.0 && top > 1e-10 * total) {
    std::ostringstream os;
    os << "sobolev_norm: unresolved oscillation at t = " << t << " (top-band energy fraction " << top / total << ")";
    diag->warn(os.str());
  }
  fft.inv(back, spec);
  if (std::isinf(q)) {
    double m = 0.0;
    for (const auto& v : back) m = std::max(m, std::abs(v));
    return m;
  }
  double acc = 0.0;
  for (const auto& v : back) acc += std::pow(std::abs(v), q);
  return std::pow(acc * h, 1.0 / q);
}

double sobolev_sup(const SymbolFunction& F, const std::vector<double>& ts, double s, double q,
                   const std::function<double(double)>& eta) {
  double best = 0.0;
  for (double t : ts) best = std::max(best, sobolev_norm(F, t, s, q, eta));
  return best;
}

// ------------------------------------------------------------------ balls and maximal operators

std::vector<Ball> ball_system(const DiscreteSpace& X) {
  const double diam = X.distance.maxCoeff();
  std::vector<double> radii{0.0};
  for (double r = 1.0;; r *= 2.0) {
    radii.push_back(r);
    if (r >= diam) break;
  }
  std::vector<Ball> balls;
  for (int x = 0; x < X.size; ++x)
    for (double r : radii) {
      Ball b{x, r, {}};
      for (int y = 0; y < X.size; ++y)
        if (X.distance(x, y) <= r) b.points.push_back(y);
      balls.push_back(std::move(b));
    }
  return balls;
}

VecR hardy_littlewood(const DiscreteSpace& X, const std::vector<Ball>& balls, const VecR& g) {
  VecR out = VecR::Zero(X.size);
  for (const auto& b : balls) {
    double s = 0.0, m = 0.0;
    for (int y : b.points) {
      s += std::abs(g[y]) * X.measure[y];
      m += X.measure[y];
    }
    const double avg = s / m;
    for (int y : b.points) out[y] = std::max(out[y], avg);
  }
  return out;
}

namespace {

// sup over balls containing x of max over the ball of |op (f chi_{X \ 3Q})|.
VecR outside_maximal(const DiscreteSpace& X, const std::vector<Ball>& balls, const std::function<const MatR&(double)>& op_for,
                     const VecR& f) {
  VecR out = VecR::Zero(X.size);
  std::vector<double> tops(balls.size(), 0.0);
  parallel_for(balls.size(), [&](std::size_t i) {
    const auto& b = balls[i];
    const MatR& op = op_for(b.radius);
    std::vector<int> outside;
    for (int y = 0; y < X.size; ++y)
      if (X.distance(b.center, y) > 3.0 * b.radius && f[y] != 0.0) outside.push_back(y);
    double top = 0.0;
    for (int xi : b.points) {
      double v = 0.0;
      for (int y : outside) v += op(xi, y) * f[y];
      top = std::max(top, std::abs(v));
    }
    tops[i] = top;
  });
  for (std::size_t i = 0; i < balls.size(); ++i)
    for (int y : balls[i].points) out[y] = std::max(out[y], tops[i]);
  return out;
}

double max_ratio(const VecR& num, const VecR& den) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < num.size(); ++i)
    if (den[i] > 0.0) best = std::max(best, num[i] / den[i]);
  return best;
}

}  // namespace

VecR maximal_mfl(const DiscreteSpace& X, const std::vector<Ball>& balls, const MatR& op, const VecR& f) {
  return outside_maximal(X, balls, [&](double) -> const MatR& { return op; }, f);
}

MaximalBoundReport maximal_bound_experiment(const DiscreteSpace& X, const SymbolFunction& F, const std::vector<VecR>& fs,
                                            double m, double s) {
  if (fs.empty()) throw std::invalid_argument("maximal_bound_experiment: no test functions");
  if (!(m > 1.0)) throw std::invalid_argument("maximal_bound_experiment: m must exceed 1");
  MaximalBoundReport rep;
  rep.m = m;
  rep.N = static_cast<int>(std::floor(s / m)) + 1;
  const auto balls = ball_system(X);
  const MatR G = spectral_multiplier(X, F);

  // regular and remainder operators per radius
  std::vector<double> radii;
  for (const auto& b : balls)
    if (std::find(radii.begin(), radii.end(), b.radius) == radii.end()) radii.push_back(b.radius);
  std::vector<MatR> regular, remainder;
  for (double r : radii) {
    const double rm = std::pow(r, m);
    const int N = rep.N;
    regular.push_back(calculus(X, [&](double l) { return F(l) * std::pow(1.0 - std::exp(-rm * l), N); }));
    remainder.push_back(calculus(X, [&](double l) { return F(l) * (1.0 - std::pow(1.0 - std::exp(-rm * l), N)); }));
  }
  auto index_of = [&](double r) { return std::find(radii.begin(), radii.end(), r) - radii.begin(); };

  for (const auto& f : fs) {
    const VecR gf = G * f;
    const VecR mf = maximal_mfl(X, balls, G, f);
    const VecR a = hardy_littlewood(X, balls, f.cwiseAbs2()).cwiseSqrt();
    const VecR b = hardy_littlewood(X, balls, gf.cwiseAbs2()).cwiseSqrt();
    rep.C.push_back(max_ratio(mf, a + b));
    const VecR reg = outside_maximal(X, balls, [&](double r) -> const MatR& { return regular[index_of(r)]; }, f);
    const VecR rem = outside_maximal(X, balls, [&](double r) -> const MatR& { return remainder[index_of(r)]; }, f);
    rep.regular_C = std::max(rep.regular_C, max_ratio(reg, a));
    rep.remainder_C = std::max(rep.remainder_C, max_ratio(rem, b));
  }
  double scale = G.cwiseAbs().maxCoeff();
  for (std::size_t k = 0; k < radii.size(); ++k)
    rep.split_defect = std::max(rep.split_defect, (regular[k] + remainder[k] - G).cwiseAbs().maxCoeff() / scale);
  rep.fitted = *std::max_element(rep.C.begin(), rep.C.end());
  const double lo = *std::min_element(rep.C.begin(), rep.C.end());
  rep.spread = lo > 0.0 ? rep.fitted / lo : std::numeric_limits<double>::infinity();
  rep.pass = std::isfinite(rep.spread) && rep.spread <= 2.0;
  return rep;
}

VecR graph_wave_packet(const DiscreteSpace& X, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double diam = X.distance.maxCoeff();
  const int c = std::min(X.size - 1, static_cast<int>(unit(rng) * X.size));
  const double sigma = 1.0 + unit(rng) * diam / 8.0;
  const double omega = unit(rng) * kPi / 2.0;
  const double phase = unit(rng) * 2.0 * kPi;
  const double amp = (unit(rng) < 0.5 ? -1.0 : 1.0) * (0.5 + unit(rng));
  VecR f(X.size);
  for (int y = 0; y < X.size; ++y) {
    const double d = X.distance(c, y);
    f[y] = amp * std::exp(-d * d / (2.0 * sigma * sigma)) * std::cos(omega * d + phase);
  }
  return f;
}

// ------------------------------------------------------------------ weights

double graph_ap_characteristic(const DiscreteSpace& X, const std::vector<Ball>& balls, const VecR& w, double p) {
  if (!(p > 1.0)) throw Unsupported("graph_ap_characteristic: p <= 1 (A_1) is out of scope");
  if (w.size() != X.size || w.minCoeff() <= 0.0) throw std::invalid_argument("graph_ap_characteristic: weight must be positive on X");
  const long double e = -1.0L / (p - 1.0);
  double best = 0.0;
  for (const auto& b : balls) {
    long double m = 0.0L, s1 = 0.0L, s2 = 0.0L;
    for (int y : b.points) {
      m += X.measure[y];
      s1 += static_cast<long double>(w[y]) * X.measure[y];
      s2 += std::pow(static_cast<long double>(w[y]), e) * X.measure[y];
    }
    best = std::max(best, static_cast<double>((s1 / m) * std::pow(s2 / m, static_cast<long double>(p - 1.0))));
  }
  return best;
}

double graph_weighted_norm(const DiscreteSpace& X, const VecR& f, const VecR& w, double p) {
  double s = 0.0;
  for (int y = 0; y < X.size; ++y) s += std::pow(std::abs(f[y]), p) * w[y] * X.measure[y];
  return std::pow(s, 1.0 / p);
}

VecR degree_weight(const DiscreteSpace& X, double eps) {
  VecR w(X.size);
  for (int y = 0; y < X.size; ++y) {
    int deg = 0;
    for (int z = 0; z < X.size; ++z) deg += X.distance(y, z) == 1.0;
    w[y] = std::pow(static_cast<double>(deg), eps);
  }
  return w;
}

SpectralWeightedReport weighted_spectral_experiment(const DiscreteSpace& X, const SymbolFunction& F,
                                                    const std::vector<double>& eps, double p, double s,
                                                    const std::vector<VecR>& fs) {
  if (!(p > 2.0)) throw Unsupported("weighted_spectral_experiment: requires p > 2");
  SpectralWeightedReport rep;
  rep.p = p;
  rep.exponent = std::max(1.0, 1.0 / (p - 2.0));
  std::vector<double> ts;
  for (int k = -8; k <= 8; ++k) ts.push_back(std::ldexp(1.0, k));
  rep.symbol_norm = sobolev_sup(F, ts, s, std::numeric_limits<double>::infinity()) + std::abs(F(0.0));
  const MatR G = spectral_multiplier(X, F);
  const auto balls = ball_system(X);
  std::vector<VecR> gfs;
  for (const auto& f : fs) gfs.push_back(G * f);
  for (double e : eps) {
    const VecR w = degree_weight(X, e);
    SpectralRow row;
    row.eps = e;
    row.characteristic = graph_ap_characteristic(X, balls, w, p / 2.0);
    for (std::size_t i = 0; i < fs.size(); ++i)
      row.ratio = std::max(row.ratio, graph_weighted_norm(X, gfs[i], w, p) / graph_weighted_norm(X, fs[i], w, p));
    if (rep.symbol_norm > 0.0)
      rep.envelope = std::max(rep.envelope, row.ratio / (std::pow(row.characteristic, rep.exponent) * rep.symbol_norm));
    rep.rows.push_back(row);
  }
  return rep;
}

double restriction_constant(const DiscreteSpace& X, const SymbolFunction& F, double R, double m, double q) {
  if (!(R > 0.0)) throw std::invalid_argument("restriction_constant: R must be positive");
  const MatR K = multiplier_kernel(X, spectral_multiplier_root(X, F, m));
  const int M = 4096;
  double norm = 0.0;
  for (int i = 0; i < M; ++i) {
    const double v = std::abs(F((i + 0.5) / M * R));
    norm = std::isinf(q) ? std::max(norm, v) : norm + std::pow(v, q) / M;
  }
  if (!std::isinf(q)) norm = std::pow(norm, 1.0 / q);
  if (norm == 0.0) return 0.0;
  double best = 0.0;
  for (int y = 0; y < X.size; ++y) {
    double lhs = 0.0;
    for (int x = 0; x < X.size; ++x) lhs += K(x, y) * K(x, y) * X.measure[x];
    best = std::max(best, lhs * X.ball_measure(y, 1.0 / R) / (norm * norm));
  }
  return best;
}

}  // namespace hh
