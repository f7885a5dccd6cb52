#include "hh/dyadic_sparse.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace hh {

// ------------------------------------------------------------------ cubes

HPoint CubeSystem::point(std::size_t p) const {
  const int n = zgrid.n;
  HPoint out;
  out.z.resize(n);
  const double* c = &coords[p * (2 * n + 1)];
  for (int q = 0; q < n; ++q) out.z[q] = cplx(c[q], c[n + q]);
  out.t = c[2 * n];
  return out;
}

double CubeSystem::distance(std::size_t p, std::size_t q) const {
  const int n = zgrid.n;
  const double* a = &coords[p * (2 * n + 1)];
  const double* b = &coords[q * (2 * n + 1)];
  double z2 = 0.0, im = 0.0;
  for (int k = 0; k < n; ++k) {
    const double dx = a[k] - b[k], dy = a[n + k] - b[n + k];
    z2 += dx * dx + dy * dy;
    im += b[n + k] * a[k] - b[k] * a[n + k];  // Im z_q conj(z_p)
  }
  const double dt = a[2 * n] - b[2 * n] - 0.5 * im;
  return std::pow(z2 * z2 + dt * dt, 0.25);
}

bool CubeSystem::in_dilate(CubeRef q, double gamma, std::size_t p) const {
  return distance(p, cube(q).center) < a * gamma * scale(q.level);
}

std::vector<std::size_t> CubeSystem::dilate(CubeRef q, double gamma) const {
  std::vector<std::size_t> out;
  for (std::size_t p = 0; p < point_count(); ++p)
    if (in_dilate(q, gamma, p)) out.push_back(p);
  return out;
}

std::vector<CubeRef> CubeSystem::descendants(CubeRef q) const {
  std::vector<CubeRef> out{q};
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto r = out[i];
    if (r.level == j_max) continue;
    for (int c : cube(r).children) out.push_back({r.level + 1, c});
  }
  return out;
}

namespace {

// Greedy maximal delta-separated subset of `candidates`, in the given order.
std::vector<std::size_t> greedy_net(const CubeSystem& sys, const std::vector<std::size_t>& candidates, double delta) {
  std::vector<std::size_t> net;
  for (std::size_t p : candidates) {
    bool ok = true;
    // Recent centers are the likeliest to be close in the flat ordering.
    for (auto it = net.rbegin(); it != net.rend(); ++it)
      if (sys.distance(p, *it) < delta) {
        ok = false;
        break;
      }
    if (ok) net.push_back(p);
  }
  return net;
}

// Index of the nearest center; ties go to the lower index.
int nearest(const CubeSystem& sys, std::size_t p, const std::vector<std::size_t>& centers) {
  int best = 0;
  double bd = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centers.size(); ++c) {
    const double d = sys.distance(p, centers[c]);
    if (d < bd) {
      bd = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

}  // namespace

CubeSystem build_cube_system(const ZGrid& zg, const TGrid& tg, int j_min, int j_max, double eta, double separation) {
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("build_cube_system: eta must lie in (0, 1)");
  if (j_min > j_max) throw std::invalid_argument("build_cube_system: empty level range");
  if (separation <= 0.0) throw std::invalid_argument("build_cube_system: separation must be positive");
  const double finest = std::pow(eta, j_max);
  const double delta = separation * finest;
  if (delta < 2.0 * zg.spacing() || delta * delta < 2.0 * tg.spacing()) {
    std::ostringstream os;
    os << "build_cube_system: region too coarse for level " << j_max << " (net separation " << delta
       << " needs z spacing <= " << delta / 2.0 << " and t spacing <= " << delta * delta / 2.0 << ")";
    throw ResolutionError(os.str());
  }

  CubeSystem sys;
  sys.zgrid = zg;
  sys.tgrid = tg;
  sys.eta = eta;
  sys.j_min = j_min;
  sys.j_max = j_max;
  sys.separation = separation;
  const int n = zg.n, nt = tg.nt;
  const std::size_t P = zg.count() * nt;
  sys.coords.resize(P * (2 * n + 1));
  for (std::size_t zi = 0; zi < zg.count(); ++zi) {
    const auto z = zg.point(zi);
    for (int k = 0; k < nt; ++k) {
      double* c = &sys.coords[(zi * nt + k) * (2 * n + 1)];
      for (int q = 0; q < n; ++q) {
        c[q] = z[q].real();
        c[n + q] = z[q].imag();
      }
      c[2 * n] = tg.node(k);
    }
  }

  const int L = sys.level_count();
  std::vector<std::vector<std::size_t>> centers(L);
  std::vector<std::size_t> all(P);
  std::iota(all.begin(), all.end(), std::size_t{0});
  centers[L - 1] = greedy_net(sys, all, separation * finest);
  for (int l = L - 2; l >= 0; --l) centers[l] = greedy_net(sys, centers[l + 1], separation * sys.scale(j_min + l));

  // Finest labels by nearest center; coarser labels through the cell assignment.
  sys.label.assign(L, std::vector<int>(P, -1));
  {
    auto& lab = sys.label[L - 1];
    parallel_for(P, [&](std::size_t p) { lab[p] = nearest(sys, p, centers[L - 1]); });
  }
  std::vector<std::vector<int>> parent(L);
  for (int l = L - 2; l >= 0; --l) {
    parent[l + 1].resize(centers[l + 1].size());
    for (std::size_t c = 0; c < centers[l + 1].size(); ++c) parent[l + 1][c] = nearest(sys, centers[l + 1][c], centers[l]);
    for (std::size_t p = 0; p < P; ++p) sys.label[l][p] = parent[l + 1][sys.label[l + 1][p]];
  }

  sys.levels.resize(L);
  for (int l = 0; l < L; ++l) {
    auto& lev = sys.levels[l];
    lev.resize(centers[l].size());
    for (std::size_t c = 0; c < centers[l].size(); ++c) {
      lev[c].level = j_min + l;
      lev[c].center = centers[l][c];
      if (l > 0) lev[c].parent = parent[l][c];
    }
    std::size_t uncovered = 0;
    for (std::size_t p = 0; p < P; ++p) {
      const int lab = sys.label[l][p];
      if (lab < 0) {
        ++uncovered;
        continue;
      }
      lev[lab].points.push_back(p);
    }
    for (auto& q : lev) q.measure = q.points.size() * sys.cell_measure();
    sys.coverage_defect = std::max(sys.coverage_defect, double(uncovered) / double(P));
  }
  for (int l = 1; l < L; ++l)
    for (std::size_t c = 0; c < sys.levels[l].size(); ++c)
      sys.levels[l - 1][sys.levels[l][c].parent].children.push_back(static_cast<int>(c));

  // Outer and inner radius constants.
  double a = 0.0, b = std::numeric_limits<double>::infinity();
  for (int l = 0; l < L; ++l) {
    const double s = sys.scale(j_min + l);
    const auto& lev = sys.levels[l];
    std::vector<double> inner(lev.size(), std::numeric_limits<double>::infinity());
    std::vector<double> outer(lev.size(), 0.0);
    for (std::size_t p = 0; p < P; ++p) {
      const int own = sys.label[l][p];
      for (std::size_t c = 0; c < lev.size(); ++c) {
        const double d = sys.distance(p, lev[c].center);
        if (static_cast<int>(c) == own)
          outer[c] = std::max(outer[c], d);
        else
          inner[c] = std::min(inner[c], d);
      }
    }
    for (std::size_t c = 0; c < lev.size(); ++c) {
      a = std::max(a, outer[c] / s);
      if (std::isfinite(inner[c])) b = std::min(b, inner[c] / s);
    }
  }
  sys.a = a;
  sys.b = std::isfinite(b) ? b : std::numeric_limits<double>::infinity();
  return sys;
}

CubeSystemReport verify_cube_system(const CubeSystem& sys) {
  CubeSystemReport rep;
  const std::size_t P = sys.point_count();
  const int L = sys.level_count();
  rep.covering = true;
  for (int l = 0; l < L; ++l)
    for (std::size_t p = 0; p < P; ++p)
      if (sys.label[l][p] < 0 || sys.label[l][p] >= static_cast<int>(sys.levels[l].size())) rep.covering = false;

  // (2), (3): every finer cell sits in exactly one coarser cell, checked pointwise.
  rep.nesting = rep.covering;
  rep.parents = rep.covering;
  for (int l = 1; l < L && rep.nesting; ++l) {
    const auto& lev = sys.levels[l];
    for (std::size_t c = 0; c < lev.size(); ++c) {
      const auto& pts = lev[c].points;
      if (pts.empty()) {
        rep.nesting = false;
        break;
      }
      for (int k = l - 1; k >= 0; --k) {
        const int host = sys.label[k][pts.front()];
        for (std::size_t p : pts)
          if (sys.label[k][p] != host) rep.nesting = false;
      }
      if (sys.label[l - 1][pts.front()] != lev[c].parent) rep.parents = false;
      const auto& kids = sys.levels[l - 1][lev[c].parent].children;
      if (std::find(kids.begin(), kids.end(), static_cast<int>(c)) == kids.end()) rep.parents = false;
    }
  }
  // Disjointness within a level and the union of children equal to the parent.
  for (int l = 0; l + 1 < L; ++l)
    for (const auto& q : sys.levels[l]) {
      std::size_t total = 0;
      for (int c : q.children) total += sys.levels[l + 1][c].points.size();
      if (total != q.points.size()) rep.nesting = false;
    }

  // (4) on the grid: every point within eta^j of the center belongs to the cell.
  rep.inner_ball = true;
  for (int l = 0; l < L; ++l) {
    const double s = sys.scale(sys.j_min + l);
    for (std::size_t p = 0; p < P; ++p)
      for (std::size_t c = 0; c < sys.levels[l].size(); ++c)
        if (sys.distance(p, sys.levels[l][c].center) < s && sys.label[l][p] != static_cast<int>(c))
          rep.inner_ball = false;
  }
  rep.a = sys.a;
  rep.b = sys.b;
  rep.coverage_defect = sys.coverage_defect;
  for (const auto& lev : sys.levels) rep.cubes_per_level.push_back(static_cast<int>(lev.size()));
  rep.pass = rep.covering && rep.nesting && rep.parents && rep.inner_ball && rep.a <= 8.0 &&
             rep.coverage_defect <= 0.005;
  return rep;
}

// ------------------------------------------------------------------ functions

GridFunction smooth_test_function(const ZGrid& zg, const TGrid& tg, std::uint64_t seed, int bumps) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = zg.n;
  const double L = zg.half_width, T = tg.T;
  struct Bump {
    HPoint c;
    double R, amp;
  };
  std::vector<Bump> bs;
  for (int i = 0; i < bumps; ++i) {
    Bump b;
    b.R = L * (0.15 + 0.15 * unit(rng));
    const double zr = 0.5 * L - b.R;
    b.c.z.resize(n);
    for (int q = 0; q < n; ++q) {
      const double x = -zr + 2.0 * zr * unit(rng);
      const double y = -zr + 2.0 * zr * unit(rng);
      b.c.z[q] = cplx(x, y) / std::sqrt(double(n));
    }
    const double tr = 0.5 * T - b.R * b.R - 0.5 * zr * zr;
    b.c.t = -tr + 2.0 * tr * unit(rng);
    b.amp = (unit(rng) < 0.5 ? -1.0 : 1.0) * (0.5 + unit(rng));
    bs.push_back(b);
  }
  return GridFunction::sample(zg, tg, [&](const std::vector<cplx>& z, double t) {
    double v = 0.0;
    for (const auto& b : bs) {
      const HPoint p{z, t};
      const double u = rho(group_mul(group_inv(b.c), p)) / std::pow(b.R, 4);
      if (u < 1.0) v += b.amp * std::exp(1.0 - 1.0 / (1.0 - u));
    }
    return cplx(v, 0.0);
  });
}

GridFunction maximal_function(const CubeSystem& sys, const GridFunction& f, int order) {
  if (order != 1 && order != 2) throw std::invalid_argument("maximal_function: order must be 1 or 2");
  const std::size_t P = sys.point_count();
  std::vector<double> out(P);
  double total = 0.0;
  for (std::size_t p = 0; p < P; ++p) {
    out[p] = std::abs(f.values[p]);
    total += order == 1 ? out[p] : out[p] * out[p];
  }
  // The whole region stands in for the cubes coarser than j_min.
  const double whole = order == 1 ? total / P : std::sqrt(total / P);
  for (std::size_t p = 0; p < P; ++p) out[p] = std::max(out[p], whole);
  for (const auto& lev : sys.levels)
    for (const auto& q : lev) {
      double s = 0.0;
      for (std::size_t p : q.points) s += order == 1 ? std::abs(f.values[p]) : std::norm(f.values[p]);
      double avg = s / q.points.size();
      if (order == 2) avg = std::sqrt(avg);
      for (std::size_t p : q.points) out[p] = std::max(out[p], avg);
    }
  GridFunction g(f.zgrid, f.tgrid);
  for (std::size_t p = 0; p < P; ++p) g.values[p] = out[p];
  return g;
}

Weight power_weight(const ZGrid& zg, const TGrid& tg, double eps) {
  Weight w{zg, tg, VecR(zg.count() * tg.nt)};
  const int n = zg.n, dims = 2 * n + 1, sub = 4;
  const double hz = zg.spacing(), ht = tg.spacing();
  int combos = 1;
  for (int d = 0; d < dims; ++d) combos *= sub;
  parallel_for(zg.count(), [&](std::size_t zi) {
    const auto z = zg.point(zi);
    std::vector<double> x(dims);
    for (int k = 0; k < tg.nt; ++k) {
      double acc = 0.0;
      for (int c = 0; c < combos; ++c) {
        int rem = c;
        for (int d = 0; d < dims; ++d) {
          const double off = ((rem % sub) + 0.5) / sub - 0.5;
          rem /= sub;
          if (d < n)
            x[d] = z[d].real() + off * hz;
          else if (d < 2 * n)
            x[d] = z[d - n].imag() + off * hz;
          else
            x[d] = tg.node(k) + off * ht;
        }
        double z2 = 0.0;
        for (int d = 0; d < 2 * n; ++d) z2 += x[d] * x[d];
        acc += std::pow(z2 * z2 + x[2 * n] * x[2 * n], eps);
      }
      w.values[zi * tg.nt + k] = acc / combos;
    }
  });
  return w;
}

Weight constant_weight(const ZGrid& zg, const TGrid& tg, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("constant_weight: weight must be positive");
  return Weight{zg, tg, VecR::Constant(zg.count() * tg.nt, c)};
}

double ap_characteristic(const CubeSystem& sys, const Weight& w, double p) {
  if (!(p > 1.0)) throw Unsupported("ap_characteristic: p <= 1 (A_1) is out of scope");
  if (w.values.size() != static_cast<Eigen::Index>(sys.point_count()))
    throw std::invalid_argument("ap_characteristic: weight grid differs from the cube grid");
  if (w.values.minCoeff() <= 0.0) throw std::invalid_argument("ap_characteristic: weight must be positive");
  const double e = -1.0 / (p - 1.0);
  // Long double sums keep a constant weight at exactly 1 up to rounding of the last step.
  auto characteristic = [&](long double s1, long double s2, std::size_t count) {
    const long double c = static_cast<long double>(count);
    return static_cast<double>((s1 / c) * std::pow(s2 / c, static_cast<long double>(p - 1.0)));
  };
  long double t1 = 0.0L, t2 = 0.0L;
  for (Eigen::Index i = 0; i < w.values.size(); ++i) {
    t1 += w.values[i];
    t2 += std::pow(static_cast<long double>(w.values[i]), static_cast<long double>(e));
  }
  double best = characteristic(t1, t2, w.values.size());
  for (const auto& lev : sys.levels)
    for (const auto& q : lev) {
      long double s1 = 0.0L, s2 = 0.0L;
      for (std::size_t i : q.points) {
        s1 += w.values[i];
        s2 += std::pow(static_cast<long double>(w.values[i]), static_cast<long double>(e));
      }
      best = std::max(best, characteristic(s1, s2, q.points.size()));
    }
  return best;
}

double weighted_lp_norm(const GridFunction& f, const Weight& w, double p) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < f.values.size(); ++i) s += std::pow(std::abs(f.values[i]), p) * w.values[i];
  return std::pow(s * f.weight(), 1.0 / p);
}

// ------------------------------------------------------------------ sparse families

SparseFamily build_sparse_family(const CubeSystem& sys, const GridFunction& f, CubeRef q0, const SparseRule& rule) {
  SparseFamily fam;
  fam.alpha = rule.alpha;
  const int n = sys.zgrid.n;
  const double height = std::ldexp(1.0, -(2 * n + 3));
  const double e_share = std::ldexp(1.0, -(2 * n + 4));
  const std::size_t P = sys.point_count();

  auto local_average = [&](CubeRef q, std::vector<std::size_t>* pts) {
    *pts = sys.dilate(q, 3.0);
    double s = 0.0;
    for (std::size_t p : *pts) s += std::norm(f.values[p]);
    return pts->empty() ? 0.0 : std::sqrt(s / pts->size());
  };

  std::vector<std::size_t> pts;
  fam.cubes.push_back({q0, 0, -1, local_average(q0, &pts)});
  fam.generations.push_back({0});
  std::vector<char> in_e(P, 0);

  for (int gen = 0; gen < static_cast<int>(fam.generations.size()); ++gen) {
    std::vector<int> next;
    for (int idx : fam.generations[gen]) {
      const CubeRef q = fam.cubes[idx].cube;
      const double A = fam.cubes[idx].local_average;
      if (A == 0.0 || q.level == sys.j_max) continue;
      const Cube& cq = sys.cube(q);

      std::vector<double> m(cq.points.size());
      for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::abs(f.values[cq.points[i]]);
      if (rule.maximal) {
        GridFunction g(f.zgrid, f.tgrid);
        for (std::size_t p : sys.dilate(q, 3.0)) g.values[p] = f.values[p];
        const auto mx = rule.maximal(sys, q, g);
        for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::max(m[i], mx[i]);
      }
      // Keep |E| <= |Q| / 2^{2n+4}: raise alpha to the needed quantile when necessary.
      double alpha = rule.alpha;
      const std::size_t allowed = static_cast<std::size_t>(std::floor(e_share * cq.points.size()));
      std::size_t count = 0;
      for (double v : m) count += v > alpha * A;
      if (count > allowed) {
        std::vector<double> sorted = m;
        std::sort(sorted.begin(), sorted.end(), std::greater<>());
        alpha = sorted[allowed] / A;
        ++fam.alpha_raises;
      }
      fam.alpha = std::max(fam.alpha, alpha);
      std::size_t e_count = 0;
      for (std::size_t i = 0; i < m.size(); ++i) {
        in_e[cq.points[i]] = m[i] > alpha * A;
        e_count += in_e[cq.points[i]];
      }
      if (e_count == 0) continue;

      // Calderon-Zygmund selection of chi_E over the proper subcubes of Q.
      std::size_t covered = 0;
      std::vector<CubeRef> stack;
      for (auto it = cq.children.rbegin(); it != cq.children.rend(); ++it) stack.push_back({q.level + 1, *it});
      while (!stack.empty()) {
        const CubeRef c = stack.back();
        stack.pop_back();
        const Cube& cc = sys.cube(c);
        std::size_t hits = 0;
        for (std::size_t p : cc.points) hits += in_e[p];
        if (hits > height * cc.points.size()) {
          if (gen + 1 > rule.depth_cap) {
            fam.truncated = true;
            continue;
          }
          covered += hits;
          fam.cubes.push_back({c, gen + 1, idx, local_average(c, &pts)});
          next.push_back(static_cast<int>(fam.cubes.size()) - 1);
        } else if (c.level < sys.j_max) {
          for (auto it = cc.children.rbegin(); it != cc.children.rend(); ++it) stack.push_back({c.level + 1, *it});
        }
      }
      fam.uncovered_exceptional += (e_count - covered) * sys.cell_measure();
      for (std::size_t p : cq.points) in_e[p] = 0;
    }
    if (!next.empty()) fam.generations.push_back(next);
  }
  return fam;
}

SparseFamilyReport verify_sparse_family(const CubeSystem& sys, const SparseFamily& fam) {
  SparseFamilyReport rep;
  const std::size_t P = sys.point_count();
  rep.disjoint = true;
  rep.nested = true;
  std::vector<int> prev(P, 0), cur(P, 0);
  for (std::size_t g = 0; g < fam.generations.size(); ++g) {
    std::fill(cur.begin(), cur.end(), 0);
    for (int idx : fam.generations[g])
      for (std::size_t p : sys.cube(fam.cubes[idx].cube).points) ++cur[p];
    for (std::size_t p = 0; p < P; ++p) {
      if (cur[p] > 1) rep.disjoint = false;
      if (g > 0 && cur[p] > 0 && prev[p] == 0) rep.nested = false;
    }
    prev = cur;
  }
  // |Omega_{k+1} n Q| / |Q| for every selected Q.
  std::vector<std::size_t> child_points(fam.cubes.size(), 0);
  for (std::size_t i = 0; i < fam.cubes.size(); ++i) {
    const auto& c = fam.cubes[i];
    if (c.parent < 0) continue;
    const auto& parent = sys.cube(fam.cubes[c.parent].cube);
    const auto& pts = sys.cube(c.cube).points;
    // Child inside its parent.
    if (c.cube.level <= parent.level || sys.label[parent.level - sys.j_min][sys.cube(c.cube).center] !=
                                            fam.cubes[c.parent].cube.index)
      rep.nested = false;
    child_points[c.parent] += pts.size();
  }
  for (std::size_t i = 0; i < fam.cubes.size(); ++i)
    rep.half_measure_max =
        std::max(rep.half_measure_max, double(child_points[i]) / double(sys.cube(fam.cubes[i].cube).points.size()));
  if (!fam.generations.empty()) {
    const double q0 = double(sys.cube(fam.cubes[fam.generations[0][0]].cube).points.size());
    rep.first_generation_ratio = double(child_points[fam.generations[0][0]]) / q0;
  }
  rep.pass = rep.disjoint && rep.nested && rep.half_measure_max <= 0.5;
  return rep;
}

GridFunction sparse_operator(const CubeSystem& sys, const SparseFamily& fam, int r, const GridFunction& f) {
  if (r != 1 && r != 2) throw std::invalid_argument("sparse_operator: r must be 1 or 2");
  GridFunction out(f.zgrid, f.tgrid);
  for (const auto& sc : fam.cubes) {
    const auto& pts = sys.cube(sc.cube).points;
    double s = 0.0;
    for (std::size_t p : pts) s += r == 1 ? std::abs(f.values[p]) : std::norm(f.values[p]);
    double avg = s / pts.size();
    if (r == 2) avg = std::sqrt(avg);
    for (std::size_t p : pts) out.values[p] += avg;
  }
  return out;
}

GridFunction sparse_bound(const CubeSystem& sys, const SparseFamily& fam) {
  GridFunction out(sys.zgrid, sys.tgrid);
  for (const auto& sc : fam.cubes)
    for (std::size_t p : sys.cube(sc.cube).points) out.values[p] += sc.local_average;
  return out;
}

// ------------------------------------------------------------------ truncated operators

void check_truncation_resolution(int N, const ZGrid& zg, const TGrid& tg) {
  if (N < 1) throw std::invalid_argument("truncated operator: N must be >= 1");
  const double r = std::ldexp(1.0, -N - 1);
  if (zg.spacing() > 2.0 * std::sqrt(r) || tg.spacing() > r) {
    std::ostringstream os;
    os << "truncated operator: grid does not resolve psi_{2^-" << N << "} (needs z spacing <= " << 2.0 * std::sqrt(r)
       << " and t spacing <= " << r << ", have " << zg.spacing() << " and " << tg.spacing() << ")";
    throw ResolutionError(os.str());
  }
}

TruncatedKernel make_truncated_kernel(const GridFunction& kernel, int N) {
  TruncatedKernel K;
  K.N = N;
  K.kernel = kernel;
  K.slices = t_transform(kernel).transpose();
  return K;
}

TruncatedKernel truncated_kernel(const HermiteSymbol& M, int N, const ZGrid& zg, const TGrid& tg) {
  check_truncation_resolution(N, zg, tg);
  GridFunction k(zg, tg);
  for (int j = 1; j <= N; ++j) k.values += sample_kernel(multiplier_psi_series(M, std::ldexp(1.0, -j), zg.n), zg, tg).values;
  return make_truncated_kernel(k, N);
}

GridFunction truncated_operator(const TruncatedKernel& K, const GridFunction& f) { return convolve(K.kernel, f); }

GridFunction truncated_operator(const HermiteSymbol& M, int N, const GridFunction& f) {
  return truncated_operator(truncated_kernel(M, N, f.zgrid, f.tgrid), f);
}

VecC apply_restricted(const TruncatedKernel& K, const GridFunction& f, const std::vector<char>& src,
                      const std::vector<std::size_t>& dst) {
  const ZGrid& zg = f.zgrid;
  const TGrid& tg = f.tgrid;
  const int nt = tg.nt, n = zg.n, c = (zg.nz - 1) / 2;
  const std::size_t np = zg.count();
  const double h = zg.spacing();

  GridFunction g(zg, tg);
  std::vector<char> zsrc(np, 0);
  for (std::size_t p = 0; p < src.size(); ++p)
    if (src[p] && f.values[p] != 0.0) {
      g.values[p] = f.values[p];
      zsrc[p / nt] = 1;
    }
  VecC out = VecC::Zero(dst.size());
  std::vector<std::size_t> us;
  for (std::size_t u = 0; u < np; ++u)
    if (zsrc[u]) us.push_back(u);
  if (us.empty()) return out;
  const MatC G = t_transform(g).transpose();  // rows lambda_j

  std::vector<std::vector<int>> cc(np);
  for (std::size_t i = 0; i < np; ++i) {
    cc[i] = zg.digits(i);
    for (auto& v : cc[i]) v -= c;
  }
  // Phase e^{i lambda/2 Im(z conj u)}, Im(z conj u) = h^2 m on the lattice.
  const int span = 2 * n * c * c;
  MatC phase(nt, 2 * span + 1);
  for (int j = 0; j < nt; ++j) {
    const double lam = tg.frequency(signed_frequency(j, nt));
    for (int m = -span; m <= span; ++m) phase(j, m + span) = std::polar(1.0, 0.5 * lam * h * h * m);
  }

  std::vector<std::size_t> zs;
  for (std::size_t p : dst) zs.push_back(p / nt);
  std::sort(zs.begin(), zs.end());
  zs.erase(std::unique(zs.begin(), zs.end()), zs.end());
  std::vector<std::vector<cplx>> rows(zs.size());
  parallel_for(zs.size(), [&](std::size_t i) {
    const auto& zc = cc[zs[i]];
    VecC acc = VecC::Zero(nt);
    std::vector<int> diff(2 * n);
    for (std::size_t u : us) {
      const auto& uc = cc[u];
      bool inside = true;
      for (int a = 0; a < 2 * n; ++a) {
        diff[a] = zc[a] - uc[a] + c;
        if (diff[a] < 0 || diff[a] >= zg.nz) {
          inside = false;
          break;
        }
      }
      if (!inside) continue;
      int m = 0;
      for (int q = 0; q < n; ++q) m += zc[n + q] * uc[q] - zc[q] * uc[n + q];
      acc.array() += K.slices.col(zg.flat(diff)).array() * G.col(u).array() * phase.col(m + span).array();
    }
    std::vector<cplx> in(nt), vals(nt);
    for (int j = 0; j < nt; ++j) in[j] = acc[j] * ((signed_frequency(j, nt) % 2 == 0) ? 1.0 : -1.0);
    Eigen::FFT<double> fft;
    fft.fwd(vals, in);
    for (auto& v : vals) v *= zg.cell() / (2.0 * tg.T);
    rows[i] = std::move(vals);
  });
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const std::size_t zi = dst[i] / nt;
    const auto pos = std::lower_bound(zs.begin(), zs.end(), zi) - zs.begin();
    out[i] = rows[pos][dst[i] % nt];
  }
  return out;
}

namespace {

// Runs over `cubes`: u_Q = K * (f chi_{base \ 3Q}) on Q, then the pointwise and
// cube-wise suprema of |u_Q|.
void maximal_pass(const TruncatedKernel& K, const CubeSystem& sys, const GridFunction& f,
                  const std::vector<CubeRef>& cubes, std::vector<double>& star, std::vector<double>& maximal) {
  const std::size_t P = sys.point_count();
  std::vector<std::size_t> support;
  for (std::size_t p = 0; p < P; ++p)
    if (f.values[p] != 0.0) support.push_back(p);
  std::vector<char> src(P, 0);
  for (const auto& q : cubes) {
    std::fill(src.begin(), src.end(), 0);
    bool any = false;
    for (std::size_t p : support)
      if (!sys.in_dilate(q, 3.0, p)) {
        src[p] = 1;
        any = true;
      }
    if (!any) continue;
    const auto& pts = sys.cube(q).points;
    const VecC u = apply_restricted(K, f, src, pts);
    double top = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double v = std::abs(u[i]);
      star[pts[i]] = std::max(star[pts[i]], v);
      top = std::max(top, v);
    }
    for (std::size_t p : pts) maximal[p] = std::max(maximal[p], top);
  }
}

}  // namespace

GrandMaximal grand_maximal(const TruncatedKernel& K, const CubeSystem& sys, const GridFunction& f) {
  const std::size_t P = sys.point_count();
  std::vector<double> star(P, 0.0), maximal(P, 0.0);
  std::vector<CubeRef> cubes;
  for (int j = sys.j_min; j <= sys.j_max; ++j)
    for (int i = 0; i < static_cast<int>(sys.levels[j - sys.j_min].size()); ++i) cubes.push_back({j, i});
  maximal_pass(K, sys, f, cubes, star, maximal);
  GrandMaximal out{GridFunction(f.zgrid, f.tgrid), GridFunction(f.zgrid, f.tgrid)};
  for (std::size_t p = 0; p < P; ++p) {
    out.star.values[p] = star[p];
    out.maximal.values[p] = maximal[p];
  }
  return out;
}

std::vector<double> local_grand_maximal(const TruncatedKernel& K, const CubeSystem& sys, CubeRef q0,
                                        const GridFunction& f) {
  const std::size_t P = sys.point_count();
  GridFunction g(f.zgrid, f.tgrid);
  for (std::size_t p : sys.dilate(q0, 3.0)) g.values[p] = f.values[p];
  std::vector<double> star(P, 0.0), maximal(P, 0.0);
  maximal_pass(K, sys, g, sys.descendants(q0), star, maximal);
  const auto& pts = sys.cube(q0).points;
  std::vector<double> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) out[i] = maximal[pts[i]];
  return out;
}

SparseRule truncated_rule(const TruncatedKernel& K, double alpha) {
  auto shared = std::make_shared<const TruncatedKernel>(K);
  SparseRule rule;
  rule.alpha = alpha;
  rule.maximal = [shared](const CubeSystem& sys, CubeRef q, const GridFunction& g) {
    return local_grand_maximal(*shared, sys, q, g);
  };
  return rule;
}

double cutoff_profile(double rho_value) {
  if (rho_value < 0.5) return 1.0;
  if (rho_value >= 1.0) return 0.0;
  const double s = (rho_value - 0.5) / 0.5;
  return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

std::pair<TruncatedKernel, TruncatedKernel> split_kernel(const TruncatedKernel& K) {
  GridFunction k1 = K.kernel, k2 = K.kernel;
  const ZGrid& zg = K.kernel.zgrid;
  const TGrid& tg = K.kernel.tgrid;
  for (std::size_t zi = 0; zi < zg.count(); ++zi) {
    const auto z = zg.point(zi);
    for (int k = 0; k < tg.nt; ++k) {
      const double phi = cutoff_profile(rho(HPoint{z, tg.node(k)}));
      k1.at(zi, k) *= phi;
      k2.at(zi, k) *= 1.0 - phi;
    }
  }
  return {make_truncated_kernel(k1, K.N), make_truncated_kernel(k2, K.N)};
}

// ------------------------------------------------------------------ experiments

FittedConstant fitted_constant(const std::vector<int>& N, const std::vector<double>& C) {
  FittedConstant fc{N, C, 0.0, false};
  if (C.empty()) return fc;
  const double lo = *std::min_element(C.begin(), C.end());
  const double hi = *std::max_element(C.begin(), C.end());
  fc.spread = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  fc.pass = std::isfinite(fc.spread) && fc.spread <= 2.0;
  return fc;
}

namespace {

double max_ratio(const VecC& num, const VecC& den) {
  double best = 0.0;
  for (Eigen::Index i = 0; i < num.size(); ++i) {
    const double d = std::abs(den[i]), v = std::abs(num[i]);
    if (d > 0.0) best = std::max(best, v / d);
  }
  return best;
}

}  // namespace

PointwiseBoundReport pointwise_bound_experiment(const HermiteSymbol& M, const CubeSystem& sys, const GridFunction& f,
                                                const std::vector<int>& Ns) {
  const GridFunction l2f = maximal_function(sys, f, 2);
  const GridFunction ll2f = maximal_function(sys, l2f, 1);
  std::vector<double> cs, cm;
  for (int N : Ns) {
    const auto K = truncated_kernel(M, N, f.zgrid, f.tgrid);
    const GridFunction tf = truncated_operator(K, f);
    const GridFunction ltf = maximal_function(sys, tf, 1);
    const auto gm = grand_maximal(K, sys, f);
    cs.push_back(max_ratio(gm.star.values, ltf.values + l2f.values + ll2f.values));
    cm.push_back(max_ratio(gm.maximal.values, l2f.values + gm.star.values));
  }
  return {fitted_constant(Ns, cs), fitted_constant(Ns, cm)};
}

WeakTypeReport weak_type_experiment(const HermiteSymbol& M, const CubeSystem& sys, const GridFunction& f,
                                    const std::vector<int>& Ns, int levels) {
  WeakTypeReport rep;
  const double f2 = std::pow(f.l2_norm(), 2);
  std::vector<double> cs;
  for (int N : Ns) {
    const auto K = truncated_kernel(M, N, f.zgrid, f.tgrid);
    const auto star = grand_maximal(K, sys, f).star.values.cwiseAbs();
    const double top = star.maxCoeff();
    std::vector<std::pair<double, double>> sweep;
    double c = 0.0;
    for (int i = 1; i <= levels; ++i) {
      const double level = top * std::pow(2.0, -0.5 * i);
      const double mu = (star.array() > level).count() * f.weight();
      sweep.emplace_back(level, mu);
      if (f2 > 0.0) c = std::max(c, level * level * mu / f2);
    }
    rep.sweeps.push_back(sweep);
    cs.push_back(c);
  }
  rep.constant = fitted_constant(Ns, cs);
  return rep;
}

OscillationReport oscillation_experiment(const HermiteSymbol& M, const CubeSystem& sys, const GridFunction& f,
                                         const std::vector<int>& Ns, int level) {
  OscillationReport rep;
  const GridFunction l2f = maximal_function(sys, f, 2);
  const std::size_t P = sys.point_count();
  std::vector<std::size_t> support;
  for (std::size_t p = 0; p < P; ++p)
    if (f.values[p] != 0.0) support.push_back(p);
  std::vector<double> cn, cf;
  for (int N : Ns) {
    const auto [K1, K2] = split_kernel(truncated_kernel(M, N, f.zgrid, f.tgrid));
    double near = 0.0, far = 0.0;
    int sampled = 0;
    const auto& lev = sys.levels[level - sys.j_min];
    for (int i = 0; i < static_cast<int>(lev.size()); ++i) {
      const CubeRef q{level, i};
      std::vector<char> src(P, 0);
      bool any = false;
      for (std::size_t p : support)
        if (!sys.in_dilate(q, 3.0, p)) src[p] = any = 1;
      if (!any) continue;
      ++sampled;
      std::vector<std::size_t> pts = lev[i].points;
      pts.push_back(lev[i].center);
      const VecC u1 = apply_restricted(K1, f, src, pts);
      const VecC u2 = apply_restricted(K2, f, src, pts);
      const double base = std::abs(l2f.values[lev[i].center]);
      for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        if (base > 0.0) near = std::max(near, std::abs(u1[k] - u1[pts.size() - 1]) / base);
        const double lp = std::abs(l2f.values[pts[k]]);
        if (lp > 0.0) far = std::max(far, std::abs(u2[k]) / lp);
      }
    }
    rep.cubes_sampled = sampled;
    cn.push_back(near);
    cf.push_back(far);
  }
  rep.near = fitted_constant(Ns, cn);
  rep.far = fitted_constant(Ns, cf);
  return rep;
}

SparseDominationReport sparse_domination_experiment(const TruncatedKernel& K, const CubeSystem& sys, CubeRef q0,
                                                    const std::vector<GridFunction>& fs, double alpha) {
  SparseDominationReport rep;
  if (fs.size() < 2) throw std::invalid_argument("sparse_domination_experiment: need a calibration and a held-out function");
  const auto rule = truncated_rule(K, alpha);
  const std::size_t P = sys.point_count();
  std::vector<char> src(P, 0);
  for (std::size_t p : sys.dilate(q0, 3.0)) src[p] = 1;
  const auto& pts = sys.cube(q0).points;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const VecC lhs = apply_restricted(K, fs[i], src, pts);
    const auto fam = build_sparse_family(sys, fs[i], q0, rule);
    const GridFunction bound = sparse_bound(sys, fam);
    VecC rhs(pts.size());
    for (std::size_t k = 0; k < pts.size(); ++k) rhs[k] = bound.values[pts[k]];
    const double ratio = max_ratio(lhs, rhs);
    rep.family_sizes.push_back(static_cast<int>(fam.cubes.size()));
    if (i == 0)
      rep.C = ratio;
    else
      rep.held_out.push_back(ratio);
  }
  for (double r : rep.held_out) rep.worst = std::max(rep.worst, rep.C > 0.0 ? r / rep.C : 0.0);
  rep.pass = rep.C > 0.0 && rep.worst <= 2.0;
  return rep;
}

WeightedNormReport weighted_norm_experiment(const TruncatedKernel& K, const CubeSystem& sys,
                                            const std::vector<double>& eps, double p,
                                            const std::vector<GridFunction>& fs) {
  if (!(p > 2.0)) throw Unsupported("weighted_norm_experiment: requires p > 2");
  WeightedNormReport rep;
  rep.p = p;
  rep.exponent_literal = std::max(1.0, 1.0 / (p - 2.0));
  rep.exponent_half = std::max(0.5, 1.0 / (p - 2.0));
  std::vector<GridFunction> tfs;
  for (const auto& f : fs) tfs.push_back(truncated_operator(K, f));
  rep.finite = true;
  for (double e : eps) {
    const Weight w = power_weight(sys.zgrid, sys.tgrid, e);
    WeightedRow row;
    row.eps = e;
    row.characteristic = ap_characteristic(sys, w, p / 2.0);
    for (std::size_t i = 0; i < fs.size(); ++i)
      row.ratio = std::max(row.ratio, weighted_lp_norm(tfs[i], w, p) / weighted_lp_norm(fs[i], w, p));
    rep.c_literal = std::max(rep.c_literal, row.ratio / std::pow(row.characteristic, rep.exponent_literal));
    rep.c_half = std::max(rep.c_half, row.ratio / std::pow(row.characteristic, rep.exponent_half));
    rep.finite = rep.finite && std::isfinite(row.ratio) && std::isfinite(row.characteristic);
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace hh
