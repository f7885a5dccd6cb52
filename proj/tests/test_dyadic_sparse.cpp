#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hh/dyadic_sparse.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

using namespace hh;

namespace {

// [-1,1]^2 x [-1,1), three levels.
const CubeSystem& unit_system() {
  static const CubeSystem sys = build_cube_system(ZGrid(1, 17, 1.0), TGrid(64, 1.0), 0, 2, 0.5);
  return sys;
}

// Small grid resolving T^N for N <= 3; 3Q covers the region.
const CubeSystem& small_system() {
  static const CubeSystem sys = build_cube_system(ZGrid(1, 9, 1.0), TGrid(32, 1.0), 1, 3, 0.5);
  return sys;
}

// Resolves T^N for N <= 5; the finest 3Q leave part of the region outside.
const CubeSystem& mid_system() {
  static const CubeSystem sys = build_cube_system(ZGrid(1, 17, 1.0), TGrid(128, 1.0), 2, 4, 0.5);
  return sys;
}

double independent_distance(const CubeSystem& sys, std::size_t p, std::size_t q) {
  return std::pow(rho(group_mul(group_inv(sys.point(q)), sys.point(p))), 0.25);
}

double max_abs(const VecC& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

GridFunction random_function(const ZGrid& zg, const TGrid& tg, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  GridFunction f(zg, tg);
  for (auto& v : f.values) v = cplx(nd(rng), nd(rng));
  return f;
}

CubeRef origin_cube(const CubeSystem& sys, int level) {
  const std::size_t origin = sys.zgrid.count() / 2 * sys.tgrid.nt + sys.tgrid.nt / 2;
  return {level, sys.label[level - sys.j_min][origin]};
}

// Sum over lattice offsets of the worst twisted l^1 norm of the kernel's t-circulant:
// a Schur bound for the discrete convolution on every L^p.
double schur_bound(const GridFunction& k) {
  const ZGrid& zg = k.zgrid;
  const TGrid& tg = k.tgrid;
  const int nt = tg.nt, c = (zg.nz - 1) / 2, span = 2 * zg.n * c * c;
  const double h = zg.spacing();
  Eigen::FFT<double> fft;
  double total = 0.0;
  for (std::size_t d = 0; d < zg.count(); ++d) {
    std::vector<cplx> row(nt), spec, back;
    for (int j = 0; j < nt; ++j) row[j] = k.at(d, j);
    fft.fwd(spec, row);
    double worst = 0.0;
    for (int m = -span; m <= span; ++m) {
      std::vector<cplx> s = spec;
      for (int j = 0; j < nt; ++j) {
        const int sj = j < nt / 2 ? j : j - nt;
        s[j] *= std::polar(1.0, tg.frequency(sj) * 0.5 * h * h * m);
      }
      fft.inv(back, s);
      double l1 = 0.0;
      for (const auto& v : back) l1 += std::abs(v);
      worst = std::max(worst, l1 * tg.spacing());
    }
    total += worst * zg.cell();
  }
  return total;
}

}  // namespace

TEST_CASE("cube system on the unit region") {
  const auto& sys = unit_system();
  auto rep = verify_cube_system(sys);
  CHECK(rep.covering);
  CHECK(rep.nesting);
  CHECK(rep.parents);
  CHECK(rep.inner_ball);
  CHECK(rep.a <= 8.0);
  CHECK(rep.coverage_defect <= 0.005);
  CHECK(rep.pass);
  CHECK(rep.cubes_per_level.size() == 3);

  const std::size_t P = sys.point_count();
  // the distance against the group law
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<std::size_t> pick(0, P - 1);
  for (int i = 0; i < 200; ++i) {
    const auto p = pick(rng), q = pick(rng);
    CHECK(std::abs(sys.distance(p, q) - independent_distance(sys, p, q)) <= 1e-14);
  }

  // each level partitions the grid; finer cells are inside or disjoint from coarser ones
  std::vector<std::vector<int>> owner(sys.level_count(), std::vector<int>(P, -1));
  for (int l = 0; l < sys.level_count(); ++l)
    for (int i = 0; i < static_cast<int>(sys.levels[l].size()); ++i)
      for (std::size_t p : sys.levels[l][i].points) {
        CHECK(owner[l][p] == -1);
        owner[l][p] = i;
      }
  for (int l = 0; l < sys.level_count(); ++l) CHECK(std::count(owner[l].begin(), owner[l].end(), -1) == 0);
  for (int l = 1; l < sys.level_count(); ++l)
    for (const auto& q : sys.levels[l]) {
      std::set<int> above;
      for (std::size_t p : q.points) above.insert(owner[l - 1][p]);
      CHECK(above.size() == 1);
      CHECK(*above.begin() == q.parent);
    }

  // sandwich radii by a direct scan
  double a = 0.0, b = 1e300;
  for (int l = 0; l < sys.level_count(); ++l) {
    const int j = sys.j_min + l;
    for (int i = 0; i < static_cast<int>(sys.levels[l].size()); ++i) {
      const auto& q = sys.levels[l][i];
      double outer = 0.0, inner = 1e300;
      for (std::size_t p = 0; p < P; ++p) {
        const double d = independent_distance(sys, p, q.center);
        if (owner[l][p] == i)
          outer = std::max(outer, d);
        else
          inner = std::min(inner, d);
      }
      a = std::max(a, outer / sys.scale(j));
      b = std::min(b, inner / sys.scale(j));
    }
  }
  CHECK(std::abs(a - sys.a) <= 1e-12);
  CHECK(b >= 1.0);
  CHECK(std::abs(b - sys.b) <= 1e-12);

  // descendants and dilates
  const auto all = sys.descendants({0, 0});
  std::size_t expected = 0;
  for (const auto& lev : sys.levels) expected += lev.size();
  if (sys.levels[0].size() == 1) CHECK(all.size() == expected);
  const CubeRef q{1, 0};
  for (std::size_t p : sys.dilate(q, 3.0))
    CHECK(independent_distance(sys, p, sys.cube(q).center) < 3.0 * sys.a * sys.scale(1));
  for (std::size_t p : sys.cube(q).points) CHECK(sys.in_dilate(q, 1.0 + 1e-12, p));
}

TEST_CASE("cube system construction is deterministic and rejects coarse grids") {
  auto a = build_cube_system(ZGrid(1, 9, 1.0), TGrid(32, 1.0), 1, 3, 0.5);
  auto b = build_cube_system(ZGrid(1, 9, 1.0), TGrid(32, 1.0), 1, 3, 0.5);
  CHECK(a.label == b.label);
  CHECK(a.a == b.a);
  CHECK_THROWS_AS(build_cube_system(ZGrid(1, 9, 1.0), TGrid(32, 1.0), 1, 6, 0.5), ResolutionError);
  CHECK_THROWS_AS(build_cube_system(ZGrid(1, 65, 1.0), TGrid(8, 1.0), 0, 3, 0.5), ResolutionError);
  CHECK_THROWS(build_cube_system(ZGrid(1, 9, 1.0), TGrid(32, 1.0), 1, 3, 1.5));
  CHECK_THROWS(build_cube_system(ZGrid(1, 9, 1.0), TGrid(32, 1.0), 3, 1, 0.5));
}

TEST_CASE("test functions") {
  ZGrid zg(1, 17, 1.0);
  TGrid tg(64, 1.0);
  auto f = smooth_test_function(zg, tg, 5);
  auto g = smooth_test_function(zg, tg, 5);
  CHECK(f.values == g.values);
  CHECK(f.l2_norm() > 0.0);
  CHECK(f.values.imag().cwiseAbs().maxCoeff() == 0.0);
  CHECK(shell_mass_fraction(f) == 0.0);
}

TEST_CASE("maximal functions") {
  const auto& sys = unit_system();
  GridFunction c(sys.zgrid, sys.tgrid);
  c.values.setConstant(cplx(-2.5, 0.0));
  for (int order : {1, 2}) {
    auto m = maximal_function(sys, c, order);
    CHECK((m.values.array() - 2.5).abs().maxCoeff() <= 1e-14);
  }
  for (std::uint64_t seed : {1u, 2u}) {
    auto f = random_function(sys.zgrid, sys.tgrid, seed);
    auto l1 = maximal_function(sys, f, 1);
    auto l2 = maximal_function(sys, f, 2);
    for (Eigen::Index p = 0; p < f.values.size(); ++p) {
      CHECK(l1.values[p].real() >= std::abs(f.values[p]));
      CHECK(l2.values[p].real() >= l1.values[p].real() * (1.0 - 1e-14));
    }
    // brute-force sup over the cubes containing each point, the region and the point itself
    std::vector<double> ref(sys.point_count());
    double whole = 0.0;
    for (Eigen::Index p = 0; p < f.values.size(); ++p) whole += std::abs(f.values[p]);
    whole /= f.values.size();
    for (std::size_t p = 0; p < ref.size(); p += 5) {
      ref[p] = std::max(std::abs(f.values[p]), whole);
      for (int l = 0; l < sys.level_count(); ++l) {
        const auto& q = sys.levels[l][sys.label[l][p]];
        double s = 0.0;
        for (std::size_t u : q.points) s += std::abs(f.values[u]);
        ref[p] = std::max(ref[p], s / q.points.size());
      }
      CHECK(std::abs(l1.values[p].real() - ref[p]) <= 1e-13 * ref[p]);
    }
  }
  CHECK_THROWS(maximal_function(sys, c, 3));
}

TEST_CASE("A_p characteristic") {
  const auto& sys = unit_system();
  for (double p : {1.5, 2.0, 3.0, 4.0}) {
    CHECK(ap_characteristic(sys, constant_weight(sys.zgrid, sys.tgrid, 1.0), p) == 1.0);
    CHECK(std::abs(ap_characteristic(sys, constant_weight(sys.zgrid, sys.tgrid, 7.3), p) - 1.0) <= 1e-14);
  }
  const auto w = power_weight(sys.zgrid, sys.tgrid, 0.1);
  CHECK(w.values.minCoeff() > 0.0);
  double prev = 1e300;
  for (double p : {2.0, 3.0, 4.0}) {
    const double c = ap_characteristic(sys, w, p);
    CHECK(std::isfinite(c));
    CHECK(c >= 1.0);
    CHECK(c <= prev * (1.0 + 1e-12));
    prev = c;
  }
  // away from the origin the cell average is close to the point value
  const std::size_t zi = sys.zgrid.flat({14, 3});
  const double pv = std::pow(rho(HPoint{sys.zgrid.point(zi), sys.tgrid.node(50)}), 0.1);
  CHECK(std::abs(w.values[zi * sys.tgrid.nt + 50] - pv) <= 1e-3 * pv);
  CHECK(power_weight(sys.zgrid, sys.tgrid, 0.0).values.cwiseAbs().minCoeff() == 1.0);
  CHECK_THROWS_AS(ap_characteristic(sys, w, 1.0), Unsupported);
  CHECK_THROWS_AS(ap_characteristic(sys, w, 0.5), Unsupported);
  CHECK_THROWS(constant_weight(sys.zgrid, sys.tgrid, 0.0));

  GridFunction f(sys.zgrid, sys.tgrid);
  f.values.setConstant(2.0);
  const double volume = sys.point_count() * sys.cell_measure();
  CHECK(weighted_lp_norm(f, constant_weight(sys.zgrid, sys.tgrid, 1.0), 3.0) ==
        doctest::Approx(2.0 * std::cbrt(volume)).epsilon(1e-13));
}

TEST_CASE("sparse operators") {
  const auto& sys = unit_system();
  const CubeRef q{2, 3}, r{2, 5};
  GridFunction chi(sys.zgrid, sys.tgrid);
  for (std::size_t p : sys.cube(q).points) chi.values[p] = 1.0;

  SparseFamily one;
  one.cubes.push_back({q, 0, -1, 0.0});
  one.generations.push_back({0});
  CHECK((sparse_operator(sys, one, 2, chi).values - chi.values).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((sparse_operator(sys, one, 1, chi).values - chi.values).cwiseAbs().maxCoeff() <= 1e-15);

  // two disjoint cubes: f = 3 on q and 2 - 2 i on half of r
  GridFunction f(sys.zgrid, sys.tgrid);
  for (std::size_t p : sys.cube(q).points) f.values[p] = 3.0;
  const auto& rp = sys.cube(r).points;
  for (std::size_t i = 0; i < rp.size(); i += 2) f.values[rp[i]] = cplx(2.0, -2.0);
  const double share = double((rp.size() + 1) / 2) / rp.size();
  SparseFamily two = one;
  two.cubes.push_back({r, 0, -1, 0.0});
  two.generations[0].push_back(1);
  auto s1 = sparse_operator(sys, two, 1, f);
  auto s2 = sparse_operator(sys, two, 2, f);
  for (std::size_t p = 0; p < sys.point_count(); ++p) {
    double e1 = 0.0, e2 = 0.0;
    if (sys.label[2][p] == q.index) e1 = e2 = 3.0;
    if (sys.label[2][p] == r.index) {
      e1 = std::sqrt(8.0) * share;
      e2 = std::sqrt(8.0 * share);
    }
    CHECK(std::abs(s1.values[p] - e1) <= 1e-14);
    CHECK(std::abs(s2.values[p] - e2) <= 1e-14);
  }

  CHECK_THROWS(sparse_operator(sys, two, 3, f));
}

TEST_CASE("sparse operators of a built family") {
  const auto& sys = mid_system();
  auto g = smooth_test_function(sys.zgrid, sys.tgrid, 2);
  auto fam = build_sparse_family(sys, g, origin_cube(sys, sys.j_min), SparseRule{});
  CHECK(fam.cubes.size() > 1);
  // per-cube averages, then per-point sums over the cubes containing the point
  std::vector<double> avg1, avg2, avg3q;
  for (const auto& sc : fam.cubes) {
    const auto& pts = sys.cube(sc.cube).points;
    double s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (std::size_t u : pts) {
      s1 += std::abs(g.values[u]);
      s2 += std::norm(g.values[u]);
    }
    const auto big = sys.dilate(sc.cube, 3.0);
    for (std::size_t u : big) s3 += std::norm(g.values[u]);
    avg1.push_back(s1 / pts.size());
    avg2.push_back(std::sqrt(s2 / pts.size()));
    avg3q.push_back(std::sqrt(s3 / big.size()));
  }
  const auto a1 = sparse_operator(sys, fam, 1, g), a2 = sparse_operator(sys, fam, 2, g);
  const auto sb = sparse_bound(sys, fam);
  for (std::size_t p = 0; p < sys.point_count(); ++p) {
    double r1 = 0.0, r2 = 0.0, r3 = 0.0;
    for (std::size_t i = 0; i < fam.cubes.size(); ++i) {
      const auto& pts = sys.cube(fam.cubes[i].cube).points;
      if (!std::binary_search(pts.begin(), pts.end(), p)) continue;
      r1 += avg1[i];
      r2 += avg2[i];
      r3 += avg3q[i];
    }
    CHECK(std::abs(a1.values[p] - r1) <= 1e-12 * std::max(1.0, r1));
    CHECK(std::abs(a2.values[p] - r2) <= 1e-12 * std::max(1.0, r2));
    CHECK(std::abs(sb.values[p] - r3) <= 1e-12 * std::max(1.0, r3));
  }
}

TEST_CASE("sparse families") {
  const auto& sys = mid_system();
  const CubeRef q0 = origin_cube(sys, sys.j_min);
  GridFunction zero(sys.zgrid, sys.tgrid);
  auto empty = build_sparse_family(sys, zero, q0, SparseRule{});
  CHECK(empty.cubes.size() == 1);
  CHECK(empty.generations.size() == 1);
  CHECK(verify_sparse_family(sys, empty).pass);

  const double bound = std::ldexp(1.0, -(2 * sys.zgrid.n + 4));
  int nontrivial = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto f = smooth_test_function(sys.zgrid, sys.tgrid, seed);
    for (double alpha : {2.0, 4.0}) {
      auto fam = build_sparse_family(sys, f, q0, SparseRule{alpha, 12, nullptr});
      nontrivial += fam.cubes.size() > 1;
      auto rep = verify_sparse_family(sys, fam);
      CHECK(rep.disjoint);
      CHECK(rep.nested);
      CHECK(rep.half_measure_max <= 0.5);
      CHECK(rep.first_generation_ratio <= 0.5);
      CHECK(rep.pass);
      CHECK(fam.alpha >= alpha);
      // half measure from the point sets, per selected cube
      for (std::size_t i = 0; i < fam.cubes.size(); ++i) {
        std::set<std::size_t> kids;
        for (std::size_t k = 0; k < fam.cubes.size(); ++k)
          if (fam.cubes[k].parent == static_cast<int>(i))
            for (std::size_t p : sys.cube(fam.cubes[k].cube).points) kids.insert(p);
        const auto& pts = sys.cube(fam.cubes[i].cube).points;
        for (std::size_t p : kids) CHECK(std::binary_search(pts.begin(), pts.end(), p));
        CHECK(2 * kids.size() <= pts.size());
      }
      // the exceptional set of Q0 at the final alpha is small
      const double A = fam.cubes[0].local_average;
      std::size_t e = 0;
      for (std::size_t p : sys.cube(q0).points) e += std::abs(f.values[p]) > fam.alpha * A * (1 + 1e-12);
      CHECK(e <= bound * sys.cube(q0).points.size());
    }
  }
  CHECK(nontrivial >= 3);
  auto capped = build_sparse_family(sys, smooth_test_function(sys.zgrid, sys.tgrid, 2), q0, SparseRule{2.0, 0, nullptr});
  CHECK(capped.cubes.size() == 1);
  CHECK(capped.truncated);

  // with the grand maximal function in the exceptional set
  const auto K = truncated_kernel(identity_symbol(), 3, sys.zgrid, sys.tgrid);
  auto f = smooth_test_function(sys.zgrid, sys.tgrid, 1);
  auto fam = build_sparse_family(sys, f, q0, truncated_rule(K));
  CHECK(verify_sparse_family(sys, fam).pass);
  CHECK(fam.cubes.size() > 1);
}

TEST_CASE("truncated operators against the telescoped heat kernels") {
  ZGrid zg(1, 17, 1.0);
  TGrid tg(256, 1.0);
  auto f = smooth_test_function(zg, tg, 2);
  const auto top = approximate_identity(0.5, zg, tg);
  for (int N : {2, 4, 6}) {
    const auto tf = truncated_operator(identity_symbol(), N, f);
    GridFunction k = approximate_identity(std::ldexp(1.0, -N - 1), zg, tg);
    k.values -= top.values;
    const auto ref = convolve(k, f);
    CHECK(max_abs(tf.values - ref.values) <= 1e-6 * max_abs(ref.values));
  }
  // The band norms ||psi_{2^-N-1} * f|| fall once 2^-N is below the bump scale; three
  // radius-0.6 bumps near the origin and N = 4..7, which needs the finer t-grid.
  {
    const TGrid fine(512, 1.0);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-0.1, 0.1);
    std::vector<std::pair<HPoint, double>> bumps;
    for (int i = 0; i < 3; ++i) {
      HPoint c{{cplx(u(rng), u(rng))}, u(rng)};
      bumps.push_back({c, 10 * u(rng)});
    }
    auto g = GridFunction::sample(zg, fine, [&](const std::vector<cplx>& z, double t) {
      double v = 0.0;
      for (const auto& [c, amp] : bumps) {
        const double q = rho(group_mul(group_inv(c), HPoint{z, t})) / std::pow(0.6, 4);
        if (q < 1.0) v += amp * std::exp(1.0 - 1.0 / (1.0 - q));
      }
      return cplx(v, 0.0);
    });
    std::vector<GridFunction> tn;
    for (int N = 4; N <= 7; ++N) tn.push_back(truncated_operator(identity_symbol(), N, g));
    double prev = 1e300;
    for (std::size_t i = 1; i < tn.size(); ++i) {
      GridFunction d = tn[i];
      d.values -= tn[i - 1].values;
      const double v = d.l2_norm();
      CHECK(v > 0.0);
      CHECK(v < prev);
      prev = v;
    }
  }
  GridFunction zero(zg, tg);
  CHECK(max_abs(truncated_operator(identity_symbol(), 3, zero).values) == 0.0);
  CHECK_THROWS_AS(truncated_operator(identity_symbol(), 7, f), ResolutionError);
  CHECK_THROWS_AS(check_truncation_resolution(4, ZGrid(1, 9, 1.0), TGrid(32, 1.0)), ResolutionError);
  CHECK_NOTHROW(check_truncation_resolution(3, ZGrid(1, 9, 1.0), TGrid(32, 1.0)));
  CHECK_THROWS(check_truncation_resolution(0, zg, tg));
}

TEST_CASE("restricted application and the grand maximal function") {
  const auto& sys = mid_system();
  const auto K = truncated_kernel(identity_symbol(), 3, sys.zgrid, sys.tgrid);
  auto f = smooth_test_function(sys.zgrid, sys.tgrid, 1);
  const std::size_t P = sys.point_count();

  // against the full convolution of the masked function
  std::mt19937_64 rng(5);
  std::bernoulli_distribution coin(0.4);
  std::vector<char> src(P);
  for (auto& s : src) s = coin(rng);
  GridFunction masked(sys.zgrid, sys.tgrid);
  for (std::size_t p = 0; p < P; ++p)
    if (src[p]) masked.values[p] = f.values[p];
  const auto full = convolve(K.kernel, masked);
  std::vector<std::size_t> dst;
  for (std::size_t p = 0; p < P; p += 7) dst.push_back(p);
  const auto part = apply_restricted(K, f, src, dst);
  double err = 0.0;
  for (std::size_t i = 0; i < dst.size(); ++i) err = std::max(err, std::abs(part[i] - full.values[dst[i]]));
  CHECK(err <= 1e-12 * max_abs(full.values));

  GridFunction zero(sys.zgrid, sys.tgrid);
  auto gz = grand_maximal(K, sys, zero);
  CHECK(max_abs(gz.star.values) == 0.0);
  CHECK(max_abs(gz.maximal.values) == 0.0);

  auto gm = grand_maximal(K, sys, f);
  const double scale = max_abs(gm.maximal.values);
  CHECK(scale > 0.0);
  for (std::size_t p = 0; p < P; ++p) CHECK(gm.star.values[p].real() <= gm.maximal.values[p].real());

  // at sampled points: sup over the containing cubes of K * (f outside 3Q), by full convolutions
  std::vector<std::size_t> probes;
  for (std::size_t p = 0; p < P; ++p)
    if (gm.star.values[p].real() > 0.5 * max_abs(gm.star.values) && probes.size() < 3) probes.push_back(p);
  std::uniform_int_distribution<std::size_t> pick(0, P - 1);
  for (int i = 0; i < 3; ++i) probes.push_back(pick(rng));
  for (std::size_t p : probes) {
    double star = 0.0, maximal = 0.0;
    for (int l = 0; l < sys.level_count(); ++l) {
      const CubeRef q{sys.j_min + l, sys.label[l][p]};
      GridFunction outside(sys.zgrid, sys.tgrid);
      for (std::size_t u = 0; u < P; ++u)
        if (independent_distance(sys, u, sys.cube(q).center) >= 3.0 * sys.a * sys.scale(q.level))
          outside.values[u] = f.values[u];
      const auto u = convolve(K.kernel, outside);
      star = std::max(star, std::abs(u.values[p]));
      for (std::size_t v : sys.cube(q).points) maximal = std::max(maximal, std::abs(u.values[v]));
    }
    CHECK(std::abs(gm.star.values[p].real() - star) <= 1e-10 * scale);
    CHECK(std::abs(gm.maximal.values[p].real() - maximal) <= 1e-10 * scale);
  }

  // the local version sees only f chi_{3Q0} and the cubes below Q0
  const CubeRef q0 = origin_cube(sys, sys.j_min);
  const auto loc = local_grand_maximal(K, sys, q0, f);
  CHECK(loc.size() == sys.cube(q0).points.size());
  for (double v : loc) CHECK(v >= 0.0);
  const auto loc_zero = local_grand_maximal(K, sys, q0, zero);
  for (double v : loc_zero) CHECK(v == 0.0);
}

TEST_CASE("kernel cutoff") {
  CHECK(cutoff_profile(0.0) == 1.0);
  CHECK(cutoff_profile(0.49) == 1.0);
  CHECK(cutoff_profile(1.0) == 0.0);
  CHECK(cutoff_profile(3.0) == 0.0);
  CHECK(cutoff_profile(0.75) == doctest::Approx(0.5).epsilon(1e-15));
  double prev = 1.0;
  for (int i = 0; i <= 1000; ++i) {
    const double v = cutoff_profile(0.5 + 0.5 * i / 1000.0);
    CHECK(v <= prev);
    CHECK(v >= 0.0);
    prev = v;
  }
  // first and second derivatives vanish at both ends
  for (double x : {0.5, 1.0}) {
    const double e = 1e-4;
    CHECK(std::abs(cutoff_profile(x + e) - cutoff_profile(x - e)) <= 1e-10);
    CHECK(std::abs(cutoff_profile(x + e) - 2 * cutoff_profile(x) + cutoff_profile(x - e)) <= 1e-10);
  }
  const auto& sys = small_system();
  const auto K = truncated_kernel(identity_symbol(), 2, sys.zgrid, sys.tgrid);
  const auto [k1, k2] = split_kernel(K);
  CHECK(max_abs(k1.kernel.values + k2.kernel.values - K.kernel.values) <= 1e-15 * max_abs(K.kernel.values));
  for (std::size_t zi = 0; zi < sys.zgrid.count(); ++zi)
    for (int k = 0; k < sys.tgrid.nt; ++k)
      if (rho(HPoint{sys.zgrid.point(zi), sys.tgrid.node(k)}) >= 1.0) CHECK(k1.kernel.at(zi, k) == 0.0);
}

TEST_CASE("fitted constants") {
  auto fc = fitted_constant({2, 4, 6}, {1.0, 1.5, 2.0});
  CHECK(fc.spread == 2.0);
  CHECK(fc.pass);
  CHECK_FALSE(fitted_constant({2, 4}, {1.0, 2.5}).pass);
  CHECK_FALSE(fitted_constant({2, 4}, {0.0, 1.0}).pass);
}

TEST_CASE("experiments run") {
  const auto& sys = mid_system();
  auto f = smooth_test_function(sys.zgrid, sys.tgrid, 1);

  auto wt = weak_type_experiment(identity_symbol(), sys, f, {2, 4}, 8);
  REQUIRE(wt.sweeps.size() == 2);
  for (const auto& sweep : wt.sweeps) {
    REQUIRE(sweep.size() == 8);
    for (std::size_t i = 1; i < sweep.size(); ++i) {
      CHECK(sweep[i].first < sweep[i - 1].first);
      CHECK(sweep[i].second >= sweep[i - 1].second);
    }
  }
  for (double c : wt.constant.C) CHECK(c >= 0.0);

  auto pb = pointwise_bound_experiment(identity_symbol(), sys, f, {2, 4});
  CHECK(pb.star.C.size() == 2);
  for (double c : pb.maximal.C) CHECK(c > 0.0);
  for (double c : pb.star.C) CHECK(std::isfinite(c));

  auto osc = oscillation_experiment(identity_symbol(), sys, f, {2, 4}, sys.j_max);
  CHECK(osc.near.C.size() == 2);
  CHECK(osc.cubes_sampled > 0);

  // the calibration constant dominates the calibration function by definition
  const auto K = truncated_kernel(identity_symbol(), 3, sys.zgrid, sys.tgrid);
  const CubeRef q0 = origin_cube(sys, sys.j_min);
  std::vector<GridFunction> fs;
  for (std::uint64_t s = 1; s <= 3; ++s) fs.push_back(smooth_test_function(sys.zgrid, sys.tgrid, s));
  auto sd = sparse_domination_experiment(K, sys, q0, fs);
  CHECK(sd.C > 0.0);
  CHECK(sd.held_out.size() == 2);
  CHECK(sd.family_sizes.size() == 3);
  for (int sz : sd.family_sizes) CHECK(sz >= 1);
  CHECK_THROWS(sparse_domination_experiment(K, sys, q0, {fs[0]}));
}

TEST_CASE("weighted norm experiment") {
  const auto& sys = small_system();
  const auto K = truncated_kernel(identity_symbol(), 3, sys.zgrid, sys.tgrid);
  std::vector<GridFunction> fs;
  for (std::uint64_t s = 1; s <= 3; ++s) fs.push_back(smooth_test_function(sys.zgrid, sys.tgrid, s));
  auto rep = weighted_norm_experiment(K, sys, {0.0, 0.1, 0.2, 0.3}, 4.0, fs);
  CHECK(rep.finite);
  CHECK(rep.exponent_literal == 1.0);
  CHECK(rep.exponent_half == 0.5);
  REQUIRE(rep.rows.size() == 4);
  CHECK(rep.rows[0].characteristic == 1.0);

  // w = 1: the plain L^4 ratio
  double plain = 0.0;
  for (const auto& f : fs) {
    const auto tf = truncated_operator(K, f);
    auto lp = [](const GridFunction& g) {
      double s = 0.0;
      for (const auto& v : g.values) s += std::pow(std::abs(v), 4);
      return std::pow(s * g.weight(), 0.25);
    };
    plain = std::max(plain, lp(tf) / lp(f));
  }
  CHECK(rep.rows[0].ratio == doctest::Approx(plain).epsilon(1e-12));

  // convolution with a fixed kernel: bounded by its Schur constant, and by the
  // weight oscillation for any weight
  const double schur = schur_bound(K.kernel);
  CHECK(rep.rows[0].ratio <= schur * (1.0 + 1e-9));
  for (const auto& row : rep.rows) {
    const auto w = power_weight(sys.zgrid, sys.tgrid, row.eps);
    const double osc = std::pow(w.values.maxCoeff() / w.values.minCoeff(), 0.25);
    CHECK(row.ratio <= schur * osc * (1.0 + 1e-9));
    CHECK(row.ratio <= rep.c_literal * std::pow(row.characteristic, rep.exponent_literal) * (1 + 1e-12));
    CHECK(row.ratio <= rep.c_half * std::pow(row.characteristic, rep.exponent_half) * (1 + 1e-12));
  }
  CHECK_THROWS_AS(weighted_norm_experiment(K, sys, {0.0}, 2.0, fs), Unsupported);
}
