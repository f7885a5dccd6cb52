#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hh/heat_laguerre.hpp"

#include <boost/math/special_functions/laguerre.hpp>

#include <cmath>
#include <random>

using namespace hh;

namespace {

HermiteSymbol symbol(std::function<cplx(int, double)> a) {
  HermiteSymbol s;
  s.a = std::move(a);
  return s;
}

// Plancherel side of int |F|^2 weighted by a power of (2k+n)|lambda| or lambda:
// (2 pi)^{-1-n} int |lambda|^n sum_k C(k+n-1,k) w(k, lambda) |c_k|^2 d lambda,
// by a plain midpoint rule in lambda.
double spectral_energy(double r, int n, const std::function<double(int, double)>& w) {
  const double top = 80.0 / r, h = top / 40000;
  double total = 0.0;
  for (int i = 0; i < 40000; ++i) {
    const double lam = (i + 0.5) * h;
    double sum = 0.0;
    for (int k = 0; k < 200000; ++k) {
      const double x = (2 * k + n) * lam;
      const double c = std::exp(-r * x) - std::exp(-2 * r * x);
      const double term = binomial(k + n - 1, k) * c * c * w(k, lam);
      sum += term;
      if (r * x > 40) break;
    }
    total += 2 * h * std::pow(lam, n) * sum;  // both signs of lambda
  }
  return std::pow(2 * kPi, -1 - n) * total;
}

}  // namespace

TEST_CASE("Laguerre polynomials") {
  for (double a : {0.0, 1.0, 2.5})
    for (double x : {0.0, 0.3, 4.0}) {
      CHECK(laguerre_eval(0, a, x) == 1.0);
      CHECK(laguerre_eval(1, a, x) == doctest::Approx(1 + a - x).epsilon(1e-15));
    }
  for (int n = 1; n <= 3; ++n)
    for (int k = 0; k <= 10; ++k) CHECK(laguerre_eval(k, n - 1.0, 0.0) == doctest::Approx(binomial(k + n - 1, k)).epsilon(1e-13));
  // against the library implementation for integer types
  for (unsigned m : {0u, 1u, 2u})
    for (unsigned k : {3u, 7u, 15u, 30u})
      for (double x : {0.2, 1.7, 9.0}) {
        const double ref = boost::math::laguerre(k, m, x);
        CHECK(std::abs(laguerre_eval(k, m, x) - ref) <= 1e-11 * std::max(1.0, std::abs(ref)));
      }
  auto all = laguerre_all(12, 1.0, 2.2);
  for (int k = 0; k <= 12; ++k) CHECK(all[k] == laguerre_eval(k, 1.0, 2.2));
  CHECK_THROWS(laguerre_eval(-1, 0.0, 1.0));
}

TEST_CASE("Laguerre functions") {
  const double lam = 1.3;
  for (double s : {0.0, 0.5, 2.0}) {
    std::vector<cplx> z{cplx(s, 0.0)};
    CHECK(laguerre_function(0, lam, z) == doctest::Approx(std::exp(-lam * s * s / 4)).epsilon(1e-15));
  }
  for (int k = 0; k < 6; ++k) CHECK(laguerre_function(k, lam, {cplx(0.0)}) == laguerre_eval(k, 0.0, 0.0));
  CHECK(laguerre_function(3, -lam, {cplx(0.4, 0.2)}) == laguerre_function(3, lam, {cplx(0.2, -0.4)}));

  // L^2(C) orthogonality: int phi_j phi_k = delta_jk (2 pi) / |lambda|. With u = s^2,
  // int_C g(|z|^2) dz = pi int_0^inf g(u) du, by Simpson's rule in u.
  auto simpson = [](const std::function<double(double)>& g, double U, int m) {
    const double h = U / m;
    double sum = g(0.0) + g(U);
    for (int i = 1; i < m; ++i) sum += (i % 2 ? 4.0 : 2.0) * g(i * h);
    return sum * h / 3.0;
  };
  const double U = 120.0;
  for (int j = 0; j < 5; ++j)
    for (int k = 0; k < 5; ++k) {
      const double v = kPi * simpson([&](double u) {
        return laguerre_function_radial(j, 1, lam, std::sqrt(u)) * laguerre_function_radial(k, 1, lam, std::sqrt(u));
      }, U, 60000);
      CHECK(std::abs(v - (j == k ? 2 * kPi / lam : 0.0)) < 1e-9);
    }
  // n = 2: int_{C^2} g(|z|^2) dz = pi^2 int_0^inf u g(u) du; squared norm (2 pi)^2 (k+1) / lambda^2
  for (int k = 0; k < 4; ++k) {
    const double v = kPi * kPi * simpson([&](double u) {
      const double f = laguerre_function_radial(k, 2, lam, std::sqrt(u));
      return u * f * f;
    }, U, 60000);
    CHECK(v == doctest::Approx(std::pow(2 * kPi, 2) * (k + 1) / (lam * lam)).epsilon(1e-9));
  }
}

TEST_CASE("Laguerre functions as sums of diagonal special Hermite functions") {
  // measured: phi_{k,lambda} = (2 pi)^{n/2} sum_{|alpha| = k} Phi_{alpha,alpha}^lambda
  std::mt19937_64 rng(11);
  std::normal_distribution<double> nd;
  for (int n : {1, 2}) {
    auto b = make_basis(n, 6);
    for (double lam : {0.8, -1.7}) {
      std::vector<cplx> z(n);
      for (auto& v : z) v = cplx(nd(rng), nd(rng));
      for (int k = 0; k <= 5; ++k) {
        cplx sum = 0.0;
        for (int i = 0; i < b->size(); ++i)
          if (b->degree(i) == k) sum += special_hermite(b->index(i), b->index(i), lam, z);
        CHECK(std::abs(std::pow(2 * kPi, n / 2.0) * sum - laguerre_function(k, lam, z)) < 1e-12);
      }
    }
  }
}

TEST_CASE("heat slices") {
  for (int n : {1, 2})
    for (double lam : {0.3, 1.0, -2.5})
      for (double s : {0.0, 0.7, 2.5}) {
        const double a = heat_slice_series(0.15, lam, n, s), c = heat_slice_closed(0.15, lam, n, s);
        CHECK(std::abs(a - c) <= 1e-10 * heat_slice_closed(0.15, lam, n, 0.0));
      }
  // value at the origin: n = 1 geometric sum e^{-2r lambda} / (1 - e^{-4 r lambda})
  for (double r : {0.05, 0.4})
    for (double lam : {0.5, 3.0}) {
      const double geo = lam / (2 * kPi) * std::exp(-2 * r * lam) / (1 - std::exp(-4 * r * lam));
      CHECK(heat_slice_series(r, lam, 1, 0.0) == doctest::Approx(geo).epsilon(1e-10));
    }
  auto b = make_basis(1, 16);
  ZGrid g(1, 33, 9.0);
  auto hs = heat_slice(0.1, 1.0, b, g);
  CHECK(hs.values.values.imag().cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(hs.k_max > 0);
  for (int i = 0; i < b->size(); ++i)
    CHECK(hs.weyl.entries(i, i).real() == doctest::Approx(std::exp(-0.2 * (2 * b->degree(i) + 1))).epsilon(1e-15));
  CHECK_THROWS_AS(heat_slice_series(0.1, 1e-9, 1, 0.0), ResolutionError);
  CHECK_THROWS(heat_slice(0.0, 1.0, b, g));
}

TEST_CASE("Weyl side of the heat slice") {
  auto b = make_basis(1, 16);
  std::vector<double> cs;
  for (double lam : {1.0, 2.0, -2.0}) {
    auto h = measure_heat_normalization(0.1, lam, b, ZGrid(1, 65, 18 / std::sqrt(std::abs(lam))));
    CHECK(h.off_diagonal < 1e-3);
    CHECK(h.residual < 1e-3);
    cs.push_back(h.c);
  }
  for (double c : cs) CHECK(std::abs(c - 1.0) < 1e-4);
}

TEST_CASE("b functions") {
  CHECK(b_function(1.0, 0.0) == 0.0);
  CHECK(b_function(1.0, 0.0, 1) == doctest::Approx(0.5).epsilon(1e-15));
  double best = 0.0, arg = 0.0;
  for (int i = 0; i <= 200000; ++i) {
    const double x = i * 1e-4;
    if (b_function(1.0, x) > best) {
      best = b_function(1.0, x);
      arg = x;
    }
  }
  CHECK(best == doctest::Approx(0.25).epsilon(1e-8));
  CHECK(std::abs(arg - 2 * std::log(2.0)) < 2e-4);
  // derivatives against central differences
  for (int l = 0; l < 4; ++l)
    for (double x : {0.3, 2.0, 7.0}) {
      const double h = 1e-5;
      const double fd = (b_function(0.7, x + h, l) - b_function(0.7, x - h, l)) / (2 * h);
      CHECK(std::abs(fd - b_function(0.7, x, l + 1)) < 1e-8);
    }
  CHECK_THROWS(b_function(1.0, 1.0, 13));
}

TEST_CASE("Gamma operator") {
  auto grid = make_log_grid(0.25, 4.0, 1.5, false);
  for (int n : {1, 2}) {
    auto lin = symbol([n](int k, double l) { return cplx((2 * k + n) * l); });
    auto dlin = [n](int k, double) { return cplx(2 * k + n); };
    auto one = symbol([](int, double) { return cplx(1.0); });
    auto sq = symbol([n](int k, double l) { return cplx(std::pow((2 * k + n) * l, 2)); });
    auto dsq = [n](int k, double l) { return cplx(2.0 * (2 * k + n) * (2 * k + n) * l); };
    for (double lam : grid.points)
      for (int k = 0; k <= 20; ++k) {
        CHECK(std::abs(gamma_operator(lin, k, lam, n, dlin)) <= 1e-14);
        CHECK(std::abs(gamma_operator(one, k, lam, n, [](int, double) { return cplx(0.0); })) == 0.0);
        // symbolic: 2 x_k^2 / lambda - k (x_k^2 - x_{k-1}^2) / 2lambda - (k+n)(x_{k+1}^2 - x_k^2) / 2lambda = -2 n lambda
        CHECK(std::abs(gamma_operator(sq, k, lam, n, dsq) + 2.0 * n * lam) <= 1e-12 * std::pow((2 * k + n) * lam, 2));
        CHECK(std::abs(gamma_operator(sq, k, lam, n) + 2.0 * n * lam) <= 1e-6 * std::pow((2 * k + n) * lam, 2));
      }
  }
  auto lin = symbol([](int k, double l) { return cplx((2 * k + 1) * l); });
  CHECK_THROWS_AS(gamma_operator(lin, 0, 0.0, 1), Unsupported);
  CHECK_THROWS_AS(gamma_operator(lin, 0, -1.0, 1), Unsupported);
  auto g = gamma_symbol(symbol([](int k, double l) { return cplx(std::exp(-0.1 * (2 * k + 1) * l)); }), 1);
  CHECK(std::isfinite(std::abs(g(3, 1.0))));
}

TEST_CASE("derivative of b(L_lambda)") {
  auto b = [](double x) { return b_function(1.0, x); };
  auto db = [](double x) { return b_function(1.0, x, 1); };
  for (int n : {1, 2}) {
    ZGrid g(n, n == 1 ? 33 : 9, 6.0);
    for (double lam : {0.6, 1.0, 2.2}) {
      auto rep = verify_laguerre_derivative(b, db, 0.5, lam, g, 1e-3 * lam);
      CHECK(rep.residual <= 1e-5);
      auto coarse = verify_laguerre_derivative(b, db, 0.5, lam, g, 0.02 * lam);
      auto fine = verify_laguerre_derivative(b, db, 0.5, lam, g, 0.01 * lam);
      const double ratio = coarse.residual / fine.residual;
      CHECK(ratio >= 3.5);
      CHECK(ratio <= 4.5);
    }
  }
  auto zero = [](double) { return 0.0; };
  CHECK(verify_laguerre_derivative(zero, zero, 0.5, 1.0, ZGrid(1, 17, 4.0), 1e-3).residual == 0.0);
  CHECK_THROWS(verify_laguerre_derivative(b, db, 0.5, 1.0, ZGrid(1, 17, 4.0), 2.0));
}

TEST_CASE("approximate identity") {
  for (double r : {1.0 / 16, 0.25, 1.0}) CHECK(std::abs(approximate_identity_integral(r, 1) - 1.0) <= 1e-3);
  CHECK(std::abs(approximate_identity_integral(0.3, 2) - 1.0) <= 1e-3);
  auto [literal, parabolic] = scaling_deviation(0.25, 1, 20, 5);
  CHECK(parabolic <= 1e-3);
  CHECK(literal > 1e-2);
  ZGrid zg(1, 33, 8.0);
  TGrid tg(64, 8.0);
  CHECK(symmetry_defect(0.5, zg, tg) <= 1e-10);
  CHECK(telescoping_defect(3, zg, tg) <= 1e-10);
  CHECK(commutator_defect(0.5, 0.25, zg, tg) <= 1e-6);
  // sampled grid values match pointwise evaluation, and the series and closed forms agree
  auto f = approximate_identity(0.5, zg, tg);
  const std::size_t zi = zg.flat({20, 13});
  const double s = std::abs(zg.point(zi)[0]);
  auto pt = radial_kernel(phi_series(0.5, 1), {s}, {tg.node(40)});
  CHECK(std::abs(f.at(zi, 40) - pt.F(0, 0)) <= 1e-14);
  auto closed = radial_kernel(psi_series(0.5, 1, true), {0.0, 0.8, 2.0}, {-0.3, 0.0, 0.9}, true);
  auto series = radial_kernel(psi_series(0.5, 1, false), {0.0, 0.8, 2.0}, {-0.3, 0.0, 0.9}, true);
  CHECK((closed.F - series.F).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((closed.Fs - series.Fs).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((closed.Ft - series.Ft).cwiseAbs().maxCoeff() <= 1e-10);
  // psi_r = phi_{r/2} - phi_r pointwise
  auto pr = radial_kernel(phi_series(0.25, 1), {0.0, 0.8, 2.0}, {-0.3, 0.0, 0.9});
  auto p2 = radial_kernel(phi_series(0.5, 1), {0.0, 0.8, 2.0}, {-0.3, 0.0, 0.9});
  CHECK((closed.F - (pr.F - p2.F)).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("weighted integrals of the approximate identity stay bounded") {
  std::vector<double> vals;
  for (int j = 6; j >= 1; --j) {
    const double v = weighted_l1(std::ldexp(1.0, -j), 1, 0.5);
    CHECK(v >= 1.0 - 1e-3);
    CHECK(std::isfinite(v));
    vals.push_back(v);
  }
  CHECK(*std::max_element(vals.begin(), vals.end()) < 10.0);
  for (double r : {0.125, 0.5}) {
    const double c = translation_ratio(r, HPoint{{cplx(0.2, -0.1)}, 0.03}, 0.5);
    CHECK(std::isfinite(c));
    CHECK(c > 0.0);
    CHECK(c < 10.0);
  }
}

TEST_CASE("kernel moments") {
  auto I = identity_symbol();
  CHECK(kernel_moment(zero_symbol(), 0.25, 1, 1) == 0.0);
  CHECK(gradient_kernel_moment(zero_symbol(), 0.25, 1, 1, MomentField::T) == 0.0);
  // l = 0 against the Plancherel sum, and that sum against an independent rule
  for (double r : {0.125, 0.5}) {
    const double direct = kernel_moment(I, r, 0, 1);
    const double planch = kernel_moment_plancherel(I, r, 1);
    CHECK(std::abs(direct - planch) <= 1e-3 * planch);
  }
  const double ref = spectral_energy(0.5, 1, [](int, double) { return 1.0; });
  CHECK(std::abs(kernel_moment_plancherel(I, 0.5, 1) - ref) <= 1e-4 * ref);
  // a non-trivial Hermite multiplier through the series path
  auto h = symbol([](int k, double l) { return cplx(std::exp(-0.1 * (2 * k + 1) * std::abs(l))); });
  CHECK(std::abs(kernel_moment(h, 0.25, 0, 1) - kernel_moment_plancherel(h, 0.25, 1)) <=
        1e-3 * kernel_moment_plancherel(h, 0.25, 1));
  // gradient moments with l = 0: int |T F|^2 carries lambda^2, int |X F|^2 + |Y F|^2 carries (2k+n)|lambda|
  const double r = 0.5;
  const double t_ref = spectral_energy(r, 1, [](int, double l) { return l * l; });
  const double x_ref = spectral_energy(r, 1, [](int k, double l) { return (2 * k + 1) * l; });
  CHECK(std::abs(gradient_kernel_moment(I, r, 0, 1, MomentField::T) - t_ref) <= 1e-3 * t_ref);
  const double xy = gradient_kernel_moment(I, r, 0, 1, MomentField::X) + gradient_kernel_moment(I, r, 0, 1, MomentField::Y);
  CHECK(std::abs(xy - x_ref) <= 1e-3 * x_ref);

  // dyadic r-sweeps
  std::vector<double> rs;
  for (int j = 6; j >= 2; --j) rs.push_back(std::ldexp(1.0, -j));
  for (int l : {0, 1, 2}) {
    std::vector<double> m;
    for (double rr : rs) m.push_back(kernel_moment(I, rr, l, 1));
    CHECK(std::abs(fit_loglog_slope(rs, m).slope - (2 * l - 2)) <= 0.3);
  }
  for (int l : {0, 1}) {
    std::vector<double> mt, mx;
    for (double rr : rs) {
      mt.push_back(gradient_kernel_moment(I, rr, l, 1, MomentField::T));
      mx.push_back(gradient_kernel_moment(I, rr, l, 1, MomentField::X));
      CHECK(mt.back() >= 0.0);
      CHECK(mx.back() >= 0.0);
    }
    CHECK(std::abs(fit_loglog_slope(rs, mt).slope - (2 * l - 4)) <= 0.4);
    CHECK(std::abs(fit_loglog_slope(rs, mx).slope - (2 * l - 3)) <= 0.4);
  }
  CHECK_THROWS_AS(kernel_moment(I, 1e-6, 0, 1), ResolutionError);
  CHECK_THROWS(gradient_kernel_moment(I, 1.5, 0, 1, MomentField::T));
  CHECK(parse_moment_field("Xi") == MomentField::X);
  CHECK(to_string(MomentField::T) == "T");
  CHECK_THROWS(parse_moment_field("Z"));
}

TEST_CASE("log-log slope fit") {
  std::vector<double> r{1, 2, 4, 8, 16}, m;
  for (double v : r) m.push_back(3 * std::pow(v, 1.5));
  m.front() = 100;  // extremes are dropped
  m.back() = 1e-3;
  CHECK(fit_loglog_slope(r, m).slope == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(fit_loglog_slope(r, m).r.size() == 3);
  CHECK_THROWS(fit_loglog_slope({1.0}, {1.0}));
}

TEST_CASE("dyadic envelope of the band kernel") {
  auto b = make_basis(1, 16);
  auto grid = make_log_grid(2.0, 8.0, std::pow(2.0, 0.25), false);
  const double r = 0.125;
  // alpha = beta = 0, l = 0: the norm is the largest diagonal heat difference in the band
  auto e = band_kernel_envelope({0}, {0}, 0, 3, 7, r, grid, b);
  for (const auto& row : e.rows) {
    double ref = 0.0;
    for (double lam : grid.points) {
      auto ks = dyadic_band(row.N, lam, 1, 16);
      for (int k : ks) {
        const double x = (2 * k + 1) * lam;
        ref = std::max(ref, std::abs(std::exp(-r * x) - std::exp(-2 * r * x)));
      }
    }
    CHECK(row.opnorm == doctest::Approx(ref).epsilon(1e-13));
    CHECK(row.opnorm <= 0.25);
  }
  for (auto [a, bb, l] : std::vector<std::tuple<int, int, int>>{{0, 0, 0}, {1, 0, 0}, {0, 0, 1}, {2, 0, 0}, {0, 1, 0}}) {
    auto rep = band_kernel_envelope({a}, {bb}, l, 3, 8, r, grid, b);
    CHECK(rep.pass);
  }
  // very large r: the band kernel vanishes
  auto big = band_kernel_envelope({0}, {0}, 0, 3, 5, 50.0, grid, b);
  for (const auto& row : big.rows) CHECK(row.opnorm < 1e-30);
}
