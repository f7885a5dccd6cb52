#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hh/heisenberg_geometry.hpp"

#include <cmath>
#include <cstdio>
#include <random>

using namespace hh;

namespace {

HPoint random_point(std::mt19937_64& rng, int n) {
  std::normal_distribution<double> g(0.0, 1.0);
  HPoint p;
  for (int j = 0; j < n; ++j) p.z.emplace_back(g(rng), g(rng));
  p.t = g(rng);
  return p;
}

double dist(const HPoint& a, const HPoint& b) {
  double s = std::abs(a.t - b.t);
  for (std::size_t j = 0; j < a.z.size(); ++j) s = std::max(s, std::abs(a.z[j] - b.z[j]));
  return s;
}

double rel_err(const GridFunction& a, const GridFunction& b) {
  return (a.values - b.values).norm() / b.values.norm();
}

}  // namespace

TEST_CASE("group law") {
  HPoint p{{cplx(1, 0)}, 0.0}, q{{cplx(0, 1)}, 0.0};
  auto r = group_mul(p, q);
  CHECK(r.z[0] == cplx(1, 1));
  CHECK(r.t == doctest::Approx(-0.5));

  std::mt19937_64 rng(11);
  for (int n : {1, 2}) {
    for (int i = 0; i < 100; ++i) {
      auto a = random_point(rng, n), b = random_point(rng, n), c = random_point(rng, n);
      CHECK(dist(group_mul(group_mul(a, b), c), group_mul(a, group_mul(b, c))) < 1e-12);
      auto e = group_mul(a, group_inv(a));
      CHECK(dist(e, HPoint{std::vector<cplx>(n, 0.0), 0.0}) == 0.0);
      auto ii = group_inv(group_inv(a));
      CHECK(dist(ii, a) == 0.0);
    }
  }
}

TEST_CASE("homogeneous norm") {
  CHECK(rho(HPoint{{cplx(0, 0)}, 3.0}) == 9.0);
  CHECK(rho(HPoint{{cplx(1, 2)}, 0.0}) == doctest::Approx(25.0));
  CHECK(homogeneous_norm(HPoint{{cplx(0, 0)}, 16.0}) == doctest::Approx(4.0));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  for (int i = 0; i < 200; ++i) {
    auto p = random_point(rng, 2);
    const double s = u(rng);
    CHECK(rho(dilate(p, s)) == doctest::Approx(std::pow(s, 4) * rho(p)).epsilon(1e-12));
  }
  const double c = quasi_triangle_constant(1, 20000, 3);
  MESSAGE("empirical quasi-triangle constant: " << c);
  CHECK(c >= 0.7);
  CHECK(c <= 2.0);
  CHECK(quasi_triangle_constant(1, 20000, 3) == c);
}

TEST_CASE("grids") {
  CHECK_THROWS(ZGrid(1, 10, 3.0));
  CHECK_THROWS(TGrid(12, 3.0));
  ZGrid g(2, 5, 2.0);
  CHECK(g.count() == 625);
  CHECK(g.spacing() == 1.0);
  for (std::size_t i = 0; i < g.count(); i += 37) CHECK(g.flat(g.digits(i)) == i);
  CHECK(ZGrid::capture_radius(0.25) == doctest::Approx(12.0));
  TGrid t(8, 2.0);
  CHECK(t.node(0) == -2.0);
  CHECK(t.node(4) == 0.0);
}

TEST_CASE("convolution agrees with the direct double loop") {
  ZGrid zg(1, 7, 3.0);
  TGrid tg(8, 4.0);
  auto f = GridFunction::sample(zg, tg, [](const std::vector<cplx>& z, double t) {
    return std::exp(-0.5 * std::norm(z[0]) - 0.3 * t * t) * cplx(1.0 + 0.2 * z[0].real(), 0.1 * t);
  });
  auto g = GridFunction::sample(zg, tg, [](const std::vector<cplx>& z, double t) {
    return std::exp(-std::norm(z[0] - cplx(0.3, -0.2)) - 0.5 * (t - 0.4) * (t - 0.4));
  });
  auto fast = convolve(f, g);
  auto slow = convolve_bruteforce(f, g);
  CHECK((fast.values - slow.values).cwiseAbs().maxCoeff() < 1e-12 * slow.values.cwiseAbs().maxCoeff());
}

TEST_CASE("convolution with a point mass and a narrow bump") {
  ZGrid zg(1, 31, 6.0);
  TGrid tg(256, 8.0);
  auto f = GridFunction::sample(zg, tg, [](const std::vector<cplx>& z, double t) {
    return std::exp(-0.5 * std::norm(z[0]) - 0.25 * t * t) * cplx(1.0, 0.3 * z[0].imag());
  });
  GridFunction delta(zg, tg);
  delta.at(zg.count() / 2, tg.nt / 2) = 1.0 / delta.weight();
  CHECK(rel_err(convolve(f, delta), f) < 1e-13);
  CHECK(rel_err(convolve(delta, f), f) < 1e-13);

  auto bump = [&](double eps) {
    auto b = GridFunction::sample(zg, tg, [eps](const std::vector<cplx>& z, double t) {
      return cplx(std::exp(-std::norm(z[0]) / (eps * eps) - t * t / std::pow(eps, 4)));
    });
    b.values /= b.integral();
    return b;
  };
  const double e1 = rel_err(convolve(f, bump(0.8)), f);
  const double e2 = rel_err(convolve(f, bump(0.4)), f);
  MESSAGE("narrow bump errors: " << e1 << " " << e2);
  // second-order approach to f as the bump width halves
  CHECK(e1 / e2 > 3.0);
  CHECK(e2 < 0.06);
}

TEST_CASE("convolution is associative") {
  ZGrid zg(1, 25, 7.0);
  TGrid tg(32, 10.0);
  auto mk = [&](double a, double b, cplx c) {
    return GridFunction::sample(zg, tg, [=](const std::vector<cplx>& z, double t) {
      return std::exp(-a * std::norm(z[0] - c) - b * t * t);
    });
  };
  auto f = mk(1.0, 1.0, cplx(0.2, 0.0)), g = mk(1.5, 0.8, cplx(0.0, -0.3)), k = mk(1.2, 1.2, 0.0);
  auto lhs = convolve(convolve(f, g), k);
  auto rhs = convolve(f, convolve(g, k));
  CHECK(rel_err(lhs, rhs) < 1e-8);
  // non-commutative in general
  CHECK(rel_err(convolve(f, g), convolve(g, f)) > 1e-4);
}

TEST_CASE("convolution boundary warning") {
  ZGrid zg(1, 9, 2.0);
  TGrid tg(8, 2.0);
  auto wide = GridFunction::sample(zg, tg, [](const std::vector<cplx>&, double) { return cplx(1.0); });
  Diagnostics d;
  convolve(wide, wide, &d);
  CHECK(!d.empty());
  Diagnostics d2;
  auto narrow = GridFunction::sample(zg, tg, [](const std::vector<cplx>& z, double t) {
    return cplx(std::exp(-4 * std::norm(z[0]) - 4 * t * t));
  });
  convolve(narrow, narrow, &d2);
  CHECK(d2.empty());
}

TEST_CASE("left-invariant vector fields") {
  ZGrid zg(1, 21, 2.0);
  TGrid tg(32, 4.0);
  auto x = GridFunction::sample(zg, tg, [](const std::vector<cplx>& z, double) { return cplx(z[0].real()); });
  auto X = vector_field_apply(HField::X, 0, x);
  CHECK((X.values.array() - 1.0).abs().maxCoeff() < 1e-12);
  auto T = vector_field_apply(HField::T, 0, x);
  CHECK(T.values.cwiseAbs().maxCoeff() == 0.0);

  // [X, Y] f = -T f to second order; compare at interior nodes for two spacings.
  auto defect = [](int nz) {
    ZGrid g(1, nz, 2.0);
    TGrid t(256, kPi);
    auto f = GridFunction::sample(g, t, [](const std::vector<cplx>& z, double s) {
      return std::exp(-std::norm(z[0]) * 0.5) * std::polar(1.0, s) * (1.0 + 0.2 * z[0].real());
    });
    auto XY = vector_field_apply(HField::X, 0, vector_field_apply(HField::Y, 0, f));
    auto YX = vector_field_apply(HField::Y, 0, vector_field_apply(HField::X, 0, f));
    double worst = 0.0;
    for (std::size_t zi = 0; zi < g.count(); ++zi) {
      auto d = g.digits(zi);
      if (d[0] < 2 || d[1] < 2 || d[0] > nz - 3 || d[1] > nz - 3) continue;
      const auto z = g.point(zi);
      for (int k = 0; k < t.nt; ++k) {
        const cplx Tf = cplx(0, 1) * std::exp(-std::norm(z[0]) * 0.5) * std::polar(1.0, t.node(k)) * (1.0 + 0.2 * z[0].real());
        worst = std::max(worst, std::abs(XY.at(zi, k) - YX.at(zi, k) + Tf));
      }
    }
    return worst;
  };
  const double d1 = defect(21), d2 = defect(41);
  MESSAGE("commutator defects: " << d1 << " " << d2);
  CHECK(d2 < 0.05);
  CHECK(d1 / d2 > 3.0);
}

TEST_CASE("Z fields") {
  for (double lam : {1.5, -1.5}) {
    ZGrid g(1, 161, 4.0);
    auto h = PlaneFunction::sample(g, [&](const std::vector<cplx>& z) { return cplx(std::exp(-std::abs(lam) * std::norm(z[0]) / 4)); });
    auto Zh = z_field_apply(ZField::Z, 0, h, lam);
    double worst = 0.0;
    for (std::size_t i = 0; i < g.count(); ++i) {
      const cplx z = g.point(i)[0];
      const cplx expect = -(lam + std::abs(lam)) * std::conj(z) / 4.0 * h.values[i];
      worst = std::max(worst, std::abs(Zh.values[i] - expect));
    }
    CHECK(worst < 2e-3);
    auto one = PlaneFunction::sample(g, [](const std::vector<cplx>&) { return cplx(2.0); });
    auto Zb = z_field_apply(ZField::Zbar, 0, one, lam);
    for (std::size_t i = 0; i < g.count(); i += 101) CHECK(std::abs(Zb.values[i] - lam / 4 * g.point(i)[0] * 2.0) < 1e-12);
  }
}

TEST_CASE("Z field matches half of X - iY on a central character") {
  auto defect = [](int nz, int nt) {
    ZGrid g(1, nz, 3.0);
    TGrid t(nt, 2 * kPi);
    const double lam = t.frequency(3);
    auto hf = [](const cplx& z) { return std::exp(-0.5 * std::norm(z)) * (z + 0.5); };
    auto H = PlaneFunction::sample(g, [&](const std::vector<cplx>& z) { return hf(z[0]); });
    auto Zh = z_field_apply(ZField::Z, 0, H, lam);
    auto F = GridFunction::sample(g, t, [&](const std::vector<cplx>& z, double s) { return std::polar(1.0, lam * s) * hf(z[0]); });
    auto Xf = vector_field_apply(HField::X, 0, F), Yf = vector_field_apply(HField::Y, 0, F);
    double worst = 0.0;
    for (std::size_t zi = 0; zi < g.count(); ++zi) {
      auto d = g.digits(zi);
      if (d[0] < 1 || d[1] < 1 || d[0] > nz - 2 || d[1] > nz - 2) continue;
      for (int k = 0; k < t.nt; k += 13) {
        const cplx lhs = std::polar(1.0, lam * t.node(k)) * Zh.values[zi];
        const cplx rhs = 0.5 * (Xf.at(zi, k) - cplx(0, 1) * Yf.at(zi, k));
        worst = std::max(worst, std::abs(lhs - rhs));
      }
    }
    return worst;
  };
  const double d1 = defect(31, 64), d2 = defect(61, 128);
  MESSAGE("Z vs X-iY defects: " << d1 << " " << d2);
  CHECK(d2 < 0.05);
  CHECK(d1 / d2 > 3.0);
}

TEST_CASE("CSV round trip") {
  ZGrid zg(1, 5, 1.0);
  TGrid tg(4, 1.0);
  auto f = GridFunction::sample(zg, tg, [](const std::vector<cplx>& z, double t) { return cplx(z[0].real() / 3.0, t * z[0].imag() / 7.0); });
  const std::string path = "hh_roundtrip_test.csv";
  write_csv(f, path);
  auto g = read_csv(path);
  std::remove(path.c_str());
  CHECK(g.zgrid.nz == 5);
  CHECK(g.tgrid.nt == 4);
  CHECK((g.values - f.values).norm() == 0.0);
  CHECK_THROWS(read_csv("does_not_exist.csv"));
}
