#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hh/derivations.hpp"
#include "hh/multiplier_algebra.hpp"

#include <cmath>
#include <random>

using namespace hh;

namespace {

MatC random_matrix(int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  MatC m(size, size);
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) m(r, c) = cplx(nd(rng), nd(rng));
  return m;
}

// Diagonal heat family e^{-s H(lambda)} with its lambda-derivative.
SmoothFamily heat_family(BasisPtr b, double s) {
  SmoothFamily f;
  f.value = [b, s](double l) {
    auto H = hermite_operator(l, b);
    VecC d = (-s * H.entries.diagonal().array()).exp().matrix();
    H.entries = d.asDiagonal();
    return H;
  };
  f.derivative = [b, s](double l) {
    auto H = hermite_operator(l, b);
    VecC e = H.entries.diagonal();
    const double sg = l > 0 ? 1.0 : -1.0;
    VecC d = (-s * e.array()).exp() * (-s * sg * e.array() / std::abs(l));
    return OperatorMatrix(b, l, d.asDiagonal());
  };
  return f;
}

}  // namespace

TEST_CASE("delta and delta-bar basics") {
  auto b = make_basis(1, 16);
  auto I = OperatorMatrix::identity(b, 1.0);
  CHECK(delta(0, I).interior_block().cwiseAbs().maxCoeff() == 0.0);
  CHECK(delta_bar(0, I).interior_block().cwiseAbs().maxCoeff() == 0.0);
  // delta(1) P_0 = sqrt(2) |Phi_0><Phi_1|
  MatC p0 = MatC::Zero(17, 17);
  p0(0, 0) = 1.0;
  auto d = delta(0, OperatorMatrix(b, 1.0, p0));
  MatC expect = MatC::Zero(17, 17);
  expect(0, 1) = std::sqrt(2.0);
  CHECK((d.entries - expect).norm() < 1e-15);
  CHECK(d.band == 1);
  // Leibniz rule on the interior
  auto b2 = make_basis(2, 8);
  for (double lam : {0.6, -1.4}) {
    OperatorMatrix m(b2, lam, random_matrix(b2->size(), 1)), k(b2, lam, random_matrix(b2->size(), 2));
    for (int j = 0; j < 2; ++j) {
      auto lhs = delta(j, m * k);
      auto rhs = delta(j, m) * k + m * delta(j, k);
      CHECK(interior_max_diff(lhs, rhs, 1) < 1e-12);
      auto lhsb = delta_bar(j, m * k);
      auto rhsb = delta_bar(j, m) * k + m * delta_bar(j, k);
      CHECK(interior_max_diff(lhsb, rhsb, 1) < 1e-12);
      // adjoint compatibility: (delta m)^* = dbar(m^*) under [m, A]^* = [A^*, m^*]
      CHECK(interior_max_diff(delta(j, m).adjoint(), delta_bar(j, m.adjoint())) < 1e-12);
    }
  }
}

TEST_CASE("delta powers") {
  auto b = make_basis(1, 16);
  const double lam = 0.8;
  OperatorMatrix m(b, lam, random_matrix(17, 3));
  CHECK((delta_power({0}, {0}, m).entries - m.entries).norm() == 0.0);
  MatC p0 = MatC::Zero(17, 17);
  p0(0, 0) = 1.0;
  OperatorMatrix P0(b, lam, p0);
  auto A = ladder_matrix(0, lam, LadderKind::Annihilation, b);
  auto dd = delta_power({2}, {0}, P0);
  auto expanded = cplx(1.0 / lam) * commutator(commutator(P0, A), A);
  CHECK(interior_max_diff(dd, expanded) < 1e-12);
  CHECK(dd.band == 2);
  // delta and dbar commute up to truncation: [[m,A],A*] - [A*,[m,A]] ... measured
  auto ddb = delta_power({1}, {1}, m);
  auto dbd = delta(0, delta_bar(0, m));
  const double defect = (ddb.interior_block() - dbd.interior_block(ddb.band - dbd.band)).cwiseAbs().maxCoeff();
  MESSAGE("commutation defect on the interior: " << defect);
  CHECK(defect < 1e-12);
  CHECK_THROWS_AS(delta_power({10}, {7}, m), ResolutionError);
  CHECK(max_derivation_order(1) == 4);
  CHECK(max_derivation_order(2) == 6);
}

TEST_CASE("Theta on simple families") {
  auto b = make_basis(1, 16);
  auto grid = make_log_grid(0.25, 4.0, 1.05, false);
  auto C = MultiplierFamily::build(b, grid, [&](double l) { return cplx(2.5) * OperatorMatrix::identity(b, l); });
  for (std::size_t i = 1; i + 1 < grid.size(); ++i)
    for (auto v : {ThetaVariant::Calibrated, ThetaVariant::Literal}) {
      auto T = theta(C, i, v);
      CHECK(T.interior_block().cwiseAbs().maxCoeff() < 1e-12);
    }
  CHECK_THROWS(theta(C, std::size_t(0)));
  auto both = make_log_grid(0.25, 4.0, 1.05, true);
  auto Cb = MultiplierFamily::build(b, both, [&](double l) { return OperatorMatrix::identity(b, l); });
  CHECK_THROWS_AS(theta(Cb, std::size_t(3)), Unsupported);
  CHECK_THROWS(theta(C, 0.3));
}

TEST_CASE("Theta on Hermite multipliers matches the Gamma coefficients") {
  // a(k, lambda) = b((2k + n) lambda) with b(x) = x e^{-x/3}
  auto bf = [](double x) { return x * std::exp(-x / 3); };
  auto dbf = [](double x) { return (1 - x / 3) * std::exp(-x / 3); };
  for (int n : {1, 2}) {
    auto b = make_basis(n, n == 1 ? 16 : 8);
    auto value = [&](double l) {
      MatC d = MatC::Zero(b->size(), b->size());
      for (int i = 0; i < b->size(); ++i) d(i, i) = bf((2.0 * b->degree(i) + n) * l);
      return OperatorMatrix(b, l, d);
    };
    auto deriv = [&](double l) {
      MatC d = MatC::Zero(b->size(), b->size());
      for (int i = 0; i < b->size(); ++i) d(i, i) = (2.0 * b->degree(i) + n) * dbf((2.0 * b->degree(i) + n) * l);
      return OperatorMatrix(b, l, d);
    };
    auto grid = make_log_grid(0.25, 2.0, 1.02, false);
    auto fam = MultiplierFamily::build(b, grid, value, deriv, true);
    auto fam_fd = MultiplierFamily::build(b, grid, value);
    for (std::size_t i = 2; i + 2 < grid.size(); i += 7) {
      const double l = grid.points[i];
      auto T = theta(fam, i);
      auto Tfd = theta(fam_fd, i);
      const int K = b->cutoff();
      for (int r = 0; r < b->size(); ++r) {
        const int k = b->degree(r);
        if (k > K - 2) continue;
        // Gamma^k a = d a/d lambda - (1/2l) k D_- a - (1/2l)(k+n) D_+ a
        auto a = [&](int kk) { return bf((2.0 * kk + n) * l); };
        const double dm = k == 0 ? 0.0 : a(k) - a(k - 1);
        const double dp = a(k + 1) - a(k);
        const double g = (2.0 * k + n) * dbf((2.0 * k + n) * l) - (k * dm + (k + n) * dp) / (2 * l);
        CHECK(std::abs(T.entries(r, r) - g) < 1e-10);
        CHECK(std::abs(Tfd.entries(r, r) - g) < 1e-6);
      }
      // Theta keeps the family diagonal below the band
      MatC off = T.interior_block(1);
      off.diagonal().setZero();
      CHECK(off.cwiseAbs().maxCoeff() < 1e-14);
    }
  }
}

TEST_CASE("Theta on a V-expansion family") {
  auto b = make_basis(1, 16);
  VExpansion e;
  e.add({2}, {1}, [](double l) { return cplx(std::sin(l), 1.0); }, [](double l) { return cplx(std::cos(l), 0.0); });
  e.add({-1}, {3}, [](double l) { return cplx(l * l); }, [](double l) { return cplx(2 * l); });
  auto grid = make_log_grid(0.5, 2.0, 1.05, false);
  auto fam = MultiplierFamily::build(b, grid, [&](double l) { return e.matrix(l, b); },
                                     [&](double l) { return e.d_matrix(l, b); });
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double l = grid.points[i];
    CHECK(interior_max_diff(theta(fam, i), theta_on_V_expansion(e, l).matrix(l, b)) < 1e-10);
  }
}

TEST_CASE("multiplication by it matches Theta on seeded wave packets") {
  auto b = make_basis(1, 16);
  ZGrid zg(1, 65, 9.5);
  TGrid tg(128, 32.0);
  auto grid = make_log_grid(1.4, 2.6, 1.01, false);
  std::vector<cplx> cs;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto p = random_wave_packet(seed, 3, 4, 2.0, 0.2);
    auto f = p.sample(zg, tg);
    auto rep = verify_theta_identity(f, grid, b);
    auto literal = verify_theta_identity(f, grid, b, ThetaVariant::Literal);
    MESSAGE("seed " << seed << " c = " << rep.c << " deviation " << rep.deviation << " (c=1: " << rep.deviation_unit
                    << ", c=(2pi)^{1/2}: " << rep.deviation_2pi << "); literal form: c = " << literal.c
                    << " deviation " << literal.deviation);
    CHECK(!rep.inconclusive);
    CHECK(rep.deviation <= 1e-3);
    CHECK(std::abs(rep.c - 1.0) < 1e-3);
    CHECK(literal.deviation > 1e-2);
    cs.push_back(rep.c);
  }
  for (auto c : cs) CHECK(std::abs(c - cs[0]) <= 1e-2 * std::abs(cs[0]));
  GridFunction zero(zg, tg);
  CHECK(verify_theta_identity(zero, grid, b).inconclusive);
}

TEST_CASE("first-order lambda-derivative of Weyl multipliers") {
  auto b = make_basis(1, 16);
  ZGrid zg(1, 65, 9.5);
  TGrid tg(128, 32.0);
  auto p = random_wave_packet(11, 2, 3, 2.0, 0.2);
  auto f = p.sample(zg, tg);
  SmoothFamily id;
  id.value = [&](double l) { return OperatorMatrix::identity(b, l); };
  id.derivative = [&](double l) { return OperatorMatrix::zero(b, l); };
  auto r0 = verify_lambda_derivative(id, f, 2.0, 0.02, b);
  MESSAGE("identity: lhs " << r0.lhs_norm << " residual " << r0.residual_derived);
  CHECK(r0.lhs_norm < 1e-6);

  auto heat = heat_family(b, 0.2);
  auto r1 = verify_lambda_derivative(heat, f, 2.0, 0.02, b);
  auto r2 = verify_lambda_derivative(heat, f, 2.0, 0.01, b);
  MESSAGE("heat: residual " << r1.residual_derived << " -> " << r2.residual_derived << ", literal "
                            << r1.residual_literal);
  CHECK(r1.residual_derived <= 1e-4);
  CHECK(r1.residual_derived / r2.residual_derived > 3.5);
  CHECK(r1.residual_derived / r2.residual_derived < 4.5);
  CHECK(r1.residual_literal > 1e-2);

  // a single partial isometry with smooth coefficient, chosen to act on the
  // first row index of the packet: V_a^{-1} maps Phi_a to Phi_{a+1}
  const int a0 = p.a[0];
  SmoothFamily pi;
  pi.value = [&](double l) { return cplx(std::exp(-l)) * partial_isometry({-1}, {a0}, l, b); };
  pi.derivative = [&](double l) { return cplx(-std::exp(-l)) * partial_isometry({-1}, {a0}, l, b); };
  auto q1 = verify_lambda_derivative(pi, f, 2.0, 0.02, b);
  auto q2 = verify_lambda_derivative(pi, f, 2.0, 0.01, b);
  MESSAGE("partial isometry: residual " << q1.residual_derived << " -> " << q2.residual_derived);
  CHECK(q2.residual_derived <= 1e-4);
  CHECK(q1.residual_derived / q2.residual_derived > 3.5);
  CHECK(q1.residual_derived / q2.residual_derived < 4.5);
}

TEST_CASE("hypothesis functional") {
  auto b = make_basis(1, 16);
  auto grid = make_log_grid(1.0 / 64, 64.0, 1.05, false);
  auto I = MultiplierFamily::build(b, grid, [&](double l) { return OperatorMatrix::identity(b, l); },
                                   [&](double l) { return OperatorMatrix::zero(b, l); }, true);
  for (DerivationRequest req : {DerivationRequest{{1}, {0}, 0}, DerivationRequest{{0}, {1}, 0},
                                DerivationRequest{{0}, {0}, 1}, DerivationRequest{{1}, {1}, 1}})
    for (int N = 0; N <= 4; ++N) CHECK(hypothesis_functional(I, req, N).value < 1e-20);
  // l = 0: direct mode count, multiplicity 1 for n = 1
  for (int N = 0; N <= 4; ++N) {
    double count = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double l = grid.points[i];
      int modes = 0;
      for (int k = 0; k <= 16; ++k) {
        const double e = (2.0 * k + 1) * l;
        if (e >= std::pow(2.0, N) && e < std::pow(2.0, N + 1)) ++modes;
      }
      count += grid.weights[i] * modes * l;
    }
    const double expect = std::pow(2.0, -2 * N) * count;
    auto v = hypothesis_functional(I, DerivationRequest{{0}, {0}, 0}, N);
    CHECK(v.value == doctest::Approx(expect).epsilon(1e-12));
    MESSAGE("N = " << N << ": " << v.value);
  }
  // homogeneity
  auto I3 = MultiplierFamily::build(b, grid, [&](double l) { return cplx(0.0, 3.0) * OperatorMatrix::identity(b, l); },
                                    [&](double l) { return OperatorMatrix::zero(b, l); }, true);
  auto H = MultiplierFamily::build(b, grid, [&](double l) { return heat_family(b, 1.0).value(l); },
                                   [&](double l) { return heat_family(b, 1.0).derivative(l); }, true);
  auto H3 = MultiplierFamily::build(b, grid, [&](double l) { return cplx(-3.0) * heat_family(b, 1.0).value(l); },
                                    [&](double l) { return cplx(-3.0) * heat_family(b, 1.0).derivative(l); }, true);
  CHECK(hypothesis_functional(I3, {{0}, {0}, 0}, 2).value ==
        doctest::Approx(9 * hypothesis_functional(I, {{0}, {0}, 0}, 2).value).epsilon(1e-12));
  DerivationRequest r{{1}, {0}, 1};
  for (int N = 0; N <= 8; ++N) {
    const double v = hypothesis_functional(H, r, N).value;
    CHECK(hypothesis_functional(H3, r, N).value == doctest::Approx(9 * v).epsilon(1e-10));
    CHECK(std::isfinite(v));
  }
  // chi_N empty on the whole grid
  auto small = make_log_grid(1.0, 1.0, 2.0, false);
  auto Is = MultiplierFamily::build(b, small, [&](double l) { return OperatorMatrix::identity(b, l); });
  auto e = hypothesis_functional(Is, {{0}, {0}, 0}, 10);
  CHECK(e.empty_band);
  CHECK(e.value == 0.0);
}
