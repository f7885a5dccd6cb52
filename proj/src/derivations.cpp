#include "hh/derivations.hpp"

#include <cmath>

namespace hh {

OperatorMatrix delta(int j, const OperatorMatrix& m) {
  auto A = ladder_matrix(j, m.lambda, LadderKind::Annihilation, m.basis);
  auto out = cplx(1.0 / std::sqrt(std::abs(m.lambda))) * commutator(m, A);
  out.band = m.band + 1;
  return out;
}

OperatorMatrix delta_bar(int j, const OperatorMatrix& m) {
  auto Ad = ladder_matrix(j, m.lambda, LadderKind::Creation, m.basis);
  auto out = cplx(1.0 / std::sqrt(std::abs(m.lambda))) * commutator(Ad, m);
  out.band = m.band + 1;
  return out;
}

OperatorMatrix delta_power(const MultiIndex& alpha, const MultiIndex& beta, const OperatorMatrix& m) {
  const int n = m.basis->dim();
  if (static_cast<int>(alpha.size()) != n || static_cast<int>(beta.size()) != n)
    throw std::invalid_argument("delta_power: multi-index length must equal n");
  const int widen = total_degree(alpha) + total_degree(beta);
  if (m.band + widen > m.basis->cutoff())
    throw ResolutionError("delta_power: order " + std::to_string(widen) + " overflows truncation K = " +
                          std::to_string(m.basis->cutoff()));
  OperatorMatrix out = m;
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < alpha[j]; ++k) out = delta(j, out);
  for (int j = 0; j < n; ++j)
    for (int k = 0; k < beta[j]; ++k) out = delta_bar(j, out);
  return out;
}

int max_derivation_order(int dim_n) { return 2 * ((dim_n + 3 + 1) / 2); }

std::string to_string(ThetaVariant v) { return v == ThetaVariant::Literal ? "literal" : "calibrated"; }

OperatorMatrix theta_apply(const OperatorMatrix& m, const OperatorMatrix& dm, ThetaVariant v) {
  const double lam = m.lambda;
  if (!(lam > 0)) throw Unsupported("theta: defined for lambda > 0 only");
  const int n = m.basis->dim();
  OperatorMatrix out = dm;
  out.band = std::max(m.band, dm.band);
  if (v == ThetaVariant::Literal) {
    auto X = xi_grad_matrix(lam, m.basis);
    out = out - cplx(1.0 / (2 * lam)) * commutator(m, X);
    auto sum = OperatorMatrix::zero(m.basis, lam);
    for (int j = 0; j < n; ++j) {
      auto A = ladder_matrix(j, lam, LadderKind::Annihilation, m.basis);
      auto Ad = ladder_matrix(j, lam, LadderKind::Creation, m.basis);
      sum = sum + delta(j, m) * Ad + delta_bar(j, m) * A;
    }
    out = out + cplx(1.0 / (2 * lam * std::sqrt(lam))) * sum;
  } else {
    out = out + cplx(n / (2 * lam)) * m;
    auto sum = OperatorMatrix::zero(m.basis, lam);
    for (int j = 0; j < n; ++j) {
      auto A = ladder_matrix(j, lam, LadderKind::Annihilation, m.basis);
      auto Ad = ladder_matrix(j, lam, LadderKind::Creation, m.basis);
      sum = sum + Ad * m * A - A * m * Ad;
    }
    out = out + cplx(1.0 / (4 * lam * lam)) * sum;
  }
  return out;
}

std::size_t grid_index(const LambdaGrid& g, double lambda) {
  for (std::size_t i = 0; i < g.size(); ++i)
    if (std::abs(g.points[i] - lambda) <= 1e-12 * std::abs(lambda)) return i;
  throw std::invalid_argument("lambda " + std::to_string(lambda) + " is not a grid point");
}

OperatorMatrix family_derivative(const MultiplierFamily& M, std::size_t i) {
  if (M.has_derivative()) return M.d_lambda[i];
  const auto& p = M.grid.points;
  const double lam = p[i];
  auto same_side = [&](long k) { return k >= 0 && k < static_cast<long>(p.size()) && p[k] * lam > 0; };
  const long k = static_cast<long>(i);
  if (!same_side(k - 1) || !same_side(k + 1))
    throw std::invalid_argument("theta: grid end point " + std::to_string(lam) + " needs an analytic derivative");
  // u = ln|lambda| is uniform on the grid half-lines
  const double du = std::log(std::abs(p[k + 1] / p[k]));
  MatC d;
  if (same_side(k - 2) && same_side(k + 2))
    d = (-M.matrices[k + 2].entries + 8.0 * M.matrices[k + 1].entries - 8.0 * M.matrices[k - 1].entries +
         M.matrices[k - 2].entries) /
        (12.0 * du);
  else
    d = (M.matrices[k + 1].entries - M.matrices[k - 1].entries) / (2.0 * du);
  // d/d lambda = (1/lambda) d/du, and du/d lambda has the sign of lambda
  d /= lam;
  int band = 0;
  for (long q = std::max(0L, k - 2); q <= std::min<long>(p.size() - 1, k + 2); ++q) band = std::max(band, M.matrices[q].band);
  return OperatorMatrix(M.basis, lam, d, band);
}

OperatorMatrix theta(const MultiplierFamily& M, std::size_t i, ThetaVariant v) {
  if (!(M.grid.points[i] > 0)) throw Unsupported("theta: defined for lambda > 0 only");
  return theta_apply(M.matrices[i], family_derivative(M, i), v);
}

OperatorMatrix theta(const MultiplierFamily& M, double lambda, ThetaVariant v) {
  return theta(M, grid_index(M.grid, lambda), v);
}

MultiplierFamily theta_family(const MultiplierFamily& M, ThetaVariant v) {
  MultiplierFamily out;
  out.basis = M.basis;
  out.diagonal = false;
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < M.grid.size(); ++i) {
    if (!(M.grid.points[i] > 0)) continue;
    if (!M.has_derivative()) {
      const bool left = i > 0 && M.grid.points[i - 1] > 0;
      const bool right = i + 1 < M.grid.size();
      if (!left || !right) continue;
    }
    keep.push_back(i);
  }
  // trapezoid weights in ln(lambda): a kept point that becomes a new end is halved
  auto half_line_end = [&](std::size_t i) {
    return i == 0 || i + 1 == M.grid.size() || M.grid.points[i - 1] * M.grid.points[i] < 0 ||
           M.grid.points[i + 1] * M.grid.points[i] < 0;
  };
  for (std::size_t q = 0; q < keep.size(); ++q) {
    double w = M.grid.weights[keep[q]];
    if (keep.size() > 1 && (q == 0 || q + 1 == keep.size()) && !half_line_end(keep[q])) w *= 0.5;
    out.grid.points.push_back(M.grid.points[keep[q]]);
    out.grid.weights.push_back(w);
  }
  out.matrices.resize(keep.size());
  parallel_for(keep.size(), [&](std::size_t q) { out.matrices[q] = theta(M, keep[q], v); });
  return out;
}

// ------------------------------------------------------------ verifications

ThetaIdentityReport verify_theta_identity(const GridFunction& f, const LambdaGrid& grid, BasisPtr basis, ThetaVariant v) {
  ThetaIdentityReport rep;
  const int n = basis->dim();
  LambdaGrid pos;
  for (std::size_t i = 0; i < grid.size(); ++i)
    if (grid.points[i] > 0) {
      pos.points.push_back(grid.points[i]);
      pos.weights.push_back(grid.weights[i]);
    }
  if (pos.size() < 5) throw std::invalid_argument("verify_theta_identity: need at least 5 positive grid points");
  GridFunction itf = f;
  for (std::size_t zi = 0; zi < f.zgrid.count(); ++zi)
    for (int k = 0; k < f.tgrid.nt; ++k) itf.at(zi, k) *= cplx(0.0, f.tgrid.node(k));
  auto F = group_fourier(f, pos, basis);
  auto G = group_fourier(itf, pos, basis);
  // interior points keep the four-point stencil
  cplx num = 0.0;
  double den = 0.0, gg = 0.0;
  std::vector<MatC> th, lhs;
  for (std::size_t i = 2; i + 2 < pos.size(); ++i) {
    auto T = theta(F, i, v);
    MatC t = T.interior_block(1);
    MatC g = OperatorMatrix(basis, pos.points[i], G.matrices[i].entries, T.band).interior_block(1);
    th.push_back(t);
    lhs.push_back(g);
    rep.lambdas.push_back(pos.points[i]);
    const cplx ln = (t.adjoint() * g).trace();
    const double ld = t.squaredNorm();
    rep.local_c.push_back(ld > 0 ? ln / ld : cplx(0.0));
    num += pos.weights[i] * ln;
    den += pos.weights[i] * ld;
    gg += pos.weights[i] * g.squaredNorm();
  }
  const double scale = std::sqrt(std::max(gg, den));
  if (scale < 1e-14 || den <= 0.0 || gg <= 0.0) {
    rep.inconclusive = true;
    return rep;
  }
  rep.c = num / den;
  auto dev = [&](cplx c) {
    double e = 0.0;
    for (std::size_t q = 0; q < th.size(); ++q) {
      const std::size_t i = q + 2;
      e += pos.weights[i] * (lhs[q] - c * th[q]).squaredNorm();
    }
    return std::sqrt(e / gg);
  };
  rep.deviation = dev(rep.c);
  rep.deviation_unit = dev(1.0);
  rep.deviation_2pi = dev(std::pow(2 * kPi, 0.5 * n));
  return rep;
}

namespace {

PlaneFunction times_coordinate(const PlaneFunction& g, int j, bool conj) {
  PlaneFunction out = g;
  for (std::size_t i = 0; i < g.grid.count(); ++i) {
    const cplx z = g.grid.point(i)[j];
    out.values[i] *= conj ? std::conj(z) : z;
  }
  return out;
}

PlaneFunction apply_raw(const OperatorMatrix& m, const PlaneFunction& g) {
  auto W = weyl_transform(g, m.lambda, m.basis);
  return inverse_weyl(m * W, g.grid, 1e-6);
}

}  // namespace

LambdaDerivativeReport verify_lambda_derivative(const SmoothFamily& m, const GridFunction& f, double lambda, double step,
                                  BasisPtr basis) {
  if (basis->dim() != 1) throw Unsupported("verify_lambda_derivative: n = 1 only");
  if (!(lambda > 0) || !(step > 0) || step >= lambda) throw Unsupported("verify_lambda_derivative: need 0 < step < lambda");
  auto g = lambda_slice(f, lambda);
  auto up = apply_raw(m.value(lambda + step), g);
  auto dn = apply_raw(m.value(lambda - step), g);
  VecC lhs = (up.values - dn.values) / (2 * step);

  auto M0 = m.value(lambda);
  auto TM = theta_apply(M0, m.derivative(lambda), ThetaVariant::Calibrated);
  auto base = apply_raw(TM, g).values;
  auto zg = times_coordinate(g, 0, false);
  auto zbg = times_coordinate(g, 0, true);
  auto Td = apply_raw(delta(0, M0), zg).values;
  auto Tdb_z = apply_raw(delta_bar(0, M0), zg).values;
  auto Td_zb = apply_raw(delta(0, M0), zbg).values;
  auto Tdb_zb = apply_raw(delta_bar(0, M0), zbg).values;
  const double s = std::sqrt(lambda);
  VecC derived = base - cplx(0.0, 1.0 / (4 * s)) * (Tdb_z - Td_zb);
  VecC literal = base + (Td - Tdb_zb / s) / s;

  LambdaDerivativeReport rep;
  const double w = std::sqrt(g.grid.cell());
  rep.lhs_norm = lhs.norm() * w;
  const double ref = std::max(lhs.norm(), derived.norm());
  rep.residual_derived = ref > 0 ? (lhs - derived).norm() / ref : 0.0;
  rep.residual_literal = ref > 0 ? (lhs - literal).norm() / ref : 0.0;
  return rep;
}

HypothesisValue hypothesis_functional(const MultiplierFamily& M, const DerivationRequest& req, int N, ThetaVariant v) {
  const int n = M.basis->dim();
  if (req.order() > M.basis->cutoff()) throw ResolutionError("hypothesis_functional: order exceeds truncation");
  MultiplierFamily cur;
  cur.basis = M.basis;
  for (std::size_t i = 0; i < M.grid.size(); ++i)
    if (M.grid.points[i] > 0) {
      cur.grid.points.push_back(M.grid.points[i]);
      cur.grid.weights.push_back(M.grid.weights[i]);
      cur.matrices.push_back(M.matrices[i]);
      if (M.has_derivative()) cur.d_lambda.push_back(M.d_lambda[i]);
    }
  for (int k = 0; k < req.s; ++k) cur = theta_family(cur, v);
  const int l = req.order();
  const int ab = total_degree(req.alpha) + total_degree(req.beta);
  std::vector<double> part(cur.grid.size(), 0.0);
  std::vector<char> hit(cur.grid.size(), 0);
  parallel_for(cur.grid.size(), [&](std::size_t i) {
    const double lam = cur.grid.points[i];
    auto chi = dyadic_projection(N, lam, M.basis);
    if (chi.entries.cwiseAbs().maxCoeff() == 0.0) return;
    hit[i] = 1;
    auto D = delta_power(req.alpha, req.beta, cur.matrices[i]);
    // entries in the boundary band are truncation artefacts
    auto mask = M.basis->interior(D.band);
    MatC Dm = D.entries;
    for (int r = 0; r < Dm.rows(); ++r)
      for (int c = 0; c < Dm.cols(); ++c)
        if (!mask[r] || !mask[c]) Dm(r, c) = 0.0;
    MatC prod = Dm * chi.entries;
    part[i] = cur.grid.weights[i] * std::pow(lam, -ab) * prod.squaredNorm() * std::pow(lam, n);
  });
  HypothesisValue out;
  double total = 0.0;
  bool any = false;
  for (std::size_t i = 0; i < part.size(); ++i) {
    total += part[i];
    any = any || hit[i];
  }
  out.empty_band = !any;
  out.value = any ? std::pow(2.0, N * (l - n - 1)) * total : 0.0;
  return out;
}

}  // namespace hh
