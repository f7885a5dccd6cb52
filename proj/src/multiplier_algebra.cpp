#include "hh/multiplier_algebra.hpp"

#include <algorithm>
#include <cmath>

namespace hh {

OperatorMatrix hermite_multiplier(const HermiteSymbol& sym, double lambda, BasisPtr basis) {
  MatC d = MatC::Zero(basis->size(), basis->size());
  for (int i = 0; i < basis->size(); ++i) d(i, i) = sym(basis->degree(i), lambda);
  return OperatorMatrix(basis, lambda, d);
}

HermiteSymbol finite_difference(const HermiteSymbol& sym, Difference kind) {
  HermiteSymbol out;
  auto a = sym.a;
  if (kind == Difference::Forward) {
    out.a = [a](int k, double l) { return a(k + 1, l) - a(k, l); };
    out.name = "D+(" + sym.name + ")";
  } else {
    out.a = [a](int k, double l) { return k == 0 ? cplx(0.0) : a(k, l) - a(k - 1, l); };
    out.name = "D-(" + sym.name + ")";
  }
  out.smoothness = sym.smoothness;
  return out;
}

CommutatorBoundReport verify_commutator_bound(int p, int q, const HermiteSymbol& sym, double lambda, BasisPtr basis) {
  if (basis->dim() != 1) throw Unsupported("verify_commutator_bound: n = 1 only");
  if (p < 0 || q < 0 || p > 2 || q > 2) throw Unsupported("verify_commutator_bound: need 0 <= p, q <= 2");
  if (!(lambda > 0)) throw Unsupported("verify_commutator_bound: lambda > 0 only");
  CommutatorBoundReport rep;
  auto aH = hermite_multiplier(sym, lambda, basis);
  auto lhs = delta_power({p}, {q}, aH);
  const int band = p + q + 1;
  MatC L = OperatorMatrix(basis, lambda, lhs.entries).interior_block(band);
  rep.lhs_norm = L.norm();

  auto A = ladder_matrix(0, lambda, LadderKind::Annihilation, basis);
  auto Ad = ladder_matrix(0, lambda, LadderKind::Creation, basis);
  std::vector<MatC> cols;
  for (int r = 0; r <= p; ++r) {
    if (p > q + r) continue;
    rep.r_values.push_back(r);
    HermiteSymbol s = sym;
    for (int k = 0; k < q; ++k) s = finite_difference(s, Difference::Forward);
    for (int k = 0; k < r; ++k) s = finite_difference(s, Difference::Backward);
    auto term = hermite_multiplier(s, lambda, basis);
    for (int k = 0; k < r; ++k) term = A * term;
    for (int k = 0; k < q + r - p; ++k) term = Ad * term;
    term = cplx(std::pow(lambda, -0.5 * (q + 2 * r - p))) * term;
    cols.push_back(OperatorMatrix(basis, lambda, term.entries).interior_block(band));
  }
  if (rep.r_values.empty()) {
    rep.structural_failure = rep.lhs_norm > 0;
    rep.residual = rep.lhs_norm > 0 ? 1.0 : 0.0;
    return rep;
  }
  const Eigen::Index rows = L.size();
  MatC design(rows, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) design.col(c) = cols[c].reshaped();
  VecC rhs = L.reshaped();
  VecC coef = design.colPivHouseholderQr().solve(rhs);
  for (Eigen::Index c = 0; c < coef.size(); ++c) rep.constants.push_back(coef[c]);
  const double res = (design * coef - rhs).norm();
  rep.residual = rep.lhs_norm > 0 ? res / rep.lhs_norm : res;
  return rep;
}

namespace {

int plus_part(int v) { return std::max(v, 0); }
int minus_part(int v) { return std::max(-v, 0); }

}  // namespace

OperatorMatrix partial_isometry(const IntVector& m, const MultiIndex& alpha, double lambda, BasisPtr basis) {
  const int n = basis->dim();
  if (static_cast<int>(m.size()) != n || static_cast<int>(alpha.size()) != n)
    throw std::invalid_argument("partial_isometry: index length must equal n");
  MultiIndex from(n), to(n);
  int sign_exp = 0;
  for (int j = 0; j < n; ++j) {
    if (alpha[j] < 0) throw std::invalid_argument("partial_isometry: alpha must be nonnegative");
    from[j] = alpha[j] + plus_part(m[j]);
    to[j] = alpha[j] + minus_part(m[j]);
    sign_exp += plus_part(m[j]);
  }
  const int c = basis->position(from), r = basis->position(to);
  if (c < 0 || r < 0) throw ResolutionError("partial_isometry: alpha + m+- leaves the truncation");
  MatC e = MatC::Zero(basis->size(), basis->size());
  const double s = sign_exp % 2 ? -1.0 : 1.0;
  if (lambda > 0)
    e(r, c) = s;
  else
    e(c, r) = s;
  return OperatorMatrix(basis, lambda, e);
}

// ------------------------------------------------------------------ VExpansion

void VExpansion::add(const IntVector& m, const MultiIndex& alpha, std::function<cplx(double)> value,
                     std::function<cplx(double)> d_lambda) {
  if (static_cast<int>(m.size()) != n || static_cast<int>(alpha.size()) != n)
    throw std::invalid_argument("VExpansion::add: index length must equal n");
  VKey key{m, alpha};
  auto it = terms.find(key);
  if (it == terms.end()) {
    terms[key] = VCoefficient{std::move(value), std::move(d_lambda)};
    return;
  }
  auto v0 = it->second.value, d0 = it->second.d_lambda;
  it->second.value = [v0, value](double l) { return v0(l) + value(l); };
  if (d0 && d_lambda)
    it->second.d_lambda = [d0, d_lambda](double l) { return d0(l) + d_lambda(l); };
  else
    it->second.d_lambda = nullptr;
}

bool VExpansion::has_derivative() const {
  for (const auto& [k, c] : terms)
    if (!c.d_lambda) return false;
  return true;
}

OperatorMatrix VExpansion::matrix(double lambda, BasisPtr basis) const {
  auto out = OperatorMatrix::zero(basis, lambda);
  for (const auto& [k, c] : terms) out.entries += c.value(lambda) * partial_isometry(k.m, k.alpha, lambda, basis).entries;
  return out;
}

OperatorMatrix VExpansion::d_matrix(double lambda, BasisPtr basis) const {
  if (!has_derivative()) throw std::invalid_argument("VExpansion::d_matrix: derivative not supplied");
  auto out = OperatorMatrix::zero(basis, lambda);
  for (const auto& [k, c] : terms)
    out.entries += c.d_lambda(lambda) * partial_isometry(k.m, k.alpha, lambda, basis).entries;
  return out;
}

int VExpansion::max_degree() const {
  int d = 0;
  for (const auto& [k, c] : terms) {
    int a = 0, up = 0, dn = 0;
    for (int j = 0; j < n; ++j) {
      a += k.alpha[j];
      up += plus_part(k.m[j]);
      dn += minus_part(k.m[j]);
    }
    d = std::max(d, a + std::max(up, dn));
  }
  return d;
}

nlohmann::json VExpansion::to_json(const LambdaGrid& grid) const {
  nlohmann::json j;
  j["n"] = n;
  j["lambda"] = grid.points;
  j["terms"] = nlohmann::json::array();
  for (const auto& [k, c] : terms) {
    nlohmann::json t;
    t["m"] = k.m;
    t["alpha"] = k.alpha;
    auto table = [&](const std::function<cplx(double)>& f) {
      nlohmann::json a = nlohmann::json::array();
      for (double l : grid.points) {
        const cplx v = f(l);
        a.push_back({v.real(), v.imag()});
      }
      return a;
    };
    t["B"] = table(c.value);
    if (c.d_lambda) t["dB"] = table(c.d_lambda);
    j["terms"].push_back(t);
  }
  return j;
}

namespace {

std::function<cplx(double)> interpolant(const std::vector<double>& x, const std::vector<cplx>& y) {
  return [x, y](double l) {
    if (x.size() == 1) return y[0];
    auto it = std::lower_bound(x.begin(), x.end(), l);
    if (it == x.end()) return y.back();
    const std::size_t i = static_cast<std::size_t>(it - x.begin());
    if (*it == l || i == 0) return y[i];
    const double s = (l - x[i - 1]) / (x[i] - x[i - 1]);
    return (1 - s) * y[i - 1] + s * y[i];
  };
}

std::vector<cplx> read_table(const nlohmann::json& a) {
  std::vector<cplx> v;
  for (const auto& e : a) v.emplace_back(e.at(0).get<double>(), e.at(1).get<double>());
  return v;
}

}  // namespace

VExpansion VExpansion::from_json(const nlohmann::json& j) {
  VExpansion e;
  e.n = j.at("n").get<int>();
  const auto x = j.at("lambda").get<std::vector<double>>();
  for (const auto& t : j.at("terms")) {
    auto B = read_table(t.at("B"));
    if (B.size() != x.size()) throw std::invalid_argument("VExpansion::from_json: table length mismatch");
    std::function<cplx(double)> d;
    if (t.contains("dB")) d = interpolant(x, read_table(t.at("dB")));
    e.add(t.at("m").get<IntVector>(), t.at("alpha").get<MultiIndex>(), interpolant(x, B), d);
  }
  return e;
}

// ----------------------------------------------------------- coefficient rules

namespace {

struct Contribution {
  double weight;
  VCoefficient src;
};

using Accumulator = std::map<VKey, std::vector<Contribution>>;

VExpansion assemble(int n, const Accumulator& acc) {
  VExpansion out;
  out.n = n;
  for (const auto& [key, parts] : acc) {
    bool with_d = true;
    for (const auto& c : parts) with_d = with_d && static_cast<bool>(c.src.d_lambda);
    auto value = [parts](double l) {
      cplx s = 0.0;
      for (const auto& c : parts) s += c.weight * c.src.value(l);
      return s;
    };
    std::function<cplx(double)> d;
    if (with_d)
      d = [parts](double l) {
        cplx s = 0.0;
        for (const auto& c : parts) s += c.weight * c.src.d_lambda(l);
        return s;
      };
    out.add(key.m, key.alpha, value, d);
  }
  return out;
}

void push(Accumulator& acc, IntVector m, MultiIndex a, double w, const VCoefficient& c) {
  for (int v : a)
    if (v < 0) return;
  if (w == 0.0) return;
  acc[VKey{std::move(m), std::move(a)}].push_back({w, c});
}

// Rules for lambda > 0 derived from the ladder action on |alpha+m-><alpha+m+|.
void delta_rule(Accumulator& acc, const VKey& k, const VCoefficient& c, int j, double sgn) {
  const double r2 = std::sqrt(2.0);
  IntVector m = k.m;
  MultiIndex a = k.alpha;
  const int mj = m[j], aj = a[j];
  IntVector mu = m;
  mu[j] += 1;
  if (mj >= 0) {
    push(acc, mu, a, -sgn * r2 * std::sqrt(aj + mj + 1.0), c);
    MultiIndex am = a;
    am[j] -= 1;
    push(acc, mu, am, sgn * r2 * std::sqrt(double(aj)), c);
  } else {
    MultiIndex ap = a;
    ap[j] += 1;
    push(acc, mu, ap, sgn * r2 * std::sqrt(aj + 1.0), c);
    push(acc, mu, a, -sgn * r2 * std::sqrt(double(aj - mj)), c);
  }
}

void delta_bar_rule(Accumulator& acc, const VKey& k, const VCoefficient& c, int j, double sgn) {
  const double r2 = std::sqrt(2.0);
  IntVector m = k.m;
  MultiIndex a = k.alpha;
  const int mj = m[j], aj = a[j];
  IntVector md = m;
  md[j] -= 1;
  if (mj >= 1) {
    MultiIndex ap = a;
    ap[j] += 1;
    push(acc, md, ap, -sgn * r2 * std::sqrt(aj + 1.0), c);
    push(acc, md, a, sgn * r2 * std::sqrt(double(aj + mj)), c);
  } else {
    push(acc, md, a, sgn * r2 * std::sqrt(aj - mj + 1.0), c);
    MultiIndex am = a;
    am[j] -= 1;
    push(acc, md, am, -sgn * r2 * std::sqrt(double(aj)), c);
  }
}

void check_coordinate(const VExpansion& e, int j) {
  if (j < 0 || j >= e.n) throw std::invalid_argument("coordinate index out of range");
  for (const auto& [k, c] : e.terms)
    if (static_cast<int>(k.m.size()) != e.n || static_cast<int>(k.alpha.size()) != e.n || !c.value)
      throw std::invalid_argument("malformed V-expansion term");
}

}  // namespace

std::pair<VExpansion, VExpansion> split_by_sign(const VExpansion& e, int j) {
  check_coordinate(e, j);
  VExpansion nonneg, neg;
  nonneg.n = neg.n = e.n;
  for (const auto& [k, c] : e.terms) (k.m[j] >= 0 ? nonneg : neg).terms[k] = c;
  return {nonneg, neg};
}

VExpansion delta_on_V_expansion(const VExpansion& e, int j, double lambda) {
  if (lambda == 0.0) throw std::invalid_argument("lambda must be nonzero");
  Accumulator acc;
  auto [pos, neg] = split_by_sign(e, j);
  for (const auto* part : {&pos, &neg})
    for (const auto& [k, c] : part->terms) {
      if (lambda > 0)
        delta_rule(acc, k, c, j, 1.0);
      else
        delta_bar_rule(acc, k, c, j, 1.0);
    }
  return assemble(e.n, acc);
}

VExpansion delta_bar_on_V_expansion(const VExpansion& e, int j, double lambda) {
  if (lambda == 0.0) throw std::invalid_argument("lambda must be nonzero");
  Accumulator acc;
  auto [pos, neg] = split_by_sign(e, j);
  for (const auto* part : {&pos, &neg})
    for (const auto& [k, c] : part->terms) {
      if (lambda > 0)
        delta_bar_rule(acc, k, c, j, 1.0);
      else
        delta_rule(acc, k, c, j, 1.0);
    }
  return assemble(e.n, acc);
}

VExpansion theta_on_V_expansion(const VExpansion& e, double lambda) {
  if (!(lambda > 0)) throw Unsupported("theta_on_V_expansion: lambda > 0 only");
  if (!e.has_derivative()) throw std::invalid_argument("theta_on_V_expansion: dB required");
  const int n = e.n;
  // value(l) = sum w0 * dB + (w1 / l) * B over contributions
  struct Part {
    double w_d, w_b;
    VCoefficient src;
  };
  std::map<VKey, std::vector<Part>> acc;
  for (const auto& [k, c] : e.terms) {
    acc[k].push_back({1.0, 0.5 * n, c});
    for (int j = 0; j < n; ++j) {
      const int aj = k.alpha[j], mj = std::abs(k.m[j]);
      MultiIndex up = k.alpha, dn = k.alpha;
      up[j] += 1;
      dn[j] -= 1;
      acc[VKey{k.m, up}].push_back({0.0, 0.5 * std::sqrt((aj + 1.0) * (aj + 1.0 + mj)), c});
      if (aj >= 1) acc[VKey{k.m, dn}].push_back({0.0, -0.5 * std::sqrt(double(aj) * (aj + mj)), c});
    }
  }
  VExpansion out;
  out.n = n;
  for (const auto& [key, parts] : acc)
    out.add(key.m, key.alpha, [parts](double l) {
      cplx s = 0.0;
      for (const auto& p : parts) {
        if (p.w_d != 0.0) s += p.w_d * p.src.d_lambda(l);
        s += (p.w_b / l) * p.src.value(l);
      }
      return s;
    });
  return out;
}

VExpansion hs_decomposition(const OperatorMatrix& m) {
  const auto& b = *m.basis;
  const int n = b.dim();
  VExpansion out;
  out.n = n;
  for (int r = 0; r < m.size(); ++r)
    for (int c = 0; c < m.size(); ++c) {
      const cplx v = m.entries(r, c);
      if (v == 0.0) continue;
      // lambda > 0: row = alpha + m-, col = alpha + m+; lambda < 0 transposed
      const MultiIndex& row = m.lambda > 0 ? b.index(r) : b.index(c);
      const MultiIndex& col = m.lambda > 0 ? b.index(c) : b.index(r);
      IntVector mv(n);
      MultiIndex a(n);
      int sign_exp = 0;
      for (int j = 0; j < n; ++j) {
        mv[j] = col[j] - row[j];
        a[j] = std::min(col[j], row[j]);
        sign_exp += plus_part(mv[j]);
      }
      const cplx coef = (sign_exp % 2 ? -1.0 : 1.0) * v;
      out.add(mv, a, [coef](double) { return coef; }, [](double) { return cplx(0.0); });
    }
  return out;
}

}  // namespace hh
