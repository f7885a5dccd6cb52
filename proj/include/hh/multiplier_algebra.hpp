#pragma once
// Hermite multipliers a(H(lambda)), finite differences in k, partial
// isometries V_alpha^m and the coefficient calculus of delta, delta-bar and
// Theta on finite V-expansions.

#include "hh/derivations.hpp"

#include <json.hpp>
#include <map>

namespace hh {

// a(k, lambda) with a short description kept for reports.
struct HermiteSymbol {
  std::function<cplx(int, double)> a;
  std::string name;
  int smoothness = -1;  // number of lambda-derivatives known to exist, -1 unknown
  cplx operator()(int k, double lambda) const { return a(k, lambda); }
};

// Diagonal matrix with entry a(|mu|, lambda) at mu.
OperatorMatrix hermite_multiplier(const HermiteSymbol& sym, double lambda, BasisPtr basis);

enum class Difference { Forward, Backward };
// Forward: a(k+1) - a(k). Backward: a(k) - a(k-1), with a(-1) := a(0).
HermiteSymbol finite_difference(const HermiteSymbol& sym, Difference kind);

struct CommutatorBoundReport {
  std::vector<int> r_values;    // admissible r with 0 <= r <= p <= q + r
  std::vector<cplx> constants;  // fitted C_{p,q,r}
  double residual = 0.0;        // ||lhs - fit||_HS / ||lhs||_HS on the interior block
  double lhs_norm = 0.0;
  bool structural_failure = false;  // no admissible r but nonzero left side
};

// delta^p dbar^q a(H) against
//   sum_r C_r lambda^{-(q+2r-p)/2} (A*)^{q+r-p} A^r (D_-^r D_+^q a)(H), n = 1, lambda > 0.
CommutatorBoundReport verify_commutator_bound(int p, int q, const HermiteSymbol& sym, double lambda, BasisPtr basis);

// V_alpha^m(lambda) Phi_mu = (-1)^{|m+|} delta_{alpha+m+, mu} Phi_{alpha+m-} for lambda > 0,
// V_alpha^m(lambda) = V_alpha^m(-lambda)^* for lambda < 0.
// Throws ResolutionError when alpha + m+- leaves the truncation.
OperatorMatrix partial_isometry(const IntVector& m, const MultiIndex& alpha, double lambda, BasisPtr basis);

struct VKey {
  IntVector m;
  MultiIndex alpha;
  auto operator<=>(const VKey&) const = default;
};

struct VCoefficient {
  std::function<cplx(double)> value;
  std::function<cplx(double)> d_lambda;  // may be empty
};

// M(lambda) = sum B(lambda, m, alpha) V_alpha^m(lambda) over finitely many keys.
struct VExpansion {
  int n = 1;
  std::map<VKey, VCoefficient> terms;

  void add(const IntVector& m, const MultiIndex& alpha, std::function<cplx(double)> value,
           std::function<cplx(double)> d_lambda = nullptr);
  bool has_derivative() const;
  OperatorMatrix matrix(double lambda, BasisPtr basis) const;
  // Entrywise lambda-derivative: sum dB V.
  OperatorMatrix d_matrix(double lambda, BasisPtr basis) const;
  // Largest |alpha| + max(|m+|, |m-|) over the terms.
  int max_degree() const;

  // {n, lambda: [...], terms: [{m, alpha, B: [[re, im], ...], dB?: [...]}]}
  nlohmann::json to_json(const LambdaGrid& grid) const;
  // Coefficients are linear interpolants of the tables (exact at the nodes).
  static VExpansion from_json(const nlohmann::json& j);
};

// Coefficient rules for delta_j and delta-bar_j (j zero-based). Terms are
// split by the sign of m_j and each part uses its branch. For lambda < 0 the
// rules follow from V(lambda) = V(-lambda)^* and (delta m)^* = dbar(m^*):
// delta acts by the delta-bar rule and vice versa. The outputs carry derivatives when the
// input does.
VExpansion delta_on_V_expansion(const VExpansion& e, int j, double lambda);
VExpansion delta_bar_on_V_expansion(const VExpansion& e, int j, double lambda);

// Coefficients dB + (n/2lambda) B + (1/2lambda) sum_j [sqrt(a_j (a_j + |m_j|)) B(m, a - e_j)
//   - sqrt((a_j + 1)(a_j + |m_j| + 1)) B(m, a + e_j)], lambda > 0.
VExpansion theta_on_V_expansion(const VExpansion& e, double lambda);

// Sign-pure parts of e with respect to coordinate j: {m_j >= 0, m_j < 0}.
std::pair<VExpansion, VExpansion> split_by_sign(const VExpansion& e, int j);

// m = sum <m, V>_HS V / ||V||^2 with constant coefficients.
VExpansion hs_decomposition(const OperatorMatrix& m);

}  // namespace hh
