#include "hh/weyl_fourier.hpp"

#include <json.hpp>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

namespace hh {

// ------------------------------------------------------------------ lambda grids

LambdaGrid make_log_grid(double lmin, double lmax, double ratio, bool both_signs) {
  if (!(lmin > 0) || !(lmax >= lmin) || !(ratio > 1))
    throw std::invalid_argument("make_log_grid: need 0 < min <= max and ratio > 1");
  std::vector<double> pos;
  for (double v = lmin; v <= lmax * (1 + 1e-12); v *= ratio) pos.push_back(v);
  const double du = std::log(ratio);
  std::vector<double> w(pos.size());
  for (std::size_t i = 0; i < pos.size(); ++i) w[i] = pos[i] * du;
  if (pos.size() > 1) {
    w.front() *= 0.5;
    w.back() *= 0.5;
  }
  LambdaGrid g;
  if (both_signs)
    for (std::size_t i = pos.size(); i-- > 0;) {
      g.points.push_back(-pos[i]);
      g.weights.push_back(w[i]);
    }
  for (std::size_t i = 0; i < pos.size(); ++i) {
    g.points.push_back(pos[i]);
    g.weights.push_back(w[i]);
  }
  return g;
}

LambdaGrid parse_lambda_grid(const std::string& spec, bool both_signs) {
  std::stringstream ss(spec);
  std::string a, b, c;
  if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c, ','))
    throw std::invalid_argument("lambda grid must read \"min,max,ratio\": " + spec);
  return make_log_grid(std::stod(a), std::stod(b), std::stod(c), both_signs);
}

// ------------------------------------------------------------------ families

MultiplierFamily MultiplierFamily::build(BasisPtr b, const LambdaGrid& g,
                                         const std::function<OperatorMatrix(double)>& value,
                                         const std::function<OperatorMatrix(double)>& derivative, bool diag) {
  MultiplierFamily M;
  M.basis = b;
  M.grid = g;
  M.diagonal = diag;
  M.matrices.resize(g.size());
  if (derivative) M.d_lambda.resize(g.size());
  parallel_for(g.size(), [&](std::size_t i) {
    M.matrices[i] = value(g.points[i]);
    if (derivative) M.d_lambda[i] = derivative(g.points[i]);
  });
  return M;
}

double MultiplierFamily::sup_norm() const {
  double s = 0.0;
  for (const auto& m : matrices) {
    Eigen::JacobiSVD<MatC> svd(m.entries);
    s = std::max(s, svd.singularValues().size() ? svd.singularValues()(0) : 0.0);
  }
  return s;
}

namespace {

void write_matrix_csv(const MatC& m, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  char buf[128];
  for (int r = 0; r < m.rows(); ++r)
    for (int c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g\n", r, c, m(r, c).real(), m(r, c).imag());
      os << buf;
    }
}

MatC read_matrix_csv(const std::string& path, int size) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  MatC m = MatC::Zero(size, size);
  std::string line;
  while (std::getline(is, line)) {
    int r, c;
    double re, im;
    if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf", &r, &c, &re, &im) != 4) throw std::runtime_error("malformed row in " + path);
    m(r, c) = cplx(re, im);
  }
  return m;
}

}  // namespace

void MultiplierFamily::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::json j;
  j["n"] = basis->dim();
  j["K"] = basis->cutoff();
  j["index_order"] = TruncatedBasis::index_order();
  j["diagonal"] = diagonal;
  j["has_derivative"] = has_derivative();
  j["lambda"] = grid.points;
  j["weights"] = grid.weights;
  nlohmann::json files = nlohmann::json::array();
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::string name = "matrix_" + std::to_string(i) + ".csv";
    write_matrix_csv(matrices[i].entries, dir + "/" + name);
    nlohmann::json e = {{"lambda", grid.points[i]}, {"file", name}, {"band", matrices[i].band}};
    if (has_derivative()) {
      const std::string dname = "dmatrix_" + std::to_string(i) + ".csv";
      write_matrix_csv(d_lambda[i].entries, dir + "/" + dname);
      e["d_file"] = dname;
    }
    files.push_back(e);
  }
  j["matrices"] = files;
  std::ofstream(dir + "/manifest.json") << j.dump(2) << "\n";
}

MultiplierFamily MultiplierFamily::load(const std::string& dir) {
  std::ifstream is(dir + "/manifest.json");
  if (!is) throw std::runtime_error("missing manifest in " + dir);
  auto j = nlohmann::json::parse(is);
  MultiplierFamily M;
  M.basis = make_basis(j.at("n").get<int>(), j.at("K").get<int>());
  M.grid.points = j.at("lambda").get<std::vector<double>>();
  M.grid.weights = j.at("weights").get<std::vector<double>>();
  M.diagonal = j.at("diagonal").get<bool>();
  for (const auto& e : j.at("matrices")) {
    const double lam = e.at("lambda").get<double>();
    M.matrices.emplace_back(M.basis, lam, read_matrix_csv(dir + "/" + e.at("file").get<std::string>(), M.basis->size()),
                            e.at("band").get<int>());
    if (e.contains("d_file"))
      M.d_lambda.emplace_back(M.basis, lam, read_matrix_csv(dir + "/" + e.at("d_file").get<std::string>(), M.basis->size()));
  }
  return M;
}

// ------------------------------------------------------------- representation

namespace {

// <m| D(beta) |k> for m, k <= K, D(beta) = exp(beta a* - conj(beta) a).
// Columns follow D a* = (a* - conj(beta)) D, which never reaches past K.
MatC displacement(cplx beta, int K) {
  if (std::norm(beta) > 600.0) throw ResolutionError("rep_matrix: |z| too large for the representation at this lambda");
  MatC d(K + 1, K + 1);
  d(0, 0) = std::exp(-0.5 * std::norm(beta));
  for (int m = 1; m <= K; ++m) d(m, 0) = d(m - 1, 0) * beta / std::sqrt(static_cast<double>(m));
  const cplx bc = std::conj(beta);
  for (int k = 0; k < K; ++k) {
    const double s = 1.0 / std::sqrt(k + 1.0);
    d(0, k + 1) = -bc * d(0, k) * s;
    for (int m = 1; m <= K; ++m) d(m, k + 1) = (std::sqrt(static_cast<double>(m)) * d(m - 1, k) - bc * d(m, k)) * s;
  }
  return d;
}

cplx beta_of(double lambda, cplx z) {
  const double c = std::sqrt(std::abs(lambda) / 2.0);
  return lambda > 0 ? cplx(0, c) * z : cplx(0, -c) * std::conj(z);
}

}  // namespace

MatC rep_entries(double lambda, const std::vector<cplx>& z, const TruncatedBasis& basis) {
  if (lambda == 0.0) throw std::invalid_argument("rep_matrix: lambda must be nonzero");
  const int n = basis.dim(), K = basis.cutoff(), s = basis.size();
  if (static_cast<int>(z.size()) != n) throw std::invalid_argument("rep_matrix: dimension mismatch");
  if (n == 1) return displacement(beta_of(lambda, z[0]), K);
  std::vector<MatC> d;
  for (int j = 0; j < n; ++j) d.push_back(displacement(beta_of(lambda, z[j]), K));
  MatC out(s, s);
  for (int c = 0; c < s; ++c) {
    const auto& mu = basis.index(c);
    for (int r = 0; r < s; ++r) {
      const auto& nu = basis.index(r);
      cplx v = 1.0;
      for (int j = 0; j < n; ++j) v *= d[j](nu[j], mu[j]);
      out(r, c) = v;
    }
  }
  return out;
}

OperatorMatrix rep_matrix(double lambda, const std::vector<cplx>& z, BasisPtr basis) {
  return OperatorMatrix(basis, lambda, rep_entries(lambda, z, *basis));
}

cplx special_hermite(const MultiIndex& alpha, const MultiIndex& beta, double lambda, const std::vector<cplx>& z) {
  if (lambda == 0.0) throw std::invalid_argument("special_hermite: lambda must be nonzero");
  if (alpha.size() != z.size() || beta.size() != z.size()) throw std::invalid_argument("special_hermite: dimension mismatch");
  cplx v = std::pow(2.0 * kPi, -0.5 * z.size());
  for (std::size_t j = 0; j < z.size(); ++j) {
    const int K = std::max(alpha[j], beta[j]);
    v *= displacement(beta_of(lambda, z[j]), K)(beta[j], alpha[j]);
  }
  return v;
}

OperatorMatrix weyl_transform(const PlaneFunction& g, double lambda, BasisPtr basis, Diagnostics* diag) {
  if (g.grid.n != basis->dim()) throw std::invalid_argument("weyl_transform: dimension mismatch");
  if (diag && shell_mass_fraction(g) > 0.01)
    diag->warn("weyl_transform: function carries more than 1% of its L1 mass in the outer 10% shell");
  const int s = basis->size();
  MatC acc = MatC::Zero(s, s);
  const double scale = std::abs(lambda) / 2.0;
  for (std::size_t i = 0; i < g.grid.count(); ++i) {
    const cplx v = g.values[i];
    if (v == 0.0) continue;
    const auto z = g.grid.point(i);
    double z2 = 0.0;
    for (const auto& c : z) z2 += std::norm(c);
    if (scale * z2 > 600.0) continue;  // representation entries underflow
    acc += v * rep_entries(lambda, z, *basis);
  }
  return OperatorMatrix(basis, lambda, acc * g.grid.cell());
}

namespace {

// tr(pi(z)^* m) at every grid point.
PlaneFunction inverse_weyl_raw(const OperatorMatrix& m, const ZGrid& grid) {
  PlaneFunction out(grid);
  const double c = std::pow(std::abs(m.lambda) / (2.0 * kPi), grid.n);
  const double scale = std::abs(m.lambda) / 2.0;
  for (std::size_t i = 0; i < grid.count(); ++i) {
    const auto z = grid.point(i);
    double z2 = 0.0;
    for (const auto& v : z) z2 += std::norm(v);
    if (scale * z2 > 600.0) continue;
    out.values[i] = c * rep_entries(m.lambda, z, *m.basis).conjugate().cwiseProduct(m.entries).sum();
  }
  return out;
}

}  // namespace

PlaneFunction inverse_weyl(const OperatorMatrix& m, const ZGrid& grid, double tol) {
  if (grid.n != m.basis->dim()) throw std::invalid_argument("inverse_weyl: dimension mismatch");
  if (m.band > 0) {
    const double ref = std::max(1.0, m.entries.cwiseAbs().maxCoeff());
    auto mask = m.basis->interior(m.band);
    double worst = 0.0;
    for (int r = 0; r < m.size(); ++r)
      for (int c = 0; c < m.size(); ++c)
        if (!mask[r] || !mask[c]) worst = std::max(worst, std::abs(m.entries(r, c)));
    if (worst > tol * ref)
      throw ResolutionError("inverse_weyl: boundary-band content " + std::to_string(worst) + " exceeds tolerance");
  }
  return inverse_weyl_raw(m, grid);
}

cplx weyl_dictionary_coefficient(const OperatorMatrix& m, int row_a, int col_b) {
  const int n = m.basis->dim();
  const int parity = (m.basis->degree(row_a) + m.basis->degree(col_b)) % 2 ? -1 : 1;
  return std::pow(2.0 * kPi, -0.5 * n) * std::pow(std::abs(m.lambda), n) * double(parity) * m.entries(row_a, col_b);
}

PlaneFunction lambda_slice(const GridFunction& f, double lambda) {
  PlaneFunction out(f.zgrid);
  const int nt = f.tgrid.nt;
  std::vector<cplx> ph(nt);
  for (int k = 0; k < nt; ++k) ph[k] = std::polar(f.tgrid.spacing(), lambda * f.tgrid.node(k));
  for (std::size_t zi = 0; zi < f.zgrid.count(); ++zi) {
    cplx s = 0.0;
    for (int k = 0; k < nt; ++k) s += f.at(zi, k) * ph[k];
    out.values[zi] = s;
  }
  return out;
}

double nyquist_fraction(const GridFunction& f) {
  const int nt = f.tgrid.nt;
  Eigen::FFT<double> fft;
  std::vector<cplx> in(nt), out(nt);
  double total = 0.0, top = 0.0;
  for (std::size_t zi = 0; zi < f.zgrid.count(); ++zi) {
    for (int k = 0; k < nt; ++k) in[k] = f.at(zi, k);
    fft.fwd(out, in);
    for (int j = 0; j < nt; ++j) {
      const int js = j < nt / 2 ? j : j - nt;
      const double e = std::norm(out[j]);
      total += e;
      if (std::abs(js) >= 0.9 * (nt / 2)) top += e;
    }
  }
  return total > 0 ? top / total : 0.0;
}

MultiplierFamily group_fourier(const GridFunction& f, const LambdaGrid& grid, BasisPtr basis, Diagnostics* diag) {
  if (diag && nyquist_fraction(f) > 0.01) diag->warn("group_fourier: more than 1% of the t-spectrum lies near the Nyquist frequency");
  return MultiplierFamily::build(basis, grid, [&](double lam) { return weyl_transform(lambda_slice(f, lam), lam, basis); });
}

PlaneFunction apply_weyl_multiplier(const OperatorMatrix& m, const PlaneFunction& h) {
  auto W = weyl_transform(h, m.lambda, m.basis);
  return inverse_weyl(m * W, h.grid);
}

GridFunction apply_fourier_multiplier(const MultiplierFamily& M, const GridFunction& f, Diagnostics* diag) {
  const std::size_t nl = M.grid.size(), np = f.zgrid.count();
  if (diag && nl > 0) {
    const double top = std::max(std::abs(M.grid.points.front()), std::abs(M.grid.points.back()));
    const double nyq = kPi / f.tgrid.spacing();
    if (top >= nyq)
      diag->warn("apply_fourier_multiplier: |lambda| up to " + std::to_string(top) + " exceeds t-grid Nyquist " +
                 std::to_string(nyq) + "; slices alias");
  }
  MatC G(np, nl);
  std::vector<std::string> errors(nl);
  parallel_for(nl, [&](std::size_t i) {
    const double lam = M.grid.points[i];
    try {
      auto W = weyl_transform(lambda_slice(f, lam), lam, M.basis);
      G.col(i) = inverse_weyl_raw(M.matrices[i] * W, f.zgrid).values;
    } catch (const std::exception& e) {
      errors[i] = "lambda=" + std::to_string(lam) + ": " + e.what();
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) throw ResolutionError("apply_fourier_multiplier: " + e);
  const int nt = f.tgrid.nt;
  MatC E(nl, nt);
  for (std::size_t i = 0; i < nl; ++i)
    for (int k = 0; k < nt; ++k)
      E(i, k) = std::polar(M.grid.weights[i] / (2.0 * kPi), -M.grid.points[i] * f.tgrid.node(k));
  MatC out = G * E;
  GridFunction res(f.zgrid, f.tgrid);
  for (std::size_t zi = 0; zi < np; ++zi)
    for (int k = 0; k < nt; ++k) res.at(zi, k) = out(zi, k);
  return res;
}

double weyl_plancherel_ratio(const PlaneFunction& g, double lambda, BasisPtr basis) {
  auto W = weyl_transform(g, lambda, basis);
  const double hs = W.entries.squaredNorm();
  return g.l2_norm() * g.l2_norm() / (std::pow(std::abs(lambda), basis->dim()) * hs);
}

// ------------------------------------------------------------ test functions

cplx PolyGaussian::operator()(cplx z) const {
  cplx s = 0.0;
  for (std::size_t i = 0; i < powers.size(); ++i)
    s += coeffs[i] * std::pow(z, powers[i].first) * std::pow(std::conj(z), powers[i].second);
  return s * std::exp(-a * std::norm(z));
}

cplx PolyGaussian::d_z(cplx z) const {
  const cplx zb = std::conj(z);
  cplx s = 0.0;
  for (std::size_t i = 0; i < powers.size(); ++i) {
    const auto [p, q] = powers[i];
    cplx term = -a * std::pow(z, p) * std::pow(zb, q + 1);
    if (p > 0) term += double(p) * std::pow(z, p - 1) * std::pow(zb, q);
    s += coeffs[i] * term;
  }
  return s * std::exp(-a * std::norm(z));
}

cplx PolyGaussian::d_zbar(cplx z) const {
  const cplx zb = std::conj(z);
  cplx s = 0.0;
  for (std::size_t i = 0; i < powers.size(); ++i) {
    const auto [p, q] = powers[i];
    cplx term = -a * std::pow(z, p + 1) * std::pow(zb, q);
    if (q > 0) term += double(q) * std::pow(z, p) * std::pow(zb, q - 1);
    s += coeffs[i] * term;
  }
  return s * std::exp(-a * std::norm(z));
}

PlaneFunction PolyGaussian::sample(const ZGrid& g) const {
  return PlaneFunction::sample(g, [this](const std::vector<cplx>& z) { return (*this)(z[0]); });
}

PolyGaussian random_poly_gaussian(std::uint64_t seed, int degree, double a) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  PolyGaussian h;
  h.a = a;
  for (int p = 0; p <= degree; ++p)
    for (int q = 0; p + q <= degree; ++q) {
      h.powers.emplace_back(p, q);
      h.coeffs.emplace_back(nd(rng), nd(rng));
    }
  return h;
}

IntertwiningReport intertwining_residuals(const PolyGaussian& h, double lambda, BasisPtr basis, const ZGrid& grid) {
  if (basis->dim() != 1 || grid.n != 1) throw Unsupported("intertwining_residuals: n = 1 only");
  auto W = [&](const std::function<cplx(cplx)>& fn) {
    return weyl_transform(PlaneFunction::sample(grid, [&](const std::vector<cplx>& z) { return fn(z[0]); }), lambda, basis);
  };
  auto Wh = W([&](cplx z) { return h(z); });
  auto WZ = W([&](cplx z) { return h.d_z(z) - 0.25 * lambda * std::conj(z) * h(z); });
  auto WZb = W([&](cplx z) { return h.d_zbar(z) + 0.25 * lambda * z * h(z); });
  auto Wz = W([&](cplx z) { return z * h(z); });
  auto Wzb = W([&](cplx z) { return std::conj(z) * h(z); });
  auto A = ladder_matrix(0, lambda, LadderKind::Annihilation, basis);
  auto Ad = ladder_matrix(0, lambda, LadderKind::Creation, basis);
  const cplx I(0, 1);
  auto rel = [&](const OperatorMatrix& lhs, const OperatorMatrix& rhs) {
    const double ref = std::max(lhs.interior_block(1).cwiseAbs().maxCoeff(), rhs.interior_block(1).cwiseAbs().maxCoeff());
    return ref > 0 ? interior_max_diff(lhs, rhs, 1) / ref : 0.0;
  };
  const cplx lam(lambda);
  IntertwiningReport r;
  r.lambda = lambda;
  r.literal_Z = rel(WZ, I * (Wh * Ad));
  r.literal_Zbar = rel(WZb, I * (Wh * A));
  r.literal_z = rel(lam * Wz, 2.0 * I * commutator(Wh, A));
  r.literal_zbar = rel(lam * Wzb, 2.0 * I * commutator(Ad, Wh));
  r.derived_Z = rel(WZ, -0.5 * I * (Ad * Wh));
  r.derived_Zbar = rel(WZb, -0.5 * I * (A * Wh));
  r.derived_z = rel(lam * Wz, I * commutator(Wh, A));
  r.derived_zbar = rel(lam * Wzb, I * commutator(Ad, Wh));
  return r;
}

}  // namespace hh

namespace hh {

// ---------------------------------------------------------------- wave packets

double WavePacket::envelope(double lambda) const {
  const double d = lambda - lambda0;
  return std::exp(-d * d / (2 * sigma * sigma));
}

double WavePacket::d_envelope(double lambda) const {
  return -(lambda - lambda0) / (sigma * sigma) * envelope(lambda);
}

namespace {

// |lambda| W(Phi_{a,b}) = (2 pi)^{1/2} (-1)^{a+b} |a><b| for n = 1.
MatC packet_matrix(const WavePacket& p, const TruncatedBasis& basis) {
  MatC m = MatC::Zero(basis.size(), basis.size());
  for (std::size_t i = 0; i < p.c.size(); ++i) {
    const int r = basis.position({p.a[i]}), col = basis.position({p.b[i]});
    if (r < 0 || col < 0) throw ResolutionError("WavePacket: term outside the truncation");
    m(r, col) += ((p.a[i] + p.b[i]) % 2 ? -1.0 : 1.0) * std::sqrt(2 * kPi) * p.c[i];
  }
  return m;
}

}  // namespace

OperatorMatrix WavePacket::hat(double lambda, BasisPtr basis) const {
  return OperatorMatrix(basis, lambda, envelope(lambda) * packet_matrix(*this, *basis));
}

OperatorMatrix WavePacket::d_hat(double lambda, BasisPtr basis) const {
  return OperatorMatrix(basis, lambda, d_envelope(lambda) * packet_matrix(*this, *basis));
}

cplx WavePacket::slice(double lambda, cplx z) const {
  cplx s = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) s += c[i] * special_hermite({a[i]}, {b[i]}, lambda, {z});
  return envelope(lambda) * std::abs(lambda) * s;
}

GridFunction WavePacket::sample(const ZGrid& zg, const TGrid& tg, int lambda_nodes) const {
  if (zg.n != 1) throw Unsupported("WavePacket: n = 1 only");
  const double lo = lambda0 - 8 * sigma, hi = lambda0 + 8 * sigma;
  if (lo * hi <= 0) throw std::invalid_argument("WavePacket: envelope support must avoid lambda = 0");
  const double dl = (hi - lo) / (lambda_nodes - 1);
  int K = 0;
  for (std::size_t i = 0; i < c.size(); ++i) K = std::max({K, a[i], b[i]});
  const std::size_t np = zg.count();
  MatC S(np, lambda_nodes);
  parallel_for(np, [&](std::size_t zi) {
    const cplx z = zg.point(zi)[0];
    for (int q = 0; q < lambda_nodes; ++q) {
      const double lam = lo + q * dl;
      const double c2 = std::abs(lam) / 2.0 * std::norm(z);
      if (c2 > 600.0) {
        S(zi, q) = 0.0;
        continue;
      }
      MatC d = displacement(beta_of(lam, z), K);
      cplx s = 0.0;
      for (std::size_t i = 0; i < c.size(); ++i) s += c[i] * d(b[i], a[i]);
      S(zi, q) = s * (envelope(lam) * std::abs(lam) / std::sqrt(2 * kPi));
    }
  });
  MatC E(lambda_nodes, tg.nt);
  for (int q = 0; q < lambda_nodes; ++q) {
    const double w = (q == 0 || q == lambda_nodes - 1 ? 0.5 : 1.0) * dl / (2 * kPi);
    for (int k = 0; k < tg.nt; ++k) E(q, k) = std::polar(w, -(lo + q * dl) * tg.node(k));
  }
  MatC F = S * E;
  GridFunction f(zg, tg);
  for (std::size_t zi = 0; zi < np; ++zi)
    for (int k = 0; k < tg.nt; ++k) f.at(zi, k) = F(zi, k);
  return f;
}

WavePacket random_wave_packet(std::uint64_t seed, int terms, int max_degree, double lambda0, double sigma) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> deg(0, max_degree);
  std::normal_distribution<double> nd(0.0, 1.0);
  WavePacket p;
  p.lambda0 = lambda0;
  p.sigma = sigma;
  for (int i = 0; i < terms; ++i) {
    p.a.push_back(deg(rng));
    p.b.push_back(deg(rng));
    p.c.emplace_back(nd(rng), nd(rng));
  }
  return p;
}

}  // namespace hh
