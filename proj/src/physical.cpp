#include "bsq/physical.hpp"

#include <cmath>
#include <istream>
#include <limits>
#include <numbers>
#include <sstream>

namespace bsq {

namespace {

constexpr double kPi = std::numbers::pi;

// Thomas-Fermi prefactors in exact radical form.
const double kChiCoef = std::pow(2.0, 0.6) * std::pow(3.0, 0.4) / std::pow(5.0, 0.6);
const double kGamma2Coef = std::pow(15.0, 0.4) / (std::pow(2.0, 1.4) * 7.0 * kPi);
const double kGamma3Coef =
    std::pow(5.0, 0.8) / (std::pow(2.0, 3.8) * std::pow(3.0, 0.2) * 7.0 * kPi * kPi);
const double kOmegaOptCoef = std::pow(2.0, 19.0 / 12.0) * std::pow(7.0, 5.0 / 12.0) *
                             std::pow(kPi, 5.0 / 6.0) / std::cbrt(15.0);

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    std::ostringstream err;
    err << name << " must be finite and > 0 (got " << v << ")";
    throw ConfigError(err.str());
  }
}

}  // namespace

void PhysicalParams::validate() const {
  require_positive(mass, "mass");
  require_positive(a_scatt, "a_scatt");
  require_positive(omega_bar, "omega_bar");
  require_positive(n_init, "n_init");
  const std::array<std::pair<double, const char*>, 3> ks{{{k1, "k1"}, {k2, "k2"}, {k3, "k3"}}};
  for (const auto& [v, name] : ks)
    if (!(v >= 0.0) || !std::isfinite(v)) {
      std::ostringstream err;
      err << name << " must be finite and >= 0 (got " << v << ")";
      throw ConfigError(err.str());
    }
}

ModelParams TfModel::to_model() const {
  ModelParams mp;
  mp.n_init = static_cast<int>(std::lround(n));
  mp.chi = chi;
  mp.gamma = gamma;
  return mp;
}

TfModel tf_map(const PhysicalParams& p) {
  p.validate();
  const double hm = kHbar / p.mass;
  const double a = p.a_scatt, w = p.omega_bar, n = p.n_init;
  const double a0 = std::sqrt(hm / w);

  TfModel tf;
  tf.n = n;
  tf.mu = 0.5 * kHbar * w * std::pow(7.5 * n * a / a0, 0.4);
  tf.chi = kChiCoef * std::pow(hm, -0.2) * std::pow(a, 0.4) * std::pow(w, 1.2) * std::pow(n, -0.6);
  tf.lost_rate[0] = p.k1;
  tf.lost_rate[1] = kGamma2Coef * std::pow(hm, -1.2) * std::pow(a, -0.6) * std::pow(w, 1.2) *
                    std::pow(n, 0.4) * p.k2;
  tf.lost_rate[2] = kGamma3Coef * std::pow(hm, -2.4) * std::pow(a, -1.2) * std::pow(w, 2.4) *
                    std::pow(n, 0.8) * p.k3;
  for (int m = 1; m <= 3; ++m) tf.gamma[m - 1] = tf.lost_rate[m - 1] / (m * std::pow(0.5 * n, m - 1));
  return tf;
}

double omega_opt(const PhysicalParams& p) {
  if (!(p.k1 > 0.0) || !(p.k3 > 0.0))
    throw DomainError("no interior optimum in omega_bar: needs k1 > 0 and k3 > 0");
  require_positive(p.mass, "mass");
  require_positive(p.a_scatt, "a_scatt");
  require_positive(p.n_init, "n_init");
  return kOmegaOptCoef * (kHbar / p.mass) * std::sqrt(p.a_scatt) * std::pow(p.n_init, -1.0 / 3.0) *
         std::pow(p.k1 / p.k3, 5.0 / 12.0);
}

double xi2_floor(const PhysicalParams& p) {
  require_positive(p.a_scatt, "a_scatt");
  require_positive(p.mass, "mass");
  const double pref = 5.0 * std::sqrt(3.0) / (28.0 * kPi) * p.mass / (kHbar * p.a_scatt);
  const double loss = std::sqrt(3.5 * p.k1 * p.k3) + p.k2;
  return std::cbrt(pref * pref) * std::cbrt(loss * loss);
}

Optimum optimum_at_n(const PhysicalParams& p, double n) {
  PhysicalParams q = p;
  q.n_init = n;
  q.omega_bar = omega_opt(q);
  const TfModel tf = tf_map(q);
  const auto best = best_time_and_xi2({n, tf.chi, tf.gamma_sq()});

  Optimum o;
  o.omega_opt = q.omega_bar;
  o.n_eta = n;
  o.t_best = best.t_best;
  o.xi2 = best.xi2;
  o.xi2_floor = xi2_floor(q);
  o.chi = tf.chi;
  o.lost_rate = tf.lost_rate;
  o.c_param = tf.c_param();
  o.f_c = squeezing_shape(o.c_param);
  o.lost_fraction = (tf.lost_rate[0] + tf.lost_rate[1] + tf.lost_rate[2]) * best.t_best;
  o.lost_fraction_warning = o.lost_fraction > 0.1;
  return o;
}

Optimum optimize_all(const PhysicalParams& p, double eta) {
  if (!(eta > 0.0)) throw ConfigError("eta must be > 0");
  if (!(p.k1 > 0.0) || !(p.k3 > 0.0))
    throw DomainError("optimization over omega_bar needs k1 > 0 and k3 > 0");
  const double target = (1.0 + eta) * xi2_floor(p);
  const auto excess = [&](double log_n) { return optimum_at_n(p, std::exp(log_n)).xi2 - target; };

  // The optimized squeezing decreases with N: scan a log grid for the crossing.
  double lo = std::log(2.0), hi = lo;
  if (!(excess(lo) > 0.0))
    throw DomainError("target squeezing already met at N = 2; eta too large for this model");
  for (;;) {
    hi = lo + 0.5;
    if (hi > std::log(1e40)) throw DomainError("N_eta not bracketed below N = 1e40; eta too small");
    if (excess(hi) <= 0.0) break;
    lo = hi;
  }
  for (int iter = 0; iter < 200 && hi - lo > 1e-13; ++iter) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) > 0.0 ? lo : hi) = mid;
  }
  return optimum_at_n(p, std::exp(0.5 * (lo + hi)));
}

ClosedFormOptimum closed_form_k2_zero(const PhysicalParams& p) {
  require_positive(p.k1, "k1");
  require_positive(p.k3, "k3");
  require_positive(p.a_scatt, "a_scatt");
  const double m = p.mass, a = p.a_scatt;
  ClosedFormOptimum c;
  c.n_eta = 17.833 / std::sqrt(p.k1 * p.k3) * kHbar * a / m;
  c.t_best = 0.277 * std::pow(m / (kHbar * p.k1), 2.0 / 3.0) * std::cbrt(p.k3 / (a * a));
  c.xi2 = 0.356 * std::cbrt(m * p.k1 / kHbar) * std::cbrt(m * p.k3 / (kHbar * a * a));
  return c;
}

std::vector<ScanRow> scan_n(const PhysicalParams& p, const std::vector<double>& n_grid,
                            LossMask mask, bool numeric) {
  for (size_t i = 1; i < n_grid.size(); ++i)
    if (!(n_grid[i] > n_grid[i - 1])) throw ConfigError("n_grid must be strictly increasing");
  PhysicalParams q = p;
  if (!mask.one_body) q.k1 = 0.0;
  if (!mask.two_body) q.k2 = 0.0;
  if (!mask.three_body) q.k3 = 0.0;

  std::vector<ScanRow> rows;
  rows.reserve(n_grid.size());
  for (const double n : n_grid) {
    q.n_init = n;
    const TfModel tf = tf_map(q);
    const auto best = best_time_and_xi2({n, tf.chi, tf.gamma_sq()});
    ScanRow row;
    row.n = n;
    row.chi = tf.chi;
    row.c_param = tf.c_param();
    row.t_best = best.t_best;
    row.xi2_best = best.xi2;
    row.lost_fraction = (tf.lost_rate[0] + tf.lost_rate[1] + tf.lost_rate[2]) * best.t_best;
    row.t_numeric = row.xi2_numeric = std::numeric_limits<double>::quiet_NaN();
    if (numeric) {
      const auto curve = [&](double t) { return xi2_constant_rate(n, tf.chi, tf.gamma, t).xi2; };
      const auto mn = minimize_xi2_over_t(curve, 0.0, default_time_horizon(n, tf.chi));
      if (std::isfinite(mn.xi2)) {
        row.t_numeric = mn.t;
        row.xi2_numeric = mn.xi2;
      }
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<K3Point> read_k3_table(std::istream& in) {
  std::vector<K3Point> out;
  std::string line;
  int line_no = 0;
  bool header_seen = false;
  const auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line != "B_gauss,K3_m6_per_s")
        throw ConfigError("K3 table line " + std::to_string(line_no) +
                          ": expected header 'B_gauss,K3_m6_per_s', got '" + line + "'");
      header_seen = true;
      continue;
    }
    const auto comma = line.find(',');
    K3Point pt;
    try {
      if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
        throw std::invalid_argument("need exactly two fields");
      size_t used_b = 0, used_k = 0;
      const std::string fb = trim(line.substr(0, comma)), fk = trim(line.substr(comma + 1));
      pt.b_gauss = std::stod(fb, &used_b);
      pt.k3 = std::stod(fk, &used_k);
      if (used_b != fb.size() || used_k != fk.size()) throw std::invalid_argument("trailing characters");
      if (!std::isfinite(pt.b_gauss) || !(pt.k3 >= 0.0) || !std::isfinite(pt.k3))
        throw std::invalid_argument("B must be finite and K3 >= 0");
    } catch (const std::exception& e) {
      throw ConfigError("K3 table line " + std::to_string(line_no) + ": malformed row '" + line +
                        "' (" + e.what() + ")");
    }
    if (!out.empty() && !(pt.b_gauss > out.back().b_gauss))
      throw ConfigError("K3 table line " + std::to_string(line_no) + ": B values must increase");
    out.push_back(pt);
  }
  if (!header_seen) throw ConfigError("K3 table: missing header 'B_gauss,K3_m6_per_s'");
  return out;
}

double FeshbachModel::scattering_length(double b_gauss) const {
  return a_bg * (1.0 - delta_b / (b_gauss - b_res));
}

std::vector<FeshbachRow> feshbach_scan(const std::vector<K3Point>& table,
                                       const FeshbachModel& model, const PhysicalParams& base,
                                       double eta) {
  std::vector<FeshbachRow> rows;
  rows.reserve(table.size());
  for (const auto& pt : table) {
    FeshbachRow row;
    row.b_gauss = pt.b_gauss;
    row.a_scatt = model.scattering_length(pt.b_gauss);
    row.k3 = pt.k3;
    if (!(row.a_scatt > 0.0) || !std::isfinite(row.a_scatt)) {
      row.skipped = true;
    } else {
      PhysicalParams p = base;
      p.a_scatt = row.a_scatt;
      p.k3 = pt.k3;
      row.opt = optimize_all(p, eta);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace bsq
