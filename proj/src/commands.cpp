#include "bsq/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "bsq/analytics.hpp"
#include "bsq/trajectories.hpp"

namespace bsq {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.15g", v);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  const auto e = s.find_last_not_of(" \t");
  return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

template <class T>
void set_opt(const nlohmann::json& j, const char* key, std::optional<T>& field) {
  if (!j.contains(key)) return;
  if (j.at(key).is_null()) field.reset();
  else field = j.at(key).get<T>();
}

template <class T>
void set_val(const nlohmann::json& j, const char* key, T& field) {
  if (j.contains(key)) field = j.at(key).get<T>();
}

nlohmann::json grid_json(const GridSpec& g) {
  return {{"start", g.start}, {"stop", g.stop}, {"count", g.count}, {"scale", g.log ? "log" : "lin"}};
}

void apply_grid(const nlohmann::json& j, const char* key, GridSpec& g) {
  if (!j.contains(key)) return;
  const auto& o = j.at(key);
  set_val(o, "start", g.start);
  set_val(o, "stop", g.stop);
  set_val(o, "count", g.count);
  if (o.contains("scale")) {
    const auto s = o.at("scale").get<std::string>();
    if (s != "lin" && s != "log") throw ConfigError(std::string(key) + ".scale must be 'lin' or 'log'");
    g.log = s == "log";
  }
}

std::string require_flag_message(const char* flag, const char* command) {
  return std::string("--") + flag + " is required by '" + command + "'";
}

double require(const std::optional<double>& v, const char* flag, const std::string& command) {
  if (!v) throw ConfigError(require_flag_message(flag, command.c_str()));
  return *v;
}

}  // namespace

double parse_angular_frequency(const std::string& text) {
  std::string s = trim(text);
  bool cycles = false;
  if (s.rfind("2pi*", 0) == 0) {
    cycles = true;
    s = s.substr(4);
  }
  if (s.size() > 2 && s.compare(s.size() - 2, 2, "Hz") == 0) {
    cycles = true;
    s = s.substr(0, s.size() - 2);
  } else if (!cycles && s.size() > 5 && s.compare(s.size() - 5, 5, "rad/s") == 0) {
    s = s.substr(0, s.size() - 5);
  }
  s = trim(s);
  size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size() || !std::isfinite(v) || !(v > 0.0))
    throw ConfigError("cannot parse frequency '" + text + "' (expected e.g. 2pi*200Hz or 1256.6)");
  return cycles ? 2.0 * std::numbers::pi * v : v;
}

void GridSpec::validate(const char* name) const {
  std::ostringstream err;
  if (count < 1) err << name << ": count must be >= 1 (got " << count << ")";
  else if (!std::isfinite(start) || !std::isfinite(stop)) err << name << ": bounds must be finite";
  else if (start < 0.0) err << name << ": start must be >= 0 (got " << start << ")";
  else if (count > 1 && !(stop > start)) err << name << ": stop must exceed start (got " << start << ", " << stop << ")";
  else if (log && !(start > 0.0)) err << name << ": log scale needs start > 0";
  if (!err.str().empty()) throw ConfigError(err.str());
}

std::vector<double> GridSpec::values() const {
  std::vector<double> v(static_cast<size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) {
    const double u = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
    v[i] = log ? start * std::pow(stop / start, u) : start + (stop - start) * u;
  }
  if (count > 1) v.back() = stop;
  return v;
}

bool RunConfig::has_model_block() const { return chi || gamma1 || gamma2 || gamma3; }

bool RunConfig::has_physical_block() const { return a_scatt || omega_bar || k1 || k2 || k3; }

ModelParams RunConfig::model_params() const {
  if (has_model_block() && has_physical_block())
    throw ConfigError("give either model parameters (--chi, --gamma*) or physical ones "
                      "(--a, --omega-bar, --K*), not both");
  const double n = require(n_init, "N", command);
  if (!(n >= 2.0) || n != std::floor(n))
    throw ConfigError("--N must be an integer >= 2 (got " + format_double(n) + ")");
  if (has_physical_block()) return tf_map(physical_params(true)).to_model();
  ModelParams mp;
  mp.n_init = static_cast<int>(n);
  mp.chi = require(chi, "chi", command);
  mp.gamma = {gamma1.value_or(0.0), gamma2.value_or(0.0), gamma3.value_or(0.0)};
  mp.validate();
  return mp;
}

PhysicalParams RunConfig::physical_params(bool need_omega) const {
  if (has_model_block())
    throw ConfigError("'" + command + "' takes physical parameters, not --chi/--gamma*");
  PhysicalParams p;
  p.mass = mass;
  p.a_scatt = require(a_scatt, "a", command);
  p.omega_bar = need_omega ? require(omega_bar, "omega-bar", command) : omega_bar.value_or(1.0);
  p.k1 = k1.value_or(0.0);
  p.k2 = k2.value_or(0.0);
  p.k3 = k3.value_or(0.0);
  p.n_init = n_init.value_or(1.0);
  p.validate();
  return p;
}

nlohmann::json RunConfig::to_json() const {
  const auto opt = [](const std::optional<double>& v) -> nlohmann::json {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::json j;
  j["command"] = command;
  j["N"] = opt(n_init);
  j["chi"] = opt(chi);
  j["gamma1"] = opt(gamma1);
  j["gamma2"] = opt(gamma2);
  j["gamma3"] = opt(gamma3);
  j["mass"] = mass;
  j["a"] = opt(a_scatt);
  j["omega_bar"] = opt(omega_bar);
  j["K1"] = opt(k1);
  j["K2"] = opt(k2);
  j["K3"] = opt(k3);
  j["t_grid"] = grid_json(t_grid);
  j["n_grid"] = grid_json(n_grid);
  j["t2_grid"] = grid_json(t2_grid);
  j["seed"] = seed;
  j["n_traj"] = n_traj;
  j["eta"] = eta;
  j["xi2_t1"] = opt(xi2_t1);
  j["n_t1"] = opt(n_t1);
  j["sx_t1"] = opt(sx_t1);
  j["k3_table"] = k3_table;
  j["a_bg"] = a_bg;
  j["delta_b"] = delta_b;
  j["b_res"] = b_res;
  j["format"] = format;
  return j;
}

void RunConfig::apply_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
  try {
    set_opt(j, "N", n_init);
    set_opt(j, "chi", chi);
    set_opt(j, "gamma1", gamma1);
    set_opt(j, "gamma2", gamma2);
    set_opt(j, "gamma3", gamma3);
    set_val(j, "mass", mass);
    set_opt(j, "a", a_scatt);
    if (j.contains("omega_bar")) {
      const auto& w = j.at("omega_bar");
      if (w.is_null()) omega_bar.reset();
      else omega_bar = w.is_string() ? parse_angular_frequency(w.get<std::string>()) : w.get<double>();
    }
    set_opt(j, "K1", k1);
    set_opt(j, "K2", k2);
    set_opt(j, "K3", k3);
    apply_grid(j, "t_grid", t_grid);
    apply_grid(j, "n_grid", n_grid);
    apply_grid(j, "t2_grid", t2_grid);
    set_val(j, "seed", seed);
    set_val(j, "n_traj", n_traj);
    set_val(j, "eta", eta);
    set_opt(j, "xi2_t1", xi2_t1);
    set_opt(j, "n_t1", n_t1);
    set_opt(j, "sx_t1", sx_t1);
    set_val(j, "k3_table", k3_table);
    set_val(j, "a_bg", a_bg);
    set_val(j, "delta_b", delta_b);
    set_val(j, "b_res", b_res);
    set_val(j, "format", format);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config file: ") + e.what());
  }
}

Table cmd_exact_one_body(const RunConfig& cfg) {
  const ModelParams mp = cfg.model_params();
  if (mp.gamma[1] != 0.0 || mp.gamma[2] != 0.0)
    throw ConfigError("exact1b handles one-body losses only; gamma2 and gamma3 must be 0");
  cfg.t_grid.validate("t_grid");
  Table t;
  t.columns = {"t", "chi_t", "xi2"};
  for (const double time : cfg.t_grid.values()) {
    double xi2 = kNaN;
    std::string flag;
    try {
      xi2 = xi2_one_body_exact(mp.n_init, mp.chi, mp.gamma[0], time);
    } catch (const DomainError& e) {
      flag = std::string("domain: ") + e.what();
    }
    t.rows.push_back({time, mp.chi * time, xi2});
    t.flags.push_back(flag);
  }
  return t;
}

Table cmd_analytic(const RunConfig& cfg) {
  const ModelParams mp = cfg.model_params();
  cfg.t_grid.validate("t_grid");
  Table t;
  t.columns = {"t", "xi2", "n_mean", "sx_mean", "quad_A", "quad_B", "lost_fraction"};
  const auto lost = lost_fraction_rates(mp.n_init, mp.gamma);
  for (const double time : cfg.t_grid.values()) {
    std::vector<double> row{time, kNaN, kNaN, kNaN, kNaN, kNaN, (lost[0] + lost[1] + lost[2]) * time};
    std::string flag;
    try {
      const auto m = moments_constant_rate(mp.n_init, mp.chi, mp.gamma, time);
      row[2] = m.n_mean;
      row[3] = m.bdaga.real();
      row[4] = m.quad_A;
      row[5] = m.quad_B;
      row[1] = xi2_from_moments(m).xi2;
    } catch (const DomainError& e) {
      flag = std::string("domain: ") + e.what();
    }
    t.rows.push_back(std::move(row));
    t.flags.push_back(flag);
  }
  return t;
}

Table cmd_mc(const RunConfig& cfg) {
  const ModelParams mp = cfg.model_params();
  cfg.t_grid.validate("t_grid");
  TrajectoryConfig tc;
  tc.master_seed = cfg.seed;
  tc.n_traj = cfg.n_traj;
  tc.t_grid = cfg.t_grid.values();
  tc.validate();
  const auto stats = run_ensemble(mp, tc, cfg.threads);

  Table t;
  t.columns = {"t",      "xi2",       "xi2_se",   "xi2_reduced", "xi2_reduced_se", "n_mean", "n_mean_se",
               "sx_mean", "sx_se",    "sy_mean",  "sy_se",       "quad_A",
               "quad_A_se", "quad_B", "quad_B_se", "var_sz",     "var_sz_se",
               "lost_fraction", "emptied_fraction"};
  nlohmann::json per_time = nlohmann::json::array();
  for (const auto& p : stats.points) {
    t.rows.push_back({p.t, p.xi2, p.xi2_stderr, p.xi2_reduced, p.xi2_reduced_stderr, p.mean.n_mean, p.stderr_.n_mean, p.mean.bdaga.real(),
                      p.stderr_.bdaga.real(), -p.mean.bdaga.imag(), p.stderr_.bdaga.imag(),
                      p.mean.quad_A, p.stderr_.quad_A, p.mean.quad_B, p.stderr_.quad_B,
                      p.mean.var_sz, p.stderr_.var_sz, p.lost_fraction, p.emptied_fraction});
    t.flags.push_back(std::isnan(p.xi2) ? "mean spin collapsed" : "");
    nlohmann::json jumps;
    const char* names[kNumChannels] = {"a1", "a2", "a3", "b1", "b2", "b3"};
    for (int c = 0; c < kNumChannels; ++c) jumps[names[c]] = p.mean_jumps[c];
    per_time.push_back({{"t", p.t}, {"mean_jumps", jumps}, {"lost_fraction", p.lost_fraction}});
  }
  t.summary = {{"n_traj", stats.n_traj},
               {"seed", cfg.seed},
               {"model", {{"N", mp.n_init}, {"chi", mp.chi}, {"gamma", mp.gamma}}},
               {"per_time", per_time}};
  return t;
}

Table cmd_optimize(const RunConfig& cfg) {
  const PhysicalParams p = cfg.physical_params(false);
  const Optimum o = optimize_all(p, cfg.eta);
  Table t;
  t.columns = {"omega_opt", "omega_opt_hz", "n_eta", "t_best", "xi2", "xi2_floor", "chi", "c_param",
               "f_c", "lost_fraction"};
  t.rows.push_back({o.omega_opt, o.omega_opt / (2.0 * std::numbers::pi), o.n_eta, o.t_best, o.xi2,
                    o.xi2_floor, o.chi, o.c_param, o.f_c, o.lost_fraction});
  t.flags.push_back(o.lost_fraction_warning ? "lost fraction above 10% at t_best" : "");
  t.summary = {{"omega_opt", o.omega_opt},
               {"omega_opt_over_2pi_hz", o.omega_opt / (2.0 * std::numbers::pi)},
               {"n_eta", o.n_eta},
               {"n_eta_rounded", std::llround(o.n_eta)},
               {"t_best", o.t_best},
               {"xi2", o.xi2},
               {"xi2_floor", o.xi2_floor},
               {"eta", cfg.eta},
               {"provenance",
                {{"chi", o.chi},
                 {"Gamma", o.lost_rate},
                 {"Gamma_sq", o.lost_rate[0] + 2.0 * o.lost_rate[1] + 3.0 * o.lost_rate[2]},
                 {"C", o.c_param},
                 {"f_C", o.f_c},
                 {"lost_fraction_at_t_best", o.lost_fraction},
                 {"lost_fraction_warning", o.lost_fraction_warning}}}};
  if (p.k2 == 0.0) {
    const auto cf = closed_form_k2_zero(p);
    t.summary["closed_form_eta_10pct"] = {{"n_eta", cf.n_eta}, {"t_best", cf.t_best}, {"xi2", cf.xi2}};
  }
  return t;
}

Table cmd_fig1(const RunConfig& cfg) {
  const PhysicalParams p = cfg.physical_params(true);
  cfg.n_grid.validate("n_grid");
  const auto ns = cfg.n_grid.values();
  const LossMask masks[4] = {{}, {true, false, false}, {false, true, false}, {false, false, true}};
  std::vector<std::vector<ScanRow>> curves;
  for (const auto& m : masks) curves.push_back(scan_n(p, ns, m));

  Table t;
  t.columns = {"N",          "chi",           "xi2_noloss",    "xi2_1body",      "xi2_2body",
               "xi2_3body",  "xi2num_noloss", "xi2num_1body",  "xi2num_2body",   "xi2num_3body",
               "lost_1body", "lost_2body",    "lost_3body"};
  for (size_t i = 0; i < ns.size(); ++i) {
    std::vector<double> row{ns[i], curves[0][i].chi};
    for (int k = 0; k < 4; ++k) row.push_back(curves[k][i].xi2_best);
    for (int k = 0; k < 4; ++k) row.push_back(curves[k][i].xi2_numeric);
    for (int k = 1; k < 4; ++k) row.push_back(curves[k][i].lost_fraction);
    std::string flag;
    for (int k = 0; k < 4; ++k)
      if (std::isnan(curves[k][i].xi2_numeric)) flag += (flag.empty() ? "" : ";") + std::string("numeric route outside domain for ") + t.columns[6 + k];
    t.rows.push_back(std::move(row));
    t.flags.push_back(flag);
  }
  return t;
}

Table cmd_fig2(const RunConfig& cfg) {
  if (cfg.k3_table.empty()) throw ConfigError("--k3-table is required by 'fig2'");
  std::ifstream in(cfg.k3_table);
  if (!in) throw IoError("cannot open K3 table '" + cfg.k3_table + "'");
  const auto table = read_k3_table(in);

  PhysicalParams base;
  base.mass = cfg.mass;
  base.a_scatt = cfg.a_bg;
  base.omega_bar = 1.0;
  base.k1 = cfg.k1.value_or(0.01);
  base.k2 = cfg.k2.value_or(0.0);
  base.n_init = 1.0;
  const FeshbachModel model{cfg.a_bg, cfg.delta_b, cfg.b_res};
  const auto rows = feshbach_scan(table, model, base, cfg.eta);

  Table t;
  t.columns = {"B_gauss", "a_scatt", "K3", "omega_opt", "n_eta", "xi2", "t_best", "xi2_floor"};
  for (const auto& r : rows) {
    if (r.skipped) {
      t.rows.push_back({r.b_gauss, r.a_scatt, r.k3, kNaN, kNaN, kNaN, kNaN, kNaN});
      t.flags.push_back("skipped: a(B) <= 0");
    } else {
      t.rows.push_back({r.b_gauss, r.a_scatt, r.k3, r.opt.omega_opt, r.opt.n_eta, r.opt.xi2,
                        r.opt.t_best, r.opt.xi2_floor});
      t.flags.push_back(r.opt.lost_fraction_warning ? "lost fraction above 10% at t_best" : "");
    }
  }
  return t;
}

Table cmd_survival(const RunConfig& cfg) {
  cfg.t2_grid.validate("t2_grid");
  const double gamma1 = cfg.k1 ? *cfg.k1 : require(cfg.gamma1, "K1", cfg.command);
  double xi2_t1, n_t1, sx_t1;
  nlohmann::json source;
  if (cfg.xi2_t1) {
    xi2_t1 = *cfg.xi2_t1;
    n_t1 = cfg.n_t1.value_or(1.0);
    sx_t1 = cfg.sx_t1.value_or(0.5 * n_t1);
    source = {{"mode", "given"}};
  } else {
    // T1 = t_best of the full optimization; N(T1), S_x(T1) from the constant-rate moments.
    const PhysicalParams p = cfg.physical_params(false);
    const Optimum o = optimize_all(p, cfg.eta);
    PhysicalParams q = p;
    q.n_init = o.n_eta;
    q.omega_bar = o.omega_opt;
    const TfModel tf = tf_map(q);
    const auto m = moments_constant_rate(o.n_eta, tf.chi, tf.gamma, o.t_best);
    xi2_t1 = o.xi2;
    n_t1 = m.n_mean;
    sx_t1 = m.bdaga.real();
    source = {{"mode", "optimized"}, {"T1", o.t_best}, {"n_eta", o.n_eta}, {"omega_opt", o.omega_opt}};
  }
  Table t;
  t.columns = {"T2", "xi2_exact", "xi2_approx"};
  for (const double t2 : cfg.t2_grid.values()) {
    const auto s = survival_xi2(xi2_t1, n_t1, sx_t1, gamma1, t2);
    t.rows.push_back({t2, s.exact, s.approx});
    t.flags.emplace_back();
  }
  source["xi2_T1"] = xi2_t1;
  source["n_mean_T1"] = n_t1;
  source["sx_T1"] = sx_t1;
  source["gamma1"] = gamma1;
  t.summary = source;
  return t;
}

Table run_command(const RunConfig& cfg) {
  if (cfg.format != "csv" && cfg.format != "json")
    throw ConfigError("--format must be 'csv' or 'json' (got '" + cfg.format + "')");
  if (cfg.command == "exact1b") return cmd_exact_one_body(cfg);
  if (cfg.command == "analytic") return cmd_analytic(cfg);
  if (cfg.command == "mc") return cmd_mc(cfg);
  if (cfg.command == "optimize") return cmd_optimize(cfg);
  if (cfg.command == "fig1") return cmd_fig1(cfg);
  if (cfg.command == "fig2") return cmd_fig2(cfg);
  if (cfg.command == "survival") return cmd_survival(cfg);
  throw ConfigError("unknown command '" + cfg.command + "'");
}

void write_table(std::ostream& os, const Table& table, const RunConfig& cfg) {
  bool any_flag = false;
  for (const auto& f : table.flags) any_flag = any_flag || !f.empty();

  if (cfg.format == "json") {
    nlohmann::json j;
    j["tool"] = std::string("bsq ") + kToolVersion;
    j["config"] = cfg.to_json();
    j["columns"] = table.columns;
    j["rows"] = table.rows;
    if (any_flag) j["flags"] = table.flags;
    if (!table.summary.is_null()) j["summary"] = table.summary;
    os << j.dump(2) << '\n';
    return;
  }
  os << "# bsq " << kToolVersion << '\n';
  os << "# config: " << cfg.to_json().dump() << '\n';
  if (!table.summary.is_null()) os << "# summary: " << table.summary.dump() << '\n';
  for (size_t i = 0; i < table.columns.size(); ++i) os << (i ? "," : "") << table.columns[i];
  if (any_flag) os << ",flag";
  os << '\n';
  for (size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    for (size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
    if (any_flag) {
      std::string f = table.flags[r];
      for (auto& ch : f)
        if (ch == ',' || ch == '\n') ch = ';';
      os << ',' << f;
    }
    os << '\n';
  }
  if (!os) throw IoError("failed writing output");
}

}  // namespace bsq
