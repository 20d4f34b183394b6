// bsq: spin squeezing of a bimodal condensate with particle losses.
//
// Exit codes: 0 success, 2 configuration error, 3 domain error, 4 I/O error.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "bsq/commands.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitDomain = 3;
constexpr int kExitIo = 4;

struct RawOptions {
  std::optional<std::string> omega_bar;
  std::string config_path;
  std::string t_scale = "lin", n_scale = "log", t2_scale = "lin";
  std::string summary_path;
};

void add_grid(CLI::App* app, const std::string& prefix, bsq::GridSpec& g, std::string& scale,
              const std::string& unit) {
  app->add_option("--" + prefix + "-start", g.start, "first grid value" + unit);
  app->add_option("--" + prefix + "-stop", g.stop, "last grid value" + unit);
  app->add_option("--" + prefix + "-count", g.count, "number of grid points");
  app->add_option("--" + prefix + "-scale", scale, "lin or log")->check(CLI::IsMember({"lin", "log"}));
}

void add_model(CLI::App* app, bsq::RunConfig& cfg) {
  app->add_option("--chi", cfg.chi, "one-axis twisting rate chi [s^-1]");
  app->add_option("--gamma1", cfg.gamma1, "one-body rate gamma^(1) [s^-1]");
  app->add_option("--gamma2", cfg.gamma2, "two-body rate gamma^(2) [s^-1]");
  app->add_option("--gamma3", cfg.gamma3, "three-body rate gamma^(3) [s^-1]");
}

void add_physical(CLI::App* app, bsq::RunConfig& cfg, RawOptions& raw) {
  app->add_option("--mass", cfg.mass, "atomic mass [kg]");
  app->add_option("--a", cfg.a_scatt, "s-wave scattering length [m]");
  app->add_option("--omega-bar", raw.omega_bar, "trap frequency: rad/s, or 2pi*<f>Hz");
  app->add_option("--K1", cfg.k1, "one-body loss rate [s^-1]");
  app->add_option("--K2", cfg.k2, "two-body rate constant [m^3/s]");
  app->add_option("--K3", cfg.k3, "three-body rate constant [m^6/s]");
}

}  // namespace

int main(int argc, char** argv) {
  bsq::RunConfig cfg;
  RawOptions raw;
  CLI::App app{"Spin squeezing of a two-mode condensate with one-, two- and three-body losses"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("bsq ") + bsq::kToolVersion);

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--out", cfg.out, "output file (default: stdout)");
    sub->add_option("--format", cfg.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--seed", cfg.seed, "master seed for the Monte Carlo streams");
    sub->add_option("--threads", cfg.threads, "worker threads");
    sub->add_option("--config", raw.config_path, "JSON file whose fields override the flags");
    sub->add_option("--N", cfg.n_init, "initial atom number");
  };

  auto* exact = app.add_subcommand("exact1b", "exact squeezing with one-body losses");
  auto* analytic = app.add_subcommand("analytic", "constant-loss-rate squeezing curve");
  auto* mc = app.add_subcommand("mc", "Monte Carlo wavefunction ensemble");
  auto* optimize = app.add_subcommand("optimize", "optimal trap frequency, atom number and time");
  auto* fig1 = app.add_subcommand("fig1", "best squeezing vs N for each loss type");
  auto* fig2 = app.add_subcommand("fig2", "optimized squeezing across a Feshbach resonance");
  auto* survival = app.add_subcommand("survival", "squeezing decay after interactions stop");

  for (auto* sub : {exact, analytic, mc, optimize, fig1, fig2, survival}) common(sub);
  for (auto* sub : {exact, analytic, mc}) {
    add_model(sub, cfg);
    add_grid(sub, "t", cfg.t_grid, raw.t_scale, " [s]");
  }
  for (auto* sub : {analytic, mc, optimize, fig1, fig2, survival}) add_physical(sub, cfg, raw);
  add_grid(fig1, "n", cfg.n_grid, raw.n_scale, "");
  mc->add_option("--n-traj", cfg.n_traj, "number of trajectories");
  mc->add_option("--summary", raw.summary_path, "JSON summary path (default: <out>.summary.json)");
  for (auto* sub : {optimize, fig2, survival}) sub->add_option("--eta", cfg.eta, "tolerance over the squeezing floor");
  fig2->add_option("--k3-table", cfg.k3_table, "CSV with header B_gauss,K3_m6_per_s");
  fig2->add_option("--a-bg", cfg.a_bg, "background scattering length [m]");
  fig2->add_option("--delta-b", cfg.delta_b, "resonance width [G]");
  fig2->add_option("--b-res", cfg.b_res, "resonance position [G]");
  survival->add_option("--gamma1", cfg.gamma1, "one-body rate after T1 [s^-1] (default: K1)");
  survival->add_option("--xi2-t1", cfg.xi2_t1, "squeezing at T1 (default: from optimize)");
  survival->add_option("--n-t1", cfg.n_t1, "<N> at T1");
  survival->add_option("--sx-t1", cfg.sx_t1, "<S_x> at T1");
  add_grid(survival, "t2", cfg.t2_grid, raw.t2_scale, " [s]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    cfg.command = app.get_subcommands().front()->get_name();
    cfg.t_grid.log = raw.t_scale == "log";
    cfg.n_grid.log = raw.n_scale == "log";
    cfg.t2_grid.log = raw.t2_scale == "log";
    if (raw.omega_bar) cfg.omega_bar = bsq::parse_angular_frequency(*raw.omega_bar);
    if (!raw.config_path.empty()) {
      std::ifstream in(raw.config_path);
      if (!in) throw bsq::IoError("cannot open config file '" + raw.config_path + "'");
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        throw bsq::ConfigError("config file '" + raw.config_path + "': " + e.what());
      }
      cfg.apply_json(j);
    }

    const bsq::Table table = bsq::run_command(cfg);
    if (cfg.out.empty()) {
      bsq::write_table(std::cout, table, cfg);
    } else {
      std::ofstream os(cfg.out);
      if (!os) throw bsq::IoError("cannot open output file '" + cfg.out + "'");
      bsq::write_table(os, table, cfg);
    }
    if (cfg.command == "mc" && cfg.format == "csv") {
      const std::string path =
          !raw.summary_path.empty() ? raw.summary_path : (cfg.out.empty() ? "" : cfg.out + ".summary.json");
      if (!path.empty()) {
        std::ofstream os(path);
        if (!os) throw bsq::IoError("cannot open summary file '" + path + "'");
        os << table.summary.dump(2) << '\n';
      }
    }
  } catch (const bsq::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const bsq::DomainError& e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return kExitDomain;
  } catch (const bsq::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return kExitIo;
  }
  return 0;
}
