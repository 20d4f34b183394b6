#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "bsq/fock.hpp"
#include "bsq/physical.hpp"

namespace bsq {

inline constexpr const char* kToolVersion = "1.0.0";

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses a trap frequency: "2pi*200Hz", "2pi*200" and "200Hz" mean
/// 2 pi x 200 rad/s; a bare number (optionally suffixed "rad/s") is rad/s.
double parse_angular_frequency(const std::string& text);

struct GridSpec {
  double start = 0.0;
  double stop = 0.0;
  int count = 0;
  bool log = false;

  std::vector<double> values() const;
  void validate(const char* name) const;
};

/// Everything a command needs. Unset optionals mean "not given".
struct RunConfig {
  std::string command;

  std::optional<double> n_init;
  // model block
  std::optional<double> chi;
  std::optional<double> gamma1, gamma2, gamma3;
  // physical block
  double mass = kRb87Mass;
  std::optional<double> a_scatt;
  std::optional<double> omega_bar;
  std::optional<double> k1, k2, k3;

  GridSpec t_grid;
  GridSpec n_grid;

  std::uint64_t seed = 1;
  std::int64_t n_traj = 400;
  unsigned threads = 1;
  double eta = 0.1;

  // survival
  std::optional<double> xi2_t1, n_t1, sx_t1;
  GridSpec t2_grid;

  // fig2
  std::string k3_table;
  double a_bg = 5.32e-9;
  double delta_b = 0.21;
  double b_res = 1007.4;

  std::string out;
  std::string format = "csv";

  bool has_model_block() const;
  bool has_physical_block() const;
  /// Model parameters from whichever block is present (physical via tf_map).
  ModelParams model_params() const;
  PhysicalParams physical_params(bool need_omega) const;

  nlohmann::json to_json() const;
  /// Overrides fields present in `j` (keys as produced by to_json()).
  void apply_json(const nlohmann::json& j);
};

/// Result of a command: a table, plus optional scalar summary.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
  std::vector<std::string> flags;  // per-row note; empty string when clean
  nlohmann::json summary;          // null when the command has none
};

Table cmd_exact_one_body(const RunConfig& cfg);
Table cmd_analytic(const RunConfig& cfg);
Table cmd_mc(const RunConfig& cfg);
Table cmd_optimize(const RunConfig& cfg);
Table cmd_fig1(const RunConfig& cfg);
Table cmd_fig2(const RunConfig& cfg);
Table cmd_survival(const RunConfig& cfg);

Table run_command(const RunConfig& cfg);

/// CSV with a `#` preamble (tool version and full config echo), or one JSON
/// document holding the same content.
void write_table(std::ostream& os, const Table& table, const RunConfig& cfg);

}  // namespace bsq
