#pragma once

// Run configuration, orchestration of scan / minimize / bound and the CSV +
// JSON ledger writers behind the `oppq` executable.

#include "oppq/oppq.hpp"

#include "json.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace oppq::cli {

inline constexpr const char *kVersion = "0.1.0";

/// Bad configuration; the message names the line or the offending field.
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

enum class SystemKind { Harmonic, Qzm, Custom1D };
enum class SearchMode { Scan, Window };

struct EmitFlags {
  bool tables = true;
  bool plots = false; ///< scan curves for minimize / bound runs
  bool ledger = true;
  bool gram_residual = true;
};

struct GammaWeightSpec {
  std::string shift = "-0.5";
  std::string rate = "0.5";
};

/// Numbers are kept as the decimal strings of the config file and parsed
/// once the working precision is known.
struct RunConfig {
  SystemKind system = SystemKind::Harmonic;
  std::string name; ///< label used in output file names
  std::string field = "2", charge = "1", eps0 = "1";
  std::size_t missing_order = 0;
  std::vector<RecurrenceTerm> terms; ///< coefficients parsed at precision time
  std::vector<std::string> term_coefs;
  GammaWeightSpec weight;
  NormalizationMode normalization = NormalizationMode::UnitMissingMomentVector;

  unsigned precision = 60;
  std::vector<std::size_t> orders;
  std::vector<std::size_t> bound_orders; ///< empty: every order
  std::string window_lo, window_hi;
  std::optional<std::string> target;
  SearchMode search = SearchMode::Scan;
  std::size_t scan_points = 200;
  int tol_exponent = 20;
  /// Manual B_U: a single value (key 0) or staged values keyed by the first order they apply to.
  std::map<std::size_t, std::string> b_u;
  std::string bu_theta = "1e-8", bu_kappa = "10";
  int bu_digits = 15;
  BuPolicy bu_policy() const; ///< parsed at the working precision
  std::filesystem::path output_dir = "out";
  EmitFlags emit;

  nlohmann::json echo() const; ///< normalized config for the ledger
};

/// Parses and validates a config document. `source` names the file in errors.
RunConfig parse_config(const std::string &text, const std::string &source = "<config>");
RunConfig load_config(const std::filesystem::path &path);

/// Applies the command-line overrides and re-validates.
void apply_overrides(RunConfig &cfg, std::optional<unsigned> precision,
                     std::optional<std::string> b_u, std::optional<std::filesystem::path> out);

struct ResultRow {
  std::size_t order = 0;
  std::optional<BigReal> e_min, s_min, derivative, width;
  std::optional<BigReal> e_lower, e_upper, b_u;
  bool increasing = true;
  double wall_seconds = 0;
  std::string status = "ok";
  std::optional<BigReal> stencil_residual; ///< QZM only
};

struct RunResult {
  std::string command;
  std::vector<ResultRow> rows;
  Vector sequence; ///< S_min of the successful rows
  std::optional<BigReal> gram_residual;
  std::map<std::size_t, BigReal> b_u; ///< B_U in force per bounded order
  std::vector<std::filesystem::path> files;
  bool ok() const;
};

/// The system label used in file names: harmonic, qzm or the custom name.
std::string system_label(const RunConfig &cfg);

RunResult run_scan(const RunConfig &cfg);
RunResult run_minimize(const RunConfig &cfg);
/// Throws NotConverged when B_U must be estimated and the sequence has not settled.
RunResult run_bound(const RunConfig &cfg);

/// Ledger JSON; wall times appear here and nowhere else.
nlohmann::json ledger(const RunConfig &cfg, const RunResult &result);

} // namespace oppq::cli
