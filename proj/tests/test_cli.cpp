#include "doctest.h"

#include "oppq/cli.hpp"

#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace oppq;
using namespace oppq::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string &tag) {
  auto dir = fs::temp_directory_path() / ("oppq_cli_" + tag + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path &p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
      cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

std::string config_error(const std::string &text) {
  try {
    (void)parse_config(text, "t.json");
  } catch (const ConfigError &e) {
    return e.what();
  }
  return "";
}

const char *kHarmonic = R"({
  "system": "harmonic",
  "precision": 60,
  "orders": [6],
  "window": ["3", "7"],
  "target": "5",
  "scan_points": 60,
  "b_u": "3.6"
})";

fs::path preset_dir() {
  if (const char *dir = std::getenv("OPPQ_PRESET_DIR"))
    return dir;
#ifdef OPPQ_PRESET_DIR
  return OPPQ_PRESET_DIR;
#else
  return "presets";
#endif
}

} // namespace

TEST_CASE("config parsing fills defaults") {
  auto cfg = parse_config(kHarmonic);
  CHECK(cfg.system == SystemKind::Harmonic);
  CHECK(cfg.precision == 60);
  CHECK(cfg.orders == std::vector<std::size_t>{6});
  CHECK(cfg.window_lo == "3");
  CHECK(cfg.b_u.at(0) == "3.6");
  CHECK(cfg.tol_exponent == 20);
  CHECK(cfg.search == SearchMode::Scan);
  CHECK(cfg.emit.tables);
  CHECK(system_label(cfg) == "harmonic");

  auto qzm = parse_config(R"({"system": "qzm", "params": {"B": 2, "eps0": "1.0"},
    "normalization": "first_moment", "orders": [1, 2], "window": ["1.01", "1.1"],
    "b_u": {"1": "5", "2": "4"}})");
  CHECK(qzm.field == "2");
  CHECK(qzm.charge == "1");
  CHECK(qzm.b_u.size() == 2);
  CHECK(qzm.precision == 60);
}

TEST_CASE("config errors name the field or line") {
  CHECK(config_error(R"({"system": "harmonic", "orders": [6], "window": [3, 7], "colour": 1})")
            .find("field 'colour': unknown key") != std::string::npos);
  CHECK(config_error("{\n\"system\": \"harmonic\",\n\"orders\": [6,\n}").find("line") !=
        std::string::npos);
  CHECK(config_error(R"({"system": "harmonic", "orders": [], "window": [3, 7]})")
            .find("orders") != std::string::npos);
  CHECK(config_error(R"({"system": "harmonic", "orders": [8, 6], "window": [3, 7]})")
            .find("ascending") != std::string::npos);
  CHECK(config_error(R"({"system": "harmonic", "orders": [6], "window": [7, 3]})")
            .find("window") != std::string::npos);
  CHECK(config_error(R"({"system": "harmonic", "orders": [6], "window": [3, 7], "precision": 20})")
            .find("precision") != std::string::npos);
  CHECK(config_error(R"({"system": "harmonic", "orders": [6], "window": [3, 7], "target": 9})")
            .find("target") != std::string::npos);
  CHECK(config_error(R"({"system": "harmonic", "orders": [6], "bound_orders": [7], "window": [3, 7]})")
            .find("bound_orders") != std::string::npos);
  CHECK(config_error(R"({"system": "qzm", "params": {"B": 2, "eps0": 1}, "normalization": "first_moment",
    "orders": [2], "window": ["0.9", "1.1"]})")
            .find("eps0") != std::string::npos);
  CHECK(config_error(R"({"system": "qzm", "params": {"B": 2, "eps0": 1}, "normalization": "unit",
    "orders": [2], "window": ["1.01", "1.1"]})")
            .find("normalization") != std::string::npos);
  CHECK(config_error(R"({"system": "qzm", "params": {"B": 2, "eps0": 1}, "normalization": "first_moment",
    "orders": [2, 3], "window": ["1.01", "1.1"], "b_u": {"3": "4"}})")
            .find("order 2") != std::string::npos);
  CHECK(config_error(R"({"system": "pendulum", "orders": [2], "window": [0, 1]})")
            .find("system") != std::string::npos);
  CHECK_THROWS_AS(load_config("/nonexistent/oppq.json"), ConfigError);
}

TEST_CASE("command-line overrides") {
  auto cfg = parse_config(kHarmonic);
  apply_overrides(cfg, 80u, std::string("3.7"), fs::path("/tmp/x"));
  CHECK(cfg.precision == 80);
  CHECK(cfg.b_u.size() == 1);
  CHECK(cfg.b_u.at(0) == "3.7");
  CHECK(cfg.output_dir == "/tmp/x");
  CHECK_THROWS_AS(apply_overrides(cfg, 10u, std::nullopt, std::nullopt), ConfigError);
  CHECK_THROWS_AS(apply_overrides(cfg, std::nullopt, std::string("abc"), std::nullopt), ConfigError);
}

TEST_CASE("bound run for one order: table, ledger and byte-identical rerun") {
  auto cfg = parse_config(kHarmonic);
  cfg.output_dir = scratch_dir("bound");
  auto r = run_bound(cfg);
  REQUIRE(r.rows.size() == 1);
  const auto &row = r.rows[0];
  CHECK(row.status == "ok");
  CHECK(to_decimal(*row.e_min, 6) == "4.53222");
  CHECK(r.ok());

  auto csv = read_csv(cfg.output_dir / "bounds_harmonic.csv");
  REQUIRE(csv.size() == 2);
  CHECK(csv[0][0] == "order");
  CHECK(csv[1][0] == "6");

  auto first = slurp(cfg.output_dir / "bounds_harmonic.csv");
  (void)run_bound(cfg);
  CHECK(slurp(cfg.output_dir / "bounds_harmonic.csv") == first);

  auto ledger = nlohmann::json::parse(slurp(cfg.output_dir / "ledger_bound_harmonic.json"));
  for (const char *key : {"config", "system", "precision", "sequence", "b_u", "rows", "versions"})
    CHECK_MESSAGE(ledger.contains(key), key);
  CHECK(ledger["precision"] == 60);
  CHECK(ledger["rows"].size() == 1);
  CHECK(ledger["versions"].contains("mpfr"));
  fs::remove_all(cfg.output_dir);
}

TEST_CASE("a B_U below S_min is reported per order, not thrown") {
  auto cfg = parse_config(kHarmonic);
  cfg.output_dir = scratch_dir("lowbu");
  apply_overrides(cfg, std::nullopt, std::string("3.0"), std::nullopt);
  auto r = run_bound(cfg);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].status != "ok");
  CHECK_FALSE(r.ok());
  CHECK(r.rows[0].e_min.has_value());
  fs::remove_all(cfg.output_dir);
}

TEST_CASE("the harmonic E_2 sequence is too slow for an automatic B_U") {
  auto cfg = parse_config(R"({"system": "harmonic", "orders": [6, 7, 8, 9],
    "window": ["3", "7"], "target": "5", "scan_points": 40})");
  cfg.output_dir = scratch_dir("nobu");
  try {
    (void)run_bound(cfg);
    FAIL("expected NotConverged");
  } catch (const NotConverged &e) {
    CHECK(e.sequence().size() == 4);
  }
  fs::remove_all(cfg.output_dir);
}

TEST_CASE("the wide harmonic scan nests every curve") {
  auto cfg = load_config(preset_dir() / "harmonic_scan_wide.json");
  cfg.output_dir = scratch_dir("scan");
  auto r = run_scan(cfg);
  REQUIRE(cfg.orders.size() == 10);
  std::vector<std::vector<std::vector<std::string>>> curves;
  for (auto order : cfg.orders) {
    auto path = cfg.output_dir / ("scan_harmonic_" + std::to_string(order) + ".csv");
    REQUIRE(fs::exists(path));
    curves.push_back(read_csv(path));
  }
  PrecisionScope s(cfg.precision);
  std::size_t violations = 0;
  for (std::size_t k = 1; k < curves.size(); ++k) {
    REQUIRE(curves[k].size() == curves[0].size());
    for (std::size_t i = 1; i < curves[k].size(); ++i) {
      CHECK(curves[k][i][0] == curves[k - 1][i][0]);
      if (parse_real(curves[k][i][1]) < parse_real(curves[k - 1][i][1]))
        ++violations;
    }
  }
  CHECK(violations == 0);
  fs::remove_all(cfg.output_dir);
}

TEST_CASE("every shipped preset parses") {
  std::size_t count = 0;
  for (const auto &entry : fs::directory_iterator(preset_dir())) {
    if (entry.path().extension() != ".json")
      continue;
    CHECK_NOTHROW_MESSAGE(load_config(entry.path()), entry.path().string());
    ++count;
  }
  CHECK(count >= 18);
}

TEST_CASE("custom-1d recurrence with a gamma weight reproduces the built-in harmonic minimum") {
  // x^2 -> t turns exp(-x^2/2) dx into t^(-1/2) exp(-t/2) dt / 2: same polynomials.
  auto custom = parse_config(R"({"system": "custom-1d", "name": "oscillator",
    "recurrence": {"missing_order": 0, "terms": [
      {"lag": 0, "coef": "1", "e_power": 1},
      {"lag": 1, "coef": "4", "p_power": 2},
      {"lag": 1, "coef": "-2", "p_power": 1}]},
    "weight": {"kind": "gamma", "shift": "-0.5", "rate": "0.5"},
    "orders": [8], "window": ["3", "7"], "target": "5", "scan_points": 40})");
  auto builtin = parse_config(R"({"system": "harmonic", "orders": [8], "window": ["3", "7"],
    "target": "5", "scan_points": 40})");
  custom.output_dir = scratch_dir("custom");
  builtin.output_dir = scratch_dir("builtin");
  CHECK(system_label(custom) == "oscillator");
  auto a = run_minimize(custom), b = run_minimize(builtin);
  REQUIRE(a.rows.size() == 1);
  REQUIRE(a.rows[0].status == "ok");
  PrecisionScope s(60);
  CHECK(abs(*a.rows[0].e_min - *b.rows[0].e_min) < pow10(-18));
  CHECK(fs::exists(custom.output_dir / "minima_oscillator.csv"));
  fs::remove_all(custom.output_dir);
  fs::remove_all(builtin.output_dir);
}
