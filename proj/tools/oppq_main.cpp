// oppq scan|minimize|bound --config <path> [--precision D] [--bu <decimal>] [--out <dir>]
//
// Exit status: 0 success, 1 some order failed (see the status column),
// 2 usage or config error, 3 B_U could not be estimated, 4 numeric failure.

#include "oppq/cli.hpp"

#include "CLI11.hpp"

#include <iostream>

namespace {

void report(const oppq::cli::RunResult &r) {
  for (const auto &row : r.rows) {
    std::cout << r.command << " order " << row.order;
    if (row.e_min)
      std::cout << "  E_min " << oppq::to_decimal(*row.e_min, 25) << "  S_min "
                << oppq::to_decimal(*row.s_min, 25);
    if (row.e_lower)
      std::cout << "  [" << oppq::to_decimal(*row.e_lower, 25) << ", "
                << oppq::to_decimal(*row.e_upper, 25) << "]";
    if (row.status != "ok")
      std::cout << "  (" << row.status << ")";
    std::cout << '\n';
  }
  for (const auto &f : r.files)
    std::cout << "wrote " << f.string() << '\n';
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Eigenenergy bounds from orthogonal-polynomial projection of moment equations"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", oppq::cli::kVersion);

  std::string config;
  std::optional<unsigned> precision;
  std::optional<std::string> bu;
  std::optional<std::string> out;

  for (const char *name : {"scan", "minimize", "bound"}) {
    std::string help = std::string(name) == "scan"       ? "write log10 S curves per order"
                       : std::string(name) == "minimize" ? "locate the local minimum per order"
                                                         : "estimate B_U and extract bounds";
    auto *sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "run configuration (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--precision", precision, "working precision in decimal digits");
    sub->add_option("--bu", bu, "manual B_U, overrides the config and the estimate");
    sub->add_option("--out", out, "output directory");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  oppq::cli::RunConfig cfg;
  try {
    cfg = oppq::cli::load_config(config);
    std::optional<std::filesystem::path> out_dir;
    if (out)
      out_dir = *out;
    oppq::cli::apply_overrides(cfg, precision, bu, out_dir);
  } catch (const oppq::cli::ConfigError &e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }

  try {
    oppq::cli::RunResult result;
    if (command == "scan")
      result = oppq::cli::run_scan(cfg);
    else if (command == "minimize")
      result = oppq::cli::run_minimize(cfg);
    else
      result = oppq::cli::run_bound(cfg);
    report(result);
    return result.ok() ? 0 : 1;
  } catch (const oppq::NotConverged &e) {
    std::cerr << "B_U estimate failed: " << e.what() << "\nS_min sequence:\n";
    for (const auto &s : e.sequence())
      std::cerr << "  " << oppq::to_decimal(s, 25) << '\n';
    std::cerr << "pass a manual value with --bu <decimal> or set \"b_u\" in the config\n";
    return 3;
  } catch (const oppq::DomainError &e) {
    std::cerr << "domain error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
}
