#include "oppq/cli.hpp"

#include <gmp.h>
#include <mpfr.h>

#include <boost/version.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

using nlohmann::json;

namespace oppq::cli {

namespace {

// ---------------------------------------------------------------------------
// Config parsing

[[noreturn]] void field_error(const std::string &source, const std::string &field,
                              const std::string &what) {
  throw ConfigError(source + ": field '" + field + "': " + what);
}

void reject_unknown(const json &obj, const std::set<std::string> &allowed,
                    const std::string &source, const std::string &prefix) {
  for (const auto &[key, _] : obj.items())
    if (!allowed.count(key))
      field_error(source, prefix + key, "unknown key");
}

// Decimal literals may be JSON strings or numbers; numbers keep their
// shortest round-trip spelling.
std::string decimal_field(const json &v, const std::string &source, const std::string &field) {
  std::string text;
  if (v.is_string())
    text = v.get<std::string>();
  else if (v.is_number())
    text = v.dump();
  else
    field_error(source, field, "expected a decimal number or string");
  try {
    PrecisionScope scope(kMinPrecision);
    (void)parse_real(text);
  } catch (const std::exception &) {
    field_error(source, field, "'" + text + "' is not a decimal number");
  }
  return text;
}

std::size_t count_field(const json &v, const std::string &source, const std::string &field) {
  if (!v.is_number_integer() || v.get<long long>() < 0)
    field_error(source, field, "expected a non-negative integer");
  return v.get<std::size_t>();
}

std::vector<std::size_t> order_list(const json &v, const std::string &source,
                                    const std::string &field) {
  if (!v.is_array())
    field_error(source, field, "expected an array of orders");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(count_field(v[i], source, field + "[" + std::to_string(i) + "]"));
  return out;
}

bool flag(const json &v, const std::string &source, const std::string &field) {
  if (!v.is_boolean())
    field_error(source, field, "expected true or false");
  return v.get<bool>();
}

BigReal num(const std::string &s) { return parse_real(s); }

void validate(const RunConfig &cfg, const std::string &source) {
  if (cfg.precision < kMinPrecision)
    field_error(source, "precision", "must be at least " + std::to_string(kMinPrecision));
  if (cfg.orders.empty())
    field_error(source, "orders", "at least one order is required");
  for (std::size_t i = 1; i < cfg.orders.size(); ++i)
    if (cfg.orders[i] <= cfg.orders[i - 1])
      field_error(source, "orders", "must be strictly ascending");
  for (auto o : cfg.bound_orders)
    if (std::find(cfg.orders.begin(), cfg.orders.end(), o) == cfg.orders.end())
      field_error(source, "bound_orders", "order " + std::to_string(o) + " is not in 'orders'");
  if (cfg.system == SystemKind::Custom1D && cfg.orders.front() < cfg.missing_order)
    field_error(source, "orders", "orders must be at least recurrence.missing_order");
  if (cfg.scan_points < 3)
    field_error(source, "scan_points", "need at least 3 points");
  if (cfg.tol_exponent < 1 || cfg.tol_exponent + 5 > static_cast<int>(cfg.precision))
    field_error(source, "tol_exponent",
                "must lie in [1, precision - 5] (precision " + std::to_string(cfg.precision) + ")");

  PrecisionScope scope(cfg.precision);
  BigReal lo = num(cfg.window_lo), hi = num(cfg.window_hi);
  if (!(lo < hi))
    field_error(source, "window", "needs lo < hi");
  if (cfg.target) {
    BigReal t = num(*cfg.target);
    if (t < lo || t > hi)
      field_error(source, "target", "lies outside the window");
  }
  if (cfg.system == SystemKind::Qzm) {
    if (!(num(cfg.field) > 0))
      field_error(source, "params.B", "must be positive");
    if (!(num(cfg.charge) > 0))
      field_error(source, "params.Z", "must be positive");
    if (!(num(cfg.eps0) > 0))
      field_error(source, "params.eps0", "must be positive");
    if (lo < num(cfg.eps0))
      field_error(source, "window", "lower end lies below eps0 = " + cfg.eps0);
    if (cfg.normalization != NormalizationMode::FirstMomentOne)
      field_error(source, "normalization", "qzm requires first_moment");
  }
  if (cfg.system == SystemKind::Custom1D && cfg.terms.empty())
    field_error(source, "recurrence.terms", "at least one term is required");
  if (!cfg.b_u.empty() && !cfg.b_u.count(0)) {
    const auto &orders = cfg.bound_orders.empty() ? cfg.orders : cfg.bound_orders;
    for (auto o : orders)
      if (cfg.b_u.upper_bound(o) == cfg.b_u.begin())
        field_error(source, "b_u", "no staged value covers order " + std::to_string(o));
  }
}

std::string system_name(SystemKind k) {
  switch (k) {
  case SystemKind::Harmonic:
    return "harmonic";
  case SystemKind::Qzm:
    return "qzm";
  case SystemKind::Custom1D:
    return "custom-1d";
  }
  return "?";
}

} // namespace

BuPolicy RunConfig::bu_policy() const {
  BuPolicy p;
  p.theta = num(bu_theta);
  p.kappa = num(bu_kappa);
  p.digits = bu_digits;
  return p;
}

RunConfig parse_config(const std::string &text, const std::string &source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error &e) {
    std::size_t line = 1 + static_cast<std::size_t>(
                               std::count(text.begin(), text.begin() + std::min(e.byte, text.size()), '\n'));
    throw ConfigError(source + ":" + std::to_string(line) + ": malformed JSON (" + e.what() + ")");
  }
  if (!doc.is_object())
    throw ConfigError(source + ": top level must be a JSON object");
  reject_unknown(doc,
                 {"system", "name", "params", "recurrence", "weight", "normalization",
                  "precision", "orders", "bound_orders", "window", "target", "search",
                  "scan_points", "tol_exponent", "b_u", "bu_policy", "output_dir", "emit"},
                 source, "");

  RunConfig cfg;
  if (!doc.contains("system") || !doc["system"].is_string())
    field_error(source, "system", "required: harmonic, qzm or custom-1d");
  const auto sys = doc["system"].get<std::string>();
  if (sys == "harmonic")
    cfg.system = SystemKind::Harmonic;
  else if (sys == "qzm")
    cfg.system = SystemKind::Qzm;
  else if (sys == "custom-1d")
    cfg.system = SystemKind::Custom1D;
  else
    field_error(source, "system", "unknown system '" + sys + "'");
  if (cfg.system == SystemKind::Qzm)
    cfg.normalization = NormalizationMode::FirstMomentOne;

  if (doc.contains("name")) {
    if (!doc["name"].is_string() || doc["name"].get<std::string>().empty())
      field_error(source, "name", "expected a non-empty string");
    cfg.name = doc["name"].get<std::string>();
    if (cfg.name.find_first_of("/\\ ") != std::string::npos)
      field_error(source, "name", "must not contain spaces or path separators");
  }

  if (doc.contains("params")) {
    if (cfg.system != SystemKind::Qzm)
      field_error(source, "params", "only used by the qzm system");
    const auto &p = doc["params"];
    if (!p.is_object())
      field_error(source, "params", "expected an object");
    reject_unknown(p, {"B", "Z", "eps0"}, source, "params.");
    if (!p.contains("B") || !p.contains("eps0"))
      field_error(source, "params", "B and eps0 are required");
    cfg.field = decimal_field(p["B"], source, "params.B");
    cfg.eps0 = decimal_field(p["eps0"], source, "params.eps0");
    if (p.contains("Z"))
      cfg.charge = decimal_field(p["Z"], source, "params.Z");
  } else if (cfg.system == SystemKind::Qzm) {
    field_error(source, "params", "qzm needs {B, eps0[, Z]}");
  }

  if (doc.contains("recurrence") || doc.contains("weight")) {
    if (cfg.system != SystemKind::Custom1D)
      field_error(source, doc.contains("recurrence") ? "recurrence" : "weight",
                  "only used by the custom-1d system");
  }
  if (cfg.system == SystemKind::Custom1D) {
    if (!doc.contains("recurrence") || !doc["recurrence"].is_object())
      field_error(source, "recurrence", "custom-1d needs {missing_order, terms}");
    const auto &r = doc["recurrence"];
    reject_unknown(r, {"missing_order", "terms"}, source, "recurrence.");
    if (!r.contains("missing_order") || !r.contains("terms") || !r["terms"].is_array())
      field_error(source, "recurrence", "needs missing_order and a terms array");
    cfg.missing_order = count_field(r["missing_order"], source, "recurrence.missing_order");
    for (std::size_t i = 0; i < r["terms"].size(); ++i) {
      const auto &t = r["terms"][i];
      const std::string f = "recurrence.terms[" + std::to_string(i) + "]";
      if (!t.is_object())
        field_error(source, f, "expected {lag, coef, p_power, e_power}");
      reject_unknown(t, {"lag", "coef", "p_power", "e_power"}, source, f + ".");
      if (!t.contains("lag") || !t.contains("coef"))
        field_error(source, f, "lag and coef are required");
      RecurrenceTerm term;
      term.lag = count_field(t["lag"], source, f + ".lag");
      term.p_power = t.contains("p_power")
                         ? static_cast<unsigned>(count_field(t["p_power"], source, f + ".p_power"))
                         : 0;
      term.e_power = t.contains("e_power")
                         ? static_cast<unsigned>(count_field(t["e_power"], source, f + ".e_power"))
                         : 0;
      cfg.terms.push_back(term);
      cfg.term_coefs.push_back(decimal_field(t["coef"], source, f + ".coef"));
    }
    if (!doc.contains("weight") || !doc["weight"].is_object())
      field_error(source, "weight", "custom-1d needs {kind: gamma, shift, rate}");
    const auto &w = doc["weight"];
    reject_unknown(w, {"kind", "shift", "rate"}, source, "weight.");
    if (!w.contains("kind") || w["kind"] != "gamma")
      field_error(source, "weight.kind", "only 'gamma' (xi^shift exp(-rate xi)) is supported");
    if (w.contains("shift"))
      cfg.weight.shift = decimal_field(w["shift"], source, "weight.shift");
    if (w.contains("rate"))
      cfg.weight.rate = decimal_field(w["rate"], source, "weight.rate");
  }

  if (doc.contains("normalization")) {
    const auto &n = doc["normalization"];
    if (n == "unit")
      cfg.normalization = NormalizationMode::UnitMissingMomentVector;
    else if (n == "first_moment")
      cfg.normalization = NormalizationMode::FirstMomentOne;
    else
      field_error(source, "normalization", "expected 'unit' or 'first_moment'");
  }

  if (doc.contains("precision"))
    cfg.precision = static_cast<unsigned>(count_field(doc["precision"], source, "precision"));
  if (!doc.contains("orders"))
    field_error(source, "orders", "required");
  cfg.orders = order_list(doc["orders"], source, "orders");
  if (doc.contains("bound_orders"))
    cfg.bound_orders = order_list(doc["bound_orders"], source, "bound_orders");

  if (!doc.contains("window") || !doc["window"].is_array() || doc["window"].size() != 2)
    field_error(source, "window", "required: [lo, hi]");
  cfg.window_lo = decimal_field(doc["window"][0], source, "window[0]");
  cfg.window_hi = decimal_field(doc["window"][1], source, "window[1]");
  if (doc.contains("target"))
    cfg.target = decimal_field(doc["target"], source, "target");
  if (doc.contains("search")) {
    const auto &s = doc["search"];
    if (s == "scan")
      cfg.search = SearchMode::Scan;
    else if (s == "window")
      cfg.search = SearchMode::Window;
    else
      field_error(source, "search", "expected 'scan' or 'window'");
  }
  if (doc.contains("scan_points"))
    cfg.scan_points = count_field(doc["scan_points"], source, "scan_points");
  if (doc.contains("tol_exponent"))
    cfg.tol_exponent = static_cast<int>(count_field(doc["tol_exponent"], source, "tol_exponent"));

  if (doc.contains("b_u")) {
    const auto &b = doc["b_u"];
    if (b.is_object()) {
      for (const auto &[key, value] : b.items()) {
        std::size_t order = 0;
        try {
          std::size_t used = 0;
          order = std::stoul(key, &used);
          if (used != key.size())
            throw std::invalid_argument(key);
        } catch (const std::exception &) {
          field_error(source, "b_u." + key, "stage keys must be orders");
        }
        cfg.b_u[order] = decimal_field(value, source, "b_u." + key);
      }
      if (cfg.b_u.empty())
        field_error(source, "b_u", "empty stage table");
    } else {
      cfg.b_u[0] = decimal_field(b, source, "b_u");
    }
  }
  if (doc.contains("bu_policy")) {
    const auto &p = doc["bu_policy"];
    if (!p.is_object())
      field_error(source, "bu_policy", "expected {theta, kappa, digits}");
    reject_unknown(p, {"theta", "kappa", "digits"}, source, "bu_policy.");
    if (p.contains("theta"))
      cfg.bu_theta = decimal_field(p["theta"], source, "bu_policy.theta");
    if (p.contains("kappa"))
      cfg.bu_kappa = decimal_field(p["kappa"], source, "bu_policy.kappa");
    if (p.contains("digits"))
      cfg.bu_digits = static_cast<int>(count_field(p["digits"], source, "bu_policy.digits"));
  }
  if (doc.contains("output_dir")) {
    if (!doc["output_dir"].is_string())
      field_error(source, "output_dir", "expected a path string");
    cfg.output_dir = doc["output_dir"].get<std::string>();
  }
  if (doc.contains("emit")) {
    const auto &e = doc["emit"];
    if (!e.is_object())
      field_error(source, "emit", "expected an object of flags");
    reject_unknown(e, {"tables", "plots", "ledger", "gram_residual"}, source, "emit.");
    if (e.contains("tables"))
      cfg.emit.tables = flag(e["tables"], source, "emit.tables");
    if (e.contains("plots"))
      cfg.emit.plots = flag(e["plots"], source, "emit.plots");
    if (e.contains("ledger"))
      cfg.emit.ledger = flag(e["ledger"], source, "emit.ledger");
    if (e.contains("gram_residual"))
      cfg.emit.gram_residual = flag(e["gram_residual"], source, "emit.gram_residual");
  }

  validate(cfg, source);
  return cfg;
}

RunConfig load_config(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError(path.string() + ": cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string());
}

void apply_overrides(RunConfig &cfg, std::optional<unsigned> precision,
                     std::optional<std::string> b_u, std::optional<std::filesystem::path> out) {
  if (precision)
    cfg.precision = *precision;
  if (b_u) {
    cfg.b_u.clear();
    cfg.b_u[0] = decimal_field(json(*b_u), "--bu", "b_u");
  }
  if (out)
    cfg.output_dir = *out;
  validate(cfg, "command line");
}

json RunConfig::echo() const {
  json j;
  j["system"] = system_name(system);
  if (!name.empty())
    j["name"] = name;
  if (system == SystemKind::Qzm)
    j["params"] = {{"B", field}, {"Z", charge}, {"eps0", eps0}};
  if (system == SystemKind::Custom1D) {
    json terms = json::array();
    for (std::size_t i = 0; i < this->terms.size(); ++i)
      terms.push_back({{"lag", this->terms[i].lag},
                       {"coef", term_coefs[i]},
                       {"p_power", this->terms[i].p_power},
                       {"e_power", this->terms[i].e_power}});
    j["recurrence"] = {{"missing_order", missing_order}, {"terms", terms}};
    j["weight"] = {{"kind", "gamma"}, {"shift", weight.shift}, {"rate", weight.rate}};
  }
  j["normalization"] =
      normalization == NormalizationMode::FirstMomentOne ? "first_moment" : "unit";
  j["precision"] = precision;
  j["orders"] = orders;
  if (!bound_orders.empty())
    j["bound_orders"] = bound_orders;
  j["window"] = {window_lo, window_hi};
  if (target)
    j["target"] = *target;
  j["search"] = search == SearchMode::Scan ? "scan" : "window";
  j["scan_points"] = scan_points;
  j["tol_exponent"] = tol_exponent;
  if (b_u.size() == 1 && b_u.count(0)) {
    j["b_u"] = b_u.at(0);
  } else if (!b_u.empty()) {
    json stages = json::object();
    for (const auto &[o, v] : b_u)
      stages[std::to_string(o)] = v;
    j["b_u"] = stages;
  }
  j["bu_policy"] = {{"theta", bu_theta}, {"kappa", bu_kappa}, {"digits", bu_digits}};
  j["output_dir"] = output_dir.string();
  j["emit"] = {{"tables", emit.tables},
               {"plots", emit.plots},
               {"ledger", emit.ledger},
               {"gram_residual", emit.gram_residual}};
  return j;
}

std::string system_label(const RunConfig &cfg) {
  if (cfg.system == SystemKind::Custom1D)
    return cfg.name.empty() ? "custom" : cfg.name;
  return system_name(cfg.system);
}

bool RunResult::ok() const {
  return std::all_of(rows.begin(), rows.end(), [](const ResultRow &r) { return r.status == "ok"; });
}

// ---------------------------------------------------------------------------
// Orchestration

namespace {

std::unique_ptr<Problem> make_problem(const RunConfig &cfg) {
  const std::size_t max_order = cfg.orders.back();
  switch (cfg.system) {
  case SystemKind::Harmonic:
    return make_one_dim_problem("harmonic", Recurrence1D::harmonic_even(),
                                harmonic_weight_moments, max_order, cfg.normalization);
  case SystemKind::Qzm:
    return make_qzm_problem(QzmSystem(num(cfg.field), num(cfg.charge), num(cfg.eps0)),
                            max_order);
  case SystemKind::Custom1D: {
    auto terms = cfg.terms;
    for (std::size_t i = 0; i < terms.size(); ++i)
      terms[i].coef = num(cfg.term_coefs[i]);
    BigReal shift = num(cfg.weight.shift), rate = num(cfg.weight.rate);
    return make_one_dim_problem(
        system_label(cfg), Recurrence1D(cfg.missing_order, std::move(terms)),
        [shift, rate](std::size_t p_max) { return gamma_weight_moments(shift, rate, p_max); },
        max_order, cfg.normalization);
  }
  }
  throw std::logic_error("unknown system");
}

struct Window {
  BigReal lo, hi;
};

Window effective_window(const RunConfig &cfg, const Problem &problem) {
  Window w{num(cfg.window_lo), num(cfg.window_hi)};
  if (auto floor = problem.domain_floor(); floor && w.lo < *floor)
    w.lo = *floor;
  return w;
}

std::string dec(const BigReal &x) { return to_decimal(x, working_precision()); }
std::string dec(const std::optional<BigReal> &x) { return x ? dec(*x) : std::string(); }

void write_csv(const std::filesystem::path &path, const std::vector<std::string> &header,
               const std::vector<std::vector<std::string>> &rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::runtime_error("cannot write " + path.string());
  auto line = [&](const std::vector<std::string> &cells) {
    for (std::size_t i = 0; i < cells.size(); ++i)
      out << (i ? "," : "") << cells[i];
    out << '\n';
  };
  line(header);
  for (const auto &r : rows)
    line(r);
}

std::filesystem::path scan_path(const RunConfig &cfg, std::size_t order) {
  return cfg.output_dir / ("scan_" + system_label(cfg) + "_" + std::to_string(order) + ".csv");
}

void write_scan(const RunConfig &cfg, std::size_t order, std::span<const ScanPoint> pts,
                RunResult &result) {
  std::vector<std::vector<std::string>> rows;
  for (const auto &p : pts)
    rows.push_back({dec(p.energy), dec(p.value), dec(p.log10_value)});
  auto path = scan_path(cfg, order);
  write_csv(path, {"E", "value", "log10_value"}, rows);
  result.files.push_back(path);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void mark_increasing(RunResult &result) {
  const ResultRow *prev = nullptr;
  result.sequence.clear();
  for (auto &row : result.rows) {
    if (!row.s_min)
      continue;
    row.increasing = prev == nullptr || *row.s_min > *prev->s_min;
    result.sequence.push_back(*row.s_min);
    prev = &row;
  }
}

RunResult minimize_rows(const RunConfig &cfg, const Problem &problem, const std::string &command) {
  RunResult result;
  result.command = command;
  const Window win = effective_window(cfg, problem);
  const BigReal tol = pow10(-cfg.tol_exponent);
  std::optional<BigReal> target;
  if (cfg.target)
    target = num(*cfg.target);

  for (auto order : cfg.orders) {
    const auto t0 = std::chrono::steady_clock::now();
    ResultRow row;
    row.order = order;
    try {
      auto fn = problem.at_order(order);
      BigReal a = win.lo, b = win.hi;
      if (cfg.search == SearchMode::Scan) {
        auto grid = uniform_grid(win.lo, win.hi, cfg.scan_points);
        auto pts = scan(*fn, grid);
        if (cfg.emit.plots)
          write_scan(cfg, order, pts, result);
        auto wells = find_wells(pts);
        if (wells.empty())
          throw NoSignChange("no local minimum found in the window; widen it or add scan points");
        auto pick = wells.begin();
        if (target) {
          auto dist = [&](const std::pair<BigReal, BigReal> &w) {
            return BigReal(abs((w.first + w.second) / 2 - *target));
          };
          pick = std::min_element(wells.begin(), wells.end(),
                                  [&](const auto &x, const auto &y) { return dist(x) < dist(y); });
        }
        a = pick->first;
        b = pick->second;
      }
      auto m = find_minimum(*fn, a, b, tol);
      row.e_min = m.e_min;
      row.s_min = m.s_min;
      row.derivative = m.derivative;
      row.width = m.width;
      if (cfg.system == SystemKind::Qzm) {
        QzmSystem sys(num(cfg.field), num(cfg.charge), num(cfg.eps0));
        row.stencil_residual = qzm_stencil_residual(sys, build_qzm(sys, m.e_min, order));
      }
    } catch (const NumericError &e) {
      row.status = e.what();
    } catch (const DomainError &e) {
      row.status = e.what();
    }
    row.wall_seconds = seconds_since(t0);
    result.rows.push_back(std::move(row));
  }
  mark_increasing(result);
  if (cfg.emit.gram_residual)
    result.gram_residual = problem.gram_residual();
  return result;
}

void write_results(const RunConfig &cfg, RunResult &result, const std::string &stem, bool bounds) {
  std::filesystem::create_directories(cfg.output_dir);
  if (cfg.emit.tables) {
    std::vector<std::string> header = {"order", "E_min", "S_min", "E_L", "E_U"};
    if (bounds)
      header.push_back("B_U");
    header.insert(header.end(), {"increasing", "derivative", "bracket_width"});
    if (cfg.system == SystemKind::Qzm)
      header.insert(header.end(), {"eps0", "stencil_residual"});
    header.insert(header.end(), {"precision", "status"});
    std::vector<std::vector<std::string>> rows;
    for (const auto &r : result.rows) {
      std::vector<std::string> cells = {std::to_string(r.order), dec(r.e_min), dec(r.s_min),
                                        dec(r.e_lower), dec(r.e_upper)};
      if (bounds)
        cells.push_back(dec(r.b_u));
      cells.insert(cells.end(), {r.s_min ? (r.increasing ? "true" : "false") : "",
                                 dec(r.derivative), dec(r.width)});
      if (cfg.system == SystemKind::Qzm)
        cells.insert(cells.end(), {cfg.eps0, r.stencil_residual ? to_decimal(*r.stencil_residual, 6) : ""});
      std::string status = r.status;
      std::replace(status.begin(), status.end(), ',', ';');
      std::replace(status.begin(), status.end(), '\n', ' ');
      cells.insert(cells.end(), {std::to_string(cfg.precision), status});
      rows.push_back(std::move(cells));
    }
    auto path = cfg.output_dir / (stem + "_" + system_label(cfg) + ".csv");
    write_csv(path, header, rows);
    result.files.push_back(path);
  }
  if (cfg.emit.ledger) {
    auto path = cfg.output_dir / ("ledger_" + result.command + "_" + system_label(cfg) + ".json");
    std::ofstream out(path, std::ios::binary);
    out << ledger(cfg, result).dump(2) << '\n';
    result.files.push_back(path);
  }
}

} // namespace

RunResult run_scan(const RunConfig &cfg) {
  PrecisionScope scope(cfg.precision);
  auto problem = make_problem(cfg);
  std::filesystem::create_directories(cfg.output_dir);
  const Window win = effective_window(cfg, *problem);
  RunResult result;
  result.command = "scan";
  auto grid = uniform_grid(win.lo, win.hi, cfg.scan_points);
  for (auto order : cfg.orders) {
    const auto t0 = std::chrono::steady_clock::now();
    auto pts = scan(*problem->at_order(order), grid);
    write_scan(cfg, order, pts, result);
    ResultRow row;
    row.order = order;
    row.wall_seconds = seconds_since(t0);
    result.rows.push_back(std::move(row));
  }
  if (cfg.emit.gram_residual)
    result.gram_residual = problem->gram_residual();
  if (cfg.emit.ledger) {
    auto path = cfg.output_dir / ("ledger_scan_" + system_label(cfg) + ".json");
    std::ofstream out(path, std::ios::binary);
    out << ledger(cfg, result).dump(2) << '\n';
    result.files.push_back(path);
  }
  return result;
}

RunResult run_minimize(const RunConfig &cfg) {
  PrecisionScope scope(cfg.precision);
  auto problem = make_problem(cfg);
  std::filesystem::create_directories(cfg.output_dir);
  auto result = minimize_rows(cfg, *problem, "minimize");
  write_results(cfg, result, "minima", false);
  return result;
}

RunResult run_bound(const RunConfig &cfg) {
  PrecisionScope scope(cfg.precision);
  auto problem = make_problem(cfg);
  std::filesystem::create_directories(cfg.output_dir);
  auto result = minimize_rows(cfg, *problem, "bound");

  std::optional<BigReal> estimated;
  if (cfg.b_u.empty())
    estimated = estimate_bu(result.sequence, cfg.bu_policy());

  const Window win = effective_window(cfg, *problem);
  const BigReal tol = pow10(-cfg.tol_exponent);
  const auto &wanted = cfg.bound_orders.empty() ? cfg.orders : cfg.bound_orders;
  for (auto &row : result.rows) {
    if (std::find(wanted.begin(), wanted.end(), row.order) == wanted.end() || !row.e_min)
      continue;
    BigReal b_u;
    if (estimated)
      b_u = *estimated;
    else
      b_u = num(std::prev(cfg.b_u.upper_bound(row.order))->second);
    row.b_u = b_u;
    result.b_u[row.order] = b_u;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      auto fn = problem->at_order(row.order);
      auto iv = extract_bounds(*fn, *row.e_min, b_u, win.lo, win.hi, tol);
      row.e_lower = iv.lower;
      row.e_upper = iv.upper;
    } catch (const NumericError &e) {
      row.status = e.what();
    }
    row.wall_seconds += seconds_since(t0);
  }
  write_results(cfg, result, "bounds", true);
  return result;
}

json ledger(const RunConfig &cfg, const RunResult &result) {
  json j;
  j["config"] = cfg.echo();
  j["command"] = result.command;
  j["system"] = system_label(cfg);
  j["precision"] = cfg.precision;
  json seq = json::array();
  for (const auto &s : result.sequence)
    seq.push_back(dec(s));
  j["sequence"] = seq;
  if (result.b_u.empty()) {
    j["b_u"] = nullptr;
  } else {
    json b = json::object();
    for (const auto &[o, v] : result.b_u)
      b[std::to_string(o)] = dec(v);
    j["b_u"] = b;
  }
  json rows = json::array();
  for (const auto &r : result.rows) {
    json row;
    row["order"] = r.order;
    auto opt = [](const std::optional<BigReal> &x) -> json {
      return x ? json(to_decimal(*x, working_precision())) : json(nullptr);
    };
    row["e_min"] = opt(r.e_min);
    row["s_min"] = opt(r.s_min);
    row["e_lower"] = opt(r.e_lower);
    row["e_upper"] = opt(r.e_upper);
    row["b_u"] = opt(r.b_u);
    row["derivative"] = opt(r.derivative);
    row["bracket_width"] = opt(r.width);
    row["increasing"] = r.increasing;
    row["status"] = r.status;
    row["wall_seconds"] = r.wall_seconds;
    json res = json::object();
    if (r.stencil_residual)
      res["stencil"] = to_decimal(*r.stencil_residual, 6);
    if (cfg.system == SystemKind::Qzm)
      row["eps0"] = cfg.eps0;
    row["residuals"] = res;
    rows.push_back(row);
  }
  j["rows"] = rows;
  j["gram_residual"] =
      result.gram_residual ? json(to_decimal(*result.gram_residual, 6)) : json(nullptr);
  json files = json::array();
  for (const auto &f : result.files)
    files.push_back(f.filename().string());
  j["files"] = files;
  j["versions"] = {{"oppq", kVersion},
                   {"boost", BOOST_LIB_VERSION},
                   {"mpfr", mpfr_get_version()},
                   {"gmp", gmp_version}};
  return j;
}

} // namespace oppq::cli
