// Python bindings. Numbers cross the boundary as decimal strings so nothing
// is squeezed through a double.

#include "oppq/cli.hpp"

#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace oppq;

namespace {

std::string dec(const BigReal &x) { return to_decimal(x); }

// A Problem plus the precision it was built at; every call runs at that precision.
class PyProblem {
public:
  PyProblem(std::unique_ptr<Problem> p, unsigned digits) : p_(std::move(p)), digits_(digits) {}

  unsigned precision() const { return digits_; }
  std::size_t max_order() const { return p_->max_order(); }

  py::dict evaluate(std::size_t order, const std::string &energy) const {
    PrecisionScope scope(digits_);
    auto s = p_->at_order(order)->evaluate(parse_real(energy));
    py::dict d;
    d["energy"] = dec(s.energy);
    d["value"] = dec(s.value);
    d["derivative"] = dec(s.derivative);
    d["degenerate"] = s.degenerate;
    std::vector<std::string> mu;
    for (const auto &m : s.missing_moments)
      mu.push_back(dec(m));
    d["missing_moments"] = mu;
    return d;
  }

  py::dict minimize(std::size_t order, const std::string &lo, const std::string &hi,
                    int tol_exponent) const {
    PrecisionScope scope(digits_);
    auto r = find_minimum(*p_->at_order(order), parse_real(lo), parse_real(hi),
                          pow10(-tol_exponent));
    py::dict d;
    d["e_min"] = dec(r.e_min);
    d["s_min"] = dec(r.s_min);
    d["derivative"] = dec(r.derivative);
    d["width"] = dec(r.width);
    d["iterations"] = r.iterations;
    return d;
  }

  std::pair<std::string, std::string> bounds(std::size_t order, const std::string &e_min,
                                             const std::string &b_u, const std::string &lo,
                                             const std::string &hi, int tol_exponent) const {
    PrecisionScope scope(digits_);
    auto iv = extract_bounds(*p_->at_order(order), parse_real(e_min), parse_real(b_u),
                             parse_real(lo), parse_real(hi), pow10(-tol_exponent));
    return {dec(iv.lower), dec(iv.upper)};
  }

  std::vector<std::tuple<std::string, std::string, std::string>>
  scan(std::size_t order, const std::string &lo, const std::string &hi, std::size_t points) const {
    PrecisionScope scope(digits_);
    auto grid = uniform_grid(parse_real(lo), parse_real(hi), points);
    std::vector<std::tuple<std::string, std::string, std::string>> out;
    for (const auto &p : oppq::scan(*p_->at_order(order), grid))
      out.emplace_back(dec(p.energy), dec(p.value), dec(p.derivative));
    return out;
  }

  std::string gram_residual() const {
    PrecisionScope scope(digits_);
    return to_decimal(p_->gram_residual(), 6);
  }

private:
  std::unique_ptr<Problem> p_;
  unsigned digits_;
};

NormalizationMode mode_from(const std::string &s) {
  if (s == "unit")
    return NormalizationMode::UnitMissingMomentVector;
  if (s == "first_moment")
    return NormalizationMode::FirstMomentOne;
  throw std::invalid_argument("normalization must be 'unit' or 'first_moment'");
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Arbitrary-precision eigenenergy bounds from moment equations";
  m.attr("__version__") = cli::kVersion;

  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  py::register_exception<NotConverged>(m, "NotConverged", m.attr("NumericError").ptr());
  py::register_exception<NoSignChange>(m, "NoSignChange", m.attr("NumericError").ptr());
  py::register_exception<NoUpperCrossing>(m, "NoUpperCrossing", m.attr("NumericError").ptr());
  py::register_exception<NotPositiveDefinite>(m, "NotPositiveDefinite",
                                              m.attr("NumericError").ptr());
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<cli::ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<PyProblem>(m, "Problem")
      .def_property_readonly("precision", &PyProblem::precision)
      .def_property_readonly("max_order", &PyProblem::max_order)
      .def("evaluate", &PyProblem::evaluate, py::arg("order"), py::arg("energy"))
      .def("minimize", &PyProblem::minimize, py::arg("order"), py::arg("lo"), py::arg("hi"),
           py::arg("tol_exponent") = 20)
      .def("bounds", &PyProblem::bounds, py::arg("order"), py::arg("e_min"), py::arg("b_u"),
           py::arg("lo"), py::arg("hi"), py::arg("tol_exponent") = 20)
      .def("scan", &PyProblem::scan, py::arg("order"), py::arg("lo"), py::arg("hi"),
           py::arg("points") = 200)
      .def("gram_residual", &PyProblem::gram_residual);

  m.def(
      "harmonic",
      [](std::size_t max_order, unsigned precision) {
        PrecisionScope scope(precision);
        return PyProblem(make_one_dim_problem("harmonic", Recurrence1D::harmonic_even(),
                                              harmonic_weight_moments, max_order),
                         precision);
      },
      py::arg("max_order"), py::arg("precision") = 60);

  m.def(
      "qzm",
      [](const std::string &b, const std::string &eps0, std::size_t max_ms, unsigned precision,
         const std::string &z) {
        PrecisionScope scope(precision);
        return PyProblem(
            make_qzm_problem(QzmSystem(parse_real(b), parse_real(z), parse_real(eps0)), max_ms),
            precision);
      },
      py::arg("B"), py::arg("eps0"), py::arg("max_ms"), py::arg("precision") = 120,
      py::arg("Z") = "1");

  m.def(
      "custom_1d",
      [](std::size_t missing_order, const std::vector<py::dict> &terms, const std::string &shift,
         const std::string &rate, std::size_t max_order, unsigned precision,
         const std::string &normalization) {
        PrecisionScope scope(precision);
        std::vector<RecurrenceTerm> ts;
        for (const auto &t : terms)
          ts.push_back({t["lag"].cast<std::size_t>(), parse_real(py::str(t["coef"]).cast<std::string>()),
                        t.contains("p_power") ? t["p_power"].cast<unsigned>() : 0u,
                        t.contains("e_power") ? t["e_power"].cast<unsigned>() : 0u});
        BigReal s = parse_real(shift), r = parse_real(rate);
        return PyProblem(make_one_dim_problem(
                             "custom", Recurrence1D(missing_order, std::move(ts)),
                             [s, r](std::size_t p) { return gamma_weight_moments(s, r, p); },
                             max_order, mode_from(normalization)),
                         precision);
      },
      py::arg("missing_order"), py::arg("terms"), py::arg("shift"), py::arg("rate"),
      py::arg("max_order"), py::arg("precision") = 60, py::arg("normalization") = "unit");

  m.def(
      "estimate_bu",
      [](const std::vector<std::string> &seq, unsigned precision, const std::string &theta,
         const std::string &kappa, int digits) {
        PrecisionScope scope(precision);
        Vector v;
        for (const auto &s : seq)
          v.push_back(parse_real(s));
        BuPolicy p;
        p.theta = parse_real(theta);
        p.kappa = parse_real(kappa);
        p.digits = digits;
        return dec(estimate_bu(v, p));
      },
      py::arg("sequence"), py::arg("precision") = 60, py::arg("theta") = "1e-8",
      py::arg("kappa") = "10", py::arg("digits") = 15);

  m.def(
      "run",
      [](const std::string &command, const std::string &config_json, std::optional<unsigned> precision,
         std::optional<std::string> b_u, std::optional<std::string> out) {
        auto cfg = cli::parse_config(config_json);
        std::optional<std::filesystem::path> dir;
        if (out)
          dir = *out;
        cli::apply_overrides(cfg, precision, b_u, dir);
        cli::RunResult r;
        if (command == "scan")
          r = cli::run_scan(cfg);
        else if (command == "minimize")
          r = cli::run_minimize(cfg);
        else if (command == "bound")
          r = cli::run_bound(cfg);
        else
          throw std::invalid_argument("command must be scan, minimize or bound");
        PrecisionScope scope(cfg.precision);
        return cli::ledger(cfg, r).dump();
      },
      py::arg("command"), py::arg("config_json"), py::arg("precision") = py::none(),
      py::arg("b_u") = py::none(), py::arg("out") = py::none());
}
