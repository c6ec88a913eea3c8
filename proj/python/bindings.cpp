#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "dotmarg/bayes.hpp"
#include "dotmarg/errors.hpp"
#include "dotmarg/projector.hpp"
#include "dotmarg/runner.hpp"
#include "dotmarg/scenario.hpp"
#include "dotmarg/transport.hpp"

namespace py = pybind11;
using namespace dotmarg;

namespace {

// JSON crosses the boundary as text; the Python side parses it.
ScenarioConfig config_from(const std::string& text) { return parse_scenario(io::json::parse(text)); }

Eigen::VectorXd as_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Native core of dotmarg";

  const auto config_error = py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<DeadChannelError>(m, "DeadChannelError", PyExc_RuntimeError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  // Malformed JSON text is a configuration problem too.
  static py::handle config_type = config_error;
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const io::json::exception& e) {
      py::set_error(config_type, e.what());
    }
  });

  // Raises ConfigError on a bad document; returns the case number.
  m.def("validate_scenario", [](const std::string& text) { return config_from(text).case_id; });

  m.def(
      "run_case",
      [](const std::string& text, int threads) {
        auto cfg = config_from(text);
        if (threads > 0) cfg.transport.threads = threads;
        RunReport report;
        GridDims dims;
        {
          py::gil_scoped_release release;
          const auto ws = prepare_workspace(cfg);
          dims = ws.phantom.dims;
          report = run_case(ws);
        }
        py::dict volumes;
        volumes["truth"] = as_vector(report.truth);
        volumes["naive"] = as_vector(report.naive);
        volumes["projected"] = as_vector(report.projected);
        volumes["reference"] = as_vector(report.reference);
        return py::make_tuple(report.to_json().dump(), volumes,
                              py::make_tuple(dims.nx, dims.ny, dims.nz));
      },
      py::arg("config"), py::arg("threads") = 0);

  m.def("henyey_greenstein_cosine", &henyey_greenstein_cosine, py::arg("g"), py::arg("u"));
  m.def("fresnel_reflectance", &fresnel_reflectance, py::arg("nu_inside"), py::arg("nu_outside"),
        py::arg("cos_incidence"));

  m.def(
      "coupling_jacobian",
      [](const std::vector<std::pair<int, int>>& pairs, std::size_t sources, std::size_t detectors) {
        std::vector<SourceDetectorPair> p;
        for (auto [s, d] : pairs) p.push_back({s, d});
        return coupling_jacobian(p, sources, detectors).dense();
      },
      py::arg("pairs"), py::arg("sources"), py::arg("detectors"));

  m.def(
      "projection_from_basis",
      [](const Eigen::MatrixXd& columns, double tol) {
        const auto op = projection_from_basis(columns, tol);
        return py::make_tuple(op.p, op.rank);
      },
      py::arg("columns"), py::arg("rank_tolerance") = kDefaultRankTolerance);

  m.def(
      "leading_eigenvectors",
      [](const Eigen::MatrixXd& symmetric, Eigen::Index k) {
        const auto sub = leading_eigenvectors(symmetric, k);
        return py::make_tuple(sub.basis, sub.eigenvalues);
      },
      py::arg("symmetric"), py::arg("k"));

  m.def(
      "prior_covariance",
      [](const Eigen::MatrixX3d& coords, double sigma, double correlation_length) {
        std::vector<Vec3> pts;
        for (Eigen::Index i = 0; i < coords.rows(); ++i) pts.push_back({coords(i, 0), coords(i, 1), coords(i, 2)});
        return Eigen::MatrixXd(prior_covariance(pts, sigma, correlation_length).covariance);
      },
      py::arg("coordinates"), py::arg("sigma") = kDefaultPriorSigma,
      py::arg("correlation_length") = kDefaultPriorCorrelation);
  m.def("truncation_radius", py::overload_cast<double>(&truncation_radius), py::arg("correlation_length"));

  m.def(
      "posterior_mean",
      [](const Eigen::MatrixXd& j, const Eigen::MatrixXd& gamma_x, const Eigen::VectorXd& noise_variance,
         const Eigen::VectorXd& y) { return posterior(j, gamma_x, noise_variance, y).mean; },
      py::arg("j"), py::arg("gamma_x"), py::arg("noise_variance"), py::arg("y"));
  m.def("l2_error", py::overload_cast<const Eigen::VectorXd&, const Eigen::VectorXd&>(&l2_error),
        py::arg("estimate"), py::arg("truth"));
}
