#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cooptrack/association.hpp"
#include "cooptrack/config.hpp"
#include "cooptrack/ekf_bike.hpp"
#include "cooptrack/error.hpp"
#include "cooptrack/metrics.hpp"
#include "cooptrack/pipeline.hpp"
#include "cooptrack/scene_io.hpp"
#include "cooptrack/scene_sim.hpp"
#include "cooptrack/signal_features.hpp"

namespace py = pybind11;
using namespace cooptrack;

namespace {

ekf::BikeState state_of(const ekf::Vector5& s) { return ekf::BikeState::from_vector(s); }

ekf::ProcessNoiseParams process(double T, double sigma_w_gamma_dot, double sigma_w_v_dot) {
  ekf::ProcessNoiseParams p;
  p.T = T;
  p.sigma_w_gamma_dot = sigma_w_gamma_dot;
  p.sigma_w_v_dot = sigma_w_v_dot;
  return p;
}

config::RunConfig parse_config(const std::string& text) {
  return config::from_json(text.empty() ? Json::object() : Json::parse(text));
}

py::dict scene_arrays(const sim::Scene& s) {
  Eigen::MatrixXd gt(static_cast<Eigen::Index>(s.ground_truth.size()), 6);
  for (std::size_t i = 0; i < s.ground_truth.size(); ++i) {
    const auto& g = s.ground_truth[i];
    gt.row(static_cast<Eigen::Index>(i)) << g.t, g.x, g.y, g.gamma, g.gamma_dot, g.v;
  }
  Eigen::MatrixXd det(static_cast<Eigen::Index>(s.detections.size()), 3);
  for (std::size_t i = 0; i < s.detections.size(); ++i) {
    const auto& d = s.detections[i];
    det.row(static_cast<Eigen::Index>(i)) << d.t, d.x, d.y;
  }
  Eigen::MatrixXd dev(static_cast<Eigen::Index>(s.device.size()), 4);
  for (std::size_t i = 0; i < s.device.size(); ++i) {
    const auto& d = s.device[i];
    dev.row(static_cast<Eigen::Index>(i)) << d.t, d.gamma_dot, d.v, d.sigma_v;
  }
  py::dict out;
  out["ground_truth"] = gt;
  out["detections"] = det;
  out["device"] = dev;
  out["occlusion_mask"] = s.occlusion_mask;
  return out;
}

}  // namespace

PYBIND11_MODULE(_cooptrack, m) {
  m.doc() = "Cooperative cyclist tracking: bike-model EKF, association, metrics, simulation";

  py::register_exception<Error>(m, "Error");
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<UndefinedMetric>(m, "UndefinedMetric", PyExc_ArithmeticError);

  // Bike-model EKF. States are [x, y, gamma, gamma_dot, v].
  m.def("predict_state",
        [](const ekf::Vector5& s, double T) { return ekf::predict_state(state_of(s), T).to_vector(); },
        py::arg("state"), py::arg("T") = 0.02);
  m.def("jacobian_f", [](const ekf::Vector5& s, double T) { return ekf::jacobian_f(state_of(s), T); },
        py::arg("state"), py::arg("T") = 0.02);
  m.def("noise_gain", [](const ekf::Vector5& s, double T) { return ekf::noise_gain(state_of(s), T); },
        py::arg("state"), py::arg("T") = 0.02);
  m.def("process_noise_cov",
        [](const ekf::Vector5& s, double T, double sg, double sv) {
          return ekf::process_noise_cov(state_of(s), process(T, sg, sv));
        },
        py::arg("state"), py::arg("T") = 0.02, py::arg("sigma_w_gamma_dot") = 1.5,
        py::arg("sigma_w_v_dot") = 2.5);
  m.def("ekf_predict",
        [](const ekf::Vector5& s, const ekf::Matrix5& P, double T, double sg, double sv) {
          const auto e = ekf::ekf_predict({state_of(s), P}, process(T, sg, sv));
          return py::make_tuple(e.state.to_vector(), e.covariance);
        },
        py::arg("state"), py::arg("covariance"), py::arg("T") = 0.02,
        py::arg("sigma_w_gamma_dot") = 1.5, py::arg("sigma_w_v_dot") = 2.5);
  m.def("ekf_update",
        [](const ekf::Vector5& s, const ekf::Matrix5& P, std::optional<Eigen::Vector2d> position,
           std::optional<Eigen::Vector3d> device, double T, double sigma_xy) {
          ekf::Measurement meas;
          if (position && device) {
            meas = ekf::Measurement::position_and_device(0.0, (*position)(0), (*position)(1),
                                                         (*device)(0), (*device)(1), (*device)(2));
          } else if (position) {
            meas = ekf::Measurement::position_only(0.0, (*position)(0), (*position)(1));
          } else if (device) {
            meas = ekf::Measurement::device_only(0.0, (*device)(0), (*device)(1), (*device)(2));
          } else {
            throw InvalidArgument("ekf_update needs a position, a device reading, or both");
          }
          ekf::MeasurementNoiseParams n;
          n.sigma_x = n.sigma_y = sigma_xy;
          ekf::ProcessNoiseParams p;
          p.T = T;
          const auto e = ekf::ekf_update({state_of(s), P}, meas, n, p);
          return py::make_tuple(e.state.to_vector(), e.covariance);
        },
        py::arg("state"), py::arg("covariance"), py::arg("position") = py::none(),
        py::arg("device") = py::none(), py::arg("T") = 0.02, py::arg("sigma_xy") = 0.15,
        "Device readings are [gamma_dot, v, sigma_v].");

  // Association.
  m.def("munkres_solve",
        [](const Eigen::MatrixXd& cost, std::optional<Eigen::Matrix<bool, -1, -1>> forbidden) {
          assoc::CostMatrix c(static_cast<std::size_t>(cost.rows()), static_cast<std::size_t>(cost.cols()));
          for (Eigen::Index i = 0; i < cost.rows(); ++i) {
            for (Eigen::Index j = 0; j < cost.cols(); ++j) {
              c.set_cost(i, j, cost(i, j));
              if (forbidden && (*forbidden)(i, j)) c.forbid(i, j);
            }
          }
          std::vector<std::pair<std::size_t, std::size_t>> out;
          for (const auto& a : assoc::munkres_solve(c)) out.emplace_back(a.row, a.col);
          return out;
        },
        py::arg("cost"), py::arg("forbidden") = py::none());
  m.def("penalized_mahalanobis",
        [](const Eigen::Vector2d& y, const Eigen::Matrix2d& S) {
          return assoc::penalized_mahalanobis({y, S});
        },
        py::arg("y"), py::arg("S"));

  // Metrics over per-frame distances; None marks a frame without a valid track.
  m.def("motp_mota",
        [](const std::vector<std::optional<double>>& deltas, double tau) {
          metrics::MetricConfig cfg;
          cfg.tau = tau;
          std::vector<metrics::FrameRecord> frames;
          for (std::size_t i = 0; i < deltas.size(); ++i) {
            frames.push_back(metrics::make_record(static_cast<double>(i), true, deltas[i], cfg));
          }
          return py::make_tuple(metrics::motp(frames, cfg), metrics::mota(frames));
        },
        py::arg("deltas"), py::arg("tau") = 1.0);
  m.def("motap",
        [](double mota_a, double motp_a, double mota_b, double motp_b, double alpha, double beta) {
          metrics::MetricConfig cfg;
          cfg.alpha = alpha;
          cfg.beta = beta;
          return metrics::motap({mota_a, motp_a}, {mota_b, motp_b}, cfg);
        },
        py::arg("mota_a"), py::arg("motp_a"), py::arg("mota_b"), py::arg("motp_b"),
        py::arg("alpha") = 0.025, py::arg("beta") = 0.01);

  // Signal features.
  m.def("dft_features", [](const std::vector<double>& w) { return features::dft_features(w); },
        py::arg("window"));
  m.def("orthopoly_coeffs",
        [](const std::vector<double>& w, std::size_t degree) { return features::orthopoly_coeffs(w, degree); },
        py::arg("window"), py::arg("degree") = 3);

  // Scenes and pipeline. Specs and configs travel as JSON text.
  py::class_<sim::Scene>(m, "Scene")
      .def_readonly("id", &sim::Scene::id)
      .def("arrays", &scene_arrays)
      .def("spec_json", [](const sim::Scene& s) { return sim::to_json(s.spec).dump(); });
  m.def("default_scene_spec", [] { return sim::to_json(sim::SceneSpec{}).dump(); });
  m.def("generate_scene",
        [](const std::string& spec_json, const std::string& id) {
          auto scene = sim::generate_scene(sim::spec_from_json(Json::parse(spec_json)));
          scene.id = id;
          return scene;
        },
        py::arg("spec_json"), py::arg("id") = "scene");
  m.def("write_scene", [](const std::string& dir, const sim::Scene& s) { io::write_scene(dir, s); },
        py::arg("dir"), py::arg("scene"));
  m.def("read_scene", [](const std::string& dir) { return io::read_scene(dir); }, py::arg("dir"));
  m.def("track_and_evaluate",
        [](const sim::Scene& scene, const std::string& model, const std::string& config_json) {
          const auto cfg = parse_config(config_json);
          const auto run = pipeline::run_tracker(scene, pipeline::model_from_string(model),
                                                 pipeline::TrackerSettings::from_config(cfg));
          const auto report = pipeline::evaluate(scene, run.rows, model, cfg.metrics);
          return report.to_json().dump();
        },
        py::arg("scene"), py::arg("model"), py::arg("config_json") = "");
  m.def("compare",
        [](const std::string& config_json, int jobs) {
          const auto cfg = parse_config(config_json);
          std::vector<pipeline::SceneEvaluation> evals;
          {
            py::gil_scoped_release release;
            evals = pipeline::run_compare(cfg, nullptr, jobs);
          }
          const auto t = pipeline::aggregate(evals, cfg.metrics, pipeline::provenance_comment(cfg));
          py::dict out;
          out["per_scene"] = t.per_scene_csv;
          out["summary"] = t.summary_csv;
          out["motap"] = t.motap_csv;
          return out;
        },
        py::arg("config_json") = "", py::arg("jobs") = 1);
  m.def("default_config", [] { return config::to_json(config::RunConfig{}).dump(); });
}
