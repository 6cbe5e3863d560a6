#include <capl/errors.hpp>
#include <capl/keyvalue.hpp>
#include <capl/materials.hpp>
#include <capl/meltpool.hpp>
#include <capl/pipeline.hpp>
#include <capl/solver.hpp>
#include <capl/toolpath.hpp>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <map>
#include <string>

namespace py = pybind11;

namespace
{

capl::KeyValues to_keys(std::map<std::string, std::string> const &settings)
{
  capl::KeyValues kv;
  for (auto const &[k, v] : settings)
    kv.set(k, v);
  return kv;
}

py::dict metrics_dict(capl::MeltPoolMetrics const &m)
{
  py::dict d;
  d["frame"] = m.frame;
  d["time_s"] = m.snapshot_time;
  d["laser_x_m"] = m.laser_position.x;
  d["laser_y_m"] = m.laser_position.y;
  d["length_m"] = m.length;
  d["width_m"] = m.width;
  d["orientation_rad"] = m.orientation;
  d["outlier"] = m.outlier;
  d["vector_id"] = m.vector_id;
  return d;
}

py::list metrics_list(std::vector<capl::MeltPoolMetrics> const &ms)
{
  py::list out;
  for (auto const &m : ms)
    out.append(metrics_dict(m));
  return out;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
  m.doc() = "Path-level thermal simulation for laser powder bed fusion";

  py::register_exception<capl::ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<capl::ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<capl::NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<capl::IoError>(m, "IoError", PyExc_OSError);

  py::class_<capl::MaterialModel>(m, "MaterialModel")
      .def(py::init<>())
      .def_readwrite("solidus", &capl::MaterialModel::solidus)
      .def_readwrite("liquidus", &capl::MaterialModel::liquidus)
      .def_readwrite("latent_heat", &capl::MaterialModel::latent_heat)
      .def_readwrite("density", &capl::MaterialModel::density)
      .def_readwrite("convection", &capl::MaterialModel::convection)
      .def_readwrite("env_temp", &capl::MaterialModel::env_temp)
      .def_readwrite("spot_diameter", &capl::MaterialModel::spot_diameter)
      .def("specific_heat_eq", &capl::MaterialModel::specific_heat_eq, py::arg("T"))
      .def("conductivity", &capl::MaterialModel::conductivity, py::arg("T"))
      .def("enthalpy", &capl::MaterialModel::enthalpy, py::arg("T"))
      .def("validate", &capl::MaterialModel::validate);

  m.def("load_material", &capl::load_material, py::arg("path"));

  m.def(
      "simulate",
      [](std::map<std::string, std::string> const &settings, bool write_outputs) {
        capl::RunConfig const config = capl::run_config_from_keys(to_keys(settings));
        capl::SimulationResult const r = [&] {
          py::gil_scoped_release release;
          return capl::run_simulation(config, write_outputs);
        }();
        py::dict out;
        out["metrics"] = metrics_list(r.metrics);
        out["elements"] = r.model.graph.size();
        out["edges"] = r.model.graph.edges().size();
        out["steps"] = r.history.steps.size();
        out["max_active"] = r.history.max_active;
        out["setup_seconds"] = r.model.setup_seconds;
        out["solve_seconds"] = r.history.solve_seconds;
        py::array_t<double> T(static_cast<py::ssize_t>(r.history.final_state.temperature.size()));
        std::copy(r.history.final_state.temperature.begin(), r.history.final_state.temperature.end(),
                  T.mutable_data());
        out["final_temperature"] = T;
        return out;
      },
      py::arg("settings"), py::arg("write_outputs") = false,
      "Run a simulation from configuration keys (the same keys as a config file).");

  m.def(
      "analyze_frames",
      [](std::string const &dir, double threshold, double pixel_size, int case_id) {
        capl::FrameParams p;
        p.threshold = threshold;
        p.pixel_size = pixel_size;
        p.case_id = case_id;
        capl::FrameAnalysis const a = capl::analyze_frames(dir, p);
        py::dict out;
        out["metrics"] = metrics_list(a.metrics);
        out["files"] = a.files;
        out["warnings"] = a.warnings;
        return out;
      },
      py::arg("dir"), py::arg("threshold") = 80.0, py::arg("pixel_size") = 7.13e-6, py::arg("case_id") = -1);

  m.def(
      "compare",
      [](std::string const &sim_csv, std::string const &exp_csv) {
        auto const sim = capl::read_metrics_csv_file(sim_csv, capl::MetricsSource::simulated);
        auto const exp = capl::read_metrics_csv_file(exp_csv, capl::MetricsSource::experimental);
        capl::CompareReport const r = capl::compare_metrics(sim, exp);
        py::dict out;
        out["frames"] = r.overall.frames;
        out["mean_length_error"] = r.overall.mean_length_error;
        out["mean_width_error"] = r.overall.mean_width_error;
        return out;
      },
      py::arg("sim_csv"), py::arg("exp_csv"));

  m.def(
      "ellipse_fit",
      [](py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast> mask) -> py::object {
        if (mask.ndim() != 2)
          throw capl::ValidationError("mask must be two-dimensional");
        capl::BinaryMask b{static_cast<int>(mask.shape(1)), static_cast<int>(mask.shape(0)), {}};
        b.bits.assign(mask.data(), mask.data() + mask.size());
        for (auto &v : b.bits)
          v = v ? 1 : 0;
        auto const fit = capl::ellipse_fit(b);
        if (!fit)
          return py::none();
        py::dict out;
        out["major"] = fit->major;
        out["minor"] = fit->minor;
        out["orientation"] = fit->orientation;
        out["centroid"] = py::make_tuple(fit->centroid.x, fit->centroid.y);
        return out;
      },
      py::arg("mask"), "Second-moment ellipse of a 2D mask (rows, columns), axes in pixels.");

  m.def(
      "gen_path",
      [](std::string const &out, double side, double hatch, double angle_deg, int contours, double speed,
         double power) {
        capl::RasterSpec spec;
        spec.side = side;
        spec.hatch = hatch;
        spec.angle_deg = angle_deg;
        spec.contour_count = contours;
        spec.speed = speed;
        spec.power = power;
        capl::Toolpath const tp = capl::generate_raster_layer(spec);
        std::ofstream f(out);
        if (!f)
          throw capl::IoError("cannot write '" + out + "'");
        capl::write_toolpath(f, tp);
        return tp.vectors.size();
      },
      py::arg("out"), py::arg("side") = 2e-3, py::arg("hatch") = 100e-6, py::arg("angle_deg") = 45.0,
      py::arg("contours") = 4, py::arg("speed") = 0.8, py::arg("power") = 195.0);
}
