// Command-line driver: simulate, analyze-frames, compare, gen-path, scaling.
#include <capl/errors.hpp>
#include <capl/pipeline.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>

namespace
{

capl::RunConfig load_config(std::string const &path, std::vector<std::string> const &overrides)
{
  capl::KeyValues kv = path.empty() ? capl::KeyValues{} : capl::KeyValues::load(path);
  for (auto const &item : overrides)
  {
    auto const eq = item.find('=');
    if (eq == std::string::npos || eq == 0)
      throw capl::ValidationError("--set expects key=value, got '" + item + "'");
    kv.set(item.substr(0, eq), item.substr(eq + 1));
  }
  return capl::run_config_from_keys(kv);
}

std::ofstream open_out(std::string const &path)
{
  std::ofstream out(path);
  if (!out)
    throw capl::IoError("cannot write '" + path + "'");
  return out;
}

} // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Path-level thermal simulation of laser powder bed fusion scans and melt pool analytics"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  auto *simulate = app.add_subcommand("simulate", "Run a thermal simulation and write melt pool metrics");
  simulate->add_option("--config", config_path, "Run configuration (key = value)")->required();
  simulate->add_option("--set", overrides, "Override a configuration key, key=value");

  std::string frame_dir;
  std::string frames_out = "metrics_exp.csv";
  capl::FrameParams frame_params;
  auto *analyze = app.add_subcommand("analyze-frames", "Extract melt pool metrics from monitoring frames");
  analyze->add_option("--dir", frame_dir, "Directory of case<CC>_frame<NNNN>.pgm files")->required();
  analyze->add_option("--threshold", frame_params.threshold, "Binarization threshold in grey levels")
      ->capture_default_str();
  analyze->add_option("--pixel-size", frame_params.pixel_size, "Frame resolution, m/px")->capture_default_str();
  analyze->add_option("--frame-rate", frame_params.frame_rate, "Frames per second")->capture_default_str();
  analyze->add_option("--case", frame_params.case_id, "Only this case number");
  analyze->add_option("--outlier-factor", frame_params.outliers.factor)->capture_default_str();
  analyze->add_option("--outlier-window", frame_params.outliers.window)->capture_default_str();
  analyze->add_option("--out", frames_out, "Output CSV")->capture_default_str();

  std::string sim_csv;
  std::string exp_csv;
  std::string report_out = "report.csv";
  auto *compare = app.add_subcommand("compare", "Relative error of simulated against measured metrics");
  compare->add_option("--sim", sim_csv, "Simulated metrics CSV")->required();
  compare->add_option("--exp", exp_csv, "Experimental metrics CSV")->required();
  compare->add_option("--out", report_out, "Report CSV")->capture_default_str();

  capl::RasterSpec raster;
  double layer_height = 40e-6;
  double margin = 0.0;
  double spacing = 0.0;
  std::string path_out;
  auto *genpath = app.add_subcommand("gen-path", "Write a contour plus raster hatch layer");
  genpath->add_option("--origin-x", raster.origin.x, "Lower-left corner x, m")->capture_default_str();
  genpath->add_option("--origin-y", raster.origin.y, "Lower-left corner y, m")->capture_default_str();
  genpath->add_option("--side", raster.side, "Square side, m")->capture_default_str();
  genpath->add_option("--hatch", raster.hatch, "Hatch spacing, m")->capture_default_str();
  genpath->add_option("--angle", raster.angle_deg, "Raster angle, degrees")->capture_default_str();
  genpath->add_option("--contours", raster.contour_count, "Number of contour vectors")->capture_default_str();
  genpath->add_option("--speed", raster.speed, "Scan speed, m/s")->capture_default_str();
  genpath->add_option("--power", raster.power, "Laser power, W")->capture_default_str();
  genpath->add_option("--layer-height", layer_height, "m")->capture_default_str();
  genpath->add_option("--margin", margin, "Fictitious margin around the part, m")->capture_default_str();
  genpath->add_option("--spacing", spacing, "Fictitious ring spacing, m (default: hatch)");
  genpath->add_option("--out", path_out, "Toolpath file")->required();

  std::string scaling_config;
  std::vector<std::string> scaling_overrides;
  std::vector<int> sizes{1000, 2000, 4000, 8000};
  int repeats = 3;
  std::string scaling_out = "scaling.csv";
  auto *scaling = app.add_subcommand("scaling", "Time the same scan inside growing cold fictitious domains");
  scaling->add_option("--config", scaling_config, "Base run configuration")->required();
  scaling->add_option("--set", scaling_overrides, "Override a configuration key, key=value");
  scaling->add_option("--sizes", sizes, "Target element counts")->delimiter(',')->capture_default_str();
  scaling->add_option("--repeats", repeats, "Timed runs per size, fastest kept")->capture_default_str();
  scaling->add_option("--out", scaling_out, "Timing CSV")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try
  {
    if (*simulate)
    {
      capl::RunConfig const config = load_config(config_path, overrides);
      auto const result = capl::run_simulation(config);
      std::cout << "elements " << result.model.graph.size() << ", edges " << result.model.graph.edges().size()
                << ", steps " << result.history.steps.size() << ", snapshots " << result.history.snapshots.size()
                << "\nsetup " << result.model.setup_seconds << " s, solve " << result.history.solve_seconds
                << " s, peak active " << result.history.max_active << "\n";
      std::cout << "vector  frames  mean_length_um  mean_width_um\n" << std::fixed << std::setprecision(1);
      for (auto const &v : result.vectors)
        std::cout << std::setw(6) << v.vector_id << std::setw(8) << v.frames << std::setw(16) << v.mean_length * 1e6
                  << std::setw(15) << v.mean_width * 1e6 << '\n';
      std::cout << "outputs in " << config.output_dir << '\n';
    }
    else if (*analyze)
    {
      auto const result = capl::analyze_frames(frame_dir, frame_params);
      auto out = open_out(frames_out);
      capl::write_metrics_csv(out, result.metrics);
      for (auto const &w : result.warnings)
        std::cerr << "warning: " << w << '\n';
      std::size_t const flagged =
          std::count_if(result.metrics.begin(), result.metrics.end(), [](auto const &m) { return m.outlier; });
      std::cout << result.metrics.size() << " frames, " << flagged << " outliers, " << result.warnings.size()
                << " warnings\n";
    }
    else if (*compare)
    {
      auto const sim = capl::read_metrics_csv_file(sim_csv, capl::MetricsSource::simulated);
      auto const exp = capl::read_metrics_csv_file(exp_csv, capl::MetricsSource::experimental);
      auto const report = capl::compare_metrics(sim, exp);
      auto out = open_out(report_out);
      capl::write_report_csv(out, report);
      std::cout << std::setprecision(6) << "frames used " << report.overall.frames << " of " << report.rows.size()
                << "\nmean length error " << 100.0 * report.overall.mean_length_error << " %\nmean width error "
                << 100.0 * report.overall.mean_width_error << " %\n";
    }
    else if (*genpath)
    {
      capl::Toolpath tp = capl::generate_raster_layer(raster, layer_height);
      if (margin > 0.0)
        tp = capl::append_fictitious_paths(std::move(tp), margin, spacing > 0.0 ? spacing : raster.hatch);
      auto out = open_out(path_out);
      capl::write_toolpath(out, tp);
      std::cout << tp.vectors.size() << " vectors written to " << path_out << '\n';
    }
    else if (*scaling)
    {
      capl::RunConfig const config = load_config(scaling_config, scaling_overrides);
      capl::Toolpath const base = capl::read_toolpath_file(config.toolpath, config.layer_height);
      auto const result = capl::scaling_sweep(base, config, sizes, repeats);
      auto out = open_out(scaling_out);
      capl::write_scaling_csv(out, result);
      capl::write_scaling_csv(std::cout, result);
      auto show = [](std::optional<double> s) { return s ? std::to_string(*s) : std::string("n/a"); };
      std::cout << "log-log slope total " << show(result.slope) << ", solve " << show(result.solve_slope) << '\n';
    }
  }
  catch (capl::Error const &e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  catch (std::exception const &e)
  {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
