// Command-line front end: run, eval, export-field, mollifier-demo, validate.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mmlp_lab/experiment.hpp"
#include "mmlp_lab/mollifier.hpp"

namespace {

using namespace mmlp_lab;

int fail(const std::string& code, const std::string& message) {
  std::cerr << json{{"error", code}, {"message", message}}.dump() << '\n';
  return 1;
}

std::optional<double> opt(double v) {
  return v > 0.0 ? std::optional<double>(v) : std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiplicative vs additive network approximation lab"};
  app.require_subcommand(1);

  std::string path;
  std::string out_path;
  double grid_h = 0.0;

  auto* run = app.add_subcommand("run", "train every configured run and write artifacts");
  run->add_option("config", path, "experiment config JSON")->required();

  auto* validate = app.add_subcommand("validate", "check a config and print it with defaults");
  validate->add_option("config", path, "experiment config JSON")->required();

  auto* eval = app.add_subcommand("eval", "recompute summary metrics of a checkpoint");
  eval->add_option("checkpoint", path, "checkpoint JSON")->required();
  eval->add_option("--grid", grid_h, "evaluation grid spacing (2^-k)");

  auto* exportf = app.add_subcommand("export-field", "write |F - f| of a checkpoint as CSV");
  exportf->add_option("checkpoint", path, "checkpoint JSON")->required();
  exportf->add_option("--out", out_path, "output CSV path")->required();
  exportf->add_option("--grid", grid_h, "grid spacing (2^-k)");

  std::vector<double> eps_list{0.2, 0.1, 0.05, 0.025};
  std::string demo_target = "circle";
  int resolution = 512;
  double demo_grid = 0.25;
  auto* demo = app.add_subcommand("mollifier-demo",
                                  "approximate-identity convergence of the Gaussian mollifier");
  demo->add_option("--eps", eps_list, "decreasing list of kernel scales")->delimiter(',');
  demo->add_option("--target", demo_target, "circle|cone|quadratic");
  demo->add_option("--grid", demo_grid, "grid spacing of the error nodes (2^-k)");
  demo->add_option("--resolution", resolution, "quadrature points per axis");
  demo->add_option("--out", out_path, "write CSV here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what());
  }

  try {
    if (*validate) {
      std::cout << config_to_json(load_config(path)).dump(1) << '\n';
    } else if (*run) {
      const auto cfg = load_config(path);
      const auto res = run_experiment(cfg);
      std::cout << json{{"output_dir", res.dir.string()},
                        {"runs", res.runs.size()},
                        {"medians", res.summary.at("medians")}}
                       .dump()
                << '\n';
    } else if (*eval) {
      std::cout << eval_checkpoint(path, opt(grid_h)).dump(1) << '\n';
    } else if (*exportf) {
      const auto field = export_field(path, opt(grid_h), out_path);
      std::cout << json{{"out", out_path},
                        {"rows", field.field.values.size()},
                        {"squared_mass", field.squared_mass()}}
                       .dump()
                << '\n';
    } else if (*demo) {
      if (!Grid2D::is_valid_spacing(demo_grid))
        return fail("usage", "--grid: spacing must be 2^-k with k >= 0");
      const Grid2D grid(demo_grid);
      const Activation gauss{ActivationKind::GaussianBump};
      std::vector<ConvergenceRow> rows;
      if (demo_target == "circle") {
        rows = convergence_report(gauss, eps_list, TargetFunction::circle(), grid, resolution);
      } else if (demo_target == "cone") {
        rows = convergence_report(gauss, eps_list, TargetFunction::cone(), grid, resolution);
      } else if (demo_target == "quadratic") {
        rows = convergence_report(
            gauss, eps_list, [](const Point2& x) { return x[0] * x[0] + x[1] * x[1]; }, grid,
            resolution);
      } else {
        return fail("usage", "--target must be circle|cone|quadratic");
      }
      std::ostringstream csv;
      csv << "eps,sup_error,l2_error\n";
      for (const auto& r : rows)
        csv << detail::format_double(r.eps) << ',' << detail::format_double(r.sup_error)
            << ',' << detail::format_double(r.l2_error) << '\n';
      if (out_path.empty()) std::cout << csv.str();
      else detail::write_text(out_path, csv.str());
    }
  } catch (const LabError& e) {
    return fail(e.code(), e.what());
  } catch (const std::invalid_argument& e) {
    return fail("usage", e.what());
  } catch (const std::exception& e) {
    return fail("io", e.what());
  }
  return EXIT_SUCCESS;
}
