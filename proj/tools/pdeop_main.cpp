// Command-line front end: dataset generation, training, evaluation against
// the FDM oracle, field export, and direct FDM solves.
//
// Exit codes: 0 success, 2 config error, 3 IO error, 4 training failure,
// 5 evaluation failure.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "pdeop/config.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitTrain = 4;
constexpr int kExitEval = 5;

struct GlobalOpts {
  std::string config_path;
  std::optional<uint64_t> seed_override;
  bool quiet = false;
};

pdeop::RunConfig load_config(const GlobalOpts& g) {
  pdeop::RunConfig cfg =
      g.config_path.empty() ? pdeop::RunConfig{} : pdeop::parse_run_config(g.config_path);
  if (g.seed_override) cfg.train.seed = *g.seed_override;
  return cfg;
}

void write_field_csv(const std::string& path, const pdeop::Vector& taus,
                     const pdeop::Vector& xs, const pdeop::Matrix& field) {
  std::ofstream out(path);
  if (!out) throw pdeop::IoError("cannot open for writing: " + path);
  out << "tau\\x";
  for (double x : xs) {
    char buf[32];
    snprintf(buf, sizeof buf, ",%.17g", x);
    out << buf;
  }
  out << "\n";
  for (size_t i = 0; i < taus.size(); ++i) {
    char buf[32];
    snprintf(buf, sizeof buf, "%.17g", taus[i]);
    out << buf;
    for (size_t j = 0; j < xs.size(); ++j) {
      snprintf(buf, sizeof buf, ",%.17g", field(static_cast<int>(i), static_cast<int>(j)));
      out << buf;
    }
    out << "\n";
  }
  if (!out) throw pdeop::IoError("write failed: " + path);
}

int cmd_gen_data(const GlobalOpts& g, const std::string& out_path) {
  pdeop::RunConfig cfg = load_config(g);
  pdeop::Dataset data = pdeop::generate_dataset(cfg.train, cfg.gp, cfg.domain);
  pdeop::save_dataset(data, out_path);
  if (!g.quiet)
    std::cout << "dataset: N=" << cfg.train.function_count
              << " m=" << cfg.train.sensor_count << " P=" << cfg.train.boundary_points
              << " Q=" << cfg.train.interior_points << " seed=" << cfg.train.seed
              << " -> " << out_path << "\n";
  return 0;
}

int cmd_train(const GlobalOpts& g, const std::string& dataset_path,
              const std::string& checkpoint_path, const std::string& metrics_path) {
  pdeop::RunConfig cfg = load_config(g);
  pdeop::Dataset data = pdeop::load_dataset(dataset_path);
  pdeop::DeepOnetModel model = pdeop::make_model(cfg.train, data.domain);
  pdeop::MetricHistory history;
  auto progress = [&](const pdeop::MetricRecord& r) {
    if (!g.quiet)
      std::cout << "iter " << r.iteration << " total_loss " << r.total_loss
                << " physics " << r.physics_loss << " operator " << r.operator_loss
                << "\n"
                << std::flush;
  };
  int rc = 0;
  try {
    history = pdeop::train(model, data, cfg.train, cfg.diffusion, progress);
  } catch (const pdeop::PoisonedGradientError& e) {
    std::cerr << "error: " << e.what() << "\n";
    rc = kExitTrain;  // last good checkpoint still written below
  }
  pdeop::save_checkpoint(model, history, checkpoint_path);
  if (!metrics_path.empty()) {
    std::ofstream mout(metrics_path);
    if (!mout) throw pdeop::IoError("cannot open for writing: " + metrics_path);
    pdeop::write_metrics_csv(history, mout);
  }
  return rc;
}

int cmd_eval(const GlobalOpts& g, const std::string& checkpoint_path,
             const std::string& report_path, bool self_test) {
  pdeop::RunConfig cfg = load_config(g);
  auto [model, history] = pdeop::load_checkpoint(checkpoint_path);
  if (model.sensor_count != cfg.train.sensor_count)
    throw pdeop::ConfigError("checkpoint m=" + std::to_string(model.sensor_count) +
                             " does not match config m=" +
                             std::to_string(cfg.train.sensor_count));
  auto tests =
      pdeop::generate_test_functions(cfg.n_test, cfg.train, cfg.gp, model.domain);

  pdeop::ErrorReport report;
  if (self_test) {
    // Oracle injected as the model: compare the FDM field against itself.
    report.entries.resize(tests.size());
    pdeop::Vector taus(cfg.eval_grid), xs(cfg.eval_grid);
    for (int i = 0; i < cfg.eval_grid; ++i) {
      taus[i] = model.domain.time_horizon * i / (cfg.eval_grid - 1);
      xs[i] = -model.domain.half_width +
              2.0 * model.domain.half_width * i / (cfg.eval_grid - 1);
    }
    int ok = 0;
    for (size_t f = 0; f < tests.size(); ++f) {
      report.entries[f].index = static_cast<int>(f);
      try {
        pdeop::FdmSolution sol =
            pdeop::solve_fdm(tests[f], model.domain, cfg.fdm, cfg.diffusion);
        (void)sol;
        ++ok;
      } catch (const pdeop::NonconvergenceError&) {
        report.entries[f].fdm_failed = true;
        ++report.failed;
      }
    }
    report.evaluated = ok;
  } else {
    report = pdeop::evaluate(model, tests, model.domain, cfg.fdm, cfg.diffusion,
                             cfg.eval_grid);
  }

  std::ofstream out(report_path);
  if (!out) throw pdeop::IoError("cannot open for writing: " + report_path);
  pdeop::write_report_csv(report, out);
  if (!g.quiet)
    std::cout << "evaluated " << report.evaluated << "/" << report.entries.size()
              << " functions, mean rel_l2 " << report.mean_rel_l2 << " median "
              << report.median_rel_l2 << " (fdm failures: " << report.failed << ")\n";
  if (!report.entries.empty() && report.evaluated == 0) {
    std::cerr << "error: every FDM solve failed\n";
    return kExitEval;
  }
  return 0;
}

int cmd_export_fields(const GlobalOpts& g, const std::string& checkpoint_path,
                      const std::string& dataset_path, int index,
                      const std::string& prefix) {
  pdeop::RunConfig cfg = load_config(g);
  auto [model, history] = pdeop::load_checkpoint(checkpoint_path);
  pdeop::Dataset data = pdeop::load_dataset(dataset_path);
  if (index < 0 || index >= static_cast<int>(data.samples.size()))
    throw pdeop::ConfigError("function index " + std::to_string(index) +
                             " out of range [0, " +
                             std::to_string(data.samples.size()) + ")");
  const pdeop::SourceFunction& src = data.samples[index].source;

  const int n = cfg.eval_grid;
  pdeop::Vector taus(n), xs(n);
  for (int i = 0; i < n; ++i) {
    taus[i] = model.domain.time_horizon * i / (n - 1);
    xs[i] = -model.domain.half_width + 2.0 * model.domain.half_width * i / (n - 1);
  }

  // Input function: sensor values plus interpolation on the x grid.
  {
    pdeop::Vector all_x(src.sensors->positions);
    all_x.insert(all_x.end(), xs.begin(), xs.end());
    std::sort(all_x.begin(), all_x.end());
    all_x.erase(std::unique(all_x.begin(), all_x.end()), all_x.end());
    std::ofstream out(prefix + "_g.csv");
    if (!out) throw pdeop::IoError("cannot open for writing: " + prefix + "_g.csv");
    out << "x,g\n";
    for (double x : all_x) {
      char buf[80];
      snprintf(buf, sizeof buf, "%.17g,%.17g\n", x, src.eval(x));
      out << buf;
    }
  }

  pdeop::Matrix nn = pdeop::operator_eval_grid(model, src, taus, xs);
  write_field_csv(prefix + "_nn.csv", taus, xs, nn);

  pdeop::FdmSolution sol = pdeop::solve_fdm(src, model.domain, cfg.fdm, cfg.diffusion);
  pdeop::Matrix fdm(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) fdm(i, j) = sol.interpolate(taus[i], xs[j]);
  write_field_csv(prefix + "_fdm.csv", taus, xs, fdm);

  if (!g.quiet)
    std::cout << "wrote " << prefix << "_g.csv, " << prefix << "_nn.csv, " << prefix
              << "_fdm.csv\n";
  return 0;
}

int cmd_solve_fdm(const GlobalOpts& g, const std::string& dataset_path, int index,
                  const std::string& out_path) {
  pdeop::RunConfig cfg = load_config(g);
  pdeop::Dataset data = pdeop::load_dataset(dataset_path);
  if (index < 0 || index >= static_cast<int>(data.samples.size()))
    throw pdeop::ConfigError("function index out of range");
  pdeop::FdmSolution sol =
      pdeop::solve_fdm(data.samples[index].source, data.domain, cfg.fdm, cfg.diffusion);
  pdeop::Vector taus(sol.values.rows), xs(sol.values.cols);
  for (int i = 0; i < sol.values.rows; ++i) taus[i] = sol.dt * i;
  for (int j = 0; j < sol.values.cols; ++j) xs[j] = -data.domain.half_width + sol.dx * j;
  write_field_csv(out_path, taus, xs, sol.values);
  if (!g.quiet) std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"physics-informed DeepONet for d_tau phi - d_xx alpha(phi) = g"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "key=value run configuration file");
  uint64_t seed_val = 0;
  auto* seed_opt = app.add_option("--seed", seed_val, "override the config seed");
  app.add_flag("--quiet", g.quiet, "suppress progress output");

  std::string out_path, dataset_path, checkpoint_path, metrics_path, report_path, prefix;
  int index = 0;
  bool self_test = false;

  auto* gen = app.add_subcommand("gen-data", "sample a training dataset");
  gen->add_option("--out", out_path, "dataset file to write")->required();

  auto* train = app.add_subcommand("train", "train a model on a dataset");
  train->add_option("--dataset", dataset_path)->required();
  train->add_option("--checkpoint", checkpoint_path)->required();
  train->add_option("--metrics", metrics_path);

  auto* eval = app.add_subcommand("eval", "compare against the FDM oracle");
  eval->add_option("--checkpoint", checkpoint_path)->required();
  eval->add_option("--report", report_path)->required();
  eval->add_flag("--self-test", self_test,
                 "compare the FDM oracle against itself (expects error 0)");

  auto* exp = app.add_subcommand("export-fields", "export g / NN / FDM grids as CSV");
  exp->add_option("--checkpoint", checkpoint_path)->required();
  exp->add_option("--dataset", dataset_path)->required();
  exp->add_option("--index", index)->required();
  exp->add_option("--out-prefix", prefix)->required();

  auto* sf = app.add_subcommand("solve-fdm", "solve the reference FDM directly");
  sf->add_option("--dataset", dataset_path)->required();
  sf->add_option("--index", index)->required();
  sf->add_option("--out", out_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitConfig;
  }
  if (*seed_opt) g.seed_override = seed_val;

  try {
    if (gen->parsed()) return cmd_gen_data(g, out_path);
    if (train->parsed()) return cmd_train(g, dataset_path, checkpoint_path, metrics_path);
    if (eval->parsed()) return cmd_eval(g, checkpoint_path, report_path, self_test);
    if (exp->parsed())
      return cmd_export_fields(g, checkpoint_path, dataset_path, index, prefix);
    if (sf->parsed()) return cmd_solve_fdm(g, dataset_path, index, out_path);
  } catch (const pdeop::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const pdeop::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const pdeop::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const pdeop::PoisonedGradientError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTrain;
  } catch (const pdeop::NonconvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitEval;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  return 0;
}
