// Apache License, Version 2.0, refer to LICENSE.txt
//
// riskscope: distributional evaluation of stochastic systems against
// real-valued requirements over an input region.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "riskscope/errors.hpp"
#include "riskscope/eval.hpp"
#include "riskscope/model_io.hpp"

namespace {

using namespace riskscope;

stl::FormulaPtr load_formula(const std::string& spec) {
  // Accepts either a file holding the formula or the formula text itself.
  if (std::filesystem::exists(spec)) {
    std::string text = io::read_file(spec);
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) text.pop_back();
    return stl::parse(text);
  }
  return stl::parse(spec);
}

simbench::World load_world(const std::string& spec) {
  if (spec == "builtin:v1") return simbench::World::benchmark_default();
  return simbench::World::load(spec);
}

std::vector<double> parse_numbers(const std::string& csv) {
  std::vector<double> out;
  std::string cur;
  for (char c : csv + ",") {
    if (c == ',') {
      if (!cur.empty()) out.push_back(std::stod(cur));
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  return out;
}

simbench::SigmoidConvention sigmoid_of(const std::string& name) {
  if (name == "printed") return simbench::SigmoidConvention::Printed;
  if (name == "conventional") return simbench::SigmoidConvention::Conventional;
  throw ConfigError("--sigmoid must be printed or conventional");
}

int run(int argc, char** argv) {
  CLI::App app{"riskscope: Dirichlet logistic Gaussian process evaluation toolkit"};
  app.require_subcommand(1);

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Generate a labeled input/robustness dataset");
  std::size_t sim_n = 500;
  std::uint64_t sim_seed = 0;
  std::string sim_world = "builtin:v1";
  std::string sim_levels = "-10,0";
  std::string sim_formula = "F[0,10] (5 - max(abs(35 - y[0]), abs(5 - y[1])) > 0)";
  std::string sim_sigmoid = "printed";
  std::string sim_out = "data.csv";
  sim_cmd->add_option("--n", sim_n, "Number of inputs");
  sim_cmd->add_option("--seed", sim_seed, "Random seed");
  sim_cmd->add_option("--world", sim_world, "World file or builtin:v1");
  sim_cmd->add_option("--levels", sim_levels, "Comma-separated level boundaries");
  sim_cmd->add_option("--formula", sim_formula, "Requirement formula (text or file)");
  sim_cmd->add_option("--sigmoid", sim_sigmoid, "printed or conventional");
  sim_cmd->add_option("--out", sim_out, "Output CSV path");

  // truth
  auto* truth_cmd = app.add_subcommand("truth", "Build the high-sample truth proxy field");
  std::size_t truth_m = 100000;
  double truth_bw = 0.1;
  std::uint64_t truth_seed = 0;
  std::string truth_world = "builtin:v1";
  std::string truth_levels = "-10,0";
  std::string truth_formula = "F[0,10] (5 - max(abs(35 - y[0]), abs(5 - y[1])) > 0)";
  std::string truth_sigmoid = "printed";
  double truth_width = 0.5;
  std::string truth_out = "truth.json";
  truth_cmd->add_option("--m", truth_m, "Number of uniform samples");
  truth_cmd->add_option("--bandwidth", truth_bw, "KDE bandwidth in input units");
  truth_cmd->add_option("--seed", truth_seed, "Random seed");
  truth_cmd->add_option("--world", truth_world, "World file or builtin:v1");
  truth_cmd->add_option("--levels", truth_levels, "Comma-separated level boundaries");
  truth_cmd->add_option("--formula", truth_formula, "Requirement formula (text or file)");
  truth_cmd->add_option("--sigmoid", truth_sigmoid, "printed or conventional");
  truth_cmd->add_option("--grid-width", truth_width, "Evaluation grid width");
  truth_cmd->add_option("--out", truth_out, "Output JSON path");

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "Fit an estimator to a dataset");
  std::string fit_method = "dlgp";
  std::string fit_lambda = "opt";
  std::string fit_data = "data.csv";
  double fit_width = 0.5;
  std::string fit_levels = "-10,0";
  std::string fit_region = "0,10,0,10";
  std::string fit_alpha;
  std::uint64_t fit_seed = 0;
  std::size_t fit_draws = 2000;
  std::size_t fit_hyper = 15;
  std::size_t fit_ensemble = 12;
  double fit_gdp_eps = 0.01;
  std::size_t fit_gdp_draws = 2000;
  std::string fit_out = "model.json";
  fit_cmd->add_option("--method", fit_method, "dlgp, dkde or gdp");
  fit_cmd->add_option("--lambda", fit_lambda, "dlgp conservativeness: opt or a number >= 0");
  fit_cmd->add_option("--data", fit_data, "Dataset CSV");
  fit_cmd->add_option("--grid-width", fit_width, "Grid width (dlgp)");
  fit_cmd->add_option("--levels", fit_levels, "Comma-separated level boundaries");
  fit_cmd->add_option("--region", fit_region,
                      "Estimation region as \"x_lo,x_hi,y_lo,y_hi\" (dlgp)");
  fit_cmd->add_option("--alpha-prior", fit_alpha, "Comma-separated prior counts (default uniform)");
  fit_cmd->add_option("--seed", fit_seed, "Random seed");
  fit_cmd->add_option("--moment-draws", fit_draws, "Posterior draws for density moments");
  fit_cmd->add_option("--hyper-grid", fit_hyper, "Hyper-parameter grid points per axis");
  fit_cmd->add_option("--hyper-ensemble", fit_ensemble,
                      "Kernel candidates kept for the density moments (1 = MAP only)");
  fit_cmd->add_option("--gdp-alpha-eps", fit_gdp_eps, "GDP label smoothing");
  fit_cmd->add_option("--gdp-draws", fit_gdp_draws, "GDP pushforward draws");
  fit_cmd->add_option("--out", fit_out, "Output model JSON path");

  // query
  auto* query_cmd = app.add_subcommand("query", "Query a fitted model at a point");
  std::string query_model = "model.json";
  std::string query_x = "5,5";
  double query_beta = 0.05;
  query_cmd->add_option("--model", query_model, "Model JSON path");
  query_cmd->add_option("--x", query_x, "Query point, e.g. \"3.5,7.0\"");
  query_cmd->add_option("--beta", query_beta, "Credible tail mass");

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate fitted models against a truth field");
  std::string eval_models;
  std::string eval_truth = "truth.json";
  std::string eval_data;
  std::string eval_out = "report.json";
  std::string eval_plots;
  double eval_beta = 0.05;
  eval_cmd->add_option("--models", eval_models, "Comma-separated model JSON paths")->required();
  eval_cmd->add_option("--truth", eval_truth, "Truth JSON path");
  eval_cmd->add_option("--data", eval_data, "Dataset CSV for the no-sample ratio");
  eval_cmd->add_option("--out", eval_out, "Report JSON path");
  eval_cmd->add_option("--plots-dir", eval_plots, "Directory for tidy plot CSV");
  eval_cmd->add_option("--beta", eval_beta, "Credible tail mass");

  // experiment
  auto* exp_cmd = app.add_subcommand("experiment", "Run the full repeated-evaluation protocol");
  std::string exp_config;
  exp_cmd->add_option("--config", exp_config, "Experiment config file")->required();

  CLI11_PARSE(app, argc, argv);

  if (sim_cmd->parsed()) {
    const simbench::World world = load_world(sim_world);
    simbench::SimConfig cfg;
    cfg.sigmoid = sigmoid_of(sim_sigmoid);
    dlgp::RobustnessLevels levels{parse_numbers(sim_levels)};
    const auto phi = load_formula(sim_formula);
    const auto data =
        simbench::generate_dataset(sim_n, levels, *phi, numerics::Rng(sim_seed), world, cfg);
    data.save_csv(sim_out);
    std::cout << "wrote " << sim_out << " (" << data.size() << " rows)\n";
    return 0;
  }

  if (truth_cmd->parsed()) {
    const simbench::World world = load_world(truth_world);
    simbench::SimConfig cfg;
    cfg.sigmoid = sigmoid_of(truth_sigmoid);
    dlgp::RobustnessLevels levels{parse_numbers(truth_levels)};
    const auto phi = load_formula(truth_formula);
    const auto grid = lgp::make_grid({cfg.input_region.x_lo, cfg.input_region.y_lo},
                                     {cfg.input_region.x_hi, cfg.input_region.y_hi}, truth_width);
    const auto field = simbench::build_truth_proxy(truth_m, truth_bw, levels, *phi,
                                                   numerics::Rng(truth_seed), world, cfg, grid);
    io::TruthMeta meta{.seed = truth_seed,
                       .m_samples = truth_m,
                       .bandwidth = truth_bw,
                       .world_hash = world.geometry_hash(),
                       .level_boundaries = levels.boundaries,
                       .formula = truth_formula};
    io::save_truth(field, meta, truth_out);
    std::cout << "wrote " << truth_out << " (" << grid.cell_count() << " cells)\n";
    return 0;
  }

  if (fit_cmd->parsed()) {
    const auto data = simbench::LabeledDataset::load_csv(fit_data);
    dlgp::RobustnessLevels levels{parse_numbers(fit_levels)};
    levels.validate();
    data.validate(static_cast<int>(levels.count()));
    const numerics::Vec alpha_prior =
        fit_alpha.empty() ? numerics::Vec{} : parse_numbers(fit_alpha);
    io::AnyModel model = [&]() -> io::AnyModel {
      if (fit_method == "dkde") return baselines::dkde_fit(data, levels, alpha_prior);
      if (fit_method == "gdp") {
        baselines::GdpConfig cfg{.alpha_eps = fit_gdp_eps,
                                 .draws = fit_gdp_draws,
                                 .seed = fit_seed,
                                 .hyper_search = {}};
        return baselines::gdp_fit(data, levels, cfg);
      }
      if (fit_method != "dlgp") throw ConfigError("--method must be dlgp, dkde or gdp");
      dlgp::DlgpConfig cfg;
      cfg.grid_width = fit_width;
      cfg.alpha_prior = alpha_prior;
      cfg.moment_draws = fit_draws;
      cfg.hyper_search.points = fit_hyper;
      cfg.hyper_ensemble = fit_ensemble;
      cfg.seed = fit_seed;
      if (fit_lambda != "opt") cfg.lambda_fixed = std::stod(fit_lambda);
      const std::vector<double> region = parse_numbers(fit_region);
      if (region.size() != 4) throw ConfigError("--region needs four numbers");
      return dlgp::fit(data, levels, {region[0], region[2]}, {region[1], region[3]}, cfg);
    }();
    if (const auto* dm = std::get_if<dlgp::DlgpModel>(&model)) {
      for (std::size_t l = 0; l < dm->empty_levels.size(); ++l)
        if (dm->empty_levels[l])
          std::cerr << "warning: level " << l
                    << " received no samples; its pseudo-counts are identically zero\n";
    }
    io::save_model(model, fit_out);
    std::cout << "wrote " << fit_out << " (method " << io::method_name(model) << ")\n";
    return 0;
  }

  if (query_cmd->parsed()) {
    const io::AnyModel model = io::load_model(query_model);
    const std::vector<double> x = parse_numbers(query_x);
    const dlgp::QueryResult q = io::query_model(model, x, query_beta);
    nlohmann::json bounds = nlohmann::json::array();
    for (const auto& [lo, hi] : q.bounds) bounds.push_back({lo, hi});
    nlohmann::json cov = nlohmann::json::array();
    for (std::size_t i = 0; i < q.cov.size(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (std::size_t j = 0; j < q.cov.size(); ++j) row.push_back(q.cov(i, j));
      cov.push_back(std::move(row));
    }
    const nlohmann::json out{{"x", x},
                             {"beta", query_beta},
                             {"mean", q.mean},
                             {"cov", cov},
                             {"bounds", bounds},
                             {"band", q.band}};
    std::cout << out.dump(1) << "\n";
    return 0;
  }

  if (eval_cmd->parsed()) {
    std::vector<io::AnyModel> models;
    std::vector<std::string> names;
    std::string cur;
    for (char c : eval_models + ",") {
      if (c == ',') {
        if (!cur.empty()) {
          models.push_back(io::load_model(cur));
          names.push_back(std::filesystem::path(cur).stem().string());
          cur.clear();
        }
      } else {
        cur += c;
      }
    }
    const auto [truth, meta] = io::load_truth(eval_truth);
    std::optional<simbench::LabeledDataset> data;
    if (!eval_data.empty()) data = simbench::LabeledDataset::load_csv(eval_data);
    const eval::EvalReport report =
        eval::evaluate_models(models, names, truth, data ? &*data : nullptr, eval_beta);
    eval::write_report(report, eval_out);
    std::cout << "wrote " << eval_out << "\n";
    if (!eval_plots.empty()) {
      const auto plots = std::filesystem::path(eval_plots) / "plots.csv";
      eval::write_plots_csv(report, plots);
      std::cout << "wrote " << plots.string() << "\n";
    }
    return 0;
  }

  if (exp_cmd->parsed()) {
    const eval::ExperimentConfig cfg = eval::parse_config(io::read_file(exp_config));
    const eval::EvalReport report = eval::run_experiment(cfg);
    const std::filesystem::path out_dir(cfg.out_dir);
    eval::write_report(report, out_dir / "report.json");
    eval::write_plots_csv(report, out_dir / "plots.csv");
    for (const auto& method : report.methods) {
      const auto agg = report.aggregate_ind(method);
      double total = 0.0;
      std::size_t bins = 0;
      for (std::size_t b = 0; b < eval::kBandBins; ++b) {
        if (agg.mean[b]) {
          total += *agg.mean[b];
          ++bins;
        }
      }
      std::printf("%-10s mean Ind over %zu bins: %s\n", method.name.c_str(), bins,
                  bins ? std::to_string(total / static_cast<double>(bins)).c_str() : "n/a");
    }
    std::cout << "wrote " << (out_dir / "report.json").string() << " and "
              << (out_dir / "plots.csv").string() << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const riskscope::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
