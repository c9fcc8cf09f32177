// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "riskscope/model_io.hpp"

namespace riskscope::eval {

constexpr std::size_t kBandBins = 10;  // confidence band split into (c-0.1, c]

/// Bin index 0..9 for band value c ~ (bin+1)/10; a zero band lands in bin 0.
std::size_t band_bin(double band);

/// Per-cell query outcome of one model over a grid.
struct CellFields {
  std::vector<numerics::Vec> mean;  // per cell, per level
  numerics::Vec band;               // per cell
};

CellFields compute_fields(const io::AnyModel& model, const lgp::Grid& grid, double beta);

/// Mean width of the per-level credible intervals at every cell center.
numerics::Vec confidence_band_field(const io::AnyModel& model, const lgp::Grid& grid, double beta);

/// Mean squared estimation error over the cells whose band falls in the bin;
/// nullopt when the bin holds no cell.
std::optional<double> ind_index(const CellFields& fields, const simbench::TruthField& truth,
                                std::size_t bin);
std::optional<double> ind_index(const io::AnyModel& model, const simbench::TruthField& truth,
                                double c, double beta);

/// Fraction of grid cells whose band falls in the bin.
double cred_ratio(const CellFields& fields, std::size_t bin);
double cred_ratio(const io::AnyModel& model, const lgp::Grid& grid, double c, double beta);

/// Fraction of grid cells containing no data point.
double no_sample_ratio(const simbench::LabeledDataset& data, const lgp::Grid& grid);

/// Experiment settings; parse_config reads the documented key = value format.
struct ExperimentConfig {
  std::vector<std::string> methods = {"dlgp:0", "dlgp:opt", "dlgp:1", "dkde", "gdp"};
  std::size_t repetitions = 20;
  std::uint64_t seed = 0;
  std::string reseed = "inference";  // "inference" refits on one dataset; "data" redraws it
  std::string out_dir = "out";
  bool record_timing = false;

  std::string data_source = "generate";  // or a dataset csv path
  std::size_t n = 500;
  std::string world = "builtin:v1";  // or a world file path
  std::string formula = "F[0,10] (5 - max(abs(35 - y[0]), abs(5 - y[1])) > 0)";
  std::vector<double> level_boundaries = {-10.0, 0.0};
  std::string sigmoid = "printed";  // or "conventional"

  std::string truth_source = "build";  // or a truth json path
  std::size_t truth_samples = 100000;
  double truth_bandwidth = 0.1;
  std::string truth_cache;  // optional cache path reused across runs

  double grid_width = 0.5;
  double lambda_max = 10.0;
  double lambda_prior_mode = 2.0;
  double lambda_prior_variance = 3.0;
  std::vector<double> alpha_prior;  // empty means uniform 1/m
  std::size_t moment_draws = 2000;
  std::size_t hyper_grid_points = 15;
  std::size_t hyper_ensemble = 12;
  double hyper_lo = 1e-2;
  double hyper_hi = 1e2;
  double gdp_alpha_eps = 0.01;
  std::size_t gdp_draws = 2000;
  double beta = 0.05;

  void validate() const;
};

ExperimentConfig parse_config(const std::string& text);

struct RepetitionEval {
  std::size_t rep = 0;
  std::optional<double> lambda;  // present for the dlgp methods
  std::array<std::optional<double>, kBandBins> ind;
  std::array<double, kBandBins> cred_ratio{};
  double no_sample_ratio = 0.0;
  double wall_seconds = 0.0;
  std::string error;  // non-empty when this repetition failed
};

struct MethodEval {
  std::string name;
  std::vector<RepetitionEval> repetitions;
};

struct BinAggregate {
  std::array<std::optional<double>, kBandBins> mean;
  std::array<std::optional<double>, kBandBins> stdev;
  std::array<std::size_t, kBandBins> count{};
};

struct EvalReport {
  ExperimentConfig config;
  std::vector<MethodEval> methods;

  BinAggregate aggregate_ind(const MethodEval& method) const;
  BinAggregate aggregate_cred(const MethodEval& method) const;
  const MethodEval* find(const std::string& name) const;
};

/// Runs the full protocol: dataset, truth proxy (cached when configured),
/// repeated fits of every method, index evaluation and aggregation.
/// Repetition failures are recorded in the report instead of aborting.
EvalReport run_experiment(const ExperimentConfig& config);

/// Deterministic JSON serialization; wall-clock timings are included only
/// when the config asks for them.
std::string report_to_json(const EvalReport& report);
void write_report(const EvalReport& report, const std::filesystem::path& path);

/// Structural validation against the shipped report schema; returns problems,
/// empty when the document conforms.
std::vector<std::string> validate_report_json(const std::string& text);

/// Tidy CSV (method, repetition, c, ind, cred_ratio) for plotting.
std::string plots_csv(const EvalReport& report);
void write_plots_csv(const EvalReport& report, const std::filesystem::path& path);

/// Evaluates already-fitted models against a truth field (the `evaluate`
/// subcommand): one repetition per model.
EvalReport evaluate_models(const std::vector<io::AnyModel>& models,
                           const std::vector<std::string>& names,
                           const simbench::TruthField& truth,
                           const simbench::LabeledDataset* data, double beta);

}  // namespace riskscope::eval
