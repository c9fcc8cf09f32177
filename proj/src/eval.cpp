// Apache License, Version 2.0, refer to LICENSE.txt
#include "riskscope/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "riskscope/errors.hpp"
#include "riskscope/parallel.hpp"

namespace riskscope::eval {

using nlohmann::json;

std::size_t band_bin(double band) {
  const double clamped = std::clamp(band, 0.0, 1.0);
  const double raw = std::ceil(clamped * 10.0 - 1e-9) - 1.0;
  const long bin = std::lround(std::max(raw, 0.0));
  return std::min<std::size_t>(static_cast<std::size_t>(bin), kBandBins - 1);
}

CellFields compute_fields(const io::AnyModel& model, const lgp::Grid& grid, double beta) {
  CellFields fields;
  const std::size_t cells = grid.cell_count();
  fields.mean.resize(cells);
  fields.band.resize(cells);
  numerics::parallel_for(cells, [&](std::size_t i) {
    const dlgp::QueryResult q = io::query_model(model, grid.center(i), beta);
    fields.mean[i] = q.mean;
    fields.band[i] = q.band;
  });
  return fields;
}

numerics::Vec confidence_band_field(const io::AnyModel& model, const lgp::Grid& grid, double beta) {
  return compute_fields(model, grid, beta).band;
}

std::optional<double> ind_index(const CellFields& fields, const simbench::TruthField& truth,
                                std::size_t bin) {
  if (fields.mean.size() != truth.pi.size())
    throw DimensionMismatch("ind_index: fields and truth grids differ");
  double acc = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < fields.mean.size(); ++i) {
    if (band_bin(fields.band[i]) != bin) continue;
    double err = 0.0;
    for (std::size_t l = 0; l < fields.mean[i].size(); ++l) {
      const double d = fields.mean[i][l] - truth.pi[i][l];
      err += d * d;
    }
    acc += err;
    ++count;
  }
  if (count == 0) return std::nullopt;
  return acc / static_cast<double>(count);
}

std::optional<double> ind_index(const io::AnyModel& model, const simbench::TruthField& truth,
                                double c, double beta) {
  return ind_index(compute_fields(model, truth.grid, beta), truth, band_bin(c));
}

double cred_ratio(const CellFields& fields, std::size_t bin) {
  std::size_t count = 0;
  for (double b : fields.band)
    if (band_bin(b) == bin) ++count;
  return static_cast<double>(count) / static_cast<double>(fields.band.size());
}

double cred_ratio(const io::AnyModel& model, const lgp::Grid& grid, double c, double beta) {
  return cred_ratio(compute_fields(model, grid, beta), band_bin(c));
}

double no_sample_ratio(const simbench::LabeledDataset& data, const lgp::Grid& grid) {
  std::vector<bool> occupied(grid.cell_count(), false);
  for (const auto& x : data.inputs) occupied[grid.cell_index(x)] = true;
  std::size_t empty = 0;
  for (bool o : occupied)
    if (!o) ++empty;
  return static_cast<double>(empty) / static_cast<double>(grid.cell_count());
}

void ExperimentConfig::validate() const {
  if (methods.empty()) throw ConfigError("config: no methods listed");
  for (const std::string& m : methods) {
    if (m == "dkde" || m == "gdp") continue;
    if (m.starts_with("dlgp:")) {
      const std::string arg = m.substr(5);
      if (arg == "opt") continue;
      try {
        if (std::stod(arg) < 0.0) throw ConfigError("config: negative lambda in method " + m);
      } catch (const std::invalid_argument&) {
        throw ConfigError("config: bad method '" + m + "'");
      }
      continue;
    }
    throw ConfigError("config: unknown method '" + m + "'");
  }
  if (repetitions == 0) throw ConfigError("config: repetitions must be positive");
  if (reseed != "inference" && reseed != "data")
    throw ConfigError("config: reseed must be 'inference' or 'data'");
  if (sigmoid != "printed" && sigmoid != "conventional")
    throw ConfigError("config: sigmoid must be 'printed' or 'conventional'");
  if (level_boundaries.empty()) throw ConfigError("config: levels must not be empty");
  if (!(beta > 0.0) || !(beta < 1.0)) throw ConfigError("config: beta must lie in (0, 1)");
  if (!(grid_width > 0.0)) throw ConfigError("config: grid_width must be positive");
  if (!(truth_bandwidth > 0.0)) throw ConfigError("config: truth_bandwidth must be positive");
}

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::vector<double> parse_double_list(const std::string& s, const std::string& key) {
  std::vector<double> out;
  for (const std::string& tok : split_list(s)) {
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ConfigError("config: bad number '" + tok + "' for " + key);
    }
  }
  return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find('#');
    if (comment != std::string::npos) line = line.substr(0, comment);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("config: bad section on line " + std::to_string(lineno));
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config: expected key = value on line " + std::to_string(lineno));
    const std::string key = section.empty() ? trim(line.substr(0, eq))
                                            : section + "." + trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);

    const auto as_size = [&](const char* what) -> std::size_t {
      try {
        const long long v = std::stoll(value);
        if (v < 0) throw ConfigError(std::string("config: negative ") + what);
        return static_cast<std::size_t>(v);
      } catch (const std::invalid_argument&) {
        throw ConfigError(std::string("config: bad integer for ") + what);
      }
    };
    const auto as_double = [&](const char* what) -> double {
      try {
        return std::stod(value);
      } catch (const std::exception&) {
        throw ConfigError(std::string("config: bad number for ") + what);
      }
    };
    const auto as_bool = [&]() -> bool {
      if (value == "true") return true;
      if (value == "false") return false;
      throw ConfigError("config: expected true/false for " + key);
    };

    if (key == "experiment.methods") cfg.methods = split_list(value);
    else if (key == "experiment.repetitions") cfg.repetitions = as_size("repetitions");
    else if (key == "experiment.seed") cfg.seed = as_size("seed");
    else if (key == "experiment.reseed") cfg.reseed = value;
    else if (key == "experiment.out_dir") cfg.out_dir = value;
    else if (key == "experiment.record_timing") cfg.record_timing = as_bool();
    else if (key == "data.source") cfg.data_source = value;
    else if (key == "data.n") cfg.n = as_size("n");
    else if (key == "data.world") cfg.world = value;
    else if (key == "data.formula") cfg.formula = value;
    else if (key == "data.levels") cfg.level_boundaries = parse_double_list(value, key);
    else if (key == "data.sigmoid") cfg.sigmoid = value;
    else if (key == "truth.source") cfg.truth_source = value;
    else if (key == "truth.m") cfg.truth_samples = as_size("truth.m");
    else if (key == "truth.bandwidth") cfg.truth_bandwidth = as_double("truth.bandwidth");
    else if (key == "truth.cache") cfg.truth_cache = value;
    else if (key == "fit.grid_width") cfg.grid_width = as_double("grid_width");
    else if (key == "fit.lambda_max") cfg.lambda_max = as_double("lambda_max");
    else if (key == "fit.lambda_prior_mode") cfg.lambda_prior_mode = as_double("lambda_prior_mode");
    else if (key == "fit.lambda_prior_variance")
      cfg.lambda_prior_variance = as_double("lambda_prior_variance");
    else if (key == "fit.alpha_prior") cfg.alpha_prior = parse_double_list(value, key);
    else if (key == "fit.moment_draws") cfg.moment_draws = as_size("moment_draws");
    else if (key == "fit.hyper_grid") cfg.hyper_grid_points = as_size("hyper_grid");
    else if (key == "fit.hyper_ensemble") cfg.hyper_ensemble = as_size("hyper_ensemble");
    else if (key == "fit.hyper_lo") cfg.hyper_lo = as_double("hyper_lo");
    else if (key == "fit.hyper_hi") cfg.hyper_hi = as_double("hyper_hi");
    else if (key == "fit.gdp_alpha_eps") cfg.gdp_alpha_eps = as_double("gdp_alpha_eps");
    else if (key == "fit.gdp_draws") cfg.gdp_draws = as_size("gdp_draws");
    else if (key == "fit.beta") cfg.beta = as_double("beta");
    else throw ConfigError("config: unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

namespace {

struct MethodSpec {
  std::string name;            // report name, e.g. dlgp_opt
  bool is_dlgp = false;
  bool lambda_opt = false;
  double lambda_fixed = 0.0;
  bool is_dkde = false;
  bool is_gdp = false;
};

MethodSpec parse_method(const std::string& m) {
  MethodSpec spec;
  if (m == "dkde") {
    spec.name = "dkde";
    spec.is_dkde = true;
    return spec;
  }
  if (m == "gdp") {
    spec.name = "gdp";
    spec.is_gdp = true;
    return spec;
  }
  spec.is_dlgp = true;
  const std::string arg = m.substr(5);
  if (arg == "opt") {
    spec.name = "dlgp_opt";
    spec.lambda_opt = true;
  } else {
    spec.lambda_fixed = std::stod(arg);
    std::string tag = arg;
    for (char& c : tag)
      if (c == '.') c = 'p';
    spec.name = "dlgp_" + tag;
  }
  return spec;
}

struct BinStats {
  std::array<std::optional<double>, kBandBins> ind;
  std::array<double, kBandBins> cred{};
};

BinStats bin_stats(const CellFields& fields, const simbench::TruthField& truth) {
  BinStats s;
  for (std::size_t b = 0; b < kBandBins; ++b) {
    s.ind[b] = ind_index(fields, truth, b);
    s.cred[b] = cred_ratio(fields, b);
  }
  return s;
}

}  // namespace

EvalReport run_experiment(const ExperimentConfig& config) {
  config.validate();

  const simbench::World world =
      config.world == "builtin:v1" ? simbench::World::benchmark_default()
                                   : simbench::World::load(config.world);
  simbench::SimConfig sim;
  sim.sigmoid = config.sigmoid == "printed" ? simbench::SigmoidConvention::Printed
                                            : simbench::SigmoidConvention::Conventional;
  dlgp::RobustnessLevels levels{config.level_boundaries};
  levels.validate();
  const auto m = static_cast<int>(levels.count());
  const stl::FormulaPtr phi = stl::parse(config.formula);

  const numerics::Vec region_lo{sim.input_region.x_lo, sim.input_region.y_lo};
  const numerics::Vec region_hi{sim.input_region.x_hi, sim.input_region.y_hi};
  const lgp::Grid grid = lgp::make_grid(region_lo, region_hi, config.grid_width);

  numerics::Rng root(config.seed);
  const numerics::Rng data_rng = root.child(1);
  const numerics::Rng truth_rng = root.child(2);
  const numerics::Rng fit_rng = root.child(3);
  const numerics::Rng gdp_rng = root.child(4);

  // Dataset (shared across repetitions unless reseed = data).
  const bool reseed_data = config.reseed == "data";
  const auto make_dataset = [&](std::size_t rep) -> simbench::LabeledDataset {
    if (config.data_source != "generate") {
      auto d = simbench::LabeledDataset::load_csv(config.data_source);
      d.validate(m);
      return d;
    }
    return simbench::generate_dataset(config.n, levels, *phi,
                                      reseed_data ? data_rng.child(rep) : data_rng, world, sim);
  };

  // Truth proxy, disk-cached when a cache path is configured.
  io::TruthMeta want_meta{.seed = truth_rng.seed(),
                          .m_samples = config.truth_samples,
                          .bandwidth = config.truth_bandwidth,
                          .world_hash = world.geometry_hash(),
                          .level_boundaries = config.level_boundaries,
                          .formula = config.formula};
  simbench::TruthField truth;
  bool have_truth = false;
  if (config.truth_source != "build") {
    truth = io::load_truth(config.truth_source).first;
    have_truth = true;
  } else if (!config.truth_cache.empty() && std::filesystem::exists(config.truth_cache)) {
    auto [cached, meta] = io::load_truth(config.truth_cache);
    if (meta == want_meta && cached.grid == grid) {
      truth = std::move(cached);
      have_truth = true;
    }
  }
  if (!have_truth) {
    truth = simbench::build_truth_proxy(config.truth_samples, config.truth_bandwidth, levels, *phi,
                                        truth_rng, world, sim, grid);
    if (config.truth_source == "build" && !config.truth_cache.empty())
      io::save_truth(truth, want_meta, config.truth_cache);
  }
  if (truth.grid != grid) throw ConfigError("experiment: truth grid does not match fit grid");

  std::vector<MethodSpec> specs;
  specs.reserve(config.methods.size());
  for (const std::string& name : config.methods) specs.push_back(parse_method(name));
  const bool any_dlgp = std::any_of(specs.begin(), specs.end(),
                                    [](const MethodSpec& s) { return s.is_dlgp; });

  EvalReport report;
  report.config = config;
  report.methods.resize(specs.size());
  for (std::size_t s = 0; s < specs.size(); ++s) report.methods[s].name = specs[s].name;

  dlgp::DlgpConfig dlgp_cfg;
  dlgp_cfg.grid_width = config.grid_width;
  dlgp_cfg.alpha_prior = config.alpha_prior;
  dlgp_cfg.lambda_prior =
      dlgp::LambdaPrior::from_mode_variance(config.lambda_prior_mode, config.lambda_prior_variance);
  dlgp_cfg.lambda_max = config.lambda_max;
  dlgp_cfg.moment_draws = config.moment_draws;
  dlgp_cfg.hyper_search = {.lo = config.hyper_lo,
                           .hi = config.hyper_hi,
                           .points = config.hyper_grid_points};
  dlgp_cfg.hyper_ensemble = config.hyper_ensemble;
  const numerics::Vec alpha_prior = config.alpha_prior.empty()
                                        ? numerics::Vec(levels.count(), 1.0 / levels.count())
                                        : config.alpha_prior;

  // Stage caches, valid while the dataset is shared across repetitions.
  std::optional<simbench::LabeledDataset> shared_data;
  std::optional<std::vector<dlgp::LevelStage>> shared_level_fits;
  std::optional<baselines::DkdeModel> shared_dkde;
  std::optional<baselines::GdpModel> shared_gdp;

  for (std::size_t rep = 0; rep < config.repetitions; ++rep) {
    simbench::LabeledDataset data;
    if (!reseed_data && shared_data) {
      data = *shared_data;
    } else {
      data = make_dataset(rep);
      if (!reseed_data) shared_data = data;
      shared_level_fits.reset();
      shared_dkde.reset();
      shared_gdp.reset();
    }
    const double nsr = no_sample_ratio(data, grid);
    const lgp::CellCounts counts = lgp::bin_counts(grid, data, m);

    std::vector<dlgp::LevelStage> level_fits;
    std::string level_fit_error;
    if (any_dlgp) {
      try {
        if (shared_level_fits) {
          level_fits = *shared_level_fits;
        } else {
          level_fits = dlgp::fit_level_posteriors(grid, counts, dlgp_cfg.hyper_prior,
                                                  dlgp_cfg.hyper_search, dlgp_cfg.hyper_ensemble);
          if (!reseed_data) shared_level_fits = level_fits;
        }
      } catch (const Error& e) {
        level_fit_error = e.what();
      }
    }

    for (std::size_t s = 0; s < specs.size(); ++s) {
      const MethodSpec& spec = specs[s];
      RepetitionEval ev;
      ev.rep = rep;
      ev.no_sample_ratio = nsr;
      const auto t0 = std::chrono::steady_clock::now();
      try {
        io::AnyModel model = [&]() -> io::AnyModel {
          if (spec.is_dkde) {
            if (shared_dkde) return *shared_dkde;
            baselines::DkdeModel fitted = baselines::dkde_fit(data, levels, alpha_prior);
            if (!reseed_data) shared_dkde = fitted;
            return fitted;
          }
          if (spec.is_gdp) {
            baselines::GdpModel fitted;
            if (shared_gdp) {
              fitted = *shared_gdp;
            } else {
              baselines::GdpConfig gcfg{.alpha_eps = config.gdp_alpha_eps,
                                        .draws = config.gdp_draws,
                                        .seed = 0,
                                        .hyper_search = dlgp_cfg.hyper_search};
              fitted = baselines::gdp_fit(data, levels, gcfg);
              if (!reseed_data) shared_gdp = fitted;
            }
            fitted.seed = gdp_rng.child(rep).seed();
            return fitted;
          }
          if (!level_fit_error.empty()) throw Error(level_fit_error);
          dlgp::DlgpConfig cfg = dlgp_cfg;
          cfg.seed = fit_rng.child(rep).seed();
          if (!spec.lambda_opt) cfg.lambda_fixed = spec.lambda_fixed;
          return dlgp::assemble_model(level_fits, grid, levels, data, cfg);
        }();
        if (const auto* dm = std::get_if<dlgp::DlgpModel>(&model)) ev.lambda = dm->lambda;
        const CellFields fields = compute_fields(model, grid, config.beta);
        const BinStats stats = bin_stats(fields, truth);
        ev.ind = stats.ind;
        ev.cred_ratio = stats.cred;
      } catch (const Error& e) {
        ev.error = e.what();
      }
      ev.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      report.methods[s].repetitions.push_back(std::move(ev));
    }
  }
  return report;
}

namespace {

BinAggregate aggregate(const MethodEval& method, bool use_ind) {
  BinAggregate agg;
  for (std::size_t b = 0; b < kBandBins; ++b) {
    double sum = 0.0, sumsq = 0.0;
    std::size_t n = 0;
    for (const RepetitionEval& rep : method.repetitions) {
      if (!rep.error.empty()) continue;
      std::optional<double> v;
      if (use_ind)
        v = rep.ind[b];
      else
        v = rep.cred_ratio[b];
      if (!v) continue;
      sum += *v;
      sumsq += *v * *v;
      ++n;
    }
    agg.count[b] = n;
    if (n > 0) {
      const double mean = sum / static_cast<double>(n);
      agg.mean[b] = mean;
      agg.stdev[b] =
          n > 1 ? std::sqrt(std::max(0.0, (sumsq - n * mean * mean) / static_cast<double>(n - 1)))
                : 0.0;
    }
  }
  return agg;
}

}  // namespace

BinAggregate EvalReport::aggregate_ind(const MethodEval& method) const {
  return aggregate(method, true);
}

BinAggregate EvalReport::aggregate_cred(const MethodEval& method) const {
  return aggregate(method, false);
}

const MethodEval* EvalReport::find(const std::string& name) const {
  for (const MethodEval& m : methods)
    if (m.name == name) return &m;
  return nullptr;
}

namespace {

json optional_array(const std::array<std::optional<double>, kBandBins>& values) {
  json arr = json::array();
  for (const auto& v : values) {
    if (v)
      arr.push_back(*v);
    else
      arr.push_back(nullptr);
  }
  return arr;
}

json config_to_json(const ExperimentConfig& c) {
  return json{{"methods", c.methods},
              {"repetitions", c.repetitions},
              {"seed", c.seed},
              {"reseed", c.reseed},
              {"record_timing", c.record_timing},
              {"data",
               {{"source", c.data_source},
                {"n", c.n},
                {"world", c.world},
                {"formula", c.formula},
                {"levels", c.level_boundaries},
                {"sigmoid", c.sigmoid}}},
              {"truth",
               {{"source", c.truth_source},
                {"m", c.truth_samples},
                {"bandwidth", c.truth_bandwidth}}},
              {"fit",
               {{"grid_width", c.grid_width},
                {"lambda_max", c.lambda_max},
                {"lambda_prior_mode", c.lambda_prior_mode},
                {"lambda_prior_variance", c.lambda_prior_variance},
                {"alpha_prior", c.alpha_prior},
                {"moment_draws", c.moment_draws},
                {"hyper_grid", c.hyper_grid_points},
                {"gdp_alpha_eps", c.gdp_alpha_eps},
                {"gdp_draws", c.gdp_draws},
                {"beta", c.beta}}}};
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
  json bins = json::array();
  for (std::size_t b = 0; b < kBandBins; ++b) bins.push_back((static_cast<double>(b) + 1.0) / 10.0);
  json methods = json::array();
  for (const MethodEval& method : report.methods) {
    json reps = json::array();
    for (const RepetitionEval& rep : method.repetitions) {
      json r{{"rep", rep.rep},
             {"ind", optional_array(rep.ind)},
             {"cred_ratio", rep.cred_ratio},
             {"no_sample_ratio", rep.no_sample_ratio}};
      if (rep.lambda) r["lambda"] = *rep.lambda;
      if (!rep.error.empty()) r["error"] = rep.error;
      if (report.config.record_timing) r["wall_seconds"] = rep.wall_seconds;
      reps.push_back(std::move(r));
    }
    const BinAggregate ind = report.aggregate_ind(method);
    const BinAggregate cred = report.aggregate_cred(method);
    methods.push_back(json{{"name", method.name},
                           {"repetitions", reps},
                           {"aggregate",
                            {{"ind_mean", optional_array(ind.mean)},
                             {"ind_std", optional_array(ind.stdev)},
                             {"ind_count", ind.count},
                             {"cred_mean", optional_array(cred.mean)},
                             {"cred_std", optional_array(cred.stdev)}}}});
  }
  const json j{{"schema", "riskscope.report.v1"},
               {"config", config_to_json(report.config)},
               {"bins", bins},
               {"methods", methods}};
  return j.dump(1);
}

void write_report(const EvalReport& report, const std::filesystem::path& path) {
  io::write_file(path, report_to_json(report));
}

std::vector<std::string> validate_report_json(const std::string& text) {
  std::vector<std::string> problems;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    problems.emplace_back(std::string("not valid json: ") + e.what());
    return problems;
  }
  const auto need = [&](const json& obj, const char* key, const char* type) {
    if (!obj.contains(key)) {
      problems.push_back(std::string("missing key: ") + key);
      return false;
    }
    const json& v = obj.at(key);
    const std::string t = type;
    const bool ok = (t == "string" && v.is_string()) || (t == "array" && v.is_array()) ||
                    (t == "object" && v.is_object()) || (t == "number" && v.is_number());
    if (!ok) problems.push_back(std::string("wrong type for ") + key + ", expected " + type);
    return ok;
  };
  if (need(j, "schema", "string") && j.at("schema") != "riskscope.report.v1")
    problems.emplace_back("unknown schema");
  need(j, "config", "object");
  need(j, "bins", "array");
  if (!need(j, "methods", "array")) return problems;
  for (const json& method : j.at("methods")) {
    need(method, "name", "string");
    need(method, "aggregate", "object");
    if (!need(method, "repetitions", "array")) continue;
    for (const json& rep : method.at("repetitions")) {
      need(rep, "rep", "number");
      need(rep, "no_sample_ratio", "number");
      if (need(rep, "ind", "array") && rep.at("ind").size() != kBandBins)
        problems.emplace_back("ind must have 10 bins");
      if (need(rep, "cred_ratio", "array")) {
        if (rep.at("cred_ratio").size() != kBandBins) {
          problems.emplace_back("cred_ratio must have 10 bins");
        } else if (!rep.contains("error")) {
          double total = 0.0;
          for (const json& v : rep.at("cred_ratio")) total += v.get<double>();
          if (std::fabs(total - 1.0) > 1e-9)
            problems.emplace_back("cred_ratio bins must sum to 1");
        }
      }
    }
  }
  return problems;
}

std::string plots_csv(const EvalReport& report) {
  std::string out = "method,repetition,c,ind,cred_ratio\n";
  char buf[160];
  for (const MethodEval& method : report.methods) {
    for (const RepetitionEval& rep : method.repetitions) {
      if (!rep.error.empty()) continue;
      for (std::size_t b = 0; b < kBandBins; ++b) {
        const double c = (static_cast<double>(b) + 1.0) / 10.0;
        if (rep.ind[b])
          std::snprintf(buf, sizeof(buf), "%s,%zu,%.2g,%.17g,%.17g\n", method.name.c_str(), rep.rep,
                        c, *rep.ind[b], rep.cred_ratio[b]);
        else
          std::snprintf(buf, sizeof(buf), "%s,%zu,%.2g,,%.17g\n", method.name.c_str(), rep.rep, c,
                        rep.cred_ratio[b]);
        out += buf;
      }
    }
  }
  return out;
}

void write_plots_csv(const EvalReport& report, const std::filesystem::path& path) {
  io::write_file(path, plots_csv(report));
}

EvalReport evaluate_models(const std::vector<io::AnyModel>& models,
                           const std::vector<std::string>& names,
                           const simbench::TruthField& truth,
                           const simbench::LabeledDataset* data, double beta) {
  if (models.size() != names.size()) throw DimensionMismatch("evaluate_models: names mismatch");
  EvalReport report;
  report.config.methods = names;
  report.config.repetitions = 1;
  report.config.beta = beta;
  const double nsr = data ? no_sample_ratio(*data, truth.grid) : 0.0;
  for (std::size_t i = 0; i < models.size(); ++i) {
    MethodEval method;
    method.name = names[i];
    RepetitionEval ev;
    ev.rep = 0;
    ev.no_sample_ratio = nsr;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      if (const auto* dm = std::get_if<dlgp::DlgpModel>(&models[i])) ev.lambda = dm->lambda;
      const CellFields fields = compute_fields(models[i], truth.grid, beta);
      const BinStats stats = bin_stats(fields, truth);
      ev.ind = stats.ind;
      ev.cred_ratio = stats.cred;
    } catch (const Error& e) {
      ev.error = e.what();
    }
    ev.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    method.repetitions.push_back(std::move(ev));
    report.methods.push_back(std::move(method));
  }
  return report;
}

}  // namespace riskscope::eval
