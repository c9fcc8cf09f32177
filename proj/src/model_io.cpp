// Apache License, Version 2.0, refer to LICENSE.txt
#include "riskscope/model_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "riskscope/errors.hpp"

namespace riskscope::io {

using nlohmann::json;

namespace {

constexpr const char* kModelSchema = "riskscope.model.v1";
constexpr const char* kTruthSchema = "riskscope.truth.v1";

json grid_to_json(const lgp::Grid& grid) {
  return json{{"lo", grid.lo}, {"hi", grid.hi}, {"width", grid.width}, {"shape", grid.shape}};
}

lgp::Grid grid_from_json(const json& j) {
  lgp::Grid g;
  g.lo = j.at("lo").get<numerics::Vec>();
  g.hi = j.at("hi").get<numerics::Vec>();
  g.width = j.at("width").get<double>();
  g.shape = j.at("shape").get<std::vector<std::size_t>>();
  return g;
}

json matrix_to_json(const numerics::Matrix& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

numerics::Matrix matrix_from_json(const json& j) {
  numerics::Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  m.data() = j.at("data").get<numerics::Vec>();
  if (m.data().size() != m.rows() * m.cols()) throw IoError("matrix json: size mismatch");
  return m;
}

json dlgp_to_json(const dlgp::DlgpModel& m) {
  json levels = json::array();
  for (const auto& post : m.level_posteriors) {
    levels.push_back(json{{"count", post.fit.count},
                          {"kernel", {{"amplitude", post.fit.params.amplitude},
                                      {"decay", post.fit.params.decay}}},
                          {"log_marginal", post.fit.log_marginal},
                          {"mode", post.fit.mode},
                          {"cov_factor", matrix_to_json(post.fit.cov_factor)},
                          {"p_mean", post.density.mean},
                          {"p_std", post.density.stdev}});
  }
  std::vector<int> empties(m.empty_levels.begin(), m.empty_levels.end());
  return json{{"schema", kModelSchema},
              {"method", "dlgp"},
              {"grid", grid_to_json(m.grid)},
              {"levels", m.levels.boundaries},
              {"alpha_prior", m.alpha_prior},
              {"lambda", m.lambda},
              {"lambda_optimized", m.lambda_optimized},
              {"empty_levels", empties},
              {"level_posteriors", levels}};
}

dlgp::DlgpModel dlgp_from_json(const json& j) {
  dlgp::DlgpModel m;
  m.grid = grid_from_json(j.at("grid"));
  m.levels.boundaries = j.at("levels").get<numerics::Vec>();
  m.alpha_prior = j.at("alpha_prior").get<numerics::Vec>();
  m.lambda = j.at("lambda").get<double>();
  m.lambda_optimized = j.at("lambda_optimized").get<bool>();
  for (int e : j.at("empty_levels").get<std::vector<int>>()) m.empty_levels.push_back(e != 0);
  for (const json& lj : j.at("level_posteriors")) {
    lgp::LgpPosterior post;
    post.fit.count = lj.at("count").get<std::size_t>();
    post.fit.params.amplitude = lj.at("kernel").at("amplitude").get<double>();
    post.fit.params.decay = lj.at("kernel").at("decay").get<double>();
    post.fit.log_marginal = lj.at("log_marginal").get<double>();
    post.fit.mode = lj.at("mode").get<numerics::Vec>();
    post.fit.cov_factor = matrix_from_json(lj.at("cov_factor"));
    post.density.mean = lj.at("p_mean").get<numerics::Vec>();
    post.density.stdev = lj.at("p_std").get<numerics::Vec>();
    m.level_posteriors.push_back(std::move(post));
  }
  return m;
}

json dkde_to_json(const baselines::DkdeModel& m) {
  return json{{"schema", kModelSchema},
              {"method", "dkde"},
              {"levels", m.levels.boundaries},
              {"alpha_prior", m.alpha_prior},
              {"level_points", m.level_points},
              {"level_bandwidths", m.level_bandwidths}};
}

baselines::DkdeModel dkde_from_json(const json& j) {
  baselines::DkdeModel m;
  m.levels.boundaries = j.at("levels").get<numerics::Vec>();
  m.alpha_prior = j.at("alpha_prior").get<numerics::Vec>();
  m.level_points = j.at("level_points").get<std::vector<std::vector<numerics::Vec>>>();
  m.level_bandwidths = j.at("level_bandwidths").get<std::vector<numerics::Vec>>();
  return m;
}

json gdp_to_json(const baselines::GdpModel& m) {
  json kernels = json::array();
  for (const auto& p : m.params)
    kernels.push_back(json{{"amplitude", p.amplitude}, {"decay", p.decay}});
  return json{{"schema", kModelSchema},
              {"method", "gdp"},
              {"levels", m.levels.boundaries},
              {"train_x", m.train_x},
              {"targets", m.targets},
              {"noise", m.noise},
              {"kernel", kernels},
              {"alpha_eps", m.alpha_eps},
              {"draws", m.draws},
              {"seed", m.seed}};
}

baselines::GdpModel gdp_from_json(const json& j) {
  baselines::GdpModel m;
  m.levels.boundaries = j.at("levels").get<numerics::Vec>();
  m.train_x = j.at("train_x").get<std::vector<numerics::Vec>>();
  m.targets = j.at("targets").get<std::vector<numerics::Vec>>();
  m.noise = j.at("noise").get<std::vector<numerics::Vec>>();
  for (const json& kj : j.at("kernel"))
    m.params.push_back({kj.at("amplitude").get<double>(), kj.at("decay").get<double>()});
  m.alpha_eps = j.at("alpha_eps").get<double>();
  m.draws = j.at("draws").get<std::size_t>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.refresh_factors();
  return m;
}

}  // namespace

std::string method_name(const AnyModel& model) {
  return std::visit(
      [](const auto& m) -> std::string {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, dlgp::DlgpModel>) return "dlgp";
        if constexpr (std::is_same_v<T, baselines::DkdeModel>) return "dkde";
        if constexpr (std::is_same_v<T, baselines::GdpModel>) return "gdp";
      },
      model);
}

dlgp::QueryResult query_model(const AnyModel& model, std::span<const double> x, double beta) {
  return std::visit([&](const auto& m) { return m.query(x, beta); }, model);
}

const lgp::Grid* model_grid(const AnyModel& model) {
  if (const auto* m = std::get_if<dlgp::DlgpModel>(&model)) return &m->grid;
  return nullptr;
}

std::string model_to_json(const AnyModel& model) {
  const json j = std::visit(
      [](const auto& m) -> json {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, dlgp::DlgpModel>) return dlgp_to_json(m);
        if constexpr (std::is_same_v<T, baselines::DkdeModel>) return dkde_to_json(m);
        if constexpr (std::is_same_v<T, baselines::GdpModel>) return gdp_to_json(m);
      },
      model);
  return j.dump(1);
}

AnyModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("model json: ") + e.what());
  }
  if (j.value("schema", "") != kModelSchema) throw IoError("model json: unknown schema");
  const std::string method = j.value("method", "");
  try {
    if (method == "dlgp") return dlgp_from_json(j);
    if (method == "dkde") return dkde_from_json(j);
    if (method == "gdp") return gdp_from_json(j);
  } catch (const json::exception& e) {
    throw IoError(std::string("model json: ") + e.what());
  }
  throw IoError("model json: unknown method '" + method + "'");
}

void save_model(const AnyModel& model, const std::filesystem::path& path) {
  write_file(path, model_to_json(model));
}

AnyModel load_model(const std::filesystem::path& path) { return model_from_json(read_file(path)); }

std::string truth_to_json(const simbench::TruthField& field, const TruthMeta& meta) {
  const json j{{"schema", kTruthSchema},
               {"grid", grid_to_json(field.grid)},
               {"pi", field.pi},
               {"meta",
                {{"seed", meta.seed},
                 {"m_samples", meta.m_samples},
                 {"bandwidth", meta.bandwidth},
                 {"world_hash", meta.world_hash},
                 {"level_boundaries", meta.level_boundaries},
                 {"formula", meta.formula}}}};
  return j.dump(1);
}

std::pair<simbench::TruthField, TruthMeta> truth_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw IoError(std::string("truth json: ") + e.what());
  }
  if (j.value("schema", "") != kTruthSchema) throw IoError("truth json: unknown schema");
  simbench::TruthField field;
  TruthMeta meta;
  try {
    field.grid = grid_from_json(j.at("grid"));
    field.pi = j.at("pi").get<std::vector<numerics::Vec>>();
    const json& mj = j.at("meta");
    meta.seed = mj.at("seed").get<std::uint64_t>();
    meta.m_samples = mj.at("m_samples").get<std::size_t>();
    meta.bandwidth = mj.at("bandwidth").get<double>();
    meta.world_hash = mj.at("world_hash").get<std::uint64_t>();
    meta.level_boundaries = mj.at("level_boundaries").get<numerics::Vec>();
    meta.formula = mj.at("formula").get<std::string>();
  } catch (const json::exception& e) {
    throw IoError(std::string("truth json: ") + e.what());
  }
  return {std::move(field), std::move(meta)};
}

void save_truth(const simbench::TruthField& field, const TruthMeta& meta,
                const std::filesystem::path& path) {
  write_file(path, truth_to_json(field, meta));
}

std::pair<simbench::TruthField, TruthMeta> load_truth(const std::filesystem::path& path) {
  return truth_from_json(read_file(path));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
}

}  // namespace riskscope::io
