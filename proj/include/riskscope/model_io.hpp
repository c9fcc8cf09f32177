// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <variant>

#include "riskscope/baselines.hpp"
#include "riskscope/dlgp.hpp"
#include "riskscope/simbench.hpp"

namespace riskscope::io {

/// Any of the estimators behind the shared query interface.
using AnyModel = std::variant<dlgp::DlgpModel, baselines::DkdeModel, baselines::GdpModel>;

std::string method_name(const AnyModel& model);
dlgp::QueryResult query_model(const AnyModel& model, std::span<const double> x, double beta);
const lgp::Grid* model_grid(const AnyModel& model);  // nullptr for grid-free methods

/// Versioned JSON envelope with a `method` discriminator.
std::string model_to_json(const AnyModel& model);
AnyModel model_from_json(const std::string& text);
void save_model(const AnyModel& model, const std::filesystem::path& path);
AnyModel load_model(const std::filesystem::path& path);

/// Identifies the inputs a truth field was built from, for disk caching.
struct TruthMeta {
  std::uint64_t seed = 0;
  std::size_t m_samples = 0;
  double bandwidth = 0.0;
  std::uint64_t world_hash = 0;
  std::vector<double> level_boundaries;
  std::string formula;

  bool operator==(const TruthMeta&) const = default;
};

std::string truth_to_json(const simbench::TruthField& field, const TruthMeta& meta);
std::pair<simbench::TruthField, TruthMeta> truth_from_json(const std::string& text);
void save_truth(const simbench::TruthField& field, const TruthMeta& meta,
                const std::filesystem::path& path);
std::pair<simbench::TruthField, TruthMeta> load_truth(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace riskscope::io
