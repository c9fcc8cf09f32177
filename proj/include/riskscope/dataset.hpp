// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "riskscope/linalg.hpp"

namespace riskscope::simbench {

/// Input points with their robustness values and derived level labels.
struct LabeledDataset {
  std::vector<numerics::Vec> inputs;
  numerics::Vec rho;
  std::vector<int> labels;

  std::size_t size() const { return inputs.size(); }
  void validate(int level_count) const;

  /// CSV with header "x0,x1,rho,level"; floats printed with 17 significant digits.
  std::string to_csv() const;
  static LabeledDataset from_csv(const std::string& text);
  void save_csv(const std::filesystem::path& path) const;
  static LabeledDataset load_csv(const std::filesystem::path& path);
};

}  // namespace riskscope::simbench
