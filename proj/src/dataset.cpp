// Apache License, Version 2.0, refer to LICENSE.txt
#include "riskscope/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "riskscope/errors.hpp"

namespace riskscope::simbench {

void LabeledDataset::validate(int level_count) const {
  if (inputs.size() != rho.size() || inputs.size() != labels.size())
    throw InvalidParameter("LabeledDataset: column lengths differ");
  for (int l : labels)
    if (l < 0 || l >= level_count) throw InvalidParameter("LabeledDataset: label out of range");
}

std::string LabeledDataset::to_csv() const {
  std::string out = "x0,x1,rho,level\n";
  char buf[96];
  for (std::size_t i = 0; i < size(); ++i) {
    if (inputs[i].size() != 2) throw InvalidParameter("LabeledDataset: csv format is 2-d only");
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%d\n", inputs[i][0], inputs[i][1], rho[i],
                  labels[i]);
    out += buf;
  }
  return out;
}

LabeledDataset LabeledDataset::from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "x0,x1,rho,level")
    throw IoError("dataset csv: missing or unexpected header");
  LabeledDataset d;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    double x0, x1, r;
    int l;
    if (std::sscanf(line.c_str(), "%lg,%lg,%lg,%d", &x0, &x1, &r, &l) != 4)
      throw IoError("dataset csv: malformed line " + std::to_string(lineno));
    d.inputs.push_back({x0, x1});
    d.rho.push_back(r);
    d.labels.push_back(l);
  }
  return d;
}

void LabeledDataset::save_csv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_csv();
}

LabeledDataset LabeledDataset::load_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_csv(ss.str());
}

}  // namespace riskscope::simbench
