// Apache License, Version 2.0, refer to LICENSE.txt
#include "riskscope/simbench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "riskscope/errors.hpp"
#include "riskscope/parallel.hpp"

namespace riskscope::simbench {

char area_name(AreaId id) { return static_cast<char>('A' + static_cast<int>(id)); }

World World::benchmark_default() {
  World w;
  w.region = {0.0, 40.0, 0.0, 40.0};
  w.goal = {35.0, 5.0};
  w.obstacles = {{10.0, 30.0, 5.0, 25.0}, {15.0, 25.0, 30.0, 38.0}};
  w.areas[static_cast<std::size_t>(AreaId::A)] = {{0.0, 10.0, 0.0, 10.0}};
  w.areas[static_cast<std::size_t>(AreaId::B)] = {{10.0, 20.0, 0.0, 5.0}, {30.0, 40.0, 0.0, 5.0}};
  w.areas[static_cast<std::size_t>(AreaId::C)] = {{20.0, 30.0, 0.0, 5.0}};
  w.areas[static_cast<std::size_t>(AreaId::D)] = {{0.0, 10.0, 10.0, 40.0}};
  w.areas[static_cast<std::size_t>(AreaId::E)] = {{10.0, 15.0, 25.0, 30.0}};
  w.areas[static_cast<std::size_t>(AreaId::F)] = {{15.0, 30.0, 25.0, 30.0},
                                                  {10.0, 15.0, 30.0, 40.0},
                                                  {25.0, 40.0, 30.0, 40.0},
                                                  {15.0, 25.0, 38.0, 40.0}};
  w.areas[static_cast<std::size_t>(AreaId::G)] = {{30.0, 40.0, 5.0, 30.0}};
  w.validate();
  return w;
}

namespace {

std::string rect_str(const Rect& r) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g %.17g", r.x_lo, r.x_hi, r.y_lo, r.y_hi);
  return buf;
}

}  // namespace

std::string World::to_text() const {
  std::string out = "riskscope-world v1\n";
  out += "region " + rect_str(region) + "\n";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "goal %.17g %.17g\n", goal[0], goal[1]);
  out += buf;
  for (const Rect& o : obstacles) out += "obstacle " + rect_str(o) + "\n";
  for (std::size_t a = 0; a < kAreaCount; ++a)
    for (const Rect& r : areas[a])
      out += std::string("area ") + area_name(static_cast<AreaId>(a)) + " " + rect_str(r) + "\n";
  return out;
}

World World::from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "riskscope-world v1")
    throw IoError("world file: missing 'riskscope-world v1' header");
  World w;
  w.obstacles.clear();
  bool have_region = false;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    const auto bad = [&] { return IoError("world file: malformed line " + std::to_string(lineno)); };
    if (key == "region") {
      Rect r;
      if (!(ls >> r.x_lo >> r.x_hi >> r.y_lo >> r.y_hi)) throw bad();
      w.region = r;
      have_region = true;
    } else if (key == "goal") {
      double gx, gy;
      if (!(ls >> gx >> gy)) throw bad();
      w.goal = {gx, gy};
    } else if (key == "obstacle") {
      Rect r;
      if (!(ls >> r.x_lo >> r.x_hi >> r.y_lo >> r.y_hi)) throw bad();
      w.obstacles.push_back(r);
    } else if (key == "area") {
      std::string name;
      Rect r;
      if (!(ls >> name >> r.x_lo >> r.x_hi >> r.y_lo >> r.y_hi)) throw bad();
      if (name.size() != 1 || name[0] < 'A' || name[0] > 'G')
        throw IoError("world file: unknown area '" + name + "' on line " + std::to_string(lineno));
      w.areas[static_cast<std::size_t>(name[0] - 'A')].push_back(r);
    } else {
      throw IoError("world file: unknown key '" + key + "' on line " + std::to_string(lineno));
    }
  }
  if (!have_region) throw IoError("world file: no region line");
  w.validate();
  return w;
}

World World::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

void World::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_text();
}

void World::validate() const {
  if (!(region.x_hi > region.x_lo) || !(region.y_hi > region.y_lo))
    throw InvalidParameter("World: degenerate region");
  if (goal.size() != 2 || !region.contains(goal[0], goal[1]))
    throw InvalidParameter("World: goal outside region");

  std::vector<Rect> tiles;
  for (const Rect& o : obstacles) tiles.push_back(o);
  for (const auto& rects : areas)
    for (const Rect& r : rects) tiles.push_back(r);

  double covered = 0.0;
  for (const Rect& r : tiles) {
    if (!(r.x_hi > r.x_lo) || !(r.y_hi > r.y_lo)) throw InvalidParameter("World: degenerate rectangle");
    if (r.x_lo < region.x_lo - 1e-9 || r.x_hi > region.x_hi + 1e-9 || r.y_lo < region.y_lo - 1e-9 ||
        r.y_hi > region.y_hi + 1e-9)
      throw InvalidParameter("World: rectangle outside region");
    covered += r.area();
  }
  for (std::size_t i = 0; i < tiles.size(); ++i)
    for (std::size_t j = i + 1; j < tiles.size(); ++j) {
      const double ox = std::min(tiles[i].x_hi, tiles[j].x_hi) - std::max(tiles[i].x_lo, tiles[j].x_lo);
      const double oy = std::min(tiles[i].y_hi, tiles[j].y_hi) - std::max(tiles[i].y_lo, tiles[j].y_lo);
      if (ox > 1e-9 && oy > 1e-9) throw InvalidParameter("World: overlapping rectangles");
    }
  if (std::fabs(covered - region.area()) > 1e-6 * region.area())
    throw InvalidParameter("World: areas and obstacles do not tile the region");
}

std::optional<AreaId> World::area_at(double x, double y) const {
  if (!inside_region(x, y) || in_obstacle_interior(x, y)) return std::nullopt;
  for (std::size_t a = 0; a < kAreaCount; ++a)
    for (const Rect& r : areas[a])
      if (r.contains(x, y)) return static_cast<AreaId>(a);
  return std::nullopt;
}

bool World::in_obstacle_interior(double x, double y) const {
  for (const Rect& o : obstacles)
    if (o.interior_contains(x, y)) return true;
  return false;
}

bool World::inside_region(double x, double y) const { return region.contains(x, y); }

namespace {

// Liang-Barsky style test whether the segment meets the open rectangle.
bool segment_hits_interior(double x0, double y0, double x1, double y1, const Rect& r) {
  const double dx = x1 - x0;
  const double dy = y1 - y0;
  double tmin = 0.0, tmax = 1.0;
  const auto clip = [&](double d, double p, double lo, double hi) {
    if (d == 0.0) return p > lo && p < hi;
    double t0 = (lo - p) / d;
    double t1 = (hi - p) / d;
    if (t0 > t1) std::swap(t0, t1);
    tmin = std::max(tmin, t0);
    tmax = std::min(tmax, t1);
    return true;
  };
  if (!clip(dx, x0, r.x_lo, r.x_hi)) return false;
  if (!clip(dy, y0, r.y_lo, r.y_hi)) return false;
  // A positive-length overlap means the segment passes through the interior;
  // touching a face or corner does not.
  return tmax - tmin > 1e-12;
}

}  // namespace

bool World::segment_free(double x0, double y0, double x1, double y1) const {
  if (!inside_region(x1, y1)) return false;
  for (const Rect& o : obstacles)
    if (segment_hits_interior(x0, y0, x1, y1, o)) return false;
  return true;
}

std::uint64_t World::geometry_hash() const {
  const std::string text = to_text();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw InvalidParameter("SimConfig: dt must be positive");
  const double ratio = horizon / dt;
  if (std::fabs(ratio - std::round(ratio)) > 1e-9)
    throw InvalidParameter("SimConfig: horizon must be a multiple of dt");
  if (!(base_speed >= 0.0) || !(speed_noise_max >= 0.0))
    throw InvalidParameter("SimConfig: negative speed");
}

std::size_t SimConfig::steps() const { return static_cast<std::size_t>(std::round(horizon / dt)); }

numerics::Vec sample_input(numerics::Rng& rng, const SimConfig& config) {
  const bool first = rng.uniform() < 0.5;
  const double mean_x = first ? 1.0 : 5.0;
  const double mean_y = first ? 5.0 : 1.0;
  const double var_x = first ? 2.0 : 10.0;
  const double var_y = first ? 10.0 : 2.0;
  double x = mean_x + std::sqrt(var_x) * rng.normal();
  double y = mean_y + std::sqrt(var_y) * rng.normal();
  x = std::clamp(x, config.input_region.x_lo, config.input_region.x_hi);
  y = std::clamp(y, config.input_region.y_lo, config.input_region.y_hi);
  return {x, y};
}

namespace {

double sigmoid(double t, SigmoidConvention convention) {
  return convention == SigmoidConvention::Printed ? 1.0 / (1.0 + std::exp(t))
                                                  : 1.0 / (1.0 + std::exp(-t));
}

constexpr double kDeg = M_PI / 180.0;

// Drawn heading for one step, or nullopt for "stay".
std::optional<double> draw_heading(AreaId area, const numerics::Vec& pos, numerics::Rng& rng,
                                   const SimConfig& config) {
  switch (area) {
    case AreaId::A: {
      const double p_up = sigmoid(pos[0] - pos[1], config.sigmoid);
      return rng.uniform() < p_up ? 90.0 * kDeg : 0.0;
    }
    case AreaId::B: {
      const double p_upper = sigmoid(5.0 - pos[1], config.sigmoid);
      return rng.uniform() < p_upper ? 60.0 * kDeg : -60.0 * kDeg;
    }
    case AreaId::C:
      if (rng.uniform() < 0.7) return std::nullopt;
      return 0.0;
    case AreaId::D:
      return 30.0 * kDeg;
    case AreaId::E:
      if (rng.uniform() < 0.1) return std::nullopt;
      return 0.0;
    case AreaId::F:
      return 0.0;
    case AreaId::G:
      return -90.0 * kDeg;
  }
  return 0.0;
}

}  // namespace

numerics::Vec step(const numerics::Vec& position, numerics::Rng& rng, const World& world,
                   const SimConfig& config) {
  if (position.size() != 2) throw InvalidState("step: position must be 2-d");
  const auto area = world.area_at(position[0], position[1]);
  if (!area) throw InvalidState("step: position not in free space");

  const auto heading = draw_heading(*area, position, rng, config);
  if (!heading) return position;  // "stay" leaves the position exactly unchanged

  const double speed = config.base_speed + rng.uniform(0.0, config.speed_noise_max);
  // Candidate offsets ordered by |angle|, clockwise first on ties.
  for (int k = 0; k <= 12; ++k) {
    for (const double sign : {-1.0, 1.0}) {
      if (k == 0 && sign > 0.0) continue;
      const double angle = *heading + sign * 15.0 * kDeg * k;
      const double nx = position[0] + speed * std::cos(angle);
      const double ny = position[1] + speed * std::sin(angle);
      if (world.segment_free(position[0], position[1], nx, ny)) return {nx, ny};
      if (k == 0 || k == 12) break;  // 0 and 180 degrees have a single candidate
    }
  }
  return position;  // boxed in on all sides; treat as forced stay
}

stl::Signal simulate(const numerics::Vec& start, numerics::Rng& rng, const World& world,
                     const SimConfig& config) {
  config.validate();
  const std::size_t n = config.steps();
  stl::Signal signal;
  signal.times.reserve(n + 1);
  signal.values.reserve(n + 1);
  numerics::Vec pos = start;
  signal.times.push_back(0.0);
  signal.values.push_back(pos);
  for (std::size_t k = 1; k <= n; ++k) {
    pos = step(pos, rng, world, config);
    signal.times.push_back(static_cast<double>(k) * config.dt);
    signal.values.push_back(pos);
  }
  return signal;
}

LabeledDataset generate_dataset(std::size_t n, const dlgp::RobustnessLevels& levels,
                                const stl::Formula& phi, numerics::Rng rng, const World& world,
                                const SimConfig& config) {
  levels.validate();
  config.validate();
  LabeledDataset data;
  data.inputs.resize(n);
  data.rho.resize(n);
  data.labels.resize(n);
  numerics::parallel_for(n, [&](std::size_t i) {
    numerics::Rng task = rng.child(i);
    numerics::Rng input_rng = task.child(0);
    numerics::Rng sim_rng = task.child(1);
    const numerics::Vec x = sample_input(input_rng, config);
    const stl::Signal y = simulate(x, sim_rng, world, config);
    const double r = stl::robustness(phi, y, 0.0);
    data.inputs[i] = x;
    data.rho[i] = r;
    data.labels[i] = levels.classify(r);
  });
  return data;
}

TruthField truth_from_labeled(const std::vector<numerics::Vec>& inputs,
                              const std::vector<int>& labels, int level_count, double bandwidth,
                              const lgp::Grid& grid) {
  if (!(bandwidth > 0.0)) throw InvalidParameter("truth proxy: bandwidth must be positive");
  if (inputs.size() != labels.size()) throw DimensionMismatch("truth proxy: inputs/labels mismatch");
  std::vector<std::size_t> totals(static_cast<std::size_t>(level_count), 0);
  for (int l : labels) {
    if (l < 0 || l >= level_count) throw InvalidParameter("truth proxy: label out of range");
    ++totals[static_cast<std::size_t>(l)];
  }
  for (std::size_t l = 0; l < totals.size(); ++l)
    if (totals[l] == 0)
      throw DegenerateTruth("truth proxy: level " + std::to_string(l) + " received no samples");

  TruthField field;
  field.grid = grid;
  field.pi.assign(grid.cell_count(), numerics::Vec(static_cast<std::size_t>(level_count), 0.0));
  const double inv_two_h2 = 1.0 / (2.0 * bandwidth * bandwidth);

  numerics::parallel_for(grid.cell_count(), [&](std::size_t cell) {
    const numerics::Vec z = grid.center(cell);
    // Log-space accumulation keeps tiny bandwidths finite.
    numerics::Vec lse(static_cast<std::size_t>(level_count),
                      -std::numeric_limits<double>::infinity());
    numerics::Vec max_exp(static_cast<std::size_t>(level_count),
                          -std::numeric_limits<double>::infinity());
    std::vector<double> exponents(inputs.size());
    for (std::size_t j = 0; j < inputs.size(); ++j) {
      double d2 = 0.0;
      for (std::size_t c = 0; c < z.size(); ++c) {
        const double d = z[c] - inputs[j][c];
        d2 += d * d;
      }
      exponents[j] = -d2 * inv_two_h2;
      auto& m = max_exp[static_cast<std::size_t>(labels[j])];
      m = std::max(m, exponents[j]);
    }
    numerics::Vec acc(static_cast<std::size_t>(level_count), 0.0);
    for (std::size_t j = 0; j < inputs.size(); ++j) {
      const auto l = static_cast<std::size_t>(labels[j]);
      acc[l] += std::exp(exponents[j] - max_exp[l]);
    }
    for (int l = 0; l < level_count; ++l) {
      const auto lu = static_cast<std::size_t>(l);
      lse[lu] = max_exp[lu] + std::log(acc[lu]);
    }
    double top = -std::numeric_limits<double>::infinity();
    for (double v : lse) top = std::max(top, v);
    double z_sum = 0.0;
    numerics::Vec& pi = field.pi[cell];
    for (int l = 0; l < level_count; ++l) {
      pi[static_cast<std::size_t>(l)] = std::exp(lse[static_cast<std::size_t>(l)] - top);
      z_sum += pi[static_cast<std::size_t>(l)];
    }
    for (auto& v : pi) v /= z_sum;
  });
  return field;
}

TruthField build_truth_proxy(std::size_t m_samples, double bandwidth,
                             const dlgp::RobustnessLevels& levels, const stl::Formula& phi,
                             numerics::Rng rng, const World& world, const SimConfig& config,
                             const lgp::Grid& grid) {
  if (m_samples < 2) throw InvalidParameter("truth proxy: needs at least 2 samples");
  levels.validate();
  config.validate();
  std::vector<numerics::Vec> inputs(m_samples);
  std::vector<int> labels(m_samples);
  numerics::parallel_for(m_samples, [&](std::size_t i) {
    numerics::Rng task = rng.child(i);
    numerics::Rng input_rng = task.child(0);
    numerics::Rng sim_rng = task.child(1);
    const double x = input_rng.uniform(config.input_region.x_lo, config.input_region.x_hi);
    const double y = input_rng.uniform(config.input_region.y_lo, config.input_region.y_hi);
    inputs[i] = {x, y};
    const stl::Signal traj = simulate(inputs[i], sim_rng, world, config);
    labels[i] = levels.classify(stl::robustness(phi, traj, 0.0));
  });
  return truth_from_labeled(inputs, labels, static_cast<int>(levels.count()), bandwidth, grid);
}

}  // namespace riskscope::simbench
