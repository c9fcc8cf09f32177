// Apache License, Version 2.0, refer to LICENSE.txt
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "riskscope/dataset.hpp"
#include "riskscope/levels.hpp"
#include "riskscope/lgp.hpp"
#include "riskscope/rng.hpp"
#include "riskscope/stl.hpp"

namespace riskscope::simbench {

struct Rect {
  double x_lo = 0.0, x_hi = 0.0, y_lo = 0.0, y_hi = 0.0;

  bool contains(double x, double y) const {
    return x >= x_lo && x <= x_hi && y >= y_lo && y <= y_hi;
  }
  bool interior_contains(double x, double y) const {
    return x > x_lo && x < x_hi && y > y_lo && y < y_hi;
  }
  double area() const { return (x_hi - x_lo) * (y_hi - y_lo); }

  bool operator==(const Rect&) const = default;
};

enum class AreaId { A, B, C, D, E, F, G };
constexpr std::size_t kAreaCount = 7;
char area_name(AreaId id);

/// Benchmark environment: a walled rectangular region with impenetrable
/// obstacles and named behavior areas that partition the free space.
/// Geometry is configuration and ships in a versioned text file (see
/// data/world_v1.txt); the built-in default reproduces that file.
struct World {
  Rect region{0.0, 40.0, 0.0, 40.0};
  numerics::Vec goal{35.0, 5.0};
  std::vector<Rect> obstacles;
  std::array<std::vector<Rect>, kAreaCount> areas;

  static World benchmark_default();
  static World from_text(const std::string& text);
  static World load(const std::filesystem::path& path);
  std::string to_text() const;
  void save(const std::filesystem::path& path) const;

  /// Checks that area and obstacle rectangles are pairwise interior-disjoint
  /// and together tile the region. Throws InvalidParameter on violation.
  void validate() const;

  /// First matching area in A..G declaration order; boundary points therefore
  /// resolve deterministically. nullopt inside obstacles or off the region.
  std::optional<AreaId> area_at(double x, double y) const;
  bool in_obstacle_interior(double x, double y) const;
  bool inside_region(double x, double y) const;
  /// True when the segment stays inside the region and crosses no obstacle
  /// interior; sliding along an obstacle face is allowed.
  bool segment_free(double x0, double y0, double x1, double y1) const;

  std::uint64_t geometry_hash() const;
};

enum class SigmoidConvention {
  Printed,       // 1 / (1 + exp(x)), decreasing
  Conventional,  // 1 / (1 + exp(-x)), increasing
};

struct SimConfig {
  double dt = 0.1;
  double horizon = 10.0;
  double base_speed = 0.3;
  double speed_noise_max = 0.5;
  Rect input_region{0.0, 10.0, 0.0, 10.0};
  SigmoidConvention sigmoid = SigmoidConvention::Printed;

  void validate() const;
  std::size_t steps() const;
};

/// Start-position sampler: equal mixture of N((1,5), diag(2,10)) and
/// N((5,1), diag(10,2)), clipped coordinatewise to the input region.
numerics::Vec sample_input(numerics::Rng& rng, const SimConfig& config = {});

/// One transition: direction drawn by the current area's rule, travel distance
/// base_speed + U[0, speed_noise_max]. A blocked direction is replaced by the
/// feasible candidate closest in angle, scanned at 15-degree increments with
/// ties broken clockwise. Throws InvalidState off the free space.
numerics::Vec step(const numerics::Vec& position, numerics::Rng& rng, const World& world,
                   const SimConfig& config);

/// Trajectory of horizon/dt + 1 samples; the first sample is the start point.
stl::Signal simulate(const numerics::Vec& start, numerics::Rng& rng, const World& world,
                     const SimConfig& config);

/// n i.i.d. inputs, simulated trajectories, robustness values and level
/// labels. Deterministic in (n, seed, world, config); trajectories are
/// sub-seeded per input, so results do not depend on scheduling.
LabeledDataset generate_dataset(std::size_t n, const dlgp::RobustnessLevels& levels,
                                const stl::Formula& phi, numerics::Rng rng, const World& world,
                                const SimConfig& config);

/// Probability vector field used as the evaluation ground-truth stand-in.
struct TruthField {
  lgp::Grid grid;
  std::vector<numerics::Vec> pi;  // one simplex vector per cell

  std::size_t level_count() const { return pi.empty() ? 0 : pi.front().size(); }
};

/// High-sample proxy of the true level probabilities: m_samples uniform
/// starts, simulated and labeled, then per-level Gaussian KDEs (all with the
/// given bandwidth) combined as count-weighted ratios at every cell center.
/// Computed in log space, so arbitrarily small bandwidths stay finite.
/// Throws DegenerateTruth when a level receives no samples.
TruthField build_truth_proxy(std::size_t m_samples, double bandwidth,
                             const dlgp::RobustnessLevels& levels, const stl::Formula& phi,
                             numerics::Rng rng, const World& world, const SimConfig& config,
                             const lgp::Grid& grid);

/// Truth proxy over an explicitly labeled input set (no simulation); shares
/// the KDE-ratio construction with build_truth_proxy.
TruthField truth_from_labeled(const std::vector<numerics::Vec>& inputs,
                              const std::vector<int>& labels, int level_count, double bandwidth,
                              const lgp::Grid& grid);

}  // namespace riskscope::simbench
