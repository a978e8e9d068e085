#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "sprinter/family.hpp"
#include "sprinter/matrix.hpp"
#include "sprinter/pipeline.hpp"

namespace sprinter {

enum class Structure { kMixed, kHierarchical, kAntiHierarchical };

Structure parse_structure(std::string_view token);
std::string_view structure_name(Structure s);

struct SimDesign {
  Family family = Family::binomial();
  std::size_t n = 100;
  std::size_t p = 150;
  Structure structure = Structure::kMixed;
  double beta_value = 1.0;
  double gamma_value = 4.0;
  double x_variance = 1.0;
  std::uint64_t seed = 1;
  /// Evaluation rows; 0 selects 100 (binomial, gaussian) or 1000 (poisson).
  std::size_t n_eval = 0;
  /// Clamp on |theta| when drawing poisson counts.
  double poisson_theta_clamp = 20.0;
};

/// Planted coefficients (0-based column indices).
struct PlantedSets {
  std::vector<std::size_t> main;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
};

/// Binomial and gaussian designs share one family of sets, poisson another.
PlantedSets planted_sets(FamilyKind family, Structure structure);

struct Dataset {
  Matrix x;
  std::vector<double> y;
  std::vector<double> theta;  // true natural parameter (before any clamp)
};

struct SimData {
  Dataset train;
  Dataset eval;
};

SimData simulate(const SimDesign& design);

/// theta = X beta* + Z gamma* for the design's planted sets.
std::vector<double> planted_theta(const SimDesign& design, MatrixView x);

/// The data-generating model expressed as a LinearModel on raw inputs.
LinearModel oracle_model(const SimDesign& design);

/// Proportional-odds design: main effects on columns 0 and 1, one pure
/// interaction (2, 3), standard normal X and cutpoints evenly spaced on
/// [-2, 2].
struct OrdinalDesign {
  std::size_t n = 2000;
  std::size_t p = 30;
  int categories = 4;
  double beta_value = 1.0;
  double gamma_value = 1.0;
  std::uint64_t seed = 1;
  std::size_t n_eval = 0;  // 0 selects n
};

struct OrdinalDataset {
  Matrix x;
  std::vector<int> y;  // categories 1..K
  std::vector<double> eta;
};

struct OrdinalSimData {
  OrdinalDataset train;
  OrdinalDataset eval;
};

std::vector<double> ordinal_design_cutpoints(int categories);
OrdinalSimData simulate_ordinal(const OrdinalDesign& design);

}  // namespace sprinter
