#pragma once

#include <optional>
#include <span>

#include "sprinter/family.hpp"
#include "sprinter/pipeline.hpp"
#include "sprinter/simulate.hpp"

namespace sprinter {

/// Mann-Whitney AUC with 0.5 credit for ties. Labels must be 0/1 with both
/// classes present.
double auc(std::span<const double> scores, std::span<const double> labels);

struct Evaluation {
  double deviance = 0.0;      // summed over evaluation rows
  std::optional<double> auc;  // binomial only
};

Evaluation evaluate(const LinearModel& model, const Dataset& data);
Evaluation evaluate(const Family& family, std::span<const double> mean, std::span<const double> y);

}  // namespace sprinter
