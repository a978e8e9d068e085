#include "sprinter/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "sprinter/errors.hpp"

namespace sprinter {

double auc(std::span<const double> scores, std::span<const double> labels) {
  if (scores.size() != labels.size()) throw DimensionError("auc: length mismatch");
  const std::size_t n = scores.size();
  double n_pos = 0.0;
  for (double l : labels) {
    if (l != 0.0 && l != 1.0) throw InputError("auc: labels must be 0 or 1");
    n_pos += l;
  }
  const double n_neg = static_cast<double>(n) - n_pos;
  if (n_pos == 0.0 || n_neg == 0.0) throw DomainError("auc: undefined for single-class labels");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1.0) rank_sum += mid;
    }
    i = j + 1;
  }
  return (rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

Evaluation evaluate(const Family& family, std::span<const double> mean, std::span<const double> y) {
  if (mean.size() != y.size()) throw DimensionError("evaluate: length mismatch");
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (!family.valid_response(y[i])) {
      throw InputError("evaluate: response at row " + std::to_string(i + 1) + " does not match the " +
                       std::string(family_name(family.kind)) + " family");
    }
  }
  Evaluation ev;
  ev.deviance = deviance(family, mean, y);
  if (family.kind == FamilyKind::kBinomial) ev.auc = auc(mean, y);
  return ev;
}

Evaluation evaluate(const LinearModel& model, const Dataset& data) {
  const auto mu = model.mean(data.x);
  return evaluate(model.family, mu, data.y);
}

}  // namespace sprinter
