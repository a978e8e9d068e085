#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

namespace sprinter {

struct NewtonPoint {
  double value = 0.0;  // objective
  double grad = 0.0;   // first derivative
  double hess = 0.0;   // second derivative
};

struct Newton1dOptions {
  double bound = 50.0;
  double grad_tol = 1e-8;
  int max_iter = 100;
};

struct Newton1dResult {
  double x = 0.0;
  double grad = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Minimizes a smooth convex function of one variable on [-bound, bound].
/// `eval(x)` returns value and derivatives. A bracket on the minimizer is
/// kept from the sign of the derivative; Newton steps that leave it are
/// replaced by bisection, and accepted Newton steps are halved until the
/// objective or the derivative magnitude decreases. On failure the best
/// iterate is returned.
template <class Eval>
Newton1dResult newton1d(Eval&& eval, const Newton1dOptions& opt, double x0 = 0.0,
                        std::optional<NewtonPoint> start = std::nullopt) {
  double lo = -opt.bound, hi = opt.bound;
  double x = std::clamp(x0, lo, hi);
  NewtonPoint cur = start ? *start : eval(x);
  double best_x = x;
  NewtonPoint best = cur;
  Newton1dResult res;
  for (int it = 0; it < opt.max_iter; ++it) {
    if (std::abs(cur.grad) < opt.grad_tol) {
      res.x = x;
      res.grad = cur.grad;
      res.iterations = it;
      res.converged = true;
      return res;
    }
    if (cur.grad > 0.0) {
      hi = x;
    } else {
      lo = x;
    }
    double cand = 0.0;
    bool newton = cur.hess > 0.0 && std::isfinite(cur.hess);
    if (newton) {
      cand = x - cur.grad / cur.hess;
      newton = cand > lo && cand < hi;
    }
    if (!newton) cand = 0.5 * (lo + hi);
    NewtonPoint next = eval(cand);
    if (newton) {
      // Near the minimizer the value is flat to rounding; a smaller
      // derivative is then the better signal.
      for (int h = 0; h < 30 && !(next.value <= cur.value) && !(std::abs(next.grad) < std::abs(cur.grad)); ++h) {
        cand = 0.5 * (cand + x);
        next = eval(cand);
      }
    }
    x = cand;
    cur = next;
    if (cur.value < best.value || (std::abs(cur.grad) < std::abs(best.grad) && cur.value == best.value)) {
      best = cur;
      best_x = x;
    }
    res.iterations = it + 1;
  }
  if (std::abs(cur.grad) < opt.grad_tol) {
    res.x = x;
    res.grad = cur.grad;
    res.converged = true;
    return res;
  }
  res.x = best_x;
  res.grad = best.grad;
  res.converged = false;
  return res;
}

}  // namespace sprinter
