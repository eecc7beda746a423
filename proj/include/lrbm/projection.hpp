#pragma once

#include "lrbm/model.hpp"

namespace lrbm {

struct ProjectionReport {
  int clipped_count = 0;
  double max_singular_value_before = 0.0;
  double max_singular_value_after = 0.0;
};

struct ProjectionResult {
  Matrix weights;
  ProjectionReport report;
};

/**
 * Frobenius-nearest W~ with I - W~ W~^T PSD: singular values of W are
 * clipped at 1, singular vectors kept.
 *
 * Throws NumericalError on non-finite input.
 */
ProjectionResult project_spectral(const Matrix& weights);

struct SafetyCheck {
  bool safe = false;
  /// Smallest eigenvalue of I - W W^T.
  double smallest_eigenvalue = 0.0;
};

/// I - W W^T has no eigenvalue below -kPdTolerance.
SafetyCheck is_globally_safe(const Matrix& weights);

/// Largest singular value (0 for an empty matrix).
double spectral_norm(const Matrix& weights);

}  // namespace lrbm
