#include "lrbm/projection.hpp"

#include "lrbm/error.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace lrbm {

ProjectionResult project_spectral(const Matrix& weights) {
  if (!weights.allFinite()) {
    throw NumericalError("project_spectral: SVD of a matrix with non-finite entries");
  }
  ProjectionResult out{weights, {}};
  if (weights.size() == 0) {
    return out;
  }
  Eigen::JacobiSVD<Matrix> svd(weights, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  out.report.max_singular_value_before = s(0);
  Vector clipped = s;
  for (Eigen::Index i = 0; i < clipped.size(); ++i) {
    if (clipped(i) > 1.0) {
      clipped(i) = 1.0;
      ++out.report.clipped_count;
    }
  }
  if (out.report.clipped_count > 0) {
    out.weights = svd.matrixU() * clipped.asDiagonal() * svd.matrixV().transpose();
  }
  out.report.max_singular_value_after = clipped.maxCoeff();
  return out;
}

SafetyCheck is_globally_safe(const Matrix& weights) {
  const Eigen::Index n = weights.rows();
  if (n == 0) {
    return {true, 1.0};
  }
  const Matrix gram = Matrix::Identity(n, n) - weights * weights.transpose();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram, Eigen::EigenvaluesOnly);
  const double smallest = eig.eigenvalues()(0);
  return {smallest > -kPdTolerance, smallest};
}

double spectral_norm(const Matrix& weights) {
  if (weights.size() == 0) {
    return 0.0;
  }
  Eigen::JacobiSVD<Matrix> svd(weights);
  return svd.singularValues()(0);
}

}  // namespace lrbm
