#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "dotmarg/phantom.hpp"

namespace dotmarg {

// 0/1 matrix mapping coupling log-amplitude / phase changes to data changes.
// Columns: [lnA sources, lnA detectors, phi sources, phi detectors].
struct CouplingJacobian {
  Eigen::SparseMatrix<double> matrix;  // 2m x 2l
  std::size_t sources = 0;
  std::size_t detectors = 0;

  std::size_t l() const { return sources + detectors; }
  Eigen::MatrixXd dense() const { return Eigen::MatrixXd(matrix); }
};

CouplingJacobian coupling_jacobian(std::span<const SourceDetectorPair> pairs, std::size_t sources,
                                   std::size_t detectors);

enum class Provenance { kCoupling, kRoni, kBaseline, kCombined, kIdentity };
std::string provenance_name(Provenance p);

// Orthogonal projector onto the complement of span(nullspace_basis).
struct ProjectionOperator {
  Eigen::MatrixXd p;
  Eigen::MatrixXd nullspace_basis;  // orthonormal columns
  Eigen::Index rank = 0;
  Provenance provenance = Provenance::kIdentity;
  double rank_tolerance = 1e-10;
  Eigen::VectorXd singular_values;  // of the defining columns
  std::vector<std::string> warnings;

  Eigen::Index dimension() const { return p.rows(); }
  static ProjectionOperator identity(Eigen::Index dim);
};

inline constexpr double kDefaultRankTolerance = 1e-10;

// Rank-revealing (SVD) orthonormalization of `columns`; singular values below
// rank_tolerance * sigma_max are dropped, then P = I - Q Q^T.
ProjectionOperator projection_from_basis(const Eigen::MatrixXd& columns,
                                         double rank_tolerance = kDefaultRankTolerance,
                                         Provenance provenance = Provenance::kCombined);

struct Subspace {
  Eigen::MatrixXd basis;        // 2m x k, orthonormal
  Eigen::VectorXd eigenvalues;  // descending, all of them
  Eigen::Index numerical_rank = 0;
  std::vector<std::string> warnings;
};

// Top-k eigenvectors of a symmetric PSD 2m x 2m matrix, each sign-normalized so
// its largest-magnitude entry is positive.
Subspace leading_eigenvectors(const Eigen::MatrixXd& symmetric, Eigen::Index k);

// Leading eigenvectors of J~ A~ J~^T.
Subspace roni_subspace(const Eigen::MatrixXd& j_tilde, const Eigen::SparseMatrix<double>& weight, Eigen::Index k);
Subspace roni_subspace(const Eigen::MatrixXd& j_tilde, const Eigen::MatrixXd& weight, Eigen::Index k);

// Leading eigenvectors of sum_i D_i A D_i^T over difference Jacobians D_i.
Subspace baseline_subspace(const std::vector<Eigen::MatrixXd>& difference_jacobians,
                           const Eigen::SparseMatrix<double>& weight, Eigen::Index k);
Subspace baseline_subspace(const std::vector<Eigen::MatrixXd>& difference_jacobians, const Eigen::MatrixXd& weight,
                           Eigen::Index k);

// Projection whose nullspace is range([J_c, V~, V]); empty blocks are skipped.
ProjectionOperator combined_projection(const CouplingJacobian* coupling, const Eigen::MatrixXd& v_tilde,
                                       const Eigen::MatrixXd& v, double rank_tolerance = kDefaultRankTolerance);

// Default nullspace dimension: a quarter of the data length, rounded up.
inline Eigen::Index default_nullspace_dimension(std::size_t m) {
  return static_cast<Eigen::Index>((2 * m + 3) / 4);
}

}  // namespace dotmarg
