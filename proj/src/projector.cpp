#include "dotmarg/projector.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "dotmarg/errors.hpp"

namespace dotmarg {

CouplingJacobian coupling_jacobian(std::span<const SourceDetectorPair> pairs, std::size_t sources,
                                   std::size_t detectors) {
  const auto m = static_cast<Eigen::Index>(pairs.size());
  const auto l = static_cast<Eigen::Index>(sources + detectors);
  const auto ls = static_cast<Eigen::Index>(sources);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(4 * pairs.size());
  for (Eigen::Index k = 0; k < m; ++k) {
    const auto& p = pairs[static_cast<std::size_t>(k)];
    if (p.source < 0 || static_cast<std::size_t>(p.source) >= sources || p.detector < 0 ||
        static_cast<std::size_t>(p.detector) >= detectors) {
      throw ContractError("pair index out of bounds in coupling Jacobian");
    }
    triplets.emplace_back(k, p.source, 1.0);
    triplets.emplace_back(k, ls + p.detector, 1.0);
    triplets.emplace_back(m + k, l + p.source, 1.0);
    triplets.emplace_back(m + k, l + ls + p.detector, 1.0);
  }
  CouplingJacobian jc;
  jc.sources = sources;
  jc.detectors = detectors;
  jc.matrix.resize(2 * m, 2 * l);
  jc.matrix.setFromTriplets(triplets.begin(), triplets.end());
  return jc;
}

std::string provenance_name(Provenance p) {
  switch (p) {
    case Provenance::kCoupling: return "coupling";
    case Provenance::kRoni: return "roni";
    case Provenance::kBaseline: return "baseline";
    case Provenance::kCombined: return "combined";
    case Provenance::kIdentity: return "identity";
  }
  return "unknown";
}

ProjectionOperator ProjectionOperator::identity(Eigen::Index dim) {
  ProjectionOperator op;
  op.p = Eigen::MatrixXd::Identity(dim, dim);
  op.nullspace_basis.resize(dim, 0);
  op.rank = dim;
  op.provenance = Provenance::kIdentity;
  return op;
}

ProjectionOperator projection_from_basis(const Eigen::MatrixXd& columns, double rank_tolerance,
                                         Provenance provenance) {
  const Eigen::Index dim = columns.rows();
  // Wider-than-tall stacks (e.g. [J_c, V~, V] on few pairs) are fine: the SVD keeps at most dim directions.
  if (columns.cols() == 0 || columns.cwiseAbs().maxCoeff() == 0.0) {
    auto op = ProjectionOperator::identity(dim);
    op.provenance = provenance;
    op.rank_tolerance = rank_tolerance;
    op.warnings.push_back("projection basis is empty or zero; using the identity");
    return op;
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(columns, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  const double cutoff = rank_tolerance * sv[0];
  Eigen::Index r = 0;
  while (r < sv.size() && sv[r] > cutoff) ++r;

  ProjectionOperator op;
  op.provenance = provenance;
  op.rank_tolerance = rank_tolerance;
  op.singular_values = sv;
  op.nullspace_basis = svd.matrixU().leftCols(r);
  op.p = Eigen::MatrixXd::Identity(dim, dim) - op.nullspace_basis * op.nullspace_basis.transpose();
  op.p = 0.5 * (op.p + op.p.transpose()).eval();
  if (r == dim) op.p.setZero();  // everything projected away; avoid round-off residue
  op.rank = dim - r;
  return op;
}

Subspace leading_eigenvectors(const Eigen::MatrixXd& symmetric, Eigen::Index k) {
  const Eigen::Index dim = symmetric.rows();
  if (k < 1 || k > dim) throw ConfigError("subspace dimension must lie in [1, " + std::to_string(dim) + "]");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (symmetric + symmetric.transpose()));
  if (eig.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed");
  // Eigen returns ascending order.
  Subspace out;
  out.eigenvalues = eig.eigenvalues().reverse();
  const double top = std::max(out.eigenvalues[0], 0.0);
  const double cutoff = kDefaultRankTolerance * top;
  while (out.numerical_rank < dim && out.eigenvalues[out.numerical_rank] > cutoff) ++out.numerical_rank;
  Eigen::Index keep = k;
  if (k > out.numerical_rank) {
    keep = out.numerical_rank;
    out.warnings.push_back("requested " + std::to_string(k) + " directions but numerical rank is " +
                           std::to_string(out.numerical_rank) + "; basis truncated");
  }
  out.basis.resize(dim, keep);
  for (Eigen::Index c = 0; c < keep; ++c) {
    Eigen::VectorXd v = eig.eigenvectors().col(dim - 1 - c);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0) v = -v;
    out.basis.col(c) = v;
  }
  return out;
}

namespace {

template <typename Weight>
Eigen::MatrixXd weighted_gram(const Eigen::MatrixXd& j, const Weight& weight) {
  if (weight.rows() != j.cols() || weight.cols() != j.cols()) {
    throw ContractError("weight matrix does not match the Jacobian width");
  }
  const Eigen::MatrixXd aw = weight * j.transpose();
  return j * aw;
}

template <typename Weight>
Subspace baseline_impl(const std::vector<Eigen::MatrixXd>& diffs, const Weight& weight, Eigen::Index k) {
  if (diffs.empty()) throw ConfigError("baseline subspace needs at least one difference Jacobian");
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(diffs.front().rows(), diffs.front().rows());
  for (const auto& d : diffs) {
    if (d.rows() != diffs.front().rows() || d.cols() != diffs.front().cols()) {
      throw ContractError("difference Jacobians must share a shape");
    }
    sum += weighted_gram(d, weight);
  }
  return leading_eigenvectors(sum, k);
}

}  // namespace

Subspace roni_subspace(const Eigen::MatrixXd& j_tilde, const Eigen::SparseMatrix<double>& weight, Eigen::Index k) {
  return leading_eigenvectors(weighted_gram(j_tilde, weight), k);
}

Subspace roni_subspace(const Eigen::MatrixXd& j_tilde, const Eigen::MatrixXd& weight, Eigen::Index k) {
  return leading_eigenvectors(weighted_gram(j_tilde, weight), k);
}

Subspace baseline_subspace(const std::vector<Eigen::MatrixXd>& difference_jacobians,
                           const Eigen::SparseMatrix<double>& weight, Eigen::Index k) {
  return baseline_impl(difference_jacobians, weight, k);
}

Subspace baseline_subspace(const std::vector<Eigen::MatrixXd>& difference_jacobians, const Eigen::MatrixXd& weight,
                           Eigen::Index k) {
  return baseline_impl(difference_jacobians, weight, k);
}

ProjectionOperator combined_projection(const CouplingJacobian* coupling, const Eigen::MatrixXd& v_tilde,
                                       const Eigen::MatrixXd& v, double rank_tolerance) {
  Eigen::Index rows = -1;
  Eigen::Index cols = 0;
  int blocks = 0;
  auto note = [&](Eigen::Index r, Eigen::Index c) {
    if (c == 0) return;
    if (rows >= 0 && r != rows) throw ContractError("stacked projection blocks disagree in row count");
    rows = r;
    cols += c;
    ++blocks;
  };
  if (coupling) note(coupling->matrix.rows(), coupling->matrix.cols());
  note(v_tilde.rows(), v_tilde.cols());
  note(v.rows(), v.cols());
  if (rows < 0) throw ContractError("combined projection needs at least one non-empty block");

  Eigen::MatrixXd stack(rows, cols);
  Eigen::Index at = 0;
  Provenance provenance = Provenance::kCombined;
  if (coupling && coupling->matrix.cols() > 0) {
    stack.middleCols(at, coupling->matrix.cols()) = coupling->dense();
    at += coupling->matrix.cols();
    if (blocks == 1) provenance = Provenance::kCoupling;
  }
  if (v_tilde.cols() > 0) {
    stack.middleCols(at, v_tilde.cols()) = v_tilde;
    at += v_tilde.cols();
    if (blocks == 1) provenance = Provenance::kRoni;
  }
  if (v.cols() > 0) {
    stack.middleCols(at, v.cols()) = v;
    if (blocks == 1) provenance = Provenance::kBaseline;
  }
  return projection_from_basis(stack, rank_tolerance, provenance);
}

}  // namespace dotmarg
