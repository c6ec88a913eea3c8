#include "dotmarg/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "dotmarg/errors.hpp"

namespace dotmarg {

namespace {

// (0.01 sigma)^2 relative to sigma^2.
constexpr double kTruncationRatio = 1e-4;

struct CellKey {
  long long i, j, k;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& c) const {
    return static_cast<std::size_t>(c.i * 73856093LL ^ c.j * 19349663LL ^ c.k * 83492791LL);
  }
};

}  // namespace

double truncation_radius(double correlation_length) {
  return correlation_length * std::sqrt(2.0 * std::log(1.0 / kTruncationRatio));
}

double PriorModel::truncation_radius() const { return dotmarg::truncation_radius(correlation_length); }

PriorModel prior_covariance(std::span<const Vec3> coordinates, double sigma, double correlation_length) {
  if (!(sigma > 0.0) || !(correlation_length > 0.0)) {
    throw ConfigError("prior standard deviation and correlation length must be positive");
  }
  const auto n = static_cast<Eigen::Index>(coordinates.size());
  const double var = sigma * sigma;
  const double threshold = kTruncationRatio * var;
  const double inv_two_d2 = 1.0 / (2.0 * correlation_length * correlation_length);
  // Slightly padded so no above-threshold pair is missed by the cell search.
  const double cell = truncation_radius(correlation_length) * (1.0 + 1e-6);

  std::unordered_map<CellKey, std::vector<Eigen::Index>, CellHash> cells;
  auto key_of = [cell](const Vec3& p) {
    return CellKey{static_cast<long long>(std::floor(p.x / cell)), static_cast<long long>(std::floor(p.y / cell)),
                   static_cast<long long>(std::floor(p.z / cell))};
  };
  for (Eigen::Index i = 0; i < n; ++i) cells[key_of(coordinates[i])].push_back(i);

  PriorModel model;
  model.sigma = sigma;
  model.correlation_length = correlation_length;
  model.coordinates.assign(coordinates.begin(), coordinates.end());
  model.covariance.resize(n, n);

  std::vector<std::pair<Eigen::Index, double>> column;
  for (Eigen::Index j = 0; j < n; ++j) {
    column.clear();
    const auto cj = key_of(coordinates[j]);
    for (long long dk = -1; dk <= 1; ++dk) {
      for (long long dj = -1; dj <= 1; ++dj) {
        for (long long di = -1; di <= 1; ++di) {
          auto it = cells.find({cj.i + di, cj.j + dj, cj.k + dk});
          if (it == cells.end()) continue;
          for (auto i : it->second) {
            const Vec3 diff = coordinates[i] - coordinates[j];
            const double value = var * std::exp(-dot(diff, diff) * inv_two_d2);
            if (value > threshold) column.emplace_back(i, value);
          }
        }
      }
    }
    std::sort(column.begin(), column.end());
    model.covariance.startVec(j);
    for (const auto& [i, v] : column) model.covariance.insertBack(i, j) = v;
  }
  model.covariance.finalize();
  return model;
}

PriorModel PriorModel::block(std::span<const std::size_t> positions) const {
  const auto n = static_cast<Eigen::Index>(positions.size());
  std::vector<Eigen::Index> new_index(static_cast<std::size_t>(covariance.rows()), -1);
  for (Eigen::Index a = 0; a < n; ++a) new_index.at(positions[a]) = a;

  PriorModel sub;
  sub.sigma = sigma;
  sub.correlation_length = correlation_length;
  sub.covariance.resize(n, n);
  std::vector<std::pair<Eigen::Index, double>> column;
  std::size_t nnz = 0;
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(covariance, static_cast<Eigen::Index>(positions[a])); it; ++it) {
      if (new_index[it.row()] >= 0) ++nnz;
    }
  }
  sub.covariance.reserve(static_cast<Eigen::Index>(nnz));
  for (Eigen::Index a = 0; a < n; ++a) {
    column.clear();
    for (Eigen::SparseMatrix<double>::InnerIterator it(covariance, static_cast<Eigen::Index>(positions[a])); it; ++it) {
      const auto r = new_index[it.row()];
      if (r >= 0) column.emplace_back(r, it.value());
    }
    std::sort(column.begin(), column.end());
    sub.covariance.startVec(a);
    for (const auto& [r, v] : column) sub.covariance.insertBack(r, a) = v;
    if (!coordinates.empty()) sub.coordinates.push_back(coordinates.at(positions[a]));
  }
  sub.covariance.finalize();
  return sub;
}

namespace {

Eigen::VectorXd diagonal_of(const Eigen::SparseMatrix<double>& m) { return m.diagonal(); }
Eigen::VectorXd diagonal_of(const Eigen::MatrixXd& m) { return m.diagonal(); }
Eigen::MatrixXd dense_of(const Eigen::SparseMatrix<double>& m) { return Eigen::MatrixXd(m); }
const Eigen::MatrixXd& dense_of(const Eigen::MatrixXd& m) { return m; }

template <typename Prior>
PosteriorResult posterior_impl(const Eigen::MatrixXd& j, const Prior& gamma_x, const Eigen::VectorXd& noise_variance,
                               const Eigen::VectorXd& y, CovarianceMode mode) {
  if (gamma_x.rows() != j.cols() || gamma_x.cols() != j.cols()) {
    throw ContractError("prior covariance does not match the Jacobian width");
  }
  if (noise_variance.size() != j.rows() || y.size() != j.rows()) {
    throw ContractError("noise covariance or data length does not match the Jacobian height");
  }
  if ((noise_variance.array() <= 0.0).any()) throw NumericalError("noise covariance must be positive definite");

  const Eigen::MatrixXd g = gamma_x * j.transpose();  // n x 2m
  Eigen::MatrixXd s = j * g;
  s = 0.5 * (s + s.transpose()).eval();
  s.diagonal() += noise_variance;

  Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
  const double rcond = ldlt.info() == Eigen::Success ? ldlt.rcond() : 0.0;
  if (ldlt.info() != Eigen::Success || !(rcond > 1e-15)) {
    throw NumericalError("posterior system is singular or ill-conditioned", rcond > 0 ? 1.0 / rcond : INFINITY);
  }
  Eigen::VectorXd z = ldlt.solve(y);
  z += ldlt.solve(y - s * z);  // one step of iterative refinement

  PosteriorResult out;
  out.mean = g * z;
  out.residual_norm = (s * z - y).norm();
  out.data_rank = j.rows();
  out.reciprocal_condition = rcond;

  if (mode == CovarianceMode::kFull && j.cols() > kMaxDenseCovariance) mode = CovarianceMode::kDiagonal;
  if (mode == CovarianceMode::kNone) return out;
  const Eigen::MatrixXd w = ldlt.solve(g.transpose());  // 2m x n
  if (mode == CovarianceMode::kFull) {
    Eigen::MatrixXd cov = dense_of(gamma_x) - g * w;
    cov = 0.5 * (cov + cov.transpose()).eval();
    out.variance = cov.diagonal();
    out.covariance = std::move(cov);
  } else {
    out.variance = diagonal_of(gamma_x) - (g.array() * w.transpose().array()).rowwise().sum().matrix();
  }
  return out;
}

}  // namespace

PosteriorResult posterior(const Eigen::MatrixXd& j, const Eigen::SparseMatrix<double>& gamma_x,
                          const Eigen::VectorXd& noise_variance, const Eigen::VectorXd& y, CovarianceMode mode) {
  return posterior_impl(j, gamma_x, noise_variance, y, mode);
}

PosteriorResult posterior(const Eigen::MatrixXd& j, const Eigen::MatrixXd& gamma_x,
                          const Eigen::VectorXd& noise_variance, const Eigen::VectorXd& y, CovarianceMode mode) {
  return posterior_impl(j, gamma_x, noise_variance, y, mode);
}

namespace {

template <typename Prior>
PosteriorResult projected_impl(const ProjectionOperator& p, const Eigen::MatrixXd& j, const Prior& gamma_x,
                               const Eigen::VectorXd& noise_variance, const Eigen::VectorXd& y, CovarianceMode mode) {
  if (p.p.rows() != j.rows()) throw ContractError("projection dimension does not match the data length");
  auto out = posterior_impl(Eigen::MatrixXd(p.p * j), gamma_x, noise_variance, Eigen::VectorXd(p.p * y), mode);
  out.data_rank = p.rank;
  return out;
}

}  // namespace

PosteriorResult projected_posterior(const ProjectionOperator& p, const Eigen::MatrixXd& j,
                                    const Eigen::SparseMatrix<double>& gamma_x, const Eigen::VectorXd& noise_variance,
                                    const Eigen::VectorXd& y, CovarianceMode mode) {
  return projected_impl(p, j, gamma_x, noise_variance, y, mode);
}

PosteriorResult projected_posterior(const ProjectionOperator& p, const Eigen::MatrixXd& j,
                                    const Eigen::MatrixXd& gamma_x, const Eigen::VectorXd& noise_variance,
                                    const Eigen::VectorXd& y, CovarianceMode mode) {
  return projected_impl(p, j, gamma_x, noise_variance, y, mode);
}

double covariance_gap(const Eigen::MatrixXd& gamma_post, const Eigen::MatrixXd& gamma_post_projected) {
  if (gamma_post.rows() != gamma_post_projected.rows() || gamma_post.cols() != gamma_post_projected.cols()) {
    throw ContractError("posterior covariances differ in shape");
  }
  Eigen::MatrixXd diff = gamma_post_projected - gamma_post;
  diff = 0.5 * (diff + diff.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(diff, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericalError("eigensolver failed on the covariance gap");
  return eig.eigenvalues()[0];
}

double l2_error(std::span<const double> estimate, std::span<const double> truth, std::span<const std::uint8_t> mask) {
  if (estimate.size() != truth.size() || (!mask.empty() && mask.size() != truth.size())) {
    throw ContractError("l2_error: shape mismatch");
  }
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    const double d = estimate[i] - truth[i];
    num += d * d;
    den += truth[i] * truth[i];
  }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

double l2_error(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth) {
  return l2_error(std::span<const double>(estimate.data(), static_cast<std::size_t>(estimate.size())),
                  std::span<const double>(truth.data(), static_cast<std::size_t>(truth.size())));
}

}  // namespace dotmarg
