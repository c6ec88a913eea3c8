#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "dotmarg/geometry.hpp"
#include "dotmarg/projector.hpp"

namespace dotmarg {

inline constexpr double kDefaultPriorSigma = 0.003;  // mm^-1
inline constexpr double kDefaultPriorCorrelation = 3.0;  // mm

// Squared-exponential covariance, entries at or below (0.01 sigma)^2 set to zero.
struct PriorModel {
  Eigen::SparseMatrix<double> covariance;  // n x n, full symmetric storage
  double sigma = kDefaultPriorSigma;
  double correlation_length = kDefaultPriorCorrelation;
  std::vector<Vec3> coordinates;

  Eigen::Index size() const { return covariance.rows(); }
  // Principal sub-block for the listed positions (e.g. ROI or RONI within the FOV).
  PriorModel block(std::span<const std::size_t> positions) const;
  // Distance beyond which every entry is zero: d * sqrt(2 ln 10^4).
  double truncation_radius() const;
};

double truncation_radius(double correlation_length);

PriorModel prior_covariance(std::span<const Vec3> coordinates, double sigma = kDefaultPriorSigma,
                            double correlation_length = kDefaultPriorCorrelation);

enum class CovarianceMode { kNone, kDiagonal, kFull };

inline constexpr Eigen::Index kMaxDenseCovariance = 4000;

struct PosteriorResult {
  Eigen::VectorXd mean;
  std::optional<Eigen::MatrixXd> covariance;
  std::optional<Eigen::VectorXd> variance;
  double residual_norm = 0.0;   // ||S z - y|| of the 2m x 2m solve
  Eigen::Index data_rank = 0;   // rank of the (projected) data space
  double reciprocal_condition = 0.0;
};

// mean = G S^{-1} y, G = Gamma_x J^T, S = J G + Gamma_e; Gamma_x is never inverted.
PosteriorResult posterior(const Eigen::MatrixXd& j, const Eigen::SparseMatrix<double>& gamma_x,
                          const Eigen::VectorXd& noise_variance, const Eigen::VectorXd& y,
                          CovarianceMode mode = CovarianceMode::kNone);
PosteriorResult posterior(const Eigen::MatrixXd& j, const Eigen::MatrixXd& gamma_x,
                          const Eigen::VectorXd& noise_variance, const Eigen::VectorXd& y,
                          CovarianceMode mode = CovarianceMode::kNone);

// Same estimator applied to (P J, P y).
PosteriorResult projected_posterior(const ProjectionOperator& p, const Eigen::MatrixXd& j,
                                    const Eigen::SparseMatrix<double>& gamma_x, const Eigen::VectorXd& noise_variance,
                                    const Eigen::VectorXd& y, CovarianceMode mode = CovarianceMode::kNone);
PosteriorResult projected_posterior(const ProjectionOperator& p, const Eigen::MatrixXd& j,
                                    const Eigen::MatrixXd& gamma_x, const Eigen::VectorXd& noise_variance,
                                    const Eigen::VectorXd& y, CovarianceMode mode = CovarianceMode::kNone);

// Smallest eigenvalue of Gamma_post,P - Gamma_post.
double covariance_gap(const Eigen::MatrixXd& gamma_post, const Eigen::MatrixXd& gamma_post_projected);

// ||estimate - truth|| / ||truth|| over the mask (absolute norm when truth is zero).
double l2_error(std::span<const double> estimate, std::span<const double> truth,
                std::span<const std::uint8_t> mask = {});
double l2_error(const Eigen::VectorXd& estimate, const Eigen::VectorXd& truth);

}  // namespace dotmarg
