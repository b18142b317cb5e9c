#pragma once

// Numerical kernel: percentile, Pearson correlation, logistic regression with
// Wald inference, and AUC-ROC. All functions are pure.

#include <span>
#include <vector>

#include <Eigen/Dense>

namespace cpf::stats {

/// Linear-interpolation percentile on rank (n-1)*p/100 of the sorted values.
/// Throws DomainError on empty input or p outside [0, 100].
double percentile(std::span<const double> values, double p);

/// Sample Pearson correlation. Throws UsageError on length mismatch or fewer
/// than two points, UndefinedCorrelation when either series has zero variance.
double pearson(std::span<const double> xs, std::span<const double> ys);

struct LogisticModel {
  Eigen::VectorXd coefficients;
  /// Inverse Fisher information at the final iterate.
  Eigen::MatrixXd covariance;
  int iterations = 0;
  bool converged = false;
};

struct LogisticOptions {
  int max_iterations = 100;
  double tolerance = 1e-8;  // on max |delta beta|
};

/// Maximum-likelihood logistic fit by iteratively reweighted least squares.
/// `design` is n x (k+1) with the intercept column included by the caller.
/// Labels must be 0/1. Returns converged=false (with the last iterate) when the
/// iteration budget is exhausted or the data are separable. Throws FitError
/// naming the offending column when the design is rank deficient, DomainError
/// when n <= k+1.
LogisticModel fit_logistic(const Eigen::MatrixXd& design, std::span<const int> labels,
                           const LogisticOptions& options = {});

double log_likelihood(const Eigen::MatrixXd& design, std::span<const int> labels,
                      const Eigen::VectorXd& beta);
/// Analytic score vector X^T (y - p).
Eigen::VectorXd log_likelihood_gradient(const Eigen::MatrixXd& design,
                                        std::span<const int> labels,
                                        const Eigen::VectorXd& beta);
/// Fitted probabilities sigma(X beta).
Eigen::VectorXd predict_probabilities(const Eigen::MatrixXd& design, const Eigen::VectorXd& beta);

/// Two-sided Wald p-values, one per coefficient. Throws InferenceError for a
/// non-converged model or a zero standard error.
std::vector<double> wald_p_values(const LogisticModel& model);
std::vector<double> standard_errors(const LogisticModel& model);

/// Two-sided standard-normal tail probability P(|Z| >= |z|).
double two_sided_normal_p(double z);

/// Mann-Whitney AUC with ties counted at half weight. Throws DomainError
/// unless both classes are present.
double auc_roc(std::span<const double> scores, std::span<const int> labels);

}  // namespace cpf::stats
