#include "cpf/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cpf/errors.hpp"

namespace cpf::stats {
namespace {

double sigmoid(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

// log(1 + e^eta) without overflow.
double log1pexp(double eta) {
  return eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

void check_labels(std::span<const int> labels, Eigen::Index rows) {
  if (static_cast<Eigen::Index>(labels.size()) != rows) {
    throw UsageError("label count " + std::to_string(labels.size()) + " does not match " +
                     std::to_string(rows) + " design rows");
  }
  for (int y : labels) {
    if (y != 0 && y != 1) throw UsageError("labels must be 0 or 1");
  }
}

// Reports the first column that adds no rank to the columns before it.
void check_full_rank(const Eigen::MatrixXd& x) {
  const Eigen::Index cols = x.cols();
  for (Eigen::Index j = 0; j < cols; ++j) {
    const auto col = x.col(j);
    if (j > 0 && col.maxCoeff() == col.minCoeff()) {
      throw FitError("design column " + std::to_string(j) + " is constant", static_cast<int>(j));
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x.leftCols(j + 1));
    qr.setThreshold(1e-10);
    if (qr.rank() < j + 1) {
      throw FitError("design column " + std::to_string(j) +
                         " is linearly dependent on earlier columns",
                     static_cast<int>(j));
    }
  }
}

Eigen::MatrixXd information(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = x * beta;
  Eigen::VectorXd w(eta.size());
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double p = sigmoid(eta(i));
    w(i) = p * (1.0 - p);
  }
  Eigen::MatrixXd h = x.transpose() * w.asDiagonal() * x;
  return 0.5 * (h + h.transpose());
}

}  // namespace

double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw DomainError("percentile of an empty sample");
  if (!(p >= 0.0 && p <= 100.0)) throw DomainError("percentile rank must lie in [0, 100]");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double rank = static_cast<double>(v.size() - 1) * p / 100.0;
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = static_cast<std::size_t>(std::ceil(rank));
  return v[lo] + (rank - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double pearson(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw UsageError("pearson: series lengths differ");
  if (xs.size() < 2) throw UsageError("pearson: need at least two points");
  auto constant = [](std::span<const double> s) {
    auto [lo, hi] = std::minmax_element(s.begin(), s.end());
    return *lo == *hi;
  };
  if (constant(xs) || constant(ys)) {
    throw UndefinedCorrelation("pearson: a series has zero variance");
  }
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double dx = xs[i] - mx;
    const double dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

double log_likelihood(const Eigen::MatrixXd& design, std::span<const int> labels,
                      const Eigen::VectorXd& beta) {
  check_labels(labels, design.rows());
  const Eigen::VectorXd eta = design * beta;
  double ll = 0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    ll += labels[static_cast<std::size_t>(i)] * eta(i) - log1pexp(eta(i));
  }
  return ll;
}

Eigen::VectorXd predict_probabilities(const Eigen::MatrixXd& design, const Eigen::VectorXd& beta) {
  Eigen::VectorXd p = design * beta;
  for (Eigen::Index i = 0; i < p.size(); ++i) p(i) = sigmoid(p(i));
  return p;
}

Eigen::VectorXd log_likelihood_gradient(const Eigen::MatrixXd& design,
                                        std::span<const int> labels,
                                        const Eigen::VectorXd& beta) {
  check_labels(labels, design.rows());
  Eigen::VectorXd resid = -predict_probabilities(design, beta);
  for (Eigen::Index i = 0; i < resid.size(); ++i) resid(i) += labels[static_cast<std::size_t>(i)];
  return design.transpose() * resid;
}

LogisticModel fit_logistic(const Eigen::MatrixXd& design, std::span<const int> labels,
                           const LogisticOptions& options) {
  check_labels(labels, design.rows());
  if (design.rows() <= design.cols()) {
    throw DomainError("logistic fit needs more rows (" + std::to_string(design.rows()) +
                      ") than coefficients (" + std::to_string(design.cols()) + ")");
  }
  check_full_rank(design);

  LogisticModel model;
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(design.cols());
  double ll = log_likelihood(design, labels, beta);

  for (int it = 1; it <= options.max_iterations; ++it) {
    model.iterations = it;
    const Eigen::MatrixXd h = information(design, beta);
    const Eigen::VectorXd g = log_likelihood_gradient(design, labels, beta);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-14) {
      // Fitted probabilities have saturated: the data are (quasi-)separable.
      break;
    }
    Eigen::VectorXd step = ldlt.solve(g);
    if (!step.allFinite()) break;

    // Step halving keeps the likelihood monotone.
    double ll_new = log_likelihood(design, labels, beta + step);
    for (int halvings = 0; halvings < 30 && !(ll_new >= ll - 1e-12 * (1.0 + std::abs(ll)));
         ++halvings) {
      step *= 0.5;
      ll_new = log_likelihood(design, labels, beta + step);
    }
    beta += step;
    ll = ll_new;
    if (step.cwiseAbs().maxCoeff() < options.tolerance) {
      model.converged = true;
      break;
    }
  }

  model.coefficients = beta;
  const Eigen::MatrixXd h = information(design, beta);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(h);
  if (model.converged && ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    Eigen::MatrixXd cov = ldlt.solve(Eigen::MatrixXd::Identity(h.rows(), h.cols()));
    model.covariance = 0.5 * (cov + cov.transpose());
  } else {
    model.converged = false;
    Eigen::MatrixXd cov = h.completeOrthogonalDecomposition().pseudoInverse();
    model.covariance = 0.5 * (cov + cov.transpose());
  }
  return model;
}

std::vector<double> standard_errors(const LogisticModel& model) {
  std::vector<double> se(static_cast<std::size_t>(model.coefficients.size()));
  for (Eigen::Index j = 0; j < model.coefficients.size(); ++j) {
    const double var = model.covariance(j, j);
    se[static_cast<std::size_t>(j)] = var > 0 ? std::sqrt(var) : 0.0;
  }
  return se;
}

double two_sided_normal_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

std::vector<double> wald_p_values(const LogisticModel& model) {
  if (!model.converged) throw InferenceError("Wald inference requires a converged model");
  const auto se = standard_errors(model);
  std::vector<double> p(se.size());
  for (std::size_t j = 0; j < se.size(); ++j) {
    if (!(se[j] > 0) || !std::isfinite(se[j])) {
      throw InferenceError("coefficient " + std::to_string(j) + " has zero standard error");
    }
    p[j] = two_sided_normal_p(model.coefficients(static_cast<Eigen::Index>(j)) / se[j]);
  }
  return p;
}

double auc_roc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw UsageError("auc: scores and labels differ in length");
  std::size_t pos = 0;
  for (int y : labels) {
    if (y != 0 && y != 1) throw UsageError("labels must be 0 or 1");
    pos += static_cast<std::size_t>(y);
  }
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw DomainError("auc requires both positive and negative labels");
  for (double s : scores) {
    if (std::isnan(s)) throw DomainError("auc: NaN score");
  }

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of midranks of the positives; midranks are multiples of 0.5 so the
  // sum is exact in double for any realistic n.
  double rank_sum = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j + 1);
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1) rank_sum += midrank;
    }
    i = j + 1;
  }
  const double p = static_cast<double>(pos);
  const double u = rank_sum - p * (p + 1) / 2.0;
  return u / (p * static_cast<double>(neg));
}

}  // namespace cpf::stats
