#include "mabs/learner.hpp"

#include <cmath>
#include <stdexcept>

namespace mabs {

LabeledData materialize(SourcePool pool) {
  const std::vector<SampleId> ids = pool.ids();
  const auto n = static_cast<Eigen::Index>(ids.size());
  const auto m = static_cast<Eigen::Index>(pool.feature_dim());
  LabeledData out;
  out.X.resize(n, m);
  out.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Revealed r = pool.reveal(ids[i]);
    out.X.row(i) = Eigen::Map<const Eigen::VectorXd>(r.features.data(), m);
    out.y[i] = r.label;
  }
  return out;
}

RidgeModel fit_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda) {
  const Eigen::Index n = X.rows();
  const Eigen::Index m = X.cols();
  if (n < 1) throw std::invalid_argument("fit_ridge: no training rows");
  if (y.size() != n) throw std::invalid_argument("fit_ridge: X/y row mismatch");
  if (!(lambda >= 0) || !std::isfinite(lambda))
    throw std::invalid_argument("fit_ridge: lambda must be finite and >= 0");
  if (!X.allFinite() || !y.allFinite())
    throw std::invalid_argument("fit_ridge: non-finite training data");

  RidgeModel model;
  model.lambda = lambda;
  model.feature_means = X.colwise().mean();
  Eigen::MatrixXd Z = X.rowwise() - model.feature_means.transpose();
  // Population standard deviation; zero-variance columns keep scale 1 so the
  // standardized column is all zeros and picks up no weight.
  model.feature_scales =
      (Z.array().square().colwise().sum() / static_cast<double>(n)).sqrt();
  for (Eigen::Index j = 0; j < m; ++j)
    if (!(model.feature_scales[j] > 0)) model.feature_scales[j] = 1.0;
  Z.array().rowwise() /= model.feature_scales.transpose().array();

  model.intercept = y.mean();
  const Eigen::VectorXd yc = y.array() - model.intercept;

  Eigen::MatrixXd gram = Z.transpose() * Z;
  gram.diagonal().array() += lambda;
  // An unpenalized underdetermined system (or an exactly collinear one)
  // needs a tiny diagonal bump to stay decomposable.
  if (lambda == 0.0 && n < m) gram.diagonal().array() += 1e-8;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  if (llt.info() != Eigen::Success) {
    gram.diagonal().array() += 1e-8;
    llt.compute(gram);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("fit_ridge: gram matrix is not positive definite");
  }
  model.weights = llt.solve(Z.transpose() * yc);
  return model;
}

Eigen::VectorXd predict(const RidgeModel& model, const Eigen::MatrixXd& X) {
  if (X.cols() != model.weights.size())
    throw std::invalid_argument("predict: feature dimension mismatch");
  if (X.rows() == 0) return Eigen::VectorXd(0);
  const Eigen::MatrixXd Z =
      (X.rowwise() - model.feature_means.transpose()).array().rowwise() /
      model.feature_scales.transpose().array();
  return (Z * model.weights).array() + model.intercept;
}

double r2_score(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred) {
  if (y_true.size() != y_pred.size()) throw std::invalid_argument("r2_score: length mismatch");
  if (y_true.size() < 2) throw std::invalid_argument("r2_score: need at least 2 points");
  const double mean = y_true.mean();
  const double ss_tot = (y_true.array() - mean).square().sum();
  if (!(ss_tot > 0)) throw std::invalid_argument("r2_score: constant y_true, score undefined");
  const double ss_res = (y_true - y_pred).squaredNorm();
  return 1.0 - ss_res / ss_tot;
}

}  // namespace mabs
