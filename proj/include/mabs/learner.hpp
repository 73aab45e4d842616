#pragma once

#include <Eigen/Dense>

#include "mabs/pool.hpp"

namespace mabs {

struct LabeledData {
  Eigen::MatrixXd X;  // n x m, one row per sample
  Eigen::VectorXd y;
};

// Reveals every sample of the pool (in id order) into a dense matrix. Takes
// the pool by value on purpose: bulk reveal burns the one-shot read of every
// sample, so it only ever happens on a discardable copy.
LabeledData materialize(SourcePool pool);

struct RidgeModel {
  Eigen::VectorXd weights;  // in standardized feature space
  double intercept = 0.0;   // mean of training y
  Eigen::VectorXd feature_means;
  Eigen::VectorXd feature_scales;  // 1.0 where the column had zero variance
  double lambda = 0.0;
};

// Standardizes columns (population std), centers y, solves
// (Z'Z + lambda I) w = Z'y by Cholesky. With lambda == 0 and fewer rows than
// columns (or a singular system) a tiny diagonal bump keeps it solvable.
// Non-finite inputs, empty X, and negative lambda throw std::invalid_argument.
RidgeModel fit_ridge(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double lambda);

// Applies the stored standardization, then the linear map. Zero rows give an
// empty vector; a column-count mismatch throws.
Eigen::VectorXd predict(const RidgeModel& model, const Eigen::MatrixXd& X);

// Coefficient of determination 1 - SS_res/SS_tot, unbounded below. Throws
// std::invalid_argument on length mismatch, fewer than 2 entries, or constant
// y_true (zero denominator). Non-finite predictions propagate to the score.
double r2_score(const Eigen::VectorXd& y_true, const Eigen::VectorXd& y_pred);

}  // namespace mabs
