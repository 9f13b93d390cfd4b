/*
 * Copyright 2026 The psivar Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "psivar/posterior.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace psivar {

namespace {

constexpr double kJitterBase = 1e-10;
constexpr int kJitterDoublings = 6;

void symmetrize(MatrixXd& a) { a = ((a + a.transpose()) * 0.5).eval(); }

}  // namespace

Eigen::LLT<MatrixXd> cholesky_with_jitter(const MatrixXd& matrix) {
  const int dim = static_cast<int>(matrix.rows());
  Eigen::LLT<MatrixXd> llt(matrix);
  if (llt.info() == Eigen::Success) return llt;
  double jitter = kJitterBase * matrix.trace() / dim;
  if (!(jitter > 0.0)) jitter = kJitterBase;
  for (int attempt = 0; attempt <= kJitterDoublings; ++attempt) {
    MatrixXd bumped = matrix;
    bumped.diagonal().array() += jitter;
    llt.compute(bumped);
    if (llt.info() == Eigen::Success) return llt;
    jitter *= 2.0;
  }
  const double min_eig = Eigen::SelfAdjointEigenSolver<MatrixXd>(matrix, Eigen::EigenvaluesOnly)
                             .eigenvalues()
                             .minCoeff();
  throw NumericalError("Cholesky factorization failed after jitter escalation; smallest "
                       "eigenvalue approximately " +
                       std::to_string(min_eig));
}

MatrixXd WeightPosterior::sample(int k, std::mt19937_64& rng) const {
  require(k >= 1, "sample count must be at least 1");
  const int d = dim();
  require(cov.rows() == d && cov.cols() == d, "covariance shape must match mean length");
  MatrixXd root;
  Eigen::LLT<MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) {
    root = llt.matrixL();
  } else {
    // semidefinite covariance (e.g. fully contracted posterior)
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success)
      throw NumericalError("eigendecomposition of the posterior covariance failed");
    root = eig.eigenvectors() *
           eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  MatrixXd draws(k, d);
  for (int s = 0; s < k; ++s) {
    VectorXd z(d);
    for (int i = 0; i < d; ++i) z[i] = gauss(rng);
    draws.row(s) = (mean + root * z).transpose();
  }
  return draws;
}

PosteriorAccumulator::PosteriorAccumulator(int dim, double noise_variance, AccumulatorMode mode,
                                           VectorXd prior_mean)
    : mode_(mode), dim_(dim), sigma2_(noise_variance), mu_(std::move(prior_mean)) {
  require(dim_ > 0, "accumulator dimension must be positive");
  if (!(sigma2_ > 0.0)) throw DataError("noise variance must be positive");
  if (mu_.size() == 0) mu_ = VectorXd::Zero(dim_);
  require(mu_.size() == dim_, "prior mean length must equal dimension");
  p_ = VectorXd::Zero(dim_);
  state_ = MatrixXd::Identity(dim_, dim_);
}

void PosteriorAccumulator::accumulate(const Eigen::Ref<const MatrixXd>& phi,
                                      const Eigen::Ref<const VectorXd>& y) {
  if (phi.rows() == 0) return;  // empty batch is a no-op
  require(phi.cols() == dim_, "batch feature dimension must equal accumulator dimension");
  require(phi.rows() == y.size(), "feature and target row counts must match");
  if (!phi.allFinite() || !y.allFinite())
    throw DataError("batch contains non-finite values");

  const VectorXd residual = y - phi * mu_;
  p_.noalias() += phi.transpose() * residual / sigma2_;
  rss_ += residual.squaredNorm();
  count_ += phi.rows();

  if (mode_ == AccumulatorMode::kPrecision) {
    state_.noalias() += phi.transpose() * phi / sigma2_;
    symmetrize(state_);
  } else {
    MatrixXd gram = phi * state_ * phi.transpose();
    gram.diagonal().array() += sigma2_;
    symmetrize(gram);
    const MatrixXd cross = state_ * phi.transpose();  // D x m
    state_.noalias() -= cross * cholesky_with_jitter(gram).solve(cross.transpose());
    symmetrize(state_);
  }
}

void PosteriorAccumulator::merge(const PosteriorAccumulator& other) {
  require(mode_ == AccumulatorMode::kPrecision && other.mode_ == AccumulatorMode::kPrecision,
          "only precision-mode accumulators are mergeable");
  require(other.dim_ == dim_, "accumulator dimensions must match");
  require(other.sigma2_ == sigma2_, "noise variances must match");
  require((other.mu_ - mu_).lpNorm<Eigen::Infinity>() == 0.0, "prior means must match");
  state_ += other.state_ - MatrixXd::Identity(dim_, dim_);
  p_ += other.p_;
  rss_ += other.rss_;
  count_ += other.count_;
}

WeightPosterior PosteriorAccumulator::finalize() const {
  WeightPosterior posterior;
  if (mode_ == AccumulatorMode::kPrecision) {
    const auto llt = cholesky_with_jitter(state_);
    posterior.cov = llt.solve(MatrixXd::Identity(dim_, dim_));
  } else {
    posterior.cov = state_;
  }
  symmetrize(posterior.cov);
  posterior.mean = mu_ + posterior.cov * p_;
  return posterior;
}

double PosteriorAccumulator::log_evidence() const {
  require(mode_ == AccumulatorMode::kPrecision, "evidence requires precision mode");
  const auto llt = cholesky_with_jitter(state_);
  const double quad = rss_ / sigma2_ - p_.dot(llt.solve(p_));
  double log_det = 0.0;
  const MatrixXd l = llt.matrixL();
  for (int i = 0; i < dim_; ++i) log_det += 2.0 * std::log(l(i, i));
  const double n = static_cast<double>(count_);
  return -0.5 * (quad + log_det + n * std::log(sigma2_) + n * std::log(2.0 * std::numbers::pi));
}

GpPrediction predict(const WeightPosterior& posterior,
                     const Eigen::Ref<const MatrixXd>& phi_star) {
  require(phi_star.cols() == posterior.dim(),
          "test feature dimension must equal posterior dimension");
  GpPrediction out;
  out.mean = phi_star * posterior.mean;
  out.cov = phi_star * posterior.cov * phi_star.transpose();
  symmetrize(out.cov);
  return out;
}

GpPrediction dual_gp_posterior(const Eigen::Ref<const MatrixXd>& k_train,
                               const Eigen::Ref<const MatrixXd>& k_cross,
                               const Eigen::Ref<const MatrixXd>& k_test,
                               const Eigen::Ref<const VectorXd>& y, double noise_variance,
                               std::optional<VectorXd> prior_mean_train,
                               std::optional<VectorXd> prior_mean_test) {
  const Eigen::Index n = k_train.rows();
  require(k_train.cols() == n, "training kernel must be square");
  require(k_cross.cols() == n, "cross kernel column count must equal n");
  require(k_test.rows() == k_cross.rows() && k_test.cols() == k_cross.rows(),
          "test kernel must be square and match the cross kernel");
  require(y.size() == n, "target length must equal n");
  if (!(noise_variance > 0.0)) throw DataError("noise variance must be positive");

  const VectorXd m = prior_mean_train ? *prior_mean_train : VectorXd::Zero(n);
  const VectorXd ms = prior_mean_test ? *prior_mean_test : VectorXd::Zero(k_cross.rows());
  require(m.size() == n, "training prior mean length must equal n");
  require(ms.size() == k_cross.rows(), "test prior mean length must equal n*");

  MatrixXd gram = k_train;
  gram.diagonal().array() += noise_variance;
  symmetrize(gram);
  const auto llt = cholesky_with_jitter(gram);

  GpPrediction out;
  out.mean = ms + k_cross * llt.solve(y - m);
  out.cov = k_test - k_cross * llt.solve(k_cross.transpose());
  symmetrize(out.cov);
  return out;
}

double estimate_noise_variance(const Eigen::Ref<const MatrixXd>& phi,
                               const Eigen::Ref<const VectorXd>& y) {
  if (phi.rows() == 0) throw DataError("cannot estimate noise variance from zero samples");
  require(phi.rows() == y.size(), "feature and target row counts must match");
  PosteriorAccumulator acc(static_cast<int>(phi.cols()), 1.0);
  acc.accumulate(phi, y);
  const VectorXd mean = acc.finalize().mean;
  const double mse = (y - phi * mean).squaredNorm() / static_cast<double>(y.size());
  return std::max(mse, 1e-8);
}

}  // namespace psivar
