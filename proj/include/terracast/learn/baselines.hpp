#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "terracast/learn/train.hpp"

namespace terracast::learn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline double r2_score(std::span<const double> y_true, std::span<const double> y_pred) {
  if (y_true.size() != y_pred.size() || y_true.size() < 2)
    throw std::invalid_argument("r2_score: need two or more paired values");
  double mean = 0.0;
  for (double v : y_true) mean += v;
  mean /= static_cast<double>(y_true.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    ss_res += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
    ss_tot += (y_true[i] - mean) * (y_true[i] - mean);
  }
  if (ss_tot == 0.0) throw std::invalid_argument("r2_score: target has zero variance");
  return 1.0 - ss_res / ss_tot;
}

struct LinearModel {
  Vector coef;
  double intercept = 0.0;

  Vector predict(const Matrix& X) const { return (X * coef).array() + intercept; }
};

namespace detail {

// Ridge on centered data; intercept left unpenalized. alpha = 0 gives the minimum-norm OLS.
inline LinearModel centered_solve(const Matrix& X, const Vector& y, double alpha) {
  if (X.rows() != y.size() || X.rows() == 0) throw std::invalid_argument("linear fit: shape mismatch");
  const Eigen::RowVectorXd xm = X.colwise().mean();
  const double ym = y.mean();
  const Matrix Xc = X.rowwise() - xm;
  const Vector yc = y.array() - ym;
  Matrix A = Xc.transpose() * Xc;
  A.diagonal().array() += alpha;
  const Vector rhs = Xc.transpose() * yc;
  LinearModel m;
  Eigen::LDLT<Matrix> ldlt(A);
  if (alpha > 0 && ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    m.coef = ldlt.solve(rhs);
  } else {
    // Normal equations through a rank-revealing factorization (pseudo-inverse when singular).
    m.coef = A.completeOrthogonalDecomposition().solve(rhs);
  }
  m.intercept = ym - xm.dot(m.coef);
  return m;
}

}  // namespace detail

inline LinearModel linreg_fit(const Matrix& X, const Vector& y) { return detail::centered_solve(X, y, 0.0); }

inline LinearModel ridge_fit(const Matrix& X, const Vector& y, double alpha) {
  if (alpha < 0) throw std::invalid_argument("ridge_fit: alpha must be non-negative");
  return detail::centered_solve(X, y, alpha);
}

struct SgdConfig {
  int epochs = 50;
  double lr0 = 0.01;
  double l2 = 1e-4;
  std::uint64_t seed = 0;
};

// Squared-loss linear regression by per-sample SGD with a 1/sqrt(t) step decay.
inline LinearModel sgd_regression_fit(const Matrix& X, const Vector& y, const SgdConfig& cfg = {}) {
  const auto n = static_cast<std::size_t>(X.rows());
  LinearModel m;
  m.coef = Vector::Zero(X.cols());
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 g(rng::mix(cfg.seed, 0x5d6));
  double t = 1.0;
  for (int e = 0; e < cfg.epochs; ++e) {
    detail::fisher_yates(order, g);
    for (auto i : order) {
      const double lr = cfg.lr0 / std::sqrt(t);
      const auto row = X.row(static_cast<Eigen::Index>(i));
      const double err = row.dot(m.coef) + m.intercept - y(static_cast<Eigen::Index>(i));
      m.coef = (1 - lr * cfg.l2) * m.coef - lr * err * row.transpose();
      m.intercept -= lr * err;
      t += 1.0;
    }
  }
  return m;
}

// Linear SVM, one-vs-rest, trained by Pegasos-style hinge-loss subgradient descent.
struct LinearSvm {
  Matrix w;  // classes x features (a single row for two classes)
  Vector b;

  Vector scores(const Eigen::Ref<const Eigen::RowVectorXd>& x) const { return w * x.transpose() + b; }
  int predict_one(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    const Vector s = scores(x);
    if (w.rows() == 1) return s(0) >= 0 ? 1 : 0;
    Eigen::Index k;
    s.maxCoeff(&k);
    return static_cast<int>(k);
  }
  std::vector<int> predict(const Matrix& X) const {
    std::vector<int> out(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) out[static_cast<std::size_t>(i)] = predict_one(X.row(i));
    return out;
  }
};

// Mean hinge loss of one binary machine over +/-1 targets.
inline double hinge_loss(const Vector& w, double b, const Matrix& X, std::span<const int> ypm) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    s += std::max(0.0, 1.0 - ypm[static_cast<std::size_t>(i)] * (X.row(i).dot(w) + b));
  return s / static_cast<double>(X.rows());
}

struct SvmConfig {
  double lambda = 1e-4;
  int epochs = 50;
  std::uint64_t seed = 0;
};

inline LinearSvm linear_svm_fit(const Matrix& X, std::span<const int> y, int n_classes, const SvmConfig& cfg = {}) {
  if (static_cast<std::size_t>(X.rows()) != y.size()) throw std::invalid_argument("svm: shape mismatch");
  const int machines = n_classes == 2 ? 1 : n_classes;
  LinearSvm m;
  m.w = Matrix::Zero(machines, X.cols());
  m.b = Vector::Zero(machines);
  const auto n = static_cast<std::size_t>(X.rows());
  for (int c = 0; c < machines; ++c) {
    const int positive = n_classes == 2 ? 1 : c;
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::mt19937_64 g(rng::mix(cfg.seed, 0x5f3 + static_cast<std::uint64_t>(c)));
    // The bias rides along as the weight of a constant feature.
    Vector w = Vector::Zero(X.cols() + 1);
    Eigen::RowVectorXd row(X.cols() + 1);
    double t = 1.0;
    for (int e = 0; e < cfg.epochs; ++e) {
      detail::fisher_yates(order, g);
      for (auto i : order) {
        const double eta = 1.0 / (cfg.lambda * (t + 100.0));
        const double yi = y[i] == positive ? 1.0 : -1.0;
        row << X.row(static_cast<Eigen::Index>(i)), 1.0;
        const double margin = yi * row.dot(w);
        w *= (1.0 - eta * cfg.lambda);
        if (margin < 1.0) w += eta * yi * row.transpose();
        t += 1.0;
      }
    }
    m.w.row(c) = w.head(X.cols()).transpose();
    m.b(c) = w(X.cols());
  }
  return m;
}

inline std::vector<Example> feature_examples(const Matrix& X, std::span<const int> y) {
  std::vector<Example> out;
  std::vector<double> row(static_cast<std::size_t>(X.cols()));
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) row[static_cast<std::size_t>(j)] = X(i, j);
    out.push_back(make_feature_example(row, y[static_cast<std::size_t>(i)]));
  }
  return out;
}

struct ClassifierBaselines {
  Network<double> logistic;
  LinearSvm svm;
  Network<double> mlp;
};

struct BaselineConfig {
  int epochs = 200;
  std::size_t batch_size = 32;
  double lr = 1e-3;
  std::uint64_t seed = 0;
};

// Logistic regression, linear SVM and a one-hidden-layer MLP on the same features.
inline ClassifierBaselines classify_baselines(const Matrix& X, std::span<const int> y, int n_classes,
                                              const BaselineConfig& cfg = {}) {
  const auto ex = feature_examples(X, y);
  TrainConfig tc;
  tc.adam.lr = cfg.lr;
  tc.epochs = cfg.epochs;
  tc.batch_size = cfg.batch_size;
  tc.weighting = ClassWeighting::uniform;
  tc.seed = cfg.seed;
  tc.val_fraction = 0.0;
  const auto nf = static_cast<std::size_t>(X.cols());
  const auto nc = static_cast<std::size_t>(n_classes);
  auto logistic = train<double>(logistic_spec(nf, nc), ex, tc).network;
  auto mlp = train<double>(mlp_spec(nf, nc), ex, tc).network;
  SvmConfig sc;
  sc.seed = cfg.seed;
  return {std::move(logistic), linear_svm_fit(X, y, n_classes, sc), std::move(mlp)};
}

inline std::vector<int> predict_features(const Network<double>& net, const Matrix& X) {
  const std::vector<int> dummy(static_cast<std::size_t>(X.rows()), 0);
  const auto ex = feature_examples(X, dummy);
  return predict(net, ex);
}

// MLP regressor: same architecture with one linear output, squared loss, Adam.
struct MlpRegressor {
  Network<double> net;

  Vector predict(const Matrix& X) {
    Vector out(X.rows());
    std::vector<double> in(static_cast<std::size_t>(X.cols()));
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      for (Eigen::Index j = 0; j < X.cols(); ++j) in[static_cast<std::size_t>(j)] = X(i, j);
      out(i) = net.forward(in)[0];
    }
    return out;
  }
};

inline MlpRegressor mlp_regression_fit(const Matrix& X, const Vector& y, const BaselineConfig& cfg = {}) {
  MlpRegressor m{Network<double>(mlp_spec(static_cast<std::size_t>(X.cols()), 1))};
  m.net.init(rng::mix(cfg.seed, 0x31f));
  Adam<double> opt(AdamConfig{cfg.lr});
  const auto n = static_cast<std::size_t>(X.rows());
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 g(rng::mix(cfg.seed, 0x320));
  std::vector<double> in(static_cast<std::size_t>(X.cols()));
  for (int e = 0; e < cfg.epochs; ++e) {
    detail::fisher_yates(order, g);
    for (std::size_t b = 0; b < n; b += cfg.batch_size) {
      const std::size_t end = std::min(n, b + cfg.batch_size);
      m.net.zero_grad();
      for (std::size_t k = b; k < end; ++k) {
        const auto i = static_cast<Eigen::Index>(order[k]);
        for (Eigen::Index j = 0; j < X.cols(); ++j) in[static_cast<std::size_t>(j)] = X(i, j);
        const double err = m.net.forward(in)[0] - y(i);
        const double d = err;  // d/dz of 0.5 * err^2
        m.net.backward(std::span<const double>(&d, 1));
      }
      opt.step(m.net, 1.0 / static_cast<double>(end - b));
    }
  }
  return m;
}

}  // namespace terracast::learn
