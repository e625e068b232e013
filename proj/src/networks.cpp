#include "spegarch/networks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "spegarch/errors.hpp"

namespace spegarch {

WeightMatrix grid_contiguity(int rows, int cols, Contiguity kind, bool standardize) {
  if (rows < 1 || cols < 1 || rows * cols < 2)
    throw ValidationError("lattice must contain at least two nodes");
  const int n = rows * cols;
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const int i = r * cols + c;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          if (kind == Contiguity::Rook && dr != 0 && dc != 0) continue;
          const int rr = r + dr, cc = c + dc;
          if (rr < 0 || rr >= rows || cc < 0 || cc >= cols) continue;
          w(i, rr * cols + cc) = 1.0;
        }
      }
    }
  }
  WeightMatrix binary(std::move(w), false);
  return standardize ? row_standardize(binary) : binary;
}

DistanceMatrix::DistanceMatrix(Eigen::MatrixXd d) : d_(std::move(d)) {
  if (d_.rows() != d_.cols() || d_.rows() < 2)
    throw ValidationError("distance matrix must be square with at least two nodes");
  if (!d_.allFinite())
    throw ValidationError("distance matrix contains non-finite entries");
  if ((d_.array() < 0.0).any())
    throw ValidationError("distances must be nonnegative");
  if (d_.diagonal().cwiseAbs().maxCoeff() != 0.0)
    throw ValidationError("distance matrix must have a zero diagonal");
  if ((d_ - d_.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw ValidationError("distance matrix must be symmetric");
}

WeightMatrix knn_weights(const DistanceMatrix& d, int k) {
  const int n = d.n();
  if (k < 1 || k > n - 1)
    throw ValidationError("k must be between 1 and n-1");
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) {
    order.clear();
    for (int j = 0; j < n; ++j)
      if (j != i) order.push_back(j);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      const double da = d.matrix()(i, a), db = d.matrix()(i, b);
      if (da != db) return da < db;
      return a < b;
    });
    for (int m = 0; m < k; ++m) w(i, order[m]) = 1.0 / k;
  }
  return WeightMatrix(std::move(w), true);
}

DistanceMatrix euclidean_distance(const Panel& panel) {
  const int n = panel.n();
  if (n < 2) throw ValidationError("need at least two nodes to build distances");
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      d(i, j) = d(j, i) = (panel.values().row(i) - panel.values().row(j)).norm();
  return DistanceMatrix(std::move(d));
}

DistanceMatrix correlation_distance(const Panel& panel) {
  const int n = panel.n();
  const int t = panel.t_len();
  if (n < 2) throw ValidationError("need at least two nodes to build distances");
  if (t < 3) throw ValidationError("need at least three time points for correlations");
  Eigen::MatrixXd centered = panel.values();
  Eigen::VectorXd norms(n);
  for (int i = 0; i < n; ++i) {
    centered.row(i).array() -= centered.row(i).mean();
    norms(i) = centered.row(i).norm();
    if (norms(i) == 0.0)
      throw ValidationError("node " + std::to_string(i + 1) +
                            " is constant; correlation distance undefined");
  }
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double r = centered.row(i).dot(centered.row(j)) / (norms(i) * norms(j));
      r = std::clamp(r, -1.0, 1.0);
      d(i, j) = d(j, i) = std::sqrt(2.0 * (1.0 - r));
    }
  }
  return DistanceMatrix(std::move(d));
}

DistanceMatrix piccolo_distance(const Panel& panel, int ar_order) {
  const int n = panel.n();
  const int t = panel.t_len();
  if (ar_order < 1) throw ValidationError("autoregression order must be positive");
  if (t < 10 * ar_order)
    throw ValidationError("need t_len >= 10 * ar_order observations per node");
  if ((panel.values().array() == 0.0).any())
    throw ValidationError("panel contains zeros; squared log series undefined");

  const Eigen::MatrixXd logsq = panel.values().array().square().log().matrix();
  const int rows = t - ar_order;
  Eigen::MatrixXd beta(n, ar_order);
  Eigen::MatrixXd x(rows, ar_order + 1);
  Eigen::VectorXd y(rows);
  for (int i = 0; i < n; ++i) {
    for (int r = 0; r < rows; ++r) {
      y(r) = logsq(i, ar_order + r);
      x(r, 0) = 1.0;
      for (int l = 1; l <= ar_order; ++l) x(r, l) = logsq(i, ar_order + r - l);
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < ar_order + 1)
      throw NumericalError("autoregression design singular for node " + std::to_string(i + 1));
    const Eigen::VectorXd coef = qr.solve(y);
    beta.row(i) = coef.tail(ar_order).transpose();
  }
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      d(i, j) = d(j, i) = (beta.row(i) - beta.row(j)).norm();
  return DistanceMatrix(std::move(d));
}

}  // namespace spegarch
