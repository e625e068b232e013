#pragma once

#include <Eigen/Dense>

#include "spegarch/types.hpp"

namespace spegarch {

enum class Contiguity { Rook, Queen };

// Adjacency of an rows x cols lattice with nodes numbered row-major starting
// at node 1 = top-left. Rook links horizontal and vertical neighbours, Queen
// adds the diagonals. Binary weights, optionally row-standardized.
WeightMatrix grid_contiguity(int rows, int cols, Contiguity kind, bool standardize = true);

// Symmetric nonnegative dissimilarity table with zero diagonal.
class DistanceMatrix {
 public:
  explicit DistanceMatrix(Eigen::MatrixXd d);
  int n() const { return static_cast<int>(d_.rows()); }
  const Eigen::MatrixXd& matrix() const { return d_; }

 private:
  Eigen::MatrixXd d_;
};

// Directed k-nearest-neighbour weights: w_ij = 1/k when j is among the k
// smallest distances from i, ties broken towards the lower node index. Every
// row sums to exactly 1; the matrix is in general asymmetric.
WeightMatrix knn_weights(const DistanceMatrix& d, int k);

// Pairwise Euclidean distance between node series.
DistanceMatrix euclidean_distance(const Panel& panel);

// sqrt(2 (1 - corr)) on Pearson correlations of node series. Rejects constant
// series, where the correlation is undefined.
DistanceMatrix correlation_distance(const Panel& panel);

// Distance between fitted autoregressions of the squared log series: each
// node's ln y_t^2 is regressed on its own first ar_order lags and the
// coefficient vectors are compared in Euclidean norm. Requires nonzero data
// and t_len >= 10 * ar_order.
DistanceMatrix piccolo_distance(const Panel& panel, int ar_order);

}  // namespace spegarch
