#pragma once

#include <Eigen/Dense>
#include <string>

#include "spegarch/types.hpp"

namespace spegarch {

// CSV conventions used throughout:
//   panels:   header "node_1,...,node_n", one row per time point
//   matrices: same header, one row per node (row i = weights out of node i)
// Numbers are written with shortest round-trip formatting, so write followed
// by read reproduces every entry bit for bit.

std::string format_double(double v);

void write_panel_csv(const Panel& panel, const std::string& path);
Panel read_panel_csv(const std::string& path, PanelKind kind);

void write_matrix_csv(const Eigen::MatrixXd& m, const std::string& path);
Eigen::MatrixXd read_matrix_csv(const std::string& path);

void write_weights_csv(const WeightMatrix& w, const std::string& path);

// Reads a dense weight CSV; the row-standardized flag is inferred from the
// entries (every nonzero row summing to 1 within 1e-12).
WeightMatrix read_weights_csv(const std::string& path);

// Sparse view "i,j,weight" with 1-based node indices, nonzero entries only,
// row-major order.
void write_edge_list_csv(const WeightMatrix& w, const std::string& path);

}  // namespace spegarch
