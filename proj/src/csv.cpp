#include "spegarch/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>
#include <vector>

#include "spegarch/errors.hpp"

namespace spegarch {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trimmed(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

bool parse_double(const std::string& field, double& out) {
  const std::string t = trimmed(field);
  if (t.empty()) return false;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), out);
  return res.ec == std::errc() && res.ptr == t.data() + t.size();
}

// Reads a numeric table with an optional non-numeric header row.
Eigen::MatrixXd read_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trimmed(line).empty()) continue;
    const auto fields = split_line(line);
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (!parse_double(fields[j], row[j])) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (rows.empty() && line_no == 1) {
        width = fields.size();  // header row
        continue;
      }
      throw IoError(path + ": non-numeric value on line " + std::to_string(line_no));
    }
    if (width == 0) width = row.size();
    if (row.size() != width)
      throw IoError(path + ": line " + std::to_string(line_no) + " has " +
                    std::to_string(row.size()) + " fields, expected " + std::to_string(width));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw IoError(path + ": no data rows");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < width; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

void write_table(const Eigen::MatrixXd& by_row, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  const Eigen::Index cols = by_row.cols();
  for (Eigen::Index j = 0; j < cols; ++j) {
    out << "node_" << (j + 1);
    out << (j + 1 < cols ? ',' : '\n');
  }
  for (Eigen::Index i = 0; i < by_row.rows(); ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      out << format_double(by_row(i, j));
      out << (j + 1 < cols ? ',' : '\n');
    }
  }
  if (!out) throw IoError("write to " + path + " failed");
}

}  // namespace

std::string format_double(double v) {
  if (!std::isfinite(v)) throw ValidationError("refusing to serialize a non-finite value");
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_panel_csv(const Panel& panel, const std::string& path) {
  write_table(panel.values().transpose(), path);
}

Panel read_panel_csv(const std::string& path, PanelKind kind) {
  const Eigen::MatrixXd table = read_table(path);
  return Panel(table.transpose(), kind);
}

void write_matrix_csv(const Eigen::MatrixXd& m, const std::string& path) {
  write_table(m, path);
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  return read_table(path);
}

void write_weights_csv(const WeightMatrix& w, const std::string& path) {
  write_table(w.matrix(), path);
}

WeightMatrix read_weights_csv(const std::string& path) {
  Eigen::MatrixXd m = read_table(path);
  if (m.rows() != m.cols())
    throw IoError(path + ": weight matrix must be square, got " + std::to_string(m.rows()) +
                  " x " + std::to_string(m.cols()));
  bool standardized = true;
  for (Eigen::Index i = 0; i < m.rows() && standardized; ++i) {
    const double s = m.row(i).sum();
    if (s != 0.0 && std::abs(s - 1.0) > 1e-12) standardized = false;
  }
  return WeightMatrix(std::move(m), standardized);
}

void write_edge_list_csv(const WeightMatrix& w, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "i,j,weight\n";
  const auto& m = w.matrix();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (m(i, j) != 0.0)
        out << (i + 1) << ',' << (j + 1) << ',' << format_double(m(i, j)) << '\n';
  if (!out) throw IoError("write to " + path + " failed");
}

}  // namespace spegarch
