#include "spegarch/types.hpp"

#include <cmath>

#include "spegarch/errors.hpp"

namespace spegarch {

std::vector<std::string> validate_params(const ModelParams& p) {
  std::vector<std::string> violations;
  auto check_finite = [&](double v, const char* name) {
    if (!std::isfinite(v)) violations.push_back(std::string(name) + " is not finite");
  };
  check_finite(p.alpha, "alpha");
  check_finite(p.rho0, "rho0");
  check_finite(p.rho1, "rho1");
  check_finite(p.lambda0, "lambda0");
  check_finite(p.lambda1, "lambda1");
  check_finite(p.theta, "theta");
  check_finite(p.xi, "xi");
  if (std::isfinite(p.xi) && !(p.xi > 0.0)) violations.push_back("xi must be positive");
  if (std::isfinite(p.theta) && std::isfinite(p.xi) && !(std::abs(p.theta) < p.xi))
    violations.push_back("|theta| must be below xi");
  return violations;
}

std::string to_string(PanelKind kind) {
  switch (kind) {
    case PanelKind::Returns: return "returns";
    case PanelKind::Innovations: return "innovations";
    case PanelKind::Volatility: return "volatility";
    case PanelKind::LogVolatility: return "log_volatility";
    case PanelKind::Residuals: return "residuals";
  }
  return "unknown";
}

Panel::Panel(Eigen::MatrixXd values, PanelKind kind)
    : values_(std::move(values)), kind_(kind) {
  if (values_.rows() < 1 || values_.cols() < 1)
    throw ValidationError("panel must have at least one node and one time point");
  if (!values_.allFinite())
    throw ValidationError("panel contains non-finite entries");
  if (kind_ == PanelKind::Volatility && (values_.array() <= 0.0).any())
    throw ValidationError("volatility panel must be strictly positive");
}

WeightMatrix::WeightMatrix(Eigen::MatrixXd w, bool row_standardized)
    : w_(std::move(w)), row_standardized_(row_standardized) {
  if (w_.rows() != w_.cols())
    throw ValidationError("weight matrix must be square");
  if (w_.rows() < 1)
    throw ValidationError("weight matrix must be nonempty");
  if (!w_.allFinite())
    throw ValidationError("weight matrix contains non-finite entries");
  if ((w_.array() < 0.0).any())
    throw ValidationError("weight matrix entries must be nonnegative");
  if (w_.diagonal().cwiseAbs().maxCoeff() != 0.0)
    throw ValidationError("weight matrix must have a zero diagonal");
  if (row_standardized_) {
    for (Eigen::Index i = 0; i < w_.rows(); ++i) {
      const double s = w_.row(i).sum();
      if (s != 0.0 && std::abs(s - 1.0) > 1e-12)
        throw ValidationError("row " + std::to_string(i + 1) +
                              " sums to " + std::to_string(s) +
                              ", expected 1 for a row-standardized matrix");
    }
  }
}

WeightMatrix row_standardize(const WeightMatrix& w) {
  Eigen::MatrixXd m = w.matrix();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double s = m.row(i).sum();
    if (s > 0.0) m.row(i) /= s;
  }
  return WeightMatrix(std::move(m), true);
}

InitialConditions default_initial(int n) {
  InitialConditions init;
  init.y0 = Eigen::VectorXd::Constant(n, 1e-4);
  init.eps0 = Eigen::VectorXd::Constant(n, 1e-4);
  return init;
}

void validate_initial(const InitialConditions& init, int n) {
  if (init.y0.size() != n || init.eps0.size() != n)
    throw ValidationError("initial condition vectors must have length " + std::to_string(n));
  if (!init.y0.allFinite() || !init.eps0.allFinite())
    throw ValidationError("initial conditions contain non-finite entries");
  if ((init.eps0.array() == 0.0).any())
    throw ValidationError("initial innovations must be nonzero");
}

}  // namespace spegarch
