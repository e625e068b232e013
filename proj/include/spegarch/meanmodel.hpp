#pragma once

#include "spegarch/types.hpp"

namespace spegarch {

// First-stage dynamic panel mean filter
//   Y_t = rho W1 Y_t + gamma Y_{t-1} + lambda W2 Y_{t-1} + u_t.
// rho is profiled on a grid over (-0.995, 0.995): each candidate solves
// (gamma, lambda) by least squares, scored by the Gaussian likelihood with
// the ln|det(I - rho W1)| correction per time point, and the grid argmax is
// then sharpened by golden-section search. Residuals span time points 2..T.
struct SdpdFit {
  double rho = 0.0;
  double gamma = 0.0;
  double lambda = 0.0;
  Panel residuals;
  double profile_loglik = 0.0;
};

SdpdFit fit_sdpd(const Panel& y, const WeightMatrix& w1, const WeightMatrix& w2);

// Profile log-likelihood of rho with (gamma, lambda) concentrated out; the
// value fit_sdpd maximizes.
double sdpd_profile_loglik(const Panel& y, const WeightMatrix& w1,
                           const WeightMatrix& w2, double rho);

}  // namespace spegarch
