#include "gaussot/types.hpp"

#include "gaussot/linalg.hpp"

namespace gaussot {

Gaussian::Gaussian(Vector mean_in, Matrix cov_in, double mass_in)
    : mean(std::move(mean_in)), mass(mass_in) {
  if (!mean.allFinite()) throw InvalidInput("Gaussian: non-finite mean");
  if (!(mass > 0.0)) throw InvalidInput("Gaussian: mass must be positive");
  if (cov_in.rows() != mean.size() || cov_in.cols() != mean.size())
    throw InvalidInput("Gaussian: covariance shape does not match mean");
  cov = linalg::symmetrized(cov_in);
}

}  // namespace gaussot
