#pragma once

#include <Eigen/QR>

#include "qualbound/linalg.hpp"
#include "qualbound/rng.hpp"

namespace qbtest {

using qualbound::Matrix;
using qualbound::RngStream;
using qualbound::Vector;

inline Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, RngStream& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.normal();
  return m;
}

inline Vector gaussian_vector(Eigen::Index n, RngStream& rng) {
  return gaussian_matrix(n, 1, rng).col(0);
}

// Well-conditioned random SPD matrix.
inline Matrix random_spd(Eigen::Index p, RngStream& rng) {
  const Matrix a = gaussian_matrix(p, p, rng);
  Matrix s = a * a.transpose() / static_cast<double>(p) +
             0.5 * Matrix::Identity(p, p);
  return 0.5 * (s + s.transpose());
}

// Haar-distributed orthogonal matrix.
inline Matrix random_orthonormal(Eigen::Index p, RngStream& rng) {
  const Matrix a = gaussian_matrix(p, p, rng);
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ() * Matrix::Identity(p, p);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < p; ++i)
    if (r(i, i) < 0) q.col(i) *= -1.0;
  return q;
}

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace qbtest
