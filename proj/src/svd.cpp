#include "graphrec/svd.hpp"

#include <algorithm>
#include <random>

#include <Eigen/QR>
#include <Eigen/SVD>

#include "graphrec/error.hpp"
#include "graphrec/rng.hpp"

namespace graphrec {

namespace {

Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& y) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(y);
  return qr.householderQ() * Eigen::MatrixXd::Identity(y.rows(), y.cols());
}

}  // namespace

TruncatedSvd randomized_svd(const SparseMatrix& a, std::size_t rank, const RandomizedSvdOptions& options) {
  const auto smaller = static_cast<std::size_t>(std::min(a.rows(), a.cols()));
  if (rank == 0 || rank > smaller) {
    throw UsageError("SVD rank " + std::to_string(rank) + " must lie in [1, " + std::to_string(smaller) + "]");
  }
  const auto sketch = static_cast<Eigen::Index>(std::min(smaller, rank + options.oversampling));

  Rng rng(options.seed);
  std::normal_distribution<double> gaussian(0.0, 1.0);
  Matrix omega(a.cols(), sketch);
  for (Eigen::Index k = 0; k < omega.size(); ++k) omega.data()[k] = gaussian(rng);

  Eigen::MatrixXd q = orthonormal_basis(a.multiply(omega));
  for (std::size_t it = 0; it < options.power_iterations; ++it) {
    Eigen::MatrixXd z = orthonormal_basis(a.transpose_multiply(Matrix(q)));
    q = orthonormal_basis(a.multiply(Matrix(z)));
  }

  // B^T = A^T Q is cols x sketch; its thin SVD gives B = U_b S V^T with V = left factor.
  Eigen::MatrixXd bt = a.transpose_multiply(Matrix(q));
  Eigen::BDCSVD<Eigen::MatrixXd> svd(bt, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto k = static_cast<Eigen::Index>(rank);
  TruncatedSvd out;
  out.singular_values = svd.singularValues().head(k);
  out.right_vectors = svd.matrixU().leftCols(k);
  out.left_vectors = q * svd.matrixV().leftCols(k);
  return out;
}

}  // namespace graphrec
