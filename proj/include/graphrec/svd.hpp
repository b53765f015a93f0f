#pragma once

#include <cstdint>

#include "graphrec/sparse.hpp"

namespace graphrec {

struct TruncatedSvd {
  Vector singular_values;  // descending
  Matrix left_vectors;     // rows x rank
  Matrix right_vectors;    // cols x rank, orthonormal columns
};

struct RandomizedSvdOptions {
  std::size_t oversampling = 8;
  std::size_t power_iterations = 2;
  std::uint64_t seed = 0;
};

/// Randomized range finder with subspace (power) iterations, followed by an
/// exact SVD of the projected matrix. Deterministic for a fixed seed.
TruncatedSvd randomized_svd(const SparseMatrix& a, std::size_t rank, const RandomizedSvdOptions& options = {});

}  // namespace graphrec
