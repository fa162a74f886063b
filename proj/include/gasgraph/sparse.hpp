#pragma once

#include <cstddef>
#include <vector>

namespace gasgraph {

/// Constant compressed-sparse-row matrix. Used for graph propagation and
/// pooling operators, which never carry gradients themselves.
struct SparseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> col_idx;
  std::vector<double> values;

  std::size_t nnz() const { return values.size(); }

  /// Dense row-major copy; intended for tests and small matrices.
  std::vector<double> to_dense() const;

  struct Triplet {
    std::size_t row;
    std::size_t col;
    double value;
  };
  /// Builds CSR from triplets; duplicates are summed.
  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> triplets);
};

}  // namespace gasgraph
