#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mpmsim {

/// Compressed-row sparse matrix plus right-hand side for the rows a worker
/// owns. Columns index the worker's extended unknown vector (owned + halo),
/// so `n_cols` may exceed `n_rows`.
struct LinearSystem {
  std::size_t n_rows = 0;
  std::size_t n_cols = 0;
  std::vector<std::size_t> row_offsets;
  std::vector<std::size_t> col_indices;
  std::vector<double> values;
  std::vector<double> rhs;
  /// Column holding row r's own unknown.
  std::vector<std::size_t> diagonal_columns;

  std::size_t nnz() const noexcept { return values.size(); }
  double diagonal(std::size_t row) const noexcept;
  double entry(std::size_t row, std::size_t col) const noexcept;
};

/// y = A x. `x` spans the column space, `y` the row space.
void apply_operator(const LinearSystem& sys, std::span<const double> x, std::span<double> y);
std::vector<double> apply_operator(const LinearSystem& sys, std::span<const double> x);

/// Square system from a row-major dense matrix; zero entries are dropped.
LinearSystem dense_system(std::span<const double> row_major, std::size_t n, std::span<const double> rhs);

}  // namespace mpmsim
