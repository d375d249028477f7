#include "mpmsim/linear_system.hpp"

#include <string>

#include "mpmsim/errors.hpp"

namespace mpmsim {

double LinearSystem::entry(std::size_t row, std::size_t col) const noexcept {
  for (auto p = row_offsets[row]; p < row_offsets[row + 1]; ++p) {
    if (col_indices[p] == col) return values[p];
  }
  return 0.0;
}

double LinearSystem::diagonal(std::size_t row) const noexcept { return entry(row, diagonal_columns[row]); }

void apply_operator(const LinearSystem& sys, std::span<const double> x, std::span<double> y) {
  if (x.size() != sys.n_cols || y.size() != sys.n_rows) {
    fail(ErrorCode::DimMismatch, "matvec expects x of " + std::to_string(sys.n_cols) + " and y of " +
                                     std::to_string(sys.n_rows) + " entries");
  }
  const auto* offsets = sys.row_offsets.data();
  const auto* cols = sys.col_indices.data();
  const auto* vals = sys.values.data();
  for (std::size_t r = 0; r < sys.n_rows; ++r) {
    double acc = 0.0;
    for (auto p = offsets[r]; p < offsets[r + 1]; ++p) acc += vals[p] * x[cols[p]];
    y[r] = acc;
  }
}

std::vector<double> apply_operator(const LinearSystem& sys, std::span<const double> x) {
  std::vector<double> y(sys.n_rows);
  apply_operator(sys, x, y);
  return y;
}

LinearSystem dense_system(std::span<const double> row_major, std::size_t n, std::span<const double> rhs) {
  if (row_major.size() != n * n || rhs.size() != n) {
    fail(ErrorCode::DimMismatch, "dense system needs an n*n matrix and n-vector");
  }
  LinearSystem sys;
  sys.n_rows = n;
  sys.n_cols = n;
  sys.row_offsets.reserve(n + 1);
  sys.row_offsets.push_back(0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      const double a = row_major[r * n + c];
      if (a != 0.0) {
        sys.col_indices.push_back(c);
        sys.values.push_back(a);
      }
    }
    sys.row_offsets.push_back(sys.values.size());
    sys.diagonal_columns.push_back(r);
  }
  sys.rhs.assign(rhs.begin(), rhs.end());
  return sys;
}

}  // namespace mpmsim
