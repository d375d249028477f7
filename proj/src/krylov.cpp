#include "mpmsim/krylov.hpp"

#include <chrono>
#include <cmath>
#include <sstream>
#include <string>

#include "mpmsim/errors.hpp"

namespace mpmsim {

namespace {

constexpr double kBreakdownTol = 1e-14;

double local_dot(std::span<const double> a, std::span<const double> b) noexcept {
  double acc = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) acc += a[n] * b[n];
  return acc;
}

std::vector<double> inverse_diagonal(const LinearSystem& sys) {
  std::vector<double> inv(sys.n_rows);
  for (std::size_t r = 0; r < sys.n_rows; ++r) {
    const double d = sys.diagonal(r);
    if (d == 0.0) fail(ErrorCode::ZeroDiagonal, "zero diagonal in row " + std::to_string(r));
    inv[r] = 1.0 / d;
  }
  return inv;
}

// Owned vector -> column space -> A * (.)
class DistributedOperator {
 public:
  DistributedOperator(const LinearSystem& sys, KrylovComm& comm)
      : sys_(sys), comm_(comm), columns_(sys.n_cols, 0.0) {}

  void apply(std::span<const double> v, std::span<double> out) {
    for (std::size_t r = 0; r < sys_.n_rows; ++r) columns_[sys_.diagonal_columns[r]] = v[r];
    comm_.refresh_halo(columns_);
    apply_operator(sys_, columns_, out);
  }

 private:
  const LinearSystem& sys_;
  KrylovComm& comm_;
  std::vector<double> columns_;
};

}  // namespace

void GMRESConfig::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) fail(ErrorCode::InvalidArgument, "GMRES tolerances must be > 0");
  if (restart < 1) fail(ErrorCode::InvalidArgument, "GMRES restart must be >= 1");
  if (max_iters < 1) fail(ErrorCode::InvalidArgument, "GMRES max_iters must be >= 1");
}

std::vector<double> jacobi_precondition(const LinearSystem& sys, std::span<const double> r) {
  if (r.size() != sys.n_rows) fail(ErrorCode::DimMismatch, "jacobi_precondition: vector length mismatch");
  auto inv = inverse_diagonal(sys);
  std::vector<double> z(r.size());
  for (std::size_t n = 0; n < r.size(); ++n) z[n] = r[n] * inv[n];
  return z;
}

GMRESResult gmres_solve(const LinearSystem& sys, std::span<const double> x0, const GMRESConfig& cfg) {
  SerialComm comm;
  return gmres_solve(sys, x0, cfg, comm);
}

GMRESResult gmres_solve(const LinearSystem& sys, std::span<const double> x0, const GMRESConfig& cfg,
                        KrylovComm& comm) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::size_t n = sys.n_rows;
  if (x0.size() != n || sys.rhs.size() != n || sys.diagonal_columns.size() != n) {
    fail(ErrorCode::DimMismatch, "gmres_solve: x0/rhs must match the owned row count");
  }

  const auto m = static_cast<std::size_t>(cfg.restart);
  DistributedOperator op(sys, comm);
  std::vector<double> inv_diag;
  if (cfg.precondition == Preconditioner::Jacobi) inv_diag = inverse_diagonal(sys);

  auto norm = [&](std::span<const double> v) { return std::sqrt(comm.global_sum(local_dot(v, v))); };

  GMRESResult result;
  auto& x = result.x;
  auto& stats = result.stats;
  x.assign(x0.begin(), x0.end());

  const double bnorm = norm(sys.rhs);
  const double target = std::max(cfg.rel_tol * bnorm, cfg.abs_tol);
  const double breakdown = kBreakdownTol * bnorm;
  auto relative = [&](double rnorm) { return bnorm > 0.0 ? rnorm / bnorm : rnorm; };
  auto converged = [&](double rnorm) { return rnorm <= cfg.rel_tol * bnorm || rnorm <= cfg.abs_tol; };

  std::vector<double> r(n), w(n), z(n);
  auto true_residual = [&] {
    op.apply(x, r);
    for (std::size_t q = 0; q < n; ++q) r[q] = sys.rhs[q] - r[q];
    return norm(r);
  };

  std::vector<std::vector<double>> basis(m + 1, std::vector<double>(n));
  std::vector<double> hess((m + 1) * m);  // column-major, leading dim m+1
  auto H = [&](std::size_t row, std::size_t col) -> double& { return hess[col * (m + 1) + row]; };
  std::vector<double> cs(m), sn(m), g(m + 1), y(m);

  double rnorm = true_residual();
  int cycle = 0;
  while (!converged(rnorm)) {
    if (stats.iterations >= cfg.max_iters) {
      stats.final_relative_residual = relative(rnorm);
      std::ostringstream msg;
      msg << "GMRES did not reach tolerance in " << cfg.max_iters
          << " iterations (relative residual " << stats.final_relative_residual << ")";
      fail(ErrorCode::SolverDiverged, msg.str());
    }

    for (std::size_t q = 0; q < n; ++q) basis[0][q] = r[q] / rnorm;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = rnorm;

    std::size_t k = 0;  // Arnoldi steps taken this cycle
    while (k < m && stats.iterations < cfg.max_iters) {
      const std::size_t j = k;
      const auto& vj = basis[j];
      if (inv_diag.empty()) {
        op.apply(vj, w);
      } else {
        for (std::size_t q = 0; q < n; ++q) z[q] = vj[q] * inv_diag[q];
        op.apply(z, w);
      }
      for (std::size_t i = 0; i <= j; ++i) {
        const double hij = comm.global_sum(local_dot(w, basis[i]));
        H(i, j) = hij;
        const auto& vi = basis[i];
        for (std::size_t q = 0; q < n; ++q) w[q] -= hij * vi[q];
      }
      const double h_next = norm(w);
      H(j + 1, j) = h_next;

      for (std::size_t i = 0; i < j; ++i) {
        const double a = H(i, j);
        const double b = H(i + 1, j);
        H(i, j) = cs[i] * a + sn[i] * b;
        H(i + 1, j) = -sn[i] * a + cs[i] * b;
      }
      const double a = H(j, j);
      const double b = H(j + 1, j);
      const double den = std::hypot(a, b);
      cs[j] = den > 0.0 ? a / den : 1.0;
      sn[j] = den > 0.0 ? b / den : 0.0;
      H(j, j) = den;
      H(j + 1, j) = 0.0;
      g[j + 1] = -sn[j] * g[j];
      g[j] = cs[j] * g[j];

      ++k;
      ++stats.iterations;
      stats.residual_history.push_back(relative(std::abs(g[j + 1])));
      stats.residual_cycle.push_back(cycle);

      if (std::abs(g[j + 1]) <= target || h_next <= breakdown) break;
      auto& v_next = basis[j + 1];
      for (std::size_t q = 0; q < n; ++q) v_next[q] = w[q] / h_next;
    }

    // Back substitution on the rotated k x k triangle.
    for (std::size_t i = k; i-- > 0;) {
      double acc = g[i];
      for (std::size_t c = i + 1; c < k; ++c) acc -= H(i, c) * y[c];
      y[i] = H(i, i) != 0.0 ? acc / H(i, i) : 0.0;
    }
    std::fill(w.begin(), w.end(), 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      const auto& vi = basis[i];
      for (std::size_t q = 0; q < n; ++q) w[q] += y[i] * vi[q];
    }
    if (!inv_diag.empty()) {
      for (std::size_t q = 0; q < n; ++q) w[q] *= inv_diag[q];
    }
    for (std::size_t q = 0; q < n; ++q) x[q] += w[q];

    rnorm = true_residual();
    ++cycle;
    if (!converged(rnorm)) ++stats.restarts;
  }

  stats.converged = true;
  stats.final_relative_residual = relative(rnorm);
  stats.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace mpmsim
