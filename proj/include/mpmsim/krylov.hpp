#pragma once

#include <span>
#include <vector>

#include "mpmsim/linear_system.hpp"

namespace mpmsim {

enum class Preconditioner { None, Jacobi };

struct GMRESConfig {
  double rel_tol = 1e-8;
  double abs_tol = 1e-12;
  int restart = 30;
  int max_iters = 1000;
  Preconditioner precondition = Preconditioner::Jacobi;

  void validate() const;
};

struct SolveStats {
  int iterations = 0;
  int restarts = 0;
  double final_relative_residual = 0.0;
  bool converged = false;
  double wall_time = 0.0;
  /// Least-squares residual estimate after every Arnoldi step, with the
  /// restart cycle each one belongs to.
  std::vector<double> residual_history;
  std::vector<int> residual_cycle;
};

/// Reduction and halo contract the solver runs over. The serial and
/// distributed paths differ only in these two calls.
class KrylovComm {
 public:
  virtual ~KrylovComm() = default;
  virtual double global_sum(double local) = 0;
  /// `columns` is an extended vector whose owned entries are current; fill
  /// in the halo entries.
  virtual void refresh_halo(std::span<double> columns) = 0;
};

class SerialComm final : public KrylovComm {
 public:
  double global_sum(double local) override { return local; }
  void refresh_halo(std::span<double>) override {}
};

struct GMRESResult {
  std::vector<double> x;
  SolveStats stats;
};

/// Restarted GMRES(m): Arnoldi with modified Gram-Schmidt, Givens-rotation
/// least squares, optional right Jacobi preconditioning. Convergence is
/// only declared on the recomputed residual ||b - A x||.
/// Throws SolverDiverged once `max_iters` Arnoldi steps are spent.
GMRESResult gmres_solve(const LinearSystem& sys, std::span<const double> x0, const GMRESConfig& cfg,
                        KrylovComm& comm);

GMRESResult gmres_solve(const LinearSystem& sys, std::span<const double> x0, const GMRESConfig& cfg);

/// z_i = r_i / a_ii. Throws ZeroDiagonal.
std::vector<double> jacobi_precondition(const LinearSystem& sys, std::span<const double> r);

}  // namespace mpmsim
