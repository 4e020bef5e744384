#pragma once

#include <Eigen/Sparse>

#include <functional>
#include <iosfwd>
#include <vector>

#include "mfd/pointcloud.hpp"
#include "mfd/stencil.hpp"

namespace mfd {

template <int Dim>
using ScalarField = std::function<double(const Vec<Dim>&)>;

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, long>;

struct SparseSystem {
  SparseMatrix matrix;
  Eigen::VectorXd rhs;
  std::vector<long> rowPermutation;  // row k of the system is interior point rowPermutation[k]
};

struct SolveStats {
  long iterations = 0;
  double finalResidual = 0.0;
  bool converged = false;
  long restarts = 0;
};

// Stable lexicographic order of the interior points; perm[k] is the old index of new point k.
template <int Dim>
std::vector<long> reindex(const PointCloud<Dim>& cloud);

long bandwidth(const SparseMatrix& m);

// Row i: (sum beta) u_i - sum_{interior j} beta u_j = f(x_i) + sum_{boundary j} beta g(xbar_j).
template <int Dim>
SparseSystem assemble(const PointCloud<Dim>& cloud, const std::vector<Stencil<Dim>>& stencils,
                      const ScalarField<Dim>& f, const ScalarField<Dim>& g,
                      const std::vector<long>& rowPermutation = {});

// Maps a solution of a permuted system back to interior-point order.
Eigen::VectorXd unpermute(const SparseSystem& s, const Eigen::VectorXd& x);

struct BicgstabOptions {
  double tol = 1e-10;
  long maxIter = 0;  // 0 means 20 N
  bool jacobi = false;
};

std::pair<Eigen::VectorXd, SolveStats> bicgstab(const SparseSystem& s, const BicgstabOptions& o = {},
                                                const Eigen::VectorXd& x0 = Eigen::VectorXd());

Eigen::VectorXd dense_solve(const SparseSystem& s);

struct DmpReport {
  bool ok = true;
  double worstViolation = 0.0;  // max interior value minus max used boundary value
  double interiorMax = 0.0;
  double boundaryMax = 0.0;
};

template <int Dim>
DmpReport dmp_check(const PointCloud<Dim>& cloud, const std::vector<Stencil<Dim>>& stencils,
                    const Eigen::VectorXd& solution, const ScalarField<Dim>& g, double tol = 1e-8);

template <int Dim>
double max_norm_error(const Eigen::VectorXd& solution, const ScalarField<Dim>& exact, const PointCloud<Dim>& cloud);

void write_matrix_market(std::ostream& os, const SparseMatrix& m);

}  // namespace mfd
