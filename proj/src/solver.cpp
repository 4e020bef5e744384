#include "mfd/solver.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>

namespace mfd {

template <int Dim>
std::vector<long> reindex(const PointCloud<Dim>& cloud) {
  std::vector<long> perm(cloud.nInterior);
  std::iota(perm.begin(), perm.end(), 0L);
  std::stable_sort(perm.begin(), perm.end(), [&](long a, long b) {
    const auto& x = cloud.points[a];
    const auto& y = cloud.points[b];
    for (int k = 0; k < Dim; ++k) {
      if (x(k) < y(k)) return true;
      if (y(k) < x(k)) return false;
    }
    return false;
  });
  return perm;
}

long bandwidth(const SparseMatrix& m) {
  long bw = 0;
  for (long r = 0; r < m.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) bw = std::max(bw, std::abs(it.col() - r));
  return bw;
}

template <int Dim>
SparseSystem assemble(const PointCloud<Dim>& cloud, const std::vector<Stencil<Dim>>& stencils,
                      const ScalarField<Dim>& f, const ScalarField<Dim>& g, const std::vector<long>& rowPermutation) {
  const long n = cloud.nInterior;
  if (static_cast<long>(stencils.size()) != n) throw ContractViolation("assemble: one stencil per interior point");
  SparseSystem s;
  s.rowPermutation = rowPermutation;
  if (s.rowPermutation.empty()) {
    s.rowPermutation.resize(n);
    std::iota(s.rowPermutation.begin(), s.rowPermutation.end(), 0L);
  }
  if (static_cast<long>(s.rowPermutation.size()) != n) throw ContractViolation("assemble: bad permutation size");
  std::vector<long> position(n, -1);
  for (long k = 0; k < n; ++k) position[s.rowPermutation[k]] = k;

  std::vector<Eigen::Triplet<double, long>> triplets;
  s.rhs = Eigen::VectorXd::Zero(n);
  for (long k = 0; k < n; ++k) {
    const long i = s.rowPermutation[k];
    const auto& st = stencils[i];
    if (st.center != i) throw ContractViolation("assemble: missing stencil for point " + std::to_string(i));
    double diag = 0.0;
    double rhs = f(cloud.points[i]);
    for (std::size_t j = 0; j < st.size(); ++j) {
      const double beta = st.beta[j];
      diag += beta;
      const long nb = st.neighbors[j];
      if (!st.usesBoundary[j] && nb < n)
        triplets.emplace_back(k, position[nb], -beta);
      else
        rhs += beta * g(st.positions[j]);
    }
    triplets.emplace_back(k, k, diag);
    s.rhs(k) = rhs;
  }
  s.matrix.resize(n, n);
  s.matrix.setFromTriplets(triplets.begin(), triplets.end());
  s.matrix.makeCompressed();
  return s;
}

Eigen::VectorXd unpermute(const SparseSystem& s, const Eigen::VectorXd& x) {
  Eigen::VectorXd out(x.size());
  for (long k = 0; k < x.size(); ++k) out(s.rowPermutation[k]) = x(k);
  return out;
}

std::pair<Eigen::VectorXd, SolveStats> bicgstab(const SparseSystem& s, const BicgstabOptions& o,
                                                const Eigen::VectorXd& x0) {
  const SparseMatrix& a = s.matrix;
  const Eigen::VectorXd& b = s.rhs;
  const long n = b.size();
  const long maxIter = o.maxIter > 0 ? o.maxIter : 20 * n;
  SolveStats stats;
  Eigen::VectorXd x = x0.size() == n ? x0 : Eigen::VectorXd::Zero(n);
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    stats.converged = true;
    return {Eigen::VectorXd::Zero(n), stats};
  }
  Eigen::VectorXd dinv = Eigen::VectorXd::Ones(n);
  if (o.jacobi) dinv = a.diagonal().cwiseInverse();

  Eigen::VectorXd r = b - a * x, rhat = r, p = Eigen::VectorXd::Zero(n), v = p, ph, sh, sv, t;
  double rhoOld = 1.0, alpha = 1.0, omega = 1.0;
  int breakdowns = 0;
  auto restart = [&] {
    r = b - a * x;
    rhat = r;
    p.setZero();
    v.setZero();
    rhoOld = alpha = omega = 1.0;
    ++stats.restarts;
  };

  for (long it = 1; it <= maxIter; ++it) {
    stats.iterations = it;
    const double rho = rhat.dot(r);
    if (std::abs(rho) < 1e-30 * bnorm * bnorm) {
      if (++breakdowns >= 2) throw SolverBreakdown("BiCGSTAB breakdown: rho vanished twice in a row");
      restart();
      continue;
    }
    const double beta = (rho / rhoOld) * (alpha / omega);
    p = r + beta * (p - omega * v);
    ph = dinv.cwiseProduct(p);
    v = a * ph;
    const double rv = rhat.dot(v);
    if (rv == 0.0) {
      if (++breakdowns >= 2) throw SolverBreakdown("BiCGSTAB breakdown: rhat.v vanished twice in a row");
      restart();
      continue;
    }
    alpha = rho / rv;
    sv = r - alpha * v;
    bool done = false;
    if (sv.norm() <= o.tol * bnorm) {
      x += alpha * ph;
      done = true;
    } else {
      sh = dinv.cwiseProduct(sv);
      t = a * sh;
      const double tt = t.squaredNorm();
      omega = tt > 0.0 ? t.dot(sv) / tt : 0.0;
      x += alpha * ph + omega * sh;
      r = sv - omega * t;
      done = r.norm() <= o.tol * bnorm;
      if (!done && omega == 0.0) {
        if (++breakdowns >= 2) throw SolverBreakdown("BiCGSTAB breakdown: omega vanished twice in a row");
        restart();
        continue;
      }
    }
    breakdowns = 0;
    rhoOld = rho;
    if (done) {
      // trust only the recomputed residual
      if ((b - a * x).norm() <= o.tol * bnorm) {
        stats.converged = true;
        break;
      }
      restart();
    }
  }
  stats.finalResidual = (b - a * x).norm() / bnorm;
  stats.converged = stats.finalResidual <= o.tol;
  return {x, stats};
}

Eigen::VectorXd dense_solve(const SparseSystem& s) {
  return Eigen::MatrixXd(s.matrix).partialPivLu().solve(s.rhs);
}

template <int Dim>
DmpReport dmp_check(const PointCloud<Dim>& cloud, const std::vector<Stencil<Dim>>& stencils,
                    const Eigen::VectorXd& solution, const ScalarField<Dim>& g, double tol) {
  DmpReport r;
  r.boundaryMax = -std::numeric_limits<double>::infinity();
  bool negative = false;
  for (const auto& st : stencils)
    for (std::size_t j = 0; j < st.size(); ++j) {
      negative = negative || st.beta[j] < 0.0;
      if (st.usesBoundary[j] || st.neighbors[j] >= cloud.nInterior)
        r.boundaryMax = std::max(r.boundaryMax, g(st.positions[j]));
    }
  r.interiorMax = solution.size() ? solution.maxCoeff() : -std::numeric_limits<double>::infinity();
  r.worstViolation = r.interiorMax - r.boundaryMax;
  r.ok = !negative && r.worstViolation <= tol;
  return r;
}

template <int Dim>
double max_norm_error(const Eigen::VectorXd& solution, const ScalarField<Dim>& exact, const PointCloud<Dim>& cloud) {
  double e = 0.0;
  for (long i = 0; i < cloud.nInterior; ++i) e = std::max(e, std::abs(solution(i) - exact(cloud.points[i])));
  return e;
}

void write_matrix_market(std::ostream& os, const SparseMatrix& m) {
  os << "%%MatrixMarket matrix coordinate real general\n";
  os << m.rows() << ' ' << m.cols() << ' ' << m.nonZeros() << '\n';
  os << std::setprecision(17);
  for (long r = 0; r < m.outerSize(); ++r)
    for (SparseMatrix::InnerIterator it(m, r); it; ++it) os << r + 1 << ' ' << it.col() + 1 << ' ' << it.value() << '\n';
}

#define MFD_INSTANTIATE(D)                                                                                    \
  template std::vector<long> reindex<D>(const PointCloud<D>&);                                                \
  template SparseSystem assemble<D>(const PointCloud<D>&, const std::vector<Stencil<D>>&,                     \
                                    const ScalarField<D>&, const ScalarField<D>&, const std::vector<long>&);  \
  template DmpReport dmp_check<D>(const PointCloud<D>&, const std::vector<Stencil<D>>&,                       \
                                  const Eigen::VectorXd&, const ScalarField<D>&, double);                     \
  template double max_norm_error<D>(const Eigen::VectorXd&, const ScalarField<D>&, const PointCloud<D>&);

MFD_INSTANTIATE(2)
MFD_INSTANTIATE(3)

}  // namespace mfd
