#include "mfd/lp.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace mfd {

namespace {

class Tableau {
 public:
  Tableau(const Eigen::MatrixXd& a, const Eigen::VectorXd& b)
      : m_(a.rows()), n_(a.cols()), t_(Eigen::MatrixXd::Zero(a.rows() + 1, a.cols() + a.rows() + 1)),
        basis_(a.rows()) {
    t_.block(1, 0, m_, n_) = a;
    t_.block(1, n_, m_, m_).setIdentity();
    t_.col(rhs()).tail(m_) = b;
    for (long i = 0; i < m_; ++i) basis_[i] = n_ + i;
  }

  long rhs() const { return n_ + m_; }
  double value(long row) const { return t_(row + 1, rhs()); }
  double entry(long row, long col) const { return t_(row + 1, col); }
  double objective() const { return -t_(0, rhs()); }
  const std::vector<long>& basis() const { return basis_; }

  // Reduced costs and objective for the cost vector c (length n + m).
  void price(const Eigen::VectorXd& c) {
    t_.row(0).setZero();
    t_.row(0).head(n_ + m_) = c.transpose();
    for (long i = 0; i < m_; ++i) {
      const double cb = c(basis_[i]);
      if (cb != 0.0) t_.row(0) -= cb * t_.row(i + 1);
    }
  }

  void pivot(long row, long col) {
    t_.row(row + 1) /= t_(row + 1, col);
    for (long i = 0; i <= m_; ++i) {
      if (i == row + 1) continue;
      const double f = t_(i, col);
      if (f != 0.0) t_.row(i) -= f * t_.row(row + 1);
    }
    basis_[row] = col;
  }

  // Bland's rule iterations over the first `allowed` columns. Returns false on a pivot budget
  // overrun or an unbounded direction.
  bool iterate(long allowed, const LpOptions& o, long& pivots, long budget) {
    std::vector<char> isBasic(n_ + m_, 0);
    for (long j : basis_) isBasic[j] = 1;
    while (true) {
      long enter = -1;
      for (long j = 0; j < allowed; ++j)
        if (!isBasic[j] && t_(0, j) < -o.pivotTol) {
          enter = j;
          break;
        }
      if (enter < 0) return true;
      long leave = -1;
      double best = std::numeric_limits<double>::infinity();
      for (long i = 0; i < m_; ++i) {
        const double aie = t_(i + 1, enter);
        if (aie <= o.pivotTol) continue;
        const double ratio = std::max(t_(i + 1, rhs()), 0.0) / aie;
        if (leave < 0 || ratio < best - 1e-15 * (1.0 + best) ||
            (std::abs(ratio - best) <= 1e-15 * (1.0 + best) && basis_[i] < basis_[leave])) {
          best = std::min(best, ratio);
          leave = i;
        }
      }
      if (leave < 0) return false;
      isBasic[basis_[leave]] = 0;
      isBasic[enter] = 1;
      pivot(leave, enter);
      if (++pivots > budget) return false;
    }
  }

 private:
  long m_, n_;
  Eigen::MatrixXd t_;
  std::vector<long> basis_;
};

}  // namespace

LpResult simplex_min_sum(const Eigen::MatrixXd& c, const Eigen::VectorXd& b, const LpOptions& o) {
  LpResult out;
  const long n = c.cols();
  out.weights = Eigen::VectorXd::Zero(n);

  // Row equilibration; zero rows must carry a zero right-hand side.
  std::vector<long> rows;
  Eigen::VectorXd scale(c.rows());
  const double bScaleRef = std::max(1.0, b.cwiseAbs().maxCoeff());
  for (long r = 0; r < c.rows(); ++r) {
    scale(r) = c.row(r).cwiseAbs().maxCoeff();
    if (scale(r) > 0.0) {
      rows.push_back(r);
    } else if (std::abs(b(r)) > o.lpTol * bScaleRef) {
      out.status = LpStatus::Infeasible;
      return out;
    }
  }
  const long m = static_cast<long>(rows.size());
  Eigen::MatrixXd a(m, n);
  Eigen::VectorXd bb(m);
  for (long i = 0; i < m; ++i) {
    a.row(i) = c.row(rows[i]) / scale(rows[i]);
    bb(i) = b(rows[i]) / scale(rows[i]);
  }
  const double bnorm = m > 0 ? bb.cwiseAbs().maxCoeff() : 0.0;
  if (bnorm == 0.0) {
    out.status = LpStatus::Optimal;
    return out;
  }
  bb /= bnorm;
  for (long i = 0; i < m; ++i)
    if (bb(i) < 0.0) {
      bb(i) = -bb(i);
      a.row(i) = -a.row(i);
    }

  Tableau t(a, bb);
  const long budget = o.maxPivots > 0 ? o.maxPivots : 50 * (m + n);

  Eigen::VectorXd cost = Eigen::VectorXd::Zero(n + m);
  cost.tail(m).setOnes();
  t.price(cost);
  if (!t.iterate(n, o, out.pivots, budget)) return out;
  if (t.objective() > o.feasTol) {
    out.status = LpStatus::Infeasible;
    return out;
  }

  // Drive remaining artificials out of the basis; rows with no usable pivot are redundant.
  for (long i = 0; i < m; ++i) {
    if (t.basis()[i] < n) continue;
    long best = -1;
    double mag = o.pivotTol;
    for (long j = 0; j < n; ++j) {
      bool basic = false;
      for (long k : t.basis()) basic = basic || k == j;
      if (!basic && std::abs(t.entry(i, j)) > mag) {
        mag = std::abs(t.entry(i, j));
        best = j;
      }
    }
    if (best >= 0) t.pivot(i, best);
  }

  cost.setZero();
  cost.head(n).setOnes();
  t.price(cost);
  if (!t.iterate(n, o, out.pivots, budget)) return out;

  std::vector<long> cols;
  for (long i = 0; i < m; ++i)
    if (t.basis()[i] < n) cols.push_back(t.basis()[i]);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (long i = 0; i < m; ++i)
    if (t.basis()[i] < n) x(t.basis()[i]) = std::max(t.value(i), 0.0);

  // Re-solve the basic system directly to shed accumulated tableau round-off.
  if (!cols.empty()) {
    Eigen::MatrixXd ab(m, static_cast<long>(cols.size()));
    for (std::size_t k = 0; k < cols.size(); ++k) ab.col(k) = a.col(cols[k]);
    const Eigen::VectorXd xb = ab.colPivHouseholderQr().solve(bb);
    Eigen::VectorXd refined = x;
    for (std::size_t k = 0; k < cols.size(); ++k) refined(cols[k]) = std::max(xb(k), 0.0);
    if ((a * refined - bb).cwiseAbs().maxCoeff() <= (a * x - bb).cwiseAbs().maxCoeff()) x = refined;
  }

  out.residual = (a * x - bb).cwiseAbs().maxCoeff() / 2.0;
  if (!(out.residual <= o.lpTol)) return out;
  out.weights = x * bnorm;
  out.objective = out.weights.sum();
  out.status = LpStatus::Optimal;
  return out;
}

}  // namespace mfd
