#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "mfd/stencil.hpp"

namespace mfd {

template <int Dim>
std::vector<Eigen::Array<int, Dim, 1>> monomials(int lo, int hi) {
  using E = Eigen::Array<int, Dim, 1>;
  std::vector<E> out;
  for (int deg = lo; deg <= hi; ++deg) {
    // nondecreasing index tuples (i1 <= ... <= ideg) in lexicographic order
    std::vector<int> idx(deg, 0);
    while (true) {
      E e = E::Zero();
      for (int i : idx) ++e(i);
      out.push_back(e);
      int k = deg - 1;
      while (k >= 0 && idx[k] == Dim - 1) --k;
      if (k < 0) break;
      ++idx[k];
      for (int j = k + 1; j < deg; ++j) idx[j] = idx[k];
    }
  }
  return out;
}

template <int Dim>
double monomial(const Eigen::Array<int, Dim, 1>& e, const Vec<Dim>& y) {
  double v = 1.0;
  for (int k = 0; k < Dim; ++k)
    for (int p = 0; p < e(k); ++p) v *= y(k);
  return v;
}

template <int Dim>
StencilConstraints<Dim> build_constraints(const Vec<Dim>& xi, const std::vector<long>& neighbors,
                                          const std::vector<Vec<Dim>>& points, const Domain<Dim>& domain,
                                          const SearchEllipsoid<Dim>& e, const KernelSpec& k, const Mat<Dim>& a) {
  StencilConstraints<Dim> s;
  std::vector<double> originalDist;
  for (long j : neighbors) {
    const Vec<Dim>& xj = points[j];
    if (xj == xi) continue;
    const bool inside = domain.in_closure(xj);
    const Vec<Dim> p = inside ? xj : domain.project_to_boundary(xi, xj);
    const bool boundary = !domain.contains(p);
    const double d = (xj - xi).norm();
    // one column per distinct projected position, owned by the nearest original neighbour
    auto dup = std::find_if(s.positions.begin(), s.positions.end(), [&](const Vec<Dim>& q) {
      return (q - p).norm() <= 1e-14 * e.radius();
    });
    if (dup != s.positions.end()) {
      const auto at = dup - s.positions.begin();
      if (d < originalDist[at]) {
        s.ids[at] = j;
        originalDist[at] = d;
      }
      continue;
    }
    s.ids.push_back(j);
    s.positions.push_back(p);
    s.usesBoundary.push_back(boundary ? 1 : 0);
    originalDist.push_back(d);
  }
  if (s.ids.empty()) throw EmptyNeighborhood("no neighbours inside the search ellipsoid");

  const auto rows = monomials<Dim>(1, 2);
  const long n = static_cast<long>(s.ids.size());
  s.rho.resize(n);
  s.matrix.resize(static_cast<long>(rows.size()), n);
  s.rhs.resize(static_cast<long>(rows.size()));
  for (long j = 0; j < n; ++j) {
    const Vec<Dim> y = s.positions[j] - xi;
    s.rho(j) = rho_weight(e, y, k);
    for (std::size_t r = 0; r < rows.size(); ++r) s.matrix(r, j) = s.rho(j) * monomial<Dim>(rows[r], y);
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].sum() == 1) {
      s.rhs(r) = 0.0;
      continue;
    }
    int i1 = -1, i2 = -1;
    for (int q = 0; q < Dim; ++q)
      for (int c = 0; c < rows[r](q); ++c) (i1 < 0 ? i1 : i2) = q;
    s.rhs(r) = 2.0 * a(i1, i2);
  }
  return s;
}

template <int Dim>
VoxelGrid<Dim> stencil_grid(const PointCloud<Dim>& cloud, double cellSize) {
  HyperRect<Dim> box{cloud.points.front(), cloud.points.front()};
  for (const auto& p : cloud.points) {
    box.lo = box.lo.cwiseMin(p);
    box.hi = box.hi.cwiseMax(p);
  }
  box.hi.array() += 1e-12;
  return VoxelGrid<Dim>(cloud.points, box, cellSize);
}

namespace {

template <int Dim>
bool try_stencil(long i, const StencilContext<Dim>& ctx, const Mat<Dim>& a, double delta, Stencil<Dim>& out) {
  const Vec<Dim>& xi = ctx.cloud.points[i];
  const SearchEllipsoid<Dim> e(xi, a, delta);
  std::vector<long> ids = voxel_query_ellipsoid(ctx.grid, e);
  std::erase(ids, i);
  StencilConstraints<Dim> s;
  try {
    s = build_constraints(xi, ids, ctx.cloud.points, ctx.domain, e, ctx.kernel, a);
  } catch (const EmptyNeighborhood&) {
    return false;
  }
  const LpResult lp = simplex_min_sum(s.matrix, s.rhs, ctx.options.lp);
  if (lp.status != LpStatus::Optimal) return false;
  out = Stencil<Dim>{};
  out.center = i;
  out.delta = delta;
  out.objective = lp.objective;
  out.residual = lp.residual;
  for (long j = 0; j < lp.weights.size(); ++j) {
    if (lp.weights(j) == 0.0) continue;
    out.neighbors.push_back(s.ids[j]);
    out.positions.push_back(s.positions[j]);
    out.weights.push_back(lp.weights(j));
    out.beta.push_back(s.rho(j) * lp.weights(j));
    out.usesBoundary.push_back(s.usesBoundary[j]);
  }
  return true;
}

}  // namespace

template <int Dim>
Stencil<Dim> build_stencil(long i, const StencilContext<Dim>& ctx) {
  if (i < 0 || i >= ctx.cloud.nInterior) throw ContractViolation("build_stencil: point is not interior");
  const Mat<Dim> a = ctx.field(ctx.cloud.points[i]);
  double rho = ctx.options.globalRho;
  if (ctx.options.perPointLambda) rho = std::min(1.0, eigen_sym(a).values(0));
  Stencil<Dim> s;
  const double reduced = searching_delta(ctx.h, rho, ctx.table, ctx.options.reducedC);
  if (try_stencil(i, ctx, a, reduced, s)) return s;
  if (ctx.options.reducedC) {
    const double full = searching_delta(ctx.h, rho, ctx.table, false);
    if (try_stencil(i, ctx, a, full, s)) {
      s.retried = true;
      return s;
    }
    throw StencilFailure(i, full);
  }
  throw StencilFailure(i, reduced);
}

template <int Dim>
StencilSet<Dim> build_all_stencils(const StencilContext<Dim>& ctx) {
  StencilSet<Dim> out;
  out.stencils.reserve(ctx.cloud.nInterior);
  for (long i = 0; i < ctx.cloud.nInterior; ++i) {
    out.stencils.push_back(build_stencil(i, ctx));
    if (out.stencils.back().retried) ++out.retries;
  }
  return out;
}

template <int Dim>
double third_moment_diag(const Stencil<Dim>& s, const Vec<Dim>& xi) {
  double worst = 0.0;
  for (const auto& e : monomials<Dim>(3, 3)) {
    double m = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j) m += s.beta[j] * monomial<Dim>(e, s.positions[j] - xi);
    worst = std::max(worst, std::abs(m));
  }
  return worst;
}

template <int Dim>
std::vector<Vec<Dim>> sample_directions(int n) {
  std::vector<Vec<Dim>> out(n);
  for (int k = 0; k < n; ++k) {
    if constexpr (Dim == 2) {
      const double t = 2.0 * M_PI * k / n;
      out[k] = Vec<Dim>(std::cos(t), std::sin(t));
    } else {
      // Fibonacci sphere
      const double z = 1.0 - (2.0 * k + 1.0) / n;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      const double t = M_PI * (3.0 - std::sqrt(5.0)) * k;
      out[k] = Vec<Dim>(r * std::cos(t), r * std::sin(t), z);
    }
  }
  return out;
}

template <int Dim>
ConeReport<Dim> cone_condition_check(const Vec<Dim>& xi, const std::vector<Vec<Dim>>& candidates,
                                     const SearchEllipsoid<Dim>& e, int nDirections) {
  const double sigma = Dim == 2 ? std::sqrt(2.0) - 1.0 : std::sqrt((3.0 - std::sqrt(6.0)) / 6.0);
  const double cosHalf = 1.0 / std::sqrt(1.0 + sigma * sigma);
  std::vector<Vec<Dim>> pre;
  for (const auto& x : candidates) {
    const Vec<Dim> z = e.sqrtShapeInv() * (x - xi);
    const double nz = z.norm();
    if (nz > 0.0 && nz < e.radius()) pre.push_back(z / nz);
  }
  ConeReport<Dim> r;
  for (const auto& v : sample_directions<Dim>(nDirections)) {
    double best = -1.0;
    for (const auto& u : pre) best = std::max(best, u.dot(v));
    if (best < r.worstCos) {
      r.worstCos = best;
      r.worstDirection = v;
    }
    if (best < cosHalf) r.satisfied = false;
  }
  return r;
}

template <int Dim>
void write_stencils(std::ostream& os, const std::vector<Stencil<Dim>>& stencils) {
  os << std::setprecision(17);
  for (const auto& s : stencils) {
    os << s.center << " :";
    for (std::size_t j = 0; j < s.size(); ++j)
      os << " (" << s.neighbors[j] << ", " << s.beta[j] << ", " << int(s.usesBoundary[j]) << ')';
    os << '\n';
  }
}

#define MFD_INSTANTIATE(D)                                                                                \
  template std::vector<Eigen::Array<int, D, 1>> monomials<D>(int, int);                                   \
  template double monomial<D>(const Eigen::Array<int, D, 1>&, const Vec<D>&);                             \
  template StencilConstraints<D> build_constraints<D>(const Vec<D>&, const std::vector<long>&,            \
                                                      const std::vector<Vec<D>>&, const Domain<D>&,       \
                                                      const SearchEllipsoid<D>&, const KernelSpec&,       \
                                                      const Mat<D>&);                                     \
  template VoxelGrid<D> stencil_grid<D>(const PointCloud<D>&, double);                                    \
  template Stencil<D> build_stencil<D>(long, const StencilContext<D>&);                                   \
  template StencilSet<D> build_all_stencils<D>(const StencilContext<D>&);                                 \
  template double third_moment_diag<D>(const Stencil<D>&, const Vec<D>&);                                 \
  template std::vector<Vec<D>> sample_directions<D>(int);                                                 \
  template ConeReport<D> cone_condition_check<D>(const Vec<D>&, const std::vector<Vec<D>>&,               \
                                                 const SearchEllipsoid<D>&, int);                         \
  template void write_stencils<D>(std::ostream&, const std::vector<Stencil<D>>&);

MFD_INSTANTIATE(2)
MFD_INSTANTIATE(3)

}  // namespace mfd
