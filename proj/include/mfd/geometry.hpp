#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "mfd/errors.hpp"

namespace mfd {

template <int Dim>
using Vec = Eigen::Matrix<double, Dim, 1>;
template <int Dim>
using Mat = Eigen::Matrix<double, Dim, Dim>;

template <typename Scalar, int Dim>
struct SymEigen {
  Eigen::Matrix<Scalar, Dim, 1> values;     // ascending
  Eigen::Matrix<Scalar, Dim, Dim> vectors;  // orthonormal columns
};

// Cyclic Jacobi rotations; intended for the small fixed sizes used here.
template <typename Derived>
SymEigen<typename Derived::Scalar, Derived::RowsAtCompileTime> eigen_sym(
    const Eigen::MatrixBase<Derived>& input) {
  using Scalar = typename Derived::Scalar;
  constexpr int N = Derived::RowsAtCompileTime;
  static_assert(N != Eigen::Dynamic, "eigen_sym expects a fixed-size matrix");
  using std::abs;
  using std::sqrt;

  Eigen::Matrix<Scalar, N, N> a = input;
  const Scalar norm = a.norm();
  if ((a - a.transpose()).norm() > Scalar(1e-14) * norm)
    throw ContractViolation("eigen_sym: matrix is not symmetric");

  Eigen::Matrix<Scalar, N, N> v = Eigen::Matrix<Scalar, N, N>::Identity();
  auto offNorm = [&] {
    Scalar s = 0;
    for (int p = 0; p < N; ++p)
      for (int q = 0; q < N; ++q)
        if (p != q) s += a(p, q) * a(p, q);
    return sqrt(s);
  };

  for (int sweep = 0; sweep < 50 && offNorm() > Scalar(1e-14) * norm; ++sweep) {
    for (int p = 0; p < N - 1; ++p) {
      for (int q = p + 1; q < N; ++q) {
        if (a(p, q) == Scalar(0)) continue;
        const Scalar theta = (a(q, q) - a(p, p)) / (Scalar(2) * a(p, q));
        const Scalar t = (theta >= 0 ? Scalar(1) : Scalar(-1)) /
                         (abs(theta) + sqrt(theta * theta + Scalar(1)));
        const Scalar c = Scalar(1) / sqrt(t * t + Scalar(1));
        const Scalar s = t * c;
        for (int k = 0; k < N; ++k) {
          const Scalar akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < N; ++k) {
          const Scalar apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < N; ++k) {
          const Scalar vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::array<int, N> order;
  for (int i = 0; i < N; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) { return a(i, i) < a(j, j); });

  SymEigen<Scalar, N> out;
  for (int i = 0; i < N; ++i) {
    out.values(i) = a(order[i], order[i]);
    out.vectors.col(i) = v.col(order[i]);
  }
  return out;
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Derived::RowsAtCompileTime, Derived::RowsAtCompileTime>
matrix_sqrt(const Eigen::MatrixBase<Derived>& a) {
  using Scalar = typename Derived::Scalar;
  const auto eig = eigen_sym(a);
  if (!(eig.values(0) > Scalar(0)))
    throw DegenerateCoefficient("matrix_sqrt: matrix is not positive definite");
  const auto m = (eig.vectors * eig.values.cwiseSqrt().asDiagonal() * eig.vectors.transpose()).eval();
  return (Scalar(0.5) * (m + m.transpose())).eval();
}

template <int Dim>
struct HyperRect {
  Vec<Dim> lo;
  Vec<Dim> hi;

  Vec<Dim> center() const { return 0.5 * (lo + hi); }

  Vec<Dim> vertex(int bits) const {
    Vec<Dim> v;
    for (int k = 0; k < Dim; ++k) v(k) = (bits >> k) & 1 ? hi(k) : lo(k);
    return v;
  }

  bool contains_strict(const Vec<Dim>& x) const {
    return (x.array() > lo.array()).all() && (x.array() < hi.array()).all();
  }
};

// Open set {y : (y - center)^T P (y - center) < r2}, P symmetric positive definite.
template <int Dim>
struct Quadric {
  Vec<Dim> center;
  Mat<Dim> shapeInv;
  double r2;

  double form(const Vec<Dim>& y) const {
    const Vec<Dim> z = y - center;
    return z.dot(shapeInv * z);
  }
};

template <int Dim>
class SearchEllipsoid {
 public:
  SearchEllipsoid(const Vec<Dim>& center, const Mat<Dim>& a, double radius)
      : center_(center), sqrtShape_(matrix_sqrt(a)), radius_(radius) {
    sqrtShapeInv_ = sqrtShape_.inverse();
    shape_ = sqrtShape_ * sqrtShape_;
  }

  const Vec<Dim>& center() const { return center_; }
  const Mat<Dim>& sqrtShape() const { return sqrtShape_; }
  const Mat<Dim>& sqrtShapeInv() const { return sqrtShapeInv_; }
  const Mat<Dim>& shape() const { return shape_; }
  double radius() const { return radius_; }

  double normalized_norm(const Vec<Dim>& y) const { return (sqrtShapeInv_ * (y - center_)).norm(); }
  bool contains(const Vec<Dim>& y) const {
    return (sqrtShapeInv_ * (y - center_)).squaredNorm() < radius_ * radius_;
  }

  // Half-widths of the axis-aligned bounding box.
  Vec<Dim> half_extent() const { return radius_ * shape_.diagonal().cwiseSqrt(); }

  Quadric<Dim> quadric() const {
    return {center_, sqrtShapeInv_.transpose() * sqrtShapeInv_, radius_ * radius_};
  }

 private:
  Vec<Dim> center_;
  Mat<Dim> sqrtShape_;
  Mat<Dim> sqrtShapeInv_;
  Mat<Dim> shape_;
  double radius_;
};

enum class Overlap { Disjoint, Contained, Partial };

namespace detail {

constexpr double kTangentTol = 1e-14;

template <int Dim>
Overlap classify_quadric(const HyperRect<Dim>& h, const Quadric<Dim>& q);

// Section of the quadric by the plane y_axis = value, expressed in the remaining
// coordinates. Returns false if the plane misses the open quadric.
template <int Dim>
bool restrict_quadric(const Quadric<Dim>& q, int axis, double value, Quadric<Dim - 1>& out) {
  Mat<Dim - 1> pr;
  Vec<Dim - 1> p, cr;
  for (int i = 0, ii = 0; i < Dim; ++i) {
    if (i == axis) continue;
    cr(ii) = q.center(i);
    p(ii) = q.shapeInv(i, axis);
    for (int j = 0, jj = 0; j < Dim; ++j) {
      if (j == axis) continue;
      pr(ii, jj++) = q.shapeInv(i, j);
    }
    ++ii;
  }
  const double e = value - q.center(axis);
  const Vec<Dim - 1> wstar = -e * pr.ldlt().solve(p);
  const double qmin = q.shapeInv(axis, axis) * e * e + e * p.dot(wstar);
  const double r2 = q.r2 - qmin;
  if (r2 <= kTangentTol * q.r2) return false;
  out = {cr + wstar, pr, r2};
  return true;
}

template <int Dim>
bool face_intersects(const HyperRect<Dim>& h, const Quadric<Dim>& q, int axis, double value) {
  Quadric<Dim - 1> section;
  if (!restrict_quadric(q, axis, value, section)) return false;
  HyperRect<Dim - 1> face;
  for (int i = 0, ii = 0; i < Dim; ++i) {
    if (i == axis) continue;
    face.lo(ii) = h.lo(i);
    face.hi(ii) = h.hi(i);
    ++ii;
  }
  if constexpr (Dim == 2) {
    const double half = std::sqrt(section.r2 / section.shapeInv(0, 0));
    return section.center(0) - half < face.hi(0) && section.center(0) + half > face.lo(0);
  } else {
    return classify_quadric<Dim - 1>(face, section) != Overlap::Disjoint;
  }
}

template <int Dim>
Overlap classify_quadric(const HyperRect<Dim>& h, const Quadric<Dim>& q) {
  if (q.form(h.center()) < q.r2) {
    for (int bits = 0; bits < (1 << Dim); ++bits)
      if (q.form(h.vertex(bits)) > q.r2) return Overlap::Partial;
    return Overlap::Contained;
  }
  if (h.contains_strict(q.center)) return Overlap::Partial;
  for (int axis = 0; axis < Dim; ++axis) {
    if (face_intersects(h, q, axis, h.lo(axis))) return Overlap::Partial;
    if (face_intersects(h, q, axis, h.hi(axis))) return Overlap::Partial;
  }
  return Overlap::Disjoint;
}

}  // namespace detail

template <int Dim>
Overlap rect_ellipsoid_classify(const HyperRect<Dim>& h, const SearchEllipsoid<Dim>& e) {
  return detail::classify_quadric(h, e.quadric());
}

template <int Dim>
class VoxelGrid {
 public:
  using Index = Eigen::Array<long, Dim, 1>;

  VoxelGrid() = default;

  VoxelGrid(std::vector<Vec<Dim>> points, const HyperRect<Dim>& bounds, double cellSize)
      : points_(std::move(points)), bounds_(bounds), cellSize_(cellSize) {
    if (!(cellSize > 0)) throw ContractViolation("voxel grid: cell size must be positive");
    for (int k = 0; k < Dim; ++k)
      dims_(k) = std::max<long>(1, static_cast<long>(std::ceil((bounds.hi(k) - bounds.lo(k)) / cellSize)));
    long cells = dims_.prod();
    std::vector<long> cellOf(points_.size());
    offsets_.assign(cells + 1, 0);
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const auto& x = points_[i];
      if ((x.array() < bounds.lo.array()).any() || (x.array() > bounds.hi.array()).any())
        throw OutOfBounds("voxel grid: point " + std::to_string(i) + " outside bounds");
      cellOf[i] = linear(cell_of(x));
      ++offsets_[cellOf[i] + 1];
    }
    for (long c = 0; c < cells; ++c) offsets_[c + 1] += offsets_[c];
    ids_.resize(points_.size());
    std::vector<long> fill(offsets_.begin(), offsets_.end() - 1);
    for (std::size_t i = 0; i < points_.size(); ++i) ids_[fill[cellOf[i]]++] = static_cast<long>(i);
  }

  const std::vector<Vec<Dim>>& points() const { return points_; }
  const HyperRect<Dim>& bounds() const { return bounds_; }
  double cell_size() const { return cellSize_; }
  const Index& dims() const { return dims_; }
  long cell_count() const { return dims_.prod(); }

  Index cell_of(const Vec<Dim>& x) const {
    Index c;
    for (int k = 0; k < Dim; ++k) {
      const long raw = static_cast<long>(std::floor((x(k) - bounds_.lo(k)) / cellSize_));
      c(k) = std::clamp<long>(raw, 0, dims_(k) - 1);
    }
    return c;
  }

  long linear(const Index& c) const {
    long id = 0;
    for (int k = Dim - 1; k >= 0; --k) id = id * dims_(k) + c(k);
    return id;
  }

  HyperRect<Dim> cell_rect(const Index& c) const {
    HyperRect<Dim> r;
    r.lo = bounds_.lo + cellSize_ * c.template cast<double>().matrix();
    r.hi = r.lo + Vec<Dim>::Constant(cellSize_);
    return r;
  }

  // ids stored in a cell, in insertion order
  std::pair<const long*, const long*> cell(long linearId) const {
    return {ids_.data() + offsets_[linearId], ids_.data() + offsets_[linearId + 1]};
  }

  // Calls fn(cellIndex) for every cell in the inclusive index box [a, b].
  template <typename Fn>
  void for_cells(Index a, Index b, Fn&& fn) const {
    a = a.max(Index::Zero());
    b = b.min(dims_ - 1);
    if ((a > b).any()) return;
    Index c = a;
    while (true) {
      fn(c);
      int k = 0;
      while (k < Dim) {
        if (++c(k) <= b(k)) break;
        c(k) = a(k);
        ++k;
      }
      if (k == Dim) return;
    }
  }

  // Nearest stored point to x (ring search). Returns {-1, inf} when empty.
  std::pair<long, double> nearest(const Vec<Dim>& x, long exclude = -1) const {
    long best = -1;
    double best2 = std::numeric_limits<double>::infinity();
    const Index home = cell_of(x);
    const long maxRing = dims_.maxCoeff();
    for (long ring = 0; ring <= maxRing; ++ring) {
      for_cells(home - ring, home + ring, [&](const Index& c) {
        if (ring > 0 && ((c - home).abs() < ring).all()) return;
        auto [b, e] = cell(linear(c));
        for (auto it = b; it != e; ++it) {
          if (*it == exclude) continue;
          const double d2 = (points_[*it] - x).squaredNorm();
          if (d2 < best2 || (d2 == best2 && *it < best)) {
            best2 = d2;
            best = *it;
          }
        }
      });
      // every unvisited cell lies at least ring*cellSize away from x's cell
      const double reach = ring * cellSize_;
      if (best >= 0 && best2 <= reach * reach) break;
    }
    return {best, std::sqrt(best2)};
  }

 private:
  std::vector<Vec<Dim>> points_;
  HyperRect<Dim> bounds_;
  double cellSize_ = 1.0;
  Index dims_ = Index::Ones();
  std::vector<long> offsets_;
  std::vector<long> ids_;
};

template <int Dim>
VoxelGrid<Dim> voxel_build(std::vector<Vec<Dim>> points, const HyperRect<Dim>& bounds, double cellSize) {
  return VoxelGrid<Dim>(std::move(points), bounds, cellSize);
}

template <int Dim>
std::vector<long> voxel_query_ellipsoid(const VoxelGrid<Dim>& grid, const SearchEllipsoid<Dim>& e) {
  using Index = typename VoxelGrid<Dim>::Index;
  std::vector<long> out;
  const Vec<Dim> ext = e.half_extent();
  const auto& lo = grid.bounds().lo;
  Index a, b;
  for (int k = 0; k < Dim; ++k) {
    a(k) = static_cast<long>(std::floor((e.center()(k) - ext(k) - lo(k)) / grid.cell_size()));
    b(k) = static_cast<long>(std::floor((e.center()(k) + ext(k) - lo(k)) / grid.cell_size()));
  }
  const auto q = e.quadric();
  grid.for_cells(a, b, [&](const Index& c) {
    auto [first, last] = grid.cell(grid.linear(c));
    if (first == last) return;
    switch (detail::classify_quadric(grid.cell_rect(c), q)) {
      case Overlap::Disjoint:
        return;
      case Overlap::Contained: {
        const auto rect = grid.cell_rect(c);
        bool strict = true;
        for (int bits = 0; bits < (1 << Dim) && strict; ++bits)
          strict = q.form(rect.vertex(bits)) < q.r2 * (1.0 - 1e-12);
        if (strict) {
          out.insert(out.end(), first, last);
          return;
        }
        [[fallthrough]];
      }
      case Overlap::Partial:
        for (auto it = first; it != last; ++it)
          if (e.contains(grid.points()[*it])) out.push_back(*it);
        return;
    }
  });
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace mfd
