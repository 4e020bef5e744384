#pragma once

#include "mfd/geometry.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <random>

namespace mfd::testing {

template <int Dim>
Mat<Dim> random_spd(std::mt19937& rng, double minEig = 0.05) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat<Dim> b;
  for (int i = 0; i < Dim; ++i)
    for (int j = 0; j < Dim; ++j) b(i, j) = u(rng);
  Mat<Dim> a = b * b.transpose() + minEig * Mat<Dim>::Identity();
  return 0.5 * (a + a.transpose());
}

// Dense sampling oracle for rectangle/ellipsoid classification. The lattice includes the
// vertices, so the closed-containment answer is exact; for Disjoint versus Partial the
// lattice minimum of the quadratic form carries a certified discretisation error, and the
// instance is reported as ambiguous when that error could flip the answer.
template <int Dim>
std::optional<Overlap> sampling_oracle(const HyperRect<Dim>& h, const SearchEllipsoid<Dim>& e, int perAxis) {
  const auto q = e.quadric();
  double minForm = std::numeric_limits<double>::infinity();
  bool all = true, any = false;
  Eigen::Array<int, Dim, 1> idx = Eigen::Array<int, Dim, 1>::Zero();
  while (true) {
    Vec<Dim> x;
    for (int k = 0; k < Dim; ++k) x(k) = h.lo(k) + (h.hi(k) - h.lo(k)) * idx(k) / (perAxis - 1);
    const double f = q.form(x);
    minForm = std::min(minForm, f);
    if (f < q.r2) any = true;
    if (f > q.r2) all = false;
    int k = 0;
    for (; k < Dim; ++k) {
      if (++idx(k) < perAxis) break;
      idx(k) = 0;
    }
    if (k == Dim) break;
  }
  if (all) return Overlap::Contained;
  if (any) return Overlap::Partial;
  const double spacing = (h.hi - h.lo).maxCoeff() / (perAxis - 1);
  const double reach = (h.center() - q.center).norm() + 0.5 * (h.hi - h.lo).norm();
  const double pnorm = q.shapeInv.template selfadjointView<Eigen::Upper>().eigenvalues().maxCoeff();
  const double err = 2.0 * pnorm * reach * spacing * std::sqrt(double(Dim)) / 2.0;
  if (minForm - err < q.r2) return std::nullopt;
  return Overlap::Disjoint;
}

}  // namespace mfd::testing
