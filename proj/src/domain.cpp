#include "mfd/domain.hpp"

#include <cmath>
#include <limits>

namespace mfd {

namespace {

template <int Dim>
double dist_to_box(const HyperRect<Dim>& r, const Vec<Dim>& x) {
  return (x.cwiseMax(r.lo).cwiseMin(r.hi) - x).norm();
}

}  // namespace

template <int Dim>
void Domain<Dim>::add_face(int axis, double value, Vec<Dim> lo, Vec<Dim> hi) {
  lo(axis) = value;
  hi(axis) = value;
  faces_.push_back({lo, hi});
  faceAxis_.push_back(axis);
}

template <int Dim>
void Domain<Dim>::build_box_faces() {
  for (int k = 0; k < Dim; ++k) {
    add_face(k, outer_.lo(k), outer_.lo, outer_.hi);
    add_face(k, outer_.hi(k), outer_.lo, outer_.hi);
  }
}

template <int Dim>
Domain<Dim> Domain<Dim>::ball() {
  Domain d;
  d.kind_ = DomainKind::Ball;
  d.name_ = Dim == 2 ? "disk2" : "sphere3";
  d.outer_ = {Vec<Dim>::Constant(-1.0), Vec<Dim>::Constant(1.0)};
  return d;
}

template <int Dim>
Domain<Dim> Domain<Dim>::box(const Vec<Dim>& lo, const Vec<Dim>& hi) {
  if (!(lo.array() < hi.array()).all()) throw ContractViolation("box domain needs lo < hi");
  Domain d;
  d.kind_ = DomainKind::Box;
  d.name_ = "box";
  d.outer_ = {lo, hi};
  d.build_box_faces();
  return d;
}

template <int Dim>
Domain<Dim> Domain<Dim>::lshape() {
  Domain d;
  d.kind_ = DomainKind::LShape;
  d.name_ = Dim == 2 ? "lshape2" : "lshape3";
  d.outer_ = {Vec<Dim>::Constant(-1.0), Vec<Dim>::Constant(1.0)};
  // The notch is spanned by the first and last axes; in 3d the middle axis is extruded.
  constexpr int a = 0, b = Dim - 1;
  d.removed_.lo = Vec<Dim>::Constant(-1.0);
  d.removed_.hi = Vec<Dim>::Constant(1.0);
  d.removed_.lo(a) = 0.0;
  d.removed_.lo(b) = 0.0;

  auto section = [](double a0, double a1, double b0, double b1) {
    Vec<Dim> lo = Vec<Dim>::Constant(-1.0), hi = Vec<Dim>::Constant(1.0);
    lo(a) = a0;
    hi(a) = a1;
    lo(b) = b0;
    hi(b) = b1;
    return std::pair{lo, hi};
  };
  auto edge = [&](int axis, double value, double a0, double a1, double b0, double b1) {
    auto [lo, hi] = section(a0, a1, b0, b1);
    d.add_face(axis, value, lo, hi);
  };
  edge(b, -1.0, -1.0, 1.0, 0.0, 0.0);
  edge(a, -1.0, 0.0, 0.0, -1.0, 1.0);
  edge(b, 1.0, -1.0, 0.0, 0.0, 0.0);
  edge(a, 1.0, 0.0, 0.0, -1.0, 0.0);
  edge(b, 0.0, 0.0, 1.0, 0.0, 0.0);
  edge(a, 0.0, 0.0, 0.0, 0.0, 1.0);
  if constexpr (Dim == 3) {
    for (double cap : {-1.0, 1.0}) {
      auto [lo1, hi1] = section(-1.0, 0.0, -1.0, 1.0);
      d.add_face(1, cap, lo1, hi1);
      auto [lo2, hi2] = section(0.0, 1.0, -1.0, 0.0);
      d.add_face(1, cap, lo2, hi2);
    }
  }
  return d;
}

template <int Dim>
Domain<Dim> Domain<Dim>::from_name(const std::string& name) {
  if (name == "box") return box(Vec<Dim>::Constant(-1.0), Vec<Dim>::Constant(1.0));
  if ((Dim == 2 && name == "disk2") || (Dim == 3 && name == "sphere3")) return ball();
  if ((Dim == 2 && name == "lshape2") || (Dim == 3 && name == "lshape3")) return lshape();
  throw ContractViolation("unknown domain '" + name + "' for d=" + std::to_string(Dim));
}

template <int Dim>
bool Domain<Dim>::contains(const Vec<Dim>& x) const {
  switch (kind_) {
    case DomainKind::Ball:
      return x.squaredNorm() < 1.0;
    case DomainKind::Box:
      return outer_.contains_strict(x);
    case DomainKind::LShape:
      return outer_.contains_strict(x) &&
             !((x.array() >= removed_.lo.array()).all() && (x.array() <= removed_.hi.array()).all());
  }
  return false;
}

template <int Dim>
bool Domain<Dim>::in_closure(const Vec<Dim>& x, double slack) const {
  if (kind_ == DomainKind::Ball) return x.norm() <= 1.0 + slack;
  return contains(x) || dist_boundary(x) <= slack;
}

template <int Dim>
bool Domain<Dim>::in_extended(const Vec<Dim>& x, double delta0) const {
  return contains(x) || dist_boundary(x) < delta0;
}

template <int Dim>
double Domain<Dim>::dist_boundary(const Vec<Dim>& x) const {
  if (kind_ == DomainKind::Ball) return std::abs(1.0 - x.norm());
  double best = std::numeric_limits<double>::infinity();
  for (const auto& f : faces_) best = std::min(best, dist_to_box(f, x));
  return best;
}

template <int Dim>
Vec<Dim> Domain<Dim>::closest_boundary_point(const Vec<Dim>& x) const {
  if (kind_ == DomainKind::Ball) {
    const double r = x.norm();
    if (r == 0.0) return Vec<Dim>::Unit(0);
    return x / r;
  }
  double best = std::numeric_limits<double>::infinity();
  Vec<Dim> p = x;
  for (const auto& f : faces_) {
    const Vec<Dim> q = x.cwiseMax(f.lo).cwiseMin(f.hi);
    const double dq = (q - x).norm();
    if (dq < best) {
      best = dq;
      p = q;
    }
  }
  return p;
}

template <int Dim>
Vec<Dim> Domain<Dim>::inward_direction(const Vec<Dim>& x) const {
  if (kind_ == DomainKind::Ball) {
    const double r = x.norm();
    return r == 0.0 ? Vec<Dim>(-Vec<Dim>::Unit(0)) : Vec<Dim>(-x / r);
  }
  const Vec<Dim> p = closest_boundary_point(x);
  Vec<Dim> v = x - p;
  const double n = v.norm();
  if (n > 0.0) return contains(x) ? Vec<Dim>(v / n) : Vec<Dim>(-v / n);
  // x on a face: step along the face normal toward the interior
  for (std::size_t k = 0; k < faces_.size(); ++k) {
    if (dist_to_box(faces_[k], x) > 0.0) continue;
    Vec<Dim> nrm = Vec<Dim>::Unit(faceAxis_[k]);
    if (contains(x + 1e-9 * nrm)) return nrm;
    return -nrm;
  }
  return Vec<Dim>::Unit(0);
}

template <int Dim>
Vec<Dim> Domain<Dim>::ray_first_hit(const Vec<Dim>& origin, const Vec<Dim>& direction) const {
  if (!contains(origin)) throw ContractViolation("ray_first_hit: origin is not inside the domain");
  if (kind_ == DomainKind::Ball) {
    const double od = origin.dot(direction);
    const double dd = direction.squaredNorm();
    const double disc = od * od - dd * (origin.squaredNorm() - 1.0);
    const double t = (-od + std::sqrt(std::max(disc, 0.0))) / dd;
    return origin + t * direction;
  }
  double best = std::numeric_limits<double>::infinity();
  Vec<Dim> hit = origin;
  for (std::size_t k = 0; k < faces_.size(); ++k) {
    const int axis = faceAxis_[k];
    const auto& f = faces_[k];
    if (direction(axis) == 0.0) continue;
    const double t = (f.lo(axis) - origin(axis)) / direction(axis);
    if (!(t > 0.0) || t >= best) continue;
    Vec<Dim> p = origin + t * direction;
    p(axis) = f.lo(axis);
    bool inside = true;
    for (int i = 0; i < Dim && inside; ++i)
      if (i != axis) inside = p(i) >= f.lo(i) - 1e-13 && p(i) <= f.hi(i) + 1e-13;
    if (!inside) continue;
    best = t;
    hit = p;
  }
  if (!std::isfinite(best)) throw ContractViolation("ray_first_hit: no boundary crossing found");
  return hit;
}

template <int Dim>
Vec<Dim> Domain<Dim>::project_to_boundary(const Vec<Dim>& xi, const Vec<Dim>& xj) const {
  if (in_closure(xj)) return xj;
  return ray_first_hit(xi, (xj - xi).normalized());
}

template <int Dim>
HyperRect<Dim> Domain<Dim>::bounding_box(double delta0) const {
  return {outer_.lo.array() - delta0, outer_.hi.array() + delta0};
}

template <int Dim>
double Domain<Dim>::boundary_residual(const Vec<Dim>& x) const {
  if (kind_ == DomainKind::Ball) return std::abs(x.norm() - 1.0);
  return dist_boundary(x);
}

template class Domain<2>;
template class Domain<3>;

}  // namespace mfd
