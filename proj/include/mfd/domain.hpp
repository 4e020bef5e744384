#pragma once

#include <string>
#include <vector>

#include "mfd/geometry.hpp"

namespace mfd {

enum class DomainKind { Ball, LShape, Box };

// Open bounded domain in d = 2 or 3. Ball is the unit disk / unit sphere,
// LShape is (-1,1)^2 \ [0,1]^2 in 2d and (-1,1)^3 \ ([0,1]x[-1,1]x[0,1]) in 3d.
template <int Dim>
class Domain {
 public:
  static Domain ball();
  static Domain lshape();
  static Domain box(const Vec<Dim>& lo, const Vec<Dim>& hi);
  // disk2 | lshape2 | sphere3 | lshape3 | box
  static Domain from_name(const std::string& name);

  DomainKind kind() const { return kind_; }
  const std::string& name() const { return name_; }

  bool contains(const Vec<Dim>& x) const;
  bool in_closure(const Vec<Dim>& x, double slack = 1e-13) const;
  // x in the open extended region Omega union {dist(., boundary) < delta0}
  bool in_extended(const Vec<Dim>& x, double delta0) const;

  double dist_boundary(const Vec<Dim>& x) const;
  Vec<Dim> closest_boundary_point(const Vec<Dim>& x) const;
  // unit vector pointing from the closest boundary point into the domain
  Vec<Dim> inward_direction(const Vec<Dim>& x) const;

  Vec<Dim> ray_first_hit(const Vec<Dim>& origin, const Vec<Dim>& direction) const;
  Vec<Dim> project_to_boundary(const Vec<Dim>& xi, const Vec<Dim>& xj) const;

  HyperRect<Dim> bounding_box(double delta0) const;

  // Residual of the boundary equation at x: | |x| - 1 | for balls, distance to the
  // face set for polytopes.
  double boundary_residual(const Vec<Dim>& x) const;

  // Flat boundary pieces of the polytope domains, as degenerate boxes.
  const std::vector<HyperRect<Dim>>& faces() const { return faces_; }

 private:
  DomainKind kind_ = DomainKind::Ball;
  std::string name_;
  HyperRect<Dim> outer_;
  HyperRect<Dim> removed_;
  std::vector<HyperRect<Dim>> faces_;
  std::vector<int> faceAxis_;

  void add_face(int axis, double value, Vec<Dim> lo, Vec<Dim> hi);
  void build_box_faces();
};

extern template class Domain<2>;
extern template class Domain<3>;

}  // namespace mfd
