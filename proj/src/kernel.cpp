#include <cmath>

#include "mfd/stencil.hpp"

namespace mfd {

double KernelSpec::gamma(double r) const {
  if (!(r > 0.0) || r >= 1.0) return 0.0;
  return normConst * std::pow(r, -alpha);
}

double unit_sphere_area(int d) { return 2.0 * std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d); }

KernelSpec kernel_normalize(double alpha, int d) {
  if (d != 2 && d != 3) throw InvalidKernel("kernel dimension must be 2 or 3");
  if (!(alpha > 2.0 && alpha < d + 2.0))
    throw InvalidKernel("kernel exponent must lie in (2, d+2), got " + std::to_string(alpha));
  return {alpha, 2.0 * d * (d + 2.0 - alpha) / unit_sphere_area(d), d};
}

double tanh_sinh(const std::function<double(double)>& f, double a, double b, double tol) {
  const double half = 0.5 * (b - a);
  auto sum = [&](double step, bool oddOnly) {
    double s = 0.0;
    for (int k = oddOnly ? 1 : 0; k * step <= 6.5; k += oddOnly ? 2 : 1) {
      const double u = k * step;
      const double sh = 0.5 * M_PI * std::sinh(u);
      const double ch = std::cosh(sh);
      const double w = 0.5 * M_PI * std::cosh(u) / (ch * ch) * half;
      const double gap = half * std::exp(-sh) / ch;  // distance to the nearer endpoint
      if (w < 1e-300 || gap <= 0.0) break;
      s += w * f(b - gap);
      if (k > 0) s += w * f(a + gap);
    }
    return s;
  };
  double step = 1.0;
  double total = sum(step, false);
  double estimate = total * step;
  for (int level = 0; level < 12; ++level) {
    step *= 0.5;
    total += sum(step, true);
    const double next = total * step;
    const bool done = std::abs(next - estimate) <= tol * std::abs(next);
    estimate = next;
    if (done && level >= 2) break;
  }
  return estimate;
}

double numeric_second_moment(const KernelSpec& k, double tol) {
  // r^(d+1) gamma(r) folded into one power so tiny r does not produce 0 * inf
  const auto radial = [&](double r) { return r > 0.0 && r < 1.0 ? k.normConst * std::pow(r, k.dim + 1 - k.alpha) : 0.0; };
  return unit_sphere_area(k.dim) * tanh_sinh(radial, 0.0, 1.0, tol);
}

template <int Dim>
double rho_weight(const SearchEllipsoid<Dim>& e, const Vec<Dim>& y, const KernelSpec& k) {
  const double delta = e.radius();
  const double s = (e.sqrtShapeInv() * y).norm() / delta;
  if (!(s > 0.0)) throw ContractViolation("rho_weight: zero displacement");
  if (!(s < 1.0)) throw ContractViolation("rho_weight: displacement outside the search ellipsoid");
  return std::pow(delta, -(Dim + 2)) * k.gamma(s) / e.sqrtShape().determinant();
}

template double rho_weight<2>(const SearchEllipsoid<2>&, const Vec<2>&, const KernelSpec&);
template double rho_weight<3>(const SearchEllipsoid<3>&, const Vec<3>&, const KernelSpec&);

}  // namespace mfd
