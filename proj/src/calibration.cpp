#include <array>
#include <cmath>
#include <limits>
#include <istream>
#include <ostream>
#include <sstream>

#include "mfd/stencil.hpp"

namespace mfd {

namespace {

constexpr double kGolden = 0.6180339887498949;
constexpr int kCoarse = 64;

template <typename F>
double golden_min(F&& f, double a, double b, double tol, double* argmin = nullptr) {
  double c = b - kGolden * (b - a), d = a + kGolden * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kGolden * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kGolden * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  if (argmin) *argmin = x;
  return f(x);
}

// Distance from an interior point to the ellipse (sqrt(rho) cos s, sin s): coarse sampling,
// Newton on the stationarity condition, golden-section if Newton stalls.
class EllipseDistance {
 public:
  explicit EllipseDistance(double rho) : a_(std::sqrt(rho)) {
    for (int k = 0; k < kCoarse; ++k) {
      const double s = 2.0 * M_PI * k / kCoarse;
      cs_[k] = {a_ * std::cos(s), std::sin(s)};
    }
  }

  double operator()(double cx, double cy) const {
    int bk = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < kCoarse; ++k) {
      const double dx = cs_[k][0] - cx, dy = cs_[k][1] - cy;
      const double d2 = dx * dx + dy * dy;
      if (d2 < best) {
        best = d2;
        bk = k;
      }
    }
    const double s0 = 2.0 * M_PI * bk / kCoarse;
    const auto dist2 = [&](double s) {
      const double dx = a_ * std::cos(s) - cx, dy = std::sin(s) - cy;
      return dx * dx + dy * dy;
    };
    double s = s0;
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
      const double c = std::cos(s), sn = std::sin(s);
      const double x = a_ * c, y = sn, dx = -a_ * sn, dy = c;
      const double g = (x - cx) * dx + (y - cy) * dy;
      const double hess = dx * dx + dy * dy - (x - cx) * x - (y - cy) * y;
      if (!(hess > 0.0)) break;
      const double step = g / hess;
      s -= step;
      if (std::abs(s - s0) > 2.0 * M_PI / kCoarse) break;
      if (std::abs(step) < 1e-14) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      const double w = 2.0 * M_PI / kCoarse;
      golden_min(dist2, s0 - w, s0 + w, 1e-13, &s);
    }
    return std::sqrt(std::min(dist2(s), best));
  }

 private:
  double a_;
  std::array<std::array<double, 2>, kCoarse> cs_;
};

double inscribed_radius_impl(const EllipseDistance& dist, double rho, double phi, double theta) {
  const double a = std::sqrt(rho);
  const double p1x = a * std::cos(theta - phi), p1y = std::sin(theta - phi);
  const double p2x = a * std::cos(theta + phi), p2y = std::sin(theta + phi);
  const double n1 = std::hypot(p1x, p1y), n2 = std::hypot(p2x, p2y);
  // bisector direction; a circle centred at t*w touches both cone edges with radius t*cross
  const double wx = n2 * p1x + n1 * p2x, wy = n2 * p1y + n1 * p2y;
  const double cross = std::abs(p1x * p2y - p1y * p2x);
  double lo = 0.0, hi = 1.0 / std::hypot(wx, wy);
  while (hi - lo > 1e-13 * hi) {
    const double t = 0.5 * (lo + hi);
    (dist(t * wx, t * wy) > t * cross ? lo : hi) = t;
  }
  return lo * cross;
}

double section_value(double ratio, double phi) { return std::sqrt(ratio) / min_inscribed_radius(ratio, phi); }

}  // namespace

double cone_half_angle(int d) {
  if (d == 2) return M_PI / 8.0;
  return 0.5 * 33.7 * M_PI / 180.0;
}

double inscribed_radius(double rho, double phi, double theta) {
  return inscribed_radius_impl(EllipseDistance(rho), rho, phi, theta);
}

double min_inscribed_radius(double rho, double phi) {
  const EllipseDistance dist(rho);
  const auto r = [&](double th) { return inscribed_radius_impl(dist, rho, phi, th); };
  constexpr int kSamples = 721;
  int bk = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < kSamples; ++k) {
    const double v = r(0.5 * M_PI * k / (kSamples - 1));
    if (v < best) {
      best = v;
      bk = k;
    }
  }
  const double step = 0.5 * M_PI / (kSamples - 1);
  const double lo = std::max(0.0, (bk - 1) * step), hi = std::min(0.5 * M_PI, (bk + 1) * step);
  return std::min(best, golden_min(r, lo, hi, 1e-10));
}

double calibration_value(int d, double rho) {
  const double phi = cone_half_angle(d);
  if (d == 2) return section_value(rho, phi);
  // Planes through one principal axis and the diagonal of the other two cut diag(rho,1,1)
  // in ellipses with squared axis ratios rho and 2 rho / (1 + rho).
  return std::max(section_value(rho, phi), section_value(2.0 * rho / (1.0 + rho), phi));
}

CalibrationTable calibrate_c(int d, const std::vector<double>& bandEdges, double firstBandStart, int nodes) {
  CalibrationTable t = default_table(d);
  t.bands.clear();
  double lower = firstBandStart;
  for (double upper : bandEdges) {
    double c = 0.0;
    for (int k = 0; k < nodes; ++k) {
      const double rho = lower * std::pow(upper / lower, static_cast<double>(k) / (nodes - 1));
      c = std::max(c, calibration_value(d, rho));
    }
    t.bands.push_back({upper, c});
    lower = upper;
  }
  return t;
}

double CalibrationTable::constant(double rho) const {
  if (!(rho > 0.0)) throw ContractViolation("calibration lookup needs a positive ellipticity ratio");
  for (const auto& b : bands)
    if (rho <= b.upper) return b.c;
  return bands.back().c;
}

CalibrationTable default_table(int d) {
  if (d == 2) return {2, {{0.01, 2.836}, {0.1, 2.901}, {1.0, 3.614}}, 1.0 / std::sqrt(3.0)};
  if (d == 3) return {3, {{0.01, 3.623}, {0.1, 3.776}, {1.0, 4.450}}, 1.0 / std::cbrt(18.0)};
  throw ContractViolation("calibration table: dimension must be 2 or 3");
}

CalibrationTable read_table(std::istream& is, int d) {
  CalibrationTable t = default_table(d);
  t.bands.clear();
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key) || key[0] == '#') continue;
    if (key == "band") {
      CalibrationBand b;
      if (!(ls >> b.upper >> b.c)) throw ContractViolation("calibration file: bad band line '" + line + "'");
      if (!t.bands.empty() && !(b.upper > t.bands.back().upper))
        throw ContractViolation("calibration file: band edges must increase");
      t.bands.push_back(b);
    } else if (key == "reduction") {
      if (!(ls >> t.reductionFactor)) throw ContractViolation("calibration file: bad reduction line");
    } else {
      throw ContractViolation("calibration file: unknown key '" + key + "'");
    }
  }
  if (t.bands.empty()) throw ContractViolation("calibration file: no bands");
  return t;
}

void write_table(std::ostream& os, const CalibrationTable& t) {
  os.precision(6);
  os << std::fixed;
  for (const auto& b : t.bands) os << "band " << b.upper << ' ' << b.c << '\n';
  os << "reduction " << t.reductionFactor << '\n';
  os.unsetf(std::ios::fixed);
}

double searching_delta(double h, double rho, const CalibrationTable& t, bool reduced) {
  if (!(h > 0.0) || !(rho > 0.0) || rho > 1.0 + 1e-12)
    throw ContractViolation("searching_delta: need h > 0 and 0 < rho <= 1");
  const double c = t.constant(rho) * (reduced ? t.reductionFactor : 1.0);
  return c * h / std::sqrt(rho);
}

}  // namespace mfd
