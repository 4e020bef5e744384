#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "mfd/domain.hpp"
#include "mfd/geometry.hpp"

namespace mfd {

template <int Dim>
struct PointCloud {
  std::vector<Vec<Dim>> points;  // interior points first, then collar points
  long nInterior = 0;
  double fillDistance = 0.0;
  double separation = 0.0;
  double boundaryDist = 0.0;
  double delta0 = 0.0;  // collar width

  long size() const { return static_cast<long>(points.size()); }
};

struct ProperConstants {
  double ch = 1.0;
  double czeta = 0.175;
  double ckappa = 0.25;
};

struct ProperReport {
  bool ok = false;
  double h = 0.0;
  double zeta = 0.0;
  double kappa = 0.0;
  double volume = 0.0;
  std::vector<std::string> violated;  // "fill", "separation", "boundary"
};

double radical_inverse(std::uint64_t index, unsigned base);

template <int Dim>
std::vector<Vec<Dim>> halton_init(long count, const HyperRect<Dim>& box, long skip = 20);

// Result of a probe-lattice scan of the closure of Omega_delta.
template <int Dim>
struct FillScan {
  double maxDistance = 0.0;
  std::vector<std::pair<double, Vec<Dim>>> uncovered;  // probes farther than the threshold
};

template <int Dim>
FillScan<Dim> scan_fill(const std::vector<Vec<Dim>>& points, const Domain<Dim>& domain, double delta,
                        double probeSpacing, double threshold);

template <int Dim>
double estimate_fill_distance(const std::vector<Vec<Dim>>& points, const Domain<Dim>& domain, double delta,
                              double probeSpacing);

template <int Dim>
double compute_separation(const std::vector<Vec<Dim>>& points);

// min over interior points of the distance to the boundary
template <int Dim>
double compute_boundary_distance(const std::vector<Vec<Dim>>& points, const Domain<Dim>& domain);

template <int Dim>
double monte_carlo_volume(const Domain<Dim>& domain, double delta, long samples = 1000000,
                          std::uint64_t seed = 12345);

// probeSpacing <= 0 picks a quarter of the mean spacing; volume < 0 triggers the Monte-Carlo estimate.
template <int Dim>
ProperReport validate_proper(const PointCloud<Dim>& cloud, const Domain<Dim>& domain, double delta0,
                             const ProperConstants& consts, double probeSpacing = 0.0, double volume = -1.0);

// Sorts interior points (lexicographically) ahead of collar points and fills in h, zeta, kappa.
template <int Dim>
PointCloud<Dim> make_cloud(std::vector<Vec<Dim>> points, const Domain<Dim>& domain, double delta0,
                           double fillDistance);

template <int Dim>
PointCloud<Dim> adjust_proper(const std::vector<Vec<Dim>>& initial, const Domain<Dim>& domain, double delta0,
                              const ProperConstants& consts, int maxLoops, double hTarget);

template <int Dim>
PointCloud<Dim> generate_proper_cloud(const Domain<Dim>& domain, double delta0, double hTarget,
                                      const ProperConstants& consts = {}, long seed = 0, int maxLoops = 20);

template <int Dim>
void write_cloud(std::ostream& os, const PointCloud<Dim>& cloud);

template <int Dim>
PointCloud<Dim> read_cloud(std::istream& is);

}  // namespace mfd
