#include "mfd/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_map>

namespace mfd {

namespace {

constexpr unsigned kPrimes[] = {2, 3, 5};

template <int Dim>
bool lex_less(const Vec<Dim>& a, const Vec<Dim>& b) {
  for (int k = 0; k < Dim; ++k) {
    if (a(k) < b(k)) return true;
    if (b(k) < a(k)) return false;
  }
  return false;
}

template <int Dim>
HyperRect<Dim> enclosing_box(const std::vector<Vec<Dim>>& points, const HyperRect<Dim>& base) {
  HyperRect<Dim> r = base;
  for (const auto& p : points) {
    r.lo = r.lo.cwiseMin(p);
    r.hi = r.hi.cwiseMax(p);
  }
  return r;
}

template <int Dim>
VoxelGrid<Dim> grid_for(const std::vector<Vec<Dim>>& points, double cellSize) {
  HyperRect<Dim> r{points.front(), points.front()};
  r = enclosing_box(points, r);
  r.hi.array() += 1e-9;
  return VoxelGrid<Dim>(points, r, cellSize);
}

template <int Dim>
double mean_spacing(long count, double volume) {
  return std::pow(volume / static_cast<double>(std::max<long>(count, 1)), 1.0 / Dim);
}

}  // namespace

double radical_inverse(std::uint64_t index, unsigned base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (index > 0) {
    r += f * static_cast<double>(index % base);
    index /= base;
    f *= inv;
  }
  return r;
}

template <int Dim>
std::vector<Vec<Dim>> halton_init(long count, const HyperRect<Dim>& box, long skip) {
  if (count < 1) throw ContractViolation("halton_init: count must be positive");
  std::vector<Vec<Dim>> out(count);
  for (long i = 0; i < count; ++i) {
    const auto n = static_cast<std::uint64_t>(skip + i + 1);
    for (int k = 0; k < Dim; ++k)
      out[i](k) = box.lo(k) + radical_inverse(n, kPrimes[k]) * (box.hi(k) - box.lo(k));
  }
  return out;
}

template <int Dim>
FillScan<Dim> scan_fill(const std::vector<Vec<Dim>>& points, const Domain<Dim>& domain, double delta,
                        double probeSpacing, double threshold) {
  using Index = typename VoxelGrid<Dim>::Index;
  if (points.empty()) throw ContractViolation("fill distance of an empty cloud");
  if (!(probeSpacing > 0)) throw ContractViolation("probe spacing must be positive");

  const HyperRect<Dim> region = domain.bounding_box(delta);
  Index counts;
  for (int k = 0; k < Dim; ++k)
    counts(k) = static_cast<long>(std::floor((region.hi(k) - region.lo(k)) / probeSpacing + 1e-9)) + 1;

  // Candidate gathering radius: probes whose nearest point is farther fall back to a ring search.
  const double reach = 4.0 * probeSpacing;
  const VoxelGrid<Dim> grid = grid_for(points, reach);

  constexpr long kBlock = 4;
  Index blocks = (counts + kBlock - 1) / kBlock;
  FillScan<Dim> out;
  std::vector<double> cand;
  std::vector<Vec<Dim>> probes;

  const auto inRegion = [&](const Vec<Dim>& x) {
    return domain.contains(x) || domain.dist_boundary(x) <= delta + 1e-13;
  };

  Index bc = Index::Zero();
  while (true) {
    const Index p0 = bc * kBlock;
    const Index p1 = (p0 + kBlock - 1).min(counts - 1);
    probes.clear();
    {
      Index pc = p0;
      while (true) {
        Vec<Dim> x = region.lo + probeSpacing * pc.template cast<double>().matrix();
        if (inRegion(x)) probes.push_back(x);
        int k = 0;
        for (; k < Dim; ++k) {
          if (++pc(k) <= p1(k)) break;
          pc(k) = p0(k);
        }
        if (k == Dim) break;
      }
    }
    if (!probes.empty()) {
      Vec<Dim> lo = probes.front(), hi = probes.front();
      for (const auto& x : probes) {
        lo = lo.cwiseMin(x);
        hi = hi.cwiseMax(x);
      }
      cand.clear();
      Index a, b;
      for (int k = 0; k < Dim; ++k) {
        a(k) = static_cast<long>(std::floor((lo(k) - reach - grid.bounds().lo(k)) / grid.cell_size()));
        b(k) = static_cast<long>(std::floor((hi(k) + reach - grid.bounds().lo(k)) / grid.cell_size()));
      }
      grid.for_cells(a, b, [&](const Index& c) {
        auto [first, last] = grid.cell(grid.linear(c));
        for (auto it = first; it != last; ++it)
          for (int k = 0; k < Dim; ++k) cand.push_back(points[*it](k));
      });
      const std::size_t nc = cand.size() / Dim;
      for (const auto& x : probes) {
        double best2 = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < nc; ++j) {
          double d2 = 0.0;
          for (int k = 0; k < Dim; ++k) {
            const double t = cand[j * Dim + k] - x(k);
            d2 += t * t;
          }
          best2 = std::min(best2, d2);
        }
        double dist = std::sqrt(best2);
        if (!(dist <= reach)) dist = grid.nearest(x).second;
        out.maxDistance = std::max(out.maxDistance, dist);
        if (dist > threshold) out.uncovered.emplace_back(dist, x);
      }
    }
    int k = 0;
    for (; k < Dim; ++k) {
      if (++bc(k) < blocks(k)) break;
      bc(k) = 0;
    }
    if (k == Dim) break;
  }
  return out;
}

template <int Dim>
double estimate_fill_distance(const std::vector<Vec<Dim>>& points, const Domain<Dim>& domain, double delta,
                              double probeSpacing) {
  return scan_fill(points, domain, delta, probeSpacing, std::numeric_limits<double>::infinity()).maxDistance;
}

template <int Dim>
double compute_separation(const std::vector<Vec<Dim>>& points) {
  if (points.size() < 2) throw ContractViolation("separation needs at least two points");
  const HyperRect<Dim> box = enclosing_box(points, HyperRect<Dim>{points.front(), points.front()});
  const double extent = std::max((box.hi - box.lo).maxCoeff(), 1e-300);
  const double cell = std::max(mean_spacing<Dim>(static_cast<long>(points.size()),
                                                 std::pow(extent, Dim)), 1e-12 * extent);
  const VoxelGrid<Dim> grid = grid_for(points, cell);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i)
    best = std::min(best, grid.nearest(points[i], static_cast<long>(i)).second);
  return 0.5 * best;
}

template <int Dim>
double compute_boundary_distance(const std::vector<Vec<Dim>>& points, const Domain<Dim>& domain) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& x : points)
    if (domain.contains(x)) best = std::min(best, domain.dist_boundary(x));
  return best;
}

template <int Dim>
double monte_carlo_volume(const Domain<Dim>& domain, double delta, long samples, std::uint64_t seed) {
  const HyperRect<Dim> box = domain.bounding_box(delta);
  std::mt19937_64 rng(seed);
  long hits = 0;
  Vec<Dim> x;
  for (long s = 0; s < samples; ++s) {
    for (int k = 0; k < Dim; ++k) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      x(k) = box.lo(k) + u * (box.hi(k) - box.lo(k));
    }
    if (domain.in_extended(x, delta)) ++hits;
  }
  return (box.hi - box.lo).prod() * static_cast<double>(hits) / static_cast<double>(samples);
}

namespace {

template <int Dim>
ProperReport evaluate(const std::vector<Vec<Dim>>& points, double h, double zeta, double kappa, double volume,
                      const ProperConstants& c) {
  ProperReport r;
  r.h = h;
  r.zeta = zeta;
  r.kappa = kappa;
  r.volume = volume;
  const double bound = c.ch * mean_spacing<Dim>(static_cast<long>(points.size()), volume);
  if (!(h <= bound)) r.violated.push_back("fill");
  if (!(zeta >= c.czeta * h)) r.violated.push_back("separation");
  if (!(kappa >= c.ckappa * h)) r.violated.push_back("boundary");
  r.ok = r.violated.empty();
  return r;
}

}  // namespace

template <int Dim>
ProperReport validate_proper(const PointCloud<Dim>& cloud, const Domain<Dim>& domain, double delta0,
                             const ProperConstants& consts, double probeSpacing, double volume) {
  if (volume < 0) volume = monte_carlo_volume(domain, delta0);
  if (probeSpacing <= 0) probeSpacing = 0.25 * mean_spacing<Dim>(cloud.size(), volume);
  const double h = estimate_fill_distance(cloud.points, domain, delta0, probeSpacing);
  const double zeta = compute_separation(cloud.points);
  const double kappa = compute_boundary_distance(cloud.points, domain);
  return evaluate<Dim>(cloud.points, h, zeta, kappa, volume, consts);
}

template <int Dim>
PointCloud<Dim> make_cloud(std::vector<Vec<Dim>> points, const Domain<Dim>& domain, double delta0,
                           double fillDistance) {
  auto split = std::stable_partition(points.begin(), points.end(),
                                     [&](const Vec<Dim>& x) { return domain.contains(x); });
  std::stable_sort(points.begin(), split, lex_less<Dim>);
  std::stable_sort(split, points.end(), lex_less<Dim>);
  PointCloud<Dim> c;
  c.nInterior = split - points.begin();
  c.points = std::move(points);
  c.fillDistance = fillDistance;
  c.separation = c.points.size() >= 2 ? compute_separation(c.points) : 0.0;
  c.boundaryDist = compute_boundary_distance(c.points, domain);
  c.delta0 = delta0;
  return c;
}

namespace {

template <int Dim>
struct CellKey {
  std::size_t operator()(const Eigen::Array<long, Dim, 1>& c) const {
    std::size_t h = 1469598103934665603ull;
    for (int k = 0; k < Dim; ++k) h = (h ^ static_cast<std::size_t>(c(k))) * 1099511628211ull;
    return h;
  }
};

template <int Dim>
struct CellEq {
  bool operator()(const Eigen::Array<long, Dim, 1>& a, const Eigen::Array<long, Dim, 1>& b) const {
    return (a == b).all();
  }
};

// Step 1: insert the uncovered probes, farthest first, skipping those already covered by an insertion.
template <int Dim>
void add_points(std::vector<Vec<Dim>>& points, FillScan<Dim>& scan, const Domain<Dim>& domain, double delta0,
                double hTarget) {
  using Key = Eigen::Array<long, Dim, 1>;
  std::stable_sort(scan.uncovered.begin(), scan.uncovered.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  std::unordered_map<Key, std::vector<Vec<Dim>>, CellKey<Dim>, CellEq<Dim>> added;
  const auto keyOf = [&](const Vec<Dim>& x) {
    return Key((x.array() / hTarget).floor().template cast<long>());
  };
  for (auto [dist, x] : scan.uncovered) {
    // probes on the outer rim of the collar are pulled just inside it
    if (!domain.in_extended(x, delta0)) {
      const Vec<Dim> p = domain.closest_boundary_point(x);
      x = p + (delta0 - 0.01 * hTarget) * (x - p).normalized();
    }
    const Key home = keyOf(x);
    bool covered = false;
    Key off = Key::Constant(-1);
    while (!covered) {
      auto it = added.find(home + off);
      if (it != added.end())
        for (const auto& y : it->second)
          if ((y - x).norm() <= hTarget) covered = true;
      int k = 0;
      for (; k < Dim; ++k) {
        if (++off(k) <= 1) break;
        off(k) = -1;
      }
      if (k == Dim) break;
    }
    if (covered) continue;
    added[home].push_back(x);
    points.push_back(x);
  }
}

// Step 2: push interior points that sit too close to the boundary inward.
template <int Dim>
void map_points(std::vector<Vec<Dim>>& points, const Domain<Dim>& domain, double target) {
  for (auto& x : points) {
    if (!domain.contains(x)) continue;
    for (int iter = 0; iter < 8 && domain.dist_boundary(x) < target; ++iter) {
      const Vec<Dim> p = domain.closest_boundary_point(x);
      const Vec<Dim> n = domain.inward_direction(x);
      const Vec<Dim> y = p + target * (1.0 + 1e-9) * n;
      if (!domain.contains(y)) break;
      x = y;
    }
  }
}

// Step 3: replace close pairs by their midpoint, closest pairs first, each point used once.
template <int Dim>
void merge_points(std::vector<Vec<Dim>>& points, double radius) {
  if (points.size() < 2) return;
  using Index = typename VoxelGrid<Dim>::Index;
  const VoxelGrid<Dim> grid = grid_for(points, radius);
  struct Pair {
    double d;
    long i, j;
  };
  std::vector<Pair> pairs;
  for (long i = 0; i < static_cast<long>(points.size()); ++i) {
    const Index c = grid.cell_of(points[i]);
    grid.for_cells(c - 1, c + 1, [&](const Index& cc) {
      auto [first, last] = grid.cell(grid.linear(cc));
      for (auto it = first; it != last; ++it) {
        if (*it <= i) continue;
        const double d = (points[*it] - points[i]).norm();
        if (d < radius) pairs.push_back({d, i, *it});
      }
    });
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.d != b.d) return a.d < b.d;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  std::vector<char> used(points.size(), 0);
  std::vector<Vec<Dim>> merged;
  for (const auto& p : pairs) {
    if (used[p.i] || used[p.j]) continue;
    used[p.i] = used[p.j] = 1;
    merged.push_back(0.5 * (points[p.i] + points[p.j]));
  }
  std::vector<Vec<Dim>> out;
  out.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i)
    if (!used[i]) out.push_back(points[i]);
  out.insert(out.end(), merged.begin(), merged.end());
  points = std::move(out);
}

}  // namespace

template <int Dim>
PointCloud<Dim> adjust_proper(const std::vector<Vec<Dim>>& initial, const Domain<Dim>& domain, double delta0,
                              const ProperConstants& consts, int maxLoops, double hTarget) {
  if (!(hTarget > 0)) throw ContractViolation("adjust_proper: target fill distance must be positive");
  std::vector<Vec<Dim>> points;
  points.reserve(initial.size());
  for (const auto& x : initial)
    if (domain.in_extended(x, delta0)) points.push_back(x);
  if (points.empty()) points.push_back(domain.bounding_box(0.0).center());

  const double volume = monte_carlo_volume(domain, delta0);
  const double spacing = 0.25 * hTarget;
  std::vector<std::string> last;
  for (int loop = 0; loop <= maxLoops; ++loop) {
    FillScan<Dim> scan = scan_fill(points, domain, delta0, spacing, hTarget);
    const double zeta = points.size() >= 2 ? compute_separation(points) : 0.0;
    const double kappa = compute_boundary_distance(points, domain);
    const ProperReport r = evaluate<Dim>(points, scan.maxDistance, zeta, kappa, volume, consts);
    last = r.violated;
    if (r.ok && scan.maxDistance <= hTarget) return make_cloud(std::move(points), domain, delta0, r.h);
    if (scan.maxDistance > hTarget && last.empty()) last.push_back("fill");
    if (loop == maxLoops) break;

    add_points(points, scan, domain, delta0, hTarget);
    map_points(points, domain, consts.ckappa * hTarget);
    merge_points(points, 2.0 * consts.czeta * hTarget);
    std::erase_if(points, [&](const Vec<Dim>& x) { return !domain.in_extended(x, delta0); });
  }
  throw AdjustmentFailed(last.empty() ? std::string("fill") : last.front());
}

template <int Dim>
PointCloud<Dim> generate_proper_cloud(const Domain<Dim>& domain, double delta0, double hTarget,
                                      const ProperConstants& consts, long seed, int maxLoops) {
  const HyperRect<Dim> box = domain.bounding_box(delta0);
  const double boxVolume = (box.hi - box.lo).prod();
  const long count = std::max<long>(1, std::lround(0.5 * boxVolume / std::pow(hTarget, Dim)));
  return adjust_proper(halton_init(count, box, 20 + seed), domain, delta0, consts, maxLoops, hTarget);
}

template <int Dim>
void write_cloud(std::ostream& os, const PointCloud<Dim>& cloud) {
  os << "# d=" << Dim << " N=" << cloud.nInterior << " M=" << cloud.size() << " h="
     << std::setprecision(17) << cloud.fillDistance << '\n';
  for (const auto& x : cloud.points) {
    for (int k = 0; k < Dim; ++k) os << (k ? " " : "") << std::setprecision(17) << x(k);
    os << '\n';
  }
}

template <int Dim>
PointCloud<Dim> read_cloud(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ContractViolation("cloud file: missing header");
  PointCloud<Dim> c;
  int d = 0;
  long n = 0, m = 0;
  double h = 0;
  if (std::sscanf(line.c_str(), "# d=%d N=%ld M=%ld h=%lf", &d, &n, &m, &h) != 4 || d != Dim)
    throw ContractViolation("cloud file: bad header '" + line + "'");
  c.nInterior = n;
  c.fillDistance = h;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Vec<Dim> x;
    for (int k = 0; k < Dim; ++k) ls >> x(k);
    if (!ls) throw ContractViolation("cloud file: bad point line '" + line + "'");
    c.points.push_back(x);
  }
  if (c.size() != m) throw ContractViolation("cloud file: point count does not match header");
  return c;
}

#define MFD_INSTANTIATE(D)                                                                                  \
  template std::vector<Vec<D>> halton_init<D>(long, const HyperRect<D>&, long);                             \
  template FillScan<D> scan_fill<D>(const std::vector<Vec<D>>&, const Domain<D>&, double, double, double);  \
  template double estimate_fill_distance<D>(const std::vector<Vec<D>>&, const Domain<D>&, double, double);  \
  template double compute_separation<D>(const std::vector<Vec<D>>&);                                        \
  template double compute_boundary_distance<D>(const std::vector<Vec<D>>&, const Domain<D>&);               \
  template double monte_carlo_volume<D>(const Domain<D>&, double, long, std::uint64_t);                     \
  template ProperReport validate_proper<D>(const PointCloud<D>&, const Domain<D>&, double,                  \
                                           const ProperConstants&, double, double);                         \
  template PointCloud<D> make_cloud<D>(std::vector<Vec<D>>, const Domain<D>&, double, double);              \
  template PointCloud<D> adjust_proper<D>(const std::vector<Vec<D>>&, const Domain<D>&, double,             \
                                          const ProperConstants&, int, double);                             \
  template PointCloud<D> generate_proper_cloud<D>(const Domain<D>&, double, double, const ProperConstants&, \
                                                  long, int);                                               \
  template void write_cloud<D>(std::ostream&, const PointCloud<D>&);                                        \
  template PointCloud<D> read_cloud<D>(std::istream&);

MFD_INSTANTIATE(2)
MFD_INSTANTIATE(3)

}  // namespace mfd
