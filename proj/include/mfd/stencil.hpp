#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "mfd/domain.hpp"
#include "mfd/geometry.hpp"
#include "mfd/lp.hpp"
#include "mfd/pointcloud.hpp"

namespace mfd {

template <int Dim>
using MatrixField = std::function<Mat<Dim>(const Vec<Dim>&)>;

// ---- kernel ---------------------------------------------------------------

struct KernelSpec {
  double alpha = 3.0;
  double normConst = 0.0;
  int dim = 2;

  double gamma(double r) const;  // C r^-alpha on (0, 1), zero outside
};

double unit_sphere_area(int d);
KernelSpec kernel_normalize(double alpha, int d);
// integral over the unit ball of |y|^2 gamma(|y|), by double-exponential quadrature
double numeric_second_moment(const KernelSpec& k, double tol = 1e-13);
double tanh_sinh(const std::function<double(double)>& f, double a, double b, double tol = 1e-13);

template <int Dim>
double rho_weight(const SearchEllipsoid<Dim>& e, const Vec<Dim>& y, const KernelSpec& k);

// ---- searching radius -----------------------------------------------------

struct CalibrationBand {
  double upper;  // band is (previous upper, upper]
  double c;
};

struct CalibrationTable {
  int dim = 2;
  std::vector<CalibrationBand> bands;
  double reductionFactor = 1.0;

  double constant(double rho) const;
};

CalibrationTable default_table(int d);
CalibrationTable read_table(std::istream& is, int d);
void write_table(std::ostream& os, const CalibrationTable& t);

double searching_delta(double h, double rho, const CalibrationTable& t, bool reduced);

// Cone half-angle used by the calibration and by the cone diagnostic.
double cone_half_angle(int d);

// Inscribed-circle radius of the image of the unit-radius cone with axis angle theta and
// half-angle phi under diag(sqrt(rho), 1), clipped to the image ellipse.
double inscribed_radius(double rho, double phi, double theta);
// minimum over theta in [0, pi/2]
double min_inscribed_radius(double rho, double phi);
// sqrt(rho) / r(rho); in 3d the worst of the planar sections of diag(rho, 1, 1)
double calibration_value(int d, double rho);
// band constants as the maximum of calibration_value over 50 log-spaced nodes per band
CalibrationTable calibrate_c(int d, const std::vector<double>& bandEdges = {0.01, 0.1, 1.0},
                             double firstBandStart = 1e-4, int nodes = 50);

// ---- constraints and stencils ---------------------------------------------

// Monomial exponents of degree lo..hi in lexicographic (degree-major) order.
template <int Dim>
std::vector<Eigen::Array<int, Dim, 1>> monomials(int lo, int hi);

template <int Dim>
double monomial(const Eigen::Array<int, Dim, 1>& e, const Vec<Dim>& y);

template <int Dim>
struct StencilConstraints {
  std::vector<long> ids;
  std::vector<Vec<Dim>> positions;  // projected neighbours
  std::vector<char> usesBoundary;
  Eigen::VectorXd rho;
  Eigen::MatrixXd matrix;
  Eigen::VectorXd rhs;
};

template <int Dim>
StencilConstraints<Dim> build_constraints(const Vec<Dim>& xi, const std::vector<long>& neighbors,
                                          const std::vector<Vec<Dim>>& points, const Domain<Dim>& domain,
                                          const SearchEllipsoid<Dim>& e, const KernelSpec& k, const Mat<Dim>& a);

template <int Dim>
struct Stencil {
  long center = -1;
  double delta = 0.0;
  bool retried = false;
  std::vector<long> neighbors;
  std::vector<Vec<Dim>> positions;
  std::vector<double> weights;
  std::vector<double> beta;
  std::vector<char> usesBoundary;
  double objective = 0.0;
  double residual = 0.0;

  std::size_t size() const { return neighbors.size(); }
};

struct StencilOptions {
  LpOptions lp;
  bool reducedC = true;
  bool perPointLambda = false;  // band by lambda_1(x_i) instead of the global ratio
  double globalRho = 1.0;
};

template <int Dim>
struct StencilContext {
  const PointCloud<Dim>& cloud;
  const VoxelGrid<Dim>& grid;
  const Domain<Dim>& domain;
  const MatrixField<Dim>& field;
  const KernelSpec& kernel;
  double h;
  const CalibrationTable& table;
  StencilOptions options;
};

template <int Dim>
VoxelGrid<Dim> stencil_grid(const PointCloud<Dim>& cloud, double cellSize);

template <int Dim>
Stencil<Dim> build_stencil(long i, const StencilContext<Dim>& ctx);

template <int Dim>
struct StencilSet {
  std::vector<Stencil<Dim>> stencils;
  long retries = 0;
};

template <int Dim>
StencilSet<Dim> build_all_stencils(const StencilContext<Dim>& ctx);

// Max over |alpha| = 3 of |sum_j beta_j y_j^alpha|.
template <int Dim>
double third_moment_diag(const Stencil<Dim>& s, const Vec<Dim>& xi);

template <int Dim>
struct ConeReport {
  bool satisfied = true;
  Vec<Dim> worstDirection = Vec<Dim>::Unit(0);
  double worstCos = 1.0;  // best alignment found for the worst direction
};

template <int Dim>
std::vector<Vec<Dim>> sample_directions(int n);

template <int Dim>
ConeReport<Dim> cone_condition_check(const Vec<Dim>& xi, const std::vector<Vec<Dim>>& candidates,
                                     const SearchEllipsoid<Dim>& e, int nDirections);

template <int Dim>
void write_stencils(std::ostream& os, const std::vector<Stencil<Dim>>& stencils);

}  // namespace mfd
