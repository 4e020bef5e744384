#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mfd/pointcloud.hpp"
#include "mfd/solver.hpp"
#include "mfd/stencil.hpp"

namespace mfd {

// round() with ties away from zero, as std::llround.
std::uint32_t block_seed(const double* x, int d, double n);

template <int Dim>
Mat<Dim> mt19937_block_matrix(const Vec<Dim>& x, double n);

template <int Dim>
struct CoefficientField {
  int id = 0;
  MatrixField<Dim> eval;
  double nominalRho = 1.0;
};

template <int Dim>
CoefficientField<Dim> builtin_matrix(int id);

// Smallest eigenvalue ratio lambda_min(x) / lambda_max(y) sampled on a lattice of [-1,1]^d.
template <int Dim>
double sampled_rho(const MatrixField<Dim>& a, int perAxis);

template <int Dim>
struct ManufacturedCase {
  std::string id;
  ScalarField<Dim> u;
  std::function<Mat<Dim>(const Vec<Dim>&)> hessian;

  ScalarField<Dim> source(const MatrixField<Dim>& a) const;
};

template <int Dim>
ManufacturedCase<Dim> builtin_solution(const std::string& id);

struct ExperimentConfig {
  std::string domain = "disk2";
  int dim = 2;
  int matrix = 0;
  std::string solution = "u1";
  std::vector<double> hs{0.1, 0.05, 0.025};
  double alpha = 3.0;
  ProperConstants consts;
  bool reducedC = true;
  bool perPointLambda = false;
  long seed = 0;
  double lpTol = 1e-10;
  double solverTol = 1e-10;
  bool jacobi = false;
  bool checkDmp = false;
  std::string dumpStencils;  // path prefix, empty for none
  std::optional<CalibrationTable> table;
};

struct ExperimentRow {
  double h = 0.0;
  double delta = 0.0;
  long n = 0;
  double maxError = 0.0;
  double avgStencil = 0.0;
  double maxT3 = 0.0;
  long lpRetries = 0;
  long solverIters = 0;
  bool dmpOk = true;
  std::string failure;  // empty on success

  bool ok() const { return failure.empty(); }
};

struct ExperimentResult {
  std::vector<ExperimentRow> rows;
  double slope = 0.0;  // NaN with fewer than two successful rows
};

// Runs one h; failures are recorded in the row rather than thrown.
template <int Dim>
ExperimentRow run_single(const ExperimentConfig& cfg, double h, long seed);

ExperimentResult run_convergence(const ExperimentConfig& cfg);

double fit_slope(const std::vector<ExperimentRow>& rows);

void write_csv(std::ostream& os, const ExperimentResult& r);

}  // namespace mfd
