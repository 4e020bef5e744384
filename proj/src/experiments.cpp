#include "mfd/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <sstream>

namespace mfd {

std::uint32_t block_seed(const double* x, int d, double n) {
  static constexpr long long kFactor[3] = {2, 3, 5};
  long long psi = 0;
  for (int k = 0; k < d; ++k) psi += std::llround(x[k] * n) * kFactor[k];
  return static_cast<std::uint32_t>(psi);  // two's complement wrap is the mod 2^32
}

template <int Dim>
Mat<Dim> mt19937_block_matrix(const Vec<Dim>& x, double n) {
  if (!(n >= 1.0)) throw ContractViolation("mt19937_block_matrix: n must be at least 1");
  std::mt19937 gen(block_seed(x.data(), Dim, n));
  Mat<Dim> b;
  for (int r = 0; r < Dim; ++r)
    for (int c = 0; c < Dim; ++c) b(r, c) = static_cast<double>(gen()) * 0x1p-32;
  const double den = Dim == 2 ? 8.0 : 10.0;
  return (b + b.transpose() + 4.0 * Mat<Dim>::Identity()) / den;
}

namespace {

Mat<2> matrix2(int id, const Vec<2>& x) {
  const double a1 = std::abs(x(0)), a2 = std::abs(x(1));
  Mat<2> m = Mat<2>::Zero();
  switch (id) {
    case 0:
      return Mat<2>::Identity();
    case 1:
      m.diagonal() << 1 - 0.5 * a1, 0.25 + 0.25 * a2;
      return m;
    case 2:
      m << 2 - a1, 0.5, 0.5, 0.5 + 0.5 * a2;
      return m / 2.21;
    case 3:
      m.diagonal() << 1 - 0.5 * a1, 0.025 + 0.025 * a2;
      return m;
    case 4:
      m.diagonal() << 1 - 0.5 * a1, 0.0025 + 0.0025 * a2;
      return m;
    case 5:
      m << 2 - std::abs(x(0) * (0.5 - x(1))), 0.025, 0.025, 0.01 + 0.0025 * x(0) * std::exp(x(1));
      return m / 2.001;
    case 6:
      return mt19937_block_matrix<2>(x, 1e10);
    case 7:
      return mt19937_block_matrix<2>(x, 1e4);
    case 8:
      return mt19937_block_matrix<2>(x, 1.0);
    case 9:
      return matrix2(x(0) < 0 ? 2 : 3, x);
  }
  throw ContractViolation("unknown matrix id " + std::to_string(id));
}

Mat<3> matrix3(int id, const Vec<3>& x) {
  const double a1 = std::abs(x(0)), a2 = std::abs(x(1)), a3 = std::abs(x(2));
  Mat<3> m = Mat<3>::Zero();
  switch (id) {
    case 0:
      return Mat<3>::Identity();
    case 1:
      m.diagonal() << 1 - 0.5 * a1, 0.5 - 0.25 * a2, 0.25 + 0.25 * a3;
      return m;
    case 2:
      m << 2 - a1, 0, 0.5, 0, 0.5 + 0.5 * a2, 0, 0.5, 0, 1 - 0.5 * a3;
      return m / 2.21;
    case 3:
      m.diagonal() << 1 - 0.5 * a1, 0.05 - 0.025 * a2, 0.025 + 0.025 * a3;
      return m;
    case 4:
      m.diagonal() << 1 - 0.5 * a1, 0.005 - 0.0025 * a2, 0.0025 + 0.0025 * a3;
      return m;
    case 5:
      m << 2 - std::abs(x(0) * (0.5 - x(1))), -0.02, 0.005,  //
          -0.02, 0.005 + 0.005 * std::abs(x(0) + x(2)), -0.001,  //
          0.005, -0.001, 0.01 + 0.0025 * x(1) * std::exp(x(2));
      return m / 2.001;
    case 6:
      return mt19937_block_matrix<3>(x, 1e10);
    case 7:
      return mt19937_block_matrix<3>(x, 1e4);
    case 8:
      return mt19937_block_matrix<3>(x, 1.0);
    case 9:
      return matrix3(x(0) < 0 ? 2 : 3, x);
  }
  throw ContractViolation("unknown matrix id " + std::to_string(id));
}

constexpr double kRho2[10] = {1.0, 0.25, 0.0864, 0.025, 0.0025, 0.0014, 0.25, 0.25, 0.25, 0.025};
constexpr double kRho3[10] = {1.0, 0.25, 0.0864, 0.025, 0.0025, 0.0014, 0.1847, 0.1847, 0.1847, 0.025};

// (x1 + ... + xd)^4 cos(x1 (x1 + 2 x2 + ... + 2 xd)); product rule on P = s^4 and C = cos q.
template <int Dim>
ManufacturedCase<Dim> quartic_cosine(const std::string& id) {
  ManufacturedCase<Dim> c;
  c.id = id;
  const auto q = [](const Vec<Dim>& x) { return x(0) * (2.0 * x.sum() - x(0)); };
  c.u = [q](const Vec<Dim>& x) { return std::pow(x.sum(), 4) * std::cos(q(x)); };
  c.hessian = [q](const Vec<Dim>& x) {
    const double s = x.sum(), qv = q(x), cq = std::cos(qv), sq = std::sin(qv);
    const Vec<Dim> ones = Vec<Dim>::Ones();
    Vec<Dim> dq = Vec<Dim>::Constant(2.0 * x(0));
    dq(0) = 2.0 * s;
    Mat<Dim> d2q = Mat<Dim>::Zero();
    d2q.row(0).setConstant(2.0);
    d2q.col(0).setConstant(2.0);
    const double p = std::pow(s, 4);
    const Vec<Dim> dp = 4.0 * s * s * s * ones;
    const Mat<Dim> d2p = 12.0 * s * s * ones * ones.transpose();
    const Vec<Dim> dc = -sq * dq;
    const Mat<Dim> d2c = -cq * dq * dq.transpose() - sq * d2q;
    return Mat<Dim>(d2p * cq + dp * dc.transpose() + dc * dp.transpose() + p * d2c);
  };
  return c;
}

}  // namespace

template <int Dim>
CoefficientField<Dim> builtin_matrix(int id) {
  if (id < 0 || id > 9) throw ContractViolation("unknown matrix id " + std::to_string(id));
  CoefficientField<Dim> f;
  f.id = id;
  if constexpr (Dim == 2) {
    f.eval = [id](const Vec<2>& x) { return matrix2(id, x); };
    f.nominalRho = kRho2[id];
  } else {
    f.eval = [id](const Vec<3>& x) { return matrix3(id, x); };
    f.nominalRho = kRho3[id];
  }
  return f;
}

template <int Dim>
double sampled_rho(const MatrixField<Dim>& a, int perAxis) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  long total = 1;
  for (int k = 0; k < Dim; ++k) total *= perAxis;
  for (long idx = 0; idx < total; ++idx) {
    Vec<Dim> x;
    long r = idx;
    for (int k = 0; k < Dim; ++k) {
      x(k) = -1.0 + 2.0 * static_cast<double>(r % perAxis) / (perAxis - 1);
      r /= perAxis;
    }
    const auto e = eigen_sym(a(x));
    lo = std::min(lo, e.values(0));
    hi = std::max(hi, e.values(Dim - 1));
  }
  return lo / hi;
}

template <int Dim>
ScalarField<Dim> ManufacturedCase<Dim>::source(const MatrixField<Dim>& a) const {
  const auto hess = hessian;
  return [a, hess](const Vec<Dim>& x) { return -(a(x).cwiseProduct(hess(x))).sum(); };
}

template <int Dim>
ManufacturedCase<Dim> builtin_solution(const std::string& id) {
  ManufacturedCase<Dim> c;
  c.id = id;
  if constexpr (Dim == 2) {
    if (id == "u1") {
      c.u = [](const Vec<2>& x) { return x(0) * x(1) + std::cos(x(0)) * std::exp(x(1)); };
      c.hessian = [](const Vec<2>& x) {
        const double ce = std::cos(x(0)) * std::exp(x(1)), se = std::sin(x(0)) * std::exp(x(1));
        Mat<2> m;
        m << -ce, 1.0 - se, 1.0 - se, ce;
        return m;
      };
      return c;
    }
    if (id == "u2") return quartic_cosine<2>(id);
    if (id == "u3") {
      c.u = [](const Vec<2>& x) { return x(0) * x(0) + std::sin(x(1)) * std::exp(x(1) * x(1) - 1.0); };
      c.hessian = [](const Vec<2>& x) {
        const double y = x(1), e = std::exp(y * y - 1.0);
        Mat<2> m;
        m << 2.0, 0.0, 0.0, e * ((1.0 + 4.0 * y * y) * std::sin(y) + 4.0 * y * std::cos(y));
        return m;
      };
      return c;
    }
  } else {
    if (id == "u1") {
      c.u = [](const Vec<3>& x) {
        return x(0) * x(1) + x(0) * x(2) + x(1) * x(2) + std::cos(x(0)) * std::exp(x(1) + x(2));
      };
      c.hessian = [](const Vec<3>& x) {
        const double e = std::exp(x(1) + x(2)), ce = std::cos(x(0)) * e, se = std::sin(x(0)) * e;
        Mat<3> m;
        m << -ce, 1.0 - se, 1.0 - se,  //
            1.0 - se, ce, 1.0 + ce,    //
            1.0 - se, 1.0 + ce, ce;
        return m;
      };
      return c;
    }
    if (id == "u2") return quartic_cosine<3>(id);
  }
  throw ContractViolation("unknown solution '" + id + "' in " + std::to_string(Dim) + "d");
}

namespace {

template <int Dim>
double sampled_lambda_max(const MatrixField<Dim>& a) {
  double hi = 0.0;
  constexpr int kAxis = 21;
  long total = 1;
  for (int k = 0; k < Dim; ++k) total *= kAxis;
  for (long idx = 0; idx < total; ++idx) {
    Vec<Dim> x;
    long r = idx;
    for (int k = 0; k < Dim; ++k) {
      x(k) = -1.0 + 2.0 * static_cast<double>(r % kAxis) / (kAxis - 1);
      r /= kAxis;
    }
    hi = std::max(hi, eigen_sym(a(x)).values(Dim - 1));
  }
  return hi;
}

}  // namespace

template <int Dim>
ExperimentRow run_single(const ExperimentConfig& cfg, double h, long seed) {
  ExperimentRow row;
  row.h = h;
  try {
    const Domain<Dim> domain = Domain<Dim>::from_name(cfg.domain);
    const CoefficientField<Dim> field = builtin_matrix<Dim>(cfg.matrix);
    const ManufacturedCase<Dim> mc = builtin_solution<Dim>(cfg.solution);
    const KernelSpec kernel = kernel_normalize(cfg.alpha, Dim);
    const CalibrationTable table = cfg.table ? *cfg.table : default_table(Dim);
    const double rho = field.nominalRho;
    row.delta = searching_delta(h, rho, table, cfg.reducedC);
    const double delta0 = searching_delta(h, rho, table, false) *
                          std::max(1.0, std::sqrt(sampled_lambda_max<Dim>(field.eval)));

    const PointCloud<Dim> cloud = generate_proper_cloud<Dim>(domain, delta0, h, cfg.consts, seed);
    row.n = cloud.nInterior;
    const VoxelGrid<Dim> grid = stencil_grid(cloud, h);
    StencilOptions so;
    so.lp.lpTol = cfg.lpTol;
    so.reducedC = cfg.reducedC;
    so.perPointLambda = cfg.perPointLambda;
    so.globalRho = rho;
    const StencilContext<Dim> ctx{cloud, grid, domain, field.eval, kernel, h, table, so};
    const StencilSet<Dim> set = build_all_stencils(ctx);
    row.lpRetries = set.retries;
    double total = 0.0;
    for (const auto& s : set.stencils) {
      total += static_cast<double>(s.size());
      row.maxT3 = std::max(row.maxT3, third_moment_diag(s, cloud.points[s.center]));
    }
    row.avgStencil = total / static_cast<double>(std::max<long>(1, cloud.nInterior));

    const auto f = mc.source(field.eval);
    const SparseSystem sys = assemble(cloud, set.stencils, f, mc.u, reindex(cloud));
    BicgstabOptions bo;
    bo.tol = cfg.solverTol;
    bo.jacobi = cfg.jacobi;
    const auto [x, stats] = bicgstab(sys, bo);
    row.solverIters = stats.iterations;
    if (!stats.converged) {
      std::ostringstream msg;
      msg << "BiCGSTAB did not converge (residual " << stats.finalResidual << ")";
      row.failure = msg.str();
      return row;
    }
    const Eigen::VectorXd u = unpermute(sys, x);
    row.maxError = max_norm_error<Dim>(u, mc.u, cloud);

    if (cfg.checkDmp) {
      const ScalarField<Dim> zero = [](const Vec<Dim>&) { return 0.0; };
      const SparseSystem homog = assemble(cloud, set.stencils, zero, mc.u);
      const auto [y, ys] = bicgstab(homog, bo);
      row.dmpOk = ys.converged && dmp_check<Dim>(cloud, set.stencils, y, mc.u).ok;
    }
    if (!cfg.dumpStencils.empty()) {
      std::ostringstream tag;
      tag << cfg.dumpStencils << "_h" << h;
      std::ofstream st(tag.str() + ".stencils");
      write_stencils(st, set.stencils);
      std::ofstream mm(tag.str() + ".mtx");
      write_matrix_market(mm, sys.matrix);
    }
  } catch (const StencilFailure& e) {
    row.failure = e.what();
  } catch (const SolverBreakdown& e) {
    row.failure = e.what();
  } catch (const AdjustmentFailed& e) {
    row.failure = e.what();
  }
  return row;
}

double fit_slope(const std::vector<ExperimentRow>& rows) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& r : rows) {
    if (!r.ok() || !(r.maxError > 0.0)) continue;
    const double lx = std::log(r.h), ly = std::log(r.maxError);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

int domain_dim(const std::string& name) {
  if (name == "disk2" || name == "lshape2") return 2;
  if (name == "sphere3" || name == "lshape3") return 3;
  if (name == "box") return 0;
  throw ContractViolation("unknown domain '" + name + "'");
}

}  // namespace

ExperimentResult run_convergence(const ExperimentConfig& cfg) {
  const int d = domain_dim(cfg.domain);
  if (d != 0 && d != cfg.dim)
    throw ContractViolation("domain " + cfg.domain + " is " + std::to_string(d) + "d but dim is " +
                            std::to_string(cfg.dim));
  if (cfg.dim != 2 && cfg.dim != 3) throw ContractViolation("dim must be 2 or 3");
  if (cfg.hs.empty()) throw ContractViolation("empty h list");
  for (double h : cfg.hs)
    if (!(h > 0.0)) throw ContractViolation("h values must be positive");
  ExperimentResult r;
  for (std::size_t k = 0; k < cfg.hs.size(); ++k) {
    const long seed = cfg.seed + static_cast<long>(k);
    r.rows.push_back(cfg.dim == 2 ? run_single<2>(cfg, cfg.hs[k], seed) : run_single<3>(cfg, cfg.hs[k], seed));
  }
  r.slope = fit_slope(r.rows);
  return r;
}

void write_csv(std::ostream& os, const ExperimentResult& r) {
  os << "h,delta,N,max_error,avg_stencil,max_t3,lp_retries,solver_iters\n";
  os << std::setprecision(10);
  for (const auto& row : r.rows) {
    if (!row.ok()) {
      os << "# failed h=" << row.h << ": " << row.failure << '\n';
      continue;
    }
    os << row.h << ',' << row.delta << ',' << row.n << ',' << row.maxError << ',' << row.avgStencil << ','
       << row.maxT3 << ',' << row.lpRetries << ',' << row.solverIters << '\n';
  }
  os << "# slope=" << r.slope << '\n';
}

#define MFD_INSTANTIATE(D)                                                              \
  template Mat<D> mt19937_block_matrix<D>(const Vec<D>&, double);                       \
  template CoefficientField<D> builtin_matrix<D>(int);                                  \
  template double sampled_rho<D>(const MatrixField<D>&, int);                           \
  template struct ManufacturedCase<D>;                                                  \
  template ManufacturedCase<D> builtin_solution<D>(const std::string&);                 \
  template ExperimentRow run_single<D>(const ExperimentConfig&, double, long);

MFD_INSTANTIATE(2)
MFD_INSTANTIATE(3)

}  // namespace mfd
