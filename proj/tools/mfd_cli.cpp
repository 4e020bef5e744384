#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <iostream>
#include <sstream>

#include "mfd/experiments.hpp"

using namespace mfd;

namespace {

struct Args {
  ExperimentConfig cfg;
  std::string hList = "0.1,0.05,0.025";
  std::string out;
  std::string calibration;
};

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw CLI::ValidationError("--h", "not a number: " + item);
    out.push_back(v);
  }
  return out;
}

int dim_of(const std::string& domain, int fallback) {
  if (domain == "disk2" || domain == "lshape2") return 2;
  if (domain == "sphere3" || domain == "lshape3") return 3;
  return fallback;
}

void add_problem_flags(CLI::App* c, Args& a) {
  c->add_option("--domain", a.cfg.domain, "disk2 | lshape2 | sphere3 | lshape3 | box")
      ->check(CLI::IsMember({"disk2", "lshape2", "sphere3", "lshape3", "box"}));
  c->add_option("--dim", a.cfg.dim, "spatial dimension (2 or 3), implied by the domain")->check(CLI::Range(2, 3));
  c->add_option("--matrix", a.cfg.matrix, "coefficient matrix id")->check(CLI::Range(0, 9));
  c->add_option("--h", a.hList, "comma separated fill distances");
  c->add_option("--alpha", a.cfg.alpha, "kernel exponent");
  c->add_flag("--reduced-c,!--no-reduced-c", a.cfg.reducedC, "shrink the searching radius, retry at full size");
  c->add_option("--seed", a.cfg.seed, "point cloud seed");
  c->add_option("--calibration", a.calibration, "band table file (see `calibrate`)");
  c->add_option("--out", a.out, "output file");
}

void add_solve_flags(CLI::App* c, Args& a) {
  add_problem_flags(c, a);
  c->add_option("--solution", a.cfg.solution, "u1 | u2 | u3");
  c->add_option("--lp-tol", a.cfg.lpTol, "LP equality residual");
  c->add_option("--solver-tol", a.cfg.solverTol, "BiCGSTAB relative residual");
  c->add_flag("--jacobi", a.cfg.jacobi, "diagonal preconditioning");
  c->add_flag("--per-point-lambda", a.cfg.perPointLambda, "pick the band from lambda_min(A(x_i))");
  c->add_option("--dump-stencils", a.cfg.dumpStencils, "write stencils and the matrix to <prefix>_h<h>.*");
  c->add_flag("--check-dmp", a.cfg.checkDmp, "also solve with f = 0 and check the maximum principle");
}

void finish(Args& a) {
  a.cfg.dim = dim_of(a.cfg.domain, a.cfg.dim);
  a.cfg.hs = parse_list(a.hList);
  if (!a.calibration.empty()) {
    std::ifstream in(a.calibration);
    if (!in) throw std::runtime_error("cannot open " + a.calibration);
    a.cfg.table = read_table(in, a.cfg.dim);
  }
}

int cmd_converge(Args& a, bool single) {
  finish(a);
  if (single) a.cfg.hs.resize(1);
  const ExperimentResult r = run_convergence(a.cfg);
  if (a.out.empty()) {
    write_csv(std::cout, r);
  } else {
    std::ofstream os(a.out);
    write_csv(os, r);
    std::cout << "wrote " << a.out << "\n";
  }
  bool ok = true;
  for (const auto& row : r.rows) {
    ok = ok && row.ok();
    if (!row.ok()) std::cerr << "h=" << row.h << " failed: " << row.failure << "\n";
    if (a.cfg.checkDmp) std::cout << "h=" << row.h << " dmp " << (row.dmpOk ? "ok" : "VIOLATED") << "\n";
    ok = ok && row.dmpOk;
  }
  if (!single) std::cout << "slope " << r.slope << "\n";
  return ok ? 0 : 1;
}

int cmd_calibrate(Args& a) {
  const CalibrationTable t = calibrate_c(a.cfg.dim);
  if (a.out.empty()) {
    write_table(std::cout, t);
  } else {
    std::ofstream os(a.out);
    write_table(os, t);
    std::cout << "wrote " << a.out << "\n";
  }
  return 0;
}

template <int Dim>
int cloud_impl(Args& a) {
  const Domain<Dim> domain = Domain<Dim>::from_name(a.cfg.domain);
  const CalibrationTable table = a.cfg.table ? *a.cfg.table : default_table(Dim);
  const double h = a.cfg.hs.front();
  const double delta0 = searching_delta(h, builtin_matrix<Dim>(a.cfg.matrix).nominalRho, table, false);
  const PointCloud<Dim> cloud = generate_proper_cloud<Dim>(domain, delta0, h, a.cfg.consts, a.cfg.seed);
  if (a.out.empty()) {
    write_cloud(std::cout, cloud);
  } else {
    std::ofstream os(a.out);
    write_cloud(os, cloud);
    std::cout << "wrote " << a.out << ": " << cloud.size() << " points, " << cloud.nInterior
              << " interior, h=" << cloud.fillDistance << "\n";
  }
  return 0;
}

// Stencil-level self checks on one cloud: positivity, sparsity, quadratic exactness, maximum principle.
template <int Dim>
int check_impl(Args& a) {
  const Domain<Dim> domain = Domain<Dim>::from_name(a.cfg.domain);
  const CoefficientField<Dim> field = builtin_matrix<Dim>(a.cfg.matrix);
  const CalibrationTable table = a.cfg.table ? *a.cfg.table : default_table(Dim);
  const KernelSpec kernel = kernel_normalize(a.cfg.alpha, Dim);
  const double h = a.cfg.hs.front();
  const double delta0 = searching_delta(h, field.nominalRho, table, false);
  const PointCloud<Dim> cloud = generate_proper_cloud<Dim>(domain, delta0, h, a.cfg.consts, a.cfg.seed);
  const VoxelGrid<Dim> grid = stencil_grid(cloud, h);
  StencilOptions so;
  so.reducedC = a.cfg.reducedC;
  so.globalRho = field.nominalRho;
  const StencilContext<Dim> ctx{cloud, grid, domain, field.eval, kernel, h, table, so};
  const StencilSet<Dim> set = build_all_stencils(ctx);

  const std::size_t cap = Dim == 2 ? 6 : 10;
  double minWeight = std::numeric_limits<double>::infinity(), worstExact = 0.0;
  std::size_t maxSize = 0;
  const auto mons = monomials<Dim>(1, 2);
  for (const auto& s : set.stencils) {
    maxSize = std::max(maxSize, s.size());
    for (double w : s.weights) minWeight = std::min(minWeight, w);
    const Vec<Dim>& xi = cloud.points[s.center];
    const Mat<Dim> am = field.eval(xi);
    for (const auto& e : mons) {
      double lhs = 0.0;
      for (std::size_t j = 0; j < s.size(); ++j) lhs += s.beta[j] * monomial<Dim>(e, s.positions[j] - xi);
      int i1 = -1, i2 = -1;
      for (int q = 0; q < Dim; ++q)
        for (int c = 0; c < e(q); ++c) (i1 < 0 ? i1 : i2) = q;
      const double want = i2 < 0 ? 0.0 : 2.0 * am(i1, i2);
      worstExact = std::max(worstExact, std::abs(lhs - want) / std::max(1.0, std::abs(want)));
    }
  }
  const ScalarField<Dim> zero = [](const Vec<Dim>&) { return 0.0; };
  const ScalarField<Dim> g = [](const Vec<Dim>& x) { return x(0); };
  BicgstabOptions bo;
  bo.tol = a.cfg.solverTol;
  const SparseSystem sys = assemble(cloud, set.stencils, zero, g);
  const auto [u, stats] = bicgstab(sys, bo);
  const DmpReport dmp = dmp_check<Dim>(cloud, set.stencils, u, g);

  const bool posOk = minWeight >= 0.0, sizeOk = maxSize <= cap, exactOk = worstExact <= 1e-8;
  std::cout << "stencils      " << set.stencils.size() << " (" << set.retries << " retried)\n";
  std::cout << "positivity    " << (posOk ? "ok" : "FAIL") << " min weight " << minWeight << "\n";
  std::cout << "sparsity      " << (sizeOk ? "ok" : "FAIL") << " max size " << maxSize << "\n";
  std::cout << "exactness     " << (exactOk ? "ok" : "FAIL") << " worst " << worstExact << "\n";
  std::cout << "max principle " << (dmp.ok && stats.converged ? "ok" : "FAIL") << " interior " << dmp.interiorMax
            << " boundary " << dmp.boundaryMax << "\n";
  return posOk && sizeOk && exactOk && dmp.ok && stats.converged ? 0 : 1;
}

template <template <int> class F>
int by_dim(Args& a) {
  finish(a);
  return a.cfg.dim == 2 ? F<2>::run(a) : F<3>::run(a);
}

template <int D>
struct CloudCmd {
  static int run(Args& a) { return cloud_impl<D>(a); }
};
template <int D>
struct CheckCmd {
  static int run(Args& a) { return check_impl<D>(a); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monotone meshfree solver for non-divergence elliptic problems"};
  app.set_help_flag("--help", "print this help and exit");
  app.require_subcommand(1);
  Args a;
  auto* solve = app.add_subcommand("solve", "solve at the first h of --h and report the error");
  auto* converge = app.add_subcommand("converge", "convergence sweep over --h, CSV output");
  auto* calibrate = app.add_subcommand("calibrate", "compute the searching-radius band constants");
  auto* cloud = app.add_subcommand("cloud", "generate a proper point cloud");
  auto* check = app.add_subcommand("check", "stencil and maximum principle self checks");
  add_solve_flags(solve, a);
  add_solve_flags(converge, a);
  calibrate->add_option("--dim", a.cfg.dim, "spatial dimension")->check(CLI::Range(2, 3));
  calibrate->add_option("--out", a.out, "output file");
  add_problem_flags(cloud, a);
  add_problem_flags(check, a);
  check->add_option("--solver-tol", a.cfg.solverTol, "BiCGSTAB relative residual");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  try {
    if (*solve) return cmd_converge(a, true);
    if (*converge) return cmd_converge(a, false);
    if (*calibrate) return cmd_calibrate(a);
    if (*cloud) return by_dim<CloudCmd>(a);
    if (*check) return by_dim<CheckCmd>(a);
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n" << app.help();
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
