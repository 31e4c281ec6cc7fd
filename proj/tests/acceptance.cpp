// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "auxfn/diagnostics.hpp"
#include "auxfn/io.hpp"
#include "auxfn/random_instances.hpp"

using namespace auxfn;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double d : v) out[i++] = d;
  return out;
}

SolverConfig fixed(std::size_t n) {
  SolverConfig c;
  c.rule.max_iters = n;
  c.rule.step_tol = 0.0;
  return c;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << v;
  return os.str();
}

// Tracks the worst value of a quantity that must stay >= floor.
struct Worst {
  double value = std::numeric_limits<double>::infinity();
  void add(double v) { value = std::min(value, v); }
  bool at_least(double floor) const { return value >= floor; }
};

const VectorXd kY = vec({1, 3});

NonnegMatrix half_half() { return NonnegMatrix(MatrixXd::Constant(2, 1, 0.5)); }

Outcome one_column_optima() {
  const KlProblem problem(half_half(), kY, vec({1}));
  const std::pair<Family, double> cases[] = {
      {Family::smart, 2.0 * std::sqrt(3.0)},
      {Family::emml, 4.0},
      {Family::hellinger, 2.0 + std::sqrt(3.0)},
      {Family::pearson, 2.0 * std::sqrt(5.0)},
  };
  double worst = 0.0;
  for (const auto& [family, expected] : cases) {
    const double x = solve_kl(family, problem).x[0];
    const ColumnStochastic p = ColumnStochastic::from_normalized(MatrixXd::Constant(2, 1, 0.5));
    const double oracle = oracle_minimize(family, p, kY).minimizer[0];
    worst = std::max({worst, std::abs(x - expected), std::abs(oracle - expected)});
  }
  return {worst <= 1e-8, "max |x - oracle| " + fmt(worst)};
}

Outcome pythagorean() {
  Rng rng(1001);
  std::uniform_int_distribution<int> di(2, 6), dj(1, 4);
  double worst = 0.0;
  for (int s = 0; s < 1000; ++s) {
    const int I = di(rng), J = dj(rng);
    const KlInstance inst = random_kl_instance(rng, I, J, s % 2 == 0);
    const VectorXd x = random_uniform(rng, J, 0.1, 3.0);
    const VectorXd z = random_uniform(rng, J, 0.1, 3.0);
    worst = std::max({worst, pythagorean_smart(inst.matrix, inst.data, x, z).worst(),
                      pythagorean_emml(inst.matrix, inst.data, x, z).worst(),
                      pythagorean_hellinger(inst.matrix, inst.data, x, z).relative(),
                      pythagorean_pearson(inst.matrix, inst.data, z, x).worst()});
    const EuclidInstance eu = random_euclid_instance(rng, I, J, s % 2 == 0);
    worst = std::max(worst, pythagorean_euclid(eu.matrix, eu.data, random_uniform(rng, J, -2.0, 2.0),
                                               random_uniform(rng, J, -2.0, 2.0))
                                .worst());
  }
  return {worst <= kIdentityTolerance, "max relative residual " + fmt(worst) + " over 5 x 1000"};
}

Outcome first_monotonicity_all() {
  Rng rng(1002);
  Worst w;
  for (int s = 0; s < 10; ++s) {
    const KlInstance inst = random_kl_instance(rng, 6, 4, s % 2 == 0);
    for (Family f : {Family::smart, Family::emml, Family::hellinger}) {
      w.add(first_monotonicity(f, solve_kl(f, inst.problem(), fixed(100)).trace).worst_slack);
    }
    const EuclidInstance eu = random_euclid_instance(rng, 6, 4, s % 2 == 0);
    w.add(first_monotonicity(eu.matrix, solve_euclid(eu.problem(), fixed(100)).trace).worst_slack);
  }
  return {w.at_least(-kInequalityTolerance), "worst slack " + fmt(w.value)};
}

Outcome second_monotonicity_all() {
  Worst w;
  // One column, oracle minimizers.
  const KlProblem one(half_half(), kY, vec({0.2}));
  for (Family f : {Family::smart, Family::emml, Family::hellinger}) {
    const SolveResult r = solve_kl(f, one, fixed(50));
    const ColumnStochastic& p = r.normalization->matrix;
    const VectorXd xh = oracle_minimize(f, p, kY).minimizer;
    w.add(second_monotonicity(f, p, kY, xh, r.trace).worst_slack);
  }
  // Consistent systems: the generating x is a minimizer.
  Rng rng(1003);
  for (int s = 0; s < 10; ++s) {
    const KlInstance inst = random_kl_instance(rng, 6, 4, true);
    for (Family f : {Family::smart, Family::emml, Family::hellinger}) {
      const SolveResult r = solve_kl(f, inst.problem(), fixed(100));
      w.add(second_monotonicity(f, inst.matrix, inst.data, *inst.truth, r.trace).worst_slack);
    }
    const EuclidInstance eu = random_euclid_instance(rng, 6, 4, true);
    w.add(second_monotonicity(eu.matrix, eu.data, *eu.truth,
                              solve_euclid(eu.problem(), fixed(100)).trace)
              .worst_slack);
  }
  // The proximal form with factor 2 on the Hellinger proximal sequence.
  {
    const SolveResult prox = solve_hellinger_prox(one, fixed(50));
    const ColumnStochastic& p = prox.normalization->matrix;
    const VectorXd xh = oracle_minimize(Family::hellinger, p, kY).minimizer;
    auto f = [&](const VectorXd& x) { return hellinger(kY, p.apply(x)); };
    w.add(at_induced_prox_check(hellinger_phi(), prox.trace, xh, f).worst_slack);
  }
  Rng rng2(1004);
  for (int s = 0; s < 5; ++s) {
    const KlInstance inst = random_kl_instance(rng2, 6, 4, true);
    const SolveResult prox = solve_hellinger_prox(inst.problem(), fixed(50));
    auto f = [&](const VectorXd& x) { return hellinger(inst.data, inst.matrix.apply(x)); };
    w.add(at_induced_prox_check(hellinger_phi(), prox.trace, *inst.truth, f).worst_slack);
  }
  return {w.at_least(-kSecondMonotonicityTolerance), "worst slack " + fmt(w.value)};
}

Outcome summa() {
  Rng rng(1005);
  Worst w;
  for (int s = 0; s < 3; ++s) {
    const KlInstance inst = random_kl_instance(rng, 6, 4, s == 0);
    const SolveResult r = solve_kl(Family::smart, inst.problem(), fixed(50));
    const auto samples = make_samples(r.trace, 200, rng, SampleDomain::positive);
    w.add(smart_summa_check(inst.matrix, inst.data, r.trace, samples).worst_slack);

    const EuclidInstance eu = random_euclid_instance(rng, 6, 4, s == 0);
    const SolveResult l = solve_euclid(eu.problem(), fixed(50));
    const auto lsamples = make_samples(l.trace, 200, rng, SampleDomain::real);
    w.add(euclid_summa_check(eu.matrix, eu.data, l.trace, lsamples).worst_slack);
  }
  return {w.at_least(-kInequalityTolerance), "worst slack " + fmt(w.value)};
}

Outcome summa2_emml() {
  Rng rng(1006);
  Worst w;
  for (int s = 0; s < 3; ++s) {
    const KlInstance inst = random_kl_instance(rng, 6, 4, s == 0);
    const SolveResult r = solve_kl(Family::emml, inst.problem(), fixed(50));
    const auto samples = make_samples(r.trace, 200, rng, SampleDomain::positive);
    w.add(emml_summa2_check(inst.matrix, inst.data, r.trace, samples).worst_slack);
  }
  return {w.at_least(-kInequalityTolerance), "worst slack " + fmt(w.value)};
}

Outcome landweber_equivalence() {
  Rng rng(1007);
  double worst = 0.0, trace_err = 0.0;
  for (int s = 0; s < 3; ++s) {
    const EuclidInstance eu = random_euclid_instance(rng, 5, 3, false);
    const LandweberRescaling t = landweber_equiv_transform(eu.matrix);
    const MatrixXd btb = t.matrix.values().transpose() * t.matrix.values();
    trace_err = std::max(trace_err, std::abs(btb.trace() - 1.0));
    VectorXd x = eu.start, z = t.forward(eu.start);
    for (int k = 0; k < 50; ++k) {
      x = euclid_L_step(eu.matrix, eu.data, x);
      z = landweber_step(t.matrix, eu.data, z, 1.0);
      worst = std::max(worst, (t.back(z) - x).cwiseAbs().maxCoeff());
    }
  }
  return {worst <= 1e-10 && trace_err <= 1e-12,
          "max deviation " + fmt(worst) + ", |trace(B^T B) - 1| " + fmt(trace_err)};
}

Outcome limits() {
  std::vector<std::string> notes;
  bool pass = true;
  const RealMatrix a(vec({1, 2}).transpose());
  const SolveResult r = solve_euclid(EuclidProblem(a, vec({3}), vec({0, 0})), fixed(10));
  const double example_err = (r.x - vec({1.5, 0.75})).cwiseAbs().maxCoeff();
  pass &= example_err <= 1e-8;
  notes.push_back("example error " + fmt(example_err));

  Rng rng(1008);
  double proj_err = 0.0;
  for (int s = 0; s < 5; ++s) {
    const EuclidInstance eu = random_euclid_instance(rng, 2, 4, false);
    const VectorXd x0 = random_uniform(rng, 4, -1.0, 1.0);
    SolverConfig cfg;
    cfg.rule.max_iters = 100000;
    cfg.rule.step_tol = 1e-30;
    const SolveResult l = solve_euclid(EuclidProblem(eu.matrix, eu.data, x0), cfg);
    const CheckReport c = limit_characterization_euclid(eu.matrix, eu.data, x0, l.trace);
    proj_err = std::max(proj_err, -c.worst_slack);
    pass &= c.pass;
  }
  notes.push_back("projection error " + fmt(proj_err));

  MatrixXd m(2, 3);
  m << 0.2, 0.5, 0.7, 0.8, 0.5, 0.3;
  const ColumnStochastic p = ColumnStochastic::from_normalized(m);
  const VectorXd y = p.apply(vec({1.0, 0.5, 1.5}));
  const VectorXd x0 = VectorXd::Ones(3);
  SolverConfig cfg;
  cfg.rule.max_iters = 200000;
  cfg.rule.step_tol = 1e-26;
  const SolveResult s = solve_kl(Family::smart, KlProblem(p, y, x0), cfg);
  const CheckReport c = limit_characterization_smart(p, y, x0, s.trace);
  pass &= c.pass && c.has_component("max_entropy") && c.has_component("kl_minimality");
  notes.push_back("smart kl_minimality " + fmt(c.component("kl_minimality")) + ", max_entropy " +
                  fmt(c.component("max_entropy")));
  std::string detail;
  for (const auto& n : notes) detail += (detail.empty() ? "" : "; ") + n;
  return {pass, detail};
}

Outcome mass_laws() {
  Rng rng(1009);
  std::uniform_int_distribution<int> di(1, 6), dj(1, 4);
  Worst w;
  for (int s = 0; s < 1000; ++s) {
    const KlInstance inst = random_kl_instance(rng, di(rng), dj(rng), s % 2 == 0);
    const std::vector<VectorXd> xs{random_uniform(rng, inst.matrix.cols(), 0.1, 3.0)};
    for (Family f : {Family::smart, Family::emml, Family::hellinger, Family::pearson}) {
      w.add(mass_law_check(f, inst.matrix, inst.data, xs).worst_slack);
    }
  }
  return {w.at_least(-1e-12), "worst slack " + fmt(w.value)};
}

Outcome contraction() {
  Rng rng(1010);
  const ColumnStochastic p = random_column_stochastic(rng, 5, 3);
  std::vector<VectorXd> xs, zs;
  for (int s = 0; s < 1000; ++s) {
    xs.push_back(random_uniform(rng, 3, 0.05, 5.0));
    zs.push_back(random_uniform(rng, 3, 0.05, 5.0));
  }
  const CheckReport c = contraction_check(p, xs, zs);
  return {c.pass, "worst slack " + fmt(c.worst_slack)};
}

Outcome phi_validator() {
  const auto grid = log_grid(0.01, 100.0, 200);
  const CheckReport h = validate_phi(hellinger_phi(), grid);
  PhiSpec sq{"t_squared", [](double t) { return t * t; }, [](double t) { return 2.0 * t; }, 2.0};
  const CheckReport s = validate_phi(sq, grid);
  return {h.pass && !s.pass, std::string("hellinger ") + (h.pass ? "accepted" : "rejected") +
                                 ", t^2 " + (s.pass ? "accepted" : "rejected")};
}

Outcome probes() {
  Rng rng(1011);
  const KlInstance inst = random_kl_instance(rng, 4, 3, false);
  std::vector<CheckReport> reports;

  std::vector<std::pair<VectorXd, VectorXd>> pairs;
  for (int s = 0; s < 50; ++s) {
    pairs.emplace_back(random_uniform(rng, 3, 0.2, 3.0), random_uniform(rng, 3, 0.2, 3.0));
  }
  reports.push_back(hrr_probe(inst.matrix, inst.data, pairs));

  const SolveResult rp = solve_kl(Family::pearson, inst.problem(), fixed(30));
  const auto samples = make_samples(rp.trace, 50, rng, SampleDomain::positive);
  reports.push_back(summa2_candidate_probe(Family::pearson, inst.matrix, inst.data, rp.trace, samples));

  const KlProblem one(half_half(), kY, vec({0.2}));
  const SolveResult t = solve_kl(Family::hellinger, one, fixed(30));
  const SolveResult prox = solve_hellinger_prox(one, fixed(30));
  const ColumnStochastic& p = t.normalization->matrix;
  const VectorXd xh = oracle_minimize(Family::hellinger, p, kY).minimizer;
  reports.push_back(compare_kl_inequalities(p, kY, xh, t.trace, prox.trace).report);

  std::ostringstream csv;
  write_report_csv(csv, reports);
  bool ok = true;
  for (const auto& r : reports) ok &= r.probe && r.samples > 0;
  return {ok, std::to_string(reports.size()) + " probe reports, " +
                  std::to_string(csv.str().size()) + " bytes of CSV"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"one-column optima", one_column_optima},
      {"pythagorean identities", pythagorean},
      {"first monotonicity", first_monotonicity_all},
      {"second monotonicity", second_monotonicity_all},
      {"summa inequality (smart, euclid)", summa},
      {"summa2 inequality (emml)", summa2_emml},
      {"landweber equivalence", landweber_equivalence},
      {"limit characterizations", limits},
      {"mass laws", mass_laws},
      {"contraction inequalities", contraction},
      {"phi-condition validator", phi_validator},
      {"probes run and report", probes},
  };
  const auto start = std::chrono::steady_clock::now();
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << (i + 1) << " " << criteria[i].first << ": "
              << o.detail << std::endl;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << criteria.size() - failed << "/" << criteria.size() << " criteria passed in "
            << fmt(secs) << " s" << std::endl;
  return failed == 0 ? 0 : 1;
}
