// auxfn: solve, check, compare and generate problems from the command line.
//
// Exit codes: 0 ok, 1 error (including a failed asserted check), 2 when
// solve stops at the iteration cap.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "auxfn/diagnostics.hpp"
#include "auxfn/io.hpp"
#include "auxfn/random_instances.hpp"
#include "auxfn/solvers.hpp"

namespace {

using namespace auxfn;
using Eigen::VectorXd;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitCap = 2;

struct Flags {
  std::string file;
  std::string family;
  std::optional<double> gamma;
  std::optional<std::size_t> max_iters;
  std::optional<double> f_tol;
  std::optional<double> step_tol;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> props;
  bool all = false;
  std::size_t rows = 4;
  std::size_t cols = 3;
  bool consistent = false;
};

// A problem with command-line overrides applied.
struct Loaded {
  ProblemFile pf;
  SolverConfig config;
  std::uint64_t seed = 0;
};

Family resolve_family(const ProblemFile& pf, const std::string& override_name) {
  if (override_name.empty()) return pf.family;
  const Family f = family_from_string(override_name);
  if (is_kl_family(f) != is_kl_family(pf.family)) {
    throw std::invalid_argument("--family " + override_name + " is incompatible with the file's " +
                                std::string(to_string(pf.family)) + " problem");
  }
  return f;
}

Loaded load(const Flags& flags, std::size_t default_iters = 1000) {
  Loaded l;
  l.pf = load_problem(flags.file);
  l.pf.family = resolve_family(l.pf, flags.family);
  const ProblemOptions& o = l.pf.options;
  l.config.rule.max_iters = flags.max_iters.value_or(o.max_iters.value_or(default_iters));
  if (flags.f_tol || o.f_tol) l.config.rule.f_tol = flags.f_tol ? *flags.f_tol : *o.f_tol;
  if (flags.step_tol || o.step_tol) {
    l.config.rule.step_tol = flags.step_tol ? *flags.step_tol : *o.step_tol;
  }
  if (flags.gamma || o.gamma) {
    if (l.pf.family != Family::landweber) {
      throw std::invalid_argument("--gamma only applies to family landweber");
    }
    l.config.gamma = flags.gamma ? *flags.gamma : *o.gamma;
  }
  l.config.rule.validate();
  l.seed = flags.seed.value_or(o.seed.value_or(0));
  return l;
}

SolveResult run(const Loaded& l) {
  switch (l.pf.family) {
    case Family::euclid: return solve_euclid(l.pf.euclid_problem(), l.config);
    case Family::landweber: return solve_landweber(l.pf.euclid_problem(), l.config);
    default: return solve_kl(l.pf.family, l.pf.kl_problem(), l.config);
  }
}

std::ostream& print_vector(std::ostream& os, const VectorXd& v) {
  for (Eigen::Index j = 0; j < v.size(); ++j) os << (j ? " " : "") << v[j];
  return os;
}

void write_file(const std::string& path, const std::function<void(std::ostream&)>& body) {
  if (path == "-") {
    body(std::cout);
    return;
  }
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write '" + path + "'");
  body(os);
  if (!os) throw std::runtime_error("write to '" + path + "' failed");
}

// ---------------------------------------------------------------------------
// solve

int cmd_solve(const Flags& flags) {
  const Loaded l = load(flags);
  const SolveResult r = run(l);
  const std::string out = flags.out.empty() ? "trace.csv" : flags.out;
  write_file(out, [&](std::ostream& os) { write_trace_csv(os, r.trace); });

  std::ostream& os = out == "-" ? std::cerr : std::cout;
  os.precision(17);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
  os << "family: " << to_string(l.pf.family) << "\n";
  if (r.gamma) os << "gamma: " << *r.gamma << "\n";
  os << "iterations: " << r.trace.iterations() << "\n";
  os << "stop: " << to_string(r.trace.reason) << "\n";
  os << "f: " << r.f << "\n";
  os << "x: ";
  print_vector(os, r.x) << "\n";
  if (out != "-") os << "trace: " << out << "\n";
  return r.trace.converged() ? kExitOk : kExitCap;
}

// ---------------------------------------------------------------------------
// check

struct CheckContext {
  const Loaded& loaded;
  Family family;
  SolveResult result;
  std::optional<ColumnStochastic> p;  // normalized, KL families only
  std::optional<RealMatrix> a;        // euclid / landweber
  VectorXd y;
  Rng rng;
  std::optional<VectorXd> x_hat_cache;
  std::string x_hat_method;

  explicit CheckContext(const Loaded& l)
      : loaded(l), family(l.pf.family), result(run(l)), y(l.pf.data), rng(l.seed) {
    if (is_kl_family(family)) {
      p = result.normalization->matrix;
    } else {
      a = RealMatrix(l.pf.matrix);
    }
  }

  const IterationTrace& trace() const { return result.trace; }

  SampleDomain domain() const {
    return is_kl_family(family) ? SampleDomain::positive : SampleDomain::real;
  }

  std::vector<VectorXd> samples(std::size_t n) { return make_samples(trace(), n, rng, domain()); }

  // Minimizer in the trace's coordinates: the oracle when J <= 2, otherwise
  // the limit of a long run.
  const VectorXd& x_hat() {
    if (x_hat_cache) return *x_hat_cache;
    if (!is_kl_family(family)) {
      x_hat_cache = oracle_minimize(*a, y).minimizer;
      x_hat_method = "normal equations";
      return *x_hat_cache;
    }
    try {
      const OracleSolution o = oracle_minimize(family, *p, y);
      x_hat_cache = o.minimizer;
      x_hat_method = o.method;
    } catch (const OracleUnavailable&) {
      SolverConfig cfg;
      cfg.rule.max_iters = 20000;
      cfg.rule.step_tol = 1e-30;
      const KlProblem normalized(*p, y, result.trace.initial().x);
      x_hat_cache = solve_kl(family, normalized, cfg).trace.last().x;
      x_hat_method = "limit of a 20000-iteration run";
    }
    return *x_hat_cache;
  }
};

class NotApplicable : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

void require(bool ok, const std::string& prop, Family f) {
  if (!ok) {
    throw NotApplicable("property '" + prop + "' does not apply to family " +
                        std::string(to_string(f)));
  }
}

bool kl(Family f) { return is_kl_family(f); }

CheckReport pythagorean_report(CheckContext& c) {
  const auto s = c.samples(40);
  SlackAccumulator acc;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const VectorXd& x = s[i];
    const VectorXd& z = s[(i + 1) % s.size()];
    switch (c.family) {
      case Family::smart: {
        const ResidualPair r = pythagorean_smart(*c.p, c.y, x, z);
        acc.add("first", -r.first.relative());
        acc.add("second", -r.second.relative());
        break;
      }
      case Family::emml: {
        const ResidualPair r = pythagorean_emml(*c.p, c.y, x, z);
        acc.add("first", -r.first.relative());
        acc.add("second", -r.second.relative());
        break;
      }
      case Family::hellinger:
        acc.add("identity", -pythagorean_hellinger(*c.p, c.y, x, z).relative());
        break;
      case Family::pearson: {
        const ResidualPair r = pythagorean_pearson(*c.p, c.y, z, x);
        acc.add("first", -r.first.relative());
        acc.add("second", -r.second.relative());
        break;
      }
      default: {
        const ResidualPair r = pythagorean_euclid(*c.a, c.y, x, z);
        acc.add("first", -r.first.relative());
        acc.add("second", -r.second.relative());
        break;
      }
    }
  }
  return acc.finish("pythagorean", kIdentityTolerance);
}

CheckReport trace_slacks_report(CheckContext& c) {
  SlackAccumulator acc;
  for (std::size_t k = 1; k <= c.trace().iterations(); ++k) {
    const auto& rec = c.trace().at(k);
    const double scale = 1.0 + std::abs(c.trace().f(k - 1));
    for (const auto& [name, v] : rec.slacks) acc.add(name, v / scale);
  }
  CheckReport r = acc.finish("trace_slacks", kInequalityTolerance);
  r.add_note("slacks recorded by the solver");
  return r;
}

std::vector<std::pair<VectorXd, VectorXd>> random_pairs(CheckContext& c, std::size_t n) {
  const auto s = c.samples(2 * n);
  std::vector<std::pair<VectorXd, VectorXd>> out;
  for (std::size_t i = 0; i + 1 < s.size(); i += 2) out.emplace_back(s[i], s[i + 1]);
  return out;
}

using PropertyFn = std::function<CheckReport(CheckContext&)>;

struct Property {
  std::function<bool(Family)> applies;
  PropertyFn run;
};

const std::map<std::string, Property>& properties() {
  static const std::map<std::string, Property> table = {
      {"trace_slacks", {[](Family) { return true; }, trace_slacks_report}},
      {"first_monotonicity",
       {[](Family f) { return f != Family::landweber && f != Family::pearson; },
        [](CheckContext& c) {
          return c.a ? first_monotonicity(*c.a, c.trace()) : first_monotonicity(c.family, c.trace());
        }}},
      {"second_monotonicity",
       {[](Family f) { return f != Family::landweber && f != Family::pearson; },
        [](CheckContext& c) {
          const VectorXd& xh = c.x_hat();
          CheckReport r = c.a ? second_monotonicity(*c.a, c.y, xh, c.trace())
                              : second_monotonicity(c.family, *c.p, c.y, xh, c.trace());
          r.add_note("x_hat by " + c.x_hat_method);
          return r;
        }}},
      {"pythagorean",
       {[](Family f) { return f != Family::landweber; }, pythagorean_report}},
      {"mass_law",
       {kl, [](CheckContext& c) {
          const auto s = c.samples(100);
          return mass_law_check(c.family, *c.p, c.y, s);
        }}},
      {"contraction",
       {kl, [](CheckContext& c) {
          const auto xs = c.samples(100);
          const auto zs = c.samples(100);
          return contraction_check(*c.p, xs, zs);
        }}},
      {"summa",
       {[](Family f) { return f == Family::smart || f == Family::euclid; },
        [](CheckContext& c) {
          const auto s = c.samples(200);
          return c.a ? euclid_summa_check(*c.a, c.y, c.trace(), s)
                     : smart_summa_check(*c.p, c.y, c.trace(), s);
        }}},
      {"summa2",
       {[](Family f) { return f == Family::smart || f == Family::emml || f == Family::euclid; },
        [](CheckContext& c) {
          const auto s = c.samples(200);
          if (c.a) return euclid_summa2_check(*c.a, c.y, c.trace(), s);
          return c.family == Family::emml ? emml_summa2_check(*c.p, c.y, c.trace(), s)
                                          : smart_summa2_check(*c.p, c.y, c.trace(), s);
        }}},
      {"at_induced_prox",
       {[](Family f) { return f == Family::hellinger; },
        [](CheckContext& c) {
          const KlProblem normalized(*c.p, c.y, c.trace().initial().x);
          SolverConfig cfg;
          cfg.rule = c.loaded.config.rule;
          const SolveResult prox = solve_hellinger_prox(normalized, cfg);
          const ColumnStochastic& p = *c.p;
          const VectorXd& y = c.y;
          auto f = [&](const VectorXd& x) { return hellinger(y, p.apply(x)); };
          CheckReport r = at_induced_prox_check(hellinger_phi(), prox.trace, c.x_hat(), f);
          r.add_note("proximal sequence; x_hat by " + c.x_hat_method);
          return r;
        }}},
      {"limit",
       {[](Family f) { return f == Family::smart || f == Family::euclid; },
        [](CheckContext& c) {
          // The characterization is about the limit, so iterate well past the
          // stopping rule used for the other checks.
          const VectorXd& x0 = c.trace().initial().x;
          SolverConfig cfg;
          cfg.rule.max_iters = 200000;
          cfg.rule.step_tol = 1e-30;
          if (c.a) {
            const SolveResult r = solve_euclid(EuclidProblem(*c.a, c.y, x0), cfg);
            return limit_characterization_euclid(*c.a, c.y, x0, r.trace);
          }
          const SolveResult r = solve_kl(Family::smart, KlProblem(*c.p, c.y, x0), cfg);
          return limit_characterization_smart(*c.p, c.y, x0, r.trace);
        }}},
      {"hrr_probe",
       {kl, [](CheckContext& c) {
          const auto pairs = random_pairs(c, 50);
          return hrr_probe(*c.p, c.y, pairs);
        }}},
      {"summa2_candidate_probe",
       {[](Family f) { return f == Family::hellinger || f == Family::pearson; },
        [](CheckContext& c) {
          const auto s = c.samples(50);
          return summa2_candidate_probe(c.family, *c.p, c.y, c.trace(), s);
        }}},
      {"emml_start_spread",
       {[](Family f) { return f == Family::emml; },
        [](CheckContext& c) {
          const Eigen::Index j = c.p->cols();
          std::vector<VectorXd> starts{VectorXd::Ones(j)};
          for (int s = 0; s < 4; ++s) starts.push_back(random_uniform(c.rng, j, 0.1, 10.0));
          return emml_start_spread(NonnegMatrix(c.p->values()), c.y, starts,
                                   c.loaded.config.rule);
        }}},
  };
  return table;
}

int cmd_check(const Flags& flags) {
  const Loaded l = load(flags);
  const auto& table = properties();
  std::vector<std::string> names;
  const bool all = flags.all || flags.props.empty();
  if (all) {
    for (const auto& [name, prop] : table) {
      if (prop.applies(l.pf.family)) names.push_back(name);
    }
  } else {
    for (const auto& n : flags.props) {
      const auto it = table.find(n);
      if (it == table.end()) {
        std::string known;
        for (const auto& [name, prop] : table) known += (known.empty() ? "" : ", ") + name;
        throw std::invalid_argument("unknown property '" + n + "' (known: " + known + ")");
      }
      require(it->second.applies(l.pf.family), n, l.pf.family);
      names.push_back(n);
    }
  }

  CheckContext ctx(l);
  std::vector<CheckReport> reports;
  bool failed = false;
  for (const auto& n : names) {
    CheckReport r;
    try {
      r = table.at(n).run(ctx);
    } catch (const OracleUnavailable& e) {
      if (!all) throw;
      // Under --all an unavailable oracle skips the property instead of failing it.
      r.name = n;
      r.probe = true;
      r.add_note(std::string("skipped: ") + e.what());
    }
    if (!r.probe && !r.pass) failed = true;
    reports.push_back(std::move(r));
  }

  const std::string out = flags.out.empty() ? "report.csv" : flags.out;
  write_file(out, [&](std::ostream& os) { write_report_csv(os, reports); });
  std::ostream& os = out == "-" ? std::cerr : std::cout;
  os.precision(6);
  os << "family: " << to_string(l.pf.family) << ", iterations: " << ctx.trace().iterations()
     << ", seed: " << l.seed << "\n";
  for (const auto& r : reports) {
    const char* status = r.probe ? "PROBE" : r.pass ? "PASS" : "FAIL";
    os << status << " " << r.name << " worst_slack=" << r.worst_slack << " samples=" << r.samples
       << "\n";
  }
  return failed ? kExitError : kExitOk;
}

// ---------------------------------------------------------------------------
// compare

constexpr double kEquivalenceTolerance = 1e-10;

int compare_landweber(const Loaded& l, const std::string& out) {
  const RealMatrix a(l.pf.matrix);
  const VectorXd& b = l.pf.data;
  const LandweberRescaling t = landweber_equiv_transform(a);
  StoppingRule rule;
  rule.max_iters = l.config.rule.max_iters;
  rule.step_tol = 0.0;
  SolverConfig cfg;
  cfg.rule = rule;
  const SolveResult am = solve_euclid(EuclidProblem(a, b, l.pf.start), cfg);

  std::vector<double> deviation{0.0};
  VectorXd z = t.forward(l.pf.start);
  double worst = 0.0;
  for (std::size_t k = 1; k <= am.trace.iterations(); ++k) {
    z = landweber_step(t.matrix, b, z, 1.0);
    const double d = (t.back(z) - am.trace.x(k)).cwiseAbs().maxCoeff();
    deviation.push_back(d);
    worst = std::max(worst, d);
  }
  write_file(out, [&](std::ostream& os) {
    os.precision(17);
    os << "k,max_abs_deviation\n";
    for (std::size_t k = 0; k < deviation.size(); ++k) os << k << "," << deviation[k] << "\n";
  });
  const Eigen::MatrixXd btb = t.matrix.values().transpose() * t.matrix.values();
  std::ostream& os = out == "-" ? std::cerr : std::cout;
  os.precision(6);
  os << "iterations: " << am.trace.iterations() << "\n";
  os << "max per-coordinate deviation: " << worst << "\n";
  os << "trace(B^T B): " << std::setprecision(17) << btb.trace() << "\n";
  const bool ok = worst <= kEquivalenceTolerance && std::abs(btb.trace() - 1.0) <= 1e-12;
  os << (ok ? "PASS" : "FAIL") << " landweber_equivalence\n";
  return ok ? kExitOk : kExitError;
}

int compare_hellinger(const Loaded& l, const std::string& out) {
  StoppingRule rule;
  rule.max_iters = l.config.rule.max_iters;
  rule.step_tol = 0.0;
  SolverConfig cfg;
  cfg.rule = rule;
  const KlProblem problem = l.pf.kl_problem();
  const SolveResult t = solve_kl(Family::hellinger, problem, cfg);
  const SolveResult prox = solve_hellinger_prox(problem, cfg);
  const ColumnStochastic& p = t.normalization->matrix;
  const VectorXd& y = l.pf.data;
  VectorXd x_hat;
  std::string method;
  try {
    const OracleSolution o = oracle_minimize(Family::hellinger, p, y);
    x_hat = o.minimizer;
    method = o.method;
  } catch (const OracleUnavailable&) {
    SolverConfig long_run;
    long_run.rule.max_iters = 20000;
    long_run.rule.step_tol = 1e-30;
    x_hat = solve_kl(Family::hellinger, problem, long_run).trace.last().x;
    method = "limit of a 20000-iteration run";
  }
  const KlInequalityComparison cmp = compare_kl_inequalities(p, y, x_hat, t.trace, prox.trace);
  write_file(out, [&](std::ostream& os) {
    os.precision(17);
    os << "k,klh,prox_newer,prox_older\n";
    for (const auto& r : cmp.rows) {
      os << r.k << "," << r.klh << "," << r.prox_newer << "," << r.prox_older << "\n";
    }
  });
  std::ostream& os = out == "-" ? std::cerr : std::cout;
  os.precision(6);
  os << "x_hat by " << method << "\n";
  for (const auto& [name, v] : cmp.report.components) os << "min " << name << ": " << v << "\n";
  return kExitOk;
}

int cmd_compare(const Flags& flags) {
  const Loaded l = load(flags, 50);
  const std::string out = flags.out.empty() ? "compare.csv" : flags.out;
  switch (l.pf.family) {
    case Family::euclid:
    case Family::landweber: return compare_landweber(l, out);
    case Family::hellinger: return compare_hellinger(l, out);
    default:
      throw std::invalid_argument("compare needs family euclid, landweber or hellinger, got " +
                                  std::string(to_string(l.pf.family)));
  }
}

// ---------------------------------------------------------------------------
// gen

int cmd_gen(const Flags& flags) {
  if (flags.rows < 1 || flags.cols < 1) throw std::invalid_argument("--rows and --cols must be >= 1");
  const Family family = family_from_string(flags.family.empty() ? "smart" : flags.family);
  const std::uint64_t seed = flags.seed.value_or(0);
  Rng rng(seed);
  const auto I = static_cast<Eigen::Index>(flags.rows);
  const auto J = static_cast<Eigen::Index>(flags.cols);
  ProblemFile pf;
  pf.family = family;
  pf.options.seed = seed;
  if (is_kl_family(family)) {
    const KlInstance inst = random_kl_instance(rng, I, J, flags.consistent);
    pf.matrix = inst.matrix.values();
    pf.data = inst.data;
    pf.start = inst.start;
  } else {
    const EuclidInstance inst = random_euclid_instance(rng, I, J, flags.consistent);
    pf.matrix = inst.matrix.values();
    pf.data = inst.data;
    pf.start = inst.start;
    if (family == Family::landweber) {
      const Eigen::MatrixXd ata = pf.matrix.transpose() * pf.matrix;
      pf.options.gamma = 1.0 / power_method_rho(ata).value;
    }
  }
  if (flags.max_iters) pf.options.max_iters = *flags.max_iters;
  if (flags.f_tol) pf.options.f_tol = *flags.f_tol;
  if (flags.step_tol) pf.options.step_tol = *flags.step_tol;
  write_file(flags.out.empty() ? "-" : flags.out,
             [&](std::ostream& os) { write_problem(os, pf); });
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Auxiliary-function iterative solvers and property checks"};
  app.require_subcommand(1);
  Flags flags;

  auto add_problem_flags = [&](CLI::App* sub, bool file_required) {
    auto* f = sub->add_option("--file", flags.file, "problem file");
    if (file_required) f->required()->check(CLI::ExistingFile);
    sub->add_option("--family", flags.family,
                    "euclid, landweber, smart, emml, hellinger or pearson");
    sub->add_option("--max-iters", flags.max_iters, "iteration cap");
    sub->add_option("--f-tol", flags.f_tol, "stop when the objective drop is below this");
    sub->add_option("--step-tol", flags.step_tol, "stop when the step distance is below this");
    sub->add_option("--seed", flags.seed, "random seed");
    sub->add_option("--out", flags.out, "output path ('-' for stdout)");
  };

  auto* solve = app.add_subcommand("solve", "run a solver and write its trace");
  add_problem_flags(solve, true);
  solve->add_option("--gamma", flags.gamma, "Landweber step size");

  auto* check = app.add_subcommand("check", "run property checks and write a report");
  add_problem_flags(check, true);
  check->add_option("--gamma", flags.gamma, "Landweber step size");
  check->add_option("--props", flags.props, "comma-separated property names")->delimiter(',');
  check->add_flag("--all", flags.all, "every property that applies to the family");

  auto* compare = app.add_subcommand("compare", "Landweber vs L, or the two Hellinger KL inequalities");
  add_problem_flags(compare, true);

  auto* gen = app.add_subcommand("gen", "write a seeded random problem");
  add_problem_flags(gen, false);
  gen->add_option("--rows", flags.rows, "number of rows I");
  gen->add_option("--cols", flags.cols, "number of columns J");
  gen->add_flag("--consistent", flags.consistent, "data = matrix * positive x_true");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*solve) return cmd_solve(flags);
    if (*check) return cmd_check(flags);
    if (*compare) return cmd_compare(flags);
    return cmd_gen(flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
}
