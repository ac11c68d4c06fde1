// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails. Set VOE_ACCEPTANCE_FULL=1 to add the reps=1000
// simulation check to criterion 5.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "voe/counterfactual.hpp"
#include "voe/estimators.hpp"
#include "voe/gaussian.hpp"
#include "voe/npmle.hpp"
#include "voe/random.hpp"
#include "voe/simulation.hpp"

using namespace voe;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(digits);
  o << v;
  return o.str();
}

std::string sci(double v) {
  std::ostringstream o;
  o.setf(std::ios::scientific);
  o.precision(2);
  o << v;
  return o.str();
}

StudySet calibrated_collection() {
  return generate_synthetic_meta(SyntheticTarget{}, RandomStream::named(1, "generation"));
}

StudySet random_het_set(std::size_t n, double mu, double gamma, std::uint64_t seed) {
  RandomStream rng = RandomStream::named(seed, "acceptance-data");
  std::vector<Study> v;
  v.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double se = 0.05 + 2.0 * rng.uniform();
    const double tau = mu + gamma * rng.normal();
    v.push_back({"s" + std::to_string(i), tau + se * rng.normal(), se});
  }
  return StudySet(std::move(v));
}

Outcome criterion1() {
  const double v = expected_payoff(GaussianPriord(-0.1421, 0.9036), 0.7641, 0.0);
  return {std::abs(v - 0.2138) <= 5e-4, "V(0.7641) = " + fmt(v, 6) + " (target 0.2138 +/- 5e-4)"};
}

Outcome criterion2() {
  const double v = expected_payoff(GaussianPriord(0.0, 1.0), 0.01, 0.0);
  return {std::abs(v - 0.3970) <= 5e-4, "V(0.01) under N(0,1) = " + fmt(v, 6) + " (target 0.3970 +/- 5e-4)"};
}

Outcome criterion3() {
  const PriorMoments m = estimate_prior_moments(-0.1421, 1.6677, 0.7641);
  std::ostringstream o;
  o.precision(17);
  o << "gamma_sq_hat = " << m.gamma_sq_hat << " (target 0.9036 exactly)";
  return {m.gamma_sq_hat == 0.9036 && !m.clamped, o.str()};
}

struct ReferenceValues {
  std::vector<PayoffEstimate> estimates;
};

Outcome criterion4(ReferenceValues& table) {
  const auto t0 = Clock::now();
  std::vector<StudySet> sets;
  sets.push_back(calibrated_collection());
  sets.push_back(random_het_set(300, 0.4, 0.7, 1));
  sets.push_back(random_het_set(300, -0.6, 1.2, 2));
  sets.push_back(random_het_set(300, 0.0, 0.3, 3));
  double worst = 0.0;
  const EstimatorConfig cfg;
  for (std::size_t k = 0; k < sets.size(); ++k) {
    for (Method method : kAllMethods) {
      const PayoffEstimate e = estimate(sets[k], method, cfg);
      const double gap = std::abs((e.void_value - e.voe) - (std::max(e.mu_hat, 0.0) - e.mu_hat));
      worst = std::max(worst, gap);
      if (k == 0) table.estimates.push_back(e);
    }
  }
  double diff_dev = 0.0;
  std::string diffs;
  for (const PayoffEstimate& e : table.estimates) {
    const double d = e.void_value - e.voe;
    diff_dev = std::max(diff_dev, std::abs(d - 0.1421));
    diffs += " " + fmt(d);
  }
  const bool pass = worst <= 1e-10 && diff_dev <= 5e-4;
  return {pass, "max identity gap " + sci(worst) + " over " + std::to_string(sets.size() * 4) +
                    " fits; synthetic void-voe =" + diffs + " (target ~0.1421); " +
                    fmt(seconds_since(t0), 1) + " s"};
}

Outcome criterion5() {
  const auto t0 = Clock::now();
  const std::vector<Method> methods{Method::ParametricHom, Method::NonparametricHom};
  const SimulationTable t = run_simulation_study({gaussian_dgp(), mixture_dgp()}, 200, methods, 1);
  const double elapsed = seconds_since(t0);
  const SimulationRow& g = t.rows[0];
  const SimulationRow& m = t.rows[1];
  const SimulationCell& gp = g.cells[0];
  const SimulationCell& gn = g.cells[1];
  const SimulationCell& mp = m.cells[0];
  const SimulationCell& mn = m.cells[1];
  const bool no_failures = !gp.failed && !gn.failed && !mp.failed && !mn.failed;
  const bool c_gauss = std::abs(gp.mean - 0.3970) <= 0.01 && std::abs(gn.mean - 0.3970) <= 0.01;
  const bool c_truth = std::abs(m.true_value - 0.3225) <= 0.005;
  const bool c_np = std::abs(mn.mean - 0.3227) <= 0.015;
  const bool c_bias = mp.mean >= m.true_value + 0.05;
  const double np_spread = mn.q_hi - mn.q_lo;
  const double p_spread = mp.q_hi - mp.q_lo;
  const bool c_spread = np_spread < p_spread;
  bool pass = no_failures && c_gauss && c_truth && c_np && c_bias && c_spread;
  std::string detail = "reps=200 n=500: gaussian P " + fmt(gp.mean) + " NP " + fmt(gn.mean) +
                       " (0.3970 +/- 0.01); mixture truth " + fmt(m.true_value) +
                       " (0.3225 +/- 0.005), NP " + fmt(mn.mean) + " (0.3227 +/- 0.015), P " +
                       fmt(mp.mean) + " (>= truth + 0.05), spread NP " + fmt(np_spread) + " < P " +
                       fmt(p_spread) + "; runtime " + fmt(elapsed, 0) + " s (target < 900 s)";
  const char* full = std::getenv("VOE_ACCEPTANCE_FULL");
  if (full != nullptr && std::string(full) == "1") {
    const SimulationTable f = run_simulation_study({gaussian_dgp(), mixture_dgp()}, 1000,
                                                   {Method::NonparametricHom}, 1);
    const SimulationCell& fg = f.rows[0].cells[0];
    const SimulationCell& fm = f.rows[1].cells[0];
    const bool ends = std::abs(fg.q_lo - 0.3423) <= 0.01 && std::abs(fg.q_hi - 0.4517) <= 0.01 &&
                      std::abs(fm.q_lo - 0.2685) <= 0.01 && std::abs(fm.q_hi - 0.3768) <= 0.01;
    pass = pass && ends;
    detail += "; reps=1000 NP intervals [" + fmt(fg.q_lo) + ", " + fmt(fg.q_hi) + "] [" +
              fmt(fm.q_lo) + ", " + fmt(fm.q_hi) + "]";
  }
  return {pass, detail};
}

Outcome criterion6() {
  const StudySet data = calibrated_collection();
  const PriorMoments m = estimate_prior_moments(data);
  const Eigen::VectorXd s = data.variances();
  const double base = counterfactual_direct(m, s, 1.0, 0.0);
  const double r_half = counterfactual_direct(m, s, 0.5, 0.0) / base;
  const double r_more = counterfactual_direct(m, s, 1.5, 0.0) / base;
  std::vector<double> grid;
  for (int k = 0; k < 50; ++k) grid.push_back(0.05 + 0.05 * k);
  const CounterfactualCurve curve = lambda_sweep(data, grid, {});
  int violations = 0;
  for (std::size_t k = 1; k < curve.voe_values.size(); ++k)
    violations += curve.voe_values[k] > curve.voe_values[k - 1] ? 1 : 0;
  const bool pass = std::abs(r_half - 1.116) <= 0.02 && std::abs(r_more - 0.919) <= 0.02 && violations == 0;
  return {pass, "VoE(0.5)/VoE(1) = " + fmt(r_half) + " (1.116 +/- 0.02), VoE(1.5)/VoE(1) = " +
                    fmt(r_more) + " (0.919 +/- 0.02), " + std::to_string(violations) +
                    " monotonicity violations on 50 points"};
}

Outcome criterion7() {
  using LD = long double;
  RandomStream rng = RandomStream::named(7, "acceptance-derivatives");
  double worst1 = 0.0;
  double worst2 = 0.0;
  int sign_violations = 0;
  int points = 0;
  while (points < 1000) {
    const double mu = -2.0 + 4.0 * rng.uniform();
    const double g = 0.1 + 3.9 * rng.uniform();
    const double s = 0.01 + 3.99 * rng.uniform();
    const double c = -0.5 + rng.uniform();
    if (std::abs((mu - c) * std::sqrt(g + s) / g) > 4.0) continue;
    ++points;
    const auto v_s = [&](LD x) { return expected_payoff(GaussianPrior<LD>(mu, g), x, LD(c)); };
    const auto v_g = [&](LD x) { return expected_payoff(GaussianPrior<LD>(mu, x), LD(s), LD(c)); };
    const LD hs = std::min(1e-5L * (g + s), LD(s) / 2);
    const LD hg = 1e-5L * g;
    const GaussianPriord prior(mu, g);
    const double a1 = dV_dsigma_sq(prior, s, c);
    const double a2 = dV_dgamma_sq(prior, s, c);
    const double a3 = d2V_dsigma_sq2(prior, s, c);
    const double f1 = static_cast<double>(oracle::central_first(v_s, s, hs));
    const double f2 = static_cast<double>(oracle::central_first(v_g, g, hg));
    const double f3 = static_cast<double>(oracle::central_second(v_s, s, std::min(10 * hs, LD(s) / 2)));
    const auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); };
    worst1 = std::max({worst1, rel(a1, f1), rel(a2, f2)});
    worst2 = std::max(worst2, rel(a3, f3));
    sign_violations += (a1 <= 0.0 && a2 >= 0.0 && a3 >= 0.0) ? 0 : 1;
  }
  const bool pass = worst1 <= 1e-6 && worst2 <= 1e-4 && sign_violations == 0;
  return {pass, "1000 points: max rel err first " + sci(worst1) + " (<= 1e-6), second " + sci(worst2) +
                    " (<= 1e-4), " + std::to_string(sign_violations) + " sign violations"};
}

Outcome criterion8_lattice() {
  const auto t0 = Clock::now();
  RandomStream rng = RandomStream::named(8, "acceptance-lattice");
  double worst = std::numeric_limits<double>::infinity();
  int non_monotone = 0;
  for (int inst = 0; inst < 25; ++inst) {
    const int n = 3 + static_cast<int>(rng.below(18));
    const int m = 2 + static_cast<int>(rng.below(4));
    std::vector<double> u;
    for (int j = 0; j < m; ++j) u.push_back(-3.0 + 6.0 * (j + rng.uniform()) / m);
    std::vector<double> z;
    for (int i = 0; i < n; ++i) z.push_back(u[rng.below(static_cast<std::uint64_t>(m))] + rng.normal());
    const Grid grid(Eigen::Map<const Eigen::VectorXd>(u.data(), m));
    const NpmleFit fit = fit_npmle(z, grid, NpmleConfig{}.tol, NpmleConfig{}.max_iter);
    const oracle::LatticeBest best = oracle::simplex_lattice_search(z, u, 0.02);
    worst = std::min(worst, fit.report.log_likelihood - best.log_likelihood);
    const auto& tr = fit.report.likelihood_trace;
    non_monotone += std::is_sorted(tr.begin(), tr.end()) ? 0 : 1;
  }
  return {worst >= -1e-4 && non_monotone == 0,
          "25 instances: min (EM - lattice) log-likelihood " + sci(worst) + " (>= -1e-4); " +
              std::to_string(non_monotone) + " non-monotone traces; " + fmt(seconds_since(t0), 1) + " s"};
}

Outcome criterion9() {
  double worst_order = std::numeric_limits<double>::infinity();
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const StudySet s = random_het_set(200, -0.5 + 0.01 * static_cast<double>(seed), 0.8, 900 + seed);
    worst_order = std::min(worst_order, parametric_heteroskedastic(s).v_hat - parametric_homoskedastic(s).v_hat);
  }
  RandomStream rng = RandomStream::named(9, "acceptance-floor");
  double worst_floor = std::numeric_limits<double>::infinity();
  const int samples = 200000;
  for (int i = 0; i < samples; ++i) {
    const GaussianPriord prior(-5.0 + 10.0 * rng.uniform(), std::pow(10.0, -6.0 + 8.0 * rng.uniform()));
    const double s = std::pow(10.0, -6.0 + 8.0 * rng.uniform());
    const double c = -3.0 + 6.0 * rng.uniform();
    worst_floor = std::min(worst_floor, expected_payoff(prior, s, c) - payoff_no_info(prior, c));
  }
  return {worst_order >= -1e-12 && worst_floor >= 0.0,
          "min V_het - V_hom over 100 sets " + sci(worst_order) + " (>= -1e-12); min V - V_prior over " +
              std::to_string(samples) + " points " + sci(worst_floor) + " (>= 0)"};
}

Outcome criterion10(const ReferenceValues& table, bool covered) {
  std::string values;
  for (const PayoffEstimate& e : table.estimates)
    values += " " + std::string(method_name(e.method)) + " voe=" + fmt(e.voe) + " void=" + fmt(e.void_value);
  return {covered,
          "published per-study values are not distributed, so those point values are not reproduced; "
          "the checkable parts are criteria 1, 3, 4 and 6 (" + std::string(covered ? "all pass" : "not all pass") +
              "). Synthetic-data values for reference:" + values};
}

Outcome guarded(const std::function<Outcome()>& f) {
  try {
    return f();
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

}  // namespace

int main() {
  std::vector<Outcome> out(11);
  ReferenceValues table;
  const auto run = [&](int k, const std::function<Outcome()>& f) {
    std::fprintf(stderr, "running criterion %d\n", k);
    out[static_cast<std::size_t>(k)] = guarded(f);
  };
  run(1, criterion1);
  run(2, criterion2);
  run(3, criterion3);
  run(4, [&] { return criterion4(table); });
  run(5, criterion5);
  run(6, criterion6);
  run(7, criterion7);
  run(9, criterion9);
  // Run last so that the audit covers every fit made above.
  run(8, [] {
    Outcome o = criterion8_lattice();
    const FitAudit audit = fit_audit();
    o.pass = o.pass && audit.non_monotone == 0 && audit.fits > 0;
    o.detail += "; trace audit: " + std::to_string(audit.non_monotone) + " of " + std::to_string(audit.fits) +
                " fits in this run non-monotone";
    return o;
  });
  run(10, [&] { return criterion10(table, out[1].pass && out[3].pass && out[4].pass && out[6].pass); });

  bool all = true;
  for (int k = 1; k <= 10; ++k) {
    const Outcome& o = out[static_cast<std::size_t>(k)];
    std::printf("%s criterion %d: %s\n", o.pass ? "PASS" : "FAIL", k, o.detail.c_str());
    all = all && o.pass;
  }
  std::fflush(stdout);
  return all ? EXIT_SUCCESS : EXIT_FAILURE;
}
