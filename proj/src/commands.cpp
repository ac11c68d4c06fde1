#include "voe/commands.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "voe/errors.hpp"
#include "voe/figures.hpp"
#include "voe/io.hpp"

namespace voe {

using nlohmann::json;

namespace {

constexpr double kIdentityTolerance = 1e-10;

json interval_json(const std::optional<Interval>& i) {
  if (!i) return nullptr;
  return {{"lo", i->lo}, {"hi", i->hi}, {"level", i->level}};
}

std::string interval_text(const std::optional<Interval>& i) {
  if (!i) return "";
  return "[" + format4(i->lo) + "," + format4(i->hi) + "]";
}

std::string pad_right(std::string s, std::size_t w) {
  if (s.size() < w) s.append(w - s.size(), ' ');
  return s;
}

std::string pad_left(std::string s, std::size_t w) {
  if (s.size() < w) s.insert(0, w - s.size(), ' ');
  return s;
}

void validate_npmle(const NpmleConfig& c) {
  if (c.grid_size < 2) throw ValidationError("--grid-size must be >= 2");
  if (!(c.tol > 0.0)) throw ValidationError("--tol must be > 0");
  if (c.max_iter < 1) throw ValidationError("NPMLE max_iter must be >= 1");
  if (!(c.pad >= 0.0)) throw ValidationError("NPMLE pad must be >= 0");
}

json npmle_json(const NpmleConfig& c) {
  return {{"grid_size", c.grid_size}, {"pad", c.pad}, {"tol", c.tol}, {"max_iter", c.max_iter}};
}

}  // namespace

json to_json(const PriorMoments& m) {
  return {{"mu_hat", m.mu_hat},           {"gamma_sq_hat", m.gamma_sq_hat},
          {"raw_gamma_sq", m.raw_gamma_sq}, {"mean_se_sq", m.mean_se_sq},
          {"var_tau_hat", m.var_tau_hat},   {"clamped", m.clamped}};
}

json to_json(const PayoffEstimate& e) {
  json bins = json::array();
  for (const BinDiagnostic& b : e.diagnostics.bins)
    bins.push_back({{"se_lo", b.se_lo},
                    {"se_hi", b.se_hi},
                    {"count", b.count},
                    {"iterations", b.iterations},
                    {"converged", b.converged},
                    {"grid_widened", b.grid_widened},
                    {"log_likelihood", b.log_likelihood}});
  return {{"method", std::string(method_name(e.method))},
          {"v_hat", e.v_hat},
          {"voe", e.voe},
          {"void", e.void_value},
          {"mu_hat", e.mu_hat},
          {"information_cost", e.information_cost},
          {"voe_interval", interval_json(e.voe_interval)},
          {"void_interval", interval_json(e.void_interval)},
          {"diagnostics",
           {{"gamma_sq_clamped", e.diagnostics.gamma_sq_clamped},
            {"posterior_fallbacks", e.diagnostics.posterior_fallbacks},
            {"bins", bins},
            {"notes", e.diagnostics.notes}}}};
}

void write_bundle(const ReportBundle& bundle, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory '" + dir.string() + "'");
  const auto write = [&](const std::filesystem::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + p.string() + "'");
    out << text;
  };
  write(dir / (bundle.stem + ".json"), bundle.document.dump(2) + "\n");
  write(dir / (bundle.stem + ".txt"), bundle.table);
  for (const auto& [name, svg] : bundle.figures) write(dir / name, svg);
}

ReportBundle cmd_estimate(const EstimateConfig& cfg) {
  if (cfg.methods.empty()) throw ValidationError("no methods selected");
  if (cfg.bins < 1) throw ValidationError("--bins must be >= 1");
  if (cfg.bootstrap < 0 || cfg.bootstrap == 1) throw ValidationError("--bootstrap must be 0 or >= 2");
  if (!(cfg.level > 0.0 && cfg.level < 1.0)) throw ValidationError("interval level must be in (0, 1)");
  if (cfg.histogram_bins < 0) throw ValidationError("histogram bins must be >= 0");
  validate_npmle(cfg.npmle);

  const std::vector<CostModel::Knot> table =
      cfg.cost_table ? load_cost_table(*cfg.cost_table) : std::vector<CostModel::Knot>{};
  EstimatorConfig est;
  est.costs = CostModel(cfg.c_launch, cfg.c_fixed, table);
  est.npmle = cfg.npmle;
  est.n_bins = cfg.bins;

  const LoadedStudies loaded = load_studies(cfg.input);
  const StudySet& data = loaded.studies;
  const PriorMoments moments = estimate_prior_moments(data);
  const RandomStream boot_stream = RandomStream::named(cfg.seed, "bootstrap");

  json rejected = json::array();
  for (const RejectedRow& r : loaded.rejected) rejected.push_back({{"line", r.line}, {"reason", r.reason}});

  ReportBundle bundle;
  bundle.stem = "estimate";
  json& doc = bundle.document;
  doc["command"] = "estimate";
  doc["input"] = {{"path", cfg.input.string()},
                  {"n", data.size()},
                  {"rejected_rows", rejected},
                  {"rejected_count", loaded.rejected.size()}};
  json methods = json::array();
  for (Method m : cfg.methods) methods.push_back(std::string(method_name(m)));
  doc["config"] = {{"methods", methods},
                   {"c_launch", cfg.c_launch},
                   {"c_fixed", cfg.c_fixed},
                   {"cost_table", cfg.cost_table ? json(cfg.cost_table->string()) : json(nullptr)},
                   {"npmle", npmle_json(cfg.npmle)},
                   {"bins", cfg.bins},
                   {"bootstrap", cfg.bootstrap},
                   {"level", cfg.level},
                   {"seed", cfg.seed}};
  doc["moments"] = to_json(moments);

  struct Cell {
    Method method;
    std::optional<PayoffEstimate> estimate;
    std::string error;
  };
  std::vector<Cell> cells;
  json estimates = json::array();
  bool all_pass = true;
  for (std::size_t k = 0; k < cfg.methods.size(); ++k) {
    const Method m = cfg.methods[k];
    Cell cell{m, std::nullopt, {}};
    try {
      PayoffEstimate e = estimate(data, m, est);
      if (cfg.bootstrap > 0) {
        const BootstrapResult b = bootstrap_interval(data, m, est, cfg.bootstrap, cfg.level,
                                                     boot_stream.substream(static_cast<std::uint64_t>(m)));
        e.voe_interval = b.voe;
        e.void_interval = b.void_value;
        if (b.failures > 0)
          e.diagnostics.notes.push_back(std::to_string(b.failures) + " bootstrap replicates failed");
      }
      cell.estimate = std::move(e);
    } catch (const Error& err) {
      cell.error = err.what();
    }
    json j;
    if (cell.estimate) {
      const PayoffEstimate& e = *cell.estimate;
      j = to_json(e);
      const double excess = e.mu_hat - est.costs.c_launch();
      const double expected = std::max(excess, 0.0) - excess;
      const double observed = e.void_value - e.voe;
      const bool pass = std::abs(observed - expected) <= kIdentityTolerance;
      all_pass = all_pass && pass;
      j["identity_check"] = {{"expected", expected}, {"observed", observed}, {"pass", pass}};
    } else {
      j = {{"method", std::string(method_name(m))}, {"error", cell.error}};
    }
    estimates.push_back(j);
    cells.push_back(std::move(cell));
  }
  doc["estimates"] = estimates;
  doc["identity_checks_pass"] = all_pass;

  // Table with VoE / VoID rows and one column per method.
  std::ostringstream t;
  t << "Results for " << cfg.input.filename().string() << " (n = " << data.size() << ")\n";
  t << "Distribution of tau_hat: mu_hat = " << format4(moments.mu_hat)
    << ", var = " << format4(moments.var_tau_hat) << ", mean se^2 = " << format4(moments.mean_se_sq)
    << ", gamma_sq_hat = " << format4(moments.gamma_sq_hat) << (moments.clamped ? " (clamped)" : "")
    << "\n\n";
  constexpr std::size_t kLabel = 22;
  constexpr std::size_t kCol = 20;
  t << pad_right("Value of EBDM", kLabel);
  for (const Cell& c : cells) t << pad_left(std::string(method_name(c.method)), kCol);
  t << '\n';
  const auto row = [&](const char* label, auto&& value) {
    t << pad_right(label, kLabel);
    for (const Cell& c : cells) t << pad_left(c.estimate ? value(*c.estimate) : std::string("error"), kCol);
    t << '\n';
  };
  row("VoE   estimate", [](const PayoffEstimate& e) { return format4(e.voe); });
  if (cfg.bootstrap > 0)
    row("      interval", [](const PayoffEstimate& e) { return interval_text(e.voe_interval); });
  row("VoID  estimate", [](const PayoffEstimate& e) { return format4(e.void_value); });
  if (cfg.bootstrap > 0)
    row("      interval", [](const PayoffEstimate& e) { return interval_text(e.void_interval); });
  row("V     estimate", [](const PayoffEstimate& e) { return format4(e.v_hat); });
  t << "\nidentity void - voe = max{mu - c_L, 0} - (mu - c_L): " << (all_pass ? "pass" : "FAIL") << '\n';
  for (const Cell& c : cells) {
    if (!c.estimate) {
      t << method_name(c.method) << ": error: " << c.error << '\n';
      continue;
    }
    if (c.estimate->method == Method::NonparametricHet) {
      t << "\nnonparametric-het bins:\n";
      for (const BinDiagnostic& b : c.estimate->diagnostics.bins)
        t << "  se in [" << format4(b.se_lo) << ", " << format4(b.se_hi) << "]  n = " << b.count
          << "  iterations = " << b.iterations << (b.converged ? "" : " (max_iter)") << '\n';
    }
    for (const std::string& note : c.estimate->diagnostics.notes)
      t << method_name(c.method) << ": " << note << '\n';
  }
  bundle.table = t.str();

  if (cfg.histogram) {
    const Eigen::VectorXd tau = data.tau_hats();
    const Histogram h = make_histogram(std::span<const double>(tau.data(), static_cast<std::size_t>(tau.size())),
                                       cfg.histogram_bins);
    bundle.figures["tau_hat_histogram.svg"] =
        histogram_svg(h, "Distribution of estimated treatment effects", "tau_hat");
  }
  return bundle;
}

ReportBundle cmd_simulate(const SimulateConfig& cfg) {
  if (cfg.reps < 2) throw ValidationError("--reps must be >= 2");
  if (cfg.n < 1) throw ValidationError("n must be >= 1");
  if (!(cfg.sigma > 0.0)) throw ValidationError("sigma must be > 0");
  if (cfg.truth_draws < 1) throw ValidationError("truth draws must be >= 1");
  validate_npmle(cfg.npmle);
  std::vector<DGPSpec> dgps;
  for (const std::string& name : cfg.dgps) {
    if (name == "gaussian")
      dgps.push_back(gaussian_dgp(cfg.n, cfg.sigma));
    else if (name == "mixture")
      dgps.push_back(mixture_dgp(cfg.n, cfg.sigma));
    else
      throw ValidationError("unknown dgp '" + name + "' (expected gaussian or mixture)");
  }
  SimulationOptions opts;
  opts.npmle = cfg.npmle;
  opts.truth_draws = cfg.truth_draws;
  const SimulationTable table = run_simulation_study(dgps, cfg.reps, cfg.methods, cfg.seed, opts);

  ReportBundle bundle;
  bundle.stem = "simulate";
  json& doc = bundle.document;
  doc["command"] = "simulate";
  json methods = json::array();
  for (Method m : cfg.methods) methods.push_back(std::string(method_name(m)));
  doc["config"] = {{"dgps", cfg.dgps},     {"methods", methods},
                   {"reps", cfg.reps},     {"n", cfg.n},
                   {"sigma", cfg.sigma},   {"truth_draws", cfg.truth_draws},
                   {"npmle", npmle_json(cfg.npmle)}, {"seed", cfg.seed}};
  json rows = json::array();
  for (const SimulationRow& r : table.rows) {
    json cells = json::array();
    for (const SimulationCell& c : r.cells)
      cells.push_back({{"method", std::string(method_name(c.method))},
                       {"mean", c.mean},
                       {"q025", c.q_lo},
                       {"q975", c.q_hi},
                       {"failures", c.failures},
                       {"failed", c.failed}});
    rows.push_back({{"dgp", r.dgp},
                    {"true_value", r.true_value},
                    {"true_value_se", r.true_value_se},
                    {"truth_provenance", r.truth_provenance},
                    {"cells", cells}});
  }
  doc["rows"] = rows;

  std::ostringstream t;
  t << "Expected payoff of EBDM (reps = " << cfg.reps << ", n = " << cfg.n
    << ", sigma = " << format_double(cfg.sigma) << ", seed = " << cfg.seed << ")\n\n";
  constexpr std::size_t kLabel = 24;
  constexpr std::size_t kCol = 20;
  t << pad_right("distribution of tau", kLabel) << pad_left("true value", kCol);
  for (Method m : cfg.methods) t << pad_left(std::string(method_name(m)), kCol);
  t << '\n';
  for (const SimulationRow& r : table.rows) {
    t << pad_right(r.dgp + "  expected payoff", kLabel) << pad_left(format4(r.true_value), kCol);
    for (const SimulationCell& c : r.cells) t << pad_left(c.failed ? "failed" : format4(c.mean), kCol);
    t << '\n' << pad_right("  95% interval", kLabel) << pad_left("", kCol);
    for (const SimulationCell& c : r.cells)
      t << pad_left(c.failed ? "" : interval_text(Interval{c.q_lo, c.q_hi, 0.95}), kCol);
    t << '\n';
  }
  bundle.table = t.str();
  return bundle;
}

ReportBundle cmd_counterfactual(const CounterfactualCommandConfig& cfg) {
  if (cfg.reps < 1) throw ValidationError("--reps must be >= 1");
  const LoadedStudies loaded = load_studies(cfg.input);
  CounterfactualConfig cc;
  cc.mode = cfg.mode;
  cc.c_launch = cfg.c_launch;
  cc.reps = cfg.reps;
  cc.seed = cfg.seed;
  const CounterfactualCurve curve = lambda_sweep(loaded.studies, cfg.lambdas, cc);

  ReportBundle bundle;
  bundle.stem = "counterfactual";
  json& doc = bundle.document;
  const std::string mode = cfg.mode == CounterfactualMode::Direct ? "direct" : "resample";
  doc["command"] = "counterfactual";
  doc["input"] = {{"path", cfg.input.string()}, {"n", loaded.studies.size()},
                  {"rejected_count", loaded.rejected.size()}};
  doc["config"] = {{"lambdas", cfg.lambdas}, {"mode", mode},        {"reps", cfg.reps},
                   {"c_launch", cfg.c_launch}, {"seed", cfg.seed}};
  json points = json::array();
  for (std::size_t i = 0; i < curve.lambdas.size(); ++i)
    points.push_back({{"lambda", curve.lambdas[i]},
                      {"voe", curve.voe_values[i]},
                      {"interval", interval_json(curve.intervals[i])}});
  doc["curve"] = points;

  std::ostringstream t;
  t << "Counterfactual value of EBDM (" << mode << " mode, n = " << loaded.studies.size() << ")\n\n";
  t << pad_left("lambda", 10) << pad_left("VoE", 12);
  if (cfg.mode == CounterfactualMode::Resample) t << pad_left("95% interval", 20);
  t << '\n';
  for (std::size_t i = 0; i < curve.lambdas.size(); ++i) {
    t << pad_left(format4(curve.lambdas[i]), 10) << pad_left(format4(curve.voe_values[i]), 12);
    if (curve.intervals[i]) t << pad_left(interval_text(curve.intervals[i]), 20);
    t << '\n';
  }
  bundle.table = t.str();
  bundle.figures["counterfactual.svg"] =
      curve_svg(curve.lambdas, curve.voe_values, curve.intervals, "Counterfactual values of EBDM",
                "variance modification factor lambda", "VoE");
  return bundle;
}

StudySet cmd_generate(const GenerateConfig& cfg) {
  StudySet set = generate_synthetic_meta(cfg.target, RandomStream::named(cfg.seed, "generation"));
  if (cfg.output.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.output.parent_path(), ec);
  }
  write_studies(cfg.output, set);
  return set;
}

std::vector<double> parse_lambda_grid(const std::string& spec) {
  const auto parse = [&](const std::string& s) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != s.size()) throw ValidationError("bad lambda value '" + s + "'");
    return v;
  };
  std::vector<double> out;
  if (spec.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() != 3) throw ValidationError("lambda grid range must be start:stop:step");
    const double a = parse(parts[0]);
    const double b = parse(parts[1]);
    const double step = parse(parts[2]);
    if (!(step > 0.0) || !(b >= a)) throw ValidationError("lambda grid range needs stop >= start and step > 0");
    const auto count = static_cast<long>(std::floor((b - a) / step + 1e-9)) + 1;
    for (long k = 0; k < count; ++k) out.push_back(a + static_cast<double>(k) * step);
  } else {
    std::stringstream ss(spec);
    for (std::string p; std::getline(ss, p, ',');) out.push_back(parse(p));
  }
  if (out.empty()) throw ValidationError("empty lambda grid");
  return out;
}

}  // namespace voe
