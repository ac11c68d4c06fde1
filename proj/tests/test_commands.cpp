#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "voe/commands.hpp"
#include "voe/io.hpp"

using namespace voe;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "voe_test_commands";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string cli() {
  const char* p = std::getenv("VOE_CLI");
  REQUIRE_MESSAGE(p != nullptr, "VOE_CLI must point at the voe executable");
  return p;
}

int run(const std::string& args) {
  const std::string cmd = cli() + " " + args + " > " + (work_dir() / "stdout.txt").string() + " 2> " +
                          (work_dir() / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

// A modest synthetic file shared by the tests below.
fs::path synthetic_file(std::size_t n) {
  const fs::path out = work_dir() / ("syn_" + std::to_string(n));
  const fs::path file = out / "studies.csv";
  if (!fs::exists(file)) {
    REQUIRE(run("generate --seed 1 --n " + std::to_string(n) + " --output-dir " + out.string()) == 0);
  }
  return file;
}

const std::string kQuick = " --grid-size 40 --max-iter 200";

}  // namespace

TEST_CASE("generate writes calibrated files") {
  const fs::path out = work_dir() / "gen_default";
  REQUIRE(run("generate --seed 1 --output-dir " + out.string()) == 0);
  const LoadedStudies full = load_studies(out / "studies.csv");
  CHECK(full.studies.size() == 8821);
  const PriorMoments m = estimate_prior_moments(full.studies);
  CHECK(std::abs(m.mu_hat + 0.1421) <= 0.02 * 0.1421);
  CHECK(std::abs(m.var_tau_hat - 1.6677) <= 0.02 * 1.6677);
  CHECK(std::abs(m.mean_se_sq - 0.7641) <= 0.02 * 0.7641);

  const fs::path small = work_dir() / "gen_10";
  REQUIRE(run("generate --seed 3 --n 10 --output-dir " + small.string() + " --file-name ten.csv") == 0);
  CHECK(load_studies(small / "ten.csv").studies.size() == 10);

  CHECK(run("generate --var 0.5 --output-dir " + small.string()) == 2);
  CHECK(slurp(work_dir() / "stderr.txt").find("var_tau_hat > mean_se_sq") != std::string::npos);
}

TEST_CASE("estimate with all methods and bootstrap") {
  const fs::path input = synthetic_file(300);
  const fs::path out = work_dir() / "est_all";
  REQUIRE(run("estimate --input " + input.string() + " --output-dir " + out.string() +
              " --bootstrap 20 --bins 5 --seed 4" + kQuick) == 0);
  const json doc = read_json(out / "estimate.json");
  CHECK(doc["identity_checks_pass"] == true);
  REQUIRE(doc["estimates"].size() == 4);
  for (const json& e : doc["estimates"]) {
    CHECK(e.contains("voe"));
    CHECK(e.contains("void"));
    CHECK(e["voe_interval"].is_object());
    CHECK(e["void_interval"].is_object());
    CHECK(e["identity_check"]["pass"] == true);
    const double mu = e["mu_hat"].get<double>();
    CHECK(std::abs((e["void"].get<double>() - e["voe"].get<double>()) - (std::max(mu, 0.0) - mu)) <= 1e-10);
  }
  CHECK(doc["estimates"][3]["method"] == "nonparametric-het");
  CHECK(doc["estimates"][3]["diagnostics"]["bins"].size() == 5);
  CHECK(fs::exists(out / "estimate.txt"));
  CHECK(fs::exists(out / "tau_hat_histogram.svg"));
  const std::string table = slurp(out / "estimate.txt");
  CHECK(table.find("VoE") != std::string::npos);
  CHECK(table.find("interval") != std::string::npos);
  CHECK(slurp(work_dir() / "stdout.txt") == table);

  // The document reproduces the printed numbers exactly.
  const PayoffEstimate direct = parametric_heteroskedastic(load_studies(input).studies);
  CHECK(doc["estimates"][1]["voe"].get<double>() == direct.voe);
  CHECK(json::parse(doc.dump(2)) == doc);
}

TEST_CASE("estimate output is byte-identical across runs") {
  const fs::path input = synthetic_file(300);
  const fs::path a = work_dir() / "det_a";
  const fs::path b = work_dir() / "det_b";
  const std::string args = "estimate --input " + input.string() + " --bootstrap 10 --seed 9" + kQuick;
  REQUIRE(run(args + " --output-dir " + a.string()) == 0);
  REQUIRE(run(args + " --output-dir " + b.string()) == 0);
  CHECK(slurp(a / "estimate.json") == slurp(b / "estimate.json"));
  CHECK(slurp(a / "tau_hat_histogram.svg") == slurp(b / "tau_hat_histogram.svg"));
}

TEST_CASE("minimal estimate report") {
  const fs::path input = work_dir() / "two.csv";
  {
    std::ofstream o(input);
    o << "study_id,tau_hat,se\none,0.5,0.3\ntwo,-0.4,0.2\nbad,1,0\n";
  }
  const fs::path out = work_dir() / "est_two";
  REQUIRE(run("estimate --input " + input.string() + " --method parametric --output-dir " + out.string() +
              " --no-figure") == 0);
  const json doc = read_json(out / "estimate.json");
  REQUIRE(doc["estimates"].size() == 1);
  CHECK(doc["estimates"][0]["voe_interval"].is_null());
  CHECK(doc["input"]["rejected_count"] == 1);
  CHECK(doc["input"]["rejected_rows"][0]["line"] == 4);
  CHECK(!fs::exists(out / "tau_hat_histogram.svg"));
  CHECK(slurp(out / "estimate.txt").find("interval") == std::string::npos);
}

TEST_CASE("estimator failures are reported per cell") {
  const fs::path input = work_dir() / "wide.csv";
  {
    std::ofstream o(input);
    o << "study_id,tau_hat,se\na,-500,1\nb,0,1\nc,500,1\n";
  }
  const fs::path out = work_dir() / "est_wide";
  REQUIRE(run("estimate --input " + input.string() + " --method parametric-hom,nonparametric-hom" +
              " --grid-size 2 --pad 0 --output-dir " + out.string()) == 0);
  const json doc = read_json(out / "estimate.json");
  CHECK(doc["estimates"][0].contains("voe"));
  CHECK(doc["estimates"][1].contains("error"));
}

TEST_CASE("config files supply subcommand options") {
  const fs::path input = synthetic_file(300);
  const fs::path cfg = work_dir() / "estimate.ini";
  {
    std::ofstream o(cfg);
    o << "method = \"parametric-hom,parametric-het\"\nc-launch = 0.1\nseed = 5\n";
  }
  const fs::path out = work_dir() / "est_cfg";
  REQUIRE(run("estimate --config " + cfg.string() + " --input " + input.string() + " --output-dir " +
              out.string()) == 0);
  const json doc = read_json(out / "estimate.json");
  CHECK(doc["estimates"].size() == 2);
  CHECK(doc["config"]["c_launch"] == 0.1);
  CHECK(doc["config"]["seed"] == 5);

  REQUIRE(run("estimate --config " + cfg.string() + " --seed 8 --input " + input.string() + " --output-dir " +
              out.string()) == 0);
  CHECK(read_json(out / "estimate.json")["config"]["seed"] == 8);

  const fs::path bad = work_dir() / "bad.ini";
  {
    std::ofstream o(bad);
    o << "bogus = 1\n";
  }
  CHECK(run("estimate --config " + bad.string() + " --input " + input.string()) == 2);
  CHECK(run("estimate --config /nonexistent.ini --input " + input.string()) == 2);
}

TEST_CASE("simulate") {
  const fs::path out = work_dir() / "sim";
  REQUIRE(run("simulate --dgp gaussian --method parametric-hom --reps 1000 --n 500 --seed 7 --output-dir " +
              out.string()) == 0);
  const json doc = read_json(out / "simulate.json");
  REQUIRE(doc["rows"].size() == 1);
  CHECK(std::abs(doc["rows"][0]["true_value"].get<double>() - 0.3970) <= 5e-5);
  CHECK(slurp(out / "simulate.txt").find("0.3970") != std::string::npos);

  const fs::path mix = work_dir() / "sim_mix";
  REQUIRE(run("simulate --dgp mixture --reps 50 --n 100 --truth-draws 20000 --seed 2 --output-dir " +
              mix.string() + kQuick) == 0);
  const json m = read_json(mix / "simulate.json");
  REQUIRE(m["rows"][0]["cells"].size() == 2);
  for (const json& c : m["rows"][0]["cells"]) {
    CHECK(c["q025"].get<double>() <= c["mean"].get<double>());
    CHECK(c["mean"].get<double>() <= c["q975"].get<double>());
  }

  CHECK(run("simulate --reps 1 --output-dir " + out.string()) == 2);
  CHECK(run("simulate --dgp cauchy --reps 2 --output-dir " + out.string()) == 2);
  CHECK(run("simulate --method parametric-het --reps 2 --output-dir " + out.string()) == 2);
}

TEST_CASE("counterfactual") {
  const fs::path input = synthetic_file(2000);
  const fs::path out = work_dir() / "cf";
  REQUIRE(run("counterfactual --input " + input.string() + " --output-dir " + out.string()) == 0);
  const json doc = read_json(out / "counterfactual.json");
  REQUIRE(doc["curve"].size() == 8);
  for (std::size_t i = 1; i < 8; ++i)
    CHECK(doc["curve"][i]["voe"].get<double>() <= doc["curve"][i - 1]["voe"].get<double>());
  const double at1 = doc["curve"][3]["voe"].get<double>();
  CHECK(doc["curve"][3]["lambda"] == 1.0);
  CHECK(at1 == parametric_heteroskedastic(load_studies(input).studies).voe);
  CHECK(std::abs(at1 - 0.2351) <= 0.03);
  CHECK(fs::exists(out / "counterfactual.svg"));

  const fs::path one = work_dir() / "cf_one";
  REQUIRE(run("counterfactual --input " + input.string() + " --lambda-grid 1.0 --mode resample --reps 20" +
              " --output-dir " + one.string()) == 0);
  CHECK(slurp(one / "counterfactual.svg").find("class=\"band\"") == std::string::npos);

  const fs::path r1 = work_dir() / "cf_r1";
  const fs::path r2 = work_dir() / "cf_r2";
  const std::string args = "counterfactual --input " + input.string() +
                           " --mode resample --reps 100 --lambda-grid 0.5,1,1.5 --seed 3 --output-dir ";
  REQUIRE(run(args + r1.string()) == 0);
  REQUIRE(run(args + r2.string()) == 0);
  CHECK(slurp(r1 / "counterfactual.json") == slurp(r2 / "counterfactual.json"));
  CHECK(slurp(r1 / "counterfactual.svg").find("class=\"band\"") != std::string::npos);

  CHECK(run("counterfactual --input " + input.string() + " --lambda-grid 1,0.5 --output-dir " + out.string()) == 2);
  CHECK(run("counterfactual --input " + input.string() + " --lambda-grid 0:1:0.5 --output-dir " + out.string()) == 2);
}

TEST_CASE("exit codes") {
  const fs::path out = work_dir() / "codes";
  CHECK(run("") == 2);
  CHECK(run("estimate --output-dir " + out.string()) == 2);
  CHECK(run("estimate --input /nonexistent.csv --output-dir " + out.string()) == 3);
  CHECK(run("estimate --input " + synthetic_file(300).string() + " --method bayes --output-dir " + out.string()) == 2);
  CHECK(run("estimate --input " + synthetic_file(300).string() + " --frobnicate") == 2);
  CHECK(run("--help") == 0);
}

TEST_CASE("lambda grid parsing") {
  const auto g = parse_lambda_grid("0.25:2.0:0.25");
  REQUIRE(g.size() == 8);
  CHECK(g.front() == 0.25);
  CHECK(g.back() == 2.0);
  CHECK(parse_lambda_grid("0.5, 1, 1.5") == std::vector<double>{0.5, 1.0, 1.5});
  CHECK_THROWS_AS(parse_lambda_grid("1:0:0.5"), ValidationError);
  CHECK_THROWS_AS(parse_lambda_grid("a,b"), ValidationError);
  CHECK_THROWS_AS(parse_lambda_grid(""), ValidationError);
}
