#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path tmp_dir() {
  const char* env = std::getenv("NETNMF_TEST_TMP");
  const fs::path dir = env ? fs::path(env) : fs::temp_directory_path() / "netnmf_cli_tests";
  fs::create_directories(dir);
  return dir;
}

std::string path(const std::string& name) { return (tmp_dir() / name).string(); }

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = netnmf::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void spit(const std::string& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  f << text;
}

const char* kTruth = R"({"a": 0.6, "pi": [0.6, 0.4],
 "beta_star": {"rows": 3, "cols": 2, "data": [0.6, 0.1, 0.3, 0.3, 0.1, 0.6]},
 "gamma_star": {"rows": 3, "cols": 2, "data": [0.5, 0.2, 0.3, 0.3, 0.2, 0.5]}})";

// Second worked decomposition of the 3 x 3 example.
const char* kExample = R"({"a": 1.0, "pi": [0.1, 0.9],
 "beta_star": {"rows": 3, "cols": 2, "data": [1, 0.3333333333333333, 0, 0.3333333333333333, 0, 0.3333333333333333]},
 "gamma_star": {"rows": 3, "cols": 2, "data": [1, 0.3333333333333333, 0, 0.3333333333333333, 0, 0.3333333333333333]}})";

const char* kExclusion = R"({"B": {"rows": 3, "cols": 2, "data": [1, 0, 0, 1, 1, 1]},
 "C": {"rows": 3, "cols": 2, "data": [0, 2, 3, 0, 1, 1]}})";

std::string simulated(const std::string& name, const std::string& seed = "5", const std::string& T = "800") {
  const std::string truth = path("truth.json");
  spit(truth, kTruth);
  const std::string out = path(name);
  const Run r = run({"simulate", "--factors", truth, "--intercept", "1", "-T", T, "--seed", seed, "-o", out});
  REQUIRE(r.code == 0);
  return out;
}

}  // namespace

TEST_CASE("simulate is byte-identical for a fixed seed") {
  const std::string a = simulated("sim_a.csv");
  const std::string first = slurp(a);
  const std::string again = slurp(simulated("sim_a.csv"));
  CHECK(first == again);
  CHECK(first.rfind("# {", 0) == 0);
  const json meta = json::parse(first.substr(2, first.find('\n') - 2));
  CHECK(meta["tool"] == "netnmf");
  CHECK(meta["config_hash"].get<std::string>().size() == 16);
  CHECK(first != slurp(simulated("sim_b.csv", "6")));
  const json info = json::parse(slurp(a + ".json"));
  CHECK(info["spectral_radius"].get<double>() < 1.0);
}

TEST_CASE("simulate with a zero matrix and no intercept gives zero counts") {
  const std::string m = path("zero.csv");
  spit(m, "0,0\n0,0\n");
  const std::string out = path("zero_traj.csv");
  REQUIRE(run({"simulate", "--matrix", m, "-T", "20", "-o", out}).code == 0);
  std::istringstream in(slurp(out));
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'y') continue;
    CHECK(line == "0,0");
    ++rows;
  }
  CHECK(rows == 20);
}

TEST_CASE("simulate refuses a non-stationary matrix") {
  const std::string m = path("big.csv");
  spit(m, "1.5,0\n0,0.2\n");
  const Run r = run({"simulate", "--matrix", m, "-T", "20", "-o", path("big_traj.csv")});
  CHECK(r.code == 2);
  CHECK(r.err.find("spectral radius") != std::string::npos);
}

TEST_CASE("fit writes rankings and inference") {
  const std::string data = simulated("fit_data.csv", "9", "1500");
  const std::string out = path("fit_k2.json");
  const Run r = run({"fit", "--data", data, "-K", "2", "-o", out});
  REQUIRE(r.code == 0);
  const json rep = json::parse(slurp(out));
  CHECK(rep["spec"]["estimator"] == "iml");
  CHECK(rep["ranking"].size() == 2);
  CHECK(rep["ranking"][0]["vulnerability"].size() == 3);
  CHECK(rep["inference"]["policy"] == "active");
  CHECK(rep["inference"]["rank"]["pass"] == true);
  CHECK(rep["inference"]["variance"]["se_A"]["rows"] == 3);

  const Run k1 = run({"fit", "--data", data, "-K", "1", "-o", path("fit_k1.json")});
  REQUIRE(k1.code == 0);
  const json r1 = json::parse(slurp(path("fit_k1.json")));
  CHECK(r1["spec"]["estimator"] == "ml1");
  CHECK(r1["inference"]["pi_row_vacuous"] == true);
}

TEST_CASE("malformed data exits with code 2 and names the line") {
  const std::string bad = path("bad.csv");
  spit(bad, "# family=poisson n=2 m=2\ny_1,y_2\n1,2\n3,x\n");
  const Run r = run({"fit", "--data", bad});
  CHECK(r.code == 2);
  CHECK(r.err.find("line 4") != std::string::npos);
  CHECK(run({"fit", "--data", path("does_not_exist.csv")}).code == 2);
  CHECK(run({"fit"}).code == 2);
  CHECK(run({"no-such-command"}).code == 2);
}

TEST_CASE("identify-set on an exclusion seed and on the worked example") {
  const std::string ex = path("exclusion.json");
  spit(ex, kExclusion);
  const Run u = run({"identify-set", "--input", ex, "-o", path("excl_id.json")});
  REQUIRE(u.code == 0);
  CHECK(u.out.find("essentially unique: true") != std::string::npos);

  const std::string wk = path("example.json");
  spit(wk, kExample);
  const std::string out = path("example_id.json");
  const Run r = run({"identify-set", "--input", wk, "-o", out});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("essentially unique: false") != std::string::npos);
  const json rep = json::parse(slurp(out));
  CHECK(rep["bounds"]["q12"][0].get<double>() == doctest::Approx(-3.0));
  CHECK(rep["bounds"]["q12"][1].get<double>() == 0.0);
  CHECK(rep["bounds"]["q21"][1].get<double>() == doctest::Approx(1.0 / 3.0));
  CHECK(rep["criteria"]["detB"].get<double>() == doctest::Approx(2.0 / 9.0));
  REQUIRE(rep["cuts"].size() == 2);
  const std::string cut = rep["cuts"][1]["file"];
  CHECK(fs::exists(cut));

  const std::string svg = path("cut.svg");
  REQUIRE(run({"report", "--input", cut, "-o", svg}).code == 0);
  const std::string text = slurp(svg);
  CHECK(text.rfind("<svg", 0) == 0);
  CHECK(text.find("<polyline") != std::string::npos);
  CHECK(text.find("config_hash") != std::string::npos);
  CHECK(run({"report", "--input", cut, "--y", "nope", "-o", svg}).code == 2);
}

TEST_CASE("bounds from a fit report") {
  const std::string data = simulated("bounds_data.csv", "13", "1500");
  const std::string fitp = path("bounds_fit.json");
  REQUIRE(run({"fit", "--data", data, "-K", "2", "-o", fitp}).code == 0);
  const std::string out = path("bounds.json");
  const std::string draws = path("draws.csv");
  const Run r = run({"bounds", "--fit", fitp, "--sims", "100", "--draws-csv", draws, "-o", out});
  REQUIRE(r.code == 0);
  const json rep = json::parse(slurp(out));
  CHECK(rep["bounds"]["statistic"] == "q12");
  std::istringstream in(slurp(draws));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'l') continue;
    const auto comma = line.find(',');
    CHECK(std::stod(line.substr(0, comma)) <= std::stod(line.substr(comma + 1)));
  }
  CHECK(run({"bounds", "--fit", path("example.json")}).code == 2);
}

TEST_CASE("mc-study is deterministic and reads an INI config") {
  const std::string truth = path("truth.json");
  spit(truth, kTruth);
  const std::string a = path("mc_a.json"), b = path("mc_b.json");
  const std::vector<std::string> base{"mc-study", "--truth", truth, "--T-grid", "300,600", "--reps", "3",
                                      "--estimator", "aml", "--master-seed", "4"};
  auto with = [&](const std::string& out, const std::string& threads) {
    auto v = base;
    v.insert(v.end(), {"--threads", threads, "-o", out});
    return v;
  };
  REQUIRE(run(with(a, "1")).code == 0);
  REQUIRE(run(with(b, "2")).code == 0);
  json ja = json::parse(slurp(a)), jb = json::parse(slurp(b));
  CHECK(ja["study"] == jb["study"]);

  const std::string ini = path("mc.ini");
  spit(ini, "[mc-study]\ntruth=" + truth + "\nT-grid=300,600\nreps=3\nestimator=aml\nmaster-seed=4\nthreads=1\n");
  const std::string c = path("mc_c.json");
  REQUIRE(run({"--config", ini, "mc-study", "-o", c}).code == 0);
  CHECK(json::parse(slurp(c))["study"] == ja["study"]);
}

TEST_CASE("version and help exit cleanly") {
  CHECK(run({"--version"}).code == 0);
  CHECK(run({"fit", "--help"}).code == 0);
}
