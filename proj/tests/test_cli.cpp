#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "singflow/cli.hpp"

using namespace singflow;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("singflow_test_" + name)) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

}  // namespace

TEST_CASE("cli: singularities of Lorenz") {
  TempDir dir("sing");
  const Run r = run({"singularities", "--field", "lorenz", "--params", "sigma=10,rho=28,beta=2.6666667", "--out",
                     dir.str()});
  REQUIRE(r.code == kExitOk);
  const auto j = read_json(dir.path / "singularities.json");
  REQUIRE(j["singularities"].size() == 3);
  int lorenz_like = 0;
  for (const auto& s : j["singularities"])
    if (s["classification"] == "lorenz_like_for_X") {
      ++lorenz_like;
      CHECK(s["position"][0].get<double>() == doctest::Approx(0.0));
    }
  CHECK(lorenz_like == 1);
  CHECK(j["header"]["banner"] == "numerical, non-rigorous");
  CHECK(j["header"]["assumptions_unchecked"].size() == 4);
  CHECK(j["header"]["config_hash"].get<std::string>().size() == 16);
}

TEST_CASE("cli: constant field has no singularities") {
  TempDir dir("const");
  const Run r = run({"singularities", "--field", "translation", "--out", dir.str()});
  CHECK(r.code == kExitOk);
  CHECK(read_json(dir.path / "singularities.json")["singularities"].empty());
}

TEST_CASE("cli: configuration errors exit with 2") {
  const Run bad_params = run({"singularities", "--field", "lorenz", "--params", "sigma=ten"});
  CHECK(bad_params.code == kExitConfig);
  CHECK(bad_params.err.find("sigma") != std::string::npos);
  CHECK(run({"singularities", "--field", "lorenz", "--params", "gamma=1"}).code == kExitConfig);
  CHECK(run({"singularities", "--field", "nonexistent"}).code == kExitConfig);
  CHECK(run({"chain-classes", "--field", "translation", "--box", "-1"}).code == kExitConfig);
  CHECK(run({"chain-classes", "--field", "translation", "--time-samples", "0.5,1"}).code == kExitConfig);
  CHECK(run({"certify", "--field", "translation"}).code == kExitConfig);
  CHECK(run({"trace", "--field", "lorenz"}).code == kExitConfig);
  CHECK(run({"bogus"}).code == kExitConfig);
  CHECK(run({}).code == kExitConfig);
}

TEST_CASE("cli: budget errors exit with 3 and name the required budget") {
  const Run r = run({"chain-classes", "--field", "lorenz", "--box", "0.01", "--budget-boxes", "1000"});
  CHECK(r.code == kExitBudget);
  CHECK(r.err.find("216000000000") != std::string::npos);
}

TEST_CASE("cli: chain classes of a linear sink and a translation") {
  TempDir dir("sink");
  const Run r = run({"chain-classes", "--field", "linear", "--params", "d1=-1,d2=-1,d3=-1", "--box", "0.25", "--eps",
                     "0.05", "--out", dir.str()});
  REQUIRE(r.code == kExitOk);
  const auto j = read_json(dir.path / "graph.json");
  CHECK(j["box_count"] == 512);
  CHECK(j["recurrent_box_count"].get<int>() >= 8);
  std::ifstream scc(dir.path / "scc.csv");
  std::string line;
  std::getline(scc, line);
  while (std::getline(scc, line)) {
    std::stringstream ss(line);
    std::vector<double> v;
    std::string cell;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    if (v.back() < 0) continue;
    const Box3 box{Vec3(v[4], v[5], v[6]) - Vec3::Constant(0.125), Vec3(v[4], v[5], v[6]) + Vec3::Constant(0.125)};
    CHECK(box.distance(Vec3::Zero()) <= 0.05 + 0.5);
  }
  CHECK(fs::exists(dir.path / "edges.csv"));

  TempDir tdir("translation");
  REQUIRE(run({"chain-classes", "--field", "translation", "--out", tdir.str()}).code == kExitOk);
  CHECK(read_json(tdir.path / "graph.json")["recurrent_box_count"] == 0);
}

TEST_CASE("cli: coarse boxes are flagged") {
  TempDir dir("coarse");
  const Run r = run({"chain-classes", "--field", "translation", "--box", "5", "--out", dir.str()});
  REQUIRE(r.code == kExitOk);
  CHECK(r.out.find("too coarse") != std::string::npos);
  const auto j = read_json(dir.path / "graph.json");
  CHECK(j["box_count"] == 1);
  CHECK(j["cover"]["resolution_too_coarse"] == true);
}

TEST_CASE("cli: certify routes and rejects unmatched selectors") {
  TempDir dir("certify");
  const Run miss = run({"certify", "--field", "translation", "--class-of", "0.5,0.5,0.5", "--out", dir.str()});
  CHECK(miss.code == kExitConfig);

  const Run rho = run({"certify", "--field", "lorenz", "--params", "rho=0.5", "--region", "-2,2,-2,2,-2,2", "--box",
                       "0.5", "--class-of", "0.1,0.1,0.1", "--out", dir.str()});
  REQUIRE(rho.code == kExitOk);
  const auto j = read_json(dir.path / "certificate.json");
  CHECK(j["result"]["verdict"] == "structural_failure");
  CHECK(j["header"]["assumptions_unchecked"].size() == 4);
}

TEST_CASE("cli: equivalence on a translation is vacuous and agrees") {
  TempDir dir("equiv");
  REQUIRE(run({"equivalence", "--field", "translation", "--out", dir.str()}).code == kExitOk);
  const auto j = read_json(dir.path / "equivalence.json");
  CHECK(j["agree"] == true);
  CHECK(j["tangent"]["verdict"] == "vacuous");
}

TEST_CASE("cli: trace of a constant field and of a Lorenz orbit") {
  TempDir dir("trace");
  REQUIRE(run({"trace", "--field", "translation", "--point", "0.1,0.5,0.5", "--time", "0.5", "--out-dt", "0.1",
               "--out", dir.str()})
              .code == kExitOk);
  std::ifstream f(dir.path / "trace.csv");
  std::string line;
  std::getline(f, line);
  int rows = 0;
  while (std::getline(f, line)) {
    std::stringstream ss(line);
    std::vector<double> v;
    std::string cell;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    REQUIRE(v.size() == 15);
    for (int k = 0; k < 4; ++k) CHECK(v[5 + k] == v[9 + k]);
    CHECK(v[5] == doctest::Approx(1.0));
    CHECK(v[8] == doctest::Approx(1.0));
    ++rows;
  }
  CHECK(rows == 6);

  TempDir ldir("trace_lorenz");
  REQUIRE(run({"trace", "--field", "lorenz", "--point", "1e-12,1e-12,5", "--time", "5", "--out", ldir.str()}).code ==
          kExitOk);
  std::ifstream lf(ldir.path / "trace.csv");
  std::getline(lf, line);
  bool first = true;
  double min_speed = 1e300;
  while (std::getline(lf, line)) {
    if (line[0] == '#') continue;
    std::stringstream ss(line);
    std::vector<double> v;
    std::string cell;
    while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    for (double x : v) CHECK(std::isfinite(x));
    if (first) {
      CHECK(v[5] == doctest::Approx(1.0));
      CHECK(v[6] == doctest::Approx(0.0));
      CHECK(v[9] == doctest::Approx(1.0));
      CHECK(v[12] == doctest::Approx(1.0));
      first = false;
    }
    min_speed = std::min(min_speed, v[4]);
  }
  CHECK(min_speed < 1.0);
}

TEST_CASE("cli: reports are byte-reproducible and the hash ignores out and jobs") {
  TempDir a("det_a"), b("det_b");
  const std::vector<std::string> base{"chain-classes", "--field", "suspension-saddle", "--box", "0.25"};
  auto with = [&](const TempDir& d, const std::string& jobs) {
    auto v = base;
    v.insert(v.end(), {"--out", d.str(), "--jobs", jobs});
    return v;
  };
  REQUIRE(run(with(a, "1")).code == kExitOk);
  REQUIRE(run(with(b, "2")).code == kExitOk);
  CHECK(slurp(a.path / "graph.json") == slurp(b.path / "graph.json"));
  CHECK(slurp(a.path / "edges.csv") == slurp(b.path / "edges.csv"));
  CHECK(slurp(a.path / "scc.csv") == slurp(b.path / "scc.csv"));

  RunConfig x, y;
  x.out_dir = "one";
  y.out_dir = "two";
  y.jobs = 3;
  CHECK(config_hash(x.to_json()) == config_hash(y.to_json()));
  y.h = 0.3;
  CHECK(config_hash(x.to_json()) != config_hash(y.to_json()));
}
