#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>
#ifndef _WIN32
#include <sys/wait.h>
#endif

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Shell out to the real binary; stdout/stderr land in scratch files.
RunResult run_cli(const std::string& args) {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() / "qflan_cli_test";
  fs::create_directories(dir);
  fs::path out = dir / ("out" + std::to_string(counter) + ".txt");
  fs::path err = dir / ("err" + std::to_string(counter) + ".txt");
  ++counter;

  std::string cmd = std::string(QFLAN_CLI_PATH) + " " + args + " >" + out.string() + " 2>" +
                    err.string();
  int raw = std::system(cmd.c_str());
  RunResult r;
#ifdef _WIN32
  r.exit_code = raw;
#else
  r.exit_code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
#endif
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

std::string model(const std::string& name) {
  return std::string(QFLAN_MODELS_DIR) + "/" + name;
}

fs::path scratch(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "qflan_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

size_t count_lines(const std::string& s) {
  size_t n = 0;
  for (char c : s) n += c == '\n' ? 1 : 0;
  return n;
}

}  // namespace

TEST_CASE("validate accepts the bundled models") {
  auto r = run_cli("validate " + model("bikes.qflan"));
  CHECK(r.exit_code == 0);
  CHECK(r.err.find("ok") != std::string::npos);

  auto withq = run_cli("validate " + model("micro.qflan") + " --analysis " +
                       model("micro_when.analysis"));
  CHECK(withq.exit_code == 0);
}

TEST_CASE("validate reports usage and failure exit codes") {
  auto missing = run_cli("validate /nonexistent/nowhere.qflan");
  CHECK(missing.exit_code == 2);
  CHECK(missing.err.find("cannot open") != std::string::npos);

  auto bad = scratch("broken.qflan");
  std::ofstream(bad) << "begin abstract features A end abstract features\n"
                        "begin concrete features A end concrete features\n";
  auto malformed = run_cli("validate " + bad.string());
  CHECK(malformed.exit_code == 1);
  CHECK_FALSE(malformed.err.empty());

  auto noargs = run_cli("validate");
  CHECK(noargs.exit_code == 2);

  auto unknown_flag = run_cli("validate " + model("bikes.qflan") + " --frobnicate");
  CHECK(unknown_flag.exit_code == 2);

  auto unknown_cmd = run_cli("fly " + model("bikes.qflan"));
  CHECK(unknown_cmd.exit_code == 2);
}

TEST_CASE("analyze writes the csv contract") {
  auto out = scratch("micro_when.csv");
  auto r = run_cli("analyze " + model("micro.qflan") + " " + model("micro_when.analysis") +
                   " --out " + out.string());
  REQUIRE(r.exit_code == 0);
  CHECK(r.err.find("simulations") != std::string::npos);

  std::istringstream csv(slurp(out));
  std::string header;
  REQUIRE(std::getline(csv, header));
  CHECK(header == "observation,param,mean,half_width,samples");
  size_t rows = 0;
  std::string line;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 3);  // steps, price, Pro

  SECTION("json format is available") {
    auto j = run_cli("analyze " + model("micro.qflan") + " " + model("micro_when.analysis") +
                     " --format json");
    REQUIRE(j.exit_code == 0);
    CHECK(j.out.find("{") == 0);
    CHECK(j.out.find("\"query\"") != std::string::npos);
  }

  SECTION("an unknown format is a usage error") {
    auto r2 = run_cli("analyze " + model("micro.qflan") + " " + model("micro_when.analysis") +
                      " --format xml");
    CHECK(r2.exit_code == 2);
  }
}

TEST_CASE("analyze output does not depend on the worker count") {
  auto f1 = scratch("par1.csv");
  auto f4 = scratch("par4.csv");
  auto a = run_cli("analyze " + model("micro.qflan") + " " + model("micro_for.analysis") +
                   " --parallelism 1 --out " + f1.string());
  auto b = run_cli("analyze " + model("micro.qflan") + " " + model("micro_for.analysis") +
                   " --parallelism 4 --out " + f4.string());
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  auto s1 = slurp(f1);
  CHECK_FALSE(s1.empty());
  CHECK(s1 == slurp(f4));

  SECTION("but the seed does change the numbers") {
    auto fs2 = scratch("seed2.csv");
    auto c = run_cli("analyze " + model("micro.qflan") + " " + model("micro_for.analysis") +
                     " --seed 999 --out " + fs2.string());
    REQUIRE(c.exit_code == 0);
    CHECK(slurp(fs2) != s1);
  }
}

TEST_CASE("analyze writes traces and gnuplot series on request") {
  auto tdir = scratch("traces");
  auto gdir = scratch("plots");
  fs::remove_all(tdir);
  fs::remove_all(gdir);
  auto r = run_cli("analyze " + model("micro.qflan") + " " + model("micro_for.analysis") +
                   " --trace " + tdir.string() + " --gnuplot " + gdir.string());
  REQUIRE(r.exit_code == 0);

  CHECK(fs::exists(tdir / "sim_0.tsv"));
  std::string t0 = slurp(tdir / "sim_0.tsv");
  CHECK(count_lines(t0) >= 10);  // one line per executed step

  // One series per observation.
  size_t dats = 0;
  for (const auto& e : fs::directory_iterator(gdir))
    dats += e.path().extension() == ".dat" ? 1 : 0;
  CHECK(dats == 3);
}

TEST_CASE("analyze fails cleanly on a diverging when-query") {
  auto q = scratch("diverge.analysis");
  std::ofstream(q) << "begin analysis query = eval when { mode == 5 } : { steps }\n"
                      "default delta = 0.5 alpha = 0.1 parallelism = 2 end analysis\n";
  auto r = run_cli("analyze " + model("micro.qflan") + " " + q.string() + " --max-steps 200");
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("exceeded") != std::string::npos);
}

TEST_CASE("exact transient analysis through the cli") {
  auto r = run_cli("exact " + model("micro.qflan") + " --analysis " +
                   model("micro_for.analysis"));
  REQUIRE(r.exit_code == 0);
  CHECK(r.err.find("10 states") != std::string::npos);

  std::istringstream csv(r.out);
  std::string header;
  REQUIRE(std::getline(csv, header));
  CHECK(header == "observation,param,value");
  CHECK(count_lines(r.out) == 1 + 30);  // header + 10 steps x 3 observations

  SECTION("--step overrides the query grid") {
    auto s = run_cli("exact " + model("micro.qflan") + " --analysis " +
                     model("micro_when.analysis") + " --step 2");
    REQUIRE(s.exit_code == 0);
    CHECK(s.out.find("observation,param,value") == 0);
    // The steps observation after exactly two steps is two.
    CHECK(s.out.find("steps,2,2") != std::string::npos);
  }

  SECTION("without an analysis only the state count is reported") {
    auto s = run_cli("exact " + model("micro.qflan"));
    REQUIRE(s.exit_code == 0);
    CHECK(s.out.empty());
    CHECK(s.err.find("10 states") != std::string::npos);
  }

  SECTION("when-queries add the residual row") {
    auto w = run_cli("exact " + model("micro.qflan") + " --analysis " +
                     model("micro_when.analysis"));
    REQUIRE(w.exit_code == 0);
    CHECK(w.out.find("residual") != std::string::npos);
  }

  SECTION("the state space limit aborts explicit enumeration") {
    auto b = run_cli("exact " + model("bikes.qflan") + " --state-limit 500 --step 3");
    CHECK(b.exit_code == 1);
    CHECK(b.err.find("limit") != std::string::npos);
  }

  SECTION("exports write the state and transition tables") {
    auto prefix = scratch("micro_dtmc").string();
    auto e = run_cli("exact " + model("micro.qflan") + " --step 1 --export " + prefix);
    REQUIRE(e.exit_code == 0);
    CHECK(count_lines(slurp(prefix + ".states")) == 10);
    CHECK(count_lines(slurp(prefix + ".trans")) >= 10);
  }
}

TEST_CASE("gen-elevator emits a model that validates and runs") {
  auto m = scratch("lift.qflan");
  auto a = scratch("lift.analysis");
  auto g = run_cli("gen-elevator --floors 4 --max-step 500 --out " + m.string() +
                   " --analysis-out " + a.string());
  REQUIRE(g.exit_code == 0);

  auto v = run_cli("validate " + m.string() + " --analysis " + a.string());
  CHECK(v.exit_code == 0);

  auto r = run_cli("analyze " + m.string() + " " + a.string() + " --max-steps 1000");
  REQUIRE(r.exit_code == 0);
  // Deterministic satisfaction: mean 1 with zero width.
  CHECK(r.out.find(",,1,0,20") != std::string::npos);

  SECTION("floor count must be sensible") {
    CHECK(run_cli("gen-elevator --floors 1").exit_code != 0);
    CHECK(run_cli("gen-elevator").exit_code == 2);
  }
}
