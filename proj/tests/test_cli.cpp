#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string out;
};

std::string binary_path() {
  const char* bin = std::getenv("MSBM_BIN");
  REQUIRE(bin != nullptr);
  return bin;
}

CmdResult run_cmd(const std::string& args) {
  std::string cmd = binary_path() + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CmdResult result;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) result.out.append(buf, n);
  int rc = pclose(pipe);
  result.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  return result;
}

fs::path scratch_dir() {
  fs::path dir = fs::current_path() / "cli_scratch";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_stripped(const std::string& text) {
  json j = json::parse(text);
  j["result"]["wall_time_ms"] = 0.0;
  return j;
}

int count_lines(const std::string& s) {
  int lines = 0;
  for (char c : s)
    if (c == '\n') ++lines;
  return lines;
}

}  // namespace

TEST_CASE("gen writes a re-parseable pair and is deterministic") {
  fs::path dir = scratch_dir();
  std::string t1 = (dir / "t1").string();
  std::string t2 = (dir / "t2").string();
  CHECK(run_cmd("gen tight --C 2 --n 12 --eps 0.001 --delta 0.0001 --out " + t1).exit_code == 0);
  CHECK(run_cmd("gen tight --C 2 --n 12 --eps 0.001 --delta 0.0001 --out " + t2).exit_code == 0);
  CHECK(slurp(t1 + ".msbm") == slurp(t2 + ".msbm"));
  CHECK(slurp(t1 + ".oracle") == slurp(t2 + ".oracle"));

  std::string c1 = (dir / "c1").string();
  std::string c2 = (dir / "c2").string();
  CHECK(run_cmd("gen coverage --edges 10 --seed 7 --out " + c1).exit_code == 0);
  CHECK(run_cmd("gen coverage --edges 10 --seed 7 --out " + c2).exit_code == 0);
  CHECK(slurp(c1 + ".msbm") == slurp(c2 + ".msbm"));
  CHECK(slurp(c1 + ".oracle") == slurp(c2 + ".oracle"));
}

TEST_CASE("gen rejects out-of-domain parameters with exit 1") {
  fs::path dir = scratch_dir();
  CHECK(run_cmd("gen tight --C 1 --out " + (dir / "bad").string()).exit_code == 1);
  CHECK(run_cmd("gen nosuch --out " + (dir / "bad").string()).exit_code == 1);
}

TEST_CASE("run on the tight family reports the worst-case trace") {
  fs::path dir = scratch_dir();
  std::string t = (dir / "tight12").string();
  REQUIRE(run_cmd("gen tight --C 2 --n 12 --eps 0.001 --delta 0.0001 --out " + t).exit_code ==
          0);
  CmdResult r =
      run_cmd("run " + t + ".msbm " + t + ".oracle msbm --C 2 --q 1 --opt --opt-limit 25 --certify");
  CHECK(r.exit_code == 0);
  json j = json::parse(r.out);
  // f(M) = (C+δ)^{n−1}
  CHECK(j["result"]["f_matching"].get<double>() ==
        doctest::Approx(std::pow(2.0001, 11)).epsilon(1e-12));
  CHECK(j["result"]["matching_size"] == 1);
  CHECK(j["result"]["stack_size"] == 12);
  double ratio = j["opt"]["ratio"].get<double>();
  CHECK(ratio <= 6.0);
  CHECK(ratio >= 0.95 * 6.0);
  CHECK(j["certificate"]["feasible"] == true);
  CHECK(j["checks_passed"] == true);
}

TEST_CASE("preemptive on a b>=2 instance is a usage error") {
  fs::path dir = scratch_dir();
  fs::path inst = dir / "b2.msbm";
  std::ofstream(inst) << "msbm 1\nn 2\nb uniform 2\nm 1\ne 0 1 0\n";
  fs::path oracle = dir / "b2.oracle";
  std::ofstream(oracle) << "oracle linear\nw 0 5\n";
  CmdResult r = run_cmd("run " + inst.string() + " " + oracle.string() + " preemptive");
  CHECK(r.exit_code == 1);
}

TEST_CASE("mwbm requires a linear oracle and meets its bound") {
  fs::path dir = scratch_dir();
  std::string lin = (dir / "lin").string();
  REQUIRE(run_cmd("gen linear --vertices 7 --edges 12 --bmax 3 --seed 4 --out " + lin)
              .exit_code == 0);
  CmdResult r = run_cmd("run " + lin + ".msbm " + lin + ".oracle mwbm --eps 0.5 --opt");
  CHECK(r.exit_code == 0);
  json j = json::parse(r.out);
  CHECK(j["opt"]["ratio"].get<double>() <= 3.5 + 1e-9);
  CHECK(j["certificate"]["dual_feasible_off_stack"] == true);
  CHECK(j["certificate"]["stack_route_ok"] == true);

  std::string cov = (dir / "cov").string();
  REQUIRE(run_cmd("gen coverage --edges 8 --seed 1 --out " + cov).exit_code == 0);
  CHECK(run_cmd("run " + cov + ".msbm " + cov + ".oracle mwbm --eps 0.5").exit_code == 1);
}

TEST_CASE("fixed seed gives byte-identical reports modulo wall time") {
  fs::path dir = scratch_dir();
  std::string cov = (dir / "gold").string();
  REQUIRE(run_cmd("gen covlin --vertices 8 --edges 12 --seed 9 --out " + cov).exit_code == 0);
  std::string invocation = "run " + cov + ".msbm " + cov +
                           ".oracle msbm --preset nonmonotone --seed 5 --certify --trials 200";
  CmdResult a = run_cmd(invocation);
  CmdResult b = run_cmd(invocation);
  CHECK(a.exit_code == 0);
  json ja = parse_stripped(a.out);
  json jb = parse_stripped(b.out);
  CHECK(ja.dump() == jb.dump());
  CHECK(ja["params"]["q"].get<double>() == doctest::Approx(0.2113248654).epsilon(1e-9));
  // schema stability: the key set is identical across algorithms
  CmdResult c = run_cmd("run " + cov + ".msbm " + cov + ".oracle msbm --C 3 --q 1");
  json jc = json::parse(c.out);
  for (auto& [key, value] : ja.items()) CHECK(jc.contains(key));
}

TEST_CASE("expected-feasibility checker catches q below the lemma range") {
  // q = 0.05 < 1/(2C+1): the expected dual constraint genuinely fails, the
  // run is labeled outside the lemma hypothesis and exits 2.
  fs::path dir = scratch_dir();
  fs::path inst = dir / "one.msbm";
  std::ofstream(inst) << "msbm 1\nn 2\nb uniform 1\nm 1\ne 0 1 0\n";
  fs::path oracle = dir / "one.oracle";
  std::ofstream(oracle) << "oracle linear\nw 0 10\n";
  CmdResult r = run_cmd("run " + inst.string() + " " + oracle.string() +
                        " msbm --C 2 --q 0.05 --certify --trials 10000 --seed 1");
  CHECK(r.exit_code == 2);
  json j = json::parse(r.out);
  CHECK(j["certificate"]["expected"]["q_in_lemma_range"] == false);
  CHECK(j["certificate"]["expected"]["flagged_edges"].get<int>() >= 1);
  CHECK(j["checks_passed"] == false);
}

TEST_CASE("bench") {
  fs::path dir = scratch_dir();
  std::string cov = (dir / "bcov").string();
  std::string lin = (dir / "blin").string();
  REQUIRE(run_cmd("gen coverage --vertices 7 --edges 10 --seed 2 --out " + cov).exit_code == 0);
  REQUIRE(run_cmd("gen covlin --vertices 7 --edges 10 --seed 3 --out " + lin).exit_code == 0);

  SUBCASE("two rows, repeat 3: six data rows plus two aggregates") {
    fs::path manifest = dir / "m.csv";
    std::ofstream(manifest) << "instance,oracle,algorithm,C,q,eps,seed,flags\n"
                            << cov << ".msbm," << cov << ".oracle,msbm,2,1,,0,opt\n"
                            << lin << ".msbm," << lin
                            << ".oracle,msbm,,,,0,preset=nonmonotone\n";
    CmdResult r = run_cmd("bench " + manifest.string() + " --repeat 3");
    CHECK(r.exit_code == 0);
    CHECK(count_lines(r.out) == 1 + 6 + 2);
    // the preset's resolved q appears in the q column
    CHECK(r.out.find(",0.21132486540518713,") != std::string::npos);
    CHECK(r.out.find(",agg,") != std::string::npos);
  }
  SUBCASE("empty manifest emits the header only") {
    fs::path manifest = dir / "empty.csv";
    std::ofstream(manifest) << "instance,oracle,algorithm,C,q,eps,seed,flags\n";
    CmdResult r = run_cmd("bench " + manifest.string());
    CHECK(r.exit_code == 0);
    CHECK(count_lines(r.out) == 1);
  }
  SUBCASE("row errors land in the error column and the run continues") {
    fs::path manifest = dir / "err.csv";
    std::ofstream(manifest) << "instance,oracle,algorithm,C,q,eps,seed,flags\n"
                            << "missing.msbm,missing.oracle,msbm,2,1,,0,\n"
                            << cov << ".msbm," << cov << ".oracle,msbm,2,1,,0,\n";
    CmdResult r = run_cmd("bench " + manifest.string());
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("cannot open") != std::string::npos);
    CHECK(count_lines(r.out) == 1 + 2 + 2);
  }
}
