#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "etf/renderer.hpp"

using namespace etf;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string temp_path(const char* name) { return (std::filesystem::temp_directory_path() / name).string(); }

bool contains(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

}  // namespace

TEST_CASE("help output matches the golden files") {
  const std::string dir = ETF_GOLDEN_DIR;
  auto top = run({"--help"});
  CHECK(top.code == 0);
  CHECK(top.out == slurp(dir + "/help.txt"));
  for (const char* sub : {"asymptotic-values", "orbit", "singular-report", "verdict", "measure", "schedule",
                          "verify-lemmas", "render"}) {
    INFO(sub);
    auto r = run({sub, "--help"});
    CHECK(r.code == 0);
    CHECK(r.out == slurp(dir + "/help_" + sub + ".txt"));
  }
}

TEST_CASE("verdict for the cubic example") {
  auto r = run({"verdict", "--preset", "hemke-cubic"});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "verdict: NotRecurrent\n"));
  CHECK(contains(r.out, "constants: a = 2.55376644110757, b = -0.0805214917568301\n"));
  // One row per singular orbit: the asymptotic value and both critical points.
  CHECK(contains(r.out, "asymptotic,3,"));
  CHECK(contains(r.out, "critical,1,0+0.922635074322i"));
}

TEST_CASE("verdict for 2 pi i e^z and e^z") {
  auto r = run({"verdict", "--preset", "rees-exp", "--lambda", "2pi_i"});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "verdict: RecurrentErgodic\n"));
  CHECK(contains(run({"verdict", "--preset", "rees-exp"}).out, "verdict: NotRecurrent\n"));
  CHECK(contains(run({"verdict", "--preset", "rees-exp", "--lambda", "0,6.283185307179586"}).out,
                 "verdict: RecurrentErgodic\n"));
}

TEST_CASE("render writes a 512x512 PPM") {
  std::string path = temp_path("etf_cli_fig5.ppm");
  auto r = run({"render", "--preset", "sinh-cubic", "--out", path});
  CHECK(r.code == 0);
  std::string bytes = slurp(path);
  CHECK(bytes.rfind("P6\n512 512\n255\n", 0) == 0);
  CHECK(bytes.size() == 15 + 512 * 512 * 3);
  CHECK(contains(r.out, "error: 0\n"));

  // Thread count is a hint only.
  std::string p1 = temp_path("etf_cli_t1.ppm"), p3 = temp_path("etf_cli_t3.ppm");
  CHECK(run({"render", "--preset", "hemke-cubic", "--size", "40x24", "--threads", "1", "--out", p1}).code == 0);
  CHECK(run({"render", "--preset", "hemke-cubic", "--size", "40x24", "--threads", "3", "--out", p3}).code == 0);
  CHECK(slurp(p1) == slurp(p3));
  CHECK(read_ppm(p1).width == 40);
  for (const auto& p : {path, p1, p3}) std::remove(p.c_str());
}

TEST_CASE("orbit table for the asymptotic value of the cubic example") {
  auto r = run({"orbit", "--preset", "hemke-cubic", "--z0", "0,0", "--max-iter", "50"});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "index,log_mod,arg,regime\n0,-inf,invalid,moderate\n1,-0.0805214917568,"));
  CHECK(contains(r.out, ",saturated\n"));
  CHECK(contains(r.out, "stop_reason: Saturated\n"));
  CHECK(contains(r.out, "classification: ExponentialEscape"));
}

TEST_CASE("schedule table and product check") {
  auto r = run({"schedule", "--M0", "100", "--eps", "0.5", "--tau", "0.5", "--kmax", "3"});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "k,M\n0,100\n1,22026.4657948067\n"));
  CHECK(contains(r.out, "product_check: true\n"));
  // tau <= beta is not admissible.
  auto bad = run({"schedule", "--tau", "0.1", "--beta", "0.2"});
  CHECK(bad.code == 2);
}

TEST_CASE("measure emits CSV with a header row") {
  auto r = run({"measure", "--preset", "hemke-cubic", "--center", "20,0", "--n", "200", "--threads", "2"});
  CHECK(r.code == 0);
  CHECK(r.out.rfind("region,n,hits,fraction,ci_low,ci_high,errors\n", 0) == 0);
  CHECK(contains(r.out, "square[c=20+0i;h=0.5],200,"));
  auto a = run({"measure", "--preset", "sinh-cubic", "--mode", "annuli", "--radii", "2,4", "--n", "300"});
  CHECK(a.code == 0);
  CHECK(contains(a.out, "annulus[R=2],300,"));
  CHECK(contains(a.out, "annulus[R=4],300,"));
}

TEST_CASE("asymptotic values and singular report") {
  auto a = run({"asymptotic-values", "--preset", "rees-exp"});
  CHECK(a.code == 0);
  CHECK(contains(a.out, "group,value_re,value_im,multiplicity\n0,"));
  auto s = run({"singular-report", "--preset", "sinh-cubic"});
  CHECK(s.code == 0);
  CHECK(contains(s.out, "role,multiplicity,singular_point,start,classification,stop_reason,on_cycle\n"));
}

TEST_CASE("verify-lemmas exit codes follow the check results") {
  auto ok = run({"verify-lemmas", "--only", "koebe"});
  CHECK(ok.code == 0);
  CHECK(contains(ok.out, "checks: 4, failed: 0\n"));
  // f'/(f - s) = 3 z^2 + a breaks the upper bound |z|^2.1 for |z| < 3^10.
  auto bad = run({"verify-lemmas", "--preset", "hemke-cubic", "--only", "condition-a", "--n", "200"});
  CHECK(bad.code == 1);
  CHECK(contains(bad.out, "status: FAIL"));
}

TEST_CASE("spec files are accepted") {
  std::string path = temp_path("etf_cli_spec.json");
  {
    std::ofstream os(path);
    os << R"({"form":"integral","P":[[0,6.283185307179586]],"Q":[0,1],"c":[0,6.283185307179586]})";
  }
  auto r = run({"verdict", "--spec", path});
  CHECK(r.code == 0);
  CHECK(contains(r.out, "verdict: RecurrentErgodic\n"));
  std::remove(path.c_str());
}

TEST_CASE("usage errors exit with 2 and name the flag") {
  auto r = run({"orbit", "--preset", "rees-exp", "--z0", "1,x"});
  CHECK(r.code == 2);
  CHECK(contains(r.err, "--z0"));
  CHECK(contains(r.err, "fix:"));
  CHECK(run({"verdict"}).code == 2);
  CHECK(run({"verdict", "--preset", "nope"}).code == 2);
  CHECK(run({"verdict", "--preset", "hemke-cubic", "--lambda", "2"}).code == 2);
  CHECK(run({"verdict", "--preset", "rees-exp", "--lambda", "2qi"}).code == 2);
  CHECK(run({"verdict", "--spec", "/nonexistent/spec.json"}).code == 2);
  CHECK(run({"render", "--preset", "sinh-cubic"}).code == 2);  // --out is required
  CHECK(run({"render", "--preset", "sinh-cubic", "--out", "x.ppm", "--png"}).code == 2);
  CHECK(run({"render", "--preset", "sinh-cubic", "--out", "x.ppm", "--window", "1,0,0,1"}).code == 2);
  CHECK(run({"measure", "--preset", "sinh-cubic", "--mode", "disk"}).code == 2);
  CHECK(run({"orbit", "--preset", "rees-exp", "--bogus"}).code == 2);
  CHECK(run({}).code == 2);
}
