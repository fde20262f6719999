#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "cli.hpp"
#include "rdq/errors.hpp"

using namespace rdq::cli;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result call(std::vector<std::string> args) {
  std::ostringstream o, e;
  const int c = run(args, o, e);
  return {c, o.str(), e.str()};
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> v;
  std::istringstream in(s);
  std::string l;
  while (std::getline(in, l)) v.push_back(l);
  return v;
}

std::string temp_file(const std::string& name, const std::string& body) {
  const std::string path = "/tmp/rdq_cli_test_" + name;
  std::ofstream(path) << body;
  return path;
}

}  // namespace

TEST_CASE("config files") {
  CHECK(load_config(temp_file("r", "radius=40\n")).radius == 40.0);
  CHECK(load_config(temp_file("r2", "# comment\nradius = 12.5  # trailing\n\n")).radius == 12.5);
  const auto d = load_config(temp_file("empty", ""));
  const RunConfig def;
  CHECK(d.radius == def.radius);
  CHECK(d.n == def.n);
  CHECK_FALSE(d.s.has_value());
  auto c = load_config(temp_file("theta", "n=2\ntheta=0,0.2;-0.2,0\ns=2\ngauss-order=8\n"));
  CHECK(c.n == 2);
  CHECK(parse_matrix(c.theta, c.n) == std::vector<double>{0.0, 0.2, -0.2, 0.0});
  CHECK(c.s == 2);
  CHECK(c.gauss_order == 8);
  try {
    load_config(temp_file("bad", "radiuss=3\n"));
    FAIL("expected a usage error");
  } catch (const rdq::UsageError& e) {
    CHECK(std::string(e.what()).find("known keys") != std::string::npos);
    CHECK(std::string(e.what()).find("radius") != std::string::npos);
  }
  CHECK_THROWS_AS(load_config(temp_file("noeq", "radius\n")), rdq::UsageError);
  CHECK_THROWS_AS(load_config("/nonexistent/rdq.cfg"), rdq::UsageError);
  CHECK_THROWS_AS(parse_matrix("0,1;1", 2), rdq::UsageError);
  CHECK(parse_matrix("0.3", 1) == std::vector<double>{0.3});
}

TEST_CASE("moyal at theta = 0 on Gaussians gives 1") {
  const auto r = call({"moyal", "--f", "gauss(x1)", "--g", "gauss(x1)", "--theta", "0", "--points", "0"});
  CHECK(r.code == 0);
  const auto ls = lines(r.out);
  REQUIRE(ls.size() == 3);
  CHECK(ls[0].rfind("# rdq moyal ", 0) == 0);
  CHECK(ls[1] == "x1,re,im,err");
  std::istringstream row(ls[2]);
  std::string x, re;
  std::getline(row, x, ',');
  std::getline(row, re, ',');
  CHECK(std::stod(re) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("flags override the config file") {
  const auto cfg = temp_file("ovr", "theta=0.3\npoints=0,1\nformat=jsonl\n");
  // gauss(x) = exp(-x^2/2), so theta = 0 at x = 1 gives exp(-1).
  const auto r = call({"moyal", "--config", cfg, "--theta", "0", "--points", "1"});
  CHECK(r.code == 0);
  const auto ls = lines(r.out);
  REQUIRE(ls.size() == 2);
  const auto j = nlohmann::json::parse(ls[1]);
  CHECK(j["x1"].get<double>() == 1.0);
  CHECK(j["re"].get<double>() == doctest::Approx(std::exp(-1.0)).epsilon(1e-10));
}

TEST_CASE("identical runs are bit-identical apart from the header") {
  const std::vector<std::string> args{"moyal", "--theta", "0.2", "--points", "-1,0.5", "--oracle", "series"};
  const auto a = call(args), b = call(args);
  REQUIRE(a.code == 0);
  auto la = lines(a.out), lb = lines(b.out);
  la.erase(la.begin());
  lb.erase(lb.begin());
  CHECK(la == lb);
}

TEST_CASE("exit codes") {
  const auto parse = call({"moyal", "--f", "exp(-x1^"});
  CHECK(parse.code == 2);
  CHECK(parse.err.find("offset") != std::string::npos);
  CHECK(call({"moyal", "--bogus", "1"}).code == 2);
  CHECK(call({}).code == 2);
  CHECK(call({"moyal", "--theta", "0,1;1,0"}).code == 2);
  CHECK(call({"moyal", "--n", "2", "--points", "0,0,1"}).code == 2);
  CHECK(call({"moyal", "--format", "xml"}).code == 2);
  CHECK(call({"moyal", "--oracle", "series", "--n", "2", "--theta", "0,0;0,0", "--points", "0,0"}).code == 2);
  // A finite tolerance the plan cannot meet is a numeric failure.
  CHECK(call({"integrate", "--radius", "4", "--tol", "1e-30"}).code == 3);
  const auto help = call({"moyal", "--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("--gauss-order") != std::string::npos);
  CHECK(help.out.find("default 40") != std::string::npos);
}

TEST_CASE("subcommands produce their tables") {
  auto r = call({"integrate", "--radius", "24"});
  CHECK(r.code == 0);
  CHECK(lines(r.out)[1] == "component,re,im,err,s,radius,panels");

  r = call({"twisted-conv", "--points", "0"});
  CHECK(r.code == 0);
  CHECK(std::stod(lines(r.out)[2].substr(2)) == doctest::Approx(std::sqrt(M_PI)).epsilon(1e-12));

  r = call({"local-nc", "--theta", "0.5", "--points", "3", "--radius", "20"});
  CHECK(r.code == 0);

  r = call({"action", "probe", "--points", "0.5,0.3"});
  CHECK(r.code == 0);
  CHECK(lines(r.out)[1] == "x,y,tau,d_x,d_y,d_xx,d_xy,d_yy");

  r = call({"bench", "quadrature", "--radius", "10"});
  CHECK(r.code == 0);
  CHECK(lines(r.out).size() == 2 + 4);

  const std::string out = "/tmp/rdq_cli_test_out.csv";
  std::remove(out.c_str());
  r = call({"moyal", "--out", out});
  CHECK(r.code == 0);
  CHECK(r.out.empty());
  std::ifstream f(out);
  std::string first;
  std::getline(f, first);
  CHECK(first.rfind("# rdq moyal", 0) == 0);
}

TEST_CASE("verify suites report JSON lines") {
  for (const char* suite : {"symbols", "actions"}) {
    const auto r = call({"verify", suite});
    CHECK(r.code == 0);
    const auto ls = lines(r.out);
    REQUIRE(ls.size() > 2);
    for (std::size_t i = 1; i < ls.size(); ++i) {
      const auto j = nlohmann::json::parse(ls[i]);
      CHECK(j["pass"].get<bool>());
    }
  }
  const auto r = call({"verify", "integral-identities", "--radius", "24"});
  CHECK(r.code == 0);
  const auto csv = call({"verify", "symbols", "--format", "csv"});
  CHECK(lines(csv.out)[1] == "suite,identity,instance,residual,tolerance,pass");
}
