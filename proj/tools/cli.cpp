#include "cli.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <json.hpp>
#include <map>
#include <random>
#include <sstream>
#include <variant>

#include "rdq/actions.hpp"
#include "rdq/deform.hpp"
#include "rdq/errors.hpp"
#include "rdq/oscint.hpp"
#include "rdq/qs.hpp"
#include "rdq/symbols.hpp"

namespace rdq::cli {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

double to_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(trim(v), &used);
    if (used != trim(v).size()) throw std::invalid_argument("trailing text");
    return x;
  } catch (const std::exception&) {
    throw UsageError("--" + key + ": expected a real number, got '" + v + "'");
  }
}

long to_int(const std::string& key, const std::string& v) {
  const double x = to_real(key, v);
  if (x != std::floor(x) || std::abs(x) > 1e9) throw UsageError("--" + key + ": expected an integer, got '" + v + "'");
  return static_cast<long>(x);
}

// ---- output tables ----------------------------------------------------------

using Cell = std::variant<double, long, std::string, bool>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row) { rows.push_back(std::move(row)); }
};

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::string csv_cell(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return num(*d);
  if (const auto* l = std::get_if<long>(&c)) return std::to_string(*l);
  if (const auto* b = std::get_if<bool>(&c)) return *b ? "true" : "false";
  const auto& s = std::get<std::string>(c);
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return q + "\"";
}

nlohmann::ordered_json json_cell(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) {
    if (std::isfinite(*d)) return *d;
    return num(*d);
  }
  if (const auto* l = std::get_if<long>(&c)) return *l;
  if (const auto* b = std::get_if<bool>(&c)) return *b;
  return std::get<std::string>(c);
}

std::string timestamp() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_table(const Table& t, const RunConfig& cfg, std::ostream& out) {
  const bool jsonl = cfg.format == "jsonl";
  out << "# rdq " << cfg.command << ' ' << timestamp() << '\n';
  if (jsonl) {
    for (const auto& r : t.rows) {
      nlohmann::ordered_json j;
      for (std::size_t c = 0; c < t.columns.size(); ++c) j[t.columns[c]] = json_cell(r[c]);
      out << j.dump() << '\n';
    }
    return;
  }
  for (std::size_t c = 0; c < t.columns.size(); ++c) out << (c ? "," : "") << t.columns[c];
  out << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t c = 0; c < r.size(); ++c) out << (c ? "," : "") << csv_cell(r[c]);
    out << '\n';
  }
}

// ---- config helpers ---------------------------------------------------------

QuadraturePlan plan_of(const RunConfig& cfg) {
  QuadraturePlan q;
  q.s = cfg.s;
  q.radius = cfg.radius;
  q.panels = cfg.panels;
  q.rule_order = cfg.gauss_order;
  if (cfg.tol > 0.0) q.tol = cfg.tol;
  q.validate();
  return q;
}

Pairing pairing_of(const RunConfig& cfg, int n) {
  const std::string p = trim(cfg.pairing);
  if (p == "identity" || p.empty()) return Pairing::identity(n);
  if (p.rfind("matrix:", 0) == 0) {
    auto P = Pairing::matrix(n, parse_matrix(p.substr(7), n));
    P.validate();
    return P;
  }
  throw UsageError("--pairing: expected 'identity' or 'matrix:a,b;c,d', got '" + cfg.pairing + "'");
}

std::vector<std::vector<double>> points_of(const RunConfig& cfg, int group, const std::string& fallback) {
  const auto v = parse_reals(cfg.points.empty() ? fallback : cfg.points);
  if (v.empty() || v.size() % group != 0)
    throw UsageError("--points: expected a multiple of " + std::to_string(group) + " reals");
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < v.size(); i += group) out.emplace_back(v.begin() + i, v.begin() + i + group);
  return out;
}

std::string default_gauss(int n) {
  std::string s = "gauss(x1";
  for (int i = 2; i <= n; ++i) s += ",x" + std::to_string(i);
  return s + ")";
}

SymbolFn function_of(const std::string& text, const std::string& fallback, int n, bool schwartz = true) {
  auto F = symbol_from_expr(text.empty() ? fallback : text, expr::VarLayout{n, false});
  return schwartz ? with_schwartz_profile(F) : F;
}

void add_point_cells(std::vector<Cell>& row, const std::vector<double>& x) {
  for (double v : x) row.push_back(v);
}

std::vector<std::string> point_columns(int n, const std::string& prefix = "x") {
  std::vector<std::string> c;
  for (int i = 1; i <= n; ++i) c.push_back(prefix + std::to_string(i));
  return c;
}

// ---- commands ---------------------------------------------------------------

int cmd_integrate(const RunConfig& cfg, Table& t) {
  const int n = cfg.n;
  const auto F = symbol_from_expr(cfg.func.empty() ? default_gauss(n) : cfg.func, expr::VarLayout{n, true});
  const auto r = oscillatory_integral(F, plan_of(cfg), pairing_of(cfg, n));
  t.columns = {"component", "re", "im", "err", "s", "radius", "panels"};
  for (std::size_t c = 0; c < r.value.size(); ++c)
    t.add({long(c), r.value[c].real(), r.value[c].imag(), r.err[c], long(r.s), r.radius, long(r.panels)});
  return 0;
}

int cmd_moyal(const RunConfig& cfg, Table& t) {
  const int n = cfg.n;
  const auto f = function_of(cfg.f, default_gauss(n), n);
  const auto g = function_of(cfg.g, default_gauss(n), n);
  auto P = DeformationParams::matrix(n, parse_matrix(cfg.theta.empty() ? "0" : cfg.theta, n), plan_of(cfg));
  P.pairing = pairing_of(cfg, n);
  const auto pts = points_of(cfg, n, "0");
  t.columns = point_columns(n);
  for (const char* c : {"re", "im", "err"}) t.columns.push_back(c);
  const bool oracle = !cfg.oracle.empty();
  if (oracle) {
    for (const char* c : {"oracle", "oracle_re", "oracle_im", "diff"}) t.columns.push_back(c);
    if (cfg.oracle != "direct" && cfg.oracle != "series" && cfg.oracle != "cutoff")
      throw UsageError("--oracle: expected direct, series or cutoff");
    if (cfg.oracle == "series" && n != 1) throw UsageError("--oracle series is available for n = 1");
  }
  for (const auto& x : pts) {
    const auto r = moyal_product(f, g, P, x);
    std::vector<Cell> row;
    add_point_cells(row, x);
    row.insert(row.end(), {r.value[0].real(), r.value[0].imag(), r.err[0]});
    if (oracle) {
      cplx o;
      if (cfg.oracle == "series") {
        o = moyal_series(f, g, P.theta[0], x[0], 30);
      } else if (cfg.oracle == "direct") {
        o = moyal_product(f, g, P, x, MoyalMethod::Direct).value[0];
      } else {
        o = moyal_product(f, g, P, x, MoyalMethod::Cutoff).value[0];
      }
      row.insert(row.end(), {cfg.oracle, o.real(), o.imag(), std::abs(o - r.value[0])});
    }
    t.add(std::move(row));
  }
  return 0;
}

int cmd_twisted(const RunConfig& cfg, Table& t) {
  const int n = cfg.n;
  const auto f = function_of(cfg.f, default_gauss(n), n);
  const auto g = function_of(cfg.g, default_gauss(n), n);
  const auto theta = parse_matrix(cfg.theta.empty() ? "0" : cfg.theta, n);
  const double tol = cfg.tol > 0.0 ? cfg.tol : 1e-12;
  t.columns = point_columns(n);
  for (const char* c : {"re", "im", "err"}) t.columns.push_back(c);
  for (const auto& x : points_of(cfg, n, "0")) {
    const auto r = twisted_convolution(f, g, theta, x, tol);
    std::vector<Cell> row;
    add_point_cells(row, x);
    row.insert(row.end(), {r.value.real(), r.value.imag(), r.err});
    t.add(std::move(row));
  }
  return 0;
}

int cmd_local_nc(const RunConfig& cfg, Table& t) {
  const int n = cfg.n;
  CompactTau tau;
  tau.n = n;
  const auto f = function_of(cfg.f, default_gauss(n), n, false);
  const auto g = function_of(cfg.g, default_gauss(n), n, false);
  const auto theta = parse_matrix(cfg.theta.empty() ? "0" : cfg.theta, n);
  t.columns = point_columns(n, "y");
  for (const char* c : {"re", "im", "err", "pointwise_re", "pointwise_im"}) t.columns.push_back(c);
  for (const auto& y : points_of(cfg, n, "0")) {
    const auto r = local_nc_product(f, g, tau, theta, y, plan_of(cfg));
    const cplx pw = f.eval(y)[0] * g.eval(y)[0];
    std::vector<Cell> row;
    add_point_cells(row, y);
    row.insert(row.end(), {r.value[0].real(), r.value[0].imag(), r.err[0], pw.real(), pw.imag()});
    t.add(std::move(row));
  }
  return 0;
}

int cmd_action_probe(const RunConfig& cfg, Table& t) {
  CompactTau tau;
  tau.n = cfg.n;
  if (cfg.n == 1) {
    t.columns = {"x", "y", "tau", "d_x", "d_y", "d_xx", "d_xy", "d_yy"};
    for (const auto& xy : points_of(cfg, 2, "0.5,0.3")) {
      const double x = xy[0], y = xy[1];
      t.add({x, y, tau1(x, y, tau), tau_partials(1, 0, x, y, tau), tau_partials(0, 1, x, y, tau),
             tau_partials(2, 0, x, y, tau), tau_partials(1, 1, x, y, tau), tau_partials(0, 2, x, y, tau)});
    }
    return 0;
  }
  const int n = cfg.n;
  t.columns = point_columns(n, "x");
  for (const auto& c : point_columns(n, "y")) t.columns.push_back(c);
  for (const auto& c : point_columns(n, "tau")) t.columns.push_back(c);
  for (const auto& xy : points_of(cfg, 2 * n, "")) {
    const std::vector<double> x(xy.begin(), xy.begin() + n), y(xy.begin() + n, xy.end());
    std::vector<Cell> row;
    add_point_cells(row, xy);
    add_point_cells(row, tau_n(x, y, tau));
    t.add(std::move(row));
  }
  return 0;
}

int cmd_action_bounds(const RunConfig& cfg, Table& t) {
  if (cfg.n != 1) throw UsageError("action bounds is defined for n = 1");
  CompactTau tau;
  const auto xs = log_spaced(1.0, 100.0, 10);
  const auto grid = default_growth_grid(401);
  const double limit[] = {0.2, 3.3, 5.5};
  t.columns = {"k", "l", "fitted_exponent", "target_exponent", "bound", "residual", "x_min", "x_max", "pass"};
  int rc = 0;
  for (int l = 0; l <= 2; ++l) {
    const auto e = growth_exponent_fit(0, l, xs, grid, tau);
    const bool pass = e.fitted_exponent <= limit[l];
    if (!pass) rc = 1;
    t.add({long(e.k), long(e.l), e.fitted_exponent, e.target_exponent, limit[l], e.residual, e.x_min, e.x_max, pass});
  }
  return rc;
}

Table verify_table() {
  Table t;
  t.columns = {"suite", "identity", "instance", "residual", "tolerance", "pass"};
  return t;
}

int verify_integrals(const RunConfig& cfg, Table& t) {
  const auto rep = verify_identities(pairing_of(cfg, cfg.n), cfg.tol > 0.0 ? cfg.tol : 1e-5, plan_of(cfg));
  int rc = 0;
  for (const auto& c : rep) {
    t.add({std::string("integral-identities"), c.identity, c.instance, c.residual, c.tolerance, c.pass});
    if (!c.pass) rc = 1;
  }
  return rc;
}

int verify_deformation(const RunConfig& cfg, Table& t) {
  SuiteConfig s;
  s.n = cfg.n;
  if (!cfg.theta.empty()) s.thetas = parse_reals(cfg.theta);
  else s.thetas = {0.2};
  if (!cfg.points.empty()) s.points = parse_reals(cfg.points);
  s.f = cfg.f;
  s.g = cfg.g;
  s.h = cfg.psi;
  if (cfg.radius != RunConfig{}.radius || cfg.panels || cfg.s || cfg.gauss_order != RunConfig{}.gauss_order) {
    s.plan = plan_of(cfg);
    s.plan.radius_x = 0.0;
  }
  const auto rep = property_suite(s);
  int rc = 0;
  for (const auto& e : rep.entries) {
    std::ostringstream inst;
    inst << e.instance << " at";
    for (double v : e.point) inst << ' ' << num(v);
    t.add({std::string("deformation"), e.identity, inst.str(), e.residual, e.tolerance, e.pass});
    if (!e.pass) rc = 1;
  }
  return rc;
}

int verify_actions(const RunConfig& cfg, Table& t) {
  CompactTau tau;
  std::mt19937 rng(cfg.seed);
  std::uniform_real_distribution<double> ux(-5.0, 5.0), uy(-1.5, 1.5), far(1.0, 10.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double x = ux(rng), xp = ux(rng), y = uy(rng);
    worst = std::max(worst, std::abs(tau1(x, tau1(xp, y, tau), tau) - tau1(x + xp, y, tau)));
  }
  int rc = 0;
  auto add = [&](const std::string& id, const std::string& inst, double r, double tol) {
    const bool pass = r <= tol;
    if (!pass) rc = 1;
    t.add({std::string("actions"), id, inst, r, tol, pass});
  };
  add("group-law", "100 random (x, x', y)", worst, 1e-8);
  double outside = 0.0;
  for (int i = 0; i < 100; ++i) {
    const double y = (i % 2 ? 1.0 : -1.0) * far(rng), x = ux(rng);
    outside = std::max(outside, std::abs(tau1(x, y, tau) - y));
  }
  add("identity-outside", "|y| >= 1", outside, 0.0);
  const auto xs = log_spaced(1.0, 100.0, 10);
  const auto grid = default_growth_grid(401);
  const double limit[] = {0.2, 3.3, 5.5};
  for (int l = 0; l <= 2; ++l) {
    const auto e = growth_exponent_fit(0, l, xs, grid, tau);
    add("growth-exponent", "l=" + std::to_string(l), e.fitted_exponent, limit[l]);
  }
  return rc;
}

int verify_symbols(const RunConfig&, Table& t) {
  int rc = 0;
  auto add = [&](const std::string& id, const std::string& inst, double r, double tol, bool pass) {
    if (!pass) rc = 1;
    t.add({std::string("symbols"), id, inst, r, tol, pass});
  };
  for (int n : {1, 2})
    for (int s : {1, 2, 3}) {
      const bool ok = qs_certify(qs_coefficients(n, s));
      add("qs-certificate", "n=" + std::to_string(n) + " s=" + std::to_string(s), ok ? 0.0 : 1.0, 0.0, ok);
    }
  struct Case {
    const char* text;
    double m, rho;
    bool symbol;
  };
  const Case battery[] = {{"exp(-x1^2)", 0, 0, true},
                          {"x1^2", 2, 1, true},
                          {"sqrt(1+x1^2)", 1, 1, true},
                          {"x1^2", 1, 0, false}};
  for (const auto& c : battery) {
    const auto F = symbol_from_expr(c.text, expr::VarLayout{1, false}, c.m, c.rho);
    const auto rep = check_symbol(F, 2, GridSpec::uniform(1));
    bool flagged = false;
    double worst = 0.0;
    for (const auto& e : rep) {
      flagged = flagged || e.diverging;
      worst = std::max(worst, e.estimate);
    }
    std::ostringstream inst;
    inst << c.text << " m=" << c.m << " rho=" << c.rho << (c.symbol ? "" : " (expected to diverge)");
    add("symbol-estimate", inst.str(), worst, INFINITY, flagged != c.symbol);
  }
  const bool sw = schwartz_certified(symbol_from_expr("exp(-x1^2)", expr::VarLayout{1, false}), 4, 2, GridSpec::uniform(1));
  add("schwartz", "exp(-x1^2)", sw ? 0.0 : 1.0, 0.0, sw);
  return rc;
}

int cmd_bench(const RunConfig& cfg, Table& t) {
  const int n = cfg.n;
  const auto F = symbol_from_expr(cfg.func.empty() ? default_gauss(n) : cfg.func, expr::VarLayout{n, true});
  t.columns = {"radius", "panels", "s", "exec", "seconds", "re", "im"};
  const std::vector<double> radii = cfg.radius != RunConfig{}.radius ? std::vector<double>{cfg.radius}
                                                                       : std::vector<double>{10.0, 20.0, 40.0};
  for (double R : radii)
    for (int panels : {0, 2 * static_cast<int>(R)})
      for (Exec ex : {Exec::Serial, Exec::Parallel}) {
        QuadraturePlan q = plan_of(cfg);
        q.radius = R;
        q.panels = panels;
        q.refinement = QuadraturePlan::Refinement::None;
        q.exec = ex;
        const auto a = std::chrono::steady_clock::now();
        const auto r = oscillatory_integral(F, q, pairing_of(cfg, n));
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - a).count();
        t.add({R, long(r.panels), long(r.s), std::string(ex == Exec::Serial ? "serial" : "parallel"), sec,
               r.value[0].real(), r.value[0].imag()});
      }
  return 0;
}

struct Leaf {
  std::string name;
  std::string help;
  std::function<int(const RunConfig&, Table&)> fn;
  bool verify = false;
};

const std::map<std::string, std::string>& key_help() {
  static const std::map<std::string, std::string> h = {
      {"f", "left factor, expression in x1..xn (default gauss(x1,..,xn))"},
      {"g", "right factor, expression in x1..xn (default gauss(x1,..,xn))"},
      {"psi", "third factor for verify deformation (default: built-in battery)"},
      {"func", "integrand in p1..pn, x1..xn (default gauss(x1,..,xn))"},
      {"n", "dimension (default 1)"},
      {"theta", "n x n matrix 'a,b;c,d' (default 0); verify deformation: list of t (default 0.2)"},
      {"points", "comma-separated reals, grouped by dimension (default 0)"},
      {"s", "regularization order, integer or auto (default auto)"},
      {"radius", "truncation radius (default 40)"},
      {"panels", "panels per axis, 0 for automatic (default 0)"},
      {"gauss-order", "Gauss-Legendre order per panel (default 16)"},
      {"pairing", "identity or matrix:a,b;c,d (default identity)"},
      {"tol", "largest acceptable error estimate, 0 for none (default 0)"},
      {"oracle", "moyal cross-check: direct, series or cutoff (default none)"},
      {"out", "output path (default stdout)"},
      {"format", "csv or jsonl (default csv; jsonl for verify)"},
      {"threads", "cap on worker threads, 0 for all (default 0)"},
      {"config", "key=value file; flags override its values"},
      {"seed", "seed for random samples (default 1)"},
  };
  return h;
}

const std::map<std::string, std::string>& key_type() {
  static const std::map<std::string, std::string> t = {
      {"f", "<expr>"},        {"g", "<expr>"},          {"psi", "<expr>"},      {"func", "<expr>"},
      {"n", "<int>"},         {"theta", "<matrix>"},    {"points", "<csv reals>"}, {"s", "<int|auto>"},
      {"radius", "<real>"},   {"panels", "<int>"},      {"gauss-order", "<int>"}, {"pairing", "<identity|matrix:...>"},
      {"tol", "<real>"},      {"oracle", "<direct|series|cutoff>"}, {"out", "<path>"}, {"format", "<csv|jsonl>"},
      {"threads", "<int>"},   {"config", "<path>"},     {"seed", "<int>"},
  };
  return t;
}

}  // namespace

// ---- config -----------------------------------------------------------------

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> k = {"f",      "g",       "psi",   "func",   "n",   "theta",   "points",
                                             "s",      "radius",  "panels", "gauss-order", "pairing", "tol",
                                             "oracle", "out",     "format", "threads", "config", "seed"};
  return k;
}

void apply_key(RunConfig& cfg, const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "f") cfg.f = v;
  else if (key == "g") cfg.g = v;
  else if (key == "psi") cfg.psi = v;
  else if (key == "func") cfg.func = v;
  else if (key == "n") {
    cfg.n = static_cast<int>(to_int(key, v));
    if (cfg.n < 1 || cfg.n > 8) throw UsageError("--n: expected 1..8");
  } else if (key == "theta") cfg.theta = v;
  else if (key == "points") cfg.points = v;
  else if (key == "s") {
    if (v == "auto") cfg.s.reset();
    else {
      cfg.s = static_cast<int>(to_int(key, v));
      if (*cfg.s < 0) throw UsageError("--s: expected a non-negative integer or auto");
    }
  } else if (key == "radius") cfg.radius = to_real(key, v);
  else if (key == "panels") cfg.panels = static_cast<int>(to_int(key, v));
  else if (key == "gauss-order") cfg.gauss_order = static_cast<int>(to_int(key, v));
  else if (key == "pairing") cfg.pairing = v;
  else if (key == "tol") cfg.tol = to_real(key, v);
  else if (key == "oracle") cfg.oracle = v;
  else if (key == "out") cfg.out = v;
  else if (key == "format") {
    if (v != "csv" && v != "jsonl") throw UsageError("--format: expected csv or jsonl");
    cfg.format = v;
  } else if (key == "threads") {
    cfg.threads = static_cast<int>(to_int(key, v));
    if (cfg.threads < 0) throw UsageError("--threads: expected a non-negative integer");
  } else if (key == "config") cfg.config = v;
  else if (key == "seed") cfg.seed = static_cast<unsigned>(to_int(key, v));
  else {
    std::string known;
    for (const auto& k : known_keys()) known += (known.empty() ? "" : ", ") + k;
    throw UsageError("unknown key '" + key + "'; known keys: " + known);
  }
}

RunConfig load_config(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file '" + path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError(path + ":" + std::to_string(lineno) + ": expected key=value");
    apply_key(base, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

std::vector<double> parse_reals(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(to_real("points", item));
  }
  return out;
}

std::vector<double> parse_matrix(const std::string& text, int n) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string row;
  int rows = 0;
  while (std::getline(ss, row, ';')) {
    const auto r = parse_reals(row);
    if (static_cast<int>(r.size()) != n) throw UsageError("matrix row " + std::to_string(rows + 1) + " needs " + std::to_string(n) + " entries");
    out.insert(out.end(), r.begin(), r.end());
    ++rows;
  }
  if (rows != n) throw UsageError("matrix '" + text + "' must have " + std::to_string(n) + " rows");
  return out;
}

// ---- dispatcher ---------------------------------------------------------------

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Oscillatory integrals, symbol calculus and deformed products"};
  app.require_subcommand(1);
  std::map<std::string, std::string> flags;

  const std::vector<Leaf> top = {
      {"integrate", "one oscillatory integral of --func over (p, x)", cmd_integrate},
      {"moyal", "deformed product of --f and --g at --points", cmd_moyal},
      {"twisted-conv", "twisted convolution of --f and --g at --points", cmd_twisted},
      {"local-nc", "product deformed by the compactly supported action at --points", cmd_local_nc},
  };
  const std::vector<Leaf> action = {
      {"probe", "tau and its partials at (x, y) pairs given by --points", cmd_action_probe},
      {"bounds", "fitted growth exponents of d_y^l tau_x over x in [1, 100]", cmd_action_bounds},
  };
  auto all = [](const RunConfig& c, Table& t) {
    int rc = 0;
    for (auto* f : {verify_symbols, verify_integrals, verify_actions, verify_deformation}) rc = std::max(rc, f(c, t));
    return rc;
  };
  const std::vector<Leaf> verify = {
      {"integral-identities", "normalization, substitution, parts, conjugation and Fubini", verify_integrals, true},
      {"deformation", "identities of the deformed product (slow: nested integrals)", verify_deformation, true},
      {"actions", "group law, locality and growth of the compact action", verify_actions, true},
      {"symbols", "Q_s certificates and symbol estimates", verify_symbols, true},
      {"all", "every suite above", all, true},
  };
  const std::vector<Leaf> bench = {
      {"quadrature", "timing sweep over radius and panels, serial and parallel", cmd_bench},
  };

  const Leaf* chosen = nullptr;
  std::string chosen_name;
  auto add_leaf = [&](CLI::App* parent, const Leaf& leaf, const std::string& prefix) {
    auto* sc = parent->add_subcommand(leaf.name, leaf.help);
    for (const auto& k : known_keys())
      sc->add_option("--" + k, flags[k], key_help().at(k))->type_name(key_type().at(k));
    sc->callback([&, p = &leaf, name = prefix + leaf.name, sc] {
      chosen = p;
      chosen_name = name;
      for (const auto& k : known_keys())
        if (sc->count("--" + k) == 0) flags.erase(k);
    });
  };
  for (const auto& l : top) add_leaf(&app, l, "");
  auto* act = app.add_subcommand("action", "compactly supported action");
  act->require_subcommand(1);
  for (const auto& l : action) add_leaf(act, l, "action ");
  auto* ver = app.add_subcommand("verify", "verification suites; exit 1 on failure");
  ver->require_subcommand(1);
  for (const auto& l : verify) add_leaf(ver, l, "verify ");
  auto* ben = app.add_subcommand("bench", "timing");
  ben->require_subcommand(1);
  for (const auto& l : bench) add_leaf(ben, l, "bench ");

  std::vector<std::string> storage{"rdq"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : storage) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    // Subcommand help requests surface here with exit code 0.
    if (e.get_exit_code() == 0) {
      for (auto* sc : app.get_subcommands()) {
        const auto inner = sc->get_subcommands();
        out << (inner.empty() ? sc->help() : inner.front()->help());
      }
      if (app.get_subcommands().empty()) out << app.help();
      return 0;
    }
    err << "error: " << e.what() << '\n';
    return 2;
  }
  if (!chosen) {
    err << "error: no command given\n";
    return 2;
  }

  try {
    RunConfig cfg;
    if (flags.count("config")) cfg = load_config(trim(flags["config"]));
    for (const auto& [k, v] : flags) apply_key(cfg, k, v);
    cfg.command = chosen_name;
    if (cfg.format.empty()) cfg.format = chosen->verify ? "jsonl" : "csv";
    if (cfg.threads > 0) set_thread_cap(cfg.threads);

    Table t = chosen->verify ? verify_table() : Table{};
    const int rc = chosen->fn(cfg, t);
    if (cfg.out.empty()) {
      write_table(t, cfg, out);
    } else {
      std::ofstream f(cfg.out);
      if (!f) throw UsageError("cannot write '" + cfg.out + "'");
      write_table(t, cfg, f);
    }
    return rc;
  } catch (const expr::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const NonConvergence& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace rdq::cli
