#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rdq::cli {

struct RunConfig {
  std::string command;
  std::string f, g, psi, func;  // empty: per-command defaults
  int n = 1;
  std::string theta;            // matrix text "a,b;c,d" (verify deformation: list of t)
  std::string points;
  std::optional<int> s;         // empty: auto
  double radius = 40.0;
  int panels = 0;
  int gauss_order = 16;
  std::string pairing = "identity";
  double tol = 0.0;             // 0: no tolerance
  std::string oracle;
  std::string out;
  std::string format;           // empty: csv, jsonl for verify
  int threads = 0;
  std::string config;
  unsigned seed = 1;
};

// Keys accepted in config files; they mirror the flag names without dashes.
const std::vector<std::string>& known_keys();
void apply_key(RunConfig& cfg, const std::string& key, const std::string& value);
// key=value lines, '#' comments, blank lines ignored.
RunConfig load_config(const std::string& path, RunConfig base = {});

// "a,b;c,d" -> row-major n x n; a single value is accepted for n = 1.
std::vector<double> parse_matrix(const std::string& text, int n);
std::vector<double> parse_reals(const std::string& text);

// Exit codes: 0 success or pass, 1 verification failure, 2 usage error, 3 numeric non-convergence.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rdq::cli
