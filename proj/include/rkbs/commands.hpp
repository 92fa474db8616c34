#pragma once

// Command implementations behind the rkbs-sparse executable. Each command
// writes its report to `out`, a one-line JSON error object to `err`, and
// returns the process exit status.

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>

#include "json.hpp"
#include "rkbs/problem_io.hpp"

namespace rkbs::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitMismatch = 1,
  kExitValidation = 2,
  kExitSolverFailure = 3,
  kExitOracleRefusal = 4,
};

struct Overrides {
  std::optional<double> tol;
  std::optional<double> attain_tol;
  std::optional<std::size_t> truncation;
  std::optional<double> grid_step;
  std::string format = "json";
};

/// Applies command-line overrides on top of the file's options.
void apply_overrides(io::ProblemFile& problem, const Overrides& overrides);

/// Report for the task named in the file.
nlohmann::json solve_report(const io::ProblemFile& problem);
nlohmann::json dual_report(const io::ProblemFile& problem);
/// Second element is whether the certificate passed.
std::pair<nlohmann::json, bool> lambda_check_report(const io::ProblemFile& problem);
nlohmann::json lambda_max_report(const io::ProblemFile& problem);
nlohmann::json path_report(const io::ProblemFile& problem);
std::string path_csv(const io::ProblemFile& problem);
/// Second element is whether every oracle agreed.
std::pair<nlohmann::json, bool> oracle_report(const io::ProblemFile& problem);

int cmd_solve(const std::string& path, const Overrides& overrides, std::ostream& out, std::ostream& err);
int cmd_dual(const std::string& path, const Overrides& overrides, std::ostream& out, std::ostream& err);
int cmd_lambda_check(const std::string& path, const Overrides& overrides, std::ostream& out,
                     std::ostream& err);
int cmd_lambda_max(const std::string& path, const Overrides& overrides, std::ostream& out,
                   std::ostream& err);
int cmd_path(const std::string& path, const Overrides& overrides, std::ostream& out, std::ostream& err);
int cmd_oracle_verify(const std::string& path, const Overrides& overrides, std::ostream& out,
                      std::ostream& err);
int cmd_demo(const Overrides& overrides, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches to a command.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rkbs::cli
