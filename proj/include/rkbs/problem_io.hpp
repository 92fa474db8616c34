#pragma once

// Problem files and reports in the "rkbs-sparse/1" JSON schema.

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "rkbs/core.hpp"
#include "rkbs/seq_rkbs.hpp"

namespace rkbs::io {

inline constexpr const char* kSchema = "rkbs-sparse/1";
inline constexpr const char* kToolName = "rkbs-sparse";
inline constexpr const char* kToolVersion = "0.1.0";

using nlohmann::json;

/// Malformed or inconsistent problem file.
class ValidationError : public DomainError {
 public:
  using DomainError::DomainError;
};

enum class Space { kL1, kLp, kGaussian };
enum class Task { kMni, kReg, kDual, kLambdaCheck, kPath };

const char* to_string(Space space);
const char* to_string(Task task);

struct ProblemFile {
  Space space = Space::kL1;
  Task task = Task::kMni;
  double p = 2.0;
  std::size_t lp_truncation = std::size_t{1} << 16;
  SeqProblem seq;
  GaussProblem gauss;
  std::optional<double> lambda;
  std::vector<double> lambdas;
  DualSelection selection = DualSelection::kVertex;
  /// Candidate solution for lambda-check.
  std::vector<Atom> atoms;

  SolverOptions& options() { return space == Space::kGaussian ? gauss.options : seq.options; }
  const SolverOptions& options() const {
    return space == Space::kGaussian ? gauss.options : seq.options;
  }
  const Vector& y() const { return space == Space::kGaussian ? gauss.y : seq.y; }
};

SequenceFunctional parse_functional(const json& j);
json functional_to_json(const SequenceFunctional& f);

SolverOptions parse_options(const json& j);
json options_to_json(const SolverOptions& options);

/// Validates the whole document before returning; throws ValidationError.
ProblemFile parse_problem(const json& j);
ProblemFile load_problem(const std::string& path);

json vector_to_json(const Vector& v);
/// Sequence sites are written as integers.
json atoms_to_json(const std::vector<Atom>& atoms, bool integer_sites);

}  // namespace rkbs::io
