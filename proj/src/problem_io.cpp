#include "rkbs/problem_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <cstdint>
#include <set>

namespace rkbs::io {

namespace {

void only_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& item : j.items()) {
    if (!ok.count(item.key())) throw ValidationError("unknown field '" + item.key() + "' in " + where);
  }
}

double number(const json& j, const std::string& what) {
  if (!j.is_number()) throw ValidationError(what + " must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ValidationError(what + " must be finite");
  return v;
}

std::vector<double> numbers(const json& j, const std::string& what) {
  if (!j.is_array()) throw ValidationError(what + " must be an array of numbers");
  std::vector<double> out;
  for (const json& v : j) out.push_back(number(v, what + " entry"));
  return out;
}

std::string text(const json& j, const std::string& what) {
  if (!j.is_string()) throw ValidationError(what + " must be a string");
  return j.get<std::string>();
}

Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

const char* to_string(Space space) {
  switch (space) {
    case Space::kL1:
      return "l1";
    case Space::kLp:
      return "lp";
    case Space::kGaussian:
      return "gaussian-measure";
  }
  return "l1";
}

const char* to_string(Task task) {
  switch (task) {
    case Task::kMni:
      return "mni";
    case Task::kReg:
      return "reg";
    case Task::kDual:
      return "dual";
    case Task::kLambdaCheck:
      return "lambda-check";
    case Task::kPath:
      return "path";
  }
  return "mni";
}

SequenceFunctional parse_functional(const json& j) {
  if (!j.is_object() || !j.contains("kind")) throw ValidationError("functional needs a 'kind'");
  const std::string kind = text(j.at("kind"), "functional kind");
  try {
    if (kind == "harmonic") {
      only_keys(j, {"kind"}, "harmonic functional");
      return SequenceFunctional::Harmonic();
    }
    if (kind == "geometric") {
      only_keys(j, {"kind", "ratio"}, "geometric functional");
      if (!j.contains("ratio")) throw ValidationError("geometric functional needs 'ratio'");
      return SequenceFunctional::Geometric(number(j.at("ratio"), "ratio"));
    }
    if (kind == "finite") {
      only_keys(j, {"kind", "values"}, "finite functional");
      if (!j.contains("values")) throw ValidationError("finite functional needs 'values'");
      return SequenceFunctional::Finite(numbers(j.at("values"), "values"));
    }
    if (kind == "scaled-sum") {
      only_keys(j, {"kind", "terms"}, "scaled-sum functional");
      if (!j.contains("terms") || !j.at("terms").is_array()) {
        throw ValidationError("scaled-sum functional needs a 'terms' array");
      }
      std::vector<std::pair<double, SequenceFunctional>> terms;
      for (const json& t : j.at("terms")) {
        only_keys(t, {"weight", "functional"}, "scaled-sum term");
        if (!t.contains("weight") || !t.contains("functional")) {
          throw ValidationError("scaled-sum term needs 'weight' and 'functional'");
        }
        terms.emplace_back(number(t.at("weight"), "weight"), parse_functional(t.at("functional")));
      }
      return SequenceFunctional::ScaledSum(std::move(terms));
    }
  } catch (const ValidationError&) {
    throw;
  } catch (const DomainError& e) {
    throw ValidationError(e.what());
  }
  throw ValidationError("unknown functional kind '" + kind + "'");
}

json functional_to_json(const SequenceFunctional& f) {
  switch (f.kind()) {
    case SequenceFunctional::Kind::kHarmonic:
      return {{"kind", "harmonic"}};
    case SequenceFunctional::Kind::kGeometric:
      return {{"kind", "geometric"}, {"ratio", f.ratio()}};
    case SequenceFunctional::Kind::kFinite:
      return {{"kind", "finite"}, {"values", f.values()}};
    case SequenceFunctional::Kind::kScaledSum: {
      json terms = json::array();
      for (const auto& t : f.terms()) {
        terms.push_back({{"weight", t.weight}, {"functional", functional_to_json(*t.functional)}});
      }
      return {{"kind", "scaled-sum"}, {"terms", terms}};
    }
  }
  return json::object();
}

SolverOptions parse_options(const json& j) {
  only_keys(j, {"tol", "attain_tol", "truncation_start", "grid_step", "max_exchange_iters"}, "options");
  SolverOptions o;
  if (j.contains("tol")) o.tol = number(j.at("tol"), "tol");
  if (j.contains("attain_tol")) o.attain_tol = number(j.at("attain_tol"), "attain_tol");
  if (j.contains("truncation_start")) {
    if (!j.at("truncation_start").is_number_integer() || j.at("truncation_start").get<long long>() <= 0) {
      throw ValidationError("truncation_start must be a positive integer");
    }
    o.truncation_start = j.at("truncation_start").get<std::size_t>();
  }
  if (j.contains("grid_step")) {
    o.grid_step = number(j.at("grid_step"), "grid_step");
    if (!(o.grid_step > 0)) throw ValidationError("grid_step must be positive");
  }
  if (j.contains("max_exchange_iters")) {
    if (!j.at("max_exchange_iters").is_number_integer() || j.at("max_exchange_iters").get<long long>() <= 0) {
      throw ValidationError("max_exchange_iters must be a positive integer");
    }
    o.max_exchange_iters = j.at("max_exchange_iters").get<int>();
  }
  try {
    o.Validate();
  } catch (const DomainError& e) {
    throw ValidationError(e.what());
  }
  return o;
}

json options_to_json(const SolverOptions& o) {
  json j = {{"tol", o.tol},
            {"attain_tol", o.attain_tol},
            {"truncation_start", o.truncation_start},
            {"max_exchange_iters", o.max_exchange_iters}};
  if (o.grid_step > 0) j["grid_step"] = o.grid_step;
  return j;
}

ProblemFile parse_problem(const json& j) {
  only_keys(j, {"schema", "space", "p", "truncation", "sigma", "centers", "domain", "functionals", "y",
                "task", "lambda", "lambdas", "loss", "options", "selection", "atoms"},
            "problem");
  if (j.contains("schema") && text(j.at("schema"), "schema") != kSchema) {
    throw ValidationError(std::string("unsupported schema; expected ") + kSchema);
  }
  if (!j.contains("space")) throw ValidationError("problem needs 'space'");
  if (!j.contains("y")) throw ValidationError("problem needs 'y'");
  ProblemFile pf;
  const std::string space = text(j.at("space"), "space");
  if (space == "l1") {
    pf.space = Space::kL1;
  } else if (space == "lp") {
    pf.space = Space::kLp;
  } else if (space == "gaussian-measure") {
    pf.space = Space::kGaussian;
  } else {
    throw ValidationError("unknown space '" + space + "'");
  }

  const std::string task = j.contains("task") ? text(j.at("task"), "task") : "mni";
  if (task == "mni") {
    pf.task = Task::kMni;
  } else if (task == "reg") {
    pf.task = Task::kReg;
  } else if (task == "dual") {
    pf.task = Task::kDual;
  } else if (task == "lambda-check") {
    pf.task = Task::kLambdaCheck;
  } else if (task == "path") {
    pf.task = Task::kPath;
  } else {
    throw ValidationError("unknown task '" + task + "'");
  }
  if (pf.space == Space::kLp && pf.task != Task::kMni && pf.task != Task::kDual) {
    throw ValidationError("space 'lp' supports only the mni and dual tasks");
  }

  const bool gaussian = pf.space == Space::kGaussian;
  for (const char* key : {"sigma", "centers", "domain"}) {
    if (!gaussian && j.contains(key)) {
      throw ValidationError(std::string("field '") + key + "' applies only to gaussian-measure");
    }
  }
  if (gaussian && j.contains("functionals")) {
    throw ValidationError("field 'functionals' does not apply to gaussian-measure");
  }
  if (pf.space != Space::kLp && (j.contains("p") || j.contains("truncation"))) {
    throw ValidationError("fields 'p' and 'truncation' apply only to lp");
  }

  const SolverOptions options = j.contains("options") ? parse_options(j.at("options")) : SolverOptions{};
  const Vector y = to_vector(numbers(j.at("y"), "y"));

  try {
    if (gaussian) {
      if (!j.contains("sigma") || !j.contains("centers")) {
        throw ValidationError("gaussian-measure needs 'sigma' and 'centers'");
      }
      pf.gauss = GaussProblem::Make(numbers(j.at("centers"), "centers"), number(j.at("sigma"), "sigma"), y);
      if (j.contains("domain")) {
        const std::vector<double> d = numbers(j.at("domain"), "domain");
        if (d.size() != 2) throw ValidationError("domain must be [lo, hi]");
        pf.gauss.lo = d[0];
        pf.gauss.hi = d[1];
      }
      pf.gauss.options = options;
      pf.gauss.Validate();
    } else {
      if (!j.contains("functionals") || !j.at("functionals").is_array()) {
        throw ValidationError("sequence spaces need a 'functionals' array");
      }
      for (const json& f : j.at("functionals")) pf.seq.functionals.push_back(parse_functional(f));
      pf.seq.y = y;
      pf.seq.options = options;
      pf.seq.Validate();
    }
  } catch (const ValidationError&) {
    throw;
  } catch (const DomainError& e) {
    throw ValidationError(e.what());
  }

  if (pf.space == Space::kLp) {
    if (!j.contains("p")) throw ValidationError("lp needs 'p'");
    pf.p = number(j.at("p"), "p");
    if (!(pf.p > 1.0)) throw ValidationError("p must lie in (1, inf)");
    if (j.contains("truncation")) {
      if (!j.at("truncation").is_number_integer() || j.at("truncation").get<long long>() <= 0) {
        throw ValidationError("truncation must be a positive integer");
      }
      pf.lp_truncation = j.at("truncation").get<std::size_t>();
    }
  }

  if (j.contains("loss") && text(j.at("loss"), "loss") != "square") {
    throw ValidationError("only the 'square' loss is supported");
  }
  if (j.contains("lambda")) {
    pf.lambda = number(j.at("lambda"), "lambda");
    if (!(*pf.lambda > 0)) throw ValidationError("lambda must be positive");
  }
  if (j.contains("lambdas")) {
    pf.lambdas = numbers(j.at("lambdas"), "lambdas");
    for (std::size_t i = 0; i < pf.lambdas.size(); ++i) {
      if (!(pf.lambdas[i] > 0)) throw ValidationError("lambdas must be positive");
      if (i > 0 && !(pf.lambdas[i] >= pf.lambdas[i - 1])) throw ValidationError("lambdas must be ascending");
    }
  }
  if ((pf.task == Task::kReg || pf.task == Task::kLambdaCheck) && !pf.lambda) {
    throw ValidationError(std::string("task '") + to_string(pf.task) + "' needs 'lambda'");
  }
  if (pf.task == Task::kPath && pf.lambdas.empty()) throw ValidationError("task 'path' needs 'lambdas'");
  if ((pf.task == Task::kMni || pf.task == Task::kDual) && pf.y().cwiseAbs().maxCoeff() == 0.0) {
    throw ValidationError("minimum-norm interpolation needs y != 0");
  }

  if (j.contains("selection")) {
    const std::string s = text(j.at("selection"), "selection");
    if (s == "vertex") {
      pf.selection = DualSelection::kVertex;
    } else if (s == "minimal-attainment") {
      pf.selection = DualSelection::kMinimalAttainment;
    } else {
      throw ValidationError("selection must be 'vertex' or 'minimal-attainment'");
    }
    if (pf.space != Space::kL1) throw ValidationError("'selection' applies only to l1");
  }

  if (j.contains("atoms")) {
    if (!j.at("atoms").is_array()) throw ValidationError("atoms must be an array");
    for (const json& a : j.at("atoms")) {
      only_keys(a, {"site", "coeff"}, "atom");
      if (!a.contains("site") || !a.contains("coeff")) throw ValidationError("atom needs 'site' and 'coeff'");
      Atom atom{number(a.at("site"), "site"), number(a.at("coeff"), "coeff")};
      if (!gaussian && (atom.site < 1 || atom.site != std::floor(atom.site))) {
        throw ValidationError("sequence atom sites must be positive integers");
      }
      pf.atoms.push_back(atom);
    }
    std::sort(pf.atoms.begin(), pf.atoms.end(), [](const Atom& a, const Atom& b) { return a.site < b.site; });
    for (std::size_t i = 1; i < pf.atoms.size(); ++i) {
      if (pf.atoms[i].site == pf.atoms[i - 1].site) throw ValidationError("atom sites must be distinct");
    }
  }
  if (pf.task == Task::kLambdaCheck && !j.contains("atoms")) {
    throw ValidationError("task 'lambda-check' needs 'atoms'");
  }
  return pf;
}

ProblemFile load_problem(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open problem file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("problem file is not valid JSON: ") + e.what());
  }
  return parse_problem(j);
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json atoms_to_json(const std::vector<Atom>& atoms, bool integer_sites) {
  json out = json::array();
  for (const Atom& a : atoms) {
    json site = integer_sites ? json(static_cast<std::uint64_t>(a.site)) : json(a.site);
    out.push_back({{"site", site}, {"coeff", a.coeff}});
  }
  return out;
}

}  // namespace rkbs::io
