#pragma once

// Solver-facing LP/MILP representation: a variable registry with bounds and
// types, named constraints, and a linear objective. Models are built
// incrementally and sealed before solving; a sealed model is immutable and
// safe to share across threads.

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace hessplan::lp {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class VarType { Continuous, Binary };
enum class Relation { LessEqual, Equal, GreaterEqual };
enum class Sense { Minimize, Maximize };

using VarId = int;
using RowId = int;

struct Variable {
  std::string name;
  double lower = 0.0;
  double upper = kInfinity;
  VarType type = VarType::Continuous;
};

struct RowEntry {
  VarId var;
  double coeff;
};

struct Constraint {
  std::string name;
  std::vector<RowEntry> terms;
  Relation relation = Relation::LessEqual;
  double rhs = 0.0;
};

class LinearModel {
 public:
  VarId add_variable(std::string name, double lower, double upper,
                     VarType type = VarType::Continuous);
  VarId add_binary(std::string name);

  RowId add_constraint(std::string name, std::vector<RowEntry> terms, Relation relation,
                       double rhs);

  void set_objective(Sense sense, std::vector<RowEntry> terms);
  void set_objective_term(VarId var, double coeff);       // accumulate
  void add_objective_constant(double value) { objective_constant_ += value; }

  // Replaces a variable's bounds (used by branch-and-bound and capacity fixing).
  void set_bounds(VarId var, double lower, double upper);

  void seal();  // freezes the model; solving requires a sealed model
  bool sealed() const { return sealed_; }

  // Copy with every binary turned into a continuous variable on its bounds.
  LinearModel continuous_relaxation() const;

  int num_variables() const { return static_cast<int>(vars_.size()); }
  int num_constraints() const { return static_cast<int>(rows_.size()); }
  int num_binaries() const { return num_binaries_; }
  bool has_binaries() const { return num_binaries_ > 0; }

  const Variable& variable(VarId v) const { return vars_[v]; }
  const Constraint& constraint(RowId r) const { return rows_[r]; }
  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<Constraint>& constraints() const { return rows_; }

  Sense sense() const { return sense_; }
  const std::vector<double>& objective() const { return objective_; }
  double objective_constant() const { return objective_constant_; }

  VarId var_id(const std::string& name) const;   // throws ModelError when absent
  RowId row_id(const std::string& name) const;   // throws ModelError when absent
  bool has_var(const std::string& name) const { return var_index_.count(name) != 0; }
  bool has_row(const std::string& name) const { return row_index_.count(name) != 0; }

 private:
  std::vector<Variable> vars_;
  std::vector<Constraint> rows_;
  std::vector<double> objective_;  // dense by VarId
  double objective_constant_ = 0.0;
  Sense sense_ = Sense::Minimize;
  std::unordered_map<std::string, VarId> var_index_;
  std::unordered_map<std::string, RowId> row_index_;
  int num_binaries_ = 0;
  bool sealed_ = false;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterationLimit, NodeLimit };

std::string to_string(SolveStatus s);

// Primal/dual answer. Row duals follow the shadow-price convention
// d(objective)/d(rhs) for the model's own sense; reduced costs use the same
// orientation. For MILPs the duals are those of the continuous relaxation
// with the binaries fixed at the incumbent.
struct Solution {
  SolveStatus status = SolveStatus::Infeasible;
  double objective = 0.0;
  std::vector<double> primal;        // by VarId
  std::vector<double> row_dual;      // by RowId
  std::vector<double> reduced_cost;  // by VarId
  std::int64_t iterations = 0;
  std::int64_t nodes = 0;            // branch-and-bound nodes processed
  double mip_bound = 0.0;            // best bound at termination (MILP only)

  double value(const LinearModel& m, const std::string& var_name) const {
    return primal[m.var_id(var_name)];
  }
  double dual(const LinearModel& m, const std::string& row_name) const {
    return row_dual[m.row_id(row_name)];
  }
};

// Writes the model in CPLEX-style LP text format for external cross-checking.
// Layout: "Minimize/Maximize obj: ...", "Subject To" one line per named row,
// "Bounds" one line per non-default bound, "Binaries" section, "End".
void write_lp_format(const LinearModel& model, std::ostream& os);
void write_lp_file(const LinearModel& model, const std::string& path);

}  // namespace hessplan::lp
