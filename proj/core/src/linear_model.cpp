#include "hessplan/linear_model.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

namespace hessplan::lp {

VarId LinearModel::add_variable(std::string name, double lower, double upper, VarType type) {
  if (sealed_) throw ModelError("model is sealed");
  if (name.empty()) throw ModelError("variable name must not be empty");
  if (var_index_.count(name)) throw ModelError("duplicate variable name '" + name + "'");
  if (lower > upper) throw ModelError("variable '" + name + "' has lower > upper");
  if (type == VarType::Binary && (lower < 0.0 || upper > 1.0))
    throw ModelError("binary variable '" + name + "' must have bounds within [0,1]");
  const VarId id = static_cast<VarId>(vars_.size());
  vars_.push_back(Variable{std::move(name), lower, upper, type});
  objective_.push_back(0.0);
  var_index_.emplace(vars_.back().name, id);
  if (type == VarType::Binary) ++num_binaries_;
  return id;
}

VarId LinearModel::add_binary(std::string name) {
  return add_variable(std::move(name), 0.0, 1.0, VarType::Binary);
}

RowId LinearModel::add_constraint(std::string name, std::vector<RowEntry> terms,
                                  Relation relation, double rhs) {
  if (sealed_) throw ModelError("model is sealed");
  if (name.empty()) throw ModelError("constraint name must not be empty");
  if (row_index_.count(name)) throw ModelError("duplicate constraint name '" + name + "'");
  for (const RowEntry& e : terms) {
    if (e.var < 0 || e.var >= num_variables())
      throw ModelError("constraint '" + name + "' references unregistered variable");
    if (!std::isfinite(e.coeff))
      throw ModelError("constraint '" + name + "' has non-finite coefficient");
  }
  const RowId id = static_cast<RowId>(rows_.size());
  rows_.push_back(Constraint{std::move(name), std::move(terms), relation, rhs});
  row_index_.emplace(rows_.back().name, id);
  return id;
}

void LinearModel::set_objective(Sense sense, std::vector<RowEntry> terms) {
  if (sealed_) throw ModelError("model is sealed");
  sense_ = sense;
  std::fill(objective_.begin(), objective_.end(), 0.0);
  for (const RowEntry& e : terms) {
    if (e.var < 0 || e.var >= num_variables())
      throw ModelError("objective references unregistered variable");
    objective_[e.var] += e.coeff;
  }
}

void LinearModel::set_objective_term(VarId var, double coeff) {
  if (sealed_) throw ModelError("model is sealed");
  if (var < 0 || var >= num_variables())
    throw ModelError("objective references unregistered variable");
  objective_[var] += coeff;
}

void LinearModel::set_bounds(VarId var, double lower, double upper) {
  if (var < 0 || var >= num_variables()) throw ModelError("set_bounds: bad variable id");
  if (lower > upper) throw ModelError("set_bounds: lower > upper");
  vars_[var].lower = lower;
  vars_[var].upper = upper;
}

void LinearModel::seal() { sealed_ = true; }

LinearModel LinearModel::continuous_relaxation() const {
  LinearModel out = *this;
  for (Variable& v : out.vars_)
    if (v.type == VarType::Binary) v.type = VarType::Continuous;
  out.num_binaries_ = 0;
  return out;
}

VarId LinearModel::var_id(const std::string& name) const {
  auto it = var_index_.find(name);
  if (it == var_index_.end()) throw ModelError("unknown variable '" + name + "'");
  return it->second;
}

RowId LinearModel::row_id(const std::string& name) const {
  auto it = row_index_.find(name);
  if (it == row_index_.end()) throw ModelError("unknown constraint '" + name + "'");
  return it->second;
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::IterationLimit: return "iteration-limit";
    case SolveStatus::NodeLimit: return "node-limit";
  }
  return "?";
}

namespace {

void write_terms(std::ostream& os, const std::vector<RowEntry>& terms,
                 const LinearModel& model) {
  bool first = true;
  for (const RowEntry& e : terms) {
    if (e.coeff == 0.0) continue;
    const double c = e.coeff;
    if (first) {
      if (c < 0.0) os << "- ";
      first = false;
    } else {
      os << (c < 0.0 ? " - " : " + ");
    }
    const double mag = std::abs(c);
    if (mag != 1.0) os << mag << " ";
    os << model.variable(e.var).name;
  }
  if (first) os << "0";
}

}  // namespace

void write_lp_format(const LinearModel& model, std::ostream& os) {
  os.precision(17);
  os << (model.sense() == Sense::Minimize ? "Minimize" : "Maximize") << "\n obj: ";
  std::vector<RowEntry> obj;
  for (VarId v = 0; v < model.num_variables(); ++v)
    if (model.objective()[v] != 0.0) obj.push_back({v, model.objective()[v]});
  write_terms(os, obj, model);
  os << "\nSubject To\n";
  for (RowId r = 0; r < model.num_constraints(); ++r) {
    const Constraint& row = model.constraint(r);
    os << " " << row.name << ": ";
    write_terms(os, row.terms, model);
    switch (row.relation) {
      case Relation::LessEqual: os << " <= "; break;
      case Relation::Equal: os << " = "; break;
      case Relation::GreaterEqual: os << " >= "; break;
    }
    os << row.rhs << "\n";
  }
  os << "Bounds\n";
  for (VarId v = 0; v < model.num_variables(); ++v) {
    const Variable& var = model.variable(v);
    if (var.type == VarType::Binary && var.lower == 0.0 && var.upper == 1.0) continue;
    if (var.lower == 0.0 && var.upper == kInfinity) continue;
    if (var.lower == -kInfinity && var.upper == kInfinity) {
      os << " " << var.name << " free\n";
    } else if (var.lower == -kInfinity) {
      os << " -inf <= " << var.name << " <= " << var.upper << "\n";
    } else if (var.upper == kInfinity) {
      os << " " << var.name << " >= " << var.lower << "\n";
    } else {
      os << " " << var.lower << " <= " << var.name << " <= " << var.upper << "\n";
    }
  }
  bool any_bin = false;
  for (VarId v = 0; v < model.num_variables(); ++v)
    if (model.variable(v).type == VarType::Binary) {
      if (!any_bin) {
        os << "Binaries\n";
        any_bin = true;
      }
      os << " " << model.variable(v).name << "\n";
    }
  os << "End\n";
}

void write_lp_file(const LinearModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ModelError("cannot open '" + path + "' for writing");
  write_lp_format(model, out);
}

}  // namespace hessplan::lp
