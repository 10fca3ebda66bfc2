#include "hessplan/benders.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <ostream>
#include <thread>

namespace hessplan::benders {

using lp::LinearModel;
using lp::Relation;
using lp::RowEntry;
using lp::Sense;
using lp::Solution;
using lp::SolveStatus;
using lp::VarId;

double cut_bound(const BendersCut& cut, const std::array<double, 2>& e) {
  double v = -cut.pi_linear;
  for (int s = 0; s < 2; ++s) v += cut.sensitivity[s] * (e[s] - cut.anchor[s]);
  return cut.gamma * v;
}

BendersCut make_cut(int day, int iteration, double gamma, double pi_linear,
                    const std::array<double, 2>& sensitivity,
                    const std::array<double, 2>& anchor) {
  BendersCut cut;
  cut.day = day;
  cut.iteration = iteration;
  cut.gamma = gamma;
  cut.pi_linear = pi_linear;
  cut.sensitivity = sensitivity;
  cut.anchor = anchor;
  return cut;
}

LinearModel build_master(const std::vector<std::vector<BendersCut>>& cuts_per_day,
                         const std::array<StorageTech, 2>& techs, int num_days,
                         double alpha_min) {
  if (!std::isfinite(alpha_min)) throw ConfigError("alpha_min must be finite");
  LinearModel m;
  std::array<VarId, 2> e{};
  for (int s = 0; s < 2; ++s)
    e[s] = m.add_variable("E_" + techs[s].id, 0.0, techs[s].max_capacity);
  std::vector<VarId> alpha(num_days);
  for (int j = 0; j < num_days; ++j)
    alpha[j] = m.add_variable("alpha_" + std::to_string(j), alpha_min, lp::kInfinity);

  for (int j = 0; j < num_days && j < static_cast<int>(cuts_per_day.size()); ++j) {
    int l = 0;
    for (const BendersCut& cut : cuts_per_day[j]) {
      // alpha_j - gamma*sum(pi_s*E_s) >= gamma*(-Pi - sum(pi_s*anchor_s))
      std::vector<RowEntry> terms = {{alpha[j], 1.0}};
      double rhs = -cut.gamma * cut.pi_linear;
      for (int s = 0; s < 2; ++s) {
        if (cut.sensitivity[s] != 0.0) terms.push_back({e[s], -cut.gamma * cut.sensitivity[s]});
        rhs -= cut.gamma * cut.sensitivity[s] * cut.anchor[s];
      }
      m.add_constraint("cut_" + std::to_string(j) + "_" + std::to_string(l++), std::move(terms),
                       Relation::GreaterEqual, rhs);
    }
  }

  std::vector<RowEntry> obj;
  for (int j = 0; j < num_days; ++j) obj.push_back({alpha[j], -1.0});
  for (int s = 0; s < 2; ++s) obj.push_back({e[s], -techs[s].invest_cost});
  m.set_objective(Sense::Maximize, obj);
  m.seal();
  return m;
}

namespace {

struct DayOutcome {
  bool ok = false;
  std::string failure;
  double pi_linear = 0.0;                       // unweighted day profit
  std::array<double, 2> sensitivity = {0, 0};   // cut slopes
  EsoDecision::DayRecord decision;
  double comp_residual = 0.0;
  double duality_gap = 0.0;
  double audit_gap = 0.0;
};

DayOutcome solve_day(const Scenario& scenario, int j, const std::array<double, 2>& capacity,
                     const BendersOptions& options) {
  DayOutcome out;
  const ScenarioDay& day = scenario.days[j];
  const double gamma = day.weight;
  try {
    mpec::DayModelPtr ap =
        mpec::assemble_ap(day, scenario.techs, capacity, scenario.grid_access, options.mpec);
    Solution ap_sol = lp::solve_milp(mpec::model_of(*ap), options.mpec.milp);
    if (ap_sol.status == SolveStatus::Infeasible) {
      out.failure = "auxiliary problem infeasible on day " + day.id;
      return out;
    }
    if (ap_sol.status != SolveStatus::Optimal && ap_sol.status != SolveStatus::NodeLimit) {
      out.failure = "auxiliary problem ended " + lp::to_string(ap_sol.status) + " on day " + day.id;
      return out;
    }
    if (ap_sol.primal.empty()) {
      out.failure = "auxiliary problem has no incumbent on day " + day.id;
      return out;
    }

    out.comp_residual = mpec::max_complementarity_residual(*ap, ap_sol);
    out.duality_gap = mpec::max_embedded_duality_gap(*ap, ap_sol);
    out.audit_gap =
        mpec::audit_against_clearing(*ap, ap_sol, day, scenario.techs).abs_gap;

    mpec::ApFixedSet fixed = mpec::extract_fixed_set(*ap, ap_sol);
    mpec::DayModelPtr sp = mpec::assemble_sp(day, scenario.techs, capacity, fixed,
                                             scenario.grid_access, options.mpec);
    Solution sp_sol = lp::solve_lp(mpec::model_of(*sp), options.mpec.milp.lp);
    if (sp_sol.status != SolveStatus::Optimal) {
      out.failure = "subproblem ended " + lp::to_string(sp_sol.status) + " on day " + day.id;
      return out;
    }

    const double g = std::max(gamma, 1e-12);
    out.pi_linear = sp_sol.objective / g;
    for (int s = 0; s < 2; ++s) {
      const double raw = sp_sol.dual(mpec::model_of(*sp), "pin_E_" + (s == 0 ? std::string("s1")
                                                                             : std::string("s2")));
      // the pin dual is the weighted profit sensitivity; the cut slope enters
      // with the opposite sign so the linearization supports from above
      out.sensitivity[s] = -raw / g;
    }
    out.comp_residual = std::max(out.comp_residual, mpec::max_complementarity_residual(*sp, sp_sol));
    out.duality_gap = std::max(out.duality_gap, mpec::max_embedded_duality_gap(*sp, sp_sol));

    EsoDecision dec = mpec::extract_decision(*ap, ap_sol);
    out.decision = dec.days.front();
    out.ok = true;
  } catch (const std::exception& ex) {
    out.failure = std::string(ex.what()) + " (day " + day.id + ")";
  }
  return out;
}

}  // namespace

PlanningSolution run(const Scenario& scenario, const BendersOptions& options) {
  if (!(options.tol > 0.0)) throw ConfigError("convergence tolerance must be positive");
  scenario.validate();
  const int num_days = static_cast<int>(scenario.days.size());

  PlanningSolution result;
  result.cuts_per_day.assign(num_days, {});

  std::array<double, 2> capacity;
  for (int s = 0; s < 2; ++s)
    capacity[s] = options.e_initial[s] >= 0.0 ? options.e_initial[s]
                                              : scenario.techs[s].max_capacity / 2.0;

  double z_mp = std::numeric_limits<double>::infinity();
  double best_pi = -std::numeric_limits<double>::infinity();
  std::vector<EsoDecision::DayRecord> best_days;
  std::array<double, 2> best_capacity = capacity;

  const int want_threads = options.threads > 0
                               ? options.threads
                               : std::max(1u, std::thread::hardware_concurrency());
  const int threads = std::max(1, std::min(want_threads, num_days));

  for (int k = 1; k <= options.max_iter; ++k) {
    result.iterations = k;

    std::vector<DayOutcome> outcomes(num_days);
    if (threads <= 1) {
      for (int j = 0; j < num_days; ++j) outcomes[j] = solve_day(scenario, j, capacity, options);
    } else {
      std::vector<std::future<DayOutcome>> futures;
      futures.reserve(num_days);
      for (int j = 0; j < num_days; ++j)
        futures.push_back(std::async(std::launch::async, solve_day, std::cref(scenario), j,
                                     capacity, std::cref(options)));
      for (int j = 0; j < num_days; ++j) outcomes[j] = futures[j].get();
    }

    double pi_tilde = 0.0;
    for (int j = 0; j < num_days; ++j) {
      if (!outcomes[j].ok) {
        result.status = PlanStatus::Infeasible;
        result.failure = outcomes[j].failure;
        return result;
      }
      pi_tilde += scenario.days[j].weight * outcomes[j].pi_linear;
      result.max_comp_residual = std::max(result.max_comp_residual, outcomes[j].comp_residual);
      result.max_duality_gap = std::max(result.max_duality_gap, outcomes[j].duality_gap);
      result.max_audit_gap = std::max(result.max_audit_gap, outcomes[j].audit_gap);
    }
    for (int s = 0; s < 2; ++s)
      pi_tilde -= scenario.techs[s].invest_cost * capacity[s];

    IterationTrace row;
    row.iteration = k;
    row.z_mp = z_mp;
    row.pi_tilde = pi_tilde;
    row.gap = z_mp - pi_tilde;
    row.capacity = capacity;
    result.trace.push_back(row);

    if (pi_tilde > best_pi) {
      best_pi = pi_tilde;
      best_capacity = capacity;
      best_days.clear();
      for (const DayOutcome& o : outcomes) best_days.push_back(o.decision);
    }

    const double gap = std::abs(z_mp - pi_tilde);
    if (std::isfinite(z_mp) && gap <= options.tol * std::max(1.0, std::abs(pi_tilde))) {
      result.status = PlanStatus::Converged;
      result.capacity = capacity;
      result.z_mp = z_mp;
      result.pi_tilde = pi_tilde;
      result.decision.capacity = capacity;
      result.decision.days.clear();
      for (const DayOutcome& o : outcomes) result.decision.days.push_back(o.decision);
      return result;
    }

    for (int j = 0; j < num_days; ++j)
      result.cuts_per_day[j].push_back(make_cut(j, k, scenario.days[j].weight,
                                                outcomes[j].pi_linear, outcomes[j].sensitivity,
                                                capacity));

    LinearModel master = build_master(result.cuts_per_day, scenario.techs, num_days,
                                      options.alpha_min);
    Solution msol = lp::solve_lp(master);
    if (msol.status != SolveStatus::Optimal) {
      result.status = PlanStatus::Infeasible;
      result.failure = "master problem ended " + lp::to_string(msol.status);
      return result;
    }
    z_mp = msol.objective;
    for (int s = 0; s < 2; ++s) capacity[s] = msol.value(master, "E_" + scenario.techs[s].id);
  }

  result.status = PlanStatus::NotConverged;
  result.capacity = best_capacity;
  result.z_mp = z_mp;
  result.pi_tilde = best_pi;
  result.decision.capacity = best_capacity;
  result.decision.days = best_days;
  return result;
}

void write_trace_csv_header(std::ostream& os) {
  os << "iteration,z_mp,pi_tilde,gap,E_s1,E_s2\n";
}

void append_trace_csv(std::ostream& os, const IterationTrace& row) {
  os << row.iteration << ',' << row.z_mp << ',' << row.pi_tilde << ',' << row.gap << ','
     << row.capacity[0] << ',' << row.capacity[1] << "\n";
}

}  // namespace hessplan::benders
