#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "gpal/chem.hpp"

namespace gpal::chem {
namespace {

constexpr double kLn10 = 2.302585092994045684017991;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_options(const SolverOptions& options) {
  if (options.max_newton_steps < 1 || options.max_step_halvings < 0 ||
      options.max_active_set_cycles < 1) {
    throw std::invalid_argument("non-positive solver limits");
  }
  if (!(options.tolerance > 0.0) || !(options.si_activation_tolerance > 0.0)) {
    throw std::invalid_argument("non-positive solver tolerance");
  }
}

struct Problem {
  const ChemicalSystem& system;
  Eigen::VectorXd effective_total;    // per component, fixed entries zero
  Eigen::VectorXd fixed_log_activity; // per component, NaN when not fixed
  std::vector<char> eliminated;       // per component
  std::vector<char> species_live;     // per species
  std::vector<char> formable;         // per mineral
  std::vector<long> free_components;  // unknown ordering
};

Problem build_problem(const ChemicalSystem& system, const SpeciationInput& input) {
  system.validate();
  const long n = static_cast<long>(system.components.size());
  Problem problem{system,
                  Eigen::VectorXd::Zero(n),
                  Eigen::VectorXd::Constant(n, std::numeric_limits<double>::quiet_NaN()),
                  std::vector<char>(n, 0),
                  std::vector<char>(system.species.size(), 1),
                  std::vector<char>(system.minerals.size(), 1),
                  {}};

  bool wants_ph = false;
  for (long j = 0; j < n; ++j) {
    const Component& component = system.components[j];
    if (component.fixed_by_ph) {
      wants_ph = true;
      if (!input.ph || !std::isfinite(*input.ph)) {
        throw std::invalid_argument("system requires a finite pH input");
      }
      problem.fixed_log_activity[j] = -*input.ph;
    } else if (component.fixed_unit) {
      problem.fixed_log_activity[j] = 0.0;
    }
  }
  if (!wants_ph && input.ph) {
    throw std::invalid_argument("pH given but no component is pH-fixed");
  }

  for (const auto& [label, value] : input.totals) {
    if (!std::isfinite(value) || value < 0.0) {
      throw std::invalid_argument("total '" + label + "' must be finite and non-negative");
    }
    bool known = false;
    for (long j = 0; j < n; ++j) {
      if (system.components[j].total_label == label) {
        problem.effective_total[j] = value;
        known = true;
      }
    }
    if (!known) throw std::invalid_argument("unknown total label '" + label + "'");
  }
  for (const auto& [name, amount] : input.mineral_amounts) {
    if (!std::isfinite(amount) || amount < 0.0) {
      throw std::invalid_argument("mineral amount '" + name + "' must be finite and non-negative");
    }
    const long m = system.mineral_index(name);
    if (m < 0) throw std::invalid_argument("unknown mineral '" + name + "'");
    const Mineral& mineral = system.minerals[m];
    for (long j = 0; j < n; ++j) {
      if (!system.components[j].fixed() && mineral.stoich[j] != 0.0) {
        problem.effective_total[j] += mineral.stoich[j] * amount;
      }
    }
  }
  for (long j = 0; j < n; ++j) {
    if (system.components[j].fixed()) continue;
    if (problem.effective_total[j] < 0.0) {
      throw std::runtime_error("negative effective total for component '" +
                               system.components[j].name + "'");
    }
    problem.eliminated[j] = problem.effective_total[j] == 0.0 ? 1 : 0;
    if (!problem.eliminated[j]) problem.free_components.push_back(j);
  }

  for (std::size_t s = 0; s < system.species.size(); ++s) {
    const Species& species = system.species[s];
    for (long j = 0; j < n; ++j) {
      if (!problem.eliminated[j] || species.stoich[j] == 0.0) continue;
      if (species.stoich[j] < 0.0) {
        throw std::runtime_error("species '" + species.name + "' requires component '" +
                                 system.components[j].name + "' with zero amount");
      }
      problem.species_live[s] = 0;
    }
  }
  for (std::size_t m = 0; m < system.minerals.size(); ++m) {
    for (long j = 0; j < n; ++j) {
      if (problem.eliminated[j] && system.minerals[m].stoich[j] != 0.0) problem.formable[m] = 0;
    }
  }
  return problem;
}

struct Evaluation {
  Eigen::VectorXd log_activity;   // per component
  Eigen::VectorXd species_conc;   // per species
  Eigen::VectorXd residual;       // free balances then active mineral laws
  Eigen::MatrixXd jacobian;
};

// Unknowns: log10 free-component concentrations, then active mineral amounts.
Evaluation evaluate(const Problem& problem, const std::vector<long>& active,
                    const Eigen::VectorXd& x, bool with_jacobian) {
  const ChemicalSystem& system = problem.system;
  const long n = static_cast<long>(system.components.size());
  const long nf = static_cast<long>(problem.free_components.size());
  const long na = static_cast<long>(active.size());

  Evaluation eval;
  eval.log_activity = problem.fixed_log_activity;
  for (long j = 0; j < n; ++j) {
    if (!system.components[j].fixed()) eval.log_activity[j] = kNegInf;
  }
  for (long i = 0; i < nf; ++i) eval.log_activity[problem.free_components[i]] = x[i];

  std::vector<long> unknown_of_component(n, -1);
  for (long i = 0; i < nf; ++i) unknown_of_component[problem.free_components[i]] = i;

  eval.residual = Eigen::VectorXd::Zero(nf + na);
  if (with_jacobian) eval.jacobian = Eigen::MatrixXd::Zero(nf + na, nf + na);

  for (long i = 0; i < nf; ++i) {
    const long j = problem.free_components[i];
    eval.residual[i] = std::pow(10.0, x[i]) - problem.effective_total[j];
    if (with_jacobian) eval.jacobian(i, i) = kLn10 * std::pow(10.0, x[i]);
  }

  eval.species_conc = Eigen::VectorXd::Zero(static_cast<long>(system.species.size()));
  for (std::size_t s = 0; s < system.species.size(); ++s) {
    if (!problem.species_live[s]) continue;
    const Species& species = system.species[s];
    double log_c = species.logk;
    for (long j = 0; j < n; ++j) {
      if (species.stoich[j] != 0.0) log_c += species.stoich[j] * eval.log_activity[j];
    }
    const double conc = std::pow(10.0, log_c);
    eval.species_conc[static_cast<long>(s)] = conc;
    for (long j = 0; j < n; ++j) {
      const long row = unknown_of_component[j];
      if (row < 0 || species.stoich[j] == 0.0) continue;
      eval.residual[row] += species.stoich[j] * conc;
      if (!with_jacobian) continue;
      for (long k = 0; k < n; ++k) {
        const long col = unknown_of_component[k];
        if (col < 0 || species.stoich[k] == 0.0) continue;
        eval.jacobian(row, col) += kLn10 * species.stoich[j] * species.stoich[k] * conc;
      }
    }
  }

  for (long a = 0; a < na; ++a) {
    const Mineral& mineral = system.minerals[active[a]];
    const double amount = x[nf + a];
    double law = -mineral.logk;
    for (long j = 0; j < n; ++j) {
      if (mineral.stoich[j] == 0.0) continue;
      law += mineral.stoich[j] * eval.log_activity[j];
      const long row = unknown_of_component[j];
      if (row < 0) continue;
      eval.residual[row] += mineral.stoich[j] * amount;
      if (with_jacobian) {
        eval.jacobian(row, nf + a) = mineral.stoich[j];
        eval.jacobian(nf + a, row) = mineral.stoich[j];
      }
    }
    eval.residual[nf + a] = law;
  }

  for (long i = 0; i < nf; ++i) {
    const double scale = problem.effective_total[problem.free_components[i]];
    eval.residual[i] /= scale;
    if (with_jacobian) eval.jacobian.row(i) /= scale;
  }
  return eval;
}

double saturation_index(const Problem& problem, long m, const Eigen::VectorXd& log_activity) {
  if (!problem.formable[m]) return kNegInf;
  const Mineral& mineral = problem.system.minerals[m];
  double si = -mineral.logk;
  for (long j = 0; j < mineral.stoich.size(); ++j) {
    if (mineral.stoich[j] != 0.0) si += mineral.stoich[j] * log_activity[j];
  }
  return si / mineral.formula_units;
}

[[noreturn]] void fail_convergence(const char* stage, const Eigen::VectorXd& residual) {
  std::ostringstream message;
  message << "speciation solve did not converge (" << stage << "); residual inf-norm "
          << (residual.size() > 0 ? residual.cwiseAbs().maxCoeff() : 0.0);
  throw std::runtime_error(message.str());
}

// Damped Newton on the current active set. Returns the final evaluation.
Evaluation newton_solve(const Problem& problem, const std::vector<long>& active,
                        Eigen::VectorXd& x, const SolverOptions& options, long& steps_used) {
  Evaluation eval = evaluate(problem, active, x, true);
  if (x.size() == 0) return eval;
  const long nf = static_cast<long>(problem.free_components.size());
  for (long step = 0; step < options.max_newton_steps; ++step) {
    if (eval.residual.cwiseAbs().maxCoeff() < options.tolerance) return eval;
    ++steps_used;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(eval.jacobian);
    if (!lu.isInvertible()) {
      throw std::runtime_error("singular Jacobian in speciation solve");
    }
    const Eigen::VectorXd delta = lu.solve(-eval.residual);
    // Cap the log-concentration move to keep exponentials representable.
    double alpha = 1.0;
    const double log_move = nf > 0 ? delta.head(nf).cwiseAbs().maxCoeff() : 0.0;
    if (log_move > 8.0) alpha = 8.0 / log_move;
    const double current_norm = eval.residual.norm();
    bool accepted = false;
    for (long halving = 0; halving <= options.max_step_halvings; ++halving) {
      const Eigen::VectorXd candidate = x + alpha * delta;
      Evaluation trial = evaluate(problem, active, candidate, true);
      const double trial_norm = trial.residual.norm();
      if (std::isfinite(trial_norm) && trial_norm < current_norm) {
        x = candidate;
        eval = std::move(trial);
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) fail_convergence("step halvings exhausted", eval.residual);
  }
  if (eval.residual.cwiseAbs().maxCoeff() < options.tolerance) return eval;
  fail_convergence("Newton iteration limit", eval.residual);
}

}  // namespace

EquilibriumState speciation_solve(const ChemicalSystem& system, const SpeciationInput& input,
                                  const SolverOptions& options) {
  check_options(options);
  const Problem problem = build_problem(system, input);
  const long nf = static_cast<long>(problem.free_components.size());
  const long mineral_count = static_cast<long>(system.minerals.size());

  Eigen::VectorXd x(nf);
  for (long i = 0; i < nf; ++i) {
    x[i] = std::log10(problem.effective_total[problem.free_components[i]]);
  }
  std::vector<long> active;
  Eigen::VectorXd amounts = Eigen::VectorXd::Zero(mineral_count);

  EquilibriumState state;
  Evaluation eval;
  for (long cycle = 0;; ++cycle) {
    if (cycle >= options.max_active_set_cycles) {
      throw std::runtime_error("speciation solve exceeded active-set cycle limit");
    }
    ++state.active_set_cycles;
    eval = newton_solve(problem, active, x, options, state.newton_steps);

    // One membership change per cycle; dissolution exhaustion wins.
    long worst = -1;
    for (std::size_t a = 0; a < active.size(); ++a) {
      const double amount = x[nf + static_cast<long>(a)];
      if (amount < 0.0 && (worst < 0 || amount < x[nf + worst])) worst = static_cast<long>(a);
    }
    if (worst >= 0) {
      const Eigen::VectorXd head = x.head(nf + worst);
      const Eigen::VectorXd tail = x.tail(static_cast<long>(active.size()) - worst - 1);
      active.erase(active.begin() + worst);
      x.resize(nf + static_cast<long>(active.size()));
      x << head, tail;
      continue;
    }
    long candidate = -1;
    double best_si = options.si_activation_tolerance;
    for (long m = 0; m < mineral_count; ++m) {
      if (std::find(active.begin(), active.end(), m) != active.end()) continue;
      const double si = saturation_index(problem, m, eval.log_activity);
      if (si > best_si) {
        best_si = si;
        candidate = m;
      }
    }
    if (candidate < 0) break;
    active.push_back(candidate);
    x.conservativeResize(x.size() + 1);
    x[x.size() - 1] = 0.0;
  }

  const long n = static_cast<long>(system.components.size());
  state.component_log_activity = eval.log_activity;
  state.component_concentration = Eigen::VectorXd::Zero(n);
  for (long j = 0; j < n; ++j) {
    const double log_a = eval.log_activity[j];
    state.component_concentration[j] = std::isfinite(log_a) ? std::pow(10.0, log_a) : 0.0;
  }
  state.species_concentration = eval.species_conc;
  state.mineral_amount = amounts;
  for (std::size_t a = 0; a < active.size(); ++a) {
    state.mineral_amount[active[a]] = std::max(x[nf + static_cast<long>(a)], 0.0);
  }
  state.saturation_index = Eigen::VectorXd::Zero(mineral_count);
  for (long m = 0; m < mineral_count; ++m) {
    state.saturation_index[m] = saturation_index(problem, m, eval.log_activity);
  }
  return state;
}

double salt_equilibrium(double total_a, double total_b, double logk) {
  if (!(std::isfinite(total_a) && total_a >= 0.0) ||
      !(std::isfinite(total_b) && total_b >= 0.0)) {
    throw std::invalid_argument("totals must be finite and non-negative");
  }
  if (!std::isfinite(logk)) throw std::invalid_argument("logk must be finite");
  const double k = std::pow(10.0, logk);
  const double excess = total_a * total_b - k;
  if (excess <= 0.0) return 0.0;
  // Smaller root of (total_a - p)(total_b - p) = k, written without the
  // cancellation-prone difference so p stays accurate near the onset.
  const double gap = total_a - total_b;
  const double p = 2.0 * excess / ((total_a + total_b) + std::sqrt(gap * gap + 4.0 * k));
  return std::max(p, 0.0);
}

loop::Oracle salt_oracle_1d(const SaltOracleConfig& config) {
  sampling::BoundsMap bounds;
  bounds.bounds.resize(1, 2);
  bounds.bounds << 0.0, config.total_a_max;
  bounds.validate();
  return [config, bounds](const Eigen::VectorXd& u) {
    const Eigen::VectorXd physical = bounds.from_unit(u);
    return salt_equilibrium(physical[0], config.total_b_fixed, config.logk);
  };
}

loop::Oracle salt_oracle_2d(const SaltOracleConfig& config) {
  sampling::BoundsMap bounds;
  bounds.bounds.resize(2, 2);
  bounds.bounds << 0.0, config.total_a_max, 0.0, config.total_b_max;
  bounds.validate();
  return [config, bounds](const Eigen::VectorXd& u) {
    const Eigen::VectorXd physical = bounds.from_unit(u);
    return salt_equilibrium(physical[0], physical[1], config.logk);
  };
}

sampling::BoundsMap carbonate_bounds(const CarbonateOracleConfig& config) {
  sampling::BoundsMap bounds;
  bounds.bounds.resize(6, 2);
  bounds.bounds << 0.0, config.total_max,  // C
      0.0, config.total_max,               // Ca
      0.0, config.total_max,               // Cl
      0.0, config.total_max,               // Mg
      config.ph_min, config.ph_max,        // pH
      0.0, config.other_mineral_max;       // inventory of the competing mineral
  bounds.validate();
  return bounds;
}

namespace {

loop::Oracle carbonate_oracle(const ChemicalSystem& system, const std::string& target,
                              const std::string& other, const CarbonateOracleConfig& config) {
  system.validate();
  if (system.mineral_index(target) < 0 || system.mineral_index(other) < 0) {
    throw std::invalid_argument("system lacks mineral '" + target + "' or '" + other + "'");
  }
  const sampling::BoundsMap bounds = carbonate_bounds(config);
  return [system, target, other, config, bounds](const Eigen::VectorXd& u) {
    const Eigen::VectorXd v = bounds.from_unit(u);
    SpeciationInput input;
    input.totals = {{"C", v[0]}, {"Ca", v[1]}, {"Cl", v[2]}, {"Mg", v[3]}};
    input.ph = v[4];
    input.mineral_amounts[other] = v[5];
    const EquilibriumState state = speciation_solve(system, input, config.solver);
    return state.mineral_amount[system.mineral_index(target)];
  };
}

}  // namespace

loop::Oracle calcite_oracle(const ChemicalSystem& system, const CarbonateOracleConfig& config) {
  return carbonate_oracle(system, "Calcite", "Dolomite", config);
}

loop::Oracle dolomite_oracle(const ChemicalSystem& system, const CarbonateOracleConfig& config) {
  return carbonate_oracle(system, "Dolomite", "Calcite", config);
}

}  // namespace gpal::chem
