#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gpal/active_loop.hpp"
#include "gpal/sampling.hpp"

namespace gpal::chem {

// Basis species. Activities of fixed components come from the solve inputs
// (H+ from pH, H2O pinned at one); the rest carry an elemental total.
struct Component {
  std::string name;
  bool fixed_by_ph = false;
  bool fixed_unit = false;
  std::string total_label;  // key into SpeciationInput::totals; empty if fixed

  bool fixed() const { return fixed_by_ph || fixed_unit; }
};

// One side's terms of a reaction equation, e.g. "CO2 + H2O" or "2 H+".
struct ReactionTerm {
  double coefficient = 1.0;
  std::string name;
};
struct Reaction {
  std::vector<ReactionTerm> lhs;
  std::vector<ReactionTerm> rhs;
};

/// Parses "CO2 + H2O = CO3-2 + 2 H+". Species names may carry charge
/// suffixes (+, -, +2, -2); the term separator is a '+' surrounded by spaces.
Reaction parse_reaction(const std::string& equation);

// Secondary aqueous species in formation convention:
//   log10 c = logk + sum_j stoich[j] * log10 a_j.
struct Species {
  std::string name;
  Eigen::VectorXd stoich;
  double logk = 0.0;
};

// Mineral with dissolution products and log10 solubility constant;
// SI = (sum_j stoich[j] * log10 a_j - logk) / formula_units.
struct Mineral {
  std::string name;
  Eigen::VectorXd stoich;
  double logk = 0.0;
  double formula_units = 1.0;
};

struct ChemicalSystem {
  std::string name;
  std::vector<Component> components;
  std::vector<Species> species;
  std::vector<Mineral> minerals;

  long component_index(const std::string& name) const;  // -1 when absent
  long species_index(const std::string& name) const;
  long mineral_index(const std::string& name) const;
  void validate() const;

  /// Registers a species or mineral from a reaction equation as printed in a
  /// reference table. The defined entity is the single non-component term
  /// (coefficient 1); the equation is rebalanced into formation convention.
  void add_species(const std::string& equation, double logk);
  void add_mineral(const std::string& equation, double logk);

  static ChemicalSystem from_json(std::istream& in);
  static ChemicalSystem from_json_file(const std::string& path);
};

struct SpeciationInput {
  std::map<std::string, double> totals;  // by total label, mol/L, >= 0
  std::optional<double> ph;              // required iff a component is pH-fixed
  std::map<std::string, double> mineral_amounts;  // initial inventory, mol
};

struct SolverOptions {
  long max_newton_steps = 200;    // per active-set cycle
  long max_step_halvings = 30;
  long max_active_set_cycles = 20;
  double tolerance = 1e-12;       // relative balance / log-unit residuals
  double si_activation_tolerance = 1e-10;
};

struct EquilibriumState {
  Eigen::VectorXd component_log_activity;   // log10 a, -inf when eliminated
  Eigen::VectorXd component_concentration;  // free concentration, mol/L
  Eigen::VectorXd species_concentration;    // mol/L, follows system.species
  Eigen::VectorXd mineral_amount;           // final mol, follows system.minerals
  Eigen::VectorXd saturation_index;         // -inf when a constituent is absent
  long newton_steps = 0;
  long active_set_cycles = 0;
};

/// Equilibrium speciation at fixed pH: mineral inventories are folded into
/// effective elemental totals and final amounts (>= 0) are resolved by an
/// active-set loop around damped Newton on log10 free concentrations.
/// Ideal solution: activities equal molar concentrations, water activity one.
EquilibriumState speciation_solve(const ChemicalSystem& system, const SpeciationInput& input,
                                  const SolverOptions& options = {});

inline constexpr double kSaltLogK = 1.570;

/// Precipitated amount for the single-salt system: zero when
/// total_a * total_b <= 10^logk, else the smaller root of
/// (total_a - p)(total_b - p) = 10^logk.
double salt_equilibrium(double total_a, double total_b, double logk = kSaltLogK);

// Physical input windows for the built-in oracles. The reference material
// does not publish its ranges; these defaults are artifact choices, echoed
// into every run configuration.
struct SaltOracleConfig {
  double logk = kSaltLogK;
  double total_a_max = 15.0;  // mol/L, input range [0, total_a_max]
  double total_b_fixed = 5.5;  // 1-D case: second total held constant
  double total_b_max = 15.0;   // 2-D case
};

/// d=1: x -> total_a in [0, total_a_max] with total_b fixed.
loop::Oracle salt_oracle_1d(const SaltOracleConfig& config = {});
/// d=2: (x0, x1) -> (total_a, total_b).
loop::Oracle salt_oracle_2d(const SaltOracleConfig& config = {});

// Inputs in order: totals C, Ca, Cl, Mg (mol/L), pH, other-mineral inventory
// (mol). Output: equilibrium amount of the target mineral.
struct CarbonateOracleConfig {
  double total_max = 0.05;  // shared cap for the four elemental totals
  double ph_min = 6.0;
  double ph_max = 10.0;
  double other_mineral_max = 0.02;
  SolverOptions solver;
};

sampling::BoundsMap carbonate_bounds(const CarbonateOracleConfig& config);

loop::Oracle calcite_oracle(const ChemicalSystem& system,
                            const CarbonateOracleConfig& config = {});
loop::Oracle dolomite_oracle(const ChemicalSystem& system,
                             const CarbonateOracleConfig& config = {});

}  // namespace gpal::chem
