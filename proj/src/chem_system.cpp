#include "gpal/chem.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace gpal::chem {
namespace {

std::vector<std::string> tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::istringstream in(text);
  std::string token;
  while (in >> token) tokens.push_back(token);
  return tokens;
}

bool parse_number(const std::string& token, double& value) {
  std::size_t used = 0;
  try {
    value = std::stod(token, &used);
  } catch (const std::exception&) {
    return false;
  }
  return used == token.size();
}

std::vector<ReactionTerm> parse_side(const std::string& text, const std::string& equation) {
  std::vector<std::vector<std::string>> groups(1);
  for (const std::string& token : tokenize(text)) {
    if (token == "+") {
      groups.emplace_back();
    } else {
      groups.back().push_back(token);
    }
  }
  std::vector<ReactionTerm> terms;
  for (const auto& group : groups) {
    ReactionTerm term;
    if (group.size() == 1) {
      term.name = group[0];
    } else if (group.size() == 2 && parse_number(group[0], term.coefficient)) {
      term.name = group[1];
    } else {
      throw std::runtime_error("cannot parse reaction term in '" + equation + "'");
    }
    double ignored = 0.0;
    if (term.name.empty() || parse_number(term.name, ignored)) {
      throw std::runtime_error("cannot parse reaction term in '" + equation + "'");
    }
    if (!(term.coefficient > 0.0)) {
      throw std::runtime_error("non-positive coefficient in '" + equation + "'");
    }
    terms.push_back(term);
  }
  return terms;
}

}  // namespace

Reaction parse_reaction(const std::string& equation) {
  const std::size_t split = equation.find('=');
  if (split == std::string::npos || equation.find('=', split + 1) != std::string::npos) {
    throw std::runtime_error("reaction must contain exactly one '=': '" + equation + "'");
  }
  Reaction reaction;
  reaction.lhs = parse_side(equation.substr(0, split), equation);
  reaction.rhs = parse_side(equation.substr(split + 1), equation);
  if (reaction.lhs.empty() || reaction.rhs.empty()) {
    throw std::runtime_error("reaction side is empty in '" + equation + "'");
  }
  return reaction;
}

long ChemicalSystem::component_index(const std::string& target) const {
  for (std::size_t i = 0; i < components.size(); ++i) {
    if (components[i].name == target) return static_cast<long>(i);
  }
  return -1;
}

long ChemicalSystem::species_index(const std::string& target) const {
  for (std::size_t i = 0; i < species.size(); ++i) {
    if (species[i].name == target) return static_cast<long>(i);
  }
  return -1;
}

long ChemicalSystem::mineral_index(const std::string& target) const {
  for (std::size_t i = 0; i < minerals.size(); ++i) {
    if (minerals[i].name == target) return static_cast<long>(i);
  }
  return -1;
}

namespace {

// Rebalances a printed equation into formation convention for the single
// non-component term: stoichiometry over components and log10 K with the
// defined entity isolated on the left.
struct NormalizedReaction {
  std::string name;
  Eigen::VectorXd stoich;
  double logk = 0.0;
};

NormalizedReaction normalize_reaction(const ChemicalSystem& system, const std::string& equation,
                                      double logk) {
  const Reaction reaction = parse_reaction(equation);
  const long n = static_cast<long>(system.components.size());
  Eigen::VectorXd lhs = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  std::optional<ReactionTerm> defined;
  bool defined_on_lhs = false;

  auto accumulate = [&](const std::vector<ReactionTerm>& terms, Eigen::VectorXd& side,
                        bool is_lhs) {
    for (const ReactionTerm& term : terms) {
      const long j = system.component_index(term.name);
      if (j >= 0) {
        side[j] += term.coefficient;
        continue;
      }
      if (defined) {
        throw std::runtime_error("reaction '" + equation +
                                 "' names more than one non-component term");
      }
      if (term.coefficient != 1.0) {
        throw std::runtime_error("defined term must have coefficient 1 in '" + equation + "'");
      }
      defined = term;
      defined_on_lhs = is_lhs;
    }
  };
  accumulate(reaction.lhs, lhs, true);
  accumulate(reaction.rhs, rhs, false);
  if (!defined) {
    throw std::runtime_error("reaction '" + equation + "' defines no new species");
  }

  // Formation convention: log10 a_defined = logk + stoich . log10 a. The
  // printed constant is products-over-reactants for the equation as written.
  NormalizedReaction result;
  result.name = defined->name;
  if (defined_on_lhs) {
    result.stoich = rhs - lhs;
    result.logk = -logk;
  } else {
    result.stoich = lhs - rhs;
    result.logk = logk;
  }
  return result;
}

}  // namespace

void ChemicalSystem::add_species(const std::string& equation, double logk) {
  const NormalizedReaction normalized = normalize_reaction(*this, equation, logk);
  Species entry;
  entry.name = normalized.name;
  entry.stoich = normalized.stoich;
  entry.logk = normalized.logk;
  species.push_back(std::move(entry));
}

void ChemicalSystem::add_mineral(const std::string& equation, double logk) {
  const NormalizedReaction normalized = normalize_reaction(*this, equation, logk);
  Mineral entry;
  entry.name = normalized.name;
  entry.stoich = normalized.stoich;
  // Solubility product over dissolution products; at equilibrium the unit
  // mineral activity turns the formation constant into its negation.
  entry.logk = -normalized.logk;
  entry.formula_units = 1.0;
  minerals.push_back(std::move(entry));
}

void ChemicalSystem::validate() const {
  if (components.empty()) throw std::runtime_error("chemical system has no components");
  std::set<std::string> names;
  long ph_fixed = 0;
  std::set<std::string> labels;
  for (const Component& component : components) {
    if (component.name.empty()) throw std::runtime_error("component with empty name");
    if (!names.insert(component.name).second) {
      throw std::runtime_error("duplicate name '" + component.name + "'");
    }
    if (component.fixed_by_ph && component.fixed_unit) {
      throw std::runtime_error("component '" + component.name + "' fixed twice");
    }
    if (component.fixed()) {
      if (!component.total_label.empty()) {
        throw std::runtime_error("fixed component '" + component.name + "' carries a total");
      }
      if (component.fixed_by_ph) ++ph_fixed;
    } else {
      if (component.total_label.empty()) {
        throw std::runtime_error("component '" + component.name + "' lacks a total label");
      }
      if (!labels.insert(component.total_label).second) {
        throw std::runtime_error("duplicate total label '" + component.total_label + "'");
      }
    }
  }
  if (ph_fixed > 1) throw std::runtime_error("more than one pH-fixed component");

  const long n = static_cast<long>(components.size());
  for (const Species& entry : species) {
    if (!names.insert(entry.name).second) {
      throw std::runtime_error("duplicate name '" + entry.name + "'");
    }
    if (entry.stoich.size() != n) {
      throw std::runtime_error("species '" + entry.name + "' has wrong stoichiometry size");
    }
  }
  for (const Mineral& entry : minerals) {
    if (!names.insert(entry.name).second) {
      throw std::runtime_error("duplicate name '" + entry.name + "'");
    }
    if (entry.stoich.size() != n) {
      throw std::runtime_error("mineral '" + entry.name + "' has wrong stoichiometry size");
    }
    bool balanced = false;
    for (long j = 0; j < n; ++j) {
      if (entry.stoich[j] != 0.0 && !components[j].fixed()) balanced = true;
    }
    if (!balanced) {
      throw std::runtime_error("mineral '" + entry.name + "' binds no balanced component");
    }
  }
}

ChemicalSystem ChemicalSystem::from_json(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& error) {
    throw std::runtime_error(std::string("invalid system json: ") + error.what());
  }
  if (!doc.is_object()) throw std::runtime_error("system json must be an object");

  ChemicalSystem system;
  system.name = doc.value("name", std::string{});
  if (!doc.contains("components") || !doc["components"].is_array()) {
    throw std::runtime_error("system json lacks a components array");
  }
  for (const auto& entry : doc["components"]) {
    Component component;
    component.name = entry.at("name").get<std::string>();
    if (entry.contains("fixed")) {
      const std::string mode = entry["fixed"].get<std::string>();
      if (mode == "pH") {
        component.fixed_by_ph = true;
      } else if (mode == "unit") {
        component.fixed_unit = true;
      } else {
        throw std::runtime_error("unknown fixed mode '" + mode + "'");
      }
      if (entry.contains("total")) {
        throw std::runtime_error("component '" + component.name + "' carries a total");
      }
    } else {
      component.total_label = entry.at("total").get<std::string>();
    }
    system.components.push_back(std::move(component));
  }
  // Entries come either as printed reaction equations or as explicit
  // stoichiometry maps already in formation/solubility convention.
  auto read_stoich = [&system](const nlohmann::json& entry) {
    Eigen::VectorXd stoich = Eigen::VectorXd::Zero(static_cast<long>(system.components.size()));
    for (const auto& [name, coefficient] : entry.at("stoichiometry").items()) {
      const long j = system.component_index(name);
      if (j < 0) throw std::runtime_error("stoichiometry names unknown component '" + name + "'");
      stoich[j] = coefficient.get<double>();
    }
    return stoich;
  };
  for (const auto& entry : doc.value("species", nlohmann::json::array())) {
    if (entry.contains("reaction")) {
      system.add_species(entry.at("reaction").get<std::string>(), entry.at("logK").get<double>());
    } else {
      Species item;
      item.name = entry.at("name").get<std::string>();
      item.stoich = read_stoich(entry);
      item.logk = entry.at("logK").get<double>();
      system.species.push_back(std::move(item));
    }
  }
  for (const auto& entry : doc.value("minerals", nlohmann::json::array())) {
    if (entry.contains("reaction")) {
      system.add_mineral(entry.at("reaction").get<std::string>(), entry.at("logK").get<double>());
    } else {
      Mineral item;
      item.name = entry.at("name").get<std::string>();
      item.stoich = read_stoich(entry);
      item.logk = entry.at("logK").get<double>();
      item.formula_units = 1.0;
      system.minerals.push_back(std::move(item));
    }
  }
  system.validate();
  return system;
}

ChemicalSystem ChemicalSystem::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open system file: " + path);
  try {
    return from_json(in);
  } catch (const std::exception& error) {
    throw std::runtime_error(path + ": " + error.what());
  }
}

}  // namespace gpal::chem
