// strips.hpp
//
// Ground-truth symbolic planning semantics: domains, instances, grounding,
// satisfaction, the successor function, plan simulation, and subclass
// classification.

#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace planlab {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class ConflictingEffectsError : public Error {
 public:
  using Error::Error;
};

class UnknownSymbolError : public Error {
 public:
  using Error::Error;
};

class NotSupportedError : public Error {
 public:
  using Error::Error;
};

using PredId = int;
using SchemaId = int;
using ObjId = int;

struct PredicateDef {
  std::string name;
  int arity = 0;

  bool operator==(const PredicateDef&) const = default;
};

// Argument of a schema-level literal: either a schema parameter or a domain
// constant (both resolved to indices).
struct Term {
  enum class Kind { Var, Const };
  Kind kind = Kind::Var;
  int index = 0;

  static Term var(int i) { return {Kind::Var, i}; }
  static Term constant(int i) { return {Kind::Const, i}; }
  auto operator<=>(const Term&) const = default;
};

struct Literal {
  PredId pred = -1;
  std::vector<Term> args;
  bool positive = true;

  bool operator==(const Literal&) const = default;
};

struct CondEffect {
  std::vector<Literal> cond;  // empty = unconditional
  std::vector<Literal> eff;

  bool operator==(const CondEffect&) const = default;
};

struct ActionSchema {
  std::string name;
  std::vector<std::string> params;
  std::vector<Literal> pre;
  std::vector<CondEffect> effects;

  int arity() const { return static_cast<int>(params.size()); }
  bool operator==(const ActionSchema&) const = default;
};

struct Domain {
  std::vector<PredicateDef> predicates;
  std::vector<std::string> constants;  // objects referenced from schema bodies
  std::vector<ActionSchema> schemas;

  PredId pred_index(const std::string& name) const;
  SchemaId schema_index(const std::string& name) const;
  int pred_arity(PredId p) const { return predicates[p].arity; }

  // Throws Error on arity mismatches, unbound variables, duplicate names or
  // inconsistent effect sets.
  void validate() const;

  bool operator==(const Domain&) const = default;
};

// A ground proposition: predicate applied to instance objects.
struct GroundAtom {
  PredId pred = -1;
  std::vector<ObjId> args;

  auto operator<=>(const GroundAtom&) const = default;
};

struct GroundLiteral {
  GroundAtom atom;
  bool positive = true;

  auto operator<=>(const GroundLiteral&) const = default;
};

// Set of propositions under the closed world assumption. Kept sorted and
// deduplicated.
class State {
 public:
  State() = default;
  explicit State(std::vector<GroundAtom> atoms);

  bool contains(const GroundAtom& a) const;
  void insert(const GroundAtom& a);
  void erase(const GroundAtom& a);
  std::size_t size() const { return atoms_.size(); }
  bool empty() const { return atoms_.empty(); }
  const std::vector<GroundAtom>& atoms() const { return atoms_; }

  auto operator<=>(const State&) const = default;

 private:
  std::vector<GroundAtom> atoms_;
};

struct GroundAction {
  SchemaId schema = -1;
  std::vector<ObjId> args;

  auto operator<=>(const GroundAction&) const = default;
};

struct Plan {
  std::vector<GroundAction> actions;

  std::size_t size() const { return actions.size(); }
};

struct Instance {
  std::shared_ptr<const Domain> domain;
  std::vector<std::string> objects;
  State init;
  std::vector<GroundLiteral> goal;

  ObjId object_index(const std::string& name) const;
  // Throws Error if init/goal mention out-of-range objects or the domain's
  // constants are missing from the object list.
  void validate() const;
};

struct Verdict {
  enum class Status { Valid, NonExecutable, Incomplete };
  Status status = Status::Valid;
  int step = 0;                            // 1-based, NonExecutable only
  std::optional<GroundLiteral> violated;   // first violated precondition
  std::vector<GroundLiteral> unsat_goals;  // Incomplete only

  bool valid() const { return status == Status::Valid; }
};

struct SimResult {
  std::vector<State> trace;  // prefix of length <= |plan|+1
  Verdict verdict;
};

struct DomainClass {
  bool conditional_effects = false;
  bool strips = false;
  bool delete_free = false;
};

struct AuditViolation {
  int step = 0;  // 1-based
  GroundLiteral literal;

  bool operator==(const AuditViolation&) const = default;
};

// S |= L  iff  L+ subset of S and L- disjoint from S.
bool holds(const State& state, std::span<const GroundLiteral> literals);

// Binds a schema literal against concrete action arguments.
GroundAtom ground_atom(const Domain& domain, const Instance& instance,
                       const Literal& lit, std::span<const ObjId> action_args);

// All |objects|^|params| substitutions in lexicographic order over object
// indices.
std::vector<GroundAction> ground_schema(const Domain& domain, SchemaId schema,
                                        int n_objects);

std::vector<GroundLiteral> ground_preconditions(const Domain& domain,
                                                const Instance& instance,
                                                const GroundAction& action);

bool applicable(const Instance& instance, const State& state,
                const GroundAction& action);

// Applies every conditional effect whose condition holds in `state`, deletes
// before adds. Throws ConflictingEffectsError if two triggered effect sets
// assert p and not-p.
State succ(const Instance& instance, const State& state,
           const GroundAction& action);

SimResult simulate(const Instance& instance, const Plan& plan);

DomainClass classify_domain(const Domain& domain);

// For every step of an executable plan, reports effect literals that the
// pre-state already satisfied. Empty result = trace-well-formed.
// Throws Error if the plan is not executable.
std::vector<AuditViolation> audit_well_formed_trace(const Instance& instance,
                                                    const Plan& plan);

std::string atom_to_string(const Domain& domain, const Instance& instance,
                           const GroundAtom& atom);
std::string literal_to_string(const Domain& domain, const Instance& instance,
                              const GroundLiteral& lit);
std::string action_to_string(const Domain& domain, const Instance& instance,
                             const GroundAction& action);

}  // namespace planlab
