// compile.hpp
//
// Token encoding of verification records and the two mechanical compilers
// from planning domains to counting programs: the fixed-universe one (every
// ground action and proposition gets its own recognizer over Sigma) and the
// variable-universe one (object identities reached only through match
// predicates).

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "planlab/crasp.hpp"
#include "planlab/strips.hpp"

namespace planlab::compile {

enum class Mode { DeleteFree, WellFormed };

// Record layout: $ I @ pi @ G @ with one block of (name token, arity object
// tokens) per initial fact, plan action, and goal literal. Negated goal
// literals use a per-predicate marker symbol ("!p") when enabled.
struct EncodingLayout {
  enum class ObjectMode { Sigma, Ext };

  std::shared_ptr<const Domain> domain;
  ObjectMode object_mode = ObjectMode::Ext;
  bool negated_goals = false;
  std::vector<std::string> fixed_objects;  // Sigma mode only

  std::vector<std::string> sigma;
  int dollar = -1;
  int sep = -1;
  std::vector<int> pred_sym;      // per predicate
  std::vector<int> negpred_sym;   // per predicate, -1 unless negated_goals
  std::vector<int> schema_sym;    // per schema
  std::vector<int> object_sym;    // per fixed object, Sigma mode only
};

EncodingLayout make_layout_ext(std::shared_ptr<const Domain> domain,
                               bool negated_goals = false);
EncodingLayout make_layout_sigma(std::shared_ptr<const Domain> domain,
                                 std::vector<std::string> objects,
                                 bool negated_goals = false);

// Deterministic encoding: init and goal in canonical (sorted) order, plan in
// sequence order. In Ext mode, objects map to the given values (default:
// 1-based declaration order). Throws Error on value collisions or negative
// goals without markers.
crasp::TokenSeq encode(const Instance& instance, const Plan& plan,
                       const EncodingLayout& layout,
                       const std::vector<std::int64_t>& object_values = {});

struct DecodedRecord {
  Instance instance;
  Plan plan;
};

// Inverse of encode for round-trip checks. Object names are reconstructed
// from the layout (Sigma mode) or synthesized from values (Ext mode).
DecodedRecord decode(const crasp::TokenSeq& tokens,
                     const EncodingLayout& layout);

struct CompilationReport {
  std::vector<std::string> provenance;  // one entry per program line
  int ground_actions = 0;
  int ground_propositions = 0;
};

// Names the construction step behind a line (1-based). Throws Error when out
// of range.
std::string explain(const CompilationReport& report, int line);

// Fixed universe: pure counting program, no match operations, objects lifted
// into Sigma. Throws NotSupportedError for domains outside the supported
// class (conditional effects, or effects that do not syntactically toggle for
// the well-formed mode, or deletes for the delete-free mode).
crasp::CraspProgram compile_fixed(const EncodingLayout& layout, Mode mode,
                                  CompilationReport* report = nullptr);

// Variable universe: object tokens are reached only through match
// operations; the program is independent of the object set.
crasp::CraspProgram compile_variable(const EncodingLayout& layout, Mode mode,
                                     CompilationReport* report = nullptr);

}  // namespace planlab::compile
