// crasp.hpp
//
// The counting sequence language over a split alphabet: a fixed symbol table
// Sigma plus unbounded integer-valued extended tokens that programs may only
// compare through match predicates. Straight-line programs of boolean- and
// count-valued operations, a type checker, an interpreter, and the lowering
// that eliminates match operations once the extended alphabet is finite.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "planlab/strips.hpp"  // Error hierarchy

namespace planlab::crasp {

class TypeError : public Error {
 public:
  using Error::Error;
};

class EvalError : public Error {
 public:
  using Error::Error;
};

// A token is either a symbol from the program's finite alphabet or an
// extended token carrying a non-negative integer value.
struct Token {
  bool ext = false;
  int sym = -1;        // index into TokenSeq::vocab when !ext
  std::int64_t value = 0;

  static Token symbol(int s) { return {false, s, 0}; }
  static Token extended(std::int64_t v) { return {true, -1, v}; }
  bool operator==(const Token&) const = default;
};

struct TokenSeq {
  std::vector<std::string> vocab;
  std::vector<Token> toks;

  std::size_t size() const { return toks.size(); }
  int vocab_index(const std::string& name) const;
  int intern(const std::string& name);
  void push_symbol(const std::string& name);
  void push_ext(std::int64_t v);
  std::string to_string() const;
};

struct MatchConjunct {
  int delta = 0;          // offset on the counted position j
  int gamma = 0;          // offset on the query position i
  std::int64_t tau = 0;   // value shift: token(j-delta) == token(i-gamma) + tau
  bool operator==(const MatchConjunct&) const = default;
};

struct MatchSpec {
  std::vector<MatchConjunct> conjuncts;
  int filter = -1;      // earlier boolean line restricting j; -1 = always true
  bool strict = false;  // count j < i instead of j <= i
  bool operator==(const MatchSpec&) const = default;
};

struct LocalRel {
  bool top = true;  // unrestricted j <= i
  int delta = 0;    // otherwise i = j + delta
  static LocalRel all() { return {true, 0}; }
  static LocalRel offset(int d) { return {false, d}; }
  bool operator==(const LocalRel&) const = default;
};

enum class OpKind {
  Initial,     // Q_sigma
  Not,
  And,
  ConstTrue,
  Leq,         // C1 <= C2
  Count,       // #[j<=i, rel] filter(j)
  MatchCount,  // #[j<=i (or j<i), chi(i,j) and filter(j)]
  Cond,        // if B then C1 else C2
  Add,
  Sub,
  ConstOne,
};

bool op_is_bool(OpKind k);

struct CraspOp {
  OpKind kind = OpKind::ConstTrue;
  int a = -1, b = -1, c = -1;  // operand line indices
  int sigma = -1;              // Initial
  LocalRel rel;                // Count
  MatchSpec match;             // MatchCount

  bool operator==(const CraspOp&) const = default;
};

struct CraspProgram {
  std::vector<std::string> sigma;
  std::vector<CraspOp> ops;
  int output = -1;     // defaults to the last op
  int bandwidth = 16;  // bound on all positional offsets

  int output_index() const {
    return output >= 0 ? output : static_cast<int>(ops.size()) - 1;
  }
  int sigma_index(const std::string& name) const;
  int intern_sigma(const std::string& name);

  bool operator==(const CraspProgram&) const = default;
};

// Per-op, per-position values; positions are 1-based in the language and
// stored 0-based here. Booleans are 0/1 cells.
struct EvalTable {
  int n_ops = 0;
  int n_pos = 0;
  std::vector<std::int64_t> cells;  // row-major: op * n_pos + pos
  std::vector<bool> boolean;        // per op

  std::int64_t at(int op, int pos1) const {
    return cells[static_cast<std::size_t>(op) * n_pos + (pos1 - 1)];
  }
  std::string to_tsv(const CraspProgram& program) const;
};

// Verifies sorts, forward-reference freedom, offset bounds and the
// boolean-valued output. Throws TypeError.
void typecheck(const CraspProgram& program);

// Requires a typechecked program. Runs in O(|ops| * n) time. Throws EvalError
// on unknown symbols or arithmetic overflow.
EvalTable eval(const CraspProgram& program, const TokenSeq& input);

// Value of the output op at the last position. Throws EvalError on empty
// input.
bool accepts(const CraspProgram& program, const TokenSeq& input);

// True when the program uses no positional offsets at all: every Count uses
// the unrestricted relation and every match conjunct has zero offsets.
bool is_match_offset_free(const CraspProgram& program);

bool uses_match(const CraspProgram& program);

// Replaces every MatchCount by counting operations over per-value symbols,
// valid for inputs whose extended tokens all come from `ext_alphabet`. The
// lowered program carries one extra Sigma symbol per alphabet value. Throws
// Error("AlphabetTooLarge...") when the expansion exceeds `budget` value
// tuples.
CraspProgram lower_match_to_finite(const CraspProgram& program,
                                   const std::vector<std::int64_t>& ext_alphabet,
                                   std::size_t budget = 200000);

// Spelling used for alphabet-value symbols introduced by the lowering.
std::string ext_symbol_name(std::int64_t value);

// Rewrites extended tokens as the corresponding lowered Sigma symbols. Throws
// Error if a value is outside the alphabet.
TokenSeq to_finite_tokens(const TokenSeq& input,
                          const std::vector<std::int64_t>& ext_alphabet);

}  // namespace planlab::crasp
