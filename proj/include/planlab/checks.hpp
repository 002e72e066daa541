// checks.hpp
//
// Brute-force machine checks at desk scale: the FlipFlop language identity,
// the GF(2) reduction of conditional-effect Lights Out, compiled-verifier
// agreement sweeps against the simulator, and match-lowering equivalence.

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "planlab/compile.hpp"
#include "planlab/crasp.hpp"
#include "planlab/datagen.hpp"
#include "planlab/domains.hpp"

namespace planlab::checks {

struct LangCheckReport {
  std::string name;
  std::int64_t tested = 0;
  std::int64_t agree = 0;
  std::int64_t disagree = 0;
  std::string first_counterexample;

  bool pass() const { return disagree == 0 && tested > 0; }
  std::string to_json() const;
};

// Enumerates every string over {a, b, e} of length 0..max_len and compares
// plan validity on the one-proposition instance against the "some b occurs
// and no a after the last b" rule.
LangCheckReport check_flipflop(int max_len);

// Exhaustive press sequences up to max_len on a small board, across a set of
// initial states: simulated verdict vs. the XOR-sum criterion.
LangCheckReport check_parity_exhaustive(const domains::Board& board,
                                        int max_len);

// Random long press sequences on a larger board. Trials are sharded across
// `jobs` workers; the merged report does not depend on the worker count.
LangCheckReport check_parity_random(const domains::Board& board, int trials,
                                    int max_len, std::uint64_t seed,
                                    int jobs = 1);

// Pressing the same light twice returns every sampled state to itself.
LangCheckReport check_toggle_identity(const domains::Board& board, int trials,
                                      std::uint64_t seed);

// One (instance, plan) trial for a compiled-program sweep.
struct SweepSample {
  Instance instance;
  Plan plan;
  std::vector<std::int64_t> object_values;  // empty = declaration order
};

using Sampler = std::function<SweepSample(std::int64_t index)>;

// accepts(program, encode(sample)) must equal (simulate verdict == Valid)
// for every trial.
LangCheckReport check_compiled(const crasp::CraspProgram& program,
                               const compile::EncodingLayout& layout,
                               const Sampler& sampler, std::int64_t trials,
                               const std::string& name);

// Mixed valid/corrupted/degenerate sampler for a dataset variant, suitable
// for both the fixed- and variable-universe sweeps.
Sampler variant_sampler(const datagen::VariantContext& ctx,
                        std::uint64_t seed, int min_len, int max_len,
                        int max_objects = 0);

// Fixed-universe sampler over a small Colors universe (typed objects fixed,
// initial bag contents and goals vary).
Sampler colors_fixed_sampler(const datagen::VariantContext& ctx,
                             const std::vector<std::string>& objects,
                             std::uint64_t seed, int min_len, int max_len);

// Exhaustive equivalence of a program and its lowering over all token
// strings built from `vocab_subset` symbols and `ext_alphabet` values.
LangCheckReport check_lowering(const crasp::CraspProgram& program,
                               const std::vector<std::int64_t>& ext_alphabet,
                               const std::vector<std::string>& vocab_subset,
                               int max_len, const std::string& name);

// Acceptance is invariant under shifting every extended-token value.
LangCheckReport check_translation_invariance(std::int64_t trials,
                                             std::uint64_t seed,
                                             const std::vector<std::int64_t>&
                                                 shifts);

// Random well-typed programs and inputs for property-style checks.
crasp::CraspProgram random_program(Rng& rng, const std::vector<std::string>&
                                                 sigma);
crasp::TokenSeq random_input(Rng& rng, const std::vector<std::string>& sigma,
                             int len, std::int64_t max_value);

}  // namespace planlab::checks
