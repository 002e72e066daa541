// datagen.hpp
//
// Dataset pipeline: instance sampling, valid-plan generation, incomplete and
// non-executable corruptions, training-format tokenization, and split export.

#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "planlab/compile.hpp"
#include "planlab/domains.hpp"
#include "planlab/rng.hpp"
#include "planlab/strips.hpp"

namespace planlab::datagen {

enum class Variant {
  GrippersWellFormed,
  GrippersDeleteFree,
  ColorsWellFormed,
  ColorsStrips,
  LightsOutWellFormed,
  LightsOutConditional,
};

std::string variant_id(Variant v);
std::optional<Variant> variant_from_id(const std::string& id);
bool variant_supports_nonexecutable(Variant v);

struct GenConfig {
  Variant variant = Variant::ColorsWellFormed;
  std::uint64_t seed = 0;
  int min_len = 11;
  int max_len = 100;
  int name_pool = 400;          // object_0 .. object_<pool-1>
  double df_mix = 0.5;          // delete-free walks: share of steps sampled
                                // from the stricter action pool
  double nonexec_frac = 0.5;    // grippers: share of invalids that are
                                // non-executable
  int max_objects = 0;          // 0 = follow the sampling formulas unclamped
  int board_rows = 5;
  int board_cols = 5;
};

struct RetryExhaustedError : Error {
  using Error::Error;
};

struct NotApplicableError : Error {
  using Error::Error;
};

// Shared immutable context for one variant (domain, layouts, board).
struct VariantContext {
  Variant variant;
  std::shared_ptr<const Domain> domain;
  compile::EncodingLayout layout;
  std::optional<domains::LightsOutTemplate> lights;

  static VariantContext make(Variant v, int board_rows = 5,
                             int board_cols = 5);
};

struct GenRecord {
  Instance instance;
  Plan plan;
};

// Valid instance/plan samplers. The plan has exactly `length` actions and
// simulates to a valid verdict. Throws RetryExhaustedError when the random
// walk cannot be extended after the retry budget.
GenRecord gen_grippers(const VariantContext& ctx, const GenConfig& config,
                       int length, Rng& rng);
GenRecord gen_colors(const VariantContext& ctx, const GenConfig& config,
                     int length, Rng& rng);
GenRecord gen_lights_out(const VariantContext& ctx, int length, Rng& rng);
GenRecord gen_valid(const VariantContext& ctx, const GenConfig& config,
                    int length, Rng& rng);

// Executable but goal-failing corruption; Colors and Lights Out keep the
// plan length, Grippers may shed up to four trailing actions.
Plan corrupt_incomplete(const VariantContext& ctx, const Instance& instance,
                        const Plan& plan, Rng& rng);

// Replaces the final action with an inapplicable move or drop. Only the
// Grippers variants support this; others throw NotApplicableError.
Plan corrupt_nonexecutable(const VariantContext& ctx, const Instance& instance,
                           const Plan& plan, Rng& rng);

struct DatasetRecord {
  std::int64_t id = 0;
  std::string variant;
  int n_actions = 0;
  std::string label;       // correct | incorrect
  std::string corruption;  // none | incomplete | non_executable
  Instance instance;
  Plan plan;
  std::string tokens_train;
  std::string tokens_crasp;
};

// Training-format token line per the per-domain schemes; the verdict token is
// included.
std::string tokenize_train(const VariantContext& ctx,
                           const DatasetRecord& record);

// The $ I @ pi @ G @ encoding rendered as token text.
std::string tokenize_crasp(const VariantContext& ctx, const Instance& instance,
                           const Plan& plan);

// Extended-token values for an instance's objects (numeric name suffixes).
std::vector<std::int64_t> object_values(const Instance& instance);

// One valid/invalid record pair; deterministic in (config.seed, pair_index).
std::pair<DatasetRecord, DatasetRecord> make_pair(const VariantContext& ctx,
                                                  const GenConfig& config,
                                                  std::int64_t pair_index);

std::string record_to_jsonl(const DatasetRecord& record);

struct SplitSpec {
  std::string name;
  int pairs = 0;
  int min_len = 11;
  int max_len = 100;
};

std::vector<SplitSpec> default_splits(int train_pairs);

struct SplitStats {
  std::string name;
  int records = 0;
  int correct = 0;
  int incorrect = 0;
  int incomplete = 0;
  int non_executable = 0;
  int min_objects = 0;
  int max_objects = 0;
  std::map<std::string, int> length_buckets;
};

// Writes {variant}.{split}.jsonl files plus a stats JSON; returns the stats.
// `jobs` controls worker parallelism; output bytes are independent of it.
std::vector<SplitStats> build_splits(const GenConfig& config,
                                     const std::vector<SplitSpec>& splits,
                                     const std::string& out_dir, int jobs = 1);

std::string stats_to_json(const GenConfig& config,
                          const std::vector<SplitStats>& stats);

}  // namespace planlab::datagen
