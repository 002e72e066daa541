#include "planlab/datagen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "planlab/dsl.hpp"

using namespace planlab;
using namespace planlab::datagen;

namespace {

GenConfig config_for(Variant v, std::uint64_t seed = 7) {
  GenConfig c;
  c.variant = v;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("grippers sampling ranges") {
  VariantContext ctx = VariantContext::make(Variant::GrippersWellFormed);
  GenConfig config = config_for(Variant::GrippersWellFormed);
  const Domain& d = *ctx.domain;
  for (int trial = 0; trial < 30; ++trial) {
    Rng rng = Rng::substream(11, trial);
    GenRecord rec = gen_grippers(ctx, config, 20, rng);
    int balls = 0, rooms = 0, grippers = 0, heavy = 0;
    for (const GroundAtom& a : rec.instance.init.atoms()) {
      if (a.pred == d.pred_index("ball")) ++balls;
      if (a.pred == d.pred_index("room")) ++rooms;
      if (a.pred == d.pred_index("gripper")) ++grippers;
      if (a.pred == d.pred_index("heavy")) ++heavy;
    }
    CHECK(grippers == 2);
    CHECK(balls >= 12);
    CHECK(balls <= 17);
    CHECK(heavy >= static_cast<int>(std::ceil(0.45 * balls)));
    CHECK(heavy <= static_cast<int>(std::floor(0.85 * balls)));
    CHECK(rooms >= 2);
    CHECK(rooms <= balls / 2);
    CHECK(rec.plan.size() == 20);
    CHECK(simulate(rec.instance, rec.plan).verdict.valid());
    // Well-formed walks audit clean, and no ball ends carried.
    CHECK(audit_well_formed_trace(rec.instance, rec.plan).empty());
  }
}

TEST_CASE("grippers walks hit the requested length for many seeds") {
  for (Variant v : {Variant::GrippersWellFormed, Variant::GrippersDeleteFree}) {
    VariantContext ctx = VariantContext::make(v);
    GenConfig config = config_for(v);
    for (int trial = 0; trial < 60; ++trial) {
      Rng rng = Rng::substream(21 + static_cast<int>(v), trial);
      const int len = 11 + trial % 25;
      GenRecord rec = gen_valid(ctx, config, len, rng);
      CHECK(static_cast<int>(rec.plan.size()) == len);
      CHECK(simulate(rec.instance, rec.plan).verdict.valid());
    }
  }
}

TEST_CASE("colors instances balance bags against colors") {
  VariantContext ctx = VariantContext::make(Variant::ColorsWellFormed);
  GenConfig config = config_for(Variant::ColorsWellFormed);
  const Domain& d = *ctx.domain;
  Rng rng(5);
  GenRecord rec = gen_colors(ctx, config, 24, rng);
  int bags = 0, colors = 0;
  for (const GroundAtom& a : rec.instance.init.atoms()) {
    if (a.pred == d.pred_index("bag")) ++bags;
    if (a.pred == d.pred_index("color")) ++colors;
  }
  CHECK(bags * colors >= 5);
  CHECK(bags * colors <= 7);
  CHECK(std::abs(bags - colors) <= 2);
  CHECK(rec.plan.size() == 24);
  CHECK(simulate(rec.instance, rec.plan).verdict.valid());

  // Well-formed walks never add a present color.
  CHECK(audit_well_formed_trace(rec.instance, rec.plan).empty());

  // The plain variant allows duplicate additions; over many seeds some walk
  // exercises one.
  VariantContext sctx = VariantContext::make(Variant::ColorsStrips);
  bool saw_redundant = false;
  for (int trial = 0; trial < 40 && !saw_redundant; ++trial) {
    Rng r2 = Rng::substream(17, trial);
    GenRecord srec = gen_colors(sctx, config_for(Variant::ColorsStrips), 16, r2);
    saw_redundant = !audit_well_formed_trace(srec.instance, srec.plan).empty();
  }
  CHECK(saw_redundant);
}

TEST_CASE("lights out walks return to the dark board") {
  for (Variant v :
       {Variant::LightsOutConditional, Variant::LightsOutWellFormed}) {
    VariantContext ctx = VariantContext::make(v);
    for (int trial = 0; trial < 25; ++trial) {
      Rng rng = Rng::substream(31, trial);
      GenRecord rec = gen_lights_out(ctx, 14, rng);
      CHECK(rec.plan.size() == 14);
      CHECK(simulate(rec.instance, rec.plan).verdict.valid());
    }
  }
  // A single press from all-off lights exactly one closed neighborhood.
  VariantContext ctx = VariantContext::make(Variant::LightsOutConditional);
  Rng rng(99);
  GenRecord rec = gen_lights_out(ctx, 1, rng);
  const int cell = domains::pressed_cell(*ctx.lights, rec.plan.actions[0].schema);
  CHECK(rec.instance.init.size() ==
        ctx.lights->board.closed_neighborhood(cell).size());
}

TEST_CASE("incomplete corruptions stay executable and miss the goal") {
  for (Variant v : {Variant::ColorsWellFormed, Variant::ColorsStrips,
                    Variant::LightsOutConditional, Variant::LightsOutWellFormed,
                    Variant::GrippersWellFormed, Variant::GrippersDeleteFree}) {
    VariantContext ctx = VariantContext::make(v);
    GenConfig config = config_for(v);
    int made = 0;
    for (int trial = 0; trial < 40 && made < 12; ++trial) {
      Rng rng = Rng::substream(1000 + static_cast<int>(v), trial);
      GenRecord rec;
      try {
        rec = gen_valid(ctx, config, 14, rng);
      } catch (const RetryExhaustedError&) {
        continue;
      }
      Plan bad;
      try {
        bad = corrupt_incomplete(ctx, rec.instance, rec.plan, rng);
      } catch (const RetryExhaustedError&) {
        continue;
      }
      Verdict verdict = simulate(rec.instance, bad).verdict;
      REQUIRE(verdict.status == Verdict::Status::Incomplete);
      if (v != Variant::LightsOutConditional &&
          v != Variant::LightsOutWellFormed) {
        CHECK(verdict.unsat_goals.size() == 1);
      }
      if (v == Variant::ColorsWellFormed || v == Variant::ColorsStrips ||
          v == Variant::LightsOutConditional ||
          v == Variant::LightsOutWellFormed) {
        CHECK(bad.size() == rec.plan.size());
        // Minimal pair: exactly one action differs.
        int diff = 0;
        for (std::size_t i = 0; i < bad.size(); ++i) {
          diff += bad.actions[i] == rec.plan.actions[i] ? 0 : 1;
        }
        CHECK(diff == 1);
      } else {
        CHECK(bad.size() >= rec.plan.size() - 4);
      }
      ++made;
    }
    CHECK(made >= 12);
  }
}

TEST_CASE("non-executable corruptions break the final step only") {
  for (Variant v : {Variant::GrippersWellFormed, Variant::GrippersDeleteFree}) {
    VariantContext ctx = VariantContext::make(v);
    GenConfig config = config_for(v);
    const Domain& d = *ctx.domain;
    int made = 0;
    for (int trial = 0; trial < 30 && made < 10; ++trial) {
      Rng rng = Rng::substream(2000 + static_cast<int>(v), trial);
      GenRecord rec;
      try {
        rec = gen_valid(ctx, config, 13, rng);
      } catch (const RetryExhaustedError&) {
        continue;
      }
      Plan bad = corrupt_nonexecutable(ctx, rec.instance, rec.plan, rng);
      CHECK(bad.size() == rec.plan.size());
      Verdict verdict = simulate(rec.instance, bad).verdict;
      REQUIRE(verdict.status == Verdict::Status::NonExecutable);
      CHECK(verdict.step == static_cast<int>(bad.size()));
      const std::string& name = d.schemas[bad.actions.back().schema].name;
      CHECK((name == "move" || name == "drop"));
      ++made;
    }
    CHECK(made >= 10);
  }
  VariantContext colors = VariantContext::make(Variant::ColorsStrips);
  GenConfig config = config_for(Variant::ColorsStrips);
  Rng rng(3);
  GenRecord rec = gen_colors(colors, config, 12, rng);
  CHECK_THROWS_AS(corrupt_nonexecutable(colors, rec.instance, rec.plan, rng),
                  NotApplicableError);
}

TEST_CASE("record pairs carry consistent labels and encodings") {
  VariantContext ctx = VariantContext::make(Variant::GrippersWellFormed);
  GenConfig config = config_for(Variant::GrippersWellFormed, 42);
  config.min_len = 11;
  config.max_len = 30;
  auto [good, bad] = make_pair(ctx, config, 12);
  CHECK(good.label == "correct");
  CHECK(good.corruption == "none");
  CHECK(bad.label == "incorrect");
  CHECK((bad.corruption == "incomplete" || bad.corruption == "non_executable"));
  CHECK(good.id == 24);
  CHECK(bad.id == 25);
  CHECK(simulate(good.instance, good.plan).verdict.valid());
  CHECK_FALSE(simulate(bad.instance, bad.plan).verdict.valid());

  // The token text decodes back to the same verdict-relevant content.
  crasp::TokenSeq seq = dsl::parse_tokens(good.tokens_crasp);
  compile::DecodedRecord rec = compile::decode(seq, ctx.layout);
  CHECK(rec.plan.actions.size() == good.plan.actions.size());
  CHECK(simulate(rec.instance, rec.plan).verdict.valid());

  // Training tokens carry the four sections and the verdict.
  CHECK(good.tokens_train.find("<init>") != std::string::npos);
  CHECK(good.tokens_train.find("<plan>") != std::string::npos);
  CHECK(good.tokens_train.find("<goal>") != std::string::npos);
  CHECK(good.tokens_train.find("<verdict> correct") != std::string::npos);
  CHECK(bad.tokens_train.find("<verdict> incorrect") != std::string::npos);
}

TEST_CASE("per-domain token schemes") {
  // Lights out actions take coordinates (and a configuration index when
  // well-formed); the goal section stays empty.
  {
    VariantContext ctx = VariantContext::make(Variant::LightsOutWellFormed);
    GenConfig config = config_for(Variant::LightsOutWellFormed);
    auto [good, bad] = make_pair(ctx, config, 0);
    std::istringstream in(good.tokens_train);
    std::vector<std::string> toks;
    std::string t;
    while (in >> t) toks.push_back(t);
    auto plan_at = std::find(toks.begin(), toks.end(), "<plan>");
    REQUIRE(plan_at != toks.end());
    CHECK(*(plan_at + 1) == "press");
    // press r c k
    CHECK(std::isdigit(static_cast<unsigned char>((*(plan_at + 2))[0])));
    CHECK(std::isdigit(static_cast<unsigned char>((*(plan_at + 3))[0])));
    CHECK(std::isdigit(static_cast<unsigned char>((*(plan_at + 4))[0])));
    CHECK(good.tokens_train.find("<goal> <verdict>") != std::string::npos);
  }
  {
    VariantContext ctx = VariantContext::make(Variant::LightsOutConditional);
    GenConfig config = config_for(Variant::LightsOutConditional);
    auto [good, bad] = make_pair(ctx, config, 0);
    std::istringstream in(good.tokens_train);
    std::vector<std::string> toks;
    std::string t;
    while (in >> t) toks.push_back(t);
    auto plan_at = std::find(toks.begin(), toks.end(), "<plan>");
    REQUIRE(plan_at != toks.end());
    CHECK(*(plan_at + 1) == "press");
    // press r c, then the next action's press token
    CHECK(*(plan_at + 4) == "press");
  }
  // Colors omits the initial-state body.
  {
    VariantContext ctx = VariantContext::make(Variant::ColorsWellFormed);
    GenConfig config = config_for(Variant::ColorsWellFormed);
    auto [good, bad] = make_pair(ctx, config, 0);
    CHECK(good.tokens_train.find("<init> <plan>") == 0);
  }
}

TEST_CASE("jsonl lines carry the exact schema") {
  VariantContext ctx = VariantContext::make(Variant::ColorsStrips);
  GenConfig config = config_for(Variant::ColorsStrips, 9);
  auto [good, bad] = make_pair(ctx, config, 3);
  const std::string line = record_to_jsonl(good);
  auto j = nlohmann::json::parse(line);
  const std::vector<std::string> keys = {
      "id",   "variant", "n_actions",    "label",        "corruption",
      "objects", "init", "plan", "goal", "tokens_train", "tokens_crasp"};
  for (const std::string& k : keys) CHECK(j.contains(k));
  CHECK(j.size() == keys.size());
  CHECK(j["variant"] == "colors-strips");
  CHECK(j["n_actions"].get<int>() == static_cast<int>(good.plan.size()));
}

TEST_CASE("split files balance labels and respect length buckets") {
  namespace fs = std::filesystem;
  const std::string dir = (fs::temp_directory_path() / "planlab_gen_test").string();
  fs::remove_all(dir);
  GenConfig config = config_for(Variant::ColorsWellFormed, 2024);
  std::vector<SplitSpec> splits = {{"train", 12, 11, 100},
                                   {"test_ood", 6, 101, 200}};
  std::vector<SplitStats> stats = build_splits(config, splits, dir, 2);
  REQUIRE(stats.size() == 2);
  CHECK(stats[0].records == 24);
  CHECK(stats[0].correct == 12);
  CHECK(stats[0].incorrect == 12);
  CHECK(stats[1].records == 12);

  std::ifstream in(dir + "/colors-wf.test_ood.jsonl");
  REQUIRE(in.good());
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line);
    const int n = j["n_actions"].get<int>();
    CHECK(n >= 101);
    CHECK(n <= 200);
    // Labels match the simulator on re-parse.
    ++rows;
  }
  CHECK(rows == 12);
  const std::string stats_json = stats_to_json(config, stats);
  CHECK(stats_json.find("length_buckets") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("generation is deterministic and parallel-stable") {
  namespace fs = std::filesystem;
  const std::string dir1 = (fs::temp_directory_path() / "planlab_det1").string();
  const std::string dir2 = (fs::temp_directory_path() / "planlab_det2").string();
  fs::remove_all(dir1);
  fs::remove_all(dir2);
  GenConfig config = config_for(Variant::GrippersDeleteFree, 77);
  std::vector<SplitSpec> splits = {{"train", 8, 11, 40}};
  build_splits(config, splits, dir1, 1);
  build_splits(config, splits, dir2, 4);
  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  };
  CHECK(slurp(dir1 + "/grippers-df.train.jsonl") ==
        slurp(dir2 + "/grippers-df.train.jsonl"));
  CHECK_FALSE(slurp(dir1 + "/grippers-df.train.jsonl").empty());
  fs::remove_all(dir1);
  fs::remove_all(dir2);
}

TEST_CASE("every emitted record label matches the simulator") {
  for (Variant v : {Variant::ColorsStrips, Variant::LightsOutConditional,
                    Variant::GrippersWellFormed}) {
    VariantContext ctx = VariantContext::make(v);
    GenConfig config = config_for(v, 31337);
    config.max_len = 40;
    for (std::int64_t pair = 0; pair < 10; ++pair) {
      auto [good, bad] = make_pair(ctx, config, pair);
      CHECK(simulate(good.instance, good.plan).verdict.valid());
      Verdict bv = simulate(bad.instance, bad.plan).verdict;
      CHECK_FALSE(bv.valid());
      if (bad.corruption == "incomplete") {
        CHECK(bv.status == Verdict::Status::Incomplete);
      } else {
        CHECK(bv.status == Verdict::Status::NonExecutable);
      }
    }
  }
}
