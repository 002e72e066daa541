#include "planlab/compile.hpp"

#include <set>

#include "doctest.h"
#include "planlab/checks.hpp"
#include "planlab/datagen.hpp"
#include "planlab/domains.hpp"
#include "planlab/dsl.hpp"
#include "planlab/rng.hpp"

using namespace planlab;
using compile::EncodingLayout;
using compile::Mode;

namespace {

std::shared_ptr<const Domain> colors_wf() {
  return std::make_shared<Domain>(
      domains::colors(domains::ColorsVariant::WellFormed));
}

Instance small_colors_instance(std::shared_ptr<const Domain> domain) {
  Instance inst;
  inst.domain = std::move(domain);
  inst.objects = {"bagA", "bagB", "colX", "colY"};
  inst.init = State({{inst.domain->pred_index("bag"), {0}},
                     {inst.domain->pred_index("bag"), {1}},
                     {inst.domain->pred_index("color"), {2}},
                     {inst.domain->pred_index("color"), {3}}});
  return inst;
}

const char* kFig9Instance = R"((instance
  (objects object_237 object_223 object_100 object_154 object_280
           object_113 object_94 object_7 object_76)
  (init (atRobby object_280)
        (gripper object_237) (gripper object_223)
        (free object_237) (free object_223)
        (room object_100) (room object_154) (room object_280) (room object_113)
        (ball object_94) (ball object_7) (ball object_76)
        (heavy object_94)
        (at object_94 object_100) (at object_7 object_154)
        (at object_76 object_280))
  (goal (at object_94 object_280) (at object_7 object_154)
        (at object_76 object_154))))";

const char* kFig9Valid = R"((plan
  (pick object_76 object_280 object_223)
  (move object_280 object_100)
  (pickHeavy object_94 object_100 object_237)
  (move object_100 object_154)
  (drop object_76 object_154 object_223)
  (move object_154 object_280)
  (drop object_94 object_280 object_237)
  (move object_280 object_113)))";

const char* kFig9Incomplete = R"((plan
  (pick object_76 object_280 object_223)
  (move object_280 object_100)
  (pickHeavy object_94 object_100 object_237)
  (move object_100 object_154)
  (drop object_76 object_154 object_223)
  (move object_154 object_113)
  (drop object_94 object_113 object_237)))";

const char* kFig9NonExecutable = R"((plan
  (pick object_76 object_280 object_223)
  (move object_280 object_100)
  (pickHeavy object_94 object_100 object_237)
  (move object_100 object_154)
  (drop object_76 object_154 object_223)
  (move object_154 object_280)
  (drop object_94 object_280 object_237)
  (drop object_76 object_280 object_223)))";

}  // namespace

TEST_CASE("encoding shape and alphabet") {
  auto domain = colors_wf();
  EncodingLayout layout = compile::make_layout_ext(domain);
  // Exactly the domain symbols plus the two markers.
  CHECK(layout.sigma == std::vector<std::string>{"$", "@", "bag", "color",
                                                 "hasColor", "remove", "add"});
  Instance inst = small_colors_instance(domain);

  crasp::TokenSeq empty = compile::encode(inst, Plan{}, layout);
  // $ I @ @ @ with one name token and one object token per typed fact.
  CHECK(empty.size() == 1 + 4 * 2 + 3);
  CHECK(empty.toks[2].ext);  // fact arguments are values

  inst.goal.push_back({{domain->pred_index("hasColor"), {0, 2}}, true});
  Plan plan;
  plan.actions.push_back({domain->schema_index("add"), {2, 0}});
  crasp::TokenSeq seq = compile::encode(inst, plan, layout);
  CHECK(seq.size() == 1 + 8 + 1 + 3 + 1 + 3 + 1);

  // Collisions in object values are refused.
  CHECK_THROWS_AS(compile::encode(inst, plan, layout, {1, 2, 3, 3}),
                  Error);
  // Negative goals need the marker symbols.
  Instance neg = inst;
  neg.goal = {{{domain->pred_index("hasColor"), {0, 2}}, false}};
  CHECK_THROWS_AS(compile::encode(neg, Plan{}, layout), Error);
  EncodingLayout negated = compile::make_layout_ext(domain, true);
  crasp::TokenSeq nseq = compile::encode(neg, Plan{}, negated);
  CHECK(nseq.size() == 1 + 8 + 1 + 1 + 3 + 1);
}

TEST_CASE("decode inverts encode") {
  auto domain = colors_wf();
  EncodingLayout ext = compile::make_layout_ext(domain);
  Instance inst = small_colors_instance(domain);
  inst.goal.push_back({{domain->pred_index("hasColor"), {1, 3}}, true});
  Plan plan;
  plan.actions.push_back({domain->schema_index("add"), {3, 1}});
  plan.actions.push_back({domain->schema_index("remove"), {3, 1}});

  crasp::TokenSeq seq = compile::encode(inst, plan, ext, {10, 20, 30, 40});
  compile::DecodedRecord rec = compile::decode(seq, ext);
  CHECK(rec.plan.actions.size() == 2);
  CHECK(rec.instance.init.size() == inst.init.size());
  CHECK(rec.instance.goal.size() == 1);
  // Re-encoding the decoded record reproduces the tokens.
  std::vector<std::int64_t> values;
  for (const std::string& name : rec.instance.objects) {
    values.push_back(std::stoll(name.substr(1)));
  }
  crasp::TokenSeq again = compile::encode(rec.instance, rec.plan, ext, values);
  CHECK(again.toks == seq.toks);

  // With a fixed universe the whole record round trips.
  EncodingLayout sig = compile::make_layout_sigma(domain, inst.objects);
  crasp::TokenSeq sseq = compile::encode(inst, plan, sig);
  compile::DecodedRecord srec = compile::decode(sseq, sig);
  CHECK(srec.instance.objects == inst.objects);
  CHECK(srec.instance.init == inst.init);
  CHECK(srec.instance.goal == inst.goal);
  CHECK(srec.plan.actions == plan.actions);
}

TEST_CASE("unsupported classes are refused") {
  // Conditional effects have no counting verifier.
  auto lo_ce = domains::lights_out_conditional(domains::Board(2, 2));
  EncodingLayout ce_layout =
      compile::make_layout_sigma(lo_ce.domain, lo_ce.objects, true);
  CHECK_THROWS_AS(compile::compile_fixed(ce_layout, Mode::WellFormed),
                  NotSupportedError);
  CHECK_THROWS_AS(compile::compile_fixed(ce_layout, Mode::DeleteFree),
                  NotSupportedError);

  // Plain STRIPS colors does not toggle.
  auto strips = std::make_shared<Domain>(
      domains::colors(domains::ColorsVariant::Strips));
  EncodingLayout s_layout =
      compile::make_layout_sigma(strips, {"b", "c"});
  CHECK_THROWS_AS(compile::compile_fixed(s_layout, Mode::WellFormed),
                  NotSupportedError);
  CHECK_THROWS_AS(compile::compile_fixed(s_layout, Mode::DeleteFree),
                  NotSupportedError);
  EncodingLayout sv_layout = compile::make_layout_ext(strips);
  CHECK_THROWS_AS(compile::compile_variable(sv_layout, Mode::WellFormed),
                  NotSupportedError);
  CHECK_THROWS_AS(compile::compile_variable(sv_layout, Mode::DeleteFree),
                  NotSupportedError);

  // The flip flop construction is plain STRIPS as well.
  Instance ff = domains::flipflop_instance();
  EncodingLayout ff_layout = compile::make_layout_sigma(ff.domain, ff.objects);
  CHECK_THROWS_AS(compile::compile_fixed(ff_layout, Mode::WellFormed),
                  NotSupportedError);

  // Well-formed grippers is not delete-free.
  auto wf = std::make_shared<Domain>(
      domains::heavy_grippers(domains::GrippersVariant::WellFormed));
  EncodingLayout wf_layout = compile::make_layout_ext(wf);
  CHECK_THROWS_AS(compile::compile_variable(wf_layout, Mode::DeleteFree),
                  NotSupportedError);
}

TEST_CASE("fixed lights out compiles with the full action table") {
  auto lo = domains::lights_out_well_formed(domains::Board(5, 5));
  EncodingLayout layout = compile::make_layout_sigma(lo.domain, lo.objects);
  compile::CompilationReport report;
  crasp::CraspProgram prog =
      compile::compile_fixed(layout, Mode::WellFormed, &report);
  CHECK(report.ground_actions == 512);
  CHECK(report.ground_propositions == 50);
  CHECK_FALSE(crasp::uses_match(prog));
  CHECK(report.provenance.size() == prog.ops.size());
  CHECK(compile::explain(report, 1) == "CountSep");
  CHECK(compile::explain(report, static_cast<int>(prog.ops.size())) ==
        "Phi_valid = AllActionsValid and AllGoalsMet");
  CHECK_THROWS_AS(compile::explain(report, 0), Error);

  // One record end to end: a two-press round trip from a lit corner.
  Instance inst = domains::lights_out_instance(lo, {0, 1, 5});
  State cur = inst.init;
  Plan plan;
  for (int step = 0; step < 2; ++step) {
    SchemaId s = domains::well_formed_press_schema(lo, cur, 0);
    cur = succ(inst, cur, {s, {}});
    plan.actions.push_back({s, {}});
  }
  const bool want = simulate(inst, plan).verdict.valid();
  CHECK(crasp::accepts(prog, compile::encode(inst, plan, layout)) == want);
}

TEST_CASE("fixed colors agrees with the simulator across initial states") {
  auto domain = colors_wf();
  const std::vector<std::string> objects = {"bagA", "bagB", "colX", "colY"};
  EncodingLayout layout = compile::make_layout_sigma(domain, objects);
  crasp::CraspProgram prog = compile::compile_fixed(layout, Mode::WellFormed);

  const PredId p_has = domain->pred_index("hasColor");
  const SchemaId s_add = domain->schema_index("add");
  const SchemaId s_rm = domain->schema_index("remove");
  std::vector<std::pair<ObjId, ObjId>> pairs = {{0, 2}, {0, 3}, {1, 2}, {1, 3}};

  Rng rng(1234);
  int checked = 0;
  for (int mask = 0; mask < 16; ++mask) {
    Instance inst = small_colors_instance(domain);
    std::vector<GroundAtom> atoms = inst.init.atoms();
    for (int bit = 0; bit < 4; ++bit) {
      if (mask & (1 << bit)) {
        atoms.push_back({p_has, {pairs[bit].first, pairs[bit].second}});
      }
    }
    inst.init = State(std::move(atoms));
    for (int trial = 0; trial < 25; ++trial) {
      Plan plan;
      const int len = static_cast<int>(rng.range(0, 8));
      for (int i = 0; i < len; ++i) {
        auto [bag, col] = pairs[rng.below(4)];
        plan.actions.push_back(
            {rng.chance(0.5) ? s_add : s_rm, {col, bag}});
      }
      Instance with_goal = inst;
      // Half the trials take the reachable goal, half a random one.
      if (rng.chance(0.5)) {
        SimResult sim = simulate(inst, plan);
        const State& last = sim.trace.back();
        for (const GroundAtom& a : last.atoms()) {
          if (a.pred == p_has) with_goal.goal.push_back({a, true});
        }
      } else {
        for (auto [bag, col] : pairs) {
          if (rng.chance(0.4)) {
            with_goal.goal.push_back({{p_has, {bag, col}}, true});
          }
        }
      }
      const bool want = simulate(with_goal, plan).verdict.valid();
      const bool got =
          crasp::accepts(prog, compile::encode(with_goal, plan, layout));
      REQUIRE(want == got);
      ++checked;
    }
  }
  CHECK(checked == 400);
}

TEST_CASE("variable grippers programs decide the golden records") {
  auto wf = std::make_shared<Domain>(
      domains::heavy_grippers(domains::GrippersVariant::WellFormed));
  auto df = std::make_shared<Domain>(
      domains::heavy_grippers(domains::GrippersVariant::DeleteFree));
  EncodingLayout wf_layout = compile::make_layout_ext(wf);
  EncodingLayout df_layout = compile::make_layout_ext(df);
  crasp::CraspProgram wf_prog =
      compile::compile_variable(wf_layout, Mode::WellFormed);
  crasp::CraspProgram df_prog =
      compile::compile_variable(df_layout, Mode::DeleteFree);

  for (bool well_formed : {true, false}) {
    auto domain = well_formed ? wf : df;
    const EncodingLayout& layout = well_formed ? wf_layout : df_layout;
    const crasp::CraspProgram& prog = well_formed ? wf_prog : df_prog;
    Instance inst = dsl::parse_instance(kFig9Instance, domain);
    std::vector<std::int64_t> values = datagen::object_values(inst);
    auto run = [&](const char* text) {
      Plan plan = dsl::parse_plan(text, inst);
      const bool want = simulate(inst, plan).verdict.valid();
      const bool got =
          crasp::accepts(prog, compile::encode(inst, plan, layout, values));
      CHECK(want == got);
      return got;
    };
    const bool valid = run(kFig9Valid);
    const bool incomplete = run(kFig9Incomplete);
    const bool nonexec = run(kFig9NonExecutable);
    CHECK(valid);
    CHECK_FALSE(incomplete);
    // The delete-free reading also accepts the redirected double drop.
    CHECK(nonexec == !well_formed);
  }
}

TEST_CASE("full-board lights out records verify end to end") {
  datagen::VariantContext ctx =
      datagen::VariantContext::make(datagen::Variant::LightsOutWellFormed);
  crasp::CraspProgram prog =
      compile::compile_fixed(ctx.layout, Mode::WellFormed);
  datagen::GenConfig config;
  config.variant = ctx.variant;
  for (int trial = 0; trial < 10; ++trial) {
    Rng rng = Rng::substream(616, trial);
    datagen::GenRecord rec = datagen::gen_lights_out(ctx, 11 + trial * 3, rng);
    CHECK(crasp::accepts(prog,
                         compile::encode(rec.instance, rec.plan, ctx.layout)));
    Plan bad = datagen::corrupt_incomplete(ctx, rec.instance, rec.plan, rng);
    CHECK_FALSE(
        crasp::accepts(prog, compile::encode(rec.instance, bad, ctx.layout)));
  }
}

TEST_CASE("long out-of-distribution records still verify") {
  datagen::VariantContext ctx =
      datagen::VariantContext::make(datagen::Variant::GrippersWellFormed);
  crasp::CraspProgram prog =
      compile::compile_variable(ctx.layout, Mode::WellFormed);
  datagen::GenConfig config;
  config.variant = ctx.variant;
  Rng rng(929);
  datagen::GenRecord rec = datagen::gen_grippers(ctx, config, 200, rng);
  CHECK(rec.instance.objects.size() > 100);
  std::vector<std::int64_t> values = datagen::object_values(rec.instance);
  CHECK(crasp::accepts(
      prog, compile::encode(rec.instance, rec.plan, ctx.layout, values)));
  Plan bad = datagen::corrupt_nonexecutable(ctx, rec.instance, rec.plan, rng);
  CHECK_FALSE(crasp::accepts(
      prog, compile::encode(rec.instance, bad, ctx.layout, values)));
}

TEST_CASE("variable colors program agrees with the simulator") {
  datagen::VariantContext ctx =
      datagen::VariantContext::make(datagen::Variant::ColorsWellFormed);
  crasp::CraspProgram prog =
      compile::compile_variable(ctx.layout, Mode::WellFormed);
  checks::LangCheckReport rep = checks::check_compiled(
      prog, ctx.layout, checks::variant_sampler(ctx, 555, 11, 40, 0), 250,
      "colors-wf-variable");
  CHECK(rep.pass());
  CHECK(rep.tested == 250);
}

TEST_CASE("object token values never matter") {
  datagen::VariantContext ctx =
      datagen::VariantContext::make(datagen::Variant::ColorsWellFormed);
  crasp::CraspProgram prog =
      compile::compile_variable(ctx.layout, Mode::WellFormed);
  Rng rng(808);
  datagen::GenConfig config;
  config.variant = ctx.variant;
  for (int trial = 0; trial < 20; ++trial) {
    datagen::GenRecord rec = datagen::gen_colors(ctx, config, 12, rng);
    std::vector<std::int64_t> base = datagen::object_values(rec.instance);
    const bool a = crasp::accepts(
        prog, compile::encode(rec.instance, rec.plan, ctx.layout, base));
    for (std::int64_t& v : base) v += 1000;
    const bool b = crasp::accepts(
        prog, compile::encode(rec.instance, rec.plan, ctx.layout, base));
    CHECK(a == b);
  }
}

TEST_CASE("program sizes scale with the symbol tables") {
  // Fixed mode: lines grow with the ground universe, boundedly so.
  auto domain = colors_wf();
  for (int extra = 0; extra <= 2; ++extra) {
    std::vector<std::string> objects = {"b0", "b1", "c0", "c1"};
    for (int i = 0; i < extra; ++i) objects.push_back("x" + std::to_string(i));
    EncodingLayout layout = compile::make_layout_sigma(domain, objects);
    compile::CompilationReport report;
    crasp::CraspProgram prog =
        compile::compile_fixed(layout, Mode::WellFormed, &report);
    const int units = report.ground_actions + report.ground_propositions;
    CHECK(static_cast<int>(prog.ops.size()) < 40 * units);
  }
}

TEST_CASE("variable programs only touch objects through matches") {
  auto df = std::make_shared<Domain>(
      domains::heavy_grippers(domains::GrippersVariant::DeleteFree));
  EncodingLayout layout = compile::make_layout_ext(df);
  compile::CompilationReport report;
  crasp::CraspProgram prog =
      compile::compile_variable(layout, Mode::DeleteFree, &report);
  CHECK(crasp::uses_match(prog));
  // Every Initial op queries a declared Sigma symbol; the alphabet holds no
  // object names in this layout, so objects are reachable only via matches.
  for (const crasp::CraspOp& op : prog.ops) {
    if (op.kind == crasp::OpKind::Initial) {
      CHECK(op.sigma < static_cast<int>(layout.sigma.size()));
    }
  }
  // Size stays linear in the schema table, not in any object universe.
  CHECK(prog.ops.size() < 2500);
  CHECK(report.ground_actions == 4);

  // A sampled provenance entry names the counter construction.
  bool has_v_add = false, has_v_init = false;
  for (const std::string& p : report.provenance) {
    has_v_add |= p.rfind("V_add", 0) == 0;
    has_v_init |= p.rfind("V_init", 0) == 0;
  }
  CHECK(has_v_add);
  CHECK(has_v_init);
}

TEST_CASE("negated goal markers compile and verify") {
  auto domain = colors_wf();
  EncodingLayout layout = compile::make_layout_ext(domain, true);
  crasp::CraspProgram prog = compile::compile_variable(layout, Mode::WellFormed);
  Instance inst = small_colors_instance(domain);
  const PredId p_has = domain->pred_index("hasColor");
  const SchemaId s_add = domain->schema_index("add");
  inst.goal = {{{p_has, {0, 2}}, false}, {{p_has, {1, 3}}, true}};
  Plan good;
  good.actions.push_back({s_add, {3, 1}});
  Plan bad;
  bad.actions.push_back({s_add, {2, 0}});
  bad.actions.push_back({s_add, {3, 1}});
  CHECK(simulate(inst, good).verdict.valid());
  CHECK_FALSE(simulate(inst, bad).verdict.valid());
  CHECK(crasp::accepts(prog, compile::encode(inst, good, layout)));
  CHECK_FALSE(crasp::accepts(prog, compile::encode(inst, bad, layout)));
}

TEST_CASE("lowered variable program matches the fixed compilation") {
  // One bag, one color: the ground universe is tiny enough to enumerate
  // plans exhaustively.
  auto domain = colors_wf();
  const std::vector<std::string> objects = {"bag0", "col0"};
  EncodingLayout fixed_layout = compile::make_layout_sigma(domain, objects);
  crasp::CraspProgram fixed_prog =
      compile::compile_fixed(fixed_layout, Mode::WellFormed);

  EncodingLayout var_layout = compile::make_layout_ext(domain);
  crasp::CraspProgram var_prog =
      compile::compile_variable(var_layout, Mode::WellFormed);
  const std::vector<std::int64_t> alphabet = {1, 2};
  crasp::CraspProgram lowered =
      crasp::lower_match_to_finite(var_prog, alphabet);

  Instance base;
  base.domain = domain;
  base.objects = objects;
  base.init = State({{domain->pred_index("bag"), {0}},
                     {domain->pred_index("color"), {1}}});
  const PredId p_has = domain->pred_index("hasColor");

  std::vector<GroundAction> ground;
  for (SchemaId s = 0; s < 2; ++s) {
    for (GroundAction& a : ground_schema(*domain, s, 2)) ground.push_back(a);
  }
  REQUIRE(ground.size() == 8);

  int agree = 0;
  std::vector<GroundAction> plan_actions;
  std::function<void(int)> walk = [&](int budget) {
    for (int goal_kind = 0; goal_kind < 2; ++goal_kind) {
      Instance inst = base;
      if (goal_kind == 1) inst.goal.push_back({{p_has, {0, 1}}, true});
      Plan plan;
      plan.actions = plan_actions;
      const bool want = simulate(inst, plan).verdict.valid();
      const bool fixed_got = crasp::accepts(
          fixed_prog, compile::encode(inst, plan, fixed_layout));
      crasp::TokenSeq var_tokens =
          compile::encode(inst, plan, var_layout, alphabet);
      const bool var_got = crasp::accepts(var_prog, var_tokens);
      const bool low_got = crasp::accepts(
          lowered, crasp::to_finite_tokens(var_tokens, alphabet));
      REQUIRE(fixed_got == want);
      REQUIRE(var_got == want);
      REQUIRE(low_got == want);
      ++agree;
    }
    if (budget == 0) return;
    for (const GroundAction& a : ground) {
      plan_actions.push_back(a);
      walk(budget - 1);
      plan_actions.pop_back();
    }
  };
  walk(3);
  CHECK(agree == 2 * (1 + 8 + 64 + 512));
}
