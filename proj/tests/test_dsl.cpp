#include "planlab/dsl.hpp"

#include "doctest.h"
#include "planlab/checks.hpp"
#include "planlab/domains.hpp"
#include "planlab/rng.hpp"

using namespace planlab;

TEST_CASE("domain text round trips") {
  for (const Domain& d :
       {domains::colors(domains::ColorsVariant::WellFormed),
        domains::colors(domains::ColorsVariant::Strips),
        domains::heavy_grippers(domains::GrippersVariant::WellFormed),
        domains::heavy_grippers(domains::GrippersVariant::DeleteFree),
        domains::heavy_grippers_conditional()}) {
    std::string text = dsl::serialize_domain(d);
    Domain back = dsl::parse_domain(text);
    CHECK(back == d);
  }
  // Constants and conditional effects survive too.
  auto tmpl = domains::lights_out_conditional(domains::Board(2, 2));
  Domain back = dsl::parse_domain(dsl::serialize_domain(*tmpl.domain));
  CHECK(back == *tmpl.domain);
}

TEST_CASE("colors domain text parses to the expected shape") {
  Domain d = dsl::parse_domain(
      dsl::serialize_domain(domains::colors(domains::ColorsVariant::WellFormed)));
  CHECK(d.predicates.size() == 3);
  CHECK(d.schemas.size() == 2);
  CHECK(d.pred_index("hasColor") >= 0);
  CHECK(d.schema_index("add") >= 0);
  // The well-formed add carries the absence precondition.
  const ActionSchema& add = d.schemas[d.schema_index("add")];
  bool has_neg = false;
  for (const Literal& l : add.pre) {
    has_neg |= !l.positive && l.pred == d.pred_index("hasColor");
  }
  CHECK(has_neg);
}

TEST_CASE("empty schema list is a valid domain") {
  Domain d = dsl::parse_domain("(domain (predicate p 1))");
  CHECK(d.predicates.size() == 1);
  CHECK(d.schemas.empty());
}

TEST_CASE("arity mismatch names the predicate") {
  const char* text =
      "(domain (predicate at 2)"
      " (schema go (params x) (pre (at x)) (eff)))";
  try {
    dsl::parse_domain(text);
    FAIL("expected a parse error");
  } catch (const dsl::ParseError& e) {
    CHECK(std::string(e.what()).find("at") != std::string::npos);
  }
}

TEST_CASE("unbound variables are rejected") {
  const char* text =
      "(domain (predicate p 1)"
      " (schema go (params x) (pre (p y)) (eff)))";
  CHECK_THROWS_AS(dsl::parse_domain(text), dsl::ParseError);
}

namespace {

std::shared_ptr<const Domain> grippers_wf() {
  return std::make_shared<Domain>(
      domains::heavy_grippers(domains::GrippersVariant::WellFormed));
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

}  // namespace

TEST_CASE("the nine-object instance parses to the documented shape") {
  Instance inst = dsl::parse_instance(kFig9Instance, grippers_wf());
  CHECK(inst.objects.size() == 9);
  CHECK(inst.init.size() == 16);
  CHECK(inst.goal.size() == 3);
  // Objects intern in declaration order.
  CHECK(inst.objects[0] == "object_237");
  CHECK(inst.object_index("object_76") == 8);

  std::string text = dsl::serialize_instance(inst);
  Instance back = dsl::parse_instance(text, inst.domain);
  CHECK(back.objects == inst.objects);
  CHECK(back.init == inst.init);
  CHECK(back.goal == inst.goal);
}

TEST_CASE("goals may be negative literals") {
  auto domain = std::make_shared<Domain>(
      domains::colors(domains::ColorsVariant::Strips));
  Instance inst = dsl::parse_instance(
      "(instance (objects b c) (init (bag b) (color c))"
      " (goal (not (hasColor b c))))",
      domain);
  REQUIRE(inst.goal.size() == 1);
  CHECK_FALSE(inst.goal[0].positive);
  Instance back = dsl::parse_instance(dsl::serialize_instance(inst), domain);
  CHECK(back.goal == inst.goal);
}

TEST_CASE("unknown names carry spans") {
  auto domain = grippers_wf();
  CHECK_THROWS_AS(
      dsl::parse_instance("(instance (objects a) (init (nosuch a)) (goal))",
                          domain),
      dsl::ParseError);
  CHECK_THROWS_AS(
      dsl::parse_instance("(instance (objects a) (init (room missing)) (goal))",
                          domain),
      dsl::ParseError);
}

TEST_CASE("plans parse against their instance") {
  auto domain = std::make_shared<Domain>(
      domains::colors(domains::ColorsVariant::WellFormed));
  Instance inst = dsl::parse_instance(
      "(instance (objects object_5 object_6 object_3 object_8)"
      " (init (bag object_5) (bag object_6) (color object_3) (color object_8))"
      " (goal (hasColor object_5 object_3) (hasColor object_6 object_8)))",
      domain);
  Plan plan = dsl::parse_plan(
      "(plan (add object_3 object_5) (add object_8 object_5)"
      " (remove object_3 object_5) (add object_8 object_6)"
      " (add object_3 object_5) (remove object_8 object_5))",
      inst);
  CHECK(plan.size() == 6);
  CHECK(simulate(inst, plan).verdict.valid());

  std::string text = dsl::serialize_plan(inst, plan);
  Plan back = dsl::parse_plan(text, inst);
  CHECK(back.actions == plan.actions);

  CHECK_THROWS_AS(dsl::parse_plan("(plan (fly object_5))", inst),
                  dsl::ParseError);
  CHECK_THROWS_AS(dsl::parse_plan("(plan (add object_5))", inst),
                  dsl::ParseError);
}

TEST_CASE("program text parses and runs") {
  crasp::CraspProgram p = dsl::parse_crasp(R"(
sigma "@" "$"
P1 := Q_"@"
C1 := count(j<=i, P1)
P2 := C1 <= C1
)");
  CHECK(p.ops.size() == 3);
  CHECK(p.output_index() == 2);
  crasp::TokenSeq in = dsl::parse_tokens("$ @ #3");
  CHECK(crasp::accepts(p, in));
}

TEST_CASE("match lines parse with conjuncts and filters") {
  crasp::CraspProgram p = dsl::parse_crasp(R"(
sigma at
B1 := Q_at
C1 := match(j<i, (1,0,0), (2,1,-1), filter=B1)
C2 := match(j<=i, (0,0,2))
P1 := C1 <= C2
)");
  REQUIRE(p.ops.size() == 4);
  const crasp::CraspOp& m = p.ops[1];
  CHECK(m.kind == crasp::OpKind::MatchCount);
  CHECK(m.match.strict);
  CHECK(m.match.filter == 0);
  REQUIRE(m.match.conjuncts.size() == 2);
  CHECK(m.match.conjuncts[1].delta == 2);
  CHECK(m.match.conjuncts[1].gamma == 1);
  CHECK(m.match.conjuncts[1].tau == -1);
  CHECK_FALSE(p.ops[2].match.strict);
}

TEST_CASE("count-valued programs cannot accept") {
  CHECK_THROWS_AS(dsl::parse_crasp("C1 := 1"), dsl::ParseError);
  // A boolean output is fine.
  crasp::CraspProgram ok = dsl::parse_crasp("P1 := true");
  CHECK(ok.ops.size() == 1);
}

TEST_CASE("program parse errors") {
  CHECK_THROWS_AS(dsl::parse_crasp("P1 := Q_zzz"), dsl::ParseError);
  CHECK_THROWS_AS(dsl::parse_crasp("P1 := not P9"), dsl::ParseError);
  CHECK_THROWS_AS(dsl::parse_crasp("sigma a\nP1 := Q_a\nP1 := Q_a"),
                  dsl::ParseError);
  CHECK_THROWS_AS(dsl::parse_crasp("C1 := match(j<=i)\nP1 := true"),
                  dsl::ParseError);
}

TEST_CASE("random programs round trip through text") {
  const std::vector<std::string> sigma = {"$", "@", "press-00-1", "at"};
  Rng rng(77);
  for (int trial = 0; trial < 60; ++trial) {
    crasp::CraspProgram p = checks::random_program(rng, sigma);
    std::string text = dsl::serialize_crasp(p);
    crasp::CraspProgram back = dsl::parse_crasp(text);
    CHECK(back == p);
  }
}

TEST_CASE("token text round trips") {
  Rng rng(13);
  const std::vector<std::string> sigma = {"$", "@", "on", "press-2-1"};
  for (int trial = 0; trial < 40; ++trial) {
    crasp::TokenSeq in = checks::random_input(
        rng, sigma, static_cast<int>(rng.range(1, 20)), 30);
    crasp::TokenSeq back = dsl::parse_tokens(dsl::serialize_tokens(in));
    REQUIRE(back.size() == in.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
      CHECK(back.toks[i].ext == in.toks[i].ext);
      if (in.toks[i].ext) {
        CHECK(back.toks[i].value == in.toks[i].value);
      } else {
        CHECK(back.vocab[back.toks[i].sym] == in.vocab[in.toks[i].sym]);
      }
    }
  }
  crasp::TokenSeq ext = dsl::parse_tokens("#1 #22 p \"quo ted\"");
  REQUIRE(ext.size() == 4);
  CHECK(ext.toks[0].ext);
  CHECK(ext.toks[1].value == 22);
  CHECK_FALSE(ext.toks[2].ext);
  CHECK(ext.vocab[ext.toks[3].sym] == "quo ted");
}

TEST_CASE("deterministic interning") {
  auto domain = grippers_wf();
  Instance a = dsl::parse_instance(kFig9Instance, domain);
  Instance b = dsl::parse_instance(kFig9Instance, domain);
  CHECK(a.objects == b.objects);
  CHECK(a.init == b.init);
  CHECK(dsl::serialize_instance(a) == dsl::serialize_instance(b));
}

TEST_CASE("generated instances and plans round trip") {
  for (datagen::Variant v :
       {datagen::Variant::GrippersWellFormed, datagen::Variant::ColorsStrips,
        datagen::Variant::LightsOutWellFormed}) {
    datagen::VariantContext ctx = datagen::VariantContext::make(v);
    datagen::GenConfig config;
    config.variant = v;
    for (int trial = 0; trial < 10; ++trial) {
      Rng rng = Rng::substream(4242, trial);
      datagen::GenRecord rec = datagen::gen_valid(ctx, config, 12, rng);
      Instance inst = dsl::parse_instance(dsl::serialize_instance(rec.instance),
                                          ctx.domain);
      CHECK(inst.objects == rec.instance.objects);
      CHECK(inst.init == rec.instance.init);
      CHECK(inst.goal == rec.instance.goal);
      Plan plan =
          dsl::parse_plan(dsl::serialize_plan(rec.instance, rec.plan), inst);
      CHECK(plan.actions == rec.plan.actions);
    }
  }
}
