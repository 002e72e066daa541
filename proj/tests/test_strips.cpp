#include "planlab/strips.hpp"

#include <algorithm>

#include "doctest.h"
#include "planlab/domains.hpp"
#include "planlab/rng.hpp"

using namespace planlab;

namespace {

// Small fixture around the conditional-effects grippers domain: one gripper,
// two balls, two rooms, the heavy ball needing charge.
struct SwapFixture {
  Instance inst;
  ObjId b1, b2, room_a, room_b, g1;
  SchemaId s_move, s_pick, s_drop;

  SwapFixture() {
    auto domain =
        std::make_shared<Domain>(domains::heavy_grippers_conditional());
    inst.domain = domain;
    inst.objects = {"B1", "B2", "RoomA", "RoomB", "G1"};
    b1 = 0;
    b2 = 1;
    room_a = 2;
    room_b = 3;
    g1 = 4;
    const PredId p_room = domain->pred_index("room");
    const PredId p_ball = domain->pred_index("ball");
    const PredId p_grip = domain->pred_index("gripper");
    const PredId p_free = domain->pred_index("free");
    const PredId p_heavy = domain->pred_index("heavy");
    const PredId p_robby = domain->pred_index("atRobby");
    const PredId p_at = domain->pred_index("at");
    inst.init = State({{p_room, {room_a}},
                       {p_room, {room_b}},
                       {p_ball, {b1}},
                       {p_ball, {b2}},
                       {p_grip, {g1}},
                       {p_free, {g1}},
                       {p_heavy, {b1}},
                       {p_at, {b1, room_a}},
                       {p_at, {b2, room_b}},
                       {p_robby, {room_a}}});
    inst.goal = {{{p_at, {b1, room_b}}, true}, {{p_at, {b2, room_a}}, true}};
    inst.validate();
    s_move = domain->schema_index("move");
    s_pick = domain->schema_index("pick");
    s_drop = domain->schema_index("drop");
  }

  GroundAtom at(ObjId b, ObjId r) const {
    return {inst.domain->pred_index("at"), {b, r}};
  }
};

}  // namespace

TEST_CASE("holds is literal satisfaction") {
  SwapFixture f;
  const PredId p_at = f.inst.domain->pred_index("at");
  State s({{p_at, {f.b1, f.room_a}}});
  std::vector<GroundLiteral> pos = {{{p_at, {f.b1, f.room_a}}, true}};
  std::vector<GroundLiteral> neg = {{{p_at, {f.b1, f.room_a}}, false}};
  CHECK(holds(s, pos));
  CHECK_FALSE(holds(s, neg));

  // The swap goal does not hold in the initial state.
  CHECK_FALSE(holds(f.inst.init, f.inst.goal));
}

TEST_CASE("ground_schema enumerates all substitutions") {
  SwapFixture f;
  const Domain& d = *f.inst.domain;
  auto moves = ground_schema(d, f.s_move, 2);
  CHECK(moves.size() == 4);  // includes move(r, r)
  // Lexicographic over object indices.
  CHECK(moves[0].args == std::vector<ObjId>{0, 0});
  CHECK(moves[1].args == std::vector<ObjId>{0, 1});
  CHECK(moves[3].args == std::vector<ObjId>{1, 1});

  auto picks = ground_schema(d, f.s_pick, 5);
  CHECK(picks.size() == 125);

  auto tmpl = domains::lights_out_well_formed(domains::Board(5, 5));
  SchemaId press = tmpl.domain->schema_index("press-00-1");
  REQUIRE(press >= 0);
  auto ground = ground_schema(*tmpl.domain, press, 25);
  CHECK(ground.size() == 1);
}

TEST_CASE("applicability follows preconditions") {
  SwapFixture f;
  // Heavy ball and no charge: picking B1 is not possible, moving is.
  CHECK_FALSE(applicable(f.inst, f.inst.init,
                         {f.s_pick, {f.b1, f.room_a, f.g1}}));
  CHECK(applicable(f.inst, f.inst.init, {f.s_move, {f.room_a, f.room_b}}));
  // Picking the light ball still needs charge in this formulation.
  CHECK_FALSE(applicable(f.inst, f.inst.init,
                         {f.s_pick, {f.b2, f.room_b, f.g1}}));

  // Typed colors actions have no other preconditions.
  auto colors = std::make_shared<Domain>(
      domains::colors(domains::ColorsVariant::Strips));
  Instance ci;
  ci.domain = colors;
  ci.objects = {"bag1", "col1"};
  ci.init = State({{colors->pred_index("bag"), {0}},
                   {colors->pred_index("color"), {1}}});
  CHECK(applicable(ci, ci.init, {colors->schema_index("add"), {1, 0}}));

  // Empty preconditions are applicable in every state.
  Instance ff = domains::flipflop_instance();
  CHECK(applicable(ff, ff.init, {ff.domain->schema_index("a_a"), {0}}));
  CHECK(applicable(ff, State{}, {ff.domain->schema_index("a_e"), {0}}));
}

TEST_CASE("succ applies triggered conditional effects") {
  SwapFixture f;
  const Domain& d = *f.inst.domain;
  const PredId p_carry = d.pred_index("carry");
  const PredId p_charged = d.pred_index("charged");
  const PredId p_free = d.pred_index("free");
  const PredId p_at = d.pred_index("at");

  // drop removes carry and charged, adds at and free.
  State carrying = f.inst.init;
  carrying.erase({p_at, {f.b2, f.room_b}});
  carrying.erase({p_free, {f.g1}});
  carrying.insert({p_carry, {f.b2, f.g1}});
  carrying.insert({p_charged, {}});
  State dropped = succ(f.inst, carrying, {f.s_drop, {f.b2, f.room_a, f.g1}});
  CHECK(dropped.contains({p_at, {f.b2, f.room_a}}));
  CHECK(dropped.contains({p_free, {f.g1}}));
  CHECK_FALSE(dropped.contains({p_carry, {f.b2, f.g1}}));
  CHECK_FALSE(dropped.contains({p_charged, {}}));

  // Picking a heavy ball triggers the discharging branch.
  State ready = f.inst.init;
  ready.insert({p_charged, {}});
  State picked = succ(f.inst, ready, {f.s_pick, {f.b1, f.room_a, f.g1}});
  CHECK(picked.contains({p_carry, {f.b1, f.g1}}));
  CHECK_FALSE(picked.contains({p_charged, {}}));
  // The light ball keeps the charge.
  State picked2 = succ(f.inst, ready, {f.s_pick, {f.b2, f.room_b, f.g1}});
  CHECK(picked2.contains({p_charged, {}}));
}

TEST_CASE("succ flags conflicting triggered effects") {
  Domain d;
  d.predicates = {{"p", 0}, {"q", 0}};
  ActionSchema s;
  s.name = "clash";
  CondEffect on{{ {0, {}, true} }, { {1, {}, true} }};
  CondEffect off{{ {0, {}, true} }, { {1, {}, false} }};
  s.effects = {on, off};
  d.schemas.push_back(s);
  d.validate();
  Instance inst;
  inst.domain = std::make_shared<Domain>(d);
  inst.init = State({GroundAtom{0, {}}});
  CHECK_THROWS_AS(succ(inst, inst.init, {0, {}}), ConflictingEffectsError);
}

TEST_CASE("lights out presses toggle and undo") {
  auto tmpl = domains::lights_out_conditional(domains::Board(3, 3));
  Instance inst = domains::lights_out_instance(tmpl, {});
  const PredId on = tmpl.domain->pred_index("on");
  SchemaId press = tmpl.domain->schema_index("press-11");
  State lit = succ(inst, inst.init, {press, {}});
  // Pressing the center of a dark board lights its closed neighborhood.
  for (int c : tmpl.board.closed_neighborhood(4)) {
    CHECK(lit.contains({on, {c}}));
  }
  CHECK(lit.size() == 5);
  State back = succ(inst, lit, {press, {}});
  CHECK(back == inst.init);

  // The same double-press identity from random states.
  Rng rng(7);
  for (int t = 0; t < 50; ++t) {
    std::vector<int> cells;
    for (int c = 0; c < 9; ++c) {
      if (rng.chance(0.5)) cells.push_back(c);
    }
    Instance random_inst = domains::lights_out_instance(tmpl, cells);
    const int cell = static_cast<int>(rng.below(9));
    SchemaId s = tmpl.domain->schema_index(
        "press-" + std::to_string(cell / 3) + std::to_string(cell % 3));
    State s1 = succ(random_inst, random_inst.init, {s, {}});
    State s2 = succ(random_inst, s1, {s, {}});
    CHECK(s2 == random_inst.init);
  }
}

TEST_CASE("simulate produces the verdict trichotomy") {
  SwapFixture f;
  // The swap plan from the caption: move, ferry the light ball, recharge,
  // ferry the heavy one.
  Plan plan;
  plan.actions = {{f.s_move, {f.room_a, f.room_b}},
                  {f.s_pick, {f.b2, f.room_b, f.g1}},
                  {f.s_move, {f.room_b, f.room_a}},
                  {f.s_drop, {f.b2, f.room_a, f.g1}},
                  {f.s_move, {f.room_a, f.room_b}},
                  {f.s_move, {f.room_b, f.room_a}},
                  {f.s_pick, {f.b1, f.room_a, f.g1}},
                  {f.s_move, {f.room_a, f.room_b}},
                  {f.s_drop, {f.b1, f.room_b, f.g1}}};
  SimResult sim = simulate(f.inst, plan);
  CHECK(sim.verdict.valid());
  CHECK(sim.trace.size() == plan.size() + 1);

  // Cutting the final drop leaves a goal unsatisfied.
  Plan incomplete = plan;
  incomplete.actions.pop_back();
  Verdict v = simulate(f.inst, incomplete).verdict;
  CHECK(v.status == Verdict::Status::Incomplete);
  REQUIRE(v.unsat_goals.size() == 1);
  CHECK(v.unsat_goals[0].atom == f.at(f.b1, f.room_b));

  // Dropping an uncarried ball is not executable.
  Plan broken = plan;
  broken.actions[1] = {f.s_drop, {f.b1, f.room_b, f.g1}};
  Verdict nv = simulate(f.inst, broken).verdict;
  CHECK(nv.status == Verdict::Status::NonExecutable);
  CHECK(nv.step == 2);
  REQUIRE(nv.violated.has_value());
  CHECK_FALSE(nv.violated->positive == false);

  // Malformed plans are rejected loudly.
  Plan malformed;
  malformed.actions = {{99, {}}};
  CHECK_THROWS_AS(simulate(f.inst, malformed), UnknownSymbolError);
}

TEST_CASE("classify_domain separates the subclasses") {
  DomainClass ce = classify_domain(domains::heavy_grippers_conditional());
  CHECK(ce.conditional_effects);
  CHECK_FALSE(ce.strips);
  CHECK_FALSE(ce.delete_free);

  for (auto variant :
       {domains::ColorsVariant::Strips, domains::ColorsVariant::WellFormed}) {
    DomainClass c = classify_domain(domains::colors(variant));
    CHECK(c.strips);
    CHECK_FALSE(c.delete_free);
    CHECK_FALSE(c.conditional_effects);
  }

  DomainClass wf = classify_domain(
      domains::heavy_grippers(domains::GrippersVariant::WellFormed));
  CHECK(wf.strips);
  CHECK_FALSE(wf.delete_free);
  DomainClass df = classify_domain(
      domains::heavy_grippers(domains::GrippersVariant::DeleteFree));
  CHECK(df.strips);
  CHECK(df.delete_free);
}

TEST_CASE("delete-free traces grow monotonically") {
  auto domain = std::make_shared<Domain>(
      domains::heavy_grippers(domains::GrippersVariant::DeleteFree));
  Instance inst;
  inst.domain = domain;
  inst.objects = {"ball0", "roomA", "roomB", "g0", "g1"};
  const PredId p_room = domain->pred_index("room");
  const PredId p_ball = domain->pred_index("ball");
  const PredId p_grip = domain->pred_index("gripper");
  const PredId p_free = domain->pred_index("free");
  const PredId p_at = domain->pred_index("at");
  const PredId p_robby = domain->pred_index("atRobby");
  inst.init = State({{p_room, {1}},
                     {p_room, {2}},
                     {p_ball, {0}},
                     {p_grip, {3}},
                     {p_grip, {4}},
                     {p_free, {3}},
                     {p_free, {4}},
                     {p_at, {0, 1}},
                     {p_robby, {1}}});
  Plan plan;
  plan.actions = {{domain->schema_index("move"), {1, 2}},
                  {domain->schema_index("move"), {2, 1}},
                  {domain->schema_index("pick"), {0, 1, 3}},
                  {domain->schema_index("move"), {1, 2}},
                  {domain->schema_index("drop"), {0, 2, 3}},
                  {domain->schema_index("pick"), {0, 1, 4}}};
  SimResult sim = simulate(inst, plan);
  REQUIRE(sim.verdict.status != Verdict::Status::NonExecutable);
  for (std::size_t i = 0; i + 1 < sim.trace.size(); ++i) {
    const auto& small = sim.trace[i].atoms();
    const auto& big = sim.trace[i + 1].atoms();
    CHECK(std::includes(big.begin(), big.end(), small.begin(), small.end()));
  }
}

TEST_CASE("count identity along trace-well-formed executions") {
  // Along executable well-formed traces, membership of any proposition is
  // the initial flag plus adds minus deletes, and stays within {0, 1}.
  auto domain = std::make_shared<Domain>(
      domains::colors(domains::ColorsVariant::WellFormed));
  Instance inst;
  inst.domain = domain;
  inst.objects = {"b0", "b1", "c0", "c1"};
  inst.init = State({{domain->pred_index("bag"), {0}},
                     {domain->pred_index("bag"), {1}},
                     {domain->pred_index("color"), {2}},
                     {domain->pred_index("color"), {3}}});
  const SchemaId s_add = domain->schema_index("add");
  const SchemaId s_rm = domain->schema_index("remove");
  const PredId p_has = domain->pred_index("hasColor");

  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    State cur = inst.init;
    Plan plan;
    for (int step = 0; step < 8; ++step) {
      std::vector<GroundAction> cands;
      for (ObjId c : {2, 3}) {
        for (ObjId b : {0, 1}) {
          if (cur.contains({p_has, {b, c}})) {
            cands.push_back({s_rm, {c, b}});
          } else {
            cands.push_back({s_add, {c, b}});
          }
        }
      }
      GroundAction a = cands[rng.below(cands.size())];
      cur = succ(inst, cur, a);
      plan.actions.push_back(a);
    }
    CHECK(audit_well_formed_trace(inst, plan).empty());

    SimResult sim = simulate(inst, plan);
    for (ObjId b : {0, 1}) {
      for (ObjId c : {2, 3}) {
        GroundAtom atom{p_has, {b, c}};
        int net = inst.init.contains(atom) ? 1 : 0;
        for (std::size_t i = 0; i < plan.size(); ++i) {
          const GroundAction& a = plan.actions[i];
          if (a.args[0] == c && a.args[1] == b) {
            net += a.schema == s_add ? 1 : -1;
          }
          CHECK((net == 0 || net == 1));
          CHECK(net == (sim.trace[i + 1].contains(atom) ? 1 : 0));
        }
      }
    }
  }
}

TEST_CASE("audit reports effects that do not change value") {
  auto domain = std::make_shared<Domain>(
      domains::colors(domains::ColorsVariant::Strips));
  Instance inst;
  inst.domain = domain;
  inst.objects = {"b0", "c0"};
  inst.init = State({{domain->pred_index("bag"), {0}},
                     {domain->pred_index("color"), {1}}});
  const SchemaId s_add = domain->schema_index("add");

  Plan empty;
  CHECK(audit_well_formed_trace(inst, empty).empty());

  Plan dup;
  dup.actions = {{s_add, {1, 0}}, {s_add, {1, 0}}};
  auto violations = audit_well_formed_trace(inst, dup);
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].step == 2);
  CHECK(violations[0].literal.positive);
}
