// dump_assets.cpp
//
// Writes the canonical domain, instance, and plan files under assets/.
// Run from the repository root after changing any builtin constructor.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "planlab/domains.hpp"
#include "planlab/dsl.hpp"

using namespace planlab;

namespace {

void write(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
  std::cout << path.string() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  namespace fs = std::filesystem;
  fs::path root = argc > 1 ? argv[1] : "assets/domains";
  fs::create_directories(root);

  write(root / "grippers-wf.pdom",
        dsl::serialize_domain(
            domains::heavy_grippers(domains::GrippersVariant::WellFormed)));
  write(root / "grippers-df.pdom",
        dsl::serialize_domain(
            domains::heavy_grippers(domains::GrippersVariant::DeleteFree)));
  write(root / "grippers-ce.pdom",
        dsl::serialize_domain(domains::heavy_grippers_conditional()));
  write(root / "colors-wf.pdom",
        dsl::serialize_domain(domains::colors(domains::ColorsVariant::WellFormed)));
  write(root / "colors-strips.pdom",
        dsl::serialize_domain(domains::colors(domains::ColorsVariant::Strips)));

  {
    auto tmpl = domains::lights_out_conditional(domains::Board(5, 5));
    write(root / "lightsout-ce-5x5.pdom", dsl::serialize_domain(*tmpl.domain));
    Instance sample = domains::lights_out_instance(tmpl, {0, 6, 12, 18, 24});
    write(root / "lightsout-ce-5x5-diagonal.pinst",
          dsl::serialize_instance(sample));
  }
  {
    auto tmpl = domains::lights_out_well_formed(domains::Board(5, 5));
    write(root / "lightsout-wf-5x5.pdom", dsl::serialize_domain(*tmpl.domain));
    Instance sample = domains::lights_out_instance(tmpl, {0, 6, 12, 18, 24});
    write(root / "lightsout-wf-5x5-diagonal.pinst",
          dsl::serialize_instance(sample));
  }
  {
    Instance ff = domains::flipflop_instance();
    write(root / "flipflop.pdom", dsl::serialize_domain(*ff.domain));
    write(root / "flipflop.pinst", dsl::serialize_instance(ff));
  }

  // The ball-swap showcase: one gripper, a heavy and a light ball.
  {
    auto domain =
        std::make_shared<Domain>(domains::heavy_grippers_conditional());
    Instance inst;
    inst.domain = domain;
    inst.objects = {"B1", "B2", "RoomA", "RoomB", "G1"};
    const PredId room = domain->pred_index("room"),
                 ball = domain->pred_index("ball"),
                 grip = domain->pred_index("gripper"),
                 fre = domain->pred_index("free"),
                 heavy = domain->pred_index("heavy"),
                 robby = domain->pred_index("atRobby"),
                 at = domain->pred_index("at");
    inst.init = State({{room, {2}},
                       {room, {3}},
                       {ball, {0}},
                       {ball, {1}},
                       {grip, {4}},
                       {fre, {4}},
                       {heavy, {0}},
                       {at, {0, 2}},
                       {at, {1, 3}},
                       {robby, {2}}});
    inst.goal = {{{at, {0, 3}}, true}, {{at, {1, 2}}, true}};
    inst.validate();
    write(root / "grippers-swap.pinst", dsl::serialize_instance(inst));
    Plan plan = dsl::parse_plan(R"((plan
      (move RoomA RoomB) (pick B2 RoomB G1) (move RoomB RoomA)
      (drop B2 RoomA G1) (move RoomA RoomB) (move RoomB RoomA)
      (pick B1 RoomA G1) (move RoomA RoomB) (drop B1 RoomB G1)))",
                               inst);
    if (!simulate(inst, plan).verdict.valid()) throw Error("swap plan broken");
    write(root / "grippers-swap.pplan", dsl::serialize_plan(inst, plan));
  }

  // The nine-object grippers record with its three plan variants.
  {
    auto domain = std::make_shared<Domain>(
        domains::heavy_grippers(domains::GrippersVariant::WellFormed));
    Instance inst = dsl::parse_instance(R"((instance
      (objects object_237 object_223 object_100 object_154 object_280
               object_113 object_94 object_7 object_76)
      (init (atRobby object_280)
            (gripper object_237) (gripper object_223)
            (free object_237) (free object_223)
            (room object_100) (room object_154) (room object_280)
            (room object_113)
            (ball object_94) (ball object_7) (ball object_76)
            (heavy object_94)
            (at object_94 object_100) (at object_7 object_154)
            (at object_76 object_280))
      (goal (at object_94 object_280) (at object_7 object_154)
            (at object_76 object_154))))",
                                        domain);
    write(root / "grippers-nine.pinst", dsl::serialize_instance(inst));
    auto plan = [&](const char* text) { return dsl::parse_plan(text, inst); };
    write(root / "grippers-nine-valid.pplan",
          dsl::serialize_plan(inst, plan(R"((plan
      (pick object_76 object_280 object_223)
      (move object_280 object_100)
      (pickHeavy object_94 object_100 object_237)
      (move object_100 object_154)
      (drop object_76 object_154 object_223)
      (move object_154 object_280)
      (drop object_94 object_280 object_237)
      (move object_280 object_113)))")));
    write(root / "grippers-nine-incomplete.pplan",
          dsl::serialize_plan(inst, plan(R"((plan
      (pick object_76 object_280 object_223)
      (move object_280 object_100)
      (pickHeavy object_94 object_100 object_237)
      (move object_100 object_154)
      (drop object_76 object_154 object_223)
      (move object_154 object_113)
      (drop object_94 object_113 object_237)))")));
    write(root / "grippers-nine-nonexecutable.pplan",
          dsl::serialize_plan(inst, plan(R"((plan
      (pick object_76 object_280 object_223)
      (move object_280 object_100)
      (pickHeavy object_94 object_100 object_237)
      (move object_100 object_154)
      (drop object_76 object_154 object_223)
      (move object_154 object_280)
      (drop object_94 object_280 object_237)
      (drop object_76 object_280 object_223)))")));
  }

  // The two-bag colors record separating the variants.
  {
    auto domain = std::make_shared<Domain>(
        domains::colors(domains::ColorsVariant::WellFormed));
    Instance inst = dsl::parse_instance(R"((instance
      (objects object_5 object_6 object_3 object_8)
      (init (bag object_5) (bag object_6) (color object_3) (color object_8))
      (goal (hasColor object_5 object_3) (hasColor object_6 object_8))))",
                                        domain);
    write(root / "colors-pair.pinst", dsl::serialize_instance(inst));
    auto plan = [&](const char* text) { return dsl::parse_plan(text, inst); };
    write(root / "colors-pair-wf-valid.pplan",
          dsl::serialize_plan(inst, plan(R"((plan
      (add object_3 object_5) (add object_8 object_5)
      (remove object_3 object_5) (add object_8 object_6)
      (add object_3 object_5) (remove object_8 object_5)))")));
    write(root / "colors-pair-wf-incomplete.pplan",
          dsl::serialize_plan(inst, plan(R"((plan
      (add object_3 object_5) (add object_8 object_5)
      (remove object_3 object_5) (add object_8 object_6)
      (add object_3 object_6) (remove object_8 object_5)))")));
    write(root / "colors-pair-strips-valid.pplan",
          dsl::serialize_plan(inst, plan(R"((plan
      (add object_3 object_5) (add object_8 object_5)
      (add object_8 object_5) (add object_8 object_6)
      (remove object_8 object_5) (remove object_3 object_6)))")));
    write(root / "colors-pair-strips-incomplete.pplan",
          dsl::serialize_plan(inst, plan(R"((plan
      (add object_3 object_5) (add object_8 object_5)
      (add object_8 object_5) (remove object_8 object_5)
      (remove object_8 object_5) (remove object_3 object_6)))")));
  }
  return 0;
}
