#include "planlab/datagen.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "planlab/dsl.hpp"

namespace planlab::datagen {

using nlohmann::ordered_json;

std::string variant_id(Variant v) {
  switch (v) {
    case Variant::GrippersWellFormed: return "grippers-wf";
    case Variant::GrippersDeleteFree: return "grippers-df";
    case Variant::ColorsWellFormed: return "colors-wf";
    case Variant::ColorsStrips: return "colors-strips";
    case Variant::LightsOutWellFormed: return "lightsout-wf";
    case Variant::LightsOutConditional: return "lightsout-ce";
  }
  return "?";
}

std::optional<Variant> variant_from_id(const std::string& id) {
  for (Variant v :
       {Variant::GrippersWellFormed, Variant::GrippersDeleteFree,
        Variant::ColorsWellFormed, Variant::ColorsStrips,
        Variant::LightsOutWellFormed, Variant::LightsOutConditional}) {
    if (variant_id(v) == id) return v;
  }
  return std::nullopt;
}

bool variant_supports_nonexecutable(Variant v) {
  return v == Variant::GrippersWellFormed || v == Variant::GrippersDeleteFree;
}

VariantContext VariantContext::make(Variant v, int board_rows,
                                    int board_cols) {
  VariantContext ctx;
  ctx.variant = v;
  switch (v) {
    case Variant::GrippersWellFormed:
      ctx.domain = std::make_shared<Domain>(
          domains::heavy_grippers(domains::GrippersVariant::WellFormed));
      ctx.layout = compile::make_layout_ext(ctx.domain);
      break;
    case Variant::GrippersDeleteFree:
      ctx.domain = std::make_shared<Domain>(
          domains::heavy_grippers(domains::GrippersVariant::DeleteFree));
      ctx.layout = compile::make_layout_ext(ctx.domain);
      break;
    case Variant::ColorsWellFormed:
      ctx.domain = std::make_shared<Domain>(
          domains::colors(domains::ColorsVariant::WellFormed));
      ctx.layout = compile::make_layout_ext(ctx.domain);
      break;
    case Variant::ColorsStrips:
      ctx.domain = std::make_shared<Domain>(
          domains::colors(domains::ColorsVariant::Strips));
      ctx.layout = compile::make_layout_ext(ctx.domain);
      break;
    case Variant::LightsOutWellFormed: {
      ctx.lights = domains::lights_out_well_formed(
          domains::Board(board_rows, board_cols));
      ctx.domain = ctx.lights->domain;
      ctx.layout = compile::make_layout_sigma(ctx.domain, ctx.lights->objects);
      break;
    }
    case Variant::LightsOutConditional: {
      ctx.lights = domains::lights_out_conditional(
          domains::Board(board_rows, board_cols));
      ctx.domain = ctx.lights->domain;
      ctx.layout = compile::make_layout_sigma(ctx.domain, ctx.lights->objects,
                                              /*negated_goals=*/true);
      break;
    }
  }
  return ctx;
}

namespace {

std::vector<std::string> sample_names(int count, int pool, Rng& rng) {
  if (count > pool) throw Error("object name pool too small");
  std::vector<int> ids(pool);
  for (int i = 0; i < pool; ++i) ids[i] = i;
  for (int i = 0; i < count; ++i) {
    int j = static_cast<int>(rng.range(i, pool - 1));
    std::swap(ids[i], ids[j]);
  }
  std::vector<std::string> names(count);
  for (int i = 0; i < count; ++i) {
    names[i] = "object_" + std::to_string(ids[i]);
  }
  return names;
}

int sample_fraction_range(Rng& rng, double lo_f, double hi_f, int base,
                          int min_value) {
  int lo = std::max(min_value, static_cast<int>(std::ceil(lo_f * base)));
  int hi = std::max(lo, static_cast<int>(std::floor(hi_f * base)));
  return static_cast<int>(rng.range(lo, hi));
}

// ---------------------------------------------------------------------------
// Heavy Grippers
// ---------------------------------------------------------------------------

// Generator-side mirror of a grippers state. The authoritative semantics stay
// in simulate(); every emitted plan is re-validated against it.
struct GripperWorld {
  const Instance* inst;
  bool well_formed;
  int n_balls, n_rooms;
  // Object ids: balls [0, n_balls), rooms [n_balls, n_balls+n_rooms),
  // grippers after that.
  std::vector<bool> heavy;          // per ball
  std::vector<int> ball_room;       // per ball; -1 while carried
  std::vector<int> carried_by;      // per ball; -1 if not carried
  std::vector<int> gripper_ball;    // per gripper; -1 if free
  int robby = 0;                    // room index (0-based room ordinal)
  bool charged = false;

  int carried() const {
    int c = 0;
    for (int g : gripper_ball) c += g >= 0 ? 1 : 0;
    return c;
  }
  int cleanup_cost() const {
    int k = carried();
    if (k == 0) return 0;
    return 2 * k - (charged ? 1 : 0);
  }
};

struct GAction {
  enum Kind { Move, Pick, PickHeavy, Drop } kind;
  int a = 0, b = 0;  // Move: room from,to; Pick/Drop: ball, gripper
};

void apply(GripperWorld& w, const GAction& act) {
  switch (act.kind) {
    case GAction::Move:
      w.robby = act.b;
      w.charged = true;
      break;
    case GAction::Pick:
    case GAction::PickHeavy:
      w.ball_room[act.a] = -1;
      w.carried_by[act.a] = act.b;
      w.gripper_ball[act.b] = act.a;
      if (act.kind == GAction::PickHeavy) w.charged = false;
      break;
    case GAction::Drop:
      w.ball_room[act.a] = w.robby;
      w.carried_by[act.a] = -1;
      w.gripper_ball[act.b] = -1;
      w.charged = false;
      break;
  }
}

// Applicable actions per the well-formed preconditions on the mirror state.
std::vector<GAction> wf_applicable(const GripperWorld& w) {
  std::vector<GAction> out;
  if (!w.charged) {
    for (int r = 0; r < w.n_rooms; ++r) {
      if (r != w.robby) out.push_back({GAction::Move, w.robby, r});
    }
  }
  std::vector<int> free_grippers;
  for (std::size_t g = 0; g < w.gripper_ball.size(); ++g) {
    if (w.gripper_ball[g] < 0) free_grippers.push_back(static_cast<int>(g));
  }
  for (int ball = 0; ball < w.n_balls; ++ball) {
    if (w.ball_room[ball] != w.robby) continue;
    if (w.heavy[ball] && !w.charged) continue;
    for (int g : free_grippers) {
      out.push_back({w.heavy[ball] ? GAction::PickHeavy : GAction::Pick,
                     ball, g});
    }
  }
  if (w.charged) {
    for (std::size_t g = 0; g < w.gripper_ball.size(); ++g) {
      if (w.gripper_ball[g] >= 0) {
        out.push_back({GAction::Drop, w.gripper_ball[g],
                       static_cast<int>(g)});
      }
    }
  }
  return out;
}

// Exact exhaustive feasibility for the endgame: can the walk be extended by
// exactly `r` more well-formed actions ending with nothing carried?
// Branching is reduced to representatives per effect class.
bool wf_feasible(const GripperWorld& w, int r) {
  if (r == 0) return w.carried() == 0;
  if (w.cleanup_cost() > r) return false;
  std::vector<GAction> cands;
  // Drops and picks: one representative each.
  std::vector<GAction> all = wf_applicable(w);
  bool took_drop = false, took_pick = false, took_pick_heavy = false;
  // Move representatives: one target per room class.
  bool took_move_light = false, took_move_heavy = false, took_move_empty = false;
  auto room_has = [&](int room, bool want_heavy) {
    for (int ball = 0; ball < w.n_balls; ++ball) {
      if (w.ball_room[ball] == room && w.heavy[ball] == want_heavy) return true;
    }
    return false;
  };
  for (const GAction& a : all) {
    switch (a.kind) {
      case GAction::Drop:
        if (took_drop) continue;
        took_drop = true;
        break;
      case GAction::Pick:
        if (took_pick) continue;
        took_pick = true;
        break;
      case GAction::PickHeavy:
        if (took_pick_heavy) continue;
        took_pick_heavy = true;
        break;
      case GAction::Move: {
        bool light = room_has(a.b, false), heavy = room_has(a.b, true);
        if (light && !took_move_light) {
          took_move_light = true;
        } else if (heavy && !took_move_heavy) {
          took_move_heavy = true;
        } else if (!light && !heavy && !took_move_empty) {
          took_move_empty = true;
        } else {
          continue;
        }
        break;
      }
    }
    cands.push_back(a);
  }
  for (const GAction& a : cands) {
    GripperWorld next = w;
    apply(next, a);
    if (wf_feasible(next, r - 1)) return true;
  }
  return false;
}

constexpr int kEndgameHorizon = 4;

bool wf_safe(const GripperWorld& w, int remaining) {
  if (remaining <= kEndgameHorizon) return wf_feasible(w, remaining);
  return w.cleanup_cost() <= remaining - 2 && !wf_applicable(w).empty();
}

struct GrippersSetup {
  Instance instance;
  GripperWorld world;
  std::vector<ObjId> ball_obj, room_obj, gripper_obj;
};

GrippersSetup grippers_instance(const VariantContext& ctx,
                                const GenConfig& config, int length,
                                Rng& rng) {
  const int n_grippers = 2;
  int n_balls = sample_fraction_range(rng, 0.6, 0.85, length, 1);
  if (config.max_objects > 0) {
    // Clamp so balls plus rooms plus grippers stays under the cap.
    n_balls = std::min(n_balls,
                       std::max(1, (config.max_objects - n_grippers) * 2 / 3));
  }
  const int n_heavy = sample_fraction_range(rng, 0.45, 0.85, n_balls, 0);
  int n_rooms = sample_fraction_range(rng, 0.2, 0.5, n_balls, 2);
  if (config.max_objects > 0) {
    n_rooms = std::max(
        2, std::min(n_rooms, config.max_objects - n_grippers - n_balls));
  }

  GrippersSetup setup;
  Instance& inst = setup.instance;
  inst.domain = ctx.domain;
  inst.objects =
      sample_names(n_balls + n_rooms + n_grippers, config.name_pool, rng);

  const Domain& d = *ctx.domain;
  const PredId p_room = d.pred_index("room"), p_ball = d.pred_index("ball");
  const PredId p_grip = d.pred_index("gripper"), p_free = d.pred_index("free");
  const PredId p_heavy = d.pred_index("heavy");
  const PredId p_robby = d.pred_index("atRobby"), p_at = d.pred_index("at");

  for (int i = 0; i < n_balls; ++i) setup.ball_obj.push_back(i);
  for (int i = 0; i < n_rooms; ++i) setup.room_obj.push_back(n_balls + i);
  for (int i = 0; i < n_grippers; ++i) {
    setup.gripper_obj.push_back(n_balls + n_rooms + i);
  }

  GripperWorld& w = setup.world;
  w.inst = &inst;
  w.well_formed = ctx.variant == Variant::GrippersWellFormed;
  w.n_balls = n_balls;
  w.n_rooms = n_rooms;
  w.heavy.assign(n_balls, false);
  {
    std::vector<int> order(n_balls);
    for (int i = 0; i < n_balls; ++i) order[i] = i;
    for (int i = 0; i < n_heavy; ++i) {
      int j = static_cast<int>(rng.range(i, n_balls - 1));
      std::swap(order[i], order[j]);
      w.heavy[order[i]] = true;
    }
  }
  w.ball_room.resize(n_balls);
  for (int i = 0; i < n_balls; ++i) {
    w.ball_room[i] = static_cast<int>(rng.range(0, n_rooms - 1));
  }
  w.carried_by.assign(n_balls, -1);
  w.gripper_ball.assign(n_grippers, -1);
  w.robby = static_cast<int>(rng.range(0, n_rooms - 1));
  w.charged = false;

  std::vector<GroundAtom> atoms;
  for (int i = 0; i < n_rooms; ++i) atoms.push_back({p_room, {setup.room_obj[i]}});
  for (int i = 0; i < n_balls; ++i) {
    atoms.push_back({p_ball, {setup.ball_obj[i]}});
    if (w.heavy[i]) atoms.push_back({p_heavy, {setup.ball_obj[i]}});
    atoms.push_back({p_at, {setup.ball_obj[i], setup.room_obj[w.ball_room[i]]}});
  }
  for (int i = 0; i < n_grippers; ++i) {
    atoms.push_back({p_grip, {setup.gripper_obj[i]}});
    atoms.push_back({p_free, {setup.gripper_obj[i]}});
  }
  atoms.push_back({p_robby, {setup.room_obj[w.robby]}});
  inst.init = State(std::move(atoms));
  return setup;
}

// Best-effort mirror update for actions sampled from the monotone pool; the
// mirror only steers sampling, never validity.
void force_apply_df(GrippersSetup& s, const GroundAction& ga) {
  const Domain& d = *s.instance.domain;
  GripperWorld& w = s.world;
  const std::string& name = d.schemas[ga.schema].name;
  auto room_ord = [&](ObjId r) {
    for (std::size_t i = 0; i < s.room_obj.size(); ++i) {
      if (s.room_obj[i] == r) return static_cast<int>(i);
    }
    return 0;
  };
  auto ball_ord = [&](ObjId b) {
    for (std::size_t i = 0; i < s.ball_obj.size(); ++i) {
      if (s.ball_obj[i] == b) return static_cast<int>(i);
    }
    return 0;
  };
  auto grip_ord = [&](ObjId g) {
    for (std::size_t i = 0; i < s.gripper_obj.size(); ++i) {
      if (s.gripper_obj[i] == g) return static_cast<int>(i);
    }
    return 0;
  };
  if (name == "move") {
    w.robby = room_ord(ga.args[1]);
    w.charged = true;
  } else if (name == "pick" || name == "pickHeavy") {
    int b = ball_ord(ga.args[0]), g = grip_ord(ga.args[2]);
    if (w.gripper_ball[g] < 0 && w.carried_by[b] < 0) {
      w.ball_room[b] = -1;
      w.carried_by[b] = g;
      w.gripper_ball[g] = b;
    }
    if (name == "pickHeavy") w.charged = false;
  } else if (name == "drop") {
    int b = ball_ord(ga.args[0]), g = grip_ord(ga.args[2]);
    if (w.gripper_ball[g] == b) {
      w.gripper_ball[g] = -1;
      w.carried_by[b] = -1;
      w.ball_room[b] = room_ord(ga.args[1]);
    }
    w.charged = false;
  }
}

GroundAction to_ground(const VariantContext& ctx, const GrippersSetup& s,
                       const GAction& a) {
  const Domain& d = *ctx.domain;
  GroundAction g;
  switch (a.kind) {
    case GAction::Move:
      g.schema = d.schema_index("move");
      g.args = {s.room_obj[a.a], s.room_obj[a.b]};
      break;
    case GAction::Pick:
    case GAction::PickHeavy: {
      g.schema = d.schema_index(a.kind == GAction::Pick ? "pick" : "pickHeavy");
      int room = s.world.ball_room[a.a];
      g.args = {s.ball_obj[a.a], s.room_obj[room], s.gripper_obj[a.b]};
      break;
    }
    case GAction::Drop:
      g.schema = d.schema_index("drop");
      g.args = {s.ball_obj[a.a], s.room_obj[s.world.robby],
                s.gripper_obj[a.b]};
      break;
  }
  return g;
}

}  // namespace

GenRecord gen_grippers(const VariantContext& ctx, const GenConfig& config,
                       int length, Rng& rng) {
  const bool wf = ctx.variant == Variant::GrippersWellFormed;
  const Domain& d = *ctx.domain;
  for (int attempt = 0; attempt < 80; ++attempt) {
    GrippersSetup setup = grippers_instance(ctx, config, length, rng);
    GripperWorld& w = setup.world;
    Plan plan;
    State df_state = setup.instance.init;
    bool stuck = false;
    for (int step = 0; step < length && !stuck; ++step) {
      const int remaining = length - step - 1;
      std::vector<GAction> cands = wf_applicable(w);
      if (wf) {
        // Keep only moves that leave an exact-length completion reachable.
        std::vector<GAction> order = cands;
        for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) {
          std::swap(order[i], order[rng.range(0, i)]);
        }
        bool chosen = false;
        for (const GAction& a : order) {
          GripperWorld next = w;
          apply(next, a);
          if (wf_safe(next, remaining)) {
            GroundAction ga = to_ground(ctx, setup, a);
            apply(w, a);
            plan.actions.push_back(ga);
            chosen = true;
            break;
          }
        }
        if (!chosen) stuck = true;
        continue;
      }
      // Delete-free: with probability df_mix sample from the stricter pool
      // tracked on the mirror (which applies deletes), otherwise from the
      // monotone state's own applicable actions.
      bool from_strict = !cands.empty() && rng.chance(config.df_mix);
      GroundAction ga;
      bool mirror_applied = false;
      if (from_strict) {
        const GAction a = cands[rng.below(cands.size())];
        ga = to_ground(ctx, setup, a);
        apply(w, a);
        mirror_applied = true;
      } else {
        // Category-weighted sampling over the monotone applicable set.
        const PredId p_robby = d.pred_index("atRobby"),
                     p_at = d.pred_index("at"),
                     p_carry = d.pred_index("carry"),
                     p_charged = d.pred_index("charged"),
                     p_heavy = d.pred_index("heavy");
        std::vector<ObjId> robby_rooms;
        for (ObjId r : setup.room_obj) {
          if (df_state.contains({p_robby, {r}})) robby_rooms.push_back(r);
        }
        const bool charged = df_state.contains({p_charged, {}});
        std::vector<std::pair<ObjId, ObjId>> pickable;  // ball, room
        for (ObjId ball : setup.ball_obj) {
          bool heavy = df_state.contains({p_heavy, {ball}});
          if (heavy && !charged) continue;
          for (ObjId r : robby_rooms) {
            if (df_state.contains({p_at, {ball, r}})) pickable.push_back({ball, r});
          }
        }
        std::vector<std::pair<ObjId, ObjId>> droppable;  // ball, gripper
        for (ObjId ball : setup.ball_obj) {
          for (ObjId g : setup.gripper_obj) {
            if (df_state.contains({p_carry, {ball, g}})) droppable.push_back({ball, g});
          }
        }
        std::vector<int> kinds;
        kinds.push_back(0);  // move is always available
        if (!pickable.empty()) kinds.push_back(1);
        if (!droppable.empty()) kinds.push_back(2);
        int kind = kinds[rng.below(kinds.size())];
        if (kind == 0) {
          ObjId from = robby_rooms[rng.below(robby_rooms.size())];
          ObjId to = setup.room_obj[rng.below(setup.room_obj.size())];
          ga = {d.schema_index("move"), {from, to}};
        } else if (kind == 1) {
          auto [ball, room] = pickable[rng.below(pickable.size())];
          bool heavy = df_state.contains({p_heavy, {ball}});
          ObjId g = setup.gripper_obj[rng.below(setup.gripper_obj.size())];
          ga = {d.schema_index(heavy ? "pickHeavy" : "pick"), {ball, room, g}};
        } else {
          auto [ball, g] = droppable[rng.below(droppable.size())];
          ObjId room = robby_rooms[rng.below(robby_rooms.size())];
          ga = {d.schema_index("drop"), {ball, room, g}};
        }
      }
      if (!applicable(setup.instance, df_state, ga)) {
        stuck = true;  // indicates a mirror/state mismatch; resample
        break;
      }
      if (!mirror_applied) force_apply_df(setup, ga);
      df_state = succ(setup.instance, df_state, ga);
      plan.actions.push_back(ga);
    }
    if (stuck || static_cast<int>(plan.size()) != length) continue;

    // Goal: the ball locations reached by the walk.
    SimResult sim = simulate(setup.instance, plan);
    if (sim.verdict.status == Verdict::Status::NonExecutable) continue;
    const State& final_state = sim.trace.back();
    const PredId p_at = d.pred_index("at");
    Instance inst = setup.instance;
    for (const GroundAtom& a : final_state.atoms()) {
      if (a.pred == p_at) inst.goal.push_back({a, true});
    }
    if (wf) {
      bool carried_left = false;
      for (int g : setup.world.gripper_ball) carried_left |= g >= 0;
      if (carried_left) continue;
    }
    if (!simulate(inst, plan).verdict.valid()) continue;
    return {std::move(inst), std::move(plan)};
  }
  throw RetryExhaustedError("grippers walk could not be completed");
}

GenRecord gen_colors(const VariantContext& ctx, const GenConfig& config,
                     int length, Rng& rng) {
  const Domain& d = *ctx.domain;
  const bool wf = ctx.variant == Variant::ColorsWellFormed;

  // Bag/color counts: the number of pairs tracks a quarter of the plan
  // length, with the two factors as balanced as possible.
  const int target = std::max(1, (length + 2) / 4);
  int best_a = 1, best_b = target, best_diff = target, best_dev = 0;
  for (int dev = -1; dev <= 1; ++dev) {
    int t = target + dev;
    if (t < 1) continue;
    for (int a = 1; a * a <= t; ++a) {
      if (t % a) continue;
      int b = t / a;
      if (b - a < best_diff ||
          (b - a == best_diff && std::abs(dev) < std::abs(best_dev))) {
        best_diff = b - a;
        best_a = a;
        best_b = b;
        best_dev = dev;
      }
    }
  }
  int n_bags = best_a, n_colors = best_b;
  if (rng.chance(0.5)) std::swap(n_bags, n_colors);

  Instance inst;
  inst.domain = ctx.domain;
  inst.objects = sample_names(n_bags + n_colors, config.name_pool, rng);
  const PredId p_bag = d.pred_index("bag"), p_color = d.pred_index("color");
  const PredId p_has = d.pred_index("hasColor");
  std::vector<GroundAtom> atoms;
  std::vector<ObjId> bags, colors_;
  for (int i = 0; i < n_bags; ++i) {
    bags.push_back(i);
    atoms.push_back({p_bag, {i}});
  }
  for (int i = 0; i < n_colors; ++i) {
    colors_.push_back(n_bags + i);
    atoms.push_back({p_color, {n_bags + i}});
  }
  inst.init = State(std::move(atoms));

  const SchemaId s_add = d.schema_index("add"), s_rm = d.schema_index("remove");
  State cur = inst.init;
  Plan plan;
  for (int step = 0; step < length; ++step) {
    std::vector<GroundAction> cands;
    for (ObjId c : colors_) {
      for (ObjId b : bags) {
        bool present = cur.contains({p_has, {b, c}});
        if (!wf || !present) cands.push_back({s_add, {c, b}});
        if (!wf || present) cands.push_back({s_rm, {c, b}});
      }
    }
    const GroundAction& a = cands[rng.below(cands.size())];
    cur = succ(inst, cur, a);
    plan.actions.push_back(a);
  }
  for (const GroundAtom& a : cur.atoms()) {
    if (a.pred == p_has) inst.goal.push_back({a, true});
  }
  return {std::move(inst), std::move(plan)};
}

GenRecord gen_lights_out(const VariantContext& ctx, int length, Rng& rng) {
  const domains::LightsOutTemplate& tmpl = *ctx.lights;
  const int cells = tmpl.board.cells();
  // Walk backwards from the goal state; the reversed press sequence then
  // drives the reached state back to all-off.
  std::vector<int> presses(length);
  std::vector<bool> lit(cells, false);
  for (int i = 0; i < length; ++i) {
    presses[i] = static_cast<int>(rng.below(cells));
    for (int u : tmpl.board.closed_neighborhood(presses[i])) lit[u] = !lit[u];
  }
  std::vector<int> lit_cells;
  for (int c = 0; c < cells; ++c) {
    if (lit[c]) lit_cells.push_back(c);
  }
  Instance inst = domains::lights_out_instance(tmpl, lit_cells);
  std::reverse(presses.begin(), presses.end());

  Plan plan;
  if (ctx.variant == Variant::LightsOutConditional) {
    for (int c : presses) {
      SchemaId s = ctx.domain->schema_index(
          "press-" + std::to_string(c / tmpl.board.cols) +
          std::to_string(c % tmpl.board.cols));
      plan.actions.push_back({s, {}});
    }
  } else {
    State cur = inst.init;
    for (int c : presses) {
      SchemaId s = domains::well_formed_press_schema(tmpl, cur, c);
      GroundAction a{s, {}};
      cur = succ(inst, cur, a);
      plan.actions.push_back(a);
    }
  }
  return {std::move(inst), std::move(plan)};
}

GenRecord gen_valid(const VariantContext& ctx, const GenConfig& config,
                    int length, Rng& rng) {
  switch (ctx.variant) {
    case Variant::GrippersWellFormed:
    case Variant::GrippersDeleteFree:
      return gen_grippers(ctx, config, length, rng);
    case Variant::ColorsWellFormed:
    case Variant::ColorsStrips:
      return gen_colors(ctx, config, length, rng);
    case Variant::LightsOutWellFormed:
    case Variant::LightsOutConditional:
      return gen_lights_out(ctx, length, rng);
  }
  throw Error("unreachable");
}

namespace {

Plan corrupt_incomplete_colors(const VariantContext& ctx,
                               const Instance& instance, const Plan& plan,
                               Rng& rng) {
  const Domain& d = *ctx.domain;
  const bool wf = ctx.variant == Variant::ColorsWellFormed;
  const PredId p_has = d.pred_index("hasColor");
  const SchemaId s_add = d.schema_index("add"), s_rm = d.schema_index("remove");
  SimResult sim = simulate(instance, plan);
  std::vector<ObjId> bags, colors_;
  for (const GroundAtom& a : instance.init.atoms()) {
    if (a.pred == d.pred_index("bag")) bags.push_back(a.args[0]);
    if (a.pred == d.pred_index("color")) colors_.push_back(a.args[0]);
  }
  for (int tries = 0; tries < 50; ++tries) {
    const int t = static_cast<int>(rng.below(plan.size()));
    const State& before = sim.trace[t];
    std::vector<GroundAction> cands;
    for (ObjId c : colors_) {
      for (ObjId b : bags) {
        bool present = before.contains({p_has, {b, c}});
        if (!wf || !present) cands.push_back({s_add, {c, b}});
        if (!wf || present) cands.push_back({s_rm, {c, b}});
      }
    }
    GroundAction repl = cands[rng.below(cands.size())];
    if (repl == plan.actions[t]) continue;
    Plan corrupted = plan;
    corrupted.actions[t] = repl;
    SimResult check = simulate(instance, corrupted);
    if (check.verdict.status == Verdict::Status::Incomplete &&
        check.verdict.unsat_goals.size() == 1) {
      return corrupted;
    }
  }
  throw RetryExhaustedError("colors substitution budget exhausted");
}

Plan corrupt_incomplete_lights(const VariantContext& ctx,
                               const Instance& instance, const Plan& plan,
                               Rng& rng) {
  const domains::LightsOutTemplate& tmpl = *ctx.lights;
  if (plan.actions.empty()) throw RetryExhaustedError("empty plan");
  if (tmpl.board.cells() < 2) {
    throw RetryExhaustedError("single-cell board has no alternative press");
  }
  SimResult sim = simulate(instance, plan);
  const State& before = sim.trace[plan.size() - 1];
  const int last_cell =
      domains::pressed_cell(tmpl, plan.actions.back().schema);
  int cell = last_cell;
  while (cell == last_cell) {
    cell = static_cast<int>(rng.below(tmpl.board.cells()));
  }
  Plan corrupted = plan;
  if (ctx.variant == Variant::LightsOutConditional) {
    SchemaId s = ctx.domain->schema_index(
        "press-" + std::to_string(cell / tmpl.board.cols) +
        std::to_string(cell % tmpl.board.cols));
    corrupted.actions.back() = {s, {}};
  } else {
    corrupted.actions.back() = {
        domains::well_formed_press_schema(tmpl, before, cell), {}};
  }
  return corrupted;
}

// Redirect the plan's final drop to a different room and cut the tail.
Plan corrupt_incomplete_grippers(const VariantContext& ctx,
                                 const Instance& instance, const Plan& plan,
                                 Rng& rng) {
  const Domain& d = *ctx.domain;
  const SchemaId s_drop = d.schema_index("drop");
  const SchemaId s_move = d.schema_index("move");
  const PredId p_room = d.pred_index("room");
  int drop_at = -1;
  for (int i = static_cast<int>(plan.size()) - 1; i >= 0; --i) {
    if (plan.actions[i].schema == s_drop) {
      drop_at = i;
      break;
    }
  }
  if (drop_at < 0 || static_cast<int>(plan.size()) - 1 - drop_at > 4) {
    throw RetryExhaustedError("no drop close enough to the plan tail");
  }
  std::vector<ObjId> rooms;
  for (const GroundAtom& a : instance.init.atoms()) {
    if (a.pred == p_room) rooms.push_back(a.args[0]);
  }
  const ObjId goal_room = plan.actions[drop_at].args[1];
  // The move directly before the drop steers the robot; redirect it.
  int move_at = -1;
  for (int i = drop_at - 1; i >= 0; --i) {
    if (plan.actions[i].schema == s_move) {
      move_at = i;
      break;
    }
    if (plan.actions[i].schema == s_drop) break;
  }
  std::vector<ObjId> order = rooms;
  for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) {
    std::swap(order[i], order[rng.range(0, i)]);
  }
  for (ObjId new_room : order) {
    if (new_room == goal_room) continue;
    Plan corrupted = plan;
    corrupted.actions.resize(drop_at + 1);
    if (move_at >= 0 && plan.actions[move_at].args[1] == goal_room) {
      corrupted.actions[move_at].args[1] = new_room;
      // Actions between the move and the drop that referenced the old room
      // would break; only accept tails without them.
      bool clean = true;
      for (int i = move_at + 1; i < drop_at; ++i) {
        for (ObjId arg : corrupted.actions[i].args) {
          if (arg == goal_room) clean = false;
        }
      }
      if (!clean) continue;
      corrupted.actions[drop_at].args[1] = new_room;
    } else {
      corrupted.actions[drop_at].args[1] = new_room;
    }
    SimResult check = simulate(instance, corrupted);
    if (check.verdict.status == Verdict::Status::Incomplete &&
        check.verdict.unsat_goals.size() == 1) {
      return corrupted;
    }
  }
  throw RetryExhaustedError("no redirection produced a single failed goal");
}

}  // namespace

Plan corrupt_incomplete(const VariantContext& ctx, const Instance& instance,
                        const Plan& plan, Rng& rng) {
  switch (ctx.variant) {
    case Variant::ColorsWellFormed:
    case Variant::ColorsStrips:
      return corrupt_incomplete_colors(ctx, instance, plan, rng);
    case Variant::LightsOutWellFormed:
    case Variant::LightsOutConditional:
      return corrupt_incomplete_lights(ctx, instance, plan, rng);
    case Variant::GrippersWellFormed:
    case Variant::GrippersDeleteFree:
      return corrupt_incomplete_grippers(ctx, instance, plan, rng);
  }
  throw Error("unreachable");
}

Plan corrupt_nonexecutable(const VariantContext& ctx, const Instance& instance,
                           const Plan& plan, Rng& rng) {
  if (!variant_supports_nonexecutable(ctx.variant)) {
    throw NotApplicableError(
        "non-executable corruption only applies to the grippers variants");
  }
  if (plan.actions.empty()) throw RetryExhaustedError("empty plan");
  const Domain& d = *ctx.domain;
  SimResult sim = simulate(instance, plan);
  const State& before = sim.trace[plan.size() - 1];
  const PredId p_room = d.pred_index("room"), p_ball = d.pred_index("ball");
  const PredId p_grip = d.pred_index("gripper");
  std::vector<ObjId> rooms, balls, grippers;
  for (const GroundAtom& a : instance.init.atoms()) {
    if (a.pred == p_room) rooms.push_back(a.args[0]);
    if (a.pred == p_ball) balls.push_back(a.args[0]);
    if (a.pred == p_grip) grippers.push_back(a.args[0]);
  }
  const SchemaId s_move = d.schema_index("move"), s_drop = d.schema_index("drop");
  for (int tries = 0; tries < 400; ++tries) {
    GroundAction repl;
    if (rng.chance(0.5)) {
      repl = {s_move,
              {rooms[rng.below(rooms.size())], rooms[rng.below(rooms.size())]}};
    } else {
      repl = {s_drop,
              {balls[rng.below(balls.size())], rooms[rng.below(rooms.size())],
               grippers[rng.below(grippers.size())]}};
    }
    if (repl == plan.actions.back()) continue;
    if (applicable(instance, before, repl)) continue;
    Plan corrupted = plan;
    corrupted.actions.back() = repl;
    return corrupted;
  }
  throw RetryExhaustedError("no inapplicable move/drop found");
}

// ---------------------------------------------------------------------------
// Tokenization and records
// ---------------------------------------------------------------------------

std::vector<std::int64_t> object_values(const Instance& instance) {
  std::vector<std::int64_t> values;
  values.reserve(instance.objects.size());
  bool ok = true;
  for (const std::string& name : instance.objects) {
    std::size_t us = name.rfind('_');
    if (us == std::string::npos || us + 1 >= name.size()) {
      ok = false;
      break;
    }
    std::int64_t v = 0;
    for (std::size_t i = us + 1; i < name.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(name[i]))) {
        ok = false;
        break;
      }
      v = v * 10 + (name[i] - '0');
    }
    if (!ok) break;
    values.push_back(v);
  }
  if (!ok || values.size() != instance.objects.size()) {
    values.clear();
    for (std::size_t i = 0; i < instance.objects.size(); ++i) {
      values.push_back(static_cast<std::int64_t>(i) + 1);
    }
  }
  return values;
}

std::string tokenize_crasp(const VariantContext& ctx, const Instance& instance,
                           const Plan& plan) {
  crasp::TokenSeq seq;
  if (ctx.layout.object_mode == compile::EncodingLayout::ObjectMode::Ext) {
    seq = compile::encode(instance, plan, ctx.layout, object_values(instance));
  } else {
    seq = compile::encode(instance, plan, ctx.layout);
  }
  return seq.to_string();
}

namespace {

bool is_lights(Variant v) {
  return v == Variant::LightsOutWellFormed ||
         v == Variant::LightsOutConditional;
}

void lights_fact_tokens(const domains::LightsOutTemplate& tmpl,
                        const Domain& d, const GroundAtom& a,
                        std::ostream& os) {
  const int cell = a.args.empty() ? -1 : a.args[0];
  os << " " << d.predicates[a.pred].name << " " << cell / tmpl.board.cols
     << " " << cell % tmpl.board.cols;
}

}  // namespace

std::string tokenize_train(const VariantContext& ctx,
                           const DatasetRecord& record) {
  const Domain& d = *ctx.domain;
  const Instance& inst = record.instance;
  std::ostringstream os;
  os << "<init>";
  const bool lights = is_lights(ctx.variant);
  const bool colors = ctx.variant == Variant::ColorsWellFormed ||
                      ctx.variant == Variant::ColorsStrips;
  if (lights) {
    for (const GroundAtom& a : inst.init.atoms()) {
      lights_fact_tokens(*ctx.lights, d, a, os);
    }
  } else if (!colors) {
    for (const GroundAtom& a : inst.init.atoms()) {
      os << " " << d.predicates[a.pred].name;
      for (ObjId o : a.args) os << " " << inst.objects[o];
    }
  }
  os << " <plan>";
  for (const GroundAction& a : record.plan.actions) {
    if (lights) {
      const std::string& name = d.schemas[a.schema].name;
      // press-<r><c> or press-<r><c>-<cfg>
      os << " press " << name[6] << " " << name[7];
      if (name.size() > 8) os << " " << name.substr(9);
    } else {
      os << " " << d.schemas[a.schema].name;
      for (ObjId o : a.args) os << " " << inst.objects[o];
    }
  }
  os << " <goal>";
  if (!lights) {
    for (const GroundLiteral& g : inst.goal) {
      os << (g.positive ? " " : " not ") << d.predicates[g.atom.pred].name;
      for (ObjId o : g.atom.args) os << " " << inst.objects[o];
    }
  }
  os << " <verdict> " << record.label;
  return os.str();
}

std::pair<DatasetRecord, DatasetRecord> make_pair(const VariantContext& ctx,
                                                  const GenConfig& config,
                                                  std::int64_t pair_index) {
  Rng rng = Rng::substream(config.seed, static_cast<std::uint64_t>(pair_index));
  for (int attempt = 0; attempt < 60; ++attempt) {
    const int length =
        static_cast<int>(rng.range(config.min_len, config.max_len));
    GenRecord valid;
    try {
      valid = gen_valid(ctx, config, length, rng);
    } catch (const RetryExhaustedError&) {
      continue;
    }
    if (!simulate(valid.instance, valid.plan).verdict.valid()) continue;

    std::string corruption = "incomplete";
    if (variant_supports_nonexecutable(ctx.variant) &&
        rng.chance(config.nonexec_frac)) {
      corruption = "non_executable";
    }
    Plan bad;
    try {
      bad = corruption == "incomplete"
                ? corrupt_incomplete(ctx, valid.instance, valid.plan, rng)
                : corrupt_nonexecutable(ctx, valid.instance, valid.plan, rng);
    } catch (const RetryExhaustedError&) {
      continue;
    }
    Verdict v = simulate(valid.instance, bad).verdict;
    if (corruption == "incomplete" &&
        v.status != Verdict::Status::Incomplete) {
      continue;
    }
    if (corruption == "non_executable" &&
        v.status != Verdict::Status::NonExecutable) {
      continue;
    }

    DatasetRecord good_rec, bad_rec;
    good_rec.id = pair_index * 2;
    good_rec.variant = variant_id(ctx.variant);
    good_rec.n_actions = static_cast<int>(valid.plan.size());
    good_rec.label = "correct";
    good_rec.corruption = "none";
    good_rec.instance = valid.instance;
    good_rec.plan = valid.plan;
    good_rec.tokens_train = tokenize_train(ctx, good_rec);
    good_rec.tokens_crasp = tokenize_crasp(ctx, good_rec.instance, good_rec.plan);

    bad_rec.id = pair_index * 2 + 1;
    bad_rec.variant = good_rec.variant;
    bad_rec.n_actions = static_cast<int>(bad.size());
    bad_rec.label = "incorrect";
    bad_rec.corruption = corruption;
    bad_rec.instance = valid.instance;
    bad_rec.plan = bad;
    bad_rec.tokens_train = tokenize_train(ctx, bad_rec);
    bad_rec.tokens_crasp = tokenize_crasp(ctx, bad_rec.instance, bad_rec.plan);
    return {std::move(good_rec), std::move(bad_rec)};
  }
  throw RetryExhaustedError("record pair generation failed for index " +
                            std::to_string(pair_index));
}

std::string record_to_jsonl(const DatasetRecord& record) {
  const Domain& d = *record.instance.domain;
  ordered_json j;
  j["id"] = record.id;
  j["variant"] = record.variant;
  j["n_actions"] = record.n_actions;
  j["label"] = record.label;
  j["corruption"] = record.corruption;
  j["objects"] = record.instance.objects;
  ordered_json init = ordered_json::array();
  for (const GroundAtom& a : record.instance.init.atoms()) {
    ordered_json fact = ordered_json::array();
    fact.push_back(d.predicates[a.pred].name);
    for (ObjId o : a.args) fact.push_back(record.instance.objects[o]);
    init.push_back(std::move(fact));
  }
  j["init"] = std::move(init);
  ordered_json plan = ordered_json::array();
  for (const GroundAction& a : record.plan.actions) {
    ordered_json act = ordered_json::array();
    act.push_back(d.schemas[a.schema].name);
    for (ObjId o : a.args) act.push_back(record.instance.objects[o]);
    plan.push_back(std::move(act));
  }
  j["plan"] = std::move(plan);
  ordered_json goal = ordered_json::array();
  for (const GroundLiteral& g : record.instance.goal) {
    ordered_json lit = ordered_json::array();
    if (!g.positive) lit.push_back("not");
    lit.push_back(d.predicates[g.atom.pred].name);
    for (ObjId o : g.atom.args) lit.push_back(record.instance.objects[o]);
    goal.push_back(std::move(lit));
  }
  j["goal"] = std::move(goal);
  j["tokens_train"] = record.tokens_train;
  j["tokens_crasp"] = record.tokens_crasp;
  return j.dump();
}

std::vector<SplitSpec> default_splits(int train_pairs) {
  // Ratios follow the published split sizes, scaled to the requested
  // training volume.
  const double unit = train_pairs / 100.0;
  auto pairs = [&](double share) {
    return std::max(1, static_cast<int>(share * unit));
  };
  return {
      {"train", train_pairs, 11, 100},
      {"val_id", pairs(5.0), 11, 100},
      {"val_ood", pairs(5.5), 101, 200},
      {"test_id", pairs(10.0), 11, 100},
      {"test_ood", pairs(11.0), 101, 200},
  };
}

namespace {

std::string length_bucket(int n) {
  const int lo = ((n - 1) / 10) * 10 + 1;
  return std::to_string(lo) + "-" + std::to_string(lo + 9);
}

}  // namespace

std::vector<SplitStats> build_splits(const GenConfig& config,
                                     const std::vector<SplitSpec>& splits,
                                     const std::string& out_dir, int jobs) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  VariantContext ctx = VariantContext::make(config.variant, config.board_rows,
                                            config.board_cols);
  std::vector<SplitStats> all_stats;
  std::int64_t pair_base = 0;
  for (const SplitSpec& split : splits) {
    GenConfig local = config;
    local.min_len = split.min_len;
    local.max_len = split.max_len;
    std::vector<std::string> lines(static_cast<std::size_t>(split.pairs) * 2);
    SplitStats stats;
    stats.name = split.name;
    std::mutex stats_mu;
    auto work = [&](int worker) {
      for (int i = worker; i < split.pairs; i += std::max(1, jobs)) {
        auto [good, bad] = make_pair(ctx, local, pair_base + i);
        std::string good_line = record_to_jsonl(good);
        std::string bad_line = record_to_jsonl(bad);
        {
          std::lock_guard<std::mutex> lock(stats_mu);
          stats.records += 2;
          stats.correct += 1;
          stats.incorrect += 1;
          if (bad.corruption == "incomplete") stats.incomplete += 1;
          if (bad.corruption == "non_executable") stats.non_executable += 1;
          stats.length_buckets[length_bucket(good.n_actions)] += 1;
          stats.length_buckets[length_bucket(bad.n_actions)] += 1;
          const int objs = static_cast<int>(good.instance.objects.size());
          if (stats.min_objects == 0 || objs < stats.min_objects) {
            stats.min_objects = objs;
          }
          stats.max_objects = std::max(stats.max_objects, objs);
        }
        lines[static_cast<std::size_t>(i) * 2] = std::move(good_line);
        lines[static_cast<std::size_t>(i) * 2 + 1] = std::move(bad_line);
      }
    };
    if (jobs <= 1) {
      work(0);
    } else {
      std::vector<std::thread> threads;
      for (int w = 0; w < jobs; ++w) threads.emplace_back(work, w);
      for (std::thread& t : threads) t.join();
    }
    const std::string path =
        (fs::path(out_dir) /
         (variant_id(config.variant) + "." + split.name + ".jsonl"))
            .string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    for (const std::string& line : lines) out << line << "\n";
    all_stats.push_back(std::move(stats));
    pair_base += split.pairs;
  }
  return all_stats;
}

std::string stats_to_json(const GenConfig& config,
                          const std::vector<SplitStats>& stats) {
  ordered_json j;
  j["variant"] = variant_id(config.variant);
  j["seed"] = config.seed;
  ordered_json splits = ordered_json::object();
  for (const SplitStats& s : stats) {
    ordered_json sj;
    sj["records"] = s.records;
    sj["correct"] = s.correct;
    sj["incorrect"] = s.incorrect;
    sj["incomplete"] = s.incomplete;
    sj["non_executable"] = s.non_executable;
    sj["min_objects"] = s.min_objects;
    sj["max_objects"] = s.max_objects;
    ordered_json buckets = ordered_json::object();
    for (const auto& [k, v] : s.length_buckets) buckets[k] = v;
    sj["length_buckets"] = std::move(buckets);
    splits[s.name] = std::move(sj);
  }
  j["splits"] = std::move(splits);
  return j.dump(2);
}

}  // namespace planlab::datagen
