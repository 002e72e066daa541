#include "planlab/domains.hpp"

#include <algorithm>

namespace planlab::domains {

namespace {

struct SchemaBuilder {
  Domain* d;
  ActionSchema s;

  SchemaBuilder(Domain* dom, std::string name, std::vector<std::string> params)
      : d(dom) {
    s.name = std::move(name);
    s.params = std::move(params);
  }
  Term term(const std::string& name) const {
    for (std::size_t i = 0; i < s.params.size(); ++i) {
      if (s.params[i] == name) return Term::var(static_cast<int>(i));
    }
    for (std::size_t i = 0; i < d->constants.size(); ++i) {
      if (d->constants[i] == name) return Term::constant(static_cast<int>(i));
    }
    throw Error("unknown term " + name + " in schema " + s.name);
  }
  Literal lit(bool positive, const std::string& pred,
              std::vector<std::string> args) const {
    Literal l;
    l.pred = d->pred_index(pred);
    if (l.pred < 0) throw Error("unknown predicate " + pred);
    l.positive = positive;
    for (const std::string& a : args) l.args.push_back(term(a));
    return l;
  }
  SchemaBuilder& pre(bool positive, const std::string& pred,
                     std::vector<std::string> args = {}) {
    s.pre.push_back(lit(positive, pred, std::move(args)));
    return *this;
  }
  SchemaBuilder& eff(bool positive, const std::string& pred,
                     std::vector<std::string> args = {}) {
    if (s.effects.empty()) s.effects.push_back({});
    s.effects.back().eff.push_back(lit(positive, pred, std::move(args)));
    return *this;
  }
  void commit() { d->schemas.push_back(std::move(s)); }
};

Domain grippers_base() {
  Domain d;
  d.predicates = {{"room", 1},  {"ball", 1},    {"gripper", 1},
                  {"free", 1},  {"heavy", 1},   {"charged", 0},
                  {"atRobby", 1}, {"at", 2},    {"carry", 2}};
  return d;
}

}  // namespace

Domain heavy_grippers(GrippersVariant variant) {
  Domain d = grippers_base();
  const bool wf = variant == GrippersVariant::WellFormed;

  {
    SchemaBuilder b(&d, "move", {"r1", "r2"});
    b.pre(true, "room", {"r1"}).pre(true, "room", {"r2"});
    b.pre(true, "atRobby", {"r1"});
    if (wf) {
      b.pre(false, "atRobby", {"r2"});
      b.pre(false, "charged");
    }
    b.eff(true, "charged").eff(true, "atRobby", {"r2"});
    if (wf) b.eff(false, "atRobby", {"r1"});
    b.commit();
  }
  {
    SchemaBuilder b(&d, "pick", {"b", "r", "g"});
    b.pre(true, "ball", {"b"}).pre(true, "room", {"r"});
    if (wf) b.pre(false, "heavy", {"b"});
    b.pre(true, "gripper", {"g"}).pre(true, "atRobby", {"r"});
    b.pre(true, "free", {"g"}).pre(true, "at", {"b", "r"});
    if (!wf) b.pre(false, "heavy", {"b"});
    if (wf) b.pre(false, "carry", {"b", "g"});
    b.eff(true, "carry", {"b", "g"});
    if (wf) b.eff(false, "free", {"g"}).eff(false, "at", {"b", "r"});
    b.commit();
  }
  {
    SchemaBuilder b(&d, "pickHeavy", {"b", "r", "g"});
    b.pre(true, "ball", {"b"}).pre(true, "room", {"r"});
    if (wf) b.pre(true, "heavy", {"b"});
    b.pre(true, "gripper", {"g"}).pre(true, "atRobby", {"r"});
    b.pre(true, "free", {"g"}).pre(true, "charged");
    b.pre(true, "at", {"b", "r"});
    if (!wf) b.pre(true, "heavy", {"b"});
    if (wf) b.pre(false, "carry", {"b", "g"});
    b.eff(true, "carry", {"b", "g"});
    if (wf) {
      b.eff(false, "free", {"g"}).eff(false, "at", {"b", "r"});
      b.eff(false, "charged");
    }
    b.commit();
  }
  {
    SchemaBuilder b(&d, "drop", {"b", "r", "g"});
    b.pre(true, "ball", {"b"}).pre(true, "room", {"r"});
    b.pre(true, "gripper", {"g"}).pre(true, "atRobby", {"r"});
    b.pre(true, "carry", {"b", "g"});
    if (wf) {
      b.pre(true, "charged");
      b.pre(false, "at", {"b", "r"});
      b.pre(false, "free", {"g"});
    }
    b.eff(true, "at", {"b", "r"}).eff(true, "free", {"g"});
    if (wf) b.eff(false, "carry", {"b", "g"}).eff(false, "charged");
    b.commit();
  }
  d.validate();
  return d;
}

Domain heavy_grippers_conditional() {
  Domain d = grippers_base();
  {
    SchemaBuilder b(&d, "move", {"r1", "r2"});
    b.pre(true, "room", {"r1"}).pre(true, "room", {"r2"});
    b.pre(true, "atRobby", {"r1"});
    b.eff(true, "charged").eff(true, "atRobby", {"r2"});
    b.eff(false, "atRobby", {"r1"});
    b.commit();
  }
  {
    SchemaBuilder b(&d, "pick", {"b", "r", "g"});
    b.pre(true, "ball", {"b"}).pre(true, "room", {"r"});
    b.pre(true, "gripper", {"g"}).pre(true, "atRobby", {"r"});
    b.pre(true, "at", {"b", "r"}).pre(true, "free", {"g"});
    b.pre(true, "charged");
    CondEffect light;
    light.cond = {b.lit(false, "heavy", {"b"})};
    light.eff = {b.lit(true, "carry", {"b", "g"}), b.lit(false, "free", {"g"}),
                 b.lit(false, "at", {"b", "r"})};
    CondEffect heavy;
    heavy.cond = {b.lit(true, "heavy", {"b"})};
    heavy.eff = {b.lit(true, "carry", {"b", "g"}), b.lit(false, "free", {"g"}),
                 b.lit(false, "at", {"b", "r"}), b.lit(false, "charged", {})};
    b.s.effects = {light, heavy};
    b.commit();
  }
  {
    SchemaBuilder b(&d, "drop", {"b", "r", "g"});
    b.pre(true, "ball", {"b"}).pre(true, "room", {"r"});
    b.pre(true, "gripper", {"g"}).pre(true, "atRobby", {"r"});
    b.pre(true, "carry", {"b", "g"});
    b.eff(true, "at", {"b", "r"}).eff(true, "free", {"g"});
    b.eff(false, "carry", {"b", "g"}).eff(false, "charged");
    b.commit();
  }
  d.validate();
  return d;
}

Domain colors(ColorsVariant variant) {
  Domain d;
  d.predicates = {{"bag", 1}, {"color", 1}, {"hasColor", 2}};
  const bool wf = variant == ColorsVariant::WellFormed;
  {
    SchemaBuilder b(&d, "remove", {"c", "b"});
    b.pre(true, "bag", {"b"}).pre(true, "color", {"c"});
    if (wf) b.pre(true, "hasColor", {"b", "c"});
    b.eff(false, "hasColor", {"b", "c"});
    b.commit();
  }
  {
    SchemaBuilder b(&d, "add", {"c", "b"});
    b.pre(true, "bag", {"b"}).pre(true, "color", {"c"});
    if (wf) b.pre(false, "hasColor", {"b", "c"});
    b.eff(true, "hasColor", {"b", "c"});
    b.commit();
  }
  d.validate();
  return d;
}

Board::Board(int r, int c) : rows(r), cols(c) {
  if (r < 1 || c < 1 || r > 9 || c > 9) {
    throw Error("board dimensions must be within 1..9");
  }
}

std::string Board::light_name(int cell) const {
  return "L" + std::to_string(cell / cols) + std::to_string(cell % cols);
}

std::vector<int> Board::closed_neighborhood(int c) const {
  const int r = c / cols, k = c % cols;
  std::vector<int> out;
  out.push_back(c);
  if (r > 0) out.push_back(cell(r - 1, k));
  if (k > 0) out.push_back(cell(r, k - 1));
  if (k + 1 < cols) out.push_back(cell(r, k + 1));
  if (r + 1 < rows) out.push_back(cell(r + 1, k));
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

LightsOutTemplate lights_out_common(const Board& board, Domain d,
                                    bool well_formed) {
  LightsOutTemplate t{board, nullptr, {}, {}, well_formed};
  t.objects = d.constants;
  t.domain = std::make_shared<Domain>(std::move(d));
  for (int c = 0; c < board.cells(); ++c) {
    if (well_formed) {
      const PredId out = t.domain->pred_index("out");
      t.goal.push_back({{out, {c}}, true});
    } else {
      const PredId on = t.domain->pred_index("on");
      t.goal.push_back({{on, {c}}, false});
    }
  }
  return t;
}

}  // namespace

LightsOutTemplate lights_out_conditional(const Board& board) {
  Domain d;
  d.predicates = {{"on", 1}};
  for (int c = 0; c < board.cells(); ++c) {
    d.constants.push_back(board.light_name(c));
  }
  for (int c = 0; c < board.cells(); ++c) {
    ActionSchema s;
    s.name = "press-" + std::to_string(c / board.cols) +
             std::to_string(c % board.cols);
    for (int u : board.closed_neighborhood(c)) {
      Literal lit_on{0, {Term::constant(u)}, true};
      Literal lit_off{0, {Term::constant(u)}, false};
      CondEffect turn_off;
      turn_off.cond = {lit_on};
      turn_off.eff = {lit_off};
      CondEffect turn_on;
      turn_on.cond = {lit_off};
      turn_on.eff = {lit_on};
      s.effects.push_back(turn_off);
      s.effects.push_back(turn_on);
    }
    d.schemas.push_back(std::move(s));
  }
  d.validate();
  return lights_out_common(board, std::move(d), false);
}

LightsOutTemplate lights_out_well_formed(const Board& board) {
  Domain d;
  d.predicates = {{"on", 1}, {"out", 1}};
  for (int c = 0; c < board.cells(); ++c) {
    d.constants.push_back(board.light_name(c));
  }
  const PredId p_on = 0, p_out = 1;
  for (int c = 0; c < board.cells(); ++c) {
    const std::vector<int> nbhd = board.closed_neighborhood(c);
    const int k = static_cast<int>(nbhd.size());
    const int configs = 1 << k;
    for (int cfg = 0; cfg < configs; ++cfg) {
      ActionSchema s;
      s.name = "press-" + std::to_string(c / board.cols) +
               std::to_string(c % board.cols) + "-" + std::to_string(cfg);
      CondEffect eff;
      for (int m = 0; m < k; ++m) {
        // Bit m (most significant first) is the current status of the m-th
        // cell of the closed neighborhood.
        const bool lit = (cfg >> (k - 1 - m)) & 1;
        const Term cell = Term::constant(nbhd[m]);
        const PredId now = lit ? p_on : p_out;
        const PredId after = lit ? p_out : p_on;
        s.pre.push_back({now, {cell}, true});
        s.pre.push_back({after, {cell}, false});
        eff.eff.push_back({after, {cell}, true});
        eff.eff.push_back({now, {cell}, false});
      }
      s.effects.push_back(std::move(eff));
      d.schemas.push_back(std::move(s));
    }
  }
  d.validate();
  return lights_out_common(board, std::move(d), true);
}

Instance lights_out_instance(const LightsOutTemplate& tmpl,
                             const std::vector<int>& lit_cells) {
  Instance inst;
  inst.domain = tmpl.domain;
  inst.objects = tmpl.objects;
  inst.goal = tmpl.goal;
  std::vector<bool> lit(tmpl.board.cells(), false);
  for (int c : lit_cells) lit[c] = true;
  std::vector<GroundAtom> atoms;
  const PredId on = tmpl.domain->pred_index("on");
  const PredId out = tmpl.domain->pred_index("out");
  for (int c = 0; c < tmpl.board.cells(); ++c) {
    if (lit[c]) {
      atoms.push_back({on, {c}});
    } else if (tmpl.well_formed) {
      atoms.push_back({out, {c}});
    }
  }
  inst.init = State(std::move(atoms));
  inst.validate();
  return inst;
}

int pressed_cell(const LightsOutTemplate& tmpl, SchemaId schema) {
  if (schema < 0 || schema >= static_cast<SchemaId>(tmpl.domain->schemas.size()))
    return -1;
  const std::string& name = tmpl.domain->schemas[schema].name;
  // press-<r><c> or press-<r><c>-<cfg>
  if (name.size() < 8 || name.compare(0, 6, "press-") != 0) return -1;
  const int r = name[6] - '0';
  const int c = name[7] - '0';
  return tmpl.board.cell(r, c);
}

SchemaId well_formed_press_schema(const LightsOutTemplate& tmpl,
                                  const State& state, int cell) {
  const std::vector<int> nbhd = tmpl.board.closed_neighborhood(cell);
  const int k = static_cast<int>(nbhd.size());
  const PredId on = tmpl.domain->pred_index("on");
  int cfg = 0;
  for (int m = 0; m < k; ++m) {
    if (state.contains({on, {nbhd[m]}})) cfg |= 1 << (k - 1 - m);
  }
  const std::string name = "press-" + std::to_string(cell / tmpl.board.cols) +
                           std::to_string(cell % tmpl.board.cols) + "-" +
                           std::to_string(cfg);
  SchemaId s = tmpl.domain->schema_index(name);
  if (s < 0) throw Error("no press schema matches the state at " + name);
  return s;
}

Instance flipflop_instance() {
  Domain d;
  d.predicates = {{"active", 1}};
  {
    SchemaBuilder b(&d, "a_a", {"x"});
    b.eff(false, "active", {"x"});
    b.commit();
  }
  {
    SchemaBuilder b(&d, "a_b", {"x"});
    b.eff(true, "active", {"x"});
    b.commit();
  }
  {
    ActionSchema s;
    s.name = "a_e";
    s.params = {"x"};
    s.effects.push_back({});  // empty unconditional effect
    d.schemas.push_back(std::move(s));
  }
  d.validate();
  Instance inst;
  inst.domain = std::make_shared<Domain>(std::move(d));
  inst.objects = {"k"};
  inst.goal = {{{0, {0}}, true}};
  inst.validate();
  return inst;
}

std::vector<F2Vector> effect_matrix(const Board& board) {
  if (board.cells() > 63) throw Error("board too large for the GF(2) view");
  std::vector<F2Vector> m(board.cells(), 0);
  for (int c = 0; c < board.cells(); ++c) {
    for (int u : board.closed_neighborhood(c)) {
      m[c] |= F2Vector{1} << u;
    }
  }
  return m;
}

F2Vector state_vector(const Board& board, const State& state,
                      const Instance& instance) {
  const PredId on = instance.domain->pred_index("on");
  F2Vector v = 0;
  for (int c = 0; c < board.cells(); ++c) {
    ObjId o = instance.object_index(board.light_name(c));
    if (o >= 0 && state.contains({on, {o}})) v |= F2Vector{1} << c;
  }
  return v;
}

F2Vector ghom(const Board& board, const std::vector<int>& pressed_cells) {
  const std::vector<F2Vector> m = effect_matrix(board);
  F2Vector acc = 0;
  for (int c : pressed_cells) acc ^= m[c];
  return acc;
}

bool parity_verdict(const Board& board, F2Vector init,
                    const std::vector<int>& pressed_cells) {
  return ghom(board, pressed_cells) == init;
}

}  // namespace planlab::domains
