#include "planlab/compile.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

namespace planlab::compile {

using crasp::CraspOp;
using crasp::CraspProgram;
using crasp::LocalRel;
using crasp::MatchConjunct;
using crasp::MatchSpec;
using crasp::OpKind;
using crasp::TokenSeq;

namespace {

std::string negated_name(const std::string& pred) { return "!" + pred; }

void add_symbol(EncodingLayout& layout, const std::string& name, int* slot) {
  for (const std::string& s : layout.sigma) {
    if (s == name) {
      throw Error("symbol collision in encoding alphabet: " + name);
    }
  }
  layout.sigma.push_back(name);
  *slot = static_cast<int>(layout.sigma.size()) - 1;
}

void build_sigma(EncodingLayout& layout) {
  const Domain& d = *layout.domain;
  add_symbol(layout, "$", &layout.dollar);
  add_symbol(layout, "@", &layout.sep);
  layout.pred_sym.resize(d.predicates.size(), -1);
  layout.negpred_sym.resize(d.predicates.size(), -1);
  layout.schema_sym.resize(d.schemas.size(), -1);
  for (std::size_t i = 0; i < d.predicates.size(); ++i) {
    add_symbol(layout, d.predicates[i].name, &layout.pred_sym[i]);
  }
  if (layout.negated_goals) {
    for (std::size_t i = 0; i < d.predicates.size(); ++i) {
      add_symbol(layout, negated_name(d.predicates[i].name),
                 &layout.negpred_sym[i]);
    }
  }
  for (std::size_t i = 0; i < d.schemas.size(); ++i) {
    add_symbol(layout, d.schemas[i].name, &layout.schema_sym[i]);
  }
  if (layout.object_mode == EncodingLayout::ObjectMode::Sigma) {
    layout.object_sym.resize(layout.fixed_objects.size(), -1);
    for (std::size_t i = 0; i < layout.fixed_objects.size(); ++i) {
      add_symbol(layout, layout.fixed_objects[i], &layout.object_sym[i]);
    }
  }
}

}  // namespace

EncodingLayout make_layout_ext(std::shared_ptr<const Domain> domain,
                               bool negated_goals) {
  EncodingLayout layout;
  layout.domain = std::move(domain);
  layout.object_mode = EncodingLayout::ObjectMode::Ext;
  layout.negated_goals = negated_goals;
  build_sigma(layout);
  return layout;
}

EncodingLayout make_layout_sigma(std::shared_ptr<const Domain> domain,
                                 std::vector<std::string> objects,
                                 bool negated_goals) {
  EncodingLayout layout;
  layout.domain = std::move(domain);
  layout.object_mode = EncodingLayout::ObjectMode::Sigma;
  layout.negated_goals = negated_goals;
  layout.fixed_objects = std::move(objects);
  build_sigma(layout);
  return layout;
}

TokenSeq encode(const Instance& instance, const Plan& plan,
                const EncodingLayout& layout,
                const std::vector<std::int64_t>& object_values) {
  TokenSeq seq;
  seq.vocab = layout.sigma;

  const bool sigma_objects =
      layout.object_mode == EncodingLayout::ObjectMode::Sigma;
  std::vector<std::int64_t> values;
  if (sigma_objects) {
    if (instance.objects != layout.fixed_objects) {
      throw Error("instance objects differ from the fixed universe");
    }
  } else {
    if (object_values.empty()) {
      values.resize(instance.objects.size());
      for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = static_cast<std::int64_t>(i) + 1;
      }
    } else {
      if (object_values.size() != instance.objects.size()) {
        throw Error("object value list does not cover all objects");
      }
      values = object_values;
    }
    std::vector<std::int64_t> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw Error("ObjectCollision: two objects share an extended-token value");
    }
    for (std::int64_t v : sorted) {
      if (v < 0) throw Error("extended-token values must be non-negative");
    }
  }

  auto push_obj = [&](ObjId o) {
    if (sigma_objects) {
      seq.toks.push_back(crasp::Token::symbol(layout.object_sym[o]));
    } else {
      seq.push_ext(values[o]);
    }
  };

  seq.toks.push_back(crasp::Token::symbol(layout.dollar));
  for (const GroundAtom& a : instance.init.atoms()) {
    seq.toks.push_back(crasp::Token::symbol(layout.pred_sym[a.pred]));
    for (ObjId o : a.args) push_obj(o);
  }
  seq.toks.push_back(crasp::Token::symbol(layout.sep));
  for (const GroundAction& act : plan.actions) {
    seq.toks.push_back(crasp::Token::symbol(layout.schema_sym[act.schema]));
    for (ObjId o : act.args) push_obj(o);
  }
  seq.toks.push_back(crasp::Token::symbol(layout.sep));
  std::vector<GroundLiteral> goal = instance.goal;
  std::sort(goal.begin(), goal.end());
  goal.erase(std::unique(goal.begin(), goal.end()), goal.end());
  for (const GroundLiteral& g : goal) {
    int sym;
    if (g.positive) {
      sym = layout.pred_sym[g.atom.pred];
    } else {
      if (!layout.negated_goals) {
        throw Error("negative goal literal but the layout has no negated "
                    "goal markers");
      }
      sym = layout.negpred_sym[g.atom.pred];
    }
    seq.toks.push_back(crasp::Token::symbol(sym));
    for (ObjId o : g.atom.args) push_obj(o);
  }
  seq.toks.push_back(crasp::Token::symbol(layout.sep));
  return seq;
}

DecodedRecord decode(const TokenSeq& tokens, const EncodingLayout& layout) {
  const Domain& d = *layout.domain;
  DecodedRecord rec;
  rec.instance.domain = layout.domain;

  const bool sigma_objects =
      layout.object_mode == EncodingLayout::ObjectMode::Sigma;
  std::map<std::int64_t, ObjId> by_value;
  if (sigma_objects) {
    rec.instance.objects = layout.fixed_objects;
  }
  // Token vocab may differ from layout.sigma; resolve by name.
  std::vector<int> to_sigma(tokens.vocab.size(), -1);
  for (std::size_t i = 0; i < tokens.vocab.size(); ++i) {
    for (std::size_t j = 0; j < layout.sigma.size(); ++j) {
      if (tokens.vocab[i] == layout.sigma[j]) {
        to_sigma[i] = static_cast<int>(j);
        break;
      }
    }
  }
  std::vector<ObjId> sym_to_obj(layout.sigma.size(), -1);
  if (sigma_objects) {
    for (std::size_t i = 0; i < layout.object_sym.size(); ++i) {
      sym_to_obj[layout.object_sym[i]] = static_cast<ObjId>(i);
    }
  }

  std::size_t pos = 0;
  auto sigma_at = [&](std::size_t p) -> int {
    if (p >= tokens.size() || tokens.toks[p].ext) return -1;
    return to_sigma[tokens.toks[p].sym];
  };
  if (sigma_at(pos) != layout.dollar) throw Error("record must start with $");
  ++pos;

  auto read_obj = [&](std::size_t p) -> ObjId {
    if (p >= tokens.size()) throw Error("truncated record");
    const crasp::Token& t = tokens.toks[p];
    if (sigma_objects) {
      int s = sigma_at(p);
      if (s < 0 || sym_to_obj[s] < 0) throw Error("expected an object token");
      return sym_to_obj[s];
    }
    if (!t.ext) throw Error("expected an extended object token");
    auto it = by_value.find(t.value);
    if (it != by_value.end()) return it->second;
    ObjId id = static_cast<ObjId>(rec.instance.objects.size());
    rec.instance.objects.push_back("o" + std::to_string(t.value));
    by_value[t.value] = id;
    return id;
  };

  int section = 0;
  std::vector<GroundAtom> init_atoms;
  while (pos < tokens.size()) {
    int s = sigma_at(pos);
    if (s == layout.sep) {
      ++section;
      ++pos;
      continue;
    }
    if (section == 0 || section == 2) {
      PredId p = -1;
      bool positive = true;
      for (std::size_t i = 0; i < layout.pred_sym.size(); ++i) {
        if (layout.pred_sym[i] == s) p = static_cast<PredId>(i);
        if (layout.negated_goals && layout.negpred_sym[i] == s) {
          p = static_cast<PredId>(i);
          positive = false;
        }
      }
      if (p < 0) throw Error("expected a predicate token");
      if (section == 0 && !positive) {
        throw Error("negated fact in the initial section");
      }
      GroundAtom a;
      a.pred = p;
      ++pos;
      for (int k = 0; k < d.pred_arity(p); ++k) a.args.push_back(read_obj(pos++));
      if (section == 0) {
        init_atoms.push_back(std::move(a));
      } else {
        rec.instance.goal.push_back({std::move(a), positive});
      }
    } else if (section == 1) {
      SchemaId a = -1;
      for (std::size_t i = 0; i < layout.schema_sym.size(); ++i) {
        if (layout.schema_sym[i] == s) a = static_cast<SchemaId>(i);
      }
      if (a < 0) throw Error("expected a schema token");
      GroundAction act;
      act.schema = a;
      ++pos;
      for (int k = 0; k < d.schemas[a].arity(); ++k) {
        act.args.push_back(read_obj(pos++));
      }
      rec.plan.actions.push_back(std::move(act));
    } else {
      throw Error("tokens after the final separator");
    }
  }
  if (section != 3) throw Error("record needs exactly three separators");
  rec.instance.init = State(std::move(init_atoms));
  return rec;
}

std::string explain(const CompilationReport& report, int line) {
  if (line < 1 || line > static_cast<int>(report.provenance.size())) {
    throw Error("line number out of range");
  }
  return report.provenance[line - 1];
}

// ---------------------------------------------------------------------------
// Shared program-building machinery
// ---------------------------------------------------------------------------

namespace {

class ProgBuilder {
 public:
  explicit ProgBuilder(const EncodingLayout& layout) : layout_(layout) {
    prog_.sigma = layout.sigma;
  }

  void step(std::string label) { label_ = std::move(label); }

  int initial(int sym) {
    auto it = initial_.find(sym);
    if (it != initial_.end()) return it->second;
    CraspOp op;
    op.kind = OpKind::Initial;
    op.sigma = sym;
    return initial_[sym] = push(op);
  }
  int one() {
    if (one_ < 0) {
      CraspOp op;
      op.kind = OpKind::ConstOne;
      one_ = push(op);
    }
    return one_;
  }
  int const_count(int k) {
    auto it = consts_.find(k);
    if (it != consts_.end()) return it->second;
    int idx;
    if (k == 0) {
      CraspOp op;
      op.kind = OpKind::Sub;
      op.a = op.b = one();
      idx = push(op);
    } else {
      idx = one();
      for (int i = 1; i < k; ++i) idx = add(idx, one());
    }
    return consts_[k] = idx;
  }
  int count_top(int b) {
    auto it = top_.find(b);
    if (it != top_.end()) return it->second;
    CraspOp op;
    op.kind = OpKind::Count;
    op.a = b;
    op.rel = LocalRel::all();
    return top_[b] = push(op);
  }
  int count_off(int b, int d) {
    auto key = std::make_pair(b, d);
    auto it = off_.find(key);
    if (it != off_.end()) return it->second;
    CraspOp op;
    op.kind = OpKind::Count;
    op.a = b;
    op.rel = LocalRel::offset(d);
    return off_[key] = push(op);
  }
  int leq(int a, int b) {
    CraspOp op;
    op.kind = OpKind::Leq;
    op.a = a;
    op.b = b;
    return push(op);
  }
  int eq_const(int c, int k) {
    auto key = std::make_pair(c, k);
    auto it = eqc_.find(key);
    if (it != eqc_.end()) return it->second;
    int kk = const_count(k);
    int r = land(leq(c, kk), leq(kk, c));
    return eqc_[key] = r;
  }
  int geq1(int c) {
    auto it = geq1_.find(c);
    if (it != geq1_.end()) return it->second;
    return geq1_[c] = leq(one(), c);
  }
  int land(int a, int b) {
    CraspOp op;
    op.kind = OpKind::And;
    op.a = a;
    op.b = b;
    return push(op);
  }
  int lnot(int a) {
    auto it = not_.find(a);
    if (it != not_.end()) return it->second;
    CraspOp op;
    op.kind = OpKind::Not;
    op.a = a;
    return not_[a] = push(op);
  }
  int lor(int a, int b) { return lnot(land(lnot(a), lnot(b))); }
  int ctrue() {
    if (true_ < 0) {
      CraspOp op;
      op.kind = OpKind::ConstTrue;
      true_ = push(op);
    }
    return true_;
  }
  int add(int a, int b) {
    CraspOp op;
    op.kind = OpKind::Add;
    op.a = a;
    op.b = b;
    return push(op);
  }
  int sub(int a, int b) {
    CraspOp op;
    op.kind = OpKind::Sub;
    op.a = a;
    op.b = b;
    return push(op);
  }
  int cond(int b, int t, int e) {
    CraspOp op;
    op.kind = OpKind::Cond;
    op.a = b;
    op.b = t;
    op.c = e;
    return push(op);
  }
  int match(MatchSpec spec) {
    CraspOp op;
    op.kind = OpKind::MatchCount;
    op.match = std::move(spec);
    return push(op);
  }
  // Count of positions j <= i (or j < i) in a boolean line.
  int count_top_strict(int b) {
    auto it = strict_top_.find(b);
    if (it != strict_top_.end()) return it->second;
    int r = sub(count_top(b), count_off(b, 0));
    return strict_top_[b] = r;
  }
  int sum(const std::vector<int>& parts) {
    if (parts.empty()) return const_count(0);
    int acc = parts[0];
    for (std::size_t i = 1; i < parts.size(); ++i) acc = add(acc, parts[i]);
    return acc;
  }
  int and_all(const std::vector<int>& parts) {
    if (parts.empty()) return ctrue();
    int acc = parts[0];
    for (std::size_t i = 1; i < parts.size(); ++i) acc = land(acc, parts[i]);
    return acc;
  }
  int or_all(const std::vector<int>& parts) {
    if (parts.empty()) return lnot(ctrue());
    int acc = parts[0];
    for (std::size_t i = 1; i < parts.size(); ++i) acc = lor(acc, parts[i]);
    return acc;
  }

  CraspProgram take(int output, int bandwidth) {
    prog_.output = output;
    prog_.bandwidth = bandwidth;
    crasp::typecheck(prog_);
    return std::move(prog_);
  }
  const std::vector<std::string>& provenance() const { return prov_; }
  int size() const { return static_cast<int>(prog_.ops.size()); }

  // Section machinery shared by both compilers.
  struct Sections {
    int in_init, in_plan, in_goal, at_end;
  };
  Sections sections() {
    step("CountSep");
    int qsep = initial(layout_.sep);
    int csep = count_top(qsep);
    Sections s;
    step("InInit");
    s.in_init = eq_const(csep, 0);
    step("InPlan");
    s.in_plan = eq_const(csep, 1);
    step("InGoal");
    s.in_goal = eq_const(csep, 2);
    step("End");
    s.at_end = eq_const(csep, 3);
    return s;
  }

 private:
  int push(const CraspOp& op) {
    prog_.ops.push_back(op);
    prov_.push_back(label_);
    return static_cast<int>(prog_.ops.size()) - 1;
  }

  struct PairHash {
    std::size_t operator()(const std::pair<int, int>& p) const {
      return std::hash<long long>()((static_cast<long long>(p.first) << 32) ^
                                    static_cast<unsigned>(p.second));
    }
  };

  const EncodingLayout& layout_;
  CraspProgram prog_;
  std::vector<std::string> prov_;
  std::string label_;
  std::map<int, int> initial_, consts_, top_, geq1_, not_, strict_top_;
  std::map<std::pair<int, int>, int> off_, eqc_;
  int one_ = -1;
  int true_ = -1;
};

DomainClass require_supported(const Domain& d, Mode mode) {
  DomainClass cls = classify_domain(d);
  if (!cls.strips) {
    throw NotSupportedError(
        "NotSupported: conditional-effect domains have no counting verifier");
  }
  if (mode == Mode::DeleteFree) {
    if (!cls.delete_free) {
      throw NotSupportedError(
          "NotSupported: delete-free mode needs a domain without delete "
          "effects");
    }
    return cls;
  }
  // Well-formed mode: accept only domains whose effects syntactically toggle,
  // i.e. every effect literal's complement appears among the preconditions.
  for (const ActionSchema& s : d.schemas) {
    for (const CondEffect& ce : s.effects) {
      for (const Literal& l : ce.eff) {
        bool complemented = false;
        for (const Literal& p : s.pre) {
          if (p.pred == l.pred && p.args == l.args &&
              p.positive != l.positive) {
            complemented = true;
            break;
          }
        }
        if (!complemented) {
          throw NotSupportedError(
              "NotSupported: schema " + s.name +
              " has an effect that does not strictly change value; general "
              "verification reduces to languages outside the counting class");
        }
      }
    }
  }
  return cls;
}

std::string atom_name(const EncodingLayout& layout, const GroundAtom& a) {
  const Domain& d = *layout.domain;
  std::string s = d.predicates[a.pred].name;
  if (!a.args.empty()) {
    s += "(";
    for (std::size_t i = 0; i < a.args.size(); ++i) {
      if (i) s += ",";
      s += layout.fixed_objects[a.args[i]];
    }
    s += ")";
  }
  return s;
}

std::string action_name(const EncodingLayout& layout, const GroundAction& a) {
  const Domain& d = *layout.domain;
  std::string s = d.schemas[a.schema].name;
  if (!a.args.empty()) {
    s += "(";
    for (std::size_t i = 0; i < a.args.size(); ++i) {
      if (i) s += ",";
      s += layout.fixed_objects[a.args[i]];
    }
    s += ")";
  }
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Fixed universe
// ---------------------------------------------------------------------------

CraspProgram compile_fixed(const EncodingLayout& layout, Mode mode,
                           CompilationReport* report) {
  if (layout.object_mode != EncodingLayout::ObjectMode::Sigma) {
    throw Error("fixed-universe compilation needs a Sigma-object layout");
  }
  const Domain& d = *layout.domain;
  require_supported(d, mode);

  const int n_objects = static_cast<int>(layout.fixed_objects.size());
  Instance scratch;  // object table for grounding schema constants
  scratch.domain = layout.domain;
  scratch.objects = layout.fixed_objects;

  // Every ground proposition.
  std::vector<GroundAtom> props;
  for (PredId p = 0; p < static_cast<PredId>(d.predicates.size()); ++p) {
    const int arity = d.pred_arity(p);
    std::vector<ObjId> args(arity, 0);
    if (arity == 0) {
      props.push_back({p, {}});
      continue;
    }
    if (n_objects == 0) continue;
    while (true) {
      props.push_back({p, args});
      int pos = arity - 1;
      while (pos >= 0 && ++args[pos] == n_objects) {
        args[pos] = 0;
        --pos;
      }
      if (pos < 0) break;
    }
  }
  std::map<GroundAtom, int> prop_index;
  for (std::size_t i = 0; i < props.size(); ++i) {
    prop_index[props[i]] = static_cast<int>(i);
  }

  // Every ground action, with its ground preconditions and effects.
  struct GA {
    GroundAction action;
    std::vector<std::pair<int, bool>> pre;  // (prop index, polarity)
    std::vector<int> adds, dels;
  };
  std::vector<GA> actions;
  for (SchemaId s = 0; s < static_cast<SchemaId>(d.schemas.size()); ++s) {
    for (GroundAction& ga : ground_schema(d, s, n_objects)) {
      GA rec;
      rec.action = ga;
      for (const Literal& l : d.schemas[s].pre) {
        GroundAtom a = ground_atom(d, scratch, l, ga.args);
        rec.pre.push_back({prop_index.at(a), l.positive});
      }
      for (const CondEffect& ce : d.schemas[s].effects) {
        for (const Literal& l : ce.eff) {
          GroundAtom a = ground_atom(d, scratch, l, ga.args);
          (l.positive ? rec.adds : rec.dels).push_back(prop_index.at(a));
        }
      }
      actions.push_back(std::move(rec));
    }
  }

  int bandwidth = 2;
  for (const PredicateDef& p : d.predicates) bandwidth = std::max(bandwidth, p.arity);
  for (const ActionSchema& s : d.schemas) bandwidth = std::max(bandwidth, s.arity());

  ProgBuilder b(layout);
  auto sec = b.sections();

  // Recognizer for a block of (head symbol, object symbols...) ending at the
  // current position, gated by its section.
  auto occurs = [&](int head_sym, const std::vector<ObjId>& args,
                    int section) {
    const int k = static_cast<int>(args.size());
    std::vector<int> parts;
    parts.push_back(b.eq_const(b.count_off(b.initial(head_sym), k), 1));
    for (int m = 0; m < k; ++m) {
      // args[m] sits at offset k-1-m from the block end.
      int sym = layout.object_sym[args[m]];
      parts.push_back(
          b.eq_const(b.count_off(b.initial(sym), k - 1 - m), 1));
    }
    parts.push_back(section);
    return b.and_all(parts);
  };

  std::vector<int> occurs_action(actions.size());
  for (std::size_t i = 0; i < actions.size(); ++i) {
    b.step("OccursAction " + action_name(layout, actions[i].action));
    occurs_action[i] =
        occurs(layout.schema_sym[actions[i].action.schema],
               actions[i].action.args, sec.in_plan);
  }
  std::vector<int> occurs_init(props.size()), occurs_goal(props.size());
  std::vector<int> occurs_goal_neg(props.size(), -1);
  for (std::size_t i = 0; i < props.size(); ++i) {
    b.step("OccursInitial " + atom_name(layout, props[i]));
    occurs_init[i] =
        occurs(layout.pred_sym[props[i].pred], props[i].args, sec.in_init);
    b.step("OccursGoal " + atom_name(layout, props[i]));
    occurs_goal[i] =
        occurs(layout.pred_sym[props[i].pred], props[i].args, sec.in_goal);
    if (layout.negated_goals) {
      b.step("OccursGoalNeg " + atom_name(layout, props[i]));
      occurs_goal_neg[i] = occurs(layout.negpred_sym[props[i].pred],
                                  props[i].args, sec.in_goal);
    }
  }

  // MadeTrue/MadeFalse: cumulative add/delete counts per proposition.
  std::vector<std::vector<int>> tp(props.size()), fp(props.size());
  for (std::size_t i = 0; i < actions.size(); ++i) {
    for (int p : actions[i].adds) tp[p].push_back(static_cast<int>(i));
    for (int p : actions[i].dels) fp[p].push_back(static_cast<int>(i));
  }
  std::vector<int> valid_p(props.size());
  for (std::size_t p = 0; p < props.size(); ++p) {
    b.step("MadeTrue " + atom_name(layout, props[p]));
    std::vector<int> adds;
    for (int a : tp[p]) adds.push_back(b.count_top(occurs_action[a]));
    int made_true = b.sum(adds);
    b.step("Valid " + atom_name(layout, props[p]));
    int was_in_init = b.geq1(b.count_top(occurs_init[p]));
    if (mode == Mode::WellFormed) {
      b.step("MadeFalse " + atom_name(layout, props[p]));
      std::vector<int> dels;
      for (int a : fp[p]) dels.push_back(b.count_top(occurs_action[a]));
      int made_false = b.sum(dels);
      b.step("Valid " + atom_name(layout, props[p]));
      int net = b.sub(made_true, made_false);
      valid_p[p] = b.lor(b.land(was_in_init, b.eq_const(net, 0)),
                         b.land(b.lnot(was_in_init), b.eq_const(net, 1)));
    } else {
      valid_p[p] = b.lor(was_in_init, b.geq1(made_true));
    }
  }

  // Precondition checks read the state one position before the action end.
  std::vector<int> prev_true(props.size(), -1), prev_false(props.size(), -1);
  auto prev_valid = [&](int p, bool positive) {
    auto& cache = positive ? prev_true : prev_false;
    if (cache[p] < 0) {
      b.step("PrevValid " + atom_name(layout, props[p]));
      int line = positive ? valid_p[p] : b.lnot(valid_p[p]);
      cache[p] = b.eq_const(b.count_off(line, 1), 1);
    }
    return cache[p];
  };

  std::vector<int> invalid_counts;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    b.step("PreCondPassed " + action_name(layout, actions[i].action));
    std::vector<int> conj;
    for (const auto& [p, positive] : actions[i].pre) {
      conj.push_back(prev_valid(p, positive));
    }
    int passed = b.and_all(conj);
    b.step("InvalidAction " + action_name(layout, actions[i].action));
    int invalid = b.land(occurs_action[i], b.lnot(passed));
    invalid_counts.push_back(b.count_top(invalid));
  }
  b.step("AllActionsValid");
  int all_actions_valid = b.eq_const(b.sum(invalid_counts), 0);

  b.step("GoalSat");
  std::vector<int> goal_ok;
  for (std::size_t p = 0; p < props.size(); ++p) {
    goal_ok.push_back(b.lor(b.lnot(occurs_goal[p]), valid_p[p]));
    if (occurs_goal_neg[p] >= 0) {
      goal_ok.push_back(
          b.lor(b.lnot(occurs_goal_neg[p]), b.lnot(valid_p[p])));
    }
  }
  int goal_sat = b.and_all(goal_ok);
  b.step("AllGoalsMet");
  int goals_met = b.eq_const(b.count_top(b.lnot(goal_sat)), 0);
  b.step("Phi_valid = AllActionsValid and AllGoalsMet");
  int out = b.land(sec.at_end, b.land(all_actions_valid, goals_met));

  if (report) {
    report->ground_actions = static_cast<int>(actions.size());
    report->ground_propositions = static_cast<int>(props.size());
  }
  CraspProgram prog = b.take(out, bandwidth);
  if (report) report->provenance = b.provenance();
  return prog;
}

// ---------------------------------------------------------------------------
// Variable universe
// ---------------------------------------------------------------------------

namespace {

// Occurrence of a predicate inside a schema body, with the 0-based parameter
// position carrying each predicate argument.
struct Occurrence {
  SchemaId schema = -1;
  PredId pred = -1;
  bool positive = true;
  std::vector<int> param_of_arg;
};

Occurrence make_occurrence(SchemaId s, const Literal& l) {
  Occurrence occ;
  occ.schema = s;
  occ.pred = l.pred;
  occ.positive = l.positive;
  for (const Term& t : l.args) {
    if (t.kind != Term::Kind::Var) {
      throw NotSupportedError(
          "NotSupported: variable-universe compilation cannot anchor schema "
          "constants");
    }
    occ.param_of_arg.push_back(t.index);
  }
  return occ;
}

}  // namespace

CraspProgram compile_variable(const EncodingLayout& layout, Mode mode,
                              CompilationReport* report) {
  const Domain& d = *layout.domain;
  require_supported(d, mode);

  // Effect occurrences per predicate.
  std::vector<std::vector<Occurrence>> adds(d.predicates.size());
  std::vector<std::vector<Occurrence>> dels(d.predicates.size());
  for (SchemaId s = 0; s < static_cast<SchemaId>(d.schemas.size()); ++s) {
    for (const CondEffect& ce : d.schemas[s].effects) {
      for (const Literal& l : ce.eff) {
        Occurrence occ = make_occurrence(s, l);
        (l.positive ? adds : dels)[l.pred].push_back(std::move(occ));
      }
    }
  }

  int bandwidth = 2;
  for (const PredicateDef& p : d.predicates) bandwidth = std::max(bandwidth, p.arity);
  for (const ActionSchema& s : d.schemas) bandwidth = std::max(bandwidth, s.arity());

  ProgBuilder b(layout);
  auto sec = b.sections();

  // Curr lines: a block of the named symbol ends here.
  std::vector<int> is_act(d.schemas.size());
  for (SchemaId s = 0; s < static_cast<SchemaId>(d.schemas.size()); ++s) {
    b.step("Curr " + d.schemas[s].name);
    int cur = b.geq1(
        b.count_off(b.initial(layout.schema_sym[s]), d.schemas[s].arity()));
    is_act[s] = b.land(cur, sec.in_plan);
  }
  std::vector<int> init_prop(d.predicates.size());
  std::vector<int> goal_prop(d.predicates.size());
  std::vector<int> goal_neg_prop(d.predicates.size(), -1);
  for (PredId p = 0; p < static_cast<PredId>(d.predicates.size()); ++p) {
    b.step("Curr " + d.predicates[p].name);
    int cur =
        b.geq1(b.count_off(b.initial(layout.pred_sym[p]), d.pred_arity(p)));
    init_prop[p] = b.land(cur, sec.in_init);
    goal_prop[p] = b.land(cur, sec.in_goal);
    if (layout.negated_goals) {
      b.step("Curr " + negated_name(d.predicates[p].name));
      int curn = b.geq1(
          b.count_off(b.initial(layout.negpred_sym[p]), d.pred_arity(p)));
      goal_neg_prop[p] = b.land(curn, sec.in_goal);
    }
  }

  // Match spec equating the arguments of a predicate occurrence near the
  // query position with a counted block. `query_gamma[t]` gives the query
  // offset of the predicate's t-th argument; the counted offsets come from
  // the occurrence (an action block) or the predicate block itself.
  auto occurrence_deltas = [&](const Occurrence& occ) {
    std::vector<int> deltas;
    const int k = d.schemas[occ.schema].arity();
    for (int t = 0; t < static_cast<int>(occ.param_of_arg.size()); ++t) {
      deltas.push_back(k - 1 - occ.param_of_arg[t]);
    }
    return deltas;
  };
  auto prop_deltas = [&](PredId p) {
    std::vector<int> deltas;
    for (int t = 0; t < d.pred_arity(p); ++t) {
      deltas.push_back(d.pred_arity(p) - 1 - t);
    }
    return deltas;
  };
  auto match_count = [&](const std::vector<int>& deltas,
                         const std::vector<int>& gammas, int filter,
                         bool strict) {
    MatchSpec spec;
    spec.filter = filter;
    spec.strict = strict;
    for (std::size_t t = 0; t < deltas.size(); ++t) {
      spec.conjuncts.push_back({deltas[t], gammas[t], 0});
    }
    return b.match(std::move(spec));
  };

  // Per-schema validity of the action ending at the current position.
  std::vector<int> invalid_counts;
  for (SchemaId s = 0; s < static_cast<SchemaId>(d.schemas.size()); ++s) {
    const ActionSchema& schema = d.schemas[s];
    std::vector<int> satisfied;
    for (std::size_t pi = 0; pi < schema.pre.size(); ++pi) {
      const Literal& lit = schema.pre[pi];
      Occurrence self = make_occurrence(s, lit);
      std::vector<int> gammas = occurrence_deltas(self);
      const std::string tag = "(action=" + schema.name +
                              ", pred=" + d.predicates[lit.pred].name + "#" +
                              std::to_string(pi) + ")";
      const bool nullary = lit.args.empty();

      b.step("V_init " + tag);
      int v_init = nullary
                       ? b.count_top_strict(init_prop[lit.pred])
                       : match_count(prop_deltas(lit.pred), gammas,
                                     init_prop[lit.pred], /*strict=*/true);
      std::vector<int> add_parts{v_init};
      for (const Occurrence& occ : adds[lit.pred]) {
        b.step("V_add " + tag + " by " + d.schemas[occ.schema].name);
        add_parts.push_back(
            nullary ? b.count_top_strict(is_act[occ.schema])
                    : match_count(occurrence_deltas(occ), gammas,
                                  is_act[occ.schema], /*strict=*/true));
      }
      b.step("Satisfied " + tag);
      int established = b.sum(add_parts);
      int value;
      if (mode == Mode::WellFormed) {
        std::vector<int> del_parts;
        for (const Occurrence& occ : dels[lit.pred]) {
          b.step("V_del " + tag + " by " + d.schemas[occ.schema].name);
          del_parts.push_back(
              nullary ? b.count_top_strict(is_act[occ.schema])
                      : match_count(occurrence_deltas(occ), gammas,
                                    is_act[occ.schema], /*strict=*/true));
        }
        b.step("Satisfied " + tag);
        int current = del_parts.empty()
                          ? established
                          : b.sub(established, b.sum(del_parts));
        value = b.eq_const(current, lit.positive ? 1 : 0);
      } else {
        value = lit.positive ? b.geq1(established) : b.eq_const(established, 0);
      }
      satisfied.push_back(value);
    }
    b.step("Valid " + schema.name);
    int valid = b.and_all(satisfied);
    b.step("InvalidAction " + schema.name);
    int invalid = b.land(is_act[s], b.lnot(valid));
    invalid_counts.push_back(b.count_top(invalid));
  }
  b.step("AllActionsValid");
  int all_actions_valid = b.land(sec.at_end, b.eq_const(b.sum(invalid_counts), 0));

  // Goal checks per predicate; the counters serve both the positive and the
  // negated entries since both block shapes match.
  std::vector<int> unsat_parts;
  for (PredId p = 0; p < static_cast<PredId>(d.predicates.size()); ++p) {
    const bool nullary = d.pred_arity(p) == 0;
    std::vector<int> gammas = prop_deltas(p);
    b.step("G_init " + d.predicates[p].name);
    int g_init = nullary ? b.count_top(init_prop[p])
                         : match_count(prop_deltas(p), gammas, init_prop[p],
                                       /*strict=*/false);
    std::vector<int> add_parts{g_init};
    for (const Occurrence& occ : adds[p]) {
      b.step("G_add " + d.predicates[p].name + " by " +
             d.schemas[occ.schema].name);
      add_parts.push_back(nullary
                              ? b.count_top(is_act[occ.schema])
                              : match_count(occurrence_deltas(occ), gammas,
                                            is_act[occ.schema],
                                            /*strict=*/false));
    }
    b.step("GoalSat " + d.predicates[p].name);
    int established = b.sum(add_parts);
    int sat_pos, sat_neg;
    if (mode == Mode::WellFormed) {
      std::vector<int> del_parts;
      for (const Occurrence& occ : dels[p]) {
        b.step("G_del " + d.predicates[p].name + " by " +
               d.schemas[occ.schema].name);
        del_parts.push_back(nullary
                                ? b.count_top(is_act[occ.schema])
                                : match_count(occurrence_deltas(occ), gammas,
                                              is_act[occ.schema],
                                              /*strict=*/false));
      }
      b.step("GoalSat " + d.predicates[p].name);
      int current = del_parts.empty() ? established
                                      : b.sub(established, b.sum(del_parts));
      sat_pos = b.eq_const(current, 1);
      sat_neg = b.eq_const(current, 0);
    } else {
      sat_pos = b.geq1(established);
      sat_neg = b.eq_const(established, 0);
    }
    b.step("UnsatisfiedGoal " + d.predicates[p].name);
    unsat_parts.push_back(b.land(goal_prop[p], b.lnot(sat_pos)));
    if (goal_neg_prop[p] >= 0) {
      unsat_parts.push_back(b.land(goal_neg_prop[p], b.lnot(sat_neg)));
    }
  }
  b.step("UnsatisfiedGoal");
  int unsatisfied = b.land(sec.in_goal, b.or_all(unsat_parts));
  b.step("AllGoalsMet");
  int goals_met = b.land(sec.at_end, b.eq_const(b.count_top(unsatisfied), 0));
  b.step("Phi_valid = AllActionsValid and AllGoalsMet");
  int out = b.land(all_actions_valid, goals_met);

  if (report) {
    report->ground_actions = static_cast<int>(d.schemas.size());
    report->ground_propositions = static_cast<int>(d.predicates.size());
  }
  CraspProgram prog = b.take(out, bandwidth);
  if (report) report->provenance = b.provenance();
  return prog;
}

}  // namespace planlab::compile
