#include "planlab/strips.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace planlab {

PredId Domain::pred_index(const std::string& name) const {
  for (std::size_t i = 0; i < predicates.size(); ++i) {
    if (predicates[i].name == name) return static_cast<PredId>(i);
  }
  return -1;
}

SchemaId Domain::schema_index(const std::string& name) const {
  for (std::size_t i = 0; i < schemas.size(); ++i) {
    if (schemas[i].name == name) return static_cast<SchemaId>(i);
  }
  return -1;
}

namespace {

void validate_literal(const Domain& d, const ActionSchema& s,
                      const Literal& lit, const char* where) {
  if (lit.pred < 0 || lit.pred >= static_cast<PredId>(d.predicates.size())) {
    throw Error("literal with unknown predicate in schema " + s.name);
  }
  const PredicateDef& p = d.predicates[lit.pred];
  if (static_cast<int>(lit.args.size()) != p.arity) {
    throw Error("arity mismatch for predicate " + p.name + " in schema " +
                s.name + " (" + where + "): expected " +
                std::to_string(p.arity) + ", got " +
                std::to_string(lit.args.size()));
  }
  for (const Term& t : lit.args) {
    if (t.kind == Term::Kind::Var) {
      if (t.index < 0 || t.index >= s.arity()) {
        throw Error("unbound variable in schema " + s.name + " (" + where +
                    ") for predicate " + p.name);
      }
    } else {
      if (t.index < 0 || t.index >= static_cast<int>(d.constants.size())) {
        throw Error("unknown constant in schema " + s.name);
      }
    }
  }
}

}  // namespace

void Domain::validate() const {
  std::set<std::string> names;
  for (const PredicateDef& p : predicates) {
    if (p.arity < 0) throw Error("negative arity for predicate " + p.name);
    if (!names.insert(p.name).second) {
      throw Error("duplicate predicate name " + p.name);
    }
  }
  std::set<std::string> snames;
  for (const ActionSchema& s : schemas) {
    if (!snames.insert(s.name).second) {
      throw Error("duplicate schema name " + s.name);
    }
    for (const Literal& l : s.pre) validate_literal(*this, s, l, "pre");
    for (const CondEffect& ce : s.effects) {
      for (const Literal& l : ce.cond) validate_literal(*this, s, l, "cond");
      std::set<std::pair<PredId, std::vector<Term>>> pos, neg;
      for (const Literal& l : ce.eff) {
        validate_literal(*this, s, l, "eff");
        auto key = std::make_pair(l.pred, l.args);
        (l.positive ? pos : neg).insert(key);
      }
      for (const auto& key : pos) {
        if (neg.count(key)) {
          throw Error("inconsistent effect set in schema " + s.name);
        }
      }
    }
  }
}

State::State(std::vector<GroundAtom> atoms) : atoms_(std::move(atoms)) {
  std::sort(atoms_.begin(), atoms_.end());
  atoms_.erase(std::unique(atoms_.begin(), atoms_.end()), atoms_.end());
}

bool State::contains(const GroundAtom& a) const {
  return std::binary_search(atoms_.begin(), atoms_.end(), a);
}

void State::insert(const GroundAtom& a) {
  auto it = std::lower_bound(atoms_.begin(), atoms_.end(), a);
  if (it == atoms_.end() || *it != a) atoms_.insert(it, a);
}

void State::erase(const GroundAtom& a) {
  auto it = std::lower_bound(atoms_.begin(), atoms_.end(), a);
  if (it != atoms_.end() && *it == a) atoms_.erase(it);
}

ObjId Instance::object_index(const std::string& name) const {
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (objects[i] == name) return static_cast<ObjId>(i);
  }
  return -1;
}

void Instance::validate() const {
  if (!domain) throw Error("instance without domain");
  domain->validate();
  for (const std::string& c : domain->constants) {
    if (object_index(c) < 0) {
      throw Error("domain constant " + c + " missing from object list");
    }
  }
  auto check_atom = [&](const GroundAtom& a) {
    if (a.pred < 0 || a.pred >= static_cast<PredId>(domain->predicates.size()))
      throw Error("unknown predicate in instance");
    if (static_cast<int>(a.args.size()) != domain->pred_arity(a.pred))
      throw Error("arity mismatch in instance for predicate " +
                  domain->predicates[a.pred].name);
    for (ObjId o : a.args) {
      if (o < 0 || o >= static_cast<ObjId>(objects.size()))
        throw Error("unknown object in instance");
    }
  };
  for (const GroundAtom& a : init.atoms()) check_atom(a);
  for (const GroundLiteral& l : goal) check_atom(l.atom);
}

bool holds(const State& state, std::span<const GroundLiteral> literals) {
  for (const GroundLiteral& l : literals) {
    if (state.contains(l.atom) != l.positive) return false;
  }
  return true;
}

GroundAtom ground_atom(const Domain& domain, const Instance& instance,
                       const Literal& lit, std::span<const ObjId> action_args) {
  GroundAtom a;
  a.pred = lit.pred;
  a.args.reserve(lit.args.size());
  for (const Term& t : lit.args) {
    if (t.kind == Term::Kind::Var) {
      a.args.push_back(action_args[t.index]);
    } else {
      ObjId o = instance.object_index(domain.constants[t.index]);
      if (o < 0) {
        throw UnknownSymbolError("constant " + domain.constants[t.index] +
                                 " not among instance objects");
      }
      a.args.push_back(o);
    }
  }
  return a;
}

std::vector<GroundAction> ground_schema(const Domain& domain, SchemaId schema,
                                        int n_objects) {
  if (schema < 0 || schema >= static_cast<SchemaId>(domain.schemas.size())) {
    throw UnknownSymbolError("schema index out of range");
  }
  const int arity = domain.schemas[schema].arity();
  std::vector<GroundAction> out;
  std::vector<ObjId> args(arity, 0);
  if (arity == 0) {
    out.push_back({schema, {}});
    return out;
  }
  if (n_objects == 0) return out;
  while (true) {
    out.push_back({schema, args});
    int pos = arity - 1;
    while (pos >= 0 && ++args[pos] == n_objects) {
      args[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  return out;
}

namespace {

void check_action(const Instance& instance, const GroundAction& action) {
  const Domain& d = *instance.domain;
  if (action.schema < 0 ||
      action.schema >= static_cast<SchemaId>(d.schemas.size())) {
    throw UnknownSymbolError("unknown schema in plan");
  }
  const ActionSchema& s = d.schemas[action.schema];
  if (static_cast<int>(action.args.size()) != s.arity()) {
    throw Error("action " + s.name + " expects " + std::to_string(s.arity()) +
                " arguments, got " + std::to_string(action.args.size()));
  }
  for (ObjId o : action.args) {
    if (o < 0 || o >= static_cast<ObjId>(instance.objects.size())) {
      throw UnknownSymbolError("unknown object in plan");
    }
  }
}

}  // namespace

std::vector<GroundLiteral> ground_preconditions(const Domain& domain,
                                                const Instance& instance,
                                                const GroundAction& action) {
  const ActionSchema& s = domain.schemas[action.schema];
  std::vector<GroundLiteral> out;
  out.reserve(s.pre.size());
  for (const Literal& l : s.pre) {
    out.push_back({ground_atom(domain, instance, l, action.args), l.positive});
  }
  return out;
}

bool applicable(const Instance& instance, const State& state,
                const GroundAction& action) {
  check_action(instance, action);
  auto pre = ground_preconditions(*instance.domain, instance, action);
  return holds(state, pre);
}

State succ(const Instance& instance, const State& state,
           const GroundAction& action) {
  check_action(instance, action);
  const Domain& d = *instance.domain;
  const ActionSchema& s = d.schemas[action.schema];

  // Conditions are evaluated against the pre-state; the union of all
  // triggered effect sets is applied, deletes before adds.
  std::vector<GroundAtom> adds, dels;
  for (const CondEffect& ce : s.effects) {
    std::vector<GroundLiteral> cond;
    cond.reserve(ce.cond.size());
    for (const Literal& l : ce.cond) {
      cond.push_back({ground_atom(d, instance, l, action.args), l.positive});
    }
    if (!holds(state, cond)) continue;
    for (const Literal& l : ce.eff) {
      GroundAtom a = ground_atom(d, instance, l, action.args);
      (l.positive ? adds : dels).push_back(std::move(a));
    }
  }
  std::sort(adds.begin(), adds.end());
  adds.erase(std::unique(adds.begin(), adds.end()), adds.end());
  std::sort(dels.begin(), dels.end());
  dels.erase(std::unique(dels.begin(), dels.end()), dels.end());
  for (const GroundAtom& a : adds) {
    if (std::binary_search(dels.begin(), dels.end(), a)) {
      throw ConflictingEffectsError(
          "triggered effects of " + s.name + " assert " +
          atom_to_string(d, instance, a) + " both positively and negatively");
    }
  }
  State next = state;
  for (const GroundAtom& a : dels) next.erase(a);
  for (const GroundAtom& a : adds) next.insert(a);
  return next;
}

SimResult simulate(const Instance& instance, const Plan& plan) {
  SimResult res;
  res.trace.push_back(instance.init);
  for (std::size_t i = 0; i < plan.actions.size(); ++i) {
    const GroundAction& a = plan.actions[i];
    check_action(instance, a);
    const State& cur = res.trace.back();
    auto pre = ground_preconditions(*instance.domain, instance, a);
    bool ok = true;
    for (const GroundLiteral& l : pre) {
      if (cur.contains(l.atom) != l.positive) {
        res.verdict.status = Verdict::Status::NonExecutable;
        res.verdict.step = static_cast<int>(i) + 1;
        res.verdict.violated = l;
        ok = false;
        break;
      }
    }
    if (!ok) return res;
    res.trace.push_back(succ(instance, cur, a));
  }
  const State& final_state = res.trace.back();
  for (const GroundLiteral& g : instance.goal) {
    if (final_state.contains(g.atom) != g.positive) {
      res.verdict.unsat_goals.push_back(g);
    }
  }
  res.verdict.status = res.verdict.unsat_goals.empty()
                           ? Verdict::Status::Valid
                           : Verdict::Status::Incomplete;
  return res;
}

DomainClass classify_domain(const Domain& domain) {
  DomainClass c;
  bool strips = true;
  for (const ActionSchema& s : domain.schemas) {
    if (s.effects.size() > 1) strips = false;
    for (const CondEffect& ce : s.effects) {
      if (!ce.cond.empty()) strips = false;
    }
  }
  c.strips = strips;
  c.conditional_effects = !strips;
  if (strips) {
    bool df = true;
    for (const ActionSchema& s : domain.schemas) {
      for (const CondEffect& ce : s.effects) {
        for (const Literal& l : ce.eff) {
          if (!l.positive) df = false;
        }
      }
    }
    c.delete_free = df;
  }
  return c;
}

std::vector<AuditViolation> audit_well_formed_trace(const Instance& instance,
                                                    const Plan& plan) {
  SimResult sim = simulate(instance, plan);
  if (sim.verdict.status == Verdict::Status::NonExecutable) {
    throw Error("plan not executable at step " +
                std::to_string(sim.verdict.step));
  }
  const Domain& d = *instance.domain;
  std::vector<AuditViolation> out;
  for (std::size_t i = 0; i < plan.actions.size(); ++i) {
    const GroundAction& a = plan.actions[i];
    const State& pre_state = sim.trace[i];
    const ActionSchema& s = d.schemas[a.schema];
    for (const CondEffect& ce : s.effects) {
      std::vector<GroundLiteral> cond;
      for (const Literal& l : ce.cond) {
        cond.push_back({ground_atom(d, instance, l, a.args), l.positive});
      }
      if (!holds(pre_state, cond)) continue;
      for (const Literal& l : ce.eff) {
        GroundLiteral gl{ground_atom(d, instance, l, a.args), l.positive};
        // Well-formedness asks the effect literal to strictly change value,
        // i.e. the pre-state must satisfy its negation.
        if (pre_state.contains(gl.atom) == gl.positive) {
          out.push_back({static_cast<int>(i) + 1, gl});
        }
      }
    }
  }
  return out;
}

std::string atom_to_string(const Domain& domain, const Instance& instance,
                           const GroundAtom& atom) {
  std::ostringstream os;
  os << domain.predicates[atom.pred].name;
  if (!atom.args.empty()) {
    os << "(";
    for (std::size_t i = 0; i < atom.args.size(); ++i) {
      if (i) os << ",";
      os << instance.objects[atom.args[i]];
    }
    os << ")";
  }
  return os.str();
}

std::string literal_to_string(const Domain& domain, const Instance& instance,
                              const GroundLiteral& lit) {
  std::string s = atom_to_string(domain, instance, lit.atom);
  return lit.positive ? s : "not " + s;
}

std::string action_to_string(const Domain& domain, const Instance& instance,
                             const GroundAction& action) {
  std::ostringstream os;
  os << domain.schemas[action.schema].name;
  if (!action.args.empty()) {
    os << "(";
    for (std::size_t i = 0; i < action.args.size(); ++i) {
      if (i) os << ",";
      os << instance.objects[action.args[i]];
    }
    os << ")";
  }
  return os.str();
}

}  // namespace planlab
