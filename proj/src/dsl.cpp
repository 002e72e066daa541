#include "planlab/dsl.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <sstream>
#include <variant>

namespace planlab::dsl {

namespace {

// ---------------------------------------------------------------------------
// S-expressions (.pdom / .pinst / .pplan)
// ---------------------------------------------------------------------------

struct Sexp {
  // Atom when children is empty and atom non-empty; list otherwise.
  std::string atom;
  std::vector<Sexp> children;
  bool is_list = false;
  SourceSpan span;

  bool is_atom() const { return !is_list; }
};

class SexpParser {
 public:
  explicit SexpParser(std::string_view text) : text_(text) {}

  std::vector<Sexp> parse_all() {
    std::vector<Sexp> out;
    skip_ws();
    while (!eof()) {
      out.push_back(parse_one());
      skip_ws();
    }
    return out;
  }

 private:
  bool eof() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  SourceSpan here() const { return {pos_, pos_, line_, col_}; }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_ws() {
    while (!eof()) {
      char c = peek();
      if (c == ';') {
        while (!eof() && peek() != '\n') advance();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else {
        break;
      }
    }
  }

  Sexp parse_one() {
    skip_ws();
    if (eof()) throw ParseError(here(), "unexpected end of input", "a form");
    SourceSpan start = here();
    if (peek() == '(') {
      advance();
      Sexp list;
      list.is_list = true;
      list.span = start;
      skip_ws();
      while (!eof() && peek() != ')') {
        list.children.push_back(parse_one());
        skip_ws();
      }
      if (eof()) throw ParseError(start, "unterminated list", ")");
      advance();  // ')'
      list.span.end = pos_;
      return list;
    }
    if (peek() == ')') {
      throw ParseError(here(), "unmatched ')'");
    }
    Sexp atom;
    atom.span = start;
    if (peek() == '"') {
      advance();
      while (!eof() && peek() != '"') {
        atom.atom.push_back(peek());
        advance();
      }
      if (eof()) throw ParseError(start, "unterminated string", "\"");
      advance();
    } else {
      while (!eof() && !std::isspace(static_cast<unsigned char>(peek())) &&
             peek() != '(' && peek() != ')' && peek() != ';') {
        atom.atom.push_back(peek());
        advance();
      }
    }
    atom.span.end = pos_;
    return atom;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

const Sexp& expect_list(const Sexp& s, const char* what) {
  if (!s.is_list) throw ParseError(s.span, "expected a list", what);
  return s;
}

const std::string& expect_atom(const Sexp& s, const char* what) {
  if (s.is_list || s.atom.empty())
    throw ParseError(s.span, "expected an atom", what);
  return s.atom;
}

const std::string& head(const Sexp& s) {
  expect_list(s, "form");
  if (s.children.empty() || !s.children[0].is_atom())
    throw ParseError(s.span, "form needs a keyword head");
  return s.children[0].atom;
}

int parse_int_atom(const Sexp& s, const char* what) {
  const std::string& a = expect_atom(s, what);
  try {
    std::size_t used = 0;
    int v = std::stoi(a, &used);
    if (used != a.size()) throw std::invalid_argument(a);
    return v;
  } catch (const std::exception&) {
    throw ParseError(s.span, "not an integer: " + a, what);
  }
}

// A literal form: (pred t1 ... tk) or (not (pred ...)).
Literal parse_literal(const Sexp& form, const Domain& d,
                      const ActionSchema& schema) {
  const Sexp* inner = &form;
  bool positive = true;
  expect_list(form, "literal");
  if (!form.children.empty() && form.children[0].is_atom() &&
      form.children[0].atom == "not") {
    if (form.children.size() != 2)
      throw ParseError(form.span, "(not ...) takes one literal");
    positive = false;
    inner = &form.children[1];
    expect_list(*inner, "literal");
  }
  if (inner->children.empty())
    throw ParseError(inner->span, "empty literal");
  const std::string& pname = expect_atom(inner->children[0], "predicate name");
  PredId p = d.pred_index(pname);
  if (p < 0) throw ParseError(inner->children[0].span,
                              "unknown predicate " + pname);
  Literal lit;
  lit.pred = p;
  lit.positive = positive;
  const int arity = d.pred_arity(p);
  if (static_cast<int>(inner->children.size()) - 1 != arity) {
    throw ParseError(inner->span,
                     "predicate " + pname + " expects " +
                         std::to_string(arity) + " arguments, got " +
                         std::to_string(inner->children.size() - 1));
  }
  for (std::size_t i = 1; i < inner->children.size(); ++i) {
    const std::string& t = expect_atom(inner->children[i], "term");
    bool bound = false;
    for (std::size_t v = 0; v < schema.params.size(); ++v) {
      if (schema.params[v] == t) {
        lit.args.push_back(Term::var(static_cast<int>(v)));
        bound = true;
        break;
      }
    }
    if (bound) continue;
    for (std::size_t c = 0; c < d.constants.size(); ++c) {
      if (d.constants[c] == t) {
        lit.args.push_back(Term::constant(static_cast<int>(c)));
        bound = true;
        break;
      }
    }
    if (!bound) {
      throw ParseError(inner->children[i].span,
                       "unbound variable " + t + " in schema " + schema.name);
    }
  }
  return lit;
}

GroundLiteral parse_ground_literal(const Sexp& form, const Instance& inst) {
  const Domain& d = *inst.domain;
  const Sexp* inner = &form;
  bool positive = true;
  expect_list(form, "literal");
  if (!form.children.empty() && form.children[0].is_atom() &&
      form.children[0].atom == "not") {
    if (form.children.size() != 2)
      throw ParseError(form.span, "(not ...) takes one literal");
    positive = false;
    inner = &form.children[1];
    expect_list(*inner, "literal");
  }
  if (inner->children.empty()) throw ParseError(inner->span, "empty literal");
  const std::string& pname = expect_atom(inner->children[0], "predicate name");
  PredId p = d.pred_index(pname);
  if (p < 0)
    throw ParseError(inner->children[0].span, "unknown predicate " + pname);
  GroundLiteral lit;
  lit.atom.pred = p;
  lit.positive = positive;
  if (static_cast<int>(inner->children.size()) - 1 != d.pred_arity(p)) {
    throw ParseError(inner->span, "arity mismatch for predicate " + pname);
  }
  for (std::size_t i = 1; i < inner->children.size(); ++i) {
    const std::string& o = expect_atom(inner->children[i], "object");
    ObjId id = inst.object_index(o);
    if (id < 0)
      throw ParseError(inner->children[i].span, "unknown object " + o);
    lit.atom.args.push_back(id);
  }
  return lit;
}

bool needs_quotes(const std::string& s) {
  if (s.empty()) return true;
  if (std::isdigit(static_cast<unsigned char>(s[0]))) return true;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' ||
          c == '-')) {
      return true;
    }
  }
  // Keywords of the s-expression formats.
  return s == "not";
}

std::string quoted(const std::string& s) {
  return needs_quotes(s) ? "\"" + s + "\"" : s;
}

std::string term_name(const Domain& d, const ActionSchema& s, const Term& t) {
  return t.kind == Term::Kind::Var ? s.params[t.index] : d.constants[t.index];
}

void write_literal(std::ostream& os, const Domain& d, const ActionSchema& s,
                   const Literal& lit) {
  if (!lit.positive) os << "(not ";
  os << "(" << quoted(d.predicates[lit.pred].name);
  for (const Term& t : lit.args) os << " " << quoted(term_name(d, s, t));
  os << ")";
  if (!lit.positive) os << ")";
}

void write_ground_literal(std::ostream& os, const Instance& inst,
                          const GroundLiteral& lit) {
  const Domain& d = *inst.domain;
  if (!lit.positive) os << "(not ";
  os << "(" << quoted(d.predicates[lit.atom.pred].name);
  for (ObjId o : lit.atom.args) os << " " << quoted(inst.objects[o]);
  os << ")";
  if (!lit.positive) os << ")";
}

}  // namespace

Domain parse_domain(std::string_view text) {
  SexpParser parser(text);
  std::vector<Sexp> top = parser.parse_all();
  if (top.size() != 1 || head(top[0]) != "domain") {
    throw ParseError(top.empty() ? SourceSpan{} : top[0].span,
                     "expected a single (domain ...) form");
  }
  const Sexp& dom = top[0];
  Domain d;
  // First pass: predicates and constants so schema bodies can resolve names.
  for (std::size_t i = 1; i < dom.children.size(); ++i) {
    const Sexp& form = dom.children[i];
    const std::string& h = head(form);
    if (h == "predicate") {
      if (form.children.size() != 3)
        throw ParseError(form.span, "(predicate name arity)");
      PredicateDef p;
      p.name = expect_atom(form.children[1], "predicate name");
      p.arity = parse_int_atom(form.children[2], "arity");
      d.predicates.push_back(std::move(p));
    } else if (h == "constants") {
      for (std::size_t j = 1; j < form.children.size(); ++j) {
        d.constants.push_back(expect_atom(form.children[j], "constant"));
      }
    } else if (h != "schema") {
      throw ParseError(form.span, "unknown domain form " + h);
    }
  }
  for (std::size_t i = 1; i < dom.children.size(); ++i) {
    const Sexp& form = dom.children[i];
    if (head(form) != "schema") continue;
    if (form.children.size() < 3)
      throw ParseError(form.span, "(schema name (params ...) ...)");
    ActionSchema s;
    s.name = expect_atom(form.children[1], "schema name");
    const Sexp& params = expect_list(form.children[2], "(params ...)");
    if (head(params) != "params")
      throw ParseError(params.span, "expected (params ...)");
    for (std::size_t j = 1; j < params.children.size(); ++j) {
      s.params.push_back(expect_atom(params.children[j], "parameter"));
    }
    for (std::size_t j = 3; j < form.children.size(); ++j) {
      const Sexp& part = form.children[j];
      const std::string& h = head(part);
      if (h == "pre") {
        for (std::size_t k = 1; k < part.children.size(); ++k) {
          s.pre.push_back(parse_literal(part.children[k], d, s));
        }
      } else if (h == "eff") {
        CondEffect ce;
        for (std::size_t k = 1; k < part.children.size(); ++k) {
          ce.eff.push_back(parse_literal(part.children[k], d, s));
        }
        s.effects.push_back(std::move(ce));
      } else if (h == "when") {
        if (part.children.size() != 3)
          throw ParseError(part.span, "(when (cond...) (eff...))");
        CondEffect ce;
        const Sexp& cond = expect_list(part.children[1], "condition list");
        for (const Sexp& c : cond.children) {
          ce.cond.push_back(parse_literal(c, d, s));
        }
        const Sexp& eff = expect_list(part.children[2], "effect list");
        for (const Sexp& e : eff.children) {
          ce.eff.push_back(parse_literal(e, d, s));
        }
        s.effects.push_back(std::move(ce));
      } else {
        throw ParseError(part.span, "unknown schema form " + h);
      }
    }
    if (s.effects.empty()) s.effects.push_back({});
    d.schemas.push_back(std::move(s));
  }
  try {
    d.validate();
  } catch (const Error& e) {
    throw ParseError(dom.span, e.what());
  }
  return d;
}

std::string serialize_domain(const Domain& d) {
  std::ostringstream os;
  os << "(domain\n";
  for (const PredicateDef& p : d.predicates) {
    os << "  (predicate " << quoted(p.name) << " " << p.arity << ")\n";
  }
  if (!d.constants.empty()) {
    os << "  (constants";
    for (const std::string& c : d.constants) os << " " << quoted(c);
    os << ")\n";
  }
  for (const ActionSchema& s : d.schemas) {
    os << "  (schema " << quoted(s.name) << " (params";
    for (const std::string& p : s.params) os << " " << quoted(p);
    os << ")\n    (pre";
    for (const Literal& l : s.pre) {
      os << " ";
      write_literal(os, d, s, l);
    }
    os << ")\n";
    const bool plain = s.effects.size() == 1 && s.effects[0].cond.empty();
    if (plain) {
      os << "    (eff";
      for (const Literal& l : s.effects[0].eff) {
        os << " ";
        write_literal(os, d, s, l);
      }
      os << "))\n";
    } else {
      for (std::size_t i = 0; i < s.effects.size(); ++i) {
        const CondEffect& ce = s.effects[i];
        os << "    (when (";
        for (std::size_t k = 0; k < ce.cond.size(); ++k) {
          if (k) os << " ";
          write_literal(os, d, s, ce.cond[k]);
        }
        os << ") (";
        for (std::size_t k = 0; k < ce.eff.size(); ++k) {
          if (k) os << " ";
          write_literal(os, d, s, ce.eff[k]);
        }
        os << ")" << (i + 1 == s.effects.size() ? "))" : ")") << "\n";
      }
    }
  }
  os << ")\n";
  return os.str();
}

Instance parse_instance(std::string_view text,
                        std::shared_ptr<const Domain> domain) {
  SexpParser parser(text);
  std::vector<Sexp> top = parser.parse_all();
  if (top.size() != 1 || head(top[0]) != "instance") {
    throw ParseError(top.empty() ? SourceSpan{} : top[0].span,
                     "expected a single (instance ...) form");
  }
  Instance inst;
  inst.domain = std::move(domain);
  const Sexp& root = top[0];
  for (std::size_t i = 1; i < root.children.size(); ++i) {
    const Sexp& form = root.children[i];
    const std::string& h = head(form);
    if (h == "objects") {
      for (std::size_t j = 1; j < form.children.size(); ++j) {
        inst.objects.push_back(expect_atom(form.children[j], "object"));
      }
    } else if (h == "init") {
      std::vector<GroundAtom> atoms;
      for (std::size_t j = 1; j < form.children.size(); ++j) {
        GroundLiteral l = parse_ground_literal(form.children[j], inst);
        if (!l.positive) {
          throw ParseError(form.children[j].span,
                           "initial state lists positive facts only");
        }
        atoms.push_back(std::move(l.atom));
      }
      inst.init = State(std::move(atoms));
    } else if (h == "goal") {
      for (std::size_t j = 1; j < form.children.size(); ++j) {
        inst.goal.push_back(parse_ground_literal(form.children[j], inst));
      }
    } else {
      throw ParseError(form.span, "unknown instance form " + h);
    }
  }
  try {
    inst.validate();
  } catch (const Error& e) {
    throw ParseError(root.span, e.what());
  }
  return inst;
}

std::string serialize_instance(const Instance& inst) {
  std::ostringstream os;
  os << "(instance\n  (objects";
  for (const std::string& o : inst.objects) os << " " << quoted(o);
  os << ")\n  (init";
  for (const GroundAtom& a : inst.init.atoms()) {
    os << " ";
    write_ground_literal(os, inst, {a, true});
  }
  os << ")\n  (goal";
  for (const GroundLiteral& g : inst.goal) {
    os << " ";
    write_ground_literal(os, inst, g);
  }
  os << "))\n";
  return os.str();
}

Plan parse_plan(std::string_view text, const Instance& inst) {
  SexpParser parser(text);
  std::vector<Sexp> top = parser.parse_all();
  if (top.size() != 1 || head(top[0]) != "plan") {
    throw ParseError(top.empty() ? SourceSpan{} : top[0].span,
                     "expected a single (plan ...) form");
  }
  Plan plan;
  const Domain& d = *inst.domain;
  for (std::size_t i = 1; i < top[0].children.size(); ++i) {
    const Sexp& form = expect_list(top[0].children[i], "action");
    if (form.children.empty()) throw ParseError(form.span, "empty action");
    const std::string& name = expect_atom(form.children[0], "schema name");
    SchemaId s = d.schema_index(name);
    if (s < 0)
      throw ParseError(form.children[0].span, "unknown schema " + name);
    GroundAction a;
    a.schema = s;
    if (static_cast<int>(form.children.size()) - 1 != d.schemas[s].arity()) {
      throw ParseError(form.span, "schema " + name + " expects " +
                                      std::to_string(d.schemas[s].arity()) +
                                      " arguments");
    }
    for (std::size_t j = 1; j < form.children.size(); ++j) {
      const std::string& o = expect_atom(form.children[j], "object");
      ObjId id = inst.object_index(o);
      if (id < 0) throw ParseError(form.children[j].span, "unknown object " + o);
      a.args.push_back(id);
    }
    plan.actions.push_back(std::move(a));
  }
  return plan;
}

std::string serialize_plan(const Instance& inst, const Plan& plan) {
  std::ostringstream os;
  os << "(plan";
  for (const GroundAction& a : plan.actions) {
    os << "\n  (" << quoted(inst.domain->schemas[a.schema].name);
    for (ObjId o : a.args) os << " " << quoted(inst.objects[o]);
    os << ")";
  }
  os << ")\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// .crasp programs
// ---------------------------------------------------------------------------

namespace {

struct CraspToken {
  enum class Kind {
    Ident,
    Int,
    String,
    Assign,   // :=
    LParen,
    RParen,
    Comma,
    Leq,      // <=
    Lt,       // <
    Plus,
    Minus,
    Eq,       // =
    QSym,     // Q_<symbol>
    End,
  };
  Kind kind;
  std::string text;
  std::int64_t value = 0;
  SourceSpan span;
};

class CraspLexer {
 public:
  explicit CraspLexer(std::string_view text) : text_(text) { advance_token(); }

  const CraspToken& peek() const { return current_; }
  CraspToken take() {
    CraspToken t = current_;
    advance_token();
    return t;
  }

 private:
  bool eof() const { return pos_ >= text_.size(); }
  char cur() const { return text_[pos_]; }
  void step() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }
  SourceSpan here() const { return {pos_, pos_, line_, col_}; }

  void advance_token() {
    while (!eof() &&
           (std::isspace(static_cast<unsigned char>(cur())) || cur() == ';')) {
      if (cur() == ';') {
        while (!eof() && cur() != '\n') step();
      } else {
        step();
      }
    }
    CraspToken t;
    t.span = here();
    if (eof()) {
      t.kind = CraspToken::Kind::End;
      current_ = t;
      return;
    }
    char c = cur();
    if (c == '(') {
      step();
      t.kind = CraspToken::Kind::LParen;
    } else if (c == ')') {
      step();
      t.kind = CraspToken::Kind::RParen;
    } else if (c == ',') {
      step();
      t.kind = CraspToken::Kind::Comma;
    } else if (c == '+') {
      step();
      t.kind = CraspToken::Kind::Plus;
    } else if (c == ':') {
      step();
      if (eof() || cur() != '=') throw ParseError(t.span, "expected :=");
      step();
      t.kind = CraspToken::Kind::Assign;
    } else if (c == '<') {
      step();
      if (!eof() && cur() == '=') {
        step();
        t.kind = CraspToken::Kind::Leq;
      } else {
        t.kind = CraspToken::Kind::Lt;
      }
    } else if (c == '=') {
      step();
      t.kind = CraspToken::Kind::Eq;
    } else if (c == '-') {
      step();
      if (!eof() && std::isdigit(static_cast<unsigned char>(cur()))) {
        std::string digits = "-";
        while (!eof() && std::isdigit(static_cast<unsigned char>(cur()))) {
          digits.push_back(cur());
          step();
        }
        t.kind = CraspToken::Kind::Int;
        t.value = std::stoll(digits);
      } else {
        t.kind = CraspToken::Kind::Minus;
      }
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::string digits;
      while (!eof() && std::isdigit(static_cast<unsigned char>(cur()))) {
        digits.push_back(cur());
        step();
      }
      t.kind = CraspToken::Kind::Int;
      t.value = std::stoll(digits);
    } else if (c == '"') {
      step();
      while (!eof() && cur() != '"') {
        t.text.push_back(cur());
        step();
      }
      if (eof()) throw ParseError(t.span, "unterminated string");
      step();
      t.kind = CraspToken::Kind::String;
    } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string ident;
      while (!eof() && (std::isalnum(static_cast<unsigned char>(cur())) ||
                        cur() == '_')) {
        ident.push_back(cur());
        step();
      }
      if (ident.size() >= 2 && ident[0] == 'Q' && ident[1] == '_') {
        t.kind = CraspToken::Kind::QSym;
        t.text = ident.substr(2);
        if (t.text.empty() && !eof() && cur() == '"') {
          step();
          while (!eof() && cur() != '"') {
            t.text.push_back(cur());
            step();
          }
          if (eof()) throw ParseError(t.span, "unterminated string");
          step();
        }
      } else {
        t.kind = CraspToken::Kind::Ident;
        t.text = std::move(ident);
      }
    } else {
      throw ParseError(t.span, std::string("unexpected character '") + c + "'");
    }
    t.span.end = pos_;
    current_ = t;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  CraspToken current_;
};

bool bare_crasp_symbol(const std::string& s) {
  if (s.empty()) return false;
  if (!std::isalpha(static_cast<unsigned char>(s[0])) && s[0] != '_')
    return false;
  for (char c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
  }
  return true;
}

}  // namespace

crasp::CraspProgram parse_crasp(std::string_view text) {
  using crasp::CraspOp;
  using crasp::OpKind;
  CraspLexer lex(text);
  crasp::CraspProgram prog;
  std::map<std::string, int> names;

  auto expect = [&](CraspToken::Kind k, const char* what) {
    CraspToken t = lex.take();
    if (t.kind != k) throw ParseError(t.span, "unexpected token", what);
    return t;
  };
  auto ref = [&](const CraspToken& t, bool want_bool) -> int {
    auto it = names.find(t.text);
    if (it == names.end())
      throw ParseError(t.span, "unknown line name " + t.text);
    bool is_bool = crasp::op_is_bool(prog.ops[it->second].kind);
    if (is_bool != want_bool) {
      throw ParseError(t.span, t.text + (want_bool
                                             ? " must be boolean-valued"
                                             : " must be count-valued"));
    }
    return it->second;
  };
  auto ref_any = [&](const CraspToken& t) -> int {
    auto it = names.find(t.text);
    if (it == names.end())
      throw ParseError(t.span, "unknown line name " + t.text);
    return it->second;
  };

  while (lex.peek().kind != CraspToken::Kind::End) {
    CraspToken name = expect(CraspToken::Kind::Ident, "line name or directive");
    if (name.text == "sigma") {
      // Symbols until the end of the directive's line.
      while ((lex.peek().kind == CraspToken::Kind::Ident ||
              lex.peek().kind == CraspToken::Kind::String) &&
             lex.peek().span.line == name.span.line) {
        prog.intern_sigma(lex.take().text);
      }
      continue;
    }
    if (name.text == "bandwidth") {
      CraspToken v = expect(CraspToken::Kind::Int, "bandwidth value");
      if (v.value < 0 || v.value > 1024)
        throw ParseError(v.span, "bandwidth out of range");
      prog.bandwidth = static_cast<int>(v.value);
      continue;
    }
    if (name.text == "output") {
      CraspToken v = expect(CraspToken::Kind::Ident, "line name");
      prog.output = ref_any(v);
      continue;
    }
    if (names.count(name.text)) {
      throw ParseError(name.span, "duplicate line name " + name.text);
    }
    expect(CraspToken::Kind::Assign, ":=");
    CraspOp op;
    CraspToken t = lex.take();
    switch (t.kind) {
      case CraspToken::Kind::QSym: {
        op.kind = OpKind::Initial;
        int idx = prog.sigma_index(t.text);
        if (idx < 0) {
          throw ParseError(t.span, "symbol " + t.text +
                                       " not declared in the sigma directive");
        }
        op.sigma = idx;
        break;
      }
      case CraspToken::Kind::Int: {
        if (t.value != 1) throw ParseError(t.span, "only the constant 1 exists");
        op.kind = OpKind::ConstOne;
        break;
      }
      case CraspToken::Kind::Ident: {
        if (t.text == "true") {
          op.kind = OpKind::ConstTrue;
        } else if (t.text == "not") {
          op.kind = OpKind::Not;
          op.a = ref(expect(CraspToken::Kind::Ident, "boolean line"), true);
        } else if (t.text == "count") {
          op.kind = OpKind::Count;
          expect(CraspToken::Kind::LParen, "(");
          // count(j<=i, B) or count(i=j+D, B)
          CraspToken first = lex.take();
          if (first.kind == CraspToken::Kind::Ident && first.text == "j") {
            expect(CraspToken::Kind::Leq, "<=");
            CraspToken iTok = expect(CraspToken::Kind::Ident, "i");
            if (iTok.text != "i") throw ParseError(iTok.span, "expected i");
            op.rel = crasp::LocalRel::all();
          } else if (first.kind == CraspToken::Kind::Ident &&
                     first.text == "i") {
            expect(CraspToken::Kind::Eq, "=");
            CraspToken jTok = expect(CraspToken::Kind::Ident, "j");
            if (jTok.text != "j") throw ParseError(jTok.span, "expected j");
            expect(CraspToken::Kind::Plus, "+");
            CraspToken d = expect(CraspToken::Kind::Int, "offset");
            if (d.value < 0) throw ParseError(d.span, "offset must be >= 0");
            op.rel = crasp::LocalRel::offset(static_cast<int>(d.value));
          } else {
            throw ParseError(first.span, "expected j<=i or i=j+D");
          }
          expect(CraspToken::Kind::Comma, ",");
          op.a = ref(expect(CraspToken::Kind::Ident, "boolean line"), true);
          expect(CraspToken::Kind::RParen, ")");
        } else if (t.text == "match") {
          op.kind = OpKind::MatchCount;
          expect(CraspToken::Kind::LParen, "(");
          CraspToken j = expect(CraspToken::Kind::Ident, "j");
          if (j.text != "j") throw ParseError(j.span, "expected j");
          CraspToken cmp = lex.take();
          if (cmp.kind == CraspToken::Kind::Leq) {
            op.match.strict = false;
          } else if (cmp.kind == CraspToken::Kind::Lt) {
            op.match.strict = true;
          } else {
            throw ParseError(cmp.span, "expected <= or <");
          }
          CraspToken iTok = expect(CraspToken::Kind::Ident, "i");
          if (iTok.text != "i") throw ParseError(iTok.span, "expected i");
          while (lex.peek().kind == CraspToken::Kind::Comma) {
            lex.take();
            if (lex.peek().kind == CraspToken::Kind::Ident &&
                lex.peek().text == "filter") {
              lex.take();
              expect(CraspToken::Kind::Eq, "=");
              op.match.filter =
                  ref(expect(CraspToken::Kind::Ident, "boolean line"), true);
            } else {
              expect(CraspToken::Kind::LParen, "(");
              crasp::MatchConjunct c;
              CraspToken d = expect(CraspToken::Kind::Int, "delta");
              expect(CraspToken::Kind::Comma, ",");
              CraspToken g = expect(CraspToken::Kind::Int, "gamma");
              expect(CraspToken::Kind::Comma, ",");
              CraspToken tau = expect(CraspToken::Kind::Int, "tau");
              expect(CraspToken::Kind::RParen, ")");
              if (d.value < 0 || g.value < 0)
                throw ParseError(d.span, "match offsets must be >= 0");
              c.delta = static_cast<int>(d.value);
              c.gamma = static_cast<int>(g.value);
              c.tau = tau.value;
              op.match.conjuncts.push_back(c);
            }
          }
          expect(CraspToken::Kind::RParen, ")");
        } else if (t.text == "if") {
          op.kind = OpKind::Cond;
          op.a = ref(expect(CraspToken::Kind::Ident, "boolean line"), true);
          CraspToken then = expect(CraspToken::Kind::Ident, "then");
          if (then.text != "then") throw ParseError(then.span, "expected then");
          op.b = ref(expect(CraspToken::Kind::Ident, "count line"), false);
          CraspToken els = expect(CraspToken::Kind::Ident, "else");
          if (els.text != "else") throw ParseError(els.span, "expected else");
          op.c = ref(expect(CraspToken::Kind::Ident, "count line"), false);
        } else {
          // Binary form: X op Y  with op in {and, <=, +, -}
          int lhs = ref_any(t);
          CraspToken o = lex.take();
          switch (o.kind) {
            case CraspToken::Kind::Ident:
              if (o.text != "and") throw ParseError(o.span, "expected and");
              op.kind = OpKind::And;
              if (!crasp::op_is_bool(prog.ops[lhs].kind))
                throw ParseError(t.span, t.text + " must be boolean-valued");
              op.a = lhs;
              op.b =
                  ref(expect(CraspToken::Kind::Ident, "boolean line"), true);
              break;
            case CraspToken::Kind::Leq:
              op.kind = OpKind::Leq;
              if (crasp::op_is_bool(prog.ops[lhs].kind))
                throw ParseError(t.span, t.text + " must be count-valued");
              op.a = lhs;
              op.b = ref(expect(CraspToken::Kind::Ident, "count line"), false);
              break;
            case CraspToken::Kind::Plus:
            case CraspToken::Kind::Minus:
              op.kind = o.kind == CraspToken::Kind::Plus ? OpKind::Add
                                                         : OpKind::Sub;
              if (crasp::op_is_bool(prog.ops[lhs].kind))
                throw ParseError(t.span, t.text + " must be count-valued");
              op.a = lhs;
              op.b = ref(expect(CraspToken::Kind::Ident, "count line"), false);
              break;
            default:
              throw ParseError(o.span, "expected and, <=, + or -");
          }
        }
        break;
      }
      default:
        throw ParseError(t.span, "expected an operation");
    }
    names[name.text] = static_cast<int>(prog.ops.size());
    prog.ops.push_back(op);
  }
  try {
    crasp::typecheck(prog);
  } catch (const Error& e) {
    throw ParseError(SourceSpan{}, e.what());
  }
  return prog;
}

std::string serialize_crasp(const crasp::CraspProgram& prog) {
  using crasp::OpKind;
  std::ostringstream os;
  if (!prog.sigma.empty()) {
    os << "sigma";
    for (const std::string& s : prog.sigma) {
      os << " " << (bare_crasp_symbol(s) ? s : "\"" + s + "\"");
    }
    os << "\n";
  }
  os << "bandwidth " << prog.bandwidth << "\n";
  auto name = [](int i) { return "L" + std::to_string(i + 1); };
  for (std::size_t i = 0; i < prog.ops.size(); ++i) {
    const crasp::CraspOp& op = prog.ops[i];
    os << name(static_cast<int>(i)) << " := ";
    switch (op.kind) {
      case OpKind::Initial: {
        const std::string& s = prog.sigma[op.sigma];
        os << "Q_" << (bare_crasp_symbol(s) ? s : "\"" + s + "\"");
        break;
      }
      case OpKind::Not:
        os << "not " << name(op.a);
        break;
      case OpKind::And:
        os << name(op.a) << " and " << name(op.b);
        break;
      case OpKind::ConstTrue:
        os << "true";
        break;
      case OpKind::Leq:
        os << name(op.a) << " <= " << name(op.b);
        break;
      case OpKind::Count:
        if (op.rel.top) {
          os << "count(j<=i, " << name(op.a) << ")";
        } else {
          os << "count(i=j+" << op.rel.delta << ", " << name(op.a) << ")";
        }
        break;
      case OpKind::MatchCount: {
        os << "match(j" << (op.match.strict ? "<" : "<=") << "i";
        for (const crasp::MatchConjunct& c : op.match.conjuncts) {
          os << ", (" << c.delta << "," << c.gamma << "," << c.tau << ")";
        }
        if (op.match.filter >= 0) os << ", filter=" << name(op.match.filter);
        os << ")";
        break;
      }
      case OpKind::Cond:
        os << "if " << name(op.a) << " then " << name(op.b) << " else "
           << name(op.c);
        break;
      case OpKind::Add:
        os << name(op.a) << " + " << name(op.b);
        break;
      case OpKind::Sub:
        os << name(op.a) << " - " << name(op.b);
        break;
      case OpKind::ConstOne:
        os << "1";
        break;
    }
    os << "\n";
  }
  os << "output " << name(prog.output_index()) << "\n";
  return os.str();
}

crasp::TokenSeq parse_tokens(std::string_view text) {
  crasp::TokenSeq seq;
  std::size_t pos = 0;
  auto skip = [&]() {
    while (pos < text.size()) {
      if (text[pos] == ';') {
        while (pos < text.size() && text[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(text[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
  };
  skip();
  while (pos < text.size()) {
    if (text[pos] == '#') {
      ++pos;
      std::string digits;
      while (pos < text.size() &&
             std::isdigit(static_cast<unsigned char>(text[pos]))) {
        digits.push_back(text[pos++]);
      }
      if (digits.empty()) {
        throw ParseError({pos, pos, 0, 0}, "expected digits after #");
      }
      seq.push_ext(std::stoll(digits));
    } else if (text[pos] == '"') {
      ++pos;
      std::string s;
      while (pos < text.size() && text[pos] != '"') s.push_back(text[pos++]);
      if (pos == text.size())
        throw ParseError({pos, pos, 0, 0}, "unterminated string");
      ++pos;
      seq.push_symbol(s);
    } else {
      std::string s;
      while (pos < text.size() &&
             !std::isspace(static_cast<unsigned char>(text[pos])) &&
             text[pos] != ';') {
        s.push_back(text[pos++]);
      }
      seq.push_symbol(s);
    }
    skip();
  }
  return seq;
}

std::string serialize_tokens(const crasp::TokenSeq& seq) {
  std::ostringstream os;
  for (std::size_t i = 0; i < seq.toks.size(); ++i) {
    if (i) os << ' ';
    const crasp::Token& t = seq.toks[i];
    if (t.ext) {
      os << '#' << t.value;
    } else {
      const std::string& s = seq.vocab[t.sym];
      bool plain = !s.empty() && s[0] != '#' && s[0] != '"' && s[0] != ';';
      for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) plain = false;
      }
      os << (plain ? s : "\"" + s + "\"");
    }
  }
  os << '\n';
  return os.str();
}

}  // namespace planlab::dsl
