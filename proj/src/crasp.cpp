#include "planlab/crasp.hpp"

#include <algorithm>
#include <array>
#include <sstream>
#include <unordered_map>

namespace planlab::crasp {

int TokenSeq::vocab_index(const std::string& name) const {
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (vocab[i] == name) return static_cast<int>(i);
  }
  return -1;
}

int TokenSeq::intern(const std::string& name) {
  int i = vocab_index(name);
  if (i >= 0) return i;
  vocab.push_back(name);
  return static_cast<int>(vocab.size()) - 1;
}

void TokenSeq::push_symbol(const std::string& name) {
  toks.push_back(Token::symbol(intern(name)));
}

void TokenSeq::push_ext(std::int64_t v) { toks.push_back(Token::extended(v)); }

std::string TokenSeq::to_string() const {
  std::ostringstream os;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (i) os << ' ';
    if (toks[i].ext) {
      os << '#' << toks[i].value;
    } else {
      os << vocab[toks[i].sym];
    }
  }
  return os.str();
}

bool op_is_bool(OpKind k) {
  switch (k) {
    case OpKind::Initial:
    case OpKind::Not:
    case OpKind::And:
    case OpKind::ConstTrue:
    case OpKind::Leq:
      return true;
    default:
      return false;
  }
}

int CraspProgram::sigma_index(const std::string& name) const {
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (sigma[i] == name) return static_cast<int>(i);
  }
  return -1;
}

int CraspProgram::intern_sigma(const std::string& name) {
  int i = sigma_index(name);
  if (i >= 0) return i;
  sigma.push_back(name);
  return static_cast<int>(sigma.size()) - 1;
}

namespace {

const char* op_kind_name(OpKind k) {
  switch (k) {
    case OpKind::Initial: return "initial";
    case OpKind::Not: return "not";
    case OpKind::And: return "and";
    case OpKind::ConstTrue: return "true";
    case OpKind::Leq: return "leq";
    case OpKind::Count: return "count";
    case OpKind::MatchCount: return "match";
    case OpKind::Cond: return "if";
    case OpKind::Add: return "add";
    case OpKind::Sub: return "sub";
    case OpKind::ConstOne: return "one";
  }
  return "?";
}

}  // namespace

std::string EvalTable::to_tsv(const CraspProgram& program) const {
  std::ostringstream os;
  for (int op = 0; op < n_ops; ++op) {
    os << 'L' << (op + 1) << '\t' << op_kind_name(program.ops[op].kind);
    for (int pos = 1; pos <= n_pos; ++pos) {
      os << '\t' << at(op, pos);
    }
    os << '\n';
  }
  return os.str();
}

namespace {

constexpr int kMaxMatchConjuncts = 8;

void require(bool cond, const std::string& msg) {
  if (!cond) throw TypeError(msg);
}

std::string line_name(int i) { return "L" + std::to_string(i + 1); }

}  // namespace

void typecheck(const CraspProgram& program) {
  require(!program.ops.empty(), "empty program");
  const int n = static_cast<int>(program.ops.size());
  auto check_bool = [&](int line, int ref, const char* role) {
    require(ref >= 0 && ref < line,
            line_name(line) + ": " + role + " must reference an earlier line");
    require(op_is_bool(program.ops[ref].kind),
            line_name(line) + ": " + role + " (" + line_name(ref) +
                ") must be boolean-valued");
  };
  auto check_count = [&](int line, int ref, const char* role) {
    require(ref >= 0 && ref < line,
            line_name(line) + ": " + role + " must reference an earlier line");
    require(!op_is_bool(program.ops[ref].kind),
            line_name(line) + ": " + role + " (" + line_name(ref) +
                ") must be count-valued");
  };
  for (int i = 0; i < n; ++i) {
    const CraspOp& op = program.ops[i];
    switch (op.kind) {
      case OpKind::Initial:
        require(op.sigma >= 0 &&
                    op.sigma < static_cast<int>(program.sigma.size()),
                line_name(i) + ": unknown Sigma symbol index");
        break;
      case OpKind::Not:
        check_bool(i, op.a, "operand");
        break;
      case OpKind::And:
        check_bool(i, op.a, "left operand");
        check_bool(i, op.b, "right operand");
        break;
      case OpKind::ConstTrue:
      case OpKind::ConstOne:
        break;
      case OpKind::Leq:
        check_count(i, op.a, "left operand");
        check_count(i, op.b, "right operand");
        break;
      case OpKind::Count:
        check_bool(i, op.a, "filter");
        if (!op.rel.top) {
          require(op.rel.delta >= 0 && op.rel.delta <= program.bandwidth,
                  line_name(i) + ": offset exceeds bandwidth");
        }
        break;
      case OpKind::MatchCount: {
        const MatchSpec& m = op.match;
        require(!m.conjuncts.empty(),
                line_name(i) + ": match needs at least one conjunct");
        require(static_cast<int>(m.conjuncts.size()) <= kMaxMatchConjuncts,
                line_name(i) + ": too many match conjuncts");
        for (const MatchConjunct& c : m.conjuncts) {
          require(c.delta >= 0 && c.delta <= program.bandwidth &&
                      c.gamma >= 0 && c.gamma <= program.bandwidth,
                  line_name(i) + ": match offset exceeds bandwidth");
        }
        if (m.filter >= 0) check_bool(i, m.filter, "match filter");
        break;
      }
      case OpKind::Cond:
        check_bool(i, op.a, "condition");
        check_count(i, op.b, "then branch");
        check_count(i, op.c, "else branch");
        break;
      case OpKind::Add:
      case OpKind::Sub:
        check_count(i, op.a, "left operand");
        check_count(i, op.b, "right operand");
        break;
    }
  }
  const int out = program.output_index();
  require(out >= 0 && out < n, "output line out of range");
  require(op_is_bool(program.ops[out].kind),
          "output line must be boolean-valued (acceptance reads a truth "
          "value at the last position)");
}

namespace {

struct MatchKey {
  std::array<std::int64_t, kMaxMatchConjuncts> v{};
  int k = 0;
  bool operator==(const MatchKey& o) const {
    if (k != o.k) return false;
    for (int i = 0; i < k; ++i) {
      if (v[i] != o.v[i]) return false;
    }
    return true;
  }
};

struct MatchKeyHash {
  std::size_t operator()(const MatchKey& key) const {
    std::uint64_t h = 0x9e3779b97f4a7c15ULL + key.k;
    for (int i = 0; i < key.k; ++i) {
      std::uint64_t x = static_cast<std::uint64_t>(key.v[i]);
      x *= 0xbf58476d1ce4e5b9ULL;
      x ^= x >> 27;
      h = (h ^ x) * 0x94d049bb133111ebULL;
    }
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_add_overflow(a, b, &r)) {
    throw EvalError("integer overflow in addition");
  }
  return r;
}

std::int64_t checked_sub(std::int64_t a, std::int64_t b) {
  std::int64_t r;
  if (__builtin_sub_overflow(a, b, &r)) {
    throw EvalError("integer overflow in subtraction");
  }
  return r;
}

}  // namespace

EvalTable eval(const CraspProgram& program, const TokenSeq& input) {
  const int n = static_cast<int>(input.size());
  const int n_ops = static_cast<int>(program.ops.size());

  // Resolve the input vocabulary against the program alphabet once.
  std::vector<int> remap(input.vocab.size(), -1);
  for (std::size_t i = 0; i < input.vocab.size(); ++i) {
    remap[i] = program.sigma_index(input.vocab[i]);
  }
  for (const Token& t : input.toks) {
    if (!t.ext && remap[t.sym] < 0) {
      throw EvalError("unknown Sigma symbol in input: " + input.vocab[t.sym]);
    }
  }

  EvalTable table;
  table.n_ops = n_ops;
  table.n_pos = n;
  table.cells.assign(static_cast<std::size_t>(n_ops) * n, 0);
  table.boolean.resize(n_ops);
  for (int i = 0; i < n_ops; ++i) {
    table.boolean[i] = op_is_bool(program.ops[i].kind);
  }
  if (n == 0) return table;

  auto row = [&](int op) { return table.cells.data() + static_cast<std::size_t>(op) * n; };

  for (int oi = 0; oi < n_ops; ++oi) {
    const CraspOp& op = program.ops[oi];
    std::int64_t* out = row(oi);
    switch (op.kind) {
      case OpKind::Initial: {
        for (int p = 0; p < n; ++p) {
          const Token& t = input.toks[p];
          out[p] = (!t.ext && remap[t.sym] == op.sigma) ? 1 : 0;
        }
        break;
      }
      case OpKind::Not: {
        const std::int64_t* a = row(op.a);
        for (int p = 0; p < n; ++p) out[p] = a[p] ? 0 : 1;
        break;
      }
      case OpKind::And: {
        const std::int64_t* a = row(op.a);
        const std::int64_t* b = row(op.b);
        for (int p = 0; p < n; ++p) out[p] = (a[p] && b[p]) ? 1 : 0;
        break;
      }
      case OpKind::ConstTrue: {
        for (int p = 0; p < n; ++p) out[p] = 1;
        break;
      }
      case OpKind::Leq: {
        const std::int64_t* a = row(op.a);
        const std::int64_t* b = row(op.b);
        for (int p = 0; p < n; ++p) out[p] = (a[p] <= b[p]) ? 1 : 0;
        break;
      }
      case OpKind::ConstOne: {
        for (int p = 0; p < n; ++p) out[p] = 1;
        break;
      }
      case OpKind::Count: {
        const std::int64_t* a = row(op.a);
        if (op.rel.top) {
          std::int64_t acc = 0;
          for (int p = 0; p < n; ++p) {
            acc = checked_add(acc, a[p] ? 1 : 0);
            out[p] = acc;
          }
        } else {
          const int d = op.rel.delta;
          for (int p = 0; p < n; ++p) {
            out[p] = (p - d >= 0 && a[p - d]) ? 1 : 0;
          }
        }
        break;
      }
      case OpKind::MatchCount: {
        const MatchSpec& m = op.match;
        const int k = static_cast<int>(m.conjuncts.size());
        const std::int64_t* filter = m.filter >= 0 ? row(m.filter) : nullptr;
        std::unordered_map<MatchKey, std::int64_t, MatchKeyHash> seen;
        seen.reserve(static_cast<std::size_t>(n) * 2);
        MatchKey jkey, ikey;
        jkey.k = ikey.k = k;
        for (int p = 0; p < n; ++p) {
          // Candidate entry for position p acting as a counted position j:
          // needs every referenced spot in range and extended-valued.
          bool j_ok = (filter == nullptr || filter[p] != 0);
          if (j_ok) {
            for (int c = 0; c < k; ++c) {
              const int q = p - m.conjuncts[c].delta;
              if (q < 0 || !input.toks[q].ext) {
                j_ok = false;
                break;
              }
              jkey.v[c] = input.toks[q].value;
            }
          }
          if (!m.strict && j_ok) ++seen[jkey];
          bool i_ok = true;
          for (int c = 0; c < k; ++c) {
            const int q = p - m.conjuncts[c].gamma;
            if (q < 0 || !input.toks[q].ext) {
              i_ok = false;
              break;
            }
            ikey.v[c] = checked_add(input.toks[q].value, m.conjuncts[c].tau);
          }
          if (i_ok) {
            auto it = seen.find(ikey);
            out[p] = it == seen.end() ? 0 : it->second;
          } else {
            out[p] = 0;
          }
          if (m.strict && j_ok) ++seen[jkey];
        }
        break;
      }
      case OpKind::Cond: {
        const std::int64_t* b = row(op.a);
        const std::int64_t* t = row(op.b);
        const std::int64_t* e = row(op.c);
        for (int p = 0; p < n; ++p) out[p] = b[p] ? t[p] : e[p];
        break;
      }
      case OpKind::Add: {
        const std::int64_t* a = row(op.a);
        const std::int64_t* b = row(op.b);
        for (int p = 0; p < n; ++p) out[p] = checked_add(a[p], b[p]);
        break;
      }
      case OpKind::Sub: {
        const std::int64_t* a = row(op.a);
        const std::int64_t* b = row(op.b);
        for (int p = 0; p < n; ++p) out[p] = checked_sub(a[p], b[p]);
        break;
      }
    }
  }
  return table;
}

bool accepts(const CraspProgram& program, const TokenSeq& input) {
  if (input.size() == 0) throw EvalError("empty input");
  EvalTable table = eval(program, input);
  return table.at(program.output_index(), static_cast<int>(input.size())) != 0;
}

bool is_match_offset_free(const CraspProgram& program) {
  for (const CraspOp& op : program.ops) {
    if (op.kind == OpKind::Count && !op.rel.top) return false;
    if (op.kind == OpKind::MatchCount) {
      for (const MatchConjunct& c : op.match.conjuncts) {
        if (c.delta != 0 || c.gamma != 0) return false;
      }
    }
  }
  return true;
}

bool uses_match(const CraspProgram& program) {
  for (const CraspOp& op : program.ops) {
    if (op.kind == OpKind::MatchCount) return true;
  }
  return false;
}

std::string ext_symbol_name(std::int64_t value) {
  return "#" + std::to_string(value);
}

namespace {

// Incremental builder used by the lowering; caches shared subexpressions.
class Builder {
 public:
  explicit Builder(CraspProgram& p) : p_(p) {}

  int initial(int sigma) {
    auto it = initial_cache_.find(sigma);
    if (it != initial_cache_.end()) return it->second;
    CraspOp op;
    op.kind = OpKind::Initial;
    op.sigma = sigma;
    int idx = push(op);
    initial_cache_[sigma] = idx;
    return idx;
  }
  int one() {
    if (one_ < 0) {
      CraspOp op;
      op.kind = OpKind::ConstOne;
      one_ = push(op);
    }
    return one_;
  }
  int zero() {
    if (zero_ < 0) {
      CraspOp op;
      op.kind = OpKind::Sub;
      op.a = one();
      op.b = one();
      zero_ = push(op);
    }
    return zero_;
  }
  int count_offset(int filter, int delta) {
    auto key = std::make_pair(filter, delta);
    auto it = offset_cache_.find(key);
    if (it != offset_cache_.end()) return it->second;
    CraspOp op;
    op.kind = OpKind::Count;
    op.a = filter;
    op.rel = LocalRel::offset(delta);
    int idx = push(op);
    offset_cache_[key] = idx;
    return idx;
  }
  int count_top(int filter) {
    CraspOp op;
    op.kind = OpKind::Count;
    op.a = filter;
    op.rel = LocalRel::all();
    return push(op);
  }
  int geq1(int count) {
    CraspOp op;
    op.kind = OpKind::Leq;
    op.a = one();
    op.b = count;
    return push(op);
  }
  int land(int a, int b) {
    CraspOp op;
    op.kind = OpKind::And;
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
  int push(const CraspOp& op) {
    p_.ops.push_back(op);
    return static_cast<int>(p_.ops.size()) - 1;
  }

 private:
  struct PairHash {
    std::size_t operator()(const std::pair<int, int>& p) const {
      return std::hash<long long>()((static_cast<long long>(p.first) << 32) ^
                                    p.second);
    }
  };
  CraspProgram& p_;
  std::unordered_map<int, int> initial_cache_;
  std::unordered_map<std::pair<int, int>, int, PairHash> offset_cache_;
  int one_ = -1;
  int zero_ = -1;
};

}  // namespace

CraspProgram lower_match_to_finite(const CraspProgram& program,
                                   const std::vector<std::int64_t>& ext_alphabet,
                                   std::size_t budget) {
  if (!uses_match(program)) return program;

  CraspProgram out;
  out.bandwidth = program.bandwidth;
  out.sigma = program.sigma;
  std::vector<int> value_sym(ext_alphabet.size());
  for (std::size_t i = 0; i < ext_alphabet.size(); ++i) {
    value_sym[i] = out.intern_sigma(ext_symbol_name(ext_alphabet[i]));
  }
  auto value_index = [&](std::int64_t v) -> int {
    for (std::size_t i = 0; i < ext_alphabet.size(); ++i) {
      if (ext_alphabet[i] == v) return static_cast<int>(i);
    }
    return -1;
  };

  Builder b(out);
  std::vector<int> line_map(program.ops.size(), -1);

  std::size_t tuples_used = 0;
  for (std::size_t oi = 0; oi < program.ops.size(); ++oi) {
    const CraspOp& op = program.ops[oi];
    if (op.kind != OpKind::MatchCount) {
      CraspOp copy = op;
      if (copy.a >= 0) copy.a = line_map[copy.a];
      if (copy.b >= 0) copy.b = line_map[copy.b];
      if (copy.c >= 0) copy.c = line_map[copy.c];
      line_map[oi] = b.push(copy);
      continue;
    }

    const MatchSpec& m = op.match;
    const int k = static_cast<int>(m.conjuncts.size());
    const int filter = m.filter >= 0 ? line_map[m.filter] : -1;

    // Enumerate the possible value tuples on the query side; each conjunct's
    // counted side is then pinned to value + tau. Tuples whose shifted value
    // falls outside the alphabet can never match and are skipped.
    std::vector<int> assign(k, 0);
    std::vector<int> branches;
    bool done = ext_alphabet.empty();
    while (!done) {
      if (++tuples_used > budget) {
        throw Error("AlphabetTooLarge: lowering needs more than " +
                    std::to_string(budget) + " value tuples");
      }
      bool feasible = true;
      std::vector<int> past_idx(k, -1);
      for (int c = 0; c < k; ++c) {
        std::int64_t query_v = ext_alphabet[assign[c]];
        std::int64_t counted_v = query_v + m.conjuncts[c].tau;
        int vi = value_index(counted_v);
        if (vi < 0) {
          feasible = false;
          break;
        }
        past_idx[c] = vi;
      }
      if (feasible) {
        // P_past: the counted position carries value+tau at each delta.
        int p_past = -1;
        for (int c = 0; c < k; ++c) {
          int q = b.geq1(b.count_offset(b.initial(value_sym[past_idx[c]]),
                                        m.conjuncts[c].delta));
          p_past = p_past < 0 ? q : b.land(p_past, q);
        }
        if (filter >= 0) p_past = b.land(p_past, filter);
        // P_current: the query position carries the assigned values.
        int p_cur = -1;
        for (int c = 0; c < k; ++c) {
          int q = b.geq1(b.count_offset(b.initial(value_sym[assign[c]]),
                                        m.conjuncts[c].gamma));
          p_cur = p_cur < 0 ? q : b.land(p_cur, q);
        }
        int count = b.count_top(p_past);
        if (m.strict) {
          count = b.sub(count, b.count_offset(p_past, 0));
        }
        branches.push_back(b.cond(p_cur, count, b.zero()));
      }
      int pos = k - 1;
      while (pos >= 0 &&
             ++assign[pos] == static_cast<int>(ext_alphabet.size())) {
        assign[pos] = 0;
        --pos;
      }
      if (pos < 0) done = true;
    }
    int total = -1;
    for (int br : branches) total = total < 0 ? br : b.add(total, br);
    if (total < 0) total = b.zero();
    line_map[oi] = total;
  }
  out.output = line_map[program.output_index()];
  return out;
}

TokenSeq to_finite_tokens(const TokenSeq& input,
                          const std::vector<std::int64_t>& ext_alphabet) {
  TokenSeq out;
  out.vocab = input.vocab;
  for (const Token& t : input.toks) {
    if (!t.ext) {
      out.toks.push_back(Token::symbol(out.intern(input.vocab[t.sym])));
      continue;
    }
    bool found = false;
    for (std::int64_t v : ext_alphabet) {
      if (v == t.value) {
        found = true;
        break;
      }
    }
    if (!found) {
      throw Error("extended token value " + std::to_string(t.value) +
                  " outside the finite alphabet");
    }
    out.push_symbol(ext_symbol_name(t.value));
  }
  return out;
}

}  // namespace planlab::crasp
