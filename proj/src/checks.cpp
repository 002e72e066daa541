#include "planlab/checks.hpp"

#include <algorithm>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "planlab/dsl.hpp"

namespace planlab::checks {

std::string LangCheckReport::to_json() const {
  nlohmann::ordered_json j;
  j["name"] = name;
  j["tested"] = tested;
  j["agree"] = agree;
  j["disagree"] = disagree;
  j["pass"] = pass();
  if (!first_counterexample.empty()) {
    j["first_counterexample"] = first_counterexample;
  }
  return j.dump(2);
}

LangCheckReport check_flipflop(int max_len) {
  if (max_len > 14) throw Error("flipflop enumeration capped at length 14");
  LangCheckReport report;
  report.name = "flipflop";
  Instance inst = domains::flipflop_instance();
  const Domain& d = *inst.domain;
  const SchemaId ids[3] = {d.schema_index("a_a"), d.schema_index("a_b"),
                           d.schema_index("a_e")};
  const char letters[3] = {'a', 'b', 'e'};

  std::string word;
  Plan plan;
  auto expected = [&](const std::string& w) {
    // Accept iff some b occurs with no later a.
    for (auto it = w.rbegin(); it != w.rend(); ++it) {
      if (*it == 'b') return true;
      if (*it == 'a') return false;
    }
    return false;
  };
  std::function<void(int)> walk = [&](int budget) {
    const bool got = simulate(inst, plan).verdict.valid();
    const bool want = expected(word);
    ++report.tested;
    if (got == want) {
      ++report.agree;
    } else {
      ++report.disagree;
      if (report.first_counterexample.empty()) {
        report.first_counterexample = word.empty() ? "<empty>" : word;
      }
    }
    if (budget == 0) return;
    for (int s = 0; s < 3; ++s) {
      word.push_back(letters[s]);
      plan.actions.push_back({ids[s], {0}});
      walk(budget - 1);
      plan.actions.pop_back();
      word.pop_back();
    }
  };
  walk(max_len);
  return report;
}

namespace {

std::vector<int> cells_of_plan(const domains::LightsOutTemplate& tmpl,
                               const Plan& plan) {
  std::vector<int> cells;
  cells.reserve(plan.size());
  for (const GroundAction& a : plan.actions) {
    cells.push_back(domains::pressed_cell(tmpl, a.schema));
  }
  return cells;
}

void parity_case(LangCheckReport& report,
                 const domains::LightsOutTemplate& tmpl,
                 const Instance& inst, const Plan& plan,
                 domains::F2Vector init_vec) {
  const std::vector<int> cells = cells_of_plan(tmpl, plan);
  const bool algebra = domains::parity_verdict(tmpl.board, init_vec, cells);
  const bool sim = simulate(inst, plan).verdict.valid();
  ++report.tested;
  if (algebra == sim) {
    ++report.agree;
  } else {
    ++report.disagree;
    if (report.first_counterexample.empty()) {
      std::ostringstream os;
      os << "init=" << init_vec << " presses=";
      for (int c : cells) os << c << ",";
      report.first_counterexample = os.str();
    }
  }
}

}  // namespace

LangCheckReport check_parity_exhaustive(const domains::Board& board,
                                        int max_len) {
  LangCheckReport report;
  report.name = "parity-exhaustive";
  domains::LightsOutTemplate tmpl = domains::lights_out_conditional(board);
  const int cells = board.cells();
  if (cells > 9 || max_len > 8) throw Error("exhaustive parity check too big");

  std::vector<std::vector<int>> inits = {{}};  // all-off
  if (cells >= 2) inits.push_back({0, 1});
  inits.push_back({cells - 1});

  for (const std::vector<int>& lit : inits) {
    Instance inst = domains::lights_out_instance(tmpl, lit);
    domains::F2Vector init_vec = 0;
    for (int c : lit) init_vec |= domains::F2Vector{1} << c;
    Plan plan;
    std::function<void(int)> walk = [&](int budget) {
      parity_case(report, tmpl, inst, plan, init_vec);
      if (budget == 0) return;
      for (int c = 0; c < cells; ++c) {
        SchemaId s = tmpl.domain->schema_index(
            "press-" + std::to_string(c / board.cols) +
            std::to_string(c % board.cols));
        plan.actions.push_back({s, {}});
        walk(budget - 1);
        plan.actions.pop_back();
      }
    };
    walk(max_len);
  }
  return report;
}

LangCheckReport check_parity_random(const domains::Board& board, int trials,
                                    int max_len, std::uint64_t seed,
                                    int jobs) {
  domains::LightsOutTemplate tmpl = domains::lights_out_conditional(board);
  const int cells = board.cells();
  auto run_shard = [&](int begin, int end) {
    LangCheckReport shard;
    for (int t = begin; t < end; ++t) {
      Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(t));
      std::vector<int> lit;
      for (int c = 0; c < cells; ++c) {
        if (rng.chance(0.5)) lit.push_back(c);
      }
      Instance inst = domains::lights_out_instance(tmpl, lit);
      domains::F2Vector init_vec = 0;
      for (int c : lit) init_vec |= domains::F2Vector{1} << c;
      const int len = static_cast<int>(rng.range(0, max_len));
      Plan plan;
      for (int i = 0; i < len; ++i) {
        const int c = static_cast<int>(rng.below(cells));
        SchemaId s = tmpl.domain->schema_index(
            "press-" + std::to_string(c / board.cols) +
            std::to_string(c % board.cols));
        plan.actions.push_back({s, {}});
      }
      parity_case(shard, tmpl, inst, plan, init_vec);
    }
    return shard;
  };

  LangCheckReport report;
  report.name = "parity-random";
  jobs = std::max(1, jobs);
  std::vector<LangCheckReport> shards(jobs);
  if (jobs == 1) {
    shards[0] = run_shard(0, trials);
  } else {
    std::vector<std::thread> threads;
    const int chunk = (trials + jobs - 1) / jobs;
    for (int w = 0; w < jobs; ++w) {
      const int begin = w * chunk;
      const int end = std::min(trials, begin + chunk);
      threads.emplace_back(
          [&shards, &run_shard, w, begin, end] { shards[w] = run_shard(begin, end); });
    }
    for (std::thread& t : threads) t.join();
  }
  // Associative merge in shard order keeps the report stable.
  for (const LangCheckReport& shard : shards) {
    report.tested += shard.tested;
    report.agree += shard.agree;
    report.disagree += shard.disagree;
    if (report.first_counterexample.empty()) {
      report.first_counterexample = shard.first_counterexample;
    }
  }
  return report;
}

LangCheckReport check_toggle_identity(const domains::Board& board, int trials,
                                      std::uint64_t seed) {
  LangCheckReport report;
  report.name = "toggle-identity";
  domains::LightsOutTemplate tmpl = domains::lights_out_conditional(board);
  const int cells = board.cells();
  for (int t = 0; t < trials; ++t) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(t));
    std::vector<int> lit;
    for (int c = 0; c < cells; ++c) {
      if (rng.chance(0.5)) lit.push_back(c);
    }
    Instance inst = domains::lights_out_instance(tmpl, lit);
    const int c = static_cast<int>(rng.below(cells));
    SchemaId s = tmpl.domain->schema_index(
        "press-" + std::to_string(c / board.cols) +
        std::to_string(c % board.cols));
    State once = succ(inst, inst.init, {s, {}});
    State twice = succ(inst, once, {s, {}});
    ++report.tested;
    if (twice == inst.init) {
      ++report.agree;
    } else {
      ++report.disagree;
      if (report.first_counterexample.empty()) {
        report.first_counterexample =
            "press " + std::to_string(c) + " twice, trial " + std::to_string(t);
      }
    }
  }
  return report;
}

LangCheckReport check_compiled(const crasp::CraspProgram& program,
                               const compile::EncodingLayout& layout,
                               const Sampler& sampler, std::int64_t trials,
                               const std::string& name) {
  LangCheckReport report;
  report.name = name;
  for (std::int64_t t = 0; t < trials; ++t) {
    SweepSample sample = sampler(t);
    const bool want = simulate(sample.instance, sample.plan).verdict.valid();
    crasp::TokenSeq tokens =
        compile::encode(sample.instance, sample.plan, layout,
                        sample.object_values);
    const bool got = crasp::accepts(program, tokens);
    ++report.tested;
    if (got == want) {
      ++report.agree;
    } else {
      ++report.disagree;
      if (report.first_counterexample.empty()) {
        std::ostringstream os;
        os << "trial " << t << ": simulate=" << (want ? "valid" : "invalid")
           << " program=" << (got ? "accept" : "reject")
           << " tokens=" << tokens.to_string() << "\n"
           << crasp::eval(program, tokens).to_tsv(program);
        report.first_counterexample = os.str();
      }
    }
  }
  return report;
}

Sampler variant_sampler(const datagen::VariantContext& ctx,
                        std::uint64_t seed, int min_len, int max_len,
                        int max_objects) {
  datagen::GenConfig config;
  config.variant = ctx.variant;
  config.seed = seed;
  config.min_len = min_len;
  config.max_len = max_len;
  return [ctx, config, seed, max_objects](std::int64_t index) -> SweepSample {
    Rng rng = Rng::substream(seed ^ 0x5eedf00dULL,
                             static_cast<std::uint64_t>(index));
    for (int attempt = 0;; ++attempt) {
      datagen::GenConfig local = config;
      local.max_objects = max_objects;
      int length = static_cast<int>(rng.range(config.min_len, config.max_len));
      datagen::GenRecord rec;
      try {
        rec = datagen::gen_valid(ctx, local, length, rng);
      } catch (const datagen::RetryExhaustedError&) {
        if (attempt > 20) throw;
        continue;
      }
      SweepSample sample;
      sample.object_values =
          ctx.layout.object_mode == compile::EncodingLayout::ObjectMode::Ext
              ? datagen::object_values(rec.instance)
              : std::vector<std::int64_t>{};
      const int kind = static_cast<int>(rng.below(6));
      try {
        switch (kind) {
          case 0:  // valid
            sample.instance = rec.instance;
            sample.plan = rec.plan;
            return sample;
          case 1: {  // incomplete corruption
            Plan bad =
                datagen::corrupt_incomplete(ctx, rec.instance, rec.plan, rng);
            sample.instance = rec.instance;
            sample.plan = bad;
            return sample;
          }
          case 2: {  // non-executable corruption where supported
            if (!datagen::variant_supports_nonexecutable(ctx.variant)) {
              sample.instance = rec.instance;
              sample.plan = rec.plan;
              if (!sample.plan.actions.empty()) {
                sample.plan.actions.pop_back();  // likely incomplete
              }
              return sample;
            }
            Plan bad = datagen::corrupt_nonexecutable(ctx, rec.instance,
                                                      rec.plan, rng);
            sample.instance = rec.instance;
            sample.plan = bad;
            return sample;
          }
          case 3: {  // empty plan
            sample.instance = rec.instance;
            if (rng.chance(0.5)) sample.instance.goal.clear();
            sample.plan = Plan{};
            return sample;
          }
          case 4: {  // truncated plan
            sample.instance = rec.instance;
            sample.plan = rec.plan;
            const std::size_t keep = rng.below(rec.plan.size() + 1);
            sample.plan.actions.resize(keep);
            return sample;
          }
          default: {  // shuffled tail: often non-executable mid-plan
            sample.instance = rec.instance;
            sample.plan = rec.plan;
            if (sample.plan.size() >= 2) {
              std::size_t i = rng.below(sample.plan.size());
              std::size_t j = rng.below(sample.plan.size());
              std::swap(sample.plan.actions[i], sample.plan.actions[j]);
            }
            return sample;
          }
        }
      } catch (const datagen::RetryExhaustedError&) {
        if (attempt > 20) throw;
        continue;
      }
    }
  };
}

Sampler colors_fixed_sampler(const datagen::VariantContext& ctx,
                             const std::vector<std::string>& objects,
                             std::uint64_t seed, int min_len, int max_len) {
  const Domain& d = *ctx.domain;
  const PredId p_bag = d.pred_index("bag"), p_color = d.pred_index("color");
  const PredId p_has = d.pred_index("hasColor");
  const bool wf = ctx.variant == datagen::Variant::ColorsWellFormed;
  const int n = static_cast<int>(objects.size());
  return [=, &d](std::int64_t index) -> SweepSample {
    Rng rng = Rng::substream(seed ^ 0xc01005ULL,
                             static_cast<std::uint64_t>(index));
    SweepSample sample;
    sample.instance.domain = ctx.domain;
    sample.instance.objects = objects;
    // Split the fixed universe into bags and colors, then scatter contents.
    const int n_bags = std::max(1, n / 2);
    std::vector<GroundAtom> atoms;
    std::vector<ObjId> bags, colors_;
    for (int i = 0; i < n; ++i) {
      if (i < n_bags) {
        bags.push_back(i);
        atoms.push_back({p_bag, {i}});
      } else {
        colors_.push_back(i);
        atoms.push_back({p_color, {i}});
      }
    }
    for (ObjId b : bags) {
      for (ObjId c : colors_) {
        if (rng.chance(0.3)) atoms.push_back({p_has, {b, c}});
      }
    }
    sample.instance.init = State(std::move(atoms));

    const SchemaId s_add = d.schema_index("add"),
                   s_rm = d.schema_index("remove");
    const int len = static_cast<int>(rng.range(min_len, max_len));
    State cur = sample.instance.init;
    const bool make_valid = rng.chance(0.45);
    for (int step = 0; step < len; ++step) {
      std::vector<GroundAction> cands;
      for (ObjId c : colors_) {
        for (ObjId b : bags) {
          bool present = cur.contains({p_has, {b, c}});
          bool add_ok = !wf || !present;
          bool rm_ok = !wf || present;
          if (!make_valid && rng.chance(0.15)) {
            // occasionally insert an inapplicable action on purpose
            add_ok = true;
            rm_ok = true;
          }
          if (add_ok) cands.push_back({s_add, {c, b}});
          if (rm_ok) cands.push_back({s_rm, {c, b}});
        }
      }
      GroundAction a = cands[rng.below(cands.size())];
      sample.plan.actions.push_back(a);
      if (applicable(sample.instance, cur, a)) {
        cur = succ(sample.instance, cur, a);
      }
    }
    // Goal: either the reached contents (valid when executable) or a random
    // set of literals.
    if (make_valid) {
      for (const GroundAtom& a : cur.atoms()) {
        if (a.pred == p_has) sample.instance.goal.push_back({a, true});
      }
    } else {
      for (ObjId b : bags) {
        for (ObjId c : colors_) {
          if (rng.chance(0.25)) {
            sample.instance.goal.push_back({{p_has, {b, c}}, true});
          }
        }
      }
    }
    return sample;
  };
}

LangCheckReport check_lowering(const crasp::CraspProgram& program,
                               const std::vector<std::int64_t>& ext_alphabet,
                               const std::vector<std::string>& vocab_subset,
                               int max_len, const std::string& name) {
  LangCheckReport report;
  report.name = name;
  crasp::CraspProgram lowered = crasp::lower_match_to_finite(program,
                                                             ext_alphabet);
  crasp::typecheck(lowered);

  // Token universe: the chosen Sigma symbols plus every alphabet value.
  struct Choice {
    bool ext;
    std::int64_t value;
    std::string sym;
  };
  std::vector<Choice> universe;
  for (const std::string& s : vocab_subset) universe.push_back({false, 0, s});
  for (std::int64_t v : ext_alphabet) universe.push_back({true, v, ""});

  const bool rewritten = crasp::uses_match(program);
  crasp::TokenSeq seq;
  for (const std::string& s : program.sigma) seq.intern(s);
  std::function<void(int)> walk = [&](int budget) {
    if (!seq.toks.empty()) {
      const bool orig = crasp::accepts(program, seq);
      // Identity lowerings read the untouched stream; rewritten programs get
      // the finite-alphabet encoding of the same string.
      const bool low = crasp::accepts(
          lowered,
          rewritten ? crasp::to_finite_tokens(seq, ext_alphabet) : seq);
      ++report.tested;
      if (orig == low) {
        ++report.agree;
      } else {
        ++report.disagree;
        if (report.first_counterexample.empty()) {
          report.first_counterexample = seq.to_string();
        }
      }
    }
    if (budget == 0) return;
    for (const Choice& c : universe) {
      if (c.ext) {
        seq.push_ext(c.value);
      } else {
        seq.push_symbol(c.sym);
      }
      walk(budget - 1);
      seq.toks.pop_back();
    }
  };
  walk(max_len);
  return report;
}

crasp::CraspProgram random_program(Rng& rng,
                                   const std::vector<std::string>& sigma) {
  using crasp::CraspOp;
  using crasp::OpKind;
  crasp::CraspProgram p;
  p.sigma = sigma;
  p.bandwidth = 4;
  const int lines = static_cast<int>(rng.range(4, 14));
  std::vector<int> bools, counts;
  auto any_bool = [&]() {
    return bools[rng.below(bools.size())];
  };
  auto any_count = [&]() {
    return counts[rng.below(counts.size())];
  };
  for (int i = 0; i < lines; ++i) {
    CraspOp op;
    const bool can_ref_bool = !bools.empty();
    const bool can_ref_count = !counts.empty();
    for (;;) {
      const int pick = static_cast<int>(rng.below(11));
      if (pick == 0) {
        op.kind = OpKind::Initial;
        op.sigma = static_cast<int>(rng.below(sigma.size()));
      } else if (pick == 1 && can_ref_bool) {
        op.kind = OpKind::Not;
        op.a = any_bool();
      } else if (pick == 2 && can_ref_bool) {
        op.kind = OpKind::And;
        op.a = any_bool();
        op.b = any_bool();
      } else if (pick == 3) {
        op.kind = OpKind::ConstTrue;
      } else if (pick == 4 && can_ref_count) {
        op.kind = OpKind::Leq;
        op.a = any_count();
        op.b = any_count();
      } else if (pick == 5 && can_ref_bool) {
        op.kind = OpKind::Count;
        op.a = any_bool();
        op.rel = rng.chance(0.5)
                     ? crasp::LocalRel::all()
                     : crasp::LocalRel::offset(static_cast<int>(rng.range(0, 3)));
      } else if (pick == 6) {
        op.kind = OpKind::MatchCount;
        const int k = static_cast<int>(rng.range(1, 2));
        for (int c = 0; c < k; ++c) {
          op.match.conjuncts.push_back(
              {static_cast<int>(rng.range(0, 3)),
               static_cast<int>(rng.range(0, 3)),
               rng.range(-2, 2)});
        }
        op.match.strict = rng.chance(0.5);
        if (can_ref_bool && rng.chance(0.5)) op.match.filter = any_bool();
      } else if (pick == 7 && can_ref_bool && can_ref_count) {
        op.kind = OpKind::Cond;
        op.a = any_bool();
        op.b = any_count();
        op.c = any_count();
      } else if (pick == 8 && can_ref_count) {
        op.kind = rng.chance(0.5) ? OpKind::Add : OpKind::Sub;
        op.a = any_count();
        op.b = any_count();
      } else if (pick == 9) {
        op.kind = OpKind::ConstOne;
      } else {
        continue;
      }
      break;
    }
    if (crasp::op_is_bool(op.kind)) {
      bools.push_back(static_cast<int>(p.ops.size()));
    } else {
      counts.push_back(static_cast<int>(p.ops.size()));
    }
    p.ops.push_back(op);
  }
  if (bools.empty()) {
    CraspOp op;
    op.kind = OpKind::ConstTrue;
    bools.push_back(static_cast<int>(p.ops.size()));
    p.ops.push_back(op);
  }
  // Output: a boolean that typically depends on the whole program.
  if (!counts.empty()) {
    CraspOp cmp;
    cmp.kind = OpKind::Leq;
    cmp.a = counts[rng.below(counts.size())];
    cmp.b = counts[rng.below(counts.size())];
    p.ops.push_back(cmp);
    CraspOp fin;
    fin.kind = OpKind::And;
    fin.a = static_cast<int>(p.ops.size()) - 1;
    fin.b = any_bool();
    p.ops.push_back(fin);
  }
  p.output = static_cast<int>(p.ops.size()) - 1;
  crasp::typecheck(p);
  return p;
}

crasp::TokenSeq random_input(Rng& rng, const std::vector<std::string>& sigma,
                             int len, std::int64_t max_value) {
  crasp::TokenSeq seq;
  for (const std::string& s : sigma) seq.intern(s);
  for (int i = 0; i < len; ++i) {
    if (rng.chance(0.5)) {
      seq.push_symbol(sigma[rng.below(sigma.size())]);
    } else {
      seq.push_ext(rng.range(0, max_value));
    }
  }
  return seq;
}

LangCheckReport check_translation_invariance(
    std::int64_t trials, std::uint64_t seed,
    const std::vector<std::int64_t>& shifts) {
  LangCheckReport report;
  report.name = "translation-invariance";
  const std::vector<std::string> sigma = {"$", "@", "p", "q"};
  for (std::int64_t t = 0; t < trials; ++t) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(t));
    crasp::CraspProgram prog = random_program(rng, sigma);
    const int len = static_cast<int>(rng.range(1, 24));
    crasp::TokenSeq input = random_input(rng, sigma, len, 12);
    const bool base = crasp::accepts(prog, input);
    bool ok = true;
    for (std::int64_t delta : shifts) {
      crasp::TokenSeq shifted = input;
      for (crasp::Token& tok : shifted.toks) {
        if (tok.ext) tok.value += delta;
      }
      if (crasp::accepts(prog, shifted) != base) {
        ok = false;
        break;
      }
    }
    ++report.tested;
    if (ok) {
      ++report.agree;
    } else {
      ++report.disagree;
      if (report.first_counterexample.empty()) {
        report.first_counterexample =
            "trial " + std::to_string(t) + ": " + input.to_string();
      }
    }
  }
  return report;
}

}  // namespace planlab::checks
