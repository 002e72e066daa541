// planlab.cpp
//
// Single entry point: plan verification, counting-program execution,
// domain-to-program compilation, match lowering, dataset generation, and the
// brute-force theory checks. JSON goes to stdout, diagnostics to stderr.
//
// Exit codes: 0 success/valid verdict, 1 invalid-plan verdict or failed
// check, 2 usage error, 3 internal error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "planlab/checks.hpp"
#include "planlab/compile.hpp"
#include "planlab/datagen.hpp"
#include "planlab/domains.hpp"
#include "planlab/dsl.hpp"

namespace {

using nlohmann::ordered_json;
using namespace planlab;

struct UsageError : Error {
  using Error::Error;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void spit(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path);
  out << content;
}

std::uint64_t default_seed() {
  if (const char* env = std::getenv("PLANLAB_SEED")) {
    return std::strtoull(env, nullptr, 10);
  }
  return 0;
}

int cmd_verify(const std::string& domain_file, const std::string& instance_file,
               const std::string& plan_file, bool trace) {
  auto domain = std::make_shared<Domain>(dsl::parse_domain(slurp(domain_file)));
  Instance inst = dsl::parse_instance(slurp(instance_file), domain);
  Plan plan = dsl::parse_plan(slurp(plan_file), inst);
  SimResult sim = simulate(inst, plan);

  ordered_json out;
  switch (sim.verdict.status) {
    case Verdict::Status::Valid:
      out["status"] = "valid";
      break;
    case Verdict::Status::NonExecutable:
      out["status"] = "non_executable";
      out["step"] = sim.verdict.step;
      if (sim.verdict.violated) {
        out["violated"] = literal_to_string(*domain, inst, *sim.verdict.violated);
      }
      break;
    case Verdict::Status::Incomplete: {
      out["status"] = "incomplete";
      ordered_json unsat = ordered_json::array();
      for (const GroundLiteral& g : sim.verdict.unsat_goals) {
        unsat.push_back(literal_to_string(*domain, inst, g));
      }
      out["unsat_goals"] = std::move(unsat);
      break;
    }
  }
  if (trace) {
    ordered_json states = ordered_json::array();
    for (const State& s : sim.trace) {
      ordered_json atoms = ordered_json::array();
      for (const GroundAtom& a : s.atoms()) {
        atoms.push_back(atom_to_string(*domain, inst, a));
      }
      states.push_back(std::move(atoms));
    }
    out["trace"] = std::move(states);
  }
  std::cout << out.dump(2) << "\n";
  return sim.verdict.valid() ? 0 : 1;
}

int cmd_run_crasp(const std::string& program_file, const std::string& input_file,
                  const std::string& dump_table, bool classify) {
  crasp::CraspProgram prog = dsl::parse_crasp(slurp(program_file));
  crasp::TokenSeq input = dsl::parse_tokens(slurp(input_file));
  ordered_json out;
  if (classify) {
    out["match_offset_free"] = crasp::is_match_offset_free(prog);
    out["uses_match"] = crasp::uses_match(prog);
    out["lines"] = prog.ops.size();
  }
  const bool accepted = crasp::accepts(prog, input);
  out["accepts"] = accepted;
  if (!dump_table.empty()) {
    crasp::EvalTable table = crasp::eval(prog, input);
    spit(dump_table, table.to_tsv(prog));
    out["table"] = dump_table;
  }
  std::cout << out.dump(2) << "\n";
  return accepted ? 0 : 1;
}

int cmd_compile(const std::string& domain_file, const std::string& mode_name,
                const std::string& objects_file, const std::string& out_file,
                const std::string& report_file, bool negated_goals) {
  auto domain = std::make_shared<Domain>(dsl::parse_domain(slurp(domain_file)));
  compile::Mode mode = mode_name == "df" ? compile::Mode::DeleteFree
                                         : compile::Mode::WellFormed;
  compile::CompilationReport report;
  crasp::CraspProgram prog;
  if (!objects_file.empty()) {
    Instance inst = dsl::parse_instance(slurp(objects_file), domain);
    compile::EncodingLayout layout =
        compile::make_layout_sigma(domain, inst.objects, negated_goals);
    prog = compile::compile_fixed(layout, mode, &report);
  } else {
    compile::EncodingLayout layout =
        compile::make_layout_ext(domain, negated_goals);
    prog = compile::compile_variable(layout, mode, &report);
  }
  spit(out_file, dsl::serialize_crasp(prog));
  ordered_json rj;
  rj["lines"] = prog.ops.size();
  rj["ground_actions"] = report.ground_actions;
  rj["ground_propositions"] = report.ground_propositions;
  ordered_json prov = ordered_json::array();
  for (const std::string& p : report.provenance) prov.push_back(p);
  rj["provenance"] = std::move(prov);
  if (!report_file.empty()) spit(report_file, rj.dump(2));
  ordered_json out;
  out["program"] = out_file;
  out["lines"] = prog.ops.size();
  out["ground_actions"] = report.ground_actions;
  out["ground_propositions"] = report.ground_propositions;
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_lower(const std::string& program_file, const std::string& alphabet_arg,
              const std::string& out_file) {
  crasp::CraspProgram prog = dsl::parse_crasp(slurp(program_file));
  std::vector<std::int64_t> alphabet;
  std::stringstream ss(alphabet_arg);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) alphabet.push_back(std::stoll(item));
  }
  crasp::CraspProgram lowered = crasp::lower_match_to_finite(prog, alphabet);
  spit(out_file, dsl::serialize_crasp(lowered));
  ordered_json out;
  out["program"] = out_file;
  out["lines"] = lowered.ops.size();
  out["uses_match"] = crasp::uses_match(lowered);
  std::cout << out.dump(2) << "\n";
  return 0;
}

int cmd_gen(const std::string& variant_name, std::uint64_t seed, int count,
            const std::string& lengths, const std::string& out_dir, int jobs) {
  auto variant = datagen::variant_from_id(variant_name);
  if (!variant) {
    std::cerr << "unknown variant " << variant_name << "\n";
    return 2;
  }
  datagen::GenConfig config;
  config.variant = *variant;
  config.seed = seed;
  std::vector<datagen::SplitSpec> splits = datagen::default_splits(count);
  if (!lengths.empty()) {
    // lengths LO:HI replaces the split plan with one "train" split.
    auto colon = lengths.find(':');
    if (colon == std::string::npos) {
      std::cerr << "--lengths wants LO:HI\n";
      return 2;
    }
    datagen::SplitSpec only;
    only.name = "train";
    only.pairs = count;
    only.min_len = std::stoi(lengths.substr(0, colon));
    only.max_len = std::stoi(lengths.substr(colon + 1));
    splits = {only};
  }
  std::vector<datagen::SplitStats> stats =
      datagen::build_splits(config, splits, out_dir, jobs);
  const std::string stats_json = datagen::stats_to_json(config, stats);
  spit(out_dir + "/" + variant_name + ".stats.json", stats_json);

  ordered_json manifest;
  manifest["variant"] = variant_name;
  manifest["seed"] = seed;
  manifest["count"] = count;
  manifest["lengths"] = lengths.empty() ? "default" : lengths;
  manifest["jobs"] = jobs;
  ordered_json split_list = ordered_json::array();
  for (const datagen::SplitSpec& s : splits) {
    ordered_json sj;
    sj["name"] = s.name;
    sj["pairs"] = s.pairs;
    sj["min_len"] = s.min_len;
    sj["max_len"] = s.max_len;
    split_list.push_back(std::move(sj));
  }
  manifest["splits"] = std::move(split_list);
  spit(out_dir + "/" + variant_name + ".manifest.json", manifest.dump(2));
  std::cout << stats_json << "\n";
  return 0;
}

int cmd_check(const std::string& what, int max_len, int trials,
              std::uint64_t seed, int jobs) {
  checks::LangCheckReport report;
  if (what == "flipflop") {
    report = checks::check_flipflop(max_len > 0 ? max_len : 10);
  } else if (what == "parity") {
    report = checks::check_parity_exhaustive(domains::Board(2, 2),
                                             std::min(max_len, 6));
    checks::LangCheckReport rnd = checks::check_parity_random(
        domains::Board(5, 5), trials > 0 ? trials : 2000, 200, seed, jobs);
    report.tested += rnd.tested;
    report.agree += rnd.agree;
    report.disagree += rnd.disagree;
    if (report.first_counterexample.empty()) {
      report.first_counterexample = rnd.first_counterexample;
    }
    report.name = "parity";
  } else if (what == "compiled") {
    datagen::VariantContext ctx =
        datagen::VariantContext::make(datagen::Variant::ColorsWellFormed);
    crasp::CraspProgram prog =
        compile::compile_variable(ctx.layout, compile::Mode::WellFormed);
    report = checks::check_compiled(
        prog, ctx.layout,
        checks::variant_sampler(ctx, seed, 11, 60, 40),
        trials > 0 ? trials : 500, "compiled-colors-wf");
  } else if (what == "lowering") {
    // The unique-copy style matcher over a tiny alphabet.
    crasp::CraspProgram prog;
    prog.sigma = {"$"};
    prog.bandwidth = 4;
    using crasp::CraspOp;
    using crasp::OpKind;
    CraspOp m;
    m.kind = OpKind::MatchCount;
    m.match.conjuncts = {{1, 0, 0}};
    prog.ops.push_back(m);
    CraspOp one;
    one.kind = OpKind::ConstOne;
    prog.ops.push_back(one);
    CraspOp leq;
    leq.kind = OpKind::Leq;
    leq.a = 0;
    leq.b = 1;
    prog.ops.push_back(leq);
    prog.output = 2;
    crasp::typecheck(prog);
    report = checks::check_lowering(prog, {1, 2, 3}, {"$"},
                                    max_len > 0 ? std::min(max_len, 8) : 6,
                                    "lowering-cli");
  } else {
    std::cerr << "unknown check " << what << "\n";
    return 2;
  }
  std::cout << report.to_json() << "\n";
  return report.pass() ? 0 : 1;
}

int cmd_stats(const std::string& jsonl_file) {
  std::ifstream in(jsonl_file);
  if (!in) throw Error("cannot open " + jsonl_file);
  std::string line;
  std::int64_t records = 0, correct = 0;
  std::map<std::string, int> corruptions, buckets;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line);
    ++records;
    if (j["label"] == "correct") ++correct;
    corruptions[j["corruption"].get<std::string>()] += 1;
    const int n = j["n_actions"].get<int>();
    const int lo = ((n - 1) / 10) * 10 + 1;
    buckets[std::to_string(lo) + "-" + std::to_string(lo + 9)] += 1;
  }
  ordered_json out;
  out["records"] = records;
  out["correct"] = correct;
  out["incorrect"] = records - correct;
  ordered_json cj = ordered_json::object();
  for (const auto& [k, v] : corruptions) cj[k] = v;
  out["corruptions"] = std::move(cj);
  ordered_json bj = ordered_json::object();
  for (const auto& [k, v] : buckets) bj[k] = v;
  out["length_buckets"] = std::move(bj);
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"plan verification laboratory"};
  app.require_subcommand(1);

  std::string domain_file, instance_file, plan_file;
  bool trace = false;
  CLI::App* verify = app.add_subcommand("verify", "simulate a plan");
  verify->add_option("--domain,-d", domain_file)->required();
  verify->add_option("--instance,-i", instance_file)->required();
  verify->add_option("--plan,-p", plan_file)->required();
  verify->add_flag("--trace", trace, "include the state trace");

  std::string program_file, input_file, dump_table;
  bool classify = false;
  CLI::App* run = app.add_subcommand("run-crasp", "run a counting program");
  run->add_option("--program", program_file)->required();
  run->add_option("--input", input_file)->required();
  run->add_option("--dump-table", dump_table, "write the evaluation table TSV");
  run->add_flag("--classify", classify, "report positional-encoding class");

  std::string mode_name = "wf", objects_file, out_file, report_file;
  bool negated_goals = false;
  CLI::App* comp = app.add_subcommand("compile-crasp",
                                      "compile a domain to a program");
  comp->add_option("--domain", domain_file)->required();
  comp->add_option("--mode", mode_name)->check(CLI::IsMember({"wf", "df"}));
  comp->add_option("--objects", objects_file,
                   "instance file fixing the universe (fixed-mode compile)");
  comp->add_option("--out", out_file)->required();
  comp->add_option("--report", report_file);
  comp->add_flag("--negated-goals", negated_goals);

  std::string alphabet_arg;
  CLI::App* lower = app.add_subcommand("lower", "eliminate match operations");
  lower->add_option("--program", program_file)->required();
  lower->add_option("--alphabet", alphabet_arg)->required();
  lower->add_option("--out", out_file)->required();

  std::string variant_name, lengths, out_dir = ".";
  std::uint64_t seed = default_seed();
  int count = 100, jobs = 1;
  CLI::App* gen = app.add_subcommand("gen", "generate dataset splits");
  gen->add_option("variant", variant_name)->required();
  gen->add_option("--seed", seed);
  gen->add_option("--count", count, "training pairs");
  gen->add_option("--lengths", lengths, "LO:HI single-split override");
  gen->add_option("--out-dir", out_dir);
  gen->add_option("--jobs", jobs);

  std::string what;
  int max_len = 0, trials = 0;
  CLI::App* check = app.add_subcommand("check-theory", "run a brute-force check");
  check->add_option("what", what)
      ->required()
      ->check(CLI::IsMember({"flipflop", "parity", "compiled", "lowering"}));
  check->add_option("--max-len", max_len);
  check->add_option("--trials", trials);
  check->add_option("--seed", seed);
  check->add_option("--jobs", jobs);

  std::string jsonl_file;
  CLI::App* stats = app.add_subcommand("stats", "summarize a JSONL split");
  stats->add_option("file", jsonl_file)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (verify->parsed()) {
      return cmd_verify(domain_file, instance_file, plan_file, trace);
    }
    if (run->parsed()) {
      return cmd_run_crasp(program_file, input_file, dump_table, classify);
    }
    if (comp->parsed()) {
      return cmd_compile(domain_file, mode_name, objects_file, out_file,
                         report_file, negated_goals);
    }
    if (lower->parsed()) {
      return cmd_lower(program_file, alphabet_arg, out_file);
    }
    if (gen->parsed()) {
      return cmd_gen(variant_name, seed, count, lengths, out_dir, jobs);
    }
    if (check->parsed()) {
      return cmd_check(what, max_len, trials, seed, jobs);
    }
    if (stats->parsed()) {
      return cmd_stats(jsonl_file);
    }
  } catch (const dsl::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const UsageError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
