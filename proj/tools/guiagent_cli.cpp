#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"

#include "guiagent/bootstrap.hpp"
#include "guiagent/evaluation.hpp"
#include "guiagent/external_adapters.hpp"
#include "guiagent/filter_pipeline.hpp"
#include "guiagent/http_clients.hpp"
#include "guiagent/policies.hpp"
#include "guiagent/preference.hpp"
#include "guiagent/reflection.hpp"
#include "guiagent/replay.hpp"
#include "guiagent/review_api.hpp"
#include "guiagent/sft_export.hpp"
#include "guiagent/sim_env.hpp"
#include "guiagent/thought_augment.hpp"
#include "guiagent/trace_io.hpp"
#include "guiagent/trace_store.hpp"
#include "guiagent/util.hpp"

namespace fs = std::filesystem;
using namespace guiagent;

namespace {

TaskRegistry registry_from(const std::string& path) {
  return path.empty() ? TaskRegistry::bundled() : TaskRegistry::load(path);
}

std::ofstream open_out(const std::string& path) {
  auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot open " + path);
  return in;
}

std::map<std::string, ReviewAnnotation> read_reviews(const std::string& path) {
  std::map<std::string, ReviewAnnotation> out;
  if (path.empty()) return out;
  auto in = open_in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = nlohmann::json::parse(line);
    if (j.value("type", std::string()) != "review") continue;
    auto ann = review_annotation_from_json(j);
    out[ann.trace_id] = ann;  // the latest annotation wins
  }
  return out;
}

struct RunOpts {
  std::string task;
  std::string tasks_file;
  std::string policy = "scripted:oracle";
  int budget = kDefaultBudget;
  int window = kDefaultWindow;
  std::uint64_t seed = 0;
  std::string out;
  std::string store;
};

int cmd_run(const RunOpts& o) {
  auto registry = registry_from(o.tasks_file);
  const Task& task = registry.get(o.task);
  SimEnv env(registry);
  auto policy = make_policy(o.policy);
  Trace t = run_episode(task, env, *policy, {o.budget, o.window, o.seed});
  if (!o.out.empty()) {
    auto out = open_out(o.out);
    out << io::trace_to_record(t);
  }
  if (!o.store.empty()) TraceStore(o.store).save(t);
  std::cout << t.trace_id << ' ' << to_string(t.termination) << ' ' << t.steps.size() << " steps"
            << (episode_succeeded(t, env) ? " success" : " failure") << '\n';
  return 0;
}

int cmd_tasks_list(const std::string& tasks_file) {
  auto registry = registry_from(tasks_file);
  for (const auto& t : registry.tasks()) {
    std::cout << t.task_id << '\t' << to_string(t.platform) << '\t' << t.app << '\t' << t.instruction << '\n';
  }
  return 0;
}

int cmd_convert(const std::string& adapter_id, const std::string& in_path, const std::string& store_dir) {
  const auto& adapter = find_adapter(adapter_id);
  TraceStore store(store_dir);
  auto text = read_file(in_path);
  std::vector<nlohmann::json> records;
  auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    for (auto& r : nlohmann::json::parse(text)) records.push_back(std::move(r));
  } else {
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) records.push_back(nlohmann::json::parse(line));
    }
  }
  for (const auto& r : records) std::cout << store.save(external_to_trace(r, adapter)) << '\n';
  return 0;
}

int cmd_export_sft(const std::string& store_dir, const std::string& out_path, const std::string& designations,
                   int window, bool vanilla) {
  TraceStore store(store_dir);
  std::vector<StepDesignation> ds;
  if (!designations.empty()) {
    auto in = open_in(designations);
    ds = read_designations(in);
  }
  auto samples = export_sft(store.load_all(), ds, {window, vanilla});
  auto out = open_out(out_path);
  write_sft_jsonl(out, samples);
  std::cout << samples.size() << " samples\n";
  return 0;
}

struct AugmentOpts {
  std::string mode = "actre";
  std::string store;
  std::string out;
  std::string annotator = "scripted";
  std::string policy = "scripted:noisy-oracle:0.5";
  std::string tasks_file;
  std::string language = "en";
  int max_try = 16;
  std::uint64_t seed = 0;
  double timeout = 30.0;
};

int cmd_augment(const AugmentOpts& o) {
  TraceStore in(o.store);
  TraceStore out(o.out.empty() ? (fs::path(o.store) / "augmented").string() : o.out);
  auto language = language_from_string(o.language);
  if (o.mode == "actre") {
    std::unique_ptr<AnnotatorClient> client;
    if (o.annotator == "scripted") {
      client = std::make_unique<ScriptedAnnotator>();
    } else {
      client = std::make_unique<HttpAnnotatorClient>(o.annotator, o.timeout);
    }
    for (const auto& t : in.load_all()) {
      ActReConfig cfg;
      cfg.language = language;
      cfg.seed = o.seed;
      std::cout << out.save(actre_annotate(t, *client, cfg)) << '\n';
    }
    return 0;
  }
  if (o.mode != "bootstrap") throw Error(ErrorCode::Precondition, "mode must be actre or bootstrap");
  auto registry = registry_from(o.tasks_file);
  auto policy = make_policy(o.policy, o.timeout);
  BootstrapConfig cfg{o.max_try, language};
  for (const auto& t : in.load_all()) {
    SimEnv env(registry);
    BootstrapStats stats;
    auto augmented = bootstrap_trace(t, env, task_for_trace(t, registry), *policy, cfg, o.seed, &stats);
    std::cout << out.save(augmented) << ' ' << stats.matched << '/' << stats.steps << " steps matched\n";
  }
  return 0;
}

struct FilterOpts {
  std::string store;
  std::string out;
  std::string scorer = "scripted";
  std::string annotations;
  std::string report;
  std::string tasks_file;
  double threshold = 0.5;
  double review_fraction = 1.0;
  int repeat_limit = 3;
  int stuck_window = 3;
  std::size_t workers = 1;
  double timeout = 30.0;
};

int cmd_filter(const FilterOpts& o) {
  auto registry = registry_from(o.tasks_file);
  TraceStore in(o.store);
  TraceStore out(o.out.empty() ? (fs::path(o.store) / "filtered").string() : o.out);
  std::unique_ptr<ScorerClient> scorer;
  if (o.scorer == "scripted") {
    scorer = std::make_unique<ReplayScorer>(registry);
  } else {
    scorer = std::make_unique<HttpScorerClient>(o.scorer, o.timeout);
  }
  FilterConfig cfg{o.repeat_limit, o.stuck_window, o.threshold, o.review_fraction, o.workers};
  auto result = run_pipeline(in.load_all(), registry, *scorer, read_reviews(o.annotations), cfg);
  for (const auto& t : result.output) out.save(t);
  if (!o.report.empty()) {
    auto rep = open_out(o.report);
    write_report(rep, result.report);
  }
  std::cout << result.output.size() << " of " << result.report.size() << " traces kept\n";
  return 0;
}

int cmd_build_pairs(const std::string& store_dir, const std::string& corrections, const std::string& out_path,
                    const std::string& tasks_file, int window) {
  TraceStore store(store_dir);
  std::vector<Correction> cs;
  if (corrections == "scripted") {
    SimEnv env(registry_from(tasks_file));
    for (const auto& t : store.load_all()) {
      for (auto& c : scripted_corrections(t, env)) cs.push_back(std::move(c));
    }
  } else {
    auto in = open_in(corrections);
    cs = read_corrections(in, [&](const std::string& id) { return store.load(id).platform; });
  }
  std::vector<PreferencePair> pairs;
  for (const auto& c : cs) pairs.push_back(build_pair(store.load(c.trace_id), c));
  auto out = open_out(out_path);
  emit_dpo_dataset(out, pairs, window);
  std::cout << pairs.size() << " pairs\n";
  return 0;
}

int cmd_dpo(const std::string& pairs_path, const std::string& sft_path, DpoConfig cfg, const std::string& out_path) {
  auto in = open_in(pairs_path);
  auto examples = examples_from_records(read_dpo_dataset(in));
  ToyPolicy sft = sft_path.empty() ? ToyPolicy::uniform_for(examples)
                                   : ToyPolicy::from_json(nlohmann::json::parse(read_file(sft_path)));
  std::vector<double> history;
  auto trained = train_toy_policy(examples, sft, cfg, &history);
  auto out = open_out(out_path);
  out << trained.to_json().dump(2) << '\n';
  std::cout << "loss " << history.front() << " -> " << history.back() << " over " << history.size() - 1
            << " steps\n";
  return 0;
}

struct EvalOpts {
  std::string suite;
  std::string policy = "scripted:oracle";
  std::string report;
  int budget = kDefaultBudget;
  int window = kDefaultWindow;
  int runs = 3;
  int bon = 0;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
};

int cmd_eval(const EvalOpts& o) {
  auto registry = registry_from(o.suite);
  auto policy = make_policy(o.policy);
  BenchConfig cfg{o.budget, o.window, o.runs, o.seed, o.workers};
  auto report = o.bon > 0 ? run_best_of_n(registry.tasks(), *policy, o.bon, cfg)
                          : run_benchmark(registry.tasks(), *policy, cfg);
  if (!o.report.empty()) {
    auto out = open_out(o.report);
    out << bench_report_to_json(report).dump(2) << '\n';
  }
  for (const auto& t : report.tasks) {
    int wins = 0;
    for (bool s : t.success) wins += s ? 1 : 0;
    std::cout << t.task_id << '\t' << wins << '/' << t.success.size() << '\n';
  }
  std::cout << "success_rate " << report.success_rate << '\n';
  return 0;
}

struct BootstrapOpts {
  std::string tasks_file;
  std::string policy = "scripted:noisy-oracle:0.4";
  std::string store;
  std::string checkpoint;
  bool resume = false;
  int rounds = 3;
  int budget = kDefaultBudget;
  int eval_runs = 8;
  std::size_t workers = 1;
  std::uint64_t seed = 0;
};

int cmd_bootstrap(const BootstrapOpts& o) {
  OrchestratorConfig cfg;
  cfg.workers = o.workers;
  cfg.budget = o.budget;
  cfg.eval_runs = o.eval_runs;
  cfg.seed = o.seed;
  cfg.store_dir = o.store;
  IterationState state = o.resume ? guiagent::resume(o.checkpoint)
                                  : initial_state(registry_from(o.tasks_file).tasks(), o.policy, cfg);
  if (!o.resume) {
    std::cout << "round 0 heldout " << state.metrics.success_rate << '\n';
    if (!o.checkpoint.empty()) write_checkpoint(o.checkpoint, state);
  }
  while (state.round < o.rounds) {
    state = run_iteration(state, cfg);
    std::cout << "round " << state.round << " raw " << state.raw_count << " filtered " << state.filtered_count
              << " heldout " << state.metrics.success_rate;
    for (const auto& t : state.metrics.tasks) {
      int wins = 0;
      for (bool s : t.success) wins += s ? 1 : 0;
      std::cout << ' ' << t.task_id << '=' << wins << '/' << t.success.size();
    }
    std::cout << '\n';
    if (!o.checkpoint.empty()) write_checkpoint(o.checkpoint, state);
  }
  return 0;
}

int cmd_serve_review(const std::string& store, const std::string& addr, const std::string& tasks_file) {
  auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw Error(ErrorCode::Syntax, "address must be host:port");
  auto host = addr.substr(0, colon);
  int port = std::stoi(addr.substr(colon + 1));
  ReviewService service(store, registry_from(tasks_file));
  ReviewServer server(service);
  std::cout << "serving " << store << " on " << host << ':' << port << std::endl;
  server.listen(host, port);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symbolic GUI-agent toolkit: episodes, traces, filtering, preference data, evaluation"};
  app.require_subcommand(1);

  RunOpts run;
  auto* run_cmd = app.add_subcommand("run", "Run one episode");
  run_cmd->add_option("--task", run.task, "Task id")->required();
  run_cmd->add_option("--tasks", run.tasks_file, "Task registry file (default: bundled suite)");
  run_cmd->add_option("--policy", run.policy, "Policy endpoint URL or scripted:<name>");
  run_cmd->add_option("--budget", run.budget)->check(CLI::PositiveNumber);
  run_cmd->add_option("--window", run.window)->check(CLI::PositiveNumber);
  run_cmd->add_option("--seed", run.seed);
  run_cmd->add_option("--out", run.out, "Trace file to write");
  run_cmd->add_option("--store", run.store, "Also save into this store");

  std::string tasks_file;
  auto* tasks_cmd = app.add_subcommand("tasks", "Task registry tools");
  auto* tasks_list = tasks_cmd->add_subcommand("list", "List tasks");
  tasks_list->add_option("--tasks", tasks_file);
  std::string tasks_export_out;
  auto* tasks_export = tasks_cmd->add_subcommand("export", "Write the bundled suite as a registry file");
  tasks_export->add_option("--out", tasks_export_out)->required();
  tasks_cmd->require_subcommand(1);

  std::string adapter, conv_in, conv_out;
  auto* convert_cmd = app.add_subcommand("convert", "Convert external trajectories into a store");
  convert_cmd->add_option("--adapter", adapter)->required()->check(CLI::IsMember(adapter_ids()));
  convert_cmd->add_option("--in", conv_in)->required()->check(CLI::ExistingFile);
  convert_cmd->add_option("--out", conv_out, "Store directory")->required();

  std::string sft_store, sft_out, sft_designations;
  int sft_window = kDefaultWindow;
  bool sft_vanilla = false;
  auto* sft_cmd = app.add_subcommand("export-sft", "Export SFT samples with loss masks");
  sft_cmd->add_option("--store", sft_store)->required();
  sft_cmd->add_option("--out", sft_out)->required();
  sft_cmd->add_option("--designations", sft_designations, "JSONL of corrected/erroneous step designations");
  sft_cmd->add_option("--window", sft_window)->check(CLI::PositiveNumber);
  sft_cmd->add_flag("--include-vanilla", sft_vanilla, "Also emit thought-free copies");

  AugmentOpts aug;
  auto* aug_cmd = app.add_subcommand("augment", "Add thoughts to stored traces");
  aug_cmd->add_option("--mode", aug.mode)->check(CLI::IsMember({"actre", "bootstrap"}));
  aug_cmd->add_option("--store", aug.store)->required();
  aug_cmd->add_option("--out", aug.out, "Output store (default: <store>/augmented)");
  aug_cmd->add_option("--annotator", aug.annotator, "Annotator endpoint URL or 'scripted'");
  aug_cmd->add_option("--policy", aug.policy, "Sampling policy for bootstrap mode");
  aug_cmd->add_option("--tasks", aug.tasks_file);
  aug_cmd->add_option("--max-try", aug.max_try)->check(CLI::PositiveNumber);
  aug_cmd->add_option("--language", aug.language)->check(CLI::IsMember({"en", "zh"}));
  aug_cmd->add_option("--seed", aug.seed);

  FilterOpts flt;
  auto* flt_cmd = app.add_subcommand("filter", "Rule, score and review filtering");
  flt_cmd->add_option("--store", flt.store)->required();
  flt_cmd->add_option("--out", flt.out, "Output store (default: <store>/filtered)");
  flt_cmd->add_option("--scorer", flt.scorer, "Scorer endpoint URL or 'scripted'");
  flt_cmd->add_option("--threshold", flt.threshold)->check(CLI::Range(0.0, 1.0));
  flt_cmd->add_option("--annotations", flt.annotations, "Annotation export (JSONL)");
  flt_cmd->add_option("--report", flt.report, "Verdict report (JSONL)");
  flt_cmd->add_option("--review-fraction", flt.review_fraction)->check(CLI::Range(0.0, 1.0));
  flt_cmd->add_option("--repeat-limit", flt.repeat_limit)->check(CLI::PositiveNumber);
  flt_cmd->add_option("--stuck-window", flt.stuck_window)->check(CLI::PositiveNumber);
  flt_cmd->add_option("--workers", flt.workers)->check(CLI::PositiveNumber);
  flt_cmd->add_option("--tasks", flt.tasks_file);

  std::string bp_store, bp_corrections, bp_out, bp_tasks;
  int bp_window = kDefaultWindow;
  auto* bp_cmd = app.add_subcommand("build-pairs", "Build reflection preference pairs");
  bp_cmd->add_option("--store", bp_store)->required();
  bp_cmd->add_option("--corrections", bp_corrections, "Corrections JSONL or 'scripted'")->required();
  bp_cmd->add_option("--out", bp_out)->required();
  bp_cmd->add_option("--tasks", bp_tasks);
  bp_cmd->add_option("--window", bp_window)->check(CLI::PositiveNumber);

  std::string dpo_pairs, dpo_sft, dpo_out;
  DpoConfig dpo_cfg;
  auto* dpo_cmd = app.add_subcommand("dpo", "Train the toy policy on preference pairs");
  dpo_cmd->add_option("--pairs", dpo_pairs)->required()->check(CLI::ExistingFile);
  dpo_cmd->add_option("--sft", dpo_sft, "Reference policy file (default: uniform)");
  dpo_cmd->add_option("--beta", dpo_cfg.beta)->check(CLI::PositiveNumber);
  dpo_cmd->add_option("--lr", dpo_cfg.learning_rate)->check(CLI::NonNegativeNumber);
  dpo_cmd->add_option("--steps", dpo_cfg.steps)->check(CLI::PositiveNumber);
  dpo_cmd->add_option("--out", dpo_out)->required();

  EvalOpts ev;
  auto* ev_cmd = app.add_subcommand("eval", "Benchmark a policy");
  ev_cmd->add_option("--suite", ev.suite, "Task registry file (default: bundled suite)");
  ev_cmd->add_option("--policy", ev.policy);
  ev_cmd->add_option("--budget", ev.budget)->check(CLI::PositiveNumber);
  ev_cmd->add_option("--window", ev.window)->check(CLI::PositiveNumber);
  ev_cmd->add_option("--runs", ev.runs)->check(CLI::PositiveNumber);
  ev_cmd->add_option("--bon", ev.bon, "Best-of-N episodes per task");
  ev_cmd->add_option("--seed", ev.seed);
  ev_cmd->add_option("--workers", ev.workers)->check(CLI::PositiveNumber);
  ev_cmd->add_option("--report", ev.report);

  BootstrapOpts bs;
  auto* bs_cmd = app.add_subcommand("bootstrap", "Iterate run -> filter -> learn -> refine");
  bs_cmd->add_option("--tasks", bs.tasks_file);
  bs_cmd->add_option("--policy", bs.policy, "Base policy spec");
  bs_cmd->add_option("--rounds", bs.rounds)->check(CLI::NonNegativeNumber);
  bs_cmd->add_option("--workers", bs.workers)->check(CLI::PositiveNumber);
  bs_cmd->add_option("--budget", bs.budget)->check(CLI::PositiveNumber);
  bs_cmd->add_option("--eval-runs", bs.eval_runs)->check(CLI::PositiveNumber);
  bs_cmd->add_option("--seed", bs.seed);
  bs_cmd->add_option("--store", bs.store);
  bs_cmd->add_option("--checkpoint", bs.checkpoint);
  bs_cmd->add_flag("--resume", bs.resume, "Continue from --checkpoint");

  std::string rv_store, rv_addr = "127.0.0.1:8080", rv_tasks;
  auto* rv_cmd = app.add_subcommand("serve-review", "Serve the review API");
  rv_cmd->add_option("--store", rv_store)->required();
  rv_cmd->add_option("--addr", rv_addr, "host:port");
  rv_cmd->add_option("--tasks", rv_tasks);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(run);
    if (*tasks_list) return cmd_tasks_list(tasks_file);
    if (*tasks_export) {
      TaskRegistry::bundled().save(tasks_export_out);
      return 0;
    }
    if (*convert_cmd) return cmd_convert(adapter, conv_in, conv_out);
    if (*sft_cmd) return cmd_export_sft(sft_store, sft_out, sft_designations, sft_window, sft_vanilla);
    if (*aug_cmd) return cmd_augment(aug);
    if (*flt_cmd) return cmd_filter(flt);
    if (*bp_cmd) return cmd_build_pairs(bp_store, bp_corrections, bp_out, bp_tasks, bp_window);
    if (*dpo_cmd) return cmd_dpo(dpo_pairs, dpo_sft, dpo_cfg, dpo_out);
    if (*ev_cmd) return cmd_eval(ev);
    if (*bs_cmd) {
      if (bs.resume && bs.checkpoint.empty()) throw Error(ErrorCode::Precondition, "--resume needs --checkpoint");
      return cmd_bootstrap(bs);
    }
    if (*rv_cmd) return cmd_serve_review(rv_store, rv_addr, rv_tasks);
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
