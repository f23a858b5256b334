#include <filesystem>
#include <sstream>

#include "doctest.h"

#include "../support/testing.hpp"
#include "guiagent/external_adapters.hpp"
#include "guiagent/policies.hpp"
#include "guiagent/sft_export.hpp"
#include "guiagent/sim_env.hpp"
#include "guiagent/trace_io.hpp"
#include "guiagent/trace_store.hpp"

using namespace guiagent;
using nlohmann::json;

namespace {

ErrorCode error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Io;
}

std::vector<Trace> sample_traces(int n, double noise) {
  SimEnv env;
  auto policy = make_policy("scripted:noisy-oracle:" + std::to_string(noise));
  const auto& tasks = env.registry().tasks();
  std::vector<Trace> out;
  for (int i = 0; i < n; ++i) {
    const Task& t = tasks[static_cast<std::size_t>(i) % tasks.size()];
    out.push_back(run_episode(t, env, *policy, {15, 5, static_cast<std::uint64_t>(i)}));
  }
  return out;
}

}  // namespace

TEST_CASE("record round trip is exact") {
  for (Trace t : sample_traces(20, 0.5)) {
    t.steps.at(0).raw = "Thought: quotes \" and \\ and\nnewline\nAction: Wait()";
    t.steps.at(0).thought = "quotes \" and \\ and\nnewline";
    t.trace_id = io::compute_trace_id(t);
    const std::string rec = io::trace_to_record(t);
    const Trace back = io::trace_from_record(rec);
    CHECK(back == t);
    CHECK(io::trace_to_record(back) == rec);
  }
}

TEST_CASE("strict record parsing") {
  const Trace t = sample_traces(1, 0.0).front();
  json j = io::trace_to_json(t);
  j["schema_version"] = io::kTraceSchemaVersion + 1;
  CHECK(error_of([&] { io::trace_from_json(j); }) == ErrorCode::SchemaVersionMismatch);
  j = io::trace_to_json(t);
  j["extra"] = 1;
  CHECK(error_of([&] { io::trace_from_json(j); }) == ErrorCode::CorruptRecord);
  j = io::trace_to_json(t);
  j["steps"][0]["observation_digest"] = "0000000000000000";
  CHECK(error_of([&] { io::trace_from_json(j); }) == ErrorCode::CorruptRecord);
  j = io::trace_to_json(t);
  j["termination"] = "call_user";
  CHECK(error_of([&] { io::trace_from_json(j); }) == ErrorCode::CorruptRecord);
}

TEST_CASE("store save and load") {
  testing::TempDir dir("store");
  TraceStore store(dir.str());
  const auto traces = sample_traces(12, 0.4);
  std::vector<std::string> ids;
  for (const auto& t : traces) ids.push_back(store.save(t));
  for (std::size_t i = 0; i < traces.size(); ++i) {
    CHECK(ids[i] == traces[i].trace_id);
    CHECK(store.load(ids[i]) == traces[i]);
    CHECK(store.load_record(ids[i]) == io::trace_to_record(traces[i]));
  }
  CHECK(error_of([&] { store.load("ffffffffffffffff"); }) == ErrorCode::NotFound);

  const std::string before = store.load_record(ids[0]);
  CHECK(store.save(traces[0]) == ids[0]);
  CHECK(store.load_record(ids[0]) == before);

  Trace tampered = traces[0];
  tampered.instruction += "!";
  CHECK(error_of([&] { store.save(tampered); }) == ErrorCode::CorruptRecord);

  Trace fresh = traces[1];
  fresh.trace_id.clear();
  CHECK(store.save(fresh) == traces[1].trace_id);

  auto listed = store.list_ids();
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  CHECK(listed == ids);
  store.rebuild_index();
  CHECK(std::filesystem::exists(dir.sub("index.json")));
}

TEST_CASE("concurrent saves into one store") {
  testing::TempDir dir("store-par");
  const auto traces = sample_traces(30, 0.5);
  parallel_for(traces.size() * 2, 8, [&](std::size_t i) { TraceStore(dir.str()).save(traces[i % traces.size()]); });
  TraceStore store(dir.str());
  for (const auto& t : traces) CHECK(store.load(t.trace_id) == t);
}

TEST_CASE("mobile adapter examples") {
  const json rec = {{"instruction", "go back"},
                    {"screen", {{"width", 1920}, {"height", 1080}}},
                    {"steps",
                     {{{"verb", "tap"}, {"px", {960, 540}}},
                      {{"verb", "press_back"}},
                      {{"verb", "swipe"}, {"from", {960, 800}}, {"to", {960, 200}}},
                      {{"verb", "type"}, {"text", "hi"}}}}};
  const auto steps = convert_external(rec, mobile_taps_adapter());
  REQUIRE(steps.size() == 4);
  CHECK(steps[0].action == Action::click({0.5, 0.5}));
  CHECK(steps[1].action == Action::nullary(ActionKind::PressBack));
  CHECK(steps[2].action.kind == ActionKind::Scroll);
  CHECK(steps[2].action.direction == ScrollDirection::Down);
  CHECK(steps[3].action == Action::type("hi"));
  for (const auto& s : steps) {
    CHECK(parse_action(serialize_action(s.action), PlatformProfile::mobile()) == s.action);
  }

  json hover = rec;
  hover["steps"] = {{{"verb", "hover"}, {"px", {1, 1}}}};
  CHECK(error_of([&] { convert_external(hover, mobile_taps_adapter()); }) == ErrorCode::UnmappableAction);
  json nodims = rec;
  nodims.erase("screen");
  CHECK(error_of([&] { convert_external(nodims, mobile_taps_adapter()); }) == ErrorCode::MissingScreenDims);
}

TEST_CASE("web adapter resolves element centers") {
  const json rec = {{"instruction", "search"},
                    {"screen", {{"width", 1000}, {"height", 800}}},
                    {"steps",
                     {{{"op", "type"},
                       {"element", 1},
                       {"value", "cats"},
                       {"elements",
                        {{{"tag", "a"}, {"text", "Home"}, {"box_px", {0, 0, 100, 40}}},
                         {{"tag", "input"}, {"text", ""}, {"box_px", {200, 100, 600, 140}}}}}},
                      {{"op", "press"}, {"key", "Enter"}},
                      {{"op", "done"}}}}};
  const Trace t = external_to_trace(rec, web_elements_adapter());
  REQUIRE(t.steps.size() == 4);
  CHECK(t.steps[0].action == Action::click({0.4, 0.15}));
  CHECK(t.steps[1].action == Action::type("cats"));
  CHECK(t.steps[2].action == Action::hotkey("enter"));
  CHECK(t.termination == Termination::Finished);
  CHECK(t.metadata.at("source_schema") == "web_elements");
  CHECK(io::trace_from_record(io::trace_to_record(t)) == t);

  json hover = rec;
  hover["steps"] = {{{"op", "hover"}, {"element", 0}}};
  CHECK(error_of([&] { convert_external(hover, web_elements_adapter()); }) == ErrorCode::UnmappableAction);
  CHECK(error_of([&] { find_adapter("nope"); }) == ErrorCode::NotFound);
}

TEST_CASE("sft export masks") {
  const Trace t = sample_traces(1, 0.0).front();
  REQUIRE(t.steps.size() >= 3);
  auto all = export_sft({t}, {});
  CHECK(all.size() == t.steps.size());
  for (const auto& s : all) CHECK(s.loss_mask);

  const std::vector<StepDesignation> ds = {{t.trace_id, 1, StepRole::Erroneous}, {t.trace_id, 2, StepRole::Corrected}};
  auto masked = export_sft({t}, ds);
  CHECK(masked[0].loss_mask);
  CHECK_FALSE(masked[1].loss_mask);
  CHECK(masked[2].loss_mask);

  CHECK(error_of([&] { export_sft({t}, {{t.trace_id, 99, StepRole::Corrected}}); }) == ErrorCode::DanglingCorrection);
  CHECK(error_of([&] { export_sft({t}, {{"0123", 0, StepRole::Corrected}}); }) == ErrorCode::DanglingCorrection);

  SftConfig vanilla;
  vanilla.include_vanilla = true;
  auto both = export_sft({t}, {}, vanilla);
  CHECK(both.size() > all.size());

  std::istringstream in("{\"trace_id\":\"" + t.trace_id + "\",\"step_index\":1,\"role\":\"erroneous\"}\n\n");
  auto read = read_designations(in);
  REQUIRE(read.size() == 1);
  CHECK(read[0].role == StepRole::Erroneous);

  std::ostringstream out;
  write_sft_jsonl(out, masked);
  const std::string text = out.str();
  CHECK(std::count(text.begin(), text.end(), '\n') == static_cast<long>(masked.size()));
}
