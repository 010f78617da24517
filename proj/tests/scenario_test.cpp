// Copyright 2026 The ovon-mesh Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include "ovon/scenario.hpp"
#include "test_util.hpp"

namespace ovon {
namespace {

using ovon::testing::source_path;

ScenarioSpec fixture(const std::string& name) {
  return load_scenario(source_path("scenarios/" + name + ".json"));
}

TEST(Scenario, SmartLibraryPasses) {
  auto report = run_scenario(fixture("smart_library"));
  EXPECT_TRUE(report.passed()) << format_report(report) << transcript_to_jsonl(report.transcript);
}

TEST(Scenario, SmartErrandsPasses) {
  auto report = run_scenario(fixture("smart_errands"));
  EXPECT_TRUE(report.passed()) << format_report(report);
}

TEST(Scenario, SmartLibraryIsDeterministic) {
  const auto spec = fixture("smart_library");
  const auto first = transcript_to_jsonl(run_scenario(spec).transcript);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(transcript_to_jsonl(run_scenario(spec).transcript), first);
}

TEST(Scenario, FreezeTimeOverride) {
  auto spec = fixture("smart_library");
  RunOptions o;
  o.freeze_time = "2030-01-01T00:00:00.000Z";
  auto jsonl = transcript_to_jsonl(run_scenario(spec, o).transcript);
  EXPECT_NE(jsonl.find("2030-01-01T00:00:00.000Z"), std::string::npos);
  EXPECT_EQ(jsonl.find("2024-07-13"), std::string::npos);
}

TEST(Scenario, DiagramForSmartLibrary) {
  auto report = run_scenario(fixture("smart_library"));
  const auto uml = export_sequence_diagram(report.transcript);
  EXPECT_EQ(uml.rfind("@startuml\n", 0), 0u);
  EXPECT_NE(uml.find("@enduml\n"), std::string::npos);
  EXPECT_EQ(std::count(uml.begin(), uml.end(), '\n'),
            2 + 4 + [&] {
              long n = 0;
              for (const auto& r : report.transcript) n += static_cast<long>(r.envelope.events.size());
              return n;
            }());
  EXPECT_NE(uml.find("participant \"Lea\" as p0\nparticipant \"Juri\" as p1\n"
                     "participant \"Andres\" as p2\nparticipant \"Kaja\" as p3\n"),
            std::string::npos)
      << uml;
  EXPECT_NE(uml.find("p1 -> p2 : findAssistant\n"), std::string::npos);
  EXPECT_NE(uml.find("p3 -> p1 : publishManifest\n"), std::string::npos);
}

TEST(Scenario, TranscriptJsonlRoundTrip) {
  auto report = run_scenario(fixture("smart_library"));
  auto back = parse_transcript(transcript_to_jsonl(report.transcript));
  ASSERT_EQ(back.size(), report.transcript.size());
  for (size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].seq, report.transcript[i].seq);
    EXPECT_EQ(back[i].from, report.transcript[i].from);
    EXPECT_EQ(back[i].envelope, report.transcript[i].envelope);
  }
}

TEST(Scenario, AgentTranscriptFormatParses) {
  ConversationEnvelope env;
  env.conversation_id = "c";
  env.sender_from = "u";
  env.events = {make_invite("x")};
  Json in = {{"direction", "in"}, {"peer", "u"}, {"agent", "A"}, {"wall_time", "t"}, {"envelope", envelope_to_json(env)}};
  Json out = in;
  out["direction"] = "out";
  auto recs = parse_transcript(in.dump() + "\n\n" + out.dump() + "\n");
  ASSERT_EQ(recs.size(), 2u);
  EXPECT_EQ(recs[0].from, "u");
  EXPECT_EQ(recs[0].to, "A");
  EXPECT_EQ(recs[1].from, "A");
  EXPECT_EQ(recs[1].seq, 2u);
  EXPECT_THROW(parse_transcript("{oops\n"), SyntaxError);
}

Json minimal_scenario() {
  return Json::parse(R"({
    "name": "mini", "user": "Ann", "entry": "Echo",
    "agents": [{"name": "Echo", "endpoint": "https://echo", "backend": "echo"}],
    "turns": [{"actor": "Ann", "say": "hi"}],
    "expectations": []
  })");
}

TEST(Scenario, SetupFailures) {
  auto unknown_actor = minimal_scenario();
  unknown_actor["turns"][0]["actor"] = "Bob";
  EXPECT_THROW(scenario_from_json(unknown_actor, ""), ScenarioSetupFailure);

  auto no_entry = minimal_scenario();
  no_entry["entry"] = "Nobody";
  EXPECT_THROW(scenario_from_json(no_entry, ""), ScenarioSetupFailure);

  auto dup = minimal_scenario();
  dup["agents"].push_back(dup["agents"][0]);
  EXPECT_THROW(scenario_from_json(dup, ""), ScenarioSetupFailure);

  auto bad_ref = minimal_scenario();
  bad_ref["expectations"] = Json::parse(R"([{"kind":"EventOccurs","from":"Ghost","eventType":"bye"}])");
  EXPECT_THROW(scenario_from_json(bad_ref, ""), ScenarioSetupFailure);

  auto bad_kind = minimal_scenario();
  bad_kind["expectations"] = Json::parse(R"([{"kind":"Sometimes"}])");
  EXPECT_THROW(scenario_from_json(bad_kind, ""), ConfigError);

  auto bad_event = minimal_scenario();
  bad_event["expectations"] = Json::parse(R"([{"kind":"EventOccurs","eventType":"shout"}])");
  EXPECT_THROW(scenario_from_json(bad_event, ""), ConfigError);

  EXPECT_THROW(load_scenario("/nonexistent.json"), IoFailure);
}

TEST(Scenario, FailingExpectationsReportLines) {
  auto doc = minimal_scenario();
  doc["expectations"] = Json::parse(R"([
    {"kind":"EventOccurs","from":"Echo","to":"Ann","eventType":"utterance","count":2},
    {"kind":"OrderedBefore","first":{"from":"Echo","eventType":"utterance"},"then":{"from":"Ann","eventType":"utterance"}},
    {"kind":"TextContains","from":"Echo","text":"bye-bye"},
    {"kind":"EventOccurs","from":"Ann","eventType":"invite"}
  ])");
  auto report = run_scenario(scenario_from_json(doc, ""));
  ASSERT_EQ(report.results.size(), 4u);
  EXPECT_FALSE(report.results[0].passed);
  EXPECT_EQ(report.results[0].lines, (std::vector<uint64_t>{2}));
  EXPECT_FALSE(report.results[1].passed);
  EXPECT_FALSE(report.results[2].passed);
  EXPECT_TRUE(report.results[3].passed);
  EXPECT_EQ(report.results[3].lines, (std::vector<uint64_t>{1}));
  EXPECT_FALSE(report.passed());
  auto j = report_to_json(report);
  EXPECT_EQ(j["passed"], false);
  EXPECT_EQ(j["expectations"].size(), 4u);
  EXPECT_NE(format_report(report).find("[FAIL]"), std::string::npos);
}

TranscriptRecord rec(uint64_t seq, const std::string& from, const std::string& to,
                     std::vector<EnvelopeEvent> events) {
  TranscriptRecord r;
  r.seq = seq;
  r.from = from;
  r.to = to;
  r.envelope.conversation_id = "c";
  r.envelope.sender_from = from;
  r.envelope.events = std::move(events);
  return r;
}

EnvelopeEvent said(const std::string& who) {
  return make_utterance(make_dialog_event(who, "text", "t"));
}

Expectation floor_back(int segments) {
  Expectation x;
  x.kind = ExpectationKind::kFloorReturnsTo;
  x.agent = "M";
  x.segments = segments;
  return x;
}

TEST(FloorReturnsTo, AcceptsBracketedSegment) {
  std::vector<TranscriptRecord> t{
      rec(1, "U", "M", {said("U")}),
      rec(2, "M", "D", {make_invite("d"), said("U")}),
      rec(3, "D", "M", {said("D"), make_bye()}),
      rec(4, "M", "U", {said("D"), make_bye(), said("M")}),
  };
  auto r = evaluate_expectations({floor_back(1)}, t, "U");
  EXPECT_TRUE(r[0].passed) << r[0].detail;
  EXPECT_FALSE(evaluate_expectations({floor_back(2)}, t, "U")[0].passed);
}

TEST(FloorReturnsTo, RejectsSilentMediator) {
  std::vector<TranscriptRecord> t{
      rec(1, "M", "D", {make_invite("d")}),
      rec(2, "D", "M", {make_bye()}),
      rec(3, "M", "U", {said("D"), make_bye()}),
  };
  EXPECT_FALSE(evaluate_expectations({floor_back(1)}, t, "U")[0].passed);
}

TEST(FloorReturnsTo, RejectsNestedInviteAndStrayBye) {
  std::vector<TranscriptRecord> nested{
      rec(1, "M", "D", {make_invite("d")}),
      rec(2, "M", "E", {make_invite("e")}),
  };
  EXPECT_FALSE(evaluate_expectations({floor_back(1)}, nested, "U")[0].passed);
  std::vector<TranscriptRecord> stray{rec(1, "D", "M", {make_bye()})};
  EXPECT_FALSE(evaluate_expectations({floor_back(0)}, stray, "U")[0].passed);
  std::vector<TranscriptRecord> open{rec(1, "M", "D", {make_invite("d")})};
  EXPECT_FALSE(evaluate_expectations({floor_back(0)}, open, "U")[0].passed);
}

}  // namespace
}  // namespace ovon
