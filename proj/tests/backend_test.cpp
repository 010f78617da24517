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

#include "ovon/backend.hpp"
#include "ovon/errors.hpp"
#include "test_util.hpp"

namespace ovon {
namespace {

BackendReply expect_reply(const BackendResult& r) {
  const auto* reply = std::get_if<BackendReply>(&r);
  if (!reply) {
    ADD_FAILURE() << "failure: " << std::get<BackendFailure>(r).reason;
    return {};
  }
  return *reply;
}

TEST(EchoBackend, RepeatsInput) {
  EchoBackend echo;
  EXPECT_EQ(expect_reply(run_backend(echo, {}, "hello there")).text, "hello there");
}

TEST(EchoBackend, EmptyInputFails) {
  EchoBackend echo;
  auto r = run_backend(echo, {}, "");
  ASSERT_TRUE(std::holds_alternative<BackendFailure>(r));
}

TEST(ScriptedBackend, CursorFollowsOwnTurns) {
  ScriptedBackend b(scripted_spec_from_json(Json::parse(
                        R"({"turns":[{"reply":"one {speaker}"},{"reply":"two","then":"bye"}]})")),
                    "Bot");
  std::vector<HistoryEntry> h;
  EXPECT_EQ(expect_reply(run_backend(b, h, "hi", std::nullopt, "Ann")).text, "one Ann");
  h.push_back({"Ann", "hi"});
  h.push_back({"Bot", "one Ann"});
  auto second = expect_reply(run_backend(b, h, "again"));
  EXPECT_EQ(second.text, "two");
  EXPECT_TRUE(second.end_conversation);
  h.push_back({"Bot", "two"});
  auto third = run_backend(b, h, "more");
  ASSERT_TRUE(std::holds_alternative<BackendFailure>(third));
  EXPECT_EQ(std::get<BackendFailure>(third).reason, "script exhausted");
}

TEST(ScriptedBackend, ExpectMismatchFails) {
  ScriptedBackend b(scripted_spec_from_json(Json::parse(
                        R"({"turns":[{"expect":"Flowers","reply":"ok"}]})")),
                    "Bot");
  EXPECT_EQ(expect_reply(run_backend(b, {}, "order FLOWERS")).text, "ok");
  EXPECT_TRUE(std::holds_alternative<BackendFailure>(run_backend(b, {}, "pizza")));
}

TEST(ScriptedBackend, DelegateDirectiveCarried) {
  ScriptedBackend b(scripted_spec_from_json(Json::parse(
                        R"({"turns":[{"reply":"hold on","delegate":"florist"}]})")),
                    "Bot");
  auto r = expect_reply(run_backend(b, {}, "flowers please"));
  ASSERT_TRUE(r.delegate.has_value());
  EXPECT_EQ(*r.delegate, "florist");
}

TEST(ScriptedBackend, RejectsTurnWithoutReplyOrBye) {
  EXPECT_THROW(scripted_spec_from_json(Json::parse(R"({"turns":[{"expect":"x"}]})")), ConfigError);
  EXPECT_THROW(scripted_spec_from_json(Json::parse(R"({"turns":[{"reply":"x","then":"leave"}]})")),
               ConfigError);
  EXPECT_THROW(scripted_spec_from_json(Json::parse(R"({})")), ConfigError);
}

TEST(RuleBackend, PostalPriceRule) {
  auto b = make_backend("rules:scenarios/scripts/andrew_rules.json",
                        ovon::testing::source_path(""), "Andrew");
  std::vector<HistoryEntry> h{{"Emmett", "How much does it cost to mail a 2 LB package to California?"},
                              {"Andrew", "Hi Emmett! I'm Andrew"}};
  auto r = expect_reply(
      run_backend(*b, h, "How much does a 2 LB package going to California cost?", std::nullopt, "Emmett"));
  EXPECT_NE(r.text.find("Priority Mail starts around $8.70"), std::string::npos);
  EXPECT_FALSE(r.end_conversation);
}

TEST(RuleBackend, FirstTurnGreetsThenGoodbyeEnds) {
  auto b = make_backend("rules:scenarios/scripts/andrew_rules.json",
                        ovon::testing::source_path(""), "Andrew");
  auto first = expect_reply(run_backend(*b, {}, "How much does it cost?", std::nullopt, "Emmett"));
  EXPECT_EQ(first.text.rfind("Hi Emmett! I'm Andrew", 0), 0u);
  std::vector<HistoryEntry> h{{"Emmett", "x"}, {"Andrew", first.text}};
  auto bye = expect_reply(run_backend(*b, h, "No that's good Thanks. Goodbye.", std::nullopt, "Emmett"));
  EXPECT_EQ(bye.text, "Goodbye, Emmett.");
  EXPECT_TRUE(bye.end_conversation);
}

TEST(RuleBackend, FallbackAndNoMatch) {
  RuleBackend with(rule_set_from_json(Json::parse(
                       R"({"rules":[{"anyOf":["tea"],"reply":"tea!"}],"fallback":"pardon?"})")),
                   "B");
  EXPECT_EQ(expect_reply(run_backend(with, {}, "coffee")).text, "pardon?");
  EXPECT_EQ(expect_reply(run_backend(with, {}, "Tea time")).text, "tea!");
  RuleBackend without(rule_set_from_json(Json::parse(R"({"rules":[{"anyOf":["tea"],"reply":"t"}]})")), "B");
  EXPECT_TRUE(std::holds_alternative<BackendFailure>(run_backend(without, {}, "coffee")));
}

TEST(RuleBackend, WholeWordsOnly) {
  RuleBackend b(rule_set_from_json(Json::parse(R"({"rules":[{"allOf":["mail"],"reply":"m"}]})")), "B");
  EXPECT_TRUE(std::holds_alternative<BackendFailure>(run_backend(b, {}, "email me")));
  EXPECT_EQ(expect_reply(run_backend(b, {}, "MAIL it")).text, "m");
}

TEST(MakeBackend, SpecForms) {
  EXPECT_NE(make_backend("echo", "", "x"), nullptr);
  EXPECT_NE(make_backend(Json(), "", "x"), nullptr);
  EXPECT_NE(make_backend(Json::parse(R"({"scripted":{"turns":[{"reply":"a"}]}})"), "", "x"), nullptr);
  EXPECT_NE(make_backend(Json::parse(R"({"rules":{"rules":[]}})"), "", "x"), nullptr);
  EXPECT_THROW(make_backend("llm", "", "x"), ConfigError);
  EXPECT_THROW(make_backend("scripted:/nonexistent/file.json", "", "x"), ConfigError);
  EXPECT_THROW(make_backend(Json(3), "", "x"), ConfigError);
}

TEST(ApplyTemplate, ReplacesEveryOccurrence) {
  EXPECT_EQ(apply_template("{speaker}, hi {speaker}", "Lea"), "Lea, hi Lea");
  EXPECT_EQ(apply_template("no marker", "Lea"), "no marker");
}

}  // namespace
}  // namespace ovon
