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

#include "ovon/fsm.hpp"

#include <gtest/gtest.h>

#include <map>
#include <random>
#include <tuple>

#include "test_util.hpp"

namespace ovon::fsm {
namespace {

using I = InputKind;

std::vector<FsmInput> all_inputs() {
  std::vector<FsmInput> out;
  for (auto k : kAllInputKinds) {
    if (k == I::kReceivedProposeAssistant) {
      out.push_back(proposal(ServicingMode::kDirect));
      out.push_back(proposal(ServicingMode::kIndirect));
    } else {
      out.push_back(input(k));
    }
  }
  return out;
}

TEST(ServingStep, IdleInviteGoesReady) {
  auto r = serving_step(ServingState::kIdle, input(I::kReceivedInvite));
  EXPECT_EQ(r.state, ServingState::kReady);
  EXPECT_EQ(r.action, FsmAction::kNone);
  EXPECT_FALSE(r.warning);
}

TEST(ServingStep, LookupFailureEndsWithBye) {
  auto r = serving_step(ServingState::kSearchingForResponse, input(I::kLookupFailed));
  EXPECT_EQ(r.state, ServingState::kIdle);
  EXPECT_EQ(r.action, FsmAction::kEmitBye);
}

TEST(ServingStep, UtteranceWhileIdleWarns) {
  auto r = serving_step(ServingState::kIdle, input(I::kReceivedUtterance));
  EXPECT_EQ(r.state, ServingState::kIdle);
  EXPECT_EQ(r.action, FsmAction::kNone);
  ASSERT_TRUE(r.warning);
  EXPECT_NE(r.warning->message.find("Idle"), std::string::npos);
}

TEST(ServingStep, LoneWhisperStartsLookup) {
  auto r = serving_step(ServingState::kReady, input(I::kReceivedWhisper));
  EXPECT_EQ(r.state, ServingState::kSearchingForResponse);
  EXPECT_EQ(r.action, FsmAction::kStartLookup);
}

TEST(ServingStep, SuccessfulExchangeEmitsOneResponse) {
  ServingState s = ServingState::kIdle;
  int responses = 0;
  for (auto k : {I::kReceivedInvite, I::kReceivedUtterance, I::kLookupSucceeded}) {
    auto r = serving_step(s, input(k));
    s = r.state;
    if (r.action == FsmAction::kEmitResponseEnvelope) ++responses;
  }
  EXPECT_EQ(s, ServingState::kSendingResponse);
  EXPECT_EQ(responses, 1);
  EXPECT_EQ(serving_step(s, input(I::kSentUtteranceOrWhisper)).state, ServingState::kReady);
}

TEST(ServingStep, EveryStateReachesIdleWithinTwoInputs) {
  const ServingState states[] = {ServingState::kIdle, ServingState::kReady,
                                 ServingState::kSearchingForResponse,
                                 ServingState::kSendingResponse};
  for (auto start : states) {
    bool reached = start == ServingState::kIdle;
    for (const auto& a : all_inputs()) {
      auto one = serving_step(start, a);
      if (one.state == ServingState::kIdle) reached = true;
      for (const auto& b : all_inputs()) {
        if (serving_step(one.state, b).state == ServingState::kIdle) reached = true;
      }
    }
    EXPECT_TRUE(reached) << to_string(start);
  }
}

TEST(DemandingStep, DefinedTransitions) {
  EXPECT_EQ(demanding_step(DemandingState::kIdle, input(I::kSentInvite)).state,
            DemandingState::kReady);
  auto bye = demanding_step(DemandingState::kConsumingResponse, input(I::kReceivedBye));
  EXPECT_EQ(bye.state, DemandingState::kIdle);
  EXPECT_EQ(bye.action, FsmAction::kNone);
  EXPECT_FALSE(bye.warning);
  EXPECT_EQ(demanding_step(DemandingState::kReady, input(I::kReceivedResponse)).state,
            DemandingState::kConsumingResponse);
  EXPECT_EQ(demanding_step(DemandingState::kConsumingResponse, input(I::kSentUtteranceOrWhisper))
                .state,
            DemandingState::kReady);
}

TEST(DemandingStep, ByeWhileReadyWarns) {
  auto r = demanding_step(DemandingState::kReady, input(I::kReceivedBye));
  EXPECT_EQ(r.state, DemandingState::kReady);
  EXPECT_EQ(r.action, FsmAction::kNone);
  EXPECT_TRUE(r.warning);
}

TEST(DiscoveryStep, IndirectReferralReturnsToSearch) {
  auto r = discovery_step(DiscoveryState::kWaitingForAssistantList,
                          proposal(ServicingMode::kIndirect));
  EXPECT_EQ(r.state, DiscoveryState::kAssistantSearch);
  EXPECT_EQ(r.action, FsmAction::kQuerySuggestedAgents);
  auto direct = discovery_step(DiscoveryState::kWaitingForAssistantList,
                               proposal(ServicingMode::kDirect));
  EXPECT_EQ(direct.state, DiscoveryState::kReady);
}

TEST(DiscoveryStep, ManifestRequestWaits) {
  auto r = discovery_step(DiscoveryState::kCapabilitySearch, input(I::kSentRequestManifest));
  EXPECT_EQ(r.state, DiscoveryState::kWaitingForManifest);
  EXPECT_EQ(r.action, FsmAction::kNone);
  auto tick = discovery_step(DiscoveryState::kWaitingForManifest, input(I::kResendTick));
  EXPECT_EQ(tick.state, DiscoveryState::kWaitingForManifest);
  EXPECT_EQ(tick.action, FsmAction::kResendRequestManifest);
}

TEST(DiscoveryStep, ReadyAbsorbsTicks) {
  auto r = discovery_step(DiscoveryState::kReady, input(I::kResendTick));
  EXPECT_EQ(r.state, DiscoveryState::kReady);
  EXPECT_EQ(r.action, FsmAction::kNone);
  EXPECT_FALSE(r.warning);
}

TEST(DiscoveryStep, WaitingStatesOnlyReachableFromTheirSearch) {
  const DiscoveryState states[] = {
      DiscoveryState::kCapabilitySearch, DiscoveryState::kWaitingForManifest,
      DiscoveryState::kAssistantSearch, DiscoveryState::kWaitingForAssistantList,
      DiscoveryState::kReady};
  for (auto s : states) {
    for (const auto& in : all_inputs()) {
      auto r = discovery_step(s, in);
      if (r.state == DiscoveryState::kWaitingForManifest && s != r.state) {
        EXPECT_EQ(s, DiscoveryState::kCapabilitySearch);
      }
      if (r.state == DiscoveryState::kWaitingForAssistantList && s != r.state) {
        EXPECT_EQ(s, DiscoveryState::kAssistantSearch);
      }
    }
  }
}

TEST(StepFunctions, DeterministicOverRandomSequences) {
  std::mt19937 rng(7);
  const auto inputs = all_inputs();
  std::uniform_int_distribution<size_t> pick(0, inputs.size() - 1);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<FsmInput> seq;
    for (int i = 0; i < 20; ++i) seq.push_back(inputs[pick(rng)]);
    auto run = [&] {
      std::vector<std::tuple<ServingState, DemandingState, DiscoveryState>> trace;
      ServingState a = ServingState::kIdle;
      DemandingState b = DemandingState::kIdle;
      DiscoveryState c = DiscoveryState::kAssistantSearch;
      for (const auto& in : seq) {
        a = serving_step(a, in).state;
        b = demanding_step(b, in).state;
        c = discovery_step(c, in).state;
        trace.emplace_back(a, b, c);
      }
      return trace;
    };
    EXPECT_EQ(run(), run());
  }
}

TEST(FoldServing, Listing2FromIdleStartsOneLookup) {
  auto env = parse_envelope(testing::listing(2));
  std::vector<std::string> lines;
  auto fold = fold_serving(ServingState::kIdle, env,
                           [&](const std::string& l) { lines.push_back(l); });
  EXPECT_EQ(fold.state, ServingState::kSearchingForResponse);
  EXPECT_EQ(fold.actions, std::vector<FsmAction>{FsmAction::kStartLookup});
  EXPECT_TRUE(fold.warnings.empty());
  ASSERT_TRUE(fold.lookup);
  EXPECT_EQ(fold.lookup->current, "Can I have some info about Harry Potter please?");
  EXPECT_EQ(fold.lookup->whisper_context,
            "In particular can I get some info about harry potter and the philosopher's stone ");
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0], "conv_1699812834794\tIdle\tReceivedInvite\tReady\tNone");
  EXPECT_EQ(lines[1],
            "conv_1699812834794\tReady\tReceivedUtterance\tSearchingForResponse\tStartLookup");
}

TEST(FoldServing, ByeOnlyEnvelopeFromReady) {
  ConversationEnvelope env;
  env.conversation_id = "c";
  env.sender_from = "u";
  env.events.push_back(make_bye());
  auto fold = fold_serving(ServingState::kReady, env);
  EXPECT_EQ(fold.state, ServingState::kIdle);
  EXPECT_TRUE(fold.actions.empty());
  EXPECT_FALSE(fold.lookup);
}

TEST(FoldServing, WhisperThenUtteranceSwapsQuery) {
  ConversationEnvelope env;
  env.conversation_id = "c";
  env.sender_from = "u";
  env.events.push_back(make_whisper(make_dialog_event("u", "context first")));
  env.events.push_back(make_utterance(make_dialog_event("u", "the question")));
  auto fold = fold_serving(ServingState::kReady, env);
  ASSERT_TRUE(fold.lookup);
  EXPECT_EQ(fold.lookup->current, "the question");
  EXPECT_EQ(fold.lookup->whisper_context, "context first");
  EXPECT_EQ(fold.actions.size(), 1u);
}

TEST(FoldServing, UtteranceWithoutInviteWarns) {
  ConversationEnvelope env;
  env.conversation_id = "c";
  env.sender_from = "u";
  env.events.push_back(make_utterance(make_dialog_event("u", "hello")));
  auto fold = fold_serving(ServingState::kIdle, env);
  EXPECT_EQ(fold.state, ServingState::kIdle);
  EXPECT_EQ(fold.warnings.size(), 1u);
  EXPECT_FALSE(fold.lookup);
}

TEST(FoldDemanding, ResponseThenBye) {
  ConversationEnvelope env;
  env.conversation_id = "c";
  env.sender_from = "pat";
  env.events.push_back(make_utterance(make_dialog_event("pat", "Have a blooming day!")));
  env.events.push_back(make_bye());
  auto fold = fold_demanding(DemandingState::kReady, env);
  EXPECT_EQ(fold.state, DemandingState::kIdle);
  EXPECT_TRUE(fold.received_bye);
  EXPECT_TRUE(fold.warnings.empty());

  ConversationEnvelope bye_only = env;
  bye_only.events.erase(bye_only.events.begin());
  EXPECT_EQ(fold_demanding(DemandingState::kReady, bye_only).state, DemandingState::kIdle);
}

}  // namespace
}  // namespace ovon::fsm
