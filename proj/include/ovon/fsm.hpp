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

#pragma once

// Protocol state machines for serving, demanding and discovering agents.
//
// Step functions are pure and total. Pairs outside a machine's transition
// table leave the state unchanged, yield FsmAction::kNone and carry a
// ProtocolWarning in the result.

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ovon/envelope.hpp"

namespace ovon::fsm {

enum class ServingState { kIdle, kReady, kSearchingForResponse, kSendingResponse };
enum class DemandingState { kIdle, kReady, kConsumingResponse };
enum class DiscoveryState {
  kCapabilitySearch,
  kWaitingForManifest,
  kAssistantSearch,
  kWaitingForAssistantList,
  kReady,
};

enum class InputKind {
  kReceivedInvite,
  kReceivedUtterance,
  kReceivedWhisper,
  kReceivedBye,
  kLookupSucceeded,
  kLookupFailed,
  kInactivityTimeout,
  kSentInvite,
  kSentUtteranceOrWhisper,
  kReceivedResponse,
  kSentRequestManifest,
  kReceivedPublishManifest,
  kSentFindAssistant,
  kReceivedProposeAssistant,
  kResendTick,
};

inline constexpr InputKind kAllInputKinds[] = {
    InputKind::kReceivedInvite,        InputKind::kReceivedUtterance,
    InputKind::kReceivedWhisper,       InputKind::kReceivedBye,
    InputKind::kLookupSucceeded,       InputKind::kLookupFailed,
    InputKind::kInactivityTimeout,     InputKind::kSentInvite,
    InputKind::kSentUtteranceOrWhisper, InputKind::kReceivedResponse,
    InputKind::kSentRequestManifest,   InputKind::kReceivedPublishManifest,
    InputKind::kSentFindAssistant,     InputKind::kReceivedProposeAssistant,
    InputKind::kResendTick,
};

struct FsmInput {
  InputKind kind;
  // Only meaningful for kReceivedProposeAssistant.
  ServicingMode referral = ServicingMode::kDirect;

  bool operator==(const FsmInput&) const = default;
};

inline FsmInput input(InputKind kind) { return FsmInput{kind, ServicingMode::kDirect}; }
inline FsmInput proposal(ServicingMode mode) {
  return FsmInput{InputKind::kReceivedProposeAssistant, mode};
}

enum class FsmAction {
  kNone,
  kEmitResponseEnvelope,
  kEmitBye,
  kStartLookup,
  kResendRequestManifest,
  kResendFindAssistant,
  kQuerySuggestedAgents,
};

struct ProtocolWarning {
  std::string message;
  bool operator==(const ProtocolWarning&) const = default;
};

template <typename State>
struct StepResult {
  State state;
  FsmAction action = FsmAction::kNone;
  std::optional<ProtocolWarning> warning;

  bool operator==(const StepResult&) const = default;
};

std::string_view to_string(ServingState s);
std::string_view to_string(DemandingState s);
std::string_view to_string(DiscoveryState s);
std::string_view to_string(InputKind k);
std::string to_string(const FsmInput& in);
std::string_view to_string(FsmAction a);

StepResult<ServingState> serving_step(ServingState s, const FsmInput& in);
StepResult<DemandingState> demanding_step(DemandingState s, const FsmInput& in);
StepResult<DiscoveryState> discovery_step(DiscoveryState s, const FsmInput& in);

// One line per step: conversation_id, state, input, next state, action,
// tab-separated.
using TraceSink = std::function<void(const std::string& line)>;

std::string trace_line(std::string_view conversation_id, std::string_view state,
                       const FsmInput& in, std::string_view next, FsmAction action);

// What a serving agent should look up after folding an inbound envelope.
struct LookupRequest {
  std::string speaker_id;
  std::string current;                // the utterance (or lone whisper) text
  std::optional<std::string> whisper_context;
  EventType trigger = EventType::kUtterance;
};

struct ServingFold {
  ServingState state;
  std::vector<FsmAction> actions;  // kNone filtered out
  std::vector<ProtocolWarning> warnings;
  std::optional<LookupRequest> lookup;
};

// Maps each event to a serving input in wire order. Once an envelope has
// started a lookup, later utterance/whisper events in that same envelope are
// folded into the lookup context instead of stepping the machine again.
// Discovery events are not serving inputs and are skipped.
ServingFold fold_serving(ServingState s, const ConversationEnvelope& env,
                         const TraceSink& trace = {});

struct DemandingFold {
  DemandingState state;
  std::vector<FsmAction> actions;
  std::vector<ProtocolWarning> warnings;
  bool received_bye = false;
};

// Folds an inbound response: the first utterance, whisper or bye makes the
// envelope one kReceivedResponse; each bye then steps kReceivedBye.
DemandingFold fold_demanding(DemandingState s, const ConversationEnvelope& env,
                             const TraceSink& trace = {});

}  // namespace ovon::fsm
