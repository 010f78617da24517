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

namespace ovon::fsm {

namespace {

template <typename State>
StepResult<State> move(State next, FsmAction action = FsmAction::kNone) {
  return StepResult<State>{next, action, std::nullopt};
}

template <typename State>
StepResult<State> undefined(State s, const FsmInput& in) {
  return StepResult<State>{
      s, FsmAction::kNone,
      ProtocolWarning{"no transition from " + std::string(to_string(s)) + " on " + to_string(in)}};
}

}  // namespace

std::string_view to_string(ServingState s) {
  switch (s) {
    case ServingState::kIdle: return "Idle";
    case ServingState::kReady: return "Ready";
    case ServingState::kSearchingForResponse: return "SearchingForResponse";
    case ServingState::kSendingResponse: return "SendingResponse";
  }
  return "?";
}

std::string_view to_string(DemandingState s) {
  switch (s) {
    case DemandingState::kIdle: return "Idle";
    case DemandingState::kReady: return "Ready";
    case DemandingState::kConsumingResponse: return "ConsumingResponse";
  }
  return "?";
}

std::string_view to_string(DiscoveryState s) {
  switch (s) {
    case DiscoveryState::kCapabilitySearch: return "CapabilitySearch";
    case DiscoveryState::kWaitingForManifest: return "WaitingForManifest";
    case DiscoveryState::kAssistantSearch: return "AssistantSearch";
    case DiscoveryState::kWaitingForAssistantList: return "WaitingForAssistantList";
    case DiscoveryState::kReady: return "Ready";
  }
  return "?";
}

std::string_view to_string(InputKind k) {
  switch (k) {
    case InputKind::kReceivedInvite: return "ReceivedInvite";
    case InputKind::kReceivedUtterance: return "ReceivedUtterance";
    case InputKind::kReceivedWhisper: return "ReceivedWhisper";
    case InputKind::kReceivedBye: return "ReceivedBye";
    case InputKind::kLookupSucceeded: return "LookupSucceeded";
    case InputKind::kLookupFailed: return "LookupFailed";
    case InputKind::kInactivityTimeout: return "InactivityTimeout";
    case InputKind::kSentInvite: return "SentInvite";
    case InputKind::kSentUtteranceOrWhisper: return "SentUtteranceOrWhisper";
    case InputKind::kReceivedResponse: return "ReceivedResponse";
    case InputKind::kSentRequestManifest: return "SentRequestManifest";
    case InputKind::kReceivedPublishManifest: return "ReceivedPublishManifest";
    case InputKind::kSentFindAssistant: return "SentFindAssistant";
    case InputKind::kReceivedProposeAssistant: return "ReceivedProposeAssistant";
    case InputKind::kResendTick: return "ResendTick";
  }
  return "?";
}

std::string to_string(const FsmInput& in) {
  std::string out(to_string(in.kind));
  if (in.kind == InputKind::kReceivedProposeAssistant) {
    out += "(" + std::string(ovon::to_string(in.referral)) + ")";
  }
  return out;
}

std::string_view to_string(FsmAction a) {
  switch (a) {
    case FsmAction::kNone: return "None";
    case FsmAction::kEmitResponseEnvelope: return "EmitResponseEnvelope";
    case FsmAction::kEmitBye: return "EmitBye";
    case FsmAction::kStartLookup: return "StartLookup";
    case FsmAction::kResendRequestManifest: return "ResendRequestManifest";
    case FsmAction::kResendFindAssistant: return "ResendFindAssistant";
    case FsmAction::kQuerySuggestedAgents: return "QuerySuggestedAgents";
  }
  return "?";
}

StepResult<ServingState> serving_step(ServingState s, const FsmInput& in) {
  using S = ServingState;
  using I = InputKind;
  switch (s) {
    case S::kIdle:
      if (in.kind == I::kReceivedInvite) return move(S::kReady);
      break;
    case S::kReady:
      if (in.kind == I::kReceivedUtterance || in.kind == I::kReceivedWhisper) {
        return move(S::kSearchingForResponse, FsmAction::kStartLookup);
      }
      if (in.kind == I::kInactivityTimeout || in.kind == I::kReceivedBye) return move(S::kIdle);
      break;
    case S::kSearchingForResponse:
      if (in.kind == I::kLookupSucceeded) {
        return move(S::kSendingResponse, FsmAction::kEmitResponseEnvelope);
      }
      if (in.kind == I::kLookupFailed) return move(S::kIdle, FsmAction::kEmitBye);
      break;
    case S::kSendingResponse:
      if (in.kind == I::kSentUtteranceOrWhisper) return move(S::kReady);
      break;
  }
  return undefined(s, in);
}

StepResult<DemandingState> demanding_step(DemandingState s, const FsmInput& in) {
  using S = DemandingState;
  using I = InputKind;
  switch (s) {
    case S::kIdle:
      if (in.kind == I::kSentInvite) return move(S::kReady);
      break;
    case S::kReady:
      // Ready may keep sending utterances/whispers before any response.
      if (in.kind == I::kSentUtteranceOrWhisper) return move(S::kReady);
      if (in.kind == I::kReceivedResponse) return move(S::kConsumingResponse);
      break;
    case S::kConsumingResponse:
      if (in.kind == I::kSentUtteranceOrWhisper) return move(S::kReady);
      if (in.kind == I::kReceivedBye) return move(S::kIdle);
      break;
  }
  return undefined(s, in);
}

StepResult<DiscoveryState> discovery_step(DiscoveryState s, const FsmInput& in) {
  using S = DiscoveryState;
  using I = InputKind;
  switch (s) {
    case S::kCapabilitySearch:
      if (in.kind == I::kSentRequestManifest) return move(S::kWaitingForManifest);
      break;
    case S::kWaitingForManifest:
      if (in.kind == I::kResendTick) {
        return move(S::kWaitingForManifest, FsmAction::kResendRequestManifest);
      }
      if (in.kind == I::kReceivedPublishManifest) return move(S::kReady);
      break;
    case S::kAssistantSearch:
      if (in.kind == I::kSentFindAssistant) return move(S::kWaitingForAssistantList);
      break;
    case S::kWaitingForAssistantList:
      if (in.kind == I::kResendTick) {
        return move(S::kWaitingForAssistantList, FsmAction::kResendFindAssistant);
      }
      if (in.kind == I::kReceivedProposeAssistant) {
        if (in.referral == ServicingMode::kIndirect) {
          return move(S::kAssistantSearch, FsmAction::kQuerySuggestedAgents);
        }
        return move(S::kReady);
      }
      break;
    case S::kReady:
      if (in.kind == I::kResendTick) return move(S::kReady);
      break;
  }
  return undefined(s, in);
}

std::string trace_line(std::string_view conversation_id, std::string_view state,
                       const FsmInput& in, std::string_view next, FsmAction action) {
  std::string line(conversation_id);
  line += '\t';
  line += state;
  line += '\t';
  line += to_string(in);
  line += '\t';
  line += next;
  line += '\t';
  line += to_string(action);
  return line;
}

ServingFold fold_serving(ServingState s, const ConversationEnvelope& env, const TraceSink& trace) {
  ServingFold out{s, {}, {}, std::nullopt};

  auto apply = [&](const FsmInput& in) {
    auto r = serving_step(out.state, in);
    if (trace) trace(trace_line(env.conversation_id, to_string(out.state), in, to_string(r.state),
                                r.action));
    out.state = r.state;
    if (r.action != FsmAction::kNone) out.actions.push_back(r.action);
    if (r.warning) out.warnings.push_back(*r.warning);
  };

  for (const auto& e : env.events) {
    switch (e.event_type) {
      case EventType::kInvite:
        apply(input(InputKind::kReceivedInvite));
        break;
      case EventType::kBye:
        apply(input(InputKind::kReceivedBye));
        break;
      case EventType::kUtterance:
      case EventType::kWhisper: {
        const DialogEvent* d = e.dialog();
        std::string text = d ? extract_text(*d) : std::string();
        const bool whisper = e.event_type == EventType::kWhisper;
        if (out.lookup) {
          auto& l = *out.lookup;
          if (!whisper && l.trigger == EventType::kWhisper) {
            // A lone whisper opened the lookup; the utterance becomes the
            // query and the whisper moves to context.
            std::string prior = std::move(l.current);
            l.current = std::move(text);
            l.speaker_id = d ? d->speaker_id : l.speaker_id;
            l.trigger = EventType::kUtterance;
            l.whisper_context = l.whisper_context ? prior + " " + *l.whisper_context : prior;
          } else {
            l.whisper_context = l.whisper_context ? *l.whisper_context + " " + text : text;
          }
          break;
        }
        const auto before = out.state;
        apply(input(whisper ? InputKind::kReceivedWhisper : InputKind::kReceivedUtterance));
        if (before == ServingState::kReady && out.state == ServingState::kSearchingForResponse) {
          out.lookup = LookupRequest{d ? d->speaker_id : std::string(), std::move(text),
                                     std::nullopt, e.event_type};
        }
        break;
      }
      default:
        break;
    }
  }
  return out;
}

DemandingFold fold_demanding(DemandingState s, const ConversationEnvelope& env,
                             const TraceSink& trace) {
  DemandingFold out{s, {}, {}, false};
  auto apply = [&](const FsmInput& in) {
    auto r = demanding_step(out.state, in);
    if (trace) trace(trace_line(env.conversation_id, to_string(out.state), in, to_string(r.state),
                                r.action));
    out.state = r.state;
    if (r.action != FsmAction::kNone) out.actions.push_back(r.action);
    if (r.warning) out.warnings.push_back(*r.warning);
  };
  bool responded = false;
  for (const auto& e : env.events) {
    const bool conversational = e.event_type == EventType::kUtterance ||
                                e.event_type == EventType::kWhisper ||
                                e.event_type == EventType::kBye;
    if (conversational && !responded) {
      responded = true;
      apply(input(InputKind::kReceivedResponse));
    }
    if (e.event_type == EventType::kBye) {
      out.received_bye = true;
      apply(input(InputKind::kReceivedBye));
    }
  }
  return out;
}

}  // namespace ovon::fsm
