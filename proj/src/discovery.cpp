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

#include "ovon/discovery.hpp"

#include <algorithm>
#include <set>
#include <thread>

namespace ovon {

namespace {

ConversationEnvelope request_envelope(const std::string& from, const std::string& to,
                                      const std::string& conv) {
  ConversationEnvelope env;
  env.conversation_id = conv;
  env.sender_from = from;
  env.sender_to = to;
  return env;
}

bool carries(const ConversationEnvelope& env, EventType type) {
  return std::any_of(env.events.begin(), env.events.end(),
                     [&](const EnvelopeEvent& e) { return e.event_type == type; });
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : " -> ") + p;
  return out;
}

}  // namespace

DiscoveryClient::DiscoveryClient(Transport& transport, std::string self_endpoint,
                                 DiscoveryOptions options, TimestampFn now, fsm::TraceSink trace,
                                 SleepFn sleep)
    : transport_(transport),
      self_(std::move(self_endpoint)),
      options_(options),
      now_(std::move(now)),
      trace_(std::move(trace)),
      sleep_(sleep ? std::move(sleep) : SleepFn([](Millis d) { std::this_thread::sleep_for(d); })) {}

void DiscoveryClient::step(fsm::DiscoveryState& state, const fsm::FsmInput& in,
                           const std::string& conv) {
  auto r = fsm::discovery_step(state, in);
  if (trace_) trace_(fsm::trace_line(conv, fsm::to_string(state), in, fsm::to_string(r.state), r.action));
  state = r.state;
}

ConversationEnvelope DiscoveryClient::exchange(const std::string& url,
                                               const ConversationEnvelope& request,
                                               EventType wanted, fsm::DiscoveryState& state) {
  std::string last_error;
  for (int attempt = 0; attempt <= options_.max_resends; ++attempt) {
    if (attempt > 0) {
      sleep_(options_.resend_period);
      step(state, fsm::input(fsm::InputKind::kResendTick), request.conversation_id);
    }
    ConversationEnvelope reply;
    try {
      reply = transport_.send(url, request, options_.request_timeout);
    } catch (const TransportError& e) {
      last_error = e.what();
      continue;
    }
    if (carries(reply, wanted)) return reply;
    // An answer, just not the one asked for; resending will not change it.
    std::string why = url + " did not answer with " + std::string(to_string(wanted));
    if (reply.response_code) why += " (" + std::to_string(reply.response_code->code) + ")";
    throw DiscoveryFailed(why);
  }
  throw DiscoveryFailed("no answer after " + std::to_string(options_.max_resends) +
                        " resends: " + last_error);
}

AssistantManifest DiscoveryClient::request_manifest(const std::string& url,
                                                    const std::string& conversation_id) {
  auto env = request_envelope(self_, url, conversation_id);
  env.events.push_back(build_event(EventType::kRequestManifest, EmptyPayload{}, url, now_));

  auto state = fsm::DiscoveryState::kCapabilitySearch;
  step(state, fsm::input(fsm::InputKind::kSentRequestManifest), conversation_id);
  auto reply = exchange(url, env, EventType::kPublishManifest, state);
  step(state, fsm::input(fsm::InputKind::kReceivedPublishManifest), conversation_id);
  for (const auto& e : reply.events) {
    if (const auto* m = e.manifest(); m && e.event_type == EventType::kPublishManifest) return *m;
  }
  throw DiscoveryFailed(url + " published no manifest");
}

DiscoveryOutcome DiscoveryClient::find_assistants(const std::string& registry_url,
                                                  const std::string& query,
                                                  const std::string& conversation_id,
                                                  const std::string& speaker_id) {
  DiscoveryOutcome outcome;
  std::set<std::string> seen;
  std::vector<std::string> frontier{registry_url};
  auto state = fsm::DiscoveryState::kAssistantSearch;

  for (int depth = 0;; ++depth) {
    std::vector<std::string> next;
    for (const auto& url : frontier) {
      if (seen.count(url)) continue;
      if (depth >= options_.max_referral_depth) {
        throw DiscoveryFailed("referral depth " + std::to_string(options_.max_referral_depth) +
                              " exceeded: " + join(outcome.visited));
      }
      seen.insert(url);
      outcome.visited.push_back(url);

      auto env = request_envelope(self_, url, conversation_id);
      env.events.push_back(build_event(EventType::kFindAssistant,
                                       DialogPayload{make_dialog_event(speaker_id, query)}, url,
                                       now_));
      state = fsm::DiscoveryState::kAssistantSearch;
      step(state, fsm::input(fsm::InputKind::kSentFindAssistant), conversation_id);
      auto reply = exchange(url, env, EventType::kProposeAssistant, state);

      std::vector<AssistantCandidate> direct;
      std::vector<AssistantCandidate> indirect;
      for (const auto& e : reply.events) {
        const auto* cands = e.candidates();
        if (!cands || e.event_type != EventType::kProposeAssistant) continue;
        for (const auto& c : *cands) {
          (c.servicing_mode == ServicingMode::kDirect ? direct : indirect).push_back(c);
        }
      }
      if (!direct.empty() || indirect.empty()) {
        step(state, fsm::proposal(ServicingMode::kDirect), conversation_id);
        outcome.candidates = std::move(direct);
        return outcome;
      }
      step(state, fsm::proposal(ServicingMode::kIndirect), conversation_id);
      for (const auto& c : indirect) next.push_back(c.url);
    }
    std::erase_if(next, [&](const std::string& u) { return seen.count(u) > 0; });
    if (next.empty()) {
      throw DiscoveryFailed("referral loop, no assistant found: " + join(outcome.visited));
    }
    frontier = std::move(next);
  }
}

}  // namespace ovon
