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

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ovon/backend.hpp"
#include "ovon/discovery.hpp"
#include "ovon/fsm.hpp"
#include "ovon/registry.hpp"
#include "ovon/transport.hpp"

namespace ovon {

enum class AgentRole { kMediator, kSpecialist, kRegistry };

std::string_view to_string(AgentRole role);

struct Route {
  std::vector<std::string> keywords;
  std::string url;
};

struct AgentConfig {
  std::string name;      // speaker id for this agent's own dialog events
  std::string endpoint;  // sender.from on everything this agent emits
  AgentRole role = AgentRole::kSpecialist;
  Json backend;          // see make_backend; null means echo
  std::string base_dir;  // resolves relative paths in this config

  std::vector<Route> routes;                       // mediator: static delegation table
  std::optional<AssistantManifest> manifest;       // published on requestManifest
  std::vector<AssistantManifest> manifests;        // registry: bootstrap entries
  std::vector<std::string> peers;                  // registry: referral targets
  std::optional<std::string> discovery_registry;   // mediator: where to findAssistant

  std::string greeting = "How can I assist you today?";  // after a delegate leaves
  std::optional<std::string> welcome;                     // answer to a bare invite
  std::string apology = "Sorry, I could not reach {delegate}.";
  int max_delegation_depth = 1;

  std::chrono::milliseconds inactivity_timeout{60000};
  std::chrono::milliseconds request_timeout{10000};
  DiscoveryOptions discovery;
  bool emit_scores = false;

  std::optional<std::string> transcripts_dir;
};

// Reads a JSON agent config. Relative paths inside resolve against the
// file's directory. Throws ConfigError or IoFailure.
AgentConfig load_agent_config(const std::string& path);
AgentConfig agent_config_from_json(const Json& doc, const std::string& base_dir);

// OVON_TIMEOUT_SECS overrides the inactivity timeout when set.
void apply_env_overrides(AgentConfig& config);

// Who currently answers the user in a mediated conversation.
struct FloorState {
  std::optional<std::string> delegate;  // endpoint; empty means the mediator
  fsm::DemandingState demanding = fsm::DemandingState::kIdle;
};

struct AgentSession {
  fsm::ServingState serving = fsm::ServingState::kIdle;
  std::vector<HistoryEntry> history;  // what the backend has seen
  FloorState floor;
  std::vector<std::string> delegations;  // endpoints invited, in order
  bool closed = false;
};

// One conversational agent. handle() is safe to call from many threads;
// envelopes of one conversation are processed one at a time.
class Agent {
 public:
  Agent(AgentConfig config, std::shared_ptr<Transport> transport,
        TimestampFn now = utc_now_iso8601);
  ~Agent();

  Agent(const Agent&) = delete;
  Agent& operator=(const Agent&) = delete;

  // Never throws for protocol problems; they come back as a response
  // envelope with a non-200 responseCode.
  ConversationEnvelope handle(const ConversationEnvelope& inbound);

  // Steps InactivityTimeout for conversations idle past the configured
  // timeout and forgets them. Returns how many expired.
  size_t expire_idle(std::chrono::steady_clock::time_point now = std::chrono::steady_clock::now());

  std::optional<AgentSession> session(const std::string& conversation_id);
  size_t session_count() const { return sessions_.size(); }

  const AgentConfig& config() const { return config_; }
  const DiscoveryRegistry& registry() const { return *registry_; }
  DiscoveryRegistry& registry() { return *registry_; }

  void set_trace(fsm::TraceSink sink) { trace_ = std::move(sink); }

 private:
  struct Turn;

  ConversationEnvelope respond(const ConversationEnvelope& inbound);
  ConversationEnvelope discovery_reply(const ConversationEnvelope& inbound);
  void serve(AgentSession& s, const ConversationEnvelope& inbound, Turn& turn);
  void mediate(AgentSession& s, const fsm::LookupRequest& lookup, Turn& turn);
  void start_delegation(AgentSession& s, const std::string& directive,
                        const fsm::LookupRequest& lookup, Turn& turn);
  void relay(AgentSession& s, const ConversationEnvelope& reply, Turn& turn);
  void lose_delegate(AgentSession& s, const std::string& why, Turn& turn);
  std::optional<std::string> route_for(const std::string& directive,
                                       const std::string& user_text) const;
  ConversationEnvelope send_to(const std::string& url, const std::string& conv,
                               std::vector<EnvelopeEvent> events);
  fsm::ServingState serving_step(fsm::ServingState s, fsm::InputKind kind,
                                 const std::string& conv);
  fsm::DemandingState demanding_step(fsm::DemandingState s, fsm::InputKind kind,
                                     const std::string& conv);
  EnvelopeEvent say(const std::string& text) const;

  AgentConfig config_;
  std::shared_ptr<Transport> transport_;
  TimestampFn now_;
  std::unique_ptr<Backend> backend_;
  std::unique_ptr<DiscoveryRegistry> registry_;
  std::unique_ptr<TranscriptWriter> transcripts_;
  SessionStore<AgentSession> sessions_;
  fsm::TraceSink trace_;
};

}  // namespace ovon
