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
#include <functional>
#include <string>
#include <vector>

#include "ovon/fsm.hpp"
#include "ovon/transport.hpp"

namespace ovon {

struct DiscoveryOptions {
  Millis resend_period{5000};
  int max_resends = 3;
  int max_referral_depth = 3;
  Millis request_timeout{10000};
};

struct DiscoveryOutcome {
  std::vector<AssistantCandidate> candidates;  // direct candidates only
  std::vector<std::string> visited;            // registries queried, in order
};

// Client side of the discovery exchange: requestManifest with resend, and
// findAssistant following indirect referrals with a visited set.
class DiscoveryClient {
 public:
  using SleepFn = std::function<void(Millis)>;

  DiscoveryClient(Transport& transport, std::string self_endpoint, DiscoveryOptions options = {},
                  TimestampFn now = utc_now_iso8601, fsm::TraceSink trace = {},
                  SleepFn sleep = {});

  // Throws DiscoveryFailed once resends are exhausted.
  AssistantManifest request_manifest(const std::string& url, const std::string& conversation_id);

  // Throws DiscoveryFailed on unreachable registries, referral loops, or
  // when the referral depth is exceeded. An empty proposal list is not a
  // failure.
  DiscoveryOutcome find_assistants(const std::string& registry_url, const std::string& query,
                                   const std::string& conversation_id,
                                   const std::string& speaker_id);

 private:
  // Sends with resend ticks; returns the first reply carrying `wanted`.
  ConversationEnvelope exchange(const std::string& url, const ConversationEnvelope& request,
                                EventType wanted, fsm::DiscoveryState& state);
  void step(fsm::DiscoveryState& state, const fsm::FsmInput& in, const std::string& conv);

  Transport& transport_;
  std::string self_;
  DiscoveryOptions options_;
  TimestampFn now_;
  fsm::TraceSink trace_;
  SleepFn sleep_;
};

}  // namespace ovon
