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

#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "ovon/envelope.hpp"

namespace ovon {

struct RegistryEntry {
  AssistantManifest manifest;
  std::string registered_at;
  std::set<std::string> tags;  // lowercased capability keywords

  bool operator==(const RegistryEntry&) const = default;
};

struct MatchQuery {
  std::string text;
  std::optional<std::string> language;
};

std::set<std::string> derive_tags(const AssistantManifest& manifest);

// Lowercased alphanumeric words of `text`, in order.
std::vector<std::string> words_of(std::string_view text);

// Bag-of-words ranking. Score = number of tags found as whole words (or
// whole-word phrases) in the query, plus one when a descriptive-text word of
// at least four letters that is not itself a tag appears in the query.
// Zero scores are dropped; order is score descending, then name ascending.
std::vector<AssistantCandidate> score_candidates(const MatchQuery& query,
                                                 const std::vector<RegistryEntry>& entries);

struct RegistryConfig {
  std::string endpoint;
  std::optional<AssistantManifest> self_manifest;
  std::vector<std::string> peers;  // other registries, for indirect referrals
  bool emit_scores = false;
};

// Manifest store answering requestManifest and findAssistant. Lookups take a
// shared lock; registrations are exclusive.
class DiscoveryRegistry {
 public:
  explicit DiscoveryRegistry(RegistryConfig config, TimestampFn now = utc_now_iso8601);

  // Throws InvalidManifest. Re-registering an endpoint replaces its entry.
  RegistryEntry register_manifest(const AssistantManifest& manifest);

  // JSON array of manifest objects. Throws IoFailure, SyntaxError,
  // InvalidManifest.
  size_t load_bootstrap_file(const std::string& path);

  size_t size() const;
  std::vector<RegistryEntry> entries() const;
  std::optional<RegistryEntry> find(std::string_view endpoint) const;

  // Direct matches (including this registry's own manifest), or, when there
  // are none, indirect referrals to peers other than the requester and self.
  std::vector<AssistantCandidate> find_assistants(const MatchQuery& query,
                                                  std::string_view requester) const;

  // Throws UnsupportedEvent unless `env` carries requestManifest or
  // findAssistant.
  ConversationEnvelope handle_discovery_envelope(const ConversationEnvelope& env) const;

  const RegistryConfig& config() const { return config_; }

 private:
  RegistryConfig config_;
  TimestampFn now_;
  mutable std::shared_mutex mu_;
  std::map<std::string, RegistryEntry, std::less<>> entries_;
};

std::vector<AssistantManifest> load_manifest_array(const std::string& path);

}  // namespace ovon
