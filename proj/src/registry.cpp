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

#include "ovon/registry.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <mutex>
#include <sstream>

namespace ovon {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool contains_phrase(const std::vector<std::string>& haystack,
                     const std::vector<std::string>& phrase) {
  if (phrase.empty() || phrase.size() > haystack.size()) return false;
  return std::search(haystack.begin(), haystack.end(), phrase.begin(), phrase.end()) !=
         haystack.end();
}

bool speaks(const AssistantManifest& m, const std::optional<std::string>& language) {
  if (!language) return true;
  const std::string want = lowercase(*language);
  for (const auto& cap : m.capabilities) {
    if (cap.languages.empty()) return true;
    for (const auto& l : cap.languages) {
      const std::string have = lowercase(l);
      if (have == want || have.starts_with(want + "-") || want.starts_with(have + "-")) {
        return true;
      }
    }
  }
  return false;
}

int score_entry(const std::vector<std::string>& query_words, const RegistryEntry& entry) {
  int score = 0;
  std::set<std::string> tag_words;
  for (const auto& tag : entry.tags) {
    auto phrase = words_of(tag);
    tag_words.insert(phrase.begin(), phrase.end());
    if (contains_phrase(query_words, phrase)) ++score;
  }
  const std::set<std::string> query_set(query_words.begin(), query_words.end());
  for (const auto& cap : entry.manifest.capabilities) {
    for (const auto& text : cap.descriptive_texts) {
      for (const auto& w : words_of(text)) {
        if (w.size() >= 4 && !tag_words.contains(w) && query_set.contains(w)) return score + 1;
      }
    }
  }
  return score;
}

}  // namespace

std::vector<std::string> words_of(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::set<std::string> derive_tags(const AssistantManifest& manifest) {
  std::set<std::string> tags;
  for (const auto& cap : manifest.capabilities) {
    for (const auto& k : cap.keywords) tags.insert(lowercase(k));
  }
  return tags;
}

std::vector<AssistantCandidate> score_candidates(const MatchQuery& query,
                                                 const std::vector<RegistryEntry>& entries) {
  const auto query_words = words_of(query.text);
  std::vector<AssistantCandidate> out;
  for (const auto& entry : entries) {
    if (!speaks(entry.manifest, query.language)) continue;
    const int score = score_entry(query_words, entry);
    if (score == 0) continue;
    AssistantCandidate c;
    c.conversational_name = entry.manifest.identification.conversational_name;
    c.url = entry.manifest.identification.service_endpoint;
    c.servicing_mode = ServicingMode::kDirect;
    c.score = score;
    out.push_back(std::move(c));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (*a.score != *b.score) return *a.score > *b.score;
    if (a.conversational_name != b.conversational_name) {
      return a.conversational_name < b.conversational_name;
    }
    return a.url < b.url;
  });
  return out;
}

DiscoveryRegistry::DiscoveryRegistry(RegistryConfig config, TimestampFn now)
    : config_(std::move(config)), now_(std::move(now)) {
  if (config_.self_manifest) {
    if (auto v = validate_manifest(*config_.self_manifest); !v.empty()) {
      throw InvalidManifest(std::move(v));
    }
  }
}

RegistryEntry DiscoveryRegistry::register_manifest(const AssistantManifest& manifest) {
  if (auto v = validate_manifest(manifest); !v.empty()) throw InvalidManifest(std::move(v));
  RegistryEntry entry{manifest, now_(), derive_tags(manifest)};
  std::unique_lock lock(mu_);
  entries_.insert_or_assign(manifest.identification.service_endpoint, entry);
  return entry;
}

size_t DiscoveryRegistry::load_bootstrap_file(const std::string& path) {
  auto manifests = load_manifest_array(path);
  for (const auto& m : manifests) register_manifest(m);
  return manifests.size();
}

size_t DiscoveryRegistry::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

std::vector<RegistryEntry> DiscoveryRegistry::entries() const {
  std::shared_lock lock(mu_);
  std::vector<RegistryEntry> out;
  out.reserve(entries_.size());
  for (const auto& [_, e] : entries_) out.push_back(e);
  return out;
}

std::optional<RegistryEntry> DiscoveryRegistry::find(std::string_view endpoint) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(endpoint);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::vector<AssistantCandidate> DiscoveryRegistry::find_assistants(
    const MatchQuery& query, std::string_view requester) const {
  auto pool = entries();
  if (config_.self_manifest) {
    const auto& self_ep = config_.self_manifest->identification.service_endpoint;
    const bool listed = std::any_of(pool.begin(), pool.end(), [&](const RegistryEntry& e) {
      return e.manifest.identification.service_endpoint == self_ep;
    });
    if (!listed) pool.push_back({*config_.self_manifest, "", derive_tags(*config_.self_manifest)});
  }
  auto candidates = score_candidates(query, pool);
  if (candidates.empty()) {
    for (const auto& peer : config_.peers) {
      if (peer == requester || peer == config_.endpoint) continue;
      AssistantCandidate c;
      c.conversational_name = peer;
      c.url = peer;
      c.servicing_mode = ServicingMode::kIndirect;
      candidates.push_back(std::move(c));
    }
  }
  if (!config_.emit_scores) {
    for (auto& c : candidates) c.score.reset();
  }
  return candidates;
}

ConversationEnvelope DiscoveryRegistry::handle_discovery_envelope(
    const ConversationEnvelope& env) const {
  ConversationEnvelope out;
  out.schema_version = env.schema_version;
  out.schema_url = env.schema_url;
  out.conversation_id = env.conversation_id;
  out.sender_from = config_.endpoint;
  out.sender_to = env.sender_from;

  for (const auto& e : env.events) {
    if (e.event_type == EventType::kRequestManifest) {
      if (!config_.self_manifest) throw UnsupportedEvent("this agent publishes no manifest");
      out.events.push_back(
          build_event(EventType::kPublishManifest, ManifestPayload{*config_.self_manifest}));
      return out;
    }
    if (e.event_type == EventType::kFindAssistant) {
      MatchQuery q{extract_text(*e.dialog()), std::nullopt};
      if (auto lang = e.parameters_extra.find("language");
          lang != e.parameters_extra.end() && lang->is_string()) {
        q.language = lang->get<std::string>();
      }
      out.events.push_back(build_event(EventType::kProposeAssistant,
                                       CandidatesPayload{find_assistants(q, env.sender_from)}));
      return out;
    }
  }
  throw UnsupportedEvent("envelope carries no requestManifest or findAssistant event");
}

std::vector<AssistantManifest> load_manifest_array(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open manifest file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  Json doc;
  try {
    doc = Json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw SyntaxError(path + ": " + e.what());
  }
  if (!doc.is_array()) throw InvalidManifest(std::vector<Violation>{{"", "manifest file must hold a JSON array"}});
  std::vector<AssistantManifest> out;
  for (size_t i = 0; i < doc.size(); ++i) {
    try {
      out.push_back(manifest_from_json(doc[i]));
    } catch (const SchemaViolation& v) {
      auto violations = v.violations();
      for (auto& x : violations) x.path = "[" + std::to_string(i) + "]." + x.path;
      throw InvalidManifest(std::move(violations));
    }
  }
  return out;
}

}  // namespace ovon
