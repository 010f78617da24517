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

// Response backends behind one interface. Real LLM inference is out of scope;
// the shipped backends are deterministic (echo, scripted, rule-based).

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ovon/envelope.hpp"

namespace ovon {

struct HistoryEntry {
  std::string speaker_id;
  std::string text;
  EventType kind = EventType::kUtterance;  // kUtterance or kWhisper

  bool operator==(const HistoryEntry&) const = default;
};

struct BackendReply {
  std::string text;  // may be empty only when end_conversation is set
  bool end_conversation = false;
  // Capability phrase naming a specialist the mediator should bring in.
  std::optional<std::string> delegate;

  bool operator==(const BackendReply&) const = default;
};

struct BackendFailure {
  std::string reason;
  bool operator==(const BackendFailure&) const = default;
};

using BackendResult = std::variant<BackendReply, BackendFailure>;

struct BackendRequest {
  std::span<const HistoryEntry> history;
  std::string_view current;
  std::optional<std::string_view> whisper_context;
  std::string_view speaker_id;  // who said `current`; used for {speaker}
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual BackendResult respond(const BackendRequest& request) const = 0;
};

// Failure when `current` is empty; otherwise whatever the backend says.
BackendResult run_backend(const Backend& backend, std::span<const HistoryEntry> history,
                          std::string_view current,
                          std::optional<std::string_view> whisper_context = std::nullopt,
                          std::string_view speaker_id = {});

class EchoBackend final : public Backend {
 public:
  BackendResult respond(const BackendRequest& request) const override;
};

struct ScriptTurn {
  std::optional<std::string> expect;  // case-insensitive substring of the input
  std::string reply;
  bool then_bye = false;
  std::optional<std::string> delegate;
};

struct ScriptedBackendSpec {
  std::vector<ScriptTurn> turns;
};

// Replays turns in order. The cursor is the number of history entries spoken
// by `self_speaker`, so replies depend only on the history passed in.
class ScriptedBackend final : public Backend {
 public:
  ScriptedBackend(ScriptedBackendSpec spec, std::string self_speaker);
  BackendResult respond(const BackendRequest& request) const override;

 private:
  ScriptedBackendSpec spec_;
  std::string self_;
};

struct Rule {
  std::optional<bool> first_turn;        // match only on (or never on) the first turn
  std::vector<std::string> all_of;       // every word must occur
  std::vector<std::string> any_of;       // at least one must occur (if non-empty)
  std::string reply;
  bool then_bye = false;
  std::optional<std::string> delegate;
};

struct RuleSet {
  std::vector<Rule> rules;
  std::optional<std::string> fallback;
};

// First matching rule wins. Words are matched case-insensitively against the
// input's words; "first turn" means no prior reply from `self_speaker`.
class RuleBackend final : public Backend {
 public:
  RuleBackend(RuleSet rules, std::string self_speaker);
  BackendResult respond(const BackendRequest& request) const override;

 private:
  RuleSet rules_;
  std::string self_;
};

ScriptedBackendSpec scripted_spec_from_json(const Json& doc);
RuleSet rule_set_from_json(const Json& doc);

// `spec` is "echo", "scripted:<path>", "rules:<path>", or an object
// {"scripted": {...}} / {"rules": {...}}. Relative paths resolve against
// `base_dir`. Throws ConfigError.
std::unique_ptr<Backend> make_backend(const Json& spec, const std::string& base_dir,
                                      const std::string& self_speaker);

// Replaces every "{speaker}" with `speaker`.
std::string apply_template(std::string_view text, std::string_view speaker);

}  // namespace ovon
