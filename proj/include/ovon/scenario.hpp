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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ovon/agent.hpp"

namespace ovon {

// One envelope crossing the wire, in global send order.
struct TranscriptRecord {
  uint64_t seq = 0;
  std::string from;
  std::string to;
  ConversationEnvelope envelope;
};

// Selects (record, event) pairs. Unset fields match anything; names compare
// case-insensitively, `text` is a substring of the event's dialog text.
struct EventMatcher {
  std::optional<std::string> from;
  std::optional<std::string> to;
  std::optional<EventType> event_type;
  std::optional<std::string> speaker;
  std::optional<std::string> text;
};

enum class ExpectationKind { kEventOccurs, kOrderedBefore, kTextContains, kFloorReturnsTo };

std::string_view to_string(ExpectationKind kind);

struct Expectation {
  ExpectationKind kind = ExpectationKind::kEventOccurs;
  std::string description;
  std::vector<EventMatcher> matchers;  // one for most kinds; the chain for OrderedBefore
  std::optional<int> count;            // EventOccurs: exact count; else at least one
  bool final_only = false;             // TextContains: only the last matching envelope
  std::string agent;                   // FloorReturnsTo
  std::optional<int> segments;         // FloorReturnsTo
};

struct ScenarioTurn {
  std::string actor;
  std::string say;  // empty sends a bare invite
};

struct ScenarioSpec {
  std::string name;
  std::string user;
  std::string user_endpoint;
  std::string entry;  // agent name the user talks to
  std::string conversation_id;
  std::optional<std::string> freeze_time;
  std::vector<AgentConfig> agents;
  std::vector<ScenarioTurn> turns;
  std::vector<Expectation> expectations;
};

struct ExpectationResult {
  std::string description;
  ExpectationKind kind = ExpectationKind::kEventOccurs;
  bool passed = false;
  std::string detail;
  std::vector<uint64_t> lines;  // transcript seq numbers supporting the verdict
};

struct ScenarioReport {
  std::string name;
  std::string conversation_id;
  std::vector<TranscriptRecord> transcript;
  std::vector<ExpectationResult> results;

  bool passed() const;
};

struct RunOptions {
  std::optional<std::string> freeze_time;  // overrides the scenario's setting
};

// Throws ScenarioSetupFailure for unknown actors, duplicate endpoints or a
// missing entry agent; ConfigError for malformed files.
ScenarioSpec load_scenario(const std::string& path);
ScenarioSpec scenario_from_json(const Json& doc, const std::string& base_dir);

ScenarioReport run_scenario(const ScenarioSpec& spec, const RunOptions& options = {});

std::vector<ExpectationResult> evaluate_expectations(const std::vector<Expectation>& expectations,
                                                     const std::vector<TranscriptRecord>& records,
                                                     const std::string& user);

Json report_to_json(const ScenarioReport& report);
std::string format_report(const ScenarioReport& report);

Json record_to_json(const TranscriptRecord& record);
std::string transcript_to_jsonl(const std::vector<TranscriptRecord>& records);

// Reads either the harness format {seq, from, to, envelope} or the agent
// format {direction, peer, envelope, agent}. Throws IoFailure, SyntaxError.
std::vector<TranscriptRecord> load_transcript(const std::string& path);
std::vector<TranscriptRecord> parse_transcript(std::string_view jsonl);

// PlantUML: one participant per agent in first-appearance order and one
// arrow per event.
std::string export_sequence_diagram(const std::vector<TranscriptRecord>& records);

}  // namespace ovon
