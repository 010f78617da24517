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

// Typed model of the conversation envelope and its JSON wire codec.
//
// Every object in the wire format keeps an `extra` bag holding keys the codec
// does not recognize; they are re-emitted after the known keys on serialize.

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "ovon/errors.hpp"

namespace ovon {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kSchemaVersion = "0.9.2";

enum class EventType {
  kInvite,
  kUtterance,
  kWhisper,
  kBye,
  kRequestManifest,
  kPublishManifest,
  kFindAssistant,
  kProposeAssistant,
};

std::string_view to_string(EventType type);
// Accepts the canonical names plus the `proposedAssistant` alias.
std::optional<EventType> event_type_from_string(std::string_view name);

struct Token {
  std::string value;
  Json extra = Json::object();

  bool operator==(const Token&) const = default;
};

struct Feature {
  std::string mime_type = "text/plain";
  std::vector<Token> tokens;
  Json extra = Json::object();

  bool operator==(const Feature&) const = default;
};

struct DialogEvent {
  std::string speaker_id;
  // Opaque; never normalized.
  std::optional<std::string> span_start_time;
  Json span_extra = Json::object();
  std::map<std::string, Feature> features;
  Json extra = Json::object();

  bool operator==(const DialogEvent&) const = default;
};

struct Identification {
  std::string service_endpoint;
  std::string organization;
  std::string conversational_name;
  std::string service_name;
  std::string role;
  std::string synopsis;
  Json extra = Json::object();

  bool operator==(const Identification&) const = default;
};

struct Capability {
  std::vector<std::string> keywords;
  std::vector<std::string> languages;
  std::vector<std::string> descriptive_texts;
  std::vector<std::string> modalities;
  std::string content_type;
  Json extra = Json::object();

  bool operator==(const Capability&) const = default;
};

struct AssistantManifest {
  Identification identification;
  std::vector<Capability> capabilities;
  Json extra = Json::object();

  bool operator==(const AssistantManifest&) const = default;
};

enum class ServicingMode { kDirect, kIndirect };

std::string_view to_string(ServicingMode mode);

struct AssistantCandidate {
  std::string conversational_name;
  std::string url;
  ServicingMode servicing_mode = ServicingMode::kDirect;
  // Ranking aid; only emitted on the wire when set.
  std::optional<double> score;
  Json extra = Json::object();

  bool operator==(const AssistantCandidate&) const = default;
};

// Payload shapes, one per family of event types.
struct EmptyPayload {
  bool operator==(const EmptyPayload&) const = default;
};
struct InvitePayload {
  std::string url;
  Json target_extra = Json::object();
  bool operator==(const InvitePayload&) const = default;
};
struct DialogPayload {
  DialogEvent dialog_event;
  bool operator==(const DialogPayload&) const = default;
};
struct ByePayload {
  std::optional<DialogEvent> reason;
  bool operator==(const ByePayload&) const = default;
};
struct ManifestPayload {
  AssistantManifest manifest;
  bool operator==(const ManifestPayload&) const = default;
};
struct CandidatesPayload {
  std::vector<AssistantCandidate> candidates;
  bool operator==(const CandidatesPayload&) const = default;
};

using EventPayload = std::variant<EmptyPayload, InvitePayload, DialogPayload, ByePayload,
                                  ManifestPayload, CandidatesPayload>;

// True when `payload` holds the alternative legal for `type`.
bool payload_matches(EventType type, const EventPayload& payload);

struct EnvelopeEvent {
  std::optional<std::string> to;
  EventType event_type = EventType::kUtterance;
  EventPayload payload;
  Json parameters_extra = Json::object();
  Json extra = Json::object();

  bool operator==(const EnvelopeEvent&) const = default;

  // Convenience accessors; nullptr when the payload has another shape.
  const DialogEvent* dialog() const;
  const AssistantManifest* manifest() const;
  const std::vector<AssistantCandidate>* candidates() const;
  const InvitePayload* invite() const;
};

struct ResponseCode {
  int code = 200;
  std::optional<std::string> description;
  Json extra = Json::object();

  bool operator==(const ResponseCode&) const = default;
};

// Same status: codes match and descriptions agree wherever both are present.
bool equivalent(const ResponseCode& a, const ResponseCode& b);

struct ConversationEnvelope {
  std::string schema_version{kSchemaVersion};
  std::optional<std::string> schema_url;
  Json schema_extra = Json::object();

  std::string conversation_id;
  Json conversation_extra = Json::object();

  std::string sender_from;
  std::optional<std::string> sender_reply_to;
  std::optional<std::string> sender_to;
  Json sender_extra = Json::object();

  std::optional<ResponseCode> response_code;
  std::vector<EnvelopeEvent> events;

  Json extra = Json::object();       // siblings inside "ovon"
  Json root_extra = Json::object();  // siblings of "ovon"

  bool operator==(const ConversationEnvelope&) const = default;
};

// Per-event `to` wins over `sender.to`.
std::optional<std::string> effective_recipient(const ConversationEnvelope& env,
                                               const EnvelopeEvent& event);

// --- codec ---------------------------------------------------------------

// Throws SyntaxError or SchemaViolation.
ConversationEnvelope parse_envelope(std::string_view raw);
ConversationEnvelope envelope_from_json(const Json& doc);

// Throws ValidationFailed. `indent` < 0 gives compact output.
std::string serialize_envelope(const ConversationEnvelope& env, int indent = -1);
Json envelope_to_json(const ConversationEnvelope& env);

std::vector<Violation> validate_envelope(const ConversationEnvelope& env);

// Bare manifest objects, as held in registry bootstrap files.
AssistantManifest parse_manifest(std::string_view raw);
AssistantManifest manifest_from_json(const Json& doc);
Json manifest_to_json(const AssistantManifest& manifest);
std::vector<Violation> validate_manifest(const AssistantManifest& manifest,
                                         const std::string& path = "manifest");

Json dialog_event_to_json(const DialogEvent& d);

// --- construction --------------------------------------------------------

using TimestampFn = std::function<std::string()>;

// UTC wall clock as `YYYY-MM-DDTHH:MM:SS.mmmZ`.
std::string utc_now_iso8601();

DialogEvent make_dialog_event(std::string speaker_id, std::string text,
                              std::optional<std::string> start_time = std::nullopt);

// Throws PayloadMismatch. Dialog payloads without a start time are stamped
// with `now()`.
EnvelopeEvent build_event(EventType kind, EventPayload payload,
                          std::optional<std::string> to = std::nullopt,
                          const TimestampFn& now = utc_now_iso8601);

EnvelopeEvent make_invite(std::string url);
EnvelopeEvent make_utterance(DialogEvent d, std::optional<std::string> to = std::nullopt);
EnvelopeEvent make_whisper(DialogEvent d, std::optional<std::string> to = std::nullopt);
EnvelopeEvent make_bye(std::optional<DialogEvent> reason = std::nullopt,
                       std::optional<std::string> to = std::nullopt);

// Throws MissingTextFeature.
std::string extract_text(const DialogEvent& d);

}  // namespace ovon
