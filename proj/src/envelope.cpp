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

#include "ovon/envelope.hpp"

#include <array>
#include <chrono>
#include <ctime>
#include <initializer_list>
#include <sstream>

namespace ovon {

namespace {

constexpr std::array<std::pair<EventType, std::string_view>, 8> kEventNames{{
    {EventType::kInvite, "invite"},
    {EventType::kUtterance, "utterance"},
    {EventType::kWhisper, "whisper"},
    {EventType::kBye, "bye"},
    {EventType::kRequestManifest, "requestManifest"},
    {EventType::kPublishManifest, "publishManifest"},
    {EventType::kFindAssistant, "findAssistant"},
    {EventType::kProposeAssistant, "proposeAssistant"},
}};

std::string child(const std::string& path, std::string_view key) {
  return path.empty() ? std::string(key) : path + "." + std::string(key);
}

std::string index(const std::string& path, size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

Json leftovers(const Json& obj, std::initializer_list<std::string_view> known) {
  Json extra = Json::object();
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool recognized = false;
    for (auto k : known) {
      if (it.key() == k) {
        recognized = true;
        break;
      }
    }
    if (!recognized) extra[it.key()] = it.value();
  }
  return extra;
}

void append_extra(Json& out, const Json& extra) {
  if (!extra.is_object()) return;
  for (auto it = extra.begin(); it != extra.end(); ++it) {
    if (!out.contains(it.key())) out[it.key()] = it.value();
  }
}

// Structural decoding: records shape problems (missing keys, wrong JSON
// types, unknown event types, payload/type mismatches) and keeps going so a
// single pass reports every problem in document order.
class Decoder {
 public:
  std::vector<Violation> violations;

  void fail(std::string path, std::string message) {
    violations.push_back({std::move(path), std::move(message)});
  }

  const Json* object(const Json& parent, std::string_view key, const std::string& path,
                     bool required) {
    auto it = parent.find(key);
    if (it == parent.end()) {
      if (required) fail(child(path, key), "required object is missing");
      return nullptr;
    }
    if (!it->is_object()) {
      fail(child(path, key), "expected an object");
      return nullptr;
    }
    return &*it;
  }

  std::optional<std::string> string(const Json& parent, std::string_view key,
                                    const std::string& path, bool required) {
    auto it = parent.find(key);
    if (it == parent.end()) {
      if (required) fail(child(path, key), "required string is missing");
      return std::nullopt;
    }
    if (!it->is_string()) {
      fail(child(path, key), "expected a string");
      return std::nullopt;
    }
    return it->get<std::string>();
  }

  std::vector<std::string> strings(const Json& parent, std::string_view key,
                                   const std::string& path, bool required) {
    std::vector<std::string> out;
    auto it = parent.find(key);
    if (it == parent.end()) {
      if (required) fail(child(path, key), "required list is missing");
      return out;
    }
    if (!it->is_array()) {
      fail(child(path, key), "expected a list of strings");
      return out;
    }
    for (size_t i = 0; i < it->size(); ++i) {
      const auto& v = (*it)[i];
      if (v.is_string()) {
        out.push_back(v.get<std::string>());
      } else {
        fail(index(child(path, key), i), "expected a string");
      }
    }
    return out;
  }

  DialogEvent dialog(const Json& j, const std::string& path) {
    DialogEvent d;
    d.speaker_id = string(j, "speakerId", path, true).value_or("");
    if (const Json* span = object(j, "span", path, false)) {
      d.span_start_time = string(*span, "startTime", child(path, "span"), false);
      d.span_extra = leftovers(*span, {"startTime"});
    }
    if (const Json* features = object(j, "features", path, true)) {
      const std::string fpath = child(path, "features");
      for (auto it = features->begin(); it != features->end(); ++it) {
        const std::string name_path = child(fpath, it.key());
        if (!it->is_object()) {
          fail(name_path, "expected a feature object");
          continue;
        }
        Feature f;
        f.mime_type = string(*it, "mimeType", name_path, false).value_or("text/plain");
        auto tokens = it->find("tokens");
        if (tokens == it->end() || !tokens->is_array()) {
          fail(child(name_path, "tokens"), "expected a list of tokens");
        } else {
          for (size_t i = 0; i < tokens->size(); ++i) {
            const auto& t = (*tokens)[i];
            const std::string tpath = index(child(name_path, "tokens"), i);
            if (!t.is_object()) {
              fail(tpath, "expected a token object");
              continue;
            }
            Token tok;
            tok.value = string(t, "value", tpath, true).value_or("");
            tok.extra = leftovers(t, {"value"});
            f.tokens.push_back(std::move(tok));
          }
        }
        f.extra = leftovers(*it, {"mimeType", "tokens"});
        d.features.emplace(it.key(), std::move(f));
      }
    }
    d.extra = leftovers(j, {"speakerId", "span", "features"});
    return d;
  }

  AssistantManifest manifest(const Json& j, const std::string& path) {
    AssistantManifest m;
    if (const Json* id = object(j, "identification", path, true)) {
      const std::string ipath = child(path, "identification");
      auto& ident = m.identification;
      ident.service_endpoint = string(*id, "serviceEndpoint", ipath, true).value_or("");
      ident.organization = string(*id, "organization", ipath, false).value_or("");
      ident.conversational_name = string(*id, "conversationalName", ipath, true).value_or("");
      ident.service_name = string(*id, "serviceName", ipath, false).value_or("");
      ident.role = string(*id, "role", ipath, false).value_or("");
      ident.synopsis = string(*id, "synopsis", ipath, false).value_or("");
      ident.extra = leftovers(*id, {"serviceEndpoint", "organization", "conversationalName",
                                    "serviceName", "role", "synopsis"});
    }
    const std::string cpath = child(path, "capabilities");
    auto caps = j.find("capabilities");
    if (caps == j.end()) {
      fail(cpath, "required list is missing");
    } else if (!caps->is_array()) {
      fail(cpath, "expected a list of capabilities");
    } else {
      for (size_t i = 0; i < caps->size(); ++i) {
        const auto& c = (*caps)[i];
        const std::string p = index(cpath, i);
        if (!c.is_object()) {
          fail(p, "expected a capability object");
          continue;
        }
        Capability cap;
        cap.keywords = strings(c, "keywords", p, true);
        cap.languages = strings(c, "languages", p, false);
        cap.descriptive_texts = strings(c, "descriptiveTexts", p, false);
        cap.modalities = strings(c, "modalities", p, false);
        cap.content_type = string(c, "contentType", p, false).value_or("");
        cap.extra = leftovers(
            c, {"keywords", "languages", "descriptiveTexts", "modalities", "contentType"});
        m.capabilities.push_back(std::move(cap));
      }
    }
    m.extra = leftovers(j, {"identification", "capabilities"});
    return m;
  }

  AssistantCandidate candidate(const Json& j, const std::string& path) {
    AssistantCandidate c;
    c.conversational_name = string(j, "conversationalName", path, false).value_or("");
    c.url = string(j, "url", path, true).value_or("");
    if (auto mode = string(j, "servicingMode", path, false)) {
      if (*mode == "indirect") {
        c.servicing_mode = ServicingMode::kIndirect;
      } else if (*mode != "direct") {
        fail(child(path, "servicingMode"), "expected \"direct\" or \"indirect\"");
      }
    }
    if (auto it = j.find("score"); it != j.end()) {
      if (it->is_number()) {
        c.score = it->get<double>();
      } else {
        fail(child(path, "score"), "expected a number");
      }
    }
    c.extra = leftovers(j, {"conversationalName", "url", "servicingMode", "score"});
    return c;
  }

  EnvelopeEvent event(const Json& j, const std::string& path) {
    EnvelopeEvent e;
    e.to = string(j, "to", path, false);
    e.extra = leftovers(j, {"to", "eventType", "parameters"});

    auto type_name = string(j, "eventType", path, true);
    if (!type_name) return e;
    auto type = event_type_from_string(*type_name);
    if (!type) {
      fail(child(path, "eventType"), "unknown event type \"" + *type_name + "\"");
      return e;
    }
    e.event_type = *type;

    const std::string ppath = child(path, "parameters");
    static const Json kEmpty = Json::object();
    const Json* params = object(j, "parameters", path, false);
    const Json& p = params ? *params : kEmpty;
    const std::string name(to_string(*type));

    switch (*type) {
      case EventType::kInvite: {
        InvitePayload inv;
        auto target = p.find("to");
        if (target == p.end() || !target->is_object()) {
          fail(ppath, "invite requires parameters.to.url");
        } else {
          inv.url = string(*target, "url", child(ppath, "to"), true).value_or("");
          inv.target_extra = leftovers(*target, {"url"});
        }
        e.payload = std::move(inv);
        e.parameters_extra = leftovers(p, {"to"});
        break;
      }
      case EventType::kUtterance:
      case EventType::kWhisper:
      case EventType::kFindAssistant: {
        auto d = p.find("dialogEvent");
        if (d == p.end() || !d->is_object()) {
          fail(ppath, name + " requires parameters.dialogEvent");
          e.payload = DialogPayload{};
        } else {
          e.payload = DialogPayload{dialog(*d, child(ppath, "dialogEvent"))};
        }
        e.parameters_extra = leftovers(p, {"dialogEvent"});
        break;
      }
      case EventType::kBye: {
        ByePayload bye;
        if (auto d = p.find("dialogEvent"); d != p.end()) {
          if (d->is_object()) {
            bye.reason = dialog(*d, child(ppath, "dialogEvent"));
          } else {
            fail(child(ppath, "dialogEvent"), "expected an object");
          }
        }
        e.payload = std::move(bye);
        e.parameters_extra = leftovers(p, {"dialogEvent"});
        break;
      }
      case EventType::kRequestManifest:
        e.payload = EmptyPayload{};
        e.parameters_extra = p;
        break;
      case EventType::kPublishManifest: {
        auto m = p.find("manifest");
        if (m == p.end() || !m->is_object()) {
          fail(ppath, "publishManifest requires parameters.manifest");
          e.payload = ManifestPayload{};
        } else {
          e.payload = ManifestPayload{manifest(*m, child(ppath, "manifest"))};
        }
        e.parameters_extra = leftovers(p, {"manifest"});
        break;
      }
      case EventType::kProposeAssistant: {
        CandidatesPayload out;
        auto list = p.find("candidates");
        if (list == p.end() || !list->is_array()) {
          fail(ppath, "proposeAssistant requires parameters.candidates");
        } else {
          const std::string lpath = child(ppath, "candidates");
          for (size_t i = 0; i < list->size(); ++i) {
            const auto& c = (*list)[i];
            if (!c.is_object()) {
              fail(index(lpath, i), "expected a candidate object");
              continue;
            }
            out.candidates.push_back(candidate(c, index(lpath, i)));
          }
        }
        e.payload = std::move(out);
        e.parameters_extra = leftovers(p, {"candidates"});
        break;
      }
    }
    return e;
  }

  ConversationEnvelope envelope(const Json& doc) {
    ConversationEnvelope env;
    if (!doc.is_object()) {
      fail("", "expected a JSON object");
      return env;
    }
    const Json* ovon = object(doc, "ovon", "", true);
    env.root_extra = leftovers(doc, {"ovon"});
    if (!ovon) return env;
    const std::string root = "ovon";

    if (const Json* schema = object(*ovon, "schema", root, true)) {
      env.schema_version = string(*schema, "version", child(root, "schema"), true).value_or("");
      env.schema_url = string(*schema, "url", child(root, "schema"), false);
      env.schema_extra = leftovers(*schema, {"version", "url"});
    }
    if (const Json* conv = object(*ovon, "conversation", root, true)) {
      env.conversation_id = string(*conv, "id", child(root, "conversation"), true).value_or("");
      env.conversation_extra = leftovers(*conv, {"id"});
    }
    if (const Json* sender = object(*ovon, "sender", root, true)) {
      const std::string spath = child(root, "sender");
      env.sender_from = string(*sender, "from", spath, true).value_or("");
      env.sender_reply_to = string(*sender, "reply-to", spath, false);
      env.sender_to = string(*sender, "to", spath, false);
      env.sender_extra = leftovers(*sender, {"from", "reply-to", "to"});
    }
    if (auto rc = ovon->find("responseCode"); rc != ovon->end()) {
      const std::string rpath = child(root, "responseCode");
      if (rc->is_number_integer()) {
        env.response_code = ResponseCode{rc->get<int>(), std::nullopt, Json::object()};
      } else if (rc->is_object()) {
        ResponseCode code;
        auto c = rc->find("code");
        if (c == rc->end() || !c->is_number_integer()) {
          fail(child(rpath, "code"), "expected an integer code");
        } else {
          code.code = c->get<int>();
        }
        code.description = string(*rc, "description", rpath, false);
        if (code.description && code.description->empty()) code.description.reset();
        code.extra = leftovers(*rc, {"code", "description"});
        env.response_code = std::move(code);
      } else {
        fail(rpath, "expected an integer or {code, description}");
      }
    }
    const std::string epath = child(root, "events");
    if (auto events = ovon->find("events"); events == ovon->end()) {
      fail(epath, "required list is missing");
    } else if (!events->is_array()) {
      fail(epath, "expected a list of events");
    } else {
      for (size_t i = 0; i < events->size(); ++i) {
        const auto& ev = (*events)[i];
        if (!ev.is_object()) {
          fail(index(epath, i), "expected an event object");
          continue;
        }
        env.events.push_back(event(ev, index(epath, i)));
      }
    }
    env.extra = leftovers(
        *ovon, {"schema", "conversation", "sender", "responseCode", "events"});
    return env;
  }
};

// --- invariant checks --------------------------------------------------

void check_dialog(const DialogEvent& d, const std::string& path, bool needs_text,
                  std::vector<Violation>& out) {
  if (d.speaker_id.empty()) out.push_back({child(path, "speakerId"), "speakerId is empty"});
  const std::string fpath = child(path, "features");
  if (needs_text && !d.features.contains("text")) {
    out.push_back({child(fpath, "text"), "a \"text\" feature is required"});
  }
  for (const auto& [name, feature] : d.features) {
    if (feature.tokens.empty()) {
      out.push_back({child(child(fpath, name), "tokens"), "feature has no tokens"});
    }
  }
}

void check_manifest(const AssistantManifest& m, const std::string& path,
                    std::vector<Violation>& out) {
  const std::string ipath = child(path, "identification");
  if (m.identification.service_endpoint.empty()) {
    out.push_back({child(ipath, "serviceEndpoint"), "serviceEndpoint is empty"});
  }
  if (m.identification.conversational_name.empty()) {
    out.push_back({child(ipath, "conversationalName"), "conversationalName is empty"});
  }
  const std::string cpath = child(path, "capabilities");
  if (m.capabilities.empty()) {
    out.push_back({cpath, "at least one capability is required"});
  }
  for (size_t i = 0; i < m.capabilities.size(); ++i) {
    if (m.capabilities[i].keywords.empty()) {
      out.push_back({child(index(cpath, i), "keywords"), "at least one keyword is required"});
    }
  }
}

void check_event(const EnvelopeEvent& e, const std::string& path, std::vector<Violation>& out) {
  const std::string ppath = child(path, "parameters");
  if (!payload_matches(e.event_type, e.payload)) {
    out.push_back({ppath, "payload shape does not match event type \"" +
                              std::string(to_string(e.event_type)) + "\""});
    return;
  }
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, InvitePayload>) {
          if (p.url.empty()) out.push_back({child(child(ppath, "to"), "url"), "invite url is empty"});
        } else if constexpr (std::is_same_v<T, DialogPayload>) {
          check_dialog(p.dialog_event, child(ppath, "dialogEvent"), true, out);
        } else if constexpr (std::is_same_v<T, ByePayload>) {
          if (p.reason) check_dialog(*p.reason, child(ppath, "dialogEvent"), true, out);
        } else if constexpr (std::is_same_v<T, ManifestPayload>) {
          check_manifest(p.manifest, child(ppath, "manifest"), out);
        } else if constexpr (std::is_same_v<T, CandidatesPayload>) {
          for (size_t i = 0; i < p.candidates.size(); ++i) {
            if (p.candidates[i].url.empty()) {
              out.push_back({child(index(child(ppath, "candidates"), i), "url"),
                             "candidate url is empty"});
            }
          }
        }
      },
      e.payload);
}

// --- emitters ------------------------------------------------------------

Json strings_to_json(const std::vector<std::string>& v) {
  Json out = Json::array();
  for (const auto& s : v) out.push_back(s);
  return out;
}

Json candidate_to_json(const AssistantCandidate& c) {
  Json out = Json::object();
  out["conversationalName"] = c.conversational_name;
  out["url"] = c.url;
  out["servicingMode"] = std::string(to_string(c.servicing_mode));
  if (c.score) out["score"] = *c.score;
  append_extra(out, c.extra);
  return out;
}

Json event_to_json(const EnvelopeEvent& e) {
  Json out = Json::object();
  if (e.to) out["to"] = *e.to;
  out["eventType"] = std::string(to_string(e.event_type));
  Json params = Json::object();
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, InvitePayload>) {
          Json target = Json::object();
          target["url"] = p.url;
          append_extra(target, p.target_extra);
          params["to"] = std::move(target);
        } else if constexpr (std::is_same_v<T, DialogPayload>) {
          params["dialogEvent"] = dialog_event_to_json(p.dialog_event);
        } else if constexpr (std::is_same_v<T, ByePayload>) {
          if (p.reason) params["dialogEvent"] = dialog_event_to_json(*p.reason);
        } else if constexpr (std::is_same_v<T, ManifestPayload>) {
          params["manifest"] = manifest_to_json(p.manifest);
        } else if constexpr (std::is_same_v<T, CandidatesPayload>) {
          Json list = Json::array();
          for (const auto& c : p.candidates) list.push_back(candidate_to_json(c));
          params["candidates"] = std::move(list);
        }
      },
      e.payload);
  append_extra(params, e.parameters_extra);
  if (!params.empty()) out["parameters"] = std::move(params);
  append_extra(out, e.extra);
  return out;
}

}  // namespace

std::string format_violations(const std::vector<Violation>& violations) {
  std::ostringstream os;
  for (size_t i = 0; i < violations.size(); ++i) {
    if (i) os << "; ";
    os << (violations[i].path.empty() ? "<root>" : violations[i].path) << ": "
       << violations[i].message;
  }
  return os.str();
}

std::string_view to_string(EventType type) {
  for (const auto& [t, name] : kEventNames) {
    if (t == type) return name;
  }
  return "unknown";
}

std::optional<EventType> event_type_from_string(std::string_view name) {
  for (const auto& [t, n] : kEventNames) {
    if (n == name) return t;
  }
  if (name == "proposedAssistant") return EventType::kProposeAssistant;
  return std::nullopt;
}

std::string_view to_string(ServicingMode mode) {
  return mode == ServicingMode::kDirect ? "direct" : "indirect";
}

bool payload_matches(EventType type, const EventPayload& payload) {
  switch (type) {
    case EventType::kInvite:
      return std::holds_alternative<InvitePayload>(payload);
    case EventType::kUtterance:
    case EventType::kWhisper:
    case EventType::kFindAssistant:
      return std::holds_alternative<DialogPayload>(payload);
    case EventType::kBye:
      return std::holds_alternative<ByePayload>(payload);
    case EventType::kRequestManifest:
      return std::holds_alternative<EmptyPayload>(payload);
    case EventType::kPublishManifest:
      return std::holds_alternative<ManifestPayload>(payload);
    case EventType::kProposeAssistant:
      return std::holds_alternative<CandidatesPayload>(payload);
  }
  return false;
}

const DialogEvent* EnvelopeEvent::dialog() const {
  if (auto* p = std::get_if<DialogPayload>(&payload)) return &p->dialog_event;
  if (auto* b = std::get_if<ByePayload>(&payload); b && b->reason) return &*b->reason;
  return nullptr;
}

const AssistantManifest* EnvelopeEvent::manifest() const {
  auto* p = std::get_if<ManifestPayload>(&payload);
  return p ? &p->manifest : nullptr;
}

const std::vector<AssistantCandidate>* EnvelopeEvent::candidates() const {
  auto* p = std::get_if<CandidatesPayload>(&payload);
  return p ? &p->candidates : nullptr;
}

const InvitePayload* EnvelopeEvent::invite() const { return std::get_if<InvitePayload>(&payload); }

bool equivalent(const ResponseCode& a, const ResponseCode& b) {
  if (a.code != b.code) return false;
  if (a.description && b.description) return *a.description == *b.description;
  return true;
}

std::optional<std::string> effective_recipient(const ConversationEnvelope& env,
                                               const EnvelopeEvent& event) {
  return event.to ? event.to : env.sender_to;
}

ConversationEnvelope envelope_from_json(const Json& doc) {
  Decoder decoder;
  ConversationEnvelope env = decoder.envelope(doc);
  if (!decoder.violations.empty()) throw SchemaViolation(std::move(decoder.violations));
  if (auto v = validate_envelope(env); !v.empty()) throw SchemaViolation(std::move(v));
  return env;
}

ConversationEnvelope parse_envelope(std::string_view raw) {
  Json doc;
  try {
    doc = Json::parse(raw.begin(), raw.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw SyntaxError(e.what());
  }
  return envelope_from_json(doc);
}

AssistantManifest manifest_from_json(const Json& doc) {
  Decoder decoder;
  if (!doc.is_object()) throw SchemaViolation(std::vector<Violation>{{"manifest", "expected a JSON object"}});
  AssistantManifest m = decoder.manifest(doc, "manifest");
  if (!decoder.violations.empty()) throw SchemaViolation(std::move(decoder.violations));
  if (auto v = validate_manifest(m); !v.empty()) throw SchemaViolation(std::move(v));
  return m;
}

AssistantManifest parse_manifest(std::string_view raw) {
  Json doc;
  try {
    doc = Json::parse(raw.begin(), raw.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw SyntaxError(e.what());
  }
  return manifest_from_json(doc);
}

std::vector<Violation> validate_manifest(const AssistantManifest& manifest,
                                         const std::string& path) {
  std::vector<Violation> out;
  check_manifest(manifest, path, out);
  return out;
}

std::vector<Violation> validate_envelope(const ConversationEnvelope& env) {
  std::vector<Violation> out;
  if (env.schema_version.empty()) out.push_back({"ovon.schema.version", "schema version is empty"});
  if (env.conversation_id.empty()) {
    out.push_back({"ovon.conversation.id", "conversation id is empty"});
  }
  if (env.sender_from.empty()) out.push_back({"ovon.sender.from", "sender.from is empty"});
  if (env.events.empty()) out.push_back({"ovon.events", "at least one event is required"});
  for (size_t i = 0; i < env.events.size(); ++i) {
    check_event(env.events[i], index("ovon.events", i), out);
  }
  return out;
}

Json dialog_event_to_json(const DialogEvent& d) {
  Json out = Json::object();
  out["speakerId"] = d.speaker_id;
  if (d.span_start_time || !d.span_extra.empty()) {
    Json span = Json::object();
    if (d.span_start_time) span["startTime"] = *d.span_start_time;
    append_extra(span, d.span_extra);
    out["span"] = std::move(span);
  }
  Json features = Json::object();
  for (const auto& [name, f] : d.features) {
    Json fj = Json::object();
    fj["mimeType"] = f.mime_type;
    Json tokens = Json::array();
    for (const auto& t : f.tokens) {
      Json tj = Json::object();
      tj["value"] = t.value;
      append_extra(tj, t.extra);
      tokens.push_back(std::move(tj));
    }
    fj["tokens"] = std::move(tokens);
    append_extra(fj, f.extra);
    features[name] = std::move(fj);
  }
  out["features"] = std::move(features);
  append_extra(out, d.extra);
  return out;
}

Json manifest_to_json(const AssistantManifest& m) {
  Json ident = Json::object();
  ident["serviceEndpoint"] = m.identification.service_endpoint;
  ident["organization"] = m.identification.organization;
  ident["conversationalName"] = m.identification.conversational_name;
  ident["serviceName"] = m.identification.service_name;
  ident["role"] = m.identification.role;
  ident["synopsis"] = m.identification.synopsis;
  append_extra(ident, m.identification.extra);

  Json caps = Json::array();
  for (const auto& c : m.capabilities) {
    Json cj = Json::object();
    cj["keywords"] = strings_to_json(c.keywords);
    cj["languages"] = strings_to_json(c.languages);
    cj["descriptiveTexts"] = strings_to_json(c.descriptive_texts);
    cj["modalities"] = strings_to_json(c.modalities);
    cj["contentType"] = c.content_type;
    append_extra(cj, c.extra);
    caps.push_back(std::move(cj));
  }
  Json out = Json::object();
  out["identification"] = std::move(ident);
  out["capabilities"] = std::move(caps);
  append_extra(out, m.extra);
  return out;
}

Json envelope_to_json(const ConversationEnvelope& env) {
  if (auto v = validate_envelope(env); !v.empty()) throw ValidationFailed(std::move(v));

  Json schema = Json::object();
  schema["version"] = env.schema_version;
  if (env.schema_url) schema["url"] = *env.schema_url;
  append_extra(schema, env.schema_extra);

  Json conversation = Json::object();
  conversation["id"] = env.conversation_id;
  append_extra(conversation, env.conversation_extra);

  Json sender = Json::object();
  sender["from"] = env.sender_from;
  if (env.sender_reply_to) sender["reply-to"] = *env.sender_reply_to;
  if (env.sender_to) sender["to"] = *env.sender_to;
  append_extra(sender, env.sender_extra);

  Json body = Json::object();
  body["schema"] = std::move(schema);
  body["conversation"] = std::move(conversation);
  body["sender"] = std::move(sender);
  if (env.response_code) {
    Json rc = Json::object();
    rc["code"] = env.response_code->code;
    if (env.response_code->description) rc["description"] = *env.response_code->description;
    append_extra(rc, env.response_code->extra);
    body["responseCode"] = std::move(rc);
  }
  Json events = Json::array();
  for (const auto& e : env.events) events.push_back(event_to_json(e));
  body["events"] = std::move(events);
  append_extra(body, env.extra);

  Json root = Json::object();
  root["ovon"] = std::move(body);
  append_extra(root, env.root_extra);
  return root;
}

std::string serialize_envelope(const ConversationEnvelope& env, int indent) {
  return envelope_to_json(env).dump(indent);
}

std::string utc_now_iso8601() {
  using namespace std::chrono;
  const auto now = system_clock::now();
  const auto ms = duration_cast<milliseconds>(now.time_since_epoch()).count() % 1000;
  const std::time_t t = system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

DialogEvent make_dialog_event(std::string speaker_id, std::string text,
                              std::optional<std::string> start_time) {
  DialogEvent d;
  d.speaker_id = std::move(speaker_id);
  d.span_start_time = std::move(start_time);
  Feature f;
  f.tokens.push_back(Token{std::move(text), Json::object()});
  d.features.emplace("text", std::move(f));
  return d;
}

EnvelopeEvent build_event(EventType kind, EventPayload payload, std::optional<std::string> to,
                          const TimestampFn& now) {
  if (!payload_matches(kind, payload)) {
    throw PayloadMismatch("payload shape does not match event type \"" +
                          std::string(to_string(kind)) + "\"");
  }
  if (auto* d = std::get_if<DialogPayload>(&payload); d && !d->dialog_event.span_start_time) {
    d->dialog_event.span_start_time = now();
  }
  if (auto* b = std::get_if<ByePayload>(&payload); b && b->reason && !b->reason->span_start_time) {
    b->reason->span_start_time = now();
  }
  EnvelopeEvent e;
  e.to = std::move(to);
  e.event_type = kind;
  e.payload = std::move(payload);
  return e;
}

EnvelopeEvent make_invite(std::string url) {
  return build_event(EventType::kInvite, InvitePayload{std::move(url), Json::object()});
}

EnvelopeEvent make_utterance(DialogEvent d, std::optional<std::string> to) {
  return build_event(EventType::kUtterance, DialogPayload{std::move(d)}, std::move(to));
}

EnvelopeEvent make_whisper(DialogEvent d, std::optional<std::string> to) {
  return build_event(EventType::kWhisper, DialogPayload{std::move(d)}, std::move(to));
}

EnvelopeEvent make_bye(std::optional<DialogEvent> reason, std::optional<std::string> to) {
  return build_event(EventType::kBye, ByePayload{std::move(reason)}, std::move(to));
}

std::string extract_text(const DialogEvent& d) {
  auto it = d.features.find("text");
  if (it == d.features.end()) throw MissingTextFeature();
  std::string out;
  for (size_t i = 0; i < it->second.tokens.size(); ++i) {
    if (i) out += ' ';
    out += it->second.tokens[i].value;
  }
  return out;
}

}  // namespace ovon
