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

#include "ovon/agent.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace ovon {

namespace {

using fsm::InputKind;

bool has_event(const ConversationEnvelope& env, EventType type) {
  return std::any_of(env.events.begin(), env.events.end(),
                     [&](const EnvelopeEvent& e) { return e.event_type == type; });
}

bool is_discovery_request(const ConversationEnvelope& env) {
  return has_event(env, EventType::kRequestManifest) || has_event(env, EventType::kFindAssistant);
}

std::string replace_all(std::string text, std::string_view key, std::string_view value) {
  for (size_t pos = text.find(key); pos != std::string::npos; pos = text.find(key, pos)) {
    text.replace(pos, key.size(), value);
    pos += value.size();
  }
  return text;
}

bool contains_phrase(const std::vector<std::string>& words, const std::string& phrase) {
  const auto needle = words_of(phrase);
  if (needle.empty()) return false;
  return std::search(words.begin(), words.end(), needle.begin(), needle.end()) != words.end();
}

std::chrono::milliseconds millis_field(const Json& doc, const char* key,
                                       std::chrono::milliseconds fallback) {
  auto it = doc.find(key);
  if (it == doc.end()) return fallback;
  if (!it->is_number() || it->get<double>() < 0) {
    throw ConfigError(std::string(key) + " must be a non-negative number of seconds");
  }
  return std::chrono::milliseconds(static_cast<long long>(it->get<double>() * 1000.0));
}

std::optional<std::string> opt_string(const Json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ConfigError(std::string(key) + " must be a string");
  return it->get<std::string>();
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
  return p.string();
}

AssistantManifest manifest_field(const Json& j, const std::string& base_dir) {
  if (j.is_string()) return parse_manifest([&] {
      std::ifstream in(resolve(base_dir, j.get<std::string>()));
      if (!in) throw IoFailure("cannot open manifest " + j.get<std::string>());
      std::stringstream ss;
      ss << in.rdbuf();
      return ss.str();
    }());
  return manifest_from_json(j);
}

}  // namespace

std::string_view to_string(AgentRole role) {
  switch (role) {
    case AgentRole::kMediator: return "mediator";
    case AgentRole::kSpecialist: return "specialist";
    case AgentRole::kRegistry: return "registry";
  }
  return "?";
}

AgentConfig agent_config_from_json(const Json& doc, const std::string& base_dir) {
  if (!doc.is_object()) throw ConfigError("agent config must be a JSON object");
  AgentConfig c;
  c.base_dir = base_dir;
  try {
    c.name = doc.at("name").get<std::string>();
    c.endpoint = doc.at("endpoint").get<std::string>();
    const std::string role = doc.value("role", std::string("specialist"));
    if (role == "mediator") c.role = AgentRole::kMediator;
    else if (role == "specialist") c.role = AgentRole::kSpecialist;
    else if (role == "registry") c.role = AgentRole::kRegistry;
    else throw ConfigError("unknown role \"" + role + "\"");

    if (auto b = doc.find("backend"); b != doc.end()) c.backend = *b;
    if (auto r = doc.find("routes"); r != doc.end()) {
      for (const auto& route : *r) {
        Route out;
        out.url = route.at("url").get<std::string>();
        for (const auto& k : route.at("keywords")) out.keywords.push_back(k.get<std::string>());
        c.routes.push_back(std::move(out));
      }
    }
    if (auto m = doc.find("manifest"); m != doc.end()) c.manifest = manifest_field(*m, base_dir);
    if (auto ms = doc.find("manifests"); ms != doc.end()) {
      if (ms->is_string()) {
        c.manifests = load_manifest_array(resolve(base_dir, ms->get<std::string>()));
      } else {
        for (const auto& m : *ms) c.manifests.push_back(manifest_field(m, base_dir));
      }
    }
    if (auto p = doc.find("peers"); p != doc.end()) {
      for (const auto& peer : *p) c.peers.push_back(peer.get<std::string>());
    }
    c.discovery_registry = opt_string(doc, "registry");
    if (auto g = opt_string(doc, "greeting")) c.greeting = *g;
    c.welcome = opt_string(doc, "welcome");
    if (auto a = opt_string(doc, "apology")) c.apology = *a;
    c.max_delegation_depth = doc.value("maxDelegationDepth", 1);
    c.inactivity_timeout = millis_field(doc, "inactivityTimeoutSecs", c.inactivity_timeout);
    c.request_timeout = millis_field(doc, "requestTimeoutSecs", c.request_timeout);
    c.discovery.resend_period = millis_field(doc, "resendPeriodSecs", c.discovery.resend_period);
    c.discovery.request_timeout = c.request_timeout;
    c.discovery.max_resends = doc.value("maxResends", c.discovery.max_resends);
    c.discovery.max_referral_depth = doc.value("maxReferralDepth", c.discovery.max_referral_depth);
    c.emit_scores = doc.value("emitScores", false);
    if (auto t = opt_string(doc, "transcripts")) c.transcripts_dir = resolve(base_dir, *t);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("agent config: ") + e.what());
  } catch (const SchemaViolation& e) {
    throw ConfigError(std::string("agent manifest: ") + e.what());
  }
  if (c.name.empty() || c.endpoint.empty()) throw ConfigError("agent needs a name and an endpoint");
  return c;
}

AgentConfig load_agent_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  Json doc;
  try {
    doc = Json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return agent_config_from_json(doc, std::filesystem::path(path).parent_path().string());
}

void apply_env_overrides(AgentConfig& config) {
  if (const char* v = std::getenv("OVON_TIMEOUT_SECS"); v && *v) {
    char* end = nullptr;
    const double secs = std::strtod(v, &end);
    if (end == v || *end != '\0' || secs < 0) {
      throw ConfigError(std::string("OVON_TIMEOUT_SECS is not a number: ") + v);
    }
    config.inactivity_timeout = std::chrono::milliseconds(static_cast<long long>(secs * 1000));
  }
}

// Accumulates the events and status of one response envelope.
struct Agent::Turn {
  std::vector<EnvelopeEvent> events;
  ResponseCode code{200, "OK", Json::object()};
  std::string conv;
  std::string user_speaker;
};

Agent::Agent(AgentConfig config, std::shared_ptr<Transport> transport, TimestampFn now)
    : config_(std::move(config)), transport_(std::move(transport)), now_(std::move(now)) {
  backend_ = make_backend(config_.backend, config_.base_dir, config_.name);
  RegistryConfig rc;
  rc.endpoint = config_.endpoint;
  rc.self_manifest = config_.manifest;
  rc.peers = config_.peers;
  rc.emit_scores = config_.emit_scores;
  registry_ = std::make_unique<DiscoveryRegistry>(rc, now_);
  for (const auto& m : config_.manifests) registry_->register_manifest(m);
  if (config_.transcripts_dir) {
    transcripts_ = std::make_unique<TranscriptWriter>(*config_.transcripts_dir, config_.name);
    // Outbound traffic to delegates and registries lands in the same file.
    transport_ = std::make_shared<RecordingTransport>(
        transport_, [w = transcripts_.get()](const std::string& dir, const std::string& peer,
                                             const ConversationEnvelope& env) {
          w->append(dir, peer, env);
        });
  }
}

Agent::~Agent() = default;

EnvelopeEvent Agent::say(const std::string& text) const {
  return build_event(EventType::kUtterance, DialogPayload{make_dialog_event(config_.name, text)},
                     std::nullopt, now_);
}

fsm::ServingState Agent::serving_step(fsm::ServingState s, InputKind kind,
                                      const std::string& conv) {
  auto r = fsm::serving_step(s, fsm::input(kind));
  if (trace_) trace_(fsm::trace_line(conv, fsm::to_string(s), fsm::input(kind),
                                     fsm::to_string(r.state), r.action));
  return r.state;
}

fsm::DemandingState Agent::demanding_step(fsm::DemandingState s, InputKind kind,
                                          const std::string& conv) {
  auto r = fsm::demanding_step(s, fsm::input(kind));
  if (trace_) trace_(fsm::trace_line(conv, fsm::to_string(s), fsm::input(kind),
                                     fsm::to_string(r.state), r.action));
  return r.state;
}

ConversationEnvelope Agent::handle(const ConversationEnvelope& inbound) {
  if (transcripts_) transcripts_->append("in", inbound.sender_from, inbound);
  ConversationEnvelope out;
  try {
    out = respond(inbound);
  } catch (const std::exception& e) {
    out = ConversationEnvelope{};
    out.schema_version = inbound.schema_version;
    out.schema_url = inbound.schema_url;
    out.conversation_id = inbound.conversation_id;
    out.sender_from = config_.endpoint;
    out.sender_to = inbound.sender_from;
    out.response_code = ResponseCode{500, "Internal Error", Json::object()};
    out.events.push_back(build_event(
        EventType::kWhisper, DialogPayload{make_dialog_event(config_.name, e.what())},
        std::nullopt, now_));
  }
  if (transcripts_) transcripts_->append("out", inbound.sender_from, out);
  return out;
}

ConversationEnvelope Agent::discovery_reply(const ConversationEnvelope& inbound) {
  try {
    return registry_->handle_discovery_envelope(inbound);
  } catch (const UnsupportedEvent& e) {
    ConversationEnvelope out;
    out.schema_version = inbound.schema_version;
    out.schema_url = inbound.schema_url;
    out.conversation_id = inbound.conversation_id;
    out.sender_from = config_.endpoint;
    out.sender_to = inbound.sender_from;
    out.response_code = ResponseCode{501, "Not Implemented", Json::object()};
    out.events.push_back(build_event(
        EventType::kWhisper, DialogPayload{make_dialog_event(config_.name, e.what())},
        std::nullopt, now_));
    return out;
  }
}

ConversationEnvelope Agent::respond(const ConversationEnvelope& inbound) {
  if (is_discovery_request(inbound)) return discovery_reply(inbound);

  Turn turn;
  turn.conv = inbound.conversation_id;
  bool closed = false;
  sessions_.with_session(inbound.conversation_id, [&](AgentSession& s) {
    serve(s, inbound, turn);
    closed = s.closed;
  });
  if (closed) sessions_.erase(inbound.conversation_id);

  ConversationEnvelope out;
  out.schema_version = inbound.schema_version;
  out.schema_url = inbound.schema_url;
  out.conversation_id = inbound.conversation_id;
  out.sender_from = config_.endpoint;
  out.sender_to = inbound.sender_reply_to.value_or(inbound.sender_from);
  out.response_code = turn.code;
  out.events = std::move(turn.events);
  return out;
}

void Agent::serve(AgentSession& s, const ConversationEnvelope& inbound, Turn& turn) {
  const std::string& conv = inbound.conversation_id;
  auto fold = fsm::fold_serving(s.serving, inbound, trace_);
  s.serving = fold.state;

  if (fold.lookup) {
    const auto& lookup = *fold.lookup;
    turn.user_speaker = lookup.speaker_id;
    if (config_.role == AgentRole::kMediator) {
      mediate(s, lookup, turn);
      return;
    }
    auto result = run_backend(*backend_, s.history, lookup.current, lookup.whisper_context,
                              lookup.speaker_id);
    s.history.push_back({lookup.speaker_id, lookup.current, lookup.trigger});
    if (lookup.whisper_context) {
      s.history.push_back({lookup.speaker_id, *lookup.whisper_context, EventType::kWhisper});
    }
    if (auto* fail = std::get_if<BackendFailure>(&result)) {
      s.serving = serving_step(s.serving, InputKind::kLookupFailed, conv);
      turn.events.push_back(make_bye(make_dialog_event(config_.name, fail->reason, now_())));
      s.closed = true;
      return;
    }
    const auto& reply = std::get<BackendReply>(result);
    s.serving = serving_step(s.serving, InputKind::kLookupSucceeded, conv);
    if (!reply.text.empty()) {
      turn.events.push_back(say(reply.text));
      s.history.push_back({config_.name, reply.text, EventType::kUtterance});
    }
    s.serving = serving_step(s.serving, InputKind::kSentUtteranceOrWhisper, conv);
    if (reply.end_conversation) {
      turn.events.push_back(make_bye());
      s.closed = true;
    }
    return;
  }

  auto whisper = [&](const std::string& text) {
    turn.events.push_back(build_event(EventType::kWhisper,
                                      DialogPayload{make_dialog_event(config_.name, text)},
                                      std::nullopt, now_));
  };

  if (has_event(inbound, EventType::kBye)) {
    if (s.floor.delegate) {
      try {
        send_to(*s.floor.delegate, conv, {make_bye()});
      } catch (const TransportError&) {
        // The delegate is gone either way.
      }
      s.floor = {};
    }
    s.closed = true;
    whisper("bye acknowledged");
    return;
  }
  if (!fold.warnings.empty()) {
    std::string msg;
    for (const auto& w : fold.warnings) msg += (msg.empty() ? "" : "; ") + w.message;
    turn.code = ResponseCode{409, "Conflict", Json::object()};
    whisper(msg);
    return;
  }
  if (has_event(inbound, EventType::kInvite)) {
    if (config_.welcome) {
      turn.events.push_back(say(apply_template(*config_.welcome, inbound.sender_from)));
    } else {
      whisper("invite accepted");
    }
    return;
  }
  whisper("nothing to answer");
}

void Agent::mediate(AgentSession& s, const fsm::LookupRequest& lookup, Turn& turn) {
  const std::string& conv = turn.conv;
  if (s.floor.delegate) {
    std::vector<EnvelopeEvent> events{
        make_utterance(make_dialog_event(lookup.speaker_id, lookup.current, now_()))};
    if (lookup.whisper_context) {
      events.push_back(
          make_whisper(make_dialog_event(lookup.speaker_id, *lookup.whisper_context, now_())));
    }
    s.floor.demanding = demanding_step(s.floor.demanding, InputKind::kSentUtteranceOrWhisper, conv);
    s.serving = serving_step(s.serving, InputKind::kLookupSucceeded, conv);
    try {
      relay(s, send_to(*s.floor.delegate, conv, std::move(events)), turn);
    } catch (const TransportError& e) {
      lose_delegate(s, e.what(), turn);
    }
    s.serving = serving_step(s.serving, InputKind::kSentUtteranceOrWhisper, conv);
    return;
  }

  auto result = run_backend(*backend_, s.history, lookup.current, lookup.whisper_context,
                            lookup.speaker_id);
  s.history.push_back({lookup.speaker_id, lookup.current, lookup.trigger});
  if (auto* fail = std::get_if<BackendFailure>(&result)) {
    s.serving = serving_step(s.serving, InputKind::kLookupFailed, conv);
    turn.events.push_back(make_bye(make_dialog_event(config_.name, fail->reason, now_())));
    s.closed = true;
    return;
  }
  const auto& reply = std::get<BackendReply>(result);
  s.serving = serving_step(s.serving, InputKind::kLookupSucceeded, conv);
  if (!reply.text.empty()) {
    turn.events.push_back(say(reply.text));
    s.history.push_back({config_.name, reply.text, EventType::kUtterance});
  }
  if (reply.delegate) start_delegation(s, *reply.delegate, lookup, turn);
  s.serving = serving_step(s.serving, InputKind::kSentUtteranceOrWhisper, conv);
  if (reply.end_conversation) {
    turn.events.push_back(make_bye());
    s.closed = true;
  }
}

std::optional<std::string> Agent::route_for(const std::string& directive,
                                            const std::string& user_text) const {
  for (const auto& text : {directive, user_text}) {
    const auto words = words_of(text);
    for (const auto& route : config_.routes) {
      for (const auto& k : route.keywords) {
        if (contains_phrase(words, k)) return route.url;
      }
    }
  }
  return std::nullopt;
}

void Agent::start_delegation(AgentSession& s, const std::string& directive,
                             const fsm::LookupRequest& lookup, Turn& turn) {
  const std::string& conv = turn.conv;
  auto apologize = [&](const std::string& target, const std::string& why) {
    turn.events.push_back(say(replace_all(apply_template(config_.apology, lookup.speaker_id),
                                          "{delegate}", target)));
    turn.events.push_back(build_event(EventType::kWhisper,
                                      DialogPayload{make_dialog_event(config_.name, why)},
                                      std::nullopt, now_));
  };

  if (config_.max_delegation_depth < 1) {
    apologize(directive, "delegation disabled");
    return;
  }

  std::optional<std::string> url = route_for(directive, lookup.current);
  if (!url && config_.discovery_registry) {
    DiscoveryClient client(*transport_, config_.endpoint, config_.discovery, now_, trace_);
    try {
      auto outcome = client.find_assistants(*config_.discovery_registry, directive, conv,
                                            config_.name);
      if (outcome.candidates.empty()) {
        apologize(directive, "no assistant offers: " + directive);
        return;
      }
      url = outcome.candidates.front().url;
      client.request_manifest(*url, conv);
    } catch (const DiscoveryFailed& e) {
      apologize(url.value_or(directive), e.what());
      return;
    }
  }
  if (!url) {
    apologize(directive, "no route for: " + directive);
    return;
  }
  if (*url == config_.endpoint) {
    apologize(*url, "refusing to delegate to self");
    return;
  }

  s.floor.delegate = *url;
  s.floor.demanding = demanding_step(fsm::DemandingState::kIdle, InputKind::kSentInvite, conv);
  s.delegations.push_back(*url);
  turn.events.push_back(make_invite(*url));

  std::vector<EnvelopeEvent> events{
      make_invite(*url), make_utterance(make_dialog_event(lookup.speaker_id, lookup.current, now_()))};
  if (lookup.whisper_context) {
    events.push_back(
        make_whisper(make_dialog_event(lookup.speaker_id, *lookup.whisper_context, now_())));
  }
  s.floor.demanding = demanding_step(s.floor.demanding, InputKind::kSentUtteranceOrWhisper, conv);
  try {
    relay(s, send_to(*url, conv, std::move(events)), turn);
  } catch (const TransportError& e) {
    lose_delegate(s, e.what(), turn);
  }
}

void Agent::relay(AgentSession& s, const ConversationEnvelope& reply, Turn& turn) {
  auto fold = fsm::fold_demanding(s.floor.demanding, reply, trace_);
  s.floor.demanding = fold.state;
  for (const auto& e : reply.events) {
    if (e.event_type == EventType::kUtterance || e.event_type == EventType::kWhisper ||
        e.event_type == EventType::kBye) {
      EnvelopeEvent copy = e;
      copy.to.reset();
      turn.events.push_back(std::move(copy));
    }
  }
  if (fold.received_bye) {
    s.floor = {};
    turn.events.push_back(say(apply_template(config_.greeting, turn.user_speaker)));
  }
}

void Agent::lose_delegate(AgentSession& s, const std::string& why, Turn& turn) {
  const std::string target = s.floor.delegate.value_or("the assistant");
  s.floor = {};
  turn.events.push_back(
      say(replace_all(apply_template(config_.apology, turn.user_speaker), "{delegate}", target)));
  turn.events.push_back(build_event(EventType::kWhisper,
                                    DialogPayload{make_dialog_event(config_.name, why)},
                                    std::nullopt, now_));
}

ConversationEnvelope Agent::send_to(const std::string& url, const std::string& conv,
                                    std::vector<EnvelopeEvent> events) {
  ConversationEnvelope env;
  env.conversation_id = conv;
  env.sender_from = config_.endpoint;
  env.sender_to = url;
  env.events = std::move(events);
  return transport_->send(url, env, config_.request_timeout);
}

std::optional<AgentSession> Agent::session(const std::string& conversation_id) {
  if (!sessions_.contains(conversation_id)) return std::nullopt;
  return sessions_.with_session(conversation_id, [](AgentSession& s) { return s; });
}

size_t Agent::expire_idle(std::chrono::steady_clock::time_point now) {
  return sessions_.expire(now, config_.inactivity_timeout,
                          [&](const std::string& id, AgentSession& s) {
                            s.serving = serving_step(s.serving, InputKind::kInactivityTimeout, id);
                            if (s.floor.delegate) {
                              try {
                                send_to(*s.floor.delegate, id, {make_bye()});
                              } catch (const TransportError&) {
                              }
                            }
                          });
}

}  // namespace ovon
