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

#include "ovon/ovon.h"

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <memory>
#include <stdexcept>
#include <string>

#include "ovon/agent.hpp"
#include "ovon/scenario.hpp"
#include "ovon/server.hpp"

struct ovon_envelope {
  ovon::ConversationEnvelope env;
};

struct ovon_agent {
  std::unique_ptr<ovon::Agent> agent;
  std::unique_ptr<ovon::AgentServer> server;
};

namespace {

thread_local std::string g_last_error;

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

ovon_status fail(ovon_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

// Runs `f`, translating exceptions into status codes.
template <typename F>
ovon_status guarded(F&& f) {
  using namespace ovon;
  try {
    f();
    g_last_error.clear();
    return OVON_OK;
  } catch (const SchemaViolation& e) {
    return fail(OVON_ERR_SCHEMA, e.what());
  } catch (const ValidationFailed& e) {
    return fail(OVON_ERR_VALIDATION, e.what());
  } catch (const InvalidManifest& e) {
    return fail(OVON_ERR_INVALID_MANIFEST, e.what());
  } catch (const SyntaxError& e) {
    return fail(OVON_ERR_SYNTAX, e.what());
  } catch (const UnsupportedEvent& e) {
    return fail(OVON_ERR_UNSUPPORTED_EVENT, e.what());
  } catch (const TransportError& e) {
    switch (e.kind()) {
      case TransportError::Kind::kTimeout: return fail(OVON_ERR_TIMEOUT, e.what());
      case TransportError::Kind::kConnectFailure: return fail(OVON_ERR_CONNECT, e.what());
      case TransportError::Kind::kInvalidResponseEnvelope:
        return fail(OVON_ERR_INVALID_RESPONSE, e.what());
    }
    return fail(OVON_ERR_INTERNAL, e.what());
  } catch (const BindFailure& e) {
    return fail(OVON_ERR_BIND, e.what());
  } catch (const ConfigError& e) {
    return fail(OVON_ERR_CONFIG, e.what());
  } catch (const IoFailure& e) {
    return fail(OVON_ERR_IO, e.what());
  } catch (const DiscoveryFailed& e) {
    return fail(OVON_ERR_DISCOVERY, e.what());
  } catch (const ScenarioSetupFailure& e) {
    return fail(OVON_ERR_SCENARIO_SETUP, e.what());
  } catch (const MissingTextFeature& e) {
    return fail(OVON_ERR_INVALID_ARGUMENT, e.what());
  } catch (const PayloadMismatch& e) {
    return fail(OVON_ERR_INVALID_ARGUMENT, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(OVON_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::invalid_argument& e) {
    return fail(OVON_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(OVON_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(OVON_ERR_INTERNAL, "unknown error");
  }
}

std::string or_default(const char* s, const char* fallback) {
  return s && *s ? std::string(s) : std::string(fallback);
}

std::chrono::milliseconds timeout_of(long ms) {
  return std::chrono::milliseconds(ms > 0 ? ms : 10000);
}

std::string generated_conversation_id() {
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::system_clock::now().time_since_epoch())
                      .count();
  return "conv_" + std::to_string(ms);
}

ovon::Json violations_json(const std::vector<ovon::Violation>& list) {
  ovon::Json out = ovon::Json::array();
  for (const auto& v : list) out.push_back({{"path", v.path}, {"message", v.message}});
  return out;
}

template <typename Parse>
ovon_status validate_text(const char* json, char** report, Parse&& parse) {
  if (!json || !report) return fail(OVON_ERR_INVALID_ARGUMENT, "null argument");
  ovon::Json r = {{"valid", false}};
  ovon_status st = guarded([&] { parse(json); });
  if (st == OVON_OK) {
    r["valid"] = true;
    r["violations"] = ovon::Json::array();
  } else {
    r["error"] = g_last_error;
    try {
      parse(json);
    } catch (const ovon::SchemaViolation& e) {
      r["violations"] = violations_json(e.violations());
    } catch (const ovon::InvalidManifest& e) {
      r["violations"] = violations_json(e.violations());
    } catch (...) {
      r["violations"] = ovon::Json::array();
    }
  }
  const std::string saved = g_last_error;
  ovon_status dst = guarded([&] { *report = dup(r.dump()); });
  if (dst != OVON_OK) return dst;
  g_last_error = saved;
  return st;
}

}  // namespace

extern "C" {

const char* ovon_status_string(ovon_status status) {
  switch (status) {
    case OVON_OK: return "ok";
    case OVON_ERR_INVALID_ARGUMENT: return "invalid argument";
    case OVON_ERR_SYNTAX: return "syntax error";
    case OVON_ERR_SCHEMA: return "schema violation";
    case OVON_ERR_VALIDATION: return "validation failed";
    case OVON_ERR_INVALID_MANIFEST: return "invalid manifest";
    case OVON_ERR_UNSUPPORTED_EVENT: return "unsupported event";
    case OVON_ERR_TIMEOUT: return "timeout";
    case OVON_ERR_CONNECT: return "connect failure";
    case OVON_ERR_INVALID_RESPONSE: return "invalid response envelope";
    case OVON_ERR_BIND: return "bind failure";
    case OVON_ERR_CONFIG: return "configuration error";
    case OVON_ERR_IO: return "i/o failure";
    case OVON_ERR_DISCOVERY: return "discovery failed";
    case OVON_ERR_SCENARIO_SETUP: return "scenario setup failure";
    case OVON_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* ovon_last_error(void) { return g_last_error.c_str(); }

const char* ovon_version(void) { return ovon::kSchemaVersion.data(); }

void ovon_string_free(char* s) { std::free(s); }

ovon_status ovon_envelope_parse(const char* json, ovon_envelope** out) {
  if (!json || !out) return fail(OVON_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] { *out = new ovon_envelope{ovon::parse_envelope(json)}; });
}

void ovon_envelope_free(ovon_envelope* env) { delete env; }

ovon_status ovon_envelope_serialize(const ovon_envelope* env, int indent, char** out) {
  if (!env || !out) return fail(OVON_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = dup(ovon::serialize_envelope(env->env, indent)); });
}

ovon_status ovon_envelope_conversation_id(const ovon_envelope* env, char** out) {
  if (!env || !out) return fail(OVON_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] { *out = dup(env->env.conversation_id); });
}

size_t ovon_envelope_event_count(const ovon_envelope* env) {
  return env ? env->env.events.size() : 0;
}

const char* ovon_envelope_event_type(const ovon_envelope* env, size_t index) {
  if (!env || index >= env->env.events.size()) return nullptr;
  return ovon::to_string(env->env.events[index].event_type).data();
}

ovon_status ovon_envelope_validate_text(const char* json, char** report) {
  return validate_text(json, report, [](const char* j) { ovon::parse_envelope(j); });
}

ovon_status ovon_manifest_validate_text(const char* json, char** report) {
  return validate_text(json, report, [](const char* j) {
    ovon::AssistantManifest m;
    try {
      m = ovon::parse_manifest(j);
    } catch (const ovon::SchemaViolation& e) {
      throw ovon::InvalidManifest(e.violations());
    }
    if (auto v = ovon::validate_manifest(m); !v.empty()) throw ovon::InvalidManifest(std::move(v));
  });
}

ovon_status ovon_send(const ovon_send_options* o, char** response_json) {
  if (!o || !o->url || !response_json) return fail(OVON_ERR_INVALID_ARGUMENT, "url and output are required");
  return guarded([&] {
    using namespace ovon;
    ConversationEnvelope env;
    env.conversation_id = o->conversation_id && *o->conversation_id ? o->conversation_id
                                                                   : generated_conversation_id();
    env.sender_from = or_default(o->from, "urn:ovon:cli");
    env.sender_to = o->url;
    const std::string kind = or_default(o->kind, "utterance");
    const std::string speaker = or_default(o->speaker_id, "cli-user");
    if (o->with_invite && kind != "invite") env.events.push_back(make_invite(o->url));
    if (kind == "invite") {
      env.events.push_back(make_invite(o->url));
    } else if (kind == "bye") {
      env.events.push_back(make_bye());
    } else if (kind == "utterance" || kind == "whisper") {
      if (!o->text || !*o->text) throw std::invalid_argument(kind + " needs text");
      auto d = make_dialog_event(speaker, o->text, utc_now_iso8601());
      env.events.push_back(kind == "utterance" ? make_utterance(d) : make_whisper(d));
    } else {
      throw ConfigError("unknown event kind \"" + kind + "\"");
    }
    HttpTransport t;
    *response_json = dup(serialize_envelope(t.send(o->url, env, timeout_of(o->timeout_ms))));
  });
}

ovon_status ovon_send_envelope(const char* url, const char* envelope_json, long timeout_ms,
                               char** response_json) {
  if (!url || !envelope_json || !response_json) return fail(OVON_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    ovon::HttpTransport t;
    auto env = ovon::parse_envelope(envelope_json);
    *response_json = dup(ovon::serialize_envelope(t.send(url, env, timeout_of(timeout_ms))));
  });
}

ovon_status ovon_discover(const char* registry_url, const char* query, const char* from,
                          long timeout_ms, char** result_json) {
  if (!registry_url || !query || !result_json) return fail(OVON_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    using namespace ovon;
    HttpTransport t;
    DiscoveryOptions opts;
    opts.request_timeout = timeout_of(timeout_ms);
    DiscoveryClient client(t, or_default(from, "urn:ovon:cli"), opts);
    auto outcome = client.find_assistants(registry_url, query, generated_conversation_id(), "cli-user");
    Json j = {{"candidates", Json::array()}, {"visited", outcome.visited}};
    for (const auto& c : outcome.candidates) {
      Json cj = {{"conversationalName", c.conversational_name},
                 {"url", c.url},
                 {"servicingMode", std::string(to_string(c.servicing_mode))}};
      if (c.score) cj["score"] = *c.score;
      j["candidates"].push_back(cj);
    }
    *result_json = dup(j.dump());
  });
}

ovon_status ovon_request_manifest(const char* url, const char* from, long timeout_ms,
                                  char** manifest_json) {
  if (!url || !manifest_json) return fail(OVON_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    using namespace ovon;
    HttpTransport t;
    DiscoveryOptions opts;
    opts.request_timeout = timeout_of(timeout_ms);
    DiscoveryClient client(t, or_default(from, "urn:ovon:cli"), opts);
    *manifest_json = dup(manifest_to_json(client.request_manifest(url, generated_conversation_id())).dump());
  });
}

ovon_status ovon_agent_start(const ovon_agent_options* o, ovon_agent** out) {
  if (!o || !out) return fail(OVON_ERR_INVALID_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    using namespace ovon;
    Json doc = Json::object();
    std::string base_dir;
    if (o->config_path && *o->config_path) {
      auto loaded = load_agent_config(o->config_path);  // validates the file
      (void)loaded;
      std::ifstream in(o->config_path);
      std::stringstream ss;
      ss << in.rdbuf();
      doc = Json::parse(ss.str());
      base_dir = std::filesystem::path(o->config_path).parent_path().string();
    }
    if (o->name) doc["name"] = o->name;
    if (o->role) doc["role"] = o->role;
    if (o->backend) doc["backend"] = o->backend;
    if (o->manifest_path) doc["manifest"] = std::filesystem::absolute(o->manifest_path).string();
    if (o->manifests_path) doc["manifests"] = std::filesystem::absolute(o->manifests_path).string();
    if (o->routes_json) doc["routes"] = Json::parse(o->routes_json);
    if (o->transcripts_dir) doc["transcripts"] = std::filesystem::absolute(o->transcripts_dir).string();
    if (o->timeout_secs > 0) doc["inactivityTimeoutSecs"] = o->timeout_secs;
    if (!doc.contains("name")) doc["name"] = "agent";

    ServerOptions so;
    so.host = or_default(o->host, "127.0.0.1");
    so.port = o->port;
    if (o->console_dir) so.console_dir = o->console_dir;

    std::map<std::string, std::string> rewrites;
    if (o->rewrites_json) {
      const Json parsed = Json::parse(o->rewrites_json);
      for (const auto& [k, v] : parsed.items()) rewrites[k] = v.get<std::string>();
    }

    auto handle = std::make_unique<ovon_agent>();
    ovon_agent* raw = handle.get();
    handle->server = std::make_unique<AgentServer>(
        AgentServer::Hooks{[raw](const ConversationEnvelope& e) { return raw->agent->handle(e); },
                           [raw] { raw->agent->expire_idle(); }},
        so);
    // Bind first: a derived endpoint needs the real port.
    const int port = handle->server->bind();
    if (o->endpoint) doc["endpoint"] = o->endpoint;
    if (!doc.contains("endpoint")) doc["endpoint"] = "http://" + so.host + ":" + std::to_string(port) + "/";
    AgentConfig cfg = agent_config_from_json(doc, base_dir);
    apply_env_overrides(cfg);
    if (o->timeout_secs > 0) {
      cfg.inactivity_timeout = std::chrono::milliseconds(static_cast<long long>(o->timeout_secs * 1000));
    }
    handle->agent = std::make_unique<Agent>(cfg, std::make_shared<HttpTransport>(rewrites));
    handle->server->start();
    *out = handle.release();
  });
}

int ovon_agent_port(const ovon_agent* agent) {
  return agent && agent->server ? agent->server->port() : -1;
}

const char* ovon_agent_endpoint(const ovon_agent* agent) {
  return agent && agent->agent ? agent->agent->config().endpoint.c_str() : nullptr;
}

ovon_status ovon_agent_handle(ovon_agent* agent, const char* envelope_json, char** response_json) {
  if (!agent || !envelope_json || !response_json) return fail(OVON_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    auto reply = agent->agent->handle(ovon::parse_envelope(envelope_json));
    *response_json = dup(ovon::serialize_envelope(reply));
  });
}

void ovon_agent_stop(ovon_agent* agent) {
  if (agent && agent->server) agent->server->stop();
}

void ovon_agent_free(ovon_agent* agent) {
  if (!agent) return;
  ovon_agent_stop(agent);
  delete agent;
}

ovon_status ovon_scenario_run(const char* path, const char* freeze_time, char** report_json,
                              char** report_text, char** transcript_jsonl, int* passed) {
  if (!path) return fail(OVON_ERR_INVALID_ARGUMENT, "null path");
  return guarded([&] {
    ovon::RunOptions opts;
    if (freeze_time && *freeze_time) opts.freeze_time = freeze_time;
    auto report = ovon::run_scenario(ovon::load_scenario(path), opts);
    if (report_json) *report_json = dup(ovon::report_to_json(report).dump(2));
    if (report_text) *report_text = dup(ovon::format_report(report));
    if (transcript_jsonl) *transcript_jsonl = dup(ovon::transcript_to_jsonl(report.transcript));
    if (passed) *passed = report.passed() ? 1 : 0;
  });
}

ovon_status ovon_diagram_export(const char* transcript_jsonl, char** plantuml) {
  if (!transcript_jsonl || !plantuml) return fail(OVON_ERR_INVALID_ARGUMENT, "null argument");
  return guarded([&] {
    *plantuml = dup(ovon::export_sequence_diagram(ovon::parse_transcript(transcript_jsonl)));
  });
}

}  // extern "C"
