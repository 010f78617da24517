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

#include "ovon/transport.hpp"

#include <httplib.h>

#include <filesystem>
#include <fstream>

namespace ovon {

namespace {

ConversationEnvelope parse_response(const std::string& body, const std::string& url) {
  try {
    return parse_envelope(body);
  } catch (const Error& e) {
    throw TransportError(TransportError::Kind::kInvalidResponseEnvelope,
                         url + " answered with an invalid envelope: " + e.what());
  }
}

}  // namespace

void LoopbackTransport::bind(const std::string& url, EnvelopeHandler handler) {
  std::unique_lock lock(mu_);
  handlers_[url] = std::move(handler);
}

void LoopbackTransport::unbind(const std::string& url) {
  std::unique_lock lock(mu_);
  handlers_.erase(url);
}

ConversationEnvelope LoopbackTransport::send(const std::string& url,
                                             const ConversationEnvelope& env, Millis) {
  EnvelopeHandler handler;
  {
    std::shared_lock lock(mu_);
    auto it = handlers_.find(url);
    if (it == handlers_.end()) {
      throw TransportError(TransportError::Kind::kConnectFailure, "no agent at " + url);
    }
    handler = it->second;
  }
  const ConversationEnvelope request = parse_envelope(serialize_envelope(env));
  std::string reply;
  try {
    reply = serialize_envelope(handler(request));
  } catch (const ValidationFailed& e) {
    throw TransportError(TransportError::Kind::kInvalidResponseEnvelope,
                         url + " produced an invalid envelope: " + e.what());
  }
  return parse_response(reply, url);
}

HttpTransport::HttpTransport(std::map<std::string, std::string> rewrites)
    : rewrites_(std::move(rewrites)) {}

std::string HttpTransport::resolve(const std::string& url) const {
  // Longest matching prefix wins.
  const std::pair<const std::string, std::string>* best = nullptr;
  for (const auto& kv : rewrites_) {
    if (url.starts_with(kv.first) && (!best || kv.first.size() > best->first.size())) best = &kv;
  }
  if (!best) return url;
  return best->second + url.substr(best->first.size());
}

ConversationEnvelope HttpTransport::send(const std::string& url, const ConversationEnvelope& env,
                                         Millis timeout) {
  const std::string target = resolve(url);
  if (!target.starts_with("http://")) {
    throw TransportError(TransportError::Kind::kConnectFailure,
                         "unsupported URL scheme: " + target);
  }
  const auto rest = target.substr(7);
  const auto slash = rest.find('/');
  const std::string host = rest.substr(0, slash);
  const std::string path = slash == std::string::npos ? "/" : rest.substr(slash);

  httplib::Client client("http://" + host);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  auto res = client.Post(path, serialize_envelope(env), "application/json");
  if (!res) {
    const auto err = res.error();
    const bool timed_out = err == httplib::Error::Read || err == httplib::Error::Write ||
                           err == httplib::Error::ConnectionTimeout;
    throw TransportError(timed_out ? TransportError::Kind::kTimeout
                                   : TransportError::Kind::kConnectFailure,
                         target + ": " + httplib::to_string(err));
  }
  if (res->status != 200) {
    throw TransportError(TransportError::Kind::kInvalidResponseEnvelope,
                         target + " returned HTTP " + std::to_string(res->status) + ": " +
                             res->body);
  }
  return parse_response(res->body, target);
}

std::string sanitize_id(std::string_view id) {
  std::string out;
  for (char c : id) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
    out.push_back(ok ? c : '_');
  }
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

TranscriptWriter::TranscriptWriter(std::string dir, std::string agent)
    : dir_(std::move(dir)), agent_(std::move(agent)) {}

std::string TranscriptWriter::path_for(const std::string& conversation_id) const {
  return (std::filesystem::path(dir_) / (sanitize_id(conversation_id) + ".jsonl")).string();
}

void TranscriptWriter::append(const std::string& direction, const std::string& peer,
                              const ConversationEnvelope& env) {
  Json line = Json::object();
  line["direction"] = direction;
  line["peer"] = peer;
  line["envelope"] = envelope_to_json(env);
  line["wall_time"] = utc_now_iso8601();
  if (!agent_.empty()) line["agent"] = agent_;
  const std::string text = line.dump();

  std::lock_guard lock(mu_);
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  std::ofstream out(path_for(env.conversation_id), std::ios::app);
  if (!out) throw IoFailure("cannot write transcript in " + dir_);
  out << text << '\n';
}

RecordingTransport::RecordingTransport(std::shared_ptr<Transport> inner, Observer observer)
    : inner_(std::move(inner)), observer_(std::move(observer)) {}

ConversationEnvelope RecordingTransport::send(const std::string& url,
                                              const ConversationEnvelope& env, Millis timeout) {
  observer_("out", url, env);
  auto reply = inner_->send(url, env, timeout);
  observer_("in", url, reply);
  return reply;
}

}  // namespace ovon
