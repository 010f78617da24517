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

#include "ovon/server.hpp"

#include <httplib.h>

namespace ovon {

namespace {

void allow_cors(httplib::Response& res) {
  res.set_header("Access-Control-Allow-Origin", "*");
  res.set_header("Access-Control-Allow-Methods", "POST, GET, OPTIONS");
  res.set_header("Access-Control-Allow-Headers", "Content-Type");
}

}  // namespace

Json error_body(const std::exception& e) {
  Json body = Json::object();
  body["error"] = e.what();
  body["violations"] = Json::array();
  const std::vector<Violation>* list = nullptr;
  if (const auto* sv = dynamic_cast<const SchemaViolation*>(&e)) list = &sv->violations();
  if (list) {
    for (const auto& v : *list) body["violations"].push_back({{"path", v.path}, {"message", v.message}});
  }
  return body;
}

AgentServer::AgentServer(Agent& agent, ServerOptions options)
    : AgentServer(Hooks{[&agent](const ConversationEnvelope& e) { return agent.handle(e); },
                        [&agent] { agent.expire_idle(); }},
                  std::move(options)) {}

AgentServer::AgentServer(Hooks hooks, ServerOptions options)
    : hooks_(std::move(hooks)),
      options_(std::move(options)),
      server_(std::make_unique<httplib::Server>()) {}

AgentServer::~AgentServer() { stop(); }

int AgentServer::bind() {
  if (port_ > 0) return port_;
  // No SO_REUSEPORT: a second server on a busy port must fail to bind.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  server_->Options(".*", [](const httplib::Request&, httplib::Response& res) {
    allow_cors(res);
    res.status = 204;
  });
  server_->Post("/", [this](const httplib::Request& req, httplib::Response& res) {
    allow_cors(res);
    ConversationEnvelope inbound;
    try {
      inbound = parse_envelope(req.body);
    } catch (const Error& e) {
      res.status = 400;
      res.set_content(error_body(e).dump(), "application/json");
      return;
    }
    res.set_content(serialize_envelope(hooks_.handle(inbound)), "application/json");
  });
  if (options_.console_dir) {
    if (!server_->set_mount_point("/console", *options_.console_dir)) {
      throw BindFailure("console directory not found: " + *options_.console_dir);
    }
  }

  if (options_.port == 0) {
    port_ = server_->bind_to_any_port(options_.host);
    if (port_ < 0) throw BindFailure("cannot bind " + options_.host);
  } else {
    if (!server_->bind_to_port(options_.host, options_.port)) {
      throw BindFailure("cannot bind " + options_.host + ":" + std::to_string(options_.port));
    }
    port_ = options_.port;
  }
  return port_;
}

void AgentServer::start() {
  bind();
  listener_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();

  reaper_ = std::thread([this] {
    std::unique_lock lock(mu_);
    while (!cv_.wait_for(lock, options_.reap_interval, [this] { return stopping_; })) {
      lock.unlock();
      if (hooks_.reap) hooks_.reap();
      lock.lock();
    }
  });
}

void AgentServer::stop() {
  {
    std::lock_guard lock(mu_);
    if (stopping_) return;
    stopping_ = true;
  }
  cv_.notify_all();
  server_->stop();
  if (listener_.joinable()) listener_.join();
  if (reaper_.joinable()) reaper_.join();
}

void AgentServer::wait() {
  std::unique_lock lock(mu_);
  cv_.wait(lock, [this] { return stopping_; });
}

}  // namespace ovon
