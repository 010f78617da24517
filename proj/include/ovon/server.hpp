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

#include <atomic>
#include <condition_variable>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "ovon/agent.hpp"

namespace httplib {
class Server;
}

namespace ovon {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 0;  // 0 picks a free port
  std::optional<std::string> console_dir;  // served under /console when set
  std::chrono::milliseconds reap_interval{1000};
};

// Serves one agent: POST / takes an envelope and answers with one.
// Malformed bodies get HTTP 400 with {"error", "violations"}.
class AgentServer {
 public:
  struct Hooks {
    std::function<ConversationEnvelope(const ConversationEnvelope&)> handle;
    std::function<void()> reap;  // called every reap_interval
  };

  AgentServer(Agent& agent, ServerOptions options = {});
  AgentServer(Hooks hooks, ServerOptions options = {});
  ~AgentServer();

  AgentServer(const AgentServer&) = delete;
  AgentServer& operator=(const AgentServer&) = delete;

  // Binds without serving yet; returns the port. Throws BindFailure.
  int bind();
  // Binds if needed and serves in the background. Throws BindFailure.
  void start();
  void stop();
  int port() const { return port_; }

  // Blocks until stop() is called from another thread.
  void wait();

 private:
  Hooks hooks_;
  ServerOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::thread listener_;
  std::thread reaper_;
  std::mutex mu_;
  std::condition_variable cv_;
  bool stopping_ = false;
  int port_ = 0;
};

// Body for a POST / that could not be decoded.
Json error_body(const std::exception& e);

}  // namespace ovon
