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

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include "ovon/envelope.hpp"

namespace ovon {

using Millis = std::chrono::milliseconds;

// Sends one envelope and returns the peer's response envelope.
// Throws TransportError.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual ConversationEnvelope send(const std::string& url, const ConversationEnvelope& env,
                                    Millis timeout) = 0;
};

using EnvelopeHandler = std::function<ConversationEnvelope(const ConversationEnvelope&)>;

// In-process delivery. Envelopes are serialized and re-parsed in both
// directions so loopback traffic obeys the same codec rules as HTTP.
class LoopbackTransport final : public Transport {
 public:
  void bind(const std::string& url, EnvelopeHandler handler);
  void unbind(const std::string& url);
  ConversationEnvelope send(const std::string& url, const ConversationEnvelope& env,
                            Millis timeout) override;

 private:
  std::shared_mutex mu_;
  std::map<std::string, EnvelopeHandler> handlers_;
};

// POSTs to the URL (http:// only). `rewrites` maps a URL prefix to a
// replacement, e.g. a public https endpoint to a local port.
class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(std::map<std::string, std::string> rewrites = {});
  ConversationEnvelope send(const std::string& url, const ConversationEnvelope& env,
                            Millis timeout) override;
  std::string resolve(const std::string& url) const;

 private:
  std::map<std::string, std::string> rewrites_;
};

// One JSONL file per conversation under `dir`. Files appear on first write.
class TranscriptWriter {
 public:
  explicit TranscriptWriter(std::string dir, std::string agent = {});

  // direction is "in" or "out"; peer is the other side's address.
  void append(const std::string& direction, const std::string& peer,
              const ConversationEnvelope& env);
  std::string path_for(const std::string& conversation_id) const;

 private:
  std::string dir_;
  std::string agent_;
  std::mutex mu_;
};

// File-name-safe form of a conversation id.
std::string sanitize_id(std::string_view id);

// Wraps another transport and records requests and responses.
class RecordingTransport final : public Transport {
 public:
  using Observer = std::function<void(const std::string& direction, const std::string& peer,
                                      const ConversationEnvelope& env)>;
  RecordingTransport(std::shared_ptr<Transport> inner, Observer observer);
  ConversationEnvelope send(const std::string& url, const ConversationEnvelope& env,
                            Millis timeout) override;

 private:
  std::shared_ptr<Transport> inner_;
  Observer observer_;
};

// Per-conversation state guarded by a per-conversation mutex. Different
// conversations proceed in parallel; one conversation is strictly serial.
template <typename Session>
class SessionStore {
 public:
  using Clock = std::chrono::steady_clock;

  template <typename F>
  auto with_session(const std::string& id, F&& f) {
    std::shared_ptr<Slot> slot;
    {
      std::lock_guard lock(mu_);
      auto& s = slots_[id];
      if (!s) s = std::make_shared<Slot>();
      slot = s;
    }
    std::lock_guard lock(slot->mu);
    slot->last_activity = Clock::now();
    return f(slot->session);
  }

  // Runs `on_expire` for sessions idle longer than `idle` and drops them.
  // Busy sessions are skipped.
  template <typename F>
  size_t expire(Clock::time_point now, Clock::duration idle, F&& on_expire) {
    std::vector<std::pair<std::string, std::shared_ptr<Slot>>> victims;
    {
      std::lock_guard lock(mu_);
      for (auto& [id, slot] : slots_) victims.emplace_back(id, slot);
    }
    size_t n = 0;
    for (auto& [id, slot] : victims) {
      std::unique_lock lock(slot->mu, std::try_to_lock);
      if (!lock.owns_lock() || now - slot->last_activity < idle) continue;
      on_expire(id, slot->session);
      std::lock_guard g(mu_);
      if (auto it = slots_.find(id); it != slots_.end() && it->second == slot) slots_.erase(it);
      ++n;
    }
    return n;
  }

  void erase(const std::string& id) {
    std::lock_guard lock(mu_);
    slots_.erase(id);
  }

  bool contains(const std::string& id) const {
    std::lock_guard lock(mu_);
    return slots_.count(id) > 0;
  }

  size_t size() const {
    std::lock_guard lock(mu_);
    return slots_.size();
  }

 private:
  struct Slot {
    std::mutex mu;
    Session session{};
    Clock::time_point last_activity = Clock::now();
  };
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Slot>> slots_;
};

}  // namespace ovon
