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

#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <thread>

#include "ovon/server.hpp"
#include "test_util.hpp"

namespace ovon {
namespace {

using ovon::testing::fixed_clock;
using namespace std::chrono_literals;

ConversationEnvelope greeting(const std::string& to) {
  ConversationEnvelope env;
  env.conversation_id = "t1";
  env.sender_from = "https://client";
  env.events = {make_invite(to), make_utterance(make_dialog_event("Ann", "ping", fixed_clock()))};
  return env;
}

AgentConfig echo_config() {
  AgentConfig c;
  c.name = "Echo";
  c.endpoint = "https://echo";
  c.backend = "echo";
  return c;
}

TEST(Loopback, UnknownUrlIsConnectFailure) {
  LoopbackTransport t;
  try {
    t.send("https://nowhere", greeting("https://nowhere"), 100ms);
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.kind(), TransportError::Kind::kConnectFailure);
  }
}

TEST(Loopback, InvalidReplyIsReported) {
  LoopbackTransport t;
  t.bind("x", [](const ConversationEnvelope&) { return ConversationEnvelope{}; });
  try {
    t.send("x", greeting("x"), 100ms);
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.kind(), TransportError::Kind::kInvalidResponseEnvelope);
  }
}

TEST(Loopback, UnbindRemovesHandler) {
  LoopbackTransport t;
  Agent a(echo_config(), std::make_shared<LoopbackTransport>(), fixed_clock);
  t.bind("x", [&](const ConversationEnvelope& e) { return a.handle(e); });
  EXPECT_NO_THROW(t.send("x", greeting("x"), 100ms));
  t.unbind("x");
  EXPECT_THROW(t.send("x", greeting("x"), 100ms), TransportError);
}

TEST(HttpTransport, RewritesLongestPrefix) {
  HttpTransport t({{"https://a", "http://127.0.0.1:1"}, {"https://a/b", "http://127.0.0.1:2"}});
  EXPECT_EQ(t.resolve("https://a/x"), "http://127.0.0.1:1/x");
  EXPECT_EQ(t.resolve("https://a/b/c"), "http://127.0.0.1:2/c");
  EXPECT_EQ(t.resolve("https://other"), "https://other");
}

TEST(HttpTransport, HttpsIsUnsupported) {
  HttpTransport t;
  try {
    t.send("https://example.org", greeting("https://example.org"), 100ms);
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.kind(), TransportError::Kind::kConnectFailure);
  }
}

class ServerTest : public ::testing::Test {
 protected:
  void SetUp() override {
    agent = std::make_unique<Agent>(echo_config(), std::make_shared<LoopbackTransport>(), fixed_clock);
    console = std::filesystem::temp_directory_path() / ("ovon_console_" + std::to_string(::getpid()));
    std::filesystem::create_directories(console);
    std::ofstream(console / "index.html") << "<html>console</html>";
    ServerOptions opts;
    opts.console_dir = console.string();
    server = std::make_unique<AgentServer>(*agent, opts);
    server->start();
    base = "http://127.0.0.1:" + std::to_string(server->port());
  }
  void TearDown() override {
    server->stop();
    std::filesystem::remove_all(console);
  }

  std::unique_ptr<Agent> agent;
  std::unique_ptr<AgentServer> server;
  std::filesystem::path console;
  std::string base;
};

TEST_F(ServerTest, PostRoundTrip) {
  HttpTransport t;
  auto reply = t.send(base + "/", greeting(base), 2000ms);
  ASSERT_TRUE(reply.response_code);
  EXPECT_EQ(reply.response_code->code, 200);
  ASSERT_EQ(reply.events.size(), 1u);
  EXPECT_EQ(extract_text(*reply.events[0].dialog()), "ping");
}

TEST_F(ServerTest, EphemeralPortIsReal) { EXPECT_GT(server->port(), 0); }

TEST_F(ServerTest, MalformedBodiesGet400) {
  httplib::Client c(base);
  auto bad_json = c.Post("/", "{not json", "application/json");
  ASSERT_TRUE(bad_json);
  EXPECT_EQ(bad_json->status, 400);
  EXPECT_TRUE(Json::parse(bad_json->body).contains("error"));

  auto no_id = c.Post("/", R"({"ovon":{"schema":{"version":"0.9.2"},"conversation":{},"sender":{"from":"x"},"events":[]}})",
                      "application/json");
  ASSERT_TRUE(no_id);
  EXPECT_EQ(no_id->status, 400);
  auto body = Json::parse(no_id->body);
  bool found = false;
  for (const auto& v : body.at("violations")) found |= v.at("path") == "ovon.conversation.id";
  EXPECT_TRUE(found) << body.dump();
}

TEST_F(ServerTest, CorsAndConsole) {
  httplib::Client c(base);
  auto pre = c.Options("/");
  ASSERT_TRUE(pre);
  EXPECT_EQ(pre->get_header_value("Access-Control-Allow-Origin"), "*");
  auto page = c.Get("/console/index.html");
  ASSERT_TRUE(page);
  EXPECT_EQ(page->status, 200);
  EXPECT_EQ(page->body, "<html>console</html>");
}

TEST_F(ServerTest, ConnectFailureAfterStop) {
  server->stop();
  HttpTransport t;
  try {
    t.send(base + "/", greeting(base), 500ms);
    FAIL();
  } catch (const TransportError& e) {
    EXPECT_EQ(e.kind(), TransportError::Kind::kConnectFailure);
  }
}

TEST(HttpTransport, SlowPeerTimesOut) {
  httplib::Server slow;
  slow.Post("/", [](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(800ms);
    res.set_content("{}", "application/json");
  });
  int port = slow.bind_to_any_port("127.0.0.1");
  std::thread th([&] { slow.listen_after_bind(); });
  slow.wait_until_ready();
  HttpTransport t;
  try {
    t.send("http://127.0.0.1:" + std::to_string(port) + "/", greeting("x"), 200ms);
    ADD_FAILURE() << "expected timeout";
  } catch (const TransportError& e) {
    EXPECT_EQ(e.kind(), TransportError::Kind::kTimeout);
  }
  slow.stop();
  th.join();
}

TEST(AgentServer, BindFailureOnBusyPort) {
  Agent a(echo_config(), std::make_shared<LoopbackTransport>(), fixed_clock);
  AgentServer first(a);
  first.start();
  ServerOptions o;
  o.port = first.port();
  AgentServer second(a, o);
  EXPECT_THROW(second.start(), BindFailure);
}

TEST(AgentServer, ReaperExpiresIdleSessions) {
  auto cfg = echo_config();
  cfg.inactivity_timeout = 50ms;
  Agent a(cfg, std::make_shared<LoopbackTransport>(), fixed_clock);
  ServerOptions o;
  o.reap_interval = 20ms;
  AgentServer s(a, o);
  s.start();
  a.handle(greeting("https://echo"));
  EXPECT_EQ(a.session_count(), 1u);
  for (int i = 0; i < 100 && a.session_count() > 0; ++i) std::this_thread::sleep_for(10ms);
  EXPECT_EQ(a.session_count(), 0u);
}

TEST(SessionStore, SerializesOneConversation) {
  SessionStore<int> store;
  std::atomic<int> inside{0};
  std::atomic<bool> overlap{false};
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 200; ++i) {
        store.with_session("c", [&](int& n) {
          if (inside.fetch_add(1) != 0) overlap = true;
          ++n;
          inside.fetch_sub(1);
        });
      }
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_FALSE(overlap);
  EXPECT_EQ(store.with_session("c", [](int& n) { return n; }), 1600);
}

TEST(SessionStore, ConversationsRunInParallel) {
  SessionStore<int> store;
  std::atomic<bool> a_inside{false};
  std::atomic<bool> saw_parallel{false};
  std::thread ta([&] {
    store.with_session("a", [&](int&) {
      a_inside = true;
      std::this_thread::sleep_for(200ms);
      a_inside = false;
    });
  });
  while (!a_inside) std::this_thread::yield();
  store.with_session("b", [&](int&) { saw_parallel = a_inside.load(); });
  ta.join();
  EXPECT_TRUE(saw_parallel);
}

TEST(Transcript, SanitizesIds) {
  EXPECT_EQ(sanitize_id("conv_123"), "conv_123");
  EXPECT_EQ(sanitize_id("../etc/passwd"), ".._etc_passwd");
  EXPECT_EQ(sanitize_id(".."), "_..");
  EXPECT_EQ(sanitize_id(""), "_");
}

}  // namespace
}  // namespace ovon
