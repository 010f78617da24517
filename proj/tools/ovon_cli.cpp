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

// Command-line front end. Talks to the library only through ovon.h.

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ovon/ovon.h"

namespace {

using nlohmann::ordered_json;

constexpr int kOperationalFailure = 1;
constexpr int kUsageError = 2;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

std::string take(char* s) {
  std::string out = s ? s : "";
  ovon_string_free(s);
  return out;
}

// Reads a file, or stdin for "-".
std::optional<std::string> slurp(const std::string& path) {
  if (path == "-") {
    return std::string(std::istreambuf_iterator<char>(std::cin), {});
  }
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int report_error(ovon_status st, bool as_json) {
  if (as_json) {
    std::cout << ordered_json{{"ok", false},
                              {"status", ovon_status_string(st)},
                              {"error", ovon_last_error()}}
                     .dump(2)
              << "\n";
  } else {
    std::cerr << "error: " << ovon_status_string(st) << ": " << ovon_last_error() << "\n";
  }
  return st == OVON_ERR_INVALID_ARGUMENT ? kUsageError : kOperationalFailure;
}

std::string pretty(const std::string& json_text) {
  try {
    return ordered_json::parse(json_text).dump(2);
  } catch (const std::exception&) {
    return json_text;
  }
}

std::string safe_name(const std::string& id) {
  std::string out;
  for (char c : id) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.' ? c : '_');
  if (out.empty() || out == "." || out == "..") out = "_" + out;
  return out;
}

bool write_file(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path);
  if (!out) return false;
  out << text;
  return static_cast<bool>(out);
}

struct ValidateArgs {
  std::string path;
  bool manifest = false;
  bool json = false;
};

int run_validate(const ValidateArgs& a) {
  auto text = slurp(a.path);
  if (!text) {
    std::cerr << "error: cannot read " << a.path << "\n";
    return kOperationalFailure;
  }
  char* report = nullptr;
  const ovon_status st = a.manifest ? ovon_manifest_validate_text(text->c_str(), &report)
                                    : ovon_envelope_validate_text(text->c_str(), &report);
  const auto r = ordered_json::parse(take(report));
  if (a.json) {
    std::cout << r.dump(2) << "\n";
  } else if (st == OVON_OK) {
    std::cout << "valid\n";
  } else {
    std::cout << "invalid: " << r.value("error", std::string()) << "\n";
    for (const auto& v : r["violations"]) {
      std::cout << "  " << v["path"].get<std::string>() << ": " << v["message"].get<std::string>() << "\n";
    }
  }
  return st == OVON_OK ? 0 : kOperationalFailure;
}

struct ServeArgs {
  std::string config, name, endpoint, role, backend, manifest, manifests, routes, transcripts, console;
  std::string host = "127.0.0.1";
  std::vector<std::string> rewrites;
  int port = 0;
  double timeout = 0;
  bool json = false;
};

int run_serve(const ServeArgs& a) {
  auto opt = [](const std::string& s) { return s.empty() ? nullptr : s.c_str(); };
  std::string routes_json;
  if (!a.routes.empty()) {
    auto text = slurp(a.routes);
    if (!text) {
      std::cerr << "error: cannot read " << a.routes << "\n";
      return kOperationalFailure;
    }
    routes_json = *text;
  }
  ordered_json rewrites = ordered_json::object();
  for (const auto& r : a.rewrites) {
    const auto eq = r.find('=');
    if (eq == std::string::npos) {
      std::cerr << "error: --rewrite expects PREFIX=TARGET\n";
      return kUsageError;
    }
    rewrites[r.substr(0, eq)] = r.substr(eq + 1);
  }
  const std::string rewrites_json = rewrites.dump();

  ovon_agent_options o{};
  o.config_path = opt(a.config);
  o.name = opt(a.name);
  o.endpoint = opt(a.endpoint);
  o.role = opt(a.role);
  o.backend = opt(a.backend);
  o.manifest_path = opt(a.manifest);
  o.manifests_path = opt(a.manifests);
  o.routes_json = opt(routes_json);
  o.rewrites_json = rewrites_json.c_str();
  o.transcripts_dir = opt(a.transcripts);
  o.console_dir = opt(a.console);
  o.host = a.host.c_str();
  o.port = a.port;
  o.timeout_secs = a.timeout;

  ovon_agent* agent = nullptr;
  if (ovon_status st = ovon_agent_start(&o, &agent); st != OVON_OK) return report_error(st, a.json);
  const int port = ovon_agent_port(agent);
  if (a.json) {
    std::cout << ordered_json{{"ok", true}, {"port", port}, {"endpoint", ovon_agent_endpoint(agent)}}.dump()
              << std::endl;
  } else {
    std::cout << "listening on http://" << a.host << ":" << port << "/ as "
              << ovon_agent_endpoint(agent) << std::endl;
  }
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  ovon_agent_free(agent);
  return 0;
}

struct SendArgs {
  std::string url, text, kind = "utterance", conversation, from, speaker, envelope;
  bool no_invite = false;
  long timeout_ms = 10000;
  bool json = false;
};

void print_dialog(const ordered_json& reply) {
  const auto& ovon = reply["ovon"];
  if (ovon.contains("responseCode")) {
    const auto& rc = ovon["responseCode"];
    std::cout << "[" << (rc.is_object() ? rc.value("code", 0) : rc.get<int>()) << "]\n";
  }
  for (const auto& e : ovon["events"]) {
    const std::string type = e.value("eventType", std::string());
    std::cout << type;
    const auto params = e.value("parameters", ordered_json::object());
    if (params.contains("dialogEvent")) {
      const auto& d = params["dialogEvent"];
      std::string text;
      for (const auto& t : d["features"]["text"]["tokens"]) text += (text.empty() ? "" : " ") + t.value("value", std::string());
      std::cout << " " << d.value("speakerId", std::string()) << ": " << text;
    } else if (params.contains("to") && params["to"].contains("url")) {
      std::cout << " " << params["to"]["url"].get<std::string>();
    }
    std::cout << "\n";
  }
}

int run_send(const SendArgs& a) {
  char* reply = nullptr;
  ovon_status st;
  if (!a.envelope.empty()) {
    auto text = slurp(a.envelope);
    if (!text) {
      std::cerr << "error: cannot read " << a.envelope << "\n";
      return kOperationalFailure;
    }
    st = ovon_send_envelope(a.url.c_str(), text->c_str(), a.timeout_ms, &reply);
  } else {
    ovon_send_options o{};
    o.url = a.url.c_str();
    o.conversation_id = a.conversation.empty() ? nullptr : a.conversation.c_str();
    o.from = a.from.empty() ? nullptr : a.from.c_str();
    o.speaker_id = a.speaker.empty() ? nullptr : a.speaker.c_str();
    o.kind = a.kind.c_str();
    o.text = a.text.c_str();
    o.with_invite = a.no_invite ? 0 : 1;
    o.timeout_ms = a.timeout_ms;
    st = ovon_send(&o, &reply);
  }
  if (st != OVON_OK) return report_error(st, a.json);
  const auto text = take(reply);
  if (a.json) {
    std::cout << pretty(text) << "\n";
  } else {
    print_dialog(ordered_json::parse(text));
  }
  return 0;
}

struct DiscoverArgs {
  std::string url, from;
  std::vector<std::string> query;
  long timeout_ms = 10000;
  bool json = false;
};

int run_discover(const DiscoverArgs& a) {
  std::string query;
  for (const auto& w : a.query) query += (query.empty() ? "" : " ") + w;
  char* result = nullptr;
  ovon_status st = ovon_discover(a.url.c_str(), query.c_str(), a.from.empty() ? nullptr : a.from.c_str(),
                                 a.timeout_ms, &result);
  if (st != OVON_OK) return report_error(st, a.json);
  const auto j = ordered_json::parse(take(result));
  if (a.json) {
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  if (j["candidates"].empty()) std::cout << "no assistants found\n";
  for (const auto& c : j["candidates"]) {
    std::cout << c["conversationalName"].get<std::string>() << "\t" << c["url"].get<std::string>() << "\t"
              << c["servicingMode"].get<std::string>() << "\n";
  }
  return 0;
}

struct ManifestArgs {
  std::string url, from;
  long timeout_ms = 10000;
  bool json = false;
};

int run_manifest(const ManifestArgs& a) {
  char* manifest = nullptr;
  ovon_status st = ovon_request_manifest(a.url.c_str(), a.from.empty() ? nullptr : a.from.c_str(),
                                         a.timeout_ms, &manifest);
  if (st != OVON_OK) return report_error(st, a.json);
  std::cout << pretty(take(manifest)) << "\n";
  return 0;
}

struct ScenarioArgs {
  std::string path, freeze_time;
  std::string reports = "reports";
  std::string transcripts = "transcripts";
  bool json = false;
};

int run_scenario_cmd(const ScenarioArgs& a) {
  char* report = nullptr;
  char* text = nullptr;
  char* transcript = nullptr;
  int passed = 0;
  ovon_status st = ovon_scenario_run(a.path.c_str(), a.freeze_time.empty() ? nullptr : a.freeze_time.c_str(),
                                     &report, &text, &transcript, &passed);
  if (st != OVON_OK) return report_error(st, a.json);
  const auto report_json = take(report);
  const auto report_text = take(text);
  const auto transcript_text = take(transcript);
  const auto r = ordered_json::parse(report_json);

  const auto report_path = std::filesystem::path(a.reports) / (safe_name(r["scenario"]) + ".json");
  const auto transcript_path =
      std::filesystem::path(a.transcripts) / (safe_name(r["conversationId"]) + ".jsonl");
  if (!write_file(report_path, report_json + "\n") || !write_file(transcript_path, transcript_text)) {
    std::cerr << "error: cannot write " << report_path << " or " << transcript_path << "\n";
    return kOperationalFailure;
  }
  if (a.json) {
    std::cout << report_json << "\n";
  } else {
    std::cout << report_text << "report: " << report_path.string() << "\ntranscript: "
              << transcript_path.string() << "\n";
  }
  return passed ? 0 : kOperationalFailure;
}

struct DiagramArgs {
  std::string path, output;
  bool json = false;
};

int run_diagram(const DiagramArgs& a) {
  auto text = slurp(a.path);
  if (!text) {
    std::cerr << "error: cannot read " << a.path << "\n";
    return kOperationalFailure;
  }
  char* uml = nullptr;
  ovon_status st = ovon_diagram_export(text->c_str(), &uml);
  if (st != OVON_OK) return report_error(st, a.json);
  const auto diagram = take(uml);
  if (!a.output.empty() && !write_file(a.output, diagram)) {
    std::cerr << "error: cannot write " << a.output << "\n";
    return kOperationalFailure;
  }
  if (a.json) {
    std::cout << ordered_json{{"ok", true}, {"plantuml", diagram}}.dump(2) << "\n";
  } else if (a.output.empty()) {
    std::cout << diagram;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Conversation-envelope agent mesh"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(ovon_version()));

  ValidateArgs va;
  auto* validate = app.add_subcommand("validate", "Check an envelope (or manifest) file; '-' reads stdin");
  validate->add_option("file", va.path, "JSON file")->required();
  validate->add_flag("--manifest", va.manifest, "Validate a bare manifest instead of an envelope");
  validate->add_flag("--json", va.json, "Machine-readable output");

  ServeArgs sa;
  auto* serve = app.add_subcommand("serve", "Run one agent over HTTP until interrupted");
  serve->add_option("--config", sa.config, "Agent config JSON");
  serve->add_option("--name", sa.name, "Agent name (speaker id)");
  serve->add_option("--endpoint", sa.endpoint, "Public endpoint URL; defaults to the bound address");
  serve->add_option("--role", sa.role, "mediator, specialist or registry");
  serve->add_option("--backend", sa.backend, "echo, scripted:<path> or rules:<path>");
  serve->add_option("--manifest", sa.manifest, "This agent's manifest (JSON)");
  serve->add_option("--manifests", sa.manifests, "Registry bootstrap manifests (JSON array)");
  serve->add_option("--routes", sa.routes, "Mediator routes file: [{keywords, url}]");
  serve->add_option("--rewrite", sa.rewrites, "PREFIX=TARGET URL rewrite for outbound calls");
  serve->add_option("--transcripts", sa.transcripts, "Directory for per-conversation JSONL transcripts");
  serve->add_option("--console", sa.console, "Static directory served under /console");
  serve->add_option("--host", sa.host, "Bind address");
  serve->add_option("--port", sa.port, "Port; 0 picks a free one")->check(CLI::Range(0, 65535));
  serve->add_option("--timeout", sa.timeout, "Inactivity timeout in seconds (OVON_TIMEOUT_SECS also works)")
      ->check(CLI::NonNegativeNumber);
  serve->add_flag("--json", sa.json, "Machine-readable output");

  SendArgs sd;
  auto* send = app.add_subcommand("send", "Send one envelope and print the reply");
  send->add_option("url", sd.url, "Agent URL (http://)")->required();
  send->add_option("text", sd.text, "Utterance or whisper text");
  send->add_option("--kind", sd.kind, "utterance, whisper, invite or bye")
      ->check(CLI::IsMember({"utterance", "whisper", "invite", "bye"}));
  send->add_option("--conversation", sd.conversation, "Conversation id");
  send->add_option("--from", sd.from, "sender.from");
  send->add_option("--speaker", sd.speaker, "speakerId for dialog events");
  send->add_option("--envelope", sd.envelope, "Send this envelope file verbatim");
  send->add_flag("--no-invite", sd.no_invite, "Do not prepend an invite event");
  send->add_option("--timeout-ms", sd.timeout_ms, "Request timeout")->check(CLI::PositiveNumber);
  send->add_flag("--json", sd.json, "Print the raw reply envelope");

  DiscoverArgs da;
  auto* discover = app.add_subcommand("discover", "Ask a registry for assistants");
  discover->add_option("url", da.url, "Registry URL")->required();
  discover->add_option("query", da.query, "What you need")->required();
  discover->add_option("--from", da.from, "sender.from");
  discover->add_option("--timeout-ms", da.timeout_ms, "Request timeout")->check(CLI::PositiveNumber);
  discover->add_flag("--json", da.json, "Machine-readable output");

  ManifestArgs ma;
  auto* manifest = app.add_subcommand("manifest", "Request an agent's manifest");
  manifest->add_option("url", ma.url, "Agent URL")->required();
  manifest->add_option("--from", ma.from, "sender.from");
  manifest->add_option("--timeout-ms", ma.timeout_ms, "Request timeout")->check(CLI::PositiveNumber);
  manifest->add_flag("--json", ma.json, "Machine-readable output");

  ScenarioArgs sc;
  auto* scenario = app.add_subcommand("scenario", "Replay a scenario and check its expectations");
  scenario->add_option("file", sc.path, "Scenario JSON")->required();
  scenario->add_option("--freeze-time", sc.freeze_time, "Timestamp used for every event");
  scenario->add_option("--reports", sc.reports, "Report directory");
  scenario->add_option("--transcripts", sc.transcripts, "Transcript directory");
  scenario->add_flag("--json", sc.json, "Print the report as JSON");

  DiagramArgs dg;
  auto* diagram = app.add_subcommand("diagram", "PlantUML sequence diagram from a transcript");
  diagram->add_option("transcript", dg.path, "Transcript JSONL; '-' reads stdin")->required();
  diagram->add_option("-o,--output", dg.output, "Write to this file");
  diagram->add_flag("--json", dg.json, "Machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  if (*validate) return run_validate(va);
  if (*serve) return run_serve(sa);
  if (*send) return run_send(sd);
  if (*discover) return run_discover(da);
  if (*manifest) return run_manifest(ma);
  if (*scenario) return run_scenario_cmd(sc);
  if (*diagram) return run_diagram(dg);
  return kUsageError;
}
