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

#include "ovon/backend.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ovon/registry.hpp"

namespace ovon {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

size_t own_turns(std::span<const HistoryEntry> history, const std::string& self) {
  return static_cast<size_t>(std::count_if(history.begin(), history.end(),
                                           [&](const HistoryEntry& h) { return h.speaker_id == self; }));
}

BackendReply reply_for(const std::string& text, bool bye, const std::optional<std::string>& delegate,
                       std::string_view speaker) {
  return BackendReply{apply_template(text, speaker), bye, delegate};
}

Json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::vector<std::string> string_list(const Json& j, const char* key) {
  std::vector<std::string> out;
  if (auto it = j.find(key); it != j.end()) {
    if (!it->is_array()) throw ConfigError(std::string(key) + " must be a list of strings");
    for (const auto& v : *it) out.push_back(v.get<std::string>());
  }
  return out;
}

bool then_bye(const Json& j) {
  auto it = j.find("then");
  if (it == j.end() || it->is_null()) return false;
  if (!it->is_string() || *it != "bye") throw ConfigError("\"then\" only supports \"bye\"");
  return true;
}

std::optional<std::string> optional_string(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::string>();
}

std::string resolve(const std::string& base_dir, const std::string& path) {
  std::filesystem::path p(path);
  if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
  return p.string();
}

}  // namespace

std::string apply_template(std::string_view text, std::string_view speaker) {
  std::string out(text);
  constexpr std::string_view kKey = "{speaker}";
  for (size_t pos = out.find(kKey); pos != std::string::npos; pos = out.find(kKey, pos)) {
    out.replace(pos, kKey.size(), speaker);
    pos += speaker.size();
  }
  return out;
}

BackendResult run_backend(const Backend& backend, std::span<const HistoryEntry> history,
                          std::string_view current, std::optional<std::string_view> whisper_context,
                          std::string_view speaker_id) {
  if (current.empty()) return BackendFailure{"empty input"};
  return backend.respond({history, current, whisper_context, speaker_id});
}

BackendResult EchoBackend::respond(const BackendRequest& request) const {
  return BackendReply{std::string(request.current), false, std::nullopt};
}

ScriptedBackend::ScriptedBackend(ScriptedBackendSpec spec, std::string self_speaker)
    : spec_(std::move(spec)), self_(std::move(self_speaker)) {}

BackendResult ScriptedBackend::respond(const BackendRequest& request) const {
  const size_t cursor = own_turns(request.history, self_);
  if (cursor >= spec_.turns.size()) return BackendFailure{"script exhausted"};
  const ScriptTurn& turn = spec_.turns[cursor];
  if (turn.expect && lower(request.current).find(lower(*turn.expect)) == std::string::npos) {
    return BackendFailure{"script expected input containing \"" + *turn.expect + "\""};
  }
  return reply_for(turn.reply, turn.then_bye, turn.delegate, request.speaker_id);
}

RuleBackend::RuleBackend(RuleSet rules, std::string self_speaker)
    : rules_(std::move(rules)), self_(std::move(self_speaker)) {}

BackendResult RuleBackend::respond(const BackendRequest& request) const {
  const bool first = own_turns(request.history, self_) == 0;
  const auto words = words_of(request.current);
  auto has = [&](const std::string& w) {
    return std::find(words.begin(), words.end(), lower(w)) != words.end();
  };
  for (const auto& rule : rules_.rules) {
    if (rule.first_turn && *rule.first_turn != first) continue;
    if (!std::all_of(rule.all_of.begin(), rule.all_of.end(), has)) continue;
    if (!rule.any_of.empty() && std::none_of(rule.any_of.begin(), rule.any_of.end(), has)) continue;
    return reply_for(rule.reply, rule.then_bye, rule.delegate, request.speaker_id);
  }
  if (rules_.fallback) return reply_for(*rules_.fallback, false, std::nullopt, request.speaker_id);
  return BackendFailure{"no rule matched"};
}

ScriptedBackendSpec scripted_spec_from_json(const Json& doc) {
  ScriptedBackendSpec spec;
  auto turns = doc.find("turns");
  if (turns == doc.end() || !turns->is_array()) throw ConfigError("script needs a \"turns\" list");
  for (const auto& t : *turns) {
    ScriptTurn turn;
    turn.expect = optional_string(t, "expect");
    turn.reply = t.value("reply", std::string());
    turn.then_bye = then_bye(t);
    turn.delegate = optional_string(t, "delegate");
    if (turn.reply.empty() && !turn.then_bye) {
      throw ConfigError("script turn needs a reply unless it ends with bye");
    }
    spec.turns.push_back(std::move(turn));
  }
  return spec;
}

RuleSet rule_set_from_json(const Json& doc) {
  RuleSet set;
  auto rules = doc.find("rules");
  if (rules == doc.end() || !rules->is_array()) throw ConfigError("rules file needs a \"rules\" list");
  for (const auto& r : *rules) {
    Rule rule;
    if (auto it = r.find("firstTurn"); it != r.end()) rule.first_turn = it->get<bool>();
    rule.all_of = string_list(r, "allOf");
    rule.any_of = string_list(r, "anyOf");
    rule.reply = r.value("reply", std::string());
    rule.then_bye = then_bye(r);
    rule.delegate = optional_string(r, "delegate");
    if (rule.reply.empty() && !rule.then_bye) throw ConfigError("rule needs a reply");
    set.rules.push_back(std::move(rule));
  }
  set.fallback = optional_string(doc, "fallback");
  return set;
}

std::unique_ptr<Backend> make_backend(const Json& spec, const std::string& base_dir,
                                      const std::string& self_speaker) {
  try {
    if (spec.is_null()) return std::make_unique<EchoBackend>();
    if (spec.is_object()) {
      if (auto s = spec.find("scripted"); s != spec.end()) {
        return std::make_unique<ScriptedBackend>(scripted_spec_from_json(*s), self_speaker);
      }
      if (auto r = spec.find("rules"); r != spec.end()) {
        return std::make_unique<RuleBackend>(rule_set_from_json(*r), self_speaker);
      }
      throw ConfigError("backend object needs \"scripted\" or \"rules\"");
    }
    if (!spec.is_string()) throw ConfigError("backend must be a string or object");
    const std::string s = spec.get<std::string>();
    if (s == "echo") return std::make_unique<EchoBackend>();
    if (s.starts_with("scripted:")) {
      return std::make_unique<ScriptedBackend>(
          scripted_spec_from_json(read_json(resolve(base_dir, s.substr(9)))), self_speaker);
    }
    if (s.starts_with("rules:")) {
      return std::make_unique<RuleBackend>(rule_set_from_json(read_json(resolve(base_dir, s.substr(6)))),
                                           self_speaker);
    }
    throw ConfigError("unknown backend \"" + s + "\"");
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("backend spec: ") + e.what());
  }
}

}  // namespace ovon
