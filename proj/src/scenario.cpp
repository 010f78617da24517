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

#include "ovon/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

namespace ovon {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool same_name(std::string_view a, std::string_view b) { return lower(a) == lower(b); }

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoFailure("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::optional<std::string> dialog_text(const EnvelopeEvent& e) {
  const auto* d = e.dialog();
  if (!d) {
    if (const auto* b = std::get_if<ByePayload>(&e.payload); b && b->reason) d = &*b->reason;
  }
  if (!d) return std::nullopt;
  try {
    return extract_text(*d);
  } catch (const MissingTextFeature&) {
    return std::nullopt;
  }
}

std::optional<std::string> speaker_of(const EnvelopeEvent& e) {
  if (const auto* d = e.dialog()) return d->speaker_id;
  return std::nullopt;
}

bool matches(const EventMatcher& m, const TranscriptRecord& r, const EnvelopeEvent& e) {
  if (m.from && !same_name(*m.from, r.from)) return false;
  if (m.to && !same_name(*m.to, r.to)) return false;
  if (m.event_type && *m.event_type != e.event_type) return false;
  if (m.speaker) {
    auto sp = speaker_of(e);
    if (!sp || !same_name(*m.speaker, *sp)) return false;
  }
  if (m.text) {
    auto t = dialog_text(e);
    if (!t || t->find(*m.text) == std::string::npos) return false;
  }
  return true;
}

std::string describe(const EventMatcher& m) {
  std::string out = m.event_type ? std::string(to_string(*m.event_type)) : "any event";
  if (m.from) out += " from " + *m.from;
  if (m.to) out += " to " + *m.to;
  if (m.speaker) out += " by " + *m.speaker;
  if (m.text) out += " containing \"" + *m.text + "\"";
  return out;
}

EventMatcher matcher_from_json(const Json& j) {
  EventMatcher m;
  if (j.contains("from")) m.from = j.at("from").get<std::string>();
  if (j.contains("to")) m.to = j.at("to").get<std::string>();
  if (j.contains("speaker")) m.speaker = j.at("speaker").get<std::string>();
  if (j.contains("text")) m.text = j.at("text").get<std::string>();
  if (j.contains("eventType")) {
    const auto name = j.at("eventType").get<std::string>();
    m.event_type = event_type_from_string(name);
    if (!m.event_type) throw ConfigError("unknown eventType \"" + name + "\"");
  }
  return m;
}

Expectation expectation_from_json(const Json& j) {
  Expectation x;
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "EventOccurs") {
    x.kind = ExpectationKind::kEventOccurs;
    x.matchers.push_back(matcher_from_json(j));
    if (j.contains("count")) x.count = j.at("count").get<int>();
  } else if (kind == "OrderedBefore") {
    x.kind = ExpectationKind::kOrderedBefore;
    if (j.contains("sequence")) {
      for (const auto& m : j.at("sequence")) x.matchers.push_back(matcher_from_json(m));
    } else {
      x.matchers.push_back(matcher_from_json(j.at("first")));
      x.matchers.push_back(matcher_from_json(j.at("then")));
    }
    if (x.matchers.size() < 2) throw ConfigError("OrderedBefore needs at least two matchers");
  } else if (kind == "TextContains") {
    x.kind = ExpectationKind::kTextContains;
    auto m = matcher_from_json(j);
    if (!m.text) throw ConfigError("TextContains needs \"text\"");
    if (!m.event_type) m.event_type = EventType::kUtterance;
    x.matchers.push_back(std::move(m));
    x.final_only = j.value("final", false);
  } else if (kind == "FloorReturnsTo") {
    x.kind = ExpectationKind::kFloorReturnsTo;
    x.agent = j.at("agent").get<std::string>();
    if (j.contains("segments")) x.segments = j.at("segments").get<int>();
  } else {
    throw ConfigError("unknown expectation kind \"" + kind + "\"");
  }
  x.description = j.value("description", std::string());
  if (x.description.empty()) {
    switch (x.kind) {
      case ExpectationKind::kEventOccurs: x.description = describe(x.matchers[0]) + " occurs"; break;
      case ExpectationKind::kOrderedBefore: {
        for (const auto& m : x.matchers) x.description += (x.description.empty() ? "" : " < ") + describe(m);
        break;
      }
      case ExpectationKind::kTextContains: x.description = describe(x.matchers[0]); break;
      case ExpectationKind::kFloorReturnsTo: x.description = "floor returns to " + x.agent; break;
    }
  }
  return x;
}

ExpectationResult eval_occurs(const Expectation& x, const std::vector<TranscriptRecord>& records) {
  ExpectationResult r;
  int n = 0;
  for (const auto& rec : records) {
    bool hit = false;
    for (const auto& e : rec.envelope.events) {
      if (matches(x.matchers[0], rec, e)) {
        ++n;
        hit = true;
      }
    }
    if (hit) r.lines.push_back(rec.seq);
  }
  r.passed = x.count ? n == *x.count : n > 0;
  r.detail = std::to_string(n) + " matching event(s)" +
             (x.count ? ", expected " + std::to_string(*x.count) : std::string());
  return r;
}

ExpectationResult eval_ordered(const Expectation& x, const std::vector<TranscriptRecord>& records) {
  ExpectationResult r;
  size_t next = 0;
  for (const auto& rec : records) {
    for (const auto& e : rec.envelope.events) {
      if (next < x.matchers.size() && matches(x.matchers[next], rec, e)) {
        r.lines.push_back(rec.seq);
        ++next;
      }
    }
  }
  r.passed = next == x.matchers.size();
  r.detail = r.passed ? "in order"
                      : "no " + describe(x.matchers[next]) + " after the preceding step";
  return r;
}

ExpectationResult eval_text(const Expectation& x, const std::vector<TranscriptRecord>& records) {
  ExpectationResult r;
  EventMatcher without_text = x.matchers[0];
  without_text.text.reset();
  const TranscriptRecord* last = nullptr;
  for (const auto& rec : records) {
    for (const auto& e : rec.envelope.events) {
      if (matches(without_text, rec, e)) last = &rec;
    }
  }
  auto hits = [&](const TranscriptRecord& rec) {
    return std::any_of(rec.envelope.events.begin(), rec.envelope.events.end(),
                       [&](const EnvelopeEvent& e) { return matches(x.matchers[0], rec, e); });
  };
  if (x.final_only) {
    r.passed = last && hits(*last);
    if (last) r.lines.push_back(last->seq);
    r.detail = !last ? "no candidate events" : r.passed ? "final envelope matches" : "final envelope lacks the text";
    return r;
  }
  for (const auto& rec : records) {
    if (hits(rec)) r.lines.push_back(rec.seq);
  }
  r.passed = !r.lines.empty();
  r.detail = r.passed ? "found" : "text not found";
  return r;
}

ExpectationResult eval_floor(const Expectation& x, const std::vector<TranscriptRecord>& records,
                             const std::string& user) {
  ExpectationResult r;
  std::optional<std::string> open;
  bool pending_return = false;
  int segments = 0;
  auto fail = [&](const TranscriptRecord& rec, const std::string& why) {
    r.passed = false;
    r.detail = why;
    r.lines.push_back(rec.seq);
    return r;
  };

  for (const auto& rec : records) {
    const bool from_agent = same_name(rec.from, x.agent);
    if (from_agent && !same_name(rec.to, user)) {
      for (const auto& e : rec.envelope.events) {
        if (e.event_type != EventType::kInvite) continue;
        if (open) return fail(rec, "invite to " + rec.to + " while " + *open + " holds the floor");
        open = rec.to;
        r.lines.push_back(rec.seq);
      }
    }
    if (same_name(rec.to, x.agent) && !same_name(rec.from, user)) {
      for (const auto& e : rec.envelope.events) {
        if (e.event_type != EventType::kBye) continue;
        if (!open || !same_name(*open, rec.from)) return fail(rec, "bye from " + rec.from + " without an open invite");
        open.reset();
        pending_return = true;
        ++segments;
        r.lines.push_back(rec.seq);
      }
    }
    if (from_agent && same_name(rec.to, user) && pending_return) {
      const auto& ev = rec.envelope.events;
      size_t start = 0;
      for (size_t i = 0; i < ev.size(); ++i) {
        if (ev[i].event_type == EventType::kBye) start = i + 1;
      }
      const bool spoke = std::any_of(ev.begin() + static_cast<long>(start), ev.end(), [&](const EnvelopeEvent& e) {
        auto sp = speaker_of(e);
        return e.event_type == EventType::kUtterance && sp && same_name(*sp, x.agent);
      });
      if (!spoke) return fail(rec, x.agent + " did not speak after the delegate left");
      pending_return = false;
      r.lines.push_back(rec.seq);
    }
  }
  if (open) {
    r.detail = "segment with " + *open + " never closed";
    return r;
  }
  if (pending_return) {
    r.detail = x.agent + " never took the floor back";
    return r;
  }
  r.passed = !x.segments || segments == *x.segments;
  r.detail = std::to_string(segments) + " delegation segment(s)" +
             (x.segments ? ", expected " + std::to_string(*x.segments) : std::string());
  return r;
}

// Collects records in send order across all agents.
class Recorder {
 public:
  RecordingTransport::Observer observer(std::string self, const std::map<std::string, std::string>& names) {
    return [this, self, &names](const std::string& dir, const std::string& peer,
                                const ConversationEnvelope& env) {
      auto it = names.find(peer);
      const std::string other = it == names.end() ? peer : it->second;
      std::lock_guard lock(mu_);
      TranscriptRecord r;
      r.seq = ++seq_;
      r.from = dir == "out" ? self : other;
      r.to = dir == "out" ? other : self;
      r.envelope = env;
      records_.push_back(std::move(r));
    };
  }
  std::vector<TranscriptRecord> take() {
    std::lock_guard lock(mu_);
    return std::move(records_);
  }

 private:
  std::mutex mu_;
  uint64_t seq_ = 0;
  std::vector<TranscriptRecord> records_;
};

}  // namespace

std::string_view to_string(ExpectationKind kind) {
  switch (kind) {
    case ExpectationKind::kEventOccurs: return "EventOccurs";
    case ExpectationKind::kOrderedBefore: return "OrderedBefore";
    case ExpectationKind::kTextContains: return "TextContains";
    case ExpectationKind::kFloorReturnsTo: return "FloorReturnsTo";
  }
  return "?";
}

bool ScenarioReport::passed() const {
  return std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; });
}

ScenarioSpec scenario_from_json(const Json& doc, const std::string& base_dir) {
  ScenarioSpec spec;
  try {
    spec.name = doc.at("name").get<std::string>();
    const Json& user = doc.at("user");
    if (user.is_string()) {
      spec.user = user.get<std::string>();
    } else {
      spec.user = user.at("name").get<std::string>();
      spec.user_endpoint = user.value("endpoint", std::string());
    }
    if (spec.user_endpoint.empty()) spec.user_endpoint = "urn:ovon:user:" + lower(spec.user);
    spec.entry = doc.at("entry").get<std::string>();
    spec.conversation_id = doc.value("conversationId", "conv_" + spec.name);
    if (doc.contains("freezeTime")) spec.freeze_time = doc.at("freezeTime").get<std::string>();
    for (const auto& a : doc.at("agents")) {
      if (a.is_string()) {
        std::filesystem::path p(a.get<std::string>());
        if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
        spec.agents.push_back(load_agent_config(p.string()));
      } else {
        spec.agents.push_back(agent_config_from_json(a, base_dir));
      }
    }
    for (const auto& t : doc.at("turns")) {
      spec.turns.push_back({t.at("actor").get<std::string>(), t.value("say", std::string())});
    }
    if (doc.contains("expectations")) {
      for (const auto& x : doc.at("expectations")) spec.expectations.push_back(expectation_from_json(x));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("scenario " + spec.name + ": " + e.what());
  }

  std::set<std::string> names, endpoints;
  for (const auto& a : spec.agents) {
    if (!names.insert(lower(a.name)).second) throw ScenarioSetupFailure("duplicate agent name " + a.name);
    if (!endpoints.insert(a.endpoint).second) throw ScenarioSetupFailure("duplicate endpoint " + a.endpoint);
  }
  if (names.count(lower(spec.user))) throw ScenarioSetupFailure("user " + spec.user + " clashes with an agent");
  if (!names.count(lower(spec.entry))) throw ScenarioSetupFailure("entry agent " + spec.entry + " is not defined");
  if (spec.turns.empty()) throw ScenarioSetupFailure("scenario has no turns");
  for (const auto& t : spec.turns) {
    if (!same_name(t.actor, spec.user)) throw ScenarioSetupFailure("unknown actor " + t.actor);
  }
  auto known = [&](const std::optional<std::string>& n) {
    if (n && !names.count(lower(*n)) && !same_name(*n, spec.user)) {
      throw ScenarioSetupFailure("expectation names unknown actor " + *n);
    }
  };
  for (const auto& x : spec.expectations) {
    for (const auto& m : x.matchers) {
      known(m.from);
      known(m.to);
    }
    if (x.kind == ExpectationKind::kFloorReturnsTo) known(x.agent);
  }
  return spec;
}

ScenarioSpec load_scenario(const std::string& path) {
  Json doc;
  try {
    doc = Json::parse(read_text(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return scenario_from_json(doc, std::filesystem::path(path).parent_path().string());
}

ScenarioReport run_scenario(const ScenarioSpec& spec, const RunOptions& options) {
  const auto frozen = options.freeze_time ? options.freeze_time : spec.freeze_time;
  TimestampFn clock = frozen ? TimestampFn([t = *frozen] { return t; }) : TimestampFn(utc_now_iso8601);

  std::map<std::string, std::string> names;  // endpoint -> agent name
  for (const auto& a : spec.agents) names[a.endpoint] = a.name;
  names[spec.user_endpoint] = spec.user;

  auto loopback = std::make_shared<LoopbackTransport>();
  Recorder recorder;
  std::vector<std::unique_ptr<Agent>> agents;
  std::string entry_url;
  for (const auto& cfg : spec.agents) {
    auto transport = std::make_shared<RecordingTransport>(loopback, recorder.observer(cfg.name, names));
    agents.push_back(std::make_unique<Agent>(cfg, transport, clock));
    Agent* agent = agents.back().get();
    loopback->bind(cfg.endpoint, [agent](const ConversationEnvelope& env) { return agent->handle(env); });
    if (same_name(cfg.name, spec.entry)) entry_url = cfg.endpoint;
  }

  RecordingTransport user(loopback, recorder.observer(spec.user, names));
  for (size_t i = 0; i < spec.turns.size(); ++i) {
    ConversationEnvelope env;
    env.conversation_id = spec.conversation_id;
    env.sender_from = spec.user_endpoint;
    env.sender_to = entry_url;
    if (i == 0) env.events.push_back(make_invite(entry_url));
    if (!spec.turns[i].say.empty()) {
      env.events.push_back(make_utterance(make_dialog_event(spec.user, spec.turns[i].say, clock())));
    }
    if (env.events.empty()) continue;
    try {
      user.send(entry_url, env, std::chrono::milliseconds(30000));
    } catch (const TransportError&) {
      // Recorded as a request without a reply; expectations will show it.
    }
  }

  ScenarioReport report;
  report.name = spec.name;
  report.conversation_id = spec.conversation_id;
  report.transcript = recorder.take();
  std::sort(report.transcript.begin(), report.transcript.end(),
            [](const auto& a, const auto& b) { return a.seq < b.seq; });
  report.results = evaluate_expectations(spec.expectations, report.transcript, spec.user);
  return report;
}

std::vector<ExpectationResult> evaluate_expectations(const std::vector<Expectation>& expectations,
                                                     const std::vector<TranscriptRecord>& records,
                                                     const std::string& user) {
  std::vector<ExpectationResult> out;
  for (const auto& x : expectations) {
    ExpectationResult r;
    switch (x.kind) {
      case ExpectationKind::kEventOccurs: r = eval_occurs(x, records); break;
      case ExpectationKind::kOrderedBefore: r = eval_ordered(x, records); break;
      case ExpectationKind::kTextContains: r = eval_text(x, records); break;
      case ExpectationKind::kFloorReturnsTo: r = eval_floor(x, records, user); break;
    }
    r.description = x.description;
    r.kind = x.kind;
    out.push_back(std::move(r));
  }
  return out;
}

Json report_to_json(const ScenarioReport& report) {
  Json j = Json::object();
  j["scenario"] = report.name;
  j["conversationId"] = report.conversation_id;
  j["passed"] = report.passed();
  j["transcriptLines"] = report.transcript.size();
  j["expectations"] = Json::array();
  for (const auto& r : report.results) {
    j["expectations"].push_back({{"description", r.description},
                                 {"kind", std::string(to_string(r.kind))},
                                 {"passed", r.passed},
                                 {"detail", r.detail},
                                 {"lines", r.lines}});
  }
  return j;
}

std::string format_report(const ScenarioReport& report) {
  std::ostringstream out;
  out << "scenario " << report.name << " (" << report.conversation_id << "): "
      << (report.passed() ? "PASS" : "FAIL") << "\n";
  for (const auto& r : report.results) {
    out << "  [" << (r.passed ? "pass" : "FAIL") << "] " << r.description << " -- " << r.detail;
    if (!r.lines.empty()) {
      out << " (lines";
      for (auto l : r.lines) out << ' ' << l;
      out << ')';
    }
    out << "\n";
  }
  return out.str();
}

Json record_to_json(const TranscriptRecord& record) {
  Json j = Json::object();
  j["seq"] = record.seq;
  j["from"] = record.from;
  j["to"] = record.to;
  j["envelope"] = envelope_to_json(record.envelope);
  return j;
}

std::string transcript_to_jsonl(const std::vector<TranscriptRecord>& records) {
  std::string out;
  for (const auto& r : records) out += record_to_json(r).dump() + "\n";
  return out;
}

std::vector<TranscriptRecord> parse_transcript(std::string_view jsonl) {
  std::vector<TranscriptRecord> out;
  std::istringstream in{std::string(jsonl)};
  std::string line;
  uint64_t n = 0;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++n;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw SyntaxError("transcript line " + std::to_string(n) + ": " + e.what());
    }
    TranscriptRecord r;
    r.envelope = envelope_from_json(j.at("envelope"));
    if (j.contains("from")) {
      r.seq = j.value("seq", n);
      r.from = j.at("from").get<std::string>();
      r.to = j.at("to").get<std::string>();
    } else {
      r.seq = n;
      const std::string self = j.value("agent", std::string("self"));
      const std::string peer = j.at("peer").get<std::string>();
      const bool out_dir = j.at("direction").get<std::string>() == "out";
      r.from = out_dir ? self : peer;
      r.to = out_dir ? peer : self;
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<TranscriptRecord> load_transcript(const std::string& path) {
  return parse_transcript(read_text(path));
}

std::string export_sequence_diagram(const std::vector<TranscriptRecord>& records) {
  std::vector<std::string> order;
  std::map<std::string, std::string> alias;
  auto note = [&](const std::string& name) {
    if (alias.count(name)) return;
    alias[name] = "p" + std::to_string(order.size());
    order.push_back(name);
  };
  for (const auto& r : records) {
    note(r.from);
    note(r.to);
  }
  std::ostringstream out;
  out << "@startuml\n";
  for (const auto& name : order) {
    std::string quoted = name;
    std::replace(quoted.begin(), quoted.end(), '"', '\'');
    out << "participant \"" << quoted << "\" as " << alias[name] << "\n";
  }
  for (const auto& r : records) {
    for (const auto& e : r.envelope.events) {
      out << alias[r.from] << " -> " << alias[r.to] << " : " << to_string(e.event_type) << "\n";
    }
  }
  out << "@enduml\n";
  return out.str();
}

}  // namespace ovon
