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

#include "ovon/registry.hpp"

#include <gtest/gtest.h>

#include <cctype>
#include <sstream>
#include <thread>

#include "test_util.hpp"

namespace ovon {
namespace {

using testing::listing;
using testing::source_path;

std::vector<AssistantManifest> fixture_manifests() {
  return load_manifest_array(source_path("scenarios/manifests/discovery_fixture.json"));
}

AssistantManifest smartlibrary() { return fixture_manifests().at(0); }

AssistantManifest synthetic(std::string name, std::vector<std::string> keywords,
                            std::string descriptive = "") {
  AssistantManifest m;
  m.identification.service_endpoint = "https://" + name + ".example";
  m.identification.conversational_name = name;
  Capability c;
  c.keywords = std::move(keywords);
  if (!descriptive.empty()) c.descriptive_texts.push_back(std::move(descriptive));
  m.capabilities.push_back(std::move(c));
  return m;
}

// Brute-force overlap count written independently of the registry: split on
// whitespace, strip punctuation, lowercase, compare word-by-word.
int oracle_score(const std::string& query, const AssistantManifest& m) {
  auto norm = [](std::string w) {
    std::string out;
    for (char c : w) {
      if (std::isalnum(static_cast<unsigned char>(c))) {
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      }
    }
    return out;
  };
  std::vector<std::string> qwords;
  std::istringstream in(query);
  for (std::string w; in >> w;) qwords.push_back(norm(w));
  auto in_query = [&](const std::string& w) {
    for (const auto& q : qwords) {
      if (q == w) return true;
    }
    return false;
  };
  std::vector<std::string> tags;
  for (const auto& c : m.capabilities) {
    for (const auto& k : c.keywords) tags.push_back(norm(k));
  }
  int score = 0;
  for (const auto& t : tags) score += in_query(t) ? 1 : 0;
  for (const auto& c : m.capabilities) {
    for (const auto& text : c.descriptive_texts) {
      std::istringstream words(text);
      for (std::string w; words >> w;) {
        w = norm(w);
        bool is_tag = false;
        for (const auto& t : tags) is_tag = is_tag || t == w;
        if (w.size() >= 4 && !is_tag && in_query(w)) return score + 1;
      }
    }
  }
  return score;
}

TEST(RegisterManifest, Listing4TagsAreLowercasedKeywords) {
  DiscoveryRegistry reg({"https://andres.example", std::nullopt, {}, false});
  auto entry = reg.register_manifest(parse_manifest(listing(4)));
  EXPECT_EQ(entry.tags, (std::set<std::string>{"books", "authors", "isbn", "editors"}));
  EXPECT_FALSE(entry.registered_at.empty());
}

TEST(RegisterManifest, ReRegisteringReplaces) {
  DiscoveryRegistry reg({"https://andres.example", std::nullopt, {}, false});
  auto m = parse_manifest(listing(4));
  reg.register_manifest(m);
  m.identification.synopsis = "updated";
  reg.register_manifest(m);
  EXPECT_EQ(reg.size(), 1u);
  EXPECT_EQ(reg.find(m.identification.service_endpoint)->manifest.identification.synopsis,
            "updated");
}

TEST(RegisterManifest, EmptyKeywordsRejected) {
  DiscoveryRegistry reg({"https://andres.example", std::nullopt, {}, false});
  auto m = parse_manifest(listing(4));
  m.capabilities[0].keywords.clear();
  try {
    reg.register_manifest(m);
    FAIL();
  } catch (const InvalidManifest& e) {
    EXPECT_EQ(e.violations().at(0).path, "manifest.capabilities[0].keywords");
  }
  EXPECT_EQ(reg.size(), 0u);
}

TEST(ScoreCandidates, LydiaKoidulaQueryMatchesOracle) {
  const std::string q = "Do you know about any books written by Lydia Koidula";
  const auto manifests = fixture_manifests();
  std::vector<RegistryEntry> entries;
  for (const auto& m : manifests) entries.push_back({m, "", derive_tags(m)});

  // Frozen from the oracle: smartlibrary 1 ("books"), florist 0, post office 0.
  const int frozen[] = {1, 0, 0};
  for (size_t i = 0; i < manifests.size(); ++i) {
    ASSERT_EQ(oracle_score(q, manifests[i]), frozen[i]) << i;
  }
  auto ranked = score_candidates({q, std::nullopt}, entries);
  ASSERT_EQ(ranked.size(), 1u);
  EXPECT_EQ(ranked[0].conversational_name, "smartlibrary");
  EXPECT_EQ(ranked[0].score, 1.0);
  EXPECT_EQ(ranked[0].servicing_mode, ServicingMode::kDirect);
}

TEST(ScoreCandidates, EmptyRegistry) {
  EXPECT_TRUE(score_candidates({"books", std::nullopt}, {}).empty());
}

TEST(ScoreCandidates, HigherOverlapRanksFirst) {
  const std::string q = "books by authors";
  std::vector<AssistantManifest> ms{synthetic("bookshop", {"books", "stationery"}),
                                    smartlibrary(), synthetic("atlas", {"authors", "maps"})};
  std::vector<RegistryEntry> entries;
  for (const auto& m : ms) entries.push_back({m, "", derive_tags(m)});
  // Oracle-frozen scores: bookshop 1, smartlibrary 2, atlas 1.
  EXPECT_EQ(oracle_score(q, ms[0]), 1);
  EXPECT_EQ(oracle_score(q, ms[1]), 2);
  EXPECT_EQ(oracle_score(q, ms[2]), 1);
  auto ranked = score_candidates({q, std::nullopt}, entries);
  ASSERT_EQ(ranked.size(), 3u);
  EXPECT_EQ(ranked[0].conversational_name, "smartlibrary");
  EXPECT_EQ(ranked[1].conversational_name, "atlas");  // tie broken by name
  EXPECT_EQ(ranked[2].conversational_name, "bookshop");
}

TEST(ScoreCandidates, DescriptiveTextBonusAndPhrases) {
  auto m = synthetic("archive", {"rare manuscripts"}, "Historical documents of Tallinn");
  std::vector<RegistryEntry> entries{{m, "", derive_tags(m)}};
  auto ranked = score_candidates({"any rare manuscripts from tallinn?", std::nullopt}, entries);
  ASSERT_EQ(ranked.size(), 1u);
  EXPECT_EQ(ranked[0].score, 2.0);
  EXPECT_TRUE(score_candidates({"manuscripts that are rare", std::nullopt}, entries).empty());
}

TEST(ScoreCandidates, LanguageFilter) {
  auto m = smartlibrary();
  std::vector<RegistryEntry> entries{{m, "", derive_tags(m)}};
  EXPECT_EQ(score_candidates({"books", "en"}, entries).size(), 1u);
  EXPECT_EQ(score_candidates({"books", "EN-US"}, entries).size(), 1u);
  EXPECT_TRUE(score_candidates({"books", "et"}, entries).empty());
}

TEST(ScoreCandidates, OutputIsSubsetAndTotallyOrdered) {
  std::vector<RegistryEntry> entries;
  const char* words[] = {"books", "maps", "music", "films", "poems"};
  for (int i = 0; i < 12; ++i) {
    auto m = synthetic("agent" + std::to_string(11 - i),
                       {words[i % 5], words[(i * 3 + 1) % 5]});
    entries.push_back({m, "", derive_tags(m)});
  }
  auto ranked = score_candidates({"books maps music films poems", std::nullopt}, entries);
  for (size_t i = 1; i < ranked.size(); ++i) {
    const auto& a = ranked[i - 1];
    const auto& b = ranked[i];
    EXPECT_TRUE(*a.score > *b.score ||
                (*a.score == *b.score && a.conversational_name <= b.conversational_name));
  }
  for (const auto& c : ranked) {
    bool known = false;
    for (const auto& e : entries) known = known || e.manifest.identification.service_endpoint == c.url;
    EXPECT_TRUE(known);
  }
  EXPECT_EQ(ranked, score_candidates({"books maps music films poems", std::nullopt}, entries));
}

TEST(HandleDiscovery, Listing5AnsweredWithListing6) {
  DiscoveryRegistry reg({"https://your-smartlibrary-url-here", smartlibrary(), {}, false});
  for (const auto& m : fixture_manifests()) reg.register_manifest(m);
  auto response = reg.handle_discovery_envelope(parse_envelope(listing(5)));
  EXPECT_EQ(response, parse_envelope(listing(6)));
  EXPECT_EQ(*response.events[0].manifest(), smartlibrary());
}

TEST(HandleDiscovery, NoMatchesReferToPeer) {
  DiscoveryRegistry reg({"https://andres.example", std::nullopt, {"https://peer.example"}, false});
  reg.register_manifest(synthetic("florist", {"flowers"}));
  ConversationEnvelope req;
  req.conversation_id = "c1";
  req.sender_from = "https://juri.example";
  req.events.push_back(build_event(EventType::kFindAssistant,
                                   DialogPayload{make_dialog_event("juri", "books please")}));
  auto response = reg.handle_discovery_envelope(req);
  EXPECT_EQ(response.conversation_id, "c1");
  EXPECT_EQ(response.sender_to, "https://juri.example");
  const auto& candidates = *response.events.at(0).candidates();
  ASSERT_EQ(candidates.size(), 1u);
  EXPECT_EQ(candidates[0].url, "https://peer.example");
  EXPECT_EQ(candidates[0].servicing_mode, ServicingMode::kIndirect);
  EXPECT_FALSE(candidates[0].score);
}

TEST(HandleDiscovery, NeverRefersToRequesterOrSelf) {
  DiscoveryRegistry reg({"https://a.example", std::nullopt,
                         {"https://a.example", "https://b.example", "https://c.example"}, false});
  auto c = reg.find_assistants({"books", std::nullopt}, "https://b.example");
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].url, "https://c.example");
}

TEST(HandleDiscovery, ProposesItselfWhenItMatches) {
  DiscoveryRegistry reg({"https://your-smartlibrary-url-here", smartlibrary(), {"https://p"}, true});
  auto c = reg.find_assistants({"isbn lookup", std::nullopt}, "x");
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].url, "https://your-smartlibrary-url-here/smartlibrary");
  EXPECT_EQ(c[0].score, 1.0);
}

TEST(HandleDiscovery, UtteranceIsUnsupported) {
  DiscoveryRegistry reg({"https://andres.example", std::nullopt, {}, false});
  auto env = parse_envelope(listing(3));
  EXPECT_THROW(reg.handle_discovery_envelope(env), UnsupportedEvent);
}

TEST(DiscoveryRegistry, ConcurrentReadersAndWriters) {
  DiscoveryRegistry reg({"https://andres.example", std::nullopt, {}, false});
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 200; ++i) {
        reg.register_manifest(synthetic("agent" + std::to_string(t * 1000 + i % 20), {"books"}));
        for (const auto& c : reg.find_assistants({"books", std::nullopt}, "")) {
          ASSERT_FALSE(c.url.empty());
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  EXPECT_EQ(reg.size(), 80u);
}

}  // namespace
}  // namespace ovon
