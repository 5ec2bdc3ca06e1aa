#include "doctest.h"

#include <algorithm>
#include <random>

#include "oracles.hpp"
#include "tagrisk/error.hpp"
#include "tagrisk/scoring.hpp"

using namespace tagrisk;
using namespace tagrisk::scoring;

namespace {

TrackRecord track(std::string id, std::vector<TagAssignment> tags) {
  return {std::move(id), "", "", std::move(tags)};
}

ListeningHistory history(std::vector<PlayEntry> entries) {
  return {"u", std::move(entries), {}, 500};
}

const std::map<std::string, std::string> kClasses = {
    {"sad", "Sadness"}, {"calm", "Peacefulness"}, {"gloomy", "Sadness"}, {"tense", "Tension"}};

const std::vector<std::string> kNames = {"Peacefulness", "Sadness", "Tension"};

}  // namespace

TEST_CASE("track association") {
  auto one = track_association(track("a", {{"sad", 100}}), kClasses);
  REQUIRE(one);
  CHECK(one->at("Sadness") == 1.0);
  CHECK(one->size() == 1);

  auto two = track_association(track("b", {{"sad", 60}, {"calm", 40}}), kClasses);
  CHECK(two->at("Sadness") == doctest::Approx(0.6));
  CHECK(two->at("Peacefulness") == doctest::Approx(0.4));

  std::map<std::string, std::string> ab = {{"x", "A"}, {"y", "A"}, {"z", "B"}};
  auto three = track_association(track("c", {{"x", 50}, {"y", 30}, {"z", 20}}), ab);
  CHECK(three->at("A") == doctest::Approx(0.8));
  CHECK(three->at("B") == doctest::Approx(0.2));

  CHECK(!track_association(track("d", {{"rock", 90}}), kClasses));
  CHECK(!track_association(track("e", {}), kClasses));
  CHECK(!track_association(track("f", {{"sad", 0}}), kClasses));
}

TEST_CASE("prevalence examples") {
  std::vector<TrackRecord> tracks = {track("s", {{"sad", 100}}), track("n", {{"rock", 10}}),
                                     track("h", {{"sad", 50}, {"calm", 50}}),
                                     track("c", {{"calm", 1}})};
  auto idx = associate_tracks(tracks, kClasses);
  CHECK(idx.size() == 3);

  auto s1 = emotion_prevalence(history({{"s", 10}}), idx, kNames);
  CHECK(s1[1] == 1.0);

  auto s2 = emotion_prevalence(history({{"s", 10}, {"n", 10}}), idx, kNames);
  CHECK(s2[0] + s2[1] + s2[2] == doctest::Approx(0.5));

  auto s3 = emotion_prevalence(history({{"h", 3}, {"c", 1}}), idx, kNames);
  CHECK(s3[0] == doctest::Approx(0.625));
  CHECK(s3[1] == doctest::Approx(0.375));

  CHECK_THROWS_AS(emotion_prevalence(history({}), idx, kNames), DataError);
}

TEST_CASE("genre prevalence") {
  std::map<std::string, std::string> g = {{"house", "A"}, {"techno", "A"}, {"folk", "B"}};
  std::vector<TrackRecord> tracks = {track("1", {{"house", 5}}), track("2", {{"folk", 9}})};
  auto idx = associate_tracks(tracks, g);
  const std::vector<std::string> names = {"A", "B"};
  auto h = history({{"2", 3}, {"1", 1}});
  auto r = genre_prevalence(h, idx, names, nullptr);
  REQUIRE(r);
  CHECK((*r)[0] == doctest::Approx(0.25));
  CHECK((*r)[1] == doctest::Approx(0.75));

  std::set<std::string> all = {"1", "2"};
  CHECK(*genre_prevalence(h, idx, names, &all) == *r);
  std::set<std::string> only1 = {"1"};
  CHECK((*genre_prevalence(h, idx, names, &only1))[0] == doctest::Approx(1.0));
  std::set<std::string> none = {"9"};
  CHECK(!genre_prevalence(h, idx, names, &none));

  TagVocabulary v;
  v.tags = {"sad"};
  v.category_of = {{"sad", "Sadness"}};
  std::vector<TrackRecord> mixed = {track("x", {{"sad", 1}}), track("y", {{"calm", 1}})};
  CHECK(tracks_with_category(mixed, v, "Sadness") == std::set<std::string>{"x"});
}

TEST_CASE("group tag scores and ranking") {
  std::vector<TrackRecord> tracks = {track("a", {{"sad", 10}}), track("b", {{"calm", 10}})};
  auto idx = associate_tracks(tracks, identity_classes({"sad", "calm"}));

  std::vector<ListeningHistory> single = {history({{"a", 5}})};
  CHECK(group_tag_scores(single, idx).at("sad") == 1.0);

  std::vector<ListeningHistory> pair = {history({{"a", 2}}), history({{"b", 8}})};
  auto g = group_tag_scores(pair, idx);
  CHECK(g.at("sad") == doctest::Approx(0.2));
  CHECK(g.at("calm") == doctest::Approx(0.8));
  CHECK(!g.contains("tense"));

  auto ts = user_tag_scores(history({{"a", 1}, {"b", 3}}), idx);
  CHECK(ts.at("calm") == doctest::Approx(0.75));

  const std::vector<std::string> cat = {"b", "a", "c"};
  auto flat = rank_tags({{"a", 0.1}, {"b", 0.1}}, {{"a", 0.1}, {"b", 0.1}}, cat);
  REQUIRE(flat.size() == 3);
  CHECK(flat[0].tag == "a");
  CHECK(flat[1].tag == "b");
  CHECK(flat[2].tag == "c");
  CHECK(flat[0].delta == 0.0);

  const std::vector<std::string> two = {"low", "sad"};
  auto r = rank_tags({{"sad", 0.5}, {"low", 0.2}}, {{"sad", 0.2}, {"low", 0.3}}, two);
  CHECK(r[0].tag == "sad");
  CHECK(r[0].delta == doctest::Approx(0.3));
  CHECK(r[1].tag == "low");
}

TEST_CASE("ranking matches a brute-force sort") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> tenth(0, 5);
  for (int trial = 0; trial < 100; ++trial) {
    std::map<std::string, double> a, b;
    std::vector<std::string> tags;
    for (int i = 0; i < 5; ++i) {
      const std::string t(1, static_cast<char>('a' + i));
      tags.push_back(t);
      a[t] = tenth(rng) / 10.0;
      b[t] = tenth(rng) / 10.0;
    }
    auto got = rank_tags(a, b, tags);
    std::vector<std::pair<double, std::string>> want;
    for (const auto& t : tags) want.push_back({-std::abs(a[t] - b[t]), t});
    std::sort(want.begin(), want.end());
    for (std::size_t i = 0; i < tags.size(); ++i) CHECK(got[i].tag == want[i].second);
  }
}

TEST_CASE("prevalence against the double-loop oracle") {
  std::mt19937_64 rng(12);
  std::uniform_int_distribution<int> ntags(0, 4), weight(0, 100), pc(1, 50), pick(0, 14);
  for (int trial = 0; trial < 100; ++trial) {
    std::map<std::string, std::string> class_of;
    for (int t = 0; t < 15; ++t) {
      if (t % 4 != 3) class_of["t" + std::to_string(t)] = "c" + std::to_string(t % 3);
    }
    const std::vector<std::string> classes = {"c0", "c1", "c2"};
    std::vector<TrackRecord> tracks;
    std::map<std::string, oracle::Track> raw;
    for (int j = 0; j < 20; ++j) {
      std::set<std::string> used;
      std::vector<TagAssignment> tags;
      const int k = ntags(rng);
      for (int i = 0; i < k; ++i) {
        auto t = "t" + std::to_string(pick(rng));
        if (used.insert(t).second) tags.push_back({t, weight(rng)});
      }
      auto id = "j" + std::to_string(j);
      for (const auto& t : tags) raw[id].tags.push_back({t.tag, t.weight});
      raw[id];
      tracks.push_back(track(id, top_tags(tags)));
    }
    auto idx = associate_tracks(tracks, class_of);
    for (const auto& [id, n] : idx) {
      double sum = 0.0;
      for (const auto& [c, v] : n) sum += v;
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
    std::vector<PlayEntry> plays;
    std::vector<std::pair<std::string, long>> raw_plays;
    for (int j = 0; j < 20; ++j) {
      if (rng() % 2) continue;
      plays.push_back({"j" + std::to_string(j), pc(rng)});
      raw_plays.push_back({plays.back().track_id, plays.back().playcount});
    }
    if (plays.empty()) continue;
    auto got = emotion_prevalence(history(top_entries(plays, plays.size())), idx, classes);
    auto want = oracle::prevalence(raw_plays, raw, class_of, classes);
    for (std::size_t c = 0; c < classes.size(); ++c) {
      CHECK(std::abs(got[c] - want.at(classes[c])) <= 1e-12);
      CHECK(got[c] >= 0.0);
    }
  }
}

TEST_CASE("scale invariance") {
  std::vector<TrackRecord> tracks = {track("a", {{"sad", 30}, {"calm", 10}}),
                                     track("b", {{"tense", 7}, {"gloomy", 3}})};
  std::vector<TrackRecord> scaled = {track("a", {{"sad", 300}, {"calm", 100}}),
                                     track("b", {{"tense", 7}, {"gloomy", 3}})};
  auto i1 = associate_tracks(tracks, kClasses);
  auto i2 = associate_tracks(scaled, kClasses);
  for (const auto& [c, v] : i1.at("a")) CHECK(i2.at("a").at(c) == doctest::Approx(v));

  auto s1 = emotion_prevalence(history({{"a", 3}, {"b", 2}}), i1, kNames);
  auto s2 = emotion_prevalence(history({{"a", 21}, {"b", 14}}), i1, kNames);
  for (std::size_t c = 0; c < kNames.size(); ++c) CHECK(s1[c] == doctest::Approx(s2[c]));
}
