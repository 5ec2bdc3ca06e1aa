#include "doctest.h"

#include "tagrisk/error.hpp"
#include "tagrisk/model.hpp"

using namespace tagrisk;

TEST_CASE("risk thresholds") {
  CHECK(classify_risk(29) == RiskLabel::AtRisk);
  CHECK(classify_risk(19) == RiskLabel::NoRisk);
  CHECK(classify_risk(24) == RiskLabel::Excluded);
  CHECK(classify_risk(20) == RiskLabel::Excluded);
  CHECK(classify_risk(28) == RiskLabel::Excluded);
  CHECK(classify_risk(10) == RiskLabel::NoRisk);
  CHECK(classify_risk(50) == RiskLabel::AtRisk);
  CHECK_THROWS_AS(classify_risk(9), ValidationError);
  CHECK_THROWS_AS(classify_risk(51), ValidationError);
}

TEST_CASE("risk is monotone in k10") {
  for (int k = kK10Min; k < kK10Max; ++k) {
    CHECK(static_cast<int>(classify_risk(k)) <= static_cast<int>(classify_risk(k + 1)));
  }
}

TEST_CASE("risk label text round trip") {
  for (auto r : {RiskLabel::NoRisk, RiskLabel::Excluded, RiskLabel::AtRisk}) {
    CHECK(risk_label_from_string(to_string(r)) == r);
  }
}

TEST_CASE("participant validation") {
  auto p = make_participant("u1", 30, 3.0, 4.0, {});
  CHECK(p.risk == RiskLabel::AtRisk);
  CHECK_NOTHROW(validate(p));
  p.risk = RiskLabel::NoRisk;
  CHECK_THROWS_AS(validate(p), ValidationError);
  CHECK_THROWS_AS(make_participant("", 15, 0, 0, {}), ValidationError);
  CHECK_THROWS_AS(make_participant("u", 60, 0, 0, {}), ValidationError);
}

TEST_CASE("top tags keeps fifty by weight") {
  std::vector<TagAssignment> tags;
  for (int i = 0; i < 60; ++i) tags.push_back({"t" + std::to_string(100 + i), i});
  auto top = top_tags(tags);
  REQUIRE(top.size() == 50);
  CHECK(top.front().weight == 59);
  CHECK(top.back().weight == 10);

  CHECK(top_tags({}).empty());
  auto two = top_tags({{"b", 40}, {"a", 100}});
  CHECK(two[0].weight == 100);
  CHECK(two[1].weight == 40);

  CHECK_THROWS_AS(top_tags({{"", 1}}), ValidationError);
  CHECK_THROWS_AS(top_tags({{"x", -1}}), ValidationError);
}

TEST_CASE("top entries tie break on track id") {
  auto e = top_entries({{"B", 5}, {"A", 5}}, 1);
  REQUIRE(e.size() == 1);
  CHECK(e[0].track_id == "A");

  auto three = top_entries({{"C", 1}, {"A", 10}, {"B", 5}}, 2);
  REQUIRE(three.size() == 2);
  CHECK(three[0] == PlayEntry{"A", 10});
  CHECK(three[1] == PlayEntry{"B", 5});
  CHECK(top_entries({{"C", 1}, {"A", 10}, {"B", 5}}, 500).size() == 3);
}

TEST_CASE("history validation") {
  ListeningHistory h{"u", {{"a", 2}, {"b", 1}}, {}, 2};
  CHECK_NOTHROW(validate(h));
  h.entries.push_back({"c", 1});
  CHECK_THROWS_AS(validate(h), ValidationError);  // more than top_n
  h.top_n = 5;
  h.entries.push_back({"a", 1});
  CHECK_THROWS_AS(validate(h), ValidationError);  // duplicate id
  h.entries = {{"a", 0}};
  CHECK_THROWS_AS(validate(h), ValidationError);  // zero plays
}

TEST_CASE("emotion point bounds") {
  CHECK_NOTHROW(EmotionPoint(EmotionSpace::VAD, {1.0, 9.0, 5.0}));
  CHECK_THROWS_AS(EmotionPoint(EmotionSpace::VAD, {0.99, 5.0, 5.0}), ValidationError);
  CHECK_THROWS_AS(EmotionPoint(EmotionSpace::VA, {5.0, 9.01}), ValidationError);
  CHECK_THROWS_AS(EmotionPoint(EmotionSpace::VA, {5.0, 5.0, 5.0}), ValidationError);
  const double raw[] = {-3.0, 12.0};
  auto c = EmotionPoint::clamped(EmotionSpace::VA, raw);
  CHECK(c[0] == 1.0);
  CHECK(c[1] == 9.0);
  CHECK(squared_distance(EmotionPoint(EmotionSpace::VA, {1.0, 1.0}),
                         EmotionPoint(EmotionSpace::VA, {4.0, 5.0})) == doctest::Approx(25.0));
  CHECK_THROWS_AS(squared_distance(EmotionPoint(EmotionSpace::VA, {1.0, 1.0}),
                                   EmotionPoint(EmotionSpace::VAD, {1.0, 1.0, 1.0})),
                  ValidationError);
}

TEST_CASE("score table access") {
  ScoreTable t({"u1", "u2"}, {"A", "B"});
  const double r[] = {0.25, 0.5};
  t.set_row(1, r);
  CHECK(t.at(1, 1) == 0.5);
  CHECK(t.column(0) == std::vector<double>{0.0, 0.25});
  CHECK(t.row_index("u2") == 1u);
  CHECK(!t.col_index("C"));
}
