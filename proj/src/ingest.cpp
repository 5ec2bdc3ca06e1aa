#include "tagrisk/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>

#include "json.hpp"

#include "tagrisk/error.hpp"

namespace tagrisk::ingest {

using nlohmann::json;

const TrackRecord* Cohort::track(std::string_view track_id) const {
  auto it = track_index_.find(std::string(track_id));
  return it == track_index_.end() ? nullptr : &tracks[it->second];
}

const Participant* Cohort::participant(std::string_view user_id) const {
  auto it = participant_index_.find(std::string(user_id));
  return it == participant_index_.end() ? nullptr : &participants[it->second];
}

void Cohort::reindex() {
  track_index_.clear();
  participant_index_.clear();
  for (std::size_t i = 0; i < tracks.size(); ++i) track_index_[tracks[i].track_id] = i;
  for (std::size_t i = 0; i < participants.size(); ++i) {
    participant_index_[participants[i].user_id] = i;
  }
}

ListeningHistory window_top_tracks(const ScrobbleHistory& log, int top_n,
                                   int half_width_months) {
  if (top_n < 1) throw ValidationError("top_n must be positive");
  if (half_width_months < 0) throw ValidationError("negative window half-width");
  const std::int64_t half = static_cast<std::int64_t>(half_width_months) * kSecondsPerMonth;
  const std::int64_t lo = log.center - half;
  const std::int64_t hi = log.center + half;

  std::map<std::string, long> counts;
  for (const auto& track : log.logs) {
    long n = 0;
    for (auto ts : track.timestamps) {
      if (ts >= lo && ts <= hi) ++n;
    }
    if (n > 0) counts[track.track_id] += n;
  }
  std::vector<PlayEntry> entries;
  entries.reserve(counts.size());
  for (auto& [id, n] : counts) entries.push_back({id, n});

  ListeningHistory h;
  h.user_id = log.user_id;
  h.entries = top_entries(std::move(entries), static_cast<std::size_t>(top_n));
  h.window = {log.center, half_width_months};
  h.top_n = top_n;
  return h;
}

std::optional<ListeningHistory> resolve_history(const Cohort& cohort,
                                                std::string_view user_id,
                                                int top_n, int half_width_months) {
  for (const auto& log : cohort.scrobbles) {
    if (log.user_id == user_id) return window_top_tracks(log, top_n, half_width_months);
  }
  const ListeningHistory* best = nullptr;
  for (const auto& h : cohort.histories) {
    if (h.user_id != user_id || h.window.half_width_months != half_width_months) continue;
    if (h.top_n < top_n) continue;
    if (best == nullptr || h.top_n < best->top_n) best = &h;
  }
  if (best == nullptr) return std::nullopt;
  ListeningHistory out = *best;
  out.entries = top_entries(out.entries, static_cast<std::size_t>(top_n));
  out.top_n = top_n;
  return out;
}

namespace {

template <typename T>
T field(const json& obj, const char* name, long line) {
  auto it = obj.find(name);
  if (it == obj.end()) throw ParseError(std::string("missing field '") + name + "'", line);
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw ParseError(std::string("field '") + name + "' has the wrong type", line);
  }
}

template <typename T>
T field_or(const json& obj, const char* name, T fallback, long line) {
  if (!obj.contains(name) || obj.at(name).is_null()) return fallback;
  return field<T>(obj, name, line);
}

Personality parse_personality(const json& obj, long line) {
  Personality p;
  if (!obj.contains("personality")) return p;
  const json& v = obj.at("personality");
  if (v.is_array()) {
    if (v.size() != 5) throw ParseError("personality needs 5 values (O,C,E,A,N)", line);
    auto get = [&](std::size_t i) {
      if (!v[i].is_number()) throw ParseError("personality value is not a number", line);
      return v[i].get<double>();
    };
    p = {get(0), get(1), get(2), get(3), get(4)};
  } else if (v.is_object()) {
    p.openness = field<double>(v, "O", line);
    p.conscientiousness = field<double>(v, "C", line);
    p.extraversion = field<double>(v, "E", line);
    p.agreeableness = field<double>(v, "A", line);
    p.neuroticism = field<double>(v, "N", line);
  } else {
    throw ParseError("field 'personality' has the wrong type", line);
  }
  return p;
}

Participant parse_participant(const json& obj, long line) {
  Participant p;
  try {
    p = make_participant(field<std::string>(obj, "user_id", line),
                         field<int>(obj, "k10", line),
                         field_or<double>(obj, "hums_healthy", 0.0, line),
                         field_or<double>(obj, "hums_unhealthy", 0.0, line),
                         parse_personality(obj, line),
                         field_or<std::int64_t>(obj, "survey_time", 0, line));
    p.k10_items = field_or<std::vector<int>>(obj, "k10_items", {}, line);
    p.hums_unhealthy_items =
        field_or<std::vector<double>>(obj, "hums_unhealthy_items", {}, line);
    validate(p);
  } catch (const ValidationError& e) {
    throw ParseError(e.what(), line);
  }
  if (obj.contains("risk")) {
    auto stated = risk_label_from_string(field<std::string>(obj, "risk", line));
    if (stated != p.risk) throw ParseError("risk label disagrees with K10", line);
  }
  return p;
}

TrackRecord parse_track(const json& obj, long line) {
  TrackRecord t;
  t.track_id = field<std::string>(obj, "track_id", line);
  if (t.track_id.empty()) throw ParseError("empty track_id", line);
  t.artist = field_or<std::string>(obj, "artist", "", line);
  t.title = field_or<std::string>(obj, "title", "", line);
  std::vector<TagAssignment> tags;
  if (obj.contains("tags")) {
    const json& arr = obj.at("tags");
    if (!arr.is_array()) throw ParseError("field 'tags' has the wrong type", line);
    for (const auto& tag : arr) {
      tags.push_back({field<std::string>(tag, "tag", line), field<long>(tag, "weight", line)});
    }
  }
  try {
    t.tags = top_tags(std::move(tags));
  } catch (const ValidationError& e) {
    throw ParseError(e.what(), line);
  }
  return t;
}

struct PendingRefs {
  long line;
  std::vector<std::string> track_ids;
};

}  // namespace

Cohort parse_fixture(std::istream& in) {
  Cohort cohort;
  std::vector<PendingRefs> refs;
  std::set<std::string> user_ids;
  std::set<std::string> track_ids;
  std::string text;
  long line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.find_first_not_of(" \t") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("invalid JSON: ") + e.what(), line);
    }
    if (!obj.is_object()) throw ParseError("record is not a JSON object", line);
    const auto kind = field<std::string>(obj, "kind", line);

    if (kind == "participant") {
      auto p = parse_participant(obj, line);
      if (!user_ids.insert(p.user_id).second) {
        throw ParseError("duplicate participant " + p.user_id, line);
      }
      cohort.participants.push_back(std::move(p));
    } else if (kind == "track") {
      auto t = parse_track(obj, line);
      if (!track_ids.insert(t.track_id).second) {
        throw ParseError("duplicate track " + t.track_id, line);
      }
      cohort.tracks.push_back(std::move(t));
    } else if (kind == "history") {
      PendingRefs pending{line, {}};
      const auto user = field<std::string>(obj, "user_id", line);
      const auto center = field_or<std::int64_t>(obj, "center", 0, line);
      if (obj.contains("scrobbles")) {
        ScrobbleHistory log{user, center, {}};
        for (const auto& item : obj.at("scrobbles")) {
          ScrobbleLog s{field<std::string>(item, "track_id", line),
                        field<std::vector<std::int64_t>>(item, "timestamps", line)};
          pending.track_ids.push_back(s.track_id);
          log.logs.push_back(std::move(s));
        }
        cohort.scrobbles.push_back(std::move(log));
      } else {
        ListeningHistory h;
        h.user_id = user;
        h.window = {center, field<int>(obj, "window_months", line)};
        h.top_n = field<int>(obj, "top_n", line);
        for (const auto& item : field<json>(obj, "entries", line)) {
          h.entries.push_back(
              {field<std::string>(item, "track_id", line), field<long>(item, "playcount", line)});
          pending.track_ids.push_back(h.entries.back().track_id);
        }
        try {
          validate(h);
        } catch (const ValidationError& e) {
          throw ParseError(e.what(), line);
        }
        h.entries = top_entries(std::move(h.entries), h.entries.size());
        cohort.histories.push_back(std::move(h));
      }
      refs.push_back(std::move(pending));
    } else {
      throw ParseError("unknown record kind '" + kind + "'", line);
    }
  }

  for (const auto& pending : refs) {
    for (const auto& id : pending.track_ids) {
      if (!track_ids.contains(id)) {
        throw ParseError("history references unknown track '" + id + "'", pending.line);
      }
    }
  }
  cohort.reindex();
  return cohort;
}

Cohort load_fixture(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open fixture " + path.string());
  return parse_fixture(in);
}

void write_fixture(std::ostream& out, const Cohort& cohort) {
  for (const auto& p : cohort.participants) {
    json obj = {{"kind", "participant"},
                {"user_id", p.user_id},
                {"k10", p.k10},
                {"hums_healthy", p.hums_healthy},
                {"hums_unhealthy", p.hums_unhealthy},
                {"personality",
                 {p.personality.openness, p.personality.conscientiousness,
                  p.personality.extraversion, p.personality.agreeableness,
                  p.personality.neuroticism}},
                {"risk", to_string(p.risk)},
                {"survey_time", p.survey_time}};
    if (!p.k10_items.empty()) obj["k10_items"] = p.k10_items;
    if (!p.hums_unhealthy_items.empty()) obj["hums_unhealthy_items"] = p.hums_unhealthy_items;
    out << obj.dump() << '\n';
  }
  for (const auto& h : cohort.histories) {
    json entries = json::array();
    for (const auto& e : h.entries) {
      entries.push_back({{"track_id", e.track_id}, {"playcount", e.playcount}});
    }
    out << json{{"kind", "history"},
                {"user_id", h.user_id},
                {"center", h.window.center},
                {"window_months", h.window.half_width_months},
                {"top_n", h.top_n},
                {"entries", entries}}
               .dump()
        << '\n';
  }
  for (const auto& log : cohort.scrobbles) {
    json items = json::array();
    for (const auto& s : log.logs) {
      items.push_back({{"track_id", s.track_id}, {"timestamps", s.timestamps}});
    }
    out << json{{"kind", "history"},
                {"user_id", log.user_id},
                {"center", log.center},
                {"scrobbles", items}}
               .dump()
        << '\n';
  }
  for (const auto& t : cohort.tracks) {
    json tags = json::array();
    for (const auto& a : t.tags) tags.push_back({{"tag", a.tag}, {"weight", a.weight}});
    out << json{{"kind", "track"},
                {"track_id", t.track_id},
                {"artist", t.artist},
                {"title", t.title},
                {"tags", tags}}
               .dump()
        << '\n';
  }
}

}  // namespace tagrisk::ingest
