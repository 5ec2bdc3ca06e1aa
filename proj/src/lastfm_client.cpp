#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "tagrisk/digest.hpp"
#include "tagrisk/error.hpp"
#include "tagrisk/ingest.hpp"

namespace tagrisk::ingest {

using nlohmann::json;

ApiConfig api_config_from_env(std::string base_url) {
  ApiConfig config;
  config.base_url = std::move(base_url);
  if (const char* key = std::getenv(std::string(kApiKeyEnv).c_str())) config.api_key = key;
  validate(config);
  return config;
}

void validate(const ApiConfig& config) {
  if (config.base_url.empty()) throw ConfigError("api base_url is empty");
  if (!(config.rate_limit > 0.0)) throw ConfigError("api rate_limit must be > 0");
  if (config.max_attempts < 1) throw ConfigError("api max_attempts must be >= 1");
}

std::string request_key(std::string_view method,
                        const std::map<std::string, std::string>& params) {
  std::string canonical(method);
  for (const auto& [k, v] : params) {
    if (k == "api_key") continue;
    canonical += '\n';
    canonical += k;
    canonical += '=';
    canonical += v;
  }
  return sha256_hex(canonical);
}

ResponseCache::ResponseCache(std::filesystem::path path) : path_(std::move(path)) {
  std::ifstream in(path_);
  if (!in) return;
  std::string text;
  long line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.empty()) continue;
    try {
      auto obj = json::parse(text);
      CacheEntry e{obj.at("key").get<std::string>(), obj.at("endpoint").get<std::string>(),
                   obj.at("payload").get<std::string>(),
                   obj.at("fetched_at").get<std::int64_t>()};
      entries_[e.key] = std::move(e);
    } catch (const json::exception& e) {
      throw ParseError(std::string("corrupt cache record: ") + e.what(), line);
    }
  }
}

std::optional<std::string> ResponseCache::lookup(const std::string& key) const {
  std::shared_lock lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second.payload;
}

void ResponseCache::store(CacheEntry entry) {
  std::unique_lock lock(mutex_);
  if (!path_.empty()) {
    std::ofstream out(path_, std::ios::app);
    if (!out) throw ConfigError("cannot append to cache " + path_.string());
    out << json{{"key", entry.key},
                {"endpoint", entry.endpoint},
                {"payload", entry.payload},
                {"fetched_at", entry.fetched_at}}
               .dump()
        << '\n';
  }
  entries_[entry.key] = std::move(entry);
}

std::size_t ResponseCache::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

namespace {

long as_count(const json& v, const char* what) {
  if (v.is_number_integer()) return v.get<long>();
  if (v.is_string()) {
    const auto& s = v.get_ref<const std::string&>();
    char* end = nullptr;
    long n = std::strtol(s.c_str(), &end, 10);
    if (end != s.c_str() && *end == '\0') return n;
  }
  throw ParseError(std::string("field '") + what + "' is not an integer");
}

// Last.fm returns a bare object instead of a one-element array.
const json& as_list(const json& v, json& holder) {
  if (v.is_array()) return v;
  holder = json::array({v});
  return holder;
}

std::string artist_name(const json& track) {
  if (!track.contains("artist")) throw ParseError("field 'artist' missing");
  const json& a = track.at("artist");
  if (a.is_string()) return a.get<std::string>();
  if (a.contains("#text")) return a.at("#text").get<std::string>();
  if (a.contains("name")) return a.at("name").get<std::string>();
  throw ParseError("field 'artist' has no name");
}

void raise_api_error(const json& obj) {
  const int code = obj.at("error").get<int>();
  const std::string message = obj.value("message", "");
  if (code == 6) throw NotFoundError("api: " + message);
  throw TransportError("api error " + std::to_string(code) + ": " + message);
}

json parse_payload(std::string_view payload) {
  json obj;
  try {
    obj = json::parse(payload);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("payload is not JSON: ") + e.what());
  }
  if (obj.is_object() && obj.contains("error")) raise_api_error(obj);
  return obj;
}

}  // namespace

std::vector<std::pair<TrackRef, long>> parse_chart_payload(std::string_view payload) {
  json obj = parse_payload(payload);
  const json* root = nullptr;
  for (const char* key : {"weeklytrackchart", "toptracks"}) {
    if (obj.contains(key)) root = &obj.at(key);
  }
  if (root == nullptr) throw ParseError("field 'weeklytrackchart' missing");
  std::vector<std::pair<TrackRef, long>> out;
  if (!root->contains("track")) return out;
  json holder;
  try {
    for (const auto& t : as_list(root->at("track"), holder)) {
      TrackRef ref;
      if (!t.contains("name")) throw ParseError("field 'track.name' missing");
      ref.title = t.at("name").get<std::string>();
      ref.artist = artist_name(t);
      std::string mbid = t.value("mbid", "");
      ref.track_id = mbid.empty() ? ref.artist + " - " + ref.title : mbid;
      if (!t.contains("playcount")) throw ParseError("field 'track.playcount' missing");
      long pc = as_count(t.at("playcount"), "track.playcount");
      out.emplace_back(std::move(ref), pc);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed chart entry: ") + e.what());
  }
  return out;
}

std::vector<TagAssignment> parse_tags_payload(std::string_view payload) {
  json obj = parse_payload(payload);
  if (!obj.contains("toptags")) throw ParseError("field 'toptags' missing");
  const json& root = obj.at("toptags");
  std::vector<TagAssignment> tags;
  if (!root.contains("tag")) return tags;
  json holder;
  try {
    for (const auto& t : as_list(root.at("tag"), holder)) {
      if (!t.contains("name")) throw ParseError("field 'tag.name' missing");
      if (!t.contains("count")) throw ParseError("field 'tag.count' missing");
      tags.push_back({t.at("name").get<std::string>(), as_count(t.at("count"), "tag.count")});
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed tag entry: ") + e.what());
  }
  std::erase_if(tags, [](const TagAssignment& t) { return t.tag.empty(); });
  return tags;
}

LastFmClient::LastFmClient(ApiConfig config, ResponseCache* cache, Clock clock)
    : config_(std::move(config)), cache_(cache), clock_(std::move(clock)) {
  validate(config_);
  if (!clock_) {
    clock_ = [] {
      return std::chrono::duration_cast<std::chrono::seconds>(
                 std::chrono::system_clock::now().time_since_epoch())
          .count();
    };
  }
}

void LastFmClient::throttle() {
  using namespace std::chrono;
  const auto interval = duration_cast<steady_clock::duration>(
      duration<double>(1.0 / config_.rate_limit));
  steady_clock::time_point slot;
  {
    std::lock_guard lock(rate_mutex_);
    const auto now = steady_clock::now();
    slot = std::max(now, next_slot_);
    next_slot_ = slot + interval;
  }
  std::this_thread::sleep_until(slot);
}

std::string LastFmClient::get_uncached(const std::map<std::string, std::string>& query) {
  httplib::Params params(query.begin(), query.end());
  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt < config_.max_attempts; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(config_.backoff_base * (1 << (attempt - 1)));
    throttle();
    ++network_calls_;
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout);
    client.set_read_timeout(config_.timeout);
    auto res = client.Get(config_.path, params, httplib::Headers{});
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) {
      // Rate limiting and transient upstream errors are retried.
      try {
        auto obj = json::parse(res->body);
        if (obj.is_object() && obj.contains("error")) {
          int code = obj.at("error").get<int>();
          if (code == 29 || code == 11 || code == 16) {
            last_error = "api error " + std::to_string(code);
            continue;
          }
        }
      } catch (const json::exception&) {
        // Left for the payload parser to report.
      }
      return res->body;
    }
    if (res->status == 404) throw NotFoundError("http 404 for " + config_.path);
    if (res->status >= 400 && res->status < 500 && res->status != 429) {
      // Last.fm reports most API errors with a 4xx status and a JSON body.
      try {
        auto obj = json::parse(res->body);
        if (obj.is_object() && obj.contains("error")) raise_api_error(obj);
      } catch (const json::exception&) {
      }
      throw TransportError("http status " + std::to_string(res->status));
    }
    last_error = "http status " + std::to_string(res->status);
  }
  throw TransportError("request failed after " + std::to_string(config_.max_attempts) +
                       " attempts: " + last_error);
}

std::string LastFmClient::get(const std::string& method,
                              const std::map<std::string, std::string>& params) {
  const std::string key = request_key(method, params);
  if (cache_ != nullptr) {
    if (auto hit = cache_->lookup(key)) return *hit;
  }
  auto query = params;
  query["method"] = method;
  query["format"] = "json";
  if (!config_.api_key.empty()) query["api_key"] = config_.api_key;
  std::string payload = get_uncached(query);
  // Only well-formed, non-error payloads are cached.
  parse_payload(payload);
  if (cache_ != nullptr) cache_->store({key, method, payload, clock_()});
  return payload;
}

ListeningHistory LastFmClient::fetch_top_tracks(const std::string& user_id, int n,
                                                TimeWindow window) {
  if (n < 1) throw ValidationError("top-n must be positive");
  const std::int64_t half =
      static_cast<std::int64_t>(window.half_width_months) * kSecondsPerMonth;
  const std::map<std::string, std::string> params = {
      {"user", user_id},
      {"from", std::to_string(window.center - half)},
      {"to", std::to_string(window.center + half)}};
  auto chart = parse_chart_payload(get("user.getweeklytrackchart", params));

  std::map<std::string, long> counts;
  {
    std::lock_guard lock(refs_mutex_);
    for (auto& [ref, pc] : chart) {
      if (pc < 1) continue;
      counts[ref.track_id] += pc;
      refs_.emplace(ref.track_id, ref);
    }
  }
  std::vector<PlayEntry> entries;
  for (auto& [id, pc] : counts) entries.push_back({id, pc});

  ListeningHistory h;
  h.user_id = user_id;
  h.entries = top_entries(std::move(entries), static_cast<std::size_t>(n));
  h.window = window;
  h.top_n = n;
  return h;
}

TrackRecord LastFmClient::fetch_track_tags(const std::string& track_id) {
  TrackRef ref;
  {
    std::lock_guard lock(refs_mutex_);
    auto it = refs_.find(track_id);
    if (it == refs_.end()) throw NotFoundError("unknown track '" + track_id + "'");
    ref = it->second;
  }
  return fetch_track_tags(ref);
}

TrackRecord LastFmClient::fetch_track_tags(const TrackRef& ref) {
  std::map<std::string, std::string> params = {{"artist", ref.artist}, {"track", ref.title}};
  TrackRecord t;
  t.track_id = ref.track_id;
  t.artist = ref.artist;
  t.title = ref.title;
  t.tags = top_tags(parse_tags_payload(get("track.gettoptags", params)));
  return t;
}

}  // namespace tagrisk::ingest
