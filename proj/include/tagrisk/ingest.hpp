#pragma once

// Cohort loading (line-delimited JSON fixtures) and a Last.fm-style HTTP
// client with an append-only response cache.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tagrisk/model.hpp"

namespace tagrisk::ingest {

/// Average Gregorian month, used to turn window half-widths into seconds.
inline constexpr std::int64_t kSecondsPerMonth = 2629746;

/// Raw plays of one track by one user.
struct ScrobbleLog {
  std::string track_id;
  std::vector<std::int64_t> timestamps;
};

/// Un-windowed listening log; windows are cut client side.
struct ScrobbleHistory {
  std::string user_id;
  std::int64_t center = 0;
  std::vector<ScrobbleLog> logs;
};

struct Cohort {
  std::vector<Participant> participants;
  /// Histories that arrive already windowed and truncated to top_n.
  std::vector<ListeningHistory> histories;
  std::vector<ScrobbleHistory> scrobbles;
  std::vector<TrackRecord> tracks;

  const TrackRecord* track(std::string_view track_id) const;
  const Participant* participant(std::string_view user_id) const;
  /// Rebuilds the lookup indexes; call after mutating the vectors.
  void reindex();

 private:
  std::unordered_map<std::string, std::size_t> track_index_;
  std::unordered_map<std::string, std::size_t> participant_index_;
};

/// Counts plays inside [center - h, center + h] and keeps the top n tracks
/// (playcount descending, track id ascending).
ListeningHistory window_top_tracks(const ScrobbleHistory& log, int top_n,
                                   int half_width_months);

/// The (top_n, window) view of a user's listening. Scrobble logs are windowed
/// directly; pre-windowed histories are used when their window matches and
/// their top_n is at least the requested one. Returns nullopt if neither
/// source can answer.
std::optional<ListeningHistory> resolve_history(const Cohort& cohort,
                                                std::string_view user_id,
                                                int top_n, int half_width_months);

Cohort parse_fixture(std::istream& in);
/// Throws ParseError naming the offending line, ConfigError if the file is
/// missing.
Cohort load_fixture(const std::filesystem::path& path);
void write_fixture(std::ostream& out, const Cohort& cohort);

// ---------------------------------------------------------------------------
// HTTP client
// ---------------------------------------------------------------------------

inline constexpr std::string_view kApiKeyEnv = "TAGRISK_API_KEY";

struct ApiConfig {
  /// e.g. "http://ws.audioscrobbler.com" or a local stub "http://127.0.0.1:8080".
  std::string base_url;
  std::string path = "/2.0/";
  std::string api_key;
  double rate_limit = 5.0;  // requests per second
  int max_attempts = 3;
  std::chrono::milliseconds backoff_base{200};
  std::chrono::seconds timeout{10};
};

/// Fills api_key from TAGRISK_API_KEY; validates rate_limit and attempts.
ApiConfig api_config_from_env(std::string base_url);
void validate(const ApiConfig& config);

struct CacheEntry {
  std::string key;
  std::string endpoint;
  std::string payload;
  std::int64_t fetched_at = 0;
};

/// Stable key for a request: SHA-256 over the method and the sorted
/// parameters, api_key excluded.
std::string request_key(std::string_view method,
                        const std::map<std::string, std::string>& params);

/// One JSON object per line, appended as responses arrive. Readers share a
/// lock; writers are serialized.
class ResponseCache {
 public:
  ResponseCache() = default;
  explicit ResponseCache(std::filesystem::path path);

  std::optional<std::string> lookup(const std::string& key) const;
  void store(CacheEntry entry);
  std::size_t size() const;

 private:
  std::filesystem::path path_;
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, CacheEntry> entries_;
};

/// A track the client has seen in a chart, enough to ask for its tags.
struct TrackRef {
  std::string track_id;
  std::string artist;
  std::string title;
};

class LastFmClient {
 public:
  using Clock = std::function<std::int64_t()>;

  explicit LastFmClient(ApiConfig config, ResponseCache* cache = nullptr,
                        Clock clock = nullptr);

  /// Up to n tracks played inside the window, playcount descending with
  /// track id ascending on ties. The window is applied upstream through the
  /// chart's from/to parameters.
  ListeningHistory fetch_top_tracks(const std::string& user_id, int n,
                                    TimeWindow window);

  /// Top 50 tags by weight. The track must have been returned by an earlier
  /// chart fetch, or be passed as a full reference.
  TrackRecord fetch_track_tags(const std::string& track_id);
  TrackRecord fetch_track_tags(const TrackRef& ref);

  /// Calls that actually reached the network (cache hits excluded).
  std::size_t network_calls() const noexcept { return network_calls_.load(); }

 private:
  std::string get(const std::string& method,
                  const std::map<std::string, std::string>& params);
  std::string get_uncached(const std::map<std::string, std::string>& query);
  void throttle();

  ApiConfig config_;
  ResponseCache* cache_;
  Clock clock_;
  std::atomic<std::size_t> network_calls_{0};
  std::mutex rate_mutex_;
  std::chrono::steady_clock::time_point next_slot_{};
  std::mutex refs_mutex_;
  std::map<std::string, TrackRef> refs_;
};

/// Parses a weekly-chart style payload into (track reference, playcount)
/// pairs. Throws ParseError naming the offending field.
std::vector<std::pair<TrackRef, long>> parse_chart_payload(std::string_view payload);
std::vector<TagAssignment> parse_tags_payload(std::string_view payload);

}  // namespace tagrisk::ingest
