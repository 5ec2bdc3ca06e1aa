#pragma once

// Four-stage reduction of raw social tags to single-word emotion descriptors.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tagrisk::tagfilter {

enum class PosTag { ADJ, ADV, NOUN, VERB, OTHER };

PosTag pos_from_string(std::string_view text);
std::string_view to_string(PosTag tag);

struct FilterResources {
  std::set<std::string> stopwords;
  /// English word list, used both for existence and spelling checks.
  std::set<std::string> wordlist;
  /// Dominant part of speech per word.
  std::map<std::string, PosTag> pos_lexicon;
  /// Curated tags with no mood or emotion association.
  std::set<std::string> blocklist;
};

struct ResourcePaths {
  std::filesystem::path stopwords;
  std::filesystem::path wordlist;
  std::filesystem::path pos_lexicon;
  std::filesystem::path blocklist;
};

/// Reads the four UTF-8 line files. POS lines are "word<TAB>POS" with an
/// optional third frequency column; the most frequent tag wins. Throws
/// ConfigError for a missing file, ParseError for a bad line.
FilterResources load_resources(const ResourcePaths& paths);

/// Stage at which a tag left the pipeline, in pipeline order.
enum class Stage { Empty, Stopword, Spelling, PartOfSpeech, Multiword, Blocklist, Duplicate };

inline constexpr Stage kAllStages[] = {Stage::Empty,     Stage::Stopword,
                                       Stage::Spelling,  Stage::PartOfSpeech,
                                       Stage::Multiword, Stage::Blocklist,
                                       Stage::Duplicate};

std::string_view to_string(Stage stage);

struct FilterReport {
  std::size_t input = 0;
  std::size_t output = 0;
  std::map<Stage, std::size_t> dropped_per_stage;
  std::map<std::string, Stage> dropped;
};

struct FilterResult {
  std::set<std::string> vocabulary;
  /// Raw tag -> surviving vocabulary entry (after normalization and
  /// spelling correction). Only raw tags that survived, or collapsed onto a
  /// survivor, appear here.
  std::map<std::string, std::string> canonical;
  FilterReport report;
};

/// Lowercases, strips punctuation ('-', '_' and '/' become spaces), collapses
/// whitespace and trims.
std::string normalize(std::string_view raw);

/// Returns the word itself if listed, else the unique list entry at
/// Levenshtein distance 1, else nullopt (ambiguous or no neighbour).
std::optional<std::string> spell_correct(std::string_view word,
                                         const std::set<std::string>& wordlist);

/// normalize -> stopword/empty -> spelling/existence -> POS in {ADJ, ADV} ->
/// single word only -> blocklist -> deduplicate.
FilterResult filter_tags(std::span<const std::string> tags, const FilterResources& resources);

}  // namespace tagrisk::tagfilter
