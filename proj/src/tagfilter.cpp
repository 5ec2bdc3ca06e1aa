#include "tagrisk/tagfilter.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include "tagrisk/error.hpp"

namespace tagrisk::tagfilter {

PosTag pos_from_string(std::string_view text) {
  if (text == "ADJ") return PosTag::ADJ;
  if (text == "ADV") return PosTag::ADV;
  if (text == "NOUN") return PosTag::NOUN;
  if (text == "VERB") return PosTag::VERB;
  if (text == "OTHER") return PosTag::OTHER;
  throw ParseError("unknown POS tag '" + std::string(text) + "'");
}

std::string_view to_string(PosTag tag) {
  switch (tag) {
    case PosTag::ADJ: return "ADJ";
    case PosTag::ADV: return "ADV";
    case PosTag::NOUN: return "NOUN";
    case PosTag::VERB: return "VERB";
    case PosTag::OTHER: return "OTHER";
  }
  return "OTHER";
}

std::string_view to_string(Stage stage) {
  switch (stage) {
    case Stage::Empty: return "empty";
    case Stage::Stopword: return "stopword";
    case Stage::Spelling: return "spelling";
    case Stage::PartOfSpeech: return "pos";
    case Stage::Multiword: return "multiword";
    case Stage::Blocklist: return "blocklist";
    case Stage::Duplicate: return "duplicate";
  }
  return "?";
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::ifstream open_resource(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open resource file " + path.string());
  return in;
}

std::set<std::string> read_word_set(const std::filesystem::path& path) {
  auto in = open_resource(path);
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    auto word = normalize(line);
    if (!word.empty()) out.insert(std::move(word));
  }
  return out;
}

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string w;
  while (in >> w) out.push_back(std::move(w));
  return out;
}

}  // namespace

FilterResources load_resources(const ResourcePaths& paths) {
  FilterResources r;
  r.stopwords = read_word_set(paths.stopwords);
  r.wordlist = read_word_set(paths.wordlist);
  r.blocklist = read_word_set(paths.blocklist);

  auto in = open_resource(paths.pos_lexicon);
  std::map<std::string, double> best_count;
  std::string line;
  long n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::istringstream fields(line);
    for (std::string col; std::getline(fields, col, '\t');) cols.push_back(col);
    if (cols.size() < 2 || cols.size() > 3) {
      throw ParseError("POS lexicon line must be word<TAB>POS[<TAB>count]", n);
    }
    const std::string word = lower(cols[0]);
    PosTag tag;
    try {
      tag = pos_from_string(cols[1]);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), n);
    }
    double count = 0.0;
    if (cols.size() == 3) {
      try {
        count = std::stod(cols[2]);
      } catch (const std::exception&) {
        throw ParseError("bad frequency column", n);
      }
    }
    auto it = best_count.find(word);
    if (it == best_count.end() || count > it->second) {
      best_count[word] = count;
      r.pos_lexicon[word] = tag;
    }
  }
  return r;
}

std::string normalize(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  for (char ch : raw) {
    auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c) || c == '-' || c == '_' || c == '/') {
      pending_space = !out.empty();
      continue;
    }
    if (c < 0x80 && std::ispunct(c)) continue;
    if (pending_space) {
      out += ' ';
      pending_space = false;
    }
    out += static_cast<char>(std::tolower(c));
  }
  return out;
}

std::optional<std::string> spell_correct(std::string_view word,
                                         const std::set<std::string>& wordlist) {
  const std::string w(word);
  if (wordlist.contains(w)) return w;
  static constexpr std::string_view kAlphabet = "abcdefghijklmnopqrstuvwxyz0123456789";

  std::set<std::string> hits;
  auto probe = [&](std::string candidate) {
    if (wordlist.contains(candidate)) hits.insert(std::move(candidate));
  };
  for (std::size_t i = 0; i < w.size(); ++i) {
    probe(w.substr(0, i) + w.substr(i + 1));
    for (char c : kAlphabet) {
      if (c == w[i]) continue;
      std::string s = w;
      s[i] = c;
      probe(std::move(s));
    }
  }
  for (std::size_t i = 0; i <= w.size(); ++i) {
    for (char c : kAlphabet) probe(w.substr(0, i) + c + w.substr(i));
  }
  if (hits.size() == 1) return *hits.begin();
  return std::nullopt;
}

FilterResult filter_tags(std::span<const std::string> tags, const FilterResources& resources) {
  FilterResult result;
  const std::set<std::string> distinct(tags.begin(), tags.end());
  result.report.input = distinct.size();
  for (Stage s : kAllStages) result.report.dropped_per_stage[s] = 0;

  auto drop = [&](const std::string& raw, Stage stage) {
    result.report.dropped[raw] = stage;
    ++result.report.dropped_per_stage[stage];
  };

  for (const auto& raw : distinct) {
    const std::string norm = normalize(raw);
    if (norm.empty()) {
      drop(raw, Stage::Empty);
      continue;
    }
    if (resources.stopwords.contains(norm)) {
      drop(raw, Stage::Stopword);
      continue;
    }

    auto words = split_words(norm);
    bool spelled = true;
    for (auto& w : words) {
      auto fixed = spell_correct(w, resources.wordlist);
      if (!fixed) {
        spelled = false;
        break;
      }
      w = *fixed;
    }
    if (!spelled) {
      drop(raw, Stage::Spelling);
      continue;
    }

    // Multiword tags have no single dominant POS and are judged at the next
    // stage.
    if (words.size() == 1) {
      auto it = resources.pos_lexicon.find(words.front());
      PosTag pos = it == resources.pos_lexicon.end() ? PosTag::OTHER : it->second;
      if (pos != PosTag::ADJ && pos != PosTag::ADV) {
        drop(raw, Stage::PartOfSpeech);
        continue;
      }
    }
    if (words.size() >= 2) {
      drop(raw, Stage::Multiword);
      continue;
    }
    const std::string& tag = words.front();
    if (resources.blocklist.contains(tag)) {
      drop(raw, Stage::Blocklist);
      continue;
    }
    result.canonical[raw] = tag;
    if (!result.vocabulary.insert(tag).second) drop(raw, Stage::Duplicate);
  }
  result.report.output = result.vocabulary.size();
  return result;
}

}  // namespace tagrisk::tagfilter
