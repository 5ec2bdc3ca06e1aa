#include "tagrisk/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "tagrisk/error.hpp"
#include "tagrisk/gems.hpp"
#include "tagrisk/tagfilter.hpp"

namespace tagrisk::synthetic {

namespace fs = std::filesystem;

const std::map<std::string, std::vector<std::string>>& emotion_tags() {
  static const std::map<std::string, std::vector<std::string>> tags = {
      {"Wonder", {"wondrous", "magical", "marvelous", "breathtaking"}},
      {"Transcendence", {"ethereal", "spiritual", "divine", "mystical"}},
      {"Tenderness", {"loving", "gentle", "romantic", "sweet"}},
      {"Nostalgia", {"wistful", "reminiscent", "bittersweet", "retro"}},
      {"Peacefulness", {"peaceful", "tranquil", "mellow", "chill"}},
      {"Power", {"powerful", "epic", "intense", "mighty"}},
      {"Joyful Activation", {"upbeat", "cheerful", "bouncy", "playful"}},
      {"Tension", {"anxious", "angry", "aggressive", "restless"}},
      {"Sadness", {"sad", "gloomy", "depressing", "heartbreaking", "mournful", "tearful"}},
  };
  return tags;
}

const std::vector<std::vector<std::string>>& genre_families() {
  static const std::vector<std::vector<std::string>> families = {
      {"rock", "indie", "alternative", "grunge", "punk", "garage"},
      {"electronic", "house", "techno", "trance", "ambient", "idm"},
      {"rap", "hiphop", "trap", "grime", "rnb", "soul"},
      {"folk", "acoustic", "country", "bluegrass", "americana", "singer songwriter"},
  };
  return families;
}

namespace {

// Filler tags, each exercising one filter stage.
const std::vector<std::string> kStopwordTags = {"the", "favorites", "my music"};
const std::vector<std::string> kMultiwordTags = {"seen live", "hip hop", "female vocalists"};
const std::vector<std::string> kBlockedTags = {"favorite", "british", "female"};
const std::vector<std::string> kMisspelledTags = {"gloomyy", "mellw", "saad", "upbeet"};
const std::vector<std::string> kUnknownTags = {"xyzzy", "asdfgh", "zzqx"};
const std::vector<std::string> kNoEmbeddingTags = {"softly"};
const std::vector<std::string> kAbsentGenres = {"polka", "zydeco"};

const std::vector<std::string> kStopwords = {"the", "a", "an", "and", "of", "my", "favorites",
                                             "music", "good", "best"};

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

std::size_t pick(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

std::string pseudo_word(std::size_t i) {
  std::string s = "zz";
  for (int k = 0; k < 4; ++k) {
    s += static_cast<char>('a' + i % 26);
    i /= 26;
  }
  return s;
}

induction::Norms centroid_norms(const gems::GemsCategory& c) {
  return {c.default_vad[0], c.default_vad[1], c.default_vad[2]};
}

std::vector<float> encode(const Eigen::MatrixXd& m, const induction::Norms& n, double noise,
                          std::mt19937_64& rng) {
  Eigen::Vector3d u((n.valence - 5.0) / 4.0, (n.arousal - 5.0) / 4.0, (n.dominance - 5.0) / 4.0);
  Eigen::VectorXd v = m * u;
  std::normal_distribution<double> g(0.0, noise);
  std::vector<float> out(static_cast<std::size_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] =
      static_cast<float>(v(i) + g(rng));
  return out;
}

Eigen::MatrixXd random_map(std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0 / std::sqrt(3.0));
  Eigen::MatrixXd m(static_cast<Eigen::Index>(dim), 3);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

}  // namespace

World make_world(const WorldSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  const Eigen::MatrixXd m = random_map(spec.dim, rng);
  World w;
  w.embeddings.dim = spec.dim;

  const auto table = gems::default_table();
  std::normal_distribution<double> jitter(0.0, 0.08);
  auto clamp = [](double v) { return std::clamp(v, 1.0, 9.0); };
  for (const auto& c : table.categories) {
    const auto base = centroid_norms(c);
    for (const auto& term : c.terms) {
      std::istringstream words(term.term);
      for (std::string word; words >> word;) w.designed.emplace(word, base);
    }
    for (const auto& tag : emotion_tags().at(c.name)) {
      w.designed[tag] = {clamp(base.valence + jitter(rng)), clamp(base.arousal + jitter(rng)),
                         clamp(base.dominance + jitter(rng))};
    }
  }
  for (const auto& [word, norms] : w.designed) {
    w.embeddings.vectors[word] = encode(m, norms, spec.noise, rng);
  }
  // Genre and filler words get neutral-ish vectors so they embed but carry
  // no emotion signal.
  std::vector<std::string> neutral;
  for (const auto& f : genre_families()) {
    for (const auto& g : f) {
      std::istringstream words(g);
      for (std::string word; words >> word;) neutral.push_back(word);
    }
  }
  for (const auto& t : kBlockedTags) neutral.push_back(t);
  for (const auto& word : neutral) {
    induction::Norms n{uniform(rng, 4.0, 6.0), uniform(rng, 4.0, 6.0), uniform(rng, 4.0, 6.0)};
    w.embeddings.vectors[word] = encode(m, n, spec.noise, rng);
  }
  for (std::size_t i = 0; i < spec.lexicon_words; ++i) {
    induction::Norms n{uniform(rng, 1.5, 8.5), uniform(rng, 1.5, 8.5), uniform(rng, 1.5, 8.5)};
    const auto word = pseudo_word(i);
    w.lexicon[word] = n;
    w.embeddings.vectors[word] = encode(m, n, spec.noise, rng);
  }
  return w;
}

World linear_lexicon(std::size_t words, std::size_t dim, double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXd m = random_map(dim, rng);
  World w;
  w.embeddings.dim = dim;
  for (std::size_t i = 0; i < words; ++i) {
    induction::Norms n{uniform(rng, 1.0, 9.0), uniform(rng, 1.0, 9.0), uniform(rng, 1.0, 9.0)};
    const auto word = pseudo_word(i);
    w.lexicon[word] = n;
    w.embeddings.vectors[word] = encode(m, n, noise, rng);
  }
  return w;
}

ingest::Cohort make_cohort(const CohortSpec& spec) {
  if (spec.min_tracks > spec.max_tracks || spec.min_plays > spec.max_plays ||
      spec.min_tracks < 2 || spec.catalog < spec.max_tracks) {
    throw ConfigError("inconsistent synthetic cohort sizes");
  }
  std::mt19937_64 rng(spec.seed);
  ingest::Cohort cohort;

  // Catalog. Moods: one of the nine categories or none.
  const auto& emo = emotion_tags();
  const std::vector<std::string> cats(kGemsCategories.begin(), kGemsCategories.end());
  const auto& families = genre_families();
  std::vector<std::string> fillers;
  for (const auto* list : {&kStopwordTags, &kMultiwordTags, &kBlockedTags, &kMisspelledTags,
                           &kUnknownTags, &kNoEmbeddingTags}) {
    fillers.insert(fillers.end(), list->begin(), list->end());
  }
  std::vector<std::size_t> sad_tracks, other_tracks;
  for (std::size_t j = 0; j < spec.catalog; ++j) {
    TrackRecord t;
    char id[32];
    std::snprintf(id, sizeof id, "t%04zu", j);
    t.track_id = id;
    t.artist = "Artist " + std::to_string(j % 97);
    t.title = "Song " + std::to_string(j);

    std::map<std::string, long> tags;
    const double r = uniform(rng, 0.0, 1.0);
    int mood = -1;
    if (r < 0.15) mood = 8;  // Sadness
    else if (r < 0.85) mood = static_cast<int>(pick(rng, 8));
    if (mood >= 0) {
      const auto& words = emo.at(cats[static_cast<std::size_t>(mood)]);
      const std::size_t k = 1 + pick(rng, 3);
      for (std::size_t i = 0; i < k; ++i) {
        tags[words[pick(rng, words.size())]] += 30 + static_cast<long>(pick(rng, 71));
      }
      if (mood != 8 && uniform(rng, 0.0, 1.0) < 0.2) {
        const auto& other = emo.at(cats[pick(rng, 8)]);
        tags[other[pick(rng, other.size())]] += 5 + static_cast<long>(pick(rng, 11));
      }
    }
    const auto& fam = families[pick(rng, families.size())];
    const std::size_t ng = 2 + pick(rng, 3);
    for (std::size_t i = 0; i < ng; ++i) {
      tags[fam[pick(rng, fam.size())]] += 20 + static_cast<long>(pick(rng, 81));
    }
    if (uniform(rng, 0.0, 1.0) < 0.1) {
      const auto& of = families[pick(rng, families.size())];
      tags[of[pick(rng, of.size())]] += 5 + static_cast<long>(pick(rng, 11));
    }
    if (uniform(rng, 0.0, 1.0) < 0.3) {
      tags[fillers[pick(rng, fillers.size())]] += 1 + static_cast<long>(pick(rng, 20));
    }
    for (const auto& [tag, weight] : tags) t.tags.push_back({tag, weight});
    t.tags = top_tags(std::move(t.tags));
    (mood == 8 ? sad_tracks : other_tracks).push_back(j);
    cohort.tracks.push_back(std::move(t));
  }
  if (sad_tracks.size() < 3) throw DataError("synthetic catalog has too few Sadness tracks");

  // Participants in shuffled group order so ids carry no group signal.
  std::vector<RiskLabel> groups;
  groups.insert(groups.end(), spec.at_risk, RiskLabel::AtRisk);
  groups.insert(groups.end(), spec.no_risk, RiskLabel::NoRisk);
  groups.insert(groups.end(), spec.excluded, RiskLabel::Excluded);
  std::shuffle(groups.begin(), groups.end(), rng);

  constexpr std::int64_t kBaseTime = 1'600'000'000;
  for (std::size_t u = 0; u < groups.size(); ++u) {
    char id[32];
    std::snprintf(id, sizeof id, "u%03zu", u + 1);
    const RiskLabel group = groups[u];
    int lo = 10, hi = 19;
    if (group == RiskLabel::AtRisk) lo = 29, hi = 50;
    if (group == RiskLabel::Excluded) lo = 20, hi = 28;
    const int k10 = lo + static_cast<int>(pick(rng, static_cast<std::size_t>(hi - lo + 1)));

    // Ten items in 1..5 summing to k10, spread around the mean level.
    std::vector<int> items(10, k10 / 10);
    for (int rem = k10 % 10; rem > 0; --rem) {
      std::size_t i;
      do i = pick(rng, 10); while (items[i] >= 5);
      ++items[i];
    }
    for (int swaps = 0; swaps < 3; ++swaps) {
      const auto a = pick(rng, 10), b = pick(rng, 10);
      if (a != b && items[a] < 5 && items[b] > 1) {
        ++items[a];
        --items[b];
      }
    }
    const double level = static_cast<double>(k10 - 10) / 40.0;
    std::normal_distribution<double> g(0.0, 0.7);
    std::vector<double> unhealthy;
    for (int i = 0; i < 5; ++i) {
      unhealthy.push_back(std::clamp(std::round(1.5 + 4.0 * level + g(rng)), 1.0, 7.0));
    }
    double healthy = 0.0;
    for (int i = 0; i < 5; ++i) healthy += std::clamp(std::round(uniform(rng, 2.5, 6.5)), 1.0, 7.0);
    const Personality traits{uniform(rng, 1, 5), uniform(rng, 1, 5), uniform(rng, 1, 5),
                             uniform(rng, 1, 5),
                             std::clamp(1.5 + 3.0 * level + uniform(rng, -0.8, 0.8), 1.0, 5.0)};
    const std::int64_t center = kBaseTime + static_cast<std::int64_t>(pick(rng, 30'000'000));
    Participant p = make_participant(id, k10, healthy / 5.0,
                                     (unhealthy[0] + unhealthy[1] + unhealthy[2] + unhealthy[3] +
                                      unhealthy[4]) / 5.0,
                                     traits, center);
    p.k10_items = items;
    p.hums_unhealthy_items = unhealthy;
    cohort.participants.push_back(std::move(p));

    // Library: distinct tracks, a fixed slice of them sad.
    const std::size_t m = spec.min_tracks + pick(rng, spec.max_tracks - spec.min_tracks + 1);
    const std::size_t k_sad =
        std::min(sad_tracks.size(), std::max<std::size_t>(3, static_cast<std::size_t>(m * 0.15)));
    std::vector<std::size_t> sad = sad_tracks, other = other_tracks;
    std::shuffle(sad.begin(), sad.end(), rng);
    std::shuffle(other.begin(), other.end(), rng);
    sad.resize(k_sad);
    other.resize(std::min(other.size(), m - k_sad));

    double share = uniform(rng, spec.sad_share_lo, spec.sad_share_hi);
    if (group == RiskLabel::AtRisk) share = std::min(0.95, share * spec.sad_multiplier);
    auto zipf = [](std::size_t n) {
      std::vector<double> w(n);
      for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / std::pow(static_cast<double>(i + 1), 0.8);
      return std::discrete_distribution<std::size_t>(w.begin(), w.end());
    };
    auto sad_pick = zipf(sad.size()), other_pick = zipf(other.size());

    std::map<std::size_t, std::vector<std::int64_t>> plays;
    const std::size_t total = spec.min_plays + pick(rng, spec.max_plays - spec.min_plays + 1);
    const auto span = static_cast<double>(4 * ingest::kSecondsPerMonth);
    for (std::size_t k = 0; k < total; ++k) {
      const bool is_sad = uniform(rng, 0.0, 1.0) < share;
      const std::size_t track = is_sad ? sad[sad_pick(rng)] : other[other_pick(rng)];
      plays[track].push_back(center + static_cast<std::int64_t>(uniform(rng, -span, span)));
    }
    ingest::ScrobbleHistory h;
    h.user_id = id;
    h.center = center;
    for (auto& [track, ts] : plays) {
      std::sort(ts.begin(), ts.end());
      h.logs.push_back({cohort.tracks[track].track_id, std::move(ts)});
    }
    cohort.scrobbles.push_back(std::move(h));
  }
  cohort.reindex();
  return cohort;
}

namespace {

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
}

}  // namespace

void write_experiment(const fs::path& dir, const CohortSpec& cohort_spec, const WorldSpec& world_spec) {
  fs::create_directories(dir);
  const World world = make_world(world_spec);

  {
    std::ofstream out(dir / "embeddings.vec", std::ios::binary | std::ios::trunc);
    out << world.embeddings.vectors.size() << ' ' << world.embeddings.dim << '\n';
    std::map<std::string, std::vector<float>> sorted(world.embeddings.vectors.begin(),
                                                     world.embeddings.vectors.end());
    char buf[32];
    for (const auto& [word, v] : sorted) {
      out << word;
      for (float x : v) {
        std::snprintf(buf, sizeof buf, " %.6f", static_cast<double>(x));
        out << buf;
      }
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "lexicon.csv", std::ios::binary | std::ios::trunc);
    out << "word,valence,arousal,dominance\n";
    char buf[96];
    for (const auto& [word, n] : world.lexicon) {
      std::snprintf(buf, sizeof buf, ",%.4f,%.4f,%.4f\n", n.valence, n.arousal, n.dominance);
      out << word << buf;
    }
  }

  // Filter resources.
  std::set<std::string> words;
  std::vector<std::string> pos;
  auto add = [&](const std::string& w, const char* tag) {
    if (words.insert(w).second) pos.push_back(w + "\t" + tag + "\t100");
  };
  for (const auto& [cat, tags] : emotion_tags()) {
    for (const auto& t : tags) add(t, "ADJ");
  }
  for (const auto& t : kBlockedTags) add(t, "ADJ");
  add("softly", "ADV");
  for (const auto& f : genre_families()) {
    for (const auto& g : f) {
      std::istringstream in(g);
      for (std::string w; in >> w;) add(w, "NOUN");
    }
  }
  for (const auto& w : {"seen", "live", "hip", "hop", "vocalists", "music", "the", "my",
                        "favorites"}) {
    add(w, "NOUN");
  }
  // A second, rarer reading must not override the dominant one.
  pos.push_back("sad\tNOUN\t1");
  write_lines(dir / "wordlist.txt", {words.begin(), words.end()});
  write_lines(dir / "pos.tsv", pos);
  write_lines(dir / "stopwords.txt", kStopwords);
  write_lines(dir / "blocklist.txt", kBlockedTags);

  std::vector<std::string> genres = {"# genre tags"};
  for (const auto& f : genre_families()) genres.insert(genres.end(), f.begin(), f.end());
  genres.insert(genres.end(), kAbsentGenres.begin(), kAbsentGenres.end());
  write_lines(dir / "genres.txt", genres);

  {
    const auto cohort = make_cohort(cohort_spec);
    std::ofstream out(dir / "cohort.jsonl", std::ios::binary | std::ios::trunc);
    ingest::write_fixture(out, cohort);
  }

  write_lines(dir / "config.ini",
              {"; synthetic experiment",
               "[paths]",
               "fixture = cohort.jsonl",
               "embeddings = embeddings.vec",
               "lexicon = lexicon.csv",
               "stopwords = stopwords.txt",
               "wordlist = wordlist.txt",
               "pos_lexicon = pos.tsv",
               "blocklist = blocklist.txt",
               "genre_list = genres.txt",
               "",
               "[grid]",
               "top_n = 100,200,500",
               "window_months = 2,3",
               "spaces = va,vad",
               "",
               "[induction]",
               "hidden = 32,16",
               "learning_rate = 0.005",
               "epochs = 150",
               "batch_size = 32",
               "patience = 15",
               "",
               "[stats]",
               "iterations = 10000",
               "",
               "[genre]",
               "min_cluster_size = 4",
               "",
               "[classify]",
               "c = 1",
               "gamma = 0.05",
               "",
               "[run]",
               "seed = " + std::to_string(cohort_spec.seed)});
}

SelectionProblem selection_problem(std::size_t n, std::size_t p, std::size_t informative,
                                   std::uint64_t seed, double margin) {
  if (informative > p) throw ConfigError("more informative dimensions than features");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> perm(p);
  for (std::size_t i = 0; i < p; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  SelectionProblem s;
  s.informative.assign(perm.begin(), perm.begin() + static_cast<long>(informative));
  std::sort(s.informative.begin(), s.informative.end());
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p));
  for (std::size_t k = 0; k < informative; ++k) {
    w(static_cast<Eigen::Index>(s.informative[k])) = k % 2 == 0 ? 2.0 : -2.0;
  }
  std::normal_distribution<double> g(0.0, 1.0);
  s.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
  for (std::size_t i = 0; i < n; ++i) {
    Eigen::RowVectorXd row(static_cast<Eigen::Index>(p));
    double score = 0.0;
    do {
      for (Eigen::Index j = 0; j < row.size(); ++j) row(j) = g(rng);
      score = row.dot(w);
    } while (margin > 0.0 && std::abs(score) < margin);
    s.x.row(static_cast<Eigen::Index>(i)) = row;
    int label;
    if (margin > 0.0) {
      label = score > 0.0 ? 1 : 0;
    } else {
      label = uniform(rng, 0.0, 1.0) < 1.0 / (1.0 + std::exp(-score)) ? 1 : 0;
    }
    s.labels.push_back(label);
  }
  return s;
}

}  // namespace tagrisk::synthetic
