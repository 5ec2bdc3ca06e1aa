#include "tagrisk/gems.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include "json.hpp"

#include "tagrisk/error.hpp"

namespace tagrisk::gems {

using nlohmann::json;

const GemsCategory& GemsTable::category(std::string_view name) const {
  for (const auto& c : categories) {
    if (c.name == name) return c;
  }
  throw ConfigError("unknown GEMS category '" + std::string(name) + "'");
}

std::vector<std::string> GemsTable::terms() const {
  std::vector<std::string> out;
  for (const auto& c : categories) {
    for (const auto& t : c.terms) out.push_back(t.term);
  }
  return out;
}

GemsTable default_table() {
  GemsTable t;
  t.categories = {
      {"Wonder", "Sublimity",
       {{"happy", 1.0}, {"amazed", 0.95}, {"dazzled", 0.84}, {"allured", 0.86}, {"moved", 0.75}},
       {6.29, 4.57}, {6.43, 4.77, 5.92}},
      {"Transcendence", "Sublimity",
       {{"inspired", 1.0}, {"transcendence", 0.92}, {"spirituality", 0.90}, {"thrills", 0.65}},
       {6.31, 4.73}, {6.36, 4.70, 5.94}},
      {"Tenderness", "Sublimity",
       {{"in love", 1.0}, {"affectionate", 0.97}, {"sensual", 0.98}, {"tender", 0.97},
        {"softened up", 0.74}},
       {6.56, 4.62}, {6.65, 4.62, 6.11}},
      {"Nostalgia", "Sublimity",
       {{"sentimental", 1.0}, {"dreamy", 0.77}, {"nostalgic", 0.64}, {"melancholic", 0.52}},
       {5.92, 3.97}, {5.97, 4.15, 5.57}},
      {"Peacefulness", "Sublimity",
       {{"calm", 1.0}, {"relaxed", 0.96}, {"serene", 0.94}, {"soothed", 0.90},
        {"meditative", 0.58}},
       {6.63, 2.95}, {6.72, 3.1, 6.4}},
      {"Power", "Vitality",
       {{"energetic", 1.0}, {"triumphant", 0.76}, {"fiery", 0.72}, {"strong", 0.70},
        {"heroic", 0.56}},
       {6.39, 5.22}, {6.3, 5.16, 6.12}},
      {"Joyful Activation", "Vitality",
       {{"stimulated", 1.0}, {"joyful", 0.99}, {"animated", 0.95}, {"dancing", 0.72},
        {"amused", 0.56}},
       {6.67, 5.43}, {6.8, 5.31, 6.22}},
      {"Tension", "Unease",
       {{"agitated", 1.0}, {"nervous", 0.85}, {"tense", 0.63}, {"impatient", 0.49},
        {"irritated", 0.39}},
       {3.38, 5.24}, {3.31, 5.17, 4.0}},
      {"Sadness", "Unease", {{"sad", 1.0}, {"sorrowful", 0.82}}, {2.81, 3.61},
       {2.99, 4.19, 3.89}},
  };
  return t;
}

void validate(const GemsTable& table) {
  if (table.categories.size() != kGemsCategories.size()) {
    throw ConfigError("GEMS table needs exactly 9 categories");
  }
  std::set<std::string> seen;
  for (const auto& c : table.categories) {
    if (!is_gems_category(c.name)) throw ConfigError("unknown GEMS category '" + c.name + "'");
    if (!seen.insert(c.name).second) throw ConfigError("duplicate GEMS category " + c.name);
    if (std::find(kGemsUmbrellas.begin(), kGemsUmbrellas.end(), c.umbrella) ==
        kGemsUmbrellas.end()) {
      throw ConfigError("unknown umbrella '" + c.umbrella + "' for " + c.name);
    }
    if (c.terms.empty()) throw ConfigError(c.name + " has no terms");
    bool has_unit = false;
    for (const auto& t : c.terms) {
      if (!(t.loading > 0.0 && t.loading <= 1.0)) {
        throw ConfigError("loading for '" + t.term + "' outside (0, 1]");
      }
      has_unit = has_unit || t.loading == 1.0;
    }
    if (!has_unit) throw ConfigError(c.name + " has no term with loading 1.0");
    // Constructing the points range-checks them.
    try {
      EmotionPoint(EmotionSpace::VA, c.default_va);
      EmotionPoint(EmotionSpace::VAD, c.default_vad);
    } catch (const ValidationError& e) {
      throw ConfigError(c.name + " default centroid: " + e.what());
    }
  }
}

GemsTable load_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open GEMS table " + path.string());
  GemsTable table;
  try {
    json doc = json::parse(in);
    for (const auto& c : doc.at("categories")) {
      GemsCategory cat;
      cat.name = c.at("name").get<std::string>();
      cat.umbrella = c.at("umbrella").get<std::string>();
      for (const auto& t : c.at("terms")) {
        cat.terms.push_back({t.at("term").get<std::string>(), t.at("loading").get<double>()});
      }
      cat.default_va = c.at("centroid_va").get<std::vector<double>>();
      cat.default_vad = c.at("centroid_vad").get<std::vector<double>>();
      table.categories.push_back(std::move(cat));
    }
  } catch (const json::exception& e) {
    throw ConfigError("malformed GEMS table " + path.string() + ": " + e.what());
  }
  validate(table);
  return table;
}

void save_table(const std::filesystem::path& path, const GemsTable& table) {
  json cats = json::array();
  for (const auto& c : table.categories) {
    json terms = json::array();
    for (const auto& t : c.terms) terms.push_back({{"term", t.term}, {"loading", t.loading}});
    cats.push_back({{"name", c.name},
                    {"umbrella", c.umbrella},
                    {"terms", terms},
                    {"centroid_va", c.default_va},
                    {"centroid_vad", c.default_vad}});
  }
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write GEMS table " + path.string());
  out << json{{"categories", cats}}.dump(2) << '\n';
}

CentroidMap default_centroids(const GemsTable& table, EmotionSpace space) {
  CentroidMap out;
  for (const auto& c : table.categories) {
    out.emplace(c.name, EmotionPoint(space, space == EmotionSpace::VA ? c.default_va
                                                                      : c.default_vad));
  }
  return out;
}

CentroidMap category_centroids(const std::map<std::string, EmotionPoint>& term_points,
                               const GemsTable& table, bool normalize) {
  std::vector<std::string> missing;
  for (const auto& term : table.terms()) {
    if (!term_points.contains(term)) missing.push_back(term);
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ConfigError("no emotion point for GEMS terms: " + list);
  }
  const EmotionSpace space = term_points.at(table.categories.front().terms.front().term).space();

  CentroidMap out;
  for (const auto& c : table.categories) {
    std::vector<double> sum(dims(space), 0.0);
    double total = 0.0;
    for (const auto& t : c.terms) {
      const auto& p = term_points.at(t.term);
      if (p.space() != space) throw ValidationError("GEMS term points mix emotion spaces");
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += t.loading * p[i];
      total += t.loading;
    }
    if (normalize) {
      for (auto& x : sum) x /= total;
      out.emplace(c.name, EmotionPoint(space, sum));
    } else {
      out.emplace(c.name, EmotionPoint::clamped(space, sum));
    }
  }
  return out;
}

std::string assign_category(const EmotionPoint& point, const CentroidMap& centroids) {
  if (centroids.empty()) throw ValidationError("no centroids to assign to");
  const std::string* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  // std::map iterates names in ascending order, so strict < keeps the
  // smallest name on ties.
  for (const auto& [name, centroid] : centroids) {
    const double d = squared_distance(point, centroid);
    if (d < best_d) {
      best_d = d;
      best = &name;
    }
  }
  return *best;
}

TagVocabulary build_vocabulary(const std::map<std::string, EmotionPoint>& tag_points,
                               const CentroidMap& centroids) {
  TagVocabulary vocab;
  for (const auto& [tag, point] : tag_points) {
    vocab.tags.insert(tag);
    vocab.category_of[tag] = assign_category(point, centroids);
  }
  return vocab;
}

std::vector<EmotionCategory> emotion_categories(const GemsTable& table,
                                                const CentroidMap& centroids) {
  std::vector<EmotionCategory> out;
  for (const auto& c : table.categories) {
    out.push_back({c.name, c.umbrella, c.terms, centroids.at(c.name)});
  }
  return out;
}

}  // namespace tagrisk::gems
