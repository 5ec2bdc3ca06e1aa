#include "tagrisk/config.hpp"

#include <charconv>
#include <functional>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "tagrisk/digest.hpp"
#include "tagrisk/error.hpp"

namespace tagrisk::config {

namespace {

namespace pt = boost::property_tree;

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(key + ": '" + text + "' is not a valid number");
  }
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::string format_double(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

template <typename T>
std::string join(const std::vector<T>& v, std::function<std::string(const T&)> f) {
  std::string out;
  for (const auto& x : v) out += (out.empty() ? "" : ",") + f(x);
  return out;
}

/// Reads keys out of the tree, tracking which ones were consumed.
class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::optional<std::string> get(const std::string& section, const std::string& key) {
    known_.insert(section + "." + key);
    auto sec = tree_.get_child_optional(section);
    if (!sec) return std::nullopt;
    auto v = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return trim(*v);
  }

  void reject_unknown() const {
    for (const auto& [section, keys] : tree_) {
      if (keys.empty() && !keys.data().empty()) {
        throw ConfigError("key '" + section + "' must be inside a section");
      }
      for (const auto& [key, value] : keys) {
        if (!known_.contains(section + "." + key)) {
          throw ConfigError("unknown config key '" + section + "." + key + "'");
        }
      }
    }
  }

 private:
  const pt::ptree& tree_;
  std::set<std::string> known_;
};

}  // namespace

PipelineConfig load(const std::filesystem::path& path, const Overrides& overrides) {
  pt::ptree tree;
  try {
    pt::ini_parser::read_ini(path.string(), tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("cannot read config: " + std::string(e.what()));
  }
  const auto base = std::filesystem::absolute(path).parent_path();
  Reader r(tree);
  PipelineConfig c;
  auto& eff = c.effective;

  auto path_key = [&](const std::string& key, std::filesystem::path& out, bool required) {
    auto v = r.get("paths", key);
    if (!v || v->empty()) {
      if (required) throw ConfigError("missing required config key 'paths." + key + "'");
      eff["paths." + key] = "";
      return;
    }
    eff["paths." + key] = *v;
    std::filesystem::path p(*v);
    out = p.is_absolute() ? p : (base / p).lexically_normal();
  };
  auto& p = c.paths;
  path_key("fixture", p.fixture, true);
  path_key("cache", p.cache, false);
  path_key("embeddings", p.embeddings, true);
  path_key("subwords", p.subwords, false);
  path_key("lexicon", p.lexicon, true);
  path_key("stopwords", p.stopwords, true);
  path_key("wordlist", p.wordlist, true);
  path_key("pos_lexicon", p.pos_lexicon, true);
  path_key("blocklist", p.blocklist, true);
  path_key("genre_list", p.genre_list, true);
  path_key("gems_table", p.gems_table, false);
  for (auto [key, file] : std::initializer_list<std::pair<const char*, const std::filesystem::path*>>{
           {"fixture", &p.fixture},       {"embeddings", &p.embeddings},
           {"subwords", &p.subwords},     {"lexicon", &p.lexicon},
           {"stopwords", &p.stopwords},   {"wordlist", &p.wordlist},
           {"pos_lexicon", &p.pos_lexicon}, {"blocklist", &p.blocklist},
           {"genre_list", &p.genre_list}, {"gems_table", &p.gems_table}}) {
    if (!file->empty() && !std::filesystem::exists(*file)) {
      throw ConfigError(std::string("paths.") + key + ": file not found: " + file->string());
    }
  }

  // Scalar settings: the lambda parses the text, the default is recorded in
  // eff when the key is absent.
  auto setting = [&](const std::string& section, const std::string& key, auto apply,
                     std::string fallback) {
    const std::string name = section + "." + key;
    auto v = r.get(section, key);
    const std::string text = v ? *v : fallback;
    apply(name, text);
    eff[name] = text;
  };
  auto int_setting = [&](const std::string& s, const std::string& k, int& out, int lo) {
    setting(s, k, [&](const std::string& n, const std::string& t) {
      out = parse_number<int>(n, t);
      if (out < lo) throw ConfigError(n + " must be at least " + std::to_string(lo));
    }, std::to_string(out));
  };
  auto size_setting = [&](const std::string& s, const std::string& k, std::size_t& out,
                          std::size_t lo) {
    setting(s, k, [&](const std::string& n, const std::string& t) {
      out = parse_number<std::size_t>(n, t);
      if (out < lo) throw ConfigError(n + " must be at least " + std::to_string(lo));
    }, std::to_string(out));
  };
  auto real_setting = [&](const std::string& s, const std::string& k, double& out, double lo,
                          bool open) {
    setting(s, k, [&](const std::string& n, const std::string& t) {
      out = parse_number<double>(n, t);
      if (open ? !(out > lo) : !(out >= lo)) {
        throw ConfigError(n + " must be " + (open ? "> " : ">= ") + format_double(lo));
      }
    }, format_double(out));
  };
  auto bool_setting = [&](const std::string& s, const std::string& k, bool& out) {
    setting(s, k, [&](const std::string& n, const std::string& t) { out = parse_bool(n, t); },
            out ? "true" : "false");
  };

  // [grid]
  auto& g = c.grid;
  auto int_list = [&](const std::string& key, std::vector<int>& out,
                      const std::set<int>& allowed) {
    setting("grid", key, [&](const std::string& n, const std::string& t) {
      out.clear();
      for (const auto& item : split_list(t)) {
        int v = parse_number<int>(n, item);
        if (!allowed.empty() && !allowed.contains(v)) {
          throw ConfigError(n + ": unsupported value " + item);
        }
        out.push_back(v);
      }
      if (out.empty()) throw ConfigError(n + " is empty");
    }, join<int>(out, [](const int& v) { return std::to_string(v); }));
  };
  int_list("top_n", g.top_n, {});
  int_list("window_months", g.window_months, {});
  for (int v : g.top_n) {
    if (v < 1) throw ConfigError("grid.top_n values must be positive");
  }
  for (int v : g.window_months) {
    if (v < 1) throw ConfigError("grid.window_months values must be positive");
  }
  setting("grid", "spaces", [&](const std::string& n, const std::string& t) {
    g.spaces.clear();
    for (const auto& item : split_list(t)) {
      try {
        g.spaces.push_back(emotion_space_from_string(item));
      } catch (const ConfigError&) {
        throw ConfigError(n + ": unknown space '" + item + "'");
      }
    }
    if (g.spaces.empty()) throw ConfigError(n + " is empty");
  }, "va,vad");

  // [induction]
  auto& in = c.induction;
  setting("induction", "hidden", [&](const std::string& n, const std::string& t) {
    in.hidden.clear();
    for (const auto& item : split_list(t)) {
      auto v = parse_number<std::size_t>(n, item);
      if (v == 0) throw ConfigError(n + ": layer sizes must be positive");
      in.hidden.push_back(v);
    }
  }, join<std::size_t>(in.hidden, [](const std::size_t& v) { return std::to_string(v); }));
  real_setting("induction", "learning_rate", in.learning_rate, 0.0, true);
  int_setting("induction", "epochs", in.epochs, 1);
  int_setting("induction", "batch_size", in.batch_size, 1);
  int_setting("induction", "patience", in.patience, 1);
  real_setting("induction", "val_fraction", in.val_fraction, 0.0, true);
  if (in.val_fraction >= 1.0) throw ConfigError("induction.val_fraction must be < 1");
  real_setting("induction", "leak", in.leak, 0.0, false);
  setting("induction", "centroids", [&](const std::string& n, const std::string& t) {
    if (t == "induced") in.induced_centroids = true;
    else if (t == "default") in.induced_centroids = false;
    else throw ConfigError(n + ": expected induced or default");
  }, "induced");

  // [stats]
  size_setting("stats", "iterations", c.stats.iterations, 1);
  setting("stats", "bootstrap_mode", [&](const std::string& n, const std::string& t) {
    try {
      c.stats.mode = stats::bootstrap_mode_from_string(t);
    } catch (const ConfigError&) {
      throw ConfigError(n + ": expected permutation or with_replacement");
    }
  }, "permutation");

  // [genre]
  auto& ge = c.genre;
  size_setting("genre", "min_cluster_size", ge.cut.min_cluster_size, 1);
  bool_setting("genre", "deep_split", ge.cut.deep_split);
  real_setting("genre", "split_ratio", ge.cut.split_ratio, 0.0, true);
  size_setting("genre", "core_size", ge.core_size, 1);
  setting("genre", "dissimilarity", [&](const std::string& n, const std::string& t) {
    try {
      ge.dissimilarity = genrecluster::dissimilarity_from_string(t);
    } catch (const ConfigError&) {
      throw ConfigError(n + ": expected one_minus or sqrt_one_minus");
    }
  }, "one_minus");

  // [classify]
  auto& cl = c.classify;
  bool_setting("classify", "enabled", cl.enabled);
  size_setting("classify", "folds", cl.folds, 2);
  real_setting("classify", "c", cl.c, 0.0, true);
  real_setting("classify", "gamma", cl.gamma, 0.0, true);
  real_setting("classify", "svm_tol", cl.svm_tol, 0.0, true);
  setting("classify", "lambda", [&](const std::string& n, const std::string& t) {
    if (t == "auto") {
      cl.lambda.reset();
      return;
    }
    cl.lambda = parse_number<double>(n, t);
    if (*cl.lambda < 0.0) throw ConfigError(n + " must be >= 0 or auto");
  }, "auto");
  size_setting("classify", "lambda_folds", cl.lambda_folds, 2);
  size_setting("classify", "lambda_grid", cl.lambda_grid, 1);
  real_setting("classify", "lambda_min_ratio", cl.lambda_min_ratio, 0.0, true);
  if (cl.lambda_min_ratio >= 1.0) throw ConfigError("classify.lambda_min_ratio must be < 1");
  int_setting("classify", "top_n", cl.top_n, 1);
  int_setting("classify", "window_months", cl.window_months, 1);

  // [api]
  setting("api", "base_url", [&](const std::string&, const std::string& t) {
    c.api.base_url = t;
  }, "");
  real_setting("api", "rate_limit", c.api.rate_limit, 0.0, true);
  int_setting("api", "max_attempts", c.api.max_attempts, 1);
  int_setting("api", "timeout_seconds", c.api.timeout_seconds, 1);

  // [run]
  auto seed = r.get("run", "seed");
  if (overrides.seed) {
    c.seed = *overrides.seed;
  } else if (seed && !seed->empty()) {
    c.seed = parse_number<std::uint64_t>("run.seed", *seed);
  } else {
    throw ConfigError("missing required config key 'run.seed'");
  }
  eff["run.seed"] = std::to_string(c.seed);

  r.reject_unknown();

  if (overrides.iterations) {
    if (*overrides.iterations < 1) throw ConfigError("--iterations must be at least 1");
    c.stats.iterations = *overrides.iterations;
    eff["stats.iterations"] = std::to_string(*overrides.iterations);
  }
  if (overrides.space) {
    g.spaces = {*overrides.space};
    eff["grid.spaces"] = std::string(to_string(*overrides.space));
  }
  if (overrides.top_n) {
    if (*overrides.top_n < 1) throw ConfigError("--top-n must be positive");
    g.top_n = {*overrides.top_n};
    eff["grid.top_n"] = std::to_string(*overrides.top_n);
  }
  if (overrides.window_months) {
    if (*overrides.window_months < 1) throw ConfigError("--window-months must be positive");
    g.window_months = {*overrides.window_months};
    eff["grid.window_months"] = std::to_string(*overrides.window_months);
  }

  std::string canonical;
  for (const auto& [k, v] : eff) {
    if (k.rfind("grid.", 0) == 0) continue;
    canonical += k + "=" + v + "\n";
  }
  c.hash = sha256_hex(canonical);
  return c;
}

std::uint64_t induction_seed(const PipelineConfig& c) { return c.seed; }
std::uint64_t bootstrap_seed(const PipelineConfig& c) { return c.seed + 1; }
std::uint64_t classify_seed(const PipelineConfig& c) { return c.seed + 2; }

induction::TrainConfig train_config(const PipelineConfig& c, EmotionSpace space) {
  induction::TrainConfig t;
  t.space = space;
  t.hidden = c.induction.hidden;
  t.seed = induction_seed(c);
  t.learning_rate = c.induction.learning_rate;
  t.epochs = c.induction.epochs;
  t.batch_size = c.induction.batch_size;
  t.patience = c.induction.patience;
  t.val_fraction = c.induction.val_fraction;
  t.leak = c.induction.leak;
  return t;
}

classify::CvConfig cv_config(const PipelineConfig& c) {
  classify::CvConfig cv;
  cv.folds = c.classify.folds;
  cv.seed = classify_seed(c);
  cv.svm.c = c.classify.c;
  cv.svm.gamma = c.classify.gamma;
  cv.svm.tol = c.classify.svm_tol;
  cv.lambda = c.classify.lambda;
  cv.search.folds = c.classify.lambda_folds;
  cv.search.grid_size = c.classify.lambda_grid;
  cv.search.min_ratio = c.classify.lambda_min_ratio;
  cv.search.seed = classify_seed(c);
  return cv;
}

}  // namespace tagrisk::config
