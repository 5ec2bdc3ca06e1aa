#include "tagrisk/induction.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "tagrisk/error.hpp"
#include "tagrisk/log.hpp"

namespace tagrisk::induction {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool parse_float(std::string_view s, float& out) {
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

bool parse_size(std::string_view s, std::size_t& out) {
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

/// Reads "key v1 ... vd" lines into target. dim is fixed by the header or by
/// the first data line.
void read_vectors(std::istream& in, std::size_t& dim,
                  std::unordered_map<std::string, std::vector<float>>& target,
                  std::vector<std::string>& duplicates, bool lowercase_keys) {
  std::string line;
  long n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto tokens = split_ws(line);
    if (tokens.empty()) continue;
    if (n == 1 && tokens.size() == 2) {
      std::size_t count = 0;
      std::size_t d = 0;
      if (parse_size(tokens[0], count) && parse_size(tokens[1], d)) {
        if (d == 0) throw ParseError("header declares dimension 0", n);
        if (dim != 0 && d != dim) throw ParseError("header dimension differs from table", n);
        dim = d;
        continue;
      }
    }
    const std::size_t width = tokens.size() - 1;
    if (dim == 0) {
      if (width == 0) throw ParseError("vector line without values", n);
      dim = width;
    }
    if (width != dim) {
      throw ParseError("expected " + std::to_string(dim) + " values, found " +
                           std::to_string(width),
                       n);
    }
    std::vector<float> v(dim);
    for (std::size_t i = 0; i < dim; ++i) {
      if (!parse_float(tokens[i + 1], v[i]) || !std::isfinite(v[i])) {
        throw ParseError("bad vector component '" + std::string(tokens[i + 1]) + "'", n);
      }
    }
    std::string key = lowercase_keys ? lower(tokens[0]) : std::string(tokens[0]);
    auto [it, inserted] = target.insert_or_assign(std::move(key), std::move(v));
    if (!inserted) duplicates.push_back(it->first);
  }
}

}  // namespace

EmbeddingTable parse_embeddings(std::istream& in) {
  EmbeddingTable table;
  read_vectors(in, table.dim, table.vectors, table.duplicates, true);
  return table;
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open embeddings " + path.string());
  return parse_embeddings(in);
}

void parse_subwords(EmbeddingTable& table, std::istream& in) {
  read_vectors(in, table.dim, table.subwords, table.duplicates, false);
}

void load_subwords(EmbeddingTable& table, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open subword vectors " + path.string());
  parse_subwords(table, in);
}

std::vector<std::string> char_ngrams(std::string_view word, std::size_t min_n,
                                     std::size_t max_n) {
  const std::string w = "<" + std::string(word) + ">";
  // Byte offsets of code point starts.
  std::vector<std::size_t> starts;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if ((static_cast<unsigned char>(w[i]) & 0xC0) != 0x80) starts.push_back(i);
  }
  starts.push_back(w.size());
  const std::size_t chars = starts.size() - 1;
  std::vector<std::string> out;
  for (std::size_t i = 0; i < chars; ++i) {
    for (std::size_t n = min_n; n <= max_n && i + n <= chars; ++n) {
      out.push_back(w.substr(starts[i], starts[i + n] - starts[i]));
    }
  }
  return out;
}

std::optional<std::vector<double>> embed(const EmbeddingTable& table, std::string_view word) {
  if (auto it = table.vectors.find(std::string(word)); it != table.vectors.end()) {
    return std::vector<double>(it->second.begin(), it->second.end());
  }
  if (table.subwords.empty()) return std::nullopt;
  std::vector<double> sum(table.dim, 0.0);
  std::size_t found = 0;
  for (const auto& gram : char_ngrams(word)) {
    auto it = table.subwords.find(gram);
    if (it == table.subwords.end()) continue;
    for (std::size_t i = 0; i < table.dim; ++i) sum[i] += it->second[i];
    ++found;
  }
  if (found == 0) return std::nullopt;
  for (auto& x : sum) x /= static_cast<double>(found);
  return sum;
}

std::optional<std::vector<double>> embed_phrase(const EmbeddingTable& table,
                                                std::string_view phrase) {
  auto words = split_ws(phrase);
  if (words.empty()) return std::nullopt;
  std::vector<double> sum(table.dim, 0.0);
  for (auto w : words) {
    auto v = embed(table, w);
    if (!v) return std::nullopt;
    for (std::size_t i = 0; i < table.dim; ++i) sum[i] += (*v)[i];
  }
  for (auto& x : sum) x /= static_cast<double>(words.size());
  return sum;
}

LexiconNorms parse_lexicon(std::istream& in) {
  LexiconNorms out;
  std::string line;
  long n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::istringstream fields(line);
    for (std::string col; std::getline(fields, col, ',');) cols.push_back(col);
    if (cols.size() != 4) throw ParseError("lexicon line needs word,valence,arousal,dominance", n);
    if (n == 1 && lower(cols[1]) == "valence") continue;
    double v[3];
    for (int i = 0; i < 3; ++i) {
      try {
        std::size_t used = 0;
        v[i] = std::stod(cols[i + 1], &used);
        if (used != cols[i + 1].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ParseError("bad rating '" + cols[i + 1] + "'", n);
      }
      if (!(v[i] >= kEmotionMin && v[i] <= kEmotionMax)) {
        throw ParseError("rating outside [1, 9] for '" + cols[0] + "'", n);
      }
    }
    out[lower(cols[0])] = {v[0], v[1], v[2]};
  }
  return out;
}

LexiconNorms load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open lexicon " + path.string());
  return parse_lexicon(in);
}

// ---------------------------------------------------------------------------

Regressor::Regressor(std::vector<std::size_t> sizes, double leak)
    : sizes_(std::move(sizes)), leak_(leak) {
  if (sizes_.size() < 2) throw ValidationError("regressor needs at least two layer sizes");
  for (auto s : sizes_) {
    if (s == 0) throw ValidationError("regressor layer of size 0");
  }
  if (sizes_.back() != 2 && sizes_.back() != 3) {
    throw ValidationError("regressor output must be 2 (VA) or 3 (VAD)");
  }
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    layers_.push_back({Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sizes_[l + 1]),
                                             static_cast<Eigen::Index>(sizes_[l])),
                       Eigen::VectorXd::Zero(static_cast<Eigen::Index>(sizes_[l + 1]))});
  }
}

Regressor Regressor::initialized(std::vector<std::size_t> sizes, std::uint64_t seed,
                                 double leak) {
  Regressor net(std::move(sizes), leak);
  std::mt19937_64 rng(seed);
  for (auto& layer : net.layers_) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(layer.weights.cols())));
    for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) {
      for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) layer.weights(i, j) = dist(rng);
    }
  }
  net.meta.seed = seed;
  return net;
}

EmotionSpace Regressor::space() const {
  return output_dim() == 2 ? EmotionSpace::VA : EmotionSpace::VAD;
}

Eigen::MatrixXd Regressor::forward(const Eigen::MatrixXd& inputs) const {
  if (static_cast<std::size_t>(inputs.rows()) != input_dim()) {
    throw ValidationError("regressor input has " + std::to_string(inputs.rows()) +
                          " rows, expected " + std::to_string(input_dim()));
  }
  Eigen::MatrixXd a = inputs;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = (layers_[l].weights * a).colwise() + layers_[l].bias;
    if (l + 1 < layers_.size()) {
      const double k = leak_;
      a = z.unaryExpr([k](double x) { return x > 0.0 ? x : k * x; });
    } else {
      a = std::move(z);
    }
  }
  return a;
}

double loss_and_gradients(const Regressor& net, const Eigen::MatrixXd& inputs,
                          const Eigen::MatrixXd& targets, std::vector<Layer>* grads) {
  const auto& layers = net.layers();
  const double k = net.leak();
  const double batch = static_cast<double>(inputs.cols());
  if (targets.rows() != static_cast<Eigen::Index>(net.output_dim()) ||
      targets.cols() != inputs.cols()) {
    throw ValidationError("target shape mismatch");
  }
  std::vector<Eigen::MatrixXd> acts;   // inputs to each layer
  std::vector<Eigen::MatrixXd> preact; // pre-activations per layer
  acts.push_back(inputs);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    preact.push_back((layers[l].weights * acts.back()).colwise() + layers[l].bias);
    if (l + 1 < layers.size()) {
      acts.push_back(preact.back().unaryExpr([k](double x) { return x > 0.0 ? x : k * x; }));
    }
  }
  const Eigen::MatrixXd diff = preact.back() - targets;
  const double loss = 0.5 * diff.squaredNorm() / batch;
  if (grads == nullptr) return loss;

  grads->resize(layers.size());
  Eigen::MatrixXd delta = diff / batch;
  for (std::size_t l = layers.size(); l-- > 0;) {
    (*grads)[l].weights = delta * acts[l].transpose();
    (*grads)[l].bias = delta.rowwise().sum();
    if (l > 0) {
      Eigen::MatrixXd back = layers[l].weights.transpose() * delta;
      delta = back.cwiseProduct(
          preact[l - 1].unaryExpr([k](double x) { return x > 0.0 ? 1.0 : k; }));
    }
  }
  return loss;
}

EmotionPoint predict(const Regressor& net, std::span<const double> vector) {
  if (vector.size() != net.input_dim()) {
    throw ValidationError("vector length " + std::to_string(vector.size()) +
                          " does not match regressor input " +
                          std::to_string(net.input_dim()));
  }
  Eigen::Map<const Eigen::VectorXd> x(vector.data(), static_cast<Eigen::Index>(vector.size()));
  Eigen::MatrixXd out = net.forward(x);
  return EmotionPoint::clamped(net.space(),
                               std::span<const double>(out.data(), net.output_dim()));
}

namespace {

struct AdamState {
  std::vector<Layer> m;
  std::vector<Layer> v;
  long step = 0;
};

AdamState make_adam(const Regressor& net) {
  AdamState s;
  for (const auto& l : net.layers()) {
    Layer z{Eigen::MatrixXd::Zero(l.weights.rows(), l.weights.cols()),
            Eigen::VectorXd::Zero(l.bias.size())};
    s.m.push_back(z);
    s.v.push_back(z);
  }
  return s;
}

void adam_step(Regressor& net, AdamState& s, const std::vector<Layer>& g, double lr) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  ++s.step;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(s.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(s.step));
  auto update = [&](auto& param, auto& m, auto& v, const auto& grad) {
    m = b1 * m + (1.0 - b1) * grad;
    v = b2 * v + (1.0 - b2) * grad.cwiseProduct(grad);
    param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < net.layers().size(); ++l) {
    update(net.layers()[l].weights, s.m[l].weights, s.v[l].weights, g[l].weights);
    update(net.layers()[l].bias, s.m[l].bias, s.v[l].bias, g[l].bias);
  }
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double ma = a.mean(), mb = b.mean();
  const Eigen::ArrayXd da = a.array() - ma, db = b.array() - mb;
  const double denom = std::sqrt((da * da).sum() * (db * db).sum());
  return denom > 0.0 ? (da * db).sum() / denom : 0.0;
}

}  // namespace

TrainResult train_regressor(const LexiconNorms& lexicon, const EmbeddingTable& table,
                            const TrainConfig& config) {
  if (config.batch_size < 1 || config.epochs < 1 || config.patience < 1) {
    throw ConfigError("regressor batch_size, epochs and patience must be positive");
  }
  if (!(config.val_fraction > 0.0 && config.val_fraction < 1.0)) {
    throw ConfigError("val_fraction must lie in (0, 1)");
  }
  const std::size_t out_dim = dims(config.space);

  // Lexicon order is sorted, so the sample order is independent of hashing.
  std::vector<std::pair<std::vector<double>, Norms>> samples;
  for (const auto& [word, norms] : lexicon) {
    if (auto v = embed(table, word)) samples.emplace_back(std::move(*v), norms);
  }
  if (samples.size() < kMinTrainingWords) {
    throw DataError("only " + std::to_string(samples.size()) +
                    " lexicon words have embeddings; need at least " +
                    std::to_string(kMinTrainingWords));
  }

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_val = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::round(config.val_fraction * samples.size())));
  const std::size_t n_train = samples.size() - n_val;
  const auto dim = static_cast<Eigen::Index>(table.dim);
  auto pack = [&](std::size_t from, std::size_t count, Eigen::MatrixXd& x, Eigen::MatrixXd& y) {
    x.resize(dim, static_cast<Eigen::Index>(count));
    y.resize(static_cast<Eigen::Index>(out_dim), static_cast<Eigen::Index>(count));
    for (std::size_t c = 0; c < count; ++c) {
      const auto& [vec, norms] = samples[order[from + c]];
      const auto col = static_cast<Eigen::Index>(c);
      for (Eigen::Index r = 0; r < dim; ++r) x(r, col) = vec[static_cast<std::size_t>(r)];
      const double t[3] = {norms.valence, norms.arousal, norms.dominance};
      for (std::size_t r = 0; r < out_dim; ++r) y(static_cast<Eigen::Index>(r), col) = t[r];
    }
  };
  Eigen::MatrixXd x_train, y_train, x_val, y_val;
  pack(0, n_train, x_train, y_train);
  pack(n_train, n_val, x_val, y_val);

  std::vector<std::size_t> sizes = {table.dim};
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(out_dim);
  Regressor net = Regressor::initialized(sizes, config.seed, config.leak);
  net.layers().back().bias = y_train.rowwise().mean();

  TrainResult result;
  result.train_size = n_train;
  result.val_size = n_val;
  AdamState adam = make_adam(net);
  Regressor best = net;
  double best_loss = loss_and_gradients(net, x_val, y_val, nullptr);
  result.checkpoint_losses.push_back(best_loss);
  int since_best = 0;
  int epoch = 0;
  std::vector<Eigen::Index> perm(n_train);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<Layer> grads;
  Eigen::MatrixXd xb, yb;
  for (epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(perm.begin(), perm.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < n_train; start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t count =
          std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), n_train - start);
      xb.resize(dim, static_cast<Eigen::Index>(count));
      yb.resize(static_cast<Eigen::Index>(out_dim), static_cast<Eigen::Index>(count));
      for (std::size_t c = 0; c < count; ++c) {
        xb.col(static_cast<Eigen::Index>(c)) = x_train.col(perm[start + c]);
        yb.col(static_cast<Eigen::Index>(c)) = y_train.col(perm[start + c]);
      }
      epoch_loss += loss_and_gradients(net, xb, yb, &grads) * static_cast<double>(count);
      adam_step(net, adam, grads, config.learning_rate);
    }
    result.train_losses.push_back(epoch_loss / static_cast<double>(n_train));
    const double val_loss = loss_and_gradients(net, x_val, y_val, nullptr);
    if (val_loss < best_loss) {
      best_loss = val_loss;
      best = net;
      best.meta.epochs = epoch;
      result.checkpoint_losses.push_back(val_loss);
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }

  best.meta.seed = config.seed;
  best.meta.val_loss = best_loss;
  Eigen::MatrixXd pred = best.forward(x_val).cwiseMax(kEmotionMin).cwiseMin(kEmotionMax);
  for (std::size_t d = 0; d < out_dim; ++d) {
    const auto r = static_cast<Eigen::Index>(d);
    result.val_pearson.push_back(pearson(pred.row(r).transpose(), y_val.row(r).transpose()));
  }
  result.regressor = std::move(best);
  return result;
}

std::map<std::string, EmotionPoint> induce_tag_points(const std::set<std::string>& tags,
                                                      const EmbeddingTable& table,
                                                      const Regressor& net,
                                                      std::vector<std::string>* omitted) {
  std::map<std::string, EmotionPoint> out;
  for (const auto& tag : tags) {
    auto v = embed_phrase(table, tag);
    if (!v) {
      if (omitted != nullptr) omitted->push_back(tag);
      continue;
    }
    out.emplace(tag, predict(net, *v));
  }
  if (out.size() < tags.size()) {
    log::warn(std::to_string(tags.size() - out.size()) + " tags have no embedding and were left out");
  }
  return out;
}

// ---------------------------------------------------------------------------

void save_regressor(std::ostream& out, const Regressor& net) {
  const auto old_precision = out.precision(17);
  out << "tagrisk-regressor 1\n";
  out << "space " << to_string(net.space()) << '\n';
  out << "activation leaky_relu " << net.leak() << '\n';
  out << "sizes";
  for (auto s : net.sizes()) out << ' ' << s;
  out << '\n';
  out << "seed " << net.meta.seed << '\n';
  out << "epochs " << net.meta.epochs << '\n';
  out << "val_loss " << net.meta.val_loss << '\n';
  for (const auto& layer : net.layers()) {
    for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
      for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) {
        out << (j == 0 ? "" : " ") << layer.weights(i, j);
      }
      out << '\n';
    }
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
      out << (i == 0 ? "" : " ") << layer.bias(i);
    }
    out << '\n';
  }
  out.precision(old_precision);
}

Regressor load_regressor(std::istream& in) {
  std::string line;
  long n = 0;
  auto next = [&]() -> std::istringstream {
    if (!std::getline(in, line)) throw ParseError("regressor file truncated", n + 1);
    ++n;
    return std::istringstream(line);
  };
  auto expect_key = [&](std::istringstream& s, const char* key) {
    std::string k;
    s >> k;
    if (k != key) throw ParseError(std::string("expected '") + key + "'", n);
  };

  auto header = next();
  std::string magic;
  int version = 0;
  header >> magic >> version;
  if (magic != "tagrisk-regressor" || version != 1) throw ParseError("not a regressor file", n);
  auto s = next();
  expect_key(s, "space");
  auto s2 = next();
  expect_key(s2, "activation");
  std::string act;
  double leak = 0.01;
  s2 >> act >> leak;
  if (act != "leaky_relu") throw ParseError("unsupported activation " + act, n);
  auto s3 = next();
  expect_key(s3, "sizes");
  std::vector<std::size_t> sizes;
  for (std::size_t v; s3 >> v;) sizes.push_back(v);
  Regressor net(sizes, leak);
  auto s4 = next();
  expect_key(s4, "seed");
  s4 >> net.meta.seed;
  auto s5 = next();
  expect_key(s5, "epochs");
  s5 >> net.meta.epochs;
  auto s6 = next();
  expect_key(s6, "val_loss");
  s6 >> net.meta.val_loss;
  for (auto& layer : net.layers()) {
    for (Eigen::Index i = 0; i < layer.weights.rows(); ++i) {
      auto row = next();
      for (Eigen::Index j = 0; j < layer.weights.cols(); ++j) {
        if (!(row >> layer.weights(i, j))) throw ParseError("short weight row", n);
      }
    }
    auto bias = next();
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) {
      if (!(bias >> layer.bias(i))) throw ParseError("short bias row", n);
    }
  }
  return net;
}

}  // namespace tagrisk::induction
