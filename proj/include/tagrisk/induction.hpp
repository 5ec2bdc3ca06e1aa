#pragma once

// Word-emotion induction: pretrained embeddings in, valence/arousal
// (/dominance) coordinates out, through a small feed-forward regressor.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "tagrisk/model.hpp"

namespace tagrisk::induction {

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

struct EmbeddingTable {
  std::size_t dim = 0;
  std::unordered_map<std::string, std::vector<float>> vectors;
  /// Character n-gram vectors, keyed by the n-gram with '<' and '>' word
  /// boundary markers ("<sa", "sad", "ly>").
  std::unordered_map<std::string, std::vector<float>> subwords;
  /// Words that appeared more than once while loading (last one wins).
  std::vector<std::string> duplicates;
};

/// Text vectors: an optional "count dim" header, then "word v1 ... vd" per
/// line. Throws ParseError with the line number on a length mismatch.
EmbeddingTable load_embeddings(const std::filesystem::path& path);
EmbeddingTable parse_embeddings(std::istream& in);

/// Loads n-gram vectors in the same format into table.subwords.
void load_subwords(EmbeddingTable& table, const std::filesystem::path& path);
void parse_subwords(EmbeddingTable& table, std::istream& in);

/// Character n-grams of "<word>" for n in [min_n, max_n], counting UTF-8
/// code points rather than bytes.
std::vector<std::string> char_ngrams(std::string_view word, std::size_t min_n = 3,
                                     std::size_t max_n = 6);

/// Exact lookup, else the mean of the word's known 3-6 character n-gram
/// vectors, else nullopt.
std::optional<std::vector<double>> embed(const EmbeddingTable& table, std::string_view word);

/// Mean of the word vectors of a space-separated phrase; nullopt if any word
/// cannot be embedded.
std::optional<std::vector<double>> embed_phrase(const EmbeddingTable& table,
                                                std::string_view phrase);

// ---------------------------------------------------------------------------
// Lexicon
// ---------------------------------------------------------------------------

struct Norms {
  double valence = 5.0;
  double arousal = 5.0;
  double dominance = 5.0;
};

/// word -> ratings on the 1..9 scale.
using LexiconNorms = std::map<std::string, Norms>;

/// CSV "word,valence,arousal,dominance", optional header. Every rating must
/// lie in [1, 9].
LexiconNorms load_lexicon(const std::filesystem::path& path);
LexiconNorms parse_lexicon(std::istream& in);

// ---------------------------------------------------------------------------
// Regressor
// ---------------------------------------------------------------------------

struct Layer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
};

struct TrainingMeta {
  std::uint64_t seed = 0;
  int epochs = 0;
  double val_loss = 0.0;
};

/// Fully connected net with leaky-ReLU hidden layers and a linear output.
/// sizes = {input, hidden..., output}, output 2 (VA) or 3 (VAD).
class Regressor {
 public:
  Regressor() = default;
  Regressor(std::vector<std::size_t> sizes, double leak = 0.01);

  /// He-initialized weights, zero biases.
  static Regressor initialized(std::vector<std::size_t> sizes, std::uint64_t seed,
                               double leak = 0.01);

  const std::vector<std::size_t>& sizes() const noexcept { return sizes_; }
  std::size_t input_dim() const { return sizes_.front(); }
  std::size_t output_dim() const { return sizes_.back(); }
  EmotionSpace space() const;
  double leak() const noexcept { return leak_; }

  std::vector<Layer>& layers() noexcept { return layers_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }

  /// Raw (unclamped) outputs for a batch stored column-wise: in x batch.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs) const;

  TrainingMeta meta;

 private:
  std::vector<std::size_t> sizes_;
  double leak_ = 0.01;
  std::vector<Layer> layers_;
};

/// Mean over the batch of 0.5 * squared error. When grads is non-null it
/// receives d(loss)/d(parameter) with the same shapes as the layers.
double loss_and_gradients(const Regressor& net, const Eigen::MatrixXd& inputs,
                          const Eigen::MatrixXd& targets, std::vector<Layer>* grads);

/// Forward pass clamped into [1, 9]. Throws ValidationError on a length
/// mismatch.
EmotionPoint predict(const Regressor& net, std::span<const double> vector);

struct TrainConfig {
  EmotionSpace space = EmotionSpace::VAD;
  std::vector<std::size_t> hidden = {256, 128};
  std::uint64_t seed = 0;
  double learning_rate = 1e-3;
  int epochs = 200;
  int batch_size = 64;
  int patience = 20;
  double val_fraction = 0.2;
  double leak = 0.01;
};

inline constexpr std::size_t kMinTrainingWords = 100;

struct TrainResult {
  Regressor regressor;
  /// Held-out Pearson r per output dimension.
  std::vector<double> val_pearson;
  /// Validation loss at each new best checkpoint, in order.
  std::vector<double> checkpoint_losses;
  std::vector<double> train_losses;
  std::size_t train_size = 0;
  std::size_t val_size = 0;
};

/// Adam on mini-batches with early stopping on validation loss; the best
/// checkpoint is returned. Deterministic for a given seed. Throws DataError
/// when fewer than kMinTrainingWords lexicon words can be embedded.
TrainResult train_regressor(const LexiconNorms& lexicon, const EmbeddingTable& table,
                            const TrainConfig& config);

/// Tags without an embedding are left out of the result and, when omitted is
/// non-null, listed there.
std::map<std::string, EmotionPoint> induce_tag_points(const std::set<std::string>& tags,
                                                      const EmbeddingTable& table,
                                                      const Regressor& net,
                                                      std::vector<std::string>* omitted = nullptr);

void save_regressor(std::ostream& out, const Regressor& net);
Regressor load_regressor(std::istream& in);

}  // namespace tagrisk::induction
