/*
 * Copyright 2026 The Attrshield Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Surrogate attribute-inference models. Both architectures read frozen word
// embeddings, produce softmax confidences and expose analytic gradients of a
// class confidence with respect to every input embedding.

#ifndef ATTRSHIELD_CLASSIFIER_H_
#define ATTRSHIELD_CLASSIFIER_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attrshield/corpus.h"
#include "attrshield/embeddings.h"
#include "attrshield/rng.h"

namespace attrshield::clf {

using corpus::TokenizedDocument;

// Per-class confidences; entries in [0, 1] summing to 1.
struct PredictionScores {
  std::vector<double> probs;

  int num_classes() const { return static_cast<int>(probs.size()); }
  double operator[](int c) const { return probs[static_cast<std::size_t>(c)]; }
  // Lowest class id wins ties.
  int Argmax() const;
};

// Row-major (tokens x dim) matrix of input embeddings.
struct EncodedDocument {
  std::size_t rows = 0;
  std::size_t dim = 0;
  std::vector<double> data;

  EncodedDocument() = default;
  EncodedDocument(std::size_t r, std::size_t d) : rows(r), dim(d), data(r * d, 0.0) {}

  std::span<double> row(std::size_t t) { return {data.data() + t * dim, dim}; }
  std::span<const double> row(std::size_t t) const { return {data.data() + t * dim, dim}; }
};

// One vector per token; unknown tokens get the zero vector. Throws
// std::invalid_argument on an empty document.
EncodedDocument Encode(const TokenizedDocument& doc, const emb::EmbeddingTable& table);

enum class Arch { kBoe, kCnn };

std::string ArchName(Arch arch);
Arch ParseArch(const std::string& name);

class TextClassifier {
 public:
  TextClassifier(std::shared_ptr<const emb::EmbeddingTable> table,
                 std::vector<std::string> class_names, std::size_t num_params);
  virtual ~TextClassifier() = default;

  virtual Arch arch() const = 0;
  virtual std::unique_ptr<TextClassifier> Clone() const = 0;
  // Width of the hidden layer (BOE) or number of filters (CNN).
  virtual std::size_t width() const = 0;

  // Fresh parameters: Xavier-uniform weights and zero biases.
  virtual void Initialize(Rng& rng) = 0;

  virtual void Logits(const EncodedDocument& x, std::span<double> logits) const = 0;
  // Given dL/dlogits, adds dL/dparams into `dparams` (may be empty) and
  // writes dL/dx into `dx` (may be null).
  virtual void Backward(const EncodedDocument& x, std::span<const double> dlogits,
                        std::span<double> dparams, EncodedDocument* dx) const = 0;

  int num_classes() const { return static_cast<int>(class_names_.size()); }
  const std::vector<std::string>& class_names() const { return class_names_; }
  const emb::EmbeddingTable& embeddings() const { return *table_; }
  std::shared_ptr<const emb::EmbeddingTable> embeddings_ptr() const { return table_; }

  std::span<double> parameters() { return params_; }
  std::span<const double> parameters() const { return params_; }

  PredictionScores PredictEncoded(const EncodedDocument& x) const;
  PredictionScores Predict(const TokenizedDocument& doc) const;
  double Confidence(const TokenizedDocument& doc, int label) const;

  // d scores[label] / d x for every token position.
  EncodedDocument InputGradientsEncoded(const EncodedDocument& x, int label) const;
  EncodedDocument InputGradients(const TokenizedDocument& doc, int label) const;

 protected:
  std::shared_ptr<const emb::EmbeddingTable> table_;
  std::vector<std::string> class_names_;
  std::vector<double> params_;
};

// Bag-of-embeddings MLP: mean-pool, tanh hidden layer, linear output.
class BoeMlpModel final : public TextClassifier {
 public:
  static constexpr std::size_t kDefaultHidden = 64;

  BoeMlpModel(std::shared_ptr<const emb::EmbeddingTable> table,
              std::vector<std::string> class_names, std::size_t hidden = kDefaultHidden);

  Arch arch() const override { return Arch::kBoe; }
  std::unique_ptr<TextClassifier> Clone() const override;
  std::size_t width() const override { return hidden_; }
  void Initialize(Rng& rng) override;
  void Logits(const EncodedDocument& x, std::span<double> logits) const override;
  void Backward(const EncodedDocument& x, std::span<const double> dlogits,
                std::span<double> dparams, EncodedDocument* dx) const override;

  // Parameter blocks: hidden weights (dim x hidden), hidden bias, output
  // weights (hidden x classes), output bias.
  std::span<double> hidden_weights() { return Block(0, dim_ * hidden_); }
  std::span<double> hidden_bias() { return Block(dim_ * hidden_, hidden_); }
  std::span<double> output_weights() { return Block(OutOffset(), hidden_ * num_classes()); }
  std::span<double> output_bias() {
    return Block(OutOffset() + hidden_ * static_cast<std::size_t>(num_classes()),
                 static_cast<std::size_t>(num_classes()));
  }

 private:
  std::span<double> Block(std::size_t off, std::size_t n) { return {params_.data() + off, n}; }
  std::size_t OutOffset() const { return dim_ * hidden_ + hidden_; }
  void Hidden(const EncodedDocument& x, std::vector<double>& mean,
              std::vector<double>& hidden) const;

  std::size_t dim_;
  std::size_t hidden_;
};

// Width-3 convolution over the embedding sequence (zero padded, one output
// per token), tanh, mean-pool over positions, linear output.
class CnnModel final : public TextClassifier {
 public:
  static constexpr std::size_t kDefaultFilters = 32;
  static constexpr std::size_t kWidth = 3;

  CnnModel(std::shared_ptr<const emb::EmbeddingTable> table,
           std::vector<std::string> class_names, std::size_t filters = kDefaultFilters);

  Arch arch() const override { return Arch::kCnn; }
  std::unique_ptr<TextClassifier> Clone() const override;
  std::size_t width() const override { return filters_; }
  void Initialize(Rng& rng) override;
  void Logits(const EncodedDocument& x, std::span<double> logits) const override;
  void Backward(const EncodedDocument& x, std::span<const double> dlogits,
                std::span<double> dparams, EncodedDocument* dx) const override;

  std::span<double> output_weights() {
    return {params_.data() + OutOffset(), filters_ * static_cast<std::size_t>(num_classes())};
  }
  std::span<double> output_bias() {
    return {params_.data() + OutOffset() + filters_ * static_cast<std::size_t>(num_classes()),
            static_cast<std::size_t>(num_classes())};
  }

 private:
  std::size_t OutOffset() const { return filters_ * kWidth * dim_ + filters_; }
  // Activations (tokens x filters) and their mean over tokens.
  void Features(const EncodedDocument& x, std::vector<double>& act,
                std::vector<double>& pooled) const;

  std::size_t dim_;
  std::size_t filters_;
};

std::unique_ptr<TextClassifier> MakeModel(Arch arch,
                                          std::shared_ptr<const emb::EmbeddingTable> table,
                                          std::vector<std::string> class_names,
                                          std::size_t width = 0);

// scores[y] - max_{c != y} scores[c]. Negative exactly when the document is
// misclassified; a tie (zero) is not a misclassification.
double Margin(const PredictionScores& scores, int label);
double Margin(const TextClassifier& model, const TokenizedDocument& doc, int label);

struct TrainConfig {
  int epochs = 30;
  double learning_rate = 0.5;
  std::size_t batch_size = 16;
  std::uint64_t seed = 1;
  double l2 = 1e-5;
  // Stop after the first epoch whose held-out accuracy reaches this value.
  std::optional<double> target_accuracy;
};

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;

  double final_test_accuracy() const { return epochs.empty() ? 0.0 : epochs.back().test_accuracy; }
};

// Re-initializes `model` from cfg.seed and runs mini-batch SGD on softmax
// cross-entropy plus an L2 penalty. Throws std::invalid_argument when the
// training set has fewer than two classes and std::runtime_error when the
// loss becomes non-finite.
TrainReport Train(TextClassifier& model, const corpus::DatasetSplit& split,
                  const TrainConfig& cfg);

// Fraction of documents whose argmax equals their label (0 for none).
double Accuracy(const TextClassifier& model, const std::vector<TokenizedDocument>& docs);

// Produces an adversarial version of a document, or nothing on failure.
using AttackFn = std::function<std::optional<TokenizedDocument>(const TextClassifier&,
                                                                const TokenizedDocument&)>;

struct AdversarialRetrainResult {
  std::unique_ptr<TextClassifier> model;
  TrainReport report;
  std::size_t sampled = 0;
  std::size_t generated = 0;
  std::size_t augmented_size = 0;
};

// Attacks a random `fraction` of the correctly classified training documents,
// appends the successful adversarial texts under their original labels and
// trains a fresh model of the same architecture on the enlarged set.
AdversarialRetrainResult AdversarialRetrain(const TextClassifier& model,
                                            const corpus::DatasetSplit& split,
                                            const AttackFn& attack, double fraction,
                                            const TrainConfig& cfg);

// JSON checkpoint with shapes, class names, parameters and the embedding
// table fingerprint.
void SaveModel(const TextClassifier& model, const std::filesystem::path& path);
// Throws std::runtime_error when the checkpoint is malformed or was trained
// against a different embedding vocabulary.
std::unique_ptr<TextClassifier> LoadModel(const std::filesystem::path& path,
                                          std::shared_ptr<const emb::EmbeddingTable> table);

}  // namespace attrshield::clf

#endif  // ATTRSHIELD_CLASSIFIER_H_
