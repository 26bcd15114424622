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

#include "attrshield/classifier.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace attrshield::clf {
namespace {

void Softmax(std::span<const double> logits, std::vector<double>& out) {
  out.resize(logits.size());
  const double mx = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
}

void XavierFill(std::span<double> w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : w) v = (2.0 * UniformUnit(rng) - 1.0) * limit;
}

}  // namespace

int PredictionScores::Argmax() const {
  int best = 0;
  for (int c = 1; c < num_classes(); ++c) {
    if (probs[static_cast<std::size_t>(c)] > probs[static_cast<std::size_t>(best)]) best = c;
  }
  return best;
}

EncodedDocument Encode(const TokenizedDocument& doc, const emb::EmbeddingTable& table) {
  if (doc.empty()) throw std::invalid_argument("cannot encode an empty document");
  EncodedDocument x(doc.size(), table.dim());
  for (std::size_t t = 0; t < doc.size(); ++t) {
    const auto v = table.Lookup(doc.tokens[t]);
    std::copy(v.begin(), v.end(), x.row(t).begin());
  }
  return x;
}

std::string ArchName(Arch arch) { return arch == Arch::kBoe ? "boe" : "cnn"; }

Arch ParseArch(const std::string& name) {
  if (name == "boe") return Arch::kBoe;
  if (name == "cnn") return Arch::kCnn;
  throw std::invalid_argument("unknown architecture: " + name);
}

// ---------------------------------------------------------------------------
// TextClassifier

TextClassifier::TextClassifier(std::shared_ptr<const emb::EmbeddingTable> table,
                               std::vector<std::string> class_names, std::size_t num_params)
    : table_(std::move(table)), class_names_(std::move(class_names)), params_(num_params, 0.0) {
  if (!table_) throw std::invalid_argument("classifier needs an embedding table");
  if (class_names_.size() < 2) throw std::invalid_argument("need >=2 classes");
}

PredictionScores TextClassifier::PredictEncoded(const EncodedDocument& x) const {
  std::vector<double> logits(static_cast<std::size_t>(num_classes()));
  Logits(x, logits);
  PredictionScores s;
  Softmax(logits, s.probs);
  return s;
}

PredictionScores TextClassifier::Predict(const TokenizedDocument& doc) const {
  return PredictEncoded(Encode(doc, *table_));
}

double TextClassifier::Confidence(const TokenizedDocument& doc, int label) const {
  return Predict(doc)[label];
}

EncodedDocument TextClassifier::InputGradientsEncoded(const EncodedDocument& x, int label) const {
  if (label < 0 || label >= num_classes()) throw std::out_of_range("label out of range");
  const PredictionScores s = PredictEncoded(x);
  // d p_y / d z_j = p_y (1[j == y] - p_j)
  std::vector<double> dz(s.probs.size());
  const double py = s[label];
  for (std::size_t j = 0; j < dz.size(); ++j) {
    dz[j] = py * ((static_cast<int>(j) == label ? 1.0 : 0.0) - s.probs[j]);
  }
  EncodedDocument dx(x.rows, x.dim);
  Backward(x, dz, {}, &dx);
  return dx;
}

EncodedDocument TextClassifier::InputGradients(const TokenizedDocument& doc, int label) const {
  return InputGradientsEncoded(Encode(doc, *table_), label);
}

// ---------------------------------------------------------------------------
// BoeMlpModel

BoeMlpModel::BoeMlpModel(std::shared_ptr<const emb::EmbeddingTable> table,
                         std::vector<std::string> class_names, std::size_t hidden)
    : TextClassifier(table, class_names,
                     table->dim() * hidden + hidden + hidden * class_names.size() +
                         class_names.size()),
      dim_(table_->dim()),
      hidden_(hidden) {}

std::unique_ptr<TextClassifier> BoeMlpModel::Clone() const {
  return std::make_unique<BoeMlpModel>(*this);
}

void BoeMlpModel::Initialize(Rng& rng) {
  std::fill(params_.begin(), params_.end(), 0.0);
  XavierFill(hidden_weights(), dim_, hidden_, rng);
  XavierFill(output_weights(), hidden_, static_cast<std::size_t>(num_classes()), rng);
}

void BoeMlpModel::Hidden(const EncodedDocument& x, std::vector<double>& mean,
                         std::vector<double>& hidden) const {
  mean.assign(dim_, 0.0);
  for (std::size_t t = 0; t < x.rows; ++t) {
    const auto r = x.row(t);
    for (std::size_t i = 0; i < dim_; ++i) mean[i] += r[i];
  }
  const double inv = 1.0 / static_cast<double>(x.rows);
  for (double& v : mean) v *= inv;

  const double* w1 = params_.data();
  const double* b1 = w1 + dim_ * hidden_;
  hidden.assign(b1, b1 + hidden_);
  for (std::size_t i = 0; i < dim_; ++i) {
    const double xi = mean[i];
    if (xi == 0.0) continue;
    const double* row = w1 + i * hidden_;
    for (std::size_t j = 0; j < hidden_; ++j) hidden[j] += xi * row[j];
  }
  for (double& h : hidden) h = std::tanh(h);
}

void BoeMlpModel::Logits(const EncodedDocument& x, std::span<double> logits) const {
  std::vector<double> mean, hidden;
  Hidden(x, mean, hidden);
  const auto classes = static_cast<std::size_t>(num_classes());
  const double* w2 = params_.data() + OutOffset();
  const double* b2 = w2 + hidden_ * classes;
  for (std::size_t c = 0; c < classes; ++c) logits[c] = b2[c];
  for (std::size_t j = 0; j < hidden_; ++j) {
    for (std::size_t c = 0; c < classes; ++c) logits[c] += hidden[j] * w2[j * classes + c];
  }
}

void BoeMlpModel::Backward(const EncodedDocument& x, std::span<const double> dlogits,
                           std::span<double> dparams, EncodedDocument* dx) const {
  std::vector<double> mean, hidden;
  Hidden(x, mean, hidden);
  const auto classes = static_cast<std::size_t>(num_classes());
  const double* w1 = params_.data();
  const double* w2 = params_.data() + OutOffset();

  std::vector<double> da(hidden_, 0.0);
  for (std::size_t j = 0; j < hidden_; ++j) {
    double dh = 0.0;
    for (std::size_t c = 0; c < classes; ++c) dh += w2[j * classes + c] * dlogits[c];
    da[j] = dh * (1.0 - hidden[j] * hidden[j]);
  }

  if (!dparams.empty()) {
    double* gw1 = dparams.data();
    double* gb1 = gw1 + dim_ * hidden_;
    double* gw2 = dparams.data() + OutOffset();
    double* gb2 = gw2 + hidden_ * classes;
    for (std::size_t i = 0; i < dim_; ++i) {
      const double xi = mean[i];
      if (xi == 0.0) continue;
      for (std::size_t j = 0; j < hidden_; ++j) gw1[i * hidden_ + j] += xi * da[j];
    }
    for (std::size_t j = 0; j < hidden_; ++j) gb1[j] += da[j];
    for (std::size_t j = 0; j < hidden_; ++j) {
      for (std::size_t c = 0; c < classes; ++c) gw2[j * classes + c] += hidden[j] * dlogits[c];
    }
    for (std::size_t c = 0; c < classes; ++c) gb2[c] += dlogits[c];
  }

  if (dx) {
    std::vector<double> dmean(dim_, 0.0);
    for (std::size_t i = 0; i < dim_; ++i) {
      const double* row = w1 + i * hidden_;
      double s = 0.0;
      for (std::size_t j = 0; j < hidden_; ++j) s += row[j] * da[j];
      dmean[i] = s / static_cast<double>(x.rows);
    }
    *dx = EncodedDocument(x.rows, x.dim);
    for (std::size_t t = 0; t < x.rows; ++t) std::copy(dmean.begin(), dmean.end(), dx->row(t).begin());
  }
}

// ---------------------------------------------------------------------------
// CnnModel

CnnModel::CnnModel(std::shared_ptr<const emb::EmbeddingTable> table,
                   std::vector<std::string> class_names, std::size_t filters)
    : TextClassifier(table, class_names,
                     filters * kWidth * table->dim() + filters + filters * class_names.size() +
                         class_names.size()),
      dim_(table_->dim()),
      filters_(filters) {}

std::unique_ptr<TextClassifier> CnnModel::Clone() const { return std::make_unique<CnnModel>(*this); }

void CnnModel::Initialize(Rng& rng) {
  std::fill(params_.begin(), params_.end(), 0.0);
  XavierFill({params_.data(), filters_ * kWidth * dim_}, kWidth * dim_, filters_, rng);
  XavierFill(output_weights(), filters_, static_cast<std::size_t>(num_classes()), rng);
}

void CnnModel::Features(const EncodedDocument& x, std::vector<double>& act,
                        std::vector<double>& pooled) const {
  const double* w = params_.data();
  const double* b = w + filters_ * kWidth * dim_;
  const std::size_t m = x.rows;
  act.assign(m * filters_, 0.0);
  for (std::size_t t = 0; t < m; ++t) {
    for (std::size_t f = 0; f < filters_; ++f) {
      double a = b[f];
      for (std::size_t o = 0; o < kWidth; ++o) {
        // Tap o reads token t + o - 1; out-of-range taps see zero padding.
        if (t + o < 1 || t + o - 1 >= m) continue;
        const auto xr = x.row(t + o - 1);
        const double* wr = w + (f * kWidth + o) * dim_;
        for (std::size_t i = 0; i < dim_; ++i) a += wr[i] * xr[i];
      }
      act[t * filters_ + f] = std::tanh(a);
    }
  }
  pooled.assign(filters_, 0.0);
  for (std::size_t t = 0; t < m; ++t) {
    for (std::size_t f = 0; f < filters_; ++f) pooled[f] += act[t * filters_ + f];
  }
  for (double& p : pooled) p /= static_cast<double>(m);
}

void CnnModel::Logits(const EncodedDocument& x, std::span<double> logits) const {
  std::vector<double> act, pooled;
  Features(x, act, pooled);
  const auto classes = static_cast<std::size_t>(num_classes());
  const double* wo = params_.data() + OutOffset();
  const double* bo = wo + filters_ * classes;
  for (std::size_t c = 0; c < classes; ++c) logits[c] = bo[c];
  for (std::size_t f = 0; f < filters_; ++f) {
    for (std::size_t c = 0; c < classes; ++c) logits[c] += pooled[f] * wo[f * classes + c];
  }
}

void CnnModel::Backward(const EncodedDocument& x, std::span<const double> dlogits,
                        std::span<double> dparams, EncodedDocument* dx) const {
  std::vector<double> act, pooled;
  Features(x, act, pooled);
  const auto classes = static_cast<std::size_t>(num_classes());
  const std::size_t m = x.rows;
  const double* w = params_.data();
  const double* wo = params_.data() + OutOffset();

  std::vector<double> dpooled(filters_, 0.0);
  for (std::size_t f = 0; f < filters_; ++f) {
    for (std::size_t c = 0; c < classes; ++c) dpooled[f] += wo[f * classes + c] * dlogits[c];
  }
  // Pre-activation gradients (tokens x filters).
  std::vector<double> da(m * filters_);
  for (std::size_t t = 0; t < m; ++t) {
    for (std::size_t f = 0; f < filters_; ++f) {
      const double c = act[t * filters_ + f];
      da[t * filters_ + f] = dpooled[f] / static_cast<double>(m) * (1.0 - c * c);
    }
  }

  if (dx) *dx = EncodedDocument(x.rows, x.dim);
  double* gw = dparams.empty() ? nullptr : dparams.data();
  double* gb = gw ? gw + filters_ * kWidth * dim_ : nullptr;
  for (std::size_t t = 0; t < m; ++t) {
    for (std::size_t f = 0; f < filters_; ++f) {
      const double g = da[t * filters_ + f];
      if (gb) gb[f] += g;
      for (std::size_t o = 0; o < kWidth; ++o) {
        if (t + o < 1 || t + o - 1 >= m) continue;
        const std::size_t src = t + o - 1;
        const double* wr = w + (f * kWidth + o) * dim_;
        if (gw) {
          const auto xr = x.row(src);
          double* gr = gw + (f * kWidth + o) * dim_;
          for (std::size_t i = 0; i < dim_; ++i) gr[i] += g * xr[i];
        }
        if (dx) {
          auto dr = dx->row(src);
          for (std::size_t i = 0; i < dim_; ++i) dr[i] += g * wr[i];
        }
      }
    }
  }
  if (!dparams.empty()) {
    double* gwo = dparams.data() + OutOffset();
    double* gbo = gwo + filters_ * classes;
    for (std::size_t f = 0; f < filters_; ++f) {
      for (std::size_t c = 0; c < classes; ++c) gwo[f * classes + c] += pooled[f] * dlogits[c];
    }
    for (std::size_t c = 0; c < classes; ++c) gbo[c] += dlogits[c];
  }
}

std::unique_ptr<TextClassifier> MakeModel(Arch arch,
                                          std::shared_ptr<const emb::EmbeddingTable> table,
                                          std::vector<std::string> class_names,
                                          std::size_t width) {
  if (arch == Arch::kBoe) {
    return std::make_unique<BoeMlpModel>(std::move(table), std::move(class_names),
                                         width ? width : BoeMlpModel::kDefaultHidden);
  }
  return std::make_unique<CnnModel>(std::move(table), std::move(class_names),
                                    width ? width : CnnModel::kDefaultFilters);
}

// ---------------------------------------------------------------------------
// Margin, training

double Margin(const PredictionScores& scores, int label) {
  double other = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < scores.num_classes(); ++c) {
    if (c != label) other = std::max(other, scores[c]);
  }
  return scores[label] - other;
}

double Margin(const TextClassifier& model, const TokenizedDocument& doc, int label) {
  return Margin(model.Predict(doc), label);
}

double Accuracy(const TextClassifier& model, const std::vector<TokenizedDocument>& docs) {
  if (docs.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& d : docs) correct += model.Predict(d).Argmax() == d.label_id;
  return static_cast<double>(correct) / static_cast<double>(docs.size());
}

TrainReport Train(TextClassifier& model, const corpus::DatasetSplit& split,
                  const TrainConfig& cfg) {
  if (cfg.epochs < 1 || !(cfg.learning_rate > 0.0) || cfg.batch_size < 1 || cfg.l2 < 0.0) {
    throw std::invalid_argument("invalid training configuration");
  }
  std::set<int> labels;
  for (const auto& d : split.train) {
    if (d.label_id < 0 || d.label_id >= model.num_classes()) {
      throw std::invalid_argument("training label outside the model's classes");
    }
    labels.insert(d.label_id);
  }
  if (labels.size() < 2) throw std::invalid_argument("need >=2 classes");

  Rng init_rng = MakeRng(cfg.seed, {0x1417});
  model.Initialize(init_rng);

  std::vector<EncodedDocument> encoded;
  encoded.reserve(split.train.size());
  for (const auto& d : split.train) encoded.push_back(Encode(d, model.embeddings()));

  const auto classes = static_cast<std::size_t>(model.num_classes());
  std::vector<std::size_t> order(split.train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad(model.parameters().size());
  std::vector<double> logits(classes), probs, dlogits(classes);

  TrainReport report;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng rng = MakeRng(cfg.seed, {0xe90c, static_cast<std::uint64_t>(epoch)});
    for (std::size_t i = order.size() - 1; i > 0; --i) {
      std::swap(order[i], order[UniformIndex(rng, i + 1)]);
    }
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const auto& x = encoded[order[b]];
        const int y = split.train[order[b]].label_id;
        model.Logits(x, logits);
        Softmax(logits, probs);
        const double py = probs[static_cast<std::size_t>(y)];
        const double loss = -std::log(std::max(py, std::numeric_limits<double>::min()));
        if (!std::isfinite(loss) || !std::isfinite(logits[0])) {
          std::ostringstream msg;
          msg << "training diverged: non-finite loss at epoch " << epoch << ", example "
              << split.train[order[b]].origin_id;
          throw std::runtime_error(msg.str());
        }
        loss_sum += loss;
        int arg = 0;
        for (std::size_t c = 1; c < classes; ++c) {
          if (probs[c] > probs[static_cast<std::size_t>(arg)]) arg = static_cast<int>(c);
        }
        correct += arg == y;
        for (std::size_t c = 0; c < classes; ++c) {
          dlogits[c] = probs[c] - (static_cast<int>(c) == y ? 1.0 : 0.0);
        }
        model.Backward(x, dlogits, grad, nullptr);
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      auto params = model.parameters();
      for (std::size_t p = 0; p < params.size(); ++p) {
        params[p] -= cfg.learning_rate * (grad[p] * scale + cfg.l2 * params[p]);
      }
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.loss = loss_sum / static_cast<double>(order.size());
    stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(order.size());
    stats.test_accuracy = Accuracy(model, split.test);
    report.epochs.push_back(stats);
    if (cfg.target_accuracy && !split.test.empty() && stats.test_accuracy >= *cfg.target_accuracy) {
      break;
    }
  }
  return report;
}

AdversarialRetrainResult AdversarialRetrain(const TextClassifier& model,
                                            const corpus::DatasetSplit& split,
                                            const AttackFn& attack, double fraction,
                                            const TrainConfig& cfg) {
  if (fraction < 0.0 || fraction > 1.0) throw std::invalid_argument("fraction must be in [0, 1]");
  std::vector<std::size_t> correct;
  for (std::size_t i = 0; i < split.train.size(); ++i) {
    if (model.Predict(split.train[i]).Argmax() == split.train[i].label_id) correct.push_back(i);
  }
  Rng rng = MakeRng(cfg.seed, {0xad7});
  for (std::size_t i = correct.size(); i > 1; --i) {
    std::swap(correct[i - 1], correct[UniformIndex(rng, i)]);
  }
  const auto n_sample = static_cast<std::size_t>(
      std::llround(fraction * static_cast<double>(correct.size())));

  AdversarialRetrainResult result;
  corpus::DatasetSplit augmented = split;
  for (std::size_t s = 0; s < n_sample; ++s) {
    const auto& doc = split.train[correct[s]];
    ++result.sampled;
    if (auto adv = attack(model, doc)) {
      adv->label_id = doc.label_id;
      augmented.train.push_back(std::move(*adv));
      ++result.generated;
    }
  }
  result.augmented_size = augmented.train.size();
  result.model = model.Clone();
  result.report = Train(*result.model, augmented, cfg);
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {
constexpr int kCheckpointVersion = 1;

std::string Hex(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}
}  // namespace

void SaveModel(const TextClassifier& model, const std::filesystem::path& path) {
  nlohmann::json j;
  j["format"] = "attrshield-model";
  j["version"] = kCheckpointVersion;
  j["arch"] = ArchName(model.arch());
  j["dim"] = model.embeddings().dim();
  j["width"] = model.width();
  j["classes"] = model.class_names();
  j["embedding_fingerprint"] = Hex(model.embeddings().Fingerprint());
  j["params"] = std::vector<double>(model.parameters().begin(), model.parameters().end());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump() << '\n';
}

std::unique_ptr<TextClassifier> LoadModel(const std::filesystem::path& path,
                                          std::shared_ptr<const emb::EmbeddingTable> table) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read model file: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed model file " + path.string() + ": " + e.what());
  }
  try {
    if (j.at("format") != "attrshield-model") throw std::runtime_error("not a model checkpoint");
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw std::runtime_error("unsupported checkpoint version");
    }
    if (j.at("embedding_fingerprint").get<std::string>() != Hex(table->Fingerprint()) ||
        j.at("dim").get<std::size_t>() != table->dim()) {
      throw std::runtime_error("embedding vocabulary does not match the checkpoint");
    }
    auto model = MakeModel(ParseArch(j.at("arch").get<std::string>()), table,
                           j.at("classes").get<std::vector<std::string>>(),
                           j.at("width").get<std::size_t>());
    const auto params = j.at("params").get<std::vector<double>>();
    if (params.size() != model->parameters().size()) {
      throw std::runtime_error("parameter count does not match the declared shapes");
    }
    std::copy(params.begin(), params.end(), model->parameters().begin());
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed model file " + path.string() + ": " + e.what());
  }
}

}  // namespace attrshield::clf
