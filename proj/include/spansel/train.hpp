#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spansel/corpus.hpp"
#include "spansel/models.hpp"
#include "spansel/scorer.hpp"

namespace spansel {

enum class Optimizer { Sgd, Adagrad };

std::string_view to_string(Optimizer o);
Optimizer parse_optimizer(std::string_view name);
std::string_view to_string(L2Mode m);
L2Mode parse_l2_mode(std::string_view name);

struct TrainConfig {
  Task task = Task::Coref;
  std::size_t epochs = 20;
  double learning_rate = 0.05;
  std::size_t batch_size = 4;  // documents per update
  std::uint64_t seed = 1;
  ObjectiveConfig objective{L2Mode::Sampled};
  Optimizer optimizer = Optimizer::Adagrad;
  // Step size at epoch e is learning_rate / (1 + lr_decay * e).
  double lr_decay = 0.0;
  std::size_t hash_dim = kDefaultHashDim;
  std::optional<std::size_t> max_width;  // greedy baseline on dev
  double greedy_ratio = 0.26;            // dev greedy baseline ratio
  std::size_t threads = 1;
  // false: the coref candidate pool stays the gold spans, so the objective
  // is the same function in every epoch.
  bool refresh_pool = true;

  // Throws ConfigError.
  void validate() const;
};

struct EpochMetrics {
  std::size_t epoch = 0;  // 1-based
  double objective = 0.0;  // Σ over documents of L1 + L2, as evaluated during the epoch
  double l1 = 0.0;
  double l2 = 0.0;
  double train_selected_ratio = 0.0;  // CKY selection at the start of the epoch
  std::optional<double> dev_recall;    // structured selection vs dev gold
  std::optional<double> dev_precision;
  std::optional<double> dev_selected_ratio;
  std::optional<double> dev_greedy_recall;  // greedy_document at greedy_ratio
  Diagnostics diagnostics;
  double seconds = 0.0;
};

// One append-only key=value line.
std::string format_metrics(const EpochMetrics& m);

struct TrainResult {
  ModelParams params;
  std::vector<EpochMetrics> epochs;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

// Gradient ascent on L = l1_scale * L1 + l2_scale * L2. The candidate pool
// (gold plus current CKY selection) is refreshed at the start of each epoch.
// Per-document gradients are reduced in document order, so the result does
// not depend on the thread count. Throws NumericError naming the document
// when its objective is not finite, and ConfigError when the corpus task
// differs from config.task.
TrainResult train(const Corpus& corpus, const TrainConfig& config, const Corpus* dev = nullptr,
                  const EpochCallback& on_epoch = {});

// Value and sparse gradient of one document's objective.
struct DocumentObjective {
  double l1 = 0.0;
  double l2 = 0.0;
  std::vector<std::pair<std::uint32_t, double>> gradient;
  Diagnostics diagnostics;
};

DocumentObjective document_objective(const Document& doc, const DocumentFeatures& features,
                                     const ModelParams& params, Task task, std::span<const Span> pool,
                                     const ObjectiveConfig& config, std::mt19937_64& rng);

}  // namespace spansel
