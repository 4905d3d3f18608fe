#pragma once

#include <cstddef>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spansel/document.hpp"
#include "spansel/inference.hpp"
#include "spansel/scorer.hpp"
#include "spansel/tape.hpp"

namespace spansel {

inline constexpr std::size_t kDefaultCandidateWindow = 50;

// A candidate antecedent; std::nullopt is the dummy antecedent epsilon.
using Antecedent = std::optional<Span>;

// epsilon followed by the `window` pool spans nearest before `mention` in
// (sentence, start, end) order. `pool` must be sorted and de-duplicated.
std::vector<Antecedent> antecedent_candidates(const Span& mention, std::span<const Span> pool,
                                              std::size_t window = kDefaultCandidateWindow);

// Softmax over {0} ∪ logits: entry 0 is the null outcome.
std::vector<double> null_softmax(std::span<const double> logits);

// p(mention ~> m | mention) for each candidate, in candidate order. Throws
// ContractViolation when epsilon is missing or a candidate does not precede
// the mention.
std::vector<double> antecedent_distribution(const DocumentFeatures& features, const ModelParams& params,
                                            const Span& mention, std::span<const Antecedent> candidates);

// Role labels of the model plus the null relation at index 0.
class RoleLabelSpace {
 public:
  static constexpr std::string_view kNull = "<null>";

  explicit RoleLabelSpace(const ModelParams& params);

  std::size_t size() const { return labels_.size(); }
  const std::string& label(std::size_t i) const { return labels_[i]; }
  // Throws DataError for a label outside the space.
  std::size_t index(std::string_view label) const;

 private:
  std::vector<std::string> labels_;
};

// p(argument -l-> predicate | argument) for every l in label-space order.
std::vector<double> role_distribution(const DocumentFeatures& features, const ModelParams& params,
                                      const Span& argument, std::size_t predicate, const RoleLabelSpace& labels);

// --- Objectives ---------------------------------------------------------------

enum class L2Mode { Full, Sampled };

struct ObjectiveConfig {
  L2Mode l2_mode = L2Mode::Full;
  double negative_rate = 0.1;  // Sampled mode: floor(rate * |D|) spans per pass
  std::size_t window = kDefaultCandidateWindow;
  double l1_scale = 1.0;
  double l2_scale = 1.0;
};

// Counts of annotations the objectives had to skip.
struct Diagnostics {
  std::size_t whole_sentence_gold = 0;  // structurally p = 0; excluded from L1
  std::size_t short_sentences = 0;      // length 1, no parse
  std::size_t far_antecedents = 0;      // gold mention whose mates all fall outside the window

  Diagnostics& operator+=(const Diagnostics& o);
};

// Per-document tape state: span marginals from the grammar head plus cached
// mention scores. Sentences shorter than 2 tokens have no marginals.
class DocumentGraph {
 public:
  DocumentGraph(ad::Tape& tape, const Document& doc, const DocumentFeatures& features, const ModelParams& params);

  ad::Tape& tape() { return tape_; }
  const Document& document() const { return doc_; }
  const DocumentFeatures& features() const { return features_; }
  const ModelParams& params() const { return params_; }

  bool parseable(std::size_t sentence) const { return doc_.sentences[sentence].size() >= 2; }
  // log p(span | w); -inf for the whole-sentence span.
  ad::Var log_marginal(const Span& span);
  ad::Var mention_score(const Span& span);
  // s_m(mention) + s_m(antecedent) + s_a(mention, antecedent)
  ad::Var antecedent_logit(const Span& mention, const Span& antecedent);
  // s_m(argument) + s_r(argument, predicate, role)
  ad::Var role_logit(const Span& argument, std::size_t predicate, std::size_t role);

 private:
  ad::Tape& tape_;
  const Document& doc_;
  const DocumentFeatures& features_;
  const ModelParams& params_;
  std::vector<std::vector<ad::Var>> log_marginals_;             // [sentence][ScoreTable index]
  std::vector<std::vector<std::optional<ad::Var>>> mention_;    // [sentence][ScoreTable index]
};

// Non-gold spans drawn uniformly without replacement, floor(rate * |D|) of
// them (or all, when fewer exist). Whole-sentence spans are never drawn.
// Throws ConfigError unless 0 < rate <= 1.
std::vector<Span> sample_negative_spans(const Document& doc, std::span<const Span> gold, double rate,
                                        std::mt19937_64& rng);

// Σ over gold mentions of log p(σ) + log Σ_{m in G} p(σ ~> m | σ).
ad::Var coref_l1(DocumentGraph& graph, std::span<const Span> pool, std::size_t window, Diagnostics& diag);

// Full: Σ over non-gold spans of log(p(ε|σ) p(σ) + 1 - p(σ)).
// Sampled: Σ over sampled non-gold spans of log(1 - p(σ)).
ad::Var coref_l2(DocumentGraph& graph, std::span<const Span> pool, const ObjectiveConfig& config,
                 std::mt19937_64& rng, Diagnostics& diag);

// Σ over gold (argument, predicate) pairs of log p(σ) + log p(σ -l-> v | σ).
ad::Var srl_l1(DocumentGraph& graph, const RoleLabelSpace& labels, Diagnostics& diag);

// Full: Σ over predicates v and spans of v's sentence that are no predicate's
// argument, of log(p(ε|σ, v) p(σ) + 1 - p(σ)). Sampled: as coref_l2.
ad::Var srl_l2(DocumentGraph& graph, const RoleLabelSpace& labels, const ObjectiveConfig& config,
               std::mt19937_64& rng, Diagnostics& diag);

// Gold-only selector objective for corpora without linking or roles:
// Σ gold log p(σ) plus log(1 - p(σ)) over all (Full) or sampled non-gold spans.
ad::Var span_l1(DocumentGraph& graph, Diagnostics& diag);
ad::Var span_l2(DocumentGraph& graph, const ObjectiveConfig& config, std::mt19937_64& rng);

}  // namespace spansel
