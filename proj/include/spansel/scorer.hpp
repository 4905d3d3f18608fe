#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spansel/document.hpp"
#include "spansel/grammar.hpp"
#include "spansel/inference.hpp"
#include "spansel/tape.hpp"

namespace spansel {

// Weight blocks of the log-linear scorer. Role has one block per role label.
enum class Head : std::uint8_t { SpanGrammar, Mention, AntecedentPair, Role };

std::string_view to_string(Head head);

inline constexpr std::size_t kDefaultHashDim = std::size_t{1} << 16;
inline constexpr std::string_view kModelFormat = "spansel-model/1";

// Flat weight vector laid out as [span_grammar | mention | antecedent_pair |
// role_0 | role_1 | ...], each block `hash_dim` wide. The null role has no
// block; its score is fixed at 0.
class ModelParams {
 public:
  explicit ModelParams(std::size_t hash_dim = kDefaultHashDim, std::uint64_t seed = 0,
                       std::vector<std::string> role_labels = {});

  std::size_t hash_dim() const { return hash_dim_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<std::string>& role_labels() const { return role_labels_; }
  std::optional<std::size_t> role_index(std::string_view label) const;

  std::size_t offset(Head head, std::size_t role = 0) const;

  std::span<const double> weights() const { return weights_; }
  std::span<double> weights() { return weights_; }

  // Uniform weights in [-scale, scale], deterministic for a seed.
  void randomize(std::uint64_t seed, double scale);

  friend bool operator==(const ModelParams&, const ModelParams&) = default;

 private:
  std::size_t hash_dim_;
  std::uint64_t seed_;
  std::vector<std::string> role_labels_;
  std::vector<double> weights_;
};

// --- Features -----------------------------------------------------------------

std::uint64_t token_hash(std::string_view token);

// Width buckets 1, 2, 3-4, 5-8, 9+ as 0..4.
std::size_t width_bucket(std::size_t width);

// Maps feature templates to bucket ids in [0, dim) with a seeded hash.
class FeatureHasher {
 public:
  FeatureHasher(std::uint64_t seed, std::size_t dim) : seed_(seed), dim_(dim) {}
  std::uint32_t operator()(std::initializer_list<std::uint64_t> parts) const;
  std::size_t dim() const { return dim_; }

 private:
  std::uint64_t seed_;
  std::size_t dim_;
};

// Span, pair and role features of one document, relative to a head block.
// Each list is sorted by id with colliding features merged into counts.
class DocumentFeatures {
 public:
  DocumentFeatures(const std::vector<Sentence>& sentences, const ModelParams& params);

  std::size_t sentence_count() const { return tokens_.size(); }
  std::size_t length(std::size_t sentence) const { return tokens_[sentence].size(); }

  // Id of the bias feature shared by every span.
  std::uint32_t span_bias() const;
  // bias, width bucket, first, last, preceding token, (first, last)
  std::span<const ad::ParamRef> span(const Span& s) const;
  // bias, exact match, first/last token match, sentence distance, width
  // difference, overlap
  std::vector<ad::ParamRef> pair(const Span& mention, const Span& antecedent) const;
  // bias, side of the predicate, distance, first, last, width, (predicate,
  // first), (side, first)
  std::vector<ad::ParamRef> role(const Span& argument, std::size_t predicate) const;

 private:
  FeatureHasher hasher_;
  std::vector<std::vector<std::uint64_t>> tokens_;
  std::vector<std::vector<std::vector<ad::ParamRef>>> spans_;  // [sentence][ScoreTable index]
};

// --- Scoring ------------------------------------------------------------------

double dot(std::span<const ad::ParamRef> features, const ModelParams& params, std::size_t offset);

// s(i, k) = w_head . f(sentence, i, k) for every span. Head must be
// SpanGrammar or Mention.
ScoreTable score_spans(const Sentence& sentence, const ModelParams& params, Head head);
ScoreTable score_spans(const DocumentFeatures& features, std::size_t sentence, const ModelParams& params, Head head);

// Same values recorded as Dot nodes, in ScoreTable order.
std::vector<ad::Var> tape_score_spans(ad::Tape& tape, const DocumentFeatures& features, std::size_t sentence,
                                      const ModelParams& params, Head head);

ad::Var tape_dot(ad::Tape& tape, std::span<const ad::ParamRef> features, const ModelParams& params,
                 std::size_t offset);

// Independent per-span sigmoid(s); the non_interest entries hold 1 - p.
MarginalTable sigmoid_prob(const ScoreTable& scores);

// --- Gradient check -----------------------------------------------------------

using LossBuilder = std::function<ad::Var(ad::Tape&, const ModelParams&)>;

struct GradCheckResult {
  double loss = 0.0;
  double max_relative_error = 0.0;
  std::size_t checked = 0;
};

inline constexpr double kGradCheckStep = 1e-5;
// Denominator floor of the relative error, so that weights with near-zero
// gradients are compared on an absolute scale.
inline constexpr double kGradCheckFloor = 1e-3;

// Compares the reverse-pass gradient with central finite differences on
// `count` weights drawn from those the loss touches (padded with untouched
// weights when fewer exist). Throws NumericError on a non-finite loss.
GradCheckResult grad_check(const LossBuilder& loss, const ModelParams& params, std::uint64_t seed,
                           std::size_t count = 50, double step = kGradCheckStep);

// --- Model files --------------------------------------------------------------

std::string model_to_json(const ModelParams& params);
ModelParams model_from_json(std::string_view text);
void save_model(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_model(const std::filesystem::path& path);

}  // namespace spansel
