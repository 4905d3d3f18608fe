#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spansel/document.hpp"
#include "spansel/grammar.hpp"
#include "spansel/inference.hpp"
#include "spansel/scorer.hpp"

namespace spansel {

enum class Strategy { Structured, GreedySentence, GreedyDocument, SigmoidThreshold };

std::string_view to_string(Strategy s);
// Throws ConfigError for an unknown name.
Strategy parse_strategy(std::string_view name);

inline constexpr double kDefaultRatio = 0.4;

struct SelectionConfig {
  Strategy strategy = Strategy::Structured;
  std::optional<std::size_t> k;        // greedy_sentence
  std::optional<double> ratio;         // greedy_document (lambda)
  std::optional<double> threshold;     // sigmoid_threshold
  std::optional<std::size_t> max_width;  // greedy and sigmoid span universe cap

  // Throws ConfigError unless exactly the knob of the strategy is set (the
  // structured strategy takes none) and its value is in range.
  void validate() const;
};

struct ScoredSpan {
  Span span;
  double score = 0.0;
};

// All spans of the given tables (sentence = table position) ordered by score
// descending, ties by (sentence, start, end). Spans wider than max_width are
// left out.
std::vector<ScoredSpan> rank_spans(std::span<const ScoreTable> tables, std::optional<std::size_t> max_width = {});

struct StructuredSelection {
  std::vector<std::vector<Span>> sentences;  // Interest spans of the CKY tree, per sentence
  std::size_t short_sentences = 0;           // length-1 sentences, left empty
};

StructuredSelection structured_select(std::span<const ScoreTable> tables);
StructuredSelection structured_select(const Document& doc, const ModelParams& params);

// The K highest-scoring spans of one sentence, best first.
std::vector<Span> greedy_select_sentence(const ScoreTable& scores, std::size_t k,
                                         std::optional<std::size_t> max_width = {});

// The floor(ratio * |D|) highest-scoring spans across the document, best
// first, where |D| is the total token count. Throws ConfigError unless
// ratio > 0.
std::vector<Span> greedy_select_document(std::span<const ScoreTable> tables, double ratio,
                                         std::optional<std::size_t> max_width = {});

// Spans with probability >= threshold, in (start, end) order. May contain
// crossing spans. Throws ConfigError unless 0 < threshold < 1.
std::vector<Span> sigmoid_select(const MarginalTable& probabilities, double threshold,
                                 std::optional<std::size_t> max_width = {});

// Span-grammar scores of every sentence of a document.
std::vector<ScoreTable> document_scores(const Document& doc, const ModelParams& params);

// Runs the configured strategy on a document; spans sorted by
// (sentence, start, end).
std::vector<Span> select(const Document& doc, const ModelParams& params, const SelectionConfig& config);

}  // namespace spansel
