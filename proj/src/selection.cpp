#include "spansel/selection.hpp"

#include <algorithm>
#include <cmath>

#include "spansel/errors.hpp"

namespace spansel {

namespace {

bool better(const ScoredSpan& a, const ScoredSpan& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.span < b.span;
}

std::vector<ScoredSpan> collect(std::span<const ScoreTable> tables, std::optional<std::size_t> max_width) {
  std::vector<ScoredSpan> all;
  for (std::size_t s = 0; s < tables.size(); ++s) {
    const std::size_t n = tables[s].length();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = i + 1; k <= n; ++k)
        if (!max_width || k - i <= *max_width) all.push_back({{s, i, k}, tables[s](i, k)});
  }
  return all;
}

std::vector<Span> top(std::vector<ScoredSpan> all, std::size_t count) {
  count = std::min(count, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(count), all.end(), better);
  std::vector<Span> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(all[i].span);
  return out;
}

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::Structured:
      return "structured";
    case Strategy::GreedySentence:
      return "greedy_sentence";
    case Strategy::GreedyDocument:
      return "greedy_document";
    case Strategy::SigmoidThreshold:
      return "sigmoid_threshold";
  }
  return "?";
}

Strategy parse_strategy(std::string_view name) {
  for (Strategy s : {Strategy::Structured, Strategy::GreedySentence, Strategy::GreedyDocument,
                     Strategy::SigmoidThreshold})
    if (to_string(s) == name) return s;
  throw ConfigError("unknown selection strategy '" + std::string(name) + "'");
}

void SelectionConfig::validate() const {
  const bool want_k = strategy == Strategy::GreedySentence;
  const bool want_ratio = strategy == Strategy::GreedyDocument;
  const bool want_threshold = strategy == Strategy::SigmoidThreshold;
  const std::string name(to_string(strategy));
  if (k.has_value() != want_k) throw ConfigError(want_k ? name + " needs K" : "K does not apply to " + name);
  if (ratio.has_value() != want_ratio)
    throw ConfigError(want_ratio ? name + " needs a ratio" : "a ratio does not apply to " + name);
  if (threshold.has_value() != want_threshold)
    throw ConfigError(want_threshold ? name + " needs a threshold" : "a threshold does not apply to " + name);
  if (ratio && !(*ratio > 0.0)) throw ConfigError("ratio must be positive");
  if (threshold && !(*threshold > 0.0 && *threshold < 1.0)) throw ConfigError("threshold must lie in (0, 1)");
  if (max_width && *max_width == 0) throw ConfigError("max width must be positive");
}

std::vector<ScoredSpan> rank_spans(std::span<const ScoreTable> tables, std::optional<std::size_t> max_width) {
  auto all = collect(tables, max_width);
  std::sort(all.begin(), all.end(), better);
  return all;
}

StructuredSelection structured_select(std::span<const ScoreTable> tables) {
  StructuredSelection out;
  out.sentences.resize(tables.size());
  for (std::size_t s = 0; s < tables.size(); ++s) {
    if (tables[s].length() < 2) {
      ++out.short_sentences;
      continue;
    }
    for (Span span : cky(tables[s]).interest_spans) {
      span.sentence = s;
      out.sentences[s].push_back(span);
    }
  }
  return out;
}

StructuredSelection structured_select(const Document& doc, const ModelParams& params) {
  const auto tables = document_scores(doc, params);
  return structured_select(tables);
}

std::vector<Span> greedy_select_sentence(const ScoreTable& scores, std::size_t k,
                                         std::optional<std::size_t> max_width) {
  return top(collect(std::span(&scores, 1), max_width), k);
}

std::vector<Span> greedy_select_document(std::span<const ScoreTable> tables, double ratio,
                                         std::optional<std::size_t> max_width) {
  if (!(ratio > 0.0)) throw ConfigError("ratio must be positive");
  std::size_t tokens = 0;
  for (const ScoreTable& t : tables) tokens += t.length();
  const auto count = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(tokens) + 1e-9));
  return top(collect(tables, max_width), count);
}

std::vector<Span> sigmoid_select(const MarginalTable& probabilities, double threshold,
                                 std::optional<std::size_t> max_width) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("threshold must lie in (0, 1)");
  std::vector<Span> out;
  const std::size_t n = probabilities.length();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = i + 1; k <= n; ++k)
      if ((!max_width || k - i <= *max_width) && probabilities(i, k) >= threshold) out.push_back({0, i, k});
  return out;
}

std::vector<ScoreTable> document_scores(const Document& doc, const ModelParams& params) {
  const DocumentFeatures features(doc.sentences, params);
  std::vector<ScoreTable> tables;
  tables.reserve(doc.sentences.size());
  for (std::size_t s = 0; s < doc.sentences.size(); ++s)
    tables.push_back(score_spans(features, s, params, Head::SpanGrammar));
  return tables;
}

std::vector<Span> select(const Document& doc, const ModelParams& params, const SelectionConfig& config) {
  config.validate();
  const auto tables = document_scores(doc, params);
  std::vector<Span> out;
  switch (config.strategy) {
    case Strategy::Structured:
      for (const auto& sentence : structured_select(tables).sentences) out.insert(out.end(), sentence.begin(), sentence.end());
      break;
    case Strategy::GreedySentence:
      for (std::size_t s = 0; s < tables.size(); ++s)
        for (Span span : greedy_select_sentence(tables[s], *config.k, config.max_width)) {
          span.sentence = s;
          out.push_back(span);
        }
      break;
    case Strategy::GreedyDocument:
      out = greedy_select_document(tables, *config.ratio, config.max_width);
      break;
    case Strategy::SigmoidThreshold:
      for (std::size_t s = 0; s < tables.size(); ++s)
        for (Span span : sigmoid_select(sigmoid_prob(tables[s]), *config.threshold, config.max_width)) {
          span.sentence = s;
          out.push_back(span);
        }
      break;
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace spansel
