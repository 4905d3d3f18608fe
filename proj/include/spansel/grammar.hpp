#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace spansel {

// S is the start symbol; Interest/NonInterest label every other constituent.
enum class NonTerminal : std::uint8_t { Start, Interest, NonInterest };

std::string_view to_string(NonTerminal nt);

// Half-open token interval [start, end) inside one sentence.
struct Span {
  std::size_t sentence = 0;
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t width() const { return end - start; }
  bool contains(const Span& other) const {
    return sentence == other.sentence && start <= other.start && other.end <= end;
  }
  bool strictly_contains(const Span& other) const { return contains(other) && *this != other; }

  friend auto operator<=>(const Span&, const Span&) = default;
  friend bool operator==(const Span&, const Span&) = default;
};

// True when the two spans are nested or disjoint (never partially overlapping).
bool nested_or_disjoint(const Span& a, const Span& b);
bool pairwise_nested_or_disjoint(std::span<const Span> spans);

// A production schema of the fixed grammar. Binary schemata carry both
// children; terminal schemata (X -> x) carry none.
struct RuleSchema {
  NonTerminal parent;
  std::optional<std::pair<NonTerminal, NonTerminal>> children;

  bool is_terminal() const { return !children.has_value(); }
};

// The 12 binary schemata followed by the 2 terminal schemata.
std::vector<RuleSchema> grammar_rules();

// Dense table of span scores s(i, k) for 0 <= i < k <= n, stored by
// (width, start) so that all spans of one width are contiguous.
class ScoreTable {
 public:
  ScoreTable() = default;
  explicit ScoreTable(std::size_t length, double fill = 0.0);

  std::size_t length() const { return length_; }
  std::size_t span_count() const { return values_.size(); }

  static std::size_t span_count(std::size_t length) { return length * (length + 1) / 2; }
  static std::size_t index(std::size_t length, std::size_t start, std::size_t end) {
    const std::size_t w = end - start;
    return (w - 1) * (length + 1) - (w - 1) * w / 2 + start;
  }
  std::size_t index(std::size_t start, std::size_t end) const { return index(length_, start, end); }

  // Unchecked access.
  double operator()(std::size_t start, std::size_t end) const { return values_[index(start, end)]; }

  // Checked access; throws RangeError.
  double at(std::size_t start, std::size_t end) const;
  // Throws RangeError on a bad anchor and NumericError on a non-finite score.
  void set(std::size_t start, std::size_t end, double value);

  std::span<const double> values() const { return values_; }

 private:
  std::size_t length_ = 0;
  std::vector<double> values_;
};

// A production anchored at concrete positions. Binary when `split` is set,
// otherwise the terminal rule X -> w[start].
struct AnchoredRule {
  NonTerminal parent = NonTerminal::NonInterest;
  std::size_t start = 0;
  std::size_t end = 0;
  std::optional<std::size_t> split;

  bool is_terminal() const { return !split.has_value(); }
  friend bool operator==(const AnchoredRule&, const AnchoredRule&) = default;
};

// A CNF parse of a sentence of length n >= 2, stored as anchored rules in
// preorder. Construction validates the structure.
class LabeledTree {
 public:
  // Throws StructureError unless `rules` is a valid preorder parse of [0, n).
  static LabeledTree from_rules(std::size_t length, std::vector<AnchoredRule> rules);

  std::size_t length() const { return length_; }
  std::span<const AnchoredRule> rules() const { return rules_; }

  friend bool operator==(const LabeledTree&, const LabeledTree&) = default;

 private:
  LabeledTree(std::size_t length, std::vector<AnchoredRule> rules)
      : length_(length), rules_(std::move(rules)) {}

  std::size_t length_ = 0;
  std::vector<AnchoredRule> rules_;
};

struct LabeledSpan {
  Span span;
  NonTerminal label = NonTerminal::NonInterest;

  friend auto operator<=>(const LabeledSpan&, const LabeledSpan&) = default;
  friend bool operator==(const LabeledSpan&, const LabeledSpan&) = default;
};

// Sorted by span; labels are Interest or NonInterest only.
using SpanSet = std::vector<LabeledSpan>;

// log rho(rule): s(span) for Interest parents, 0 otherwise.
double rule_log_weight(const AnchoredRule& rule, const ScoreTable& scores);

// Sum of rule log-weights over the tree.
double tree_log_score(const LabeledTree& tree, const ScoreTable& scores);

// Labeled spans of every node below the root (2n - 2 entries).
SpanSet spans_of(const LabeledTree& tree);

// Inverse of spans_of. Throws StructureError if the set is not a full tree.
LabeledTree tree_from_spans(std::size_t length, const SpanSet& spans);

std::vector<Span> interest_spans(const SpanSet& spans);

// Draws a tree with uniformly random split points; each node below the root
// is labeled Interest with the given probability.
LabeledTree sample_tree(std::size_t length, std::mt19937_64& rng, double interest_probability = 0.5);

}  // namespace spansel
