#include "spansel/grammar.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include "spansel/errors.hpp"

namespace spansel {

std::string_view to_string(NonTerminal nt) {
  switch (nt) {
    case NonTerminal::Start: return "S";
    case NonTerminal::Interest: return "X_sigma";
    case NonTerminal::NonInterest: return "X_nonsigma";
  }
  return "?";
}

bool nested_or_disjoint(const Span& a, const Span& b) {
  if (a.sentence != b.sentence) return true;
  if (a.end <= b.start || b.end <= a.start) return true;
  return a.contains(b) || b.contains(a);
}

bool pairwise_nested_or_disjoint(std::span<const Span> spans) {
  for (std::size_t i = 0; i < spans.size(); ++i)
    for (std::size_t j = i + 1; j < spans.size(); ++j)
      if (!nested_or_disjoint(spans[i], spans[j])) return false;
  return true;
}

std::vector<RuleSchema> grammar_rules() {
  constexpr NonTerminal kX[] = {NonTerminal::Interest, NonTerminal::NonInterest};
  std::vector<RuleSchema> rules;
  for (NonTerminal parent : {NonTerminal::Start, NonTerminal::Interest, NonTerminal::NonInterest})
    for (NonTerminal left : kX)
      for (NonTerminal right : kX) rules.push_back({parent, std::make_pair(left, right)});
  for (NonTerminal parent : kX) rules.push_back({parent, std::nullopt});
  return rules;
}

ScoreTable::ScoreTable(std::size_t length, double fill)
    : length_(length), values_(span_count(length), fill) {}

double ScoreTable::at(std::size_t start, std::size_t end) const {
  if (start >= end || end > length_)
    throw RangeError("span [" + std::to_string(start) + ", " + std::to_string(end) +
                     ") outside sentence of length " + std::to_string(length_));
  return values_[index(start, end)];
}

void ScoreTable::set(std::size_t start, std::size_t end, double value) {
  if (start >= end || end > length_)
    throw RangeError("span [" + std::to_string(start) + ", " + std::to_string(end) +
                     ") outside sentence of length " + std::to_string(length_));
  if (!std::isfinite(value)) throw NumericError("span scores must be finite");
  values_[index(start, end)] = value;
}

namespace {

// Validates the subtree rooted at rules[pos] covering [start, end); returns the
// position just past it.
std::size_t validate_subtree(std::span<const AnchoredRule> rules, std::size_t pos, std::size_t start,
                             std::size_t end, bool is_root) {
  if (pos >= rules.size()) throw StructureError("tree ends before covering every token");
  const AnchoredRule& r = rules[pos];
  if (r.start != start || r.end != end)
    throw StructureError("node anchored at [" + std::to_string(r.start) + ", " + std::to_string(r.end) +
                         ") where [" + std::to_string(start) + ", " + std::to_string(end) + ") was expected");
  if (is_root != (r.parent == NonTerminal::Start))
    throw StructureError(is_root ? "root must be labeled S" : "S may only label the root");
  if (r.is_terminal()) {
    if (end - start != 1) throw StructureError("terminal rule over a span wider than one token");
    if (is_root) throw StructureError("S has no terminal rules");
    return pos + 1;
  }
  if (end - start < 2 || *r.split <= start || *r.split >= end)
    throw StructureError("binary rule split outside its span");
  const std::size_t next = validate_subtree(rules, pos + 1, start, *r.split, false);
  return validate_subtree(rules, next, *r.split, end, false);
}

}  // namespace

LabeledTree LabeledTree::from_rules(std::size_t length, std::vector<AnchoredRule> rules) {
  if (length < 2) throw StructureError("sentences shorter than two tokens have no parse");
  const std::size_t consumed = validate_subtree(rules, 0, 0, length, true);
  if (consumed != rules.size()) throw StructureError("trailing rules after a complete tree");
  return LabeledTree(length, std::move(rules));
}

double rule_log_weight(const AnchoredRule& rule, const ScoreTable& scores) {
  if (rule.start >= rule.end || rule.end > scores.length())
    throw RangeError("rule anchored outside the score table");
  return rule.parent == NonTerminal::Interest ? scores(rule.start, rule.end) : 0.0;
}

double tree_log_score(const LabeledTree& tree, const ScoreTable& scores) {
  if (tree.length() != scores.length())
    throw StructureError("tree and score table disagree on sentence length");
  double total = 0.0;
  for (const AnchoredRule& r : tree.rules()) total += rule_log_weight(r, scores);
  return total;
}

SpanSet spans_of(const LabeledTree& tree) {
  SpanSet out;
  out.reserve(2 * tree.length() - 2);
  for (const AnchoredRule& r : tree.rules()) {
    if (r.parent == NonTerminal::Start) continue;
    out.push_back({Span{0, r.start, r.end}, r.parent});
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

void rebuild(const std::set<std::pair<std::size_t, std::size_t>>& present,
             const std::vector<NonTerminal>& label_of, std::size_t length, std::size_t start,
             std::size_t end, NonTerminal parent, std::vector<AnchoredRule>& out) {
  if (end - start == 1) {
    out.push_back({parent, start, end, std::nullopt});
    return;
  }
  // Left child is the longest present span starting at `start` inside [start, end).
  std::optional<std::size_t> split;
  for (std::size_t j = end - 1; j > start; --j) {
    if (present.count({start, j})) {
      split = j;
      break;
    }
  }
  if (!split || !present.count({*split, end}))
    throw StructureError("span set does not form a binary tree over [" + std::to_string(start) + ", " +
                         std::to_string(end) + ")");
  out.push_back({parent, start, end, split});
  rebuild(present, label_of, length, start, *split, label_of[ScoreTable::index(length, start, *split)], out);
  rebuild(present, label_of, length, *split, end, label_of[ScoreTable::index(length, *split, end)], out);
}

}  // namespace

LabeledTree tree_from_spans(std::size_t length, const SpanSet& spans) {
  if (length < 2) throw StructureError("sentences shorter than two tokens have no parse");
  if (spans.size() != 2 * length - 2) throw StructureError("a full tree has exactly 2n - 2 labeled spans");
  std::set<std::pair<std::size_t, std::size_t>> present;
  std::vector<NonTerminal> label_of(ScoreTable::span_count(length), NonTerminal::NonInterest);
  for (const LabeledSpan& ls : spans) {
    if (ls.span.start >= ls.span.end || ls.span.end > length) throw RangeError("span outside sentence");
    if (ls.label == NonTerminal::Start) throw StructureError("S cannot label a span below the root");
    if (ls.span.start == 0 && ls.span.end == length)
      throw StructureError("the whole sentence is the root, not a labeled span");
    if (!present.insert({ls.span.start, ls.span.end}).second) throw StructureError("duplicate span");
    label_of[ScoreTable::index(length, ls.span.start, ls.span.end)] = ls.label;
  }
  std::vector<AnchoredRule> rules;
  rules.reserve(2 * length - 1);
  rebuild(present, label_of, length, 0, length, NonTerminal::Start, rules);
  return LabeledTree::from_rules(length, std::move(rules));
}

std::vector<Span> interest_spans(const SpanSet& spans) {
  std::vector<Span> out;
  for (const LabeledSpan& ls : spans)
    if (ls.label == NonTerminal::Interest) out.push_back(ls.span);
  return out;
}

namespace {

void sample_subtree(std::size_t start, std::size_t end, NonTerminal parent, std::mt19937_64& rng,
                    std::bernoulli_distribution& interest, std::vector<AnchoredRule>& out) {
  if (end - start == 1) {
    out.push_back({parent, start, end, std::nullopt});
    return;
  }
  std::uniform_int_distribution<std::size_t> pick(start + 1, end - 1);
  const std::size_t split = pick(rng);
  out.push_back({parent, start, end, split});
  auto label = [&] { return interest(rng) ? NonTerminal::Interest : NonTerminal::NonInterest; };
  const NonTerminal left = label();
  sample_subtree(start, split, left, rng, interest, out);
  const NonTerminal right = label();
  sample_subtree(split, end, right, rng, interest, out);
}

}  // namespace

LabeledTree sample_tree(std::size_t length, std::mt19937_64& rng, double interest_probability) {
  std::bernoulli_distribution interest(interest_probability);
  std::vector<AnchoredRule> rules;
  rules.reserve(2 * length - 1);
  sample_subtree(0, length, NonTerminal::Start, rng, interest, rules);
  return LabeledTree::from_rules(length, std::move(rules));
}

}  // namespace spansel
