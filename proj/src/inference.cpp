#include "spansel/inference.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "spansel/detail/recurrences.hpp"
#include "spansel/errors.hpp"
#include "spansel/numeric.hpp"

namespace spansel {

namespace {

void require_parseable(std::size_t n) {
  if (n < 2)
    throw UnsupportedLength("sentence of length " + std::to_string(n) + " has no parse under the grammar");
}

}  // namespace

double Chart::inside(std::size_t start, std::size_t end, NonTerminal x) const {
  if (start >= end || end > length_) throw RangeError("chart cell outside the sentence");
  if (x == NonTerminal::Start) return (start == 0 && end == length_) ? log_z_ : kNegInf;
  const std::size_t c = ScoreTable::index(length_, start, end);
  return x == NonTerminal::Interest ? scores_[c] + inner_[c] : inner_[c];
}

double Chart::outside(std::size_t start, std::size_t end, NonTerminal x) const {
  if (!has_outside()) throw ContractViolation("outside values requested before outside()");
  if (start >= end || end > length_) throw RangeError("chart cell outside the sentence");
  const bool root = start == 0 && end == length_;
  if (x == NonTerminal::Start) return root ? 0.0 : kNegInf;
  return root ? kNegInf : outside_[ScoreTable::index(length_, start, end)];
}

Chart inside(const ScoreTable& scores) {
  const std::size_t n = scores.length();
  require_parseable(n);
  detail::RealBackend backend;
  auto values = detail::inside_pass(backend, scores.values(), n);
  Chart chart;
  chart.length_ = n;
  chart.log_z_ = values.log_z;
  chart.scores_.assign(scores.values().begin(), scores.values().end());
  chart.inner_ = std::move(values.inner);
  chart.total_ = std::move(values.total);
  chart.softplus_score_ = std::move(values.softplus_score);
  return chart;
}

void outside(Chart& chart, const ScoreTable& scores) {
  if (chart.length_ != scores.length()) throw ContractViolation("chart and score table lengths differ");
  detail::InsideValues<double> values;
  values.length = chart.length_;
  values.inner = chart.inner_;
  values.total = chart.total_;
  values.softplus_score = chart.softplus_score_;
  values.log_z = chart.log_z_;
  detail::RealBackend backend;
  chart.outside_ = detail::outside_pass(backend, values);
  chart.outside_[ScoreTable::index(chart.length_, 0, chart.length_)] = kNegInf;
}

MarginalTable marginals(const ScoreTable& scores) {
  Chart chart = inside(scores);
  outside(chart, scores);
  const std::size_t n = scores.length();
  MarginalTable table(n);
  for (std::size_t w = 1; w < n; ++w) {
    for (std::size_t i = 0; i + w <= n; ++i) {
      const std::size_t k = i + w;
      const double alpha = chart.outside(i, k, NonTerminal::Interest);
      const std::size_t c = table.index(i, k);
      table.interest_values()[c] = std::exp(alpha + chart.inside(i, k, NonTerminal::Interest) - chart.log_z());
      table.non_interest_values()[c] =
          std::exp(alpha + chart.inside(i, k, NonTerminal::NonInterest) - chart.log_z());
    }
  }
  return table;
}

namespace {

void collect_viterbi(const ScoreTable& scores, const std::vector<std::size_t>& split, std::size_t start,
                     std::size_t end, bool is_root, SpanSet& out) {
  const std::size_t n = scores.length();
  if (!is_root) {
    const NonTerminal label = scores(start, end) > 0.0 ? NonTerminal::Interest : NonTerminal::NonInterest;
    out.push_back({Span{0, start, end}, label});
  }
  if (end - start == 1) return;
  const std::size_t j = split[ScoreTable::index(n, start, end)];
  collect_viterbi(scores, split, start, j, false, out);
  collect_viterbi(scores, split, j, end, false, out);
}

}  // namespace

ViterbiResult cky(const ScoreTable& scores) {
  const std::size_t n = scores.length();
  require_parseable(n);
  const std::size_t cells = ScoreTable::span_count(n);
  // best[c]: max over labeled subtrees at c of the X-labeled node;
  // inner_best[c]: max over split points of the children's best sum.
  std::vector<double> best(cells), inner_best(cells, 0.0);
  std::vector<std::size_t> split(cells, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = ScoreTable::index(n, i, i + 1);
    best[c] = std::max(scores.values()[c], 0.0);
  }
  for (std::size_t w = 2; w <= n; ++w) {
    for (std::size_t i = 0; i + w <= n; ++i) {
      const std::size_t k = i + w;
      double hi = kNegInf;
      std::size_t arg = i + 1;
      for (std::size_t j = i + 1; j < k; ++j) {
        const double v = best[ScoreTable::index(n, i, j)] + best[ScoreTable::index(n, j, k)];
        if (v > hi) {
          hi = v;
          arg = j;
        }
      }
      const std::size_t c = ScoreTable::index(n, i, k);
      inner_best[c] = hi;
      split[c] = arg;
      best[c] = hi + std::max(scores.values()[c], 0.0);
    }
  }
  ViterbiResult result;
  result.best_log_score = inner_best[ScoreTable::index(n, 0, n)];
  result.selection.reserve(2 * n - 2);
  collect_viterbi(scores, split, 0, n, true, result.selection);
  std::sort(result.selection.begin(), result.selection.end());
  result.interest_spans = interest_spans(result.selection);
  return result;
}

ad::Var tape_log_partition(ad::Tape& tape, std::span<const ad::Var> scores, std::size_t length) {
  require_parseable(length);
  if (scores.size() != ScoreTable::span_count(length)) throw ContractViolation("score count does not match length");
  detail::TapeBackend backend{tape};
  return detail::inside_pass(backend, scores, length).log_z;
}

TapeMarginals tape_log_marginals(ad::Tape& tape, std::span<const ad::Var> scores, std::size_t length) {
  require_parseable(length);
  if (scores.size() != ScoreTable::span_count(length)) throw ContractViolation("score count does not match length");
  detail::TapeBackend backend{tape};
  const auto in = detail::inside_pass(backend, scores, length);
  const auto outer = detail::outside_pass(backend, in);
  TapeMarginals out;
  out.log_z = in.log_z;
  out.log_interest.resize(scores.size());
  const std::size_t root = ScoreTable::index(length, 0, length);
  for (std::size_t c = 0; c < scores.size(); ++c) {
    if (c == root) {
      out.log_interest[c] = tape.constant(kNegInf);
      continue;
    }
    // alpha + beta_I - log Z, with beta_I = s + inner.
    const ad::Var beta = tape.add(scores[c], in.inner[c]);
    out.log_interest[c] = tape.sub(tape.add(outer[c], beta), in.log_z);
  }
  return out;
}

// --- Brute force --------------------------------------------------------------

namespace {

struct ShapeNode {
  std::size_t start, end;
  std::optional<std::size_t> split;
};

using Shape = std::vector<ShapeNode>;  // preorder

std::vector<Shape> shapes_over(std::size_t start, std::size_t end) {
  if (end - start == 1) return {Shape{{start, end, std::nullopt}}};
  std::vector<Shape> out;
  for (std::size_t j = start + 1; j < end; ++j) {
    const auto lefts = shapes_over(start, j);
    const auto rights = shapes_over(j, end);
    for (const Shape& l : lefts) {
      for (const Shape& r : rights) {
        Shape s;
        s.reserve(1 + l.size() + r.size());
        s.push_back({start, end, j});
        s.insert(s.end(), l.begin(), l.end());
        s.insert(s.end(), r.begin(), r.end());
        out.push_back(std::move(s));
      }
    }
  }
  return out;
}

void require_enumerable(std::size_t n) {
  if (n < 2 || n > kMaxEnumerationLength)
    throw RangeError("tree enumeration supports 2 <= n <= " + std::to_string(kMaxEnumerationLength) + ", got " +
                     std::to_string(n));
}

}  // namespace

std::size_t count_trees(std::size_t length) {
  require_enumerable(length);
  // Catalan(n - 1) shapes times 2^(2n - 2) labelings.
  std::size_t catalan = 1;
  for (std::size_t k = 0; k + 1 < length; ++k) catalan = catalan * 2 * (2 * k + 1) / (k + 2);
  return catalan << (2 * length - 2);
}

void enumerate_trees(std::size_t length, const ScoreTable& scores,
                     const std::function<void(const LabeledTree&, double)>& visit) {
  require_enumerable(length);
  if (scores.length() != length) throw ContractViolation("score table length differs from n");
  const std::size_t labeled = 2 * length - 2;
  for (const Shape& shape : shapes_over(0, length)) {
    for (std::size_t mask = 0; mask < (std::size_t{1} << labeled); ++mask) {
      std::vector<AnchoredRule> rules;
      rules.reserve(shape.size());
      std::size_t bit = 0;
      for (const ShapeNode& node : shape) {
        NonTerminal label = NonTerminal::Start;
        if (!rules.empty()) label = ((mask >> bit++) & 1U) ? NonTerminal::Interest : NonTerminal::NonInterest;
        rules.push_back({label, node.start, node.end, node.split});
      }
      const LabeledTree tree = LabeledTree::from_rules(length, std::move(rules));
      visit(tree, tree_log_score(tree, scores));
    }
  }
}

BruteForceResult brute_force(const ScoreTable& scores) {
  const std::size_t n = scores.length();
  std::vector<double> tree_scores;
  tree_scores.reserve(count_trees(n));
  BruteForceResult result;
  result.viterbi.best_log_score = kNegInf;
  enumerate_trees(n, scores, [&](const LabeledTree& tree, double score) {
    tree_scores.push_back(score);
    if (score > result.viterbi.best_log_score) {
      result.viterbi.best_log_score = score;
      result.viterbi.selection = spans_of(tree);
    }
  });
  result.log_z = log_sum_exp(tree_scores);
  result.viterbi.interest_spans = interest_spans(result.viterbi.selection);

  result.marginals = MarginalTable(n);
  std::size_t t = 0;
  enumerate_trees(n, scores, [&](const LabeledTree& tree, double) {
    const double p = std::exp(tree_scores[t++] - result.log_z);
    for (const AnchoredRule& r : tree.rules()) {
      if (r.parent == NonTerminal::Start) continue;
      const std::size_t c = result.marginals.index(r.start, r.end);
      if (r.parent == NonTerminal::Interest)
        result.marginals.interest_values()[c] += p;
      else
        result.marginals.non_interest_values()[c] += p;
    }
  });
  return result;
}

}  // namespace spansel
