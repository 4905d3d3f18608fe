#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "spansel/grammar.hpp"
#include "spansel/tape.hpp"

namespace spansel {

// Log-space inside (and optionally outside) values for one sentence.
class Chart {
 public:
  std::size_t length() const { return length_; }
  double log_z() const { return log_z_; }
  bool has_outside() const { return !outside_.empty(); }

  // beta([i, X, k]). Start is only defined at (0, n).
  double inside(std::size_t start, std::size_t end, NonTerminal x) const;
  // alpha([i, X, k]); -inf where X cannot occur. Requires outside().
  double outside(std::size_t start, std::size_t end, NonTerminal x) const;

 private:
  friend Chart inside(const ScoreTable& scores);
  friend void outside(Chart& chart, const ScoreTable& scores);

  std::size_t length_ = 0;
  double log_z_ = 0.0;
  std::vector<double> scores_;
  std::vector<double> inner_;
  std::vector<double> total_;
  std::vector<double> softplus_score_;
  std::vector<double> outside_;
};

// Probability of each span being an Interest / NonInterest constituent.
class MarginalTable {
 public:
  MarginalTable() = default;
  explicit MarginalTable(std::size_t length)
      : length_(length),
        interest_(ScoreTable::span_count(length), 0.0),
        non_interest_(ScoreTable::span_count(length), 0.0) {}

  std::size_t length() const { return length_; }
  std::size_t index(std::size_t start, std::size_t end) const { return ScoreTable::index(length_, start, end); }

  // p(sigma_ik | w)
  double operator()(std::size_t start, std::size_t end) const { return interest_[index(start, end)]; }
  double interest(std::size_t start, std::size_t end) const { return interest_[index(start, end)]; }
  double non_interest(std::size_t start, std::size_t end) const { return non_interest_[index(start, end)]; }
  double constituent(std::size_t start, std::size_t end) const {
    return interest(start, end) + non_interest(start, end);
  }

  std::span<double> interest_values() { return interest_; }
  std::span<double> non_interest_values() { return non_interest_; }
  std::span<const double> interest_values() const { return interest_; }
  std::span<const double> non_interest_values() const { return non_interest_; }

 private:
  std::size_t length_ = 0;
  std::vector<double> interest_;
  std::vector<double> non_interest_;
};

struct ViterbiResult {
  double best_log_score = 0.0;
  SpanSet selection;                 // all 2n - 2 labeled spans of the best tree
  std::vector<Span> interest_spans;  // Interest-labeled subset, sorted
};

// log Z and inside values. Throws UnsupportedLength for n < 2.
Chart inside(const ScoreTable& scores);

// Fills outside values of a chart produced by inside() on the same scores.
void outside(Chart& chart, const ScoreTable& scores);

MarginalTable marginals(const ScoreTable& scores);

// Max-plus CKY. Ties prefer NonInterest, then the smallest split point.
ViterbiResult cky(const ScoreTable& scores);

// --- Tape-recorded versions (same recurrences) -------------------------------

// log Z recorded on the tape from per-span score variables (ScoreTable order).
ad::Var tape_log_partition(ad::Tape& tape, std::span<const ad::Var> scores, std::size_t length);

// log p(sigma_ik | w) for every span, recorded through explicit inside-outside
// recurrences so a loss over marginals needs only one reverse pass. The
// whole-sentence entry holds a -inf constant.
struct TapeMarginals {
  ad::Var log_z;
  std::vector<ad::Var> log_interest;
};
TapeMarginals tape_log_marginals(ad::Tape& tape, std::span<const ad::Var> scores, std::size_t length);

// --- Brute-force oracles -----------------------------------------------------

inline constexpr std::size_t kMaxEnumerationLength = 8;

// Calls `visit` once per labeled tree with its log-score. 2 <= n <= 8.
void enumerate_trees(std::size_t length, const ScoreTable& scores,
                     const std::function<void(const LabeledTree&, double)>& visit);

std::size_t count_trees(std::size_t length);

struct BruteForceResult {
  double log_z = 0.0;
  MarginalTable marginals;
  ViterbiResult viterbi;
};

BruteForceResult brute_force(const ScoreTable& scores);

}  // namespace spansel
