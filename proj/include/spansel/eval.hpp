#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "spansel/grammar.hpp"

namespace spansel {

struct PRF {
  std::size_t predicted = 0;
  std::size_t gold = 0;
  std::size_t matched = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  // Recomputes the fractions from the counts; an empty side gives 0.
  void finish();
};

// Exact-match comparison of two span sets (duplicates ignored).
PRF span_prf(std::span<const Span> pred, std::span<const Span> gold);

// 1 + length of the longest chain of gold spans strictly containing each
// gold span within its sentence.
std::map<Span, std::size_t> nested_depth(std::span<const Span> gold);

enum class Bucketing { Depth, Width };

struct BucketRecall {
  std::string bucket;
  std::size_t support = 0;
  std::size_t found = 0;
  double recall = 0.0;
};

// Depth buckets 1, 2, 3+; width buckets 1-4, 5-12, 13+ tokens. Empty buckets
// are omitted, so supports always partition the gold set.
std::vector<BucketRecall> recall_by_bucket(std::span<const Span> pred, std::span<const Span> gold, Bucketing how);

struct CurvePoint {
  double ratio = 0.0;
  std::size_t selected = 0;
  std::size_t found = 0;
  double recall = 0.0;
};

// Recall of `gold` within the top floor(r * tokens) entries of `ranked`.
std::vector<CurvePoint> recall_ratio_curve(std::span<const Span> ranked, std::span<const Span> gold,
                                           std::size_t tokens, std::span<const double> ratios);

std::vector<double> default_curve_ratios();

// Inputs for one document. `ranked` (best first) feeds the curve and may be
// empty.
struct DocumentEval {
  std::vector<Span> pred;
  std::vector<Span> gold;
  std::vector<Span> ranked;
  std::size_t tokens = 0;
};

struct EvalReport {
  PRF prf;
  std::vector<BucketRecall> recall_by_depth;
  std::vector<BucketRecall> recall_by_width;
  std::vector<CurvePoint> curve;
  std::size_t tokens = 0;
  double selected_ratio = 0.0;  // predicted spans / tokens
};

// Corpus-level report; counts are merged across documents and the curve takes
// floor(r * |D|) spans from each document.
EvalReport evaluate(std::span<const DocumentEval> docs, std::span<const double> ratios);

std::string report_to_json(const EvalReport& report);
EvalReport report_from_json(std::string_view text);
std::string report_table(const EvalReport& report);
std::string curve_csv(const EvalReport& report);

}  // namespace spansel
