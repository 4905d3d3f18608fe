#include "spansel/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include <json.hpp>

#include "spansel/errors.hpp"

namespace spansel {

namespace {

std::vector<Span> sorted_unique(std::span<const Span> spans) {
  std::vector<Span> out(spans.begin(), spans.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

double fraction(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::size_t ratio_count(double ratio, std::size_t tokens) {
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(tokens) + 1e-9));
}

const char* depth_bucket(std::size_t depth) { return depth == 1 ? "1" : depth == 2 ? "2" : "3+"; }
const char* width_bucket_name(std::size_t width) { return width <= 4 ? "1-4" : width <= 12 ? "5-12" : "13+"; }

const std::vector<std::string>& bucket_order(Bucketing how) {
  static const std::vector<std::string> depth = {"1", "2", "3+"};
  static const std::vector<std::string> width = {"1-4", "5-12", "13+"};
  return how == Bucketing::Depth ? depth : width;
}

// Bucket name for every gold span, in the order of `gold`.
std::vector<std::string> bucket_names(std::span<const Span> gold, Bucketing how) {
  std::vector<std::string> out;
  if (how == Bucketing::Depth) {
    const auto depth = nested_depth(gold);
    for (const Span& s : gold) out.emplace_back(depth_bucket(depth.at(s)));
  } else {
    for (const Span& s : gold) out.emplace_back(width_bucket_name(s.width()));
  }
  return out;
}

void add_buckets(std::vector<BucketRecall>& into, const std::vector<BucketRecall>& from) {
  for (const BucketRecall& b : from) {
    auto it = std::find_if(into.begin(), into.end(), [&](const BucketRecall& x) { return x.bucket == b.bucket; });
    if (it == into.end()) {
      into.push_back(b);
    } else {
      it->support += b.support;
      it->found += b.found;
    }
  }
}

void finish_buckets(std::vector<BucketRecall>& buckets, Bucketing how) {
  for (BucketRecall& b : buckets) b.recall = fraction(b.found, b.support);
  const auto& order = bucket_order(how);
  auto rank = [&](const BucketRecall& b) { return std::find(order.begin(), order.end(), b.bucket) - order.begin(); };
  std::sort(buckets.begin(), buckets.end(), [&](const auto& a, const auto& b) { return rank(a) < rank(b); });
}

}  // namespace

void PRF::finish() {
  precision = fraction(matched, predicted);
  recall = fraction(matched, gold);
  f1 = precision + recall == 0.0 ? 0.0 : 2.0 * precision * recall / (precision + recall);
}

PRF span_prf(std::span<const Span> pred, std::span<const Span> gold) {
  const auto p = sorted_unique(pred);
  const auto g = sorted_unique(gold);
  std::vector<Span> both;
  std::set_intersection(p.begin(), p.end(), g.begin(), g.end(), std::back_inserter(both));
  PRF out;
  out.predicted = p.size();
  out.gold = g.size();
  out.matched = both.size();
  out.finish();
  return out;
}

std::map<Span, std::size_t> nested_depth(std::span<const Span> gold) {
  auto spans = sorted_unique(gold);
  // Containers are wider, so visiting by decreasing width sees them first.
  std::stable_sort(spans.begin(), spans.end(), [](const Span& a, const Span& b) { return a.width() > b.width(); });
  std::map<Span, std::size_t> depth;
  for (std::size_t i = 0; i < spans.size(); ++i) {
    std::size_t d = 1;
    for (std::size_t j = 0; j < i; ++j)
      if (spans[j].strictly_contains(spans[i])) d = std::max(d, depth[spans[j]] + 1);
    depth[spans[i]] = d;
  }
  return depth;
}

std::vector<BucketRecall> recall_by_bucket(std::span<const Span> pred, std::span<const Span> gold, Bucketing how) {
  const auto p = sorted_unique(pred);
  const auto g = sorted_unique(gold);
  const auto names = bucket_names(g, how);
  std::vector<BucketRecall> out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const bool hit = std::binary_search(p.begin(), p.end(), g[i]);
    add_buckets(out, {BucketRecall{names[i], 1, hit ? std::size_t{1} : 0, 0.0}});
  }
  finish_buckets(out, how);
  return out;
}

std::vector<CurvePoint> recall_ratio_curve(std::span<const Span> ranked, std::span<const Span> gold,
                                           std::size_t tokens, std::span<const double> ratios) {
  const auto g = sorted_unique(gold);
  std::vector<CurvePoint> out;
  for (double r : ratios) {
    const std::size_t take = std::min(ratio_count(r, tokens), ranked.size());
    std::set<Span> seen;
    std::size_t found = 0;
    for (std::size_t i = 0; i < take; ++i)
      if (seen.insert(ranked[i]).second && std::binary_search(g.begin(), g.end(), ranked[i])) ++found;
    out.push_back({r, take, found, fraction(found, g.size())});
  }
  return out;
}

std::vector<double> default_curve_ratios() {
  std::vector<double> out;
  for (int i = 0; i <= 20; ++i) out.push_back(0.05 * i);
  return out;
}

EvalReport evaluate(std::span<const DocumentEval> docs, std::span<const double> ratios) {
  EvalReport report;
  for (double r : ratios) report.curve.push_back({r, 0, 0, 0.0});
  for (const DocumentEval& d : docs) {
    const PRF prf = span_prf(d.pred, d.gold);
    report.prf.predicted += prf.predicted;
    report.prf.gold += prf.gold;
    report.prf.matched += prf.matched;
    add_buckets(report.recall_by_depth, recall_by_bucket(d.pred, d.gold, Bucketing::Depth));
    add_buckets(report.recall_by_width, recall_by_bucket(d.pred, d.gold, Bucketing::Width));
    report.tokens += d.tokens;
    const auto points = recall_ratio_curve(d.ranked, d.gold, d.tokens, ratios);
    for (std::size_t i = 0; i < points.size(); ++i) {
      report.curve[i].selected += points[i].selected;
      report.curve[i].found += points[i].found;
    }
  }
  report.prf.finish();
  finish_buckets(report.recall_by_depth, Bucketing::Depth);
  finish_buckets(report.recall_by_width, Bucketing::Width);
  for (CurvePoint& p : report.curve) p.recall = fraction(p.found, report.prf.gold);
  report.selected_ratio = fraction(report.prf.predicted, report.tokens);
  return report;
}

// --- Output -------------------------------------------------------------------

namespace {

nlohmann::json buckets_json(const std::vector<BucketRecall>& buckets) {
  nlohmann::json out = nlohmann::json::array();
  for (const BucketRecall& b : buckets)
    out.push_back({{"bucket", b.bucket}, {"support", b.support}, {"found", b.found}, {"recall", b.recall}});
  return out;
}

std::vector<BucketRecall> buckets_from(const nlohmann::json& j) {
  std::vector<BucketRecall> out;
  for (const auto& b : j)
    out.push_back({b.at("bucket").get<std::string>(), b.at("support").get<std::size_t>(), b.at("found").get<std::size_t>(),
                   b.at("recall").get<double>()});
  return out;
}

}  // namespace

std::string report_to_json(const EvalReport& r) {
  nlohmann::json curve = nlohmann::json::array();
  for (const CurvePoint& p : r.curve) curve.push_back({{"ratio", p.ratio}, {"selected", p.selected}, {"found", p.found}, {"recall", p.recall}});
  const nlohmann::json doc = {
      {"precision", r.prf.precision},     {"recall", r.prf.recall},
      {"f1", r.prf.f1},                   {"predicted", r.prf.predicted},
      {"gold", r.prf.gold},               {"matched", r.prf.matched},
      {"tokens", r.tokens},               {"selected_ratio", r.selected_ratio},
      {"recall_by_depth", buckets_json(r.recall_by_depth)},
      {"recall_by_width", buckets_json(r.recall_by_width)},
      {"curve", curve}};
  return doc.dump(2) + "\n";
}

EvalReport report_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    EvalReport r;
    r.prf.precision = j.at("precision").get<double>();
    r.prf.recall = j.at("recall").get<double>();
    r.prf.f1 = j.at("f1").get<double>();
    r.prf.predicted = j.at("predicted").get<std::size_t>();
    r.prf.gold = j.at("gold").get<std::size_t>();
    r.prf.matched = j.at("matched").get<std::size_t>();
    r.tokens = j.at("tokens").get<std::size_t>();
    r.selected_ratio = j.at("selected_ratio").get<double>();
    r.recall_by_depth = buckets_from(j.at("recall_by_depth"));
    r.recall_by_width = buckets_from(j.at("recall_by_width"));
    for (const auto& p : j.at("curve"))
      r.curve.push_back({p.at("ratio").get<double>(), p.at("selected").get<std::size_t>(), p.at("found").get<std::size_t>(),
                         p.at("recall").get<double>()});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed evaluation report: ") + e.what());
  }
}

std::string report_table(const EvalReport& r) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "precision %.4f  recall %.4f  f1 %.4f  (pred %zu, gold %zu, matched %zu)\n",
                r.prf.precision, r.prf.recall, r.prf.f1, r.prf.predicted, r.prf.gold, r.prf.matched);
  out += line;
  std::snprintf(line, sizeof line, "selected spans per token %.4f over %zu tokens\n", r.selected_ratio, r.tokens);
  out += line;
  auto table = [&](const char* title, const std::vector<BucketRecall>& buckets) {
    std::snprintf(line, sizeof line, "%-8s %8s %8s %8s\n", title, "support", "found", "recall");
    out += line;
    for (const BucketRecall& b : buckets) {
      std::snprintf(line, sizeof line, "%-8s %8zu %8zu %8.4f\n", b.bucket.c_str(), b.support, b.found, b.recall);
      out += line;
    }
  };
  table("depth", r.recall_by_depth);
  table("width", r.recall_by_width);
  return out;
}

std::string curve_csv(const EvalReport& r) {
  std::string out = "ratio,selected,found,recall\n";
  char line[96];
  for (const CurvePoint& p : r.curve) {
    std::snprintf(line, sizeof line, "%.4f,%zu,%zu,%.6f\n", p.ratio, p.selected, p.found, p.recall);
    out += line;
  }
  return out;
}

}  // namespace spansel
