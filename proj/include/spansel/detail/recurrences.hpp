#pragma once

// Inside/outside recurrences for the three-nonterminal grammar, written once
// and instantiated both over plain doubles and over tape variables.
//
// With X in {Interest, NonInterest} and s = s(i, k):
//   inner(i, k) = log Σ_j exp(total(i, j) + total(j, k))     (0 at width 1)
//   beta_I(i, k) = s + inner(i, k),  beta_N(i, k) = inner(i, k)
//   total(i, k) = log(exp beta_I + exp beta_N) = inner(i, k) + softplus(s)
//   log Z = inner(0, n)
// Parent rules ignore child labels, so both labels share one outside value.

#include <cstddef>
#include <span>
#include <vector>

#include "spansel/grammar.hpp"
#include "spansel/numeric.hpp"
#include "spansel/tape.hpp"

namespace spansel::detail {

struct RealBackend {
  using value_type = double;

  double constant(double v) { return v; }
  double add(double a, double b) { return a + b; }
  double sub(double a, double b) { return a - b; }
  double softplus(double x) { return spansel::softplus(x); }
  double log_sum_exp(std::span<const double> xs) { return spansel::log_sum_exp(xs); }
};

struct TapeBackend {
  using value_type = ad::Var;

  ad::Tape& tape;

  ad::Var constant(double v) { return tape.constant(v); }
  ad::Var add(ad::Var a, ad::Var b) { return tape.add(a, b); }
  ad::Var sub(ad::Var a, ad::Var b) { return tape.sub(a, b); }
  ad::Var softplus(ad::Var x) { return tape.softplus(x); }
  ad::Var log_sum_exp(std::span<const ad::Var> xs) { return tape.log_sum_exp(xs); }
};

template <class V>
struct InsideValues {
  std::size_t length = 0;
  std::vector<V> inner;          // per ScoreTable index
  std::vector<V> total;          // per ScoreTable index
  std::vector<V> softplus_score; // per ScoreTable index
  V log_z{};
};

// Requires length >= 2 and scores.size() == ScoreTable::span_count(length).
template <class Backend>
InsideValues<typename Backend::value_type> inside_pass(Backend& b,
                                                       std::span<const typename Backend::value_type> scores,
                                                       std::size_t n) {
  using V = typename Backend::value_type;
  InsideValues<V> out;
  out.length = n;
  const std::size_t cells = ScoreTable::span_count(n);
  out.inner.resize(cells);
  out.total.resize(cells);
  out.softplus_score.resize(cells);

  const V zero = b.constant(0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = ScoreTable::index(n, i, i + 1);
    out.inner[c] = zero;
    out.softplus_score[c] = b.softplus(scores[c]);
    out.total[c] = out.softplus_score[c];
  }
  std::vector<V> terms;
  terms.reserve(n);
  for (std::size_t w = 2; w <= n; ++w) {
    for (std::size_t i = 0; i + w <= n; ++i) {
      const std::size_t k = i + w;
      terms.clear();
      for (std::size_t j = i + 1; j < k; ++j)
        terms.push_back(b.add(out.total[ScoreTable::index(n, i, j)], out.total[ScoreTable::index(n, j, k)]));
      const std::size_t c = ScoreTable::index(n, i, k);
      out.inner[c] = b.log_sum_exp(terms);
      out.softplus_score[c] = b.softplus(scores[c]);
      out.total[c] = b.add(out.inner[c], out.softplus_score[c]);
    }
  }
  out.log_z = out.inner[ScoreTable::index(n, 0, n)];
  return out;
}

// Outside value shared by both X labels at every span below the root. The
// root entry is left default-constructed; X never labels (0, n).
template <class Backend>
std::vector<typename Backend::value_type> outside_pass(Backend& b,
                                                       const InsideValues<typename Backend::value_type>& in) {
  using V = typename Backend::value_type;
  const std::size_t n = in.length;
  const std::size_t root = ScoreTable::index(n, 0, n);
  std::vector<V> outer(in.total.size());
  // Outside value of a node's inner mass: outer + softplus(s), or 0 at the root.
  std::vector<V> outer_inner(in.total.size());
  outer_inner[root] = b.constant(0.0);

  std::vector<V> terms;
  terms.reserve(n);
  for (std::size_t w = n - 1; w >= 1; --w) {
    for (std::size_t i = 0; i + w <= n; ++i) {
      const std::size_t k = i + w;
      terms.clear();
      // Left child of (i, m).
      for (std::size_t m = k + 1; m <= n; ++m)
        terms.push_back(b.add(outer_inner[ScoreTable::index(n, i, m)], in.total[ScoreTable::index(n, k, m)]));
      // Right child of (h, k).
      for (std::size_t h = 0; h < i; ++h)
        terms.push_back(b.add(outer_inner[ScoreTable::index(n, h, k)], in.total[ScoreTable::index(n, h, i)]));
      const std::size_t c = ScoreTable::index(n, i, k);
      outer[c] = b.log_sum_exp(terms);
      if (w >= 2) outer_inner[c] = b.add(outer[c], in.softplus_score[c]);
    }
    if (w == 1) break;
  }
  return outer;
}

}  // namespace spansel::detail
