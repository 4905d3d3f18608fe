#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "spansel/corpus.hpp"

namespace spansel {

// Planted-grammar corpus. Each sentence gets a random binary bracketing;
// every non-root bracket becomes a gold span with `span_probability` unless a
// gold span above it already starts or ends at the same position. A gold
// span of type t starts with opener token "o<t>" and ends with closer "c<t>";
// one-token gold spans take a token from the single-token class "p<i>". Other
// positions hold filler "w<i>", replaced by a random trigger token with
// probability `noise`.
struct SyntheticSpec {
  std::size_t documents = 100;
  std::size_t sentences_per_doc = 5;
  std::size_t min_length = 5;
  std::size_t max_length = 15;
  std::size_t vocabulary = 200;  // filler tokens
  std::size_t span_types = 5;
  std::size_t single_tokens = 10;
  double span_probability = 0.2;
  double noise = 0.05;
  // coref: a gold span without gold spans inside copies the tokens of an
  // earlier such span of equal width with this probability; token-identical
  // gold spans form a cluster.
  double repeat_probability = 0.3;
  bool annotate_singletons = true;
  Task task = Task::Coref;
  std::uint64_t seed = 1;
  std::string id_prefix = "doc";

  // Throws ConfigError for an infeasible spec.
  void validate() const;
};

// srl: one predicate "v<i>" per sentence whose bracketing keeps it outside
// every gold span; arguments are all gold spans with role AM (type 0), A0
// (before the predicate) or A1 (after).
Corpus generate_synthetic(const SyntheticSpec& spec);

}  // namespace spansel
