#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "spansel/grammar.hpp"

namespace spansel {

using Sentence = std::vector<std::string>;

struct Argument {
  Span span;
  std::string role;

  friend bool operator==(const Argument&, const Argument&) = default;
};

// A predicate at one token of a sentence with its annotated arguments.
struct Frame {
  std::size_t sentence = 0;
  std::size_t predicate = 0;
  std::vector<Argument> arguments;

  friend bool operator==(const Frame&, const Frame&) = default;
};

using Cluster = std::vector<Span>;

struct Document {
  std::string doc_id;
  std::vector<Sentence> sentences;
  std::optional<std::vector<Cluster>> clusters;
  std::optional<std::vector<Frame>> frames;
  std::optional<std::vector<Span>> spans;  // gold spans without links or roles


  std::size_t token_count() const;
  bool in_bounds(const Span& span) const;

  // Every distinct gold span (cluster members, frame arguments and unlinked
  // spans), sorted.
  std::vector<Span> gold_spans() const;

  friend bool operator==(const Document&, const Document&) = default;
};

// Throws DataError naming the document and the offending span when a gold
// span is out of bounds, a cluster or frame repeats a member, or a frame
// argument or predicate leaves its sentence.
void validate(const Document& doc);

}  // namespace spansel
