#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "spansel/document.hpp"
#include "spansel/grammar.hpp"

namespace spansel {

enum class Task { Coref, Srl, SpansOnly };

std::string_view to_string(Task task);
// Throws ConfigError for an unknown name.
Task parse_task(std::string_view name);

struct Corpus {
  Task task = Task::SpansOnly;
  std::vector<Document> documents;

  std::size_t token_count() const;
  // Sorted distinct roles used by the frames.
  std::vector<std::string> role_labels() const;

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

// srl when any document has frames, else coref when any has clusters, else
// spans-only.
Task infer_task(const std::vector<Document>& docs);

// One JSON object per line:
//   {"doc_id": "...", "sentences": [["tok", ...], ...],
//    "clusters": [[[s, b, e], ...], ...],
//    "frames": [{"sentence": s, "predicate": p, "arguments": [[b, e, "role"], ...]}],
//    "spans": [[s, b, e], ...]}
// with half-open [b, e) token indices. Blank lines are skipped. Throws
// DataError with the line number for malformed records and naming doc_id for
// invalid spans.
Corpus parse_corpus(std::istream& in, const std::string& source = "<input>");
Corpus load_corpus(const std::filesystem::path& path);

std::string document_to_json(const Document& doc);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);

// --- Selection and marginal files ---------------------------------------------

struct SelectionRecord {
  std::string doc_id;
  std::vector<Span> spans;   // the selection
  std::vector<Span> ranked;  // every candidate span by span-grammar score, best first

  friend bool operator==(const SelectionRecord&, const SelectionRecord&) = default;
};

struct MarginalRecord {
  std::string doc_id;
  std::vector<std::pair<Span, double>> marginals;  // p(σ | w) of every span of sentences with n >= 2

  friend bool operator==(const MarginalRecord&, const MarginalRecord&) = default;
};

void save_selection(const std::vector<SelectionRecord>& records, const std::filesystem::path& path);
std::vector<SelectionRecord> load_selection(const std::filesystem::path& path);
void save_marginals(const std::vector<MarginalRecord>& records, const std::filesystem::path& path);
std::vector<MarginalRecord> load_marginals(const std::filesystem::path& path);

}  // namespace spansel
