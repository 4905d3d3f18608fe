#include "spansel/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "spansel/errors.hpp"
#include "spansel/numeric.hpp"

namespace spansel {

namespace {

enum Template : std::uint64_t {
  kBias = 1,
  kWidth,
  kFirst,
  kLast,
  kPrev,
  kFirstLast,
  kPairBias,
  kPairExact,
  kPairFirst,
  kPairLast,
  kPairSentenceDistance,
  kPairWidthDiff,
  kPairOverlap,
  kRoleBias,
  kRoleSide,
  kRoleDistance,
  kRoleFirst,
  kRoleLast,
  kRoleWidth,
  kRolePredicateFirst,
  kRoleSideFirst,
};

constexpr std::uint64_t kSentenceStart = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::size_t distance_bucket(std::size_t d) { return d == 0 ? 0 : width_bucket(d) + 1; }

// Sorts by id and merges duplicates into counts.
std::vector<ad::ParamRef> merge(std::vector<std::uint32_t> ids) {
  std::sort(ids.begin(), ids.end());
  std::vector<ad::ParamRef> out;
  for (std::uint32_t id : ids) {
    if (!out.empty() && out.back().index == id)
      out.back().coefficient += 1.0;
    else
      out.push_back({id, 1.0});
  }
  return out;
}

const char* head_key(Head h) {
  switch (h) {
    case Head::SpanGrammar:
      return "span_grammar";
    case Head::Mention:
      return "mention";
    case Head::AntecedentPair:
      return "antecedent_pair";
    case Head::Role:
      return "role";
  }
  return "?";
}

}  // namespace

std::string_view to_string(Head head) { return head_key(head); }

// --- ModelParams --------------------------------------------------------------

ModelParams::ModelParams(std::size_t hash_dim, std::uint64_t seed, std::vector<std::string> role_labels)
    : hash_dim_(hash_dim), seed_(seed), role_labels_(std::move(role_labels)) {
  if (hash_dim_ == 0 || hash_dim_ > (std::size_t{1} << 28)) throw ConfigError("hash dimension out of range");
  for (std::size_t a = 0; a < role_labels_.size(); ++a)
    for (std::size_t b = a + 1; b < role_labels_.size(); ++b)
      if (role_labels_[a] == role_labels_[b]) throw ConfigError("duplicate role label '" + role_labels_[a] + "'");
  weights_.assign((3 + role_labels_.size()) * hash_dim_, 0.0);
}

std::optional<std::size_t> ModelParams::role_index(std::string_view label) const {
  for (std::size_t r = 0; r < role_labels_.size(); ++r)
    if (role_labels_[r] == label) return r;
  return std::nullopt;
}

std::size_t ModelParams::offset(Head head, std::size_t role) const {
  if (head != Head::Role) return static_cast<std::size_t>(head) * hash_dim_;
  if (role >= role_labels_.size()) throw RangeError("role block out of range");
  return (3 + role) * hash_dim_;
}

void ModelParams::randomize(std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (double& w : weights_) w = u(rng);
}

// --- Features -----------------------------------------------------------------

std::uint64_t token_hash(std::string_view token) {
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : token) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::size_t width_bucket(std::size_t width) {
  if (width <= 2) return width == 0 ? 0 : width - 1;
  if (width <= 4) return 2;
  if (width <= 8) return 3;
  return 4;
}

std::uint32_t FeatureHasher::operator()(std::initializer_list<std::uint64_t> parts) const {
  std::uint64_t h = mix(seed_);
  for (std::uint64_t p : parts) h = mix(h ^ p);
  return static_cast<std::uint32_t>(h % dim_);
}

DocumentFeatures::DocumentFeatures(const std::vector<Sentence>& sentences, const ModelParams& params)
    : hasher_(params.seed(), params.hash_dim()) {
  tokens_.reserve(sentences.size());
  spans_.reserve(sentences.size());
  for (const Sentence& sentence : sentences) {
    std::vector<std::uint64_t> toks;
    toks.reserve(sentence.size());
    for (const std::string& t : sentence) toks.push_back(token_hash(t));
    const std::size_t n = toks.size();
    std::vector<std::vector<ad::ParamRef>> table(ScoreTable::span_count(n));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = i + 1; k <= n; ++k) {
        const std::uint64_t first = toks[i], last = toks[k - 1];
        const std::uint64_t prev = i == 0 ? kSentenceStart : toks[i - 1];
        table[ScoreTable::index(n, i, k)] = merge({hasher_({kBias}), hasher_({kWidth, width_bucket(k - i)}),
                                                    hasher_({kFirst, first}), hasher_({kLast, last}),
                                                    hasher_({kPrev, prev}), hasher_({kFirstLast, first, last})});
      }
    }
    tokens_.push_back(std::move(toks));
    spans_.push_back(std::move(table));
  }
}

std::uint32_t DocumentFeatures::span_bias() const { return hasher_({kBias}); }

std::span<const ad::ParamRef> DocumentFeatures::span(const Span& s) const {
  if (s.sentence >= tokens_.size() || s.start >= s.end || s.end > tokens_[s.sentence].size())
    throw RangeError("span outside the document");
  return spans_[s.sentence][ScoreTable::index(tokens_[s.sentence].size(), s.start, s.end)];
}

std::vector<ad::ParamRef> DocumentFeatures::pair(const Span& mention, const Span& antecedent) const {
  span(mention);
  span(antecedent);
  const auto& mt = tokens_[mention.sentence];
  const auto& at = tokens_[antecedent.sentence];
  std::vector<std::uint32_t> ids = {hasher_({kPairBias})};
  const bool exact = mention.width() == antecedent.width() &&
                     std::equal(mt.begin() + mention.start, mt.begin() + mention.end, at.begin() + antecedent.start);
  if (exact) ids.push_back(hasher_({kPairExact}));
  if (mt[mention.start] == at[antecedent.start]) ids.push_back(hasher_({kPairFirst}));
  if (mt[mention.end - 1] == at[antecedent.end - 1]) ids.push_back(hasher_({kPairLast}));
  const std::size_t sd =
      mention.sentence > antecedent.sentence ? mention.sentence - antecedent.sentence : antecedent.sentence - mention.sentence;
  ids.push_back(hasher_({kPairSentenceDistance, distance_bucket(sd)}));
  const std::size_t wd = mention.width() > antecedent.width() ? mention.width() - antecedent.width()
                                                              : antecedent.width() - mention.width();
  ids.push_back(hasher_({kPairWidthDiff, distance_bucket(wd)}));
  if (mention.sentence == antecedent.sentence && mention.start < antecedent.end && antecedent.start < mention.end)
    ids.push_back(hasher_({kPairOverlap}));
  return merge(std::move(ids));
}

std::vector<ad::ParamRef> DocumentFeatures::role(const Span& argument, std::size_t predicate) const {
  span(argument);
  const auto& t = tokens_[argument.sentence];
  if (predicate >= t.size()) throw RangeError("predicate outside the sentence");
  std::uint64_t side = 0;  // 0 before, 1 after, 2 covering the predicate
  std::size_t distance = 0;
  if (argument.end <= predicate) {
    distance = predicate - argument.end + 1;
  } else if (argument.start > predicate) {
    side = 1;
    distance = argument.start - predicate;
  } else {
    side = 2;
  }
  const std::uint64_t first = t[argument.start];
  return merge({hasher_({kRoleBias}), hasher_({kRoleSide, side}), hasher_({kRoleDistance, distance_bucket(distance)}),
                hasher_({kRoleFirst, first}), hasher_({kRoleLast, t[argument.end - 1]}),
                hasher_({kRoleWidth, width_bucket(argument.width())}),
                hasher_({kRolePredicateFirst, t[predicate], first}), hasher_({kRoleSideFirst, side, first})});
}

// --- Scoring ------------------------------------------------------------------

double dot(std::span<const ad::ParamRef> features, const ModelParams& params, std::size_t offset) {
  const auto w = params.weights();
  double v = 0.0;
  for (const ad::ParamRef& f : features) v += f.coefficient * w[offset + f.index];
  return v;
}

namespace {

void require_span_head(Head head) {
  if (head != Head::SpanGrammar && head != Head::Mention)
    throw ContractViolation("span scores come from the span_grammar or mention head");
}

}  // namespace

ScoreTable score_spans(const DocumentFeatures& features, std::size_t sentence, const ModelParams& params, Head head) {
  require_span_head(head);
  const std::size_t n = features.length(sentence);
  const std::size_t offset = params.offset(head);
  ScoreTable table(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = i + 1; k <= n; ++k) table.set(i, k, dot(features.span({sentence, i, k}), params, offset));
  return table;
}

ScoreTable score_spans(const Sentence& sentence, const ModelParams& params, Head head) {
  if (sentence.empty()) throw ContractViolation("cannot score an empty sentence");
  const DocumentFeatures features({sentence}, params);
  return score_spans(features, 0, params, head);
}

ad::Var tape_dot(ad::Tape& tape, std::span<const ad::ParamRef> features, const ModelParams& params,
                 std::size_t offset) {
  std::vector<ad::ParamRef> refs(features.begin(), features.end());
  for (ad::ParamRef& r : refs) r.index += static_cast<std::uint32_t>(offset);
  return tape.dot(refs, params.weights());
}

std::vector<ad::Var> tape_score_spans(ad::Tape& tape, const DocumentFeatures& features, std::size_t sentence,
                                      const ModelParams& params, Head head) {
  require_span_head(head);
  const std::size_t n = features.length(sentence);
  const std::size_t offset = params.offset(head);
  std::vector<ad::Var> out(ScoreTable::span_count(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = i + 1; k <= n; ++k)
      out[ScoreTable::index(n, i, k)] = tape_dot(tape, features.span({sentence, i, k}), params, offset);
  return out;
}

MarginalTable sigmoid_prob(const ScoreTable& scores) {
  MarginalTable out(scores.length());
  for (std::size_t c = 0; c < scores.values().size(); ++c) {
    out.interest_values()[c] = sigmoid(scores.values()[c]);
    out.non_interest_values()[c] = sigmoid(-scores.values()[c]);
  }
  return out;
}

// --- Gradient check -----------------------------------------------------------

GradCheckResult grad_check(const LossBuilder& loss, const ModelParams& params, std::uint64_t seed,
                           std::size_t count, double step) {
  ad::Tape tape;
  const ad::Var out = loss(tape, params);
  GradCheckResult result;
  result.loss = tape.value(out);
  if (!std::isfinite(result.loss)) throw NumericError("loss is not finite");
  std::vector<double> grad(params.weights().size(), 0.0);
  tape.accumulate_parameter_gradient(tape.backward(out), grad);

  std::mt19937_64 rng(seed);
  std::vector<std::uint32_t> picks = tape.parameter_indices();
  std::shuffle(picks.begin(), picks.end(), rng);
  if (picks.size() > count) picks.resize(count);
  std::uniform_int_distribution<std::uint32_t> any(0, static_cast<std::uint32_t>(grad.size() - 1));
  while (picks.size() < std::min(count, grad.size())) {
    const std::uint32_t idx = any(rng);
    if (std::find(picks.begin(), picks.end(), idx) == picks.end()) picks.push_back(idx);
  }

  ModelParams probe = params;
  auto evaluate = [&] {
    ad::Tape t;
    const double v = t.value(loss(t, probe));
    if (!std::isfinite(v)) throw NumericError("loss is not finite under perturbation");
    return v;
  };
  for (std::uint32_t idx : picks) {
    const double w = params.weights()[idx];
    probe.weights()[idx] = w + step;
    const double up = evaluate();
    probe.weights()[idx] = w - step;
    const double down = evaluate();
    probe.weights()[idx] = w;
    const double fd = (up - down) / (2.0 * step);
    const double denom = std::max({std::abs(grad[idx]), std::abs(fd), kGradCheckFloor});
    result.max_relative_error = std::max(result.max_relative_error, std::abs(grad[idx] - fd) / denom);
    ++result.checked;
  }
  return result;
}

// --- Model files --------------------------------------------------------------

namespace {

nlohmann::json sparse_block(std::span<const double> block) {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t i = 0; i < block.size(); ++i)
    if (block[i] != 0.0 || std::signbit(block[i])) out.push_back({i, block[i]});
  return out;
}

void read_block(const nlohmann::json& entries, std::span<double> block, const std::string& name) {
  if (!entries.is_array()) throw DataError("model head '" + name + "' is not an array");
  for (const auto& e : entries) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_unsigned() || !e[1].is_number())
      throw DataError("model head '" + name + "' has a malformed entry");
    const auto idx = e[0].get<std::size_t>();
    if (idx >= block.size()) throw DataError("model head '" + name + "' index exceeds the hash dimension");
    const double v = e[1].get<double>();
    if (!std::isfinite(v)) throw DataError("model head '" + name + "' has a non-finite weight");
    block[idx] = v;
  }
}

}  // namespace

std::string model_to_json(const ModelParams& params) {
  const std::size_t d = params.hash_dim();
  const auto w = params.weights();
  nlohmann::json heads;
  for (Head h : {Head::SpanGrammar, Head::Mention, Head::AntecedentPair})
    heads[head_key(h)] = sparse_block(w.subspan(params.offset(h), d));
  nlohmann::json roles = nlohmann::json::object();
  for (std::size_t r = 0; r < params.role_labels().size(); ++r)
    roles[params.role_labels()[r]] = sparse_block(w.subspan(params.offset(Head::Role, r), d));
  heads["role"] = roles;
  nlohmann::json doc = {{"format", kModelFormat},
                        {"hash_dim", d},
                        {"seed", params.seed()},
                        {"role_labels", params.role_labels()},
                        {"heads", heads}};
  return doc.dump() + "\n";
}

ModelParams model_from_json(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw DataError(std::string("model file does not parse: ") + e.what());
  }
  try {
    if (!doc.is_object() || doc.value("format", "") != kModelFormat)
      throw DataError("model file lacks the '" + std::string(kModelFormat) + "' format tag");
    ModelParams params(doc.at("hash_dim").get<std::size_t>(), doc.at("seed").get<std::uint64_t>(),
                       doc.at("role_labels").get<std::vector<std::string>>());
    const std::size_t d = params.hash_dim();
    const auto& heads = doc.at("heads");
    for (Head h : {Head::SpanGrammar, Head::Mention, Head::AntecedentPair})
      read_block(heads.at(head_key(h)), params.weights().subspan(params.offset(h), d), head_key(h));
    const auto& roles = heads.at("role");
    for (std::size_t r = 0; r < params.role_labels().size(); ++r) {
      const std::string& label = params.role_labels()[r];
      read_block(roles.at(label), params.weights().subspan(params.offset(Head::Role, r), d), "role/" + label);
    }
    return params;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model file is malformed: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("model file is malformed: ") + e.what());
  }
}

void save_model(const ModelParams& params, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << model_to_json(params);
  if (!out) throw DataError("failed writing " + path.string());
}

ModelParams load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace spansel
