#include "shotmix/annotation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "shotmix/error.hpp"

namespace shotmix {

std::size_t Vocabulary::index_of(const std::string& label) const {
  auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) fail_invalid("vocabulary: unknown label '" + label + "'");
  return static_cast<std::size_t>(it - labels.begin());
}

void Vocabulary::validate() const {
  if (labels.empty()) fail_invalid("vocabulary: must be nonempty");
  std::set<std::string> seen;
  for (const auto& l : labels) {
    if (l.empty()) fail_invalid("vocabulary: empty label");
    if (!seen.insert(l).second)
      fail_invalid("vocabulary: duplicate label '" + l + "'");
  }
}

void SourcePool::validate() const {
  vocab.validate();
  if (sources.empty()) fail_invalid("pool: needs at least one source");
  if (!(offset_bound >= 0.0) || !std::isfinite(offset_bound))
    fail_invalid("pool: offset bound B must be finite and nonnegative");
  const std::size_t n = vocab.size();
  double pi_sum = 0.0;
  std::set<std::string> ids;
  for (const auto& s : sources) {
    if (s.id.empty()) fail_invalid("pool: source with empty id");
    if (!ids.insert(s.id).second)
      fail_invalid("pool: duplicate source id '" + s.id + "'");
    if (s.mask.size() != n)
      fail_invalid("pool: source '" + s.id + "' mask length mismatch");
    if (s.offsets.size() != n)
      fail_invalid("pool: source '" + s.id + "' offsets length mismatch");
    bool any_exposed = false;
    for (std::size_t y = 0; y < n; ++y) {
      if (s.mask[y] != 0 && s.mask[y] != 1)
        fail_invalid("pool: source '" + s.id + "' mask must be 0/1");
      any_exposed = any_exposed || s.mask[y] == 1;
      if (!std::isfinite(s.offsets[y]) || std::abs(s.offsets[y]) > offset_bound)
        fail_invalid("pool: source '" + s.id + "' offset for label '" +
                     vocab.labels[y] + "' exceeds bound B=" +
                     std::to_string(offset_bound));
    }
    if (!any_exposed)
      fail_invalid("pool: source '" + s.id + "' masks every label");
    if (!(s.weight >= 0.0) || !std::isfinite(s.weight))
      fail_invalid("pool: source '" + s.id + "' weight must be nonnegative");
    if (!std::isfinite(s.shift))
      fail_invalid("pool: source '" + s.id + "' shift must be finite");
    pi_sum += s.weight;
  }
  if (std::abs(pi_sum - 1.0) > 1e-9)
    fail_invalid("pool: source weights must sum to 1, got " +
                 std::to_string(pi_sum));
}

double SemanticModel::score(std::span<const double> features,
                            std::size_t label) const {
  const auto& w = weights[label];
  double s = label_bias.empty() ? 0.0 : label_bias[label];
  for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * features[k];
  return s;
}

void SemanticModel::validate(std::size_t vocab_size) const {
  if (weights.size() != vocab_size)
    fail_invalid("semantic model: one weight vector per label required");
  for (const auto& w : weights)
    if (w.size() != feature_dim)
      fail_invalid("semantic model: weight vector length mismatch");
  if (!label_bias.empty() && label_bias.size() != vocab_size)
    fail_invalid("semantic model: label bias length mismatch");
  if (shared_weight && shared_weight->size() != feature_dim)
    fail_invalid("semantic model: shared weight length mismatch");
}

bool kappa_less(const std::optional<double>& a, const std::optional<double>& b) {
  if (!a) return b.has_value();
  if (!b) return false;
  return *a < *b;
}

std::vector<double> source_conditional(const SourceSpec& source,
                                       const SemanticModel& model,
                                       std::span<const double> features) {
  const std::size_t n = source.mask.size();
  if (features.size() != model.feature_dim)
    fail_invalid("source_conditional: feature length mismatch");

  std::vector<double> logits(n, -std::numeric_limits<double>::infinity());
  double max_logit = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t y = 0; y < n; ++y) {
    if (source.mask[y] == 0) continue;
    any = true;
    logits[y] = model.score(features, y) + source.offsets[y];
    max_logit = std::max(max_logit, logits[y]);
  }
  if (!any) fail_invalid("source_conditional: all labels masked");

  std::vector<double> probs(n, 0.0);
  double z = 0.0;
  for (std::size_t y = 0; y < n; ++y) {
    if (source.mask[y] == 0) continue;
    probs[y] = std::exp(logits[y] - max_logit);
    z += probs[y];
  }
  for (double& p : probs) p /= z;
  return probs;
}

std::vector<double> pooled_conditional(const SourcePool& pool,
                                       const SemanticModel& model,
                                       std::span<const double> features,
                                       std::span<const double> alpha) {
  if (alpha.size() != pool.sources.size())
    fail_invalid("pooled_conditional: alpha length mismatch");
  double alpha_sum = 0.0;
  for (double a : alpha) {
    if (!(a >= 0.0) || !std::isfinite(a))
      fail_invalid("pooled_conditional: alpha weights must be nonnegative");
    alpha_sum += a;
  }
  if (std::abs(alpha_sum - 1.0) > 1e-9)
    fail_invalid("pooled_conditional: alpha weights must sum to 1");

  std::vector<double> mixture(pool.vocab.size(), 0.0);
  for (std::size_t s = 0; s < pool.sources.size(); ++s) {
    if (alpha[s] == 0.0) continue;
    const auto p = source_conditional(pool.sources[s], model, features);
    for (std::size_t y = 0; y < mixture.size(); ++y)
      mixture[y] += alpha[s] * p[y];
  }
  return mixture;
}

std::vector<double> pooled_conditional(const SourcePool& pool,
                                       const SemanticModel& model,
                                       std::span<const double> features) {
  std::vector<double> alpha;
  alpha.reserve(pool.sources.size());
  for (const auto& s : pool.sources) alpha.push_back(s.weight);
  return pooled_conditional(pool, model, features, alpha);
}

CompositePrior composite_prior(const SourcePool& pool) {
  pool.validate();
  const std::size_t n = pool.vocab.size();
  CompositePrior prior;
  prior.M.assign(n, 0.0);
  prior.kappa.assign(n, std::nullopt);
  for (std::size_t y = 0; y < n; ++y) {
    double m = 0.0;
    for (const auto& s : pool.sources)
      if (s.mask[y] == 1) m += s.weight * std::exp(s.offsets[y] - s.shift);
    prior.M[y] = m;
    if (m > 0.0) prior.kappa[y] = std::log(m);
  }
  return prior;
}

std::vector<AnnotatedExample> sample_dataset(const SourcePool& pool,
                                             const SemanticModel& model,
                                             std::size_t count,
                                             const FeatureSampler& sampler,
                                             std::uint64_t seed) {
  pool.validate();
  model.validate(pool.vocab.size());
  std::vector<double> pi;
  for (const auto& s : pool.sources) pi.push_back(s.weight);

  CounterRng base(seed, CounterRng::stream_of("annotation.sample_dataset"));
  std::vector<AnnotatedExample> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    CounterRng rng = base.fork(i);
    AnnotatedExample ex;
    ex.source = rng.next_categorical(pi);
    ex.features = sampler(rng);
    if (ex.features.size() != model.feature_dim)
      fail_invalid("sample_dataset: sampler produced wrong feature length");
    const auto probs =
        source_conditional(pool.sources[ex.source], model, ex.features);
    ex.label = rng.next_categorical(probs);
    out.push_back(std::move(ex));
  }
  return out;
}

FeatureSampler gaussian_feature_sampler(std::size_t dim) {
  return [dim](CounterRng& rng) {
    std::vector<double> h(dim);
    for (auto& v : h) v = rng.next_gaussian();
    return h;
  };
}

IdealizedWorld make_idealized_world(
    Vocabulary vocab, std::vector<std::vector<std::uint8_t>> masks,
    std::vector<std::vector<double>> offsets, std::vector<double> pi,
    std::vector<double> label_gain, std::vector<double> shared_weight,
    double offset_bound) {
  if (masks.size() != offsets.size() || masks.size() != pi.size())
    fail_invalid("make_idealized_world: per-source argument length mismatch");
  if (label_gain.size() != vocab.size())
    fail_invalid("make_idealized_world: label gain length mismatch");

  IdealizedWorld world;
  world.pool.vocab = std::move(vocab);
  world.pool.offset_bound = offset_bound;
  const std::size_t n = world.pool.vocab.size();

  for (std::size_t s = 0; s < masks.size(); ++s) {
    SourceSpec spec;
    spec.id = "s" + std::to_string(s);
    spec.mask = std::move(masks[s]);
    spec.offsets = std::move(offsets[s]);
    spec.weight = pi[s];
    // a_s makes log Z_s(H) = a_s + h(H) hold exactly for the separable score.
    double max_term = -std::numeric_limits<double>::infinity();
    for (std::size_t y = 0; y < n; ++y)
      if (spec.mask[y] == 1)
        max_term = std::max(max_term, label_gain[y] + spec.offsets[y]);
    double acc = 0.0;
    for (std::size_t y = 0; y < n; ++y)
      if (spec.mask[y] == 1)
        acc += std::exp(label_gain[y] + spec.offsets[y] - max_term);
    spec.shift = max_term + std::log(acc);
    world.pool.sources.push_back(std::move(spec));
  }
  world.pool.validate();

  world.model.feature_dim = shared_weight.size();
  world.model.weights.assign(n, shared_weight);
  world.model.label_bias = std::move(label_gain);
  world.model.shared_weight = std::move(shared_weight);
  world.model.validate(n);
  return world;
}

SourcePool parse_pool(const Json& doc, const std::string& ctx) {
  SourcePool pool;
  pool.vocab.labels = require_string_array(doc, "labels", ctx);
  pool.offset_bound = require_number(doc, "B", ctx);
  const Json& sources = require_field(doc, "sources", ctx);
  if (!sources.is_array()) fail_parse(ctx + ": 'sources' must be an array");
  for (const auto& sj : sources) {
    SourceSpec s;
    s.id = require_string(sj, "id", ctx);
    s.weight = require_number(sj, "pi", ctx);
    s.shift = require_number(sj, "a", ctx);
    const std::string mask = require_string(sj, "mask", ctx);
    if (mask.size() != pool.vocab.size())
      fail_parse(ctx + ": source '" + s.id + "' mask bitstring length mismatch");
    for (char c : mask) {
      if (c != '0' && c != '1')
        fail_parse(ctx + ": source '" + s.id + "' mask must be a 0/1 bitstring");
      s.mask.push_back(static_cast<std::uint8_t>(c - '0'));
    }
    s.offsets = require_number_array(sj, "b", ctx);
    pool.sources.push_back(std::move(s));
  }
  try {
    pool.validate();
  } catch (const Error& e) {
    fail_parse(ctx + ": " + e.what());
  }
  return pool;
}

Json pool_to_json(const SourcePool& pool) {
  Json doc;
  doc["labels"] = pool.vocab.labels;
  doc["B"] = pool.offset_bound;
  Json sources = Json::array();
  for (const auto& s : pool.sources) {
    std::string mask;
    for (auto bit : s.mask) mask.push_back(bit ? '1' : '0');
    sources.push_back(Json{{"id", s.id},
                           {"pi", s.weight},
                           {"a", s.shift},
                           {"mask", mask},
                           {"b", s.offsets}});
  }
  doc["sources"] = sources;
  return doc;
}

Json example_to_json(const AnnotatedExample& e, const SourcePool& pool) {
  return Json{{"h", e.features},
              {"y", pool.vocab.labels[e.label]},
              {"source", pool.sources[e.source].id}};
}

AnnotatedExample example_from_json(const Json& j, const SourcePool& pool,
                                   const std::string& ctx) {
  AnnotatedExample e;
  e.features = require_number_array(j, "h", ctx);
  e.label = pool.vocab.index_of(require_string(j, "y", ctx));
  const std::string source = require_string(j, "source", ctx);
  auto it = std::find_if(pool.sources.begin(), pool.sources.end(),
                         [&](const SourceSpec& s) { return s.id == source; });
  if (it == pool.sources.end())
    fail_parse(ctx + ": unknown source id '" + source + "'");
  e.source = static_cast<std::size_t>(it - pool.sources.begin());
  return e;
}

}  // namespace shotmix
