#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shotmix/json_util.hpp"
#include "shotmix/rng.hpp"

namespace shotmix {

/// Universal label vocabulary: every category any source might use.
struct Vocabulary {
  std::vector<std::string> labels;

  std::size_t size() const { return labels.size(); }
  std::size_t index_of(const std::string& label) const;
  void validate() const;
};

/// One annotation source: which labels its taxonomy exposes (mask), its
/// per-label preference offsets, normalizer shift, and mixture weight.
struct SourceSpec {
  std::string id;
  std::vector<std::uint8_t> mask;  // C_s(y) in {0,1}
  std::vector<double> offsets;     // b_s(y), |b| <= pool bound
  double shift = 0.0;              // a_s
  double weight = 0.0;             // pi_s
};

struct SourcePool {
  Vocabulary vocab;
  double offset_bound = 1.0;  // B
  std::vector<SourceSpec> sources;

  void validate() const;
};

/// Source-invariant semantic score f*(H, y) = H . weights[y] + label_bias[y].
/// shared_weight, when set, declares the shared normalizer component
/// h(H) = H . shared_weight used by the idealized constructions.
struct SemanticModel {
  std::size_t feature_dim = 0;
  std::vector<std::vector<double>> weights;  // one vector per label
  std::vector<double> label_bias;            // one constant per label
  std::optional<std::vector<double>> shared_weight;

  double score(std::span<const double> features, std::size_t label) const;
  void validate(std::size_t vocab_size) const;
};

/// Composite label prior induced by pooling: M(y) and kappa(y) = log M(y).
/// Absent (all sources mask y) is a tagged state, never a float sentinel.
struct CompositePrior {
  std::vector<double> M;
  std::vector<std::optional<double>> kappa;
  // Population counterparts, filled only when the pool is a sample from a
  // declared mechanism distribution.
  std::optional<std::vector<double>> Mbar;
  std::optional<std::vector<std::optional<double>>> kappabar;
};

/// Absent compares below every finite value.
bool kappa_less(const std::optional<double>& a, const std::optional<double>& b);

/// P_s(y|H) = C_s(y) exp(f*(H,y) + b_s(y)) / Z_s(H); masked labels are
/// exactly zero and the output sums to one.
std::vector<double> source_conditional(const SourceSpec& source,
                                       const SemanticModel& model,
                                       std::span<const double> features);

/// Exact mixture sum_s alpha_s P_s(y|H). Weights must be nonnegative and
/// sum to one; pass the pool weights pi for the balanced case.
std::vector<double> pooled_conditional(const SourcePool& pool,
                                       const SemanticModel& model,
                                       std::span<const double> features,
                                       std::span<const double> alpha);

/// Convenience overload with alpha_s(H) = pi_s.
std::vector<double> pooled_conditional(const SourcePool& pool,
                                       const SemanticModel& model,
                                       std::span<const double> features);

/// M(y) = sum_s pi_s C_s(y) exp(b_s(y) - a_s); kappa = log M.
CompositePrior composite_prior(const SourcePool& pool);

struct AnnotatedExample {
  std::vector<double> features;
  std::size_t label = 0;   // index into the pool vocabulary
  std::size_t source = 0;  // index into pool.sources
};

using FeatureSampler = std::function<std::vector<double>(CounterRng&)>;

/// Draws source ~ pi, features from the sampler, label from the source
/// conditional. Example i depends only on (seed, i), so generation can be
/// sharded across workers over disjoint index ranges.
std::vector<AnnotatedExample> sample_dataset(const SourcePool& pool,
                                             const SemanticModel& model,
                                             std::size_t count,
                                             const FeatureSampler& sampler,
                                             std::uint64_t seed);

FeatureSampler gaussian_feature_sampler(std::size_t dim);

/// Idealized pool construction: alpha_s(H) = pi_s exactly and
/// log Z_s(H) = a_s + h(H) exactly, achieved with a separable score
/// f*(H, y) = label_gain[y] + H . shared_weight and shifts
/// a_s = log sum_{y exposed} exp(label_gain[y] + b_s(y)). Under it the
/// pooled conditional equals softmax(f* + kappa) with zero residual.
struct IdealizedWorld {
  SourcePool pool;
  SemanticModel model;
};

IdealizedWorld make_idealized_world(Vocabulary vocab,
                                    std::vector<std::vector<std::uint8_t>> masks,
                                    std::vector<std::vector<double>> offsets,
                                    std::vector<double> pi,
                                    std::vector<double> label_gain,
                                    std::vector<double> shared_weight,
                                    double offset_bound);

SourcePool parse_pool(const Json& doc, const std::string& ctx);
Json pool_to_json(const SourcePool& pool);

Json example_to_json(const AnnotatedExample& e, const SourcePool& pool);
AnnotatedExample example_from_json(const Json& j, const SourcePool& pool,
                                   const std::string& ctx);

}  // namespace shotmix
