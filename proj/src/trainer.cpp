#include "shotmix/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include "shotmix/error.hpp"
#include "shotmix/mixer.hpp"
#include "shotmix/parallel.hpp"

namespace shotmix {

std::vector<DimensionId> SyntheticSuite::dims() const {
  std::vector<DimensionId> out;
  for (const auto& w : worlds) out.push_back(w.dim);
  return out;
}

const DimWorld& SyntheticSuite::world_of(const DimensionId& dim) const {
  for (const auto& w : worlds)
    if (w.dim == dim) return w;
  fail_invalid("suite: unknown dimension '" + dim + "'");
}

namespace {

SourcePool make_world_pool(const std::vector<std::string>& labels,
                           CounterRng& rng) {
  SourcePool pool;
  pool.vocab.labels = labels;
  pool.offset_bound = 1.0;
  const std::size_t n = labels.size();

  SourceSpec s0;
  s0.id = "s0";
  s0.weight = 0.6;
  s0.mask.assign(n, 1);
  s0.offsets.assign(n, 0.0);
  for (auto& b : s0.offsets) b = 0.25 * (2.0 * rng.next_double() - 1.0);

  SourceSpec s1;
  s1.id = "s1";
  s1.weight = 0.4;
  s1.mask.assign(n, 1);
  if (n > 2) s1.mask[rng.next_index(n)] = 0;  // a narrower taxonomy
  s1.offsets.assign(n, 0.0);
  for (auto& b : s1.offsets) b = 0.25 * (2.0 * rng.next_double() - 1.0);

  pool.sources = {std::move(s0), std::move(s1)};
  return pool;
}

}  // namespace

SyntheticSuite build_suite(const std::vector<DimRecipe>& recipes,
                           std::uint64_t seed) {
  if (recipes.empty()) fail_invalid("build_suite: no dimensions");
  SyntheticSuite suite;

  // Allocate own labels per dimension into the universal vocabulary.
  std::vector<std::vector<std::size_t>> own_ids(recipes.size());
  for (std::size_t d = 0; d < recipes.size(); ++d) {
    for (std::size_t l = 0; l < recipes[d].own_labels; ++l) {
      own_ids[d].push_back(suite.universal.labels.size());
      suite.universal.labels.push_back(recipes[d].dim + ":" +
                                       std::to_string(l));
    }
  }
  suite.universal.validate();
  suite.feature_dim = suite.universal.size();

  CounterRng rng(seed, CounterRng::stream_of("suite.build"));
  for (std::size_t d = 0; d < recipes.size(); ++d) {
    const auto& recipe = recipes[d];
    DimWorld world;
    world.dim = recipe.dim;

    world.universal_ids = own_ids[d];
    for (const auto& [src, count] : recipes[d].borrows) {
      if (src >= recipes.size())
        fail_invalid("build_suite: borrow index out of range");
      if (count > own_ids[src].size())
        fail_invalid("build_suite: borrow count exceeds donor labels");
      for (std::size_t l = 0; l < count; ++l)
        world.universal_ids.push_back(own_ids[src][l]);
    }

    std::vector<std::string> labels;
    for (std::size_t uid : world.universal_ids)
      labels.push_back(suite.universal.labels[uid]);

    CounterRng world_rng = rng.fork(d);
    world.pool = make_world_pool(labels, world_rng);

    // Generative truth: each label scores its own universal coordinate.
    world.model.feature_dim = suite.feature_dim;
    world.model.weights.assign(labels.size(),
                               std::vector<double>(suite.feature_dim, 0.0));
    world.model.label_bias.assign(labels.size(), 0.0);
    for (std::size_t l = 0; l < labels.size(); ++l)
      world.model.weights[l][world.universal_ids[l]] = recipe.truth_scale;

    // Cluster features: a uniformly chosen local label sets the mean.
    const auto uids = world.universal_ids;
    const double margin = recipe.margin;
    const double noise = recipe.noise;
    const std::size_t dim_count = suite.feature_dim;
    FeatureSampler sampler = [uids, margin, noise, dim_count](CounterRng& r) {
      std::vector<double> h(dim_count);
      for (auto& v : h) v = noise * r.next_gaussian();
      h[uids[r.next_index(uids.size())]] += margin;
      return h;
    };

    const std::uint64_t data_seed = world_rng.fork(7).next_u64();
    world.train = sample_dataset(world.pool, world.model, recipe.train_size,
                                 sampler, data_seed);
    world.val = sample_dataset(world.pool, world.model, recipe.val_size,
                               sampler, data_seed + 1);
    suite.worlds.push_back(std::move(world));
  }
  suite.donor = recipes[0].dim;
  return suite;
}

SyntheticSuite make_asymmetric_suite(std::uint64_t seed) {
  std::vector<DimRecipe> recipes(6);
  recipes[0] = {"d0", 6, {}, 3.0, 1.0, 2.0, 4000, 60};
  recipes[1] = {"d1", 4, {{0, 2}}, 2.5, 1.0, 2.0, 3000, 60};
  recipes[2] = {"d2", 4, {{0, 2}}, 2.5, 1.0, 2.0, 3000, 60};
  recipes[3] = {"d3", 4, {{1, 2}}, 2.5, 1.0, 2.0, 3000, 60};
  recipes[4] = {"d4", 2, {{0, 4}}, 1.0, 1.5, 2.0, 600, 60};
  recipes[5] = {"d5", 6, {}, 1.6, 1.0, 2.0, 3000, 60};
  return build_suite(recipes, seed);
}

SyntheticSuite make_three_dim_suite(std::uint64_t seed) {
  std::vector<DimRecipe> recipes(3);
  recipes[0] = {"a", 4, {}, 3.0, 1.0, 2.0, 4000, 60};
  recipes[1] = {"b", 4, {}, 2.5, 1.0, 2.0, 3000, 60};
  // Scaled-down features: same class geometry as "a" but 4x smaller
  // gradients, so "c" approaches its anchor slowly.
  recipes[2] = {"c", 2, {{0, 2}}, 0.75, 0.25, 8.0, 500, 60};
  return build_suite(recipes, seed);
}

SyntheticSuite make_suite_for_dims(const std::vector<DimensionId>& dims,
                                   std::uint64_t seed) {
  if (dims.empty()) fail_invalid("make_suite_for_dims: no dimensions");
  std::vector<DimRecipe> recipes;
  if (dims.size() == 6) {
    recipes = {{dims[0], 6, {}, 3.0, 1.0, 2.0, 4000, 60},
               {dims[1], 4, {{0, 2}}, 2.5, 1.0, 2.0, 3000, 60},
               {dims[2], 4, {{0, 2}}, 2.5, 1.0, 2.0, 3000, 60},
               {dims[3], 4, {{1, 2}}, 2.5, 1.0, 2.0, 3000, 60},
               {dims[4], 2, {{0, 4}}, 1.0, 1.5, 2.0, 600, 60},
               {dims[5], 6, {}, 1.6, 1.0, 2.0, 3000, 60}};
  } else if (dims.size() == 3) {
    recipes = {{dims[0], 4, {}, 3.0, 1.0, 2.0, 4000, 60},
               {dims[1], 4, {}, 2.5, 1.0, 2.0, 3000, 60},
               {dims[2], 2, {{0, 2}}, 0.75, 0.25, 8.0, 500, 60}};
  } else {
    recipes.push_back({dims[0], 6, {}, 3.0, 1.0, 2.0, 4000, 60});
    for (std::size_t d = 1; d < dims.size(); ++d) {
      const bool last = d + 1 == dims.size() && dims.size() > 2;
      if (last)
        recipes.push_back({dims[d], 4, {}, 1.6, 1.0, 2.0, 3000, 60});
      else
        recipes.push_back({dims[d], 4, {{0, 2}}, 2.5, 1.0, 2.0, 3000, 60});
    }
  }
  return build_suite(recipes, seed);
}

SoftmaxTrainer::SoftmaxTrainer(const SyntheticSuite& suite,
                               const TrainerOptions& options,
                               std::uint64_t seed)
    : suite_(&suite),
      options_(options),
      rng_(seed, CounterRng::stream_of("trainer.sgd")) {
  if (options.batch_size < 1) fail_invalid("trainer: batch size must be >= 1");
  if (!(options.learning_rate > 0.0))
    fail_invalid("trainer: learning rate must be positive");
  state_.feature_dim = suite.feature_dim;
  state_.weights.assign(suite.universal.size(),
                        std::vector<double>(suite.feature_dim, 0.0));
  state_.bias.assign(suite.universal.size(), 0.0);
}

std::vector<DimensionId> SoftmaxTrainer::dims() const { return suite_->dims(); }

void SoftmaxTrainer::sgd_batch(const DimWorld& world) {
  if (world.train.empty())
    fail_invalid("trainer: empty train store for dimension '" + world.dim + "'");
  const std::size_t n_labels = world.universal_ids.size();
  std::vector<double> logits(n_labels);
  std::vector<double> grad_bias(n_labels, 0.0);
  std::vector<std::vector<double>> grad_w(
      n_labels, std::vector<double>(state_.feature_dim, 0.0));

  for (int b = 0; b < options_.batch_size; ++b) {
    const auto& ex = world.train[rng_.next_index(world.train.size())];
    double max_logit = -1e300;
    for (std::size_t l = 0; l < n_labels; ++l) {
      const std::size_t uid = world.universal_ids[l];
      double v = state_.bias[uid];
      const auto& w = state_.weights[uid];
      for (std::size_t k = 0; k < state_.feature_dim; ++k)
        v += w[k] * ex.features[k];
      logits[l] = v;
      max_logit = std::max(max_logit, v);
    }
    double z = 0.0;
    for (auto& v : logits) z += (v = std::exp(v - max_logit));
    for (std::size_t l = 0; l < n_labels; ++l) {
      const double p = logits[l] / z;
      const double g = p - (l == ex.label ? 1.0 : 0.0);
      grad_bias[l] += g;
      auto& gw = grad_w[l];
      for (std::size_t k = 0; k < state_.feature_dim; ++k)
        gw[k] += g * ex.features[k];
    }
  }

  const double scale = options_.learning_rate / options_.batch_size;
  for (std::size_t l = 0; l < n_labels; ++l) {
    const std::size_t uid = world.universal_ids[l];
    state_.bias[uid] -= scale * grad_bias[l];
    auto& w = state_.weights[uid];
    for (std::size_t k = 0; k < state_.feature_dim; ++k)
      w[k] -= scale * grad_w[l][k];
  }
  state_.records_consumed += options_.batch_size;
  ++state_.steps;
}

void SoftmaxTrainer::train_steps(const std::vector<double>& p, int steps) {
  if (p.size() != suite_->worlds.size())
    fail_invalid("trainer: sampling distribution length mismatch");
  for (int s = 0; s < steps; ++s) {
    const std::size_t d = rng_.next_categorical(p);
    sgd_batch(suite_->worlds[d]);
  }
}

double SoftmaxTrainer::accuracy_on(
    const DimWorld& world, const std::vector<AnnotatedExample>& records) const {
  if (records.empty())
    fail_invalid("trainer: empty evaluation store for dimension '" +
                 world.dim + "'");
  std::size_t correct = 0;
  for (const auto& ex : records) {
    double best = -1e300;
    std::size_t arg = 0;
    for (std::size_t l = 0; l < world.universal_ids.size(); ++l) {
      const std::size_t uid = world.universal_ids[l];
      double v = state_.bias[uid];
      const auto& w = state_.weights[uid];
      for (std::size_t k = 0; k < state_.feature_dim; ++k)
        v += w[k] * ex.features[k];
      if (v > best) {
        best = v;
        arg = l;
      }
    }
    if (arg == ex.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

ValidationSnapshot SoftmaxTrainer::validate() {
  ValidationSnapshot snap;
  for (const auto& world : suite_->worlds)
    snap.scores.push_back(accuracy_on(world, world.val));
  return snap;
}

double SoftmaxTrainer::train_cross_entropy(const DimensionId& dim) const {
  const DimWorld& world = suite_->world_of(dim);
  const std::size_t n_labels = world.universal_ids.size();
  double total = 0.0;
  std::vector<double> logits(n_labels);
  for (const auto& ex : world.train) {
    double max_logit = -1e300;
    for (std::size_t l = 0; l < n_labels; ++l) {
      const std::size_t uid = world.universal_ids[l];
      double v = state_.bias[uid];
      const auto& w = state_.weights[uid];
      for (std::size_t k = 0; k < state_.feature_dim; ++k)
        v += w[k] * ex.features[k];
      logits[l] = v;
      max_logit = std::max(max_logit, v);
    }
    double z = 0.0;
    for (double v : logits) z += std::exp(v - max_logit);
    total -= logits[ex.label] - max_logit - std::log(z);
  }
  return total / static_cast<double>(world.train.size());
}

TransferLedger compute_transfer_ledger(const SyntheticSuite& suite,
                                       const TrainerOptions& options,
                                       int probe_steps, std::uint64_t seed) {
  const std::size_t n = suite.worlds.size();
  TransferLedger ledger;
  ledger.dims = suite.dims();
  ledger.A.assign(n, std::vector<double>(n, 0.0));
  ledger.base.resize(n);
  ledger.anchors.resize(n);

  SoftmaxTrainer untrained(suite, options, seed);
  for (std::size_t j = 0; j < n; ++j)
    ledger.base[j] = untrained.accuracy_on(suite.worlds[j], suite.worlds[j].val);

  for (std::size_t i = 0; i < n; ++i) {
    SoftmaxTrainer probe(suite, options, seed + 1 + i);
    std::vector<double> point(n, 0.0);
    point[i] = 1.0;
    probe.train_steps(point, probe_steps);
    for (std::size_t j = 0; j < n; ++j)
      ledger.A[i][j] = probe.accuracy_on(suite.worlds[j], suite.worlds[j].val);
  }
  for (std::size_t j = 0; j < n; ++j) ledger.anchors[j] = ledger.A[j][j];
  ledger.validate();
  return ledger;
}

namespace {

struct SeedContext {
  SyntheticSuite suite;
  TransferLedger ledger;
};

std::vector<double> run_variant(const std::string& variant,
                                const SeedContext& ctx,
                                const AblationConfig& cfg,
                                std::uint64_t seed) {
  const auto dims = ctx.suite.dims();
  const std::size_t n = dims.size();
  const std::uint64_t variant_seed =
      seed ^ CounterRng::stream_of("variant." + variant);

  auto evaluate_all = [&](SoftmaxTrainer& t) {
    std::vector<double> acc;
    for (const auto& w : ctx.suite.worlds) acc.push_back(t.accuracy_on(w, w.val));
    return acc;
  };

  if (variant == "unishot") {
    SoftmaxTrainer trainer(ctx.suite, cfg.options, variant_seed);
    MixHyperparams hyper = cfg.hyper;
    hyper.steps_per_round =
        static_cast<int>(std::max<long>(1, cfg.total_steps / cfg.rounds));
    run_schedule(trainer, ctx.ledger, hyper, cfg.rounds);
    return evaluate_all(trainer);
  }
  if (variant == "unishot_naive") {
    SoftmaxTrainer trainer(ctx.suite, cfg.options, variant_seed);
    std::vector<double> uniform(n, 1.0 / static_cast<double>(n));
    trainer.train_steps(uniform, static_cast<int>(cfg.total_steps));
    return evaluate_all(trainer);
  }
  if (variant == "agentshots" || variant == "agentshots_naive" ||
      variant == "target_only") {
    // One specialist per target; each reports only its own dimension.
    std::vector<double> acc(n, 0.0);
    for (std::size_t d = 0; d < n; ++d) {
      SoftmaxTrainer trainer(ctx.suite, cfg.options, variant_seed + d);
      std::vector<double> p(n, 0.0);
      if (variant == "agentshots") {
        const TargetMix mix = build_target_mix(ctx.ledger, dims[d], cfg.alpha);
        for (std::size_t i = 0; i < n; ++i) {
          auto it = mix.p.find(dims[i]);
          if (it != mix.p.end()) p[i] = it->second;
        }
      } else {
        p[d] = 1.0;
      }
      trainer.train_steps(p, static_cast<int>(cfg.total_steps));
      acc[d] = trainer.accuracy_on(ctx.suite.worlds[d], ctx.suite.worlds[d].val);
    }
    return acc;
  }
  if (variant == "homogeneous_budget" || variant == "heterogeneous_budget") {
    SoftmaxTrainer trainer(ctx.suite, cfg.options, variant_seed);
    const int steps = static_cast<int>(
        std::max<long>(1, cfg.budget_records / cfg.options.batch_size));
    std::vector<double> p(n, 0.0);
    if (variant == "homogeneous_budget") {
      const auto it = std::find(dims.begin(), dims.end(), ctx.suite.donor);
      if (it == dims.end())
        fail_invalid("run_ablation: suite donor missing from dims");
      p[static_cast<std::size_t>(it - dims.begin())] = 1.0;
    } else {
      std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(n));
    }
    trainer.train_steps(p, steps);
    return evaluate_all(trainer);
  }
  fail_invalid("run_ablation: unknown variant '" + variant + "'");
}

double median(std::vector<double> values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2]
                    : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

AblationTable run_ablation(const AblationConfig& cfg) {
  if (cfg.variants.empty()) fail_invalid("run_ablation: no variants");
  if (cfg.seeds < 1) fail_invalid("run_ablation: seeds must be >= 1");
  for (const auto& v : cfg.variants) {
    static const std::set<std::string> known = {
        "unishot",     "unishot_naive",      "agentshots",
        "agentshots_naive", "target_only",   "homogeneous_budget",
        "heterogeneous_budget"};
    if (!known.contains(v)) fail_invalid("run_ablation: unknown variant '" + v + "'");
  }

  // Same worlds and probe ledgers for every variant at a given seed.
  std::vector<SeedContext> contexts(static_cast<std::size_t>(cfg.seeds));
  parallel_for(contexts.size(), cfg.workers, [&](std::size_t s) {
    const std::uint64_t seed = cfg.master_seed + s;
    SeedContext ctx;
    ctx.suite = cfg.n_dims == 3 ? make_three_dim_suite(seed)
                                : make_asymmetric_suite(seed);
    ctx.ledger =
        compute_transfer_ledger(ctx.suite, cfg.options, cfg.probe_steps, seed);
    contexts[s] = std::move(ctx);
  });

  AblationTable table;
  table.dims = contexts.front().suite.dims();
  const std::size_t n = table.dims.size();

  for (const auto& variant : cfg.variants) {
    AblationVariantRow row;
    row.variant = variant;
    row.per_seed.assign(static_cast<std::size_t>(cfg.seeds), {});
    parallel_for(row.per_seed.size(), cfg.workers, [&](std::size_t s) {
      row.per_seed[s] =
          run_variant(variant, contexts[s], cfg, cfg.master_seed + s);
    });

    std::vector<double> macros, worsts, seconds;
    for (const auto& acc : row.per_seed) {
      double macro = 0.0;
      for (double a : acc) macro += a;
      macros.push_back(macro / static_cast<double>(n));
      std::vector<double> sorted = acc;
      std::sort(sorted.begin(), sorted.end());
      worsts.push_back(sorted[0]);
      seconds.push_back(sorted.size() > 1 ? sorted[1] : sorted[0]);
    }
    row.macro = median(macros);
    row.worst = median(worsts);
    row.second_worst = median(seconds);
    for (std::size_t d = 0; d < n; ++d) {
      std::vector<double> per_dim;
      for (const auto& acc : row.per_seed) per_dim.push_back(acc[d]);
      row.per_dim.push_back(median(per_dim));
    }
    table.rows.push_back(std::move(row));
  }

  // Normalized view against the naive specialist baseline.
  const AblationVariantRow* baseline = nullptr;
  for (const auto& row : table.rows)
    if (row.variant == "agentshots_naive") baseline = &row;
  if (baseline) {
    std::vector<AblationVariantRow> normalized;
    for (const auto& row : table.rows) {
      AblationVariantRow norm;
      norm.variant = row.variant;
      bool ok = true;
      for (std::size_t d = 0; d < n; ++d) {
        if (baseline->per_dim[d] <= 0.0) {
          ok = false;
          break;
        }
        norm.per_dim.push_back(row.per_dim[d] / baseline->per_dim[d]);
      }
      if (!ok) continue;
      double sum = 0.0;
      for (double v : norm.per_dim) sum += v;
      norm.macro = sum / static_cast<double>(n);
      std::vector<double> sorted = norm.per_dim;
      std::sort(sorted.begin(), sorted.end());
      norm.worst = sorted[0];
      norm.second_worst = sorted.size() > 1 ? sorted[1] : sorted[0];
      normalized.push_back(std::move(norm));
    }
    table.normalized = std::move(normalized);
  }
  return table;
}

Json ablation_to_json(const AblationTable& table) {
  Json doc;
  doc["dims"] = table.dims;
  auto row_json = [&](const AblationVariantRow& row, bool raw) {
    Json r;
    r["variant"] = row.variant;
    Json per_dim = Json::object();
    for (std::size_t d = 0; d < table.dims.size(); ++d)
      per_dim[table.dims[d]] = row.per_dim[d];
    r["per_dim"] = per_dim;
    r["macro"] = row.macro;
    r["worst"] = row.worst;
    r["second_worst"] = row.second_worst;
    if (raw) r["per_seed"] = row.per_seed;
    return r;
  };
  Json rows = Json::array();
  for (const auto& row : table.rows) rows.push_back(row_json(row, true));
  doc["variants"] = rows;
  if (table.normalized) {
    Json norm = Json::array();
    for (const auto& row : *table.normalized) norm.push_back(row_json(row, false));
    doc["normalized_vs_agentshots_naive"] = norm;
  }
  return doc;
}

std::string ablation_to_text(const AblationTable& table) {
  std::ostringstream out;
  auto print_block = [&](const std::vector<AblationVariantRow>& rows,
                         const std::string& title) {
    out << title << '\n';
    out << std::left << std::setw(22) << "variant";
    for (const auto& d : table.dims) out << std::right << std::setw(10) << d;
    out << std::right << std::setw(10) << "macro" << std::setw(10) << "worst"
        << std::setw(10) << "2nd" << '\n';
    for (const auto& row : rows) {
      out << std::left << std::setw(22) << row.variant;
      out << std::fixed << std::setprecision(4);
      for (double v : row.per_dim) out << std::right << std::setw(10) << v;
      out << std::right << std::setw(10) << row.macro << std::setw(10)
          << row.worst << std::setw(10) << row.second_worst << '\n';
      out.unsetf(std::ios::fixed);
    }
  };
  print_block(table.rows, "absolute accuracy (median over seeds)");
  if (table.normalized) {
    out << '\n';
    print_block(*table.normalized, "normalized by agentshots_naive");
  }
  return out.str();
}

}  // namespace shotmix
