#include "shotmix/mixer.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <unordered_set>

#include "shotmix/error.hpp"

namespace shotmix {
namespace {

const std::unordered_set<std::string>& stop_words() {
  static const std::unordered_set<std::string> words = {
      "a",       "an",      "the",       "is",       "are",      "was",
      "were",    "be",      "been",      "being",    "in",       "on",
      "at",      "of",      "for",       "to",       "from",     "by",
      "with",    "without", "this",      "that",     "these",    "those",
      "it",      "its",     "as",        "and",      "or",       "but",
      "what",    "which",   "who",       "whose",    "how",      "when",
      "where",   "why",     "does",      "do",       "did",      "done",
      "can",     "could",   "should",    "would",    "will",     "may",
      "might",   "must",    "not",       "no",       "yes",      "you",
      "your",    "we",      "they",      "i",        "he",       "she",
      "his",     "her",     "their",     "our",      "my",       "if",
      "then",    "than",    "there",     "here",     "about",    "into",
      "over",    "under",   "between",   "among",    "per",      "each",
      "any",     "all",     "some",      "most",     "more",     "less",
      "very",    "only",    "also",      "please",   "describe", "identify",
      "classify","select",  "choose",    "tell",     "name",     "image",
      "frame",   "video",   "clip",      "picture",  "photo",    "example",
      "shown",   "given",   "following", "question", "questions","options",
      "option",  "answer",  "correct",   "type",     "kind",     "used",
      "use",     "uses",    "using",     "best",     "describes","present",
      "dominant","handles", "expert",    "task",     "tasks"};
  return words;
}

int canonical_rank(const DimensionId& dim) {
  const auto& canon = canonical_dimensions();
  auto it = std::find(canon.begin(), canon.end(), dim);
  if (it != canon.end()) return static_cast<int>(it - canon.begin());
  return static_cast<int>(canon.size());
}

}  // namespace

TargetMix build_target_mix(const TransferLedger& ledger,
                           const DimensionId& target, double alpha) {
  ledger.validate();
  if (!(alpha > 0.0 && alpha <= 1.0))
    fail_invalid("build_target_mix: alpha must be in (0,1]");
  const std::size_t d = ledger.index_of(target);

  TargetMix mix;
  mix.target = target;
  mix.alpha = alpha;

  double gain_sum = 0.0;
  std::vector<std::pair<std::size_t, double>> gains;
  for (std::size_t i = 0; i < ledger.size(); ++i) {
    if (i == d) continue;
    const double gain = ledger.A[i][d] - ledger.base[d];
    if (gain > 0.0) {
      gains.emplace_back(i, gain);
      gain_sum += gain;
    }
  }

  if (gains.empty()) {
    mix.p[target] = 1.0;  // target-only fallback
    return mix;
  }

  for (const auto& [i, gain] : gains) {
    const double weight = gain / (gain_sum + ledger.eps);
    mix.beneficial.push_back(ledger.dims[i]);
    mix.q[ledger.dims[i]] = weight;
    mix.p[ledger.dims[i]] = (1.0 - alpha) * weight;
  }
  mix.p[target] = alpha;
  return mix;
}

std::map<DimensionId, TargetMix> build_all_mixes(const TransferLedger& ledger,
                                                 double alpha) {
  std::map<DimensionId, TargetMix> mixes;
  for (const auto& dim : ledger.dims)
    mixes.emplace(dim, build_target_mix(ledger, dim, alpha));
  return mixes;
}

const std::vector<ExpertCard>& builtin_expert_cards() {
  static const std::vector<ExpertCard> cards = {
      {"lighting",
       "Lighting and color expert. 4 tasks: SourceCondition, Style, Attribute,"
       " ColorPalette. Handles questions about the lighting source or"
       " condition (daylight, artificial, fluorescent, firelight, moonlight,"
       " overcast, sunny, tungsten, practical, led), the lighting style such"
       " as back light, side light, top light, underlight, edge light, hard"
       " light, soft light, high key or low key, contrast and silhouette"
       " attributes, and the dominant color palette or tone (red, yellow,"
       " blue, green, purple, black and white)."},
      {"composition",
       "Composition expert. 3 tasks: CompositionRule, CompositionPattern,"
       " VisualWeightPlacement. Handles questions about the photographic"
       " composition rules present in the frame (rule of thirds, vertical,"
       " horizontal, diagonal, curved, triangle, center, symmetric, pattern,"
       " framing), the dominant compositional pattern or organizing"
       " principle, and the visual weight placement or balance (left heavy,"
       " right heavy, balanced, centered, short side)."},
      {"viewpoint",
       "Viewpoint expert. 6 tasks: AngleBasic, AngleExtended,"
       " AngleFinegrained, AngleCartoon, Height, HeightCartoon. Handles"
       " questions about the camera angle (overhead, high angle, neutral,"
       " low angle, dutch, aerial, bird's eye view, worm's eye view,"
       " diagonal angle, profile shot, back shot) and the camera height or"
       " level (aerial level, eye level, shoulder level, hip level, knee"
       " level, ground level)."},
      {"coverage",
       "Coverage expert. 9 tasks: ScaleBasic, ScaleClassic, ScaleExtended,"
       " ScaleFinegrained, ScaleCartoon, ScaleHistorical, Staging,"
       " StagingScaleMix, FocalLength. Handles questions about the shot"
       " scale or shot size (extreme close-up, close-up, medium close-up,"
       " medium shot, medium long shot, long shot, full shot, wide shot,"
       " extreme wide, foreground shot, insert shot, intertitle), the"
       " staging coverage (clean single, over the shoulder, two shot, three"
       " shot, group shot, establishing shot), and the lens or focal length"
       " (standard lens, medium focal lens, telephoto, fisheye, macro)."},
      {"motion",
       "Motion expert. 10 tasks: MoveCoarse, MoveCompoundA, MoveCompoundB,"
       " MoveCaptioning, VQAComplexity, VQAMovement, VQAShaking, VQASpeed,"
       " VQAPresence, VQAMixedType. Handles questions about how the camera"
       " moves or does not move in a video: camera movement or motion"
       " (static, push, pull, pan left, pan right, tilt up, tilt down, zoom"
       " in, zoom out, dolly, crane, arc, trucking, tracking, rolling),"
       " whether the camera stays still, the movement speed (slow, regular,"
       " fast), shaking and stability (steady, unsteady, minimal shaking),"
       " and the motion complexity (no motion, minor motion, simple motion,"
       " complex motion)."},
      {"cuts",
       "Cuts expert. 1 task: InterShotCutType. Handles questions about the"
       " editing transition between shots and the cut used in a video"
       " (cut-on-action, cut-away, cross-cut, match-cut, smash-cut,"
       " reaction cut, emphasis or deemphasis cut, speaker-change)."},
  };
  return cards;
}

std::vector<ExpertCard> parse_expert_cards(const Json& doc, const std::string& ctx) {
  if (!doc.is_array() || doc.empty())
    fail_parse(ctx + ": expected a nonempty array of cards");
  std::vector<ExpertCard> cards;
  std::set<DimensionId> seen;
  for (const auto& entry : doc) {
    ExpertCard card;
    card.dim = require_string(entry, "dim", ctx);
    card.description = require_string(entry, "description", ctx);
    if (card.description.empty())
      fail_parse(ctx + ": card '" + card.dim + "' has an empty description");
    if (!seen.insert(card.dim).second)
      fail_parse(ctx + ": duplicate card for dimension '" + card.dim + "'");
    cards.push_back(std::move(card));
  }
  return cards;
}

std::vector<std::string> route_tokens(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (current.size() >= 2 && !stop_words().contains(current))
      tokens.push_back(current);
    current.clear();
  };
  for (char ch : text) {
    const unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c))
      current.push_back(static_cast<char>(std::tolower(c)));
    else
      flush();
  }
  flush();
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  return tokens;
}

RouteResult route(const std::string& query, const std::vector<ExpertCard>& cards) {
  if (cards.empty()) fail_invalid("route: at least one expert card required");
  if (query.empty()) fail_invalid("route: query must be nonempty");

  // Canonical scoring order makes the tie-break independent of input order.
  std::vector<const ExpertCard*> ordered;
  for (const auto& c : cards) ordered.push_back(&c);
  std::sort(ordered.begin(), ordered.end(),
            [](const ExpertCard* a, const ExpertCard* b) {
              const int ra = canonical_rank(a->dim), rb = canonical_rank(b->dim);
              return ra != rb ? ra < rb : a->dim < b->dim;
            });

  const auto query_tokens = route_tokens(query);
  RouteResult result;
  double best = 0.0;
  for (const ExpertCard* card : ordered) {
    const auto desc_tokens = route_tokens(card->description);
    RouteScore score;
    score.dim = card->dim;
    for (const auto& t : query_tokens)
      if (std::binary_search(desc_tokens.begin(), desc_tokens.end(), t))
        score.matched_tokens.push_back(t);
    if (!query_tokens.empty())
      score.score = static_cast<double>(score.matched_tokens.size()) /
                    static_cast<double>(query_tokens.size());
    if (score.score > best) {
      best = score.score;
      result.dim = card->dim;
    }
    result.scores.push_back(std::move(score));
  }
  if (best <= 0.0) result.dim.reset();  // unroutable
  return result;
}

Json target_mix_to_json(const TargetMix& mix) {
  Json doc;
  doc["target"] = mix.target;
  doc["alpha"] = mix.alpha;
  doc["p"] = Json::object();
  for (const auto& [dim, prob] : mix.p) doc["p"][dim] = prob;
  return doc;
}

Json route_result_to_json(const RouteResult& result) {
  Json doc;
  doc["dimension"] = result.dim ? Json(*result.dim) : Json(nullptr);
  doc["unroutable"] = !result.dim.has_value();
  Json scores = Json::array();
  for (const auto& s : result.scores)
    scores.push_back(Json{{"dim", s.dim},
                          {"score", s.score},
                          {"matched_tokens", s.matched_tokens}});
  doc["scores"] = scores;
  return doc;
}

}  // namespace shotmix
