#include "ecc/scoring.hpp"

#include "ecc/text.hpp"

#include <algorithm>
#include <cmath>

namespace ecc {

double NgramCosineScorer::score(std::string_view a, std::string_view b) const {
    const std::string ca = clean_text(a);
    const std::string cb = clean_text(b);
    if (ca.empty() || cb.empty()) return 0.0;
    if (ca == cb) return 1.0;
    return cosine(embed(ca, n_, dims_), embed(cb, n_, dims_));
}

TableScorer::TableScorer(std::map<std::pair<std::string, std::string>, double> table,
                         std::shared_ptr<const TextScorer> fallback, double default_score)
    : table_(table.begin(), table.end()), fallback_(std::move(fallback)), default_score_(default_score) {}

double TableScorer::score(std::string_view a, std::string_view b) const {
    if (auto it = table_.find(std::pair<std::string, std::string>(a, b)); it != table_.end()) return it->second;
    return fallback_ ? fallback_->score(a, b) : default_score_;
}

ScorerRegistry ScorerRegistry::with_builtins() {
    ScorerRegistry r;
    r.add("ngram-cosine", [] { return std::make_shared<const NgramCosineScorer>(2); });
    r.add("ngram-cosine-3", [] { return std::make_shared<const NgramCosineScorer>(3); });
    return r;
}

void ScorerRegistry::add(const std::string& name, Factory factory) { factories_[name] = std::move(factory); }

std::shared_ptr<const TextScorer> ScorerRegistry::create(const std::string& name) const {
    auto it = factories_.find(name);
    if (it == factories_.end()) throw ScoringError("unknown scorer '" + name + "'");
    return it->second();
}

std::vector<std::string> ScorerRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : factories_) out.push_back(name);
    return out;
}

double similarity_score(std::string_view a, std::string_view b) { return NgramCosineScorer().score(a, b); }

double relevance_score(std::string_view query, std::string_view response) {
    return NgramCosineScorer().score(query, response);
}

namespace {

void require_unit(const char* what, double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw ScoringError(std::string(what) + " = " + std::to_string(x) + " is outside [0,1]");
}

}  // namespace

ScoreBreakdown combine_scores(double sim, double rel_end, double rel_cloud, const EvalConfig& cfg) {
    require_unit("sim", sim);
    require_unit("rel_end", rel_end);
    require_unit("rel_cloud", rel_cloud);
    require_unit("alpha", cfg.alpha);
    require_unit("theta", cfg.theta);

    ScoreBreakdown b;
    b.sim = sim;
    b.rel_end = rel_end;
    b.rel_cloud = rel_cloud;
    b.alpha = cfg.alpha;
    b.theta = cfg.theta;
    b.theta_fallback_applied = rel_cloud < cfg.theta;
    if (b.theta_fallback_applied) {
        b.final_score = sim;
    } else {
        b.final_score = std::clamp(cfg.alpha * sim + (1.0 - cfg.alpha) * rel_end, 0.0, 1.0);
    }
    return b;
}

ScoreBreakdown evaluate_response(std::string_view query, std::string_view end_out, std::string_view cloud_out,
                                 const EvalConfig& cfg, const TextScorer& sim_scorer, const TextScorer& rel_scorer) {
    if (clean_text(query).empty()) throw ScoringError("query is empty");
    const double sim = sim_scorer.score(end_out, cloud_out);
    const double rel_end = rel_scorer.score(query, end_out);
    const double rel_cloud = rel_scorer.score(query, cloud_out);
    return combine_scores(sim, rel_end, rel_cloud, cfg);
}

}  // namespace ecc
