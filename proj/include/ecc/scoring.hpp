#pragma once

#include "ecc/config.hpp"
#include "ecc/embedding.hpp"

#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ecc {

/// Automated evaluation of one end-model answer.
///
/// `sim` compares the end answer with the cloud answer, `rel_end` and
/// `rel_cloud` match the query against each answer. When the cloud answer's
/// own relevance falls strictly below theta the relevance model is considered
/// unreliable for this query and `final` is the similarity alone; otherwise
/// final = alpha * sim + (1 - alpha) * rel_end.
struct ScoreBreakdown {
    double sim = 0.0;
    double rel_end = 0.0;
    double rel_cloud = 0.0;
    double alpha = 0.0;
    double theta = 0.0;
    bool theta_fallback_applied = false;
    double final_score = 0.0;

    bool operator==(const ScoreBreakdown&) const = default;
};

class ScoringError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Two strings in, a score in [0,1] out. For relevance scorers the first
/// argument is always the query.
class TextScorer {
public:
    virtual ~TextScorer() = default;
    virtual double score(std::string_view a, std::string_view b) const = 0;
    virtual std::string name() const = 0;
};

/// Cosine of hashed character n-gram term frequencies. Empty input scores 0,
/// clean-equal nonempty inputs score 1.
class NgramCosineScorer : public TextScorer {
public:
    explicit NgramCosineScorer(std::size_t n = kDefaultNgram, std::size_t dims = kDefaultEmbeddingDims)
        : n_(n), dims_(dims) {}
    double score(std::string_view a, std::string_view b) const override;
    std::string name() const override { return "ngram-cosine"; }

private:
    std::size_t n_;
    std::size_t dims_;
};

/// Lookup table keyed on the exact (a, b) argument pair; anything not in the
/// table goes to the fallback scorer (or `default_score` when there is none).
class TableScorer : public TextScorer {
public:
    TableScorer(std::map<std::pair<std::string, std::string>, double> table, std::shared_ptr<const TextScorer> fallback,
                double default_score = 0.0);
    double score(std::string_view a, std::string_view b) const override;
    std::string name() const override { return "table"; }

private:
    std::map<std::pair<std::string, std::string>, double, std::less<>> table_;
    std::shared_ptr<const TextScorer> fallback_;
    double default_score_;
};

/// Wraps any callable; used for ad-hoc scripted scorers.
class FunctionScorer : public TextScorer {
public:
    FunctionScorer(std::string name, std::function<double(std::string_view, std::string_view)> fn)
        : name_(std::move(name)), fn_(std::move(fn)) {}
    double score(std::string_view a, std::string_view b) const override { return fn_(a, b); }
    std::string name() const override { return name_; }

private:
    std::string name_;
    std::function<double(std::string_view, std::string_view)> fn_;
};

/// Name -> factory registry backing `scorer.similarity` / `scorer.relevance`.
class ScorerRegistry {
public:
    using Factory = std::function<std::shared_ptr<const TextScorer>()>;

    /// Registry with the built-in "ngram-cosine" (bigrams) and "ngram-cosine-3".
    static ScorerRegistry with_builtins();

    void add(const std::string& name, Factory factory);
    std::shared_ptr<const TextScorer> create(const std::string& name) const;
    bool contains(const std::string& name) const { return factories_.count(name) > 0; }
    std::vector<std::string> names() const;

private:
    std::map<std::string, Factory> factories_;
};

double similarity_score(std::string_view a, std::string_view b);
double relevance_score(std::string_view query, std::string_view response);

/// Throws ScoringError when any score, alpha or theta lies outside [0,1].
ScoreBreakdown combine_scores(double sim, double rel_end, double rel_cloud, const EvalConfig& cfg);

ScoreBreakdown evaluate_response(std::string_view query, std::string_view end_out, std::string_view cloud_out,
                                 const EvalConfig& cfg, const TextScorer& sim_scorer, const TextScorer& rel_scorer);

}  // namespace ecc
