#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "batchlens/calibration.hpp"
#include "batchlens/complexity.hpp"

namespace batchlens::selection {

using Rng = std::mt19937_64;

enum class Method { proposed, fan, kawaguchi, jiang, random };

/// Selection function applied to the proposed ratio score.
enum class Rule {
    topk,   // b largest within the big batch
    fan,    // b largest over the whole pool
    jiang,  // CDF^beta keep draw within the big batch
};

/// Population over which complexity metrics are min-max normalized.
enum class Normalization { batch, dataset };

std::string to_string(Method m);
std::string to_string(Rule r);
std::string to_string(Normalization n);
Method parse_method(const std::string& s);
Rule parse_rule(const std::string& s);
Normalization parse_normalization(const std::string& s);

struct SelectorConfig {
    int b = 16;
    double big_batch_ratio = 2.0;  // B = ceil(ratio * b)
    double delta = 0.01;
    double beta = 1.0;
    complexity::Weights weights{0.0, 0.0, 1.0};
    uint64_t seed = 0;
    Rule rule = Rule::topk;
    Normalization normalization = Normalization::batch;

    int big_batch() const;
    void validate() const;
};

/// loss / max(|complexity - pivot|, delta).
double score_proposed(double loss, double complexity, double pivot, double delta);

/// Denominator of score_proposed.
double proposed_denominator(double complexity, double pivot, double delta);

/// Indices of the b largest scores, ties to the lower index; the result is
/// ordered by descending score.
std::vector<size_t> select_topk(std::span<const double> scores, size_t b);

struct JiangDraw {
    std::vector<double> probabilities;  // CDF(s)^beta
    std::vector<bool> keep;
};

/// Empirical CDF over the population (max rank on ties), raised to beta,
/// then one Bernoulli keep draw per sample.
JiangDraw select_jiang(std::span<const double> scores, double beta, Rng& rng);

/// Batch form of the Jiang rule: the first b survivors in input order; if
/// fewer than b survive, the rejects with the highest keep probability fill
/// the remainder.
std::vector<size_t> jiang_batch(std::span<const double> scores, size_t b, double beta, Rng& rng);

/// Uniform draw of k distinct indices from [0, n) by partial Fisher-Yates.
/// The first j < k entries equal those of a draw of size j.
std::vector<size_t> draw_subset(size_t n, size_t k, Rng& rng);

/// Callbacks giving per-sample loss and raw complexity metrics. Either may
/// be left empty for methods that do not need it.
struct SamplePool {
    size_t size = 0;
    std::function<double(size_t)> loss;
    std::function<complexity::MetricValues(size_t)> metrics;
};

struct SelectionDecision {
    size_t iteration = 0;
    Method method = Method::random;
    std::vector<size_t> subset_ids;
    std::vector<double> losses;        // aligned with subset_ids; empty if not computed
    std::vector<double> complexities;  // aligned with subset_ids; empty if not computed
    std::vector<double> denominators;  // proposed only
    std::vector<double> scores;        // aligned with subset_ids
    std::vector<size_t> chosen_ids;
    std::optional<double> pivot;       // the pivot used (proposed only)
};

struct RoundOptions {
    /// Fixed pivot. When unset a proposed round calibrates on its own big batch.
    std::optional<double> pivot;
    /// Dataset-scope normalization ranges, used when normalization = dataset.
    std::optional<complexity::MetricRanges> ranges;
    std::optional<calibration::DbscanParams> dbscan;
};

/// One iteration of big-batch selection: draw B samples (b for random, the
/// whole pool for fan), score them, keep b.
SelectionDecision run_selection_round(const SamplePool& pool, const SelectorConfig& config, Method method,
                                      Rng& rng, size_t iteration, const RoundOptions& options = {});

}  // namespace batchlens::selection
