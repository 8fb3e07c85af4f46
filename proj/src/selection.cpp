#include "batchlens/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace batchlens::selection {

std::string to_string(Method m) {
    switch (m) {
        case Method::proposed: return "proposed";
        case Method::fan: return "fan";
        case Method::kawaguchi: return "kawaguchi";
        case Method::jiang: return "jiang";
        case Method::random: return "random";
    }
    return "?";
}

std::string to_string(Rule r) {
    switch (r) {
        case Rule::topk: return "topk";
        case Rule::fan: return "fan";
        case Rule::jiang: return "jiang";
    }
    return "?";
}

std::string to_string(Normalization n) { return n == Normalization::batch ? "batch" : "dataset"; }

Method parse_method(const std::string& s) {
    for (Method m : {Method::proposed, Method::fan, Method::kawaguchi, Method::jiang, Method::random})
        if (to_string(m) == s) return m;
    throw std::invalid_argument("unknown selection method '" + s + "'");
}

Rule parse_rule(const std::string& s) {
    for (Rule r : {Rule::topk, Rule::fan, Rule::jiang})
        if (to_string(r) == s) return r;
    throw std::invalid_argument("unknown selection rule '" + s + "'");
}

Normalization parse_normalization(const std::string& s) {
    if (s == "batch") return Normalization::batch;
    if (s == "dataset") return Normalization::dataset;
    throw std::invalid_argument("unknown normalization scope '" + s + "'");
}

int SelectorConfig::big_batch() const {
    return static_cast<int>(std::ceil(big_batch_ratio * b - 1e-9));
}

void SelectorConfig::validate() const {
    if (b < 1) throw std::invalid_argument("mini-batch size b must be at least 1");
    if (!(big_batch_ratio >= 1.0) || !std::isfinite(big_batch_ratio))
        throw std::invalid_argument("big batch ratio must be >= 1");
    if (!(delta > 0.0) || !std::isfinite(delta)) throw std::invalid_argument("delta must be positive");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("beta must be positive");
    weights.validate();
}

double proposed_denominator(double complexity, double pivot, double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
    return std::max(std::abs(complexity - pivot), delta);
}

double score_proposed(double loss, double complexity, double pivot, double delta) {
    if (!(loss >= 0.0) || !std::isfinite(loss)) throw std::invalid_argument("loss must be finite and non-negative");
    return loss / proposed_denominator(complexity, pivot, delta);
}

std::vector<size_t> select_topk(std::span<const double> scores, size_t b) {
    if (b > scores.size())
        throw std::invalid_argument("cannot select " + std::to_string(b) + " of " + std::to_string(scores.size()) +
                                    " samples");
    std::vector<size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), size_t{0});
    auto better = [&](size_t a, size_t c) { return scores[a] > scores[c] || (scores[a] == scores[c] && a < c); };
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(b), idx.end(), better);
    idx.resize(b);
    return idx;
}

JiangDraw select_jiang(std::span<const double> scores, double beta, Rng& rng) {
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
    const size_t n = scores.size();
    JiangDraw out{std::vector<double>(n), std::vector<bool>(n)};
    if (n == 0) return out;
    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (size_t i = 0; i < n; ++i) {
        const auto rank = std::upper_bound(sorted.begin(), sorted.end(), scores[i]) - sorted.begin();
        const double cdf = static_cast<double>(rank) / static_cast<double>(n);
        out.probabilities[i] = std::pow(cdf, beta);
        out.keep[i] = unit(rng) < out.probabilities[i];
    }
    return out;
}

std::vector<size_t> jiang_batch(std::span<const double> scores, size_t b, double beta, Rng& rng) {
    if (b > scores.size())
        throw std::invalid_argument("cannot select " + std::to_string(b) + " of " + std::to_string(scores.size()) +
                                    " samples");
    const JiangDraw draw = select_jiang(scores, beta, rng);
    std::vector<size_t> chosen;
    std::vector<size_t> rejects;
    for (size_t i = 0; i < scores.size(); ++i) {
        if (draw.keep[i] && chosen.size() < b) {
            chosen.push_back(i);
        } else if (!draw.keep[i]) {
            rejects.push_back(i);
        }
    }
    if (chosen.size() < b) {
        std::stable_sort(rejects.begin(), rejects.end(),
                         [&](size_t a, size_t c) { return draw.probabilities[a] > draw.probabilities[c]; });
        for (size_t i = 0; chosen.size() < b; ++i) chosen.push_back(rejects[i]);
    }
    return chosen;
}

std::vector<size_t> draw_subset(size_t n, size_t k, Rng& rng) {
    if (k > n) throw std::invalid_argument("pool of " + std::to_string(n) + " is smaller than batch " + std::to_string(k));
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), size_t{0});
    for (size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<size_t> pick(i, n - 1);
        std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(k);
    return idx;
}

namespace {

std::vector<double> complexities_of(const SamplePool& pool, const std::vector<size_t>& ids,
                                    const SelectorConfig& config, const RoundOptions& options) {
    if (!pool.metrics) throw std::invalid_argument("selection method needs a complexity callback");
    std::vector<complexity::MetricValues> raw;
    raw.reserve(ids.size());
    for (size_t id : ids) raw.push_back(pool.metrics(id));

    std::vector<double> out;
    out.reserve(ids.size());
    if (config.normalization == Normalization::dataset) {
        if (!options.ranges) throw std::invalid_argument("dataset normalization needs precomputed ranges");
        for (const auto& r : raw) out.push_back(complexity::combine(options.ranges->normalize(r), config.weights));
    } else {
        for (const auto& p : complexity::profile_population(raw, config.weights)) out.push_back(p.combined);
    }
    return out;
}

std::vector<double> losses_of(const SamplePool& pool, const std::vector<size_t>& ids) {
    if (!pool.loss) throw std::invalid_argument("selection method needs a loss callback");
    std::vector<double> out;
    out.reserve(ids.size());
    for (size_t id : ids) {
        const double l = pool.loss(id);
        if (!(l >= 0.0) || !std::isfinite(l)) throw std::invalid_argument("loss callback returned an invalid loss");
        out.push_back(l);
    }
    return out;
}

std::vector<size_t> to_pool_ids(const std::vector<size_t>& positions, const std::vector<size_t>& subset) {
    std::vector<size_t> out;
    out.reserve(positions.size());
    for (size_t p : positions) out.push_back(subset[p]);
    return out;
}

}  // namespace

SelectionDecision run_selection_round(const SamplePool& pool, const SelectorConfig& config, Method method, Rng& rng,
                                      size_t iteration, const RoundOptions& options) {
    config.validate();
    const size_t b = static_cast<size_t>(config.b);
    const bool whole_pool = method == Method::fan || (method == Method::proposed && config.rule == Rule::fan);
    const size_t big = method == Method::random ? b : whole_pool ? pool.size : static_cast<size_t>(config.big_batch());
    if (pool.size < big || pool.size < b)
        throw std::invalid_argument("pool of " + std::to_string(pool.size) + " samples is smaller than the batch of " +
                                    std::to_string(std::max(big, b)));

    SelectionDecision d;
    d.iteration = iteration;
    d.method = method;
    if (whole_pool) {
        d.subset_ids.resize(pool.size);
        std::iota(d.subset_ids.begin(), d.subset_ids.end(), size_t{0});
    } else {
        d.subset_ids = draw_subset(pool.size, big, rng);
    }

    switch (method) {
        case Method::random: {
            if (pool.loss) d.losses = losses_of(pool, d.subset_ids);
            if (pool.metrics) d.complexities = complexities_of(pool, d.subset_ids, config, options);
            d.scores = d.losses.empty() ? std::vector<double>(d.subset_ids.size(), 0.0) : d.losses;
            d.chosen_ids.assign(d.subset_ids.begin(), d.subset_ids.begin() + static_cast<std::ptrdiff_t>(b));
            break;
        }
        case Method::fan:
        case Method::kawaguchi: {
            d.losses = losses_of(pool, d.subset_ids);
            if (pool.metrics) d.complexities = complexities_of(pool, d.subset_ids, config, options);
            d.scores = d.losses;
            d.chosen_ids = to_pool_ids(select_topk(d.scores, b), d.subset_ids);
            break;
        }
        case Method::jiang: {
            d.losses = losses_of(pool, d.subset_ids);
            if (pool.metrics) d.complexities = complexities_of(pool, d.subset_ids, config, options);
            d.scores = d.losses;
            d.chosen_ids = to_pool_ids(jiang_batch(d.scores, b, config.beta, rng), d.subset_ids);
            break;
        }
        case Method::proposed: {
            d.losses = losses_of(pool, d.subset_ids);
            d.complexities = complexities_of(pool, d.subset_ids, config, options);
            const double pivot =
                options.pivot ? *options.pivot : calibration::estimate_pivot(d.complexities, options.dbscan).pivot;
            d.pivot = pivot;
            d.denominators.reserve(d.subset_ids.size());
            d.scores.reserve(d.subset_ids.size());
            for (size_t i = 0; i < d.subset_ids.size(); ++i) {
                const double den = proposed_denominator(d.complexities[i], pivot, config.delta);
                const double s = d.losses[i] / den;
                if (!(den >= config.delta) || !std::isfinite(s))
                    throw std::logic_error("proposed score violated the delta floor");
                d.denominators.push_back(den);
                d.scores.push_back(s);
            }
            const auto positions =
                config.rule == Rule::jiang ? jiang_batch(d.scores, b, config.beta, rng) : select_topk(d.scores, b);
            d.chosen_ids = to_pool_ids(positions, d.subset_ids);
            break;
        }
    }
    return d;
}

}  // namespace batchlens::selection
