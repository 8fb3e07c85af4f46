#include <algorithm>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

#include "batchlens/harness.hpp"

namespace batchlens::harness {

std::vector<int> quantile_deciles(std::span<const double> values) {
    const size_t n = values.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) { return values[a] < values[b]; });
    std::vector<int> out(n);
    for (size_t r = 0; r < n; ++r) out[order[r]] = static_cast<int>(10 * r / n);
    return out;
}

std::vector<BiasRow> bias_study(const BiasStudyConfig& config, const std::vector<selection::Method>& methods) {
    if (config.rounds < 1) throw std::invalid_argument("bias study needs at least one round");
    if (!(config.noise >= 0.0)) throw std::invalid_argument("noise must be non-negative");

    selection::Rng pool_rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> c(config.pool), loss(config.pool);
    for (double& v : c) v = unit(pool_rng);
    const auto [lo, hi] = std::minmax_element(c.begin(), c.end());
    std::normal_distribution<double> noise(0.0, config.noise * (*hi - *lo));
    for (size_t i = 0; i < config.pool; ++i) loss[i] = std::max(0.0, c[i] + noise(pool_rng));
    const auto deciles = quantile_deciles(c);

    selection::SamplePool pool;
    pool.size = config.pool;
    pool.loss = [&](size_t i) { return loss[i]; };
    pool.metrics = [&](size_t i) { return complexity::MetricValues{0.0, 0.0, c[i]}; };

    std::vector<complexity::MetricValues> raw;
    for (double v : c) raw.push_back({0.0, 0.0, v});
    selection::RoundOptions options;
    options.ranges = complexity::MetricRanges::of(raw);
    std::vector<double> normed;
    for (const auto& r : raw) normed.push_back(options.ranges->normalize(r).tv);
    options.pivot = calibration::estimate_pivot(normed).pivot;

    selection::SelectorConfig sel;
    sel.b = config.b;
    sel.big_batch_ratio = config.ratio;
    sel.normalization = selection::Normalization::dataset;

    std::vector<BiasRow> rows;
    for (auto method : methods) {
        selection::Rng rng(config.seed ^ 0x5eedULL);
        BiasRow row{method, 0.0, 0.0};
        for (int r = 0; r < config.rounds; ++r) {
            const auto d = selection::run_selection_round(pool, sel, method, rng, static_cast<size_t>(r), options);
            std::set<int> seen;
            for (size_t id : d.chosen_ids) {
                seen.insert(deciles[id]);
                row.mean_complexity += c[id];
            }
            row.mean_deciles += static_cast<double>(seen.size());
        }
        row.mean_deciles /= config.rounds;
        row.mean_complexity /= static_cast<double>(config.rounds) * config.b;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace batchlens::harness
