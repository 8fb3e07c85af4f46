#include "batchlens/harness.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "batchlens/complexity.hpp"
#include "batchlens/quality.hpp"

namespace batchlens::harness {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

uint64_t splitmix(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr uint64_t kTestMaskSalt = 0x7465737473706c74ULL;

}  // namespace

std::string to_string(MaskMode m) { return m == MaskMode::regular ? "regular" : "irregular"; }

MaskMode parse_mask_mode(const std::string& s) {
    if (s == "regular") return MaskMode::regular;
    if (s == "irregular") return MaskMode::irregular;
    throw std::invalid_argument("unknown mask mode '" + s + "'");
}

void TrainConfig::validate() const {
    selector.validate();
    if (iterations < 1) throw std::invalid_argument("iterations must be positive");
    if (test_every < 1) throw std::invalid_argument("test cadence must be positive");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        throw std::invalid_argument("learning rate must be non-negative");
    if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("stencil size must be odd and positive");
    if (!(mask_ratio > 0.0 && mask_ratio < 1.0)) throw std::invalid_argument("mask ratio must lie in (0,1)");
    if (dbscan) dbscan->validate();
}

Mask sample_mask(const Image& img, MaskMode mode, double ratio, uint64_t seed, size_t epoch, size_t index) {
    if (mode == MaskMode::regular) return imaging::regular_mask(img.height, img.width);
    const uint64_t s = splitmix(splitmix(splitmix(seed) ^ epoch) ^ index);
    return imaging::irregular_mask(img.height, img.width, ratio, s);
}

std::vector<PreparedSample> prepare_split(const std::vector<Image>& images, MaskMode mode, double ratio,
                                          uint64_t seed, int kernel) {
    std::vector<PreparedSample> out;
    out.reserve(images.size());
    for (size_t i = 0; i < images.size(); ++i)
        out.emplace_back(images[i], sample_mask(images[i], mode, ratio, seed ^ kTestMaskSalt, 0, i), kernel);
    return out;
}

double mean_loss(const ToyInpainter& model, const std::vector<PreparedSample>& samples) {
    if (samples.empty()) throw std::invalid_argument("empty evaluation split");
    double sum = 0;
    for (const auto& s : samples) sum += model.loss(s);
    return sum / static_cast<double>(samples.size());
}

TrainResult train(const Dataset& data, const TrainConfig& config, selection::Method method,
                  const DecisionObserver& observer) {
    using selection::Method;
    config.validate();
    const auto& sel = config.selector;
    const size_t n = data.train.size();
    if (n == 0 || data.test.empty()) throw std::invalid_argument("training needs non-empty train and test splits");
    const size_t needed = method == Method::random ? static_cast<size_t>(sel.b) : static_cast<size_t>(sel.big_batch());
    if (n < needed)
        throw std::invalid_argument("training split of " + std::to_string(n) + " is smaller than the big batch " +
                                    std::to_string(needed));

    const int channels = data.train.front().channels;
    for (const auto& img : data.train)
        if (img.channels != channels) throw std::invalid_argument("training images must share a channel count");

    TrainResult result{{}, ToyInpainter(channels, config.kernel, config.learning_rate)};
    ToyInpainter& model = result.model;
    const auto test = prepare_split(data.test, config.mask_mode, config.mask_ratio, sel.seed, config.kernel);

    const size_t per_epoch = std::max<size_t>(1, n / static_cast<size_t>(sel.b));
    std::vector<std::optional<PreparedSample>> prepared(n);
    std::vector<std::optional<complexity::MetricValues>> metrics(n);
    size_t epoch = 0;

    auto prep = [&](size_t i) -> const PreparedSample& {
        if (!prepared[i])
            prepared[i].emplace(data.train[i],
                                sample_mask(data.train[i], config.mask_mode, config.mask_ratio, sel.seed, epoch, i),
                                config.kernel);
        return *prepared[i];
    };
    auto metric = [&](size_t i) {
        if (!metrics[i]) {
            const auto& s = prep(i);
            metrics[i] = complexity::raw_metrics(imaging::to_grayscale(*s.truth), s.mask);
        }
        return *metrics[i];
    };

    // Forward passes from scoring, reused by the update of the same iteration.
    std::vector<std::vector<double>> forward(n);
    std::vector<size_t> forward_touched;

    double score_time = 0;
    selection::SamplePool pool;
    pool.size = n;
    if (method != Method::random) {
        pool.loss = [&](size_t i) {
            const auto t0 = Clock::now();
            const double l = model.loss(prep(i), &forward[i]);
            forward_touched.push_back(i);
            score_time += seconds_since(t0);
            return l;
        };
    }
    if (method == Method::proposed) {
        pool.metrics = [&](size_t i) {
            const auto t0 = Clock::now();
            const auto m = metric(i);
            score_time += seconds_since(t0);
            return m;
        };
    }

    selection::Rng rng(sel.seed);
    selection::RoundOptions options;
    options.dbscan = config.dbscan;
    double initial_loss = -1;
    std::vector<const PreparedSample*> batch;
    std::vector<const std::vector<double>*> cached;
    std::vector<double> grad;
    result.records.reserve(config.iterations);

    for (size_t it = 0; it < static_cast<size_t>(config.iterations); ++it) {
        const auto t_iter = Clock::now();
        score_time = 0;
        if (it == 0 || it / per_epoch != epoch) {
            epoch = it / per_epoch;
            options.pivot.reset();
            if (config.mask_mode == MaskMode::irregular && it != 0) {
                for (auto& p : prepared) p.reset();
                for (auto& m : metrics) m.reset();
            }
            if (method == Method::proposed && sel.normalization == selection::Normalization::dataset) {
                const auto t0 = Clock::now();
                std::vector<complexity::MetricValues> all;
                all.reserve(n);
                for (size_t i = 0; i < n; ++i) all.push_back(metric(i));
                options.ranges = complexity::MetricRanges::of(all);
                score_time += seconds_since(t0);
            }
        }

        const auto t_round = Clock::now();
        const auto decision = selection::run_selection_round(pool, sel, method, rng, it, options);
        const double round_time = seconds_since(t_round);
        if (method == Method::proposed && !options.pivot) options.pivot = decision.pivot;
        if (observer) observer(decision);

        const auto t_update = Clock::now();
        batch.clear();
        cached.clear();
        for (size_t id : decision.chosen_ids) {
            batch.push_back(&prep(id));
            cached.push_back(forward[id].empty() ? nullptr : &forward[id]);
        }
        const double train_loss = model.loss_and_gradient(batch, grad, cached);
        model.step(grad);
        for (size_t id : forward_touched) forward[id].clear();
        forward_touched.clear();
        const double update_time = seconds_since(t_update);

        TrainRecord rec;
        rec.iteration = it;
        rec.train_loss = train_loss;
        rec.method = method;
        rec.pivot = decision.pivot;
        rec.score_seconds = score_time;
        rec.select_seconds = std::max(0.0, round_time - score_time);
        rec.update_seconds = update_time;
        rec.total_seconds = seconds_since(t_iter);

        if (initial_loss < 0) initial_loss = train_loss;
        if (initial_loss > 0 && train_loss > 10.0 * initial_loss)
            throw std::runtime_error("training diverged at iteration " + std::to_string(it) + ": loss " +
                                     std::to_string(train_loss) + " exceeds 10x the initial " +
                                     std::to_string(initial_loss));

        if (it % static_cast<size_t>(config.test_every) == 0 || it + 1 == static_cast<size_t>(config.iterations))
            rec.test_loss = mean_loss(model, test);
        result.records.push_back(rec);
    }
    return result;
}

double early_test_loss(const std::vector<TrainRecord>& records, size_t limit) {
    double sum = 0;
    size_t n = 0;
    for (const auto& r : records)
        if (r.iteration < limit && r.test_loss) {
            sum += *r.test_loss;
            ++n;
        }
    if (n == 0) throw std::invalid_argument("no test evaluations before iteration " + std::to_string(limit));
    return sum / static_cast<double>(n);
}

double final_test_loss(const std::vector<TrainRecord>& records) {
    for (auto it = records.rbegin(); it != records.rend(); ++it)
        if (it->test_loss) return *it->test_loss;
    throw std::invalid_argument("no test evaluations recorded");
}

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("correlation inputs differ in length");
    if (a.size() < 2) return std::nullopt;
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa <= 0 || sbb <= 0) return std::nullopt;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

CorrelationStudy correlation_study(const ToyInpainter& model, const std::vector<PreparedSample>& samples) {
    CorrelationStudy out;
    std::vector<double> losses, tvs;
    for (const auto& s : samples) {
        const double l = model.loss(s);
        const double tv = complexity::total_variation(imaging::to_grayscale(*s.truth), s.mask);
        out.pairs.push_back({l, tv});
        losses.push_back(l);
        tvs.push_back(tv);
    }
    out.pearson = pearson(losses, tvs);
    return out;
}

QualitySummary evaluate_quality(const ToyInpainter& model, const std::vector<PreparedSample>& samples) {
    if (samples.empty()) throw std::invalid_argument("empty evaluation split");
    double psnr_sum = 0, ssim_sum = 0;
    size_t finite = 0;
    for (const auto& s : samples) {
        const auto q = quality::evaluate(model.inpaint(s), *s.truth);
        if (std::isfinite(q.psnr)) {
            psnr_sum += q.psnr;
            ++finite;
        }
        ssim_sum += q.ssim;
    }
    return {finite ? psnr_sum / static_cast<double>(finite) : quality::kPsnrIdentical,
            ssim_sum / static_cast<double>(samples.size())};
}

double median(std::vector<double> v) {
    if (v.empty()) throw std::invalid_argument("median of an empty list");
    std::sort(v.begin(), v.end());
    const size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

std::vector<RatioRow> sweep_ratio(const Dataset& data, const TrainConfig& config, const std::vector<double>& ratios,
                                  selection::Method method) {
    std::vector<RatioRow> rows;
    const auto test = prepare_split(data.test, config.mask_mode, config.mask_ratio, config.selector.seed, config.kernel);
    for (double r : ratios) {
        if (!(r >= 1.0 && r <= 4.0)) throw std::invalid_argument("big batch ratios must lie in [1, 4]");
        TrainConfig cfg = config;
        cfg.selector.big_batch_ratio = r;
        const auto res = train(data, cfg, method);
        std::vector<double> totals;
        for (const auto& rec : res.records) totals.push_back(rec.total_seconds);
        const auto q = evaluate_quality(res.model, test);
        rows.push_back({r, cfg.selector.big_batch(), final_test_loss(res.records),
                        early_test_loss(res.records, std::min<size_t>(500, res.records.size())), q.psnr, q.ssim,
                        median(totals)});
    }
    return rows;
}

std::vector<TimingRow> timing_study(const Dataset& data, const TrainConfig& config,
                                    const std::vector<selection::Method>& methods, int warmup, int repeats) {
    if (repeats < 1) throw std::invalid_argument("timing needs at least one repeat");
    TrainConfig cfg = config;
    cfg.iterations = std::max(50, config.iterations) + std::max(0, warmup);
    cfg.test_every = cfg.iterations;  // keep evaluation out of the loop
    // Methods take turns within each repeat so slow drifts in machine load hit all of them alike.
    std::vector<std::array<std::vector<double>, 4>> phases(methods.size());
    for (int rep = 0; rep < repeats; ++rep)
        for (size_t k = 0; k < methods.size(); ++k) {
            const auto res = train(data, cfg, methods[k]);
            for (size_t i = static_cast<size_t>(std::max(0, warmup)); i < res.records.size(); ++i) {
                const auto& r = res.records[i];
                phases[k][0].push_back(r.score_seconds);
                phases[k][1].push_back(r.select_seconds);
                phases[k][2].push_back(r.update_seconds);
                phases[k][3].push_back(r.total_seconds);
            }
        }
    std::vector<TimingRow> rows;
    for (size_t k = 0; k < methods.size(); ++k)
        rows.push_back({methods[k], median(phases[k][0]), median(phases[k][1]), median(phases[k][2]),
                        median(phases[k][3]), 0.0});
    auto base = std::find_if(rows.begin(), rows.end(), [](const TimingRow& r) { return r.method == selection::Method::random; });
    if (base != rows.end() && base->total_seconds > 0)
        for (auto& r : rows) r.overhead = r.total_seconds / base->total_seconds - 1.0;
    return rows;
}

}  // namespace batchlens::harness
