#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "batchlens/calibration.hpp"
#include "batchlens/imaging.hpp"
#include "batchlens/selection.hpp"
#include "batchlens/toy_inpainter.hpp"

namespace batchlens::harness {

enum class MaskMode { regular, irregular };
std::string to_string(MaskMode m);
MaskMode parse_mask_mode(const std::string& s);

struct Dataset {
    std::vector<Image> train;
    std::vector<Image> test;
};

struct TrainConfig {
    selection::SelectorConfig selector;
    int iterations = 2000;
    int test_every = 20;
    double learning_rate = 0.005;
    int kernel = 5;
    MaskMode mask_mode = MaskMode::regular;
    double mask_ratio = 0.25;  // irregular masks only
    std::optional<calibration::DbscanParams> dbscan;

    void validate() const;
};

struct TrainRecord {
    size_t iteration = 0;
    double train_loss = 0.0;
    std::optional<double> test_loss;  // set every test_every iterations and on the last one
    selection::Method method = selection::Method::random;
    std::optional<double> pivot;
    double score_seconds = 0.0;
    double select_seconds = 0.0;
    double update_seconds = 0.0;
    double total_seconds = 0.0;
};

struct TrainResult {
    std::vector<TrainRecord> records;
    ToyInpainter model;
};

using DecisionObserver = std::function<void(const selection::SelectionDecision&)>;

/// Mask for sample `index` in `epoch`; regular masks ignore both.
Mask sample_mask(const Image& img, MaskMode mode, double ratio, uint64_t seed, size_t epoch, size_t index);

/// Test split with its fixed masks, prepared for a given stencil size.
std::vector<PreparedSample> prepare_split(const std::vector<Image>& images, MaskMode mode, double ratio,
                                          uint64_t seed, int kernel);

double mean_loss(const ToyInpainter& model, const std::vector<PreparedSample>& samples);

/// Big-batch selection training of the toy inpainter. Each iteration runs a
/// selection round, then one gradient step on masked L1 over the b chosen
/// samples. The proposed method recalibrates its pivot from the first big
/// batch of every epoch. Irregular masks are redrawn each epoch. Throws if
/// the training loss exceeds 10x its initial value.
TrainResult train(const Dataset& data, const TrainConfig& config, selection::Method method,
                  const DecisionObserver& observer = {});

/// Mean of test losses recorded at iterations < limit.
double early_test_loss(const std::vector<TrainRecord>& records, size_t limit);
double final_test_loss(const std::vector<TrainRecord>& records);

struct CorrelationPair {
    double loss;
    double complexity;  // raw total variation of the missing region
};

struct CorrelationStudy {
    std::vector<CorrelationPair> pairs;
    std::optional<double> pearson;  // unset when either variable has zero variance
};

std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

CorrelationStudy correlation_study(const ToyInpainter& model, const std::vector<PreparedSample>& samples);

struct QualitySummary {
    double psnr = 0.0;  // mean over samples with finite PSNR
    double ssim = 0.0;
};

QualitySummary evaluate_quality(const ToyInpainter& model, const std::vector<PreparedSample>& samples);

struct RatioRow {
    double ratio = 1.0;
    int big_batch = 0;
    double final_test_loss = 0.0;
    double early_test_loss = 0.0;
    double psnr = 0.0;
    double ssim = 0.0;
    double seconds_per_iteration = 0.0;  // median total
};

std::vector<RatioRow> sweep_ratio(const Dataset& data, const TrainConfig& config, const std::vector<double>& ratios,
                                  selection::Method method = selection::Method::proposed);

struct TimingRow {
    selection::Method method = selection::Method::random;
    double score_seconds = 0.0;  // medians per iteration
    double select_seconds = 0.0;
    double update_seconds = 0.0;
    double total_seconds = 0.0;
    double overhead = 0.0;  // total / random total - 1; 0 when random is absent
};

/// Runs each method for `config.iterations` (at least 50) iterations after
/// `warmup` untimed ones, `repeats` times with the methods interleaved, and
/// reports per-phase medians over all timed iterations.
std::vector<TimingRow> timing_study(const Dataset& data, const TrainConfig& config,
                                    const std::vector<selection::Method>& methods, int warmup = 20,
                                    int repeats = 3);

double median(std::vector<double> v);

struct BiasStudyConfig {
    size_t pool = 1024;
    int b = 16;
    double ratio = 2.0;
    int rounds = 100;
    double noise = 0.05;  // loss noise sigma as a fraction of the complexity range
    uint64_t seed = 0;
};

struct BiasRow {
    selection::Method method = selection::Method::random;
    double mean_deciles = 0.0;     // distinct pool complexity deciles among the chosen b, per round
    double mean_complexity = 0.0;  // of the chosen samples
};

/// Synthetic pool with complexity uniform on [0,1] and
/// loss = max(0, complexity + N(0, noise)). Each method runs `rounds`
/// selection rounds on it; the proposed pivot is calibrated once on the
/// whole pool. Every method sees the same pool and its own RNG stream
/// seeded from `seed`.
std::vector<BiasRow> bias_study(const BiasStudyConfig& config, const std::vector<selection::Method>& methods);

/// Decile (0-9) of every pool sample by rank of its value.
std::vector<int> quantile_deciles(std::span<const double> values);

}  // namespace batchlens::harness
