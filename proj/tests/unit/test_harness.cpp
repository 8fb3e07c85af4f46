#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "batchlens/harness.hpp"
#include "batchlens/synthetic.hpp"
#include "batchlens/toy_inpainter.hpp"
#include "oracles.hpp"

using namespace batchlens;
using namespace batchlens::harness;
using selection::Method;

namespace {

Dataset small_dataset(uint64_t seed, int train = 96, int test = 24) {
    SyntheticSpec spec;
    spec.count = train;
    spec.size = 16;
    Dataset d{synthetic_images(spec, seed), {}};
    spec.count = test;
    d.test = synthetic_images(spec, seed + 1000);
    return d;
}

TrainConfig quick_config(int iterations = 60) {
    TrainConfig cfg;
    cfg.iterations = iterations;
    cfg.selector.b = 8;
    cfg.test_every = 10;
    return cfg;
}

}  // namespace

TEST(MaskedL1, IdentityOffsetAndGating) {
    std::mt19937_64 rng(1);
    const auto truth = oracle::random_image(8, 8, 3, rng);
    const auto mask = imaging::regular_mask(8, 8);
    EXPECT_EQ(masked_l1_loss(truth, truth, mask), 0.0);

    auto pred = truth;
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            for (int c = 0; c < 3; ++c) {
                if (mask.missing(y, x))
                    pred.at(y, x, c) += 0.1;
                else
                    pred.at(y, x, c) = 1.0 - pred.at(y, x, c);  // observed errors must not count
            }
    EXPECT_NEAR(masked_l1_loss(pred, truth, mask), 0.1, 1e-12);
    EXPECT_THROW(masked_l1_loss(truth, truth, imaging::Mask(8, 8, 1)), std::invalid_argument);
}

TEST(CoarseFill, KeepsObservedAndFillsConstantHoles) {
    imaging::Image img(8, 8, 1, 0.4);
    const auto mask = imaging::regular_mask(8, 8);
    img.at(3, 3) = 0.9;  // inside the hole; must be ignored
    const auto filled = coarse_fill(img, mask);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) EXPECT_NEAR(filled.at(y, x), 0.4, 1e-15);
}

TEST(ToyInpainter, GradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(2);
    std::vector<imaging::Image> images;
    for (int i = 0; i < 4; ++i) images.push_back(oracle::random_image(12, 12, 3, rng));
    std::vector<PreparedSample> samples;
    for (const auto& img : images) samples.emplace_back(img, imaging::irregular_mask(12, 12, 0.3, rng()), 5);

    ToyInpainter model(3, 5, 0.01);
    std::normal_distribution<double> n(0.0, 0.1);
    for (double& p : model.parameters()) p = n(rng);

    std::vector<const PreparedSample*> batch;
    for (const auto& s : samples) batch.push_back(&s);
    std::vector<double> grad;
    model.loss_and_gradient(batch, grad);

    auto batch_loss = [&] {
        double sum = 0;
        for (const auto& s : samples) sum += model.loss(s);
        return sum / samples.size();
    };
    const double h = 1e-7;
    for (int k = 0; k < 10; ++k) {
        const size_t i = rng() % model.parameter_count();
        const double keep = model.parameters()[i];
        model.parameters()[i] = keep + h;
        const double up = batch_loss();
        model.parameters()[i] = keep - h;
        const double down = batch_loss();
        model.parameters()[i] = keep;
        const double fd = (up - down) / (2 * h);
        EXPECT_LE(std::abs(grad[i] - fd), 1e-5 * std::max(std::abs(fd), 1e-3)) << "parameter " << i;
    }
}

TEST(ToyInpainter, CachedForwardPassGivesSameGradient) {
    std::mt19937_64 rng(3);
    const auto img = oracle::random_image(12, 12, 1, rng);
    PreparedSample s(img, imaging::regular_mask(12, 12), 3);
    ToyInpainter model(1, 3, 0.01);
    for (double& p : model.parameters()) p = 0.05;
    std::vector<double> pred;
    const double l = model.loss(s, &pred);
    std::vector<const PreparedSample*> batch{&s};
    std::vector<const std::vector<double>*> cached{&pred};
    std::vector<double> g1, g2;
    EXPECT_EQ(model.loss_and_gradient(batch, g1), l);
    EXPECT_EQ(model.loss_and_gradient(batch, g2, cached), l);
    EXPECT_EQ(g1, g2);
}

TEST(Train, ZeroLearningRateFreezesTestLoss) {
    auto cfg = quick_config(40);
    cfg.learning_rate = 0.0;
    const auto r = train(small_dataset(4), cfg, Method::proposed);
    std::optional<double> first;
    for (const auto& rec : r.records)
        if (rec.test_loss) {
            if (!first) first = rec.test_loss;
            EXPECT_EQ(*rec.test_loss, *first);
        }
}

TEST(Train, BitReproducibleUnderSeed) {
    const auto data = small_dataset(5);
    const auto cfg = quick_config();
    for (auto m : {Method::proposed, Method::jiang, Method::random}) {
        const auto a = train(data, cfg, m);
        const auto b = train(data, cfg, m);
        ASSERT_EQ(a.records.size(), b.records.size());
        for (size_t i = 0; i < a.records.size(); ++i) {
            EXPECT_EQ(a.records[i].train_loss, b.records[i].train_loss);
            EXPECT_EQ(a.records[i].test_loss, b.records[i].test_loss);
        }
        EXPECT_TRUE(std::equal(a.model.parameters().begin(), a.model.parameters().end(), b.model.parameters().begin()));
    }
}

TEST(Train, SelectsOnlyFromTrainingSplitAndRecordsCadence) {
    const auto data = small_dataset(6);
    auto cfg = quick_config(45);
    size_t rounds = 0;
    const auto r = train(data, cfg, Method::proposed, [&](const selection::SelectionDecision& d) {
        ++rounds;
        EXPECT_EQ(d.subset_ids.size(), 16u);
        for (size_t id : d.chosen_ids) EXPECT_LT(id, data.train.size());
        ASSERT_TRUE(d.pivot);
    });
    EXPECT_EQ(rounds, 45u);
    for (const auto& rec : r.records)
        EXPECT_EQ(rec.test_loss.has_value(), rec.iteration % 10 == 0 || rec.iteration == 44) << rec.iteration;
}

TEST(Train, PivotRecalibratesOncePerEpoch) {
    const auto data = small_dataset(7, 64);
    auto cfg = quick_config(32);  // 64 / 8 = 8 iterations per epoch
    std::vector<double> pivots;
    train(data, cfg, Method::proposed, [&](const selection::SelectionDecision& d) { pivots.push_back(*d.pivot); });
    for (size_t i = 0; i < pivots.size(); ++i)
        if (i % 8) EXPECT_EQ(pivots[i], pivots[i - 1]) << i;
}

TEST(Train, IrregularMasksChangePerEpochButTestMasksStayFixed) {
    imaging::Image img(16, 16, 1, 0.5);
    EXPECT_NE(sample_mask(img, MaskMode::irregular, 0.25, 1, 0, 3), sample_mask(img, MaskMode::irregular, 0.25, 1, 1, 3));
    EXPECT_EQ(sample_mask(img, MaskMode::regular, 0.25, 1, 0, 3), sample_mask(img, MaskMode::regular, 0.25, 2, 5, 4));
    auto cfg = quick_config(30);
    cfg.mask_mode = MaskMode::irregular;
    EXPECT_NO_THROW(train(small_dataset(8), cfg, Method::proposed));
}

TEST(Train, DivergenceGuardTrips) {
    auto cfg = quick_config(200);
    cfg.learning_rate = 50.0;
    EXPECT_THROW(train(small_dataset(9), cfg, Method::random), std::runtime_error);
}

TEST(Train, RejectsTooSmallPool) {
    auto cfg = quick_config();
    cfg.selector.b = 64;
    EXPECT_THROW(train(small_dataset(10, 96), cfg, Method::kawaguchi), std::invalid_argument);
}

TEST(Correlation, PearsonEdgeCases) {
    const std::vector<double> a{1, 2, 3, 4}, anti{4, 3, 2, 1}, flat{2, 2, 2, 2};
    EXPECT_NEAR(*pearson(a, a), 1.0, 1e-15);
    EXPECT_NEAR(*pearson(a, anti), -1.0, 1e-15);
    EXPECT_FALSE(pearson(a, flat).has_value());
}

TEST(Correlation, PositiveAfterFiveEpochsOnTexturedData) {
    const auto data = small_dataset(11, 128);
    auto cfg = quick_config(5 * 128 / 8);
    const auto r = train(data, cfg, Method::random);
    const auto samples = prepare_split(data.train, MaskMode::regular, 0.25, cfg.selector.seed, cfg.kernel);
    const auto study = correlation_study(r.model, samples);
    ASSERT_TRUE(study.pearson);
    EXPECT_GT(*study.pearson, 0.0);
}

TEST(Sweep, AllRatiosEmitRowsAndRangeIsChecked) {
    const auto data = small_dataset(12);
    const auto rows = sweep_ratio(data, quick_config(30), {1.0, 1.5, 2.0, 3.0});
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0].big_batch, 8);
    EXPECT_EQ(rows[3].big_batch, 24);
    EXPECT_THROW(sweep_ratio(data, quick_config(30), {0.5}), std::invalid_argument);
    EXPECT_THROW(sweep_ratio(data, quick_config(30), {4.5}), std::invalid_argument);
}

TEST(Timing, RandomSkipsScoringAndPhasesFitInTotal) {
    const auto rows = timing_study(small_dataset(13), quick_config(60), {Method::random, Method::proposed}, 5);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].score_seconds, 0.0);
    EXPECT_EQ(rows[0].overhead, 0.0);
    for (const auto& r : rows)
        EXPECT_LE(r.score_seconds + r.select_seconds + r.update_seconds, r.total_seconds * 1.05 + 1e-6);
}

TEST(Synthetic, DeterministicAndInRange) {
    SyntheticSpec spec;
    spec.count = 10;
    spec.size = 16;
    spec.channels = 3;
    const auto a = synthetic_images(spec, 3);
    const auto b = synthetic_images(spec, 3);
    ASSERT_EQ(a.size(), 10u);
    for (size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].data, b[i].data);
        EXPECT_NO_THROW(a[i].validate());
    }
}
