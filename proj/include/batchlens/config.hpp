#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "batchlens/harness.hpp"
#include "batchlens/selection.hpp"

namespace batchlens::cli {

/// Everything a run needs, settable from a key=value file and overridden by
/// command-line flags. Keys use underscores; flags use the same names with
/// dashes.
struct RunConfig {
    selection::SelectorConfig selector;
    selection::Method method = selection::Method::proposed;
    std::optional<double> pivot;

    std::string manifest;
    std::string test_manifest;
    std::string losses;       // CSV with a `loss` column aligned with the manifest
    std::string predictions;  // manifest of restored images for eval
    std::string values;       // CSV of complexities for calibrate (`combined` or `value` column)
    std::string output = "out";
    harness::MaskMode mask = harness::MaskMode::regular;
    double mask_ratio = 0.25;
    std::optional<int> image_size;

    std::optional<double> eps;
    std::optional<int> min_pts;

    int iterations = 2000;
    int test_every = 20;
    double learning_rate = 0.005;
    int kernel = 5;
    int jobs = 1;

    // Synthetic data in place of manifests when `synthetic` > 0.
    int synthetic = 0;
    int synthetic_test = 128;
    int synthetic_size = 32;

    std::string study = "correlation";  // analyze: correlation | timing | bias
    std::vector<double> ratios{1.0, 1.5, 2.0, 3.0};
    std::vector<selection::Method> methods{selection::Method::random, selection::Method::proposed,
                                           selection::Method::fan, selection::Method::kawaguchi,
                                           selection::Method::jiang};

    /// Assigns one key; throws std::invalid_argument on an unknown key or a
    /// malformed value.
    void set(const std::string& key, const std::string& value);

    /// Throws std::invalid_argument describing the first violated constraint.
    void validate() const;

    std::optional<calibration::DbscanParams> dbscan() const;
    harness::TrainConfig train_config() const;

    /// Canonical key=value text; parse(to_text()) reproduces the config.
    std::string to_text() const;
    /// `given`, when set, receives the keys present in the text.
    static RunConfig parse(const std::string& text, std::set<std::string>* given = nullptr);
    static RunConfig load(const std::filesystem::path& path, std::set<std::string>* given = nullptr);

    static const std::vector<std::string>& keys();
    bool operator==(const RunConfig&) const;
};

}  // namespace batchlens::cli
