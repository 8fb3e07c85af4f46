#include "batchlens/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "batchlens/calibration.hpp"
#include "batchlens/complexity.hpp"
#include "batchlens/config.hpp"
#include "batchlens/errors.hpp"
#include "batchlens/harness.hpp"
#include "batchlens/image_io.hpp"
#include "batchlens/quality.hpp"
#include "batchlens/report.hpp"
#include "batchlens/selection.hpp"
#include "batchlens/synthetic.hpp"

namespace batchlens::cli {

namespace fs = std::filesystem;
using report::format_real;
using Json = nlohmann::ordered_json;

namespace {

const std::map<std::string, std::string>& flag_help() {
    static const std::map<std::string, std::string> help = {
        {"b", "mini-batch size b (>= 1)"},
        {"ratio", "big batch ratio B/b, B = ceil(ratio * b) (>= 1)"},
        {"delta", "floor on the complexity distance in the proposed score (> 0)"},
        {"beta", "exponent of the CDF keep probability for the jiang rule (> 0)"},
        {"weights", "si,eg,tv mixing weights; non-negative, summing to 1"},
        {"seed", "RNG seed; falls back to $BATCHLENS_SEED, then 0"},
        {"rule", "selection function for the proposed score: topk | fan | jiang"},
        {"normalization", "complexity normalization population: batch | dataset"},
        {"method", "proposed | fan | kawaguchi | jiang | random"},
        {"pivot", "fixed pivot in [0,1]; empty to calibrate on the big batch"},
        {"manifest", "text file listing one image path per line"},
        {"test_manifest", "image list for the test split"},
        {"losses", "CSV with a `loss` column, one row per manifest entry"},
        {"predictions", "image list of restored outputs, aligned with --manifest"},
        {"values", "CSV of complexities with a `combined` or `value` column"},
        {"output", "output directory (created if needed)"},
        {"mask", "mask mode: regular | irregular"},
        {"mask_ratio", "target hole fraction for irregular masks, in (0,1)"},
        {"image_size", "resize every image to this square size"},
        {"eps", "DBSCAN neighborhood radius (default 0.05)"},
        {"min_pts", "DBSCAN core threshold incl. the point itself (default max(3, ceil(0.01 n)))"},
        {"iterations", "training iterations"},
        {"test_every", "test-loss cadence in iterations"},
        {"learning_rate", "SGD step size of the toy inpainter"},
        {"kernel", "odd stencil size of the toy inpainter"},
        {"jobs", "threads for per-sample complexity scoring"},
        {"synthetic", "number of synthetic training images; 0 uses the manifests"},
        {"synthetic_test", "number of synthetic test images"},
        {"synthetic_size", "side of the synthetic images (even, >= 4)"},
        {"study", "analyze study: correlation | timing | bias"},
        {"ratios", "comma-separated big batch ratios for the sweep, each in [1,4]"},
        {"methods", "comma-separated methods for the timing and bias studies"},
    };
    return help;
}

std::string flag_name(const std::string& key) {
    std::string f = key;
    std::replace(f.begin(), f.end(), '_', '-');
    return "--" + f;
}

struct Command {
    CLI::App* app = nullptr;
    std::string config_path;
    std::map<std::string, std::string> flags;
};

void add_flags(Command& cmd, const std::vector<std::string>& keys) {
    cmd.app->add_option("--config", cmd.config_path, "key = value config file; flags override it");
    for (const auto& key : keys) cmd.app->add_option(flag_name(key), cmd.flags[key], flag_help().at(key));
}

RunConfig resolve(const Command& cmd) {
    std::set<std::string> given;
    RunConfig cfg = cmd.config_path.empty() ? RunConfig{} : RunConfig::load(cmd.config_path, &given);
    bool seed_set = given.count("seed") > 0;
    for (const auto& [key, value] : cmd.flags) {
        if (cmd.app->count(flag_name(key)) == 0) continue;
        cfg.set(key, value);
        if (key == "seed") seed_set = true;
    }
    if (!seed_set)
        if (const char* env = std::getenv("BATCHLENS_SEED"); env && *env) {
            try {
                cfg.set("seed", env);
            } catch (const std::invalid_argument&) {
                throw std::invalid_argument(std::string("BATCHLENS_SEED is not a valid seed: '") + env + "'");
            }
        }
    cfg.validate();
    return cfg;
}

void require(const std::string& value, const std::string& key, const std::string& command) {
    if (value.empty()) throw InputError("missing input: " + command + " needs " + flag_name(key));
}

fs::path prepare_output(const RunConfig& cfg) {
    const fs::path dir = cfg.output;
    fs::create_directories(dir);
    report::write_text(cfg.to_text(), dir / "resolved_config.txt");
    return dir;
}

void write_json(const Json& j, const fs::path& path) { report::write_text(j.dump(2) + "\n", path); }

struct LoadedSet {
    std::vector<imaging::ManifestEntry> entries;
    std::vector<imaging::Image> images;
};

LoadedSet load_set(const std::string& manifest, const RunConfig& cfg) {
    LoadedSet s;
    s.entries = imaging::read_manifest(manifest);
    if (s.entries.empty()) throw InputError("manifest " + manifest + " lists no images");
    for (const auto& e : s.entries) s.images.push_back(imaging::load_image(e.resolved, cfg.image_size));
    return s;
}

std::vector<imaging::Mask> masks_for(const std::vector<imaging::Image>& images, const RunConfig& cfg) {
    std::vector<imaging::Mask> masks;
    for (size_t i = 0; i < images.size(); ++i)
        masks.push_back(harness::sample_mask(images[i], cfg.mask, cfg.mask_ratio, cfg.selector.seed, 0, i));
    return masks;
}

std::vector<complexity::MetricValues> metrics_for(const std::vector<imaging::Image>& images,
                                                  const std::vector<imaging::Mask>& masks, int jobs) {
    std::vector<imaging::GrayPlane> grays;
    for (const auto& img : images) grays.push_back(imaging::to_grayscale(img));
    return complexity::raw_metrics(grays, masks, jobs);
}

harness::Dataset load_dataset(const RunConfig& cfg, const std::string& command) {
    harness::Dataset d;
    if (cfg.synthetic > 0) {
        harness::SyntheticSpec spec;
        spec.count = cfg.synthetic;
        spec.size = cfg.synthetic_size;
        d.train = harness::synthetic_images(spec, cfg.selector.seed);
        spec.count = cfg.synthetic_test;
        d.test = harness::synthetic_images(spec, cfg.selector.seed ^ 0x9e3779b97f4a7c15ULL);
        return d;
    }
    require(cfg.manifest, "manifest", command);
    require(cfg.test_manifest, "test_manifest", command);
    d.train = load_set(cfg.manifest, cfg).images;
    d.test = load_set(cfg.test_manifest, cfg).images;
    return d;
}

std::string opt_real(const std::vector<double>& v, size_t i) { return i < v.size() ? format_real(v[i]) : ""; }

// ---------------------------------------------------------------- commands

int run_complexity(const RunConfig& cfg, std::ostream& out) {
    require(cfg.manifest, "manifest", "complexity");
    const auto set = load_set(cfg.manifest, cfg);
    const auto masks = masks_for(set.images, cfg);
    const auto raw = metrics_for(set.images, masks, cfg.jobs);
    const auto profiles = complexity::profile_population(raw, cfg.selector.weights);

    report::Table t{{"path", "si_raw", "eg_raw", "tv_raw", "si_norm", "eg_norm", "tv_norm", "combined"}, {}};
    for (size_t i = 0; i < profiles.size(); ++i) {
        const auto& p = profiles[i];
        t.add_row({set.entries[i].name, format_real(p.raw.si), format_real(p.raw.eg), format_real(p.raw.tv),
                   format_real(p.norm.si), format_real(p.norm.eg), format_real(p.norm.tv), format_real(p.combined)});
    }
    const fs::path dir = prepare_output(cfg);
    report::write_csv(t, dir / "complexity.csv");
    out << "scored " << profiles.size() << " images -> " << (dir / "complexity.csv").string() << "\n";
    return 0;
}

std::vector<double> read_values(const std::string& path) {
    const auto t = report::read_csv(path);
    const auto& h = t.header;
    const bool has_combined = std::find(h.begin(), h.end(), "combined") != h.end();
    const size_t col = t.column(has_combined ? "combined" : "value");
    std::vector<double> v;
    for (const auto& row : t.rows) {
        try {
            v.push_back(report::parse_real(row.at(col)));
        } catch (const std::exception&) {
            throw InputError("malformed value in " + path);
        }
    }
    return v;
}

int run_calibrate(const RunConfig& cfg, std::ostream& out) {
    std::vector<double> values;
    if (!cfg.values.empty()) {
        values = read_values(cfg.values);
    } else {
        require(cfg.manifest, "manifest", "calibrate (or --values)");
        const auto set = load_set(cfg.manifest, cfg);
        const auto masks = masks_for(set.images, cfg);
        for (const auto& p : complexity::profile_population(metrics_for(set.images, masks, cfg.jobs),
                                                            cfg.selector.weights))
            values.push_back(p.combined);
    }
    if (values.empty()) throw InputError("no complexity values to calibrate on");
    const auto r = calibration::estimate_pivot(values, cfg.dbscan());

    Json j;
    j["pivot"] = r.pivot;
    j["largest_cluster"] = r.largest_cluster;
    j["median_fallback"] = r.median_fallback;
    j["eps"] = r.params.eps;
    j["min_pts"] = r.params.min_pts;
    j["labels"] = r.labels;
    const fs::path dir = prepare_output(cfg);
    write_json(j, dir / "calibration.json");
    out << "pivot " << format_real(r.pivot) << (r.median_fallback ? " (median fallback)" : "") << "\n";
    return 0;
}

int run_select(const RunConfig& cfg, std::ostream& out) {
    require(cfg.manifest, "manifest", "select");
    const auto set = load_set(cfg.manifest, cfg);
    const size_t n = set.images.size();
    const auto masks = masks_for(set.images, cfg);
    const auto raw = metrics_for(set.images, masks, cfg.jobs);

    std::vector<double> losses;
    if (!cfg.losses.empty()) {
        const auto t = report::read_csv(cfg.losses);
        const size_t col = t.column("loss");
        for (const auto& row : t.rows) {
            try {
                losses.push_back(report::parse_real(row.at(col)));
            } catch (const std::exception&) {
                throw InputError("malformed loss in " + cfg.losses);
            }
        }
        if (losses.size() != n)
            throw InputError("losses file has " + std::to_string(losses.size()) + " rows but the manifest lists " +
                             std::to_string(n) + " images");
    } else if (cfg.method != selection::Method::random) {
        require(cfg.losses, "losses", "select --method " + selection::to_string(cfg.method));
    }

    selection::SamplePool pool;
    pool.size = n;
    if (!losses.empty()) pool.loss = [&](size_t i) { return losses[i]; };
    pool.metrics = [&](size_t i) { return raw[i]; };

    selection::RoundOptions options;
    options.pivot = cfg.pivot;
    options.dbscan = cfg.dbscan();
    if (cfg.selector.normalization == selection::Normalization::dataset)
        options.ranges = complexity::MetricRanges::of(raw);

    selection::Rng rng(cfg.selector.seed);
    const auto d = selection::run_selection_round(pool, cfg.selector, cfg.method, rng, 0, options);

    report::Table t{{"index", "path", "loss", "complexity", "denominator", "score", "chosen"}, {}};
    for (size_t i = 0; i < d.subset_ids.size(); ++i) {
        const size_t id = d.subset_ids[i];
        const bool chosen = std::find(d.chosen_ids.begin(), d.chosen_ids.end(), id) != d.chosen_ids.end();
        t.add_row({std::to_string(id), set.entries[id].name, opt_real(d.losses, i), opt_real(d.complexities, i),
                   opt_real(d.denominators, i), opt_real(d.scores, i), chosen ? "1" : "0"});
    }
    Json j;
    j["method"] = selection::to_string(d.method);
    j["b"] = cfg.selector.b;
    j["big_batch"] = d.subset_ids.size();
    if (d.pivot) j["pivot"] = *d.pivot;
    j["chosen"] = d.chosen_ids;
    Json paths = Json::array();
    for (size_t id : d.chosen_ids) paths.push_back(set.entries[id].name);
    j["chosen_paths"] = paths;

    const fs::path dir = prepare_output(cfg);
    report::write_csv(t, dir / "scores.csv");
    write_json(j, dir / "selection.json");
    out << "chose " << d.chosen_ids.size() << " of " << d.subset_ids.size() << ":";
    for (size_t id : d.chosen_ids) out << " " << id;
    out << "\n";
    return 0;
}

void save_split(const std::vector<imaging::Image>& images, const fs::path& dir) {
    fs::create_directories(dir);
    std::ostringstream list;
    for (size_t i = 0; i < images.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "%05zu.png", i);
        imaging::save_png(images[i], dir / name);
        list << name << "\n";
    }
    report::write_text(list.str(), dir / "manifest.txt");
}

int run_train(const RunConfig& cfg, std::ostream& out) {
    const auto data = load_dataset(cfg, "train");
    const auto tc = cfg.train_config();
    const auto result = harness::train(data, tc, cfg.method);

    report::Table log{{"iteration", "train_loss", "test_loss", "pivot"}, {}};
    report::Table timing{{"iteration", "score_seconds", "select_seconds", "update_seconds", "total_seconds"}, {}};
    for (const auto& r : result.records) {
        log.add_row({std::to_string(r.iteration), format_real(r.train_loss),
                     r.test_loss ? format_real(*r.test_loss) : "", r.pivot ? format_real(*r.pivot) : ""});
        timing.add_row({std::to_string(r.iteration), format_real(r.score_seconds), format_real(r.select_seconds),
                        format_real(r.update_seconds), format_real(r.total_seconds)});
    }
    const auto test = harness::prepare_split(data.test, tc.mask_mode, tc.mask_ratio, tc.selector.seed, tc.kernel);
    const auto q = harness::evaluate_quality(result.model, test);

    const fs::path dir = prepare_output(cfg);
    report::write_csv(log, dir / "train_log.csv");
    report::write_csv(timing, dir / "train_timing.csv");
    report::Table params{{"parameter"}, {}};
    for (double p : result.model.parameters()) params.add_row({format_real(p)});
    report::write_csv(params, dir / "model.csv");

    std::vector<imaging::Image> truth, restored;
    for (const auto& s : test) {
        truth.push_back(*s.truth);
        restored.push_back(result.model.inpaint(s));
    }
    save_split(truth, dir / "truth");
    save_split(restored, dir / "restored");

    Json j;
    j["method"] = selection::to_string(cfg.method);
    j["iterations"] = cfg.iterations;
    j["final_test_loss"] = harness::final_test_loss(result.records);
    j["early_test_loss"] = harness::early_test_loss(result.records, std::min<size_t>(500, cfg.iterations));
    j["psnr"] = q.psnr;
    j["ssim"] = q.ssim;
    write_json(j, dir / "summary.json");
    out << selection::to_string(cfg.method) << ": final test L1 " << format_real(harness::final_test_loss(result.records))
        << ", PSNR " << format_real(q.psnr) << ", SSIM " << format_real(q.ssim) << "\n";
    return 0;
}

int run_eval(const RunConfig& cfg, std::ostream& out) {
    require(cfg.manifest, "manifest", "eval");
    require(cfg.predictions, "predictions", "eval");
    const auto truth = load_set(cfg.manifest, cfg);
    const auto pred = load_set(cfg.predictions, cfg);
    if (truth.images.size() != pred.images.size())
        throw InputError("prediction list has " + std::to_string(pred.images.size()) + " images, truth list " +
                         std::to_string(truth.images.size()));
    report::Table t{{"path", "prediction", "psnr", "ssim"}, {}};
    double psnr_sum = 0, ssim_sum = 0;
    size_t finite = 0;
    for (size_t i = 0; i < truth.images.size(); ++i) {
        const auto q = quality::evaluate(pred.images[i], truth.images[i]);
        t.add_row({truth.entries[i].name, pred.entries[i].name, format_real(q.psnr), format_real(q.ssim)});
        if (std::isfinite(q.psnr)) {
            psnr_sum += q.psnr;
            ++finite;
        }
        ssim_sum += q.ssim;
    }
    const fs::path dir = prepare_output(cfg);
    report::write_csv(t, dir / "quality.csv");
    out << "mean PSNR " << (finite ? format_real(psnr_sum / finite) : "inf") << " dB, mean SSIM "
        << format_real(ssim_sum / truth.images.size()) << " over " << truth.images.size() << " pairs\n";
    return 0;
}

int run_analyze(const RunConfig& cfg, std::ostream& out) {
    if (cfg.study == "bias") {
        harness::BiasStudyConfig bc;
        if (cfg.synthetic > 0) bc.pool = static_cast<size_t>(cfg.synthetic);
        bc.b = cfg.selector.b;
        bc.ratio = cfg.selector.big_batch_ratio;
        bc.seed = cfg.selector.seed;
        const auto rows = harness::bias_study(bc, cfg.methods);
        report::Table t{{"method", "mean_deciles", "mean_complexity"}, {}};
        for (const auto& r : rows) {
            t.add_row({selection::to_string(r.method), format_real(r.mean_deciles), format_real(r.mean_complexity)});
            out << selection::to_string(r.method) << ": " << format_real(r.mean_deciles) << " of 10 deciles\n";
        }
        report::write_csv(t, prepare_output(cfg) / "bias.csv");
        return 0;
    }

    const auto data = load_dataset(cfg, "analyze");
    const auto tc = cfg.train_config();
    if (cfg.study == "timing") {
        const auto rows = harness::timing_study(data, tc, cfg.methods);
        report::Table t{{"method", "score_seconds", "select_seconds", "update_seconds", "total_seconds", "overhead"}, {}};
        for (const auto& r : rows) {
            t.add_row({selection::to_string(r.method), format_real(r.score_seconds), format_real(r.select_seconds),
                       format_real(r.update_seconds), format_real(r.total_seconds), format_real(r.overhead)});
            out << selection::to_string(r.method) << ": " << format_real(r.total_seconds * 1e6) << " us/iteration, "
                << format_real(100.0 * r.overhead) << "% over random\n";
        }
        report::write_csv(t, prepare_output(cfg) / "timing.csv");
        return 0;
    }

    // correlation: train, then relate each training sample's loss to its complexity
    const auto result = harness::train(data, tc, cfg.method);
    const auto samples = harness::prepare_split(data.train, tc.mask_mode, tc.mask_ratio, tc.selector.seed, tc.kernel);
    const auto study = harness::correlation_study(result.model, samples);
    report::Table t{{"index", "loss", "tv"}, {}};
    for (size_t i = 0; i < study.pairs.size(); ++i)
        t.add_row({std::to_string(i), format_real(study.pairs[i].loss), format_real(study.pairs[i].complexity)});
    const fs::path dir = prepare_output(cfg);
    report::write_csv(t, dir / "correlation.csv");
    Json j;
    j["samples"] = study.pairs.size();
    j["pearson"] = study.pearson ? Json(*study.pearson) : Json(nullptr);
    write_json(j, dir / "correlation.json");
    out << "pearson(loss, tv) = " << (study.pearson ? format_real(*study.pearson) : "undefined") << "\n";
    return 0;
}

int run_sweep(const RunConfig& cfg, std::ostream& out) {
    const auto data = load_dataset(cfg, "sweep");
    const auto rows = harness::sweep_ratio(data, cfg.train_config(), cfg.ratios, cfg.method);
    report::Table t{{"ratio", "big_batch", "final_test_loss", "early_test_loss", "psnr", "ssim"}, {}};
    report::Table timing{{"ratio", "seconds_per_iteration"}, {}};
    for (const auto& r : rows) {
        t.add_row({format_real(r.ratio), std::to_string(r.big_batch), format_real(r.final_test_loss),
                   format_real(r.early_test_loss), format_real(r.psnr), format_real(r.ssim)});
        timing.add_row({format_real(r.ratio), format_real(r.seconds_per_iteration)});
        out << "ratio " << format_real(r.ratio) << ": final test L1 " << format_real(r.final_test_loss) << ", "
            << format_real(r.seconds_per_iteration * 1e6) << " us/iteration\n";
    }
    const fs::path dir = prepare_output(cfg);
    report::write_csv(t, dir / "sweep.csv");
    report::write_csv(timing, dir / "sweep_timing.csv");
    return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Complexity-guided mini-batch selection for inpainting training"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "help for every subcommand");

    const std::vector<std::string> selector_keys{"b",     "ratio", "delta",         "beta",   "weights",
                                                 "seed",  "rule",  "normalization", "method", "pivot"};
    const std::vector<std::string> image_keys{"manifest", "mask", "mask_ratio", "image_size", "output", "jobs"};
    const std::vector<std::string> train_keys{"test_manifest", "iterations", "test_every",    "learning_rate",
                                              "kernel",        "eps",        "min_pts",       "synthetic",
                                              "synthetic_test", "synthetic_size"};
    auto concat = [](std::initializer_list<std::vector<std::string>> parts) {
        std::vector<std::string> all;
        for (const auto& p : parts) all.insert(all.end(), p.begin(), p.end());
        return all;
    };

    std::map<std::string, Command> cmds;
    auto sub = [&](const std::string& name, const std::string& what, const std::vector<std::string>& keys) {
        Command& c = cmds[name];
        c.app = app.add_subcommand(name, what);
        add_flags(c, keys);
    };
    sub("complexity", "per-image SI, GLCM entropy and TV of the missing region -> complexity.csv",
        concat({image_keys, {"weights", "seed"}}));
    sub("calibrate", "DBSCAN pivot of complexity values -> calibration.json",
        concat({image_keys, {"values", "weights", "seed", "eps", "min_pts"}}));
    sub("select", "one big-batch selection round -> selection.json, scores.csv",
        concat({image_keys, selector_keys, {"losses", "eps", "min_pts"}}));
    sub("train", "train the toy inpainter with a selection method -> train_log.csv, summary.json",
        concat({image_keys, selector_keys, train_keys}));
    sub("eval", "PSNR and SSIM of restored images against ground truth -> quality.csv",
        {"manifest", "predictions", "image_size", "output"});
    sub("analyze", "correlation, timing or selection-bias study",
        concat({image_keys, selector_keys, train_keys, {"study", "methods"}}));
    sub("sweep", "big batch ratio sweep -> sweep.csv", concat({image_keys, selector_keys, train_keys, {"ratios"}}));

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        // Subcommand help is raised from inside the subcommand.
        for (auto* s : app.get_subcommands())
            if (s->get_help_ptr() && s->get_help_ptr()->count()) {
                out << s->help();
                return 0;
            }
        err << "error: " << e.what() << "\n";
        return 1;
    }

    try {
        for (const auto& [name, cmd] : cmds) {
            if (!cmd.app->parsed()) continue;
            const RunConfig cfg = resolve(cmd);
            if (name == "complexity") return run_complexity(cfg, out);
            if (name == "calibrate") return run_calibrate(cfg, out);
            if (name == "select") return run_select(cfg, out);
            if (name == "train") return run_train(cfg, out);
            if (name == "eval") return run_eval(cfg, out);
            if (name == "analyze") return run_analyze(cfg, out);
            if (name == "sweep") return run_sweep(cfg, out);
        }
        err << "error: no subcommand\n";
        return 1;
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return 2;
    }
}

int dispatch(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return dispatch(args, std::cout, std::cerr);
}

}  // namespace batchlens::cli
