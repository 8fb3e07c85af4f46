#include "batchlens/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "batchlens/errors.hpp"

namespace batchlens::cli {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) out.push_back(trim(item));
    return out;
}

template <class T>
T parse_number(const std::string& key, const std::string& text) {
    T v{};
    const std::string t = trim(text);
    const auto [end, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc() || end != t.data() + t.size())
        throw std::invalid_argument("bad value '" + text + "' for " + key);
    return v;
}

double parse_double(const std::string& key, const std::string& text) {
    const double v = parse_number<double>(key, text);
    if (!std::isfinite(v)) throw std::invalid_argument("value for " + key + " must be finite");
    return v;
}

// Shortest text that parses back to the same double.
std::string exact(double v) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
    return out;
}

struct Field {
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <class T>
Field optional_field(std::optional<T> RunConfig::*member, const std::string& key) {
    return {[member, key](RunConfig& c, const std::string& v) {
                if (trim(v).empty())
                    c.*member = std::nullopt;
                else if constexpr (std::is_same_v<T, double>)
                    c.*member = parse_double(key, v);
                else
                    c.*member = parse_number<T>(key, v);
            },
            [member](const RunConfig& c) {
                if (!(c.*member)) return std::string();
                if constexpr (std::is_same_v<T, double>)
                    return exact(*(c.*member));
                else
                    return std::to_string(*(c.*member));
            }};
}

Field int_field(int RunConfig::*member, const std::string& key) {
    return {[member, key](RunConfig& c, const std::string& v) { c.*member = parse_number<int>(key, v); },
            [member](const RunConfig& c) { return std::to_string(c.*member); }};
}

Field real_field(double RunConfig::*member, const std::string& key) {
    return {[member, key](RunConfig& c, const std::string& v) { c.*member = parse_double(key, v); },
            [member](const RunConfig& c) { return exact(c.*member); }};
}

Field text_field(std::string RunConfig::*member) {
    return {[member](RunConfig& c, const std::string& v) { c.*member = trim(v); },
            [member](const RunConfig& c) { return c.*member; }};
}

const std::map<std::string, Field>& fields() {
    static const std::map<std::string, Field> table = [] {
        std::map<std::string, Field> t;
        t["b"] = {[](RunConfig& c, const std::string& v) { c.selector.b = parse_number<int>("b", v); },
                  [](const RunConfig& c) { return std::to_string(c.selector.b); }};
        t["ratio"] = {[](RunConfig& c, const std::string& v) { c.selector.big_batch_ratio = parse_double("ratio", v); },
                      [](const RunConfig& c) { return exact(c.selector.big_batch_ratio); }};
        t["delta"] = {[](RunConfig& c, const std::string& v) { c.selector.delta = parse_double("delta", v); },
                      [](const RunConfig& c) { return exact(c.selector.delta); }};
        t["beta"] = {[](RunConfig& c, const std::string& v) { c.selector.beta = parse_double("beta", v); },
                     [](const RunConfig& c) { return exact(c.selector.beta); }};
        t["weights"] = {[](RunConfig& c, const std::string& v) {
                            const auto parts = split_list(v);
                            if (parts.size() != 3)
                                throw std::invalid_argument("weights need three values si,eg,tv; got '" + v + "'");
                            c.selector.weights = {parse_double("weights", parts[0]), parse_double("weights", parts[1]),
                                                  parse_double("weights", parts[2])};
                        },
                        [](const RunConfig& c) {
                            const auto& w = c.selector.weights;
                            return exact(w.si) + "," + exact(w.eg) + "," + exact(w.tv);
                        }};
        t["seed"] = {[](RunConfig& c, const std::string& v) { c.selector.seed = parse_number<uint64_t>("seed", v); },
                     [](const RunConfig& c) { return std::to_string(c.selector.seed); }};
        t["rule"] = {[](RunConfig& c, const std::string& v) { c.selector.rule = selection::parse_rule(trim(v)); },
                     [](const RunConfig& c) { return selection::to_string(c.selector.rule); }};
        t["normalization"] = {
            [](RunConfig& c, const std::string& v) { c.selector.normalization = selection::parse_normalization(trim(v)); },
            [](const RunConfig& c) { return selection::to_string(c.selector.normalization); }};
        t["method"] = {[](RunConfig& c, const std::string& v) { c.method = selection::parse_method(trim(v)); },
                       [](const RunConfig& c) { return selection::to_string(c.method); }};
        t["pivot"] = optional_field(&RunConfig::pivot, "pivot");
        t["manifest"] = text_field(&RunConfig::manifest);
        t["test_manifest"] = text_field(&RunConfig::test_manifest);
        t["losses"] = text_field(&RunConfig::losses);
        t["predictions"] = text_field(&RunConfig::predictions);
        t["values"] = text_field(&RunConfig::values);
        t["output"] = text_field(&RunConfig::output);
        t["mask"] = {[](RunConfig& c, const std::string& v) { c.mask = harness::parse_mask_mode(trim(v)); },
                     [](const RunConfig& c) { return harness::to_string(c.mask); }};
        t["mask_ratio"] = real_field(&RunConfig::mask_ratio, "mask_ratio");
        t["image_size"] = optional_field(&RunConfig::image_size, "image_size");
        t["eps"] = optional_field(&RunConfig::eps, "eps");
        t["min_pts"] = optional_field(&RunConfig::min_pts, "min_pts");
        t["iterations"] = int_field(&RunConfig::iterations, "iterations");
        t["test_every"] = int_field(&RunConfig::test_every, "test_every");
        t["learning_rate"] = real_field(&RunConfig::learning_rate, "learning_rate");
        t["kernel"] = int_field(&RunConfig::kernel, "kernel");
        t["jobs"] = int_field(&RunConfig::jobs, "jobs");
        t["synthetic"] = int_field(&RunConfig::synthetic, "synthetic");
        t["synthetic_test"] = int_field(&RunConfig::synthetic_test, "synthetic_test");
        t["synthetic_size"] = int_field(&RunConfig::synthetic_size, "synthetic_size");
        t["study"] = text_field(&RunConfig::study);
        t["ratios"] = {[](RunConfig& c, const std::string& v) {
                           c.ratios.clear();
                           for (const auto& p : split_list(v)) c.ratios.push_back(parse_double("ratios", p));
                       },
                       [](const RunConfig& c) {
                           std::vector<std::string> s;
                           for (double r : c.ratios) s.push_back(exact(r));
                           return join(s);
                       }};
        t["methods"] = {[](RunConfig& c, const std::string& v) {
                            c.methods.clear();
                            for (const auto& p : split_list(v)) c.methods.push_back(selection::parse_method(p));
                        },
                        [](const RunConfig& c) {
                            std::vector<std::string> s;
                            for (auto m : c.methods) s.push_back(selection::to_string(m));
                            return join(s);
                        }};
        return t;
    }();
    return table;
}

}  // namespace

const std::vector<std::string>& RunConfig::keys() {
    static const std::vector<std::string> k = [] {
        std::vector<std::string> out;
        for (const auto& [name, f] : fields()) out.push_back(name);
        return out;
    }();
    return k;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    const auto it = fields().find(key);
    if (it == fields().end()) throw std::invalid_argument("unknown config key '" + key + "'");
    it->second.set(*this, value);
}

void RunConfig::validate() const {
    selector.validate();
    if (pivot && !(*pivot >= 0.0 && *pivot <= 1.0)) throw std::invalid_argument("pivot must lie in [0,1]");
    if (!(mask_ratio > 0.0 && mask_ratio < 1.0)) throw std::invalid_argument("mask_ratio must lie in (0,1)");
    if (image_size && *image_size < 3) throw std::invalid_argument("image_size must be at least 3");
    if (dbscan()) dbscan()->validate();
    if (iterations < 1) throw std::invalid_argument("iterations must be positive");
    if (test_every < 1) throw std::invalid_argument("test_every must be positive");
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning_rate must be non-negative");
    if (kernel < 1 || kernel % 2 == 0) throw std::invalid_argument("kernel must be odd and positive");
    if (jobs < 1) throw std::invalid_argument("jobs must be at least 1");
    if (synthetic < 0 || synthetic_test < 1) throw std::invalid_argument("synthetic counts must be positive");
    if (synthetic_size < 4 || synthetic_size % 2) throw std::invalid_argument("synthetic_size must be even and >= 4");
    if (study != "correlation" && study != "timing" && study != "bias")
        throw std::invalid_argument("unknown study '" + study + "' (correlation, timing or bias)");
    if (ratios.empty()) throw std::invalid_argument("ratios must not be empty");
    for (double r : ratios)
        if (!(r >= 1.0 && r <= 4.0)) throw std::invalid_argument("ratios must lie in [1,4]");
    if (methods.empty()) throw std::invalid_argument("methods must not be empty");
    if (output.empty()) throw std::invalid_argument("output directory must not be empty");
}

std::optional<calibration::DbscanParams> RunConfig::dbscan() const {
    if (!eps && !min_pts) return std::nullopt;
    calibration::DbscanParams p;
    if (eps) p.eps = *eps;
    if (min_pts) p.min_pts = *min_pts;
    return p;
}

harness::TrainConfig RunConfig::train_config() const {
    harness::TrainConfig t;
    t.selector = selector;
    t.iterations = iterations;
    t.test_every = test_every;
    t.learning_rate = learning_rate;
    t.kernel = kernel;
    t.mask_mode = mask;
    t.mask_ratio = mask_ratio;
    t.dbscan = dbscan();
    return t;
}

std::string RunConfig::to_text() const {
    std::string out;
    for (const auto& [key, f] : fields()) out += key + " = " + f.get(*this) + "\n";
    return out;
}

RunConfig RunConfig::parse(const std::string& text, std::set<std::string>* given) {
    RunConfig c;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) + " is not key = value");
        const std::string key = trim(t.substr(0, eq));
        if (!seen.insert(key).second) throw std::invalid_argument("config key '" + key + "' given twice");
        c.set(key, t.substr(eq + 1));
    }
    if (given) *given = std::move(seen);
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path, std::set<std::string>* given) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot read config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), given);
}

bool RunConfig::operator==(const RunConfig& o) const { return to_text() == o.to_text(); }

}  // namespace batchlens::cli
