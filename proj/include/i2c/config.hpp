#pragma once

#include <charconv>
#include <cstdint>
#include <string>
#include <vector>

#include "i2c/errors.hpp"
#include "i2c/model.hpp"
#include "i2c/synthdata.hpp"

namespace i2c {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

namespace detail {

inline double parse_double(const std::string& s, const std::string& key) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc{} || p != e)
        throw ConfigError("value '" + s + "' for key '" + key + "' is not a number");
    return v;
}

inline long long parse_int(const std::string& s, const std::string& key) {
    long long v = 0;
    const char* b = s.data();
    const char* e = b + s.size();
    auto [p, ec] = std::from_chars(b, e, v);
    if (ec != std::errc{} || p != e)
        throw ConfigError("value '" + s + "' for key '" + key + "' is not an integer");
    return v;
}

// shortest round-trip formatting, so manifests re-parse to identical doubles
inline std::string format_double(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

}  // namespace detail

inline std::vector<double> parse_double_list(const std::string& s, const std::string& key) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        std::size_t comma = s.find(',', pos);
        if (comma == std::string::npos) comma = s.size();
        const std::string item = trim(s.substr(pos, comma - pos));
        if (!item.empty()) out.push_back(detail::parse_double(item, key));
        pos = comma + 1;
    }
    if (out.empty()) throw ConfigError("empty list for key '" + key + "'");
    return out;
}

inline std::vector<int> parse_int_list(const std::string& s, const std::string& key) {
    std::vector<int> out;
    for (double v : parse_double_list(s, key)) out.push_back(static_cast<int>(v));
    return out;
}

// All run hyper-parameters. Defaults follow the paper where it gives values
// (delta 0.7, K 3, lambda1 0.008, lambda2 0.001, 2 images per category) and
// desk-scale choices elsewhere. Precedence: flags > config file > defaults.
struct RunConfig {
    std::string mode = "sc_gc";  // plain | sc | sc_gc
    std::uint64_t seed = 1;

    int epochs = 6;
    double lr = 0.06;
    double momentum = 0.9;
    int warmup_epochs = 1;

    double lambda1 = 0.008;
    double lambda2 = 0.001;
    double delta = 0.7;
    int k = 3;
    double alpha = 0.05;

    int categories_per_batch = 8;
    int images_per_category = 2;

    int feature_channels = 32;
    int conv1_width = 12;
    int conv2_width = 24;

    int num_classes = 8;
    int image_size = 64;
    int train_count = 2000;
    int val_count = 250;
    int test_count = 500;
    int clutter_blobs = 10;
    double noise = 0.02;

    double tau = 0.5;  // fixed threshold for render; eval sweeps tau_grid
    std::string tau_grid =
        "0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5,0.55,0.6,0.65,0.7,0.75,0.8,0.85,0.9,0.95";
    int top_k = 5;

    std::string dataset_dir = "data";
    std::string out_dir = "out";
    std::string checkpoint;  // defaults to <out_dir>/checkpoint.i2ck when empty

    std::string samples = "0,1,2,3";  // render targets
    std::string split = "test";      // render split

    void set(const std::string& key, const std::string& value) {
        if (key == "mode") mode = value;
        else if (key == "seed") seed = static_cast<std::uint64_t>(detail::parse_int(value, key));
        else if (key == "epochs") epochs = static_cast<int>(detail::parse_int(value, key));
        else if (key == "lr") lr = detail::parse_double(value, key);
        else if (key == "momentum") momentum = detail::parse_double(value, key);
        else if (key == "warmup_epochs") warmup_epochs = static_cast<int>(detail::parse_int(value, key));
        else if (key == "lambda1") lambda1 = detail::parse_double(value, key);
        else if (key == "lambda2") lambda2 = detail::parse_double(value, key);
        else if (key == "delta") delta = detail::parse_double(value, key);
        else if (key == "k") k = static_cast<int>(detail::parse_int(value, key));
        else if (key == "alpha") alpha = detail::parse_double(value, key);
        else if (key == "categories_per_batch")
            categories_per_batch = static_cast<int>(detail::parse_int(value, key));
        else if (key == "images_per_category")
            images_per_category = static_cast<int>(detail::parse_int(value, key));
        else if (key == "feature_channels")
            feature_channels = static_cast<int>(detail::parse_int(value, key));
        else if (key == "conv1_width") conv1_width = static_cast<int>(detail::parse_int(value, key));
        else if (key == "conv2_width") conv2_width = static_cast<int>(detail::parse_int(value, key));
        else if (key == "num_classes") num_classes = static_cast<int>(detail::parse_int(value, key));
        else if (key == "image_size") image_size = static_cast<int>(detail::parse_int(value, key));
        else if (key == "train_count") train_count = static_cast<int>(detail::parse_int(value, key));
        else if (key == "val_count") val_count = static_cast<int>(detail::parse_int(value, key));
        else if (key == "test_count") test_count = static_cast<int>(detail::parse_int(value, key));
        else if (key == "clutter_blobs") clutter_blobs = static_cast<int>(detail::parse_int(value, key));
        else if (key == "noise") noise = detail::parse_double(value, key);
        else if (key == "tau") tau = detail::parse_double(value, key);
        else if (key == "tau_grid") tau_grid = value;
        else if (key == "top_k") top_k = static_cast<int>(detail::parse_int(value, key));
        else if (key == "dataset_dir") dataset_dir = value;
        else if (key == "out_dir") out_dir = value;
        else if (key == "checkpoint") checkpoint = value;
        else if (key == "samples") samples = value;
        else if (key == "split") split = value;
        else throw ConfigError("unknown config key '" + key + "'");
    }

    void validate() const {
        if (mode != "plain" && mode != "sc" && mode != "sc_gc")
            throw ConfigError("mode must be plain, sc or sc_gc, got '" + mode + "'");
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
        if (!(lr > 0.0)) throw ConfigError("lr must be positive");
        if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must lie in [0,1)");
        if (warmup_epochs < 0) throw ConfigError("warmup_epochs must be non-negative");
        if (lambda1 < 0.0 || lambda2 < 0.0) throw ConfigError("lambda weights must be non-negative");
        if (!(delta > 0.0 && delta < 1.0)) throw ConfigError("delta must lie in (0,1)");
        if (k < 1) throw ConfigError("k must be >= 1");
        if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0,1)");
        if (categories_per_batch < 1) throw ConfigError("categories_per_batch must be >= 1");
        if (images_per_category < 1) throw ConfigError("images_per_category must be >= 1");
        if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau must lie in (0,1)");
        if (top_k < 1) throw ConfigError("top_k must be >= 1");
        parse_double_list(tau_grid, "tau_grid");
        model_config().validate();
        dataset_spec().validate();
    }

    ModelConfig model_config() const {
        ModelConfig mc;
        mc.input_size = image_size;
        mc.num_classes = num_classes;
        mc.feature_channels = feature_channels;
        mc.stage_widths = {conv1_width, conv2_width};
        return mc;
    }

    DatasetSpec dataset_spec() const {
        DatasetSpec ds;
        ds.num_classes = num_classes;
        ds.image_size = image_size;
        ds.train_count = train_count;
        ds.val_count = val_count;
        ds.test_count = test_count;
        ds.clutter_blobs = clutter_blobs;
        ds.noise = noise;
        ds.master_seed = seed;
        return ds;
    }

    std::string checkpoint_path() const {
        return checkpoint.empty() ? out_dir + "/checkpoint.i2ck" : checkpoint;
    }

    // key = value lines in fixed order; parses back to an identical config.
    std::string serialize() const {
        std::string s;
        auto kv = [&s](const std::string& key, const std::string& v) { s += key + " = " + v + "\n"; };
        kv("mode", mode);
        kv("seed", std::to_string(seed));
        kv("epochs", std::to_string(epochs));
        kv("lr", detail::format_double(lr));
        kv("momentum", detail::format_double(momentum));
        kv("warmup_epochs", std::to_string(warmup_epochs));
        kv("lambda1", detail::format_double(lambda1));
        kv("lambda2", detail::format_double(lambda2));
        kv("delta", detail::format_double(delta));
        kv("k", std::to_string(k));
        kv("alpha", detail::format_double(alpha));
        kv("categories_per_batch", std::to_string(categories_per_batch));
        kv("images_per_category", std::to_string(images_per_category));
        kv("feature_channels", std::to_string(feature_channels));
        kv("conv1_width", std::to_string(conv1_width));
        kv("conv2_width", std::to_string(conv2_width));
        kv("num_classes", std::to_string(num_classes));
        kv("image_size", std::to_string(image_size));
        kv("train_count", std::to_string(train_count));
        kv("val_count", std::to_string(val_count));
        kv("test_count", std::to_string(test_count));
        kv("clutter_blobs", std::to_string(clutter_blobs));
        kv("noise", detail::format_double(noise));
        kv("tau", detail::format_double(tau));
        kv("tau_grid", tau_grid);
        kv("top_k", std::to_string(top_k));
        kv("dataset_dir", dataset_dir);
        kv("out_dir", out_dir);
        kv("checkpoint", checkpoint);
        kv("samples", samples);
        kv("split", split);
        return s;
    }
};

// Applies `key = value` lines (utf-8, '#' comments, blank lines allowed).
inline void apply_config_text(RunConfig& cfg, const std::string& text, const std::string& source) {
    std::size_t pos = 0;
    int line_no = 0;
    while (pos < text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string::npos) nl = text.size();
        std::string line = trim(text.substr(pos, nl - pos));
        pos = nl + 1;
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError(source + ":" + std::to_string(line_no) + ": empty key");
        cfg.set(key, value);
    }
}

}  // namespace i2c
