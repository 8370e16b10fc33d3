#include "scnp/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <span>
#include <sstream>

#include "scnp/error.hpp"
#include "scnp/matrix_io.hpp"
#include "scnp/pipelines.hpp"
#include "scnp/propagation.hpp"

namespace scnp {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> parts;
    std::string item;
    std::istringstream in(s);
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (!item.empty()) parts.push_back(item);
    }
    return parts;
}

double parse_double(const std::string& key, const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + ": cannot parse '" + s + "' as a number");
    }
}

std::uint64_t parse_unsigned(const std::string& key, const std::string& s) {
    try {
        std::size_t used = 0;
        if (!s.empty() && s[0] == '-') throw std::invalid_argument("negative");
        const unsigned long long v = std::stoull(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + ": cannot parse '" + s + "' as a nonnegative integer");
    }
}

bool parse_bool(const std::string& key, const std::string& s) {
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError(key + ": cannot parse '" + s + "' as a boolean");
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

template <typename T, typename F>
std::string join(const std::vector<T>& v, F fmt) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += fmt(v[i]);
    }
    return out;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (dataset_dir.empty()) throw ConfigError("dataset_dir is required");
    if (models.empty()) throw ConfigError("model list is empty");
    for (const auto& m : models) parse_model_kind(m);
    if (epsilons.empty()) throw ConfigError("epsilon grid is empty");
    for (const double e : epsilons) PruneThreshold{e};
    if (epochs.empty()) throw ConfigError("epoch grid is empty");
    for (const std::size_t e : epochs) {
        if (e == 0) throw ConfigError("epoch budgets must be positive");
    }
    if (runs == 0) throw ConfigError("run count must be at least 1");
    TeleportParam{alpha};
    if (power_steps == 0) throw ConfigError("power step count must be positive");
    if (hidden == 0) throw ConfigError("hidden size must be positive");
    if (per_class_train == 0) throw ConfigError("per-class train count must be positive");
    if (threads == 0) throw ConfigError("worker count must be positive");
    train_config(1, 0).validate();
}

TrainConfig ExperimentConfig::train_config(std::size_t max_epochs,
                                           std::uint64_t seed) const {
    TrainConfig t;
    t.lambda_l2 = lambda_l2;
    t.dropout_rate = dropout;
    t.learning_rate = learning_rate;
    t.max_epochs = max_epochs;
    t.seed = seed;
    t.adjacency_dropout = adjacency_dropout;
    return t;
}

std::string ExperimentConfig::effective_name() const {
    if (!dataset_name.empty()) return dataset_name;
    std::string base = dataset_dir.filename().string();
    if (base.empty()) base = dataset_dir.parent_path().filename().string();
    return base;
}

void apply_config_value(ExperimentConfig& cfg, const std::string& key,
                        const std::string& value) {
    if (key == "dataset_dir") {
        cfg.dataset_dir = value;
    } else if (key == "dataset_name") {
        cfg.dataset_name = value;
    } else if (key == "models") {
        cfg.models = split_list(value);
    } else if (key == "alpha") {
        cfg.alpha = parse_double(key, value);
    } else if (key == "epsilons") {
        cfg.epsilons.clear();
        for (const auto& p : split_list(value)) {
            cfg.epsilons.push_back(parse_double(key, p));
        }
    } else if (key == "k") {
        cfg.power_steps = parse_unsigned(key, value);
    } else if (key == "per_class_train") {
        cfg.per_class_train = parse_unsigned(key, value);
    } else if (key == "val_size") {
        cfg.val_size = parse_unsigned(key, value);
    } else if (key == "epochs") {
        cfg.epochs.clear();
        for (const auto& p : split_list(value)) {
            cfg.epochs.push_back(parse_unsigned(key, p));
        }
    } else if (key == "runs") {
        cfg.runs = parse_unsigned(key, value);
    } else if (key == "seed") {
        cfg.base_seed = parse_unsigned(key, value);
    } else if (key == "out_dir") {
        cfg.out_dir = value;
    } else if (key == "hidden") {
        cfg.hidden = parse_unsigned(key, value);
    } else if (key == "lr") {
        cfg.learning_rate = parse_double(key, value);
    } else if (key == "l2") {
        cfg.lambda_l2 = parse_double(key, value);
    } else if (key == "dropout") {
        cfg.dropout = parse_double(key, value);
    } else if (key == "adjacency_dropout") {
        cfg.adjacency_dropout = parse_bool(key, value);
    } else if (key == "literal_algorithm1") {
        cfg.literal_algorithm1 = parse_bool(key, value);
    } else if (key == "normalize_features") {
        cfg.normalize_features = parse_bool(key, value);
    } else if (key == "largest_component") {
        cfg.largest_component = parse_bool(key, value);
    } else if (key == "threads") {
        cfg.threads = parse_unsigned(key, value);
    } else {
        throw ConfigError("unknown config key: " + key);
    }
}

void apply_config_file(ExperimentConfig& cfg, const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open config file: " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            apply_config_value(cfg, key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": " +
                              e.what());
        }
    }
}

namespace {

// Two renderings share this table: the full echo (everything) and the hash
// input (result-determining keys only).
std::string render_config(const ExperimentConfig& c, bool result_keys_only) {
    std::ostringstream out;
    auto line = [&](const char* key, const std::string& value) {
        out << key << " = " << value << "\n";
    };
    line("adjacency_dropout", c.adjacency_dropout ? "true" : "false");
    line("alpha", fmt_double(c.alpha));
    if (!result_keys_only) line("dataset_dir", c.dataset_dir.string());
    line("dataset_name", c.effective_name());
    line("dropout", fmt_double(c.dropout));
    line("epochs", join(c.epochs, [](std::size_t e) { return std::to_string(e); }));
    line("epsilons", join(c.epsilons, fmt_double));
    line("hidden", std::to_string(c.hidden));
    line("k", std::to_string(c.power_steps));
    line("l2", fmt_double(c.lambda_l2));
    line("largest_component", c.largest_component ? "true" : "false");
    line("literal_algorithm1", c.literal_algorithm1 ? "true" : "false");
    line("lr", fmt_double(c.learning_rate));
    line("models", join(c.models, [](const std::string& s) { return s; }));
    line("normalize_features", c.normalize_features ? "true" : "false");
    if (!result_keys_only) line("out_dir", c.out_dir.string());
    line("per_class_train", std::to_string(c.per_class_train));
    line("runs", std::to_string(c.runs));
    line("seed", std::to_string(c.base_seed));
    if (!result_keys_only) line("threads", std::to_string(c.threads));
    line("val_size", std::to_string(c.val_size));
    return out.str();
}

}  // namespace

std::string serialize_config(const ExperimentConfig& cfg) {
    return render_config(cfg, false);
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    const std::string canon = render_config(cfg, true);
    return fnv1a64(std::span(reinterpret_cast<const unsigned char*>(canon.data()),
                             canon.size()));
}

std::string config_hash_hex(const ExperimentConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(config_hash(cfg)));
    return buf;
}

}  // namespace scnp
