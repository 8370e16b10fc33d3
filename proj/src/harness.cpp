#include "scnp/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "harness_detail.hpp"
#include "scnp/error.hpp"
#include "scnp/evaluation.hpp"
#include "scnp/graph.hpp"
#include "scnp/matrix_io.hpp"
#include "scnp/propagation.hpp"

namespace scnp {

namespace fs = std::filesystem;

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) != nullptr ||
        dynamic_cast<const TooFewNodes*>(&e) != nullptr ||
        dynamic_cast<const EmptyMask*>(&e) != nullptr) {
        return kExitConfig;
    }
    if (dynamic_cast<const NumericError*>(&e) != nullptr ||
        dynamic_cast<const SingularSystem*>(&e) != nullptr ||
        dynamic_cast<const ZeroDegree*>(&e) != nullptr ||
        dynamic_cast<const ShapeMismatch*>(&e) != nullptr ||
        dynamic_cast<const LengthMismatch*>(&e) != nullptr) {
        return kExitNumeric;
    }
    if (dynamic_cast<const Error*>(&e) != nullptr) return kExitIo;
    return kExitFailure;
}

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

fs::path artifacts_dir(const ExperimentConfig& cfg) {
    return cfg.out_dir / "artifacts" / detail::sanitize_component(cfg.effective_name());
}

fs::path ppr_artifact_path(const ExperimentConfig& cfg) {
    return artifacts_dir(cfg) / ("ppr_a" + format_number(cfg.alpha) + ".mat");
}

fs::path sigma_artifact_path(const ExperimentConfig& cfg, double epsilon) {
    return artifacts_dir(cfg) / ("sigma_a" + format_number(cfg.alpha) + "_e" +
                                 format_number(epsilon) + ".mat");
}

fs::path runs_dir(const ExperimentConfig& cfg) { return cfg.out_dir / "runs"; }

fs::path results_csv_path(const ExperimentConfig& cfg) {
    return cfg.out_dir / "results.csv";
}

std::string file_checksum_hex(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(f)),
                      std::istreambuf_iterator<char>());
    const std::uint64_t h = fnv1a64(
        std::span(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

PreparedDataset prepare_dataset(const ExperimentConfig& cfg) {
    if (cfg.dataset_dir.empty()) throw ConfigError("dataset_dir is required");
    PreparedDataset pd;
    pd.data = load_dataset(cfg.dataset_dir / "edges.tsv", cfg.dataset_dir / "features.tsv",
                           cfg.dataset_dir / "labels.tsv", &pd.warnings);
    pd.raw_node_count = pd.data.graph.node_count();
    if (cfg.largest_component) pd.data = extract_lcc(pd.data);
    if (cfg.normalize_features) normalize_feature_rows(pd.data);
    return pd;
}

namespace detail {

std::string sanitize_component(const std::string& s) {
    std::string out = s.empty() ? std::string("dataset") : s;
    for (char& c : out) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                        (c >= '0' && c <= '9') || c == '.' || c == '_' || c == '-';
        if (!ok) c = '-';
    }
    return out;
}

InputChecksums input_checksums(const ExperimentConfig& cfg) {
    InputChecksums ck;
    ck.edges = file_checksum_hex(cfg.dataset_dir / "edges.tsv");
    ck.features = file_checksum_hex(cfg.dataset_dir / "features.tsv");
    ck.labels = file_checksum_hex(cfg.dataset_dir / "labels.tsv");
    return ck;
}

fs::path sidecar_path(const ExperimentConfig& cfg) {
    return artifacts_dir(cfg) / "artifacts.json";
}

void write_sidecar(const ExperimentConfig& cfg, const InputChecksums& ck) {
    nlohmann::json j;
    j["format"] = 1;
    j["edges_checksum"] = ck.edges;
    j["features_checksum"] = ck.features;
    j["labels_checksum"] = ck.labels;
    j["largest_component"] = cfg.largest_component;
    j["normalize_features"] = cfg.normalize_features;
    j["literal_algorithm1"] = cfg.literal_algorithm1;
    const fs::path path = sidecar_path(cfg);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << j.dump(2) << "\n";
    if (!f) throw IoError("short write to " + path.string());
}

bool sidecar_matches(const ExperimentConfig& cfg, const InputChecksums& ck) {
    const fs::path path = sidecar_path(cfg);
    std::ifstream f(path, std::ios::binary);
    if (!f) return false;
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception&) {
        throw StaleCache("unreadable artifact record " + path.string() +
                         "; rerun the precompute command");
    }
    auto str = [&](const char* key) { return j.value(key, std::string()); };
    auto flag = [&](const char* key, bool dflt) { return j.value(key, dflt); };
    const bool same = j.value("format", 0) == 1 && str("edges_checksum") == ck.edges &&
                      str("features_checksum") == ck.features &&
                      str("labels_checksum") == ck.labels &&
                      flag("largest_component", true) == cfg.largest_component &&
                      flag("normalize_features", false) == cfg.normalize_features &&
                      flag("literal_algorithm1", false) == cfg.literal_algorithm1;
    if (!same) {
        throw StaleCache("artifacts under " + artifacts_dir(cfg).string() +
                         " were built from different inputs or options; rerun the "
                         "precompute command");
    }
    return true;
}

void check_artifact_freshness(const ExperimentConfig& cfg) {
    const InputChecksums ck = input_checksums(cfg);
    if (!sidecar_matches(cfg, ck)) {
        throw MissingArtifact("no precomputed artifacts for dataset '" +
                              cfg.effective_name() + "' under " +
                              artifacts_dir(cfg).string() +
                              "; run the precompute command first");
    }
}

PprMatrix load_ppr_artifact(const ExperimentConfig& cfg, std::size_t node_count) {
    const fs::path path = ppr_artifact_path(cfg);
    if (!fs::exists(path)) {
        throw MissingArtifact(path.string() +
                              " not found; run the precompute command with alpha=" +
                              format_number(cfg.alpha));
    }
    PprMatrix pi = load_ppr(path);
    if (pi.values.rows() != node_count) {
        throw ShapeMismatch("propagation artifact " + path.string() + " is for " +
                            std::to_string(pi.values.rows()) + " nodes, dataset has " +
                            std::to_string(node_count));
    }
    return pi;
}

SigmaMatrix load_sigma_artifact(const ExperimentConfig& cfg, double epsilon,
                                std::size_t node_count) {
    const fs::path path = sigma_artifact_path(cfg, epsilon);
    if (!fs::exists(path)) {
        throw MissingArtifact(path.string() +
                              " not found; run the precompute command with this "
                              "threshold in the epsilon grid");
    }
    SigmaMatrix s = load_sigma(path);
    if (s.values.rows() != node_count) {
        throw ShapeMismatch("correlation artifact " + path.string() + " is for " +
                            std::to_string(s.values.rows()) + " nodes, dataset has " +
                            std::to_string(node_count));
    }
    return s;
}

}  // namespace detail

std::string SweepRow::key() const {
    return dataset + "|" + model + "|" + epsilon + "|" + std::to_string(epochs) + "|" +
           std::to_string(seed);
}

std::string csv_quote(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (const char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

const char* const kSweepCsvHeader =
    "dataset,model,epsilon,alpha,epochs,seed,train_acc,val_acc,test_acc,macro_f1,"
    "wall_time,error,config_hash";

namespace {

std::string fmt_metric(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string fmt_wall(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

// Microsecond resolution so even trivial cells record a nonzero time.
std::string fmt_seconds(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    return buf;
}

// One record, honoring quoted fields; CorruptFile on unbalanced quotes.
std::vector<std::string> parse_csv_line(const std::string& line, std::size_t lineno,
                                        const fs::path& path) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) {
        throw CorruptFile(path.string() + ":" + std::to_string(lineno) +
                          ": unterminated quoted field");
    }
    fields.push_back(cur);
    return fields;
}

double parse_metric(const std::string& s) { return s.empty() ? 0.0 : std::stod(s); }

}  // namespace

std::string sweep_row_csv(const SweepRow& row) {
    std::ostringstream out;
    out << csv_quote(row.dataset) << ',' << row.model << ',' << row.epsilon << ','
        << format_number(row.alpha) << ',' << row.epochs << ',' << row.seed << ',';
    if (row.error.empty()) {
        out << fmt_metric(row.train_acc) << ',' << fmt_metric(row.val_acc) << ','
            << fmt_metric(row.test_acc) << ',' << fmt_metric(row.macro_f1) << ','
            << fmt_seconds(row.wall_time);
    } else {
        out << ",,,,";
    }
    out << ',' << csv_quote(row.error) << ',' << row.config_hash;
    return out.str();
}

std::vector<SweepRow> read_sweep_csv(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(f, line)) throw CorruptFile(path.string() + ": empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kSweepCsvHeader) {
        throw CorruptFile(path.string() + ": unrecognized header row");
    }
    std::vector<SweepRow> rows;
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = parse_csv_line(line, lineno, path);
        if (fields.size() != 13) {
            throw CorruptFile(path.string() + ":" + std::to_string(lineno) +
                              ": expected 13 fields, found " +
                              std::to_string(fields.size()));
        }
        SweepRow row;
        row.dataset = fields[0];
        row.model = fields[1];
        row.epsilon = fields[2];
        row.error = fields[11];
        row.config_hash = fields[12];
        try {
            row.alpha = std::stod(fields[3]);
            row.epochs = static_cast<std::size_t>(std::stoull(fields[4]));
            row.seed = std::stoull(fields[5]);
            row.train_acc = parse_metric(fields[6]);
            row.val_acc = parse_metric(fields[7]);
            row.test_acc = parse_metric(fields[8]);
            row.macro_f1 = parse_metric(fields[9]);
            row.wall_time = parse_metric(fields[10]);
        } catch (const std::exception&) {
            throw CorruptFile(path.string() + ":" + std::to_string(lineno) +
                              ": unparseable numeric field");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

fs::path history_path(const fs::path& runs, const SweepRow& row) {
    std::string name = detail::sanitize_component(row.dataset) + "_" + row.model;
    if (!row.epsilon.empty()) name += "_e" + row.epsilon;
    name += "_ep" + std::to_string(row.epochs) + "_s" + std::to_string(row.seed) +
            ".jsonl";
    return runs / name;
}

namespace detail {

void write_cell_history(const SweepRow& row, const TrainResult& result,
                        const fs::path& path) {
    nlohmann::json head;
    head["config_hash"] = row.config_hash;
    head["dataset"] = row.dataset;
    head["model"] = row.model;
    head["epsilon"] = row.epsilon;
    head["epochs"] = row.epochs;
    head["seed"] = row.seed;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << head.dump() << "\n";
    write_history_jsonl(result, f);
    if (!f) throw IoError("short write to " + path.string());
}

DenseMatrix eval_probs(ModelKind kind, const Dataset& data,
                       const PropagationArtifacts& art, const MlpParams& params,
                       const TrainConfig& tc) {
    Rng rng(0);
    switch (kind) {
        case ModelKind::Gcn:
            return gcn_forward(*art.a_hat, data.features, params, tc, false, rng);
        case ModelKind::Ppnp:
            return ppnp_forward(*art.ppr, data.features, params, tc, false, rng);
        case ModelKind::Appnp:
            return appnp_forward(*art.a_hat, data.features, params, tc, art.alpha,
                                 art.power_steps, false, rng);
        case ModelKind::Scnp:
            return scnp_forward(*art.sigma, data.features, params, tc, false, rng);
    }
    throw ConfigError("unknown model kind");
}

}  // namespace detail

void run_validate(const ExperimentConfig& cfg, std::ostream& log) {
    if (cfg.dataset_dir.empty()) throw ConfigError("dataset_dir is required");
    std::vector<std::string> warnings;
    Dataset raw = load_dataset(cfg.dataset_dir / "edges.tsv",
                               cfg.dataset_dir / "features.tsv",
                               cfg.dataset_dir / "labels.tsv", &warnings);
    const auto comp = component_labels(raw.graph);
    const std::size_t components =
        comp.empty() ? 0 : 1 + *std::max_element(comp.begin(), comp.end());
    log << "dataset " << cfg.effective_name() << " (" << cfg.dataset_dir.string()
        << ")\n";
    log << "  nodes:      " << raw.graph.node_count() << "\n";
    log << "  edges:      " << raw.graph.edge_count() << "\n";
    log << "  features:   " << raw.feature_count << " columns, "
        << raw.features.nnz() << " nonzero entries\n";
    log << "  classes:    " << raw.class_count << "\n";
    log << "  components: " << components << "\n";

    Dataset d = raw;
    if (cfg.largest_component) {
        d = extract_lcc(raw);
        log << "  largest component: " << d.graph.node_count() << " nodes, "
            << d.graph.edge_count() << " edges, " << d.class_count << " classes\n";
    }
    std::vector<std::size_t> class_sizes(d.class_count, 0);
    for (const int label : d.labels) ++class_sizes[static_cast<std::size_t>(label)];
    for (std::size_t c = 0; c < d.class_count; ++c) {
        log << "  class " << d.class_names[c] << ": " << class_sizes[c] << " nodes";
        if (class_sizes[c] < cfg.per_class_train) {
            log << " (fewer than per_class_train = " << cfg.per_class_train << ")";
        }
        log << "\n";
    }
    try {
        const Split s = make_split(d, cfg.per_class_train, cfg.val_size, cfg.base_seed);
        log << "  split(seed " << cfg.base_seed << "): " << s.train.size()
            << " train, " << s.val.size() << " val, " << s.test.size() << " test\n";
        if (s.test.empty()) {
            log << "  warning: test set is empty under this protocol\n";
        }
    } catch (const Error& e) {
        log << "  split infeasible: " << e.what() << "\n";
    }
    for (const auto& w : warnings) log << "  warning: " << w << "\n";
    log << "ok\n";
}

void run_precompute(const ExperimentConfig& cfg, std::ostream& log) {
    cfg.validate();
    using clock = std::chrono::steady_clock;
    const fs::path dir = artifacts_dir(cfg);
    const detail::InputChecksums ck = detail::input_checksums(cfg);

    bool cache_valid = false;
    try {
        cache_valid = detail::sidecar_matches(cfg, ck);
    } catch (const StaleCache&) {
        log << "inputs or options changed; discarding " << dir.string() << "\n";
        fs::remove_all(dir);
    }
    if (!cache_valid && fs::exists(dir) && !fs::exists(detail::sidecar_path(cfg))) {
        // Files of unknown provenance; rebuild from scratch.
        fs::remove_all(dir);
    }
    fs::create_directories(dir);

    const fs::path ppr_path = ppr_artifact_path(cfg);
    const bool need_ppr = !cache_valid || !fs::exists(ppr_path);
    std::vector<double> missing_eps;
    for (const double eps : cfg.epsilons) {
        if (!cache_valid || !fs::exists(sigma_artifact_path(cfg, eps))) {
            missing_eps.push_back(eps);
        }
    }
    if (!need_ppr && missing_eps.empty()) {
        log << "artifacts up to date under " << dir.string() << "\n";
        return;
    }

    const PreparedDataset pd = prepare_dataset(cfg);
    for (const auto& w : pd.warnings) log << "warning: " << w << "\n";
    const Dataset& d = pd.data;
    log << "dataset " << cfg.effective_name() << ": " << d.graph.node_count()
        << " nodes, " << d.graph.edge_count() << " edges\n";

    PprMatrix pi;
    if (need_ppr) {
        const auto t0 = clock::now();
        const SparseMatrix a_hat = normalize_symmetric(add_self_loops(d.graph));
        pi = ppr_direct(a_hat, TeleportParam(cfg.alpha));
        save_ppr(pi, ppr_path);
        const std::chrono::duration<double> dt = clock::now() - t0;
        log << "wrote " << ppr_path.string() << " (" << fmt_wall(dt.count()) << " s)\n";
    } else if (!missing_eps.empty()) {
        pi = load_ppr(ppr_path);
    }

    if (!missing_eps.empty()) {
        SigmaOptions opt;
        opt.literal_diagonal = cfg.literal_algorithm1;
        opt.threads = cfg.threads;
        const auto t0 = clock::now();
        const std::vector<SigmaMatrix> sigmas = build_sigma_batch(pi, missing_eps, opt);
        const std::chrono::duration<double> dt = clock::now() - t0;
        for (const SigmaMatrix& s : sigmas) {
            const fs::path path = sigma_artifact_path(cfg, s.epsilon);
            save_sigma(s, path);
            log << "wrote " << path.string() << "\n";
        }
        log << "correlation matrices took " << fmt_wall(dt.count()) << " s\n";
    }
    detail::write_sidecar(cfg, ck);
}

}  // namespace scnp
