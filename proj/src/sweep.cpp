#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <thread>
#include <vector>

#include "harness_detail.hpp"
#include "scnp/error.hpp"
#include "scnp/evaluation.hpp"
#include "scnp/graph.hpp"
#include "scnp/harness.hpp"
#include "scnp/nn.hpp"

namespace scnp {

namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

// Everything a training cell reads; shared read-only across workers.
struct SharedInputs {
    const Dataset* data = nullptr;
    SparseMatrix a_hat;                   // built when gcn/appnp are in the grid
    std::optional<PprMatrix> pi;          // loaded when ppnp is in the grid
    std::map<double, SigmaMatrix> sigmas; // loaded per threshold for scnp
};

struct CellSpec {
    std::string model;
    ModelKind kind = ModelKind::Ppnp;
    std::optional<double> eps;
    std::size_t epochs = 0;
    std::uint64_t seed = 0;
};

void write_config_echo(const ExperimentConfig& cfg) {
    const fs::path path = cfg.out_dir / "config.txt";
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << "# config_hash " << config_hash_hex(cfg) << "\n" << serialize_config(cfg);
    if (!f) throw IoError("short write to " + path.string());
}

SharedInputs load_shared_inputs(const ExperimentConfig& cfg, const Dataset& data) {
    SharedInputs in;
    in.data = &data;
    bool needs_adjacency = false, needs_ppr = false, needs_sigma = false;
    for (const auto& name : cfg.models) {
        switch (parse_model_kind(name)) {
            case ModelKind::Gcn:
            case ModelKind::Appnp: needs_adjacency = true; break;
            case ModelKind::Ppnp: needs_ppr = true; break;
            case ModelKind::Scnp: needs_sigma = true; break;
        }
    }
    if (needs_adjacency) in.a_hat = normalize_symmetric(add_self_loops(data.graph));
    if (needs_ppr || needs_sigma) detail::check_artifact_freshness(cfg);
    const std::size_t n = data.graph.node_count();
    if (needs_ppr) in.pi = detail::load_ppr_artifact(cfg, n);
    if (needs_sigma) {
        for (const double eps : cfg.epsilons) {
            in.sigmas.emplace(eps, detail::load_sigma_artifact(cfg, eps, n));
        }
    }
    return in;
}

PropagationArtifacts artifacts_for(const ExperimentConfig& cfg, const SharedInputs& in,
                                   const CellSpec& cell) {
    PropagationArtifacts art;
    art.alpha = cfg.alpha;
    art.power_steps = cfg.power_steps;
    switch (cell.kind) {
        case ModelKind::Gcn:
        case ModelKind::Appnp: art.a_hat = &in.a_hat; break;
        case ModelKind::Ppnp: art.ppr = &*in.pi; break;
        case ModelKind::Scnp: art.sigma = &in.sigmas.at(*cell.eps); break;
    }
    return art;
}

// Trains one cell and fills the row's metric fields. The JSONL history is
// written as a side effect. Throws on failure; the sweep catches per cell.
TrainResult run_cell(const ExperimentConfig& cfg, const SharedInputs& in,
                     const CellSpec& cell, const fs::path& runs, SweepRow& row) {
    const Dataset& data = *in.data;
    const Split split =
        make_split(data, cfg.per_class_train, cfg.val_size, cell.seed);
    const TrainConfig tc = cfg.train_config(cell.epochs, cell.seed);
    const PropagationArtifacts art = artifacts_for(cfg, in, cell);
    TrainResult result = train(cell.kind, data, split, tc, art, cfg.hidden);

    const DenseMatrix probs =
        detail::eval_probs(cell.kind, data, art, result.params, tc);
    row.train_acc = result.history.back().train_acc;
    row.val_acc = result.history.back().val_acc;
    row.test_acc = accuracy(probs, data.labels, split.test);
    row.macro_f1 = macro_f1(probs, data.labels, split.test);
    detail::write_cell_history(row, result, history_path(runs, row));
    return result;
}

std::string fmt4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

SweepRow make_row(const ExperimentConfig& cfg, const CellSpec& cell,
                  const std::string& hash) {
    SweepRow row;
    row.dataset = cfg.effective_name();
    row.model = cell.model;
    row.epsilon = cell.eps ? format_number(*cell.eps) : std::string();
    row.alpha = cfg.alpha;
    row.epochs = cell.epochs;
    row.seed = cell.seed;
    row.config_hash = hash;
    return row;
}

}  // namespace

void run_train(const ExperimentConfig& cfg, std::ostream& log) {
    cfg.validate();
    if (cfg.models.size() != 1) {
        throw ConfigError("train takes exactly one model, got " +
                          std::to_string(cfg.models.size()));
    }
    CellSpec cell;
    cell.model = cfg.models.front();
    cell.kind = parse_model_kind(cell.model);
    if (cell.kind == ModelKind::Scnp) cell.eps = cfg.epsilons.front();
    cell.epochs = cfg.epochs.front();
    cell.seed = cfg.base_seed;

    const PreparedDataset pd = prepare_dataset(cfg);
    for (const auto& w : pd.warnings) log << "warning: " << w << "\n";
    ExperimentConfig one = cfg;
    one.models = {cell.model};
    SharedInputs in = load_shared_inputs(one, pd.data);

    fs::create_directories(runs_dir(cfg));
    fs::create_directories(cfg.out_dir / "checkpoints");
    write_config_echo(cfg);

    SweepRow row = make_row(cfg, cell, config_hash_hex(cfg));
    const auto t0 = clock_type::now();
    const TrainResult result = run_cell(cfg, in, cell, runs_dir(cfg), row);
    row.wall_time = std::chrono::duration<double>(clock_type::now() - t0).count();

    const fs::path history = history_path(runs_dir(cfg), row);
    fs::path ckpt = cfg.out_dir / "checkpoints" / history.filename();
    ckpt.replace_extension(".ckpt");
    save_checkpoint(result.params, cfg.train_config(cell.epochs, cell.seed), ckpt);

    log << cell.model;
    if (cell.eps) log << " eps=" << row.epsilon;
    log << " epochs=" << cell.epochs << " seed=" << cell.seed
        << ": train_acc=" << fmt4(row.train_acc) << " val_acc=" << fmt4(row.val_acc)
        << " test_acc=" << fmt4(row.test_acc) << " macro_f1=" << fmt4(row.macro_f1)
        << "\n";
    log << "wrote " << history.string() << "\n";
    log << "wrote " << ckpt.string() << "\n";
}

void run_sweep(const ExperimentConfig& cfg, std::ostream& log) {
    cfg.validate();
    const std::string hash = config_hash_hex(cfg);
    fs::create_directories(runs_dir(cfg));
    write_config_echo(cfg);

    // Canonical cell order; the CSV is always written in this order.
    std::vector<CellSpec> cells;
    for (const auto& name : cfg.models) {
        const ModelKind kind = parse_model_kind(name);
        std::vector<std::optional<double>> eps_slots;
        if (kind == ModelKind::Scnp) {
            for (const double e : cfg.epsilons) eps_slots.emplace_back(e);
        } else {
            eps_slots.emplace_back(std::nullopt);
        }
        for (const auto& eps : eps_slots) {
            for (const std::size_t ep : cfg.epochs) {
                for (std::size_t r = 0; r < cfg.runs; ++r) {
                    CellSpec c;
                    c.model = name;
                    c.kind = kind;
                    c.eps = eps;
                    c.epochs = ep;
                    c.seed = cfg.base_seed + r;
                    cells.push_back(c);
                }
            }
        }
    }

    std::vector<SweepRow> rows;
    rows.reserve(cells.size());
    std::map<std::string, std::size_t> index_of;
    for (const auto& cell : cells) {
        SweepRow row = make_row(cfg, cell, hash);
        if (index_of.count(row.key()) != 0) continue;  // duplicate grid entry
        index_of.emplace(row.key(), rows.size());
        rows.push_back(std::move(row));
    }
    if (rows.size() != cells.size()) {
        std::vector<CellSpec> unique;
        std::map<std::string, bool> seen;
        for (const auto& cell : cells) {
            const std::string key = make_row(cfg, cell, hash).key();
            if (!seen.emplace(key, true).second) continue;
            unique.push_back(cell);
        }
        cells = std::move(unique);
    }

    // Resume: rows already finished in a previous run are kept verbatim.
    std::vector<char> done(cells.size(), 0);
    std::size_t reused = 0;
    const fs::path csv = results_csv_path(cfg);
    if (fs::exists(csv)) {
        for (const SweepRow& old : read_sweep_csv(csv)) {
            if (old.config_hash != hash) {
                throw ConfigError(csv.string() +
                                  " came from a different configuration (hash " +
                                  old.config_hash + ", current " + hash +
                                  "); use a fresh out_dir");
            }
            const auto it = index_of.find(old.key());
            if (it == index_of.end() || !old.error.empty()) continue;
            rows[it->second] = old;
            done[it->second] = 1;
            ++reused;
        }
        log << "resuming: " << reused << " of " << cells.size()
            << " cells already finished\n";
    }

    const PreparedDataset pd = prepare_dataset(cfg);
    for (const auto& w : pd.warnings) log << "warning: " << w << "\n";
    const SharedInputs in = load_shared_inputs(cfg, pd.data);
    log << "dataset " << cfg.effective_name() << ": " << pd.data.graph.node_count()
        << " nodes, " << cells.size() << " cells, " << cfg.threads << " worker(s)\n";

    std::atomic<std::size_t> next{0};
    auto work = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            if (done[i]) continue;
            const auto t0 = clock_type::now();
            try {
                run_cell(cfg, in, cells[i], runs_dir(cfg), rows[i]);
                rows[i].wall_time =
                    std::chrono::duration<double>(clock_type::now() - t0).count();
            } catch (const std::exception& e) {
                rows[i].error = e.what();
            }
        }
    };
    const std::size_t workers = std::min(cfg.threads, cells.size());
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();

    std::size_t failed = 0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const SweepRow& row = rows[i];
        log << row.model;
        if (!row.epsilon.empty()) log << " eps=" << row.epsilon;
        log << " epochs=" << row.epochs << " seed=" << row.seed << ": ";
        if (!row.error.empty()) {
            ++failed;
            log << "error: " << row.error << "\n";
        } else {
            log << "test_acc=" << fmt4(row.test_acc)
                << " macro_f1=" << fmt4(row.macro_f1);
            if (done[i]) log << " (reused)";
            log << "\n";
        }
    }

    fs::path tmp = csv;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw IoError("cannot write " + tmp.string());
        f << kSweepCsvHeader << "\n";
        for (const SweepRow& row : rows) f << sweep_row_csv(row) << "\n";
        if (!f) throw IoError("short write to " + tmp.string());
    }
    fs::rename(tmp, csv);
    log << "wrote " << csv.string() << " (" << rows.size() << " rows, " << reused
        << " reused, " << failed << " failed)\n";
}

}  // namespace scnp
