#include <doctest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "scnp/error.hpp"
#include "scnp/experiment.hpp"
#include "scnp/harness.hpp"
#include "scnp/nn.hpp"

using namespace scnp;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static std::atomic<int> counter{0};
        path = fs::temp_directory_path() /
               ("scnp_harness_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter.fetch_add(1)));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

fs::path toy_dir() { return fs::path(SCNP_SOURCE_ROOT) / "data" / "toy"; }

// A small grid that finishes instantly on the bundled 12-node dataset.
ExperimentConfig toy_config(const fs::path& out) {
    ExperimentConfig cfg;
    cfg.dataset_dir = toy_dir();
    cfg.out_dir = out;
    cfg.models = {"scnp", "ppnp"};
    cfg.epsilons = {1e-3};
    cfg.epochs = {4};
    cfg.runs = 2;
    cfg.per_class_train = 3;
    cfg.val_size = 2;
    return cfg;
}

std::string slurp(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    REQUIRE(bool(f));
    std::ostringstream out;
    out << f.rdbuf();
    return out.str();
}

void spit(const fs::path& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary);
    f << text;
}

int run_cli(const std::string& args) {
    const std::string cmd =
        std::string(SCNP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("library errors map onto the documented exit codes") {
    CHECK(exit_code_for(ConfigError("x")) == 2);
    CHECK(exit_code_for(EmptyMask("x")) == 2);
    CHECK(exit_code_for(TooFewNodes("x")) == 2);
    CHECK(exit_code_for(IoError("x")) == 3);
    CHECK(exit_code_for(ParseError("x")) == 3);
    CHECK(exit_code_for(CorruptFile("x")) == 3);
    CHECK(exit_code_for(MissingArtifact("x")) == 3);
    CHECK(exit_code_for(StaleCache("x")) == 3);
    CHECK(exit_code_for(VersionMismatch("x")) == 3);
    CHECK(exit_code_for(NumericError("x")) == 4);
    CHECK(exit_code_for(SingularSystem("x")) == 4);
    CHECK(exit_code_for(ShapeMismatch("x")) == 4);
    CHECK(exit_code_for(LengthMismatch("x")) == 4);
    CHECK(exit_code_for(ZeroDegree("x")) == 4);
    CHECK(exit_code_for(std::runtime_error("x")) == 1);
}

TEST_CASE("compact number rendering for names and CSV cells") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(1e-4) == "0.0001");
    CHECK(format_number(1e-5) == "1e-05");
    CHECK(format_number(0.0) == "0");
    CHECK(format_number(2.0) == "2");
}

TEST_CASE("csv field quoting") {
    CHECK(csv_quote("plain") == "plain");
    CHECK(csv_quote("") == "");
    CHECK(csv_quote("a,b") == "\"a,b\"");
    CHECK(csv_quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_quote("two\nlines") == "\"two\nlines\"");
}

TEST_CASE("sweep rows survive the CSV round trip") {
    TempDir tmp;
    const fs::path csv = tmp.path / "results.csv";

    SweepRow ok;
    ok.dataset = "toy";
    ok.model = "scnp";
    ok.epsilon = "0.001";
    ok.alpha = 0.1;
    ok.epochs = 80;
    ok.seed = 3;
    ok.train_acc = 0.9876543211;
    ok.val_acc = 0.72;
    ok.test_acc = 0.8125;
    ok.macro_f1 = 0.8012345678;
    ok.wall_time = 1.234;
    ok.config_hash = "0123456789abcdef";

    SweepRow bad = ok;
    bad.model = "ppnp";
    bad.epsilon.clear();
    bad.seed = 4;
    bad.error = "solver blew up, \"twice\", sadly";

    spit(csv, std::string(kSweepCsvHeader) + "\n" + sweep_row_csv(ok) + "\n" +
                  sweep_row_csv(bad) + "\n");
    const auto rows = read_sweep_csv(csv);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].dataset == "toy");
    CHECK(rows[0].model == "scnp");
    CHECK(rows[0].epsilon == "0.001");
    CHECK(rows[0].alpha == 0.1);
    CHECK(rows[0].epochs == 80);
    CHECK(rows[0].seed == 3);
    CHECK(rows[0].train_acc == ok.train_acc);
    CHECK(rows[0].val_acc == ok.val_acc);
    CHECK(rows[0].test_acc == ok.test_acc);
    CHECK(rows[0].macro_f1 == ok.macro_f1);
    CHECK(rows[0].wall_time == 1.234);
    CHECK(rows[0].error.empty());
    CHECK(rows[0].config_hash == "0123456789abcdef");
    CHECK(rows[1].error == bad.error);
    CHECK(rows[1].epsilon.empty());
    // metric cells of failed rows are written empty and read back as zero
    CHECK(rows[1].train_acc == 0.0);
    CHECK(rows[1].test_acc == 0.0);

    SUBCASE("rewriting parsed rows reproduces the bytes") {
        std::string again = std::string(kSweepCsvHeader) + "\n";
        for (const auto& row : rows) again += sweep_row_csv(row) + "\n";
        CHECK(again == slurp(csv));
    }
}

TEST_CASE("results file validation") {
    TempDir tmp;
    const fs::path csv = tmp.path / "results.csv";
    CHECK_THROWS_AS(read_sweep_csv(csv), IoError);

    spit(csv, "wrong,header\n");
    CHECK_THROWS_AS(read_sweep_csv(csv), CorruptFile);

    spit(csv, std::string(kSweepCsvHeader) + "\ntoy,scnp,0.001\n");
    CHECK_THROWS_AS(read_sweep_csv(csv), CorruptFile);

    spit(csv, std::string(kSweepCsvHeader) + "\n");
    CHECK(read_sweep_csv(csv).empty());
}

TEST_CASE("history files are named by cell identity") {
    SweepRow row;
    row.dataset = "my data";  // spaces are made filesystem-safe
    row.model = "scnp";
    row.epsilon = "0.0001";
    row.epochs = 8;
    row.seed = 11;
    CHECK(history_path("runs", row) ==
          fs::path("runs") / "my-data_scnp_e0.0001_ep8_s11.jsonl");
    row.epsilon.clear();
    row.model = "gcn";
    CHECK(history_path("runs", row) == fs::path("runs") / "my-data_gcn_ep8_s11.jsonl");
}

TEST_CASE("file checksums match a direct FNV-1a computation") {
    TempDir tmp;
    const fs::path file = tmp.path / "bytes.bin";
    const std::string payload = "correlation artifacts\n";
    spit(file, payload);

    std::uint64_t expect = 14695981039346656037ull;
    for (const unsigned char c : payload) {
        expect ^= c;
        expect *= 1099511628211ull;
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", (unsigned long long)expect);
    CHECK(file_checksum_hex(file) == hex);

    spit(file, "");
    CHECK(file_checksum_hex(file) == "cbf29ce484222325");  // FNV-1a offset basis

    CHECK_THROWS_AS(file_checksum_hex(tmp.path / "absent.bin"), IoError);
}

TEST_CASE("prepare_dataset applies the configured cleanup") {
    TempDir tmp;
    ExperimentConfig cfg;
    cfg.dataset_dir = toy_dir();
    cfg.out_dir = tmp.path;

    SUBCASE("toy dataset loads whole") {
        const PreparedDataset pd = prepare_dataset(cfg);
        CHECK(pd.data.graph.node_count() == 12);
        CHECK(pd.raw_node_count == 12);
        CHECK(pd.data.class_count == 2);
    }

    SUBCASE("stray component is dropped unless asked otherwise") {
        const fs::path ds = tmp.path / "ds";
        fs::create_directories(ds);
        spit(ds / "labels.tsv", "a\tx\nb\tx\nc\ty\nd\ty\nlone\ty\n");
        spit(ds / "edges.tsv", "a\tb\nb\tc\nc\td\n");
        spit(ds / "features.tsv", "a\t0\t1\nb\t1\t1\nc\t0\t2\nd\t1\t2\nlone\t0\t5\n");
        cfg.dataset_dir = ds;
        PreparedDataset pd = prepare_dataset(cfg);
        CHECK(pd.raw_node_count == 5);
        CHECK(pd.data.graph.node_count() == 4);

        cfg.largest_component = false;
        pd = prepare_dataset(cfg);
        CHECK(pd.data.graph.node_count() == 5);
    }

    SUBCASE("feature rows can be normalized to unit sum") {
        cfg.normalize_features = true;
        const PreparedDataset pd = prepare_dataset(cfg);
        const auto row_ptr = pd.data.features.row_ptr();
        const auto values = pd.data.features.values();
        for (std::size_t i = 0; i < pd.data.features.rows(); ++i) {
            double sum = 0.0;
            for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) sum += values[k];
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
}

TEST_CASE("precompute builds, caches, and invalidates artifacts") {
    TempDir tmp;
    ExperimentConfig cfg = toy_config(tmp.path / "out");
    std::ostringstream log;

    run_precompute(cfg, log);
    const fs::path ppr = ppr_artifact_path(cfg);
    const fs::path sigma = sigma_artifact_path(cfg, 1e-3);
    CHECK(fs::exists(ppr));
    CHECK(fs::exists(sigma));
    CHECK(fs::exists(artifacts_dir(cfg) / "artifacts.json"));

    SUBCASE("second call is a no-op") {
        const auto before = fs::last_write_time(ppr);
        std::ostringstream log2;
        run_precompute(cfg, log2);
        CHECK(log2.str().find("up to date") != std::string::npos);
        CHECK(fs::last_write_time(ppr) == before);
    }

    SUBCASE("a new threshold reuses the cached teleport matrix") {
        const auto before = fs::last_write_time(ppr);
        ExperimentConfig more = cfg;
        more.epsilons = {1e-3, 1e-2};
        std::ostringstream log2;
        run_precompute(more, log2);
        CHECK(fs::exists(sigma_artifact_path(more, 1e-2)));
        CHECK(fs::last_write_time(ppr) == before);
    }

    SUBCASE("changed inputs force a rebuild") {
        // Point the same artifact tree at a modified copy of the dataset.
        const fs::path ds = tmp.path / "toy";
        fs::create_directories(ds);
        for (const char* name : {"edges.tsv", "features.tsv", "labels.tsv"}) {
            fs::copy_file(toy_dir() / name, ds / name);
        }
        ExperimentConfig moved = cfg;
        moved.dataset_dir = ds;
        std::ostringstream log0;
        run_precompute(moved, log0);  // same bytes: still cached
        CHECK(log0.str().find("up to date") != std::string::npos);

        spit(ds / "edges.tsv", slurp(ds / "edges.tsv") + "a1\tb4\n");
        std::ostringstream log2;
        run_precompute(moved, log2);
        CHECK(log2.str().find("discarding") != std::string::npos);
        CHECK(fs::exists(ppr_artifact_path(moved)));
    }

    SUBCASE("changed correlation options force a rebuild") {
        ExperimentConfig literal = cfg;
        literal.literal_algorithm1 = true;
        std::ostringstream log2;
        run_precompute(literal, log2);
        CHECK(log2.str().find("discarding") != std::string::npos);
    }
}

TEST_CASE("sweep runs the grid, resumes, and reproduces itself") {
    TempDir tmp;
    ExperimentConfig cfg = toy_config(tmp.path / "out");
    std::ostringstream log;
    run_precompute(cfg, log);
    run_sweep(cfg, log);

    const fs::path csv = results_csv_path(cfg);
    REQUIRE(fs::exists(csv));
    const std::string first = slurp(csv);
    auto rows = read_sweep_csv(csv);
    REQUIRE(rows.size() == 4);  // scnp x 1 threshold x 2 seeds + ppnp x 2 seeds
    const std::string hash = config_hash_hex(cfg);
    for (const auto& row : rows) {
        CHECK(row.error.empty());
        CHECK(row.config_hash == hash);
        CHECK(row.train_acc >= 0.0);
        CHECK(row.train_acc <= 1.0);
        CHECK(row.test_acc >= 0.0);
        CHECK(row.test_acc <= 1.0);
        CHECK(row.wall_time > 0.0);
        CHECK(fs::exists(history_path(runs_dir(cfg), row)));
    }
    CHECK(rows[0].model == "scnp");
    CHECK(rows[0].epsilon == "0.001");
    CHECK(rows[2].model == "ppnp");
    CHECK(rows[2].epsilon.empty());
    CHECK(fs::exists(cfg.out_dir / "config.txt"));
    CHECK(slurp(cfg.out_dir / "config.txt").find(hash) != std::string::npos);

    SUBCASE("rerunning over a complete file reuses every row byte for byte") {
        std::ostringstream log2;
        run_sweep(cfg, log2);
        CHECK(slurp(csv) == first);
        CHECK(log2.str().find("resuming: 4 of 4") != std::string::npos);
    }

    SUBCASE("a truncated results file is filled back in") {
        std::istringstream in(first);
        std::string header, row1;
        std::getline(in, header);
        std::getline(in, row1);
        spit(csv, header + "\n" + row1 + "\n");
        std::ostringstream log2;
        run_sweep(cfg, log2);
        const auto again = read_sweep_csv(csv);
        REQUIRE(again.size() == 4);
        // the kept row is verbatim, recomputed rows agree on every metric
        CHECK(sweep_row_csv(again[0]) == row1);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(again[i].train_acc == rows[i].train_acc);
            CHECK(again[i].val_acc == rows[i].val_acc);
            CHECK(again[i].test_acc == rows[i].test_acc);
            CHECK(again[i].macro_f1 == rows[i].macro_f1);
        }
    }

    SUBCASE("an out tree from other settings is refused") {
        ExperimentConfig other = cfg;
        other.alpha = 0.2;
        std::ostringstream log2;
        CHECK_THROWS_AS(run_sweep(other, log2), ConfigError);
    }

    SUBCASE("a fresh tree reproduces identical histories and metrics") {
        ExperimentConfig cfg2 = toy_config(tmp.path / "out2");
        std::ostringstream log2;
        run_precompute(cfg2, log2);
        run_sweep(cfg2, log2);
        const auto rows2 = read_sweep_csv(results_csv_path(cfg2));
        REQUIRE(rows2.size() == 4);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(rows2[i].train_acc == rows[i].train_acc);
            CHECK(rows2[i].test_acc == rows[i].test_acc);
            CHECK(rows2[i].macro_f1 == rows[i].macro_f1);
            CHECK(slurp(history_path(runs_dir(cfg2), rows2[i])) ==
                  slurp(history_path(runs_dir(cfg), rows[i])));
        }
    }

    SUBCASE("worker count does not change any result") {
        ExperimentConfig par = toy_config(tmp.path / "out_par");
        par.threads = 3;
        std::ostringstream log2;
        run_precompute(par, log2);
        run_sweep(par, log2);
        const auto rows2 = read_sweep_csv(results_csv_path(par));
        REQUIRE(rows2.size() == 4);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(rows2[i].key() == rows[i].key());
            CHECK(rows2[i].train_acc == rows[i].train_acc);
            CHECK(rows2[i].test_acc == rows[i].test_acc);
        }
    }

    SUBCASE("missing artifacts stop the sweep before any cell runs") {
        ExperimentConfig broken = cfg;
        broken.out_dir = tmp.path / "out_broken";
        std::ostringstream log2;
        run_precompute(broken, log2);
        fs::remove(sigma_artifact_path(broken, 1e-3));
        CHECK_THROWS_AS(run_sweep(broken, log2), MissingArtifact);
    }
}

TEST_CASE("single cells that fail mid-sweep leave error rows") {
    // A validation size that exhausts the nodes makes the test mask empty,
    // which surfaces per cell instead of killing the sweep.
    TempDir tmp;
    ExperimentConfig cfg = toy_config(tmp.path / "out");
    cfg.models = {"ppnp"};
    cfg.val_size = 6;  // 6 train + 6 val = all 12 nodes, empty test set
    std::ostringstream log;
    run_precompute(cfg, log);
    run_sweep(cfg, log);
    const auto rows = read_sweep_csv(results_csv_path(cfg));
    REQUIRE(rows.size() == 2);
    for (const auto& row : rows) {
        CHECK_FALSE(row.error.empty());
    }
    CHECK(log.str().find("2 failed") != std::string::npos);
}

TEST_CASE("train command produces a checkpoint and a history") {
    TempDir tmp;
    ExperimentConfig cfg = toy_config(tmp.path / "out");
    cfg.models = {"scnp"};
    cfg.epochs = {6};
    cfg.base_seed = 9;
    std::ostringstream log;
    run_precompute(cfg, log);
    run_train(cfg, log);

    const fs::path hist = runs_dir(cfg) / "toy_scnp_e0.001_ep6_s9.jsonl";
    const fs::path ckpt = cfg.out_dir / "checkpoints" / "toy_scnp_e0.001_ep6_s9.ckpt";
    CHECK(fs::exists(hist));
    REQUIRE(fs::exists(ckpt));
    const Checkpoint back = load_checkpoint(ckpt);
    CHECK(back.config.seed == 9);
    CHECK(back.config.max_epochs == 6);
    CHECK(back.params.hidden_size() == cfg.hidden);
    CHECK(back.params.class_count() == 2);

    SUBCASE("exactly one model is required") {
        cfg.models = {"scnp", "ppnp"};
        std::ostringstream log2;
        CHECK_THROWS_AS(run_train(cfg, log2), ConfigError);
    }
}

TEST_CASE("validate command reports the dataset shape") {
    ExperimentConfig cfg;
    cfg.dataset_dir = toy_dir();
    cfg.per_class_train = 3;
    cfg.val_size = 2;
    std::ostringstream log;
    run_validate(cfg, log);
    const std::string out = log.str();
    CHECK(out.find("nodes:      12") != std::string::npos);
    CHECK(out.find("classes:    2") != std::string::npos);
    CHECK(out.find("components: 1") != std::string::npos);
    CHECK(out.find("6 train, 2 val, 4 test") != std::string::npos);
    CHECK(out.find("ok") != std::string::npos);
}

TEST_CASE("report aggregates a sweep into tables and charts") {
    TempDir tmp;
    ExperimentConfig cfg = toy_config(tmp.path / "out");
    std::ostringstream log;
    run_precompute(cfg, log);
    run_sweep(cfg, log);

    ReportOptions opt;
    opt.results_dir = cfg.out_dir;
    run_report(opt, log);

    const fs::path report = cfg.out_dir / "report";
    REQUIRE(fs::exists(report / "aggregate.csv"));
    const std::string agg = slurp(report / "aggregate.csv");
    CHECK(agg.find("dataset,model,epsilon,epochs,runs,") == 0);
    // one group per (model, threshold): ppnp and scnp@0.001
    CHECK(std::count(agg.begin(), agg.end(), '\n') == 3);
    CHECK(agg.find("toy,ppnp,,4,2,") != std::string::npos);
    CHECK(agg.find("toy,scnp,0.001,4,2,") != std::string::npos);
    CHECK(agg.find(config_hash_hex(cfg)) != std::string::npos);

    for (const char* name :
         {"test_accuracy_toy.svg", "macro_f1_toy.svg", "curves_toy.svg"}) {
        REQUIRE(fs::exists(report / name));
        const std::string svg = slurp(report / name);
        CHECK(svg.find("<svg") != std::string::npos);
        CHECK(svg.find("config_hash " + config_hash_hex(cfg)) != std::string::npos);
    }

    SUBCASE("report output is deterministic") {
        const std::string agg1 = slurp(report / "aggregate.csv");
        const std::string curves1 = slurp(report / "curves_toy.svg");
        std::ostringstream log2;
        run_report(opt, log2);
        CHECK(slurp(report / "aggregate.csv") == agg1);
        CHECK(slurp(report / "curves_toy.svg") == curves1);
    }

    SUBCASE("csv-only skips the charts") {
        fs::remove_all(report);
        ReportOptions csv_only = opt;
        csv_only.csv_only = true;
        std::ostringstream log2;
        run_report(csv_only, log2);
        CHECK(fs::exists(report / "aggregate.csv"));
        CHECK_FALSE(fs::exists(report / "curves_toy.svg"));
    }

    SUBCASE("a missing history is skipped with a warning") {
        const auto rows = read_sweep_csv(results_csv_path(cfg));
        fs::remove(history_path(runs_dir(cfg), rows[0]));
        std::ostringstream log2;
        run_report(opt, log2);
        CHECK(log2.str().find("skipping run history") != std::string::npos);
        CHECK(fs::exists(report / "curves_toy.svg"));
    }

    SUBCASE("mixed configurations are refused unless forced") {
        auto rows = read_sweep_csv(results_csv_path(cfg));
        rows[1].config_hash = "ffffffffffffffff";
        std::string text = std::string(kSweepCsvHeader) + "\n";
        for (const auto& row : rows) text += sweep_row_csv(row) + "\n";
        spit(results_csv_path(cfg), text);

        std::ostringstream log2;
        CHECK_THROWS_AS(run_report(opt, log2), ConfigError);

        ReportOptions forced = opt;
        forced.force = true;
        run_report(forced, log2);
        CHECK(fs::exists(report / "aggregate.csv"));
    }
}

TEST_CASE("command-line binary returns the documented exit codes") {
    TempDir tmp;
    const std::string toy = toy_dir().string();

    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("validate-dataset --dataset-dir " + toy) == 0);
    // unknown model: configuration error
    CHECK(run_cli("train --dataset-dir " + toy + " --model nope --out " +
                  (tmp.path / "o1").string()) == 2);
    // missing dataset directory: file error, message names the path
    CHECK(run_cli("validate-dataset --dataset-dir " + (tmp.path / "nope").string()) ==
          3);
    // unknown flag: parse error
    CHECK(run_cli("sweep --frobnicate") == 2);
    // no subcommand
    CHECK(run_cli("") == 2);
    // artifacts absent: train refuses with a file-layer code
    CHECK(run_cli("train --dataset-dir " + toy +
                  " --model scnp --per-class-train 3 --val-size 2 --out " +
                  (tmp.path / "o2").string()) == 3);
}

TEST_CASE("missing input file is reported by name via the binary") {
    TempDir tmp;
    const fs::path ds = tmp.path / "half";
    fs::create_directories(ds);
    spit(ds / "labels.tsv", "a\tx\nb\ty\n");
    spit(ds / "edges.tsv", "a\tb\n");
    // no features.tsv
    const std::string cmd = std::string(SCNP_CLI_PATH) + " validate-dataset" +
                            " --dataset-dir " + ds.string() + " 2>" +
                            (tmp.path / "err.txt").string() + " >/dev/null";
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    CHECK(WEXITSTATUS(rc) == 3);
    const std::string err = slurp(tmp.path / "err.txt");
    CHECK(err.find("features.tsv") != std::string::npos);
}
