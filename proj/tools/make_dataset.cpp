// Writes a synthetic planted-partition dataset in the TSV layout the main
// tool consumes. Nodes are split into equal classes; same-class pairs are
// wired with --p-in, cross-class pairs with --p-out, and each node draws a
// handful of features biased toward a class-specific column block. Handy
// for demos and scale tests when no real dataset is at hand.

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "scnp/rng.hpp"

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) {
        std::cerr << "error: cannot write " << path.string() << "\n";
        std::exit(3);
    }
    return f;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"generate a planted-partition TSV dataset"};
    std::size_t nodes = 400;
    std::size_t classes = 4;
    std::size_t features = 64;
    std::size_t nnz_per_node = 6;
    double p_in = 0.05;
    double p_out = 0.002;
    double signal = 0.8;  // share of feature draws landing in the class block
    std::uint64_t seed = 1;
    std::string out = "data/synthetic";
    app.add_option("--nodes", nodes, "node count");
    app.add_option("--classes", classes, "class count");
    app.add_option("--features", features, "feature columns");
    app.add_option("--nnz-per-node", nnz_per_node, "feature entries per node");
    app.add_option("--p-in", p_in, "same-class edge probability");
    app.add_option("--p-out", p_out, "cross-class edge probability");
    app.add_option("--signal", signal, "fraction of in-block feature draws");
    app.add_option("--seed", seed, "generator seed");
    app.add_option("--out", out, "output directory");
    CLI11_PARSE(app, argc, argv);

    if (nodes == 0 || classes == 0 || features < classes || nodes < classes) {
        std::cerr << "error: need nodes >= classes >= 1 and features >= classes\n";
        return 2;
    }

    fs::create_directories(out);
    scnp::Rng rng(seed);

    auto label_of = [&](std::size_t i) { return i % classes; };

    {
        auto f = open_out(fs::path(out) / "labels.tsv");
        for (std::size_t i = 0; i < nodes; ++i) {
            f << "n" << i << "\tc" << label_of(i) << "\n";
        }
    }
    {
        auto f = open_out(fs::path(out) / "edges.tsv");
        std::size_t count = 0;
        for (std::size_t u = 0; u < nodes; ++u) {
            for (std::size_t v = u + 1; v < nodes; ++v) {
                const double p = label_of(u) == label_of(v) ? p_in : p_out;
                if (rng.bernoulli(p)) {
                    f << "n" << u << "\tn" << v << "\n";
                    ++count;
                }
            }
        }
        std::cout << "edges: " << count << "\n";
    }
    {
        auto f = open_out(fs::path(out) / "features.tsv");
        const std::size_t block = features / classes;
        std::vector<std::size_t> cols;
        for (std::size_t i = 0; i < nodes; ++i) {
            const std::size_t base = label_of(i) * block;
            cols.clear();
            for (std::size_t d = 0; d < nnz_per_node && cols.size() < features; ++d) {
                std::size_t col;
                do {
                    if (rng.bernoulli(signal)) {
                        col = base + rng.below(block);
                    } else {
                        col = rng.below(features);
                    }
                } while (std::find(cols.begin(), cols.end(), col) != cols.end());
                cols.push_back(col);
                const double value = 0.5 + rng.uniform01();
                f << "n" << i << "\t" << col << "\t" << value << "\n";
            }
        }
    }
    std::cout << "wrote " << out << " (" << nodes << " nodes, " << classes
              << " classes, " << features << " feature columns)\n";
    return 0;
}
