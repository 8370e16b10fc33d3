#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scnp/graph.hpp"
#include "scnp/sparse.hpp"

namespace scnp {

// A node-classification dataset: graph, sparse nonnegative node features
// (n x f), one class label per node. External node ids and class names are
// kept so results can be traced back to the input files.
struct Dataset {
    Graph graph;
    SparseMatrix features;
    std::vector<int> labels;
    std::size_t class_count = 0;
    std::size_t feature_count = 0;
    std::vector<std::string> node_ids;     // index -> external id
    std::vector<std::string> class_names;  // class -> external name, sorted
};

// Disjoint train/validation/test node sets, stored ascending.
struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
    std::vector<std::size_t> test;
    std::uint64_t seed = 0;
    std::size_t per_class_train = 0;
};

// Reads the three tab-separated files described in the README. The label
// file defines the node universe: ids are remapped to [0, n) in first-
// appearance order, class names map to [0, c) in sorted order. Edge
// endpoints and feature rows must name known nodes. Irregularities that
// are repaired rather than fatal (duplicate edges, self-loops, repeated
// feature entries) append to `warnings` when given.
Dataset load_dataset(const std::filesystem::path& edge_path,
                     const std::filesystem::path& feature_path,
                     const std::filesystem::path& label_path,
                     std::vector<std::string>* warnings = nullptr);

// Restricts the dataset to its largest connected component (ties go to the
// component containing the lowest node index). Classes that lose all their
// members are dropped and the remaining ones renumbered; feature columns
// are kept as-is.
Dataset extract_lcc(const Dataset& d);

// Divides each feature row by its sum so rows sum to 1 (rows that are all
// zero stay zero). Off by default everywhere; opt-in via configuration.
void normalize_feature_rows(Dataset& d);

// Seeded split: for each class in ascending order, shuffle its members and
// take the first per_class_train (or all, for smaller classes); then
// shuffle the remaining nodes and take val_size for validation; the rest is
// test. All draws come from one Rng(seed) in exactly that order, so a seed
// pins the split across machines.
Split make_split(const Dataset& d, std::size_t per_class_train, std::size_t val_size,
                 std::uint64_t seed);

// Plain-text persistence: "train:"/"val:"/"test:" lines with comma-
// separated indices, a "seed:" line, and a "per_class_train:" line.
void save_split(const Split& s, const std::filesystem::path& path);
Split load_split(const std::filesystem::path& path, std::size_t node_count);

// One "index<TAB>external_id" line per node, for tracing results back.
void save_node_map(const Dataset& d, const std::filesystem::path& path);

}  // namespace scnp
