#include "scnp/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "scnp/error.hpp"
#include "scnp/rng.hpp"

namespace scnp {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            fields.push_back(line.substr(start));
            return fields;
        }
        fields.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
}

std::string at_line(const std::filesystem::path& path, std::size_t line_no,
                    const std::string& what) {
    return path.string() + ":" + std::to_string(line_no) + ": " + what;
}

double parse_double(const std::string& s, const std::filesystem::path& path,
                    std::size_t line_no) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
        throw ParseError(at_line(path, line_no, "bad number '" + s + "'"));
    }
    return v;
}

std::size_t parse_index(const std::string& s, const std::filesystem::path& path,
                        std::size_t line_no) {
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
        throw ParseError(at_line(path, line_no, "bad index '" + s + "'"));
    }
    errno = 0;
    char* end = nullptr;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (errno != 0 || end != s.c_str() + s.size()) {
        throw ParseError(at_line(path, line_no, "bad index '" + s + "'"));
    }
    return static_cast<std::size_t>(v);
}

// Yields (line_no, content) for each meaningful line; skips blanks and
// '#'-prefixed comments, strips a trailing CR.
template <class Fn>
void for_each_line(const std::filesystem::path& path, Fn&& fn) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open: " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        fn(line_no, line);
    }
    if (f.bad()) throw IoError("read failed: " + path.string());
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& edge_path,
                     const std::filesystem::path& feature_path,
                     const std::filesystem::path& label_path,
                     std::vector<std::string>* warnings) {
    Dataset d;

    // Labels first: they define the node universe and the class set.
    std::unordered_map<std::string, std::size_t> node_index;
    std::vector<std::string> raw_class;  // per node, external class name
    for_each_line(label_path, [&](std::size_t line_no, const std::string& line) {
        const auto fields = split_tabs(line);
        if (fields.size() != 2 || fields[0].empty() || fields[1].empty()) {
            throw ParseError(at_line(label_path, line_no, "expected 'node<TAB>class'"));
        }
        const bool inserted = node_index.try_emplace(fields[0], d.node_ids.size()).second;
        if (!inserted) {
            throw ParseError(at_line(label_path, line_no,
                                     "node '" + fields[0] + "' labeled twice"));
        }
        d.node_ids.push_back(fields[0]);
        raw_class.push_back(fields[1]);
    });
    if (d.node_ids.empty()) throw ParseError(label_path.string() + ": no nodes defined");

    std::map<std::string, int> class_index;
    for (const auto& c : raw_class) class_index.emplace(c, 0);
    int next_class = 0;
    for (auto& [name, id] : class_index) {
        id = next_class++;
        d.class_names.push_back(name);
    }
    d.class_count = static_cast<std::size_t>(next_class);
    d.labels.reserve(raw_class.size());
    for (const auto& c : raw_class) d.labels.push_back(class_index.at(c));

    const std::size_t n = d.node_ids.size();
    auto lookup = [&](const std::string& id, const std::filesystem::path& path,
                      std::size_t line_no) {
        const auto it = node_index.find(id);
        if (it == node_index.end()) {
            throw UnknownNode(at_line(path, line_no, "unknown node '" + id + "'"));
        }
        return it->second;
    };

    std::vector<Edge> raw_edges;
    for_each_line(edge_path, [&](std::size_t line_no, const std::string& line) {
        const auto fields = split_tabs(line);
        if (fields.size() != 2 && fields.size() != 3) {
            throw ParseError(at_line(edge_path, line_no, "expected 'src<TAB>dst[<TAB>weight]'"));
        }
        Edge e;
        e.u = lookup(fields[0], edge_path, line_no);
        e.v = lookup(fields[1], edge_path, line_no);
        e.weight = fields.size() == 3 ? parse_double(fields[2], edge_path, line_no) : 1.0;
        raw_edges.push_back(e);
    });
    d.graph = Graph::from_raw_edges(n, raw_edges, warnings);

    std::vector<Triplet> feats;
    std::size_t max_feature = 0;
    for_each_line(feature_path, [&](std::size_t line_no, const std::string& line) {
        const auto fields = split_tabs(line);
        if (fields.size() != 3) {
            throw ParseError(
                at_line(feature_path, line_no, "expected 'node<TAB>feature<TAB>value'"));
        }
        Triplet t;
        t.row = lookup(fields[0], feature_path, line_no);
        t.col = parse_index(fields[1], feature_path, line_no);
        t.value = parse_double(fields[2], feature_path, line_no);
        if (t.value < 0.0) {
            throw ParseError(at_line(feature_path, line_no, "negative feature value"));
        }
        max_feature = std::max(max_feature, t.col + 1);
        feats.push_back(t);
    });
    d.feature_count = max_feature;

    if (warnings) {
        auto sorted = feats;
        std::sort(sorted.begin(), sorted.end(), [](const Triplet& a, const Triplet& b) {
            return a.row != b.row ? a.row < b.row : a.col < b.col;
        });
        for (std::size_t k = 1; k < sorted.size(); ++k) {
            if (sorted[k].row == sorted[k - 1].row && sorted[k].col == sorted[k - 1].col) {
                warnings->push_back("summed repeated feature entry for node '" +
                                    d.node_ids[sorted[k].row] + "' feature " +
                                    std::to_string(sorted[k].col));
            }
        }
    }
    d.features = SparseMatrix::from_triplets(n, d.feature_count, std::move(feats), true);
    return d;
}

Dataset extract_lcc(const Dataset& d) {
    const auto labels = component_labels(d.graph);
    std::size_t component_count = 0;
    for (const auto l : labels) component_count = std::max(component_count, l + 1);
    std::vector<std::size_t> size(component_count, 0);
    for (const auto l : labels) size[l]++;
    // Component ids increase with their lowest node index, so the first
    // maximal one is the tie winner.
    std::size_t best = 0;
    for (std::size_t c = 1; c < component_count; ++c) {
        if (size[c] > size[best]) best = c;
    }

    constexpr auto dropped = static_cast<std::size_t>(-1);
    std::vector<std::size_t> remap(labels.size(), dropped);
    std::size_t kept = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == best) remap[i] = kept++;
    }

    Dataset out;
    out.node_ids.reserve(kept);
    std::vector<int> old_labels;
    old_labels.reserve(kept);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (remap[i] == dropped) continue;
        out.node_ids.push_back(d.node_ids[i]);
        old_labels.push_back(d.labels[i]);
    }

    // Renumber classes in case one lost all members; sorted name order is
    // preserved because we keep the original relative order.
    std::vector<bool> class_alive(d.class_count, false);
    for (const int c : old_labels) class_alive[static_cast<std::size_t>(c)] = true;
    std::vector<int> class_remap(d.class_count, -1);
    int next = 0;
    for (std::size_t c = 0; c < d.class_count; ++c) {
        if (class_alive[c]) {
            class_remap[c] = next++;
            out.class_names.push_back(d.class_names[c]);
        }
    }
    out.class_count = static_cast<std::size_t>(next);
    out.labels.reserve(kept);
    for (const int c : old_labels) out.labels.push_back(class_remap[static_cast<std::size_t>(c)]);

    std::vector<Edge> edges;
    for (const auto& e : d.graph.edges()) {
        if (remap[e.u] != dropped && remap[e.v] != dropped) {
            edges.push_back({remap[e.u], remap[e.v], e.weight});
        }
    }
    out.graph = Graph(kept, std::move(edges));

    std::vector<Triplet> feats;
    const auto row_ptr = d.features.row_ptr();
    const auto col_idx = d.features.col_idx();
    const auto values = d.features.values();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (remap[i] == dropped) continue;
        for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) {
            feats.push_back({remap[i], col_idx[p], values[p]});
        }
    }
    out.feature_count = d.feature_count;
    out.features = SparseMatrix::from_triplets(kept, d.feature_count, std::move(feats));
    return out;
}

void normalize_feature_rows(Dataset& d) {
    auto vals = d.features.values_mut();
    const auto row_ptr = d.features.row_ptr();
    for (std::size_t i = 0; i < d.features.rows(); ++i) {
        double s = 0.0;
        for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) s += vals[p];
        if (s <= 0.0) continue;
        for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p) vals[p] /= s;
    }
}

Split make_split(const Dataset& d, std::size_t per_class_train, std::size_t val_size,
                 std::uint64_t seed) {
    const std::size_t n = d.graph.node_count();
    if (d.class_count != 0 && per_class_train != 0 && per_class_train > n / d.class_count) {
        throw TooFewNodes("split needs more nodes than the dataset has");
    }
    const std::size_t train_max = per_class_train * d.class_count;
    if (train_max > n || val_size > n - train_max) {
        throw TooFewNodes("split needs more nodes than the dataset has");
    }
    Split s;
    s.seed = seed;
    s.per_class_train = per_class_train;
    Rng rng(seed);

    std::vector<bool> in_train(n, false);
    for (std::size_t c = 0; c < d.class_count; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < n; ++i) {
            if (d.labels[i] == static_cast<int>(c)) members.push_back(i);
        }
        rng.shuffle(members);
        const std::size_t take = std::min(per_class_train, members.size());
        for (std::size_t k = 0; k < take; ++k) {
            s.train.push_back(members[k]);
            in_train[members[k]] = true;
        }
    }

    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < n; ++i) {
        if (!in_train[i]) rest.push_back(i);
    }
    rng.shuffle(rest);
    s.val.assign(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(val_size));
    s.test.assign(rest.begin() + static_cast<std::ptrdiff_t>(val_size), rest.end());

    std::sort(s.train.begin(), s.train.end());
    std::sort(s.val.begin(), s.val.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

namespace {

std::string join_indices(const std::vector<std::size_t>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(v[i]);
    }
    return out;
}

std::vector<std::size_t> parse_index_list(const std::string& body,
                                          const std::filesystem::path& path,
                                          std::size_t line_no) {
    std::vector<std::size_t> out;
    std::string item;
    std::istringstream ss(body);
    while (std::getline(ss, item, ',')) {
        const std::size_t from = item.find_first_not_of(' ');
        const std::size_t to = item.find_last_not_of(' ');
        if (from == std::string::npos) {
            throw ParseError(at_line(path, line_no, "empty index"));
        }
        out.push_back(parse_index(item.substr(from, to - from + 1), path, line_no));
    }
    return out;
}

}  // namespace

void save_split(const Split& s, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    f << "train: " << join_indices(s.train) << "\n";
    f << "val: " << join_indices(s.val) << "\n";
    f << "test: " << join_indices(s.test) << "\n";
    f << "seed: " << s.seed << "\n";
    f << "per_class_train: " << s.per_class_train << "\n";
    if (!f) throw IoError("write failed: " + path.string());
}

Split load_split(const std::filesystem::path& path, std::size_t node_count) {
    Split s;
    bool have_train = false, have_val = false, have_test = false, have_seed = false;
    for_each_line(path, [&](std::size_t line_no, const std::string& line) {
        const std::size_t colon = line.find(':');
        if (colon == std::string::npos) {
            throw ParseError(at_line(path, line_no, "expected 'key: value'"));
        }
        const std::string key = line.substr(0, colon);
        std::string body = line.substr(colon + 1);
        const std::size_t from = body.find_first_not_of(' ');
        body = from == std::string::npos ? std::string() : body.substr(from);
        if (key == "train") {
            s.train = parse_index_list(body, path, line_no);
            have_train = true;
        } else if (key == "val") {
            s.val = parse_index_list(body, path, line_no);
            have_val = true;
        } else if (key == "test") {
            s.test = parse_index_list(body, path, line_no);
            have_test = true;
        } else if (key == "seed") {
            s.seed = parse_index(body, path, line_no);
            have_seed = true;
        } else if (key == "per_class_train") {
            s.per_class_train = parse_index(body, path, line_no);
        } else {
            throw ParseError(at_line(path, line_no, "unknown key '" + key + "'"));
        }
    });
    if (!have_train || !have_val || !have_test || !have_seed) {
        throw ParseError(path.string() + ": missing split section");
    }

    std::vector<bool> seen(node_count, false);
    for (const auto* set : {&s.train, &s.val, &s.test}) {
        for (const std::size_t i : *set) {
            if (i >= node_count) {
                throw InconsistentSize(path.string() + ": index " + std::to_string(i) +
                                       " out of range for " + std::to_string(node_count) +
                                       " nodes");
            }
            if (seen[i]) {
                throw ParseError(path.string() + ": index " + std::to_string(i) +
                                 " appears in two sets");
            }
            seen[i] = true;
        }
    }
    return s;
}

void save_node_map(const Dataset& d, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open for writing: " + path.string());
    for (std::size_t i = 0; i < d.node_ids.size(); ++i) {
        f << i << '\t' << d.node_ids[i] << '\n';
    }
    if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace scnp
