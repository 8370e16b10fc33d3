#include <algorithm>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>
#include <vector>

#include "harness_detail.hpp"
#include "scnp/error.hpp"
#include "scnp/evaluation.hpp"
#include "scnp/harness.hpp"
#include "scnp/svg.hpp"

namespace scnp {

namespace fs = std::filesystem;

namespace {

std::string fmt_metric(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

// Thresholds order numerically with the "no threshold" slot first; the
// canonical strings break (impossible) numeric ties.
double eps_rank(const std::string& epsilon) {
    return epsilon.empty() ? -1.0 : std::stod(epsilon);
}

struct GroupKey {
    std::string dataset, model, epsilon;
    std::size_t epochs = 0;

    bool operator<(const GroupKey& o) const {
        return std::make_tuple(dataset, model, eps_rank(epsilon), epsilon, epochs) <
               std::make_tuple(o.dataset, o.model, eps_rank(o.epsilon), o.epsilon,
                               o.epochs);
    }
};

struct GroupVals {
    std::vector<double> train, val, test, f1;
    std::string hash;
};

struct SeriesKey {
    std::string model, epsilon;

    bool operator<(const SeriesKey& o) const {
        return std::make_tuple(model, eps_rank(epsilon), epsilon) <
               std::make_tuple(o.model, eps_rank(o.epsilon), o.epsilon);
    }

    std::string label() const {
        return epsilon.empty() ? model : model + " eps=" + epsilon;
    }
};

void write_svg_file(const fs::path& path, const std::string& body,
                    const std::string& hash, std::ostream& log) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    f << body << "<!-- config_hash " << hash << " -->\n";
    if (!f) throw IoError("short write to " + path.string());
    log << "wrote " << path.string() << "\n";
}

// Per-epoch training accuracy from one run's history file.
std::vector<double> read_train_curve(const fs::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open " + path.string());
    std::vector<double> curve;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw CorruptFile(path.string() + ": " + e.what());
        }
        if (j.contains("epoch")) curve.push_back(j.at("train_acc").get<double>());
    }
    return curve;
}

}  // namespace

void run_report(const ReportOptions& opt, std::ostream& log) {
    const fs::path csv = opt.results_dir / "results.csv";
    const std::vector<SweepRow> rows = read_sweep_csv(csv);

    std::set<std::string> hashes;
    for (const SweepRow& row : rows) hashes.insert(row.config_hash);
    if (hashes.size() > 1 && !opt.force) {
        throw ConfigError(csv.string() + " mixes " + std::to_string(hashes.size()) +
                          " configurations; rerun with force to aggregate anyway");
    }
    const std::string hash = hashes.size() == 1 ? *hashes.begin() : "mixed";

    std::vector<SweepRow> good;
    std::size_t errored = 0;
    for (const SweepRow& row : rows) {
        if (row.error.empty()) {
            good.push_back(row);
        } else {
            ++errored;
        }
    }
    if (errored > 0) log << "skipping " << errored << " failed cell(s)\n";
    if (good.empty()) throw ConfigError(csv.string() + " has no successful rows");

    const fs::path report = opt.results_dir / "report";
    fs::create_directories(report);

    std::map<GroupKey, GroupVals> groups;
    for (const SweepRow& row : good) {
        GroupKey key{row.dataset, row.model, row.epsilon, row.epochs};
        GroupVals& g = groups[key];
        g.train.push_back(row.train_acc);
        g.val.push_back(row.val_acc);
        g.test.push_back(row.test_acc);
        g.f1.push_back(row.macro_f1);
        g.hash = row.config_hash;
    }

    const fs::path agg_path = report / "aggregate.csv";
    {
        std::ofstream f(agg_path, std::ios::binary);
        if (!f) throw IoError("cannot write " + agg_path.string());
        f << "dataset,model,epsilon,epochs,runs,train_acc_mean,train_acc_std,"
             "val_acc_mean,val_acc_std,test_acc_mean,test_acc_std,macro_f1_mean,"
             "macro_f1_std,config_hash\n";
        for (const auto& [key, vals] : groups) {
            const RunStats train = aggregate("train_acc", vals.train);
            const RunStats val = aggregate("val_acc", vals.val);
            const RunStats test = aggregate("test_acc", vals.test);
            const RunStats f1 = aggregate("macro_f1", vals.f1);
            f << csv_quote(key.dataset) << ',' << key.model << ',' << key.epsilon
              << ',' << key.epochs << ',' << vals.test.size() << ','
              << fmt_metric(train.mean) << ',' << fmt_metric(train.stddev) << ','
              << fmt_metric(val.mean) << ',' << fmt_metric(val.stddev) << ','
              << fmt_metric(test.mean) << ',' << fmt_metric(test.stddev) << ','
              << fmt_metric(f1.mean) << ',' << fmt_metric(f1.stddev) << ','
              << vals.hash << "\n";
        }
        if (!f) throw IoError("short write to " + agg_path.string());
    }
    log << "wrote " << agg_path.string() << " (" << groups.size() << " groups)\n";
    if (opt.csv_only) return;

    std::set<std::string> datasets;
    for (const SweepRow& row : good) datasets.insert(row.dataset);

    for (const std::string& ds : datasets) {
        std::set<std::size_t> budget_set;
        std::set<SeriesKey> series_set;
        for (const SweepRow& row : good) {
            if (row.dataset != ds) continue;
            budget_set.insert(row.epochs);
            series_set.insert(SeriesKey{row.model, row.epsilon});
        }
        const std::vector<std::size_t> budgets(budget_set.begin(), budget_set.end());
        std::vector<std::string> group_labels;
        for (const std::size_t b : budgets) {
            group_labels.push_back(std::to_string(b) + " epochs");
        }

        auto bar_chart = [&](auto metric, const std::string& what) {
            std::vector<SvgSeries> series;
            for (const SeriesKey& sk : series_set) {
                SvgSeries s;
                s.label = sk.label();
                for (const std::size_t b : budgets) {
                    const auto it = groups.find(GroupKey{ds, sk.model, sk.epsilon, b});
                    if (it == groups.end()) {
                        s.y.push_back(0.0);
                        s.err.push_back(0.0);
                    } else {
                        const RunStats st = aggregate(what, metric(it->second));
                        s.y.push_back(st.mean);
                        s.err.push_back(st.stddev);
                    }
                }
                series.push_back(std::move(s));
            }
            return svg_bar_chart(ds + " " + what, what, group_labels, series);
        };
        const std::string safe = detail::sanitize_component(ds);
        write_svg_file(report / ("test_accuracy_" + safe + ".svg"),
                       bar_chart([](const GroupVals& g) { return g.test; },
                                 "test accuracy"),
                       hash, log);
        write_svg_file(report / ("macro_f1_" + safe + ".svg"),
                       bar_chart([](const GroupVals& g) { return g.f1; }, "macro F1"),
                       hash, log);

        // Accuracy-by-epoch curves at the largest budget.
        const std::size_t top = budgets.back();
        std::vector<SvgSeries> curves;
        for (const SeriesKey& sk : series_set) {
            std::vector<std::vector<double>> per_run;
            for (const SweepRow& row : good) {
                if (row.dataset != ds || row.model != sk.model ||
                    row.epsilon != sk.epsilon || row.epochs != top) {
                    continue;
                }
                const fs::path hist = history_path(opt.results_dir / "runs", row);
                try {
                    per_run.push_back(read_train_curve(hist));
                } catch (const Error& e) {
                    log << "warning: skipping run history: " << e.what() << "\n";
                }
            }
            if (per_run.empty()) continue;
            std::size_t epochs = per_run.front().size();
            for (const auto& c : per_run) epochs = std::min(epochs, c.size());
            if (epochs == 0) continue;
            SvgSeries s;
            s.label = sk.label();
            for (std::size_t e = 0; e < epochs; ++e) {
                std::vector<double> vals;
                vals.reserve(per_run.size());
                for (const auto& c : per_run) vals.push_back(c[e]);
                const RunStats st = aggregate("train_acc", vals);
                s.x.push_back(static_cast<double>(e + 1));
                s.y.push_back(st.mean);
                s.err.push_back(st.stddev);
            }
            curves.push_back(std::move(s));
        }
        if (!curves.empty()) {
            write_svg_file(report / ("curves_" + safe + ".svg"),
                           svg_line_chart(ds + " training accuracy (" +
                                              std::to_string(top) + " epochs)",
                                          "epoch", "training accuracy", curves),
                           hash, log);
        }
    }
}

}  // namespace scnp
