#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "missboopf/ampute.hpp"
#include "missboopf/datamodel.hpp"
#include "missboopf/imputer.hpp"
#include "missboopf/metrics.hpp"
#include "missboopf/parallel.hpp"
#include "missboopf/synthdata.hpp"

namespace missboopf {

// ----------------------------------------------------------------------------
// Plan
// ----------------------------------------------------------------------------

struct DatasetSource {
    std::string name;
    std::optional<Design> design;  // generated fresh for every run
    std::string csv_path;          // otherwise loaded once
    std::string schema_path;
};

struct Comparison {
    std::string better;  // method expected to have the lower error
    std::string other;
};

struct BenchmarkPlan {
    std::vector<DatasetSource> datasets;
    std::vector<Mechanism> mechanisms;
    std::vector<double> rates;
    std::vector<std::string> methods;
    std::vector<Comparison> comparisons;
    std::size_t runs = 2;
    std::uint64_t seed = 1;
    std::size_t n = 250;
    std::size_t max_iter = 10;
    MethodSettings settings;
    std::string na_token = "NA";

    void validate() const {
        if (datasets.empty()) throw InvalidArgument("plan needs at least one dataset");
        if (mechanisms.empty()) throw InvalidArgument("plan needs at least one mechanism");
        if (rates.empty()) throw InvalidArgument("plan needs at least one rate");
        if (methods.empty()) throw InvalidArgument("plan needs at least one method");
        if (runs < 1) throw InvalidArgument("plan needs at least one run");
        for (double r : rates)
            if (!(r > 0.0 && r < 1.0)) throw InvalidArgument("rates must lie in (0, 1)");
        for (const auto& m : methods) named_method(m);
        for (const auto& c : comparisons) {
            auto known = [&](const std::string& m) { return std::find(methods.begin(), methods.end(), m) != methods.end(); };
            if (!known(c.better) || !known(c.other))
                throw InvalidArgument("comparison " + c.better + ">" + c.other + " names a method not in the plan");
        }
    }
};

namespace detail {

inline std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split_list(const std::string& s, char sep = ',') {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    std::istringstream in(value);
    T v{};
    in >> v;
    if (in.fail() || !in.eof()) throw ParseError("plan key '" + key + "': bad number '" + value + "'");
    return v;
}

}  // namespace detail

/// Flat `key = value` plan format; '#' starts a comment. Keys:
///   designs      comma list of D1..D7
///   data         name:path.csv:path.schema (repeatable)
///   mechanisms   comma list of MCAR, MCAR-bernoulli, MAR, MNAR
///   rates        comma list of rates in (0, 1)
///   methods      comma list of method names
///   compare      comma list of better>other method pairs
///   runs, seed, n, max_iter, forest_trees, gbm_iterations, gbm_step, threads, na_token
inline BenchmarkPlan parse_plan(std::string_view text) {
    BenchmarkPlan plan;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError("plan line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        try {
            if (key == "designs") {
                for (const auto& d : detail::split_list(value)) {
                    const auto design = parse_design(d);
                    plan.datasets.push_back({design_name(design), design, {}, {}});
                }
            } else if (key == "data") {
                const auto parts = detail::split_list(value, ':');
                if (parts.size() != 3) throw ParseError("data expects name:csv:schema");
                plan.datasets.push_back({parts[0], std::nullopt, parts[1], parts[2]});
            } else if (key == "mechanisms") {
                for (const auto& m : detail::split_list(value)) plan.mechanisms.push_back(parse_mechanism(m));
            } else if (key == "rates") {
                for (const auto& r : detail::split_list(value)) plan.rates.push_back(detail::parse_number<double>(key, r));
            } else if (key == "methods") {
                plan.methods = detail::split_list(value);
            } else if (key == "compare") {
                for (const auto& c : detail::split_list(value)) {
                    const auto gt = c.find('>');
                    if (gt == std::string::npos) throw ParseError("compare expects better>other");
                    plan.comparisons.push_back({detail::trim(c.substr(0, gt)), detail::trim(c.substr(gt + 1))});
                }
            } else if (key == "runs") {
                plan.runs = detail::parse_number<std::size_t>(key, value);
            } else if (key == "seed") {
                plan.seed = detail::parse_number<std::uint64_t>(key, value);
            } else if (key == "n") {
                plan.n = detail::parse_number<std::size_t>(key, value);
            } else if (key == "max_iter") {
                plan.max_iter = detail::parse_number<std::size_t>(key, value);
            } else if (key == "forest_trees") {
                plan.settings.forest_trees = detail::parse_number<std::size_t>(key, value);
            } else if (key == "gbm_iterations") {
                plan.settings.gbm_iterations = detail::parse_number<std::size_t>(key, value);
            } else if (key == "gbm_step") {
                plan.settings.gbm_step = detail::parse_number<double>(key, value);
            } else if (key == "threads") {
                plan.settings.threads = detail::parse_number<std::size_t>(key, value);
            } else if (key == "na_token") {
                plan.na_token = value;
            } else {
                throw ParseError("unknown key '" + key + "'");
            }
        } catch (const ParseError& e) {
            throw ParseError("plan line " + std::to_string(lineno) + ": " + e.what());
        } catch (const InvalidArgument& e) {
            throw ParseError("plan line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return plan;
}

// ----------------------------------------------------------------------------
// Records
// ----------------------------------------------------------------------------

struct RunRecord {
    std::string dataset;
    std::string mechanism;
    double rate = 0.0;
    std::string method;
    std::size_t run = 0;
    std::string metric;            // NRMSE or PFC
    std::optional<double> value;   // empty when the run failed
    std::uint64_t mask_hash = 0;
    std::string reason;
};

inline std::string format_rate(double r) { return format_real(r); }

inline std::string format_records_csv(const std::vector<RunRecord>& records) {
    std::string out = "dataset,mechanism,rate,method,run,metric,value,mask_hash,reason\n";
    char hash[32];
    for (const auto& r : records) {
        std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(r.mask_hash));
        out += csv::quote(r.dataset) + ',' + r.mechanism + ',' + format_rate(r.rate) + ',' + r.method + ',' +
               std::to_string(r.run) + ',' + r.metric + ',' + (r.value ? format_real(*r.value) : "NA") + ',' + hash +
               ',' + csv::quote(r.reason) + '\n';
    }
    return out;
}

struct CellKey {
    std::string dataset;
    std::string mechanism;
    double rate;
    std::string metric;

    friend auto operator<=>(const CellKey&, const CellKey&) = default;
};

/// Per-cell statistics and one-sided Brunner-Munzel comparisons. Comparisons
/// pair the runs of the two methods and test that `better` has the smaller
/// error; p-values carry the star codes used for boxplot annotation.
inline std::string format_summary_csv(const BenchmarkPlan& plan, const std::vector<RunRecord>& records) {
    std::map<CellKey, std::map<std::string, std::vector<double>>> cells;
    std::vector<CellKey> order;
    for (const auto& r : records) {
        CellKey key{r.dataset, r.mechanism, r.rate, r.metric};
        if (!cells.count(key)) order.push_back(key);
        auto& values = cells[key][r.method];
        if (r.value) values.push_back(*r.value);
    }
    std::string out =
        "kind,dataset,mechanism,rate,metric,method,compare_to,runs,mean,sd,min,q1,median,q3,max,"
        "relative_effect,statistic,df,p_value,stars,mean_reduction\n";
    auto num = [](double v) { return format_real(v); };
    for (const auto& key : order) {
        const auto& by_method = cells[key];
        const std::string prefix =
            csv::quote(key.dataset) + ',' + key.mechanism + ',' + format_rate(key.rate) + ',' + key.metric + ',';
        for (const auto& m : plan.methods) {
            auto it = by_method.find(m);
            if (it == by_method.end()) continue;
            const auto& v = it->second;
            out += "stats," + prefix + m + ",," + std::to_string(v.size()) + ',';
            if (v.empty()) {
                out += "NA,NA,NA,NA,NA,NA,NA,,,,,,\n";
                continue;
            }
            const auto f = five_number(v);
            out += num(mean(v)) + ',' + num(sample_sd(v)) + ',' + num(f.min) + ',' + num(f.q1) + ',' + num(f.median) +
                   ',' + num(f.q3) + ',' + num(f.max) + ",,,,,,\n";
        }
        for (const auto& c : plan.comparisons) {
            auto a = by_method.find(c.better);
            auto b = by_method.find(c.other);
            if (a == by_method.end() || b == by_method.end()) continue;
            out += "compare," + prefix + c.better + ',' + c.other + ',' + std::to_string(a->second.size()) + ",,,,,,,,";
            if (a->second.size() < 2 || b->second.size() < 2) {
                out += "NA,NA,NA,NA,,\n";
                continue;
            }
            const double ma = mean(a->second), mb = mean(b->second);
            const std::string reduction = mb != 0.0 ? num((mb - ma) / mb) : "NA";
            try {
                const auto bm = brunner_munzel(a->second, b->second, Alternative::Less);
                out += num(bm.relative_effect) + ',' + num(bm.statistic) + ',' + num(bm.df) + ',' + num(bm.p_value) +
                       ',' + significance_stars(bm.p_value) + ',' + reduction + '\n';
            } catch (const DegenerateTest& e) {
                out += num(e.relative_effect()) + ",NA,NA,NA,," + reduction + '\n';
            }
        }
    }
    return out;
}

// ----------------------------------------------------------------------------
// Harness
// ----------------------------------------------------------------------------

struct BenchmarkResult {
    std::vector<RunRecord> records;
};

using BenchmarkLog = std::function<void(const std::string&)>;

/// Runs every (dataset, mechanism, rate, run); all methods of a run impute
/// the same amputed matrix. Failures become records with an empty value and
/// a reason. Output order and content depend only on the plan.
inline BenchmarkResult run_benchmark(const BenchmarkPlan& plan, std::size_t threads = 1, const BenchmarkLog& log = {}) {
    plan.validate();
    BenchmarkResult result;
    for (std::size_t ds = 0; ds < plan.datasets.size(); ++ds) {
        const auto& source = plan.datasets[ds];
        std::optional<DataMatrix> fixed;
        if (!source.design) fixed = load_csv(source.csv_path, source.schema_path, plan.na_token);
        for (auto mech : plan.mechanisms) {
            for (double rate : plan.rates) {
                std::vector<std::vector<RunRecord>> per_run(plan.runs);
                std::mutex log_mutex;
                parallel_for(plan.runs, threads, [&](std::size_t run) {
                    auto& out = per_run[run];
                    const auto mech_id = static_cast<std::uint64_t>(mech);
                    const auto rate_id = static_cast<std::uint64_t>(std::llround(rate * 1e6));
                    const std::uint64_t cell_seed =
                        splitmix64(plan.seed ^ stream_id("benchmark-cell", {ds, mech_id, rate_id, run}));
                    auto fail_all = [&](const std::string& reason, std::uint64_t hash) {
                        for (const auto& m : plan.methods)
                            out.push_back({source.name, mechanism_name(mech), rate, m, run, "NA", std::nullopt, hash, reason});
                    };
                    DataMatrix truth;
                    AmputeResult amputed;
                    try {
                        if (source.design) {
                            DesignSpec spec;
                            spec.design = *source.design;
                            spec.n = plan.n;
                            spec.seed = splitmix64(cell_seed ^ 0x64617461ull);
                            truth = generate(spec);
                        } else {
                            truth = *fixed;
                        }
                        amputed = ampute(truth, {mech, rate, splitmix64(cell_seed ^ 0x616d70ull)});
                    } catch (const std::exception& e) {
                        fail_all(std::string("data: ") + e.what(), 0);
                        return;
                    }
                    const std::uint64_t hash = amputed.mask.hash();
                    bool has_cont = false, has_cat = false;
                    for (std::size_t j = 0; j < truth.cols(); ++j)
                        if (amputed.mask.count_in_column(j) > 0)
                            (truth.column(j).kind.is_continuous() ? has_cont : has_cat) = true;

                    for (const auto& m : plan.methods) {
                        std::vector<std::pair<std::string, std::optional<double>>> metrics;
                        std::string reason;
                        try {
                            ImputeOptions opts;
                            opts.max_iter = plan.max_iter;
                            opts.seed = splitmix64(cell_seed ^ 0x696d70ull);
                            const auto res = impute(amputed.data, named_method(m, plan.settings), opts);
                            EvalTriple e{truth, res.completed, amputed.mask};
                            if (has_cont) metrics.emplace_back("NRMSE", nrmse(e));
                            if (has_cat) metrics.emplace_back("PFC", pfc(e));
                        } catch (const std::exception& e) {
                            reason = e.what();
                            if (has_cont) metrics.emplace_back("NRMSE", std::nullopt);
                            if (has_cat) metrics.emplace_back("PFC", std::nullopt);
                        }
                        for (auto& [metric, value] : metrics)
                            out.push_back({source.name, mechanism_name(mech), rate, m, run, metric, value, hash, reason});
                        if (log) {
                            std::lock_guard lock(log_mutex);
                            std::string line = source.name + ' ' + mechanism_name(mech) + " r=" + format_rate(rate) +
                                               " run=" + std::to_string(run) + ' ' + m;
                            for (auto& [metric, value] : metrics)
                                line += ' ' + metric + '=' + (value ? format_real(*value) : "NA");
                            log(line);
                        }
                    }
                });
                for (auto& rows : per_run)
                    for (auto& r : rows) result.records.push_back(std::move(r));
            }
        }
    }
    return result;
}

/// Values of one metric for one method in one cell, in run order.
inline std::vector<double> metric_values(const std::vector<RunRecord>& records, const std::string& dataset,
                                         const std::string& method, const std::string& metric) {
    std::vector<double> out;
    for (const auto& r : records)
        if (r.dataset == dataset && r.method == method && r.metric == metric && r.value) out.push_back(*r.value);
    return out;
}

}  // namespace missboopf
