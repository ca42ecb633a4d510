// Command-line front end: impute, ampute, generate, benchmark.
//
// Exit codes: 0 success, 1 runtime error (I/O, parse, schema, numerical),
// 2 usage error (bad flags, unknown method / mechanism / design).

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "missboopf.hpp"

namespace {

using namespace missboopf;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    std::uint64_t seed = 1;
    bool seed_given = false;
    std::size_t threads = 1;
    std::string na_token = "NA";
};

void emit(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-")
        std::cout << content;
    else
        write_file(path, content);
}

template <typename F>
auto as_usage(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const InvalidArgument& e) {
        throw UsageError(e.what());
    }
}

// ---------------------------------------------------------------------------

struct ImputeArgs {
    std::string csv, schema, method = "missboopf", spec, out;
    std::size_t max_iter = 10;
    std::optional<std::size_t> trees, gbm_iterations;
    std::optional<double> gbm_step;
    bool verbose = false;
};

int run_impute(const Globals& g, const ImputeArgs& a) {
    MethodSettings settings;
    settings.threads = g.threads;
    if (a.trees) settings.forest_trees = *a.trees;
    if (a.gbm_iterations) settings.gbm_iterations = *a.gbm_iterations;
    if (a.gbm_step) settings.gbm_step = *a.gbm_step;
    const LearnerSpec spec = a.spec.empty() ? as_usage([&] { return named_method(a.method, settings); })
                                            : parse_method_spec(read_file(a.spec), settings);
    const DataMatrix d = load_csv(a.csv, a.schema, g.na_token);
    ImputeOptions opts;
    opts.max_iter = a.max_iter;
    opts.seed = g.seed;
    const auto res = impute(d, spec, opts);
    if (a.verbose) {
        for (std::size_t k = 0; k < res.deltas.size(); ++k)
            std::cerr << "pass " << k + 1 << ": delta_continuous=" << format_real(res.deltas[k].continuous)
                      << " delta_categorical=" << format_real(res.deltas[k].categorical) << '\n';
        std::cerr << "passes=" << res.iterations << (res.stopped_on_increase ? " (stopped on increase)" : "") << '\n';
    }
    emit(a.out, format_csv(res.completed, g.na_token));
    return 0;
}

struct AmputeArgs {
    std::string csv, schema, mechanism = "MCAR", out, mask_out;
    double rate = 0.1;
};

int run_ampute(const Globals& g, const AmputeArgs& a) {
    const Mechanism mech = as_usage([&] { return parse_mechanism(a.mechanism); });
    const DataMatrix d = load_csv(a.csv, a.schema, g.na_token);
    const auto res = ampute(d, {mech, a.rate, g.seed});
    emit(a.out, format_csv(res.data, g.na_token));
    if (!a.mask_out.empty()) write_file(a.mask_out, format_mask_csv(res.mask, d.schema()));
    return 0;
}

struct GenerateArgs {
    std::string design, out, schema_out;
    std::size_t n = 250, p = 15;
    bool rho07 = false;
};

int run_generate(const Globals& g, const GenerateArgs& a) {
    DesignSpec spec;
    spec.design = as_usage([&] { return parse_design(a.design); });
    spec.n = a.n;
    spec.p = a.p;
    spec.seed = g.seed;
    spec.rho07 = a.rho07;
    const DataMatrix d = generate(spec);
    emit(a.out, format_csv(d, g.na_token));
    if (!a.schema_out.empty()) save_schema(d.schema(), a.schema_out);
    return 0;
}

struct BenchmarkArgs {
    std::string plan, records, summary;
    bool quiet = false;
};

int run_benchmark_cmd(const Globals& g, const BenchmarkArgs& a) {
    BenchmarkPlan plan = parse_plan(read_file(a.plan));
    if (g.seed_given) plan.seed = g.seed;
    as_usage([&] { plan.validate(); return 0; });
    BenchmarkLog log;
    if (!a.quiet) log = [](const std::string& line) { std::cerr << line << '\n'; };
    const auto result = run_benchmark(plan, g.threads, log);
    emit(a.records, format_records_csv(result.records));
    if (!a.summary.empty()) write_file(a.summary, format_summary_csv(plan, result.records));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Iterative imputation of mixed-type tables with tree ensembles"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--seed", g.seed, "Master seed")->each([&](const std::string&) { g.seed_given = true; });
    app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
    app.add_option("--na-token", g.na_token, "Token that marks a missing cell");

    ImputeArgs ia;
    auto* imp = app.add_subcommand("impute", "Fill the missing cells of a CSV");
    imp->add_option("csv", ia.csv, "Input CSV")->required();
    imp->add_option("schema", ia.schema, "Schema file")->required();
    auto* method_opt = imp->add_option("--method", ia.method, "missforest, missboopf, rf-strat, rf-norm, rf-kernel, gbm");
    imp->add_option("--spec", ia.spec, "Learner-pair file instead of --method")->excludes(method_opt);
    imp->add_option("-o,--output", ia.out, "Output CSV (default stdout)");
    imp->add_option("--max-iter", ia.max_iter, "Maximum passes")->check(CLI::PositiveNumber);
    imp->add_option("--trees", ia.trees, "Trees per forest")->check(CLI::PositiveNumber);
    imp->add_option("--gbm-iterations", ia.gbm_iterations, "Boosting iterations")->check(CLI::PositiveNumber);
    imp->add_option("--gbm-step", ia.gbm_step, "Boosting step size")->check(CLI::PositiveNumber);
    imp->add_flag("-v,--verbose", ia.verbose, "Print per-pass deltas to stderr");

    AmputeArgs aa;
    auto* amp = app.add_subcommand("ampute", "Blank cells of a complete CSV");
    amp->add_option("csv", aa.csv, "Input CSV")->required();
    amp->add_option("schema", aa.schema, "Schema file")->required();
    amp->add_option("--mechanism", aa.mechanism, "MCAR, MCAR-bernoulli, MAR, MNAR");
    amp->add_option("--rate", aa.rate, "Missing rate")->required()->check(CLI::Range(0.0, 1.0));
    amp->add_option("-o,--output", aa.out, "Output CSV (default stdout)");
    amp->add_option("--mask", aa.mask_out, "Write the 0/1 mask CSV here");

    GenerateArgs ga;
    auto* gen = app.add_subcommand("generate", "Draw a synthetic design");
    gen->add_option("--design", ga.design, "D1..D7")->required();
    gen->add_option("--n", ga.n, "Rows")->check(CLI::PositiveNumber);
    gen->add_option("--p", ga.p, "Columns (continuous designs)")->check(CLI::PositiveNumber);
    gen->add_flag("--rho07", ga.rho07, "D3 with correlation 0.7");
    gen->add_option("-o,--output", ga.out, "Output CSV (default stdout)");
    gen->add_option("--schema-out", ga.schema_out, "Write the schema here");

    BenchmarkArgs ba;
    auto* bench = app.add_subcommand("benchmark", "Run a benchmark plan");
    bench->add_option("plan", ba.plan, "Plan file")->required();
    bench->add_option("--records", ba.records, "Per-run CSV (default stdout)");
    bench->add_option("--summary", ba.summary, "Summary CSV");
    bench->add_flag("-q,--quiet", ba.quiet, "No progress lines");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*imp) return run_impute(g, ia);
        if (*amp) return run_ampute(g, aa);
        if (*gen) return run_generate(g, ga);
        if (*bench) return run_benchmark_cmd(g, ba);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
