// Command-line front end: dataset generation, storage-mode conversion,
// latest-value queries, oracle verification, the benchmark grid and SQL
// emission. Exit codes: 0 success, 1 usage error, 2 verification failure,
// 3 I/O or format error.
#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "deltasum/deltasum.hpp"

namespace {

using namespace deltasum;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitVerifyFailed = 2;
constexpr int kExitDataError = 3;

struct GenArgs {
    std::uint64_t rows = 0;
    std::uint32_t classes = 10;
    std::uint64_t seed = 1;
    std::string order = "shuffled";
    std::string out;
};

struct ConvertArgs {
    std::string to;
    std::string in;
    std::string out;
};

struct QueryArgs {
    std::string mode;
    std::string in;
    std::string class_label;
    bool counters = false;
};

struct VerifyArgs {
    std::uint64_t rows = 0;
    std::uint64_t seed = 1;
    bool non_monotonic = false;
};

struct BenchArgs {
    std::vector<std::uint64_t> tiers = {10000, 100000, 1000000};
    std::uint32_t iterations = 10;
    std::uint64_t seed = 1;
    bool literal_rescan = false;
    bool include_10m = false;
    std::string out;
    std::string format = "csv";
};

struct EmitSqlArgs {
    std::string dialect;
    std::string method;
    std::string action;
    std::string table;
    std::string class_label;
};

GenOrder parse_order(const std::string& order) {
    return order == "sorted" ? GenOrder::PerClassSorted : GenOrder::Shuffled;
}

Predicate predicate_from(const std::string& class_label) {
    if (class_label.empty()) return Predicate::any();
    return Predicate::only({ClassKey{class_label}});
}

int run_gen(const GenArgs& args) {
    WorkloadSpec spec;
    spec.seed = args.seed;
    spec.cardinality = args.rows;
    spec.class_count = args.classes;
    const Relation rel = gen_dataset(spec, parse_order(args.order));
    const auto manifest = save_relation(rel, args.out);
    std::cout << "wrote " << args.out << " (" << rel.size() << " rows), manifest "
              << manifest.string() << "\n";
    return kExitOk;
}

int run_convert(const ConvertArgs& args) {
    if (args.to == "delta") {
        const Relation rel = load_relation(args.in, StorageMode::Absolute);
        auto [converted, state] = convert_absolute_to_delta(rel);
        save_relation(converted, args.out);
    } else {
        const Relation rel = load_relation(args.in, StorageMode::Delta);
        save_relation(convert_delta_to_absolute(rel), args.out);
    }
    std::cout << "wrote " << args.out << "\n";
    return kExitOk;
}

int run_query(const QueryArgs& args) {
    const bool control = args.mode == "control";
    const Relation rel =
        load_relation(args.in, control ? StorageMode::Absolute : StorageMode::Delta);
    const Predicate pred = predicate_from(args.class_label);
    CounterSet counters;
    const auto results = control ? select_latest_absolute(rel, pred, counters)
                                 : select_latest_delta(rel, pred, counters);
    for (const LatestValue& lv : results) {
        std::cout << "class=" << lv.class_key.label << " latest_us=" << lv.value;
        if (lv.witness_pk) std::cout << " witness_pk=" << *lv.witness_pk;
        std::cout << "\n";
    }
    if (args.counters) {
        std::cout << "counters: " << format_counters(counters) << "\n";
    }
    return kExitOk;
}

// Monotonic regime: build both storage forms from one per-class-sorted stream
// and require identical (class, value) answers. Non-monotonic: a shuffled
// stream with enforcement off must reproduce last-write values.
int run_verify(const VerifyArgs& args) {
    WorkloadSpec spec;
    spec.seed = args.seed;
    spec.cardinality = args.rows;
    const GenOrder order = args.non_monotonic ? GenOrder::Shuffled : GenOrder::PerClassSorted;
    const Relation generated = gen_dataset(spec, order);

    InsertBatch stream;
    stream.entries.reserve(generated.size());
    for (const RowTuple& row : generated.rows()) {
        stream.entries.push_back({row.class_key, row.interval});
    }

    EngineConfig cfg;
    cfg.enforce_monotonic = !args.non_monotonic;

    Relation abs_rel(StorageMode::Absolute, generated.manifest());
    Relation delta_rel(StorageMode::Delta, generated.manifest());
    DeltaState state;
    CounterSet insert_counters;
    insert_absolute(abs_rel, stream, insert_counters);
    insert_delta(delta_rel, state, stream, cfg, insert_counters);

    CounterSet control_counters;
    CounterSet delta_counters;
    const auto delta_result = select_latest_delta(delta_rel, Predicate::any(), delta_counters);

    bool pass = true;
    std::string detail;
    if (args.non_monotonic) {
        std::map<ClassKey, IntervalMicros> last_write;
        for (const RowTuple& row : abs_rel.rows()) {
            last_write[row.class_key] = row.interval;
        }
        pass = delta_result.size() == last_write.size();
        for (const LatestValue& lv : delta_result) {
            auto it = last_write.find(lv.class_key);
            if (it == last_write.end() || it->second != lv.value) {
                pass = false;
                detail = "class " + lv.class_key.label;
                break;
            }
        }
        std::cout << "delta:   " << format_counters(delta_counters) << "\n";
    } else {
        const auto control_result =
            select_latest_absolute(abs_rel, Predicate::any(), control_counters);
        pass = control_result.size() == delta_result.size();
        for (std::size_t i = 0; pass && i < control_result.size(); ++i) {
            if (control_result[i].class_key != delta_result[i].class_key ||
                control_result[i].value != delta_result[i].value) {
                pass = false;
                detail = "class " + control_result[i].class_key.label;
            }
        }
        std::cout << "control: " << format_counters(control_counters) << "\n";
        std::cout << "delta:   " << format_counters(delta_counters) << "\n";
    }

    if (pass) {
        std::cout << "PASS\n";
        return kExitOk;
    }
    std::cout << "FAIL" << (detail.empty() ? "" : " (" + detail + ")") << "\n";
    return kExitVerifyFailed;
}

int run_bench(const BenchArgs& args) {
    ExperimentConfig cfg;
    cfg.tiers = args.tiers;
    if (args.include_10m &&
        std::find(cfg.tiers.begin(), cfg.tiers.end(), 10000000ULL) == cfg.tiers.end()) {
        cfg.tiers.push_back(10000000ULL);
    }
    cfg.iterations = args.iterations;
    cfg.seed = args.seed;
    cfg.literal_rescan = args.literal_rescan;

    const ExperimentReport report = run_experiment(cfg);
    emit_report(report, args.format == "json" ? ReportFormat::Json : ReportFormat::Csv, args.out);

    for (const CellResult& cell : report.cells) {
        std::cout << "tier=" << cell.tier << " kind=" << abbrev(cell.kind);
        if (cell.failure) {
            std::cout << " failed: " << *cell.failure << "\n";
            continue;
        }
        std::cout << " samples=" << cell.samples.size()
                  << " mean_elapsed_us=" << cell.elapsed_stats.mean
                  << " sd_pct=" << cell.elapsed_stats.sd_pct_of_mean << "\n";
    }
    std::cout << "wrote " << args.out << "\n";
    return kExitOk;
}

int run_emit_sql(const EmitSqlArgs& args) {
    const SqlDialect dialect =
        args.dialect == "mssql" ? SqlDialect::Mssql : SqlDialect::Postgres;
    const Method method = args.method == "control" ? Method::Control : Method::Delta;
    std::optional<std::string> predicate;
    if (!args.class_label.empty()) predicate = args.class_label;
    if (args.action == "select") {
        std::cout << emit_select_sql(dialect, method, args.table, predicate);
    } else {
        std::cout << emit_insert_sql(dialect, method, args.table);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"delta-summation storage and aggregation workbench"};
    app.require_subcommand(1);

    GenArgs gen_args;
    auto* gen = app.add_subcommand("gen", "generate a seeded absolute dataset");
    gen->add_option("--rows", gen_args.rows, "row count")->required();
    gen->add_option("--classes", gen_args.classes, "class count")->capture_default_str();
    gen->add_option("--seed", gen_args.seed, "PRNG seed")->capture_default_str();
    gen->add_option("--order", gen_args.order, "row order")->capture_default_str()
        ->check(CLI::IsMember({"shuffled", "sorted"}));
    gen->add_option("--out", gen_args.out, "output CSV path")->required();

    ConvertArgs convert_args;
    auto* convert = app.add_subcommand("convert", "convert between storage modes");
    convert->add_option("--to", convert_args.to, "target mode")
        ->required()
        ->check(CLI::IsMember({"delta", "absolute"}));
    convert->add_option("--in", convert_args.in, "input CSV path")->required();
    convert->add_option("--out", convert_args.out, "output CSV path")->required();

    QueryArgs query_args;
    auto* query = app.add_subcommand("query", "latest interval value per class");
    query->add_option("--mode", query_args.mode, "query method")
        ->required()
        ->check(CLI::IsMember({"control", "delta"}));
    query->add_option("--in", query_args.in, "input CSV path")->required();
    query->add_option("--class", query_args.class_label, "predicate class label");
    query->add_flag("--counters", query_args.counters, "print work counters");

    VerifyArgs verify_args;
    auto* verify = app.add_subcommand("verify", "oracle equivalence run");
    verify->add_option("--rows", verify_args.rows, "row count")->required();
    verify->add_option("--seed", verify_args.seed, "PRNG seed")->capture_default_str();
    verify->add_flag("--non-monotonic", verify_args.non_monotonic,
                     "shuffled stream checked against the last-write oracle");

    BenchArgs bench_args;
    auto* bench = app.add_subcommand("bench", "run the experiment grid");
    bench->add_option("--tiers", bench_args.tiers, "cardinality tiers")->capture_default_str()->delimiter(',');
    bench->add_option("--iterations", bench_args.iterations, "trials per cell")->capture_default_str();
    bench->add_option("--seed", bench_args.seed, "PRNG seed")->capture_default_str();
    bench->add_flag("--literal-rescan", bench_args.literal_rescan,
                    "delta insertion recomputes class sums by scanning");
    bench->add_flag("--include-10m", bench_args.include_10m, "add the 10000000-row tier");
    bench->add_option("--out", bench_args.out, "report path")->required();
    bench->add_option("--format", bench_args.format, "report format")->capture_default_str()
        ->check(CLI::IsMember({"csv", "json"}));

    EmitSqlArgs sql_args;
    auto* emit_sql = app.add_subcommand("emit-sql", "emit control/delta SQL text");
    emit_sql->add_option("--dialect", sql_args.dialect, "SQL dialect")
        ->required()
        ->check(CLI::IsMember({"postgres", "mssql"}));
    emit_sql->add_option("--method", sql_args.method, "storage method")
        ->required()
        ->check(CLI::IsMember({"control", "delta"}));
    emit_sql->add_option("--action", sql_args.action, "statement kind")
        ->required()
        ->check(CLI::IsMember({"select", "insert"}));
    emit_sql->add_option("--table", sql_args.table, "table name")->required();
    emit_sql->add_option("--class", sql_args.class_label, "predicate class label");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (gen->parsed()) return run_gen(gen_args);
        if (convert->parsed()) return run_convert(convert_args);
        if (query->parsed()) return run_query(query_args);
        if (verify->parsed()) return run_verify(verify_args);
        if (bench->parsed()) return run_bench(bench_args);
        if (emit_sql->parsed()) {
            if (sql_args.action == "insert" && !sql_args.class_label.empty()) {
                std::cerr << "error: --class applies only to --action select\n";
                return kExitUsage;
            }
            return run_emit_sql(sql_args);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDataError;
    }
    return kExitUsage;
}
