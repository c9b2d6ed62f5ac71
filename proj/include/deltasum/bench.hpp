// Measurement harness: the experiment grid over cardinality tiers and test
// kinds, per-trial state rebuilds, descriptive statistics and the page/tuple
// cost model. Acceptance rests on the deterministic counters; wall time is
// recorded but environment-bound.
#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "deltasum/core.hpp"
#include "deltasum/engine.hpp"
#include "deltasum/workload.hpp"

namespace deltasum {

struct EmptyInput : Error {
    using Error::Error;
};

struct ZeroRows : Error {
    using Error::Error;
};

enum class Action { SelectWithPredicate, SelectWithoutPredicate, Insertion };

struct TestKind {
    Method method = Method::Control;
    Action action = Action::SelectWithPredicate;

    friend bool operator==(const TestKind&, const TestKind&) = default;
};

// C/D | W/WO P | I abbreviations used in report rows.
inline std::string abbrev(TestKind kind) {
    const char* method = kind.method == Method::Control ? "C" : "D";
    switch (kind.action) {
        case Action::SelectWithPredicate: return std::string(method) + "WP";
        case Action::SelectWithoutPredicate: return std::string(method) + "WOP";
        case Action::Insertion: return std::string(method) + "I";
    }
    return {};
}

inline TestKind parse_test_kind(const std::string& text) {
    for (Method method : {Method::Control, Method::Delta}) {
        for (Action action :
             {Action::SelectWithPredicate, Action::SelectWithoutPredicate, Action::Insertion}) {
            if (abbrev({method, action}) == text) return {method, action};
        }
    }
    throw Error("unknown test kind '" + text + "'");
}

inline std::vector<TestKind> all_test_kinds() {
    return {{Method::Control, Action::SelectWithPredicate},
            {Method::Control, Action::SelectWithoutPredicate},
            {Method::Control, Action::Insertion},
            {Method::Delta, Action::SelectWithPredicate},
            {Method::Delta, Action::SelectWithoutPredicate},
            {Method::Delta, Action::Insertion}};
}

struct MetricSample {
    std::int64_t elapsed_us = 0;
    CounterSet counters;
    double est_cost = 0.0;

    friend bool operator==(const MetricSample&, const MetricSample&) = default;
};

struct StatsSummary {
    double range = 0.0;
    double sd = 0.0;  // population SD, divisor n
    double mean = 0.0;
    double median = 0.0;
    double sd_pct_of_mean = 0.0;
    double sd_pct_of_median = 0.0;

    friend bool operator==(const StatsSummary&, const StatsSummary&) = default;
};

struct CostModelParams {
    double seq_page_cost = 1.0;
    double cpu_tuple_cost = 0.01;

    friend bool operator==(const CostModelParams&, const CostModelParams&) = default;
};

// Descriptive statistics over a sample vector. Samples are sorted first so
// the result depends only on the multiset of values, never on their order.
inline StatsSummary summarize_stats(std::span<const double> samples) {
    if (samples.empty()) throw EmptyInput("summarize_stats: empty sample vector");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());

    const std::size_t n = sorted.size();
    double sum = 0.0;
    for (double x : sorted) sum += x;
    const double mean = sum / static_cast<double>(n);

    double sq = 0.0;
    for (double x : sorted) sq += (x - mean) * (x - mean);
    const double sd = std::sqrt(sq / static_cast<double>(n));

    const double median =
        n % 2 == 1 ? sorted[n / 2] : (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0;

    StatsSummary out;
    out.range = sorted.back() - sorted.front();
    out.sd = sd;
    out.mean = mean;
    out.median = median;
    out.sd_pct_of_mean = mean == 0.0 ? 0.0 : 100.0 * sd / mean;
    out.sd_pct_of_median = median == 0.0 ? 0.0 : 100.0 * sd / median;
    return out;
}

// query cost = pages_read * seq_page_cost + rows_scanned * cpu_tuple_cost.
inline double estimate_cost(std::uint64_t pages_read, std::uint64_t rows_scanned,
                            const CostModelParams& params) {
    return static_cast<double>(pages_read) * params.seq_page_cost +
           static_cast<double>(rows_scanned) * params.cpu_tuple_cost;
}

// Exact inverse of estimate_cost solved for cpu_tuple_cost.
inline double derive_cpu_tuple_cost(double query_cost, std::uint64_t pages_read,
                                    std::uint64_t rows_scanned, double seq_page_cost) {
    if (rows_scanned == 0) throw ZeroRows("derive_cpu_tuple_cost: rows_scanned is zero");
    return (query_cost - static_cast<double>(pages_read) * seq_page_cost) /
           static_cast<double>(rows_scanned);
}

// Algorithm-faithful delta insertion: recompute the class's running total by
// scanning all stored deltas for every entry instead of keeping an
// accumulator. Kept out of the engine proper; it exists so the benchmark can
// price the write-path honestly in its original form.
inline void insert_delta_literal_rescan(Relation& rel, const InsertBatch& batch,
                                        const EngineConfig& cfg, CounterSet& counters) {
    detail::require_mode(rel, StorageMode::Delta, "insert_delta_literal_rescan");
    detail::require_batch(batch);
    counters.reset();
    for (const BatchEntry& entry : batch.entries) {
        counters.rows_scanned += rel.size();
        bool class_present = false;
        IntervalMicros sum = 0;
        for (const RowTuple& row : rel.rows()) {
            if (row.class_key == entry.class_key) {
                sum = detail::checked_add(sum, row.interval);
                ++counters.additions;
                class_present = true;
            }
        }
        if (!class_present) {
            rel.append(entry.class_key, entry.value);
        } else {
            if (cfg.enforce_monotonic && entry.value < sum) {
                throw OutOfOrderInsert(entry.class_key, entry.value, sum);
            }
            rel.append(entry.class_key, entry.value - sum);
            ++counters.additions;
        }
    }
    counters.pages_read = pages_for_rows(counters.rows_scanned);
}

struct ExperimentConfig {
    std::vector<std::uint64_t> tiers;
    std::vector<TestKind> kinds = all_test_kinds();
    std::uint32_t iterations = 10;
    std::uint64_t seed = 1;
    bool literal_rescan = false;
    CostModelParams cost_params;
    std::uint32_t class_count = 10;
    std::string predicate_class = "E";
    double insert_fraction = 0.01;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

struct CellResult {
    std::uint64_t tier = 0;
    TestKind kind;
    std::vector<MetricSample> samples;
    StatsSummary elapsed_stats;  // over elapsed_us; meaningful when samples exist
    std::optional<std::string> failure;

    friend bool operator==(const CellResult&, const CellResult&) = default;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<CellResult> cells;

    friend bool operator==(const ExperimentReport&, const ExperimentReport&) = default;
};

// Runs `iterations` measured trials for every (tier, kind) cell. Engine state
// is rebuilt from the seeded dataset before each trial — the in-memory
// analogue of clearing buffer and query caches between runs. Insertion cells
// append a fixed 1% batch of fresh rows drawn from the same stream; delta
// insertion runs without monotonic enforcement because shuffled workloads
// are not per-class nondecreasing.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    if (cfg.tiers.empty()) throw InvalidSpec("tiers must be non-empty");
    if (cfg.kinds.empty()) throw InvalidSpec("kinds must be non-empty");
    if (cfg.iterations == 0) throw InvalidSpec("iterations must be >= 1");

    const std::vector<ClassKey> alphabet = class_alphabet(cfg.class_count);
    const ClassKey predicate_key{cfg.predicate_class};
    if (std::find(alphabet.begin(), alphabet.end(), predicate_key) == alphabet.end()) {
        throw InvalidSpec("predicate class '" + cfg.predicate_class + "' not in alphabet");
    }

    ExperimentReport report{cfg, {}};
    for (std::uint64_t tier : cfg.tiers) {
        const auto batch_rows = std::max<std::uint64_t>(
            1, static_cast<std::uint64_t>(static_cast<double>(tier) * cfg.insert_fraction));

        WorkloadSpec spec;
        spec.seed = cfg.seed;
        spec.cardinality = tier + batch_rows;
        spec.class_count = cfg.class_count;
        const Relation full = gen_dataset(spec, GenOrder::Shuffled);

        RelationManifest base_manifest{alphabet, cfg.seed, tier, to_string(GenOrder::Shuffled)};
        Relation abs_proto(StorageMode::Absolute, base_manifest);
        abs_proto.reserve(tier + batch_rows);
        InsertBatch fresh;
        fresh.entries.reserve(batch_rows);
        for (std::uint64_t i = 0; i < full.size(); ++i) {
            const RowTuple& row = full.rows()[i];
            if (i < tier) {
                abs_proto.append_row(row);
            } else {
                fresh.entries.push_back({row.class_key, row.interval});
            }
        }
        auto [delta_proto, state_proto] = convert_absolute_to_delta(abs_proto);

        for (TestKind kind : cfg.kinds) {
            CellResult cell;
            cell.tier = tier;
            cell.kind = kind;
            for (std::uint32_t iter = 0; iter < cfg.iterations; ++iter) {
                try {
                    Relation rel = kind.method == Method::Control ? abs_proto : delta_proto;
                    DeltaState state = state_proto;
                    const Predicate pred = kind.action == Action::SelectWithPredicate
                                               ? Predicate::only({predicate_key})
                                               : Predicate::any();
                    EngineConfig engine_cfg;
                    engine_cfg.enforce_monotonic = false;

                    CounterSet counters;
                    const auto t0 = std::chrono::steady_clock::now();
                    switch (kind.action) {
                        case Action::SelectWithPredicate:
                        case Action::SelectWithoutPredicate:
                            if (kind.method == Method::Control) {
                                (void)select_latest_absolute(rel, pred, counters);
                            } else {
                                (void)select_latest_delta(rel, pred, counters);
                            }
                            break;
                        case Action::Insertion:
                            if (kind.method == Method::Control) {
                                insert_absolute(rel, fresh, counters);
                            } else if (cfg.literal_rescan) {
                                insert_delta_literal_rescan(rel, fresh, engine_cfg, counters);
                            } else {
                                insert_delta(rel, state, fresh, engine_cfg, counters);
                            }
                            break;
                    }
                    const auto t1 = std::chrono::steady_clock::now();

                    MetricSample sample;
                    sample.elapsed_us =
                        std::chrono::duration_cast<std::chrono::microseconds>(t1 - t0).count();
                    sample.counters = counters;
                    sample.est_cost =
                        estimate_cost(counters.pages_read, counters.rows_scanned, cfg.cost_params);
                    cell.samples.push_back(sample);
                } catch (const std::exception& e) {
                    cell.failure = e.what();
                    break;
                }
            }
            if (!cell.samples.empty()) {
                std::vector<double> elapsed;
                elapsed.reserve(cell.samples.size());
                for (const MetricSample& s : cell.samples) {
                    elapsed.push_back(static_cast<double>(s.elapsed_us));
                }
                cell.elapsed_stats = summarize_stats(elapsed);
            }
            report.cells.push_back(std::move(cell));
        }
    }
    return report;
}

inline ExperimentReport run_experiment(const std::vector<std::uint64_t>& tiers,
                                       const std::vector<TestKind>& kinds,
                                       std::uint32_t iterations, std::uint64_t seed,
                                       bool literal_rescan) {
    ExperimentConfig cfg;
    cfg.tiers = tiers;
    cfg.kinds = kinds;
    cfg.iterations = iterations;
    cfg.seed = seed;
    cfg.literal_rescan = literal_rescan;
    return run_experiment(cfg);
}

enum class ReportFormat { Csv, Json };

namespace detail {

inline std::string fmt_double(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

}  // namespace detail

// Sample rows per the fixed column schema, then one summary row per cell with
// iteration = "mean" holding each column's arithmetic mean. Byte-deterministic
// for a fixed report.
inline std::string report_to_csv(const ExperimentReport& report) {
    std::string out =
        "tier,kind,iteration,elapsed_us,rows_scanned,additions,comparisons,hash_probes,"
        "pages_read,mem_units,est_cost\n";
    for (const CellResult& cell : report.cells) {
        const std::string prefix = std::to_string(cell.tier) + "," + abbrev(cell.kind) + ",";
        for (std::size_t i = 0; i < cell.samples.size(); ++i) {
            const MetricSample& s = cell.samples[i];
            const CounterSet& c = s.counters;
            out += prefix + std::to_string(i) + "," + std::to_string(s.elapsed_us) + "," +
                   std::to_string(c.rows_scanned) + "," + std::to_string(c.additions) + "," +
                   std::to_string(c.comparisons) + "," + std::to_string(c.hash_probes) + "," +
                   std::to_string(c.pages_read) + "," + std::to_string(c.mem_units) + "," +
                   detail::fmt_double(s.est_cost) + "\n";
        }
        if (!cell.samples.empty()) {
            const double n = static_cast<double>(cell.samples.size());
            double elapsed = 0, rows = 0, adds = 0, cmps = 0, probes = 0, pages = 0, mem = 0,
                   cost = 0;
            for (const MetricSample& s : cell.samples) {
                elapsed += static_cast<double>(s.elapsed_us);
                rows += static_cast<double>(s.counters.rows_scanned);
                adds += static_cast<double>(s.counters.additions);
                cmps += static_cast<double>(s.counters.comparisons);
                probes += static_cast<double>(s.counters.hash_probes);
                pages += static_cast<double>(s.counters.pages_read);
                mem += static_cast<double>(s.counters.mem_units);
                cost += s.est_cost;
            }
            out += prefix + "mean," + detail::fmt_double(elapsed / n) + "," +
                   detail::fmt_double(rows / n) + "," + detail::fmt_double(adds / n) + "," +
                   detail::fmt_double(cmps / n) + "," + detail::fmt_double(probes / n) + "," +
                   detail::fmt_double(pages / n) + "," + detail::fmt_double(mem / n) + "," +
                   detail::fmt_double(cost / n) + "\n";
        }
    }
    return out;
}

inline nlohmann::json report_to_json(const ExperimentReport& report) {
    nlohmann::json j;
    auto& config = j["config"];
    config["tiers"] = report.config.tiers;
    auto& kinds = config["kinds"] = nlohmann::json::array();
    for (TestKind kind : report.config.kinds) kinds.push_back(abbrev(kind));
    config["iterations"] = report.config.iterations;
    config["seed"] = report.config.seed;
    config["literal_rescan"] = report.config.literal_rescan;
    config["seq_page_cost"] = report.config.cost_params.seq_page_cost;
    config["cpu_tuple_cost"] = report.config.cost_params.cpu_tuple_cost;
    config["class_count"] = report.config.class_count;
    config["predicate_class"] = report.config.predicate_class;
    config["insert_fraction"] = report.config.insert_fraction;

    auto& cells = j["cells"] = nlohmann::json::array();
    for (const CellResult& cell : report.cells) {
        nlohmann::json jc;
        jc["tier"] = cell.tier;
        jc["kind"] = abbrev(cell.kind);
        auto& samples = jc["samples"] = nlohmann::json::array();
        for (std::size_t i = 0; i < cell.samples.size(); ++i) {
            const MetricSample& s = cell.samples[i];
            samples.push_back({{"iteration", i},
                               {"elapsed_us", s.elapsed_us},
                               {"rows_scanned", s.counters.rows_scanned},
                               {"additions", s.counters.additions},
                               {"comparisons", s.counters.comparisons},
                               {"hash_probes", s.counters.hash_probes},
                               {"pages_read", s.counters.pages_read},
                               {"mem_units", s.counters.mem_units},
                               {"est_cost", s.est_cost}});
        }
        if (!cell.samples.empty()) {
            jc["elapsed_stats"] = {{"range", cell.elapsed_stats.range},
                                   {"sd", cell.elapsed_stats.sd},
                                   {"mean", cell.elapsed_stats.mean},
                                   {"median", cell.elapsed_stats.median},
                                   {"sd_pct_of_mean", cell.elapsed_stats.sd_pct_of_mean},
                                   {"sd_pct_of_median", cell.elapsed_stats.sd_pct_of_median}};
        }
        if (cell.failure) {
            jc["failure"] = *cell.failure;
        }
        cells.push_back(std::move(jc));
    }
    return j;
}

inline ExperimentReport report_from_json(const nlohmann::json& j) {
    try {
        ExperimentReport report;
        const auto& config = j.at("config");
        report.config.tiers = config.at("tiers").get<std::vector<std::uint64_t>>();
        report.config.kinds.clear();
        for (const auto& kind : config.at("kinds")) {
            report.config.kinds.push_back(parse_test_kind(kind.get<std::string>()));
        }
        report.config.iterations = config.at("iterations").get<std::uint32_t>();
        report.config.seed = config.at("seed").get<std::uint64_t>();
        report.config.literal_rescan = config.at("literal_rescan").get<bool>();
        report.config.cost_params.seq_page_cost = config.at("seq_page_cost").get<double>();
        report.config.cost_params.cpu_tuple_cost = config.at("cpu_tuple_cost").get<double>();
        report.config.class_count = config.at("class_count").get<std::uint32_t>();
        report.config.predicate_class = config.at("predicate_class").get<std::string>();
        report.config.insert_fraction = config.at("insert_fraction").get<double>();

        for (const auto& jc : j.at("cells")) {
            CellResult cell;
            cell.tier = jc.at("tier").get<std::uint64_t>();
            cell.kind = parse_test_kind(jc.at("kind").get<std::string>());
            for (const auto& js : jc.at("samples")) {
                MetricSample s;
                s.elapsed_us = js.at("elapsed_us").get<std::int64_t>();
                s.counters.rows_scanned = js.at("rows_scanned").get<std::uint64_t>();
                s.counters.additions = js.at("additions").get<std::uint64_t>();
                s.counters.comparisons = js.at("comparisons").get<std::uint64_t>();
                s.counters.hash_probes = js.at("hash_probes").get<std::uint64_t>();
                s.counters.pages_read = js.at("pages_read").get<std::uint64_t>();
                s.counters.mem_units = js.at("mem_units").get<std::uint64_t>();
                s.est_cost = js.at("est_cost").get<double>();
                cell.samples.push_back(s);
            }
            if (auto it = jc.find("elapsed_stats"); it != jc.end()) {
                cell.elapsed_stats.range = it->at("range").get<double>();
                cell.elapsed_stats.sd = it->at("sd").get<double>();
                cell.elapsed_stats.mean = it->at("mean").get<double>();
                cell.elapsed_stats.median = it->at("median").get<double>();
                cell.elapsed_stats.sd_pct_of_mean = it->at("sd_pct_of_mean").get<double>();
                cell.elapsed_stats.sd_pct_of_median = it->at("sd_pct_of_median").get<double>();
            }
            if (auto it = jc.find("failure"); it != jc.end()) {
                cell.failure = it->get<std::string>();
            }
            report.cells.push_back(std::move(cell));
        }
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(0, std::string("malformed report JSON: ") + e.what());
    }
}

inline void emit_report(const ExperimentReport& report, ReportFormat format,
                        const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    if (format == ReportFormat::Csv) {
        out << report_to_csv(report);
    } else {
        out << report_to_json(report).dump(2) << '\n';
    }
    out.flush();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace deltasum
