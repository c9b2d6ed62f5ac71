// Relational data model shared by the storage engine, workload generator,
// benchmark harness and SQL emitters: row tuples, storage modes, predicates
// and the deterministic work counters.
#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace deltasum {

// Epoch-microsecond offset in absolute relations, per-class difference in
// delta relations. Signed 64-bit integers keep the telescoping sums exact;
// floating point would drift.
using IntervalMicros = std::int64_t;

// Emulated page geometry for the I/O counter: pages = ceil(bytes scanned / 8KB).
inline constexpr std::uint64_t kPageBytes = 8192;
// Fixed row width used for page emulation: pk + class slot + interval value.
inline constexpr std::uint64_t kRowWidthBytes = 24;

enum class StorageMode { Absolute, Delta };

// Control = store raw values, answer latest-value queries by hash/sort/MAX.
// Delta = store per-class differences, answer by a single SUM pass.
enum class Method { Control, Delta };

inline const char* to_string(StorageMode mode) {
    return mode == StorageMode::Absolute ? "absolute" : "delta";
}

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CapacityExceeded : Error {
    using Error::Error;
};

// A relation (or its manifest) was used in a mode it does not declare.
struct ModeMismatch : Error {
    using Error::Error;
};

// Non-primary-key classification attribute; partitions rows into independent
// streams. Ordering is lexicographic on the label.
struct ClassKey {
    std::string label;

    friend auto operator<=>(const ClassKey&, const ClassKey&) = default;
};

struct RowTuple {
    std::uint64_t pk = 0;
    ClassKey class_key;
    IntervalMicros interval = 0;

    friend bool operator==(const RowTuple&, const RowTuple&) = default;
};

struct RelationManifest {
    std::vector<ClassKey> class_alphabet;
    std::uint64_t seed = 0;
    std::uint64_t cardinality = 0;
    // Row order the dataset was generated with: "shuffled", "sorted" or
    // "unspecified" for hand-built relations. Round-trips through the sidecar.
    std::string order = "unspecified";

    friend bool operator==(const RelationManifest&, const RelationManifest&) = default;
};

// Deterministic work counters standing in for platform metrics: CPU work
// (additions/comparisons/hash probes), I/O (emulated page reads) and memory
// (peak auxiliary entries). Reset at the start of every measured operation.
struct CounterSet {
    std::uint64_t rows_scanned = 0;
    std::uint64_t additions = 0;
    std::uint64_t comparisons = 0;
    std::uint64_t hash_probes = 0;
    std::uint64_t pages_read = 0;
    std::uint64_t mem_units = 0;

    void reset() { *this = CounterSet{}; }

    friend bool operator==(const CounterSet&, const CounterSet&) = default;
};

inline std::uint64_t pages_for_rows(std::uint64_t rows_scanned,
                                    std::uint64_t row_width_bytes = kRowWidthBytes) {
    return (rows_scanned * row_width_bytes + kPageBytes - 1) / kPageBytes;
}

// Fixed-order key=value rendering for scripts and the CLI --counters flag.
inline std::string format_counters(const CounterSet& c) {
    return "rows_scanned=" + std::to_string(c.rows_scanned) +
           " additions=" + std::to_string(c.additions) +
           " comparisons=" + std::to_string(c.comparisons) +
           " hash_probes=" + std::to_string(c.hash_probes) +
           " pages_read=" + std::to_string(c.pages_read) +
           " mem_units=" + std::to_string(c.mem_units);
}

// Optional class filter. An empty class set is rejected at construction; a
// default-constructed predicate matches every class.
class Predicate {
public:
    Predicate() = default;

    static Predicate any() { return Predicate{}; }

    static Predicate only(std::set<ClassKey> classes) {
        if (classes.empty()) {
            throw Error("predicate class set must be non-empty");
        }
        Predicate p;
        p.allowed_ = std::move(classes);
        return p;
    }

    bool matches(const ClassKey& key) const {
        return !allowed_ || allowed_->contains(key);
    }

    const std::optional<std::set<ClassKey>>& allowed_classes() const { return allowed_; }

private:
    std::optional<std::set<ClassKey>> allowed_;
};

// Append-only ordered collection of (pk, class, interval) tuples. The storage
// mode is fixed at creation; pks are strictly increasing; every row's class
// belongs to the manifest alphabet.
class Relation {
public:
    Relation(StorageMode mode, RelationManifest manifest)
        : mode_(mode), manifest_(std::move(manifest)) {}

    StorageMode mode() const { return mode_; }
    const RelationManifest& manifest() const { return manifest_; }
    const std::vector<RowTuple>& rows() const { return rows_; }
    std::uint64_t size() const { return rows_.size(); }
    std::uint64_t last_pk() const { return rows_.empty() ? 0 : rows_.back().pk; }

    void reserve(std::size_t n) { rows_.reserve(n); }

    bool in_alphabet(const ClassKey& key) const {
        const auto& alphabet = manifest_.class_alphabet;
        return std::find(alphabet.begin(), alphabet.end(), key) != alphabet.end();
    }

    // Appends with the next surrogate key and returns it.
    std::uint64_t append(const ClassKey& key, IntervalMicros value) {
        if (last_pk() == std::numeric_limits<std::uint64_t>::max()) {
            throw CapacityExceeded("pk space exhausted");
        }
        RowTuple row{last_pk() + 1, key, value};
        append_row(row);
        return row.pk;
    }

    // Appends a fully-specified row; pk must exceed the current maximum.
    void append_row(RowTuple row) {
        if (row.pk <= last_pk()) {
            throw Error("pk " + std::to_string(row.pk) + " does not exceed current maximum " +
                        std::to_string(last_pk()));
        }
        if (!in_alphabet(row.class_key)) {
            throw Error("class '" + row.class_key.label + "' not in manifest alphabet");
        }
        if (mode_ == StorageMode::Absolute && row.interval < 0) {
            throw Error("negative interval " + std::to_string(row.interval) +
                        " in absolute relation at pk " + std::to_string(row.pk));
        }
        rows_.push_back(std::move(row));
    }

    friend bool operator==(const Relation& a, const Relation& b) {
        return a.mode_ == b.mode_ && a.manifest_ == b.manifest_ && a.rows_ == b.rows_;
    }

private:
    StorageMode mode_;
    RelationManifest manifest_;
    std::vector<RowTuple> rows_;
};

// One per-class result of a latest-value query. witness_pk identifies the row
// achieving the maximum and is recoverable only through the control path.
struct LatestValue {
    ClassKey class_key;
    IntervalMicros value = 0;
    std::optional<std::uint64_t> witness_pk;

    friend bool operator==(const LatestValue&, const LatestValue&) = default;
};

}  // namespace deltasum
