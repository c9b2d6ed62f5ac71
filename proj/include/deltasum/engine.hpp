// Both storage methods behind one instrumented surface. The control path
// stores raw values and answers latest-value queries the expensive way
// (scan, hash into per-class buckets, sort each bucket, take the top); the
// delta path stores per-class differences so a single SUM pass per class
// yields the same answer, trading selection work for insertion work.
#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "deltasum/core.hpp"

namespace deltasum {

// Per-class running sum of stored deltas. By the telescoping identity each
// accumulator equals the most recently inserted absolute value for its class,
// which makes delta insertion O(1) instead of a re-scan per insert.
struct DeltaState {
    std::map<ClassKey, IntervalMicros> accumulators;

    friend bool operator==(const DeltaState&, const DeltaState&) = default;
};

struct BatchEntry {
    ClassKey class_key;
    IntervalMicros value = 0;  // absolute semantics regardless of target mode

    friend bool operator==(const BatchEntry&, const BatchEntry&) = default;
};

struct InsertBatch {
    std::vector<BatchEntry> entries;
};

enum class TieBreak { HighestPk };

struct EngineConfig {
    // On: reject per-class decreasing inserts, the regime where MAX and
    // SUM-of-deltas coincide. Off: sums yield last-write semantics instead.
    bool enforce_monotonic = true;
    TieBreak tie_break = TieBreak::HighestPk;
};

// A delta insert would break per-class monotonicity while enforcement is on.
struct OutOfOrderInsert : Error {
    ClassKey class_key;
    IntervalMicros attempted = 0;
    IntervalMicros current = 0;

    OutOfOrderInsert(ClassKey key, IntervalMicros attempted_value, IntervalMicros current_value)
        : Error("out-of-order insert for class '" + key.label + "': " +
                std::to_string(attempted_value) + " < current " + std::to_string(current_value)),
          class_key(std::move(key)),
          attempted(attempted_value),
          current(current_value) {}
};

// A delta relation decoded to a negative absolute value; the data is corrupt.
struct NegativeDecodedValue : Error {
    std::uint64_t pk = 0;

    explicit NegativeDecodedValue(std::uint64_t at_pk, IntervalMicros decoded)
        : Error("negative decoded value " + std::to_string(decoded) + " at pk " +
                std::to_string(at_pk)),
          pk(at_pk) {}
};

namespace detail {

inline IntervalMicros checked_add(IntervalMicros a, IntervalMicros b) {
    IntervalMicros out;
    if (__builtin_add_overflow(a, b, &out)) {
        throw Error("interval sum overflow");
    }
    return out;
}

inline constexpr std::ptrdiff_t kSmallSortCutoff = 16;

template <typename T, typename Less>
void insertion_sort(std::vector<T>& v, std::ptrdiff_t lo, std::ptrdiff_t hi, Less& less) {
    for (std::ptrdiff_t i = lo + 1; i <= hi; ++i) {
        T tmp = std::move(v[i]);
        std::ptrdiff_t j = i;
        while (j > lo && less(tmp, v[j - 1])) {
            v[j] = std::move(v[j - 1]);
            --j;
        }
        v[j] = std::move(tmp);
    }
}

// Median-of-three quicksort, recursing into the smaller side and finishing
// small ranges with insertion sort. Every element comparison goes through
// `less`, which is where the caller counts.
template <typename T, typename Less>
void quicksort(std::vector<T>& v, std::ptrdiff_t lo, std::ptrdiff_t hi, Less& less) {
    while (hi - lo >= kSmallSortCutoff) {
        const std::ptrdiff_t mid = lo + (hi - lo) / 2;
        if (less(v[mid], v[lo])) std::swap(v[mid], v[lo]);
        if (less(v[hi], v[mid])) {
            std::swap(v[hi], v[mid]);
            if (less(v[mid], v[lo])) std::swap(v[mid], v[lo]);
        }
        const T pivot = v[mid];
        std::ptrdiff_t i = lo;
        std::ptrdiff_t j = hi;
        while (i <= j) {
            while (less(v[i], pivot)) ++i;
            while (less(pivot, v[j])) --j;
            if (i <= j) {
                std::swap(v[i], v[j]);
                ++i;
                --j;
            }
        }
        if (j - lo < hi - i) {
            quicksort(v, lo, j, less);
            lo = i;
        } else {
            quicksort(v, i, hi, less);
            hi = j;
        }
    }
    insertion_sort(v, lo, hi, less);
}

template <typename T, typename Less>
void counted_sort(std::vector<T>& v, Less& less) {
    if (v.size() > 1) {
        quicksort(v, 0, static_cast<std::ptrdiff_t>(v.size()) - 1, less);
    }
}

inline void require_mode(const Relation& rel, StorageMode mode, const char* op) {
    if (rel.mode() != mode) {
        throw ModeMismatch(std::string(op) + " requires a " +
                           std::string(to_string(mode)) + " relation, got " +
                           to_string(rel.mode()));
    }
}

inline void require_subset(const Predicate& pred, const Relation& rel) {
    if (!pred.allowed_classes()) return;
    for (const ClassKey& key : *pred.allowed_classes()) {
        if (!rel.in_alphabet(key)) {
            throw Error("predicate class '" + key.label + "' not in manifest alphabet");
        }
    }
}

inline void require_batch(const InsertBatch& batch) {
    if (batch.entries.empty()) {
        throw Error("insert batch must be non-empty");
    }
    for (const BatchEntry& entry : batch.entries) {
        if (entry.value < 0) {
            throw Error("batch value " + std::to_string(entry.value) +
                        " is negative; batch entries carry absolute values");
        }
    }
}

}  // namespace detail

// Appends each batch entry verbatim with the next pk. No scan, no arithmetic:
// the control method's insertion is deliberately cheap.
inline void insert_absolute(Relation& rel, const InsertBatch& batch, CounterSet& counters) {
    detail::require_mode(rel, StorageMode::Absolute, "insert_absolute");
    detail::require_batch(batch);
    counters.reset();
    for (const BatchEntry& entry : batch.entries) {
        rel.append(entry.class_key, entry.value);
    }
    counters.pages_read = pages_for_rows(counters.rows_scanned);
}

// Stores each entry as the difference from its class's running total. First
// value per class is stored verbatim; each later entry costs one subtraction
// (counted as an addition) against the accumulator instead of a scan.
// Fails atomically: a monotonicity violation leaves relation and state untouched.
inline void insert_delta(Relation& rel, DeltaState& state, const InsertBatch& batch,
                         const EngineConfig& cfg, CounterSet& counters) {
    detail::require_mode(rel, StorageMode::Delta, "insert_delta");
    detail::require_batch(batch);
    counters.reset();

    if (cfg.enforce_monotonic) {
        std::map<ClassKey, IntervalMicros> pending;
        for (const BatchEntry& entry : batch.entries) {
            const IntervalMicros* current = nullptr;
            if (auto it = pending.find(entry.class_key); it != pending.end()) {
                current = &it->second;
            } else if (auto st = state.accumulators.find(entry.class_key);
                       st != state.accumulators.end()) {
                current = &st->second;
            }
            if (current && entry.value < *current) {
                throw OutOfOrderInsert(entry.class_key, entry.value, *current);
            }
            pending[entry.class_key] = entry.value;
        }
    }

    for (const BatchEntry& entry : batch.entries) {
        auto it = state.accumulators.find(entry.class_key);
        if (it == state.accumulators.end()) {
            rel.append(entry.class_key, entry.value);
            state.accumulators.emplace(entry.class_key, entry.value);
        } else {
            rel.append(entry.class_key, entry.value - it->second);
            it->second = entry.value;
            ++counters.additions;
        }
    }
    counters.pages_read = pages_for_rows(counters.rows_scanned);
}

// The control pipeline: scan every row, hash survivors into per-class
// buckets, sort each bucket, take its top element. Ties on the interval are
// broken by the highest pk. Results are ordered by class label.
inline std::vector<LatestValue> select_latest_absolute(const Relation& rel, const Predicate& pred,
                                                       CounterSet& counters) {
    detail::require_mode(rel, StorageMode::Absolute, "select_latest_absolute");
    detail::require_subset(pred, rel);
    counters.reset();

    struct Entry {
        IntervalMicros interval;
        std::uint64_t pk;
    };
    std::unordered_map<std::string, std::vector<Entry>> buckets;

    counters.rows_scanned += rel.size();
    for (const RowTuple& row : rel.rows()) {
        if (!pred.matches(row.class_key)) continue;
        ++counters.hash_probes;
        buckets[row.class_key.label].push_back({row.interval, row.pk});
        ++counters.mem_units;  // nothing is evicted, so the running total is the peak
    }

    auto less = [&counters](const Entry& a, const Entry& b) {
        ++counters.comparisons;
        return a.interval != b.interval ? a.interval < b.interval : a.pk < b.pk;
    };

    std::vector<LatestValue> out;
    out.reserve(buckets.size());
    for (auto& [label, bucket] : buckets) {
        detail::counted_sort(bucket, less);
        const Entry& top = bucket.back();
        out.push_back({ClassKey{label}, top.interval, top.pk});
    }
    std::sort(out.begin(), out.end(),
              [](const LatestValue& a, const LatestValue& b) { return a.class_key < b.class_key; });
    counters.pages_read = pages_for_rows(counters.rows_scanned);
    return out;
}

// The delta pipeline: one scan, one addition per surviving row, no sort at
// all. Each class's sum of stored deltas is its latest absolute value. Row
// identity is not recoverable from sums, so witness_pk stays empty.
inline std::vector<LatestValue> select_latest_delta(const Relation& rel, const Predicate& pred,
                                                    CounterSet& counters) {
    detail::require_mode(rel, StorageMode::Delta, "select_latest_delta");
    detail::require_subset(pred, rel);
    counters.reset();

    counters.rows_scanned += rel.size();
    std::map<ClassKey, IntervalMicros> sums;
    for (const RowTuple& row : rel.rows()) {
        if (!pred.matches(row.class_key)) continue;
        auto [it, inserted] = sums.try_emplace(row.class_key, 0);
        it->second = detail::checked_add(it->second, row.interval);
        ++counters.additions;
    }
    counters.mem_units = sums.size();

    std::vector<LatestValue> out;
    out.reserve(sums.size());
    for (const auto& [key, sum] : sums) {
        out.push_back({key, sum, std::nullopt});
    }
    counters.pages_read = pages_for_rows(counters.rows_scanned);
    return out;
}

// Rewrites an absolute relation to delta storage: per class in pk order, the
// first value is kept verbatim and every later one becomes the difference
// from its predecessor. Deltas may be negative; the per-class SUM of the
// result always equals the class's last-by-pk absolute value.
inline std::pair<Relation, DeltaState> convert_absolute_to_delta(const Relation& rel) {
    detail::require_mode(rel, StorageMode::Absolute, "convert_absolute_to_delta");
    Relation out(StorageMode::Delta, rel.manifest());
    out.reserve(rel.rows().size());
    DeltaState state;
    for (const RowTuple& row : rel.rows()) {
        auto it = state.accumulators.find(row.class_key);
        if (it == state.accumulators.end()) {
            out.append_row({row.pk, row.class_key, row.interval});
            state.accumulators.emplace(row.class_key, row.interval);
        } else {
            out.append_row({row.pk, row.class_key, row.interval - it->second});
            it->second = row.interval;
        }
    }
    return {std::move(out), std::move(state)};
}

// Exact inverse of convert_absolute_to_delta: per-class prefix sums in pk
// order. A negative running total means the delta relation is corrupt.
inline Relation convert_delta_to_absolute(const Relation& rel) {
    detail::require_mode(rel, StorageMode::Delta, "convert_delta_to_absolute");
    Relation out(StorageMode::Absolute, rel.manifest());
    out.reserve(rel.rows().size());
    std::map<ClassKey, IntervalMicros> running;
    for (const RowTuple& row : rel.rows()) {
        auto [it, inserted] = running.try_emplace(row.class_key, 0);
        const IntervalMicros total = detail::checked_add(it->second, row.interval);
        if (total < 0) {
            throw NegativeDecodedValue(row.pk, total);
        }
        it->second = total;
        out.append_row({row.pk, row.class_key, total});
    }
    return out;
}

}  // namespace deltasum
