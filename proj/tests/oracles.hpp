// Independent test oracles. Deliberately naive: plain nested scans over raw
// row vectors with none of the engine's hashing, sorting or accumulators, so
// they stay valid evidence against either selection path.
#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "deltasum/core.hpp"

namespace oracles {

inline bool matches(const std::optional<std::set<deltasum::ClassKey>>& allowed,
                    const deltasum::ClassKey& key) {
    return !allowed || allowed->contains(key);
}

// Max interval per class, ties broken by highest pk, by exhaustive scan.
inline std::vector<deltasum::LatestValue> brute_force_latest_max(
    const std::vector<deltasum::RowTuple>& rows,
    const std::optional<std::set<deltasum::ClassKey>>& allowed = std::nullopt) {
    std::vector<deltasum::ClassKey> classes;
    for (const auto& row : rows) {
        if (!matches(allowed, row.class_key)) continue;
        bool seen = false;
        for (const auto& known : classes) {
            if (known == row.class_key) {
                seen = true;
                break;
            }
        }
        if (!seen) classes.push_back(row.class_key);
    }
    std::sort(classes.begin(), classes.end());

    std::vector<deltasum::LatestValue> out;
    for (const auto& cls : classes) {
        deltasum::LatestValue best{cls, 0, std::nullopt};
        for (const auto& row : rows) {
            if (row.class_key != cls) continue;
            if (!best.witness_pk || row.interval > best.value ||
                (row.interval == best.value && row.pk > *best.witness_pk)) {
                best.value = row.interval;
                best.witness_pk = row.pk;
            }
        }
        out.push_back(best);
    }
    return out;
}

// Last value per class in pk (insertion) order.
inline std::vector<deltasum::LatestValue> last_write_latest(
    const std::vector<deltasum::RowTuple>& rows,
    const std::optional<std::set<deltasum::ClassKey>>& allowed = std::nullopt) {
    std::map<deltasum::ClassKey, deltasum::IntervalMicros> last;
    for (const auto& row : rows) {
        if (!matches(allowed, row.class_key)) continue;
        last[row.class_key] = row.interval;
    }
    std::vector<deltasum::LatestValue> out;
    for (const auto& [key, value] : last) {
        out.push_back({key, value, std::nullopt});
    }
    return out;
}

}  // namespace oracles
