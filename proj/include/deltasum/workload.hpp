// Deterministic dataset generation and CSV/manifest persistence. Same spec,
// same order flag, same bytes — on any platform — so experiments replay.
#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "deltasum/core.hpp"

namespace deltasum {

struct InvalidSpec : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

struct FormatError : Error {
    std::size_t line = 0;

    FormatError(std::size_t at_line, const std::string& what)
        : Error("line " + std::to_string(at_line) + ": " + what), line(at_line) {}
};

// 2021-01-01T00:00:00Z in epoch microseconds.
inline constexpr IntervalMicros kDefaultRangeStart = 1'609'459'200'000'000;
inline constexpr std::uint64_t kMicrosPerDay = 86'400'000'000ULL;

struct WorkloadSpec {
    std::uint64_t seed = 1;
    std::uint64_t cardinality = 0;
    std::uint32_t class_count = 10;
    IntervalMicros range_start = kDefaultRangeStart;
    std::uint32_t range_days = 365;
};

enum class GenOrder { Shuffled, PerClassSorted };

inline const char* to_string(GenOrder order) {
    return order == GenOrder::Shuffled ? "shuffled" : "sorted";
}

// xoshiro256** (Blackman & Vigna), state seeded through splitmix64. Chosen
// over std::mt19937_64 so the stream is pinned by this header, not by a
// standard library implementation.
class Xoshiro256ss {
public:
    explicit Xoshiro256ss(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : s_) {
            x += 0x9E3779B97F4A7C15ULL;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
            z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
            word = z ^ (z >> 31);
        }
    }

    std::uint64_t next() {
        const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = std::rotl(s_[3], 45);
        return result;
    }

    // Unbiased draw from [0, bound) via bitmask rejection.
    std::uint64_t uniform_below(std::uint64_t bound) {
        const std::uint64_t mask = ~std::uint64_t{0} >> std::countl_zero((bound - 1) | 1);
        std::uint64_t draw;
        do {
            draw = next() & mask;
        } while (draw >= bound);
        return draw;
    }

private:
    std::uint64_t s_[4];
};

// Spreadsheet-style labels: A..Z, AA, AB, ...
inline std::vector<ClassKey> class_alphabet(std::uint32_t count) {
    std::vector<ClassKey> alphabet;
    alphabet.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string label;
        std::uint32_t n = i + 1;
        while (n > 0) {
            --n;
            label.insert(label.begin(), static_cast<char>('A' + n % 26));
            n /= 26;
        }
        alphabet.push_back(ClassKey{std::move(label)});
    }
    return alphabet;
}

// Uniform class labels and uniform values in the declared 1-microsecond-grain
// window, two draws per row (class first). Shuffled keeps the generated row
// order; PerClassSorted rewrites each class's values ascending across that
// class's row positions, yielding a per-class monotonic stream.
inline Relation gen_dataset(const WorkloadSpec& spec, GenOrder order) {
    if (spec.cardinality == 0) throw InvalidSpec("cardinality must be >= 1");
    if (spec.class_count == 0) throw InvalidSpec("class_count must be >= 1");
    if (spec.range_days == 0) throw InvalidSpec("range_days must be >= 1");
    if (spec.range_start < 0) throw InvalidSpec("range_start must be >= 0");

    const std::vector<ClassKey> alphabet = class_alphabet(spec.class_count);
    const std::uint64_t width = static_cast<std::uint64_t>(spec.range_days) * kMicrosPerDay;

    Xoshiro256ss rng(spec.seed);
    std::vector<std::uint32_t> classes(spec.cardinality);
    std::vector<IntervalMicros> values(spec.cardinality);
    for (std::uint64_t i = 0; i < spec.cardinality; ++i) {
        classes[i] = static_cast<std::uint32_t>(rng.uniform_below(spec.class_count));
        values[i] = spec.range_start + static_cast<IntervalMicros>(rng.uniform_below(width));
    }

    if (order == GenOrder::PerClassSorted) {
        std::vector<std::vector<IntervalMicros>> per_class(spec.class_count);
        for (std::uint64_t i = 0; i < spec.cardinality; ++i) {
            per_class[classes[i]].push_back(values[i]);
        }
        for (auto& list : per_class) {
            std::sort(list.begin(), list.end());
        }
        std::vector<std::size_t> cursor(spec.class_count, 0);
        for (std::uint64_t i = 0; i < spec.cardinality; ++i) {
            values[i] = per_class[classes[i]][cursor[classes[i]]++];
        }
    }

    RelationManifest manifest{alphabet, spec.seed, spec.cardinality, to_string(order)};
    Relation rel(StorageMode::Absolute, std::move(manifest));
    rel.reserve(spec.cardinality);
    for (std::uint64_t i = 0; i < spec.cardinality; ++i) {
        rel.append(alphabet[classes[i]], values[i]);
    }
    return rel;
}

inline std::filesystem::path manifest_path_for(const std::filesystem::path& data_path) {
    std::filesystem::path p = data_path;
    p.replace_extension();
    p += ".manifest.json";
    return p;
}

// Writes `pk,class,value_us` CSV (UTF-8, LF) plus the sidecar manifest.
// Returns the manifest path.
inline std::filesystem::path save_relation(const Relation& rel, const std::filesystem::path& path) {
    std::ofstream csv(path, std::ios::binary);
    if (!csv) throw IoError("cannot open '" + path.string() + "' for writing");
    csv << "pk,class,value_us\n";
    for (const RowTuple& row : rel.rows()) {
        csv << row.pk << ',' << row.class_key.label << ',' << row.interval << '\n';
    }
    csv.flush();
    if (!csv) throw IoError("failed writing '" + path.string() + "'");

    nlohmann::json manifest;
    manifest["mode"] = to_string(rel.mode());
    manifest["seed"] = rel.manifest().seed;
    auto& alphabet = manifest["class_alphabet"] = nlohmann::json::array();
    for (const ClassKey& key : rel.manifest().class_alphabet) {
        alphabet.push_back(key.label);
    }
    manifest["cardinality"] = rel.manifest().cardinality;
    manifest["order"] = rel.manifest().order;

    const std::filesystem::path sidecar = manifest_path_for(path);
    std::ofstream mf(sidecar, std::ios::binary);
    if (!mf) throw IoError("cannot open '" + sidecar.string() + "' for writing");
    mf << manifest.dump(2) << '\n';
    mf.flush();
    if (!mf) throw IoError("failed writing '" + sidecar.string() + "'");
    return sidecar;
}

namespace detail {

template <typename T>
T parse_int_field(std::string_view field, std::size_t line, const char* what) {
    T value{};
    const auto* begin = field.data();
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end || field.empty()) {
        throw FormatError(line, std::string("malformed ") + what + " '" + std::string(field) + "'");
    }
    return value;
}

}  // namespace detail

// Loads a relation saved by save_relation. When `expected` is given, a
// manifest declaring the other mode is rejected up front.
inline Relation load_relation(const std::filesystem::path& path,
                              std::optional<StorageMode> expected = std::nullopt) {
    const std::filesystem::path sidecar = manifest_path_for(path);
    std::ifstream mf(sidecar, std::ios::binary);
    if (!mf) throw IoError("cannot open manifest '" + sidecar.string() + "'");
    nlohmann::json manifest_json;
    try {
        mf >> manifest_json;
        RelationManifest manifest;
        const std::string mode_str = manifest_json.at("mode").get<std::string>();
        StorageMode mode;
        if (mode_str == "absolute") {
            mode = StorageMode::Absolute;
        } else if (mode_str == "delta") {
            mode = StorageMode::Delta;
        } else {
            throw FormatError(0, "unknown mode '" + mode_str + "' in manifest");
        }
        if (expected && mode != *expected) {
            throw ModeMismatch("manifest declares " + mode_str + " but " +
                               std::string(to_string(*expected)) + " was requested");
        }
        manifest.seed = manifest_json.at("seed").get<std::uint64_t>();
        for (const auto& label : manifest_json.at("class_alphabet")) {
            manifest.class_alphabet.push_back(ClassKey{label.get<std::string>()});
        }
        manifest.cardinality = manifest_json.at("cardinality").get<std::uint64_t>();
        manifest.order = manifest_json.at("order").get<std::string>();

        std::ifstream csv(path, std::ios::binary);
        if (!csv) throw IoError("cannot open '" + path.string() + "'");

        Relation rel(mode, std::move(manifest));
        rel.reserve(rel.manifest().cardinality);

        std::string line;
        std::size_t line_no = 0;
        while (std::getline(csv, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line_no == 1) {
                if (line != "pk,class,value_us") {
                    throw FormatError(1, "expected header 'pk,class,value_us', got '" + line + "'");
                }
                continue;
            }
            if (line.empty()) {
                throw FormatError(line_no, "empty row");
            }
            const std::size_t first = line.find(',');
            const std::size_t second = first == std::string::npos
                                           ? std::string::npos
                                           : line.find(',', first + 1);
            if (first == std::string::npos || second == std::string::npos ||
                line.find(',', second + 1) != std::string::npos) {
                throw FormatError(line_no, "expected exactly 3 comma-separated fields");
            }
            std::string_view view(line);
            const auto pk = detail::parse_int_field<std::uint64_t>(view.substr(0, first), line_no, "pk");
            const std::string label(view.substr(first + 1, second - first - 1));
            if (label.empty()) {
                throw FormatError(line_no, "empty class label");
            }
            const auto value = detail::parse_int_field<IntervalMicros>(view.substr(second + 1),
                                                                       line_no, "value_us");
            try {
                rel.append_row({pk, ClassKey{label}, value});
            } catch (const Error& e) {
                throw FormatError(line_no, e.what());
            }
        }
        if (line_no == 0) {
            throw FormatError(0, "empty file, expected 'pk,class,value_us' header");
        }
        return rel;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(0, "malformed manifest '" + sidecar.string() + "': " + e.what());
    }
}

}  // namespace deltasum
