#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "conefield/field.hpp"
#include "conefield/graph.hpp"

namespace conefield {

/// Exact encoding of a cone configuration tuple. Radix-packed into one
/// machine word when alphabet^length fits, byte string otherwise; either way
/// the mapping is injective, so counts never suffer hash collisions.
/// Comparison is lexicographic in the symbol tuple (for equal-length configs
/// of one class, which is the only place configs are compared).
class ConfigCode {
public:
    ConfigCode() = default;

    static bool packs(int alphabet_size, int length);
    static ConfigCode from_symbols(std::span<const std::uint8_t> symbols, int alphabet_size);
    std::vector<std::uint8_t> symbols(int alphabet_size, int length) const;

    /// Space-separated decimal rendering, e.g. "0 1 0".
    std::string to_text(int alphabet_size, int length) const;
    static ConfigCode from_text(const std::string& text, int alphabet_size, int length);

    friend std::strong_ordering operator<=>(const ConfigCode& a, const ConfigCode& b) {
        if (a.packed_ != b.packed_) return a.packed_ ? std::strong_ordering::less
                                                     : std::strong_ordering::greater;
        if (auto c = a.word_ <=> b.word_; c != 0) return c;
        return a.bytes_ <=> b.bytes_;
    }
    bool operator==(const ConfigCode&) const = default;

private:
    bool packed_ = true;
    std::uint64_t word_ = 0;
    std::string bytes_;
};

/// Reads the configuration of `t` anchored at `at` from the field, in the
/// template's canonical offset order. Returns nullopt when any cell falls
/// outside the observed time range.
std::optional<std::vector<std::uint8_t>> extract_cone_config(const FieldSeries& f,
                                                             const ConeTemplate& t, Point at);

struct PastStats {
    std::int64_t total = 0;
    std::map<ConfigCode, std::int64_t> futures;
};

struct ClassCounts {
    std::int64_t total = 0;
    std::map<ConfigCode, PastStats> pasts;
};

/// Empirical joint counts of (past configuration, future configuration) per
/// vertex class. One increment per interior point: a point contributes only
/// when both of its cones lie fully inside the observed time range.
class ConeDatabase {
public:
    ConeDatabase() = default;

    const ConeParams& params() const { return params_; }
    bool pooling() const { return pooling_; }
    int alphabet_size() const { return alphabet_size_; }
    std::uint64_t graph_hash() const { return graph_hash_; }
    int class_count() const { return static_cast<int>(classes_.size()); }
    const ClassCounts& class_counts(int class_id) const;
    int past_len(int class_id) const { return past_len_[static_cast<std::size_t>(class_id)]; }
    int future_len(int class_id) const { return future_len_[static_cast<std::size_t>(class_id)]; }
    const std::vector<std::pair<int, int>>& series_dims() const { return series_dims_; }

    std::int64_t total_mass() const;

    friend ConeDatabase build_cone_database(std::span<const FieldSeries> series,
                                            const Geometry& geom, int threads);

private:
    ConeParams params_;
    bool pooling_ = false;
    int alphabet_size_ = 0;
    std::uint64_t graph_hash_ = 0;
    std::vector<int> past_len_, future_len_;
    std::vector<ClassCounts> classes_;
    std::vector<std::pair<int, int>> series_dims_;  // (T, V) per accumulated series
};

/// Counts cone configuration pairs over every interior point of every series.
/// Partial maps from worker threads merge by addition, so the result is
/// independent of the partitioning.
ConeDatabase build_cone_database(std::span<const FieldSeries> series, const Geometry& geom,
                                 int threads = 1);
ConeDatabase build_cone_database(const FieldSeries& f, const Geometry& geom, int threads = 1);

/// Normalized future distribution of one observed past. Throws NoDataError
/// for a past absent from the class.
std::vector<std::pair<ConfigCode, double>> conditional_distribution(const ConeDatabase& db,
                                                                    int class_id,
                                                                    const ConfigCode& past);

}  // namespace conefield
