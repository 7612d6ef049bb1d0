#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "conefield/graph.hpp"

namespace conefield {

/// A discrete space-time field: T time slices over the graph's vertices.
/// Symbols are integers in [0, alphabet_size); alphabets up to 256 symbols
/// are supported.
struct FieldSeries {
    int alphabet_size = 2;
    int time_steps = 0;
    int vertex_count = 0;
    std::vector<std::uint8_t> values;  // row-major, time * vertex_count + vertex

    std::uint8_t at(int t, int v) const {
        return values[static_cast<std::size_t>(t) * static_cast<std::size_t>(vertex_count) +
                      static_cast<std::size_t>(v)];
    }
    void set(int t, int v, std::uint8_t sym) {
        values[static_cast<std::size_t>(t) * static_cast<std::size_t>(vertex_count) +
               static_cast<std::size_t>(v)] = sym;
    }

    void validate() const;
    bool operator==(const FieldSeries&) const = default;
};

/// Parses the text field format: header `field <alphabet_size>`, then one
/// space-separated time slice per line (vertex order). `#` lines are comments.
FieldSeries load_field(std::istream& in, const Graph& g);
FieldSeries load_field_file(const std::string& path, const Graph& g);
std::string save_field(const FieldSeries& f);

/// Local update rule for synthetic data generation. All built-in rules read
/// a radius-1 neighborhood, so the true propagation speed is c=1; set
/// ConeParams::speed_c accordingly when reconstructing from simulated data.
///
/// Two table conventions exist:
///  - `table`: neighborhood read as (self, then neighbors ascending by id);
///    requires constant degree. Suitable for direction-blind rules.
///  - `ring_table`: neighborhood read as (cycle predecessor, self, cycle
///    successor); requires the graph to be a single cycle. Directional rules
///    (shift, traffic) need this form, because ascending-id neighbor order
///    flips orientation at the wrap-around vertices.
class LocalRule {
public:
    enum class Kind { iid, table, ring_table };

    static LocalRule iid(std::vector<double> probs);
    static LocalRule table(int alphabet_size, std::vector<std::uint8_t> entries);
    static LocalRule ring_table(int alphabet_size, std::vector<std::uint8_t> entries);
    /// Left shift on a ring: next value at v = current value at the cycle
    /// predecessor of v.
    static LocalRule shift(int alphabet_size = 2);
    /// Elementary cellular automaton by Wolfram code, on a binary ring.
    static LocalRule elementary_ca(int code);
    /// Returns a copy of this rule whose output symbol is replaced, with
    /// probability epsilon, by a uniformly random different symbol.
    LocalRule with_flip_probability(double epsilon) const;

    Kind kind() const { return kind_; }
    int alphabet_size() const { return alphabet_size_; }
    double flip_probability() const { return epsilon_; }
    const std::vector<double>& probs() const { return probs_; }
    const std::vector<std::uint8_t>& entries() const { return entries_; }

    /// Throws DataError when the rule cannot run on this graph.
    void validate_for_graph(const Graph& g) const;

private:
    Kind kind_ = Kind::iid;
    int alphabet_size_ = 2;
    std::vector<double> probs_;
    std::vector<std::uint8_t> entries_;
    double epsilon_ = 0.0;
};

struct SimConfig {
    int steps = 1;
    std::uint64_t seed = 0;
    /// Initial slice: drawn iid from init_probs when init_row is absent.
    /// Empty init_probs means uniform over the alphabet.
    std::vector<double> init_probs;
    std::optional<std::vector<std::uint8_t>> init_row;
};

/// Deterministic given (graph, rule, config): every cell owns the RNG stream
/// stream_seed(seed, t, v), so results do not depend on evaluation order.
FieldSeries simulate(const Graph& g, const LocalRule& rule, const SimConfig& cfg);

/// Cycle orientation of a ring graph: next/prev arrays following the cycle
/// from vertex 0 towards its smallest neighbor. Throws DataError when the
/// graph is not a single cycle.
struct RingOrientation {
    std::vector<int> next;
    std::vector<int> prev;
};
RingOrientation ring_orientation(const Graph& g);

}  // namespace conefield
