#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "conefield/cone_stats.hpp"
#include "conefield/graph.hpp"
#include "conefield/reconstruction.hpp"

namespace conefield {

/// Fixed-size bitset over one class's state ids.
class StateMask {
public:
    StateMask() = default;
    static StateMask full(int n_states);
    static StateMask single(int n_states, int state_id);
    static StateMask none(int n_states);

    int size() const { return n_; }
    bool test(int id) const { return (words_[static_cast<std::size_t>(id >> 6)] >> (id & 63)) & 1; }
    void set(int id) { words_[static_cast<std::size_t>(id >> 6)] |= 1ULL << (id & 63); }
    int count() const;
    bool empty() const { return count() == 0; }
    bool singleton() const { return count() == 1; }
    int first() const;  // -1 when empty
    /// In-place intersection; returns true when this mask shrank.
    bool intersect(const StateMask& other);
    void unite(const StateMask& other);
    std::vector<int> to_vector() const;
    bool operator==(const StateMask&) const = default;

private:
    int n_ = 0;
    std::vector<std::uint64_t> words_;
};

/// Observed fringe-driven state moves. A key is deterministic when exactly
/// one successor state was ever recorded under it; keys with several are the
/// conflict log (kept, not erased — they flag estimation error or genuinely
/// stochastic structure).
struct TransitionTable {
    // (class, state, fringe config) -> successor state multiset
    std::map<std::tuple<int, int, ConfigCode>, std::map<int, std::int64_t>> temporal;
    // (from vertex, to vertex, source state, fringe config) -> state multiset
    std::map<std::tuple<int, int, int, ConfigCode>, std::map<int, std::int64_t>> spatial;

    std::int64_t key_count() const;
    std::int64_t conflict_key_count() const;
    double conflict_fraction() const;
};

TransitionTable learn_transitions(const StateField& sf, const FieldSeries& f,
                                  const Geometry& geom, const StateSet& s);

/// Set-valued state estimate per point. A contradiction mark means the
/// constraints emptied the candidate set: the observations are inconsistent
/// with the learned model.
struct StateEstimate {
    int time_steps = 0;
    int vertex_count = 0;
    std::vector<StateMask> candidates;  // row-major like StateField
    std::vector<char> contradiction;

    const StateMask& at(int t, int v) const {
        return candidates[static_cast<std::size_t>(t) * static_cast<std::size_t>(vertex_count) +
                          static_cast<std::size_t>(v)];
    }
    bool contradicted(int t, int v) const {
        return contradiction[static_cast<std::size_t>(t) * static_cast<std::size_t>(vertex_count) +
                             static_cast<std::size_t>(v)] != 0;
    }

    /// Fraction of interior points (those whose past cone fits the data)
    /// resolved to a single state.
    double singleton_fraction(const Geometry& geom) const;
    std::int64_t contradiction_count() const;
};

struct FilterOptions {
    int threads = 1;
    /// Labels used to seed the candidate sets; when absent the filter labels
    /// the field itself. Points labeled kUnknownState start at the full set.
    const StateField* initial_labels = nullptr;
};

struct FilterResult {
    StateEstimate estimate;
    /// Fraction of applicable constraint moves whose observed fringe had at
    /// least one trained key. Unseen fringes pass the full set through.
    double constraint_coverage = 1.0;
};

/// Constraint propagation to a fixed point: each point starts from its
/// direct label (or the full class set) and every temporal/spatial move
/// intersects the destination's candidates with the successors its source
/// candidates allow. Intersection is commutative and idempotent, so the
/// fixed point does not depend on processing order or thread count.
FilterResult recursive_filter(const FieldSeries& f, const Geometry& geom, const StateSet& s,
                              const TransitionTable& tt, const FilterOptions& opts = {});

/// One step of a space-time path; temporal steps advance time by +1,
/// spatial steps stay at the same time and move along an edge.
struct PathMove {
    bool temporal = true;
    int to_vertex = 0;  // spatial moves only
    int dt = 1;         // temporal moves; anything but +1 is rejected
};

struct PathSpec {
    std::vector<PathMove> moves;
};

struct PathSample {
    Point start;
    Point end;
    PathSpec path_a;
    PathSpec path_b;
};

struct PathCheckReport {
    int violations = 0;
    int applicable = 0;
    int skipped = 0;  // samples hitting an unseen or nondeterministic key
};

/// Drives the start state through both fringe sequences and counts endpoint
/// disagreements. Paths must never decrease time; a violating move throws.
PathCheckReport path_independence_check(const TransitionTable& tt, const Geometry& geom,
                                        const StateField& sf, const FieldSeries& f,
                                        std::span<const PathSample> samples);

}  // namespace conefield
