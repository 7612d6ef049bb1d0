#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "conefield/cone_stats.hpp"
#include "conefield/graph.hpp"

namespace conefield {

/// Configuration of the two-sample homogeneity test used for clustering.
struct TestConfig {
    enum class Method { chi_squared, permutation };

    double alpha = 0.05;
    Method method = Method::chi_squared;
    /// Number of Monte Carlo resamples for the permutation method.
    int n_permutations = 1000;
    /// Bins whose smaller expected count falls below this are merged into a
    /// single remainder bin before the statistic is formed.
    double min_expected = 5.0;
    /// Seed for the permutation resampler; chi-squared ignores it.
    std::uint64_t permutation_seed = 0;

    void validate() const;
    bool operator==(const TestConfig&) const = default;
};

enum class TestVerdict { same, different };

struct HomogeneityResult {
    double statistic = 0.0;
    double p_value = 1.0;
    int df = 0;
    TestVerdict verdict = TestVerdict::same;
};

/// Two-sample homogeneity test over a shared outcome index. Symmetric in
/// (a, b). Throws DataError when either sample is empty.
HomogeneityResult homogeneity_test_detail(std::span<const std::int64_t> counts_a,
                                          std::span<const std::int64_t> counts_b,
                                          const TestConfig& cfg);
TestVerdict homogeneity_test(std::span<const std::int64_t> counts_a,
                             std::span<const std::int64_t> counts_b, const TestConfig& cfg);

/// One estimated local causal state: a cluster of past configurations with
/// the aggregated future counts of its members.
struct CausalState {
    int id = 0;
    std::vector<ConfigCode> members;  // sorted
    std::map<ConfigCode, std::int64_t> futures;
    std::int64_t total = 0;
};

struct ClassStates {
    std::vector<CausalState> states;
    std::map<ConfigCode, int> state_of_past;
};

struct StateSet {
    ConeParams params;
    bool pooling = false;
    int alphabet_size = 0;
    std::uint64_t graph_hash = 0;
    std::vector<int> past_len;    // per class
    std::vector<int> future_len;  // per class

    std::vector<ClassStates> classes;

    // Provenance of the estimate.
    std::string method = "reconstruct";  // or "oracle"
    TestConfig test;
    std::uint64_t seed = 0;
    bool refined = false;
    std::uint64_t source_db_hash = 0;

    int state_count(int class_id) const {
        return static_cast<int>(classes[static_cast<std::size_t>(class_id)].states.size());
    }
    int total_state_count() const;
};

/// Clusters each class's past configurations into estimated causal states:
/// pasts are visited in seeded random order; each is merged into the first
/// existing state whose aggregate future distribution is not significantly
/// different, updating that state's counts, and otherwise founds a new state.
///
/// The optional refinement pass re-assigns every past to the best-matching
/// (highest p-value) final state and re-aggregates once. Off by default: the
/// base procedure is one-pass by design.
StateSet reconstruct_states(const ConeDatabase& db, const TestConfig& cfg, std::uint64_t seed,
                            bool refine_pass = false);

/// Ground-truth clustering by exact equality of conditional distributions
/// (componentwise within `tolerance`). Input: per class, the exact future
/// distribution of every past. The resulting states carry no counts.
StateSet oracle_states(
    const std::vector<std::map<ConfigCode, std::map<ConfigCode, double>>>& exact_conditionals,
    const Geometry& geom, int alphabet_size, double tolerance = 1e-12);

/// True iff the two classes partition their pasts identically (ids ignored).
bool partition_equal(const ClassStates& a, const ClassStates& b);

/// Per-point state labels; kUnknownState where the past cone leaves the
/// observed range or the configuration was never seen.
struct StateField {
    static constexpr std::int32_t kUnknownState = -1;

    int time_steps = 0;
    int vertex_count = 0;
    std::vector<std::int32_t> labels;

    std::int32_t at(int t, int v) const {
        return labels[static_cast<std::size_t>(t) * static_cast<std::size_t>(vertex_count) +
                      static_cast<std::size_t>(v)];
    }
    void set(int t, int v, std::int32_t s) {
        labels[static_cast<std::size_t>(t) * static_cast<std::size_t>(vertex_count) +
               static_cast<std::size_t>(v)] = s;
    }
};

/// Throws DataError when the state set was built under different parameters
/// than this geometry.
void validate_compatible(const StateSet& s, const Geometry& geom);

StateField label_field(const FieldSeries& f, const StateSet& s, const Geometry& geom);

}  // namespace conefield
