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

/// Plug-in Shannon entropy in bits. 0·log 0 is 0. Throws on zero total.
double entropy_bits(std::span<const double> counts);

/// Plug-in mutual information of a contingency table, in bits.
double mutual_information(const std::vector<std::vector<double>>& joint_counts);

/// Plug-in conditional mutual information I[X;Y|Z] of counts[x][y][z], bits.
double conditional_mutual_information(
    const std::vector<std::vector<std::vector<double>>>& joint_counts);

/// Sparse variant used internally: cells keyed by (x, y, z) indices.
double conditional_mutual_information(
    const std::map<std::tuple<int, int, int>, double>& cells);

/// Miller-Madow style first-order bias bound for a plug-in MI estimate with
/// the given observed support sizes and sample count, in bits.
double mi_bias_bound_bits(std::int64_t kx, std::int64_t ky, std::int64_t n);

/// Per-class complexity measurements.
///
/// c_bits is I[state; past cone], which equals the state entropy because the
/// state is a deterministic function of the past; it is computed from the
/// database's past weights so the bound c_bits >= predictive_info_lower_bits
/// is an identity-clean comparison on one sample. state_entropy_bits is the
/// same entropy taken from the labeled field's occupation frequencies.
struct ClassComplexity {
    int class_id = 0;
    double c_bits = 0.0;
    double state_entropy_bits = 0.0;
    double predictive_info_lower_bits = 0.0;
    std::int64_t n_samples_db = 0;
    std::int64_t n_samples_field = 0;
    double mi_bias_bound = 0.0;
};

struct ComplexityReport {
    std::vector<ClassComplexity> per_class;
};

ComplexityReport local_complexity(const StateField& sf, const ConeDatabase& db,
                                  const StateSet& s, const Geometry& geom);

/// The points one time-step earlier inside a point's past cone: the vertex
/// itself plus its graph neighbors, ascending.
struct ParentsSpec {
    std::vector<std::vector<int>> parents;  // per vertex

    static ParentsSpec from_graph(const Graph& g);
};

struct MarkovReport {
    double cmi_bits = 0.0;
    std::string verdict;  // "consistent" | "inconsistent" | "inconclusive"
    std::int64_t n_samples = 0;
    std::int64_t n_conditioning_cells = 0;
    double threshold_bits = 0.05;
    double mi_bias_bound = 0.0;
};

/// CMI between the state at (v,t) and the state at (v, t-depth_k), given the
/// parent states (and implicitly the vertex class). depth_k >= 2.
MarkovReport temporal_markov_test(const StateField& sf, const Geometry& geom,
                                  const ParentsSpec& parents, int depth_k,
                                  double threshold_bits = 0.05,
                                  double min_samples_per_cell = 25.0);

/// CMI between the state at (v,t) and the state of a remote probe vertex at
/// graph distance probe_distance, probe_lag steps earlier, given parents and
/// same-time neighbor states.
MarkovReport markov_field_test(const StateField& sf, const Geometry& geom,
                               const ParentsSpec& parents, int probe_distance,
                               int probe_lag = 0, double threshold_bits = 0.05,
                               double min_samples_per_cell = 25.0);

}  // namespace conefield
