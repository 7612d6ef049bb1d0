#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "conefield/cone_stats.hpp"
#include "conefield/graph.hpp"
#include "conefield/reconstruction.hpp"

namespace conefield {

enum class PredictionMode { full_future_cone, next_step_marginal };

/// Serves the predictive distribution of a state set. In full mode the
/// outcome space is the whole future-cone configuration; in marginal mode it
/// is the single symbol at the (vertex, +1) cell, obtained by marginalizing
/// the same counts.
class Predictor {
public:
    Predictor(const StateSet& s, const Geometry& geom,
              PredictionMode mode = PredictionMode::full_future_cone);

    PredictionMode mode() const { return mode_; }
    const StateSet& state_set() const { return *states_; }
    const Geometry& geometry() const { return *geom_; }

    /// Distribution over outcomes for the state owning `past`. Keys are
    /// future-cone configs in full mode and single-symbol configs in marginal
    /// mode. Throws NoDataError for an unseen past.
    std::vector<std::pair<ConfigCode, double>> predict_distribution(
        int class_id, const ConfigCode& past) const;

    /// Marginal next-step counts of one state (alphabet-indexed).
    const std::vector<std::int64_t>& marginal_counts(int class_id, int state_id) const;

private:
    const StateSet* states_;
    const Geometry* geom_;
    PredictionMode mode_;
    std::vector<std::vector<std::vector<std::int64_t>>> marginals_;  // class -> state -> symbol
};

struct EvaluationReport {
    double log_loss_bits = 0.0;  // mean -log2 P(realized outcome) over covered points
    double accuracy = 0.0;       // argmax hit rate over covered points
    double coverage = 0.0;       // covered / evaluable
    std::int64_t covered_points = 0;
    std::int64_t evaluable_points = 0;
    /// Covered points whose realized outcome had zero training count and so
    /// took the add-one smoothing floor.
    std::int64_t smoothed_points = 0;
};

/// Scores the predictor on held-out data. Outcome probabilities use add-one
/// smoothing over the outcome space (evaluation only; the state counts stay
/// untouched). Throws DataError when no point is covered.
EvaluationReport evaluate_predictor(const Predictor& pred, const FieldSeries& heldout);

struct PatchReport {
    double cmi_bits = 0.0;
    std::string verdict;  // "consistent" | "inconsistent" | "inconclusive"
    std::int64_t n_samples = 0;
    std::int64_t n_keys = 0;
    double threshold_bits = 0.05;
    double mi_bias_bound = 0.0;
};

/// Estimates I[patch past cone; patch future cone | composition of member
/// states] for a connected vertex patch. Near-zero CMI means the composed
/// local states carry everything the patch past says about the patch future.
PatchReport patch_sufficiency_test(const StateField& sf, const FieldSeries& f,
                                   const Geometry& geom, std::vector<int> patch,
                                   double threshold_bits = 0.05,
                                   double min_samples_per_key = 25.0);

/// The union of member cones, canonically ordered; the patch analogue of a
/// cone template.
std::vector<Offset> patch_cells(const Geometry& geom, const std::vector<int>& patch,
                                ConeDirection dir);

}  // namespace conefield
