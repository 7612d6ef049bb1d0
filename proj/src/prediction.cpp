#include "conefield/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "conefield/analysis.hpp"
#include "conefield/errors.hpp"

namespace conefield {

Predictor::Predictor(const StateSet& s, const Geometry& geom, PredictionMode mode)
    : states_(&s), geom_(&geom), mode_(mode) {
    validate_compatible(s, geom);
    marginals_.resize(s.classes.size());
    for (std::size_t c = 0; c < s.classes.size(); ++c) {
        const int fut_len = s.future_len[c];
        const int pos = geom.next_step_position[c];
        marginals_[c].resize(s.classes[c].states.size());
        for (std::size_t st = 0; st < s.classes[c].states.size(); ++st) {
            auto& counts = marginals_[c][st];
            counts.assign(static_cast<std::size_t>(s.alphabet_size), 0);
            for (const auto& [fut, n] : s.classes[c].states[st].futures) {
                const std::vector<std::uint8_t> syms = fut.symbols(s.alphabet_size, fut_len);
                counts[syms[static_cast<std::size_t>(pos)]] += n;
            }
        }
    }
}

const std::vector<std::int64_t>& Predictor::marginal_counts(int class_id, int state_id) const {
    return marginals_[static_cast<std::size_t>(class_id)][static_cast<std::size_t>(state_id)];
}

std::vector<std::pair<ConfigCode, double>> Predictor::predict_distribution(
    int class_id, const ConfigCode& past) const {
    if (class_id < 0 || class_id >= static_cast<int>(states_->classes.size()))
        throw DataError("predict: class id out of range");
    const ClassStates& cs = states_->classes[static_cast<std::size_t>(class_id)];
    const auto it = cs.state_of_past.find(past);
    if (it == cs.state_of_past.end())
        throw NoDataError("predict: past configuration never observed");
    const CausalState& st = cs.states[static_cast<std::size_t>(it->second)];
    if (st.total <= 0) throw NoDataError("predict: state carries no counts");

    std::vector<std::pair<ConfigCode, double>> out;
    if (mode_ == PredictionMode::full_future_cone) {
        out.reserve(st.futures.size());
        for (const auto& [fut, n] : st.futures)
            out.emplace_back(fut, static_cast<double>(n) / static_cast<double>(st.total));
    } else {
        const auto& counts = marginal_counts(class_id, it->second);
        for (int sym = 0; sym < states_->alphabet_size; ++sym) {
            const std::uint8_t s8 = static_cast<std::uint8_t>(sym);
            out.emplace_back(ConfigCode::from_symbols({&s8, 1}, states_->alphabet_size),
                             static_cast<double>(counts[static_cast<std::size_t>(sym)]) /
                                 static_cast<double>(st.total));
        }
    }
    return out;
}

EvaluationReport evaluate_predictor(const Predictor& pred, const FieldSeries& heldout) {
    const Geometry& geom = pred.geometry();
    const StateSet& s = pred.state_set();
    heldout.validate();
    if (heldout.vertex_count != geom.graph.vertex_count())
        throw DataError("evaluate: field width != graph vertex count");
    if (heldout.alphabet_size != s.alphabet_size)
        throw DataError("evaluate: field alphabet differs from the state set's");

    const int pd = geom.params.past_depth;
    const int fd = geom.params.future_depth;
    const bool full = pred.mode() == PredictionMode::full_future_cone;

    EvaluationReport rep;
    double loss_sum = 0.0;
    std::int64_t hits = 0;

    std::vector<std::uint8_t> buf;
    for (int t = pd - 1; t < heldout.time_steps; ++t) {
        const int horizon = full ? fd : 1;
        if (t + horizon > heldout.time_steps - 1) break;
        for (int v = 0; v < heldout.vertex_count; ++v) {
            ++rep.evaluable_points;
            const int c = geom.class_of_vertex[static_cast<std::size_t>(v)];
            buf.clear();
            for (const Offset& o : geom.past_cells[static_cast<std::size_t>(v)])
                buf.push_back(heldout.at(t + o.dt, o.vertex));
            const ConfigCode past = ConfigCode::from_symbols(buf, heldout.alphabet_size);
            const ClassStates& cs = s.classes[static_cast<std::size_t>(c)];
            const auto it = cs.state_of_past.find(past);
            if (it == cs.state_of_past.end()) continue;
            const CausalState& st = cs.states[static_cast<std::size_t>(it->second)];
            ++rep.covered_points;

            std::int64_t realized_count = 0;
            bool argmax_hit = false;
            double outcome_space = 0.0;
            if (full) {
                buf.clear();
                for (const Offset& o : geom.future_cells[static_cast<std::size_t>(v)])
                    buf.push_back(heldout.at(t + o.dt, o.vertex));
                const ConfigCode outcome = ConfigCode::from_symbols(buf, heldout.alphabet_size);
                const auto fit = st.futures.find(outcome);
                realized_count = fit == st.futures.end() ? 0 : fit->second;
                outcome_space = std::pow(static_cast<double>(heldout.alphabet_size),
                                         static_cast<double>(geom.future_len(v)));
                const CausalState& state = st;
                std::int64_t best = -1;
                ConfigCode best_cfg;
                for (const auto& [fut, n] : state.futures) {
                    if (n > best) {
                        best = n;
                        best_cfg = fut;
                    }
                }
                argmax_hit = best_cfg == outcome && best >= 0;
            } else {
                const std::uint8_t outcome = heldout.at(t + 1, v);
                const auto& counts = pred.marginal_counts(c, it->second);
                realized_count = counts[outcome];
                outcome_space = static_cast<double>(heldout.alphabet_size);
                std::int64_t best = -1;
                int best_sym = 0;
                for (int sym = 0; sym < heldout.alphabet_size; ++sym) {
                    if (counts[static_cast<std::size_t>(sym)] > best) {
                        best = counts[static_cast<std::size_t>(sym)];
                        best_sym = sym;
                    }
                }
                argmax_hit = best_sym == outcome;
            }
            if (realized_count == 0) ++rep.smoothed_points;
            const double p = (static_cast<double>(realized_count) + 1.0) /
                             (static_cast<double>(st.total) + outcome_space);
            loss_sum -= std::log2(p);
            if (argmax_hit) ++hits;
        }
    }

    if (rep.covered_points == 0) throw DataError("evaluate: no covered points");
    rep.log_loss_bits = loss_sum / static_cast<double>(rep.covered_points);
    rep.accuracy = static_cast<double>(hits) / static_cast<double>(rep.covered_points);
    rep.coverage =
        static_cast<double>(rep.covered_points) / static_cast<double>(rep.evaluable_points);
    return rep;
}

std::vector<Offset> patch_cells(const Geometry& geom, const std::vector<int>& patch,
                                ConeDirection dir) {
    std::set<Offset> cells;
    for (int v : patch) {
        const auto& per_vertex = dir == ConeDirection::past
                                     ? geom.past_cells[static_cast<std::size_t>(v)]
                                     : geom.future_cells[static_cast<std::size_t>(v)];
        cells.insert(per_vertex.begin(), per_vertex.end());
    }
    return {cells.begin(), cells.end()};
}

namespace {

void require_connected_patch(const Graph& g, const std::vector<int>& patch) {
    if (patch.empty()) throw DataError("patch: empty vertex set");
    std::set<int> members(patch.begin(), patch.end());
    if (members.size() != patch.size()) throw DataError("patch: duplicate vertex");
    for (int v : patch)
        if (v < 0 || v >= g.vertex_count()) throw DataError("patch: vertex out of range");
    std::vector<int> stack{patch.front()};
    std::set<int> seen{patch.front()};
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        for (int w : g.neighbors(v)) {
            if (members.count(w) && !seen.count(w)) {
                seen.insert(w);
                stack.push_back(w);
            }
        }
    }
    if (seen.size() != members.size()) throw DataError("patch: vertex set not connected");
}

}  // namespace

PatchReport patch_sufficiency_test(const StateField& sf, const FieldSeries& f,
                                   const Geometry& geom, std::vector<int> patch,
                                   double threshold_bits, double min_samples_per_key) {
    require_connected_patch(geom.graph, patch);
    std::sort(patch.begin(), patch.end());
    if (sf.vertex_count != f.vertex_count || sf.time_steps != f.time_steps)
        throw DataError("patch test: labels and field disagree on dimensions");

    const std::vector<Offset> past = patch_cells(geom, patch, ConeDirection::past);
    const std::vector<Offset> future = patch_cells(geom, patch, ConeDirection::future);
    const int pd = geom.params.past_depth;
    const int fd = geom.params.future_depth;

    PatchReport rep;
    rep.threshold_bits = threshold_bits;

    std::map<std::vector<std::int32_t>, int> key_ids;
    std::map<ConfigCode, int> past_ids, fut_ids;
    std::map<std::tuple<int, int, int>, double> cells;
    std::map<int, std::int64_t> per_key;
    std::map<std::pair<int, int>, std::int64_t> x_support, y_support;

    std::vector<std::uint8_t> buf;
    for (int t = pd - 1; t + fd <= f.time_steps - 1; ++t) {
        std::vector<std::int32_t> key;
        key.reserve(patch.size());
        bool ok = true;
        for (int v : patch) {
            const std::int32_t st = sf.at(t, v);
            if (st == StateField::kUnknownState) {
                ok = false;
                break;
            }
            key.push_back(st);
        }
        if (!ok) continue;
        buf.clear();
        for (const Offset& o : past) buf.push_back(f.at(t + o.dt, o.vertex));
        const ConfigCode p_cfg = ConfigCode::from_symbols(buf, f.alphabet_size);
        buf.clear();
        for (const Offset& o : future) buf.push_back(f.at(t + o.dt, o.vertex));
        const ConfigCode f_cfg = ConfigCode::from_symbols(buf, f.alphabet_size);

        const int z = key_ids.emplace(key, static_cast<int>(key_ids.size())).first->second;
        const int x = past_ids.emplace(p_cfg, static_cast<int>(past_ids.size())).first->second;
        const int y = fut_ids.emplace(f_cfg, static_cast<int>(fut_ids.size())).first->second;
        cells[{x, y, z}] += 1.0;
        per_key[z] += 1;
        x_support[{x, z}] += 1;
        y_support[{y, z}] += 1;
        ++rep.n_samples;
    }

    rep.n_keys = static_cast<std::int64_t>(per_key.size());
    if (rep.n_samples == 0 ||
        static_cast<double>(rep.n_samples) <
            min_samples_per_key * static_cast<double>(rep.n_keys)) {
        rep.verdict = "inconclusive";
        return rep;
    }
    rep.cmi_bits = conditional_mutual_information(cells);
    {
        std::map<int, std::int64_t> kx, ky;
        for (const auto& [key, n] : x_support) kx[key.second] += 1;
        for (const auto& [key, n] : y_support) ky[key.second] += 1;
        double bias = 0.0;
        for (const auto& [z, n] : per_key) bias += mi_bias_bound_bits(kx[z], ky[z], rep.n_samples);
        rep.mi_bias_bound = bias;
    }
    rep.verdict = rep.cmi_bits <= threshold_bits ? "consistent" : "inconsistent";
    return rep;
}

}  // namespace conefield
