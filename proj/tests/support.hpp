#pragma once

// Test-only oracles and generators. Everything here recomputes expectations
// through routes independent of the library paths under test: exact
// conditionals come from exhaustive enumeration over a base slice, entropies
// from direct field reads.

#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "conefield/cone_stats.hpp"
#include "conefield/field.hpp"
#include "conefield/filtering.hpp"
#include "conefield/graph.hpp"
#include "conefield/reconstruction.hpp"
#include "conefield/rng.hpp"

namespace conefield::testing {

/// Seeded G(n, p) conditioned on connectivity.
inline Graph make_random_connected_graph(int n, double edge_prob, std::uint64_t seed) {
    for (int attempt = 0; attempt < 500; ++attempt) {
        SplitMix64 rng(stream_seed(seed, 0x67726170ULL, static_cast<std::uint64_t>(attempt)));
        std::vector<std::pair<int, int>> edges;
        for (int u = 0; u < n; ++u)
            for (int v = u + 1; v < n; ++v)
                if (rng.next_unit() < edge_prob) edges.emplace_back(u, v);
        Graph g(n, edges);
        const std::vector<int> dist = bfs_distances(g, 0);
        bool connected = true;
        for (int d : dist) connected &= d != kUnreachable;
        if (connected) return g;
    }
    throw std::runtime_error("could not draw a connected graph");
}

/// Exact per-class conditional distributions P(future cone | past cone) for a
/// rule whose one-step map preserves the iid(init_probs) product measure
/// (permutation rules like shift, or the iid rule itself). Computed by
/// exhaustive enumeration of the base time slice, evolving only the cells the
/// cones depend on. Classes follow geom; pooling off means one per vertex.
inline std::vector<std::map<ConfigCode, std::map<ConfigCode, double>>> exact_conditionals(
    const Geometry& geom, const LocalRule& rule, std::vector<double> init_probs = {}) {
    const int a = rule.alphabet_size();
    if (init_probs.empty()) init_probs.assign(static_cast<std::size_t>(a), 1.0 / a);

    std::vector<std::map<ConfigCode, std::map<ConfigCode, double>>> out(
        static_cast<std::size_t>(geom.class_count()));

    for (int c = 0; c < geom.class_count(); ++c) {
        const int v = geom.classes[static_cast<std::size_t>(c)].members.front();
        const auto& past_cells = geom.past_cells[static_cast<std::size_t>(v)];
        const auto& future_cells = geom.future_cells[static_cast<std::size_t>(v)];

        if (rule.kind() == LocalRule::Kind::iid) {
            // Futures independent of everything: product measure on both cones.
            std::map<ConfigCode, double> fut_dist;
            std::vector<std::uint8_t> fut(future_cells.size(), 0);
            for (;;) {
                double w = 1.0;
                for (std::uint8_t s : fut) w *= init_probs[s];
                if (w > 0.0) fut_dist[ConfigCode::from_symbols(fut, a)] += w;
                int i = static_cast<int>(fut.size()) - 1;
                while (i >= 0 && fut[static_cast<std::size_t>(i)] == a - 1)
                    fut[static_cast<std::size_t>(i--)] = 0;
                if (i < 0) break;
                ++fut[static_cast<std::size_t>(i)];
            }
            std::vector<std::uint8_t> past(past_cells.size(), 0);
            for (;;) {
                double w = 1.0;
                for (std::uint8_t s : past) w *= init_probs[s];
                if (w > 0.0) out[static_cast<std::size_t>(c)]
                    [ConfigCode::from_symbols(past, a)] = fut_dist;
                int i = static_cast<int>(past.size()) - 1;
                while (i >= 0 && past[static_cast<std::size_t>(i)] == a - 1)
                    past[static_cast<std::size_t>(i--)] = 0;
                if (i < 0) break;
                ++past[static_cast<std::size_t>(i)];
            }
            continue;
        }

        if (rule.flip_probability() != 0.0)
            throw std::runtime_error("exact conditionals: deterministic rules only");

        // Dependency cells of one rule application.
        RingOrientation ring;
        if (rule.kind() == LocalRule::Kind::ring_table) ring = ring_orientation(geom.graph);
        auto deps = [&](int u) {
            std::vector<int> d;
            if (rule.kind() == LocalRule::Kind::ring_table) {
                d = {ring.prev[static_cast<std::size_t>(u)], u,
                     ring.next[static_cast<std::size_t>(u)]};
            } else {
                d = geom.graph.neighbors(u);
                d.push_back(u);
            }
            return d;
        };
        auto step = [&](const std::map<int, std::uint8_t>& row, int u) -> std::uint8_t {
            if (rule.kind() == LocalRule::Kind::ring_table) {
                const std::size_t left = row.at(ring.prev[static_cast<std::size_t>(u)]);
                const std::size_t self = row.at(u);
                const std::size_t right = row.at(ring.next[static_cast<std::size_t>(u)]);
                return rule.entries()[(left * static_cast<std::size_t>(a) + self) *
                                          static_cast<std::size_t>(a) +
                                      right];
            }
            std::size_t idx = row.at(u);
            for (int w : geom.graph.neighbors(u))
                idx = idx * static_cast<std::size_t>(a) + row.at(w);
            return rule.entries()[idx];
        };

        // Backward closure: which cells each slice must carry.
        const int t0 = -(geom.params.past_depth - 1);
        const int t_max = geom.params.future_depth;
        std::map<int, std::set<int>> need;
        for (const Offset& o : past_cells) need[o.dt].insert(o.vertex);
        for (const Offset& o : future_cells) need[o.dt].insert(o.vertex);
        for (int dt = t_max; dt > t0; --dt) {
            for (int u : need[dt])
                for (int d : deps(u)) need[dt - 1].insert(d);
        }
        const std::vector<int> base(need[t0].begin(), need[t0].end());
        if (base.size() > 24) throw std::runtime_error("exact conditionals: base slice too wide");

        std::map<ConfigCode, std::map<ConfigCode, double>> joint;
        std::map<ConfigCode, double> past_mass;
        std::vector<std::uint8_t> assign(base.size(), 0);
        std::vector<std::uint8_t> buf;
        for (;;) {
            double w = 1.0;
            for (std::uint8_t s : assign) w *= init_probs[s];
            if (w > 0.0) {
                std::map<int, std::map<int, std::uint8_t>> rows;
                for (std::size_t i = 0; i < base.size(); ++i)
                    rows[t0][base[i]] = assign[i];
                for (int dt = t0 + 1; dt <= t_max; ++dt)
                    for (int u : need[dt]) rows[dt][u] = step(rows[dt - 1], u);
                buf.clear();
                for (const Offset& o : past_cells) buf.push_back(rows[o.dt][o.vertex]);
                const ConfigCode past = ConfigCode::from_symbols(buf, a);
                buf.clear();
                for (const Offset& o : future_cells) buf.push_back(rows[o.dt][o.vertex]);
                const ConfigCode fut = ConfigCode::from_symbols(buf, a);
                joint[past][fut] += w;
                past_mass[past] += w;
            }
            int i = static_cast<int>(assign.size()) - 1;
            while (i >= 0 && assign[static_cast<std::size_t>(i)] == a - 1)
                assign[static_cast<std::size_t>(i--)] = 0;
            if (i < 0) break;
            ++assign[static_cast<std::size_t>(i)];
        }
        for (auto& [past, futs] : joint) {
            for (auto& [fut, w] : futs) w /= past_mass[past];
            out[static_cast<std::size_t>(c)][past] = futs;
        }
    }
    return out;
}

/// Exact conditional distributions for a patch (union of member cones),
/// same enumeration and the same product-measure assumption.
inline std::map<std::vector<std::uint8_t>, std::map<std::vector<std::uint8_t>, double>>
exact_patch_conditionals(const Geometry& geom, const LocalRule& rule,
                         const std::vector<Offset>& past_cells,
                         const std::vector<Offset>& future_cells,
                         std::vector<double> init_probs = {}) {
    const int a = rule.alphabet_size();
    if (init_probs.empty()) init_probs.assign(static_cast<std::size_t>(a), 1.0 / a);
    if (rule.kind() == LocalRule::Kind::iid || rule.flip_probability() != 0.0)
        throw std::runtime_error("patch oracle: deterministic table rules only");

    RingOrientation ring;
    if (rule.kind() == LocalRule::Kind::ring_table) ring = ring_orientation(geom.graph);
    auto deps = [&](int u) {
        std::vector<int> d;
        if (rule.kind() == LocalRule::Kind::ring_table) {
            d = {ring.prev[static_cast<std::size_t>(u)], u, ring.next[static_cast<std::size_t>(u)]};
        } else {
            d = geom.graph.neighbors(u);
            d.push_back(u);
        }
        return d;
    };
    auto step = [&](const std::map<int, std::uint8_t>& row, int u) -> std::uint8_t {
        if (rule.kind() == LocalRule::Kind::ring_table) {
            const std::size_t left = row.at(ring.prev[static_cast<std::size_t>(u)]);
            const std::size_t self = row.at(u);
            const std::size_t right = row.at(ring.next[static_cast<std::size_t>(u)]);
            return rule.entries()[(left * static_cast<std::size_t>(a) + self) *
                                      static_cast<std::size_t>(a) +
                                  right];
        }
        std::size_t idx = row.at(u);
        for (int w : geom.graph.neighbors(u)) idx = idx * static_cast<std::size_t>(a) + row.at(w);
        return rule.entries()[idx];
    };

    const int t0 = -(geom.params.past_depth - 1);
    const int t_max = geom.params.future_depth;
    std::map<int, std::set<int>> need;
    for (const Offset& o : past_cells) need[o.dt].insert(o.vertex);
    for (const Offset& o : future_cells) need[o.dt].insert(o.vertex);
    for (int dt = t_max; dt > t0; --dt)
        for (int u : need[dt])
            for (int d : deps(u)) need[dt - 1].insert(d);
    const std::vector<int> base(need[t0].begin(), need[t0].end());
    if (base.size() > 24) throw std::runtime_error("patch oracle: base slice too wide");

    std::map<std::vector<std::uint8_t>, std::map<std::vector<std::uint8_t>, double>> joint;
    std::map<std::vector<std::uint8_t>, double> past_mass;
    std::vector<std::uint8_t> assign(base.size(), 0);
    for (;;) {
        double w = 1.0;
        for (std::uint8_t s : assign) w *= init_probs[s];
        if (w > 0.0) {
            std::map<int, std::map<int, std::uint8_t>> rows;
            for (std::size_t i = 0; i < base.size(); ++i) rows[t0][base[i]] = assign[i];
            for (int dt = t0 + 1; dt <= t_max; ++dt)
                for (int u : need[dt]) rows[dt][u] = step(rows[dt - 1], u);
            std::vector<std::uint8_t> past, fut;
            for (const Offset& o : past_cells) past.push_back(rows[o.dt][o.vertex]);
            for (const Offset& o : future_cells) fut.push_back(rows[o.dt][o.vertex]);
            joint[past][fut] += w;
            past_mass[past] += w;
        }
        int i = static_cast<int>(assign.size()) - 1;
        while (i >= 0 && assign[static_cast<std::size_t>(i)] == a - 1)
            assign[static_cast<std::size_t>(i--)] = 0;
        if (i < 0) break;
        ++assign[static_cast<std::size_t>(i)];
    }
    for (auto& [past, futs] : joint)
        for (auto& [fut, w] : futs) w /= past_mass[past];
    return joint;
}

/// Empirical conditional entropy H[future cone | past cone] in bits per
/// point, from direct field reads (no library counting involved).
inline double brute_conditional_entropy_bits(const FieldSeries& f, const Geometry& geom) {
    const int pd = geom.params.past_depth;
    const int fd = geom.params.future_depth;
    double h_joint_sum = 0.0;
    std::int64_t total_points = 0;

    for (int v = 0; v < f.vertex_count; ++v) {
        std::map<std::vector<std::uint8_t>, std::map<std::vector<std::uint8_t>, std::int64_t>>
            counts;
        std::int64_t n = 0;
        for (int t = pd - 1; t + fd <= f.time_steps - 1; ++t) {
            std::vector<std::uint8_t> past, fut;
            for (const Offset& o : geom.past_cells[static_cast<std::size_t>(v)])
                past.push_back(f.at(t + o.dt, o.vertex));
            for (const Offset& o : geom.future_cells[static_cast<std::size_t>(v)])
                fut.push_back(f.at(t + o.dt, o.vertex));
            counts[past][fut] += 1;
            ++n;
        }
        double h = 0.0;
        for (const auto& [past, futs] : counts) {
            std::int64_t past_total = 0;
            for (const auto& [fut, c] : futs) past_total += c;
            for (const auto& [fut, c] : futs) {
                const double p_joint = static_cast<double>(c) / static_cast<double>(n);
                const double p_cond =
                    static_cast<double>(c) / static_cast<double>(past_total);
                h -= p_joint * std::log2(p_cond);
            }
        }
        h_joint_sum += h * static_cast<double>(n);
        total_points += n;
    }
    return h_joint_sum / static_cast<double>(total_points);
}

/// Independent shift/CA runs from fresh random initial rows. A single run on
/// a finite ring is one periodic orbit, so time averages cannot reach the
/// ensemble conditionals; reconstruction feeds on a bundle of short runs.
inline std::vector<FieldSeries> make_run_ensemble(const Graph& g, const LocalRule& rule,
                                                  int runs, int steps_per_run,
                                                  std::uint64_t seed) {
    std::vector<FieldSeries> out;
    out.reserve(static_cast<std::size_t>(runs));
    for (int r = 0; r < runs; ++r) {
        SimConfig cfg;
        cfg.steps = steps_per_run;
        cfg.seed = stream_seed(seed, 0x656e73ULL, static_cast<std::uint64_t>(r));
        out.push_back(simulate(g, rule, cfg));
    }
    return out;
}

/// Exact permutation-test p-value for a 2-bin table by full enumeration of
/// the hypergeometric null (margins fixed).
inline double exact_two_bin_permutation_p(std::int64_t a0, std::int64_t a1, std::int64_t b0,
                                          std::int64_t b1) {
    const std::int64_t na = a0 + a1, nb = b0 + b1, col0 = a0 + b0, n = na + nb;
    auto log_choose = [](std::int64_t m, std::int64_t k) {
        return std::lgamma(static_cast<double>(m + 1)) -
               std::lgamma(static_cast<double>(k + 1)) -
               std::lgamma(static_cast<double>(m - k + 1));
    };
    auto stat_of = [&](std::int64_t x0) {
        const double e_a0 = static_cast<double>(na) * static_cast<double>(col0) / n;
        const double e_a1 = static_cast<double>(na) * static_cast<double>(n - col0) / n;
        const double e_b0 = static_cast<double>(nb) * static_cast<double>(col0) / n;
        const double e_b1 = static_cast<double>(nb) * static_cast<double>(n - col0) / n;
        const double x1 = static_cast<double>(na - x0);
        const double y0 = static_cast<double>(col0 - x0);
        const double y1 = static_cast<double>(nb) - y0;
        double s = 0.0;
        s += (x0 - e_a0) * (x0 - e_a0) / e_a0;
        s += (x1 - e_a1) * (x1 - e_a1) / e_a1;
        s += (y0 - e_b0) * (y0 - e_b0) / e_b0;
        s += (y1 - e_b1) * (y1 - e_b1) / e_b1;
        return s;
    };
    const double observed = stat_of(a0);
    const std::int64_t lo = std::max<std::int64_t>(0, na - (n - col0));
    const std::int64_t hi = std::min(na, col0);
    double p = 0.0;
    for (std::int64_t x = lo; x <= hi; ++x) {
        if (stat_of(x) >= observed - 1e-9) {
            p += std::exp(log_choose(col0, x) + log_choose(n - col0, na - x) -
                          log_choose(n, na));
        }
    }
    return p;
}

/// Dual-path samples on a ring: spatial-then-temporal vs temporal-then-
/// spatial walks between the same endpoints.
inline std::vector<PathSample> make_ring_path_samples(const Graph& g, const ConeParams& p,
                                                      int time_steps, int count,
                                                      std::uint64_t seed) {
    const RingOrientation ring = ring_orientation(g);
    SplitMix64 rng(stream_seed(seed, 0x70617468ULL));
    std::vector<PathSample> samples;
    while (static_cast<int>(samples.size()) < count) {
        const int t0 = p.past_depth - 1 +
                       static_cast<int>(rng.next_below(
                           static_cast<std::uint64_t>(time_steps - p.past_depth - 5)));
        const int u = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(g.vertex_count())));
        const int dt = 1 + static_cast<int>(rng.next_below(3));
        const int k = 1 + static_cast<int>(rng.next_below(3));
        const bool forward = rng.next_below(2) == 0;

        PathSample s;
        s.start = {u, t0};
        int v = u;
        PathSpec spatial;
        for (int i = 0; i < k; ++i) {
            const int nxt = forward ? ring.next[static_cast<std::size_t>(v)]
                                    : ring.prev[static_cast<std::size_t>(v)];
            spatial.moves.push_back({false, nxt, 0});
            v = nxt;
        }
        PathSpec temporal;
        for (int i = 0; i < dt; ++i) temporal.moves.push_back({true, 0, 1});
        s.end = {v, t0 + dt};
        s.path_a = spatial;
        for (const PathMove& m : temporal.moves) s.path_a.moves.push_back(m);
        s.path_b = temporal;
        for (const PathMove& m : spatial.moves) s.path_b.moves.push_back(m);
        samples.push_back(std::move(s));
    }
    return samples;
}

}  // namespace conefield::testing
