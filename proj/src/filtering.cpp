#include "conefield/filtering.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <deque>
#include <thread>

#include "conefield/errors.hpp"

namespace conefield {

StateMask StateMask::full(int n_states) {
    StateMask m;
    m.n_ = n_states;
    m.words_.assign(static_cast<std::size_t>((n_states + 63) / 64), 0);
    for (int i = 0; i < n_states; ++i) m.set(i);
    return m;
}

StateMask StateMask::single(int n_states, int state_id) {
    StateMask m = none(n_states);
    m.set(state_id);
    return m;
}

StateMask StateMask::none(int n_states) {
    StateMask m;
    m.n_ = n_states;
    m.words_.assign(static_cast<std::size_t>((n_states + 63) / 64), 0);
    return m;
}

int StateMask::count() const {
    int c = 0;
    for (std::uint64_t w : words_) c += std::popcount(w);
    return c;
}

int StateMask::first() const {
    for (std::size_t i = 0; i < words_.size(); ++i)
        if (words_[i]) return static_cast<int>(i * 64) + std::countr_zero(words_[i]);
    return -1;
}

bool StateMask::intersect(const StateMask& other) {
    bool changed = false;
    for (std::size_t i = 0; i < words_.size(); ++i) {
        const std::uint64_t next = words_[i] & other.words_[i];
        if (next != words_[i]) changed = true;
        words_[i] = next;
    }
    return changed;
}

void StateMask::unite(const StateMask& other) {
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
}

std::vector<int> StateMask::to_vector() const {
    std::vector<int> out;
    for (int i = 0; i < n_; ++i)
        if (test(i)) out.push_back(i);
    return out;
}

std::int64_t TransitionTable::key_count() const {
    return static_cast<std::int64_t>(temporal.size() + spatial.size());
}

std::int64_t TransitionTable::conflict_key_count() const {
    std::int64_t n = 0;
    for (const auto& [key, succ] : temporal)
        if (succ.size() > 1) ++n;
    for (const auto& [key, succ] : spatial)
        if (succ.size() > 1) ++n;
    return n;
}

double TransitionTable::conflict_fraction() const {
    const std::int64_t keys = key_count();
    return keys == 0 ? 0.0 : static_cast<double>(conflict_key_count()) / static_cast<double>(keys);
}

namespace {

// Reads the fringe cells relative to destination (v, t); nullopt when any
// cell leaves the observed range.
std::optional<ConfigCode> fringe_config(const FieldSeries& f, const std::vector<Offset>& cells,
                                        int t, std::vector<std::uint8_t>& buf) {
    buf.clear();
    for (const Offset& o : cells) {
        const int time = t + o.dt;
        if (time < 0 || time >= f.time_steps) return std::nullopt;
        buf.push_back(f.at(time, o.vertex));
    }
    return ConfigCode::from_symbols(buf, f.alphabet_size);
}

}  // namespace

TransitionTable learn_transitions(const StateField& sf, const FieldSeries& f,
                                  const Geometry& geom, const StateSet& s) {
    validate_compatible(s, geom);
    if (sf.time_steps != f.time_steps || sf.vertex_count != f.vertex_count)
        throw DataError("transitions: labels and field disagree on dimensions");
    if (f.vertex_count != geom.graph.vertex_count())
        throw DataError("transitions: field width != graph vertex count");

    TransitionTable tt;
    std::vector<std::uint8_t> buf;
    for (int t = 0; t < f.time_steps; ++t) {
        for (int v = 0; v < f.vertex_count; ++v) {
            const std::int32_t src = sf.at(t, v);
            if (src == StateField::kUnknownState) continue;
            const int c = geom.class_of_vertex[static_cast<std::size_t>(v)];

            if (t + 1 < f.time_steps) {
                const std::int32_t dst = sf.at(t + 1, v);
                if (dst != StateField::kUnknownState) {
                    const auto code = fringe_config(
                        f, geom.temporal_fringe[static_cast<std::size_t>(v)], t + 1, buf);
                    if (code) tt.temporal[{c, src, *code}][dst] += 1;
                }
            }
            for (int u : geom.graph.neighbors(v)) {
                const std::int32_t dst = sf.at(t, u);
                if (dst == StateField::kUnknownState) continue;
                const auto code =
                    fringe_config(f, geom.spatial_fringe.at({v, u}), t, buf);
                if (code) tt.spatial[{v, u, src, *code}][dst] += 1;
            }
        }
    }
    return tt;
}

double StateEstimate::singleton_fraction(const Geometry& geom) const {
    std::int64_t interior = 0, singles = 0;
    for (int t = geom.params.past_depth - 1; t < time_steps; ++t) {
        for (int v = 0; v < vertex_count; ++v) {
            ++interior;
            if (!contradicted(t, v) && at(t, v).singleton()) ++singles;
        }
    }
    return interior == 0 ? 0.0 : static_cast<double>(singles) / static_cast<double>(interior);
}

std::int64_t StateEstimate::contradiction_count() const {
    std::int64_t n = 0;
    for (char c : contradiction) n += c != 0;
    return n;
}

namespace {

struct FilterContext {
    const FieldSeries& f;
    const Geometry& geom;
    const StateSet& s;
    const TransitionTable& tt;

    std::size_t index(int t, int v) const {
        return static_cast<std::size_t>(t) * static_cast<std::size_t>(f.vertex_count) +
               static_cast<std::size_t>(v);
    }
    int states_of(int v) const {
        return static_cast<int>(
            s.classes[static_cast<std::size_t>(geom.class_of_vertex[static_cast<std::size_t>(v)])]
                .states.size());
    }
};

// The constraint a single move imposes on its destination: the union of
// successors the source's candidates allow. nullopt = no constraint (fringe
// out of range or never trained for some live source state).
std::optional<StateMask> move_constraint(const FilterContext& ctx,
                                         const std::vector<StateMask>& masks,
                                         const std::vector<char>& contradicted, int sv, int st,
                                         bool temporal, int dv, std::vector<std::uint8_t>& buf) {
    const std::size_t src_idx = ctx.index(st, sv);
    if (contradicted[src_idx]) return std::nullopt;
    const StateMask& src = masks[src_idx];
    const int dest_t = temporal ? st + 1 : st;
    const int n_dest_states = ctx.states_of(dv);

    std::optional<ConfigCode> code;
    if (temporal) {
        code = fringe_config(ctx.f, ctx.geom.temporal_fringe[static_cast<std::size_t>(dv)],
                             dest_t, buf);
    } else {
        code = fringe_config(ctx.f, ctx.geom.spatial_fringe.at({sv, dv}), dest_t, buf);
    }
    if (!code) return std::nullopt;

    const int c = ctx.geom.class_of_vertex[static_cast<std::size_t>(sv)];
    StateMask allowed = StateMask::none(n_dest_states);
    for (int state = 0; state < src.size(); ++state) {
        if (!src.test(state)) continue;
        const std::map<int, std::int64_t>* succ = nullptr;
        if (temporal) {
            const auto it = ctx.tt.temporal.find({c, state, *code});
            if (it != ctx.tt.temporal.end()) succ = &it->second;
        } else {
            const auto it = ctx.tt.spatial.find({sv, dv, state, *code});
            if (it != ctx.tt.spatial.end()) succ = &it->second;
        }
        if (!succ) return std::nullopt;  // untrained key: full pass-through
        for (const auto& [dst, n] : *succ) allowed.set(dst);
    }
    return allowed;
}

}  // namespace

FilterResult recursive_filter(const FieldSeries& f, const Geometry& geom, const StateSet& s,
                              const TransitionTable& tt, const FilterOptions& opts) {
    validate_compatible(s, geom);
    f.validate();
    if (f.vertex_count != geom.graph.vertex_count())
        throw DataError("filter: field width != graph vertex count");

    StateField own_labels;
    const StateField* labels = opts.initial_labels;
    if (!labels) {
        own_labels = label_field(f, s, geom);
        labels = &own_labels;
    } else if (labels->time_steps != f.time_steps || labels->vertex_count != f.vertex_count) {
        throw DataError("filter: initial labels disagree with field dimensions");
    }

    FilterContext ctx{f, geom, s, tt};
    const std::size_t n_points =
        static_cast<std::size_t>(f.time_steps) * static_cast<std::size_t>(f.vertex_count);

    StateEstimate est;
    est.time_steps = f.time_steps;
    est.vertex_count = f.vertex_count;
    est.candidates.resize(n_points);
    est.contradiction.assign(n_points, 0);
    for (int t = 0; t < f.time_steps; ++t) {
        for (int v = 0; v < f.vertex_count; ++v) {
            const std::int32_t lab = labels->at(t, v);
            if (lab == StateField::kUnknownState) {
                est.candidates[ctx.index(t, v)] = StateMask::full(ctx.states_of(v));
            } else if (lab < 0 || lab >= ctx.states_of(v)) {
                throw DataError("filter: initial label out of range for its class");
            } else {
                est.candidates[ctx.index(t, v)] = StateMask::single(ctx.states_of(v), lab);
            }
        }
    }

    // Coverage prepass: a move is covered when its fringe is in range and at
    // least one source state was trained with it.
    std::int64_t moves_total = 0, moves_covered = 0;
    {
        std::vector<std::uint8_t> buf;
        for (int t = 0; t < f.time_steps; ++t) {
            for (int v = 0; v < f.vertex_count; ++v) {
                const int c = geom.class_of_vertex[static_cast<std::size_t>(v)];
                if (t + 1 < f.time_steps) {
                    const auto code = fringe_config(
                        f, geom.temporal_fringe[static_cast<std::size_t>(v)], t + 1, buf);
                    if (code) {
                        ++moves_total;
                        bool any = false;
                        for (int st = 0; st < ctx.states_of(v) && !any; ++st)
                            any = tt.temporal.count({c, st, *code}) > 0;
                        moves_covered += any;
                    }
                }
                for (int u : geom.graph.neighbors(v)) {
                    const auto code = fringe_config(f, geom.spatial_fringe.at({v, u}), t, buf);
                    if (code) {
                        ++moves_total;
                        bool any = false;
                        for (int st = 0; st < ctx.states_of(v) && !any; ++st)
                            any = tt.spatial.count({v, u, st, *code}) > 0;
                        moves_covered += any;
                    }
                }
            }
        }
    }

    auto apply_into = [&ctx](std::vector<StateMask>& masks, std::vector<char>& contra,
                             const std::vector<StateMask>& src_masks,
                             const std::vector<char>& src_contra, int sv, int st, bool temporal,
                             int dv, std::vector<std::uint8_t>& buf) -> bool {
        const auto allowed =
            move_constraint(ctx, src_masks, src_contra, sv, st, temporal, dv, buf);
        if (!allowed) return false;
        const int dt = temporal ? st + 1 : st;
        const std::size_t di = ctx.index(dt, dv);
        if (contra[di]) return false;
        const bool changed = masks[di].intersect(*allowed);
        if (changed && masks[di].empty()) contra[di] = 1;
        return changed;
    };

    if (opts.threads <= 1) {
        // Worklist propagation over outgoing moves.
        std::deque<std::pair<int, int>> work;
        std::vector<char> queued(n_points, 1);
        for (int t = 0; t < f.time_steps; ++t)
            for (int v = 0; v < f.vertex_count; ++v) work.emplace_back(t, v);
        std::vector<std::uint8_t> buf;
        while (!work.empty()) {
            const auto [t, v] = work.front();
            work.pop_front();
            queued[ctx.index(t, v)] = 0;
            auto push = (
                [&](int qt, int qv) {
                    if (!queued[ctx.index(qt, qv)]) {
                        queued[ctx.index(qt, qv)] = 1;
                        work.emplace_back(qt, qv);
                    }
                });
            if (t + 1 < f.time_steps) {
                if (apply_into(est.candidates, est.contradiction, est.candidates,
                               est.contradiction, v, t, true, v, buf))
                    push(t + 1, v);
            }
            for (int u : geom.graph.neighbors(v)) {
                if (apply_into(est.candidates, est.contradiction, est.candidates,
                               est.contradiction, v, t, false, u, buf))
                    push(t, u);
            }
        }
    } else {
        // Jacobi sweeps with double buffering; the intersection semilattice
        // makes the fixed point identical to the sequential result.
        std::vector<StateMask> prev_masks;
        std::vector<char> prev_contra;
        std::atomic<bool> changed{true};
        while (changed.load()) {
            changed.store(false);
            prev_masks = est.candidates;
            prev_contra = est.contradiction;
            const int nw = std::min(opts.threads, f.time_steps);
            std::vector<std::thread> workers;
            const int chunk = (f.time_steps + nw - 1) / nw;
            for (int w = 0; w < nw; ++w) {
                const int lo = w * chunk;
                const int hi = std::min(f.time_steps, lo + chunk);
                workers.emplace_back([&, lo, hi] {
                    std::vector<std::uint8_t> buf;
                    for (int t = lo; t < hi; ++t) {
                        for (int v = 0; v < f.vertex_count; ++v) {
                            // Incoming moves into (t, v).
                            bool any = false;
                            if (t > 0)
                                any |= apply_into(est.candidates, est.contradiction, prev_masks,
                                                  prev_contra, v, t - 1, true, v, buf);
                            for (int u : geom.graph.neighbors(v))
                                any |= apply_into(est.candidates, est.contradiction, prev_masks,
                                                  prev_contra, u, t, false, v, buf);
                            if (any) changed.store(true, std::memory_order_relaxed);
                        }
                    }
                });
            }
            for (auto& th : workers) th.join();
        }
    }

    FilterResult result;
    result.estimate = std::move(est);
    result.constraint_coverage =
        moves_total == 0 ? 1.0
                         : static_cast<double>(moves_covered) / static_cast<double>(moves_total);
    return result;
}

PathCheckReport path_independence_check(const TransitionTable& tt, const Geometry& geom,
                                        const StateField& sf, const FieldSeries& f,
                                        std::span<const PathSample> samples) {
    PathCheckReport rep;
    std::vector<std::uint8_t> buf;

    auto walk = [&](Point start, const PathSpec& path) -> std::optional<std::pair<Point, int>> {
        Point cur = start;
        std::int32_t state = sf.at(cur.time, cur.vertex);
        if (state == StateField::kUnknownState) return std::nullopt;
        for (const PathMove& m : path.moves) {
            if (m.temporal) {
                if (m.dt <= 0)
                    throw DataError("path check: time-decreasing move");
                if (m.dt != 1)
                    throw DataError("path check: temporal moves must be unit steps");
                const int c = geom.class_of_vertex[static_cast<std::size_t>(cur.vertex)];
                const auto code = fringe_config(
                    f, geom.temporal_fringe[static_cast<std::size_t>(cur.vertex)], cur.time + 1,
                    buf);
                if (!code) return std::nullopt;
                const auto it = tt.temporal.find({c, state, *code});
                if (it == tt.temporal.end() || it->second.size() != 1) return std::nullopt;
                state = it->second.begin()->first;
                cur.time += 1;
            } else {
                if (!geom.graph.adjacent(cur.vertex, m.to_vertex))
                    throw DataError("path check: spatial move to a non-adjacent vertex");
                const auto code = fringe_config(
                    f, geom.spatial_fringe.at({cur.vertex, m.to_vertex}), cur.time, buf);
                if (!code) return std::nullopt;
                const auto it = tt.spatial.find({cur.vertex, m.to_vertex, state, *code});
                if (it == tt.spatial.end() || it->second.size() != 1) return std::nullopt;
                state = it->second.begin()->first;
                cur.vertex = m.to_vertex;
            }
        }
        return std::make_pair(cur, static_cast<int>(state));
    };

    for (const PathSample& sample : samples) {
        const auto a = walk(sample.start, sample.path_a);
        const auto b = walk(sample.start, sample.path_b);
        if (!a || !b) {
            ++rep.skipped;
            continue;
        }
        if (!(a->first == sample.end) || !(b->first == sample.end))
            throw DataError("path check: path does not reach the declared endpoint");
        ++rep.applicable;
        if (a->second != b->second) ++rep.violations;
    }
    return rep;
}

}  // namespace conefield
