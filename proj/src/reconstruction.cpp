#include "conefield/reconstruction.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <boost/math/distributions/chi_squared.hpp>

#include "conefield/errors.hpp"
#include "conefield/rng.hpp"

namespace conefield {

void TestConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DataError("test config: alpha must be in (0, 1)");
    if (method == Method::permutation && n_permutations < 100)
        throw DataError("test config: permutation test needs at least 100 resamples");
    if (min_expected < 0.0) throw DataError("test config: min_expected must be >= 0");
}

namespace {

struct PooledBins {
    // After merging low-expectation bins: per surviving bin, the summed
    // column totals; the remainder bin is last when present.
    std::vector<std::int64_t> bin_a;
    std::vector<std::int64_t> bin_b;
    std::int64_t n_a = 0;
    std::int64_t n_b = 0;
};

PooledBins pool_bins(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                     double min_expected) {
    PooledBins p;
    for (std::size_t j = 0; j < a.size(); ++j) {
        p.n_a += a[j];
        p.n_b += b[j];
    }
    const double total = static_cast<double>(p.n_a + p.n_b);
    const double n_min = static_cast<double>(std::min(p.n_a, p.n_b));
    std::int64_t rest_a = 0, rest_b = 0;
    bool have_rest = false;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const std::int64_t col = a[j] + b[j];
        if (col == 0) continue;
        // Smaller of the two expected counts for this bin.
        const double e_min = n_min * static_cast<double>(col) / total;
        if (e_min < min_expected) {
            rest_a += a[j];
            rest_b += b[j];
            have_rest = true;
        } else {
            p.bin_a.push_back(a[j]);
            p.bin_b.push_back(b[j]);
        }
    }
    if (have_rest) {
        p.bin_a.push_back(rest_a);
        p.bin_b.push_back(rest_b);
    }
    return p;
}

double chi_squared_statistic(const PooledBins& p) {
    const double total = static_cast<double>(p.n_a + p.n_b);
    double stat = 0.0;
    for (std::size_t j = 0; j < p.bin_a.size(); ++j) {
        const double col = static_cast<double>(p.bin_a[j] + p.bin_b[j]);
        const double ea = static_cast<double>(p.n_a) * col / total;
        const double eb = static_cast<double>(p.n_b) * col / total;
        const double da = static_cast<double>(p.bin_a[j]) - ea;
        const double db = static_cast<double>(p.bin_b[j]) - eb;
        if (ea > 0.0) stat += da * da / ea;
        if (eb > 0.0) stat += db * db / eb;
    }
    return stat;
}

double chi_squared_tail(double stat, int df) {
    if (df < 1) return 1.0;
    boost::math::chi_squared dist(static_cast<double>(df));
    return boost::math::cdf(boost::math::complement(dist, stat));
}

// Sequential multivariate hypergeometric resampling of row A, conditioning on
// both margins of the pooled table.
std::int64_t hypergeometric_draw(SplitMix64& rng, std::int64_t population,
                                 std::int64_t successes, std::int64_t draws) {
    const std::int64_t lo = std::max<std::int64_t>(0, draws - (population - successes));
    const std::int64_t hi = std::min(successes, draws);
    if (lo >= hi) return lo;
    auto log_choose = [](std::int64_t n, std::int64_t k) {
        return std::lgamma(static_cast<double>(n + 1)) - std::lgamma(static_cast<double>(k + 1)) -
               std::lgamma(static_cast<double>(n - k + 1));
    };
    const double log_denominator = log_choose(population, draws);
    double p = std::exp(log_choose(successes, lo) + log_choose(population - successes, draws - lo) -
                        log_denominator);
    double acc = p;
    const double u = rng.next_unit();
    std::int64_t k = lo;
    while (acc < u && k < hi) {
        // P(k+1)/P(k) for the hypergeometric pmf.
        const double ratio = static_cast<double>(successes - k) * static_cast<double>(draws - k) /
                             (static_cast<double>(k + 1) *
                              static_cast<double>(population - successes - draws + k + 1));
        p *= ratio;
        acc += p;
        ++k;
    }
    return k;
}

double permutation_p_value(const PooledBins& p, double observed, const TestConfig& cfg) {
    SplitMix64 rng(stream_seed(cfg.permutation_seed, 0x7065726dULL));
    int at_least = 0;
    for (int rep = 0; rep < cfg.n_permutations; ++rep) {
        PooledBins resampled;
        resampled.n_a = p.n_a;
        resampled.n_b = p.n_b;
        std::int64_t population = p.n_a + p.n_b;
        std::int64_t remaining_a = p.n_a;
        for (std::size_t j = 0; j < p.bin_a.size(); ++j) {
            const std::int64_t col = p.bin_a[j] + p.bin_b[j];
            const std::int64_t draw = (j + 1 == p.bin_a.size())
                                          ? remaining_a
                                          : hypergeometric_draw(rng, population, col, remaining_a);
            resampled.bin_a.push_back(draw);
            resampled.bin_b.push_back(col - draw);
            remaining_a -= draw;
            population -= col;
        }
        if (chi_squared_statistic(resampled) >= observed - 1e-12) ++at_least;
    }
    return static_cast<double>(1 + at_least) / static_cast<double>(1 + cfg.n_permutations);
}

}  // namespace

HomogeneityResult homogeneity_test_detail(std::span<const std::int64_t> counts_a,
                                          std::span<const std::int64_t> counts_b,
                                          const TestConfig& cfg) {
    cfg.validate();
    if (counts_a.size() != counts_b.size())
        throw DataError("homogeneity test: samples must share an outcome index");
    const PooledBins pooled = pool_bins(counts_a, counts_b, cfg.min_expected);
    if (pooled.n_a + pooled.n_b == 0) throw DataError("homogeneity test: both samples empty");
    if (pooled.n_a == 0 || pooled.n_b == 0)
        throw DataError("homogeneity test: empty sample");

    HomogeneityResult r;
    r.df = static_cast<int>(pooled.bin_a.size()) - 1;
    if (r.df < 1) {
        // Everything merged into one bin: no resolution, no difference.
        return r;
    }
    r.statistic = chi_squared_statistic(pooled);
    r.p_value = cfg.method == TestConfig::Method::chi_squared
                    ? chi_squared_tail(r.statistic, r.df)
                    : permutation_p_value(pooled, r.statistic, cfg);
    r.verdict = r.p_value <= cfg.alpha ? TestVerdict::different : TestVerdict::same;
    return r;
}

TestVerdict homogeneity_test(std::span<const std::int64_t> counts_a,
                             std::span<const std::int64_t> counts_b, const TestConfig& cfg) {
    return homogeneity_test_detail(counts_a, counts_b, cfg).verdict;
}

int StateSet::total_state_count() const {
    int n = 0;
    for (const ClassStates& c : classes) n += static_cast<int>(c.states.size());
    return n;
}

namespace {

// Aligns two future-count maps onto their union support.
void align_counts(const std::map<ConfigCode, std::int64_t>& a,
                  const std::map<ConfigCode, std::int64_t>& b, std::vector<std::int64_t>& out_a,
                  std::vector<std::int64_t>& out_b) {
    out_a.clear();
    out_b.clear();
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() || ib != b.end()) {
        if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
            out_a.push_back(ia->second);
            out_b.push_back(0);
            ++ia;
        } else if (ia == a.end() || ib->first < ia->first) {
            out_a.push_back(0);
            out_b.push_back(ib->second);
            ++ib;
        } else {
            out_a.push_back(ia->second);
            out_b.push_back(ib->second);
            ++ia;
            ++ib;
        }
    }
}

void finalize_class(ClassStates& cs) {
    for (CausalState& st : cs.states) std::sort(st.members.begin(), st.members.end());
    cs.state_of_past.clear();
    for (const CausalState& st : cs.states)
        for (const ConfigCode& past : st.members) cs.state_of_past[past] = st.id;
}

}  // namespace

StateSet reconstruct_states(const ConeDatabase& db, const TestConfig& cfg, std::uint64_t seed,
                            bool refine_pass) {
    cfg.validate();
    if (db.total_mass() == 0) throw DataError("reconstruct: empty database");

    StateSet out;
    out.params = db.params();
    out.pooling = db.pooling();
    out.alphabet_size = db.alphabet_size();
    out.graph_hash = db.graph_hash();
    out.method = "reconstruct";
    out.test = cfg;
    out.seed = seed;
    out.refined = refine_pass;
    out.classes.resize(static_cast<std::size_t>(db.class_count()));
    for (int c = 0; c < db.class_count(); ++c) {
        out.past_len.push_back(db.past_len(c));
        out.future_len.push_back(db.future_len(c));
    }

    std::vector<std::int64_t> buf_a, buf_b;
    for (int c = 0; c < db.class_count(); ++c) {
        const ClassCounts& counts = db.class_counts(c);
        ClassStates& cs = out.classes[static_cast<std::size_t>(c)];

        std::vector<ConfigCode> order;
        order.reserve(counts.pasts.size());
        for (const auto& [past, stats] : counts.pasts) order.push_back(past);
        SplitMix64 rng(stream_seed(seed, 0x7265636fULL, static_cast<std::uint64_t>(c)));
        seeded_shuffle(order, rng);

        std::uint64_t test_counter = 0;
        for (const ConfigCode& past : order) {
            const PastStats& ps = counts.pasts.at(past);
            bool placed = false;
            for (CausalState& st : cs.states) {
                align_counts(ps.futures, st.futures, buf_a, buf_b);
                TestConfig local = cfg;
                local.permutation_seed =
                    stream_seed(seed, static_cast<std::uint64_t>(c) | 0x100000000ULL,
                                test_counter++);
                if (homogeneity_test(buf_a, buf_b, local) == TestVerdict::same) {
                    st.members.push_back(past);
                    st.total += ps.total;
                    for (const auto& [fut, n] : ps.futures) st.futures[fut] += n;
                    placed = true;
                    break;
                }
            }
            if (!placed) {
                CausalState st;
                st.id = static_cast<int>(cs.states.size());
                st.members.push_back(past);
                st.total = ps.total;
                st.futures = ps.futures;
                cs.states.push_back(std::move(st));
            }
        }

        if (refine_pass && cs.states.size() > 1) {
            std::vector<std::vector<ConfigCode>> assignment(cs.states.size());
            for (const auto& [past, ps] : counts.pasts) {
                double best_p = -1.0;
                std::size_t best = 0;
                std::uint64_t k = 0;
                for (std::size_t s = 0; s < cs.states.size(); ++s) {
                    align_counts(ps.futures, cs.states[s].futures, buf_a, buf_b);
                    TestConfig local = cfg;
                    local.permutation_seed =
                        stream_seed(seed, static_cast<std::uint64_t>(c) | 0x200000000ULL, k++);
                    const double p = homogeneity_test_detail(buf_a, buf_b, local).p_value;
                    if (p > best_p + 1e-15) {
                        best_p = p;
                        best = s;
                    }
                }
                assignment[best].push_back(past);
            }
            std::vector<CausalState> rebuilt;
            for (std::size_t s = 0; s < assignment.size(); ++s) {
                if (assignment[s].empty()) continue;
                CausalState st;
                st.id = static_cast<int>(rebuilt.size());
                for (const ConfigCode& past : assignment[s]) {
                    const PastStats& ps = counts.pasts.at(past);
                    st.members.push_back(past);
                    st.total += ps.total;
                    for (const auto& [fut, n] : ps.futures) st.futures[fut] += n;
                }
                rebuilt.push_back(std::move(st));
            }
            cs.states = std::move(rebuilt);
        }

        finalize_class(cs);
    }
    return out;
}

StateSet oracle_states(
    const std::vector<std::map<ConfigCode, std::map<ConfigCode, double>>>& exact_conditionals,
    const Geometry& geom, int alphabet_size, double tolerance) {
    if (static_cast<int>(exact_conditionals.size()) != geom.class_count())
        throw DataError("oracle states: one conditional map per class required");

    auto distributions_equal = [tolerance](const std::map<ConfigCode, double>& a,
                                           const std::map<ConfigCode, double>& b) {
        auto ia = a.begin();
        auto ib = b.begin();
        while (ia != a.end() || ib != b.end()) {
            if (ib == b.end() || (ia != a.end() && ia->first < ib->first)) {
                if (std::abs(ia->second) > tolerance) return false;
                ++ia;
            } else if (ia == a.end() || ib->first < ia->first) {
                if (std::abs(ib->second) > tolerance) return false;
                ++ib;
            } else {
                if (std::abs(ia->second - ib->second) > tolerance) return false;
                ++ia;
                ++ib;
            }
        }
        return true;
    };

    StateSet out;
    out.params = geom.params;
    out.pooling = geom.pooling;
    out.alphabet_size = alphabet_size;
    out.graph_hash = geom.graph.content_hash();
    out.method = "oracle";
    out.classes.resize(static_cast<std::size_t>(geom.class_count()));
    for (const VertexClass& vc : geom.classes) {
        const int rep = vc.members.front();
        out.past_len.push_back(geom.past_len(rep));
        out.future_len.push_back(geom.future_len(rep));
    }

    for (int c = 0; c < geom.class_count(); ++c) {
        ClassStates& cs = out.classes[static_cast<std::size_t>(c)];
        std::vector<const std::map<ConfigCode, double>*> reps;
        for (const auto& [past, dist] : exact_conditionals[static_cast<std::size_t>(c)]) {
            bool placed = false;
            for (std::size_t s = 0; s < cs.states.size(); ++s) {
                if (distributions_equal(dist, *reps[s])) {
                    cs.states[s].members.push_back(past);
                    placed = true;
                    break;
                }
            }
            if (!placed) {
                CausalState st;
                st.id = static_cast<int>(cs.states.size());
                st.members.push_back(past);
                cs.states.push_back(std::move(st));
                reps.push_back(&dist);
            }
        }
        finalize_class(cs);
    }
    return out;
}

bool partition_equal(const ClassStates& a, const ClassStates& b) {
    std::set<std::vector<ConfigCode>> pa, pb;
    for (const CausalState& st : a.states) pa.insert(st.members);
    for (const CausalState& st : b.states) pb.insert(st.members);
    return pa == pb;
}

void validate_compatible(const StateSet& s, const Geometry& geom) {
    if (!(s.params == geom.params) || s.pooling != geom.pooling)
        throw DataError("state set: cone parameters differ from this geometry");
    if (s.graph_hash != geom.graph.content_hash())
        throw DataError("state set: built on a different graph");
    if (static_cast<int>(s.classes.size()) != geom.class_count())
        throw DataError("state set: class count differs from this geometry");
    for (int c = 0; c < geom.class_count(); ++c) {
        const int rep = geom.classes[static_cast<std::size_t>(c)].members.front();
        if (s.past_len[static_cast<std::size_t>(c)] != geom.past_len(rep) ||
            s.future_len[static_cast<std::size_t>(c)] != geom.future_len(rep))
            throw DataError("state set: cone sizes differ from this geometry");
    }
}

StateField label_field(const FieldSeries& f, const StateSet& s, const Geometry& geom) {
    validate_compatible(s, geom);
    f.validate();
    if (f.vertex_count != geom.graph.vertex_count())
        throw DataError("label: field width != graph vertex count");
    if (f.alphabet_size != s.alphabet_size)
        throw DataError("label: field alphabet differs from the state set's");

    StateField sf;
    sf.time_steps = f.time_steps;
    sf.vertex_count = f.vertex_count;
    sf.labels.assign(static_cast<std::size_t>(f.time_steps) * static_cast<std::size_t>(f.vertex_count),
                     StateField::kUnknownState);

    std::vector<std::uint8_t> buf;
    for (int t = geom.params.past_depth - 1; t < f.time_steps; ++t) {
        for (int v = 0; v < f.vertex_count; ++v) {
            buf.clear();
            for (const Offset& o : geom.past_cells[static_cast<std::size_t>(v)])
                buf.push_back(f.at(t + o.dt, o.vertex));
            const ConfigCode past = ConfigCode::from_symbols(buf, f.alphabet_size);
            const ClassStates& cs =
                s.classes[static_cast<std::size_t>(geom.class_of_vertex[static_cast<std::size_t>(v)])];
            const auto it = cs.state_of_past.find(past);
            if (it != cs.state_of_past.end()) sf.set(t, v, it->second);
        }
    }
    return sf;
}

}  // namespace conefield
