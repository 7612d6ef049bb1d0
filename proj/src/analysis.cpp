#include "conefield/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "conefield/errors.hpp"

namespace conefield {

namespace {

constexpr double kLog2 = 0.6931471805599453;

double xlogx(double x) { return x > 0.0 ? x * std::log2(x) : 0.0; }

}  // namespace

double entropy_bits(std::span<const double> counts) {
    double total = 0.0;
    for (double c : counts) {
        if (c < 0.0) throw DataError("entropy: negative count");
        total += c;
    }
    if (total <= 0.0) throw DataError("entropy: empty table");
    double h = 0.0;
    for (double c : counts) h -= xlogx(c / total);
    return h;
}

double mutual_information(const std::vector<std::vector<double>>& joint_counts) {
    if (joint_counts.empty()) throw DataError("mutual information: empty table");
    const std::size_t ny = joint_counts[0].size();
    std::vector<double> row(joint_counts.size(), 0.0);
    std::vector<double> col(ny, 0.0);
    double total = 0.0;
    for (std::size_t x = 0; x < joint_counts.size(); ++x) {
        if (joint_counts[x].size() != ny)
            throw DataError("mutual information: ragged table");
        for (std::size_t y = 0; y < ny; ++y) {
            const double c = joint_counts[x][y];
            if (c < 0.0) throw DataError("mutual information: negative count");
            row[x] += c;
            col[y] += c;
            total += c;
        }
    }
    if (total <= 0.0) throw DataError("mutual information: empty table");
    double info = 0.0;
    for (std::size_t x = 0; x < joint_counts.size(); ++x) {
        for (std::size_t y = 0; y < ny; ++y) {
            const double c = joint_counts[x][y];
            if (c > 0.0) info += (c / total) * std::log2(c * total / (row[x] * col[y]));
        }
    }
    return std::max(0.0, info);
}

double conditional_mutual_information(
    const std::vector<std::vector<std::vector<double>>>& joint_counts) {
    std::map<std::tuple<int, int, int>, double> cells;
    for (std::size_t x = 0; x < joint_counts.size(); ++x)
        for (std::size_t y = 0; y < joint_counts[x].size(); ++y)
            for (std::size_t z = 0; z < joint_counts[x][y].size(); ++z) {
                const double c = joint_counts[x][y][z];
                if (c < 0.0) throw DataError("conditional MI: negative count");
                if (c > 0.0)
                    cells[{static_cast<int>(x), static_cast<int>(y), static_cast<int>(z)}] = c;
            }
    return conditional_mutual_information(cells);
}

double conditional_mutual_information(
    const std::map<std::tuple<int, int, int>, double>& cells) {
    double total = 0.0;
    std::map<int, double> z_total;
    std::map<std::pair<int, int>, double> xz_total, yz_total;
    for (const auto& [key, c] : cells) {
        if (c < 0.0) throw DataError("conditional MI: negative count");
        const auto [x, y, z] = key;
        total += c;
        z_total[z] += c;
        xz_total[{x, z}] += c;
        yz_total[{y, z}] += c;
    }
    if (total <= 0.0) throw DataError("conditional MI: empty table");
    double info = 0.0;
    for (const auto& [key, c] : cells) {
        if (c <= 0.0) continue;
        const auto [x, y, z] = key;
        info += (c / total) *
                std::log2(c * z_total[z] / (xz_total[{x, z}] * yz_total[{y, z}]));
    }
    return std::max(0.0, info);
}

double mi_bias_bound_bits(std::int64_t kx, std::int64_t ky, std::int64_t n) {
    if (n <= 0) return 0.0;
    return static_cast<double>((kx - 1) * (ky - 1)) / (2.0 * static_cast<double>(n) * kLog2);
}

ComplexityReport local_complexity(const StateField& sf, const ConeDatabase& db,
                                  const StateSet& s, const Geometry& geom) {
    validate_compatible(s, geom);
    if (db.class_count() != geom.class_count() || db.graph_hash() != geom.graph.content_hash())
        throw DataError("complexity: database built on a different setting");
    if (sf.vertex_count != geom.graph.vertex_count())
        throw DataError("complexity: state field width != graph vertex count");

    ComplexityReport report;
    for (int c = 0; c < geom.class_count(); ++c) {
        const ClassStates& cs = s.classes[static_cast<std::size_t>(c)];
        const ClassCounts& counts = db.class_counts(c);
        ClassComplexity out;
        out.class_id = c;

        // State weights from the database's past totals.
        std::vector<double> db_state_mass(cs.states.size(), 0.0);
        std::int64_t kx = 0, ky = 0;
        {
            std::map<ConfigCode, std::int64_t> fut_support;
            for (const auto& [past, ps] : counts.pasts) {
                const auto it = cs.state_of_past.find(past);
                if (it == cs.state_of_past.end())
                    throw DataError("complexity: database past missing from the state set");
                db_state_mass[static_cast<std::size_t>(it->second)] +=
                    static_cast<double>(ps.total);
                for (const auto& [fut, n] : ps.futures) fut_support[fut] += n;
            }
            kx = static_cast<std::int64_t>(counts.pasts.size());
            ky = static_cast<std::int64_t>(fut_support.size());
        }
        out.n_samples_db = counts.total;
        if (counts.total > 0) out.c_bits = entropy_bits(db_state_mass);

        // Same entropy from labeled-field occupation.
        std::vector<double> field_state_mass(cs.states.size(), 0.0);
        std::int64_t labeled = 0;
        for (int v : geom.classes[static_cast<std::size_t>(c)].members) {
            for (int t = 0; t < sf.time_steps; ++t) {
                const std::int32_t st = sf.at(t, v);
                if (st == StateField::kUnknownState) continue;
                field_state_mass[static_cast<std::size_t>(st)] += 1.0;
                ++labeled;
            }
        }
        out.n_samples_field = labeled;
        if (labeled > 0) out.state_entropy_bits = entropy_bits(field_state_mass);

        // Plug-in I[future cone; past cone] over the database sample.
        if (counts.total > 0) {
            std::map<ConfigCode, double> fut_marginal;
            for (const auto& [past, ps] : counts.pasts)
                for (const auto& [fut, n] : ps.futures)
                    fut_marginal[fut] += static_cast<double>(n);
            const double total = static_cast<double>(counts.total);
            double info = 0.0;
            for (const auto& [past, ps] : counts.pasts) {
                for (const auto& [fut, n] : ps.futures) {
                    const double joint = static_cast<double>(n);
                    info += (joint / total) *
                            std::log2(joint * total /
                                      (static_cast<double>(ps.total) * fut_marginal[fut]));
                }
            }
            out.predictive_info_lower_bits = std::max(0.0, info);
            out.mi_bias_bound = mi_bias_bound_bits(kx, ky, counts.total);
        }
        report.per_class.push_back(out);
    }

    std::int64_t any_labeled = 0;
    for (const ClassComplexity& c : report.per_class) any_labeled += c.n_samples_field;
    if (any_labeled == 0) throw DataError("complexity: no labeled points");
    return report;
}

ParentsSpec ParentsSpec::from_graph(const Graph& g) {
    ParentsSpec spec;
    spec.parents.resize(static_cast<std::size_t>(g.vertex_count()));
    for (int v = 0; v < g.vertex_count(); ++v) {
        std::vector<int>& p = spec.parents[static_cast<std::size_t>(v)];
        p = g.neighbors(v);
        p.push_back(v);
        std::sort(p.begin(), p.end());
    }
    return spec;
}

namespace {

struct CellIndexer {
    std::map<std::vector<std::int32_t>, int> ids;
    int id(const std::vector<std::int32_t>& key) {
        return ids.emplace(key, static_cast<int>(ids.size())).first->second;
    }
};

MarkovReport run_cmi_test(const std::vector<std::tuple<int, int, int>>& triples,
                          double threshold_bits, double min_samples_per_cell) {
    MarkovReport report;
    report.threshold_bits = threshold_bits;
    std::map<std::tuple<int, int, int>, double> cells;
    std::map<int, std::int64_t> per_cell;
    std::map<std::pair<int, int>, std::int64_t> x_support, y_support;
    for (const auto& [x, y, z] : triples) {
        cells[{x, y, z}] += 1.0;
        per_cell[z] += 1;
        x_support[{x, z}] += 1;
        y_support[{y, z}] += 1;
    }
    report.n_samples = static_cast<std::int64_t>(triples.size());
    report.n_conditioning_cells = static_cast<std::int64_t>(per_cell.size());
    if (report.n_samples == 0 ||
        static_cast<double>(report.n_samples) <
            min_samples_per_cell * static_cast<double>(report.n_conditioning_cells)) {
        report.verdict = "inconclusive";
        return report;
    }
    report.cmi_bits = conditional_mutual_information(cells);
    double bias = 0.0;
    {
        std::map<int, std::int64_t> kx, ky;
        for (const auto& [key, n] : x_support) kx[key.second] += 1;
        for (const auto& [key, n] : y_support) ky[key.second] += 1;
        for (const auto& [z, n] : per_cell)
            bias += mi_bias_bound_bits(kx[z], ky[z], report.n_samples);
    }
    report.mi_bias_bound = bias;
    report.verdict = report.cmi_bits <= threshold_bits ? "consistent" : "inconsistent";
    return report;
}

}  // namespace

MarkovReport temporal_markov_test(const StateField& sf, const Geometry& geom,
                                  const ParentsSpec& parents, int depth_k,
                                  double threshold_bits, double min_samples_per_cell) {
    if (depth_k < 2) throw DataError("temporal markov test: lag must be >= 2");
    if (sf.vertex_count != geom.graph.vertex_count())
        throw DataError("temporal markov test: field width != graph");

    std::vector<std::tuple<int, int, int>> triples;
    CellIndexer zs;
    for (int v = 0; v < sf.vertex_count; ++v) {
        const auto& par = parents.parents[static_cast<std::size_t>(v)];
        for (int t = depth_k; t < sf.time_steps; ++t) {
            const std::int32_t x = sf.at(t, v);
            const std::int32_t y = sf.at(t - depth_k, v);
            if (x == StateField::kUnknownState || y == StateField::kUnknownState) continue;
            std::vector<std::int32_t> key{
                static_cast<std::int32_t>(geom.class_of_vertex[static_cast<std::size_t>(v)])};
            bool ok = true;
            for (int u : par) {
                const std::int32_t s = sf.at(t - 1, u);
                if (s == StateField::kUnknownState) {
                    ok = false;
                    break;
                }
                key.push_back(s);
            }
            if (!ok) continue;
            triples.emplace_back(x, y, zs.id(key));
        }
    }
    return run_cmi_test(triples, threshold_bits, min_samples_per_cell);
}

MarkovReport markov_field_test(const StateField& sf, const Geometry& geom,
                               const ParentsSpec& parents, int probe_distance, int probe_lag,
                               double threshold_bits, double min_samples_per_cell) {
    if (probe_distance < 2)
        throw DataError("markov field test: probe must be beyond the boundary (distance >= 2)");
    if (probe_lag < 0) throw DataError("markov field test: probe lag must be >= 0");
    if (sf.vertex_count != geom.graph.vertex_count())
        throw DataError("markov field test: field width != graph");

    // Probe vertex per v: smallest id at exactly probe_distance hops.
    std::vector<int> probe(static_cast<std::size_t>(sf.vertex_count), -1);
    for (int v = 0; v < sf.vertex_count; ++v) {
        const std::vector<int> dist = bfs_distances(geom.graph, v);
        for (int w = 0; w < sf.vertex_count; ++w) {
            if (dist[static_cast<std::size_t>(w)] == probe_distance) {
                probe[static_cast<std::size_t>(v)] = w;
                break;
            }
        }
    }

    std::vector<std::tuple<int, int, int>> triples;
    CellIndexer zs;
    for (int v = 0; v < sf.vertex_count; ++v) {
        const int w = probe[static_cast<std::size_t>(v)];
        if (w < 0) continue;
        const auto& par = parents.parents[static_cast<std::size_t>(v)];
        const auto& nbrs = geom.graph.neighbors(v);
        for (int t = std::max(1, probe_lag); t < sf.time_steps; ++t) {
            const std::int32_t x = sf.at(t, v);
            const std::int32_t y = sf.at(t - probe_lag, w);
            if (x == StateField::kUnknownState || y == StateField::kUnknownState) continue;
            std::vector<std::int32_t> key{
                static_cast<std::int32_t>(geom.class_of_vertex[static_cast<std::size_t>(v)])};
            bool ok = true;
            for (int u : par) {
                const std::int32_t s = sf.at(t - 1, u);
                if (s == StateField::kUnknownState) {
                    ok = false;
                    break;
                }
                key.push_back(s);
            }
            for (int u : nbrs) {
                const std::int32_t s = sf.at(t, u);
                if (s == StateField::kUnknownState) {
                    ok = false;
                    break;
                }
                key.push_back(s);
            }
            if (!ok) continue;
            triples.emplace_back(x, y, zs.id(key));
        }
    }
    return run_cmi_test(triples, threshold_bits, min_samples_per_cell);
}

}  // namespace conefield
