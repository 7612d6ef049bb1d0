#include "conefield/graph.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "conefield/errors.hpp"
#include "conefield/rng.hpp"

namespace conefield {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

}  // namespace

Graph::Graph(int vertex_count, std::vector<std::pair<int, int>> edges)
    : vertex_count_(vertex_count) {
    if (vertex_count < 0) throw DataError("graph: negative vertex count");
    edges_.reserve(edges.size());
    for (auto [u, v] : edges) {
        if (u < 0 || u >= vertex_count_ || v < 0 || v >= vertex_count_)
            throw DataError("graph: vertex id out of range");
        if (u == v) throw DataError("graph: self-loop");
        edges_.emplace_back(std::min(u, v), std::max(u, v));
    }
    std::sort(edges_.begin(), edges_.end());
    if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end())
        throw DataError("graph: duplicate edge");
    adjacency_.assign(static_cast<std::size_t>(vertex_count_), {});
    for (auto [u, v] : edges_) {
        adjacency_[static_cast<std::size_t>(u)].push_back(v);
        adjacency_[static_cast<std::size_t>(v)].push_back(u);
    }
    for (auto& nbrs : adjacency_) std::sort(nbrs.begin(), nbrs.end());
}

Graph Graph::ring(int n) {
    if (n < 3) throw DataError("ring graph needs at least 3 vertices");
    std::vector<std::pair<int, int>> edges;
    edges.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
    return Graph(n, std::move(edges));
}

Graph Graph::star(int leaves) {
    if (leaves < 1) throw DataError("star graph needs at least 1 leaf");
    std::vector<std::pair<int, int>> edges;
    for (int i = 1; i <= leaves; ++i) edges.emplace_back(0, i);
    return Graph(leaves + 1, std::move(edges));
}

const std::vector<int>& Graph::neighbors(int v) const {
    if (v < 0 || v >= vertex_count_) throw DataError("graph: vertex id out of range");
    return adjacency_[static_cast<std::size_t>(v)];
}

bool Graph::adjacent(int u, int v) const {
    const auto& nbrs = neighbors(u);
    if (v < 0 || v >= vertex_count_) throw DataError("graph: vertex id out of range");
    return std::binary_search(nbrs.begin(), nbrs.end(), v);
}

int Graph::degree(int v) const { return static_cast<int>(neighbors(v).size()); }

std::uint64_t Graph::content_hash() const {
    const std::string text = save_graph(*this);
    return fnv1a64(std::span<const char>(text.data(), text.size()));
}

Graph load_graph(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("graph parse error line 1: empty input");
    {
        std::istringstream header(trim(line));
        std::string word;
        int n = -1;
        if (!(header >> word >> n) || word != "graph" || n < 0 || (header >> word))
            throw ParseError("graph parse error line 1: expected 'graph <vertex_count>'");
        std::vector<std::pair<int, int>> edges;
        std::set<std::pair<int, int>> seen;
        int lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            const std::string body = trim(line);
            if (body.empty() || body[0] == '#') continue;
            std::istringstream row(body);
            int u = 0, v = 0;
            std::string extra;
            if (!(row >> u >> v) || (row >> extra))
                throw ParseError("graph parse error line " + std::to_string(lineno) +
                                 ": expected '<u> <v>'");
            if (u < 0 || u >= n || v < 0 || v >= n)
                throw ParseError("graph parse error line " + std::to_string(lineno) +
                                 ": vertex id out of range");
            if (u == v)
                throw ParseError("graph parse error line " + std::to_string(lineno) +
                                 ": self-loop");
            auto norm = std::minmax(u, v);
            if (!seen.insert({norm.first, norm.second}).second)
                throw ParseError("graph parse error line " + std::to_string(lineno) +
                                 ": duplicate edge");
            edges.emplace_back(u, v);
        }
        return Graph(n, std::move(edges));
    }
}

Graph load_graph_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open graph file: " + path);
    return load_graph(f);
}

std::string save_graph(const Graph& g) {
    std::ostringstream out;
    out << "graph " << g.vertex_count() << "\n";
    for (auto [u, v] : g.edges()) out << u << " " << v << "\n";
    return out.str();
}

std::vector<int> bfs_distances(const Graph& g, int source) {
    if (source < 0 || source >= g.vertex_count()) throw DataError("bfs: vertex out of range");
    std::vector<int> dist(static_cast<std::size_t>(g.vertex_count()), kUnreachable);
    std::deque<int> frontier{source};
    dist[static_cast<std::size_t>(source)] = 0;
    while (!frontier.empty()) {
        const int u = frontier.front();
        frontier.pop_front();
        for (int w : g.neighbors(u)) {
            if (dist[static_cast<std::size_t>(w)] == kUnreachable) {
                dist[static_cast<std::size_t>(w)] = dist[static_cast<std::size_t>(u)] + 1;
                frontier.push_back(w);
            }
        }
    }
    return dist;
}

int graph_distance(const Graph& g, int u, int v) {
    if (v < 0 || v >= g.vertex_count()) throw DataError("distance: vertex out of range");
    return bfs_distances(g, u)[static_cast<std::size_t>(v)];
}

void ConeParams::validate() const {
    if (speed_c < 1) throw DataError("cone params: speed_c must be >= 1");
    if (past_depth < 1) throw DataError("cone params: past_depth must be >= 1");
    if (future_depth < 1) throw DataError("cone params: future_depth must be >= 1");
    if (past_depth > 62 || future_depth > 62)
        throw DataError("cone params: depths beyond 62 slices are not supported");
}

bool ConeTemplate::contains(const Offset& o) const {
    return std::binary_search(offsets.begin(), offsets.end(), o);
}

ConeTemplate cone_template(const Graph& g, int v, const ConeParams& p, ConeDirection dir) {
    p.validate();
    const std::vector<int> dist = bfs_distances(g, v);
    ConeTemplate t;
    t.anchor = v;
    t.direction = dir;
    if (dir == ConeDirection::past) {
        for (int tau = p.past_depth - 1; tau >= 0; --tau) {
            for (int u = 0; u < g.vertex_count(); ++u) {
                const int d = dist[static_cast<std::size_t>(u)];
                if (d != kUnreachable && d <= p.speed_c * tau) t.offsets.push_back({u, -tau});
            }
        }
    } else {
        for (int tau = 1; tau <= p.future_depth; ++tau) {
            for (int u = 0; u < g.vertex_count(); ++u) {
                const int d = dist[static_cast<std::size_t>(u)];
                if (d != kUnreachable && d <= p.speed_c * tau) t.offsets.push_back({u, tau});
            }
        }
    }
    std::sort(t.offsets.begin(), t.offsets.end());
    return t;
}

namespace {

std::vector<Offset> ordered_difference(const ConeTemplate& dest, std::vector<Offset> removed) {
    std::sort(removed.begin(), removed.end());
    std::vector<Offset> fringe;
    for (const Offset& o : dest.offsets) {
        if (!std::binary_search(removed.begin(), removed.end(), o)) fringe.push_back(o);
    }
    return fringe;
}

}  // namespace

FringeTemplate temporal_fringe_template(const Graph& g, int v, const ConeParams& p) {
    const ConeTemplate dest = cone_template(g, v, p, ConeDirection::past);
    std::vector<Offset> translated;
    translated.reserve(dest.offsets.size());
    for (const Offset& o : dest.offsets) translated.push_back({o.vertex, o.dt - 1});
    FringeTemplate f;
    f.temporal = true;
    f.source_vertex = v;
    f.dest_vertex = v;
    f.offsets = ordered_difference(dest, std::move(translated));
    return f;
}

FringeTemplate spatial_fringe_template(const Graph& g, int from, int to, const ConeParams& p) {
    if (!g.adjacent(from, to))
        throw DataError("spatial fringe: vertices " + std::to_string(from) + " and " +
                        std::to_string(to) + " are not adjacent");
    const ConeTemplate dest = cone_template(g, to, p, ConeDirection::past);
    const ConeTemplate src = cone_template(g, from, p, ConeDirection::past);
    FringeTemplate f;
    f.temporal = false;
    f.source_vertex = from;
    f.dest_vertex = to;
    f.offsets = ordered_difference(dest, src.offsets);
    return f;
}

// ---------------------------------------------------------------------------
// Canonical labeling of cone structures.
//
// A cone is reduced to the set of graph vertices it touches, each colored by
// (past slice mask, future slice mask, anchor flag), plus the induced
// adjacency. Canonical labeling of that colored graph yields both the shape
// signature and, per vertex, a canonical index used to align cone cells
// across vertices of one pooling class.
// ---------------------------------------------------------------------------

namespace {

struct ConeStructure {
    std::vector<int> vertices;  // ascending graph vertex ids
    std::vector<std::array<std::uint64_t, 3>> color;
    std::vector<std::vector<int>> adj;  // local indices

    int size() const { return static_cast<int>(vertices.size()); }
};

ConeStructure make_structure(const Graph& g, int anchor, const std::vector<Offset>& past,
                             const std::vector<Offset>& future) {
    ConeStructure s;
    for (const Offset& o : past) s.vertices.push_back(o.vertex);
    for (const Offset& o : future) s.vertices.push_back(o.vertex);
    std::sort(s.vertices.begin(), s.vertices.end());
    s.vertices.erase(std::unique(s.vertices.begin(), s.vertices.end()), s.vertices.end());

    auto local = [&s](int v) {
        return static_cast<int>(std::lower_bound(s.vertices.begin(), s.vertices.end(), v) -
                                s.vertices.begin());
    };

    s.color.assign(static_cast<std::size_t>(s.size()), {0, 0, 0});
    for (const Offset& o : past)
        s.color[static_cast<std::size_t>(local(o.vertex))][0] |= 1ULL << (-o.dt);
    for (const Offset& o : future)
        s.color[static_cast<std::size_t>(local(o.vertex))][1] |= 1ULL << (o.dt - 1);
    s.color[static_cast<std::size_t>(local(anchor))][2] = 1;

    s.adj.assign(static_cast<std::size_t>(s.size()), {});
    for (int i = 0; i < s.size(); ++i) {
        for (int w : g.neighbors(s.vertices[static_cast<std::size_t>(i)])) {
            auto it = std::lower_bound(s.vertices.begin(), s.vertices.end(), w);
            if (it != s.vertices.end() && *it == w)
                s.adj[static_cast<std::size_t>(i)].push_back(
                    static_cast<int>(it - s.vertices.begin()));
        }
        std::sort(s.adj[static_cast<std::size_t>(i)].begin(),
                  s.adj[static_cast<std::size_t>(i)].end());
    }
    return s;
}

std::vector<int> initial_coloring(const ConeStructure& s) {
    std::vector<std::array<std::uint64_t, 3>> distinct(s.color);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    std::vector<int> col(static_cast<std::size_t>(s.size()));
    for (int i = 0; i < s.size(); ++i) {
        col[static_cast<std::size_t>(i)] = static_cast<int>(
            std::lower_bound(distinct.begin(), distinct.end(), s.color[static_cast<std::size_t>(i)]) -
            distinct.begin());
    }
    return col;
}

// 1-WL color refinement; returns a stable partition with canonical ids.
std::vector<int> refine(const ConeStructure& s, std::vector<int> col) {
    const int n = s.size();
    for (;;) {
        std::vector<std::pair<std::vector<int>, int>> sig;
        sig.reserve(static_cast<std::size_t>(n));
        for (int u = 0; u < n; ++u) {
            std::vector<int> key{col[static_cast<std::size_t>(u)]};
            for (int w : s.adj[static_cast<std::size_t>(u)])
                key.push_back(col[static_cast<std::size_t>(w)]);
            std::sort(key.begin() + 1, key.end());
            sig.emplace_back(std::move(key), u);
        }
        std::sort(sig.begin(), sig.end());
        std::vector<int> next(static_cast<std::size_t>(n));
        int color_count = 0;
        for (std::size_t i = 0; i < sig.size(); ++i) {
            if (i > 0 && sig[i].first != sig[i - 1].first) ++color_count;
            next[static_cast<std::size_t>(sig[i].second)] = color_count;
        }
        const int old_count =
            col.empty() ? 0 : *std::max_element(col.begin(), col.end()) + 1;
        if (color_count + 1 == old_count) return next;
        col = std::move(next);
    }
}

struct CanonResult {
    std::string encoding;
    std::vector<int> canon_index;  // local index -> canonical position
    bool certified = false;
};

class Canonicalizer {
public:
    explicit Canonicalizer(const ConeStructure& s) : s_(s) {}

    CanonResult run() {
        search(initial_coloring(s_));
        CanonResult r;
        r.certified = !exceeded_ && !best_.empty();
        r.encoding = best_;
        r.canon_index = best_index_;
        return r;
    }

private:
    void search(std::vector<int> col) {
        if (exceeded_) return;
        if (--budget_ < 0) {
            exceeded_ = true;
            return;
        }
        col = refine(s_, col);
        const int n = s_.size();
        std::vector<int> cell_size(static_cast<std::size_t>(n), 0);
        for (int c : col) ++cell_size[static_cast<std::size_t>(c)];
        int target = -1;
        for (int c = 0; c < n; ++c) {
            if (cell_size[static_cast<std::size_t>(c)] > 1) {
                target = c;
                break;
            }
        }
        if (target < 0) {
            consider(col);
            return;
        }
        for (int u = 0; u < n; ++u) {
            if (col[static_cast<std::size_t>(u)] != target) continue;
            std::vector<int> branched(col);
            branched[static_cast<std::size_t>(u)] = n;  // fresh color
            search(std::move(branched));
        }
    }

    void consider(const std::vector<int>& col) {
        const int n = s_.size();
        std::vector<int> order(static_cast<std::size_t>(n));
        for (int u = 0; u < n; ++u) order[static_cast<std::size_t>(col[static_cast<std::size_t>(u)])] = u;
        std::ostringstream enc;
        enc << "n" << n << ";";
        for (int pos = 0; pos < n; ++pos) {
            const auto& c = s_.color[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])];
            enc << c[0] << "." << c[1] << "." << c[2] << ";";
        }
        std::vector<int> canon_of(static_cast<std::size_t>(n));
        for (int pos = 0; pos < n; ++pos) canon_of[static_cast<std::size_t>(order[static_cast<std::size_t>(pos)])] = pos;
        enc << "e";
        for (int i = 0; i < n; ++i) {
            for (int j : s_.adj[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]) {
                const int cj = canon_of[static_cast<std::size_t>(j)];
                if (cj > i) enc << i << "-" << cj << ",";
            }
        }
        std::string text = enc.str();
        if (best_.empty() || text < best_) {
            best_ = std::move(text);
            best_index_ = std::move(canon_of);
        }
    }

    const ConeStructure& s_;
    long budget_ = 50000;
    bool exceeded_ = false;
    std::string best_;
    std::vector<int> best_index_;
};

CanonResult canonical_cone_labeling(const Graph& g, int anchor, const std::vector<Offset>& past,
                                    const std::vector<Offset>& future) {
    const ConeStructure s = make_structure(g, anchor, past, future);
    Canonicalizer canon(s);
    return canon.run();
}

}  // namespace

std::string cone_shape_signature(const ConeTemplate& t, const Graph& g) {
    static const std::vector<Offset> kNone;
    const bool past = t.direction == ConeDirection::past;
    const CanonResult r =
        canonical_cone_labeling(g, t.anchor, past ? t.offsets : kNone, past ? kNone : t.offsets);
    if (!r.certified)
        return std::string("uncertified:v") + std::to_string(t.anchor);
    return (past ? "past:" : "future:") + r.encoding;
}

Geometry build_geometry(const Graph& g, const ConeParams& p, bool pooling) {
    p.validate();
    Geometry geo;
    geo.graph = g;
    geo.params = p;
    geo.pooling = pooling;

    const int n = g.vertex_count();
    geo.past_cells.resize(static_cast<std::size_t>(n));
    geo.future_cells.resize(static_cast<std::size_t>(n));
    geo.temporal_fringe.resize(static_cast<std::size_t>(n));
    geo.class_of_vertex.assign(static_cast<std::size_t>(n), -1);

    std::vector<std::string> signature(static_cast<std::size_t>(n));
    // Per vertex: canonical position of every cone vertex, or empty if the
    // labeling was not certified (vertex then pools with nobody).
    std::vector<std::map<int, int>> canon_pos(static_cast<std::size_t>(n));

    for (int v = 0; v < n; ++v) {
        const ConeTemplate past = cone_template(g, v, p, ConeDirection::past);
        const ConeTemplate future = cone_template(g, v, p, ConeDirection::future);
        const CanonResult r = canonical_cone_labeling(g, v, past.offsets, future.offsets);
        if (r.certified) {
            signature[static_cast<std::size_t>(v)] = r.encoding;
            ConeStructure s = make_structure(g, v, past.offsets, future.offsets);
            for (int i = 0; i < s.size(); ++i)
                canon_pos[static_cast<std::size_t>(v)][s.vertices[static_cast<std::size_t>(i)]] =
                    r.canon_index[static_cast<std::size_t>(i)];
        } else {
            signature[static_cast<std::size_t>(v)] = "uncertified:v" + std::to_string(v);
        }

        auto order_cells = [&](std::vector<Offset> cells) {
            if (pooling && !canon_pos[static_cast<std::size_t>(v)].empty()) {
                const auto& pos = canon_pos[static_cast<std::size_t>(v)];
                std::sort(cells.begin(), cells.end(), [&pos](const Offset& a, const Offset& b) {
                    if (a.dt != b.dt) return a.dt < b.dt;
                    return pos.at(a.vertex) < pos.at(b.vertex);
                });
            } else {
                std::sort(cells.begin(), cells.end());
            }
            return cells;
        };

        geo.past_cells[static_cast<std::size_t>(v)] = order_cells(past.offsets);
        geo.future_cells[static_cast<std::size_t>(v)] = order_cells(future.offsets);
        geo.temporal_fringe[static_cast<std::size_t>(v)] =
            order_cells(temporal_fringe_template(g, v, p).offsets);
    }

    for (auto [u, w] : g.edges()) {
        geo.spatial_fringe[{u, w}] = spatial_fringe_template(g, u, w, p).offsets;
        geo.spatial_fringe[{w, u}] = spatial_fringe_template(g, w, u, p).offsets;
    }

    // Group vertices into classes; one class per vertex when pooling is off.
    std::map<std::string, std::vector<int>> groups;
    for (int v = 0; v < n; ++v) {
        const std::string key =
            pooling ? signature[static_cast<std::size_t>(v)] : "v" + std::to_string(v);
        groups[key].push_back(v);
    }
    std::vector<std::pair<int, std::string>> ordering;  // (min member, signature key)
    for (const auto& [key, members] : groups) ordering.emplace_back(members.front(), key);
    std::sort(ordering.begin(), ordering.end());
    for (const auto& [min_member, key] : ordering) {
        VertexClass vc;
        vc.id = static_cast<int>(geo.classes.size());
        vc.signature = pooling ? key : signature[static_cast<std::size_t>(min_member)];
        vc.members = groups[key];
        for (int v : vc.members) geo.class_of_vertex[static_cast<std::size_t>(v)] = vc.id;
        geo.classes.push_back(std::move(vc));
    }

    geo.next_step_position.assign(geo.classes.size(), -1);
    for (const VertexClass& vc : geo.classes) {
        for (int v : vc.members) {
            const auto& cells = geo.future_cells[static_cast<std::size_t>(v)];
            const auto it = std::find(cells.begin(), cells.end(), Offset{v, 1});
            if (it == cells.end())
                throw DataError("geometry: future cone misses the (anchor,+1) cell");
            const int pos = static_cast<int>(it - cells.begin());
            int& slot = geo.next_step_position[static_cast<std::size_t>(vc.id)];
            if (slot == -1) slot = pos;
            else if (slot != pos)
                throw DataError("geometry: inconsistent class alignment");
        }
    }
    return geo;
}

}  // namespace conefield
