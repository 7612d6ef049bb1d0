#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace conefield {

/// Fixed undirected graph. Vertices are 0-indexed; edges are stored
/// normalized (u < v) and sorted. Self-loops and duplicates are rejected.
class Graph {
public:
    Graph() = default;
    Graph(int vertex_count, std::vector<std::pair<int, int>> edges);

    static Graph ring(int n);
    static Graph star(int leaves);

    int vertex_count() const { return vertex_count_; }
    std::size_t edge_count() const { return edges_.size(); }
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }
    const std::vector<int>& neighbors(int v) const;
    bool adjacent(int u, int v) const;
    int degree(int v) const;

    /// Hash of the canonical serialization, independent of input edge order.
    std::uint64_t content_hash() const;

    bool operator==(const Graph& other) const {
        return vertex_count_ == other.vertex_count_ && edges_ == other.edges_;
    }

private:
    int vertex_count_ = 0;
    std::vector<std::pair<int, int>> edges_;
    std::vector<std::vector<int>> adjacency_;
};

/// Parses the text graph format: header `graph <vertex_count>`, then one
/// `<u> <v>` edge per line. `#` starts a comment, blank lines are skipped.
Graph load_graph(std::istream& in);
Graph load_graph_file(const std::string& path);
std::string save_graph(const Graph& g);

inline constexpr int kUnreachable = -1;

/// BFS distances from `source` to every vertex; kUnreachable where no path.
std::vector<int> bfs_distances(const Graph& g, int source);

/// Shortest path length in hops, or kUnreachable.
int graph_distance(const Graph& g, int u, int v);

/// A (vertex, time) coordinate in the space-time lattice.
struct Point {
    int vertex = 0;
    int time = 0;
    bool operator==(const Point&) const = default;
};

/// Propagation speed plus the cone depths used throughout a run. past_depth
/// counts slices including the present one, so past_depth=1 is the minimal
/// legal cone (just the point itself); future_depth counts slices strictly
/// after the present.
struct ConeParams {
    int speed_c = 1;
    int past_depth = 1;
    int future_depth = 1;

    void validate() const;
    bool operator==(const ConeParams&) const = default;
};

/// A cone/fringe element relative to its anchor point: `vertex` is absolute,
/// `dt` is the signed time offset. Canonical order is (dt, vertex) ascending.
struct Offset {
    int vertex = 0;
    int dt = 0;

    friend std::strong_ordering operator<=>(const Offset& a, const Offset& b) {
        if (auto c = a.dt <=> b.dt; c != 0) return c;
        return a.vertex <=> b.vertex;
    }
    bool operator==(const Offset&) const = default;
};

enum class ConeDirection { past, future };

/// The set of space-time offsets a point's past or future cone covers,
/// sorted canonically. Past cones span dt in [-(past_depth-1), 0] and always
/// contain (anchor, 0); future cones span dt in [1, future_depth].
struct ConeTemplate {
    int anchor = 0;
    ConeDirection direction = ConeDirection::past;
    std::vector<Offset> offsets;

    std::size_t size() const { return offsets.size(); }
    bool contains(const Offset& o) const;
};

ConeTemplate cone_template(const Graph& g, int v, const ConeParams& p, ConeDirection dir);

/// Cells of the destination's past cone that are not covered by the source's
/// past cone, expressed relative to the destination point.
struct FringeTemplate {
    bool temporal = true;
    int source_vertex = 0;
    int dest_vertex = 0;
    std::vector<Offset> offsets;
};

FringeTemplate temporal_fringe_template(const Graph& g, int v, const ConeParams& p);
FringeTemplate spatial_fringe_template(const Graph& g, int from, int to, const ConeParams& p);

/// Opaque shape signature. Two templates get equal signatures iff there is a
/// time-offset-preserving bijection of their cone vertices that preserves
/// adjacency within the cone and maps anchor to anchor. Computed by canonical
/// labeling of the cone-induced layered structure; if the search budget is
/// exhausted the signature degrades to a per-vertex token (no pooling).
std::string cone_shape_signature(const ConeTemplate& t, const Graph& g);

/// One pooling class: vertices whose past and future cones are jointly
/// shape-isomorphic.
struct VertexClass {
    int id = 0;
    std::string signature;
    std::vector<int> members;
};

/// Precomputed cone geometry for one (graph, params, pooling) setting.
///
/// past_cells/future_cells give, per vertex, the cone cells in the order
/// configuration tuples are read. With pooling off this is the plain
/// template order (dt, vertex id); with pooling on, members of a class are
/// aligned through the canonical labeling so that position i means the same
/// structural cell in every member's cone, which is what makes their counts
/// poolable.
struct Geometry {
    Graph graph;
    ConeParams params;
    bool pooling = false;

    std::vector<VertexClass> classes;
    std::vector<int> class_of_vertex;

    std::vector<std::vector<Offset>> past_cells;
    std::vector<std::vector<Offset>> future_cells;
    /// Fringe cells for the move (v,t) -> (v,t+1), relative to the destination.
    std::vector<std::vector<Offset>> temporal_fringe;
    /// Fringe cells for the move (u,t) -> (v,t), relative to the destination;
    /// keyed by the directed edge (u, v).
    std::map<std::pair<int, int>, std::vector<Offset>> spatial_fringe;
    /// Per class: index of the (anchor, +1) cell in the future order.
    std::vector<int> next_step_position;

    int class_count() const { return static_cast<int>(classes.size()); }
    int past_len(int v) const { return static_cast<int>(past_cells[v].size()); }
    int future_len(int v) const { return static_cast<int>(future_cells[v].size()); }
};

Geometry build_geometry(const Graph& g, const ConeParams& p, bool pooling);

}  // namespace conefield
