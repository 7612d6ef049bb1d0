#include <doctest.h>

#include <set>
#include <sstream>

#include "conefield/errors.hpp"
#include "conefield/graph.hpp"
#include "support.hpp"

using namespace conefield;

namespace {

// Independent distance oracle: grow reachability sets one hop at a time.
int frontier_distance(const Graph& g, int u, int v) {
    if (u == v) return 0;
    std::set<int> reached{u};
    std::set<int> frontier{u};
    for (int k = 1; k <= g.vertex_count(); ++k) {
        std::set<int> next;
        for (int w : frontier)
            for (int x : g.neighbors(w))
                if (!reached.count(x)) next.insert(x);
        if (next.count(v)) return k;
        if (next.empty()) return kUnreachable;
        reached.insert(next.begin(), next.end());
        frontier = std::move(next);
    }
    return kUnreachable;
}

std::set<Offset> brute_cone(const Graph& g, int v, const ConeParams& p, ConeDirection dir) {
    std::set<Offset> cells;
    if (dir == ConeDirection::past) {
        for (int tau = 0; tau < p.past_depth; ++tau)
            for (int u = 0; u < g.vertex_count(); ++u) {
                const int d = frontier_distance(g, u, v);
                if (d != kUnreachable && d <= p.speed_c * tau) cells.insert({u, -tau});
            }
    } else {
        for (int tau = 1; tau <= p.future_depth; ++tau)
            for (int u = 0; u < g.vertex_count(); ++u) {
                const int d = frontier_distance(g, v, u);
                if (d != kUnreachable && d <= p.speed_c * tau) cells.insert({u, tau});
            }
    }
    return cells;
}

}  // namespace

TEST_CASE("graph parsing") {
    std::istringstream ok("graph 3\n0 1\n1 2\n");
    const Graph g = load_graph(ok);
    CHECK(g.vertex_count() == 3);
    CHECK(g.edges() == std::vector<std::pair<int, int>>{{0, 1}, {1, 2}});

    std::istringstream self_loop("graph 2\n0 0\n");
    CHECK_THROWS_AS(load_graph(self_loop), ParseError);
    std::istringstream out_of_range("graph 2\n0 5\n");
    CHECK_THROWS_AS(load_graph(out_of_range), ParseError);
    std::istringstream duplicate("graph 3\n0 1\n1 0\n");
    CHECK_THROWS_AS(load_graph(duplicate), ParseError);
    std::istringstream junk("graph 3\n0 1 2\n");
    CHECK_THROWS_AS(load_graph(junk), ParseError);
    std::istringstream empty("");
    CHECK_THROWS_AS(load_graph(empty), ParseError);

    std::istringstream comments("graph 3\n# a comment\n\n0 1   \n");
    CHECK(load_graph(comments).edge_count() == 1);

    // Error messages carry the line number.
    std::istringstream late_error("graph 4\n0 1\n1 2\n2 2\n");
    try {
        load_graph(late_error);
        CHECK(false);
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    }
}

TEST_CASE("graph save/load round trip and content hash") {
    const Graph g = testing::make_random_connected_graph(12, 0.3, 99);
    std::istringstream in(save_graph(g));
    const Graph h = load_graph(in);
    CHECK(g == h);
    CHECK(g.content_hash() == h.content_hash());
    CHECK(g.content_hash() != Graph::ring(5).content_hash());
}

TEST_CASE("graph distance") {
    const Graph ring5 = Graph::ring(5);
    CHECK(graph_distance(ring5, 0, 2) == 2);
    for (int v = 0; v < 5; ++v) CHECK(graph_distance(ring5, v, v) == 0);

    Graph disconnected(4, {{0, 1}, {2, 3}});
    CHECK(graph_distance(disconnected, 0, 3) == kUnreachable);
    CHECK(graph_distance(disconnected, 0, 1) == 1);

    const Graph g = testing::make_random_connected_graph(10, 0.25, 7);
    for (int u = 0; u < 10; ++u)
        for (int v = 0; v < 10; ++v)
            CHECK(graph_distance(g, u, v) == frontier_distance(g, u, v));
}

TEST_CASE("cone templates") {
    const Graph ring5 = Graph::ring(5);
    ConeParams p{1, 2, 1};

    const ConeTemplate past = cone_template(ring5, 0, p, ConeDirection::past);
    CHECK(past.offsets == std::vector<Offset>{{0, -1}, {1, -1}, {4, -1}, {0, 0}});
    CHECK(past.size() == 4);

    const ConeTemplate fut = cone_template(ring5, 0, p, ConeDirection::future);
    CHECK(fut.offsets == std::vector<Offset>{{0, 1}, {1, 1}, {4, 1}});

    const Graph isolated(1, {});
    for (int depth : {1, 2, 5}) {
        ConeParams q{1, depth, 1};
        const ConeTemplate t = cone_template(isolated, 0, q, ConeDirection::past);
        CHECK(static_cast<int>(t.size()) == depth);
        for (const Offset& o : t.offsets) CHECK(o.vertex == 0);
    }

    // Brute-force agreement on random graphs, including c=2.
    const Graph g = testing::make_random_connected_graph(9, 0.25, 3);
    for (int c : {1, 2}) {
        for (int v = 0; v < g.vertex_count(); ++v) {
            ConeParams q{c, 3, 2};
            const ConeTemplate tp = cone_template(g, v, q, ConeDirection::past);
            const ConeTemplate tf = cone_template(g, v, q, ConeDirection::future);
            CHECK(std::set<Offset>(tp.offsets.begin(), tp.offsets.end()) ==
                  brute_cone(g, v, q, ConeDirection::past));
            CHECK(std::set<Offset>(tf.offsets.begin(), tf.offsets.end()) ==
                  brute_cone(g, v, q, ConeDirection::future));
            CHECK(std::is_sorted(tp.offsets.begin(), tp.offsets.end()));
            CHECK(std::is_sorted(tf.offsets.begin(), tf.offsets.end()));
        }
    }
}

TEST_CASE("cone template invariants") {
    const Graph g = testing::make_random_connected_graph(11, 0.3, 5);
    for (int v = 0; v < g.vertex_count(); ++v) {
        ConeParams p{1, 3, 2};
        const ConeTemplate past = cone_template(g, v, p, ConeDirection::past);
        CHECK(past.contains({v, 0}));
        const ConeTemplate fut = cone_template(g, v, p, ConeDirection::future);
        for (const Offset& o : fut.offsets) CHECK(o.dt >= 1);

        // Monotonicity in past_depth and speed.
        ConeParams deeper{1, 4, 2};
        const ConeTemplate past2 = cone_template(g, v, deeper, ConeDirection::past);
        for (const Offset& o : past.offsets) CHECK(past2.contains(o));
        ConeParams faster{2, 3, 2};
        const ConeTemplate past3 = cone_template(g, v, faster, ConeDirection::past);
        for (const Offset& o : past.offsets) CHECK(past3.contains(o));
    }
}

TEST_CASE("fringe templates") {
    const Graph ring5 = Graph::ring(5);
    ConeParams p{1, 2, 1};

    const FringeTemplate tf = temporal_fringe_template(ring5, 0, p);
    // New cells of the destination cone: its latest slice edges plus itself.
    CHECK(tf.offsets == std::vector<Offset>{{1, -1}, {4, -1}, {0, 0}});

    // Brute set-difference oracle.
    {
        const std::set<Offset> dest = brute_cone(ring5, 0, p, ConeDirection::past);
        std::set<Offset> translated;
        for (const Offset& o : dest) translated.insert({o.vertex, o.dt - 1});
        std::set<Offset> expect;
        for (const Offset& o : dest)
            if (!translated.count(o)) expect.insert(o);
        CHECK(std::set<Offset>(tf.offsets.begin(), tf.offsets.end()) == expect);
    }

    const Graph isolated(1, {});
    const FringeTemplate iso = temporal_fringe_template(isolated, 0, ConeParams{1, 3, 1});
    CHECK(iso.offsets == std::vector<Offset>{{0, 0}});

    const FringeTemplate sp = spatial_fringe_template(ring5, 0, 1, p);
    {
        const std::set<Offset> dest = brute_cone(ring5, 1, p, ConeDirection::past);
        const std::set<Offset> src = brute_cone(ring5, 0, p, ConeDirection::past);
        std::set<Offset> expect;
        for (const Offset& o : dest)
            if (!src.count(o)) expect.insert(o);
        CHECK(std::set<Offset>(sp.offsets.begin(), sp.offsets.end()) == expect);
    }
    CHECK_THROWS_AS(spatial_fringe_template(ring5, 0, 2, p), DataError);

    // Fringe cells are disjoint from the source cone seen from the destination.
    const Graph g = testing::make_random_connected_graph(8, 0.35, 11);
    for (int v = 0; v < g.vertex_count(); ++v) {
        ConeParams q{1, 3, 1};
        const ConeTemplate src = cone_template(g, v, q, ConeDirection::past);
        const FringeTemplate fr = temporal_fringe_template(g, v, q);
        for (const Offset& o : fr.offsets) CHECK(!src.contains({o.vertex, o.dt + 1}));
    }
}

TEST_CASE("cone shape signatures") {
    const Graph ring6 = Graph::ring(6);
    ConeParams p{1, 2, 1};
    const std::string sig0 =
        cone_shape_signature(cone_template(ring6, 0, p, ConeDirection::past), ring6);
    for (int v = 1; v < 6; ++v)
        CHECK(cone_shape_signature(cone_template(ring6, v, p, ConeDirection::past), ring6) == sig0);

    const Graph star = Graph::star(4);
    const std::string center =
        cone_shape_signature(cone_template(star, 0, p, ConeDirection::past), star);
    const std::string leaf =
        cone_shape_signature(cone_template(star, 1, p, ConeDirection::past), star);
    CHECK(center != leaf);
    CHECK(cone_shape_signature(cone_template(star, 2, p, ConeDirection::past), star) == leaf);

    const Graph single(1, {});
    const ConeTemplate t = cone_template(single, 0, p, ConeDirection::past);
    CHECK(cone_shape_signature(t, single) == cone_shape_signature(t, single));

    // Equal signatures imply equal per-slice sizes.
    const Graph g = testing::make_random_connected_graph(10, 0.3, 13);
    std::map<std::string, std::map<int, int>> slice_sizes;
    for (int v = 0; v < g.vertex_count(); ++v) {
        const ConeTemplate tv = cone_template(g, v, p, ConeDirection::past);
        std::map<int, int> sizes;
        for (const Offset& o : tv.offsets) sizes[o.dt] += 1;
        const std::string sig = cone_shape_signature(tv, g);
        if (slice_sizes.count(sig)) CHECK(slice_sizes[sig] == sizes);
        slice_sizes[sig] = sizes;
    }
}

TEST_CASE("geometry classes and alignment") {
    const Graph ring6 = Graph::ring(6);
    ConeParams p{1, 2, 1};

    const Geometry pooled = build_geometry(ring6, p, true);
    CHECK(pooled.class_count() == 1);
    CHECK(pooled.classes[0].members == std::vector<int>{0, 1, 2, 3, 4, 5});

    const Geometry off = build_geometry(ring6, p, false);
    CHECK(off.class_count() == 6);
    for (int v = 0; v < 6; ++v) {
        CHECK(off.class_of_vertex[static_cast<std::size_t>(v)] == v);
        CHECK(off.past_cells[static_cast<std::size_t>(v)].size() == 4);
        CHECK(off.future_cells[static_cast<std::size_t>(v)].size() == 3);
        CHECK(std::is_sorted(off.past_cells[static_cast<std::size_t>(v)].begin(),
                             off.past_cells[static_cast<std::size_t>(v)].end()));
    }

    const Graph star = Graph::star(5);
    const Geometry star_geom = build_geometry(star, p, true);
    CHECK(star_geom.class_count() == 2);  // center and leaves

    // Class alignment: every member's cells at one position share dt, and the
    // anchor occupies the same position in each member's ordering.
    for (const Geometry& geom : {pooled, star_geom}) {
        for (const VertexClass& vc : geom.classes) {
            const int rep = vc.members.front();
            for (int v : vc.members) {
                const auto& rep_cells = geom.past_cells[static_cast<std::size_t>(rep)];
                const auto& v_cells = geom.past_cells[static_cast<std::size_t>(v)];
                REQUIRE(rep_cells.size() == v_cells.size());
                for (std::size_t i = 0; i < rep_cells.size(); ++i) {
                    CHECK(rep_cells[i].dt == v_cells[i].dt);
                    CHECK((rep_cells[i].vertex == rep) == (v_cells[i].vertex == v));
                }
            }
        }
    }
}

TEST_CASE("cone params validation") {
    CHECK_THROWS_AS((ConeParams{0, 1, 1}.validate()), DataError);
    CHECK_THROWS_AS((ConeParams{1, 0, 1}.validate()), DataError);
    CHECK_THROWS_AS((ConeParams{1, 1, 0}.validate()), DataError);
    CHECK_NOTHROW((ConeParams{1, 1, 1}.validate()));
}
