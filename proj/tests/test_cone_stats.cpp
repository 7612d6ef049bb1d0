#include <doctest.h>

#include <map>

#include "conefield/cone_stats.hpp"
#include "conefield/errors.hpp"
#include "support.hpp"

using namespace conefield;

TEST_CASE("config codes") {
    CHECK(ConfigCode::packs(2, 64));
    CHECK(!ConfigCode::packs(2, 65));
    CHECK(ConfigCode::packs(256, 8));
    CHECK(!ConfigCode::packs(256, 9));
    CHECK(ConfigCode::packs(1, 1000));

    const std::vector<std::uint8_t> syms{1, 0, 2};
    const ConfigCode c = ConfigCode::from_symbols(syms, 3);
    CHECK(c.symbols(3, 3) == syms);
    CHECK(c.to_text(3, 3) == "1 0 2");
    CHECK(ConfigCode::from_text("1 0 2", 3, 3) == c);
    CHECK_THROWS_AS(ConfigCode::from_text("1 0", 3, 3), ParseError);
    CHECK_THROWS_AS(ConfigCode::from_text("1 0 5", 3, 3), ParseError);

    // Lexicographic order is preserved by the packed encoding.
    const ConfigCode a = ConfigCode::from_symbols(std::vector<std::uint8_t>{0, 1, 1}, 2);
    const ConfigCode b = ConfigCode::from_symbols(std::vector<std::uint8_t>{1, 0, 0}, 2);
    CHECK(a < b);

    // Long configs fall back to byte strings and round-trip the same way.
    std::vector<std::uint8_t> long_syms(70, 0);
    long_syms[69] = 1;
    const ConfigCode big = ConfigCode::from_symbols(long_syms, 2);
    CHECK(big.symbols(2, 70) == long_syms);
}

TEST_CASE("extract cone config") {
    const Graph g = Graph::ring(5);
    ConeParams p{1, 2, 1};
    const ConeTemplate past = cone_template(g, 0, p, ConeDirection::past);

    FieldSeries zeros;
    zeros.alphabet_size = 2;
    zeros.time_steps = 4;
    zeros.vertex_count = 5;
    zeros.values.assign(20, 0);
    const auto cfg = extract_cone_config(zeros, past, {0, 2});
    REQUIRE(cfg.has_value());
    CHECK(cfg->size() == past.size());
    for (std::uint8_t s : *cfg) CHECK(s == 0);

    // Past cone leaves the data at t=0 with depth 2.
    CHECK(!extract_cone_config(zeros, past, {0, 0}).has_value());
    CHECK(extract_cone_config(zeros, past, {0, 1}).has_value());

    // The (v, 0) cell reads the value at the point itself.
    SimConfig sim;
    sim.steps = 6;
    sim.seed = 9;
    const FieldSeries shift = simulate(g, LocalRule::shift(2), sim);
    for (int t = 1; t < 6; ++t) {
        const auto c = extract_cone_config(shift, past, {0, t});
        REQUIRE(c.has_value());
        CHECK(c->back() == shift.at(t, 0));  // (v,0) is last in canonical order
    }
}

TEST_CASE("build cone database: basics") {
    const Graph g = Graph::ring(6);
    ConeParams p{1, 1, 1};
    const Geometry geom = build_geometry(g, p, false);

    SimConfig sim;
    sim.steps = 400;
    sim.seed = 4;
    const FieldSeries f = simulate(g, LocalRule::iid({0.5, 0.5}), sim);
    const ConeDatabase db = build_cone_database(f, geom, 1);

    // One-point past cone: exactly the two symbols appear as pasts.
    for (int c = 0; c < db.class_count(); ++c) {
        CHECK(db.class_counts(c).pasts.size() == 2);
        CHECK(db.past_len(c) == 1);
        CHECK(db.future_len(c) == 3);
    }
    // Total mass counts interior points: t in [0, T-2].
    CHECK(db.total_mass() == static_cast<std::int64_t>(399) * 6);
}

TEST_CASE("build cone database: constant field and pooled count") {
    const Graph g = Graph::ring(6);
    ConeParams p{1, 2, 1};
    const Geometry pooled = build_geometry(g, p, true);

    SimConfig sim;
    sim.steps = 100;
    sim.seed = 0;
    const FieldSeries f = simulate(g, LocalRule::iid({1.0, 0.0}), sim);
    const ConeDatabase db = build_cone_database(f, pooled, 1);
    REQUIRE(db.class_count() == 1);
    const ClassCounts& cc = db.class_counts(0);
    CHECK(cc.pasts.size() == 1);
    CHECK(cc.pasts.begin()->second.futures.size() == 1);
    // (T - past_depth - future_depth + 1) * V on a vertex-transitive graph.
    CHECK(cc.pasts.begin()->second.total == static_cast<std::int64_t>(100 - 2 - 1 + 1) * 6);
}

TEST_CASE("build cone database: errors") {
    const Graph g = Graph::ring(6);
    ConeParams p{1, 2, 2};
    const Geometry geom = build_geometry(g, p, false);

    FieldSeries tiny;
    tiny.alphabet_size = 2;
    tiny.time_steps = 3;  // needs past_depth + future_depth = 4
    tiny.vertex_count = 6;
    tiny.values.assign(18, 0);
    CHECK_THROWS_AS(build_cone_database(tiny, geom, 1), DataError);

    FieldSeries wrong;
    wrong.alphabet_size = 2;
    wrong.time_steps = 10;
    wrong.vertex_count = 5;
    wrong.values.assign(50, 0);
    CHECK_THROWS_AS(build_cone_database(wrong, geom, 1), DataError);

    CHECK_THROWS_AS(build_cone_database(std::span<const FieldSeries>{}, geom, 1), DataError);
}

TEST_CASE("conditional distribution") {
    const Graph g = Graph::ring(6);
    ConeParams p{1, 2, 1};
    const Geometry geom = build_geometry(g, p, false);
    SimConfig sim;
    sim.steps = 500;
    sim.seed = 12;
    const FieldSeries f = simulate(g, LocalRule::shift(2), sim);
    const ConeDatabase db = build_cone_database(f, geom, 1);

    const ClassCounts& cc = db.class_counts(0);
    for (const auto& [past, stats] : cc.pasts) {
        const auto dist = conditional_distribution(db, 0, past);
        double total = 0.0;
        for (const auto& [fut, prob] : dist) {
            CHECK(prob > 0.0);
            total += prob;
        }
        CHECK(total == doctest::Approx(1.0));
    }
    // Hand construction: futures {A:3, B:1} normalizes to 0.75 / 0.25.
    {
        const std::map<ConfigCode, std::int64_t>& futs = cc.pasts.begin()->second.futures;
        (void)futs;
        std::vector<std::uint8_t> unseen(geom.past_len(0), 1);
        unseen[0] = 0;
        ConfigCode missing = ConfigCode::from_symbols(unseen, 2);
        if (!cc.pasts.count(missing))
            CHECK_THROWS_AS(conditional_distribution(db, 0, missing), NoDataError);
    }
    CHECK_THROWS_AS(conditional_distribution(db, 99, cc.pasts.begin()->first), DataError);
}

TEST_CASE("parallel counting merges to the serial result") {
    const Graph g = testing::make_random_connected_graph(10, 0.3, 17);
    ConeParams p{1, 2, 1};
    const Geometry geom = build_geometry(g, p, false);
    SimConfig sim;
    sim.steps = 600;
    sim.seed = 3;
    const FieldSeries f = simulate(g, LocalRule::iid({0.25, 0.75}), sim);

    const ConeDatabase serial = build_cone_database(f, geom, 1);
    const ConeDatabase parallel = build_cone_database(f, geom, 4);
    REQUIRE(serial.class_count() == parallel.class_count());
    for (int c = 0; c < serial.class_count(); ++c) {
        const ClassCounts& a = serial.class_counts(c);
        const ClassCounts& b = parallel.class_counts(c);
        CHECK(a.total == b.total);
        REQUIRE(a.pasts.size() == b.pasts.size());
        auto ia = a.pasts.begin();
        auto ib = b.pasts.begin();
        for (; ia != a.pasts.end(); ++ia, ++ib) {
            CHECK(ia->first == ib->first);
            CHECK(ia->second.total == ib->second.total);
            CHECK(ia->second.futures == ib->second.futures);
        }
    }
}

TEST_CASE("pooling on equals per-vertex databases summed through the alignment") {
    const Graph g = Graph::ring(6);
    ConeParams p{1, 2, 1};
    const Geometry pooled = build_geometry(g, p, true);
    const Geometry separate = build_geometry(g, p, false);
    REQUIRE(pooled.class_count() == 1);

    SimConfig sim;
    sim.steps = 300;
    sim.seed = 8;
    const FieldSeries f = simulate(g, LocalRule::elementary_ca(110), sim);

    const ConeDatabase db_pooled = build_cone_database(f, pooled, 1);
    const ConeDatabase db_off = build_cone_database(f, separate, 1);

    // Re-key each per-vertex table into the pooled class's cell order.
    auto remap = [&](int v, const ConfigCode& code, bool past) {
        const auto& from = past ? separate.past_cells[static_cast<std::size_t>(v)]
                                : separate.future_cells[static_cast<std::size_t>(v)];
        const auto& to = past ? pooled.past_cells[static_cast<std::size_t>(v)]
                              : pooled.future_cells[static_cast<std::size_t>(v)];
        const std::vector<std::uint8_t> syms =
            code.symbols(2, static_cast<int>(from.size()));
        std::map<Offset, std::uint8_t> by_cell;
        for (std::size_t i = 0; i < from.size(); ++i) by_cell[from[i]] = syms[i];
        std::vector<std::uint8_t> out;
        for (const Offset& o : to) out.push_back(by_cell.at(o));
        return ConfigCode::from_symbols(out, 2);
    };

    std::map<ConfigCode, std::map<ConfigCode, std::int64_t>> summed;
    for (int v = 0; v < 6; ++v) {
        const ClassCounts& cc = db_off.class_counts(v);
        for (const auto& [past, stats] : cc.pasts) {
            const ConfigCode pooled_past = remap(v, past, true);
            for (const auto& [fut, n] : stats.futures)
                summed[pooled_past][remap(v, fut, false)] += n;
        }
    }

    const ClassCounts& target = db_pooled.class_counts(0);
    REQUIRE(summed.size() == target.pasts.size());
    for (const auto& [past, stats] : target.pasts) {
        REQUIRE(summed.count(past));
        CHECK(summed.at(past) == stats.futures);
    }
}
