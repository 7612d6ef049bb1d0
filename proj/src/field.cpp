#include "conefield/field.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "conefield/errors.hpp"
#include "conefield/rng.hpp"

namespace conefield {

void FieldSeries::validate() const {
    if (alphabet_size < 1 || alphabet_size > 256)
        throw DataError("field: alphabet_size must be in [1, 256]");
    if (time_steps < 1) throw DataError("field: needs at least one time slice");
    if (vertex_count < 0) throw DataError("field: negative vertex count");
    if (values.size() != static_cast<std::size_t>(time_steps) * static_cast<std::size_t>(vertex_count))
        throw DataError("field: value array is not rectangular");
    for (std::uint8_t s : values)
        if (s >= alphabet_size) throw DataError("field: symbol out of alphabet");
}

FieldSeries load_field(std::istream& in, const Graph& g) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("field parse error line 1: empty input");
    int alphabet = 0;
    {
        std::istringstream header(line);
        std::string word, extra;
        if (!(header >> word >> alphabet) || word != "field" || alphabet < 1 || (header >> extra))
            throw ParseError("field parse error line 1: expected 'field <alphabet_size>'");
        if (alphabet > 256)
            throw ParseError("field parse error line 1: alphabet_size above 256 unsupported");
    }
    FieldSeries f;
    f.alphabet_size = alphabet;
    f.vertex_count = g.vertex_count();
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t first = line.find_first_not_of(" \t\r\n");
        if (first == std::string::npos || line[first] == '#') continue;
        std::istringstream row(line);
        int sym = 0, width = 0;
        while (row >> sym) {
            if (sym < 0 || sym >= alphabet)
                throw ParseError("field parse error line " + std::to_string(lineno) +
                                 ": symbol out of alphabet range");
            if (width >= g.vertex_count())
                throw ParseError("field parse error line " + std::to_string(lineno) +
                                 ": row wider than vertex count");
            f.values.push_back(static_cast<std::uint8_t>(sym));
            ++width;
        }
        if (!row.eof())
            throw ParseError("field parse error line " + std::to_string(lineno) +
                             ": expected decimal symbols");
        if (width != g.vertex_count())
            throw ParseError("field parse error line " + std::to_string(lineno) +
                             ": row width " + std::to_string(width) + " != vertex count " +
                             std::to_string(g.vertex_count()));
        ++f.time_steps;
    }
    if (f.time_steps == 0)
        throw ParseError("field parse error line " + std::to_string(lineno) +
                         ": no data rows");
    f.validate();
    return f;
}

FieldSeries load_field_file(const std::string& path, const Graph& g) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open field file: " + path);
    return load_field(in, g);
}

std::string save_field(const FieldSeries& f) {
    f.validate();
    std::ostringstream out;
    out << "field " << f.alphabet_size << "\n";
    for (int t = 0; t < f.time_steps; ++t) {
        for (int v = 0; v < f.vertex_count; ++v) {
            if (v) out << ' ';
            out << static_cast<int>(f.at(t, v));
        }
        out << "\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Rules
// ---------------------------------------------------------------------------

LocalRule LocalRule::iid(std::vector<double> probs) {
    if (probs.empty() || probs.size() > 256) throw DataError("iid rule: bad alphabet size");
    double total = 0.0;
    for (double p : probs) {
        if (p < 0.0) throw DataError("iid rule: negative probability");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) throw DataError("iid rule: probabilities must sum to 1");
    LocalRule r;
    r.kind_ = Kind::iid;
    r.alphabet_size_ = static_cast<int>(probs.size());
    r.probs_ = std::move(probs);
    return r;
}

namespace {

std::size_t checked_pow(std::size_t base, int exp) {
    std::size_t out = 1;
    for (int i = 0; i < exp; ++i) {
        if (out > (1ULL << 40)) throw DataError("rule table too large");
        out *= base;
    }
    return out;
}

}  // namespace

LocalRule LocalRule::table(int alphabet_size, std::vector<std::uint8_t> entries) {
    if (alphabet_size < 1 || alphabet_size > 256) throw DataError("table rule: bad alphabet size");
    for (std::uint8_t e : entries)
        if (e >= alphabet_size) throw DataError("table rule: entry out of alphabet");
    LocalRule r;
    r.kind_ = Kind::table;
    r.alphabet_size_ = alphabet_size;
    r.entries_ = std::move(entries);
    return r;
}

LocalRule LocalRule::ring_table(int alphabet_size, std::vector<std::uint8_t> entries) {
    if (alphabet_size < 1 || alphabet_size > 256)
        throw DataError("ring table rule: bad alphabet size");
    if (entries.size() != checked_pow(static_cast<std::size_t>(alphabet_size), 3))
        throw DataError("ring table rule: needs alphabet^3 entries");
    for (std::uint8_t e : entries)
        if (e >= alphabet_size) throw DataError("ring table rule: entry out of alphabet");
    LocalRule r;
    r.kind_ = Kind::ring_table;
    r.alphabet_size_ = alphabet_size;
    r.entries_ = std::move(entries);
    return r;
}

LocalRule LocalRule::shift(int alphabet_size) {
    const std::size_t a = static_cast<std::size_t>(alphabet_size);
    std::vector<std::uint8_t> entries(checked_pow(a, 3));
    for (std::size_t left = 0; left < a; ++left)
        for (std::size_t self = 0; self < a; ++self)
            for (std::size_t right = 0; right < a; ++right)
                entries[(left * a + self) * a + right] = static_cast<std::uint8_t>(left);
    return ring_table(alphabet_size, std::move(entries));
}

LocalRule LocalRule::elementary_ca(int code) {
    if (code < 0 || code > 255) throw DataError("elementary CA code must be in [0, 255]");
    std::vector<std::uint8_t> entries(8);
    for (int left = 0; left < 2; ++left)
        for (int self = 0; self < 2; ++self)
            for (int right = 0; right < 2; ++right)
                entries[static_cast<std::size_t>((left << 2) | (self << 1) | right)] =
                    static_cast<std::uint8_t>((code >> ((left << 2) | (self << 1) | right)) & 1);
    return ring_table(2, std::move(entries));
}

LocalRule LocalRule::with_flip_probability(double epsilon) const {
    if (kind_ == Kind::iid) throw DataError("flip probability applies to table rules only");
    if (epsilon < 0.0 || epsilon > 1.0) throw DataError("flip probability must be in [0, 1]");
    LocalRule r(*this);
    r.epsilon_ = epsilon;
    return r;
}

void LocalRule::validate_for_graph(const Graph& g) const {
    switch (kind_) {
        case Kind::iid:
            return;
        case Kind::table: {
            if (g.vertex_count() == 0) throw DataError("table rule: empty graph");
            const int deg = g.degree(0);
            for (int v = 1; v < g.vertex_count(); ++v) {
                if (g.degree(v) != deg)
                    throw DataError(
                        "table rule requires constant degree; vertex " + std::to_string(v) +
                        " has degree " + std::to_string(g.degree(v)) + " != " +
                        std::to_string(deg));
            }
            const std::size_t expected =
                checked_pow(static_cast<std::size_t>(alphabet_size_), deg + 1);
            if (entries_.size() != expected)
                throw DataError("table rule: entry count " + std::to_string(entries_.size()) +
                                " does not cover every neighborhood configuration (" +
                                std::to_string(expected) + " needed)");
            return;
        }
        case Kind::ring_table:
            ring_orientation(g);
            return;
    }
}

RingOrientation ring_orientation(const Graph& g) {
    const int n = g.vertex_count();
    if (n < 3) throw DataError("ring orientation: need at least 3 vertices");
    for (int v = 0; v < n; ++v)
        if (g.degree(v) != 2)
            throw DataError("ring orientation: vertex " + std::to_string(v) +
                            " does not have degree 2");
    RingOrientation o;
    o.next.assign(static_cast<std::size_t>(n), -1);
    o.prev.assign(static_cast<std::size_t>(n), -1);
    int prev = 0;
    int cur = g.neighbors(0)[0];
    o.next[0] = cur;
    o.prev[static_cast<std::size_t>(cur)] = 0;
    int visited = 1;
    while (cur != 0) {
        const auto& nbrs = g.neighbors(cur);
        const int nxt = (nbrs[0] == prev) ? nbrs[1] : nbrs[0];
        o.next[static_cast<std::size_t>(cur)] = nxt;
        o.prev[static_cast<std::size_t>(nxt)] = cur;
        prev = cur;
        cur = nxt;
        if (++visited > n) break;
    }
    if (visited != n) throw DataError("ring orientation: graph is not a single cycle");
    return o;
}

FieldSeries simulate(const Graph& g, const LocalRule& rule, const SimConfig& cfg) {
    if (cfg.steps < 1) throw DataError("simulate: steps must be >= 1");
    rule.validate_for_graph(g);
    const int n = g.vertex_count();
    const int a = rule.alphabet_size();

    FieldSeries f;
    f.alphabet_size = a;
    f.time_steps = cfg.steps;
    f.vertex_count = n;
    f.values.assign(static_cast<std::size_t>(cfg.steps) * static_cast<std::size_t>(n), 0);

    std::vector<double> init = cfg.init_probs;
    if (init.empty()) {
        // The iid rule defines the whole process, so it seeds its own slice;
        // other rules start from a uniform draw unless told otherwise.
        if (rule.kind() == LocalRule::Kind::iid) init = rule.probs();
        else init.assign(static_cast<std::size_t>(a), 1.0 / a);
    }
    if (static_cast<int>(init.size()) != a)
        throw DataError("simulate: init distribution size != alphabet");

    if (cfg.init_row) {
        if (static_cast<int>(cfg.init_row->size()) != n)
            throw DataError("simulate: explicit initial slice has wrong width");
        for (int v = 0; v < n; ++v) {
            if ((*cfg.init_row)[static_cast<std::size_t>(v)] >= a)
                throw DataError("simulate: initial slice symbol out of alphabet");
            f.set(0, v, (*cfg.init_row)[static_cast<std::size_t>(v)]);
        }
    } else {
        for (int v = 0; v < n; ++v) {
            SplitMix64 rng(stream_seed(cfg.seed, 0, static_cast<std::uint64_t>(v)));
            f.set(0, v, static_cast<std::uint8_t>(draw_discrete(init, rng)));
        }
    }

    std::optional<RingOrientation> ring;
    if (rule.kind() == LocalRule::Kind::ring_table) ring = ring_orientation(g);

    for (int t = 1; t < cfg.steps; ++t) {
        for (int v = 0; v < n; ++v) {
            SplitMix64 rng(stream_seed(cfg.seed, static_cast<std::uint64_t>(t),
                                       static_cast<std::uint64_t>(v)));
            std::uint8_t out = 0;
            switch (rule.kind()) {
                case LocalRule::Kind::iid:
                    out = static_cast<std::uint8_t>(draw_discrete(rule.probs(), rng));
                    break;
                case LocalRule::Kind::table: {
                    std::size_t idx = f.at(t - 1, v);
                    for (int w : g.neighbors(v))
                        idx = idx * static_cast<std::size_t>(a) + f.at(t - 1, w);
                    out = rule.entries()[idx];
                    break;
                }
                case LocalRule::Kind::ring_table: {
                    const std::size_t left = f.at(t - 1, ring->prev[static_cast<std::size_t>(v)]);
                    const std::size_t self = f.at(t - 1, v);
                    const std::size_t right = f.at(t - 1, ring->next[static_cast<std::size_t>(v)]);
                    out = rule.entries()[(left * static_cast<std::size_t>(a) + self) *
                                             static_cast<std::size_t>(a) +
                                         right];
                    break;
                }
            }
            if (rule.flip_probability() > 0.0 && rule.kind() != LocalRule::Kind::iid) {
                if (rng.next_unit() < rule.flip_probability()) {
                    out = static_cast<std::uint8_t>(
                        (out + 1 + rng.next_below(static_cast<std::uint64_t>(a - 1))) % a);
                }
            }
            f.set(t, v, out);
        }
    }
    return f;
}

}  // namespace conefield
