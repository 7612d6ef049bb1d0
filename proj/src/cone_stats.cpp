#include "conefield/cone_stats.hpp"

#include <algorithm>
#include <sstream>
#include <thread>

#include "conefield/errors.hpp"

namespace conefield {

bool ConfigCode::packs(int alphabet_size, int length) {
    if (alphabet_size <= 1) return true;
    const std::uint64_t a = static_cast<std::uint64_t>(alphabet_size);
    std::uint64_t max_code = 0;  // a^length - 1, built digit by digit
    for (int i = 0; i < length; ++i) {
        if (max_code > (UINT64_MAX - (a - 1)) / a) return false;
        max_code = max_code * a + (a - 1);
    }
    return true;
}

ConfigCode ConfigCode::from_symbols(std::span<const std::uint8_t> symbols, int alphabet_size) {
    ConfigCode c;
    if (packs(alphabet_size, static_cast<int>(symbols.size()))) {
        c.packed_ = true;
        for (std::uint8_t s : symbols)
            c.word_ = c.word_ * static_cast<std::uint64_t>(alphabet_size) + s;
    } else {
        c.packed_ = false;
        c.bytes_.assign(reinterpret_cast<const char*>(symbols.data()), symbols.size());
    }
    return c;
}

std::vector<std::uint8_t> ConfigCode::symbols(int alphabet_size, int length) const {
    std::vector<std::uint8_t> out(static_cast<std::size_t>(length), 0);
    if (packed_) {
        std::uint64_t w = word_;
        for (int i = length - 1; i >= 0; --i) {
            out[static_cast<std::size_t>(i)] =
                static_cast<std::uint8_t>(w % static_cast<std::uint64_t>(alphabet_size));
            w /= static_cast<std::uint64_t>(alphabet_size);
        }
    } else {
        if (bytes_.size() != static_cast<std::size_t>(length))
            throw DataError("config code: length mismatch");
        for (int i = 0; i < length; ++i)
            out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(bytes_[static_cast<std::size_t>(i)]);
    }
    return out;
}

std::string ConfigCode::to_text(int alphabet_size, int length) const {
    const std::vector<std::uint8_t> syms = symbols(alphabet_size, length);
    std::ostringstream out;
    for (int i = 0; i < length; ++i) {
        if (i) out << ' ';
        out << static_cast<int>(syms[static_cast<std::size_t>(i)]);
    }
    return out.str();
}

ConfigCode ConfigCode::from_text(const std::string& text, int alphabet_size, int length) {
    std::istringstream in(text);
    std::vector<std::uint8_t> syms;
    int v = 0;
    while (in >> v) {
        if (v < 0 || v >= alphabet_size) throw ParseError("config text: symbol out of range");
        syms.push_back(static_cast<std::uint8_t>(v));
    }
    if (!in.eof() || static_cast<int>(syms.size()) != length)
        throw ParseError("config text: expected " + std::to_string(length) + " symbols");
    return from_symbols(syms, alphabet_size);
}

std::optional<std::vector<std::uint8_t>> extract_cone_config(const FieldSeries& f,
                                                             const ConeTemplate& t, Point at) {
    std::vector<std::uint8_t> out;
    out.reserve(t.offsets.size());
    for (const Offset& o : t.offsets) {
        const int time = at.time + o.dt;
        if (time < 0 || time >= f.time_steps) return std::nullopt;
        out.push_back(f.at(time, o.vertex));
    }
    return out;
}

const ClassCounts& ConeDatabase::class_counts(int class_id) const {
    if (class_id < 0 || class_id >= class_count())
        throw DataError("cone database: class id out of range");
    return classes_[static_cast<std::size_t>(class_id)];
}

std::int64_t ConeDatabase::total_mass() const {
    std::int64_t total = 0;
    for (const ClassCounts& c : classes_) total += c.total;
    return total;
}

namespace {

void count_range(const FieldSeries& f, const Geometry& geom, int t_lo, int t_hi,
                 std::vector<ClassCounts>& out) {
    const int pd = geom.params.past_depth;
    const int fd = geom.params.future_depth;
    const int a = f.alphabet_size;
    std::vector<std::uint8_t> buf;
    for (int t = t_lo; t < t_hi; ++t) {
        if (t < pd - 1 || t + fd > f.time_steps - 1) continue;
        for (int v = 0; v < f.vertex_count; ++v) {
            const auto& past_cells = geom.past_cells[static_cast<std::size_t>(v)];
            buf.clear();
            for (const Offset& o : past_cells) buf.push_back(f.at(t + o.dt, o.vertex));
            const ConfigCode past = ConfigCode::from_symbols(buf, a);
            const auto& future_cells = geom.future_cells[static_cast<std::size_t>(v)];
            buf.clear();
            for (const Offset& o : future_cells) buf.push_back(f.at(t + o.dt, o.vertex));
            const ConfigCode future = ConfigCode::from_symbols(buf, a);

            ClassCounts& cc = out[static_cast<std::size_t>(
                geom.class_of_vertex[static_cast<std::size_t>(v)])];
            PastStats& ps = cc.pasts[past];
            ps.total += 1;
            ps.futures[future] += 1;
            cc.total += 1;
        }
    }
}

void merge_counts(std::vector<ClassCounts>& into, const std::vector<ClassCounts>& from) {
    for (std::size_t c = 0; c < from.size(); ++c) {
        into[c].total += from[c].total;
        for (const auto& [past, stats] : from[c].pasts) {
            PastStats& ps = into[c].pasts[past];
            ps.total += stats.total;
            for (const auto& [fut, n] : stats.futures) ps.futures[fut] += n;
        }
    }
}

}  // namespace

ConeDatabase build_cone_database(std::span<const FieldSeries> series, const Geometry& geom,
                                 int threads) {
    if (series.empty()) throw DataError("cone database: no input series");
    const int pd = geom.params.past_depth;
    const int fd = geom.params.future_depth;

    ConeDatabase db;
    db.params_ = geom.params;
    db.pooling_ = geom.pooling;
    db.graph_hash_ = geom.graph.content_hash();
    db.alphabet_size_ = series[0].alphabet_size;
    db.classes_.assign(static_cast<std::size_t>(geom.class_count()), {});
    for (const VertexClass& vc : geom.classes) {
        const int rep = vc.members.front();
        db.past_len_.push_back(geom.past_len(rep));
        db.future_len_.push_back(geom.future_len(rep));
    }

    for (const FieldSeries& f : series) {
        f.validate();
        if (f.vertex_count != geom.graph.vertex_count())
            throw DataError("cone database: field width != graph vertex count");
        if (f.alphabet_size != db.alphabet_size_)
            throw DataError("cone database: series disagree on alphabet size");
        if (f.time_steps < pd + fd)
            throw DataError("cone database: need at least past_depth + future_depth = " +
                            std::to_string(pd + fd) + " time steps, got " +
                            std::to_string(f.time_steps));
        db.series_dims_.emplace_back(f.time_steps, f.vertex_count);

        const int n_threads = std::max(1, std::min(threads, f.time_steps));
        if (n_threads == 1) {
            count_range(f, geom, 0, f.time_steps, db.classes_);
        } else {
            std::vector<std::vector<ClassCounts>> partial(
                static_cast<std::size_t>(n_threads),
                std::vector<ClassCounts>(static_cast<std::size_t>(geom.class_count())));
            std::vector<std::thread> workers;
            const int chunk = (f.time_steps + n_threads - 1) / n_threads;
            for (int w = 0; w < n_threads; ++w) {
                const int lo = w * chunk;
                const int hi = std::min(f.time_steps, lo + chunk);
                workers.emplace_back([&f, &geom, lo, hi, &partial, w] {
                    count_range(f, geom, lo, hi, partial[static_cast<std::size_t>(w)]);
                });
            }
            for (auto& th : workers) th.join();
            for (const auto& p : partial) merge_counts(db.classes_, p);
        }
    }
    return db;
}

ConeDatabase build_cone_database(const FieldSeries& f, const Geometry& geom, int threads) {
    return build_cone_database(std::span<const FieldSeries>(&f, 1), geom, threads);
}

std::vector<std::pair<ConfigCode, double>> conditional_distribution(const ConeDatabase& db,
                                                                    int class_id,
                                                                    const ConfigCode& past) {
    const ClassCounts& cc = db.class_counts(class_id);
    const auto it = cc.pasts.find(past);
    if (it == cc.pasts.end())
        throw NoDataError("conditional distribution: past configuration never observed");
    std::vector<std::pair<ConfigCode, double>> out;
    out.reserve(it->second.futures.size());
    for (const auto& [fut, n] : it->second.futures)
        out.emplace_back(fut, static_cast<double>(n) / static_cast<double>(it->second.total));
    return out;
}

}  // namespace conefield
