#include "conefield/serialize.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <istream>
#include <sstream>

#include "conefield/errors.hpp"
#include "conefield/rng.hpp"

namespace conefield {

using nlohmann::json;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path);
    out << content;
}

std::string hash_hex(const std::string& content) {
    return hash_hex(fnv1a64(std::span<const char>(content.data(), content.size())));
}

std::string hash_hex(std::uint64_t h) {
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

json test_config_to_json(const TestConfig& cfg) {
    return json{{"alpha", cfg.alpha},
                {"method", cfg.method == TestConfig::Method::chi_squared ? "chi2" : "permutation"},
                {"n_permutations", cfg.n_permutations},
                {"min_expected", cfg.min_expected}};
}

TestConfig test_config_from_json(const json& j) {
    TestConfig cfg;
    cfg.alpha = j.at("alpha").get<double>();
    const std::string method = j.at("method").get<std::string>();
    if (method == "chi2") cfg.method = TestConfig::Method::chi_squared;
    else if (method == "permutation") cfg.method = TestConfig::Method::permutation;
    else throw DataError("unknown test method: " + method);
    cfg.n_permutations = j.at("n_permutations").get<int>();
    cfg.min_expected = j.at("min_expected").get<double>();
    return cfg;
}

json cone_params_to_json(const ConeParams& p) {
    return json{{"speed_c", p.speed_c},
                {"past_depth", p.past_depth},
                {"future_depth", p.future_depth}};
}

ConeParams cone_params_from_json(const json& j) {
    ConeParams p;
    p.speed_c = j.at("speed_c").get<int>();
    p.past_depth = j.at("past_depth").get<int>();
    p.future_depth = j.at("future_depth").get<int>();
    p.validate();
    return p;
}

json state_set_to_json(const StateSet& s) {
    json classes = json::array();
    for (std::size_t c = 0; c < s.classes.size(); ++c) {
        json states = json::array();
        for (const CausalState& st : s.classes[c].states) {
            json members = json::array();
            for (const ConfigCode& past : st.members)
                members.push_back(past.to_text(s.alphabet_size, s.past_len[c]));
            json futures = json::object();
            for (const auto& [fut, n] : st.futures)
                futures[fut.to_text(s.alphabet_size, s.future_len[c])] = n;
            states.push_back(json{{"id", st.id},
                                  {"members", members},
                                  {"futures", futures},
                                  {"total", st.total}});
        }
        classes.push_back(json{{"class_id", static_cast<int>(c)},
                               {"past_len", s.past_len[c]},
                               {"future_len", s.future_len[c]},
                               {"states", states}});
    }
    return json{{"alphabet_size", s.alphabet_size},
                {"params", cone_params_to_json(s.params)},
                {"pooling", s.pooling},
                {"classes", classes},
                {"provenance",
                 json{{"tool", kToolName},
                      {"version", kToolVersion},
                      {"method", s.method},
                      {"test", test_config_to_json(s.test)},
                      {"seed", s.seed},
                      {"refined", s.refined},
                      {"source_db_hash", hash_hex(s.source_db_hash)},
                      {"graph_hash", hash_hex(s.graph_hash)}}}};
}

namespace {

std::uint64_t hex_to_u64(const std::string& hex) {
    return std::stoull(hex, nullptr, 16);
}

}  // namespace

StateSet state_set_from_json(const json& j) {
    StateSet s;
    s.alphabet_size = j.at("alphabet_size").get<int>();
    s.params = cone_params_from_json(j.at("params"));
    s.pooling = j.at("pooling").get<bool>();
    const json& prov = j.at("provenance");
    s.method = prov.at("method").get<std::string>();
    s.test = test_config_from_json(prov.at("test"));
    s.seed = prov.at("seed").get<std::uint64_t>();
    s.refined = prov.at("refined").get<bool>();
    s.source_db_hash = hex_to_u64(prov.at("source_db_hash").get<std::string>());
    s.graph_hash = hex_to_u64(prov.at("graph_hash").get<std::string>());

    for (const json& jc : j.at("classes")) {
        const int past_len = jc.at("past_len").get<int>();
        const int future_len = jc.at("future_len").get<int>();
        s.past_len.push_back(past_len);
        s.future_len.push_back(future_len);
        ClassStates cs;
        for (const json& js : jc.at("states")) {
            CausalState st;
            st.id = js.at("id").get<int>();
            if (st.id != static_cast<int>(cs.states.size()))
                throw DataError("state set json: non-contiguous state ids");
            for (const json& jm : js.at("members"))
                st.members.push_back(
                    ConfigCode::from_text(jm.get<std::string>(), s.alphabet_size, past_len));
            for (const auto& [key, value] : js.at("futures").items())
                st.futures[ConfigCode::from_text(key, s.alphabet_size, future_len)] =
                    value.get<std::int64_t>();
            st.total = js.at("total").get<std::int64_t>();
            std::int64_t check = 0;
            for (const auto& [fut, n] : st.futures) check += n;
            if (check != st.total)
                throw DataError("state set json: state total does not match future counts");
            cs.states.push_back(std::move(st));
        }
        for (CausalState& st : cs.states) {
            std::sort(st.members.begin(), st.members.end());
            for (const ConfigCode& past : st.members) {
                if (!cs.state_of_past.emplace(past, st.id).second)
                    throw DataError("state set json: past assigned to two states");
            }
        }
        s.classes.push_back(std::move(cs));
    }
    return s;
}

json database_to_json(const ConeDatabase& db, const Geometry& geom) {
    json classes = json::array();
    for (int c = 0; c < db.class_count(); ++c) {
        const ClassCounts& counts = db.class_counts(c);
        json pasts = json::array();
        for (const auto& [past, stats] : counts.pasts) {
            json futures = json::array();
            for (const auto& [fut, n] : stats.futures)
                futures.push_back(json{
                    {"config", fut.to_text(db.alphabet_size(), db.future_len(c))},
                    {"count", n}});
            pasts.push_back(json{{"config", past.to_text(db.alphabet_size(), db.past_len(c))},
                                 {"total", stats.total},
                                 {"futures", futures}});
        }
        const VertexClass& vc = geom.classes[static_cast<std::size_t>(c)];
        classes.push_back(json{{"class_id", c},
                               {"signature", vc.signature},
                               {"members", vc.members},
                               {"total", counts.total},
                               {"pasts", pasts}});
    }
    json series = json::array();
    for (auto [t, v] : db.series_dims()) series.push_back(json{{"time_steps", t}, {"vertices", v}});
    return json{{"params",
                 json{{"speed_c", db.params().speed_c},
                      {"past_depth", db.params().past_depth},
                      {"future_depth", db.params().future_depth},
                      {"pooling", db.pooling()},
                      {"alphabet_size", db.alphabet_size()},
                      {"graph_hash", hash_hex(db.graph_hash())},
                      {"series", series}}},
                {"classes", classes}};
}

std::string save_state_field(const StateField& sf) {
    std::int32_t max_id = -1;
    for (std::int32_t s : sf.labels) max_id = std::max(max_id, s);
    std::ostringstream out;
    out << "states " << (max_id + 1) << "\n";
    for (int t = 0; t < sf.time_steps; ++t) {
        for (int v = 0; v < sf.vertex_count; ++v) {
            if (v) out << ' ';
            const std::int32_t s = sf.at(t, v);
            if (s == StateField::kUnknownState) out << '?';
            else out << s;
        }
        out << "\n";
    }
    return out.str();
}

StateField load_state_field(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("state field parse error line 1: empty input");
    {
        std::istringstream header(line);
        std::string word;
        int n = -1;
        if (!(header >> word >> n) || word != "states" || n < 0)
            throw ParseError("state field parse error line 1: expected 'states <count>'");
    }
    StateField sf;
    int lineno = 1;
    std::vector<std::int32_t> row;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t first = line.find_first_not_of(" \t\r\n");
        if (first == std::string::npos || line[first] == '#') continue;
        row.clear();
        std::istringstream tokens(line);
        std::string tok;
        while (tokens >> tok) {
            if (tok == "?") row.push_back(StateField::kUnknownState);
            else {
                try {
                    row.push_back(std::stoi(tok));
                } catch (const std::exception&) {
                    throw ParseError("state field parse error line " + std::to_string(lineno) +
                                     ": bad token '" + tok + "'");
                }
            }
        }
        if (sf.vertex_count == 0) sf.vertex_count = static_cast<int>(row.size());
        if (static_cast<int>(row.size()) != sf.vertex_count)
            throw ParseError("state field parse error line " + std::to_string(lineno) +
                             ": ragged row");
        sf.labels.insert(sf.labels.end(), row.begin(), row.end());
        ++sf.time_steps;
    }
    if (sf.time_steps == 0) throw ParseError("state field parse error: no data rows");
    return sf;
}

std::string save_state_estimate(const StateEstimate& est) {
    std::ostringstream out;
    for (int t = 0; t < est.time_steps; ++t) {
        for (int v = 0; v < est.vertex_count; ++v) {
            if (v) out << ' ';
            if (est.contradicted(t, v)) {
                out << '!';
                continue;
            }
            const std::vector<int> ids = est.at(t, v).to_vector();
            out << ids.size() << ':';
            for (std::size_t i = 0; i < ids.size(); ++i) {
                if (i) out << ',';
                out << ids[i];
            }
        }
        out << "\n";
    }
    return out.str();
}

json evaluation_to_json(const EvaluationReport& r) {
    return json{{"log_loss_bits", r.log_loss_bits},
                {"accuracy", r.accuracy},
                {"coverage", r.coverage},
                {"covered_points", r.covered_points},
                {"evaluable_points", r.evaluable_points},
                {"smoothed_points", r.smoothed_points}};
}

std::string evaluation_tsv(const EvaluationReport& r) {
    std::ostringstream out;
    out << r.log_loss_bits << '\t' << r.accuracy << '\t' << r.coverage << '\t'
        << r.covered_points << '\n';
    return out.str();
}

json complexity_to_json(const ComplexityReport& r) {
    json per_class = json::array();
    for (const ClassComplexity& c : r.per_class) {
        per_class.push_back(json{{"class_id", c.class_id},
                                 {"c_bits", c.c_bits},
                                 {"state_entropy_bits", c.state_entropy_bits},
                                 {"predictive_info_lower_bits", c.predictive_info_lower_bits},
                                 {"n_samples_db", c.n_samples_db},
                                 {"n_samples_field", c.n_samples_field},
                                 {"mi_bias_bound_bits", c.mi_bias_bound}});
    }
    return json{{"per_class", per_class}};
}

std::string complexity_csv(const ComplexityReport& r) {
    std::ostringstream out;
    out << "vertex_class,C_bits,n\n";
    for (const ClassComplexity& c : r.per_class)
        out << c.class_id << ',' << c.c_bits << ',' << c.n_samples_db << "\n";
    return out.str();
}

json markov_to_json(const MarkovReport& r) {
    return json{{"cmi_bits", r.cmi_bits},
                {"verdict", r.verdict},
                {"n_samples", r.n_samples},
                {"n_conditioning_cells", r.n_conditioning_cells},
                {"threshold_bits", r.threshold_bits},
                {"mi_bias_bound_bits", r.mi_bias_bound}};
}

json patch_to_json(const PatchReport& r) {
    return json{{"cmi_bits", r.cmi_bits},
                {"verdict", r.verdict},
                {"n_samples", r.n_samples},
                {"n_keys", r.n_keys},
                {"threshold_bits", r.threshold_bits},
                {"mi_bias_bound_bits", r.mi_bias_bound}};
}

json filter_summary_to_json(const FilterResult& r, const Geometry& geom) {
    return json{{"singleton_fraction", r.estimate.singleton_fraction(geom)},
                {"contradiction_count", r.estimate.contradiction_count()},
                {"coverage", r.constraint_coverage}};
}

}  // namespace conefield
