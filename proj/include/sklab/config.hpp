#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "sklab/demand.hpp"
#include "sklab/errors.hpp"
#include "sklab/rational.hpp"

namespace sklab {

// Plain-text run/distribution documents: one `key = value` per line, '#'
// comments, repeated keys form lists. See docs/formats.md.
struct KeyValueDoc {
    std::vector<std::pair<std::string, std::string>> entries;

    static KeyValueDoc parse(const std::string& text) {
        KeyValueDoc doc;
        std::istringstream in(text);
        std::string line;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
            auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(" \t\r");
                const auto e = s.find_last_not_of(" \t\r");
                return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
            };
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ValidationError("config line " + std::to_string(lineno) +
                                      ": expected 'key = value'");
            doc.entries.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
        }
        return doc;
    }

    bool has(const std::string& key) const {
        return std::any_of(entries.begin(), entries.end(),
                           [&](const auto& e) { return e.first == key; });
    }

    std::string get(const std::string& key, const std::string& fallback = "") const {
        for (const auto& [k, v] : entries)
            if (k == key) return v;
        return fallback;
    }

    std::vector<std::string> all(const std::string& key) const {
        std::vector<std::string> out;
        for (const auto& [k, v] : entries)
            if (k == key) out.push_back(v);
        return out;
    }

    void reject_unknown(const std::set<std::string>& known) const {
        for (const auto& [k, v] : entries)
            if (!known.count(k)) throw ValidationError("unknown config key: '" + k + "'");
    }
};

inline std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : text) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

// A distribution document carries `dim` (default 1), `no_arrival` and one
// `atom` line per support point: "price, q1 .. qm, prob".
inline MultiDemandDistribution parse_multi_distribution(const KeyValueDoc& doc) {
    doc.reject_unknown({"dim", "no_arrival", "atom"});
    const int dim = doc.has("dim") ? std::stoi(doc.get("dim")) : 1;
    if (dim < 1) throw ValidationError("distribution: dim must be >= 1");
    std::vector<MultiDemandAtom> atoms;
    for (const auto& text : doc.all("atom")) {
        const auto parts = split_list(text);
        if (static_cast<int>(parts.size()) != dim + 2)
            throw ValidationError("distribution: atom '" + text + "' needs " +
                                  std::to_string(dim + 2) + " fields (price, q.., prob)");
        MultiDemandAtom a;
        a.price = parse_rational(parts[0]);
        for (int k = 0; k < dim; ++k) {
            const double q = parse_rational(parts[1 + k]);
            const int qi = static_cast<int>(std::lround(q));
            if (std::abs(q - qi) > 1e-9)
                throw ValidationError("distribution: quantity '" + parts[1 + k] +
                                      "' is not an integer");
            a.quantities.push_back(qi);
        }
        a.prob = parse_rational(parts.back());
        atoms.push_back(std::move(a));
    }
    const double no_arrival = doc.has("no_arrival") ? parse_rational(doc.get("no_arrival")) : 0.0;
    return MultiDemandDistribution(dim, std::move(atoms), no_arrival);
}

inline DemandDistribution parse_distribution(const KeyValueDoc& doc) {
    const auto multi = parse_multi_distribution(doc);
    if (multi.dim() != 1)
        throw ValidationError("expected a one-dimensional distribution");
    std::vector<DemandAtom> atoms;
    for (const auto& a : multi.atoms())
        atoms.push_back({a.price, a.quantities[0], a.prob});
    return DemandDistribution(std::move(atoms), multi.no_arrival_prob());
}

enum class ExperimentKind {
    dp_check,
    variance_scaling,
    fluid_convergence,
    diffusion_compare,
    multi,
};

inline ExperimentKind parse_kind(const std::string& s) {
    if (s == "dp-check") return ExperimentKind::dp_check;
    if (s == "variance-scaling") return ExperimentKind::variance_scaling;
    if (s == "fluid-convergence") return ExperimentKind::fluid_convergence;
    if (s == "diffusion-compare") return ExperimentKind::diffusion_compare;
    if (s == "multi") return ExperimentKind::multi;
    throw ValidationError("unknown experiment kind: '" + s + "'");
}

inline std::string kind_name(ExperimentKind k) {
    switch (k) {
        case ExperimentKind::dp_check: return "dp-check";
        case ExperimentKind::variance_scaling: return "variance-scaling";
        case ExperimentKind::fluid_convergence: return "fluid-convergence";
        case ExperimentKind::diffusion_compare: return "diffusion-compare";
        case ExperimentKind::multi: return "multi";
    }
    return "?";
}

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::dp_check;
    MultiDemandDistribution dist_multi;         // always populated
    std::optional<DemandDistribution> dist_1d;  // populated when dim == 1
    std::vector<int> W = {1};
    int T = 1;
    int t0 = 0;
    std::vector<int> scale_ladder;
    int paths = 10000;
    std::uint64_t seed = 1;
    int grid_nx = 200;
    int grid_ny = 200;
    bool verbatim_g = false;
    int threads = 1;
    std::string out_dir = "out";

    // raw document echo for the manifest
    std::string source_text;

    int dim() const { return dist_multi.dim(); }
};

inline ExperimentConfig parse_experiment_config(const std::string& text,
                                                const std::filesystem::path& base_dir) {
    const auto doc = KeyValueDoc::parse(text);
    doc.reject_unknown({"kind", "distribution", "dim", "no_arrival", "atom", "W", "T", "t0",
                        "scale_ladder", "paths", "seed", "grid_nx", "grid_ny", "mode",
                        "threads", "out"});
    ExperimentConfig cfg;
    cfg.source_text = text;
    if (doc.has("kind")) cfg.kind = parse_kind(doc.get("kind"));

    if (doc.has("distribution")) {
        const auto path = base_dir / doc.get("distribution");
        std::ifstream in(path);
        if (!in) throw IoError("cannot open distribution file " + path.string());
        std::string dist_text((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
        cfg.dist_multi = parse_multi_distribution(KeyValueDoc::parse(dist_text));
    } else if (doc.has("atom") || doc.has("no_arrival")) {
        KeyValueDoc sub;
        for (const auto& e : doc.entries)
            if (e.first == "dim" || e.first == "no_arrival" || e.first == "atom")
                sub.entries.push_back(e);
        cfg.dist_multi = parse_multi_distribution(sub);
    } else {
        throw ValidationError("config: no distribution (inline atoms or 'distribution =')");
    }
    if (cfg.dist_multi.dim() == 1) {
        std::vector<DemandAtom> atoms;
        for (const auto& a : cfg.dist_multi.atoms())
            atoms.push_back({a.price, a.quantities[0], a.prob});
        cfg.dist_1d = DemandDistribution(std::move(atoms), cfg.dist_multi.no_arrival_prob());
    }

    if (doc.has("W")) {
        cfg.W.clear();
        for (const auto& s : split_list(doc.get("W"))) cfg.W.push_back(std::stoi(s));
    }
    if (static_cast<int>(cfg.W.size()) != cfg.dim())
        throw ValidationError("config: W has " + std::to_string(cfg.W.size()) +
                              " entries but the distribution has dim " +
                              std::to_string(cfg.dim()));
    if (doc.has("T")) cfg.T = std::stoi(doc.get("T"));
    if (cfg.T < 1) throw ValidationError("config: T must be >= 1");
    if (doc.has("t0")) cfg.t0 = std::stoi(doc.get("t0"));
    if (cfg.t0 < 0 || cfg.t0 > cfg.T) throw ValidationError("config: t0 out of range");
    if (doc.has("scale_ladder"))
        for (const auto& s : split_list(doc.get("scale_ladder")))
            cfg.scale_ladder.push_back(std::stoi(s));
    if (doc.has("paths")) cfg.paths = std::stoi(doc.get("paths"));
    if (cfg.paths < 1) throw ValidationError("config: paths must be >= 1");
    if (doc.has("seed")) cfg.seed = std::stoull(doc.get("seed"));
    if (doc.has("grid_nx")) cfg.grid_nx = std::stoi(doc.get("grid_nx"));
    if (doc.has("grid_ny")) cfg.grid_ny = std::stoi(doc.get("grid_ny"));
    if (doc.has("mode")) {
        const auto m = doc.get("mode");
        if (m == "verbatim-g")
            cfg.verbatim_g = true;
        else if (m != "accept-prob")
            throw ValidationError("config: mode must be accept-prob or verbatim-g");
    }
    if (doc.has("threads")) cfg.threads = std::stoi(doc.get("threads"));
    if (cfg.threads < 1) throw ValidationError("config: threads must be >= 1");
    if (doc.has("out")) cfg.out_dir = doc.get("out");
    return cfg;
}

} // namespace sklab
