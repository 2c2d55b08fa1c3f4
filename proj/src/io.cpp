#include "coag/io.hpp"

#include <cstdio>
#include <istream>
#include <ostream>

namespace coag {

const json& require_field(const json& j, const std::string& key, const std::string& path) {
    if (!j.is_object() || !j.contains(key))
        throw ConfigError("missing required field " + path + "/" + key);
    return j.at(key);
}

double require_number(const json& j, const std::string& key, const std::string& path) {
    const json& v = require_field(j, key, path);
    if (!v.is_number()) throw ConfigError("field " + path + "/" + key + " must be a number");
    return v.get<double>();
}

std::int64_t require_int(const json& j, const std::string& key, const std::string& path) {
    const json& v = require_field(j, key, path);
    if (!v.is_number_integer())
        throw ConfigError("field " + path + "/" + key + " must be an integer");
    return v.get<std::int64_t>();
}

json configuration_to_json(const Configuration& c) {
    json out = json::array();
    for (const auto& [type, count] : c.entries())
        out.push_back(json::array({type.site, type.mass, count}));
    return out;
}

Configuration configuration_from_json(const json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError("configuration at " + path + " must be an array");
    Configuration c;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const json& e = j[i];
        if (!e.is_array() || e.size() != 3)
            throw ConfigError("configuration entry " + path + "/" + std::to_string(i) +
                              " must be [site, mass, count]");
        c.add(ParticleType{e[0].get<int>(), e[1].get<std::int64_t>()},
              e[2].get<std::int64_t>());
    }
    return c;
}

json trajectory_to_json(const Trajectory& t) {
    json jumps = json::array();
    for (const Jump& j : t.jumps())
        jumps.push_back(json{{"t", j.time},
                             {"a", json::array({j.a.site, j.a.mass})},
                             {"b", json::array({j.b.site, j.b.mass})},
                             {"z", j.target_site}});
    return json{{"initial", configuration_to_json(t.initial())},
                {"jumps", std::move(jumps)},
                {"T", t.horizon()}};
}

Trajectory trajectory_from_json(const json& j, const std::string& path) {
    const Configuration initial =
        configuration_from_json(require_field(j, "initial", path), path + "/initial");
    const double T = require_number(j, "T", path);
    std::vector<Jump> jumps;
    const json& js = require_field(j, "jumps", path);
    if (!js.is_array()) throw ConfigError(path + "/jumps must be an array");
    for (std::size_t i = 0; i < js.size(); ++i) {
        const std::string p = path + "/jumps/" + std::to_string(i);
        const json& e = js[i];
        const json& a = require_field(e, "a", p);
        const json& b = require_field(e, "b", p);
        jumps.push_back(Jump{require_number(e, "t", p),
                             ParticleType{a[0].get<int>(), a[1].get<std::int64_t>()},
                             ParticleType{b[0].get<int>(), b[1].get<std::int64_t>()},
                             static_cast<int>(require_int(e, "z", p))});
    }
    return Trajectory(initial, std::move(jumps), T);
}

json site_space_to_json(const SiteSpace& s) {
    return json{{"site_count", s.site_count()}, {"site_weights", s.site_weights}};
}

SiteSpace site_space_from_json(const json& j, const std::string& path) {
    if (j.contains("site_weights")) {
        const json& w = j.at("site_weights");
        if (!w.is_array()) throw ConfigError(path + "/site_weights must be an array");
        try {
            return SiteSpace(w.get<std::vector<double>>());
        } catch (const CoagError& e) {
            throw ConfigError(path + "/site_weights: " + e.what());
        }
    }
    const std::int64_t n = require_int(j, "site_count", path);
    if (n < 1) throw ConfigError(path + "/site_count must be >= 1");
    return SiteSpace::uniform(static_cast<int>(n));
}

json kernel_to_json(const KernelSpec& k) {
    switch (k.family()) {
        case KernelFamily::Constant:
            return json{{"variant", "constant"}, {"c", k.constant_value()}};
        case KernelFamily::Multiplicative:
            return json{{"variant", "multiplicative"}};
        case KernelFamily::Additive:
            return json{{"variant", "additive"}};
        case KernelFamily::SpatialProduct:
            return json{{"variant", "spatial_product"}, {"phi", k.site_matrix()}};
        case KernelFamily::Table:
            return json{{"variant", "table"},
                        {"site_count", k.table_site_count()},
                        {"mass_cutoff", k.table_cutoff()},
                        {"values", k.table_values()}};
    }
    return json{};
}

KernelSpec kernel_from_json(const json& j, const std::string& path) {
    const json& v = require_field(j, "variant", path);
    if (!v.is_string()) throw ConfigError(path + "/variant must be a string");
    const std::string variant = v.get<std::string>();
    try {
        if (variant == "constant") return KernelSpec::constant(require_number(j, "c", path));
        if (variant == "multiplicative") return KernelSpec::multiplicative();
        if (variant == "additive") return KernelSpec::additive();
        if (variant == "spatial_product") {
            const json& phi = require_field(j, "phi", path);
            return KernelSpec::spatial_product(phi.get<std::vector<std::vector<double>>>());
        }
        if (variant == "table") {
            const std::int64_t sc = require_int(j, "site_count", path);
            const std::int64_t cutoff = require_int(j, "mass_cutoff", path);
            const json& vals = require_field(j, "values", path);
            return KernelSpec::table(static_cast<int>(sc), cutoff,
                                     vals.get<std::vector<double>>());
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const CoagError& e) {
        throw ConfigError(path + ": " + e.what());
    }
    throw ConfigError(path + "/variant: unknown kernel variant '" + variant + "'");
}

json placement_to_json(const PlacementSpec& p) {
    switch (p.family()) {
        case PlacementFamily::WeightedRandom:
            return json{{"variant", "weighted_random"}};
        case PlacementFamily::UniformPair:
            return json{{"variant", "uniform_pair"}};
        case PlacementFamily::FixedTable:
            return json{{"variant", "fixed_table"}};
    }
    return json{};
}

PlacementSpec placement_from_json(const json& j, const std::string& path) {
    const json& v = require_field(j, "variant", path);
    if (!v.is_string()) throw ConfigError(path + "/variant must be a string");
    const std::string variant = v.get<std::string>();
    try {
        if (variant == "weighted_random") return PlacementSpec::weighted_random();
        if (variant == "uniform_pair") return PlacementSpec::uniform_pair();
        if (variant == "fixed_table") {
            const json& table = require_field(j, "table", path);
            return PlacementSpec::fixed_table(
                table.get<std::vector<std::vector<std::vector<double>>>>());
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const CoagError& e) {
        throw ConfigError(path + ": " + e.what());
    }
    throw ConfigError(path + "/variant: unknown placement variant '" + variant + "'");
}

SimConfig sim_config_from_json(const json& j, const std::string& path) {
    SimConfig cfg;
    cfg.N = require_int(j, "N", path);
    if (cfg.N < 1) throw ConfigError(path + "/N must be >= 1");
    cfg.T = require_number(j, "T", path);
    if (!(cfg.T > 0.0)) throw ConfigError(path + "/T must be > 0");
    cfg.kernel = kernel_from_json(require_field(j, "kernel", path), path + "/kernel");
    cfg.placement =
        placement_from_json(require_field(j, "placement", path), path + "/placement");
    cfg.space = site_space_from_json(require_field(j, "space", path), path + "/space");
    cfg.seed = static_cast<std::uint64_t>(require_int(j, "seed", path));
    if (j.contains("engine")) {
        const std::string e = j.at("engine").get<std::string>();
        if (e == "dense")
            cfg.engine = Engine::Dense;
        else if (e == "product_fast")
            cfg.engine = Engine::ProductFast;
        else if (e == "auto")
            cfg.engine = Engine::Auto;
        else
            throw ConfigError(path + "/engine: unknown engine '" + e + "'");
    }
    if (j.contains("init")) {
        const json& init = j.at("init");
        const std::string kind = require_field(init, "kind", path + "/init").get<std::string>();
        if (kind == "poisson")
            cfg.init = InitSpec::poisson();
        else if (kind == "fixed")
            cfg.init = InitSpec::fixed(
                require_field(init, "sites", path + "/init").get<std::vector<int>>());
        else
            throw ConfigError(path + "/init/kind: unknown init '" + kind + "'");
    }
    return cfg;
}

void event_log_to_jsonl(const EventLog& log, std::ostream& os) {
    json header{{"atoms", log.initial_sites()}, {"T", log.horizon()}};
    os << header.dump() << "\n";
    for (const Event& e : log.events()) {
        json line{{"t", e.time},
                  {"a", json::array({e.type_a.site, e.type_a.mass})},
                  {"b", json::array({e.type_b.site, e.type_b.mass})},
                  {"z", e.target_site},
                  {"ra", e.rep_a},
                  {"rb", e.rep_b}};
        os << line.dump() << "\n";
    }
}

EventLog event_log_from_jsonl(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("event log: missing header line");
    const json header = json::parse(line);
    std::vector<int> atoms = require_field(header, "atoms", "/header").get<std::vector<int>>();
    const double T = require_number(header, "T", "/header");
    std::vector<Event> events;
    std::size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const json e = json::parse(line);
        const std::string p = "/line" + std::to_string(lineno);
        const json& a = require_field(e, "a", p);
        const json& b = require_field(e, "b", p);
        events.push_back(Event{require_number(e, "t", p),
                               static_cast<std::uint32_t>(require_int(e, "ra", p)),
                               static_cast<std::uint32_t>(require_int(e, "rb", p)),
                               ParticleType{a[0].get<int>(), a[1].get<std::int64_t>()},
                               ParticleType{b[0].get<int>(), b[1].get<std::int64_t>()},
                               static_cast<int>(require_int(e, "z", p))});
    }
    return EventLog(std::move(atoms), std::move(events), T);
}

std::uint64_t fnv1a64(const std::string& data) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace coag
