#include "coag/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace coag {

namespace {

// Fenwick tree over per-particle weights, for O(log n) weighted sampling.
class Fenwick {
public:
    explicit Fenwick(std::size_t n) : tree_(n + 1, 0.0) {}

    void add(std::size_t i, double delta) {
        for (++i; i < tree_.size(); i += i & (~i + 1)) tree_[i] += delta;
    }

    double total() const {
        double s = 0.0;
        for (std::size_t i = tree_.size() - 1; i > 0; i -= i & (~i + 1)) s += tree_[i];
        return s;
    }

    // largest index with prefix sum <= u; u in [0, total)
    std::size_t sample(double u) const {
        std::size_t pos = 0;
        std::size_t mask = 1;
        while ((mask << 1) < tree_.size()) mask <<= 1;
        for (; mask > 0; mask >>= 1) {
            const std::size_t next = pos + mask;
            if (next < tree_.size() && tree_[next] <= u) {
                u -= tree_[next];
                pos = next;
            }
        }
        return pos;  // 0-based
    }

private:
    std::vector<double> tree_;
};

struct Particle {
    ParticleType type;
    std::uint32_t rep;  // smallest atom label in the cluster
};

std::vector<int> draw_initial_sites(const SimConfig& cfg, Rng& rng) {
    if (cfg.init.kind == InitSpec::Kind::Fixed) {
        for (int s : cfg.init.fixed_sites)
            if (s < 0 || s >= cfg.space.site_count())
                throw CoagError("simulate: fixed init site out of range");
        return cfg.init.fixed_sites;
    }
    const std::int64_t n = rng.poisson(static_cast<double>(cfg.N));
    std::vector<int> sites(n);
    std::vector<double> cum(cfg.space.site_weights.size());
    std::partial_sum(cfg.space.site_weights.begin(), cfg.space.site_weights.end(), cum.begin());
    for (auto& s : sites) {
        const double u = rng.uniform() * cum.back();
        s = static_cast<int>(std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
        if (s >= cfg.space.site_count()) s = cfg.space.site_count() - 1;
    }
    return sites;
}

void merge_particles(std::vector<Particle>& parts, std::size_t i, std::size_t j,
                     ParticleType merged) {
    // replace i by the merged particle, swap-remove j
    parts[i].type = merged;
    parts[i].rep = std::min(parts[i].rep, parts[j].rep);
    parts[j] = parts.back();
    parts.pop_back();
}

// Exact chain with all pair rates evaluated on demand; per-event cost O(n).
EventLog run_dense(const SimConfig& cfg, std::vector<int> sites, Rng& rng) {
    std::vector<Particle> parts;
    parts.reserve(sites.size());
    for (std::size_t i = 0; i < sites.size(); ++i)
        parts.push_back({ParticleType{sites[i], 1}, static_cast<std::uint32_t>(i)});

    const double invN = 1.0 / static_cast<double>(cfg.N);
    std::vector<Event> events;

    auto row_sum = [&](std::size_t i) {
        double s = 0.0;
        for (std::size_t j = 0; j < parts.size(); ++j)
            if (j != i) s += cfg.kernel.eval(parts[i].type, parts[j].type);
        return s;
    };

    std::vector<double> rows(parts.size());
    auto rebuild = [&]() {
        rows.resize(parts.size());
        for (std::size_t i = 0; i < parts.size(); ++i) rows[i] = row_sum(i);
    };
    rebuild();

    double t = 0.0;
    std::size_t since_rebuild = 0;
    while (parts.size() >= 2) {
        const double total = std::accumulate(rows.begin(), rows.end(), 0.0) * 0.5 * invN;
        if (total <= 0.0) break;
        t += rng.exponential(total);
        if (t > cfg.T) break;

        // first index by row weight, second by a fresh scan of that row
        double u = rng.uniform() * std::accumulate(rows.begin(), rows.end(), 0.0);
        std::size_t i = 0;
        for (; i + 1 < rows.size(); ++i) {
            u -= rows[i];
            if (u < 0.0) break;
        }
        std::vector<double> row(parts.size(), 0.0);
        double fresh = 0.0;
        for (std::size_t j = 0; j < parts.size(); ++j) {
            if (j == i) continue;
            row[j] = cfg.kernel.eval(parts[i].type, parts[j].type);
            fresh += row[j];
        }
        if (fresh <= 0.0) {  // stale row; rebuild and retry without advancing time further
            rebuild();
            continue;
        }
        double v = rng.uniform() * fresh;
        std::size_t j = parts.size();
        for (std::size_t jj = 0; jj < parts.size(); ++jj) {
            if (jj == i) continue;
            v -= row[jj];
            if (v < 0.0) {
                j = jj;
                break;
            }
        }
        if (j == parts.size()) {  // numerical spill: take the last positive entry
            for (std::size_t jj = parts.size(); jj-- > 0;)
                if (jj != i && row[jj] > 0.0) {
                    j = jj;
                    break;
                }
        }

        const ParticleType a = parts[i].type, b = parts[j].type;
        const int z = cfg.placement.sample(a, b, rng);
        events.push_back({t, std::min(parts[i].rep, parts[j].rep),
                          std::max(parts[i].rep, parts[j].rep), a, b, z});
        // canonical event orientation: type_a belongs to the smaller representative
        if (parts[j].rep < parts[i].rep) std::swap(events.back().type_a, events.back().type_b);

        const ParticleType merged{z, a.mass + b.mass};
        const std::size_t lo = std::min(i, j), hi = std::max(i, j);
        merge_particles(parts, lo, hi, merged);

        // incremental row update, with periodic exact rebuild against fp drift
        if (++since_rebuild >= 256) {
            rebuild();
            since_rebuild = 0;
        } else {
            if (hi != rows.size() - 1) rows[hi] = rows.back();  // mirror the swap-remove
            rows.pop_back();
            for (std::size_t k = 0; k < parts.size(); ++k) {
                if (k == lo) continue;
                rows[k] += cfg.kernel.eval(parts[k].type, merged) -
                           cfg.kernel.eval(parts[k].type, a) -
                           cfg.kernel.eval(parts[k].type, b);
                if (rows[k] < 0.0) rows[k] = 0.0;
            }
            rows[lo] = row_sum(lo);
        }
    }
    return EventLog(std::move(sites), std::move(events), cfg.T);
}

// Thinning engine for K = g(x,x')*m*m' (proposal weight m) and K = g(x,x')
// (proposal weight 1), with g bounded. Proposals are drawn mass-proportionally
// via a Fenwick tree and accepted with probability g/g_max; rejected proposals
// still advance the clock, which keeps the chain exact.
EventLog run_product_fast(const SimConfig& cfg, std::vector<int> sites, Rng& rng) {
    const bool mass_weighted = cfg.kernel.is_mass_product();
    if (!mass_weighted && !cfg.kernel.is_mass_free())
        throw CoagError("product_fast engine requires a product-form or mass-free kernel");
    const double gmax = cfg.kernel.site_factor_max();

    std::vector<Particle> parts;
    parts.reserve(sites.size());
    for (std::size_t i = 0; i < sites.size(); ++i)
        parts.push_back({ParticleType{sites[i], 1}, static_cast<std::uint32_t>(i)});

    Fenwick weights(parts.size());
    for (std::size_t i = 0; i < parts.size(); ++i)
        weights.add(i, mass_weighted ? static_cast<double>(parts[i].type.mass) : 1.0);

    const double invN = 1.0 / static_cast<double>(cfg.N);
    std::vector<Event> events;
    double t = 0.0;

    while (parts.size() >= 2 && gmax > 0.0) {
        const double W = weights.total();
        if (!(W > 0.0)) break;
        const double proposal_rate = gmax * W * W * 0.5 * invN;
        t += rng.exponential(proposal_rate);
        if (t > cfg.T) break;

        const std::size_t i = weights.sample(rng.uniform() * W);
        const std::size_t j = weights.sample(rng.uniform() * W);
        if (i == j || i >= parts.size() || j >= parts.size()) continue;
        const ParticleType a = parts[i].type, b = parts[j].type;
        const double g = cfg.kernel.site_factor(a.site, b.site);
        if (g < gmax && rng.uniform() * gmax >= g) continue;

        const int z = cfg.placement.sample(a, b, rng);
        events.push_back({t, std::min(parts[i].rep, parts[j].rep),
                          std::max(parts[i].rep, parts[j].rep), a, b, z});
        if (parts[j].rep < parts[i].rep) std::swap(events.back().type_a, events.back().type_b);

        const ParticleType merged{z, a.mass + b.mass};
        const std::size_t lo = std::min(i, j), hi = std::max(i, j);
        const double wa = mass_weighted ? static_cast<double>(a.mass) : 1.0;
        const double wb = mass_weighted ? static_cast<double>(b.mass) : 1.0;
        const double wm = mass_weighted ? static_cast<double>(merged.mass) : 1.0;

        weights.add(lo, wm - (lo == i ? wa : wb));
        const std::size_t last = parts.size() - 1;
        const double whi = hi == i ? wa : wb;
        weights.add(hi, -whi);
        if (hi != last) {
            // swap-remove: move last particle's weight into slot hi
            const double wlast =
                mass_weighted ? static_cast<double>(parts[last].type.mass) : 1.0;
            weights.add(last, -wlast);
            weights.add(hi, wlast);
        }
        merge_particles(parts, lo, hi, merged);
    }
    return EventLog(std::move(sites), std::move(events), cfg.T);
}

}  // namespace

bool product_fast_supported(const KernelSpec& k) {
    return k.is_mass_product() || k.is_mass_free();
}

EventLog simulate(const SimConfig& cfg) {
    if (cfg.N < 1) throw CoagError("simulate: N must be >= 1");
    if (!(cfg.T > 0.0)) throw CoagError("simulate: T must be > 0");
    Rng rng(cfg.seed);
    std::vector<int> sites = draw_initial_sites(cfg, rng);

    Engine engine = cfg.engine;
    if (engine == Engine::Auto)
        engine = (product_fast_supported(cfg.kernel) && sites.size() > 2048)
                     ? Engine::ProductFast
                     : Engine::Dense;
    if (engine == Engine::ProductFast) return run_product_fast(cfg, std::move(sites), rng);
    return run_dense(cfg, std::move(sites), rng);
}

EventLog::EventLog(std::vector<int> initial_sites, std::vector<Event> events, double horizon)
    : initial_sites_(std::move(initial_sites)), events_(std::move(events)), horizon_(horizon) {
    // ties (possible only through floating-point coincidence) stay in sequence order
    double prev = 0.0;
    for (const Event& e : events_) {
        if (e.time < prev || e.time > horizon_)
            throw CoagError("EventLog: event times must be nondecreasing and <= horizon");
        prev = e.time;
    }
}

Configuration EventLog::state_at(double t) const {
    if (t < 0.0 || t > horizon_) throw CoagError("state_at: time out of range");
    Configuration c = monodisperse(initial_sites_);
    for (const Event& e : events_) {
        if (e.time > t) break;
        c = c.apply_step(e.type_a, e.type_b, e.target_site);
    }
    return c;
}

}  // namespace coag
