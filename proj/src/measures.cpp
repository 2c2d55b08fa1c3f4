#include "coag/measures.hpp"

#include <algorithm>
#include <cmath>

namespace coag {

SiteSpace::SiteSpace(std::vector<double> weights) : site_weights(std::move(weights)) {
    if (site_weights.empty()) throw CoagError("SiteSpace: no sites");
    double sum = 0.0;
    for (double w : site_weights) {
        if (w < 0.0) throw CoagError("SiteSpace: negative site weight");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw CoagError("SiteSpace: site weights must sum to 1 (got " + std::to_string(sum) + ")");
}

SiteSpace SiteSpace::uniform(int n) {
    if (n < 1) throw CoagError("SiteSpace: site_count must be positive");
    return SiteSpace(std::vector<double>(n, 1.0 / n));
}

void Configuration::add(ParticleType type, std::int64_t n) {
    if (type.mass < 1) throw CoagError("Configuration: mass must be >= 1");
    auto it = std::lower_bound(entries_.begin(), entries_.end(), type,
                               [](const Entry& e, const ParticleType& t) { return e.first < t; });
    if (it != entries_.end() && it->first == type) {
        it->second += n;
        if (it->second < 0) throw CoagError("Configuration: count went negative");
        if (it->second == 0) entries_.erase(it);
    } else {
        if (n < 0) throw CoagError("Configuration: count went negative");
        if (n > 0) entries_.insert(it, {type, n});
    }
}

std::int64_t Configuration::count(ParticleType type) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), type,
                               [](const Entry& e, const ParticleType& t) { return e.first < t; });
    return (it != entries_.end() && it->first == type) ? it->second : 0;
}

std::int64_t Configuration::particle_count() const {
    std::int64_t n = 0;
    for (const auto& [t, c] : entries_) n += c;
    return n;
}

std::int64_t Configuration::total_mass() const {
    std::int64_t m = 0;
    for (const auto& [t, c] : entries_) m += t.mass * c;
    return m;
}

std::int64_t Configuration::mass_below(std::int64_t L) const {
    std::int64_t m = 0;
    for (const auto& [t, c] : entries_)
        if (t.mass <= L) m += t.mass * c;
    return m;
}

bool Configuration::contains_pair(ParticleType a, ParticleType b) const {
    if (a == b) return count(a) >= 2;
    return count(a) >= 1 && count(b) >= 1;
}

Configuration Configuration::apply_step(ParticleType a, ParticleType b, int target_site) const {
    if (!contains_pair(a, b))
        throw CoagError("apply_step: pair not present in configuration");
    Configuration out = *this;
    out.add(a, -1);
    out.add(b, -1);
    out.add(ParticleType{target_site, a.mass + b.mass}, 1);
    return out;
}

Configuration monodisperse(const std::vector<int>& sites) {
    Configuration c;
    for (int s : sites) c.add(ParticleType{s, 1});
    return c;
}

Trajectory::Trajectory(Configuration initial, std::vector<Jump> jumps, double horizon)
    : initial_(std::move(initial)), jumps_(std::move(jumps)), horizon_(horizon) {
    for (const auto& [t, c] : initial_.entries())
        if (t.mass != 1) throw CoagError("Trajectory: initial configuration must be monodisperse");
    // one validation replay; ties in jump times are kept in sequence order
    Configuration state = initial_;
    double prev = -1.0;
    for (const Jump& j : jumps_) {
        if (j.time < prev || j.time < 0.0 || j.time > horizon_)
            throw CoagError("Trajectory: jump times must be nondecreasing and within [0, horizon]");
        prev = j.time;
        state = state.apply_step(j.a, j.b, j.target_site);
    }
    if (state.particle_count() != 1)
        throw CoagError("Trajectory: final configuration must hold exactly one particle");
}

Configuration Trajectory::at(double t) const {
    if (t < 0.0 || t > horizon_) throw CoagError("Trajectory::at: time out of range");
    // right-continuous: jumps at time exactly t are applied
    Configuration state = initial_;
    for (const Jump& j : jumps_) {
        if (j.time > t) break;
        state = state.apply_step(j.a, j.b, j.target_site);
    }
    return state;
}

double EmpiricalTreeMeasure::total_weight() const {
    double w = 0.0;
    for (const auto& e : entries) w += e.weight;
    return w;
}

double EmpiricalTreeMeasure::first_moment() const {
    double w = 0.0;
    for (const auto& e : entries) w += e.weight * static_cast<double>(e.tree.atom_count());
    return w;
}

}  // namespace coag
