#ifndef COAG_SIMULATOR_HPP
#define COAG_SIMULATOR_HPP

#include <cstdint>
#include <vector>

#include "coag/kernels.hpp"
#include "coag/measures.hpp"

namespace coag {

enum class Engine { Dense, ProductFast, Auto };

struct InitSpec {
    enum class Kind { Poisson, Fixed };
    Kind kind = Kind::Poisson;
    std::vector<int> fixed_sites;  // used when kind == Fixed

    static InitSpec poisson() { return {}; }
    static InitSpec fixed(std::vector<int> sites) {
        return {Kind::Fixed, std::move(sites)};
    }
};

// The labelled process runs with kernel K/N from a monodisperse start.
struct SimConfig {
    std::int64_t N = 1;
    double T = 1.0;
    KernelSpec kernel = KernelSpec::multiplicative();
    PlacementSpec placement = PlacementSpec::weighted_random();
    SiteSpace space;
    std::uint64_t seed = 0;
    Engine engine = Engine::Auto;
    InitSpec init;
};

struct Event {
    double time;
    // canonical (smallest-atom-label) representatives of the two merging clusters
    std::uint32_t rep_a, rep_b;
    ParticleType type_a, type_b;
    int target_site;
};

// Raw output of one labelled run. Label sets are stored implicitly: each event
// names the canonical representatives of the merging clusters and the full
// sets are recovered by union-find replay.
class EventLog {
public:
    EventLog(std::vector<int> initial_sites, std::vector<Event> events, double horizon);

    const std::vector<int>& initial_sites() const { return initial_sites_; }
    const std::vector<Event>& events() const { return events_; }
    double horizon() const { return horizon_; }
    std::int64_t atom_count() const { return static_cast<std::int64_t>(initial_sites_.size()); }

    Configuration state_at(double t) const;  // forgets labels; throws on bad t
    std::int64_t final_particle_count() const {
        return atom_count() - static_cast<std::int64_t>(events_.size());
    }

private:
    std::vector<int> initial_sites_;  // atom label -> site
    std::vector<Event> events_;
    double horizon_;
};

EventLog simulate(const SimConfig& cfg);

// true when the kernel admits the thinning-based fast engine
bool product_fast_supported(const KernelSpec& k);

}  // namespace coag

#endif
