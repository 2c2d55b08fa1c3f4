#ifndef COAG_MEASURES_HPP
#define COAG_MEASURES_HPP

#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace coag {

struct CoagError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Finite site set with a probability vector (the initial-condition measure mu).
struct SiteSpace {
    std::vector<double> site_weights;

    SiteSpace() : site_weights{1.0} {}
    explicit SiteSpace(std::vector<double> weights);

    static SiteSpace single() { return SiteSpace(); }
    static SiteSpace uniform(int n);

    int site_count() const { return static_cast<int>(site_weights.size()); }
};

struct ParticleType {
    int site = 0;
    std::int64_t mass = 1;

    friend auto operator<=>(const ParticleType&, const ParticleType&) = default;
};

// Finite integer-valued measure on sites x masses; the state of the process.
// Stored as a sorted sparse map, which doubles as a canonical memoisation key.
class Configuration {
public:
    using Entry = std::pair<ParticleType, std::int64_t>;

    Configuration() = default;

    void add(ParticleType type, std::int64_t n = 1);
    std::int64_t count(ParticleType type) const;

    std::int64_t particle_count() const;          // |phi|
    std::int64_t total_mass() const;              // ||phi||_1
    std::int64_t mass_below(std::int64_t L) const;  // ||phi||_{1,<=L}

    // phi - delta_a - delta_b + delta_{(z, m_a+m_b)}; throws if the pair is absent
    Configuration apply_step(ParticleType a, ParticleType b, int target_site) const;

    bool contains_pair(ParticleType a, ParticleType b) const;

    const std::vector<Entry>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }

    friend auto operator<=>(const Configuration&, const Configuration&) = default;

private:
    std::vector<Entry> entries_;  // sorted by type, counts > 0
};

Configuration monodisperse(const std::vector<int>& sites);

struct Jump {
    double time = 0.0;
    ParticleType a, b;
    int target_site = 0;
};

// One history tree: monodisperse initial state plus its ordered merge events,
// evaluated as a right-continuous piecewise-constant path on [0, horizon].
// Pieces are not materialised; evaluation replays the jumps.
class Trajectory {
public:
    Trajectory(Configuration initial, std::vector<Jump> jumps, double horizon);

    Configuration at(double t) const;  // throws on t outside [0, horizon]

    const Configuration& initial() const { return initial_; }
    const std::vector<Jump>& jumps() const { return jumps_; }
    double horizon() const { return horizon_; }
    std::int64_t atom_count() const { return initial_.particle_count(); }

    // forward walker over the constant pieces, for exact piecewise integrals
    class PieceCursor {
    public:
        explicit PieceCursor(const Trajectory& t)
            : traj_(&t), config_(t.initial_), index_(0) {}

        const Configuration& config() const { return config_; }
        double start() const {
            return index_ == 0 ? 0.0 : traj_->jumps_[index_ - 1].time;
        }
        double end() const {
            return index_ == traj_->jumps_.size() ? traj_->horizon_
                                                  : traj_->jumps_[index_].time;
        }
        bool last() const { return index_ == traj_->jumps_.size(); }
        bool advance() {
            if (last()) return false;
            const Jump& j = traj_->jumps_[index_];
            config_ = config_.apply_step(j.a, j.b, j.target_site);
            ++index_;
            return true;
        }

    private:
        const Trajectory* traj_;
        Configuration config_;
        std::size_t index_;
    };

private:
    Configuration initial_;
    std::vector<Jump> jumps_;
    double horizon_;
};

struct EmpiricalTreeMeasure {
    struct Entry {
        double weight;
        Trajectory tree;
    };
    std::vector<Entry> entries;

    double total_weight() const;
    double first_moment() const;  // integral of |xi_0| d nu
};

}  // namespace coag

#endif
