#ifndef COAG_REFERENCE_HPP
#define COAG_REFERENCE_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "coag/kernels.hpp"
#include "coag/measures.hpp"
#include "coag/rng.hpp"

namespace coag {

inline constexpr int kSigmaSizeLimit = 12;

// sigma(phi): recursive sum over merge sequences of the product of rates,
// with pair counting phi*phi' (distinct) and phi(phi-1)/2 (equal) and the
// placement distribution summed over target sites. sigma(single particle) = 1.
// Memoised over canonical configurations; cost is exponential, guarded by
// kSigmaSizeLimit unless max_particles overrides it.
double merge_weight_sum(const Configuration& phi, const KernelSpec& K,
                        const PlacementSpec& placement, int max_particles = kSigmaSizeLimit);

// |Q_k^T| = T^{n-1}/(n-1)! * sigma(k), n = |k|
double q_mass(const Configuration& atoms, double T, const KernelSpec& K,
              const PlacementSpec& placement, int max_particles = kSigmaSizeLimit);
// convenience: n unit atoms on site 0
double q_mass_nonspatial(int n, double T, const KernelSpec& K, const PlacementSpec& placement,
                         int max_particles = kSigmaSizeLimit);

// (TH)^{n-1}/(n-1)! * n^{2(n-1)}
double q_mass_bound(int n, double T, double H);
double log_q_mass_bound(int n, double T, double H);

// e^{1-b}/(2 pi T H) * (b T H e^2)^n * n^{-2}
double m_moment_bound(int n, double T, double H, double b);

// log |Q| closed forms for the nonspatial families (any n):
//   multiplicative: sigma = n^{n-2}(n-1)!   additive: sigma = n^{n-1}(n-1)!
//   constant(c):    sigma = c^{n-1} n!(n-1)!/2^{n-1}
std::optional<double> log_q_mass_closed_form(const KernelSpec& K, int n, double T);

struct McQRow {
    std::int64_t N;
    double estimate;
    double std_err;
    std::string method;  // "direct" or "forced"
};

enum class McQMode { Auto, Direct, Forced };

// Monte-Carlo estimates of N^{|k|-1} P_k^{(N)}(full coalescence by T).
// "direct": plain frequency over simulated runs. "forced": sequential
// conditioning -- every next merge is forced to happen before T by drawing its
// time from the truncated exponential, and the replica weight collects the
// factors 1 - exp(-rate * remaining); unbiased, usable at any N.
std::vector<McQRow> mc_q_limit(const Configuration& atoms, double T, const KernelSpec& K,
                               const PlacementSpec& placement,
                               const std::vector<std::int64_t>& N_list, std::int64_t replicas,
                               std::uint64_t seed, McQMode mode = McQMode::Auto);

// One draw from Q_k^T / |Q_k^T| via the merge-sequence chart (pair chosen
// proportionally to rate * sigma(result), jump times = sorted uniforms), with
// the importance weight |Q_k^T| attached.
std::pair<Trajectory, double> sample_tree(const Configuration& atoms, double T,
                                          const KernelSpec& K, const PlacementSpec& placement,
                                          Rng& rng, int max_particles = kSigmaSizeLimit);

// Size marginals M_n of the reference measure: M_n = e^{1-b} b^n / n! * qbar_n,
// where qbar_n averages |Q| over n i.i.d. mu-distributed atom sites.
struct SizeMassTable {
    double T = 0.0;
    double b = 1.0;
    std::vector<double> log_mass;         // index n-1
    std::vector<std::string> method;      // "exact" | "closed_form" | "mc"
    std::vector<double> mc_rel_err;       // 0 for exact rows

    int n_max() const { return static_cast<int>(log_mass.size()); }
    double mass(int n) const;             // M_n (may overflow to +inf; log_mass is authoritative)
};

SizeMassTable build_size_mass_table(int n_max, double T, double b, const KernelSpec& K,
                                    const PlacementSpec& placement, const SiteSpace& space,
                                    std::int64_t mc_replicas = 20000, std::uint64_t seed = 1);

}  // namespace coag

#endif
