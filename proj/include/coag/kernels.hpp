#ifndef COAG_KERNELS_HPP
#define COAG_KERNELS_HPP

#include <optional>
#include <span>
#include <vector>

#include "coag/measures.hpp"
#include "coag/rng.hpp"

namespace coag {

enum class KernelFamily { Constant, Multiplicative, Additive, SpatialProduct, Table };

// Symmetric coagulation kernel K((x,m),(x',m')) >= 0.
class KernelSpec {
public:
    static KernelSpec constant(double c);
    static KernelSpec multiplicative();
    static KernelSpec additive();
    // phi: symmetric site x site matrix; K = phi(x,x') m m'
    static KernelSpec spatial_product(std::vector<std::vector<double>> phi);
    // explicit values indexed by (site,mass,site,mass), masses 1..mass_cutoff
    static KernelSpec table(int site_count, std::int64_t mass_cutoff, std::vector<double> values);

    double eval(ParticleType a, ParticleType b) const;

    KernelFamily family() const { return family_; }
    double constant_value() const { return c_; }
    std::int64_t table_cutoff() const { return mass_cutoff_; }
    int table_site_count() const { return site_count_; }
    const std::vector<std::vector<double>>& site_matrix() const { return phi_; }
    const std::vector<double>& table_values() const { return values_; }

    // K = g(x,x') * m * m' (multiplicative, spatial_product)
    bool is_mass_product() const;
    // K = g(x,x') only (constant)
    bool is_mass_free() const;
    double site_factor(int x, int xp) const;  // the g above
    double site_factor_max() const;

    // <phi, K phi> = sum over ordered type pairs (incl. diagonal) of counts*K
    double quadratic_form(const Configuration& phi) const;
    // <v, K w> for two configurations
    double bilinear_form(const Configuration& v, const Configuration& w) const;

private:
    KernelFamily family_ = KernelFamily::Constant;
    double c_ = 1.0;
    std::vector<std::vector<double>> phi_;
    int site_count_ = 1;
    std::int64_t mass_cutoff_ = 0;
    std::vector<double> values_;  // [x][m-1][x'][m'-1] flattened
};

struct KernelBound {
    double value = 0.0;
    bool exact = false;
};

// H = sup of K/(m m') over mass-normalised point masses (the extreme-point
// reduction of the structural upper kernel bound; see README).
KernelBound kernel_upper_constant(const KernelSpec& K, std::int64_t mass_cutoff);
// h = inf K/(m m'); 0 with exact=true where the infimum is a vanishing limit.
KernelBound kernel_lower_constant(const KernelSpec& K, std::int64_t mass_cutoff);

enum class PlacementFamily { WeightedRandom, UniformPair, FixedTable };

// Placement kernel Upsilon((x,m),(x',m'), .) over target sites.
class PlacementSpec {
public:
    static PlacementSpec weighted_random();  // x w.p. m/(m+m'), x' w.p. m'/(m+m')
    static PlacementSpec uniform_pair();     // x or x' with probability 1/2
    // dist[x][x'] = probability vector over target sites; symmetric in (x,x')
    static PlacementSpec fixed_table(std::vector<std::vector<std::vector<double>>> dist);

    int sample(ParticleType a, ParticleType b, Rng& rng) const;
    // writes the distribution over target sites into out (size = site_count)
    void distribution(ParticleType a, ParticleType b, std::span<double> out) const;

    PlacementFamily family() const { return family_; }

private:
    PlacementFamily family_ = PlacementFamily::WeightedRandom;
    std::vector<std::vector<std::vector<double>>> dist_;
};

}  // namespace coag

#endif
