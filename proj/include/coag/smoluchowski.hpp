#ifndef COAG_SMOLUCHOWSKI_HPP
#define COAG_SMOLUCHOWSKI_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "coag/kernels.hpp"
#include "coag/measures.hpp"
#include "coag/simulator.hpp"

namespace coag {

// Ordered-sum gain normalisation. HalfOrderedSum is the convention that
// matches the stochastic process (the regression test demonstrates this);
// UnitOrderedSum is kept as the comparison artifact.
enum class GainConvention { HalfOrderedSum, UnitOrderedSum };

// Nonnegative density over (site, mass <= L); masses above L leak into a
// tracked accumulator instead of vanishing.
struct DensityGrid {
    int site_count = 1;
    std::int64_t mass_cutoff = 1;
    std::vector<double> rho;  // [site * mass_cutoff + (mass-1)]
    double t = 0.0;
    double leaked_mass = 0.0;
    double clamped_mass = 0.0;

    DensityGrid(int sites, std::int64_t L)
        : site_count(sites), mass_cutoff(L),
          rho(static_cast<std::size_t>(sites) * L, 0.0) {}

    double& at(int site, std::int64_t mass) {
        return rho[static_cast<std::size_t>(site) * mass_cutoff + (mass - 1)];
    }
    double at(int site, std::int64_t mass) const {
        return rho[static_cast<std::size_t>(site) * mass_cutoff + (mass - 1)];
    }

    double total_mass() const;     // sum m * rho (below the cutoff)
    double second_moment() const;  // sum m^2 * rho
    double mass_below(std::int64_t L) const;

    // monodisperse rho(x,1) = mu(x), the hydrodynamic initial condition
    static DensityGrid monodisperse_init(const SiteSpace& space, std::int64_t L);
};

// d rho/dt: gain over ordered mass splittings (with the convention factor),
// loss rho * (K rho); pairs leaving the cutoff contribute to loss and to the
// leak rate only.
void smol_rhs(const DensityGrid& rho, const KernelSpec& K, const PlacementSpec& placement,
              GainConvention convention, std::span<double> out, double& leak_rate);

struct SmolResult {
    std::vector<DensityGrid> snapshots;
    double clamp_total = 0.0;
    bool clamp_warning = false;  // clamped mass exceeded 1e-8
    bool stability_warning = false;
};

// Classical RK4 stepping; snapshots are taken at the requested times.
SmolResult smol_solve(DensityGrid rho0, const KernelSpec& K, const PlacementSpec& placement,
                      double T, double dt, std::span<const double> snapshot_times,
                      GainConvention convention = GainConvention::HalfOrderedSum);

struct SmolVsSimRow {
    double t;
    double l1_distance;
    double mc_err;
};

// L1 distance between the replica-averaged empirical density (1/N) Xi_t and
// the PDE solution on (site, mass <= L), at each checkpoint.
std::vector<SmolVsSimRow> smol_vs_simulation(const SimConfig& cfg, std::int64_t L, double dt,
                                             std::span<const double> checkpoints,
                                             std::int64_t replicas,
                                             GainConvention convention =
                                                 GainConvention::HalfOrderedSum);

}  // namespace coag

#endif
