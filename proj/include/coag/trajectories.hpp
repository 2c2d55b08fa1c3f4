#ifndef COAG_TRAJECTORIES_HPP
#define COAG_TRAJECTORIES_HPP

#include <cstdint>
#include <map>
#include <vector>

#include "coag/kernels.hpp"
#include "coag/measures.hpp"
#include "coag/simulator.hpp"

namespace coag {

struct TreeForest {
    std::vector<Trajectory> trees;  // one per particle alive at the horizon
    std::int64_t N = 1;
};

// Splits a run into the history trees of the particles alive at the horizon.
TreeForest decompose(const EventLog& log);

// R^T(xi, xi') = integral over [0,T] of <xi_t, K xi'_t> dt, computed exactly
// on the merged jump-time grid (the integrand is constant on each piece).
double pairwise_noncoag(const Trajectory& a, const Trajectory& b, const KernelSpec& K,
                        double T);

// sum_{i,j} w_i w_j R^T(xi_i, xi_j); include_diagonal=false gives the i != j form
double interaction_energy(const EmpiricalTreeMeasure& nu, const KernelSpec& K, double T,
                          bool include_diagonal = true);

// varphi(xi) = 1/2 * integral of [<xi_t, K xi_t> - <xi_t, K^diag>] dt
double tree_density_exponent(const Trajectory& xi, const KernelSpec& K, double T);

struct ObservablesTable {
    std::vector<std::pair<std::int64_t, double>> non_gel_mass;  // (L, ||Xi/N||_{1,<=L})
    std::map<std::int64_t, std::int64_t> size_histogram;        // |xi_0| -> tree count
    double second_moment = 0.0;  // integral of |xi_0|^2 d(V_N)
};

ObservablesTable observables(const TreeForest& forest, const std::vector<std::int64_t>& L_list);

}  // namespace coag

#endif
