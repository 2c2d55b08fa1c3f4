#ifndef COAG_ANALYSIS_HPP
#define COAG_ANALYSIS_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coag/reference.hpp"
#include "coag/simulator.hpp"

namespace coag {

// Size-reduced Euler-Lagrange fixed point for kernels with
// R^T(xi,xi') = T |xi_0| |xi'_0|:  D = sum_{n<=L} n M_n exp(-T n D),
// nu_n = M_n exp(-T n D).
struct ElSolution {
    double D = 0.0;
    std::vector<double> nu;  // nu_n, n = 1..L
    int L = 0;
    double T = 0.0;
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;
    double first_moment = 0.0;   // sum n nu_n (= D up to residual)
    double second_moment = 0.0;  // sum n^2 nu_n
};

ElSolution el_fixed_point(double T, const SizeMassTable& table, int L, double damping = 0.5,
                          double tol = 1e-12, int max_iter = 100000);

// TH < (1/e^2) pi/(1+pi) guarantees a unique EL solution
double el_uniqueness_threshold(double H);

struct GelationReport {
    double H = 0.0, h = 0.0;
    double t_gel_lower = 0.0;    // 1/(H e^2)
    double uniqueness_T = 0.0;   // el_uniqueness_threshold(H)
    std::optional<double> t_gel_upper;  // none when h = 0
    std::vector<std::pair<double, double>> I_lower_table;  // (T, rate-function lower bound)
};

GelationReport gelation_bounds(double H, double h);

// evaluates the rate-function lower bound 1 - (1/2T)(e/(pi H) + log(2THe^2)^2/h)
double rate_lower_bound(double T, double H, double h);

// I(nu) = sum nu_n log(nu_n/M_n) + T/2 * D(nu)^2 + 1 - |nu|, with 0 log 0 = 0.
// Throws when nu_n > 0 on a row with M_n = 0.
double rate_function_reduced(std::span<const double> nu, const SizeMassTable& table, double T);

// Bounded test functionals for the Gibbs checker; evaluated on the multiset of
// tree sizes of V_N (weights 1/N each).
struct TestFunctional {
    enum class Kind { One, MaxTreeSizeAtMost, ExpNegTotalWeight };
    Kind kind = Kind::One;
    std::int64_t size_bound = 0;

    static TestFunctional one() { return {}; }
    static TestFunctional max_tree_size_at_most(std::int64_t s) {
        return {Kind::MaxTreeSizeAtMost, s};
    }
    static TestFunctional exp_neg_total_weight() { return {Kind::ExpNegTotalWeight, 0}; }

    double eval(const std::vector<std::int64_t>& tree_sizes, double N) const;
    std::string name() const;
};

struct GibbsResult {
    double lhs = 0.0, lhs_err = 0.0;
    double rhs = 0.0, rhs_err = 0.0;
    bool variance_warning = false;
};

// Two independent Monte-Carlo estimates of E[f(V_N^T)]: direct simulation of
// the process vs the interacting-Poisson representation with reference
// intensity N M_{b mu, N}^T. Both sides use the same kernel scaling K/N.
GibbsResult gibbs_check(const SimConfig& cfg, const TestFunctional& f, double b,
                        std::int64_t replicas);

struct NgScanRow {
    double T;
    std::int64_t N;
    std::int64_t L;
    double mean;
    double std_err;
    bool gel_flag;
};

// Non-gel mass scan: per (T, N, L) the mean and standard error over replicas
// of || Xi_T / N ||_{1, <= L}.
std::vector<NgScanRow> ng_scan(const KernelSpec& kernel, const PlacementSpec& placement,
                               const SiteSpace& space, const std::vector<double>& T_list,
                               const std::vector<std::int64_t>& N_list,
                               const std::vector<std::int64_t>& L_list, std::int64_t replicas,
                               std::uint64_t seed, Engine engine = Engine::Auto);

}  // namespace coag

#endif
