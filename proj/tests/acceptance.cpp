// Acceptance suite: one pass/fail line per criterion, nonzero exit on failure.
// Each check pins its tolerance in code; oracles (enumerators, scalar ODE
// integration, bisection targets) are computed here, independent of the
// library paths they validate.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "coag/analysis.hpp"
#include "coag/io.hpp"
#include "coag/reference.hpp"
#include "coag/smoluchowski.hpp"
#include "coag/trajectories.hpp"

using namespace coag;

namespace {

int failures = 0;
const PlacementSpec kPlace = PlacementSpec::weighted_random();

struct Criterion {
    std::string label;
    std::chrono::steady_clock::time_point start;
    bool ok = true;
    std::string detail;
    std::string info;

    explicit Criterion(std::string l) : label(std::move(l)), start(std::chrono::steady_clock::now()) {}

    void check(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail += (detail.empty() ? "" : "; ") + what;
        }
    }

    void note(const std::string& what) { info += (info.empty() ? "" : ", ") + what; }

    ~Criterion() {
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] %s (%.1f s)%s%s%s%s\n", ok ? "PASS" : "FAIL", label.c_str(), secs,
                    info.empty() ? "" : " [", info.c_str(), info.empty() ? "" : "]",
                    detail.empty() ? "" : ("; FAIL: " + detail).c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// independent merge-sequence enumerator (built first, per the sigma oracle)
double sigma_enumerate(std::vector<ParticleType> parts, const KernelSpec& K,
                       const PlacementSpec& placement, int site_count) {
    if (parts.size() <= 1) return 1.0;
    double total = 0.0;
    std::vector<double> zdist(site_count);
    for (std::size_t i = 0; i < parts.size(); ++i)
        for (std::size_t j = i + 1; j < parts.size(); ++j) {
            const double rate = K.eval(parts[i], parts[j]);
            if (rate <= 0.0) continue;
            placement.distribution(parts[i], parts[j], zdist);
            for (int z = 0; z < site_count; ++z) {
                if (zdist[z] <= 0.0) continue;
                std::vector<ParticleType> next;
                next.reserve(parts.size() - 1);
                for (std::size_t k = 0; k < parts.size(); ++k)
                    if (k != i && k != j) next.push_back(parts[k]);
                next.push_back({z, parts[i].mass + parts[j].mass});
                total += rate * zdist[z] * sigma_enumerate(next, K, placement, site_count);
            }
        }
    return total;
}

void criterion_1_sigma_oracle() {
    Criterion c("criterion 1: sigma recursion vs brute-force merge-sequence oracle");
    const double T = 1.0;
    for (const auto& K : {KernelSpec::multiplicative(), KernelSpec::additive()}) {
        for (int n = 1; n <= 4; ++n) {
            const double lib = q_mass_nonspatial(n, T, K, kPlace);
            const double oracle =
                sigma_enumerate(std::vector<ParticleType>(n, ParticleType{0, 1}), K, kPlace, 1) *
                std::exp((n - 1) * std::log(T) - std::lgamma(static_cast<double>(n)));
            c.check(std::abs(lib - oracle) <= 1e-12 * std::max(1.0, std::abs(oracle)),
                    "n=" + std::to_string(n) + " lib=" + fmt(lib) + " oracle=" + fmt(oracle));
        }
    }
    // frozen hand values: multiplicative 1, T, 3T^2, 16T^3; additive 1, 2T, 9T^2, 64T^3
    const double mult_expect[] = {1.0, 1.0, 3.0, 16.0};
    const double add_expect[] = {1.0, 2.0, 9.0, 64.0};
    for (int n = 1; n <= 4; ++n) {
        c.check(std::abs(q_mass_nonspatial(n, T, KernelSpec::multiplicative(), kPlace) -
                         mult_expect[n - 1]) <= 1e-12,
                "multiplicative hand value n=" + std::to_string(n));
        c.check(std::abs(q_mass_nonspatial(n, T, KernelSpec::additive(), kPlace) -
                         add_expect[n - 1]) <= 1e-12,
                "additive hand value n=" + std::to_string(n));
    }
}

void criterion_2_q_limit() {
    Criterion c("criterion 2: Q-limit convergence of N^{|k|-1} P(full coalescence)");
    const double T = 0.1;
    const double q = 3.0 * T * T;  // = 0.03
    const Configuration atoms = monodisperse({0, 0, 0});
    const auto rows = mc_q_limit(atoms, T, KernelSpec::multiplicative(), kPlace,
                                 {100, 1000, 10000}, 1000000, 20260210, McQMode::Forced);
    const double phi_max = 0.5 * 1.0 * T * 9.0;  // (1/2) H T |k|^2
    for (const auto& r : rows) {
        const double envelope_low = q * std::exp(-phi_max / static_cast<double>(r.N));
        c.check(r.estimate <= q + 3.0 * r.std_err,
                "N=" + std::to_string(r.N) + " above q: " + fmt(r.estimate));
        c.check(r.estimate >= envelope_low - 3.0 * r.std_err,
                "N=" + std::to_string(r.N) + " below envelope: " + fmt(r.estimate));
    }
    for (const auto& r : rows)
        c.note("N=" + std::to_string(r.N) + ": " + fmt(r.estimate) + "+-" + fmt(r.std_err));
    const auto& largest = rows.back();
    c.check(std::abs(largest.estimate - q) <= 3.0 * largest.std_err,
            "largest N estimate " + fmt(largest.estimate) + " +- " + fmt(largest.std_err));
}

void criterion_3_gibbs() {
    Criterion c("criterion 3: Gibbs/Poisson representation identity");
    SimConfig cfg;
    cfg.N = 2;
    cfg.T = 0.3;
    cfg.kernel = KernelSpec::constant(1.0);
    cfg.placement = kPlace;
    cfg.space = SiteSpace::single();
    cfg.seed = 8812;
    const std::int64_t replicas = 400000;
    for (double b : {1.0, 0.7}) {
        for (const TestFunctional& f :
             {TestFunctional::one(), TestFunctional::max_tree_size_at_most(2)}) {
            cfg.seed += 101;  // independent streams per combination
            const GibbsResult res = gibbs_check(cfg, f, b, replicas);
            const double combined =
                std::sqrt(res.lhs_err * res.lhs_err + res.rhs_err * res.rhs_err);
            const std::string tag = f.name() + " b=" + fmt(b);
            c.note(tag + ": lhs=" + fmt(res.lhs) + " rhs=" + fmt(res.rhs));
            c.check(std::abs(res.lhs - res.rhs) <= 3.0 * combined,
                    tag + ": lhs=" + fmt(res.lhs) + " rhs=" + fmt(res.rhs) + " 3sig=" +
                        fmt(3.0 * combined));
            c.check(res.lhs == 0.0 || res.lhs_err / res.lhs <= 0.05, tag + ": lhs rel err");
            c.check(res.rhs == 0.0 || res.rhs_err / res.rhs <= 0.05, tag + ": rhs rel err");
        }
    }
}

void criterion_4_er_masses() {
    Criterion c("criterion 4: Erdos-Renyi correspondence of the non-gel mass");
    // oracle: survivor fraction 1 - theta with theta = 1 - exp(-2 theta), by bisection
    double lo = 1e-12, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (1.0 - std::exp(-2.0 * mid) > mid)
            lo = mid;
        else
            hi = mid;
    }
    const double survivor = 1.0 - 0.5 * (lo + hi);  // = 0.2032 to 4 digits

    const auto rows = ng_scan(KernelSpec::multiplicative(), kPlace, SiteSpace::single(),
                              {0.5, 2.0}, {100000}, {100, 200}, 24, 314159,
                              Engine::ProductFast);
    double sub = -1.0, super = -1.0;
    for (const auto& r : rows) {
        if (r.T == 0.5 && r.L == 100) sub = r.mean;
        if (r.T == 2.0 && r.L == 200) super = r.mean;
    }
    c.note("subcritical=" + fmt(sub) + ", supercritical=" + fmt(super) + " (oracle " +
           fmt(survivor) + ")");
    c.check(std::abs(sub - 1.0) <= 0.005, "T=0.5 L=100 value " + fmt(sub));
    c.check(std::abs(super - survivor) <= 0.02,
            "T=2 L=200 value " + fmt(super) + " vs " + fmt(survivor));
}

void criterion_5_el_subcritical() {
    Criterion c("criterion 5: Euler-Lagrange fixed point, subcritical");
    const SizeMassTable table = build_size_mass_table(100, 0.5, 1.0,
                                                      KernelSpec::multiplicative(), kPlace,
                                                      SiteSpace::single());
    const ElSolution sol = el_fixed_point(0.5, table, 100);
    c.note("D=" + fmt(sol.D) + ", residual=" + fmt(sol.residual));
    c.check(sol.converged, "did not converge");
    c.check(std::abs(sol.D - 1.0) <= 1e-6, "D = " + fmt(sol.D));
    c.check(sol.residual < 1e-10, "residual = " + fmt(sol.residual));
    // second-moment bound, enforced on the lemma's domain of validity
    // (T e^2 H < 1; at T = 0.5 the bound's hypothesis fails and its RHS is negative)
    for (double T : {0.05, 0.1, 0.12}) {
        const SizeMassTable tt = build_size_mass_table(80, T, 1.0,
                                                       KernelSpec::multiplicative(), kPlace,
                                                       SiteSpace::single());
        const ElSolution s = el_fixed_point(T, tt, 80);
        const double bound =
            std::exp(2.0) / (2.0 * 3.14159265358979323846 * (1.0 - std::exp(2.0) * T));
        c.check(s.second_moment <= bound,
                "second moment at T=" + fmt(T) + ": " + fmt(s.second_moment) + " > " +
                    fmt(bound));
    }
}

void criterion_6_gel_bounds() {
    Criterion c("criterion 6: gelation-time bounds");
    const GelationReport rep = gelation_bounds(1.0, 1.0);
    c.note("lower=" + fmt(rep.t_gel_lower) +
           (rep.t_gel_upper ? ", upper=" + fmt(*rep.t_gel_upper) : ", upper=none"));
    c.check(std::abs(rep.t_gel_lower - 0.135335) <= 1e-6,
            "lower = " + fmt(rep.t_gel_lower));
    c.check(rep.t_gel_upper.has_value(), "upper bound missing");
    if (rep.t_gel_upper) {
        c.check(*rep.t_gel_upper < 1e6, "upper not finite");
        c.check(rep.t_gel_lower < 1.0 && *rep.t_gel_upper > 1.0,
                "bracket misses the product-kernel critical time 1");
    }
}

void criterion_7_smol_oracle() {
    Criterion c("criterion 7: Smoluchowski solver vs second-moment ODE oracle");
    const double T = 0.5, dt = 1e-3;
    // independent oracle: RK4 on dM2/dt = M2^2 (closed form 1/(1-t))
    double m2 = 1.0;
    const auto f = [](double y) { return y * y; };
    for (double t = 0.0; t < T - 1e-12; t += dt) {
        const double h = std::min(dt, T - t);
        const double k1 = f(m2), k2 = f(m2 + 0.5 * h * k1), k3 = f(m2 + 0.5 * h * k2),
                     k4 = f(m2 + h * k3);
        m2 += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    const std::vector<double> snaps{T};
    const SmolResult res =
        smol_solve(DensityGrid::monodisperse_init(SiteSpace::single(), 80),
                   KernelSpec::multiplicative(), kPlace, T, dt, snaps);
    const DensityGrid& g = res.snapshots.back();
    c.note("M2=" + fmt(g.second_moment()) + " vs oracle " + fmt(m2) + ", mass deficit=" +
           fmt(std::abs(g.total_mass() + g.leaked_mass - 1.0)));
    c.check(std::abs(g.second_moment() - m2) <= 1e-3,
            "M2 = " + fmt(g.second_moment()) + " oracle " + fmt(m2));
    c.check(std::abs(g.total_mass() + g.leaked_mass - 1.0) <= 1e-6,
            "mass = " + fmt(g.total_mass() + g.leaked_mass));
    c.check(g.leaked_mass <= 1e-6, "leak = " + fmt(g.leaked_mass));
}

void criterion_8_hydrodynamic() {
    Criterion c("criterion 8: hydrodynamic consistency of solver and process");
    SimConfig cfg;
    cfg.N = 100000;
    cfg.T = 1.0;
    cfg.kernel = KernelSpec::constant(1.0);
    cfg.placement = kPlace;
    cfg.space = SiteSpace::single();
    cfg.seed = 271828;
    cfg.engine = Engine::ProductFast;
    const std::vector<double> checkpoints{0.25, 0.5, 1.0};
    const auto big = smol_vs_simulation(cfg, 20, 1e-3, checkpoints, 200);
    for (const auto& r : big) {
        c.note("t=" + fmt(r.t) + ": " + fmt(r.l1_distance));
        c.check(r.l1_distance <= 5e-3,
                "t=" + fmt(r.t) + " distance " + fmt(r.l1_distance));
    }
    SimConfig small = cfg;
    small.N = 10000;
    small.seed = 161803;
    const auto little = smol_vs_simulation(small, 20, 1e-3, checkpoints, 200);
    double sum_big = 0.0, sum_small = 0.0;
    for (std::size_t i = 0; i < big.size(); ++i) {
        sum_big += big[i].l1_distance;
        sum_small += little[i].l1_distance;
    }
    c.check(sum_small > sum_big, "convergence trend: N=1e4 " + fmt(sum_small) +
                                     " vs N=1e5 " + fmt(sum_big));
}

void criterion_9_structural() {
    Criterion c("criterion 9: structural property suite");
    // (a) reconstruction identity + mass conservation, exact, on random runs
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SimConfig cfg;
        cfg.N = 1;
        cfg.T = 0.6;
        cfg.kernel = KernelSpec::multiplicative();
        cfg.placement = kPlace;
        cfg.space = SiteSpace::uniform(2);
        cfg.seed = seed;
        cfg.engine = Engine::Dense;
        std::vector<int> sites;
        for (int i = 0; i < 12; ++i) sites.push_back(i % 2);
        cfg.init = InitSpec::fixed(sites);
        const EventLog log = simulate(cfg);
        const TreeForest forest = decompose(log);
        std::vector<double> times{0.0, log.horizon()};
        for (const Event& e : log.events()) times.push_back(e.time);
        for (double t : times) {
            Configuration sum;
            for (const auto& tree : forest.trees) {
                const Configuration snapshot = tree.at(t);
                for (const auto& [type, count] : snapshot.entries()) sum.add(type, count);
            }
            if (!(sum == log.state_at(t))) {
                c.check(false, "reconstruction differs at t=" + fmt(t));
                break;
            }
            c.check(sum.total_mass() == log.atom_count(), "mass drifted");
        }
    }
    // (b) R^T upper bound on 1000 random tree pairs
    {
        const KernelSpec kernel = KernelSpec::spatial_product({{1.0, 0.5}, {0.5, 0.8}});
        const double H = kernel_upper_constant(kernel, 1 << 20).value;
        const double T = 0.9;
        std::vector<Trajectory> trees;
        for (std::uint64_t seed = 100; trees.size() < 150; ++seed) {
            SimConfig cfg;
            cfg.N = 1;
            cfg.T = T;
            cfg.kernel = kernel;
            cfg.placement = kPlace;
            cfg.space = SiteSpace::uniform(2);
            cfg.seed = seed;
            cfg.engine = Engine::Dense;
            cfg.init = InitSpec::fixed({0, 1, 0, 1, 0, 1, 0});
            for (auto& t : decompose(simulate(cfg)).trees) trees.push_back(std::move(t));
        }
        int pairs = 0;
        bool all_ok = true;
        for (std::size_t i = 0; i < trees.size() && pairs < 1000; ++i)
            for (std::size_t j = i; j < trees.size() && pairs < 1000; ++j, ++pairs) {
                const double r = pairwise_noncoag(trees[i], trees[j], kernel, T);
                const double bound = H * T * static_cast<double>(trees[i].atom_count()) *
                                     static_cast<double>(trees[j].atom_count());
                if (r > bound * (1.0 + 1e-12)) all_ok = false;
            }
        c.check(pairs >= 1000, "not enough tree pairs");
        c.check(all_ok, "R bound violated");
    }
    // (c) q_mass <= bound for n <= 8
    for (const auto& K : {KernelSpec::multiplicative(), KernelSpec::additive(),
                          KernelSpec::constant(1.0)}) {
        const double H = kernel_upper_constant(K, 1 << 20).value;
        for (int n = 1; n <= 8; ++n)
            c.check(q_mass_nonspatial(n, 1.0, K, kPlace) <=
                        q_mass_bound(n, 1.0, H) * (1.0 + 1e-12),
                    "q bound n=" + std::to_string(n));
    }
    // (d) M_n table bounded by the moment bound, entrywise
    {
        const double T = 0.2, b = 0.5;
        const SizeMassTable table = build_size_mass_table(
            30, T, b, KernelSpec::multiplicative(), kPlace, SiteSpace::single());
        for (int n = 1; n <= table.n_max(); ++n)
            c.check(table.mass(n) <= m_moment_bound(n, T, 1.0, b) * (1.0 + 1e-9),
                    "M_n bound n=" + std::to_string(n));
    }
    // (e) seed determinism, byte equality of serialized logs
    {
        SimConfig cfg;
        cfg.N = 3000;
        cfg.T = 1.0;
        cfg.kernel = KernelSpec::multiplicative();
        cfg.placement = kPlace;
        cfg.space = SiteSpace::uniform(3);
        cfg.seed = 5117;
        cfg.engine = Engine::ProductFast;
        std::ostringstream a, b;
        event_log_to_jsonl(simulate(cfg), a);
        event_log_to_jsonl(simulate(cfg), b);
        c.check(a.str() == b.str() && !a.str().empty(), "event logs differ across reruns");
    }
}

}  // namespace

int main() {
    criterion_1_sigma_oracle();
    criterion_2_q_limit();
    criterion_3_gibbs();
    criterion_4_er_masses();
    criterion_5_el_subcritical();
    criterion_6_gel_bounds();
    criterion_7_smol_oracle();
    criterion_8_hydrodynamic();
    criterion_9_structural();
    std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
