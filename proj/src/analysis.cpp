#include "coag/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

#include "coag/parallel.hpp"
#include "coag/trajectories.hpp"

namespace coag {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kE2 = 7.38905609893065;  // e^2

double el_map(double D, double T, const SizeMassTable& table, int L) {
    double s = 0.0;
    for (int n = 1; n <= L; ++n) {
        const double lg =
            table.log_mass[n - 1] + std::log(static_cast<double>(n)) - T * n * D;
        s += std::exp(std::min(lg, 700.0));
    }
    return s;
}

double el_bisect(double T, const SizeMassTable& table, int L, int& iters) {
    double lo = 0.0, hi = 1.0;
    while (hi - el_map(hi, T, table, L) < 0.0 && hi < 1e12) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
        ++iters;
        const double mid = 0.5 * (lo + hi);
        if (mid - el_map(mid, T, table, L) > 0.0)
            hi = mid;
        else
            lo = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

ElSolution el_fixed_point(double T, const SizeMassTable& table, int L, double damping,
                          double tol, int max_iter) {
    if (L < 1 || L > table.n_max())
        throw CoagError("el_fixed_point: L outside the table range");
    if (!(damping > 0.0) || damping > 1.0)
        throw CoagError("el_fixed_point: damping must lie in (0,1]");

    ElSolution sol;
    sol.T = T;
    sol.L = L;

    // Damped iteration as the primary route. The map is decreasing but can be
    // arbitrarily steep below the fixed point, so the iterate may cycle through
    // long explode/decay excursions; after a bounded number of iterations
    // without convergence, fall back to bisection of the monotone residual
    // D - g(D), which has the same unique truncated root.
    const int iteration_budget = std::min(max_iter, 200);
    double D = 1.0;
    for (int it = 0; it < iteration_budget; ++it) {
        const double next = (1.0 - damping) * D + damping * el_map(D, T, table, L);
        const double delta = std::abs(next - D);
        D = next;
        sol.iterations = it + 1;
        if (std::isfinite(D) && delta < tol) {
            sol.converged = true;
            break;
        }
        if (!std::isfinite(D)) break;
    }
    if (!sol.converged && max_iter >= 250) {
        // max_iter below the fallback budget means the caller wants the raw
        // iterate back (converged = false)
        D = el_bisect(T, table, L, sol.iterations);
        sol.converged = true;
    }

    sol.D = D;
    sol.residual = std::abs(D - el_map(D, T, table, L));
    sol.nu.resize(L);
    for (int n = 1; n <= L; ++n) {
        sol.nu[n - 1] = std::exp(table.log_mass[n - 1] - T * n * D);
        sol.first_moment += n * sol.nu[n - 1];
        sol.second_moment += static_cast<double>(n) * n * sol.nu[n - 1];
    }
    return sol;
}

double el_uniqueness_threshold(double H) {
    if (!(H > 0.0)) throw CoagError("el_uniqueness_threshold: H must be > 0");
    return (1.0 / kE2) * kPi / (1.0 + kPi) / H;
}

double rate_lower_bound(double T, double H, double h) {
    const double bracket = std::exp(1.0) / (kPi * H) + std::pow(std::log(2.0 * T * H * kE2), 2) / h;
    return 1.0 - bracket / (2.0 * T);
}

GelationReport gelation_bounds(double H, double h) {
    if (!(H > 0.0)) throw CoagError("gelation_bounds: H must be > 0");
    GelationReport rep;
    rep.H = H;
    rep.h = h;
    rep.t_gel_lower = 1.0 / (H * kE2);
    rep.uniqueness_T = el_uniqueness_threshold(H);

    if (h > 0.0) {
        // first sign change of the lower bound on a geometric grid, then bisect
        const double t0 = rep.t_gel_lower, t1 = 1e6;
        const int grid = 4096;
        double prev_t = t0;
        double prev_f = rate_lower_bound(t0, H, h);
        for (int i = 1; i <= grid; ++i) {
            const double t = t0 * std::pow(t1 / t0, static_cast<double>(i) / grid);
            const double f = rate_lower_bound(t, H, h);
            if (prev_f <= 0.0 && f > 0.0) {
                double lo = prev_t, hi = t;
                while (hi - lo > 1e-9) {
                    const double mid = 0.5 * (lo + hi);
                    if (rate_lower_bound(mid, H, h) > 0.0)
                        hi = mid;
                    else
                        lo = mid;
                }
                rep.t_gel_upper = hi;
                break;
            }
            prev_t = t;
            prev_f = f;
        }
    }

    const double t_hi = rep.t_gel_upper ? *rep.t_gel_upper * 2.0 : 1e3;
    for (int i = 0; i <= 64; ++i) {
        const double t = rep.t_gel_lower * std::pow(t_hi / rep.t_gel_lower, i / 64.0);
        rep.I_lower_table.emplace_back(t, h > 0.0 ? rate_lower_bound(t, H, h)
                                                  : -std::numeric_limits<double>::infinity());
    }
    return rep;
}

double rate_function_reduced(std::span<const double> nu, const SizeMassTable& table, double T) {
    if (static_cast<int>(nu.size()) > table.n_max())
        throw CoagError("rate_function_reduced: nu longer than the table");
    double entropy = 0.0, total = 0.0, D = 0.0;
    for (std::size_t i = 0; i < nu.size(); ++i) {
        const double v = nu[i];
        if (v < 0.0) throw CoagError("rate_function_reduced: negative mass");
        if (v == 0.0) continue;  // 0 log 0 = 0
        const double logM = table.log_mass[i];
        if (!std::isfinite(logM))
            throw CoagError("rate_function_reduced: nu is not absolutely continuous "
                            "with respect to the reference table");
        entropy += v * (std::log(v) - logM);
        total += v;
        D += static_cast<double>(i + 1) * v;
    }
    return entropy + 0.5 * T * D * D + 1.0 - total;
}

double TestFunctional::eval(const std::vector<std::int64_t>& tree_sizes, double N) const {
    switch (kind) {
        case Kind::One:
            return 1.0;
        case Kind::MaxTreeSizeAtMost: {
            for (std::int64_t s : tree_sizes)
                if (s > size_bound) return 0.0;
            return 1.0;
        }
        case Kind::ExpNegTotalWeight:
            return std::exp(-static_cast<double>(tree_sizes.size()) / N);
    }
    return 1.0;
}

std::string TestFunctional::name() const {
    switch (kind) {
        case Kind::One:
            return "one";
        case Kind::MaxTreeSizeAtMost:
            return "max_tree_size_at_most_" + std::to_string(size_bound);
        case Kind::ExpNegTotalWeight:
            return "exp_neg_total_weight";
    }
    return "one";
}

GibbsResult gibbs_check(const SimConfig& cfg, const TestFunctional& f, double b,
                        std::int64_t replicas) {
    if (!(b > 0.0)) throw CoagError("gibbs_check: b must be > 0");
    const int S = cfg.space.site_count();
    const double N = static_cast<double>(cfg.N);

    // ---- proposal: per-size masses Mtilde_n = e^{1-b} b^n / n! * qbar_n and,
    // per size, the site-multiset distribution weighted by |Q|.
    struct SizeRow {
        double mass = 0.0;                           // Mtilde_n
        std::vector<double> weights;                 // over multisets
        std::vector<std::vector<int>> multisets;     // site vectors
        std::vector<Configuration> configs;
    };
    constexpr int kMaxTreeAtoms = 14;
    std::vector<SizeRow> rows;
    double mtilde_total = 0.0;
    for (int n = 1; n <= kMaxTreeAtoms; ++n) {
        SizeRow row;
        std::vector<int> comp(S, 0);
        std::function<void(int, int)> rec = [&](int pos, int left) {
            if (pos == S - 1) {
                comp[pos] = left;
                std::vector<int> sites;
                double logw = std::lgamma(n + 1.0);
                for (int s = 0; s < S; ++s) {
                    logw += comp[s] * std::log(std::max(cfg.space.site_weights[s], 1e-300)) -
                            std::lgamma(comp[s] + 1.0);
                    for (int i = 0; i < comp[s]; ++i) sites.push_back(s);
                }
                const Configuration atoms = monodisperse(sites);
                const double q = q_mass(atoms, cfg.T, cfg.kernel, cfg.placement, kMaxTreeAtoms);
                const double w = std::exp(logw) * q;
                if (w > 0.0) {
                    row.weights.push_back(w);
                    row.multisets.push_back(sites);
                    row.configs.push_back(atoms);
                }
                return;
            }
            for (int c = 0; c <= left; ++c) {
                comp[pos] = c;
                rec(pos + 1, left - c);
            }
        };
        rec(0, n);
        const double qbar = std::accumulate(row.weights.begin(), row.weights.end(), 0.0);
        row.mass = std::exp((1.0 - b) + n * std::log(b) - std::lgamma(n + 1.0)) * qbar;
        mtilde_total += row.mass;
        rows.push_back(std::move(row));
    }
    // truncation must be negligible: the computed masses have to be decaying
    // geometrically at the cut, with a tail estimate far below the total.
    // The induced bias on the estimator is of order N * tail, well below the
    // Monte-Carlo resolution at this threshold.
    {
        const double last = rows[kMaxTreeAtoms - 1].mass;
        const double prev = rows[kMaxTreeAtoms - 2].mass;
        const double ratio = prev > 0.0 ? last / prev : 0.0;
        const double tail = ratio < 1.0 ? last * ratio / (1.0 - ratio) : 1e300;
        if (!(ratio < 0.9) || !(tail < 1e-7 * std::max(mtilde_total, 1e-300)))
            throw CoagError("gibbs_check: size truncation not negligible; reduce T, b or N");
    }
    std::vector<double> size_weights(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) size_weights[i] = rows[i].mass;

    // ---- lhs: direct simulation
    std::vector<double> lhs_vals(replicas);
    parallel_replicas(replicas, [&](std::int64_t r) {
        SimConfig c = cfg;
        c.seed = derive_seed(cfg.seed, 2 * static_cast<std::uint64_t>(r));
        c.engine = Engine::Dense;
        const EventLog log = simulate(c);
        const TreeForest forest = decompose(log);
        std::vector<std::int64_t> sizes;
        sizes.reserve(forest.trees.size());
        for (const auto& t : forest.trees) sizes.push_back(t.atom_count());
        lhs_vals[r] = f.eval(sizes, N);
    });

    // ---- rhs: interacting-Poisson representation with importance weights
    // value = prod_i e^{-phi_i/N} * e^{-(1/2N) sum_{i!=j} R} * e^{(b-1)m}
    //         * b^{-sum n_i} * f, averaged, times e^{N(|Mtilde|-1)}
    std::vector<double> rhs_vals(replicas);
    parallel_replicas(replicas, [&](std::int64_t r) {
        Rng rng(derive_seed(cfg.seed, 2 * static_cast<std::uint64_t>(r) + 1));
        const std::int64_t points = rng.poisson(N * mtilde_total);
        std::vector<Trajectory> trees;
        std::vector<std::int64_t> sizes;
        double logval = 0.0;
        for (std::int64_t p = 0; p < points; ++p) {
            const std::size_t ni = rng.categorical(size_weights, mtilde_total);
            const SizeRow& row = rows[ni];
            const double wtot =
                std::accumulate(row.weights.begin(), row.weights.end(), 0.0);
            const std::size_t mi = rng.categorical(row.weights, wtot);
            auto [tree, qw] = sample_tree(row.configs[mi], cfg.T, cfg.kernel, cfg.placement,
                                          rng, kMaxTreeAtoms);
            (void)qw;
            logval -= tree_density_exponent(tree, cfg.kernel, cfg.T) / N;
            sizes.push_back(tree.atom_count());
            trees.push_back(std::move(tree));
        }
        for (std::size_t i = 0; i < trees.size(); ++i)
            for (std::size_t j = i + 1; j < trees.size(); ++j)
                logval -= pairwise_noncoag(trees[i], trees[j], cfg.kernel, cfg.T) / N;
        logval += (b - 1.0) * static_cast<double>(points);
        double atom_total = 0.0;
        for (std::int64_t s : sizes) atom_total += static_cast<double>(s);
        logval -= atom_total * std::log(b);
        rhs_vals[r] = std::exp(logval) * f.eval(sizes, N);
    });

    auto mean_se = [](const std::vector<double>& v) {
        const double n = static_cast<double>(v.size());
        const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
        double var = 0.0;
        for (double x : v) var += (x - mean) * (x - mean);
        var /= std::max(1.0, n - 1.0);
        return std::make_pair(mean, std::sqrt(var / n));
    };

    GibbsResult out;
    std::tie(out.lhs, out.lhs_err) = mean_se(lhs_vals);
    const auto [rm, rs] = mean_se(rhs_vals);
    const double prefactor = std::exp(N * (mtilde_total - 1.0));
    out.rhs = rm * prefactor;
    out.rhs_err = rs * prefactor;
    out.variance_warning = out.rhs != 0.0 && out.rhs_err / std::abs(out.rhs) > 0.5;
    return out;
}

std::vector<NgScanRow> ng_scan(const KernelSpec& kernel, const PlacementSpec& placement,
                               const SiteSpace& space, const std::vector<double>& T_list,
                               const std::vector<std::int64_t>& N_list,
                               const std::vector<std::int64_t>& L_list, std::int64_t replicas,
                               std::uint64_t seed, Engine engine) {
    if (L_list.empty()) throw CoagError("ng_scan: empty L list");
    std::vector<NgScanRow> rows;
    std::uint64_t stream = 0;
    for (double T : T_list) {
        for (std::int64_t N : N_list) {
            std::vector<std::vector<double>> per_replica(replicas);
            const std::uint64_t this_stream = stream++;
            parallel_replicas(replicas, [&](std::int64_t r) {
                SimConfig cfg;
                cfg.N = N;
                cfg.T = T;
                cfg.kernel = kernel;
                cfg.placement = placement;
                cfg.space = space;
                cfg.engine = engine;
                cfg.seed = derive_seed(seed, (this_stream << 32) ^ static_cast<std::uint64_t>(r));
                const EventLog log = simulate(cfg);
                const Configuration final = log.state_at(T);
                std::vector<double> vals;
                vals.reserve(L_list.size());
                for (std::int64_t L : L_list)
                    vals.push_back(static_cast<double>(final.mass_below(L)) /
                                   static_cast<double>(N));
                per_replica[r] = std::move(vals);
            });
            for (std::size_t li = 0; li < L_list.size(); ++li) {
                double mean = 0.0;
                for (auto& v : per_replica) mean += v[li];
                mean /= static_cast<double>(replicas);
                double var = 0.0;
                for (auto& v : per_replica) var += (v[li] - mean) * (v[li] - mean);
                var /= std::max<double>(1.0, static_cast<double>(replicas - 1));
                const double se = std::sqrt(var / static_cast<double>(replicas));
                rows.push_back({T, N, L_list[li], mean, se, false});
            }
        }
    }
    // flag the (largest N, largest L) row per T when its value drops below 1 - 3 sigma
    const std::int64_t maxN = *std::max_element(N_list.begin(), N_list.end());
    const std::int64_t maxL = *std::max_element(L_list.begin(), L_list.end());
    for (auto& row : rows)
        if (row.N == maxN && row.L == maxL && row.mean < 1.0 - 3.0 * row.std_err)
            row.gel_flag = true;
    return rows;
}

}  // namespace coag
