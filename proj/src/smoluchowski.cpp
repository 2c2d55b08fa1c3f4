#include "coag/smoluchowski.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coag/parallel.hpp"

namespace coag {

double DensityGrid::total_mass() const {
    double s = 0.0;
    for (int x = 0; x < site_count; ++x)
        for (std::int64_t m = 1; m <= mass_cutoff; ++m) s += static_cast<double>(m) * at(x, m);
    return s;
}

double DensityGrid::second_moment() const {
    double s = 0.0;
    for (int x = 0; x < site_count; ++x)
        for (std::int64_t m = 1; m <= mass_cutoff; ++m)
            s += static_cast<double>(m) * static_cast<double>(m) * at(x, m);
    return s;
}

double DensityGrid::mass_below(std::int64_t L) const {
    double s = 0.0;
    for (int x = 0; x < site_count; ++x)
        for (std::int64_t m = 1; m <= std::min(L, mass_cutoff); ++m)
            s += static_cast<double>(m) * at(x, m);
    return s;
}

DensityGrid DensityGrid::monodisperse_init(const SiteSpace& space, std::int64_t L) {
    DensityGrid g(space.site_count(), L);
    for (int x = 0; x < g.site_count; ++x) g.at(x, 1) = space.site_weights[x];
    return g;
}

void smol_rhs(const DensityGrid& rho, const KernelSpec& K, const PlacementSpec& placement,
              GainConvention convention, std::span<double> out, double& leak_rate) {
    const int S = rho.site_count;
    const std::int64_t L = rho.mass_cutoff;
    std::fill(out.begin(), out.end(), 0.0);
    leak_rate = 0.0;
    const double gain_factor = convention == GainConvention::HalfOrderedSum ? 0.5 : 1.0;

    std::vector<double> zdist(S);
    for (std::int64_t m = 1; m <= L; ++m) {
        for (std::int64_t mp = 1; mp <= L; ++mp) {
            const std::int64_t msum = m + mp;
            for (int x = 0; x < S; ++x) {
                const double rx = rho.at(x, m);
                if (rx == 0.0) continue;
                for (int xp = 0; xp < S; ++xp) {
                    const double rxp = rho.at(xp, mp);
                    if (rxp == 0.0) continue;
                    const ParticleType a{x, m}, b{xp, mp};
                    const double flux = rx * rxp * K.eval(a, b);
                    if (flux == 0.0) continue;
                    // loss of the (x,m) particle; the (xp,mp) loss arrives when
                    // the loop visits the transposed pair
                    out[static_cast<std::size_t>(x) * L + (m - 1)] -= flux;
                    if (msum <= L) {
                        placement.distribution(a, b, zdist);
                        for (int z = 0; z < S; ++z)
                            if (zdist[z] > 0.0)
                                out[static_cast<std::size_t>(z) * L + (msum - 1)] +=
                                    gain_factor * flux * zdist[z];
                    } else {
                        leak_rate += gain_factor * flux * static_cast<double>(msum);
                    }
                }
            }
        }
    }
}

SmolResult smol_solve(DensityGrid rho0, const KernelSpec& K, const PlacementSpec& placement,
                      double T, double dt, std::span<const double> snapshot_times,
                      GainConvention convention) {
    if (!(dt > 0.0)) throw CoagError("smol_solve: dt must be > 0");
    SmolResult result;
    {
        const double H = kernel_upper_constant(K, rho0.mass_cutoff).value;
        const double mass = rho0.total_mass();
        result.stability_warning = dt * H * mass * mass > 0.1;
    }

    std::vector<double> snaps(snapshot_times.begin(), snapshot_times.end());
    std::sort(snaps.begin(), snaps.end());
    std::size_t next_snap = 0;

    const std::size_t cells = rho0.rho.size();
    std::vector<double> k1(cells), k2(cells), k3(cells), k4(cells), tmp(cells);
    DensityGrid grid = std::move(rho0);

    auto take_due_snapshots = [&](double upto) {
        while (next_snap < snaps.size() && snaps[next_snap] <= upto + 1e-12) {
            result.snapshots.push_back(grid);
            result.snapshots.back().t = snaps[next_snap];
            ++next_snap;
        }
    };
    take_due_snapshots(grid.t);

    double leak1, leak2, leak3, leak4;
    while (grid.t < T - 1e-12) {
        const double h = std::min(dt, T - grid.t);
        // make sure snapshots inside the step land on a step boundary
        double step = h;
        if (next_snap < snaps.size() && snaps[next_snap] > grid.t + 1e-12 &&
            snaps[next_snap] < grid.t + h)
            step = snaps[next_snap] - grid.t;

        smol_rhs(grid, K, placement, convention, k1, leak1);
        DensityGrid stage = grid;
        for (std::size_t i = 0; i < cells; ++i) stage.rho[i] = grid.rho[i] + 0.5 * step * k1[i];
        smol_rhs(stage, K, placement, convention, k2, leak2);
        for (std::size_t i = 0; i < cells; ++i) stage.rho[i] = grid.rho[i] + 0.5 * step * k2[i];
        smol_rhs(stage, K, placement, convention, k3, leak3);
        for (std::size_t i = 0; i < cells; ++i) stage.rho[i] = grid.rho[i] + step * k3[i];
        smol_rhs(stage, K, placement, convention, k4, leak4);

        for (std::size_t i = 0; i < cells; ++i)
            grid.rho[i] += step / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        grid.leaked_mass += step / 6.0 * (leak1 + 2.0 * leak2 + 2.0 * leak3 + leak4);
        grid.t += step;

        // round-off can push cells slightly negative; clamp and account
        for (int x = 0; x < grid.site_count; ++x)
            for (std::int64_t m = 1; m <= grid.mass_cutoff; ++m) {
                double& v = grid.at(x, m);
                if (v < 0.0) {
                    grid.clamped_mass += -v * static_cast<double>(m);
                    v = 0.0;
                }
            }
        take_due_snapshots(grid.t);
    }
    take_due_snapshots(T + 1.0);

    result.clamp_total = grid.clamped_mass;
    result.clamp_warning = grid.clamped_mass > 1e-8;
    if (result.snapshots.empty() || result.snapshots.back().t < grid.t)
        result.snapshots.push_back(grid);
    return result;
}

std::vector<SmolVsSimRow> smol_vs_simulation(const SimConfig& cfg, std::int64_t L, double dt,
                                             std::span<const double> checkpoints,
                                             std::int64_t replicas, GainConvention convention) {
    const int S = cfg.space.site_count();
    const std::size_t cells = static_cast<std::size_t>(S) * L;
    std::vector<double> checks(checkpoints.begin(), checkpoints.end());
    std::sort(checks.begin(), checks.end());
    if (!checks.empty() && checks.back() > cfg.T + 1e-12)
        throw CoagError("smol_vs_simulation: checkpoint beyond the horizon");
    const std::size_t C = checks.size();

    // PDE side
    SmolResult pde = smol_solve(DensityGrid::monodisperse_init(cfg.space, L), cfg.kernel,
                                cfg.placement, cfg.T, dt, checks, convention);

    // empirical side: accumulate per-replica grids at each checkpoint
    std::vector<std::vector<double>> sums(C, std::vector<double>(cells, 0.0));
    std::vector<std::vector<double>> sqsums(C, std::vector<double>(cells, 0.0));
    std::vector<std::vector<std::vector<double>>> per_rep(
        replicas, std::vector<std::vector<double>>(C, std::vector<double>(cells, 0.0)));

    parallel_replicas(replicas, [&](std::int64_t r) {
        SimConfig c = cfg;
        c.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(r));
        const EventLog log = simulate(c);
        // single replay; sample the configuration at each checkpoint
        Configuration state = monodisperse(log.initial_sites());
        std::size_t ev = 0;
        for (std::size_t ci = 0; ci < C; ++ci) {
            const double t = checks[ci];
            while (ev < log.events().size() && log.events()[ev].time <= t) {
                state = state.apply_step(log.events()[ev].type_a, log.events()[ev].type_b,
                                         log.events()[ev].target_site);
                ++ev;
            }
            auto& grid = per_rep[r][ci];
            for (const auto& [type, count] : state.entries())
                if (type.mass <= L)
                    grid[static_cast<std::size_t>(type.site) * L + (type.mass - 1)] +=
                        static_cast<double>(count) / static_cast<double>(cfg.N);
        }
    });
    for (std::int64_t r = 0; r < replicas; ++r)
        for (std::size_t ci = 0; ci < C; ++ci)
            for (std::size_t i = 0; i < cells; ++i) {
                sums[ci][i] += per_rep[r][ci][i];
                sqsums[ci][i] += per_rep[r][ci][i] * per_rep[r][ci][i];
            }

    std::vector<SmolVsSimRow> rows;
    for (std::size_t ci = 0; ci < C; ++ci) {
        const DensityGrid& ref = pde.snapshots[ci];
        double l1 = 0.0, err = 0.0;
        const double R = static_cast<double>(replicas);
        for (std::size_t i = 0; i < cells; ++i) {
            const double mean = sums[ci][i] / R;
            const double var = std::max(0.0, sqsums[ci][i] / R - mean * mean);
            l1 += std::abs(mean - ref.rho[i]);
            err += std::sqrt(var / R);
        }
        rows.push_back({checks[ci], l1, err});
    }
    return rows;
}

}  // namespace coag
