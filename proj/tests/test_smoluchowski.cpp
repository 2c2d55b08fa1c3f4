#include <doctest.h>

#include <cmath>
#include <vector>

#include "coag/smoluchowski.hpp"

using namespace coag;

namespace {

const PlacementSpec kPlace = PlacementSpec::weighted_random();

}  // namespace

TEST_CASE("rhs examples for the constant kernel") {
    const std::int64_t L = 10;
    DensityGrid rho(1, L);
    const double c = 0.4;
    rho.at(0, 1) = c;
    std::vector<double> out(rho.rho.size());
    double leak = 0.0;
    smol_rhs(rho, KernelSpec::constant(1.0), kPlace, GainConvention::HalfOrderedSum, out, leak);
    CHECK(out[1] == doctest::Approx(0.5 * c * c));  // gain of mass 2
    CHECK(out[0] == doctest::Approx(-c * c));       // loss of mass 1
    CHECK(leak == 0.0);

    std::fill(rho.rho.begin(), rho.rho.end(), 0.0);
    smol_rhs(rho, KernelSpec::constant(1.0), kPlace, GainConvention::HalfOrderedSum, out, leak);
    for (double v : out) CHECK(v == 0.0);
}

TEST_CASE("zero kernel leaves the density constant") {
    DensityGrid rho0 = DensityGrid::monodisperse_init(SiteSpace::uniform(2), 5);
    const std::vector<double> snaps{0.5, 1.0};
    const SmolResult res =
        smol_solve(rho0, KernelSpec::constant(0.0), kPlace, 1.0, 0.01, snaps);
    REQUIRE(res.snapshots.size() == 2);
    for (const auto& g : res.snapshots) {
        CHECK(g.at(0, 1) == doctest::Approx(0.5));
        CHECK(g.at(1, 1) == doctest::Approx(0.5));
        CHECK(g.total_mass() == doctest::Approx(1.0));
    }
}

TEST_CASE("half convention conserves mass; unit convention does not") {
    const std::int64_t L = 40;
    const double T = 0.4;
    DensityGrid rho0 = DensityGrid::monodisperse_init(SiteSpace::single(), L);
    const std::vector<double> snaps{T};

    const SmolResult half = smol_solve(rho0, KernelSpec::constant(1.0), kPlace, T, 1e-3, snaps,
                                       GainConvention::HalfOrderedSum);
    const DensityGrid& hg = half.snapshots.back();
    CHECK(std::abs(hg.total_mass() + hg.leaked_mass - 1.0) < 1e-9);

    const SmolResult unit = smol_solve(rho0, KernelSpec::constant(1.0), kPlace, T, 1e-3, snaps,
                                       GainConvention::UnitOrderedSum);
    const DensityGrid& ug = unit.snapshots.back();
    CHECK(ug.total_mass() + ug.leaked_mass > 1.05);  // mass manufactured from nothing
}

TEST_CASE("constant kernel matches the classical closed form") {
    // rho_m(t) = (t/2)^{m-1} / (1 + t/2)^{m+1} for monodisperse start
    const std::int64_t L = 25;
    const double T = 1.0;
    DensityGrid rho0 = DensityGrid::monodisperse_init(SiteSpace::single(), L);
    const std::vector<double> snaps{0.5, 1.0};
    const SmolResult res =
        smol_solve(rho0, KernelSpec::constant(1.0), kPlace, T, 1e-3, snaps);
    for (const auto& g : res.snapshots) {
        const double t = g.t;
        for (std::int64_t m = 1; m <= 10; ++m) {
            const double expect =
                std::pow(t / 2.0, m - 1.0) / std::pow(1.0 + t / 2.0, m + 1.0);
            CHECK(g.at(0, m) == doctest::Approx(expect).epsilon(1e-6));
        }
    }
}

TEST_CASE("multiplicative second moment follows dM2/dt = M2^2") {
    // independent scalar oracle, integrated with its own RK4
    const double T = 0.5, dt = 1e-3;
    double m2 = 1.0;
    const auto f = [](double y) { return y * y; };
    for (double t = 0.0; t < T - 1e-12; t += dt) {
        const double h = std::min(dt, T - t);
        const double k1 = f(m2);
        const double k2 = f(m2 + 0.5 * h * k1);
        const double k3 = f(m2 + 0.5 * h * k2);
        const double k4 = f(m2 + h * k3);
        m2 += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    CHECK(m2 == doctest::Approx(2.0).epsilon(1e-6));  // closed form 1/(1-t)

    DensityGrid rho0 = DensityGrid::monodisperse_init(SiteSpace::single(), 80);
    const std::vector<double> snaps{T};
    const SmolResult res =
        smol_solve(rho0, KernelSpec::multiplicative(), kPlace, T, dt, snaps);
    const DensityGrid& g = res.snapshots.back();
    CHECK(std::abs(g.second_moment() - m2) < 1e-3);
    CHECK(std::abs(g.total_mass() + g.leaked_mass - 1.0) < 1e-6);
    CHECK(g.leaked_mass < 1e-6);
}

TEST_CASE("fourth-order self convergence") {
    // halving dt cuts the self-convergence error by about 16x
    const double T = 0.25;
    const std::int64_t L = 20;
    auto run = [&](double dt) {
        DensityGrid rho0 = DensityGrid::monodisperse_init(SiteSpace::single(), L);
        const std::vector<double> snaps{T};
        return smol_solve(rho0, KernelSpec::multiplicative(), kPlace, T, dt, snaps)
            .snapshots.back();
    };
    const DensityGrid fine = run(0.0025);
    const DensityGrid mid = run(0.02);
    const DensityGrid coarse = run(0.04);
    double err_mid = 0.0, err_coarse = 0.0;
    for (std::size_t i = 0; i < fine.rho.size(); ++i) {
        err_mid += std::abs(mid.rho[i] - fine.rho[i]);
        err_coarse += std::abs(coarse.rho[i] - fine.rho[i]);
    }
    const double ratio = err_coarse / err_mid;
    CHECK(ratio > 8.0);
    CHECK(ratio < 32.0);
}

TEST_CASE("site symmetry is preserved exactly") {
    const KernelSpec sp = KernelSpec::spatial_product({{1.0, 0.5}, {0.5, 1.0}});
    DensityGrid rho0 = DensityGrid::monodisperse_init(SiteSpace::uniform(2), 15);
    const std::vector<double> snaps{0.3};
    const SmolResult res = smol_solve(rho0, sp, kPlace, 0.3, 5e-3, snaps);
    const DensityGrid& g = res.snapshots.back();
    // identical up to summation-order rounding
    for (std::int64_t m = 1; m <= 15; ++m)
        CHECK(g.at(0, m) == doctest::Approx(g.at(1, m)).epsilon(1e-13));
}

TEST_CASE("leak accounting distinguishes truncation from bugs") {
    // tiny cutoff so the cascade leaks quickly
    DensityGrid rho0 = DensityGrid::monodisperse_init(SiteSpace::single(), 3);
    const std::vector<double> snaps{1.0};
    const SmolResult res =
        smol_solve(rho0, KernelSpec::constant(1.0), kPlace, 1.0, 1e-3, snaps);
    const DensityGrid& g = res.snapshots.back();
    CHECK(g.leaked_mass > 1e-3);
    CHECK(std::abs(g.total_mass() + g.leaked_mass - 1.0) < 1e-9);
}

TEST_CASE("stability heuristic warning") {
    DensityGrid rho0 = DensityGrid::monodisperse_init(SiteSpace::single(), 10);
    const std::vector<double> snaps{0.1};
    const SmolResult bad =
        smol_solve(rho0, KernelSpec::constant(5.0), kPlace, 0.1, 0.05, snaps);
    CHECK(bad.stability_warning);
    const SmolResult good =
        smol_solve(rho0, KernelSpec::constant(5.0), kPlace, 0.1, 1e-4, snaps);
    CHECK_FALSE(good.stability_warning);
}

TEST_CASE("smol_vs_simulation: two-site spatial kernel cross-validation") {
    SimConfig cfg;
    cfg.N = 100000;
    cfg.T = 0.08;  // T*H = 0.08, inside the uniqueness window
    cfg.kernel = KernelSpec::spatial_product({{1.0, 0.5}, {0.5, 1.0}});
    cfg.placement = kPlace;
    cfg.space = SiteSpace::uniform(2);
    cfg.seed = 424242;
    cfg.engine = Engine::ProductFast;
    const std::vector<double> checks{0.08};
    const auto rows = smol_vs_simulation(cfg, 12, 5e-4, checks, 100);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].l1_distance <= 1e-2);
}

TEST_CASE("smol_vs_simulation: zero kernel distance is pure MC noise") {
    SimConfig cfg;
    cfg.N = 3000;
    cfg.T = 0.5;
    cfg.kernel = KernelSpec::constant(0.0);
    cfg.placement = kPlace;
    cfg.space = SiteSpace::single();
    cfg.seed = 99;
    const std::vector<double> checks{0.25, 0.5};
    const auto rows_few = smol_vs_simulation(cfg, 5, 1e-2, checks, 8);
    const auto rows_many = smol_vs_simulation(cfg, 5, 1e-2, checks, 128);
    REQUIRE(rows_few.size() == 2);
    // more replicas shrink the distance (ratio well below 1, not asserted tightly)
    CHECK(rows_many[0].l1_distance < rows_few[0].l1_distance);
    CHECK(rows_many[1].l1_distance < 0.05);
}
