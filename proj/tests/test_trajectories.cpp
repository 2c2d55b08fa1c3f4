#include <doctest.h>

#include <cmath>

#include "coag/kernels.hpp"
#include "coag/simulator.hpp"
#include "coag/trajectories.hpp"

using namespace coag;

namespace {

EventLog random_run(std::uint64_t seed, int atoms, double T, const KernelSpec& kernel) {
    SimConfig cfg;
    cfg.N = 1;
    cfg.T = T;
    cfg.kernel = kernel;
    cfg.placement = PlacementSpec::weighted_random();
    cfg.space = SiteSpace::uniform(2);
    cfg.seed = seed;
    cfg.engine = Engine::Dense;
    std::vector<int> sites;
    for (int i = 0; i < atoms; ++i) sites.push_back(i % 2);
    cfg.init = InitSpec::fixed(sites);
    return simulate(cfg);
}

}  // namespace

TEST_CASE("decompose trivial cases") {
    SUBCASE("no events: one tree per atom") {
        const EventLog log = random_run(3, 6, 1e-12, KernelSpec::constant(1e-9));
        REQUIRE(log.events().empty());
        const TreeForest forest = decompose(log);
        CHECK(forest.trees.size() == 6);
        for (const auto& t : forest.trees) CHECK(t.atom_count() == 1);
    }
    SUBCASE("full merge: a single tree carrying the whole log") {
        const EventLog log = random_run(4, 5, 1000.0, KernelSpec::multiplicative());
        REQUIRE(log.final_particle_count() == 1);
        const TreeForest forest = decompose(log);
        REQUIRE(forest.trees.size() == 1);
        CHECK(forest.trees[0].atom_count() == 5);
        CHECK(forest.trees[0].jumps().size() == log.events().size());
    }
}

TEST_CASE("reconstruction identity: sum of trees equals the state, exactly") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull}) {
        const EventLog log = random_run(seed, 10, 0.7, KernelSpec::multiplicative());
        const TreeForest forest = decompose(log);
        // multiset union of initial atoms matches the run
        std::int64_t atoms = 0;
        for (const auto& t : forest.trees) atoms += t.atom_count();
        CHECK(atoms == log.atom_count());

        std::vector<double> times{0.0, log.horizon()};
        for (const Event& e : log.events()) {
            times.push_back(e.time);
            times.push_back(e.time - 1e-12);
        }
        for (double t : times) {
            if (t < 0.0) continue;
            Configuration sum;
            for (const auto& tree : forest.trees) {
                const Configuration snapshot = tree.at(t);
                for (const auto& [type, count] : snapshot.entries()) sum.add(type, count);
            }
            CHECK(sum == log.state_at(t));
        }
    }
}

TEST_CASE("pairwise non-coagulation functional") {
    const double T = 2.0;
    SUBCASE("two jump-free atoms: T * K(a,b)") {
        const Trajectory a(monodisperse({0}), {}, T);
        const Trajectory b(monodisperse({1}), {}, T);
        const KernelSpec sp = KernelSpec::spatial_product({{1.0, 0.25}, {0.25, 1.0}});
        CHECK(pairwise_noncoag(a, b, sp, T) ==
              doctest::Approx(T * sp.eval({0, 1}, {1, 1})));
        CHECK(pairwise_noncoag(a, b, KernelSpec::constant(1.5), T) == doctest::Approx(1.5 * T));
    }
    SUBCASE("multiplicative closed form and symmetry on random trees") {
        for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
            const TreeForest fa =
                decompose(random_run(seed, 8, 1000.0, KernelSpec::multiplicative()));
            const TreeForest fb =
                decompose(random_run(seed + 100, 6, 1000.0, KernelSpec::multiplicative()));
            REQUIRE(fa.trees.size() == 1);
            REQUIRE(fb.trees.size() == 1);
            // closed form via mass conservation; evaluate with the generic walker too
            const KernelSpec mult = KernelSpec::multiplicative();
            const double direct = pairwise_noncoag(fa.trees[0], fb.trees[0], mult, T);
            CHECK(direct == doctest::Approx(T * 8.0 * 6.0));
            CHECK(pairwise_noncoag(fb.trees[0], fa.trees[0], mult, T) ==
                  doctest::Approx(direct));
        }
    }
    SUBCASE("upper bound H T |xi_0||xi'_0| over random tree pairs") {
        const KernelSpec kernel = KernelSpec::spatial_product({{1.0, 0.5}, {0.5, 0.8}});
        const double H = kernel_upper_constant(kernel, 1 << 20).value;
        std::vector<Trajectory> trees;
        for (std::uint64_t seed = 0; seed < 40; ++seed) {
            const TreeForest f = decompose(random_run(seed, 7, 0.9, kernel));
            for (const auto& t : f.trees) trees.push_back(t);
        }
        int pairs = 0;
        for (std::size_t i = 0; i < trees.size() && pairs < 1000; ++i)
            for (std::size_t j = i; j < trees.size() && pairs < 1000; ++j, ++pairs) {
                const double r = pairwise_noncoag(trees[i], trees[j], kernel, 0.9);
                const double bound = H * 0.9 *
                                     static_cast<double>(trees[i].atom_count()) *
                                     static_cast<double>(trees[j].atom_count());
                CHECK(r <= bound * (1.0 + 1e-12));
            }
        CHECK(pairs > 100);
    }
}

TEST_CASE("interaction energy") {
    const double T = 1.0;
    const KernelSpec constant = KernelSpec::constant(2.0);
    const Trajectory a(monodisperse({0}), {}, T);
    const Trajectory b(monodisperse({0}), {}, T);
    SUBCASE("single tree with diagonal") {
        EmpiricalTreeMeasure nu;
        nu.entries.push_back({0.5, a});
        const double r = pairwise_noncoag(a, a, constant, T);
        CHECK(interaction_energy(nu, constant, T, true) == doctest::Approx(0.25 * r));
        CHECK(interaction_energy(nu, constant, T, false) == 0.0);
    }
    SUBCASE("two atoms, off-diagonal part") {
        EmpiricalTreeMeasure nu;
        nu.entries.push_back({1.0, a});
        nu.entries.push_back({1.0, b});
        CHECK(interaction_energy(nu, constant, T, false) ==
              doctest::Approx(2.0 * T * constant.eval({0, 1}, {0, 1})));
    }
    SUBCASE("multiplicative closed form for the full energy") {
        EmpiricalTreeMeasure nu;
        std::uint64_t seed = 50;
        double weighted_mass = 0.0;
        for (int i = 0; i < 3; ++i) {
            TreeForest f = decompose(random_run(seed++, 4 + i, 1000.0,
                                                KernelSpec::multiplicative()));
            REQUIRE(f.trees.size() == 1);
            const double w = 0.3 + 0.2 * i;
            weighted_mass += w * static_cast<double>(f.trees[0].atom_count());
            nu.entries.push_back({w, std::move(f.trees[0])});
        }
        CHECK(interaction_energy(nu, KernelSpec::multiplicative(), T, true) ==
              doctest::Approx(T * weighted_mass * weighted_mass));
    }
}

TEST_CASE("tree density exponent") {
    const KernelSpec constant = KernelSpec::constant(1.3);
    SUBCASE("single atom: zero") {
        const Trajectory a(monodisperse({0}), {}, 1.0);
        CHECK(tree_density_exponent(a, constant, 1.0) == 0.0);
    }
    SUBCASE("same-type pair merging at s: K(a,a) * s") {
        const double s = 0.4;
        const Trajectory xi(monodisperse({0, 0}), {Jump{s, {0, 1}, {0, 1}, 0}}, 1.0);
        CHECK(tree_density_exponent(xi, constant, 1.0) == doctest::Approx(1.3 * s));
        CHECK(tree_density_exponent(xi, KernelSpec::multiplicative(), 1.0) ==
              doctest::Approx(s));
    }
    SUBCASE("bounded by H T |xi_0|^2 / 2 on random trees") {
        const KernelSpec kernel = KernelSpec::additive();
        const double H = kernel_upper_constant(kernel, 1 << 20).value;
        for (std::uint64_t seed = 200; seed < 220; ++seed) {
            const TreeForest f = decompose(random_run(seed, 6, 0.8, kernel));
            for (const auto& t : f.trees) {
                const double v = tree_density_exponent(t, kernel, 0.8);
                const double n = static_cast<double>(t.atom_count());
                CHECK(v >= 0.0);
                CHECK(v <= 0.5 * H * 0.8 * n * n * (1.0 + 1e-12));
            }
        }
    }
}

TEST_CASE("observables") {
    SUBCASE("k singleton trees") {
        const EventLog log = random_run(1, 5, 1e-12, KernelSpec::constant(1e-9));
        TreeForest forest = decompose(log);
        forest.N = 5;
        const ObservablesTable table = observables(forest, {1});
        CHECK(table.non_gel_mass[0].second == doctest::Approx(1.0));
        CHECK(table.size_histogram.at(1) == 5);
    }
    SUBCASE("one five-atom tree, thresholds") {
        const EventLog log = random_run(4, 5, 1000.0, KernelSpec::multiplicative());
        TreeForest forest = decompose(log);
        REQUIRE(forest.trees.size() == 1);
        forest.N = 5;
        const ObservablesTable table = observables(forest, {4, 5});
        CHECK(table.non_gel_mass[0].second == doctest::Approx(0.0));
        CHECK(table.non_gel_mass[1].second == doctest::Approx(1.0));
        CHECK(table.second_moment == doctest::Approx(5.0));
    }
    SUBCASE("monotone in L and bounded by total mass") {
        const EventLog log = random_run(9, 30, 0.8, KernelSpec::multiplicative());
        TreeForest forest = decompose(log);
        const ObservablesTable table = observables(forest, {1, 2, 4, 8, 16, 32});
        double prev = 0.0;
        for (const auto& [L, v] : table.non_gel_mass) {
            CHECK(v >= prev);
            prev = v;
        }
        CHECK(prev <=
              static_cast<double>(log.atom_count()) / static_cast<double>(forest.N) + 1e-12);
    }
}
