#include "coag/trajectories.hpp"

#include <algorithm>
#include <numeric>

namespace coag {

namespace {

struct UnionFind {
    std::vector<std::uint32_t> parent;

    explicit UnionFind(std::size_t n) : parent(n) {
        std::iota(parent.begin(), parent.end(), 0u);
    }
    std::uint32_t find(std::uint32_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    // union keeping the smaller label as root, matching the event log convention
    void merge(std::uint32_t a, std::uint32_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (b < a) std::swap(a, b);
        parent[b] = a;
    }
};

}  // namespace

TreeForest decompose(const EventLog& log) {
    const std::size_t n = static_cast<std::size_t>(log.atom_count());
    UnionFind uf(n);
    for (const Event& e : log.events()) uf.merge(e.rep_a, e.rep_b);

    // every event is internal to exactly one final cluster
    std::map<std::uint32_t, std::vector<Jump>> jumps_by_root;
    for (const Event& e : log.events())
        jumps_by_root[uf.find(e.rep_a)].push_back(
            Jump{e.time, e.type_a, e.type_b, e.target_site});
    std::map<std::uint32_t, std::vector<int>> atoms_by_root;
    for (std::uint32_t i = 0; i < n; ++i)
        atoms_by_root[uf.find(i)].push_back(log.initial_sites()[i]);

    TreeForest forest;
    forest.N = log.atom_count();
    forest.trees.reserve(atoms_by_root.size());
    for (auto& [root, atoms] : atoms_by_root) {
        auto it = jumps_by_root.find(root);
        std::vector<Jump> jumps = it == jumps_by_root.end() ? std::vector<Jump>{}
                                                            : std::move(it->second);
        forest.trees.emplace_back(monodisperse(atoms), std::move(jumps), log.horizon());
    }
    return forest;
}

double pairwise_noncoag(const Trajectory& a, const Trajectory& b, const KernelSpec& K,
                        double T) {
    // closed form for mass-product kernels on a single effective site factor
    if (K.family() == KernelFamily::Multiplicative)
        return T * static_cast<double>(a.atom_count()) * static_cast<double>(b.atom_count());

    double total = 0.0;
    Trajectory::PieceCursor ca(a), cb(b);
    double t = 0.0;
    while (t < T) {
        // the final configuration persists past the last recorded piece
        const double ea = ca.last() ? T : ca.end();
        const double eb = cb.last() ? T : cb.end();
        const double end = std::min({ea, eb, T});
        if (end > t) total += (end - t) * K.bilinear_form(ca.config(), cb.config());
        t = end;
        if (t >= T) break;
        if (ea <= t) ca.advance();
        if (eb <= t) cb.advance();
    }
    return total;
}

double interaction_energy(const EmpiricalTreeMeasure& nu, const KernelSpec& K, double T,
                          bool include_diagonal) {
    const auto& es = nu.entries;
    double total = 0.0;
    for (std::size_t i = 0; i < es.size(); ++i) {
        for (std::size_t j = i; j < es.size(); ++j) {
            if (i == j) {
                if (include_diagonal)
                    total += es[i].weight * es[i].weight *
                             pairwise_noncoag(es[i].tree, es[i].tree, K, T);
            } else {
                total += 2.0 * es[i].weight * es[j].weight *
                         pairwise_noncoag(es[i].tree, es[j].tree, K, T);
            }
        }
    }
    return total;
}

double tree_density_exponent(const Trajectory& xi, const KernelSpec& K, double T) {
    double total = 0.0;
    Trajectory::PieceCursor cursor(xi);
    for (;;) {
        const double pend = cursor.last() ? std::max(cursor.end(), T) : cursor.end();
        const double len = std::min(pend, T) - std::min(cursor.start(), T);
        if (len > 0.0) {
            const Configuration& phi = cursor.config();
            double diag = 0.0;
            for (const auto& [type, count] : phi.entries())
                diag += static_cast<double>(count) * K.eval(type, type);
            total += 0.5 * len * (K.quadratic_form(phi) - diag);
        }
        if (!cursor.advance()) break;
    }
    return total;
}

ObservablesTable observables(const TreeForest& forest, const std::vector<std::int64_t>& L_list) {
    ObservablesTable out;
    const double invN = 1.0 / static_cast<double>(forest.N);
    for (const Trajectory& t : forest.trees) {
        const std::int64_t size = t.atom_count();
        out.size_histogram[size] += 1;
        out.second_moment += invN * static_cast<double>(size) * static_cast<double>(size);
    }
    for (std::int64_t L : L_list) {
        double mass = 0.0;
        for (const auto& [size, count] : out.size_histogram)
            if (size <= L) mass += invN * static_cast<double>(size) * static_cast<double>(count);
        out.non_gel_mass.emplace_back(L, mass);
    }
    return out;
}

}  // namespace coag
