#include "coag/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace coag {

KernelSpec KernelSpec::constant(double c) {
    if (c < 0.0) throw CoagError("kernel: constant value must be >= 0");
    KernelSpec k;
    k.family_ = KernelFamily::Constant;
    k.c_ = c;
    return k;
}

KernelSpec KernelSpec::multiplicative() {
    KernelSpec k;
    k.family_ = KernelFamily::Multiplicative;
    return k;
}

KernelSpec KernelSpec::additive() {
    KernelSpec k;
    k.family_ = KernelFamily::Additive;
    return k;
}

KernelSpec KernelSpec::spatial_product(std::vector<std::vector<double>> phi) {
    KernelSpec k;
    k.family_ = KernelFamily::SpatialProduct;
    const std::size_t n = phi.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (phi[i].size() != n) throw CoagError("kernel: phi must be square");
        for (std::size_t j = 0; j < n; ++j) {
            if (phi[i][j] < 0.0) throw CoagError("kernel: phi entries must be >= 0");
            if (std::abs(phi[i][j] - phi[j][i]) > 0.0)
                throw CoagError("kernel: phi must be symmetric");
        }
    }
    k.phi_ = std::move(phi);
    k.site_count_ = static_cast<int>(n);
    return k;
}

KernelSpec KernelSpec::table(int site_count, std::int64_t mass_cutoff, std::vector<double> values) {
    KernelSpec k;
    k.family_ = KernelFamily::Table;
    k.site_count_ = site_count;
    k.mass_cutoff_ = mass_cutoff;
    const std::size_t expect =
        static_cast<std::size_t>(site_count) * site_count * mass_cutoff * mass_cutoff;
    if (values.size() != expect) throw CoagError("kernel: table size mismatch");
    k.values_ = std::move(values);
    auto idx = [&](int x, std::int64_t m, int xp, std::int64_t mp) {
        return ((static_cast<std::size_t>(x) * mass_cutoff + (m - 1)) * site_count + xp) *
                   mass_cutoff +
               (mp - 1);
    };
    for (int x = 0; x < site_count; ++x)
        for (std::int64_t m = 1; m <= mass_cutoff; ++m)
            for (int xp = 0; xp < site_count; ++xp)
                for (std::int64_t mp = 1; mp <= mass_cutoff; ++mp) {
                    const double v = k.values_[idx(x, m, xp, mp)];
                    if (v < 0.0) throw CoagError("kernel: table entries must be >= 0");
                    if (v != k.values_[idx(xp, mp, x, m)])
                        throw CoagError("kernel: table must be symmetric");
                }
    return k;
}

double KernelSpec::eval(ParticleType a, ParticleType b) const {
    switch (family_) {
        case KernelFamily::Constant:
            return c_;
        case KernelFamily::Multiplicative:
            return static_cast<double>(a.mass) * static_cast<double>(b.mass);
        case KernelFamily::Additive:
            return static_cast<double>(a.mass + b.mass);
        case KernelFamily::SpatialProduct:
            return phi_[a.site][b.site] * static_cast<double>(a.mass) *
                   static_cast<double>(b.mass);
        case KernelFamily::Table: {
            if (a.mass > mass_cutoff_ || b.mass > mass_cutoff_)
                throw CoagError("kernel: mass exceeds table cutoff");
            const auto i =
                ((static_cast<std::size_t>(a.site) * mass_cutoff_ + (a.mass - 1)) * site_count_ +
                 b.site) *
                    mass_cutoff_ +
                (b.mass - 1);
            return values_[i];
        }
    }
    return 0.0;
}

bool KernelSpec::is_mass_product() const {
    return family_ == KernelFamily::Multiplicative || family_ == KernelFamily::SpatialProduct;
}

bool KernelSpec::is_mass_free() const { return family_ == KernelFamily::Constant; }

double KernelSpec::site_factor(int x, int xp) const {
    switch (family_) {
        case KernelFamily::Multiplicative:
            return 1.0;
        case KernelFamily::SpatialProduct:
            return phi_[x][xp];
        case KernelFamily::Constant:
            return c_;
        default:
            throw CoagError("kernel: no site factor for this family");
    }
}

double KernelSpec::site_factor_max() const {
    switch (family_) {
        case KernelFamily::Multiplicative:
            return 1.0;
        case KernelFamily::Constant:
            return c_;
        case KernelFamily::SpatialProduct: {
            double m = 0.0;
            for (const auto& row : phi_)
                for (double v : row) m = std::max(m, v);
            return m;
        }
        default:
            throw CoagError("kernel: no site factor for this family");
    }
}

double KernelSpec::quadratic_form(const Configuration& phi) const {
    double s = 0.0;
    for (const auto& [a, ca] : phi.entries())
        for (const auto& [b, cb] : phi.entries())
            s += static_cast<double>(ca) * static_cast<double>(cb) * eval(a, b);
    return s;
}

double KernelSpec::bilinear_form(const Configuration& v, const Configuration& w) const {
    double s = 0.0;
    for (const auto& [a, ca] : v.entries())
        for (const auto& [b, cb] : w.entries())
            s += static_cast<double>(ca) * static_cast<double>(cb) * eval(a, b);
    return s;
}

// The sup/inf over mass-normalised measure balls is attained at extreme points
// delta_{(x,m)}/m, so both constants reduce to extrema of K/(m m').
KernelBound kernel_upper_constant(const KernelSpec& K, std::int64_t mass_cutoff) {
    switch (K.family()) {
        case KernelFamily::Constant:
            return {K.constant_value(), true};  // maximised at m = m' = 1
        case KernelFamily::Multiplicative:
            return {1.0, true};
        case KernelFamily::Additive:
            return {2.0, true};  // (m+m')/(m m') peaks at (1,1)
        case KernelFamily::SpatialProduct:
            return {K.site_factor_max(), true};
        case KernelFamily::Table: {
            double best = 0.0;
            const std::int64_t mmax = std::min(mass_cutoff, K.table_cutoff());
            for (int x = 0; x < K.table_site_count(); ++x)
                for (std::int64_t m = 1; m <= mmax; ++m)
                    for (int xp = 0; xp < K.table_site_count(); ++xp)
                        for (std::int64_t mp = 1; mp <= mmax; ++mp)
                            best = std::max(best, K.eval({x, m}, {xp, mp}) /
                                                      (static_cast<double>(m) * mp));
            return {best, false};
        }
    }
    return {0.0, false};
}

KernelBound kernel_lower_constant(const KernelSpec& K, std::int64_t mass_cutoff) {
    switch (K.family()) {
        case KernelFamily::Constant:
            return {0.0, true};  // c/(m m') -> 0 as masses grow
        case KernelFamily::Additive:
            return {0.0, true};  // 1/m + 1/m' -> 0
        case KernelFamily::Multiplicative:
            return {1.0, true};
        case KernelFamily::SpatialProduct: {
            double worst = std::numeric_limits<double>::infinity();
            for (const auto& row : K.site_matrix())
                for (double v : row) worst = std::min(worst, v);
            return {worst, true};
        }
        case KernelFamily::Table: {
            double worst = std::numeric_limits<double>::infinity();
            for (int x = 0; x < K.table_site_count(); ++x)
                for (std::int64_t m = 1; m <= std::min(mass_cutoff, K.table_cutoff()); ++m)
                    for (int xp = 0; xp < K.table_site_count(); ++xp)
                        for (std::int64_t mp = 1; mp <= std::min(mass_cutoff, K.table_cutoff());
                             ++mp)
                            worst = std::min(worst, K.eval({x, m}, {xp, mp}) /
                                                        (static_cast<double>(m) * mp));
            return {worst, false};
        }
    }
    return {0.0, false};
}

PlacementSpec PlacementSpec::weighted_random() {
    PlacementSpec p;
    p.family_ = PlacementFamily::WeightedRandom;
    return p;
}

PlacementSpec PlacementSpec::uniform_pair() {
    PlacementSpec p;
    p.family_ = PlacementFamily::UniformPair;
    return p;
}

PlacementSpec PlacementSpec::fixed_table(std::vector<std::vector<std::vector<double>>> dist) {
    PlacementSpec p;
    p.family_ = PlacementFamily::FixedTable;
    const std::size_t n = dist.size();
    for (std::size_t x = 0; x < n; ++x) {
        if (dist[x].size() != n) throw CoagError("placement: table must be site_count^2 rows");
        for (std::size_t xp = 0; xp < n; ++xp) {
            if (dist[x][xp].size() != n)
                throw CoagError("placement: each distribution must cover all sites");
            double s = 0.0;
            for (std::size_t z = 0; z < n; ++z) {
                if (dist[x][xp][z] < 0.0) throw CoagError("placement: negative probability");
                if (dist[x][xp][z] != dist[xp][x][z])
                    throw CoagError("placement: table must be symmetric in the pair");
                s += dist[x][xp][z];
            }
            if (std::abs(s - 1.0) > 1e-12)
                throw CoagError("placement: probabilities must sum to 1");
        }
    }
    p.dist_ = std::move(dist);
    return p;
}

int PlacementSpec::sample(ParticleType a, ParticleType b, Rng& rng) const {
    switch (family_) {
        case PlacementFamily::WeightedRandom: {
            const double pa =
                static_cast<double>(a.mass) / static_cast<double>(a.mass + b.mass);
            return rng.uniform() < pa ? a.site : b.site;
        }
        case PlacementFamily::UniformPair:
            return rng.uniform() < 0.5 ? a.site : b.site;
        case PlacementFamily::FixedTable: {
            const auto& d = dist_[a.site][b.site];
            return static_cast<int>(rng.categorical(d, 1.0));
        }
    }
    return a.site;
}

void PlacementSpec::distribution(ParticleType a, ParticleType b, std::span<double> out) const {
    std::fill(out.begin(), out.end(), 0.0);
    switch (family_) {
        case PlacementFamily::WeightedRandom: {
            const double pa =
                static_cast<double>(a.mass) / static_cast<double>(a.mass + b.mass);
            out[a.site] += pa;
            out[b.site] += 1.0 - pa;
            break;
        }
        case PlacementFamily::UniformPair:
            out[a.site] += 0.5;
            out[b.site] += 0.5;
            break;
        case PlacementFamily::FixedTable: {
            const auto& d = dist_[a.site][b.site];
            for (std::size_t z = 0; z < d.size(); ++z) out[z] = d[z];
            break;
        }
    }
}

}  // namespace coag
