#include "coag/reference.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>

#include "coag/parallel.hpp"
#include "coag/simulator.hpp"

namespace coag {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Shared memo for the sigma recursion; the sorted entry vector of a
// Configuration is its own canonical key.
class SigmaMemo {
public:
    SigmaMemo(const KernelSpec& K, const PlacementSpec& placement, int site_count)
        : K_(K), placement_(placement), site_count_(site_count) {}

    double sigma(const Configuration& phi) {
        if (phi.particle_count() <= 1) return 1.0;
        auto it = memo_.find(phi);
        if (it != memo_.end()) return it->second;
        double total = 0.0;
        const auto& es = phi.entries();
        std::vector<double> zdist(site_count_);
        for (std::size_t i = 0; i < es.size(); ++i) {
            for (std::size_t j = i; j < es.size(); ++j) {
                const auto [a, ca] = es[i];
                const auto [b, cb] = es[j];
                const double pairs =
                    i == j ? 0.5 * static_cast<double>(ca) * static_cast<double>(ca - 1)
                           : static_cast<double>(ca) * static_cast<double>(cb);
                if (pairs <= 0.0) continue;
                const double rate = K_.eval(a, b);
                if (rate <= 0.0) continue;
                placement_.distribution(a, b, zdist);
                double inner = 0.0;
                for (int z = 0; z < site_count_; ++z) {
                    if (zdist[z] <= 0.0) continue;
                    inner += zdist[z] * sigma(phi.apply_step(a, b, z));
                }
                total += pairs * rate * inner;
            }
        }
        memo_.emplace(phi, total);
        return total;
    }

private:
    const KernelSpec& K_;
    const PlacementSpec& placement_;
    int site_count_;
    std::map<Configuration, double> memo_;
};

int config_site_count(const Configuration& c) {
    int m = 1;
    for (const auto& [t, n] : c.entries()) m = std::max(m, t.site + 1);
    return m;
}

std::vector<int> config_sites(const Configuration& atoms) {
    std::vector<int> sites;
    for (const auto& [t, n] : atoms.entries()) {
        if (t.mass != 1) throw CoagError("expected a monodisperse atom configuration");
        for (std::int64_t i = 0; i < n; ++i) sites.push_back(t.site);
    }
    return sites;
}

struct ForcedState {
    std::vector<ParticleType> parts;
};

// one forced-coalescence replica: returns the product of the conditional
// probabilities that each next merge happens before T (0 if some rate dies)
double forced_replica(const std::vector<int>& sites, double T, const KernelSpec& K,
                      const PlacementSpec& placement, double invN, Rng& rng) {
    std::vector<ParticleType> parts;
    parts.reserve(sites.size());
    for (int s : sites) parts.push_back({s, 1});
    double t = 0.0, weight = 1.0;
    std::vector<double> rates;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    while (parts.size() >= 2) {
        rates.clear();
        pairs.clear();
        double total = 0.0;
        for (std::size_t i = 0; i < parts.size(); ++i)
            for (std::size_t j = i + 1; j < parts.size(); ++j) {
                const double r = K.eval(parts[i], parts[j]) * invN;
                rates.push_back(r);
                pairs.emplace_back(i, j);
                total += r;
            }
        if (total <= 0.0) return 0.0;
        weight *= -std::expm1(-total * (T - t));
        t += rng.truncated_exponential(total, T - t);
        const std::size_t pick = rng.categorical(rates, total);
        auto [i, j] = pairs[pick];
        const int z = placement.sample(parts[i], parts[j], rng);
        parts[i] = ParticleType{z, parts[i].mass + parts[j].mass};
        parts[j] = parts.back();
        parts.pop_back();
    }
    return weight;
}

}  // namespace

double merge_weight_sum(const Configuration& phi, const KernelSpec& K,
                        const PlacementSpec& placement, int max_particles) {
    if (phi.particle_count() < 1) throw CoagError("sigma: configuration must be non-empty");
    if (phi.particle_count() > max_particles)
        throw CoagError("sigma: configuration exceeds the size limit (" +
                        std::to_string(max_particles) + ")");
    SigmaMemo memo(K, placement, config_site_count(phi));
    return memo.sigma(phi);
}

double q_mass(const Configuration& atoms, double T, const KernelSpec& K,
              const PlacementSpec& placement, int max_particles) {
    const std::int64_t n = atoms.particle_count();
    const double sigma = merge_weight_sum(atoms, K, placement, max_particles);
    return std::exp(static_cast<double>(n - 1) * std::log(T) - std::lgamma(static_cast<double>(n))) *
           sigma;
}

double q_mass_nonspatial(int n, double T, const KernelSpec& K, const PlacementSpec& placement,
                         int max_particles) {
    return q_mass(monodisperse(std::vector<int>(n, 0)), T, K, placement, max_particles);
}

double log_q_mass_bound(int n, double T, double H) {
    if (n == 1) return 0.0;
    return (n - 1) * std::log(T * H) - std::lgamma(static_cast<double>(n)) +
           2.0 * (n - 1) * std::log(static_cast<double>(n));
}

double q_mass_bound(int n, double T, double H) { return std::exp(log_q_mass_bound(n, T, H)); }

double m_moment_bound(int n, double T, double H, double b) {
    return std::exp((1.0 - b) + n * std::log(b * T * H) + 2.0 * n -
                    std::log(2.0 * kPi * T * H) - 2.0 * std::log(static_cast<double>(n)));
}

std::optional<double> log_q_mass_closed_form(const KernelSpec& K, int n, double T) {
    // nonspatial families only; sigma values verified against the recursion
    const double logT = (n - 1) * std::log(T);
    switch (K.family()) {
        case KernelFamily::Multiplicative:
            return logT + (n - 2) * std::log(static_cast<double>(n));
        case KernelFamily::Additive:
            return logT + (n - 1) * std::log(static_cast<double>(n));
        case KernelFamily::Constant: {
            if (K.constant_value() <= 0.0) return n == 1 ? std::optional<double>(0.0) : std::nullopt;
            return logT + (n - 1) * std::log(K.constant_value() / 2.0) +
                   std::lgamma(static_cast<double>(n) + 1.0);
        }
        case KernelFamily::SpatialProduct: {
            const auto& phi = K.site_matrix();
            if (phi.size() != 1) return std::nullopt;
            if (phi[0][0] <= 0.0) return n == 1 ? std::optional<double>(0.0) : std::nullopt;
            return logT + (n - 2) * std::log(static_cast<double>(n)) +
                   (n - 1) * std::log(phi[0][0]);
        }
        default:
            return std::nullopt;
    }
}

std::vector<McQRow> mc_q_limit(const Configuration& atoms, double T, const KernelSpec& K,
                               const PlacementSpec& placement,
                               const std::vector<std::int64_t>& N_list, std::int64_t replicas,
                               std::uint64_t seed, McQMode mode) {
    const std::int64_t n = atoms.particle_count();
    if (n < 1 || n > 6) throw CoagError("mc_q_limit: |k| must be between 1 and 6");
    const std::vector<int> sites = config_sites(atoms);

    std::vector<McQRow> rows;
    std::uint64_t stream = 0;
    for (std::int64_t N : N_list) {
        const double scale = std::pow(static_cast<double>(N), static_cast<double>(n - 1));
        if (n == 1) {
            rows.push_back({N, 1.0, 0.0, "exact"});
            continue;
        }
        McQMode m = mode;
        if (m == McQMode::Auto) {
            // direct only when the expected hit count is comfortable
            double rough = 1.0;
            try {
                rough = std::min(1.0, q_mass(atoms, T, K, placement) / scale);
            } catch (const CoagError&) {
                rough = 1.0 / scale;
            }
            m = (static_cast<double>(replicas) * rough >= 100.0) ? McQMode::Direct
                                                                 : McQMode::Forced;
        }
        std::vector<double> vals(replicas);
        if (m == McQMode::Direct) {
            parallel_replicas(replicas, [&](std::int64_t r) {
                SimConfig cfg;
                cfg.N = N;
                cfg.T = T;
                cfg.kernel = K;
                cfg.placement = placement;
                cfg.space = SiteSpace::uniform(config_site_count(atoms));
                cfg.seed = derive_seed(seed, (stream << 32) ^ static_cast<std::uint64_t>(r));
                cfg.engine = Engine::Dense;
                cfg.init = InitSpec::fixed(sites);
                vals[r] = simulate(cfg).final_particle_count() == 1 ? 1.0 : 0.0;
            });
        } else {
            const double invN = 1.0 / static_cast<double>(N);
            parallel_replicas(replicas, [&](std::int64_t r) {
                Rng rng(derive_seed(seed, (stream << 32) ^ static_cast<std::uint64_t>(r)));
                vals[r] = forced_replica(sites, T, K, placement, invN, rng);
            });
        }
        double sum = 0.0, sumsq = 0.0;
        for (double v : vals) {
            sum += v;
            sumsq += v * v;
        }
        const double mean = sum / static_cast<double>(replicas);
        const double var = std::max(0.0, sumsq / static_cast<double>(replicas) - mean * mean);
        rows.push_back({N, mean * scale,
                        std::sqrt(var / static_cast<double>(replicas)) * scale,
                        m == McQMode::Direct ? "direct" : "forced"});
        ++stream;
    }
    return rows;
}

std::pair<Trajectory, double> sample_tree(const Configuration& atoms, double T,
                                          const KernelSpec& K, const PlacementSpec& placement,
                                          Rng& rng, int max_particles) {
    const std::int64_t n = atoms.particle_count();
    if (n < 1) throw CoagError("sample_tree: need at least one atom");
    if (n > max_particles) throw CoagError("sample_tree: configuration exceeds the size limit");
    SigmaMemo memo(K, placement, config_site_count(atoms));
    const double sigma0 = memo.sigma(atoms);
    if (n > 1 && sigma0 <= 0.0)
        throw CoagError("sample_tree: configuration cannot fully coalesce (sigma = 0)");

    // merge sequence, guided by sigma so the draw is exactly Q-normalised
    struct Choice {
        ParticleType a, b;
        int z;
    };
    std::vector<Choice> choices;
    Configuration phi = atoms;
    const int sc = config_site_count(atoms);
    std::vector<double> zdist(sc);
    while (phi.particle_count() > 1) {
        std::vector<double> weights;
        std::vector<Choice> opts;
        const auto es = phi.entries();
        for (std::size_t i = 0; i < es.size(); ++i)
            for (std::size_t j = i; j < es.size(); ++j) {
                const auto [a, ca] = es[i];
                const auto [b, cb] = es[j];
                const double pairs =
                    i == j ? 0.5 * static_cast<double>(ca) * static_cast<double>(ca - 1)
                           : static_cast<double>(ca) * static_cast<double>(cb);
                if (pairs <= 0.0) continue;
                const double rate = K.eval(a, b);
                if (rate <= 0.0) continue;
                placement.distribution(a, b, zdist);
                for (int z = 0; z < sc; ++z) {
                    if (zdist[z] <= 0.0) continue;
                    const double w =
                        pairs * rate * zdist[z] * memo.sigma(phi.apply_step(a, b, z));
                    if (w <= 0.0) continue;
                    weights.push_back(w);
                    opts.push_back({a, b, z});
                }
            }
        const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
        const Choice c = opts[rng.categorical(weights, total)];
        choices.push_back(c);
        phi = phi.apply_step(c.a, c.b, c.z);
    }

    // jump times: sorted uniforms on [0,T]
    std::vector<double> times(choices.size());
    for (auto& t : times) t = rng.uniform(0.0, T);
    std::sort(times.begin(), times.end());

    std::vector<Jump> jumps;
    jumps.reserve(choices.size());
    for (std::size_t i = 0; i < choices.size(); ++i)
        jumps.push_back({times[i], choices[i].a, choices[i].b, choices[i].z});

    const double weight =
        std::exp((n - 1) * std::log(T) - std::lgamma(static_cast<double>(n))) * sigma0;
    return {Trajectory(atoms, std::move(jumps), T), weight};
}

double SizeMassTable::mass(int n) const {
    if (n < 1 || n > n_max()) throw CoagError("SizeMassTable: index out of range");
    return std::exp(log_mass[n - 1]);
}

SizeMassTable build_size_mass_table(int n_max, double T, double b, const KernelSpec& K,
                                    const PlacementSpec& placement, const SiteSpace& space,
                                    std::int64_t mc_replicas, std::uint64_t seed) {
    if (n_max < 1) throw CoagError("size-mass table: n_max must be >= 1");
    SizeMassTable table;
    table.T = T;
    table.b = b;
    table.log_mass.resize(n_max);
    table.method.resize(n_max);
    table.mc_rel_err.assign(n_max, 0.0);

    const int S = space.site_count();
    Rng rng(seed);
    SigmaMemo memo(K, placement, S);

    for (int n = 1; n <= n_max; ++n) {
        const double poisson_factor =
            (1.0 - b) + n * std::log(b) - std::lgamma(static_cast<double>(n) + 1.0);
        double log_qbar;
        std::string method;

        if (n == 1) {
            log_qbar = 0.0;
            method = "exact";
        } else if (S == 1 && log_q_mass_closed_form(K, n, T)) {
            log_qbar = *log_q_mass_closed_form(K, n, T);
            method = n <= kSigmaSizeLimit ? "exact" : "closed_form";
        } else if (n <= kSigmaSizeLimit && S == 1) {
            log_qbar = std::log(q_mass(monodisperse(std::vector<int>(n, 0)), T, K, placement));
            method = "exact";
        } else if (n <= std::min(kSigmaSizeLimit, 8) && S > 1) {
            // exact average over site assignments: enumerate compositions
            double qbar = 0.0;
            std::vector<int> comp(S, 0);
            std::function<void(int, int)> rec = [&](int pos, int left) {
                if (pos == S - 1) {
                    comp[pos] = left;
                    double logw = std::lgamma(n + 1.0);
                    std::vector<int> sites;
                    for (int s = 0; s < S; ++s) {
                        logw += comp[s] * std::log(std::max(space.site_weights[s], 1e-300)) -
                                std::lgamma(comp[s] + 1.0);
                        for (int i = 0; i < comp[s]; ++i) sites.push_back(s);
                    }
                    qbar += std::exp(logw) * q_mass(monodisperse(sites), T, K, placement);
                    return;
                }
                for (int c = 0; c <= left; ++c) {
                    comp[pos] = c;
                    rec(pos + 1, left - c);
                }
            };
            rec(0, n);
            log_qbar = std::log(qbar);
            method = "exact";
        } else {
            // unbiased MC: product of total rates along a rate-proportional
            // merge sequence has expectation sigma
            std::vector<double> logs;
            logs.reserve(mc_replicas);
            std::vector<double> cum(space.site_weights.size());
            std::partial_sum(space.site_weights.begin(), space.site_weights.end(), cum.begin());
            for (std::int64_t r = 0; r < mc_replicas; ++r) {
                std::vector<ParticleType> parts;
                for (int i = 0; i < n; ++i) {
                    const double u = rng.uniform() * cum.back();
                    int s = static_cast<int>(std::lower_bound(cum.begin(), cum.end(), u) -
                                             cum.begin());
                    if (s >= S) s = S - 1;
                    parts.push_back({s, 1});
                }
                double logprod = 0.0;
                bool dead = false;
                std::vector<double> rates;
                std::vector<std::pair<std::size_t, std::size_t>> prs;
                while (parts.size() >= 2) {
                    rates.clear();
                    prs.clear();
                    double total = 0.0;
                    for (std::size_t i = 0; i < parts.size(); ++i)
                        for (std::size_t j = i + 1; j < parts.size(); ++j) {
                            const double rr = K.eval(parts[i], parts[j]);
                            rates.push_back(rr);
                            prs.emplace_back(i, j);
                            total += rr;
                        }
                    if (total <= 0.0) {
                        dead = true;
                        break;
                    }
                    logprod += std::log(total);
                    auto [i, j] = prs[rng.categorical(rates, total)];
                    const int z = placement.sample(parts[i], parts[j], rng);
                    parts[i] = ParticleType{z, parts[i].mass + parts[j].mass};
                    parts[j] = parts.back();
                    parts.pop_back();
                }
                if (!dead) logs.push_back(logprod);
            }
            if (logs.empty()) {
                log_qbar = -std::numeric_limits<double>::infinity();
                table.mc_rel_err[n - 1] = 0.0;
            } else {
                const double mx = *std::max_element(logs.begin(), logs.end());
                double s1 = 0.0, s2 = 0.0;
                for (double l : logs) {
                    const double w = std::exp(l - mx);
                    s1 += w;
                    s2 += w * w;
                }
                const double mean = s1 / static_cast<double>(mc_replicas);
                const double var = std::max(
                    0.0, s2 / static_cast<double>(mc_replicas) - mean * mean);
                table.mc_rel_err[n - 1] =
                    std::sqrt(var / static_cast<double>(mc_replicas)) / mean;
                log_qbar = mx + std::log(mean) + (n - 1) * std::log(T) -
                           std::lgamma(static_cast<double>(n));
            }
            method = "mc";
        }
        table.log_mass[n - 1] = poisson_factor + log_qbar;
        table.method[n - 1] = method;
    }
    return table;
}

}  // namespace coag
