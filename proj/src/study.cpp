#include "nlmob/study.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include "nlmob/errors.hpp"

namespace nlmob {

std::pair<ParticleConfig, ParticleConfig> study_endpoints(const StudyConfig& cfg, int N)
{
    const double M = cfg.mobility.max_density();
    if (cfg.x0 && cfg.x1)
        return {ParticleConfig(*cfg.x0, M), ParticleConfig(*cfg.x1, M)};
    if (!cfg.mu0 || !cfg.mu1)
        throw ConfigError("field 'mu0': endpoints need mu0 and mu1 or x0 and x1");
    return {sample_from_quantile(*cfg.mu0, N, cfg.mobility, cfg.endpoints),
            sample_from_quantile(*cfg.mu1, N, cfg.mobility, cfg.endpoints)};
}

GeodesicResult solve_geodesic_best(const ParticleConfig& a, const ParticleConfig& b, const ActionDensity& density,
                                   const RhoStarRule& rule, const SolverOptions& options)
{
    try {
        return solve_geodesic(a, b, density, rule, options);
    } catch (const NonConvergenceWith<GeodesicResult>& e) {
        return e.best();
    }
}

GammaReport run_gamma_study(const StudyConfig& cfg, double noise_band)
{
    const auto& Ns = cfg.N_list;
    const std::size_t n = Ns.size();
    std::vector<GammaRecord> records(n);
    std::vector<std::string> errors(n);
    const auto density = cfg.density();

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t k = next++; k < n; k = next++) {
            GammaRecord r;
            r.N = Ns[k];
            try {
                const auto [a, b] = study_endpoints(cfg, Ns[k]);
                const auto g = solve_geodesic_best(a, b, density, cfg.rule, cfg.solver);
                r.distance = g.distance;
                r.lower = g.lower_bound;
                r.upper = g.upper_bound;
                r.converged = g.solver_report.converged;
                r.iterations = g.solver_report.iterations;
            } catch (const std::exception& e) {
                errors[k] = "N=" + std::to_string(Ns[k]) + ": " + e.what();
                r.distance = r.lower = r.upper = std::numeric_limits<double>::quiet_NaN();
            }
            records[k] = r;
        }
    };
    const int nthreads = std::max(1, std::min<int>(cfg.threads, static_cast<int>(n)));
    std::vector<std::thread> pool;
    for (int t = 1; t < nthreads; ++t)
        pool.emplace_back(worker);
    worker();
    for (auto& t : pool)
        t.join();

    GammaReport rep;
    for (std::size_t k = 0; k < n; ++k) {
        records[k].gap = k == 0 ? std::numeric_limits<double>::quiet_NaN()
                                : std::abs(records[k].distance - records[k - 1].distance);
        if (!errors[k].empty())
            rep.failures.push_back(errors[k]);
    }
    rep.records = records;

    const double scale = std::max(1.0, n > 0 ? std::abs(records.back().distance) : 1.0);
    const double band = noise_band * scale;
    rep.cauchy = true;
    for (std::size_t k = 2; k < n; ++k) {
        const double g0 = records[k - 1].gap, g1 = records[k].gap;
        const bool both_noise = g0 <= band && g1 <= band;
        if (!(g1 < g0 || both_noise))
            rep.cauchy = false;
    }
    rep.sandwiched = true;
    for (const auto& r : records) {
        const double tol = band;
        if (!(r.distance >= r.lower - tol && r.distance <= r.upper + tol))
            rep.sandwiched = false;
    }
    rep.surrogate = n > 0 ? records.back().distance : 0.0;
    return rep;
}

}  // namespace nlmob
