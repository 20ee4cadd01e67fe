#include "evgrid/stochastic.hpp"

#include <atomic>
#include <cmath>

#include "evgrid/analysis.hpp"

namespace evgrid {

GroundModel ground_model_of(const Scenario& sc) {
    GroundModel model;
    for (int j = 0; j < sc.real_station_count; ++j) {
        const Station& st = sc.stations[j];
        if (st.ground)
            model.stations.push_back(*st.ground);
        else
            model.stations.push_back(FixedGround{st.g});
    }
    return model;
}

double ground_mean(const GroundSpec& spec) {
    if (const auto* f = std::get_if<FixedGround>(&spec)) return f->g;
    if (const auto* n = std::get_if<NormalGround>(&spec)) return n->mean;
    return std::get<DiscreteGround>(spec).pmf.mean();
}

double ground_variance(const GroundSpec& spec) {
    if (std::get_if<FixedGround>(&spec)) return 0.0;
    if (const auto* n = std::get_if<NormalGround>(&spec)) return n->variance;
    return std::get<DiscreteGround>(spec).pmf.variance();
}

double ground_support_bound(const GroundSpec& spec) {
    if (const auto* f = std::get_if<FixedGround>(&spec)) return std::abs(f->g);
    if (const auto* n = std::get_if<NormalGround>(&spec)) return n->clamp;
    return std::get<DiscreteGround>(spec).pmf.support_bound();
}

double sample_ground_one(const GroundSpec& spec, std::mt19937_64& rng) {
    if (const auto* f = std::get_if<FixedGround>(&spec)) return f->g;
    if (const auto* n = std::get_if<NormalGround>(&spec)) {
        const double sd = std::sqrt(n->variance);
        double draw = normal_draw(rng, n->mean, sd);
        while (std::abs(draw) > n->clamp) draw = normal_draw(rng, n->mean, sd);
        return draw;
    }
    const Pmf& pmf = std::get<DiscreteGround>(spec).pmf;
    const double u = uniform_real(rng, 0.0, 1.0);
    double acc = 0.0;
    for (std::size_t i = 0; i < pmf.values.size(); ++i) {
        acc += pmf.probs[i];
        if (u < acc) return pmf.values[i];
    }
    return pmf.values.back();
}

std::vector<double> sample_ground(const GroundModel& model, std::uint64_t seed) {
    std::vector<double> g(model.stations.size());
    for (std::size_t j = 0; j < model.stations.size(); ++j) {
        auto rng = make_rng(derive_seed(seed, j));
        g[j] = sample_ground_one(model.stations[j], rng);
    }
    return g;
}

long long hoeffding_fleet_size(const std::vector<std::pair<double, double>>& moments, double K, double eps) {
    // eps = 1 is the degenerate limit ln(1/eps) = 0
    if (eps <= 0.0 || eps > 1.0) throw error(errc::validation, "hoeffding_fleet_size: eps must lie in (0, 1]");
    if (K <= 0.0) throw error(errc::validation, "hoeffding_fleet_size: K must be positive");
    double moment_sum = 0.0;
    for (const auto& [mu, var] : moments) moment_sum += mu * mu + var;
    const double m = static_cast<double>(moments.size());
    const double bound = 4.5 * moment_sum + 4.5 * K * std::sqrt(m * std::log(1.0 / eps));
    return static_cast<long long>(std::ceil(bound - 1e-12));
}

long long hoeffding_fleet_size(const GroundModel& model, double K, double eps) {
    std::vector<std::pair<double, double>> moments;
    for (const auto& spec : model.stations) moments.emplace_back(ground_mean(spec), ground_variance(spec));
    return hoeffding_fleet_size(moments, K, eps);
}

MonteCarloResult monte_carlo_guarantee(const GroundModel& model, double n, int trials, std::uint64_t seed) {
    if (trials < 100) throw error(errc::validation, "monte_carlo_guarantee: at least 100 trials required");
    std::atomic<int> exceed{0};
    parallel_for(static_cast<std::size_t>(trials), [&](std::size_t t) {
        const auto g = sample_ground(model, derive_seed(seed, t));
        double sq = 0.0;
        for (double v : g) sq += v * v;
        if (sq > n) exceed.fetch_add(1, std::memory_order_relaxed);
    });
    MonteCarloResult out;
    out.trials = trials;
    out.exceed_count = exceed.load();
    out.exceedance = static_cast<double>(out.exceed_count) / trials;
    return out;
}

MonteCarloResult monte_carlo_guarantee_with_poa(const Scenario& sc, const GroundModel& model, double n,
                                                int trials, int poa_trials, std::uint64_t seed) {
    MonteCarloResult out = monte_carlo_guarantee(model, n, trials, seed);
    if (poa_trials <= 0) return out;
    const double b_max = sc.fleet_b_max();
    const double threshold = 4.0 + 12.0 * b_max * b_max;
    std::atomic<int> exceed{0};
    parallel_for(static_cast<std::size_t>(poa_trials), [&](std::size_t t) {
        Scenario trial = sc;
        const auto g = sample_ground(model, derive_seed(seed, t));
        for (std::size_t j = 0; j < g.size() && j < trial.stations.size(); ++j) trial.stations[j].g = g[j];
        EfficiencyOptions opts;
        const BoundReport report = analyze_efficiency(trial, opts);
        if (report.poa_empirical > threshold) exceed.fetch_add(1, std::memory_order_relaxed);
    });
    out.poa_trials = poa_trials;
    out.poa_exceed_count = exceed.load();
    return out;
}

Pmf discretize_ground(const GroundSpec& spec, int points) {
    if (const auto* f = std::get_if<FixedGround>(&spec)) {
        Pmf pmf;
        pmf.values = {f->g};
        pmf.probs = {1.0};
        return pmf;
    }
    if (const auto* d = std::get_if<DiscreteGround>(&spec)) return d->pmf;
    const auto& n = std::get<NormalGround>(spec);
    if (points < 1) points = 1;
    Pmf pmf;
    pmf.values.resize(points);
    pmf.probs.resize(points);
    const double K = n.clamp;
    const double width = 2.0 * K / points;
    const double sd = std::sqrt(std::max(n.variance, 1e-300));
    const auto cdf = [&](double x) { return 0.5 * (1.0 + std::erf((x - n.mean) / (sd * std::sqrt(2.0)))); };
    double mass = 0.0;
    for (int i = 0; i < points; ++i) {
        const double lo = -K + i * width;
        const double hi = lo + width;
        pmf.values[i] = 0.5 * (lo + hi);
        pmf.probs[i] = std::max(0.0, cdf(hi) - cdf(lo));
        mass += pmf.probs[i];
    }
    if (mass <= 0.0) throw error(errc::domain, "discretize_ground: no probability mass inside the clamp");
    for (double& p : pmf.probs) p /= mass;
    return pmf;
}

}  // namespace evgrid
