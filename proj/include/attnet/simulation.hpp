#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "attnet/dataset.hpp"
#include "attnet/errors.hpp"
#include "attnet/ising.hpp"
#include "attnet/rng.hpp"

// Data generation from a known network (exact enumeration for small p, Gibbs
// sampling otherwise) plus perturbation experiments probing how connectivity
// relates to the dynamics of the network state.

namespace attnet {

struct ExactDistribution {
    std::size_t p = 0;
    std::vector<double> probabilities; // indexed by state; bit i of the index = node i
    double log_partition = 0.0;

    static bool state_bit(std::size_t state, std::size_t node) {
        return (state >> node) & 1u;
    }
};

// Normalized Boltzmann table over {0,1}^p. Limited to p <= 20 (2^20 states).
inline ExactDistribution exact_distribution(const IsingNetwork& net) {
    validate_network(net);
    const std::size_t p = net.p();
    if (p > 20) throw ContractError("exact mode limit: p must be <= 20");
    const std::size_t n_states = std::size_t{1} << p;

    ExactDistribution dist;
    dist.p = p;
    std::vector<double> energy(n_states);
    double max_energy = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < n_states; ++s) {
        double e = 0.0;
        for (std::size_t i = 0; i < p; ++i) {
            if (!ExactDistribution::state_bit(s, i)) continue;
            e += net.thresholds[i];
            for (std::size_t j = i + 1; j < p; ++j)
                if (ExactDistribution::state_bit(s, j)) e += net.weight(i, j);
        }
        energy[s] = e;
        max_energy = std::max(max_energy, e);
    }
    double z = 0.0;
    dist.probabilities.resize(n_states);
    for (std::size_t s = 0; s < n_states; ++s) {
        dist.probabilities[s] = std::exp(energy[s] - max_energy);
        z += dist.probabilities[s];
    }
    for (double& q : dist.probabilities) q /= z;
    dist.log_partition = std::log(z) + max_energy;
    return dist;
}

struct GibbsConfig {
    std::size_t burn_in = 1000;
    std::size_t thinning = 10; // sweeps between retained samples
};

namespace detail {

inline double conditional_prob_one(const IsingNetwork& net, const std::vector<std::uint8_t>& x,
                                   std::size_t node) {
    double eta = net.thresholds[node];
    const std::size_t p = net.p();
    for (std::size_t j = 0; j < p; ++j)
        if (x[j]) eta += net.weight(node, j); // diagonal is zero, x[node] irrelevant
    return 1.0 / (1.0 + std::exp(-eta));
}

// One systematic-scan sweep; consumes exactly p uniforms. A node clamped via
// clamp_node still consumes its uniform so paired chains stay aligned.
inline void gibbs_sweep(const IsingNetwork& net, std::vector<std::uint8_t>& x, Rng& rng,
                        int clamp_node = -1) {
    const std::size_t p = net.p();
    for (std::size_t i = 0; i < p; ++i) {
        const double u = rng.uniform();
        if (static_cast<int>(i) == clamp_node) continue;
        x[i] = u < conditional_prob_one(net, x, i) ? 1 : 0;
    }
}

inline std::vector<std::uint8_t> random_state(std::size_t p, Rng& rng) {
    std::vector<std::uint8_t> x(p);
    for (auto& v : x) v = rng.bernoulli(0.5) ? 1 : 0;
    return x;
}

} // namespace detail

// Systematic-scan Gibbs chain, deterministic for a fixed seed. Returns n
// retained samples (one every `thinning` sweeps after burn-in) as a dataset
// whose column names come from the network.
inline BinaryDataset gibbs_sample(const IsingNetwork& net, std::size_t n, const GibbsConfig& cfg,
                                  std::uint64_t seed) {
    validate_network(net);
    if (n < 1) throw ContractError("gibbs_sample: need n >= 1");
    if (cfg.thinning < 1) throw ContractError("gibbs_sample: thinning must be >= 1");
    const std::size_t p = net.p();

    BinaryDataset out;
    out.names = net.names;
    out.cols.assign(p, {});
    for (auto& col : out.cols) col.reserve(n);

    Rng rng(seed);
    std::vector<std::uint8_t> x = detail::random_state(p, rng);
    for (std::size_t s = 0; s < cfg.burn_in; ++s) detail::gibbs_sweep(net, x, rng);
    for (std::size_t taken = 0; taken < n; ++taken) {
        for (std::size_t s = 0; s < cfg.thinning; ++s) detail::gibbs_sweep(net, x, rng);
        for (std::size_t j = 0; j < p; ++j) out.cols[j].push_back(x[j]);
    }
    return out;
}

// Empirical state distribution of a sample, comparable against
// exact_distribution (total variation distance and the like).
inline std::vector<double> empirical_distribution(const BinaryDataset& data) {
    const std::size_t p = data.p();
    if (p > 20) throw ContractError("empirical_distribution: p must be <= 20");
    std::vector<double> freq(std::size_t{1} << p, 0.0);
    const std::size_t n = data.n();
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t state = 0;
        for (std::size_t j = 0; j < p; ++j)
            if (data.cols[j][i]) state |= std::size_t{1} << j;
        freq[state] += 1.0;
    }
    for (double& f : freq) f /= static_cast<double>(n);
    return freq;
}

inline double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw ContractError("total_variation: size mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += std::fabs(a[i] - b[i]);
    return 0.5 * sum;
}

struct PerturbationConfig {
    GibbsConfig gibbs;
    std::size_t response_sweeps = 50; // re-equilibration length after clamping
    double field_min = -3.0;
    double field_max = 3.0;
    double field_step = 0.5;
};

// Illustrative dynamics metrics; these operationalize qualitative claims
// about connected networks and are not estimates of any model parameter.
struct PerturbationReport {
    double alignment = 0.0;     // mean over samples of |2 (fraction of ones) - 1|
    double flip_response = 0.0; // mean extra Hamming displacement caused by a clamp
    std::vector<std::pair<double, double>> field_sweep; // (field, mean state)
    std::size_t trials = 0;
    std::uint64_t seed = 0;
};

// Three probes of resistance to change:
// (a) alignment of node states at equilibrium;
// (b) clamp response: from an equilibrium state, two chains sharing the same
//     random numbers run side by side, one with a single node clamped to its
//     minority state; the Hamming distance between their final states over
//     the unclamped nodes isolates the causal effect of the clamp;
// (c) a uniform external field swept over all thresholds, recording the mean
//     node state (dose-response curve of the network).
inline PerturbationReport perturbation_experiment(const IsingNetwork& net, std::size_t trials,
                                                  std::uint64_t seed,
                                                  const PerturbationConfig& cfg = {}) {
    validate_network(net);
    if (trials < 1) throw ContractError("perturbation_experiment: need trials >= 1");
    const std::size_t p = net.p();

    PerturbationReport report;
    report.trials = trials;
    report.seed = seed;

    // (a) equilibrium samples and marginals
    const BinaryDataset sample = gibbs_sample(net, trials, cfg.gibbs, Rng::derive_seed(seed, 0));
    std::vector<double> marginal(p, 0.0);
    double alignment = 0.0;
    for (std::size_t i = 0; i < trials; ++i) {
        double ones = 0.0;
        for (std::size_t j = 0; j < p; ++j) ones += sample.cols[j][i];
        alignment += std::fabs(2.0 * ones / static_cast<double>(p) - 1.0);
    }
    for (std::size_t j = 0; j < p; ++j) {
        double s = 0.0;
        for (std::size_t i = 0; i < trials; ++i) s += sample.cols[j][i];
        marginal[j] = s / static_cast<double>(trials);
    }
    report.alignment = alignment / static_cast<double>(trials);

    // (b) clamp one node per trial to its minority state
    double displacement = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        const std::size_t node = t % p;
        const std::uint8_t minority = marginal[node] < 0.5 ? 1 : 0;
        std::vector<std::uint8_t> start(p);
        for (std::size_t j = 0; j < p; ++j) start[j] = sample.cols[j][t];

        const std::uint64_t pair_seed = Rng::derive_seed(seed, 1000 + t);
        std::vector<std::uint8_t> free_state = start;
        {
            Rng rng(pair_seed);
            for (std::size_t s = 0; s < cfg.response_sweeps; ++s)
                detail::gibbs_sweep(net, free_state, rng);
        }
        std::vector<std::uint8_t> clamped_state = start;
        clamped_state[node] = minority;
        {
            Rng rng(pair_seed);
            for (std::size_t s = 0; s < cfg.response_sweeps; ++s)
                detail::gibbs_sweep(net, clamped_state, rng, static_cast<int>(node));
        }
        for (std::size_t j = 0; j < p; ++j)
            if (j != node && free_state[j] != clamped_state[j]) displacement += 1.0;
    }
    report.flip_response = displacement / static_cast<double>(trials);

    // (c) external field sweep
    const int steps = static_cast<int>(std::round((cfg.field_max - cfg.field_min) / cfg.field_step));
    for (int fstep = 0; fstep <= steps; ++fstep) {
        const double field = cfg.field_min + fstep * cfg.field_step;
        IsingNetwork shifted = net;
        for (double& tau : shifted.thresholds) tau += field;
        const BinaryDataset fs =
            gibbs_sample(shifted, trials, cfg.gibbs, Rng::derive_seed(seed, 2000000 + fstep));
        double mean_state = 0.0;
        for (std::size_t j = 0; j < p; ++j)
            for (std::size_t i = 0; i < trials; ++i) mean_state += fs.cols[j][i];
        mean_state /= static_cast<double>(p) * static_cast<double>(trials);
        report.field_sweep.emplace_back(field, mean_state);
    }
    return report;
}

} // namespace attnet
