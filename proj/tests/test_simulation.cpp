#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "attnet/simulation.hpp"

using namespace attnet;

namespace {

IsingNetwork named_network(std::size_t p) {
    std::vector<std::string> names;
    for (std::size_t i = 0; i < p; ++i) names.push_back("n" + std::to_string(i));
    return IsingNetwork::zeros(names);
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Applies one full systematic-scan sweep as an exact transition operator on a
// probability vector; stationarity of the chain means this is a no-op on the
// true distribution.
std::vector<double> apply_sweep_transition(const IsingNetwork& net, std::vector<double> probs) {
    const std::size_t p = net.p();
    for (std::size_t node = 0; node < p; ++node) {
        std::vector<double> next(probs.size(), 0.0);
        const std::size_t bit = std::size_t{1} << node;
        for (std::size_t s = 0; s < probs.size(); ++s) {
            if (s & bit) continue;
            const std::size_t s0 = s, s1 = s | bit;
            double eta = net.thresholds[node];
            for (std::size_t j = 0; j < p; ++j)
                if (j != node && (s0 >> j & 1)) eta += net.weight(node, j);
            const double q = logistic(eta);
            const double mass = probs[s0] + probs[s1];
            next[s1] += mass * q;
            next[s0] += mass * (1.0 - q);
        }
        probs = std::move(next);
    }
    return probs;
}

} // namespace

TEST_CASE("exact distribution of a single free node is uniform", "[simulation]") {
    const IsingNetwork net = named_network(1);
    const ExactDistribution dist = exact_distribution(net);
    REQUIRE(dist.probabilities.size() == 2);
    CHECK(dist.probabilities[0] == Catch::Approx(0.5).margin(1e-15));
    CHECK(dist.probabilities[1] == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("two-node pair probability follows the closed form", "[simulation]") {
    const double w = 0.8;
    IsingNetwork net = named_network(2);
    net.set_weight(0, 1, w);
    const ExactDistribution dist = exact_distribution(net);
    // states 00, 01, 10 have energy 0; state 11 has energy w
    CHECK(dist.probabilities[3] == Catch::Approx(std::exp(w) / (3.0 + std::exp(w))).margin(1e-14));
    double total = 0.0;
    for (double q : dist.probabilities) total += q;
    CHECK(total == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("enumeration conditionals match the logistic form", "[simulation]") {
    IsingNetwork net = named_network(3);
    net.thresholds = {0.3, -0.2, 0.1};
    net.set_weight(0, 1, 0.7);
    net.set_weight(1, 2, -0.5);
    net.set_weight(0, 2, 0.2);
    const ExactDistribution dist = exact_distribution(net);

    for (std::size_t node = 0; node < 3; ++node) {
        const std::size_t bit = std::size_t{1} << node;
        for (std::size_t rest = 0; rest < 8; ++rest) {
            if (rest & bit) continue;
            const double p0 = dist.probabilities[rest];
            const double p1 = dist.probabilities[rest | bit];
            const double conditional = p1 / (p0 + p1);
            double eta = net.thresholds[node];
            for (std::size_t j = 0; j < 3; ++j)
                if (j != node && (rest >> j & 1)) eta += net.weight(node, j);
            CHECK(conditional == Catch::Approx(logistic(eta)).margin(1e-12));
        }
    }
}

TEST_CASE("exact mode rejects large p", "[simulation]") {
    const IsingNetwork net = named_network(21);
    CHECK_THROWS_MATCHES(exact_distribution(net), ContractError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("exact mode limit")));
}

TEST_CASE("gibbs sweep leaves the exact distribution invariant", "[simulation]") {
    IsingNetwork net = named_network(4);
    net.thresholds = {0.2, -0.3, 0.1, 0.0};
    net.set_weight(0, 1, 0.9);
    net.set_weight(1, 2, -0.7);
    net.set_weight(2, 3, 0.4);
    net.set_weight(0, 3, -0.2);
    const ExactDistribution dist = exact_distribution(net);
    const std::vector<double> after = apply_sweep_transition(net, dist.probabilities);
    for (std::size_t s = 0; s < after.size(); ++s)
        CHECK(after[s] == Catch::Approx(dist.probabilities[s]).margin(1e-12));
}

TEST_CASE("zero network samples are fair independent coins", "[simulation]") {
    const IsingNetwork net = named_network(4);
    const BinaryDataset data = gibbs_sample(net, 100000, {.burn_in = 100, .thinning = 1}, 8899);
    REQUIRE(data.n() == 100000);
    for (std::size_t j = 0; j < 4; ++j) {
        double mean = 0.0;
        for (auto v : data.cols[j]) mean += v;
        mean /= static_cast<double>(data.n());
        CHECK(mean == Catch::Approx(0.5).margin(0.01));
    }
}

TEST_CASE("gibbs sampling is deterministic in the seed", "[simulation]") {
    IsingNetwork net = named_network(3);
    net.set_weight(0, 1, 0.6);
    net.set_weight(1, 2, -0.4);
    const BinaryDataset a = gibbs_sample(net, 500, {}, 777);
    const BinaryDataset b = gibbs_sample(net, 500, {}, 777);
    CHECK(a.cols == b.cols);
    const BinaryDataset c = gibbs_sample(net, 500, {}, 778);
    CHECK(a.cols != c.cols);
    CHECK(a.names == net.names);
}

TEST_CASE("sampler tracks the exact distribution", "[simulation]") {
    IsingNetwork net = named_network(4);
    net.thresholds = {0.2, -0.4, 0.3, -0.1};
    net.set_weight(0, 1, 0.8);
    net.set_weight(1, 2, -0.6);
    net.set_weight(2, 3, 0.5);
    net.set_weight(0, 2, 0.3);
    const ExactDistribution exact = exact_distribution(net);
    const BinaryDataset data = gibbs_sample(net, 100000, {}, 246810);
    const std::vector<double> empirical = empirical_distribution(data);
    CHECK(total_variation(empirical, exact.probabilities) < 0.02);
}

TEST_CASE("zero network perturbation baselines", "[simulation]") {
    const std::size_t p = 10;
    const IsingNetwork net = named_network(p);
    PerturbationConfig cfg;
    cfg.gibbs.burn_in = 200;
    cfg.gibbs.thinning = 2;
    const PerturbationReport report = perturbation_experiment(net, 1500, 13579, cfg);

    // clamping a node cannot move any other node when there are no edges
    CHECK(report.flip_response == 0.0);

    // alignment baseline for 10 fair coins: E|2 Binomial(10, 1/2)/10 - 1|
    double expected = 0.0;
    for (int k = 0; k <= 10; ++k) {
        double binom = 1.0;
        for (int i = 0; i < k; ++i) binom = binom * (10 - i) / (i + 1);
        expected += binom / 1024.0 * std::fabs(2.0 * k / 10.0 - 1.0);
    }
    CHECK(report.alignment == Catch::Approx(expected).margin(0.03));

    // field sweep follows the logistic closed form
    for (const auto& [field, mean_state] : report.field_sweep)
        CHECK(mean_state == Catch::Approx(logistic(field)).margin(0.02));
}

TEST_CASE("dense uniform network is more aligned and more rigid than a ring", "[simulation]") {
    const std::size_t p = 8;
    IsingNetwork dense = named_network(p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i + 1; j < p; ++j) dense.set_weight(i, j, 1.0);
    IsingNetwork ring = named_network(p);
    for (std::size_t i = 0; i < p; ++i) ring.set_weight(i, (i + 1) % p, 1.0);

    PerturbationConfig cfg;
    cfg.gibbs.burn_in = 300;
    cfg.gibbs.thinning = 3;
    const PerturbationReport d = perturbation_experiment(dense, 600, 11, cfg);
    const PerturbationReport r = perturbation_experiment(ring, 600, 11, cfg);
    CHECK(d.alignment > r.alignment);
    CHECK(d.flip_response < r.flip_response);
}

TEST_CASE("empirical distribution counts states correctly", "[simulation]") {
    BinaryDataset data;
    data.names = {"a", "b"};
    data.cols = {{1, 0, 1, 1}, {0, 0, 1, 0}};
    const auto freq = empirical_distribution(data);
    REQUIRE(freq.size() == 4);
    CHECK(freq[0] == Catch::Approx(0.25)); // 00
    CHECK(freq[1] == Catch::Approx(0.50)); // a=1,b=0
    CHECK(freq[3] == Catch::Approx(0.25)); // 11
    CHECK(total_variation(freq, freq) == 0.0);
}
