#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "attnet/csv.hpp"
#include "attnet/errors.hpp"

namespace attnet {

// Pairwise binary Markov network over {0,1} nodes:
//   P(x) proportional to exp(sum_i tau_i x_i + sum_{i<j} w_ij x_i x_j).
// The weight matrix is symmetric with an exactly zero diagonal.
struct IsingNetwork {
    std::vector<std::string> names;
    std::vector<double> thresholds;
    std::vector<double> weights; // p*p, row-major

    std::size_t p() const { return names.size(); }

    double weight(std::size_t i, std::size_t j) const { return weights[i * p() + j]; }

    void set_weight(std::size_t i, std::size_t j, double w) {
        weights[i * p() + j] = w;
        weights[j * p() + i] = w;
    }

    static IsingNetwork zeros(std::vector<std::string> names) {
        IsingNetwork net;
        net.thresholds.assign(names.size(), 0.0);
        net.weights.assign(names.size() * names.size(), 0.0);
        net.names = std::move(names);
        return net;
    }

    std::size_t edge_count() const {
        std::size_t count = 0;
        for (std::size_t i = 0; i < p(); ++i)
            for (std::size_t j = i + 1; j < p(); ++j)
                if (weight(i, j) != 0.0) ++count;
        return count;
    }
};

inline void validate_network(const IsingNetwork& net) {
    const std::size_t p = net.p();
    if (net.thresholds.size() != p || net.weights.size() != p * p)
        throw ContractError("network: inconsistent dimensions");
    for (double t : net.thresholds)
        if (!std::isfinite(t)) throw ContractError("network: non-finite threshold");
    for (std::size_t i = 0; i < p; ++i) {
        if (net.weight(i, i) != 0.0)
            throw ContractError("network: nonzero diagonal at node " + std::to_string(i));
        for (std::size_t j = 0; j < p; ++j) {
            if (!std::isfinite(net.weight(i, j)))
                throw ContractError("network: non-finite weight");
            if (net.weight(i, j) != net.weight(j, i))
                throw ContractError("network: weight matrix not symmetric at (" +
                                    std::to_string(i) + "," + std::to_string(j) + ")");
        }
    }
}

inline nlohmann::json network_to_json(const IsingNetwork& net) {
    nlohmann::json j;
    j["names"] = net.names;
    j["thresholds"] = net.thresholds;
    auto rows = nlohmann::json::array();
    for (std::size_t i = 0; i < net.p(); ++i) {
        auto row = nlohmann::json::array();
        for (std::size_t k = 0; k < net.p(); ++k) row.push_back(net.weight(i, k));
        rows.push_back(std::move(row));
    }
    j["weights"] = std::move(rows);
    return j;
}

inline IsingNetwork network_from_json(const nlohmann::json& j,
                                      const std::string& origin = "<network>") {
    IsingNetwork net;
    try {
        net.names = j.at("names").get<std::vector<std::string>>();
        net.thresholds = j.at("thresholds").get<std::vector<double>>();
        for (const auto& row : j.at("weights"))
            for (const auto& w : row) net.weights.push_back(w.get<double>());
    } catch (const nlohmann::json::exception& e) {
        throw InputError(origin + ": malformed network JSON: " + e.what());
    }
    try {
        validate_network(net);
    } catch (const ContractError& e) {
        throw InputError(origin + ": " + e.what());
    }
    return net;
}

// Edge list with one row per nonzero upper-triangle weight.
inline std::string network_edges_csv(const IsingNetwork& net) {
    std::string out = "i,j,weight\n";
    for (std::size_t i = 0; i < net.p(); ++i)
        for (std::size_t j = i + 1; j < net.p(); ++j)
            if (net.weight(i, j) != 0.0)
                out += std::to_string(i) + "," + std::to_string(j) + "," +
                       format_double(net.weight(i, j)) + "\n";
    return out;
}

} // namespace attnet
