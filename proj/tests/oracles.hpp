#pragma once

// Independent reference implementations used only by tests. These stay
// deliberately separate from the library: plain Newton-Raphson for logistic
// regression, Floyd-Warshall for all-pairs shortest paths, and a
// Kolmogorov-Smirnov uniformity test.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "attnet/ising.hpp"

namespace oracles {

struct NewtonFit {
    double intercept = 0.0;
    std::vector<double> coefficients;
    bool converged = false;
};

// Unpenalized logistic MLE by full Newton-Raphson with a dense Hessian solve.
inline NewtonFit newton_logistic(const std::vector<std::vector<double>>& X,
                                 const std::vector<double>& y, int max_iter = 200) {
    const std::size_t n = y.size();
    const std::size_t m = X.size();
    const std::size_t dim = m + 1; // intercept first
    std::vector<double> beta(dim, 0.0);

    auto design = [&](std::size_t i, std::size_t j) -> double {
        return j == 0 ? 1.0 : X[j - 1][i];
    };

    for (int it = 0; it < max_iter; ++it) {
        std::vector<double> grad(dim, 0.0);
        std::vector<double> hess(dim * dim, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            double eta = 0.0;
            for (std::size_t j = 0; j < dim; ++j) eta += beta[j] * design(i, j);
            const double mu = 1.0 / (1.0 + std::exp(-eta));
            const double w = mu * (1.0 - mu);
            const double r = y[i] - mu;
            for (std::size_t j = 0; j < dim; ++j) {
                grad[j] += r * design(i, j);
                for (std::size_t k = 0; k < dim; ++k)
                    hess[j * dim + k] += w * design(i, j) * design(i, k);
            }
        }
        // solve hess * step = grad by Gaussian elimination with partial pivoting
        std::vector<double> a = hess, b = grad, step(dim, 0.0);
        for (std::size_t col = 0; col < dim; ++col) {
            std::size_t pivot = col;
            for (std::size_t r = col + 1; r < dim; ++r)
                if (std::fabs(a[r * dim + col]) > std::fabs(a[pivot * dim + col])) pivot = r;
            if (std::fabs(a[pivot * dim + col]) < 1e-12)
                throw std::runtime_error("newton oracle: singular Hessian");
            if (pivot != col) {
                for (std::size_t c = 0; c < dim; ++c) std::swap(a[col * dim + c], a[pivot * dim + c]);
                std::swap(b[col], b[pivot]);
            }
            for (std::size_t r = col + 1; r < dim; ++r) {
                const double f = a[r * dim + col] / a[col * dim + col];
                for (std::size_t c = col; c < dim; ++c) a[r * dim + c] -= f * a[col * dim + c];
                b[r] -= f * b[col];
            }
        }
        for (std::size_t col = dim; col-- > 0;) {
            double acc = b[col];
            for (std::size_t c = col + 1; c < dim; ++c) acc -= a[col * dim + c] * step[c];
            step[col] = acc / a[col * dim + col];
        }
        double max_step = 0.0;
        for (std::size_t j = 0; j < dim; ++j) {
            beta[j] += step[j];
            max_step = std::max(max_step, std::fabs(step[j]));
        }
        if (max_step < 1e-13) {
            NewtonFit fit;
            fit.intercept = beta[0];
            fit.coefficients.assign(beta.begin() + 1, beta.end());
            fit.converged = true;
            return fit;
        }
    }
    NewtonFit fit;
    fit.intercept = beta[0];
    fit.coefficients.assign(beta.begin() + 1, beta.end());
    return fit;
}

// All-pairs shortest paths on edge lengths 1/|w|, brute force.
inline std::vector<double> floyd_warshall(const attnet::IsingNetwork& net) {
    const std::size_t p = net.p();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> d(p * p, inf);
    for (std::size_t i = 0; i < p; ++i) d[i * p + i] = 0.0;
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j)
            if (i != j && net.weight(i, j) != 0.0) d[i * p + j] = 1.0 / std::fabs(net.weight(i, j));
    for (std::size_t k = 0; k < p; ++k)
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j)
                if (d[i * p + k] + d[k * p + j] < d[i * p + j])
                    d[i * p + j] = d[i * p + k] + d[k * p + j];
    return d;
}

struct AsplOracle {
    double aspl = 0.0;
    std::size_t disconnected_pairs = 0;
    bool any_finite = false;
};

// ASPL with the same infinite-path replacement convention: infinities become
// the largest finite pairwise distance in the same network.
inline AsplOracle aspl_oracle(const attnet::IsingNetwork& net) {
    const std::size_t p = net.p();
    const std::vector<double> d = floyd_warshall(net);
    AsplOracle result;
    double max_finite = -1.0;
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i + 1; j < p; ++j)
            if (std::isfinite(d[i * p + j])) max_finite = std::max(max_finite, d[i * p + j]);
    if (max_finite < 0.0) return result;
    result.any_finite = true;
    double total = 0.0;
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i + 1; j < p; ++j) {
            double v = d[i * p + j];
            if (!std::isfinite(v)) {
                v = max_finite;
                ++result.disconnected_pairs;
            }
            total += v;
        }
    }
    result.aspl = total / (0.5 * static_cast<double>(p) * static_cast<double>(p - 1));
    return result;
}

// Kolmogorov-Smirnov test against Uniform(0,1), asymptotic p-value with the
// Stephens small-sample correction.
inline double ks_uniform_pvalue(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    double d_stat = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double hi = (i + 1.0) / n - values[i];
        const double lo = values[i] - i / n;
        d_stat = std::max({d_stat, hi, lo});
    }
    const double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d_stat;
    double p = 0.0;
    for (int j = 1; j <= 101; ++j) {
        const double term = 2.0 * std::exp(-2.0 * j * j * lambda * lambda);
        p += (j % 2 == 1) ? term : -term;
    }
    return std::clamp(p, 0.0, 1.0);
}

} // namespace oracles
