#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "attnet/dataset.hpp"
#include "attnet/errors.hpp"
#include "attnet/ising.hpp"

// Network estimation: every node is regressed on all other nodes with an
// L1-penalized logistic regression over a decreasing penalty path, each
// neighborhood is selected by EBIC, and the directed coefficients are
// combined into one symmetric weight matrix.

namespace attnet {

enum class EdgeRule { and_rule, or_rule };

inline EdgeRule edge_rule_from_string(const std::string& s) {
    if (s == "and") return EdgeRule::and_rule;
    if (s == "or") return EdgeRule::or_rule;
    throw InputError("edge rule must be \"and\" or \"or\", got \"" + s + "\"");
}

struct EstimationConfig {
    double gamma = 0.25;        // EBIC hyperparameter
    int n_lambda = 100;         // penalty path length
    double lambda_ratio = 0.01; // lambda_min / lambda_max
    double tolerance = 1e-7;    // max coefficient change
    int max_iterations = 10000; // coordinate descent sweeps per fit
    EdgeRule edge_rule = EdgeRule::and_rule;
};

inline void validate_config(const EstimationConfig& cfg) {
    if (cfg.gamma < 0.0) throw ContractError("estimation config: gamma must be >= 0");
    if (cfg.n_lambda < 2) throw ContractError("estimation config: lambda count must be >= 2");
    if (!(cfg.lambda_ratio > 0.0 && cfg.lambda_ratio < 1.0))
        throw ContractError("estimation config: lambda ratio must be in (0,1)");
    if (!(cfg.tolerance > 0.0)) throw ContractError("estimation config: tolerance must be > 0");
    if (cfg.max_iterations < 1) throw ContractError("estimation config: max iterations must be >= 1");
}

using BinaryColumn = std::span<const std::uint8_t>;

struct L1Fit {
    double intercept = 0.0;
    std::vector<double> coefficients;
};

namespace detail {

inline double sigmoid(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

inline double mean_of(BinaryColumn y) {
    double s = 0.0;
    for (auto v : y) s += v;
    return s / static_cast<double>(y.size());
}

} // namespace detail

// Penalty above which every coefficient of the penalized objective
//   sum_i [y_i eta_i - log(1 + e^{eta_i})] - lambda * n * sum_j |beta_j|
// is zero: max_j |sum_i x_ij (y_i - ybar)| / n.
inline double lambda_max(const std::vector<BinaryColumn>& X, BinaryColumn y) {
    const double ybar = detail::mean_of(y);
    const std::size_t n = y.size();
    double best = 0.0;
    for (const auto& col : X) {
        double score = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (col[i]) score += y[i] - ybar;
        best = std::max(best, std::fabs(score) / static_cast<double>(n));
    }
    return best;
}

// Log-spaced decreasing penalty sequence from lambda_max down to
// ratio * lambda_max. A zero lambda_max (predictors orthogonal to the
// centered response) degenerates to the single unpenalized fit {0}.
inline std::vector<double> lambda_path(const std::vector<BinaryColumn>& X, BinaryColumn y,
                                       const EstimationConfig& cfg) {
    validate_config(cfg);
    if (y.size() < 2) throw ContractError("lambda path: need at least 2 observations");
    const double ybar = detail::mean_of(y);
    if (ybar == 0.0 || ybar == 1.0) throw ContractError("degenerate response: y is constant");
    const double lmax = lambda_max(X, y);
    if (lmax <= 0.0) return {0.0};
    std::vector<double> path(cfg.n_lambda);
    for (int t = 0; t < cfg.n_lambda; ++t)
        path[t] = lmax * std::pow(cfg.lambda_ratio,
                                  static_cast<double>(t) / static_cast<double>(cfg.n_lambda - 1));
    return path;
}

// Unpenalized log-likelihood at the given parameters.
inline double logistic_loglik(const std::vector<BinaryColumn>& X, BinaryColumn y,
                              const L1Fit& fit) {
    const std::size_t n = y.size();
    double ll = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double eta = fit.intercept;
        for (std::size_t j = 0; j < X.size(); ++j)
            if (X[j][i]) eta += fit.coefficients[j];
        const double log1pexp = eta > 0.0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
        ll += y[i] * eta - log1pexp;
    }
    return ll;
}

// Largest violation of the KKT optimality conditions at the given point, on
// the lambda scale: for active coefficients |score_j/n - lambda*sign(beta_j)|,
// for inactive ones the excess of |score_j|/n over lambda, and the intercept
// score |mean(y - mu)|.
inline double kkt_violation(const std::vector<BinaryColumn>& X, BinaryColumn y, double lambda,
                            const L1Fit& fit) {
    const std::size_t n = y.size();
    const double dn = static_cast<double>(n);
    std::vector<double> resid(n);
    double intercept_score = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double eta = fit.intercept;
        for (std::size_t j = 0; j < X.size(); ++j)
            if (X[j][i]) eta += fit.coefficients[j];
        resid[i] = y[i] - detail::sigmoid(eta);
        intercept_score += resid[i];
    }
    double worst = std::fabs(intercept_score) / dn;
    for (std::size_t j = 0; j < X.size(); ++j) {
        double score = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            if (X[j][i]) score += resid[i];
        score /= dn;
        const double beta = fit.coefficients[j];
        if (beta != 0.0)
            worst = std::max(worst, std::fabs(score - lambda * (beta > 0.0 ? 1.0 : -1.0)));
        else
            worst = std::max(worst, std::fabs(score) - lambda);
    }
    return worst;
}

// Maximizes sum_i [y_i eta_i - log(1+e^{eta_i})] - lambda * n * sum_j |beta_j|
// by iteratively reweighted least squares with coordinate descent and
// soft-thresholding on the inner weighted problem. The intercept is
// unpenalized. Binary predictors are used as-is, without standardization.
inline L1Fit fit_l1_logistic(const std::vector<BinaryColumn>& X, BinaryColumn y, double lambda,
                             const L1Fit* warm_start, const EstimationConfig& cfg = {}) {
    const std::size_t n = y.size();
    const std::size_t m = X.size();
    if (n == 0) throw ContractError("fit_l1_logistic: empty response");
    for (const auto& col : X)
        if (col.size() != n) throw ContractError("fit_l1_logistic: predictor/response size mismatch");
    if (lambda < 0.0) throw ContractError("fit_l1_logistic: lambda must be >= 0");

    L1Fit fit;
    if (warm_start && warm_start->coefficients.size() == m) {
        fit = *warm_start;
    } else {
        const double ybar = detail::mean_of(y);
        if (ybar == 0.0 || ybar == 1.0)
            throw ContractError("fit_l1_logistic: degenerate response: y is constant");
        fit.intercept = std::log(ybar / (1.0 - ybar));
        fit.coefficients.assign(m, 0.0);
    }

    const double threshold = lambda * static_cast<double>(n);
    const double kkt_target = std::min(cfg.tolerance, 1e-8);
    double inner_tol = cfg.tolerance;
    std::vector<double> eta(n), w(n), e(n), colsum_w(m);
    int sweeps = 0;

    for (;;) {
        // quadratic approximation at the current point
        for (std::size_t i = 0; i < n; ++i) {
            double v = fit.intercept;
            for (std::size_t j = 0; j < m; ++j)
                if (X[j][i]) v += fit.coefficients[j];
            eta[i] = v;
            const double mu = detail::sigmoid(v);
            w[i] = std::max(mu * (1.0 - mu), 1e-6);
            e[i] = (y[i] - mu) / w[i];
        }
        double sum_w = 0.0;
        for (std::size_t i = 0; i < n; ++i) sum_w += w[i];
        for (std::size_t j = 0; j < m; ++j) {
            double v = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                if (X[j][i]) v += w[i];
            colsum_w[j] = v;
        }

        // coordinate descent on the penalized weighted least squares problem
        for (;;) {
            double sweep_change = 0.0;
            double num0 = 0.0;
            for (std::size_t i = 0; i < n; ++i) num0 += w[i] * e[i];
            const double d0 = num0 / sum_w;
            if (d0 != 0.0) {
                fit.intercept += d0;
                for (std::size_t i = 0; i < n; ++i) e[i] -= d0;
            }
            sweep_change = std::max(sweep_change, std::fabs(d0));

            for (std::size_t j = 0; j < m; ++j) {
                const double vj = colsum_w[j];
                if (vj <= 0.0) continue;
                double u = fit.coefficients[j] * vj;
                for (std::size_t i = 0; i < n; ++i)
                    if (X[j][i]) u += w[i] * e[i];
                double next = 0.0;
                const double mag = std::fabs(u) - threshold;
                if (mag > 0.0) next = (u > 0.0 ? mag : -mag) / vj;
                const double d = next - fit.coefficients[j];
                if (d != 0.0) {
                    for (std::size_t i = 0; i < n; ++i)
                        if (X[j][i]) e[i] -= d;
                    fit.coefficients[j] = next;
                }
                sweep_change = std::max(sweep_change, std::fabs(d));
            }

            ++sweeps;
            if (sweep_change < inner_tol) break;
            if (sweeps >= cfg.max_iterations)
                throw NumericalError("l1 logistic fit did not converge within " +
                                     std::to_string(cfg.max_iterations) +
                                     " sweeps at lambda=" + format_double(lambda));
        }

        if (kkt_violation(X, y, lambda, fit) <= kkt_target)
            return fit;
        if (sweeps >= cfg.max_iterations)
            throw NumericalError("l1 logistic fit did not converge within " +
                                 std::to_string(cfg.max_iterations) +
                                 " sweeps at lambda=" + format_double(lambda));
        // each reweighting round solves its quadratic a decade tighter until
        // the exact optimality conditions are met
        inner_tol = std::max(inner_tol * 0.1, 1e-13);
    }
}

// Extended Bayesian Information Criterion for a model with s selected
// predictors out of p_cand candidates: -2 logL + s log(n) + 2 gamma s log(p_cand).
inline double ebic(double loglik, int active, std::size_t n, std::size_t p_cand, double gamma) {
    return -2.0 * loglik + active * std::log(static_cast<double>(n)) +
           2.0 * gamma * active * std::log(static_cast<double>(p_cand));
}

struct PathPoint {
    double lambda = 0.0;
    double intercept = 0.0;
    std::vector<double> coefficients; // length p-1, order = nodes except the target
    double loglik = 0.0;
    int active_count = 0;
    double ebic = 0.0;
};

struct NodewiseFit {
    std::size_t node = 0;
    std::vector<PathPoint> path;
    std::size_t selected = 0; // index into path; EBIC argmin, ties to larger lambda

    const PathPoint& selected_point() const { return path[selected]; }
};

// Regresses one node on all others across the penalty path (warm starts from
// larger to smaller lambda) and picks the EBIC-minimal neighborhood.
inline NodewiseFit select_neighborhood(const BinaryDataset& data, std::size_t node,
                                       const EstimationConfig& cfg = {}) {
    validate_config(cfg);
    const std::size_t p = data.p();
    if (node >= p) throw ContractError("select_neighborhood: node index out of range");
    if (p < 2) throw ContractError("select_neighborhood: need at least 2 variables");

    BinaryColumn y(data.cols[node]);
    std::vector<BinaryColumn> X;
    X.reserve(p - 1);
    for (std::size_t j = 0; j < p; ++j)
        if (j != node) X.emplace_back(data.cols[j]);

    NodewiseFit result;
    result.node = node;
    std::vector<double> path;
    try {
        path = lambda_path(X, y, cfg);
    } catch (const ContractError& e) {
        throw ContractError("node \"" + data.names[node] + "\": " + e.what());
    }

    const std::size_t n = data.n();
    L1Fit warm;
    bool have_warm = false;
    double best_ebic = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < path.size(); ++t) {
        L1Fit fit;
        try {
            fit = fit_l1_logistic(X, y, path[t], have_warm ? &warm : nullptr, cfg);
        } catch (const NumericalError& e) {
            throw NumericalError("node \"" + data.names[node] + "\": " + e.what());
        }
        PathPoint point;
        point.lambda = path[t];
        point.intercept = fit.intercept;
        point.coefficients = fit.coefficients;
        point.loglik = logistic_loglik(X, y, fit);
        for (double b : fit.coefficients)
            if (b != 0.0) ++point.active_count;
        point.ebic = ebic(point.loglik, point.active_count, n, p - 1, cfg.gamma);
        if (point.ebic < best_ebic) {
            best_ebic = point.ebic;
            result.selected = t;
        }
        result.path.push_back(std::move(point));
        warm = std::move(fit);
        have_warm = true;
    }
    return result;
}

// Combines the directed coefficient matrix (coefs[i][j] = coefficient of
// predictor j in the selected model of node i) into symmetric edge weights.
// AND keeps an edge only when both directions are nonzero and averages them;
// OR keeps an edge when either is nonzero and averages the nonzero ones.
inline IsingNetwork combine_neighborhoods(const std::vector<std::string>& names,
                                          const std::vector<std::vector<double>>& coefs,
                                          const std::vector<double>& intercepts, EdgeRule rule) {
    IsingNetwork net = IsingNetwork::zeros(names);
    net.thresholds = intercepts;
    const std::size_t p = names.size();
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i + 1; j < p; ++j) {
            const double a = coefs[i][j], b = coefs[j][i];
            double w = 0.0;
            if (rule == EdgeRule::and_rule) {
                if (a != 0.0 && b != 0.0) w = 0.5 * (a + b);
            } else {
                if (a != 0.0 && b != 0.0) w = 0.5 * (a + b);
                else if (a != 0.0) w = a;
                else if (b != 0.0) w = b;
            }
            if (w != 0.0) net.set_weight(i, j, w);
        }
    }
    return net;
}

// Full eLasso estimate: nodewise EBIC-selected neighborhoods combined under
// the configured edge rule. Deterministic for fixed input and config.
inline IsingNetwork estimate_network(const BinaryDataset& data, const EstimationConfig& cfg = {}) {
    validate_config(cfg);
    const std::size_t p = data.p();
    if (p < 2) throw ContractError("estimate_network: need at least 2 variables");
    if (data.n() < 2) throw ContractError("estimate_network: need at least 2 observations");
    for (std::size_t j = 0; j < p; ++j) {
        bool saw0 = false, saw1 = false;
        for (auto v : data.cols[j]) (v ? saw1 : saw0) = true;
        if (!(saw0 && saw1))
            throw ContractError("estimate_network: node \"" + data.names[j] + "\" is constant");
    }

    std::vector<std::vector<double>> coefs(p, std::vector<double>(p, 0.0));
    std::vector<double> intercepts(p, 0.0);
    for (std::size_t node = 0; node < p; ++node) {
        const NodewiseFit fit = select_neighborhood(data, node, cfg);
        const PathPoint& sel = fit.selected_point();
        intercepts[node] = sel.intercept;
        std::size_t idx = 0;
        for (std::size_t j = 0; j < p; ++j) {
            if (j == node) continue;
            coefs[node][j] = sel.coefficients[idx++];
        }
    }
    return combine_neighborhoods(data.names, coefs, intercepts, cfg.edge_rule);
}

} // namespace attnet
