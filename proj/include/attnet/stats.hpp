#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "attnet/csv.hpp"
#include "attnet/errors.hpp"
#include "attnet/special_functions.hpp"

// Group-level inference: ANCOVA of connectivity on a categorical factor with
// a network-size covariate, Tukey-corrected pairwise contrasts, and the
// correlation measures used for attitude strength (Pearson stability,
// biserial behavior impact, partial correlations).

namespace attnet {

inline double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ContractError("pearson: length mismatch");
    const std::size_t n = x.size();
    if (n < 3) throw ContractError("pearson: need at least 3 observations");
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw ContractError("pearson: zero variance");
    return sxy / std::sqrt(sxx * syy);
}

struct BiserialResult {
    double r = 0.0;
    std::size_t n0 = 0, n1 = 0;
    bool unstable = false; // extreme split or estimate clamped into [-1, 1]
};

// Biserial correlation between a continuous variable and a dichotomy assumed
// to arise from thresholding a latent normal:
//   r_b = ((mean1 - mean0) / s_y) * p * q / phi(z)
// with p the proportion of ones, z the upper-tail normal quantile with area
// p, and s_y the population-style (n divisor) standard deviation.
inline BiserialResult biserial(std::span<const double> y, std::span<const double> d) {
    if (y.size() != d.size()) throw ContractError("biserial: length mismatch");
    const std::size_t n = y.size();
    if (n < 2) throw ContractError("biserial: need at least 2 observations");
    double sum1 = 0.0, sum0 = 0.0, sum = 0.0;
    std::size_t n1 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (d[i] != 0.0 && d[i] != 1.0)
            throw ContractError("biserial: dichotomous variable must be 0/1");
        sum += y[i];
        if (d[i] == 1.0) {
            sum1 += y[i];
            ++n1;
        } else {
            sum0 += y[i];
        }
    }
    const std::size_t n0 = n - n1;
    if (n0 == 0 || n1 == 0) throw ContractError("biserial: one class is empty");
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (double v : y) ss += (v - mean) * (v - mean);
    const double sy = std::sqrt(ss / static_cast<double>(n));
    if (sy == 0.0) throw ContractError("biserial: zero variance in the continuous variable");

    const double p = static_cast<double>(n1) / static_cast<double>(n);
    const double q = 1.0 - p;
    const double z = normal_quantile(1.0 - p); // upper-tail area p
    const double diff = sum1 / static_cast<double>(n1) - sum0 / static_cast<double>(n0);

    BiserialResult result;
    result.n0 = n0;
    result.n1 = n1;
    result.r = (diff / sy) * (p * q / normal_pdf(z));
    result.unstable = std::min(n0, n1) <= 1;
    if (result.r > 1.0 || result.r < -1.0) {
        result.r = std::clamp(result.r, -1.0, 1.0);
        result.unstable = true;
    }
    return result;
}

// Point-biserial variant (plain Pearson with the 0/1 indicator), offered for
// sensitivity analysis.
inline double point_biserial(std::span<const double> y, std::span<const double> d) {
    return pearson(y, d);
}

inline double partial_correlation(std::span<const double> x, std::span<const double> y,
                                  std::span<const double> z) {
    if (x.size() != y.size() || x.size() != z.size())
        throw ContractError("partial_correlation: length mismatch");
    if (x.size() < 4) throw ContractError("partial_correlation: need at least 4 observations");
    const double rxy = pearson(x, y);
    const double rxz = pearson(x, z);
    const double ryz = pearson(y, z);
    const double denom_sq = (1.0 - rxz * rxz) * (1.0 - ryz * ryz);
    if (denom_sq <= 0.0)
        throw NumericalError("partial_correlation: a control correlation is +-1");
    return (rxy - rxz * ryz) / std::sqrt(denom_sq);
}

// Two-sided p-value for a partial correlation controlling one variable,
// via t = r sqrt((n-3)/(1-r^2)) with n-3 degrees of freedom.
inline double partial_correlation_pvalue(double r, std::size_t n) {
    if (n < 4) throw ContractError("partial correlation p-value: need n >= 4");
    const double df = static_cast<double>(n - 3);
    if (std::fabs(r) >= 1.0) return 0.0;
    const double t = r * std::sqrt(df / (1.0 - r * r));
    return 2.0 * (1.0 - student_t_cdf(std::fabs(t), df));
}

namespace detail {

struct LstsqResult {
    std::vector<double> coefficients;
    double rss = 0.0;
};

// Dense least squares by Householder QR; m is tiny here. Throws on rank
// deficiency, naming the offending column.
inline LstsqResult lstsq(std::vector<std::vector<double>> cols, std::vector<double> y,
                         const std::vector<std::string>& names) {
    const std::size_t m = cols.size();
    const std::size_t n = y.size();
    if (n < m) throw ContractError("least squares: more parameters than observations");

    double scale = 0.0;
    for (const auto& col : cols)
        for (double v : col) scale = std::max(scale, std::fabs(v));
    const double rank_tol = std::max(scale, 1.0) * 1e-10 * std::sqrt(static_cast<double>(n));

    for (std::size_t k = 0; k < m; ++k) {
        double norm = 0.0;
        for (std::size_t i = k; i < n; ++i) norm += cols[k][i] * cols[k][i];
        norm = std::sqrt(norm);
        if (norm <= rank_tol)
            throw ContractError("design is rank-deficient: column \"" + names[k] +
                                "\" is collinear with the preceding columns");
        const double alpha = cols[k][k] >= 0.0 ? -norm : norm;
        std::vector<double> v(n - k);
        v[0] = cols[k][k] - alpha;
        for (std::size_t i = k + 1; i < n; ++i) v[i - k] = cols[k][i];
        double vnorm_sq = 0.0;
        for (double t : v) vnorm_sq += t * t;
        cols[k][k] = alpha;
        for (std::size_t i = k + 1; i < n; ++i) cols[k][i] = 0.0;
        if (vnorm_sq == 0.0) continue;
        for (std::size_t j = k + 1; j < m; ++j) {
            double dot = 0.0;
            for (std::size_t i = k; i < n; ++i) dot += v[i - k] * cols[j][i];
            const double f = 2.0 * dot / vnorm_sq;
            for (std::size_t i = k; i < n; ++i) cols[j][i] -= f * v[i - k];
        }
        double dot = 0.0;
        for (std::size_t i = k; i < n; ++i) dot += v[i - k] * y[i];
        const double f = 2.0 * dot / vnorm_sq;
        for (std::size_t i = k; i < n; ++i) y[i] -= f * v[i - k];
    }

    LstsqResult result;
    result.coefficients.assign(m, 0.0);
    for (std::size_t k = m; k-- > 0;) {
        double acc = y[k];
        for (std::size_t j = k + 1; j < m; ++j) acc -= cols[j][k] * result.coefficients[j];
        result.coefficients[k] = acc / cols[k][k];
    }
    for (std::size_t i = m; i < n; ++i) result.rss += y[i] * y[i];
    return result;
}

// Residuals of y after removing the best linear fit on a single covariate.
inline std::vector<double> residualize(std::span<const double> y, std::span<const double> z) {
    const std::size_t n = y.size();
    double mz = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mz += z[i];
        my += y[i];
    }
    mz /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double szz = 0.0, szy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        szz += (z[i] - mz) * (z[i] - mz);
        szy += (z[i] - mz) * (y[i] - my);
    }
    const double slope = szz > 0.0 ? szy / szz : 0.0;
    std::vector<double> resid(n);
    for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - my - slope * (z[i] - mz);
    return resid;
}

} // namespace detail

struct AncovaFit {
    std::vector<std::string> levels; // sorted group labels
    std::vector<std::size_t> group_sizes;
    std::vector<double> adjusted_means; // predicted at the grand-mean covariate
    double covariate_coefficient = 0.0;
    double grand_mean_covariate = 0.0;
    double f = 0.0;
    int df_factor = 0;
    int df_residual = 0;
    double p = 1.0;
    double partial_eta_sq = 0.0;
    double ss_factor = 0.0;
    double ss_residual = 0.0;
    double mse = 0.0;
};

// Linear model y ~ intercept + group factor + covariate. The factor F test
// compares the full model against the covariate-only model (factor added
// last), which handles unbalanced designs.
inline AncovaFit ancova(std::span<const double> y, const std::vector<std::string>& group,
                        std::span<const double> covariate) {
    const std::size_t n = y.size();
    if (group.size() != n || covariate.size() != n)
        throw ContractError("ancova: length mismatch");

    AncovaFit fit;
    fit.levels.assign(group.begin(), group.end());
    std::sort(fit.levels.begin(), fit.levels.end());
    fit.levels.erase(std::unique(fit.levels.begin(), fit.levels.end()), fit.levels.end());
    const std::size_t k = fit.levels.size();
    if (k < 2) throw ContractError("ancova: need at least 2 group levels");
    if (n < k + 2) throw ContractError("ancova: need at least k+2 observations");

    bool covariate_varies = false;
    for (std::size_t i = 1; i < n; ++i)
        if (covariate[i] != covariate[0]) covariate_varies = true;
    if (!covariate_varies) throw ContractError("ancova: covariate is constant");

    fit.group_sizes.assign(k, 0);
    std::vector<std::size_t> level_of(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto it = std::lower_bound(fit.levels.begin(), fit.levels.end(), group[i]);
        level_of[i] = static_cast<std::size_t>(it - fit.levels.begin());
        ++fit.group_sizes[level_of[i]];
    }
    for (std::size_t g = 0; g < k; ++g)
        if (fit.group_sizes[g] == 0)
            throw ContractError("ancova: empty group level \"" + fit.levels[g] + "\"");

    std::vector<double> yv(y.begin(), y.end());
    std::vector<double> ones(n, 1.0), cov(covariate.begin(), covariate.end());

    // full model: intercept + (k-1) dummies + covariate
    std::vector<std::vector<double>> cols{ones};
    std::vector<std::string> names{"intercept"};
    for (std::size_t g = 1; g < k; ++g) {
        std::vector<double> dummy(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            if (level_of[i] == g) dummy[i] = 1.0;
        cols.push_back(std::move(dummy));
        names.push_back("group[" + fit.levels[g] + "]");
    }
    cols.push_back(cov);
    names.push_back("covariate");
    const auto full = detail::lstsq(cols, yv, names);

    // reduced model: intercept + covariate
    const auto reduced = detail::lstsq({ones, cov}, yv, {"intercept", "covariate"});

    fit.df_factor = static_cast<int>(k) - 1;
    fit.df_residual = static_cast<int>(n) - static_cast<int>(k) - 1;
    if (fit.df_residual < 1) throw ContractError("ancova: no residual degrees of freedom");
    fit.ss_factor = std::max(0.0, reduced.rss - full.rss);
    fit.ss_residual = full.rss;
    fit.mse = fit.ss_residual / fit.df_residual;
    if (fit.mse <= 0.0) throw NumericalError("ancova: zero residual variance");
    fit.f = (fit.ss_factor / fit.df_factor) / fit.mse;
    fit.p = f_sf(fit.f, fit.df_factor, fit.df_residual);
    fit.partial_eta_sq = fit.ss_factor / (fit.ss_factor + fit.ss_residual);

    double cbar = 0.0;
    for (double c : cov) cbar += c;
    cbar /= static_cast<double>(n);
    fit.grand_mean_covariate = cbar;
    fit.covariate_coefficient = full.coefficients.back();
    fit.adjusted_means.assign(k, 0.0);
    for (std::size_t g = 0; g < k; ++g) {
        double mean = full.coefficients[0] + fit.covariate_coefficient * cbar;
        if (g > 0) mean += full.coefficients[g];
        fit.adjusted_means[g] = mean;
    }
    return fit;
}

struct TukeyContrast {
    std::string level_a, level_b;
    double difference = 0.0; // adjusted mean (a) - adjusted mean (b)
    double se = 0.0;
    double t = 0.0;
    double p = 1.0;       // studentized-range corrected
    double ci_low = 0.0;  // simultaneous 95% interval
    double ci_high = 0.0;
    double cohens_d = 0.0; // difference / sqrt(MSE)
};

// Pairwise comparisons of adjusted means with Tukey-Kramer standard errors
// sqrt(MSE (1/n_a + 1/n_b)) and p-values from the studentized range
// distribution of sqrt(2) |t| at (k, residual df).
inline std::vector<TukeyContrast> tukey_contrasts(const AncovaFit& fit) {
    const std::size_t k = fit.levels.size();
    if (k < 2) throw ContractError("tukey_contrasts: need at least 2 levels");
    const double df = static_cast<double>(fit.df_residual);
    const double q_crit = studentized_range_quantile(0.95, static_cast<int>(k), df);
    const double sqrt2 = std::sqrt(2.0);
    std::vector<TukeyContrast> contrasts;
    for (std::size_t a = 0; a < k; ++a) {
        for (std::size_t b = a + 1; b < k; ++b) {
            TukeyContrast c;
            c.level_a = fit.levels[a];
            c.level_b = fit.levels[b];
            c.difference = fit.adjusted_means[a] - fit.adjusted_means[b];
            c.se = std::sqrt(fit.mse * (1.0 / fit.group_sizes[a] + 1.0 / fit.group_sizes[b]));
            c.t = c.difference / c.se;
            c.p = studentized_range_sf(sqrt2 * std::fabs(c.t), static_cast<int>(k), df);
            const double half_width = (q_crit / sqrt2) * c.se;
            c.ci_low = c.difference - half_width;
            c.ci_high = c.difference + half_width;
            c.cohens_d = c.difference / std::sqrt(fit.mse);
            contrasts.push_back(std::move(c));
        }
    }
    return contrasts;
}

// One row per estimated network: the unit of the group-level analysis.
struct GroupRecord {
    std::string cohort;
    std::string group;
    double aspl = 0.0;
    double n_nodes = 0.0;
    double stability = std::numeric_limits<double>::quiet_NaN();       // Pearson pre/post
    double behavior_impact = std::numeric_limits<double>::quiet_NaN(); // biserial vs vote
};

inline AncovaFit ancova_from_records(const std::vector<GroupRecord>& records) {
    std::vector<double> y, cov;
    std::vector<std::string> group;
    for (const auto& r : records) {
        y.push_back(r.aspl);
        cov.push_back(r.n_nodes);
        group.push_back(r.group);
    }
    return ancova(y, group, cov);
}

struct StrengthScatterPoint {
    std::string cohort, group;
    double connectivity_residual = 0.0; // ASPL, covariate removed
    double strength_residual = 0.0;
};

struct StrengthMeasureResult {
    std::string measure;
    double partial_r = 0.0;
    double p = 1.0;
    std::size_t n_records = 0;
    std::vector<StrengthScatterPoint> scatter;
};

struct StrengthAnalysis {
    std::optional<StrengthMeasureResult> behavior_impact;
    std::optional<StrengthMeasureResult> stability;
};

namespace detail {

inline std::optional<StrengthMeasureResult> strength_measure(
    const std::vector<GroupRecord>& records, const std::string& measure,
    double GroupRecord::*field) {
    std::vector<const GroupRecord*> used;
    for (const auto& r : records)
        if (std::isfinite(r.*field)) used.push_back(&r);
    if (used.empty()) return std::nullopt;
    if (used.size() < 4)
        throw ContractError("strength analysis: need at least 4 records with " + measure);

    std::vector<double> aspl, size, value;
    for (const auto* r : used) {
        aspl.push_back(r->aspl);
        size.push_back(r->n_nodes);
        value.push_back(r->*field);
    }
    bool varies = false;
    for (double v : value)
        if (v != value.front()) varies = true;
    if (!varies) throw ContractError("strength analysis: " + measure + " has zero variance");

    StrengthMeasureResult result;
    result.measure = measure;
    result.n_records = used.size();
    result.partial_r = partial_correlation(aspl, value, size);
    result.p = partial_correlation_pvalue(result.partial_r, used.size());
    const auto xr = residualize(aspl, size);
    const auto yr = residualize(value, size);
    for (std::size_t i = 0; i < used.size(); ++i)
        result.scatter.push_back({used[i]->cohort, used[i]->group, xr[i], yr[i]});
    return result;
}

} // namespace detail

// Partial correlations of connectivity with each strength measure,
// controlling for network size; records missing a measure are skipped for
// that measure only.
inline StrengthAnalysis connectivity_strength_analysis(const std::vector<GroupRecord>& records) {
    if (records.size() < 4)
        throw ContractError("strength analysis: need at least 4 records");
    StrengthAnalysis analysis;
    analysis.behavior_impact =
        detail::strength_measure(records, "behavior_impact", &GroupRecord::behavior_impact);
    analysis.stability = detail::strength_measure(records, "stability", &GroupRecord::stability);
    return analysis;
}

inline std::string records_to_csv(const std::vector<GroupRecord>& records) {
    std::string out = "cohort,group,aspl,n_nodes,stability,behavior_impact\n";
    for (const auto& r : records) {
        out += csv_escape(r.cohort) + "," + csv_escape(r.group) + "," + format_double(r.aspl) +
               "," + format_double(r.n_nodes) + ",";
        if (std::isfinite(r.stability)) out += format_double(r.stability);
        out += ",";
        if (std::isfinite(r.behavior_impact)) out += format_double(r.behavior_impact);
        out += "\n";
    }
    return out;
}

inline std::vector<GroupRecord> records_from_csv(const CsvTable& table,
                                                 const std::string& origin = "<records>") {
    const std::vector<std::string> expected{"cohort", "group", "aspl",
                                            "n_nodes", "stability", "behavior_impact"};
    if (table.header != expected)
        throw InputError(origin +
                         ": expected header cohort,group,aspl,n_nodes,stability,behavior_impact");
    std::vector<GroupRecord> records;
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        if (row.size() != expected.size())
            throw InputError(origin + ": row " + std::to_string(i + 2) + " has wrong arity");
        GroupRecord r;
        r.cohort = row[0];
        r.group = row[1];
        auto num = [&](const std::string& cell, const char* what, bool required) {
            const auto v = detail::parse_number(cell);
            if (!v) {
                if (!required && detail::trim(cell).empty())
                    return std::numeric_limits<double>::quiet_NaN();
                throw InputError(origin + ": row " + std::to_string(i + 2) + ": bad " + what);
            }
            return *v;
        };
        r.aspl = num(row[2], "aspl", true);
        r.n_nodes = num(row[3], "n_nodes", true);
        r.stability = num(row[4], "stability", false);
        r.behavior_impact = num(row[5], "behavior_impact", false);
        if (r.n_nodes < 2) throw ContractError(origin + ": n_nodes must be >= 2");
        for (double c : {r.stability, r.behavior_impact})
            if (std::isfinite(c) && (c < -1.0 || c > 1.0))
                throw ContractError(origin + ": correlations must lie in [-1, 1]");
        records.push_back(std::move(r));
    }
    return records;
}

inline std::vector<GroupRecord> load_records(const std::string& path) {
    return records_from_csv(read_csv_file(path), path);
}

} // namespace attnet
