// Statistical screening: Mann-Whitney U, Pearson chi-squared, Pearson
// correlation with collinearity pruning.
#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "coughlab/common.hpp"

namespace coughlab {

enum class TestMethod { mann_whitney, chi_square };

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    TestMethod method = TestMethod::mann_whitney;
};

namespace special {

inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

// Regularized incomplete gamma P(a,x) by series, Q(a,x) by continued
// fraction; the split at x = a+1 keeps both rapidly convergent.
inline double gamma_p_series(double a, double x) {
    double sum = 1.0 / a, term = sum, ap = a;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-15) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_q(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw InvalidArgument("gamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
    return gamma_q_contfrac(a, x);
}

// Survival function of the chi-squared distribution with df degrees.
inline double chi2_sf(double x, double df) { return gamma_q(df / 2.0, x / 2.0); }

}  // namespace special

namespace mwu_detail {

// Mid-ranks of the pooled sample; also accumulates the tie correction term
// sum(t^3 - t) over tie groups.
inline std::vector<double> midranks(const std::vector<double>& pooled, double& tie_term) {
    const size_t n = pooled.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return pooled[a] < pooled[b]; });
    std::vector<double> ranks(n);
    tie_term = 0.0;
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && pooled[order[j + 1]] == pooled[order[i]]) ++j;
        const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
        const double t = static_cast<double>(j - i + 1);
        tie_term += t * t * t - t;
        i = j + 1;
    }
    return ranks;
}

// Exact two-sided p for tie-free samples: 2 * P(U_x <= u_min) over all rank
// assignments, capped at 1. U_x is symmetric under the null, so doubling one
// tail covers both.
inline double exact_p(size_t n_x, size_t n_y, double u_min) {
    const size_t n = n_x + n_y;
    const double offset = static_cast<double>(n_x * (n_x + 1)) / 2.0;
    uint64_t total = 0, at_or_below = 0;
    for (uint32_t mask = 0; mask < (1u << n); ++mask) {
        if (static_cast<size_t>(std::popcount(mask)) != n_x) continue;
        ++total;
        double rank_sum = 0.0;
        for (size_t b = 0; b < n; ++b)
            if (mask & (1u << b)) rank_sum += static_cast<double>(b + 1);
        const double ux = rank_sum - offset;
        if (ux <= u_min + 1e-12) ++at_or_below;
    }
    return std::min(1.0, 2.0 * static_cast<double>(at_or_below) / static_cast<double>(total));
}

}  // namespace mwu_detail

enum class MwuMode { automatic, exact, normal_approx };

// Two-sided Mann-Whitney U. The statistic is min(U_x, U_y). Exact
// enumeration when the pooled sample has at most 12 tie-free values,
// otherwise the normal approximation with tie-corrected variance and
// continuity correction.
inline TestResult mann_whitney_u(const std::vector<double>& xs, const std::vector<double>& ys,
                                 MwuMode mode = MwuMode::automatic) {
    if (xs.empty() || ys.empty()) throw InvalidArgument("mann_whitney_u: empty sample");
    const size_t n_x = xs.size(), n_y = ys.size(), n = n_x + n_y;

    std::vector<double> pooled = xs;
    pooled.insert(pooled.end(), ys.begin(), ys.end());
    double tie_term = 0.0;
    const auto ranks = mwu_detail::midranks(pooled, tie_term);

    double rank_sum_x = 0.0;
    for (size_t i = 0; i < n_x; ++i) rank_sum_x += ranks[i];
    const double u_x = rank_sum_x - static_cast<double>(n_x * (n_x + 1)) / 2.0;
    const double u_y = static_cast<double>(n_x * n_y) - u_x;
    const double u = std::min(u_x, u_y);

    TestResult res;
    res.method = TestMethod::mann_whitney;
    res.statistic = u;

    const bool tie_free = tie_term == 0.0;
    const bool use_exact = mode == MwuMode::exact || (mode == MwuMode::automatic && n <= 12 && tie_free);
    if (use_exact) {
        if (!tie_free) throw InvalidArgument("mann_whitney_u: exact mode requires tie-free samples");
        if (n > 20) throw InvalidArgument("mann_whitney_u: exact mode limited to n <= 20");
        res.p_value = mwu_detail::exact_p(n_x, n_y, u);
        return res;
    }

    const double mu = static_cast<double>(n_x * n_y) / 2.0;
    const double nn = static_cast<double>(n);
    const double var = static_cast<double>(n_x * n_y) / 12.0 *
                       ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
    if (var <= 0.0) {
        res.p_value = 1.0;  // every pooled value identical
        return res;
    }
    const double z = std::max(0.0, mu - u - 0.5) / std::sqrt(var);
    res.p_value = std::min(1.0, 2.0 * special::normal_sf(z));
    return res;
}

// Pearson chi-squared on an r x c contingency table, no continuity
// correction, df = (r-1)(c-1).
inline TestResult chi_square(const std::vector<std::vector<double>>& table) {
    const size_t r = table.size();
    if (r < 2) throw InvalidArgument("chi_square: need at least 2 rows");
    const size_t c = table[0].size();
    if (c < 2) throw InvalidArgument("chi_square: need at least 2 columns");
    for (const auto& row : table)
        if (row.size() != c) throw InvalidArgument("chi_square: ragged table");

    std::vector<double> row_tot(r, 0.0), col_tot(c, 0.0);
    double total = 0.0;
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < c; ++j) {
            if (table[i][j] < 0.0) throw InvalidArgument("chi_square: negative count");
            row_tot[i] += table[i][j];
            col_tot[j] += table[i][j];
            total += table[i][j];
        }
    for (double t : row_tot)
        if (t <= 0.0) throw InvalidArgument("chi_square: zero row marginal");
    for (double t : col_tot)
        if (t <= 0.0) throw InvalidArgument("chi_square: zero column marginal");

    double stat = 0.0;
    for (size_t i = 0; i < r; ++i)
        for (size_t j = 0; j < c; ++j) {
            const double expected = row_tot[i] * col_tot[j] / total;
            const double d = table[i][j] - expected;
            stat += d * d / expected;
        }

    TestResult res;
    res.method = TestMethod::chi_square;
    res.statistic = stat;
    const double df = static_cast<double>((r - 1) * (c - 1));
    res.p_value = special::chi2_sf(stat, df);
    return res;
}

inline TestResult chi_square_2x2(double a, double b, double c, double d) {
    return chi_square({{a, b}, {c, d}});
}

struct CorrelationReport {
    std::vector<std::string> feature_names;
    std::vector<std::vector<double>> matrix;  // symmetric, unit diagonal
    std::vector<std::string> removed;
    std::vector<std::string> retained;
    std::vector<std::string> constant_features;
};

// Pearson correlation matrix over columns. Constant columns are flagged and
// get r = 0 against everything else.
inline CorrelationReport pearson_matrix(const std::vector<std::vector<double>>& rows,
                                        const std::vector<std::string>& names) {
    if (rows.size() < 2) throw InvalidArgument("pearson_matrix: need at least 2 rows");
    const size_t d = names.size();
    for (const auto& row : rows)
        if (row.size() != d) throw InvalidArgument("pearson_matrix: row width mismatch");
    const double n = static_cast<double>(rows.size());

    std::vector<double> mean(d, 0.0);
    for (const auto& row : rows)
        for (size_t j = 0; j < d; ++j) mean[j] += row[j];
    for (double& m : mean) m /= n;

    std::vector<double> sd(d, 0.0);
    for (const auto& row : rows)
        for (size_t j = 0; j < d; ++j) sd[j] += (row[j] - mean[j]) * (row[j] - mean[j]);

    CorrelationReport rep;
    rep.feature_names = names;
    rep.matrix.assign(d, std::vector<double>(d, 0.0));
    for (size_t j = 0; j < d; ++j) {
        rep.matrix[j][j] = 1.0;
        if (sd[j] == 0.0) rep.constant_features.push_back(names[j]);
    }
    for (size_t a = 0; a < d; ++a)
        for (size_t b = a + 1; b < d; ++b) {
            double r = 0.0;
            if (sd[a] > 0.0 && sd[b] > 0.0) {
                double cov = 0.0;
                for (const auto& row : rows) cov += (row[a] - mean[a]) * (row[b] - mean[b]);
                r = cov / std::sqrt(sd[a] * sd[b]);
                r = std::clamp(r, -1.0, 1.0);
            }
            rep.matrix[a][b] = rep.matrix[b][a] = r;
        }
    rep.retained = names;
    return rep;
}

// Greedy collinearity pruning: scan pairs in schema order; when a retained
// pair exceeds the threshold, drop the member with the larger mean absolute
// correlation to the still-retained features (later schema position on ties).
inline CorrelationReport prune_collinear(const CorrelationReport& input, double threshold = 0.8) {
    CorrelationReport rep = input;
    const size_t d = rep.feature_names.size();
    std::vector<bool> alive(d, true);

    auto mean_abs_corr = [&](size_t i) {
        double acc = 0.0;
        size_t count = 0;
        for (size_t j = 0; j < d; ++j) {
            if (j == i || !alive[j]) continue;
            acc += std::abs(rep.matrix[i][j]);
            ++count;
        }
        return count > 0 ? acc / static_cast<double>(count) : 0.0;
    };

    for (size_t a = 0; a < d; ++a) {
        if (!alive[a]) continue;
        for (size_t b = a + 1; b < d; ++b) {
            if (!alive[a]) break;
            if (!alive[b]) continue;
            if (std::abs(rep.matrix[a][b]) <= threshold) continue;
            const double ma = mean_abs_corr(a), mb = mean_abs_corr(b);
            const size_t victim = ma > mb ? a : (mb > ma ? b : std::max(a, b));
            alive[victim] = false;
        }
    }

    rep.removed.clear();
    rep.retained.clear();
    for (size_t j = 0; j < d; ++j)
        (alive[j] ? rep.retained : rep.removed).push_back(rep.feature_names[j]);
    return rep;
}

}  // namespace coughlab
