#pragma once

// Fixed-effects OLS with multiway cluster-robust variance. Fixed effects
// enter through explicit dummy expansion (desk scale), with the last level
// of each dimension as the reference; additional collinear dummies are
// dropped by a deterministic left-to-right sweep. Multiway clustering uses
// inclusion-exclusion over the nonempty dimension intersections with an
// HC1-style small-sample factor per component, followed by an eigenvalue
// clamp when the combined matrix is not PSD.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace serpaudit::econ {

inline double normal_two_sided_p(double z) {
    if (std::isinf(z)) return 0.0;
    return std::erfc(std::abs(z) / std::sqrt(2.0));
}

inline bool is_missing(double v) { return std::isnan(v); }

// Column-oriented frame feeding the regressions: numeric columns may hold
// NaN for missing values, categorical columns carry fixed-effect and
// cluster keys.
class Dataset {
public:
    std::size_t size() const { return n_; }

    void add_numeric(const std::string& name, std::vector<double> values) {
        check_len(values.size());
        numeric_[name] = std::move(values);
    }
    void add_categorical(const std::string& name, std::vector<std::string> values) {
        check_len(values.size());
        categorical_[name] = std::move(values);
    }

    bool has_numeric(const std::string& name) const { return numeric_.count(name) > 0; }

    const std::vector<double>& numeric(const std::string& name) const {
        const auto it = numeric_.find(name);
        if (it == numeric_.end()) throw std::invalid_argument("dataset: no numeric column '" + name + "'");
        return it->second;
    }
    const std::vector<std::string>& categorical(const std::string& name) const {
        const auto it = categorical_.find(name);
        if (it == categorical_.end()) throw std::invalid_argument("dataset: no categorical column '" + name + "'");
        return it->second;
    }

private:
    void check_len(std::size_t len) {
        if (n_ == 0 && numeric_.empty() && categorical_.empty()) n_ = len;
        else if (len != n_) throw std::invalid_argument("dataset: column length mismatch");
    }
    std::size_t n_ = 0;
    std::map<std::string, std::vector<double>> numeric_;
    std::map<std::string, std::vector<std::string>> categorical_;
};

struct FitResult {
    std::vector<std::string> names;   // retained design columns
    Eigen::VectorXd beta;
    Eigen::MatrixXd vcov;             // classical until cluster_vcov replaces it
    Eigen::MatrixXd xtx_inv;
    Eigen::MatrixXd design;           // retained columns, one row per used observation
    Eigen::VectorXd residuals;
    std::vector<std::size_t> rows;    // dataset row index per observation
    std::size_t n_obs = 0;
    std::vector<std::string> fixed_effects;
    std::vector<std::string> dropped_columns;
    std::map<std::string, std::size_t> n_clusters;
    std::vector<std::string> cluster_dims;

    int index_of(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return static_cast<int>(i);
        return -1;
    }
    double coef(const std::string& name) const {
        const int i = index_of(name);
        if (i < 0) throw std::invalid_argument("fit: no coefficient '" + name + "'");
        return beta(i);
    }
    double se(std::size_t i) const { return std::sqrt(std::max(vcov(static_cast<int>(i), static_cast<int>(i)), 0.0)); }
    double se(const std::string& name) const {
        const int i = index_of(name);
        if (i < 0) throw std::invalid_argument("fit: no coefficient '" + name + "'");
        return se(static_cast<std::size_t>(i));
    }
    double tstat(std::size_t i) const {
        const double s = se(i);
        if (s > 0.0) return beta(static_cast<int>(i)) / s;
        return beta(static_cast<int>(i)) == 0.0 ? 0.0
                                                : std::copysign(std::numeric_limits<double>::infinity(),
                                                                beta(static_cast<int>(i)));
    }
    double pvalue(std::size_t i) const { return normal_two_sided_p(tstat(i)); }
};

namespace detail {

struct DesignColumn {
    std::string name;
    Eigen::VectorXd values;
    bool is_dummy = false;
};

// Sequential modified Gram-Schmidt with reorthogonalization. Columns enter
// in the given order; a column whose residual norm collapses is collinear
// with its predecessors.
struct Sweep {
    std::vector<Eigen::VectorXd> q;
    std::vector<std::vector<double>> r;  // r[j][i]: projection of col j on q_i, plus diagonal
    std::vector<std::size_t> kept;

    bool offer(const Eigen::VectorXd& col, std::size_t col_id) {
        const double orig_norm = col.norm();
        Eigen::VectorXd v = col;
        std::vector<double> coeffs(q.size(), 0.0);
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t i = 0; i < q.size(); ++i) {
                const double c = q[i].dot(v);
                coeffs[i] += c;
                v -= c * q[i];
            }
        }
        const double norm = v.norm();
        if (norm <= 1e-8 * std::max(1.0, orig_norm)) return false;
        coeffs.push_back(norm);
        q.push_back(v / norm);
        r.push_back(std::move(coeffs));
        kept.push_back(col_id);
        return true;
    }
};

}  // namespace detail

// OLS of `outcome` on the named regressors plus dummy-expanded fixed
// effects. Rows with a missing outcome or missing named regressor are
// dropped. Collinearity among the named regressors is an error that lists
// the dependent columns; collinear dummies are dropped silently (recorded
// in dropped_columns).
inline FitResult ols_fe(const Dataset& data, const std::string& outcome,
                        const std::vector<std::string>& regressors,
                        const std::vector<std::string>& fixed_effects) {
    const auto& y_all = data.numeric(outcome);

    std::vector<std::size_t> rows;
    rows.reserve(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (is_missing(y_all[i])) continue;
        bool ok = true;
        for (const auto& r : regressors) {
            if (is_missing(data.numeric(r)[i])) {
                ok = false;
                break;
            }
        }
        if (ok) rows.push_back(i);
    }
    const std::size_t n = rows.size();
    if (n == 0) throw std::invalid_argument("ols_fe: no usable observations");

    std::vector<detail::DesignColumn> cols;
    {
        detail::DesignColumn c;
        c.name = "(intercept)";
        c.values = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
        cols.push_back(std::move(c));
    }
    for (const auto& name : regressors) {
        const auto& src = data.numeric(name);
        detail::DesignColumn c;
        c.name = name;
        c.values.resize(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) c.values(static_cast<Eigen::Index>(i)) = src[rows[i]];
        cols.push_back(std::move(c));
    }
    const std::size_t n_named = cols.size();
    for (const auto& dim : fixed_effects) {
        const auto& keys = data.categorical(dim);
        std::set<std::string> levels;
        for (auto i : rows) levels.insert(keys[i]);
        if (levels.size() <= 1) continue;  // absorbed by the intercept
        auto it = levels.begin();
        // last (sorted) level is the reference
        for (std::size_t li = 0; li + 1 < levels.size(); ++li, ++it) {
            detail::DesignColumn c;
            c.name = dim + "=" + *it;
            c.is_dummy = true;
            c.values.resize(static_cast<Eigen::Index>(n));
            for (std::size_t i = 0; i < n; ++i)
                c.values(static_cast<Eigen::Index>(i)) = keys[rows[i]] == *it ? 1.0 : 0.0;
            cols.push_back(std::move(c));
        }
    }

    detail::Sweep sweep;
    std::vector<std::string> dependent_named;
    std::vector<std::string> dropped;
    for (std::size_t j = 0; j < cols.size(); ++j) {
        if (!sweep.offer(cols[j].values, j)) {
            if (j < n_named) dependent_named.push_back(cols[j].name);
            else dropped.push_back(cols[j].name);
        }
    }
    if (!dependent_named.empty()) {
        std::string msg = "ols_fe: rank-deficient design; dependent columns:";
        for (const auto& s : dependent_named) msg += " " + s;
        throw std::invalid_argument(msg);
    }
    const std::size_t k = sweep.kept.size();
    if (n <= k) throw std::invalid_argument("ols_fe: more parameters than observations");

    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) y(static_cast<Eigen::Index>(i)) = y_all[rows[i]];

    // R from the sweep (upper triangular), then beta by back-substitution
    Eigen::MatrixXd R = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    for (std::size_t j = 0; j < k; ++j) {
        const auto& coeffs = sweep.r[j];
        for (std::size_t i = 0; i < coeffs.size(); ++i) R(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = coeffs[i];
    }
    Eigen::VectorXd qty(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < k; ++i) qty(static_cast<Eigen::Index>(i)) = sweep.q[i].dot(y);
    const Eigen::VectorXd beta =
        R.triangularView<Eigen::Upper>().solve(qty);

    FitResult fit;
    fit.rows = rows;
    fit.n_obs = n;
    fit.fixed_effects = fixed_effects;
    fit.dropped_columns = std::move(dropped);
    fit.design.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
    for (std::size_t j = 0; j < k; ++j) {
        fit.names.push_back(cols[sweep.kept[j]].name);
        fit.design.col(static_cast<Eigen::Index>(j)) = cols[sweep.kept[j]].values;
    }
    fit.beta = beta;
    fit.residuals = y - fit.design * beta;

    const Eigen::MatrixXd r_inv = R.triangularView<Eigen::Upper>().solve(
        Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k)));
    fit.xtx_inv = r_inv * r_inv.transpose();

    const double s2 = fit.residuals.squaredNorm() / static_cast<double>(n - k);
    fit.vcov = s2 * fit.xtx_inv;
    return fit;
}

// Clamps negative eigenvalues to zero and re-symmetrizes.
inline Eigen::MatrixXd repair_psd(const Eigen::MatrixXd& m) {
    const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
    Eigen::VectorXd vals = es.eigenvalues();
    bool repaired = false;
    for (Eigen::Index i = 0; i < vals.size(); ++i) {
        if (vals(i) < 0.0) {
            vals(i) = 0.0;
            repaired = true;
        }
    }
    if (!repaired) return sym;
    return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose();
}

// Inclusion-exclusion combination before the PSD repair:
//   V = sum_single - sum_pairwise + V_triple
// over the nonempty intersections of the 1..3 clustering dimensions. Each
// component gets the HC1-style factor G/(G-1) * (N-1)/(N-K).
inline Eigen::MatrixXd cluster_vcov_raw(FitResult& fit, const Dataset& data, const std::vector<std::string>& dims) {
    if (dims.empty() || dims.size() > 3) throw std::invalid_argument("cluster_vcov: need 1-3 dimensions");
    const std::size_t n = fit.n_obs;
    const std::size_t k = fit.names.size();

    std::vector<std::vector<std::string>> keys;
    for (const auto& dim : dims) {
        const auto& col = data.categorical(dim);
        std::vector<std::string> v;
        v.reserve(n);
        for (auto r : fit.rows) v.push_back(col[r]);
        std::set<std::string> distinct(v.begin(), v.end());
        if (distinct.size() < 2) {
            throw std::invalid_argument("cluster_vcov: dimension '" + dim + "' has a single cluster");
        }
        fit.n_clusters[dim] = distinct.size();
        keys.push_back(std::move(v));
    }
    fit.cluster_dims = dims;

    const Eigen::VectorXd& u = fit.residuals;
    Eigen::MatrixXd total = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
    const auto n_dims = dims.size();
    for (std::size_t mask = 1; mask < (1u << n_dims); ++mask) {
        std::map<std::string, Eigen::VectorXd> sums;
        for (std::size_t i = 0; i < n; ++i) {
            std::string key;
            for (std::size_t d = 0; d < n_dims; ++d) {
                if (mask & (1u << d)) {
                    key += keys[d][i];
                    key += '\x1f';
                }
            }
            auto [it, inserted] = sums.try_emplace(key, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k)));
            it->second += fit.design.row(static_cast<Eigen::Index>(i)).transpose() * u(static_cast<Eigen::Index>(i));
        }
        Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
        for (const auto& [_, s] : sums) meat += s * s.transpose();
        const double g = static_cast<double>(sums.size());
        const double scale = g / (g - 1.0) * (static_cast<double>(n) - 1.0) / static_cast<double>(n - k);
        const double sign = std::popcount(mask) % 2 == 1 ? 1.0 : -1.0;
        total += sign * scale * fit.xtx_inv * meat * fit.xtx_inv;
    }
    return total;
}

// Multiway cluster-robust variance: the inclusion-exclusion combination
// with negative eigenvalues clamped to zero. Replaces fit.vcov.
inline Eigen::MatrixXd cluster_vcov(FitResult& fit, const Dataset& data, const std::vector<std::string>& dims) {
    fit.vcov = repair_psd(cluster_vcov_raw(fit, data, dims));
    return fit.vcov;
}

struct MarginalEffect {
    long long level = 0;
    double estimate = 0.0;
    double se = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    std::size_t n_at_level = 0;
};

struct MarginalEffectsResult {
    std::vector<MarginalEffect> effects;  // reference first, then ascending levels
    FitResult fit;
};

// One indicator per observed nonzero driver level, estimated relative to
// the reference level; 95% intervals from the clustered variance.
inline MarginalEffectsResult dummy_marginal_effects(const Dataset& data, const std::string& outcome,
                                                    const std::string& driver, long long reference,
                                                    const std::vector<std::string>& fixed_effects,
                                                    const std::vector<std::string>& cluster_dims) {
    const auto& drv = data.numeric(driver);
    const auto& out = data.numeric(outcome);

    std::map<long long, std::size_t> level_counts;
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (is_missing(drv[i]) || is_missing(out[i])) continue;
        const double v = drv[i];
        if (std::abs(v - std::llround(v)) > 1e-9) {
            throw std::invalid_argument("dummy_marginal_effects: driver '" + driver + "' is not integer-valued");
        }
        ++level_counts[std::llround(v)];
    }
    if (!level_counts.count(reference)) {
        throw std::invalid_argument("dummy_marginal_effects: reference level " + std::to_string(reference) +
                                    " absent from '" + driver + "'");
    }
    if (level_counts.size() < 2) {
        throw std::invalid_argument("dummy_marginal_effects: driver '" + driver + "' is constant");
    }

    Dataset work = data;
    std::vector<std::string> indicator_names;
    for (const auto& [level, _] : level_counts) {
        if (level == reference) continue;
        std::vector<double> col(data.size(), std::numeric_limits<double>::quiet_NaN());
        for (std::size_t i = 0; i < data.size(); ++i) {
            if (is_missing(drv[i])) continue;
            col[i] = std::llround(drv[i]) == level ? 1.0 : 0.0;
        }
        std::string name = driver + "=" + std::to_string(level);
        work.add_numeric(name, std::move(col));
        indicator_names.push_back(std::move(name));
    }

    MarginalEffectsResult res;
    res.fit = ols_fe(work, outcome, indicator_names, fixed_effects);
    if (!cluster_dims.empty()) cluster_vcov(res.fit, work, cluster_dims);

    res.effects.push_back({reference, 0.0, 0.0, 0.0, 0.0, level_counts.at(reference)});
    std::size_t idx = 0;
    for (const auto& [level, count] : level_counts) {
        if (level == reference) continue;
        const auto& name = indicator_names[idx++];
        const int ci = res.fit.index_of(name);
        if (ci < 0) continue;  // indicator swept as collinear
        const double est = res.fit.beta(ci);
        const double se = res.fit.se(static_cast<std::size_t>(ci));
        res.effects.push_back({level, est, se, est - 1.959963984540054 * se, est + 1.959963984540054 * se, count});
    }
    return res;
}

struct WaldTest {
    double statistic = 0.0;
    double p_value = 1.0;
};

// Wald test of beta_a = beta_b under the fit's (clustered) variance, with
// the standard normal as reference distribution.
inline WaldTest linear_hypothesis(const FitResult& fit, const std::string& a, const std::string& b) {
    const int ia = fit.index_of(a), ib = fit.index_of(b);
    if (ia < 0) throw std::invalid_argument("linear_hypothesis: no coefficient '" + a + "'");
    if (ib < 0) throw std::invalid_argument("linear_hypothesis: no coefficient '" + b + "'");
    const double diff = fit.beta(ia) - fit.beta(ib);
    const double var = fit.vcov(ia, ia) + fit.vcov(ib, ib) - 2.0 * fit.vcov(ia, ib);
    WaldTest t;
    if (var <= 0.0) {
        t.statistic = diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        t.p_value = diff == 0.0 ? 1.0 : 0.0;
        return t;
    }
    t.statistic = diff * diff / var;
    t.p_value = normal_two_sided_p(diff / std::sqrt(var));
    return t;
}

}  // namespace serpaudit::econ
