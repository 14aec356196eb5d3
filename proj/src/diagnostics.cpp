#include "lhalf/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "lhalf/random.hpp"

namespace lhalf {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

DenseVector residual(const ProblemInstance& inst, const DenseVector& x) {
    DenseVector r = mat_vec(inst.a, x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= inst.y[i];
    return r;
}

std::vector<double> magnitudes(const DenseVector& x, std::span<const std::size_t> support) {
    std::vector<double> out;
    out.reserve(support.size());
    for (std::size_t i : support) out.push_back(std::abs(x[i]));
    return out;
}

// ||A_{I^c}^T A_I||_2.
double cross_gram_norm(const DenseMatrix& a, const SupportSummary& s) {
    if (s.support.empty() || s.complement_size == 0) return 0.0;
    std::vector<char> in_support(a.cols(), 0);
    for (std::size_t i : s.support) in_support[i] = 1;
    const DenseMatrix at = a.transposed();
    std::vector<double> entries;
    entries.reserve(s.complement_size * s.support.size());
    for (std::size_t j = 0; j < a.cols(); ++j) {
        if (in_support[j]) continue;
        for (std::size_t i : s.support) entries.push_back(dot(at.row(j), at.row(i)));
    }
    DenseMatrix cross(s.complement_size, s.support.size(), std::move(entries));
    if (frobenius_norm(cross) == 0.0) return 0.0;
    return spectral_norm(cross);
}

}  // namespace

SupportSummary support_summary(const DenseVector& x) {
    SupportSummary s;
    double e = kInf;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] != 0.0) {
            s.support.push_back(i);
            e = std::min(e, std::abs(x[i]));
        }
    }
    if (!s.support.empty()) s.min_magnitude = e;
    s.complement_size = x.size() - s.support.size();
    return s;
}

double default_stationarity_tol(const ProblemInstance& inst) {
    const DenseVector aty = transpose_mat_vec(inst.a, inst.y);
    return 1e-6 * (1.0 + norm_inf(aty.span()));
}

StationarityReport check_stationarity(const ProblemInstance& inst, const DenseVector& x,
                                      double lambda, double mu, double tol) {
    if (x.size() != inst.dimension())
        throw DimensionError("check_stationarity: point of length " + std::to_string(x.size()) +
                             " for a problem of dimension " + std::to_string(inst.dimension()));
    if (!(lambda > 0.0) || !(mu > 0.0) || !(tol > 0.0))
        throw std::invalid_argument("check_stationarity: lambda, mu and tol must be positive");

    const DenseVector g = transpose_mat_vec(inst.a, residual(inst, x));
    const double bound = std::cbrt(54.0) / 4.0 * std::cbrt(lambda * lambda) / std::cbrt(mu);
    StationarityReport rep;
    rep.tolerance = tol;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] == 0.0) {
            rep.max_offsupport_violation =
                std::max(rep.max_offsupport_violation, std::abs(g[i]) - bound);
        } else {
            const double sign = x[i] > 0.0 ? 1.0 : -1.0;
            const double r = std::abs(g[i] + lambda * sign / (4.0 * std::sqrt(std::abs(x[i]))));
            rep.max_onsupport_residual = std::max(rep.max_onsupport_residual, r);
        }
    }
    rep.is_stationary = rep.max_offsupport_violation <= tol && rep.max_onsupport_residual <= tol;
    return rep;
}

double contraction_rho(double lambda, double mu, double e, double sigma_min) {
    const double k = 8.0 * std::pow(e, 1.5);
    return k * (1.0 - mu * sigma_min) / (k - lambda * mu);
}

double rate_eps(std::span<const double> support_magnitudes, double lambda, double mu, double c) {
    const double lm = lambda * mu;
    const double radius = c * std::cbrt(0.25 * lm * lm);
    double worst = 0.0;
    for (double v : support_magnitudes) {
        const double p = std::pow(v, 1.5);
        const double d1 = 8.0 * p - lm;
        const double d2 = v - radius;
        if (!(d1 > 0.0) || !(d2 > 0.0)) return kInf;
        worst = std::max(worst, 3.0 * lm * p / (4.0 * d1 * std::pow(d2, 2.5)));
    }
    return worst;
}

RateEstimate rate_constants(double lambda, double mu, double sigma_min,
                            std::span<const double> support_magnitudes) {
    RateEstimate out{false, kNaN, kNaN, kNaN, kNaN, kNaN};
    if (support_magnitudes.empty() || !(lambda > 0.0) || !(mu > 0.0)) return out;
    const double e = *std::min_element(support_magnitudes.begin(), support_magnitudes.end());
    const double lm = lambda * mu;
    if (!(8.0 * std::pow(e, 1.5) - lm > 0.0)) return out;
    const double rho = contraction_rho(lambda, mu, e, sigma_min);
    out.rho = rho;
    if (!(rho > 0.0) || !(rho < 1.0)) return out;

    const double floor23 = std::cbrt(0.25 * lm * lm);  // (lambda mu / 2)^(2/3)
    const double bound_c =
        std::min((1.0 - rho) / floor23, 1.0 / (std::sqrt(2.0) * std::pow(lm, 1.5) * rho));
    out.bound_c = bound_c;

    // c* stays a relative 1e-6 inside c eps_c < C* so the inequality is strict.
    const double target = bound_c * (1.0 - 1e-6);
    double lo = 0.0;
    double hi = 1.0;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid * rate_eps(support_magnitudes, lambda, mu, mid) < target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (!(lo > 0.0)) return out;
    const double eps = rate_eps(support_magnitudes, lambda, mu, lo);
    const double arg = 1.0 - 4.0 * rho * eps * lo * floor23;
    if (!std::isfinite(eps) || arg < 0.0) return out;
    out.c_star = lo;
    out.eps_c_star = eps;
    out.rho_star = 2.0 * rho / (1.0 + std::sqrt(arg));
    out.in_regime = out.rho_star > 0.0 && out.rho_star < 1.0;
    return out;
}

RateEstimate rate_estimate(const ProblemInstance& inst, const DenseVector& x, double lambda,
                           double mu) {
    const SupportSummary s = support_summary(x);
    if (s.support.empty()) return RateEstimate{false, kNaN, kNaN, kNaN, kNaN, kNaN};
    const GramExtremes g = gram_extremal_singular_values(inst.a, s.support);
    const std::vector<double> mags = magnitudes(x, s.support);
    return rate_constants(lambda, mu, g.sigma_min, mags);
}

CertificateReport certify_local_min(const ProblemInstance& inst, const DenseVector& x,
                                    double lambda, double mu) {
    CertificateReport rep;
    rep.lambda = lambda;
    rep.mu = mu;
    rep.stationarity = check_stationarity(inst, x, lambda, mu, default_stationarity_tol(inst));
    if (!rep.stationarity.is_stationary)
        rep.warnings.push_back("point is not stationary at the default tolerance; the flags "
                               "below do not certify it");
    rep.support = support_summary(x);
    const double op = spectral_norm(inst.a);
    rep.op_norm_sq = op * op;
    rep.rate = RateEstimate{false, kNaN, kNaN, kNaN, kNaN, kNaN};

    if (rep.support.support.empty()) {
        rep.thm1_holds = rep.stationarity.max_offsupport_violation <= rep.stationarity.tolerance;
        rep.thm2_step_holds = mu > 0.0 && mu < 1.0 / rep.op_norm_sq;
        rep.warnings.push_back("empty support: Gram quantities are undefined");
        return rep;
    }

    const auto& support = rep.support.support;
    const double e = *rep.support.min_magnitude;
    const GramExtremes g = gram_extremal_singular_values(inst.a, support);
    rep.sigma_min = g.sigma_min;
    rep.sigma_max = g.sigma_max;
    const double lambda_bound = 8.0 * std::pow(e, 1.5) * g.sigma_min;
    rep.lambda_bound = lambda_bound;
    rep.thm1_holds = g.sigma_min > 0.0 && lambda < lambda_bound;
    rep.thm2_spectral_holds = g.sigma_min > rep.op_norm_sq / 4.0;
    rep.thm2_step_holds = g.sigma_min > 0.0 && 1.0 / (4.0 * g.sigma_min) < mu &&
                          mu < 1.0 / rep.op_norm_sq;
    if (g.sigma_min > 0.0) rep.gram_condition_number = g.sigma_max / g.sigma_min;

    const std::vector<double> mags = magnitudes(x, support);
    rep.rate = rate_constants(lambda, mu, g.sigma_min, mags);

    DenseMatrix hessian = column_gram(inst.a, support);
    for (std::size_t i = 0; i < support.size(); ++i) {
        for (std::size_t j = 0; j < support.size(); ++j) hessian(i, j) *= 2.0;
        hessian(i, i) -= lambda / (4.0 * std::pow(mags[i], 1.5));
    }
    rep.second_order_margin = symmetric_eigenvalues(hessian).front();

    if (rep.thm1_holds) {
        const double beta_star = 1.0 - std::cbrt(std::pow(lambda / lambda_bound, 2.0));
        rep.basin_estimate = beta_star * e;

        const double cross = cross_gram_norm(inst.a, rep.support);
        const double head = std::cbrt(54.0) / (2.0 * std::cbrt(lambda * mu));
        auto c_beta = [&](double beta) {
            const double d = head + 2.0 / lambda * cross * beta * e;
            return 1.0 / (d * d);
        };
        double beta0 = beta_star;
        if (beta_star > c_beta(beta_star)) {
            double lo = 0.0;
            double hi = beta_star;
            for (int it = 0; it < 100; ++it) {
                const double mid = 0.5 * (lo + hi);
                (mid <= c_beta(mid) ? lo : hi) = mid;
            }
            beta0 = lo;
        }
        rep.strict_basin = beta0 * e;
    } else {
        rep.warnings.push_back("lambda is not below 8 e^(3/2) sigma_min(A_I^T A_I)");
    }
    if (!rep.rate.in_regime) rep.warnings.push_back("rate constants are out of regime");
    return rep;
}

double perturbation_probe(const ProblemInstance& inst, const DenseVector& x, double lambda,
                          double radius, std::size_t trials, std::uint64_t seed) {
    if (!(radius > 0.0)) throw std::invalid_argument("perturbation_probe: radius must be positive");
    if (trials == 0) throw std::invalid_argument("perturbation_probe: trials must be at least 1");
    if (x.size() != inst.dimension())
        throw DimensionError("perturbation_probe: point of length " + std::to_string(x.size()) +
                             " for a problem of dimension " + std::to_string(inst.dimension()));

    const std::size_t n = x.size();
    const double base = objective(inst, x, lambda);
    Rng rng(seed);
    double worst = kInf;
    std::vector<double> h(n);
    for (std::size_t t = 0; t < trials; ++t) {
        double len = 0.0;
        do {
            for (auto& v : h) v = rng.gaussian();
            len = norm2(h);
        } while (len == 0.0);
        // Radius r U^(1/n) gives the uniform law on the ball.
        double u = 0.0;
        while (u <= 0.0) u = rng.uniform01();
        const double scale = radius * std::pow(u, 1.0 / static_cast<double>(n)) / len;
        std::vector<double> moved(n);
        for (std::size_t i = 0; i < n; ++i) moved[i] = x[i] + scale * h[i];
        worst = std::min(worst, objective(inst, DenseVector(std::move(moved)), lambda) - base);
    }
    return worst;
}

RipAdvisory rip_heuristic(std::size_t m, std::size_t n, std::size_t k) {
    if (k < 1 || k > m || m > n) {
        std::ostringstream os;
        os << "rip_heuristic: need 1 <= k <= m <= N, got k=" << k << " m=" << m << " N=" << n;
        throw std::invalid_argument(os.str());
    }
    RipAdvisory out;
    const double ratio_nk = static_cast<double>(n) / static_cast<double>(k);
    out.delta_k_threshold = 3.0 / (4.0 + 2.0 * ratio_nk);
    out.delta_2k_threshold = 3.0 / (4.0 + ratio_nk);
    out.applicable = 2 * k < n;
    out.measurement_ratio = n > k ? static_cast<double>(m) / (static_cast<double>(k) *
                                                              std::log(ratio_nk))
                                  : kInf;
    out.advisory_positive = out.applicable && out.measurement_ratio >= kRipRatioAdvisory;
    return out;
}

std::string render_text(const CertificateReport& r) {
    std::ostringstream os;
    os.precision(6);
    auto opt = [&](const std::optional<double>& v) -> std::ostream& {
        if (v) return os << *v;
        return os << "absent";
    };
    auto flag = [](bool b) { return b ? "yes" : "no"; };
    os << "stationary:            " << flag(r.stationarity.is_stationary)
       << " (off-support excess " << r.stationarity.max_offsupport_violation
       << ", on-support residual " << r.stationarity.max_onsupport_residual << ", tol "
       << r.stationarity.tolerance << ")\n";
    os << "support size:          " << r.support.support.size() << "\n";
    os << "min |x_i| on support:  ";
    opt(r.support.min_magnitude) << "\n";
    os << "sigma_min / sigma_max: ";
    opt(r.sigma_min) << " / ";
    opt(r.sigma_max) << "\n";
    os << "||A||_2^2:             " << r.op_norm_sq << "\n";
    os << "lambda bound:          ";
    opt(r.lambda_bound) << " (lambda " << r.lambda << ")\n";
    os << "local min (lambda):    " << flag(r.thm1_holds) << "\n";
    os << "spectral concentration:" << " " << flag(r.thm2_spectral_holds) << "\n";
    os << "step window:           " << flag(r.thm2_step_holds) << " (mu " << r.mu << ")\n";
    os << "gram condition number: ";
    opt(r.gram_condition_number) << "\n";
    if (r.rate.in_regime) {
        os << "rho / rho*:            " << r.rate.rho << " / " << r.rate.rho_star << "\n";
    } else {
        os << "rho / rho*:            out of regime\n";
    }
    os << "basin radius:          ";
    opt(r.basin_estimate) << " (strict ";
    opt(r.strict_basin) << ")\n";
    os << "second-order margin:   ";
    opt(r.second_order_margin) << "\n";
    for (const auto& w : r.warnings) os << "warning: " << w << "\n";
    return os.str();
}

}  // namespace lhalf
