#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "nodal/core.hpp"
#include "nodal/laurent.hpp"

namespace nodal {

/**
 * Every constant the gluing solver needs: weight s, truncation N, the
 * admissible input radius delta, the uniqueness radius eps, the Newton
 * stopping residual and iteration cap. delta/eps <= 0 request the
 * defaults derived from the explicit estimate constants at this s.
 */
struct SolverConfig {
    double s = 4.0;
    int trunc = 64;
    double delta = 0.0;
    double eps = 0.0;
    double tol = 1e-11;
    int max_iter = 40;
    int circle_samples_factor = 8;  // residual sampling grid = factor * trunc

    /// max(1, Sobolev embedding constant, 4*sqrt(3)*product constant): one
    /// constant for which the embedding, approximate-solution and quadratic
    /// estimates all hold.
    double estimate_constant() const {
        return std::max({1.0, sobolev_embedding_constant(s),
                         4.0 * std::sqrt(3.0) * product_constant(s)});
    }

    /// l1 form of the first-order solution bound carries an extra sqrt(3)
    /// against the l2 Newton distance.
    double continuity_constant() const { return std::sqrt(3.0) * estimate_constant(); }

    /// Largest uniqueness radius satisfying 8C(1+c) eps < 1.
    double default_eps() const {
        const double C = product_constant(s);
        return 0.99 / (8.0 * C * (1.0 + estimate_constant()));
    }

    /// Largest input radius certified by the constant chain
    /// 3 c eps < 1/2, c sqrt(2 delta^2 + rho^2) <= 1/2, 2 c delta <= eps / 2,
    /// rho = sqrt(3) eps.
    double certified_delta() const {
        const double c = estimate_constant();
        const double e = std::min(0.99 / (6.0 * c), default_eps());
        const double rho = std::sqrt(3.0) * e;
        const double from_quad = std::sqrt(std::max(0.0, 0.25 / (c * c) - rho * rho) / 2.0);
        return 0.99 * std::min(from_quad, e / (4.0 * c));
    }

    double input_radius() const { return delta > 0.0 ? delta : certified_delta(); }
    double uniqueness_radius() const { return eps > 0.0 ? eps : default_eps(); }

    void validate() const {
        if (!(s > 0.5)) throw std::domain_error("config: s > 1/2 required");
        if (trunc < 4) throw std::domain_error("config: truncation too small");
        if (!(tol > 0.0)) throw std::domain_error("config: tol must be positive");
        if (max_iter < 1) throw std::domain_error("config: max_iter must be positive");
        if (delta < 0.0 || eps < 0.0) throw std::domain_error("config: negative radius");
    }
};

/// Quadruple solving (or approximating) the gluing equation
/// xi(x) eta(a x^{-1}) = b on the node annulus.
struct GluingDatum {
    cplx a;
    TruncatedLaurent xi;
    TruncatedLaurent eta;
    cplx b;
};

struct SolveStats {
    int iterations = 0;
    bool converged = false;
    double initial_residual = 0.0;  // residual at the starting triple
    double final_residual = 0.0;
    double newton_distance = 0.0;  // distance from starting triple, product norm
    double input_distance = 0.0;   // ||xi+ - id||_s + ||eta+ - id||_s
    double continuity_lhs = 0.0;   // |b/a - xi1 eta1| + ||xi-||_{r,s} + ||eta-||_{r,s}
    double continuity_bound = 0.0;
    double tail_fraction = 0.0;
    bool certified_contraction = false;
};

struct SolveResult {
    GluingDatum datum;
    SolveStats stats;
};

// ---------------------------------------------------------------------------
// residual and linearization

namespace detail {

/// Convolution engine for z |-> r^{-2} f(rz) g(r z^{-1}): output mode p is
/// sum_k f_{p+k} g_k r^{p+2k-2}, clipped to the shared truncation.
inline TruncatedLaurent gluing_bilinear(double r, const TruncatedLaurent& f,
                                        const TruncatedLaurent& g) {
    if (f.trunc() != g.trunc()) throw std::invalid_argument("truncation orders differ");
    const int N = f.trunc();
    TruncatedLaurent out(N);
    for (int p = -N; p <= N; ++p) {
        cplx acc = 0.0;
        const int klo = std::max(-N, -N - p);
        const int khi = std::min(N, N - p);
        for (int k = klo; k <= khi; ++k) {
            const cplx prod = f.coeff(p + k) * g.coeff(k);
            if (prod == cplx(0.0)) continue;
            acc += scale_by_power(prod, r, p + 2 * k - 2);
        }
        out.set_coeff(p, acc);
    }
    return out;
}

}  // namespace detail

/// Residual of the gluing equation in rescaled form:
/// z |-> r^{-2} xi(rz) eta(r z^{-1}) - lambda, as coefficients on |z| = 1.
/// Zero return is equivalent to the gluing equation with a = r^2, b = lambda a.
inline TruncatedLaurent gluing_residual(double r, cplx lambda, const TruncatedLaurent& xi,
                                        const TruncatedLaurent& eta) {
    if (!(r > 0.0) || r > 1.0) throw std::domain_error("gluing residual requires r in (0, 1]");
    TruncatedLaurent out = detail::gluing_bilinear(r, xi, eta);
    out.set_coeff(0, out.coeff(0) - lambda);
    return out;
}

/// Frozen linearization at (1, id, id):
/// (lhat, xihat, etahat) |-> r^{-1} z^{-1} xihat(rz) + r^{-1} z etahat(r z^{-1}) - lhat.
inline TruncatedLaurent gluing_linearization(double r, cplx lhat, const TruncatedLaurent& xihat,
                                             const TruncatedLaurent& etahat) {
    if (xihat.trunc() != etahat.trunc()) throw std::invalid_argument("truncation orders differ");
    const int N = xihat.trunc();
    TruncatedLaurent out(N);
    for (int m = -N; m <= N; ++m) {
        cplx acc = (m == 0) ? -lhat : cplx(0.0);
        if (m + 1 >= -N && m + 1 <= N)
            acc += detail::scale_by_power(xihat.coeff(m + 1), r, m);
        if (1 - m >= -N && 1 - m <= N)
            acc += detail::scale_by_power(etahat.coeff(1 - m), r, -m);
        out.set_coeff(m, acc);
    }
    return out;
}

struct MinusModeSolution {
    cplx lambda_hat;
    TruncatedLaurent xi_minus;
    TruncatedLaurent eta_minus;
};

/**
 * Closed-form inverse of the frozen linearization on the minus-mode
 * subspace: lhat from the constant mode, xihat from the negative modes,
 * etahat from the positive modes. The product norm of the solution never
 * exceeds the boundary norm of the right-hand side.
 */
inline MinusModeSolution solve_linearization_minus(double r, const TruncatedLaurent& rhs) {
    const int N = rhs.trunc();
    MinusModeSolution sol{-rhs.coeff(0), TruncatedLaurent(N), TruncatedLaurent(N)};
    for (int n = -N + 1; n <= 0; ++n) {
        sol.xi_minus.set_coeff(n, detail::scale_by_power(rhs.coeff(n - 1), r, 1 - n));
        sol.eta_minus.set_coeff(n, detail::scale_by_power(rhs.coeff(1 - n), r, 1 - n));
    }
    return sol;
}

// ---------------------------------------------------------------------------
// the solution operator

namespace detail {

struct RealSolve {
    cplx lambda;
    TruncatedLaurent xi_minus;
    TruncatedLaurent eta_minus;
    SolveStats stats;
};

/// Newton iteration with the frozen linearization, at real a = r^2 > 0,
/// starting from (xi1 eta1, 0, 0). The closed-form inverse makes each step
/// a convolution plus a coefficient shuffle.
inline RealSolve solve_real(double r, const TruncatedLaurent& xi_plus,
                            const TruncatedLaurent& eta_plus, const SolverConfig& cfg,
                            cplx lambda0, const TruncatedLaurent& xi_minus0,
                            const TruncatedLaurent& eta_minus0) {
    RealSolve rs{lambda0, xi_minus0, eta_minus0, {}};
    TruncatedLaurent g =
        gluing_residual(r, rs.lambda, xi_plus + rs.xi_minus, eta_plus + rs.eta_minus);
    double res = sobolev_norm(g, cfg.s);
    rs.stats.initial_residual = res;
    int it = 0;
    while (res > cfg.tol && it < cfg.max_iter) {
        const MinusModeSolution corr = solve_linearization_minus(r, g);
        rs.lambda -= corr.lambda_hat;
        rs.xi_minus -= corr.xi_minus;
        rs.eta_minus -= corr.eta_minus;
        ++it;
        g = gluing_residual(r, rs.lambda, xi_plus + rs.xi_minus, eta_plus + rs.eta_minus);
        res = sobolev_norm(g, cfg.s);
    }
    rs.stats.iterations = it;
    rs.stats.final_residual = res;
    rs.stats.converged = res <= cfg.tol;
    return rs;
}

}  // namespace detail

/**
 * The solution operator (a, xi+, eta+) |-> (a, xi, eta, b).
 *
 * a = 0 is returned exactly as (0, xi+, eta+, 0). Otherwise a is rotated
 * onto the positive real axis, the frozen-linearization Newton iteration is
 * run from (xi1 eta1, 0, 0), and the result is rotated back. Equivariance
 * under the rotation makes the composite independent of the chosen angle.
 *
 * Throws on invalid inputs; non-convergence is reported through the stats
 * (converged = false, final_residual = last residual), so callers decide.
 */
inline SolveResult solve_gluing(cplx a, const TruncatedLaurent& xi_plus,
                                const TruncatedLaurent& eta_plus, const SolverConfig& cfg) {
    cfg.validate();
    if (xi_plus.trunc() != cfg.trunc || eta_plus.trunc() != cfg.trunc)
        throw std::invalid_argument("input truncation does not match the config");
    if (!xi_plus.is_plus() || !eta_plus.is_plus())
        throw std::invalid_argument("solver inputs must have positive modes only");
    if (std::abs(a) >= 1.0) throw std::domain_error("gluing parameter requires |a| < 1");

    const TruncatedLaurent id = TruncatedLaurent::identity(cfg.trunc);
    const double dxi = sobolev_norm(xi_plus - id, cfg.s);
    const double deta = sobolev_norm(eta_plus - id, cfg.s);
    const double radius = cfg.input_radius();
    if (dxi >= radius || deta >= radius)
        throw std::domain_error("solver inputs outside the admissible ball");

    if (a == cplx(0.0)) {
        SolveResult out{GluingDatum{a, xi_plus, eta_plus, cplx(0.0)}, {}};
        out.stats.converged = true;
        out.stats.input_distance = dxi + deta;
        out.stats.certified_contraction = true;
        return out;
    }

    const double theta = std::arg(a) / 2.0;
    const double a_abs = std::abs(a);
    const double r = std::sqrt(a_abs);
    const TruncatedLaurent xr = rotate(xi_plus, theta);
    const TruncatedLaurent er = rotate(eta_plus, theta);
    const cplx lambda0 = xr.coeff(1) * er.coeff(1);

    detail::RealSolve rs = detail::solve_real(r, xr, er, cfg, lambda0,
                                              TruncatedLaurent(cfg.trunc),
                                              TruncatedLaurent(cfg.trunc));

    SolveResult out{GluingDatum{a, TruncatedLaurent(cfg.trunc), TruncatedLaurent(cfg.trunc),
                                cplx(0.0)},
                    rs.stats};
    out.datum.xi = rotate(xr + rs.xi_minus, -theta);
    out.datum.eta = rotate(er + rs.eta_minus, -theta);
    out.datum.b = std::polar(1.0, 2.0 * theta) * (rs.lambda * a_abs);

    const SobolevParams prs{cfg.s, r};
    const double d_lambda = std::abs(rs.lambda - lambda0);
    const double nxm = sobolev_norm(rs.xi_minus, prs);
    const double nem = sobolev_norm(rs.eta_minus, prs);
    out.stats.input_distance = dxi + deta;
    out.stats.newton_distance = std::sqrt(d_lambda * d_lambda + nxm * nxm + nem * nem);
    out.stats.continuity_lhs = d_lambda + nxm + nem;
    out.stats.continuity_bound = 2.0 * cfg.continuity_constant() * r * (dxi + deta);
    out.stats.tail_fraction = std::max(tail_norm_fraction(out.datum.xi, SobolevParams{cfg.s, 1.0}),
                                       tail_norm_fraction(out.datum.eta, SobolevParams{cfg.s, 1.0}));

    // contraction certificate at this radius and input size
    const double c = cfg.estimate_constant();
    const double eps = cfg.uniqueness_radius();
    const double rho = std::sqrt(3.0) * eps;
    const double din = std::max(dxi, deta);
    out.stats.certified_contraction =
        (3.0 * c * eps < 0.5) && (c * std::sqrt(2.0 * din * din + rho * rho) <= 0.5) &&
        (c * r * (dxi + deta) <= 0.5 * rho);
    return out;
}

// ---------------------------------------------------------------------------
// datum checks

/// Max of |xi(x) eta(a/x) - b| over the circle |x| = sqrt(|a|).
inline double sampled_gluing_residual(const GluingDatum& d, int samples) {
    if (d.a == cplx(0.0))
        return std::abs(evaluate(d.xi, 0.0) * evaluate(d.eta, 0.0) - d.b);
    const double r = std::sqrt(std::abs(d.a));
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        const cplx x = std::polar(r, 2.0 * pi * i / samples);
        worst = std::max(worst, std::abs(evaluate(d.xi, x) * evaluate(d.eta, d.a / x) - d.b));
    }
    return worst;
}

struct DatumCheck {
    double residual = 0.0;
    int winding_xi = 0;
    int winding_eta = 0;
    bool zero_case_ok = true;
    bool ok = false;
};

/// Verifies the defining properties of a gluing datum: sampled residual on
/// the middle circle, winding number one of both maps on the unit circle,
/// and the degenerate-case constraints at a = 0.
inline DatumCheck check_datum(const GluingDatum& d, const SolverConfig& cfg) {
    DatumCheck out;
    const int samples = std::max(64, cfg.circle_samples_factor * cfg.trunc);
    out.residual = sampled_gluing_residual(d, samples);
    std::vector<cplx> lx(samples), le(samples);
    for (int i = 0; i < samples; ++i) {
        const cplx z = std::polar(1.0, 2.0 * pi * i / samples);
        lx[i] = evaluate(d.xi, z);
        le[i] = evaluate(d.eta, z);
    }
    out.winding_xi = winding_number(lx);
    out.winding_eta = winding_number(le);
    if (d.a == cplx(0.0)) {
        out.zero_case_ok = (d.b == cplx(0.0)) && evaluate(d.xi, 0.0) == cplx(0.0) &&
                           evaluate(d.eta, 0.0) == cplx(0.0);
    }
    out.ok = out.zero_case_ok && out.winding_xi == 1 && out.winding_eta == 1 &&
             out.residual <= cfg.tol * 10.0;
    return out;
}

// ---------------------------------------------------------------------------
// extension across the middle circle

struct ExtensionResult {
    std::vector<std::pair<cplx, cplx>> samples;  // (x, xi(x)) on the inner band
    double mismatch = 0.0;                       // against the series on |x| = r
    bool nonvanishing_certified = false;
};

/**
 * Extends xi to the inner band r^2 <= |x| <= r by xi(x) := b / eta(a/x)
 * and verifies continuity against the series across |x| = r. Requires eta
 * nonvanishing on the band, certified through the embedding bound when
 * possible and checked by sampling otherwise.
 */
inline ExtensionResult extend_across(const GluingDatum& d, const SolverConfig& cfg,
                                     int samples = 512, int rings = 8) {
    if (d.a == cplx(0.0)) throw std::domain_error("extension requires a != 0");
    const double r = std::sqrt(std::abs(d.a));
    ExtensionResult out;

    const TruncatedLaurent id = TruncatedLaurent::identity(d.eta.trunc());
    auto [ep, em] = split(d.eta);
    const double cert = 2.0 * sobolev_embedding_constant(cfg.s) *
                        (sobolev_norm(ep - id, cfg.s) + sobolev_norm(em, SobolevParams{cfg.s, r}));
    out.nonvanishing_certified = cert < 1.0;
    double min_ratio = std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
        for (double rho : {r, std::sqrt(r), 1.0}) {
            const cplx y = std::polar(rho, 2.0 * pi * i / samples);
            min_ratio = std::min(min_ratio, std::abs(evaluate(d.eta, y) / y));
        }
    }
    if (min_ratio < 1e-3) throw std::domain_error("eta vanishes on the extension band");

    out.samples.reserve(static_cast<std::size_t>(samples) * rings);
    for (int k = 0; k < rings; ++k) {
        // geometric radii from r down to r^2
        const double rho = r * std::pow(r, static_cast<double>(k) / (rings - 1));
        for (int i = 0; i < samples; ++i) {
            const cplx x = std::polar(rho, 2.0 * pi * i / samples);
            out.samples.emplace_back(x, d.b / evaluate(d.eta, d.a / x));
        }
    }
    for (int i = 0; i < samples; ++i) {
        const cplx x = std::polar(r, 2.0 * pi * i / samples);
        out.mismatch = std::max(out.mismatch,
                                std::abs(evaluate(d.xi, x) - d.b / evaluate(d.eta, d.a / x)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// a priori bounds

struct AprioriReport {
    double ratio_dev = 0.0;   // |b/a - 1|
    double xi_sup_dev = 0.0;  // sup |xi(x)/x - 1| over |a| <= |x| <= 1
    double eta_sup_dev = 0.0;
    double delta_measured = 0.0;  // max(||xi - id||_s, ||eta - id||_s)
    double ratio_bound = 0.0;
    double sup_bound = 0.0;
    double empirical_c = 0.0;  // max measured quantity / delta_measured
    bool in_derivation_regime = false;
    bool ok = false;
};

/**
 * A priori closeness of a solved datum to the identity datum. The bounds
 * follow the contour-integral comparison of b/a with 1: the ratio constant
 * is 2^{1-s} + 4 c_emb and the band constant 8 c_emb + 2^{1-s}, valid once
 * c_emb * delta <= 1/4. Report only; nothing is thrown.
 */
inline AprioriReport apriori_check(const GluingDatum& d, const SolverConfig& cfg,
                                   int samples = 256, int rings = 12) {
    if (d.a == cplx(0.0)) throw std::domain_error("a priori bounds require a != 0");
    AprioriReport rep;
    rep.ratio_dev = std::abs(d.b / d.a - 1.0);

    const double lo = std::abs(d.a);
    auto band_sup = [&](const TruncatedLaurent& f) {
        double sup = 0.0;
        for (int k = 0; k < rings; ++k) {
            const double rho = lo * std::pow(1.0 / lo, static_cast<double>(k) / (rings - 1));
            for (int i = 0; i < samples; ++i) {
                const cplx x = std::polar(rho, 2.0 * pi * i / samples);
                sup = std::max(sup, std::abs(evaluate(f, x) / x - 1.0));
            }
        }
        return sup;
    };
    rep.xi_sup_dev = band_sup(d.xi);
    rep.eta_sup_dev = band_sup(d.eta);

    const TruncatedLaurent id = TruncatedLaurent::identity(cfg.trunc);
    rep.delta_measured = std::max(sobolev_norm(d.xi - id, cfg.s), sobolev_norm(d.eta - id, cfg.s));

    const double ce = sobolev_embedding_constant(cfg.s);
    const double c_ratio = std::pow(2.0, 1.0 - cfg.s) + 4.0 * ce;
    const double c_sup = 8.0 * ce + std::pow(2.0, 1.0 - cfg.s);
    rep.ratio_bound = c_ratio * rep.delta_measured;
    rep.sup_bound = c_sup * rep.delta_measured;
    rep.in_derivation_regime = ce * rep.delta_measured <= 0.25;
    if (rep.delta_measured > 0.0)
        rep.empirical_c =
            std::max({rep.ratio_dev, rep.xi_sup_dev, rep.eta_sup_dev}) / rep.delta_measured;
    rep.ok = rep.ratio_dev <= rep.ratio_bound + 1e-15 && rep.xi_sup_dev <= rep.sup_bound + 1e-15 &&
             rep.eta_sup_dev <= rep.sup_bound + 1e-15;
    return rep;
}

// ---------------------------------------------------------------------------
// random perturbations and the uniqueness probe

/// Random positive-mode perturbation of the identity with geometric decay,
/// scaled to the requested boundary-norm distance.
inline TruncatedLaurent random_plus_near_identity(int trunc, double s, double distance,
                                                  std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    TruncatedLaurent pert(trunc);
    for (int n = 2; n <= trunc; ++n) {
        const double decay = std::pow(1.0 + n, -(s + 1.0));
        pert.set_coeff(n, cplx(gauss(rng), gauss(rng)) * decay);
    }
    const double nn = sobolev_norm(pert, s);
    if (nn > 0.0) pert *= cplx(distance / nn);
    return TruncatedLaurent::identity(trunc) + pert;
}

/// Random minus-mode series with unit weighted norm shape, scaled so both
/// the (r, s) norm and the sampled sup on |x| = r stay within the caps.
inline TruncatedLaurent random_minus_in_ball(int trunc, double s, double r, double norm_cap,
                                             double sup_cap, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    TruncatedLaurent pert(trunc);
    for (int n = -trunc + 1; n <= 0; ++n) {
        const double shape = std::pow(1.0 + std::abs(n), -(s + 1.0));
        pert.set_coeff(n, detail::scale_by_power(cplx(gauss(rng), gauss(rng)) * shape, r, 1 - n));
    }
    const double nn = sobolev_norm(pert, SobolevParams{s, r});
    double sup = 0.0;
    for (int i = 0; i < 128; ++i)
        sup = std::max(sup, std::abs(evaluate(pert, std::polar(r, 2.0 * pi * i / 128))));
    double scale = 1.0;
    if (nn > 0.0) scale = std::min(scale, norm_cap / nn);
    if (sup > 0.0) scale = std::min(scale, sup_cap / sup);
    pert *= cplx(scale);
    return pert;
}

/**
 * Restarts the Newton iteration from n_trials random perturbations of the
 * solved triple inside the uniqueness ball and reports whether every
 * restart converges back to the same datum within 1e-8 coefficientwise.
 */
inline bool uniqueness_probe(const GluingDatum& d, const SolverConfig& cfg, int n_trials,
                             std::uint64_t seed = 0x9e3779b97f4a7c15ull) {
    if (d.a == cplx(0.0)) throw std::domain_error("uniqueness probe requires a != 0");
    if (sampled_gluing_residual(d, 4 * cfg.trunc) > cfg.tol * 100.0)
        throw std::domain_error("uniqueness probe requires a solved datum");

    const double theta = std::arg(d.a) / 2.0;
    const double r = std::sqrt(std::abs(d.a));
    const TruncatedLaurent xr = rotate(d.xi, theta);
    const TruncatedLaurent er = rotate(d.eta, theta);
    auto [xp, xm] = split(xr);
    auto [ep, em] = split(er);
    const cplx lambda = (d.b / d.a);

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double eps = cfg.uniqueness_radius();

    for (int t = 0; t < n_trials; ++t) {
        const cplx dl = std::polar(0.3 * eps * unif(rng), 2.0 * pi * unif(rng));
        TruncatedLaurent pxm =
            xm + random_minus_in_ball(cfg.trunc, cfg.s, r, 0.3 * eps, 0.3 * r * eps, rng);
        TruncatedLaurent pem =
            em + random_minus_in_ball(cfg.trunc, cfg.s, r, 0.3 * eps, 0.3 * r * eps, rng);
        detail::RealSolve rs = detail::solve_real(r, xp, ep, cfg, lambda + dl, pxm, pem);
        if (!rs.stats.converged) return false;
        const cplx b2 = std::polar(1.0, 2.0 * theta) * (rs.lambda * std::abs(d.a));
        const TruncatedLaurent xi2 = rotate(xp + rs.xi_minus, -theta);
        const TruncatedLaurent eta2 = rotate(ep + rs.eta_minus, -theta);
        const double dist = std::max({std::abs(b2 - d.b), xi2.max_coeff_distance(d.xi),
                                      eta2.max_coeff_distance(d.eta)});
        if (dist > 1e-8) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// holomorphy of the solution operator

namespace detail {

inline std::vector<cplx> solution_vector(cplx a, const TruncatedLaurent& xi_plus,
                                         const TruncatedLaurent& eta_plus,
                                         const SolverConfig& cfg) {
    const SolveResult sr = solve_gluing(a, xi_plus, eta_plus, cfg);
    if (!sr.stats.converged) throw numeric_error("stencil solve failed to converge");
    std::vector<cplx> v;
    v.reserve(2 * static_cast<std::size_t>(cfg.trunc) + 3);
    v.push_back(sr.datum.b);
    for (int n = -cfg.trunc; n <= 0; ++n) v.push_back(sr.datum.xi.coeff(n));
    for (int n = -cfg.trunc; n <= 0; ++n) v.push_back(sr.datum.eta.coeff(n));
    return v;
}

inline double l2(const std::vector<cplx>& v) {
    double s = 0.0;
    for (const cplx& z : v) s += std::norm(z);
    return std::sqrt(s);
}

}  // namespace detail

struct HolomorphyReport {
    double cr_residual_a = 0.0;    // conjugate-derivative norm in the a direction
    double cr_residual_dir = 0.0;  // same for a plus-mode input direction
};

/**
 * Centered-difference conjugate derivative of the solution operator at a0
 * (and in one input direction). For a holomorphic map both residuals are
 * O(h^2); halving h should divide them by about four.
 */
inline HolomorphyReport holomorphy_residual(cplx a0, const TruncatedLaurent& xi_plus,
                                            const TruncatedLaurent& eta_plus, double h,
                                            const SolverConfig& cfg) {
    if (std::abs(a0) + h >= 1.0) throw std::domain_error("stencil leaves the unit disk");
    auto V = [&](cplx a) { return detail::solution_vector(a, xi_plus, eta_plus, cfg); };
    auto conj_norm = [&](const std::vector<cplx>& pr, const std::vector<cplx>& mr,
                         const std::vector<cplx>& pi, const std::vector<cplx>& mi) {
        std::vector<cplx> out(pr.size());
        for (std::size_t i = 0; i < pr.size(); ++i) {
            const cplx dx = (pr[i] - mr[i]) / (2.0 * h);
            const cplx dy = (pi[i] - mi[i]) / (2.0 * h);
            out[i] = 0.5 * (dx + cplx(0.0, 1.0) * dy);
        }
        return detail::l2(out);
    };

    HolomorphyReport rep;
    rep.cr_residual_a = conj_norm(V(a0 + h), V(a0 - h), V(a0 + cplx(0.0, h)), V(a0 - cplx(0.0, h)));

    // direction probe in the plus-mode input
    TruncatedLaurent dir(cfg.trunc);
    dir.set_coeff(2, 0.01);
    auto W = [&](cplx w) {
        TruncatedLaurent x = xi_plus;
        for (int n = 1; n <= cfg.trunc; ++n) x.set_coeff(n, x.coeff(n) + w * dir.coeff(n));
        return detail::solution_vector(a0, x, eta_plus, cfg);
    };
    rep.cr_residual_dir =
        conj_norm(W(h), W(-h), W(cplx(0.0, h)), W(cplx(0.0, -h)));
    return rep;
}

struct ZeroLimitReport {
    double measured_ratio = 0.0;  // sup of ||T(a)|| / |a| over the probes
    double bound = 0.0;
    bool ok = false;
};

/// ||T(a, xi+, eta+)|| <= c |a| near a = 0, with the norm
/// sqrt(|b|^2 + ||xi-||_s^2 + ||eta-||_s^2) and c from the first-order
/// solution bound.
inline ZeroLimitReport zero_limit_check(const TruncatedLaurent& xi_plus,
                                        const TruncatedLaurent& eta_plus, const SolverConfig& cfg,
                                        const std::vector<double>& radii = {1e-2, 1e-3, 1e-4,
                                                                            1e-5}) {
    ZeroLimitReport rep;
    const TruncatedLaurent id = TruncatedLaurent::identity(cfg.trunc);
    const double din = sobolev_norm(xi_plus - id, cfg.s) + sobolev_norm(eta_plus - id, cfg.s);
    for (double rr : radii) {
        const SolveResult sr = solve_gluing(cplx(rr, 0.0), xi_plus, eta_plus, cfg);
        if (!sr.stats.converged) throw numeric_error("zero-limit solve failed");
        auto [xp, xm] = split(sr.datum.xi);
        auto [ep, em] = split(sr.datum.eta);
        const double tn = std::sqrt(std::norm(sr.datum.b) +
                                    std::pow(sobolev_norm(xm, cfg.s), 2) +
                                    std::pow(sobolev_norm(em, cfg.s), 2));
        rep.measured_ratio = std::max(rep.measured_ratio, tn / rr);
    }
    rep.bound = std::abs(xi_plus.coeff(1) * eta_plus.coeff(1)) +
                4.0 * cfg.continuity_constant() * din;
    rep.ok = rep.measured_ratio <= rep.bound + 1e-12;
    return rep;
}

// ---------------------------------------------------------------------------
// the induced coordinate map

/// Family of admissible plus-mode inputs indexed by the gluing parameter.
using GluingFamily = std::function<std::pair<TruncatedLaurent, TruncatedLaurent>(cplx)>;

/// Evaluates (xi_a(x), eta_a(y)) at a = xy; continuous down to the node,
/// where the a = 0 case is exact.
inline std::pair<cplx, cplx> glue_map_eval(cplx x, cplx y, const GluingFamily& family,
                                           const SolverConfig& cfg) {
    if (std::abs(x) >= 1.0 || std::abs(y) >= 1.0)
        throw std::domain_error("glue map requires |x|, |y| < 1");
    const auto [xp, ep] = family(x * y);
    const SolveResult sr = solve_gluing(x * y, xp, ep, cfg);
    if (!sr.stats.converged) throw numeric_error("glue map solve failed to converge");
    return {evaluate(sr.datum.xi, x), evaluate(sr.datum.eta, y)};
}

// ---------------------------------------------------------------------------
// measured estimate probes (shared by reports and tests)

struct EstimateProbe {
    double lhs = 0.0;
    double rhs = 0.0;
    bool ok = false;
};

/// ||(dF(lambda, xi, eta) - D)(probe)||_s against the bilinear bound
/// C (||eta - id||_{r,s} ||xihat||_{r,s} + ||xi - id||_{r,s} ||etahat||_{r,s}).
inline EstimateProbe quadratic_estimate_probe(double r, const TruncatedLaurent& xi,
                                              const TruncatedLaurent& eta,
                                              const TruncatedLaurent& xihat,
                                              const TruncatedLaurent& etahat, double s) {
    const TruncatedLaurent id = TruncatedLaurent::identity(xi.trunc());
    TruncatedLaurent dev = detail::gluing_bilinear(r, xihat, eta - id);
    dev += detail::gluing_bilinear(r, xi - id, etahat);
    EstimateProbe p;
    p.lhs = sobolev_norm(dev, s);
    const SobolevParams prs{s, r};
    p.rhs = product_constant(s) * (sobolev_norm(eta - id, prs) * sobolev_norm(xihat, prs) +
                                   sobolev_norm(xi - id, prs) * sobolev_norm(etahat, prs));
    p.ok = p.lhs <= p.rhs * (1.0 + 1e-12) + 1e-300;
    return p;
}

/// Residual of the starting triple against 4 sqrt(3) C r (input distance).
inline EstimateProbe approximate_solution_probe(double r, const TruncatedLaurent& xi_plus,
                                                const TruncatedLaurent& eta_plus, double s) {
    const TruncatedLaurent id = TruncatedLaurent::identity(xi_plus.trunc());
    const cplx l0 = xi_plus.coeff(1) * eta_plus.coeff(1);
    EstimateProbe p;
    p.lhs = sobolev_norm(gluing_residual(r, l0, xi_plus, eta_plus), s);
    p.rhs = 4.0 * std::sqrt(3.0) * product_constant(s) * r *
            (sobolev_norm(xi_plus - id, s) + sobolev_norm(eta_plus - id, s));
    p.ok = p.lhs <= p.rhs * (1.0 + 1e-12) + 1e-300;
    return p;
}

/// Product norm of the closed-form inverse against the right-hand side norm.
inline EstimateProbe linear_inverse_probe(double r, const TruncatedLaurent& rhs, double s) {
    const MinusModeSolution sol = solve_linearization_minus(r, rhs);
    const SobolevParams prs{s, r};
    EstimateProbe p;
    p.lhs = std::sqrt(std::norm(sol.lambda_hat) + std::pow(sobolev_norm(sol.xi_minus, prs), 2) +
                      std::pow(sobolev_norm(sol.eta_minus, prs), 2));
    p.rhs = sobolev_norm(rhs, s);
    p.ok = p.lhs <= p.rhs * (1.0 + 1e-12) + 1e-300;
    return p;
}

}  // namespace nodal
