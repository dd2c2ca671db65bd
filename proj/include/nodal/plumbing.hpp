#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "nodal/core.hpp"
#include "nodal/laurent.hpp"
#include "nodal/local_model.hpp"

namespace nodal {

/// Closed annulus r <= |z| <= R.
struct AnnulusSpec {
    double r = 0.0;
    double R = 0.0;

    void validate() const {
        if (!(r > 0.0 && r < R)) throw std::invalid_argument("annulus requires 0 < r < R");
    }
};

/// Conformal modulus log(R/r); scale invariant, strictly decreasing in r.
inline double modulus(const AnnulusSpec& a) {
    a.validate();
    return std::log(a.R / a.r);
}

/// Hyperbolic length 2 pi^2 / log(R/r) of the core circle |z| = sqrt(rR);
/// tends to zero as the annulus degenerates toward a node.
inline double core_geodesic_length(const AnnulusSpec& a) {
    return 2.0 * pi * pi / modulus(a);
}

struct NodeFiber {
    bool is_node = false;            // a = 0: pair of transverse disks
    AnnulusSpec annulus{0.0, 1.0};   // valid when !is_node
    bool degenerate_warning = false; // |a| close to 1, modulus nearly zero
};

/// Fiber of the standard node xy = a over the unit bidisk: an annulus of
/// inner radius |a| for a != 0, the node marker for a = 0.
inline NodeFiber node_fiber(cplx a) {
    if (std::abs(a) >= 1.0) throw std::domain_error("node fiber requires |a| < 1");
    NodeFiber f;
    if (a == cplx(0.0)) {
        f.is_node = true;
        return f;
    }
    f.annulus = AnnulusSpec{std::abs(a), 1.0};
    f.degenerate_warning = std::abs(a) > 0.9;
    return f;
}

struct EmbeddingCheck {
    bool modulus_law_holds = false;
    double modulus_domain = 0.0;
    double modulus_target = 0.0;
    int core_winding = 0;
    double image_min = 0.0;
    double image_max = 0.0;
};

/**
 * Checks the annulus embedding law: a holomorphic map A1 -> A2 carrying
 * the core loop once around the hole cannot decrease the modulus of the
 * target below that of the domain. Containment and the winding are
 * verified by dense sampling (the map is given as a finite series, so its
 * modulus extremes sit on the boundary circles); failure of containment
 * is an input error, a modulus violation is reported in the result.
 */
inline EmbeddingCheck embedding_modulus_check(const TruncatedLaurent& f, const AnnulusSpec& a1,
                                              const AnnulusSpec& a2, int samples = 1024) {
    a1.validate();
    a2.validate();
    EmbeddingCheck out;
    out.modulus_domain = modulus(a1);
    out.modulus_target = modulus(a2);

    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (double rho : {a1.r, a1.R}) {
        for (int i = 0; i < samples; ++i) {
            const double m = std::abs(evaluate(f, std::polar(rho, 2.0 * pi * i / samples)));
            lo = std::min(lo, m);
            hi = std::max(hi, m);
        }
    }
    out.image_min = lo;
    out.image_max = hi;
    if (!(lo >= a2.r * (1.0 - 1e-12) && hi <= a2.R * (1.0 + 1e-12)))
        throw std::domain_error("sampled containment in the target annulus fails");

    const double core = std::sqrt(a1.r * a1.R);
    std::vector<cplx> loop(samples);
    for (int i = 0; i < samples; ++i)
        loop[i] = evaluate(f, std::polar(core, 2.0 * pi * i / samples));
    out.core_winding = winding_number(loop);
    if (out.core_winding != 1 && out.core_winding != -1)
        throw std::domain_error("core circle image must wind once around the hole");

    out.modulus_law_holds = out.modulus_domain <= out.modulus_target * (1.0 + 1e-12);
    return out;
}

// ---------------------------------------------------------------------------
// node smoothing

/**
 * Coordinate change across a smoothed node. Built from two disk germs
 * vanishing at the origin with nonzero derivative: after normalizing the
 * derivatives to one and shrinking by the largest admissible dyadic eps,
 * the gluing solver produces, for each smoothing parameter z, the value
 * zeta(z) and the minus-mode corrections making
 * xi(x, y) eta(x, y) = zeta(xy) hold with xi(x, 0) = xi0(x),
 * eta(0, y) = eta0(y).
 *
 * Queries re-solve at the requested parameter instead of interpolating the
 * stored grid; the solution depends holomorphically on z, so a fresh solve
 * is exact up to the Newton tolerance.
 */
struct NodalExtension {
    TruncatedLaurent xi0, eta0;          // original germs
    cplx xi_deriv{1.0}, eta_deriv{1.0};  // derivatives at the origin
    double eps = 1.0;                    // dyadic shrink factor
    TruncatedLaurent xi_cal, eta_cal;    // normalized + shrunk germs (solver inputs)
    TruncatedLaurent zeta;               // Taylor modes of the normalized parameter map
    SolverConfig cfg;

    struct Sample {
        cplx z;
        cplx b;
        TruncatedLaurent alpha, beta;  // minus-mode corrections at this z
    };
    std::vector<Sample> grid;

    /// zeta(z) in normalized coordinates, by a fresh solve.
    cplx zeta_at(cplx z) const {
        if (z == cplx(0.0)) return 0.0;
        const SolveResult sr = solve_gluing(z, xi_cal, eta_cal, cfg);
        if (!sr.stats.converged) throw numeric_error("nodal extension solve failed");
        return sr.datum.b;
    }

    /// (xi(x, y), eta(x, y)) in normalized coordinates.
    std::pair<cplx, cplx> phi_at(cplx x, cplx y) const {
        const SolveResult sr = solve_gluing(x * y, xi_cal, eta_cal, cfg);
        if (!sr.stats.converged) throw numeric_error("nodal extension solve failed");
        return {evaluate(sr.datum.xi, x), evaluate(sr.datum.eta, y)};
    }

    /// Same in the original germ coordinates; defined for |x|, |y| < eps.
    std::pair<cplx, cplx> phi_original(cplx x, cplx y) const {
        if (std::abs(x) >= eps || std::abs(y) >= eps)
            throw std::domain_error("original-coordinate query needs |x|, |y| < eps");
        auto [u, v] = phi_at(x / eps, y / eps);
        return {xi_deriv * eps * u, eta_deriv * eps * v};
    }

    cplx zeta_original(cplx z) const {
        if (std::abs(z) >= eps * eps)
            throw std::domain_error("original-coordinate query needs |z| < eps^2");
        return xi_deriv * eta_deriv * eps * eps * zeta_at(z / (eps * eps));
    }
};

namespace detail {

inline void require_disk_germ(const TruncatedLaurent& g, const char* name) {
    if (!g.is_plus()) throw std::invalid_argument(std::string(name) + ": germ must be a power series vanishing at 0");
    if (g.coeff(1) == cplx(0.0))
        throw std::invalid_argument(std::string(name) + ": derivative at the origin vanishes");
}

}  // namespace detail

/**
 * Builds the coordinate change across a smoothed node from the germs.
 * The shrink factor is the largest dyadic eps placing both normalized
 * germs inside half the admissible input ball; the grid holds solves on
 * geometrically shrinking circles of smoothing parameters plus a Taylor
 * fit of zeta from a fixed circle.
 */
inline NodalExtension nodal_extend(const TruncatedLaurent& xi0, const TruncatedLaurent& eta0,
                                   const SolverConfig& cfg, double grid_radius = 0.25,
                                   int grid_rings = 6, int ring_samples = 16) {
    cfg.validate();
    if (xi0.trunc() != cfg.trunc || eta0.trunc() != cfg.trunc)
        throw std::invalid_argument("germ truncation does not match the config");
    detail::require_disk_germ(xi0, "xi0");
    detail::require_disk_germ(eta0, "eta0");

    NodalExtension ext;
    ext.xi0 = xi0;
    ext.eta0 = eta0;
    ext.cfg = cfg;
    ext.xi_deriv = xi0.coeff(1);
    ext.eta_deriv = eta0.coeff(1);

    TruncatedLaurent xn = (cplx(1.0) / ext.xi_deriv) * xi0;
    TruncatedLaurent en = (cplx(1.0) / ext.eta_deriv) * eta0;

    const TruncatedLaurent id = TruncatedLaurent::identity(cfg.trunc);
    const double target = 0.5 * cfg.input_radius();
    double eps = 1.0;
    for (int k = 0; k <= 60; ++k, eps *= 0.5) {
        const TruncatedLaurent xs = rescale(xn, eps);
        const TruncatedLaurent es = rescale(en, eps);
        if (sobolev_norm(xs - id, cfg.s) < target && sobolev_norm(es - id, cfg.s) < target) {
            ext.eps = eps;
            ext.xi_cal = xs;
            ext.eta_cal = es;
            break;
        }
        if (k == 60) throw numeric_error("no dyadic shrink places the germs in the input ball");
    }

    for (int ring = 0; ring < grid_rings; ++ring) {
        const double rho = grid_radius * std::pow(0.5, ring);
        for (int i = 0; i < ring_samples; ++i) {
            const cplx z = std::polar(rho, 2.0 * pi * i / ring_samples);
            const SolveResult sr = solve_gluing(z, ext.xi_cal, ext.eta_cal, cfg);
            if (!sr.stats.converged) throw numeric_error("nodal extension solve failed on the grid");
            auto [xp, xm] = split(sr.datum.xi);
            auto [ep2, em2] = split(sr.datum.eta);
            ext.grid.push_back(NodalExtension::Sample{z, sr.datum.b, xm, em2});
        }
    }

    // Taylor modes of zeta from a uniform circle of solves
    const int M = 64;
    std::vector<cplx> bv(M);
    for (int j = 0; j < M; ++j) {
        const cplx z = std::polar(grid_radius, 2.0 * pi * j / M);
        const SolveResult sr = solve_gluing(z, ext.xi_cal, ext.eta_cal, cfg);
        if (!sr.stats.converged) throw numeric_error("nodal extension solve failed on the circle");
        bv[j] = sr.datum.b;
    }
    ext.zeta = TruncatedLaurent(cfg.trunc);
    const int kmax = std::min(cfg.trunc, M / 2);
    for (int k = 0; k <= kmax; ++k) {
        cplx acc = 0.0;
        for (int j = 0; j < M; ++j)
            acc += bv[j] * std::polar(1.0, -2.0 * pi * j * k / M);
        acc /= static_cast<double>(M);
        ext.zeta.set_coeff(k, detail::scale_by_power(acc, grid_radius, -k));
    }
    return ext;
}

struct ExtensionInvariants {
    double germ_mismatch = 0.0;     // xi(x,0) vs xi0, eta(0,y) vs eta0
    double product_residual = 0.0;  // xi(x,y) eta(x,y) - zeta(xy) on the grid
    double zeta_origin = 0.0;       // |zeta(0)|
    double zeta_deriv_dev = 0.0;    // |zeta'(0) - 1| by centered difference
    bool ok = false;
};

/// Samples the defining identities of an extension on an nx-by-ny polar
/// grid in normalized coordinates.
inline ExtensionInvariants check_extension(const NodalExtension& ext, int n = 32, double rx = 0.6,
                                           double ry = 0.4, double tol = 1e-9) {
    ExtensionInvariants inv;

    for (int i = 0; i < n; ++i) {
        const cplx x = std::polar(rx, 2.0 * pi * i / n);
        auto [u, v] = ext.phi_at(x, 0.0);
        (void)v;
        inv.germ_mismatch = std::max(inv.germ_mismatch, std::abs(u - evaluate(ext.xi_cal, x)));
        const cplx y = std::polar(ry, 2.0 * pi * i / n);
        auto [u2, v2] = ext.phi_at(0.0, y);
        (void)u2;
        inv.germ_mismatch = std::max(inv.germ_mismatch, std::abs(v2 - evaluate(ext.eta_cal, y)));
    }

    // on the n-by-n polar grid, z = xy sweeps one circle (angle index i + j),
    // so one solve per distinct z serves a whole antidiagonal of pairs
    for (int k = 0; k < n; ++k) {
        const cplx z = std::polar(rx * ry, 2.0 * pi * k / n);
        const SolveResult sr = solve_gluing(z, ext.xi_cal, ext.eta_cal, ext.cfg);
        if (!sr.stats.converged) throw numeric_error("nodal extension solve failed on the grid");
        for (int i = 0; i < n; ++i) {
            const int j = (k - i + n) % n;
            const cplx x = std::polar(rx, 2.0 * pi * i / n);
            const cplx y = std::polar(ry, 2.0 * pi * j / n);
            const cplx u = evaluate(sr.datum.xi, x);
            const cplx v = evaluate(sr.datum.eta, y);
            inv.product_residual = std::max(inv.product_residual, std::abs(u * v - sr.datum.b));
        }
    }

    inv.zeta_origin = std::abs(ext.zeta_at(0.0));
    const double h = 5e-4;
    const cplx der = (ext.zeta_at(cplx(h, 0.0)) - ext.zeta_at(cplx(-h, 0.0))) / (2.0 * h);
    inv.zeta_deriv_dev = std::abs(der - 1.0);
    inv.ok = inv.germ_mismatch <= tol && inv.product_residual <= tol && inv.zeta_origin <= tol &&
             inv.zeta_deriv_dev <= 1e-6;
    return inv;
}

}  // namespace nodal
