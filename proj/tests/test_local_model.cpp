#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "nodal/local_model.hpp"
#include "test_util.hpp"

using namespace nodal;
using Catch::Approx;

namespace {

SolverConfig test_config(int trunc = 32, double delta = 0.05) {
    SolverConfig cfg;
    cfg.trunc = trunc;
    cfg.delta = delta;
    cfg.tol = 1e-12;
    cfg.max_iter = 40;
    return cfg;
}

/**
 * Independent fixed-point oracle: same frozen-linearization update, but at
 * truncation 256 with the residual computed by pointwise circle sampling
 * and FFT coefficient extraction instead of the library's convolution.
 */
struct OracleSolution {
    cplx lambda;
    std::vector<cplx> eta_minus;  // modes 0, -1, -2, ... as a dense list
    std::vector<cplx> xi_minus;
};

OracleSolution pointwise_fixed_point(double r, const TruncatedLaurent& xi_plus_small,
                                     const TruncatedLaurent& eta_plus_small) {
    const int N = 256;
    const std::size_t M = 1024;
    TruncatedLaurent xi(N), eta(N);
    for (int n = 1; n <= xi_plus_small.trunc(); ++n) {
        xi.set_coeff(n, xi_plus_small.coeff(n));
        eta.set_coeff(n, eta_plus_small.coeff(n));
    }
    cplx lambda = xi.coeff(1) * eta.coeff(1);

    auto scaled = [&](const TruncatedLaurent& f) {
        TruncatedLaurent g(N);
        for (int n = -N; n <= N; ++n) g.set_coeff(n, f.coeff(n) * std::pow(r, n));
        return g;
    };

    for (int it = 0; it < 200; ++it) {
        const auto U = testutil::circle_values_by_fft(scaled(xi), M);
        const auto V = testutil::circle_values_by_fft(scaled(eta), M);
        std::vector<cplx> res(M);
        double worst = 0.0;
        for (std::size_t j = 0; j < M; ++j) {
            res[j] = U[j] * V[(M - j) % M] / (r * r) - lambda;
            worst = std::max(worst, std::abs(res[j]));
        }
        if (worst < 1e-14) break;
        const auto rc = testutil::circle_coeffs_by_fft(res);
        auto mode = [&](int p) { return rc[p >= 0 ? static_cast<std::size_t>(p)
                                                  : M - static_cast<std::size_t>(-p)]; };
        lambda -= -mode(0);
        for (int n = -N + 1; n <= 0; ++n) {
            xi.set_coeff(n, xi.coeff(n) - mode(n - 1) * std::pow(r, 1 - n));
            eta.set_coeff(n, eta.coeff(n) - mode(1 - n) * std::pow(r, 1 - n));
        }
    }

    OracleSolution out;
    out.lambda = lambda;
    for (int n = 0; n >= -8; --n) {
        out.eta_minus.push_back(eta.coeff(n));
        out.xi_minus.push_back(xi.coeff(n));
    }
    return out;
}

}  // namespace

TEST_CASE("identity residual vanishes for every radius") {
    const SolverConfig cfg = test_config();
    const TruncatedLaurent id = TruncatedLaurent::identity(cfg.trunc);
    for (double r : {0.9, 0.5, 0.1, 0.01, 1.0}) {
        const TruncatedLaurent res = gluing_residual(r, 1.0, id, id);
        CHECK(sobolev_norm(res, cfg.s) == 0.0);
    }
    // with lambda = 0 the residual is the constant one
    const TruncatedLaurent res0 = gluing_residual(1.0, 0.0, id, id);
    CHECK(res0.coeff(0) == cplx(1.0));
    CHECK(sobolev_norm(res0, cfg.s) == 1.0);
}

TEST_CASE("residual coefficients match pointwise sampling") {
    std::mt19937_64 rng(21);
    const int N = 24;
    for (int t = 0; t < 10; ++t) {
        TruncatedLaurent xi = testutil::random_series(N, 4.0, rng);
        TruncatedLaurent eta = testutil::random_series(N, 4.0, rng);
        const double r = 0.55;
        const cplx lambda(0.3, -0.2);
        const TruncatedLaurent res = gluing_residual(r, lambda, xi, eta);
        const auto vals = testutil::circle_values_by_fft(res, 256);
        for (std::size_t j = 0; j < 256; j += 11) {
            const cplx z = std::polar(1.0, 2.0 * pi * static_cast<double>(j) / 256.0);
            const cplx direct =
                evaluate(xi, r * z) * evaluate(eta, r / z) / (r * r) - lambda;
            CHECK(std::abs(vals[j] - direct) < 1e-12);
        }
    }
}

TEST_CASE("linearization formula and finite differences") {
    const int N = 24;
    const double r = 0.6;
    // (lhat, 0, 0) |-> the constant -lhat
    const TruncatedLaurent only_l =
        gluing_linearization(r, cplx(2.0, 1.0), TruncatedLaurent(N), TruncatedLaurent(N));
    CHECK(only_l.coeff(0) == cplx(-2.0, -1.0));

    // a constant in the xi slot shifts to the -1 mode
    const TruncatedLaurent d1 =
        gluing_linearization(1.0, 0.0, TruncatedLaurent::constant(N, 1.0), TruncatedLaurent(N));
    CHECK(d1.coeff(-1) == cplx(1.0));
    for (int n = -N; n <= N; ++n)
        if (n != -1) CHECK(d1.coeff(n) == cplx(0.0));

    // centered difference of the residual at (1, id, id)
    std::mt19937_64 rng(22);
    const TruncatedLaurent id = TruncatedLaurent::identity(N);
    for (int t = 0; t < 10; ++t) {
        const TruncatedLaurent vx = testutil::random_series(N, 4.0, rng);
        const TruncatedLaurent ve = testutil::random_series(N, 4.0, rng);
        const cplx vl(0.2, -0.4);
        const double h = 1e-5;
        TruncatedLaurent fp = gluing_residual(r, 1.0 + h * vl, id + cplx(h) * vx, id + cplx(h) * ve);
        TruncatedLaurent fm = gluing_residual(r, 1.0 - h * vl, id - cplx(h) * vx, id - cplx(h) * ve);
        TruncatedLaurent diff = fp - fm;
        diff *= cplx(1.0 / (2.0 * h));
        const TruncatedLaurent lin = gluing_linearization(r, vl, vx, ve);
        CHECK(diff.max_coeff_distance(lin) < 1e-9);
    }
}

TEST_CASE("closed-form inverse of the linearization") {
    const int N = 24;
    std::mt19937_64 rng(23);
    const MinusModeSolution z = solve_linearization_minus(0.5, TruncatedLaurent(N));
    CHECK(z.lambda_hat == cplx(0.0));
    CHECK(z.xi_minus.is_zero());
    CHECK(z.eta_minus.is_zero());

    for (double r : {1.0, 0.6, 0.2}) {
        for (int t = 0; t < 34; ++t) {
            const TruncatedLaurent rhs = testutil::random_series(N, 4.0, rng);
            const MinusModeSolution sol = solve_linearization_minus(r, rhs);
            CHECK(sol.xi_minus.is_minus());
            CHECK(sol.eta_minus.is_minus());
            const TruncatedLaurent back =
                gluing_linearization(r, sol.lambda_hat, sol.xi_minus, sol.eta_minus);
            CHECK(back.max_coeff_distance(rhs) < 1e-12);

            // product norm of the solution never exceeds the rhs norm
            const EstimateProbe p = linear_inverse_probe(r, rhs, 4.0);
            CHECK(p.ok);
        }
    }
}

TEST_CASE("identity inputs solve exactly") {
    const SolverConfig cfg = test_config();
    const TruncatedLaurent id = TruncatedLaurent::identity(cfg.trunc);
    for (cplx a : {cplx(0.25, 0.0), cplx(0.0, 0.3), cplx(-0.2, 0.1), cplx(-0.4, 0.0)}) {
        const SolveResult sr = solve_gluing(a, id, id, cfg);
        CHECK(sr.stats.converged);
        CHECK(sr.stats.iterations == 0);  // the starting triple is already exact
        CHECK(std::abs(sr.datum.b - a) < 1e-15);
        CHECK(sr.datum.xi.max_coeff_distance(id) < 1e-15);
        CHECK(sr.datum.eta.max_coeff_distance(id) < 1e-15);
    }
}

TEST_CASE("a = 0 is special-cased exactly") {
    const SolverConfig cfg = test_config();
    std::mt19937_64 rng(24);
    const TruncatedLaurent xp = random_plus_near_identity(cfg.trunc, cfg.s, 0.03, rng);
    const TruncatedLaurent ep = random_plus_near_identity(cfg.trunc, cfg.s, 0.03, rng);
    const SolveResult sr = solve_gluing(cplx(0.0), xp, ep, cfg);
    CHECK(sr.stats.converged);
    CHECK(sr.datum.b == cplx(0.0));
    CHECK(sr.datum.xi == xp);  // minus parts are exactly zero
    CHECK(sr.datum.eta == ep);
    CHECK(check_datum(sr.datum, cfg).ok);
}

TEST_CASE("input validation") {
    const SolverConfig cfg = test_config();
    const TruncatedLaurent id = TruncatedLaurent::identity(cfg.trunc);
    CHECK_THROWS_AS(solve_gluing(cplx(1.2, 0.0), id, id, cfg), std::domain_error);
    TruncatedLaurent with_minus = id;
    with_minus.set_coeff(-1, 0.1);
    CHECK_THROWS_AS(solve_gluing(cplx(0.1, 0.0), with_minus, id, cfg), std::invalid_argument);
    TruncatedLaurent far = id;
    far.set_coeff(2, 1.0);  // distance 3^s, far outside any sensible ball
    CHECK_THROWS_AS(solve_gluing(cplx(0.1, 0.0), far, id, cfg), std::domain_error);
}

TEST_CASE("perturbed input against the closed form and the pointwise oracle") {
    // xi+ = id + eps z^2, eta+ = id has the exact solution
    //   b = a, xi = xi+, eta(y) = y^2 / (y + eps a),
    // i.e. eta minus modes (-1)^{m+1} (eps a)^{m+1} y^{-m}.
    SolverConfig cfg = test_config(64, 5.0);
    const double eps = 0.03;
    const cplx a(0.01, 0.0);
    TruncatedLaurent xp = TruncatedLaurent::identity(cfg.trunc);
    xp.set_coeff(2, eps);
    const TruncatedLaurent ep = TruncatedLaurent::identity(cfg.trunc);

    const SolveResult sr = solve_gluing(a, xp, ep, cfg);
    REQUIRE(sr.stats.converged);
    CHECK(std::abs(sr.datum.b - a) < 1e-14);          // b / a = 1 exactly here
    CHECK(std::abs(sr.datum.b / a - 1.0) < 1e-13);    // matches 1 + O(eps^2) loosely
    auto [sx, sxm] = split(sr.datum.xi);
    CHECK(sobolev_norm(sxm, cfg.s) < 1e-13);          // no xi correction for this input

    const cplx q = eps * a;
    for (int m = 0; m <= 5; ++m) {
        const cplx expect = std::pow(-1.0, m + 1) * std::pow(q, m + 1);
        CHECK(std::abs(sr.datum.eta.coeff(-m) - expect) < 1e-13);
    }
    // leading behaviour quoted for the example: eta_-(y) ~ -eps a
    CHECK(std::abs(sr.datum.eta.coeff(0) + eps * a) < 1e-6);

    const OracleSolution oracle = pointwise_fixed_point(std::sqrt(std::abs(a)), xp, ep);
    CHECK(std::abs(oracle.lambda * a - sr.datum.b) < 1e-12);
    for (int m = 0; m <= 8; ++m) {
        CHECK(std::abs(oracle.eta_minus[static_cast<std::size_t>(m)] - sr.datum.eta.coeff(-m)) <
              1e-12);
        CHECK(std::abs(oracle.xi_minus[static_cast<std::size_t>(m)] - sr.datum.xi.coeff(-m)) <
              1e-12);
    }
}

TEST_CASE("random solves satisfy the contraction contracts") {
    SolverConfig cfg = test_config(64, 0.02);
    cfg.tol = 1e-11;
    cfg.max_iter = 25;
    std::mt19937_64 rng(25);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int t = 0; t < 20; ++t) {
        const TruncatedLaurent xp =
            random_plus_near_identity(cfg.trunc, cfg.s, 0.02 * (0.3 + 0.65 * unif(rng)), rng);
        const TruncatedLaurent ep =
            random_plus_near_identity(cfg.trunc, cfg.s, 0.02 * (0.3 + 0.65 * unif(rng)), rng);
        const cplx a = std::polar(1e-4 * std::pow(5e3, unif(rng)), 2.0 * pi * unif(rng));
        const SolveResult sr = solve_gluing(a, xp, ep, cfg);
        REQUIRE(sr.stats.converged);
        CHECK(sr.stats.iterations <= 25);
        CHECK(sr.stats.final_residual <= 1e-11);
        CHECK(sr.stats.newton_distance <= 2.0 * sr.stats.initial_residual + 1e-14);
        CHECK(sr.stats.continuity_lhs <= sr.stats.continuity_bound + 1e-14);
        CHECK(check_datum(sr.datum, cfg).ok);
    }
}

TEST_CASE("rotation equivariance is exact") {
    SolverConfig cfg = test_config(48, 0.05);
    std::mt19937_64 rng(26);
    const TruncatedLaurent xp = random_plus_near_identity(cfg.trunc, cfg.s, 0.03, rng);
    const TruncatedLaurent ep = random_plus_near_identity(cfg.trunc, cfg.s, 0.03, rng);
    const cplx a(0.07, 0.11);
    const SolveResult base = solve_gluing(a, xp, ep, cfg);
    REQUIRE(base.stats.converged);
    for (double theta : {0.3, 1.1, 2.9}) {
        const SolveResult rot = solve_gluing(a * std::polar(1.0, -2.0 * theta),
                                             rotate(xp, theta), rotate(ep, theta), cfg);
        REQUIRE(rot.stats.converged);
        CHECK(std::abs(rot.datum.b - std::polar(1.0, -2.0 * theta) * base.datum.b) < 1e-12);
        CHECK(rot.datum.xi.max_coeff_distance(rotate(base.datum.xi, theta)) < 1e-12);
        CHECK(rot.datum.eta.max_coeff_distance(rotate(base.datum.eta, theta)) < 1e-12);
    }
}

TEST_CASE("extension across the middle circle") {
    SolverConfig cfg = test_config(48, 0.05);
    const TruncatedLaurent id = TruncatedLaurent::identity(cfg.trunc);
    const cplx a(0.04, 0.03);
    const SolveResult sr = solve_gluing(a, id, id, cfg);

    // identity datum: the extension b / eta(a/x) is x itself
    const ExtensionResult ext = extend_across(sr.datum, cfg, 128, 4);
    for (const auto& [x, val] : ext.samples) CHECK(std::abs(val - x) < 1e-14);
    CHECK(ext.mismatch < 1e-14);

    std::mt19937_64 rng(27);
    const TruncatedLaurent xp = random_plus_near_identity(cfg.trunc, cfg.s, 0.03, rng);
    const TruncatedLaurent ep = random_plus_near_identity(cfg.trunc, cfg.s, 0.03, rng);
    const SolveResult gen = solve_gluing(cplx(0.05, -0.02), xp, ep, cfg);
    REQUIRE(gen.stats.converged);
    const ExtensionResult gext = extend_across(gen.datum, cfg, 512, 6);
    CHECK(gext.mismatch < 1e-10);

    // a corrupted b shows up as a reported discontinuity
    GluingDatum bad = gen.datum;
    bad.b *= 2.0;
    const ExtensionResult bext = extend_across(bad, cfg, 128, 4);
    CHECK(bext.mismatch > std::abs(bad.b) / 4.0);

    CHECK_THROWS_AS(extend_across(GluingDatum{cplx(0.0), id, id, cplx(0.0)}, cfg),
                    std::domain_error);
}

TEST_CASE("a priori closeness report") {
    SolverConfig cfg = test_config(48, 0.02);
    const TruncatedLaurent id = TruncatedLaurent::identity(cfg.trunc);
    const SolveResult idsolve = solve_gluing(cplx(0.09, 0.0), id, id, cfg);
    const AprioriReport idrep = apriori_check(idsolve.datum, cfg);
    CHECK(idrep.ratio_dev == 0.0);
    CHECK(idrep.xi_sup_dev < 1e-14);
    CHECK(idrep.eta_sup_dev < 1e-14);
    CHECK(idrep.ok);

    std::mt19937_64 rng(28);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        const TruncatedLaurent xp = random_plus_near_identity(cfg.trunc, cfg.s, 0.015, rng);
        const TruncatedLaurent ep = random_plus_near_identity(cfg.trunc, cfg.s, 0.015, rng);
        const cplx a = std::polar(0.002 + 0.1 * unif(rng), 2.0 * pi * unif(rng));
        const SolveResult sr = solve_gluing(a, xp, ep, cfg);
        REQUIRE(sr.stats.converged);
        const AprioriReport rep = apriori_check(sr.datum, cfg);
        CHECK(rep.in_derivation_regime);
        CHECK(rep.ok);
    }

    GluingDatum bad = idsolve.datum;
    bad.b *= 2.0;
    const AprioriReport brep = apriori_check(bad, cfg);
    CHECK_FALSE(brep.ok);  // |b/a - 1| = 1 against a near-zero bound
    CHECK(brep.ratio_dev > brep.ratio_bound);
}

TEST_CASE("uniqueness under restarts") {
    SolverConfig cfg = test_config(48, 0.02);
    const TruncatedLaurent id = TruncatedLaurent::identity(cfg.trunc);
    const SolveResult ids = solve_gluing(cplx(0.05, 0.02), id, id, cfg);
    CHECK(uniqueness_probe(ids.datum, cfg, 20, 123));

    std::mt19937_64 rng(29);
    const TruncatedLaurent xp = random_plus_near_identity(cfg.trunc, cfg.s, 0.015, rng);
    const TruncatedLaurent ep = random_plus_near_identity(cfg.trunc, cfg.s, 0.015, rng);
    const SolveResult gen = solve_gluing(cplx(-0.03, 0.04), xp, ep, cfg);
    REQUIRE(gen.stats.converged);
    CHECK(uniqueness_probe(gen.datum, cfg, 20, 321));
}

TEST_CASE("holomorphy of the solution operator") {
    // admit sizeable curvature so the conjugate-derivative signal sits well
    // above the solver-tolerance noise floor
    SolverConfig cfg = test_config(40, 30.0);
    cfg.tol = 1e-14;
    const TruncatedLaurent id = TruncatedLaurent::identity(cfg.trunc);

    // identity inputs: b = a exactly, so the conjugate derivative vanishes
    const HolomorphyReport lin = holomorphy_residual(cplx(0.1, 0.05), id, id, 1e-3, cfg);
    CHECK(lin.cr_residual_a < 1e-12);

    // curved inputs: the conjugate-derivative stencil shrinks like h^2
    TruncatedLaurent xp = id;
    xp.set_coeff(2, cplx(0.08, 0.02));
    xp.set_coeff(3, cplx(0.00, 0.04));
    TruncatedLaurent ep = id;
    ep.set_coeff(2, cplx(-0.06, 0.00));
    ep.set_coeff(4, cplx(0.03, -0.01));
    const cplx a0(0.12, 0.07);
    const double r1 = holomorphy_residual(a0, xp, ep, 1e-3, cfg).cr_residual_a;
    const double r2 = holomorphy_residual(a0, xp, ep, 5e-4, cfg).cr_residual_a;
    CHECK(r1 / r2 == Approx(4.0).margin(1.0));

    // continuity at the node: the solution norm decays linearly in |a|
    const ZeroLimitReport zl = zero_limit_check(xp, ep, cfg);
    CHECK(zl.ok);
}

TEST_CASE("induced coordinate map") {
    SolverConfig cfg = test_config(40, 30.0);
    cfg.tol = 1e-14;
    const TruncatedLaurent id = TruncatedLaurent::identity(cfg.trunc);
    const GluingFamily trivial = [&](cplx) { return std::make_pair(id, id); };

    for (const auto& [x, y] : {std::pair<cplx, cplx>{cplx(0.3, 0.1), cplx(0.2, -0.4)},
                               {cplx(-0.5, 0.0), cplx(0.0, 0.6)}}) {
        const auto [u, v] = glue_map_eval(x, y, trivial, cfg);
        CHECK(std::abs(u - x) < 1e-13);
        CHECK(std::abs(v - y) < 1e-13);
    }

    TruncatedLaurent xp = id;
    xp.set_coeff(2, cplx(0.05, 0.01));
    TruncatedLaurent ep = id;
    ep.set_coeff(3, cplx(0.0, 0.03));
    const GluingFamily fam = [&](cplx) { return std::make_pair(xp, ep); };

    // on the axis the second component collapses to the node
    const auto [u0, v0] = glue_map_eval(cplx(0.4, 0.1), cplx(0.0), fam, cfg);
    CHECK(v0 == cplx(0.0));
    CHECK(std::abs(u0 - evaluate(xp, cplx(0.4, 0.1))) < 1e-14);

    // near-node decay of the second component
    const double c = sobolev_embedding_constant(cfg.s);
    const double delta = std::max(sobolev_norm(xp - id, cfg.s), sobolev_norm(ep - id, cfg.s));
    for (double ay : {1e-2, 1e-4, 1e-6}) {
        const cplx y(ay, ay);
        const auto [u, v] = glue_map_eval(cplx(0.3, 0.0), y, fam, cfg);
        CHECK(std::abs(v) <= (c * delta + 1.0) * std::abs(y) * (1.0 + 1e-9));
    }

    // joint holomorphy through centered differences in x and y
    auto component = [&](cplx x, cplx y) { return glue_map_eval(x, y, fam, cfg); };
    const cplx x0(0.35, 0.15), y0(0.25, -0.2);
    auto cr_norm = [&](double h, bool in_x) {
        auto at = [&](cplx dx) {
            const cplx x = in_x ? x0 + dx : x0;
            const cplx y = in_x ? y0 : y0 + dx;
            return component(x, y);
        };
        const auto pr = at(cplx(h, 0)), mr = at(cplx(-h, 0));
        const auto pi_ = at(cplx(0, h)), mi = at(cplx(0, -h));
        const cplx dx1 = (pr.first - mr.first) / (2.0 * h);
        const cplx dy1 = (pi_.first - mi.first) / (2.0 * h);
        const cplx dx2 = (pr.second - mr.second) / (2.0 * h);
        const cplx dy2 = (pi_.second - mi.second) / (2.0 * h);
        return std::sqrt(std::norm(0.5 * (dx1 + cplx(0, 1) * dy1)) +
                         std::norm(0.5 * (dx2 + cplx(0, 1) * dy2)));
    };
    for (bool in_x : {true, false}) {
        const double h1 = cr_norm(2e-3, in_x);
        const double h2 = cr_norm(1e-3, in_x);
        CHECK(h1 / h2 == Approx(4.0).margin(1.2));
    }
}

TEST_CASE("measured estimate probes on random data") {
    std::mt19937_64 rng(31);
    SolverConfig cfg = test_config(32, 0.05);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int t = 0; t < 50; ++t) {
        const double r = 0.05 + 0.9 * unif(rng);
        const TruncatedLaurent xp = random_plus_near_identity(cfg.trunc, cfg.s, 0.03, rng);
        const TruncatedLaurent ep = random_plus_near_identity(cfg.trunc, cfg.s, 0.03, rng);
        CHECK(approximate_solution_probe(r, xp, ep, cfg.s).ok);

        const TruncatedLaurent hx = testutil::random_series(cfg.trunc, cfg.s, rng);
        const TruncatedLaurent he = testutil::random_series(cfg.trunc, cfg.s, rng);
        CHECK(quadratic_estimate_probe(r, xp, ep, hx, he, cfg.s).ok);
    }
}
