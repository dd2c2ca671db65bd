#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numeric>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "nodal/io.hpp"
#include "nodal/local_model.hpp"
#include "nodal/moduli.hpp"
#include "nodal/plumbing.hpp"
#include "nodal/report.hpp"
#include "nodal/signature.hpp"

namespace nodal::cli {

// exit codes: 0 ok, 2 usage, 3 bad input, 4 numeric failure
inline constexpr int exit_ok = 0;
inline constexpr int exit_usage = 2;
inline constexpr int exit_input = 3;
inline constexpr int exit_numeric = 4;

namespace detail {

inline cplx parse_complex(const std::string& s) {
    const std::size_t comma = s.find(',');
    try {
        if (comma == std::string::npos) return cplx(std::stod(s), 0.0);
        return cplx(std::stod(s.substr(0, comma)), std::stod(s.substr(comma + 1)));
    } catch (const std::exception&) {
        throw std::invalid_argument("cannot parse complex value '" + s + "' (want re,im)");
    }
}

inline int worker_count() {
    if (const char* env = std::getenv("NODAL_MODULI_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}

inline void emit(const RunReport& rep, const std::string& out_path) {
    const std::string text = rep.to_json().dump(2);
    if (out_path.empty()) {
        std::cout << text << "\n";
    } else {
        std::ofstream out(out_path);
        if (!out) throw std::invalid_argument("cannot write " + out_path);
        out << text << "\n";
    }
}

inline TruncatedLaurent random_series(int trunc, double s, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    TruncatedLaurent f(trunc);
    for (int n = -trunc; n <= trunc; ++n)
        f.set_coeff(n, cplx(gauss(rng), gauss(rng)) * std::pow(1.0 + std::abs(n), -(s + 1.0)));
    return f;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// per-module invariant suites

inline void append_cli_roundtrip_check(RunReport& rep) {
    const io::json once = rep.outputs;
    const std::string d1 = once.dump();
    const io::json again = io::json::parse(d1);
    const bool ok = again.dump() == d1;
    rep.add("json_round_trip", ok, ok ? 1.0 : 0.0, 1.0, "re-serialization is bit-identical");
}

inline void append_signature_checks(RunReport& rep, const std::vector<SignatureGraph>& graphs,
                                    std::mt19937_64& rng, bool from_enumeration, int g, int n) {
    bool genus_inv = true;
    double worst = 0.0;
    for (const SignatureGraph& gr : graphs) {
        const int base = arithmetic_genus(gr);
        for (int t = 0; t < 5; ++t) {
            std::vector<int> perm(gr.vertices.size());
            std::iota(perm.begin(), perm.end(), 0);
            std::shuffle(perm.begin(), perm.end(), rng);
            SignatureGraph rel;
            rel.n_marks = gr.n_marks;
            rel.vertices.resize(gr.vertices.size());
            for (std::size_t v = 0; v < gr.vertices.size(); ++v)
                rel.vertices[static_cast<std::size_t>(perm[v])] = gr.vertices[v];
            for (const Edge& e : gr.edges) rel.edges.emplace_back(perm[e.u], perm[e.v]);
            if (arithmetic_genus(rel) != base || !signatures_isomorphic(gr, rel)) genus_inv = false;
        }
    }
    rep.add("genus_isomorphism_invariance", genus_inv, worst, 0.0,
            "arithmetic genus fixed under random relabelings");

    bool agree = true;
    for (const SignatureGraph& gr : graphs) {
        if (!is_connected(gr)) continue;
        const IndexReport ir = fredholm_index(gr, 7, true);
        if (ir.index != fredholm_index_via_genus(gr, 7)) agree = false;
    }
    rep.add("index_formula_agreement", agree, 0.0, 0.0,
            "per-vertex index sum equals the genus form");

    bool enum_ok = true;
    std::string note = "outputs stable, of type, pairwise non-isomorphic";
    std::vector<SignatureGraph> enum_set;
    int eg = g, en = n;
    if (from_enumeration) {
        enum_set = graphs;
    } else {
        eg = 0;
        en = 4;
        enum_set = enumerate_stable_signatures(0, 4).graphs;
        note += " (spot enumeration at (0, 4))";
    }
    for (const SignatureGraph& gr : enum_set)
        if (!is_stable(gr) || !is_type(gr, eg, en)) enum_ok = false;
    for (std::size_t i = 0; i < enum_set.size() && enum_ok; ++i)
        for (std::size_t j = i + 1; j < enum_set.size(); ++j)
            if (signatures_isomorphic(enum_set[i], enum_set[j])) enum_ok = false;
    rep.add("enumeration_valid", enum_ok, static_cast<double>(enum_set.size()), 0.0, note);

    bool index_zero = true;
    for (const SignatureGraph& gr : enum_set) {
        const IndexReport ir = fredholm_index(gr, deformation_dim(eg, en), true);
        if (ir.index != 0) index_zero = false;
    }
    rep.add("index_zero_at_moduli_dimension", index_zero, 0.0, 0.0,
            "index vanishes over the full deformation space");
}

inline void append_hardy_checks(RunReport& rep, double s, std::mt19937_64& rng, int trunc = 32,
                                int trials = 20) {
    bool homog = true, tri = true;
    for (int t = 0; t < trials; ++t) {
        const TruncatedLaurent f = detail::random_series(trunc, s, rng);
        const TruncatedLaurent g = detail::random_series(trunc, s, rng);
        const cplx aa(std::cos(0.7 * t), std::sin(0.3 * t));
        const double lhs = sobolev_norm(aa * f, s);
        const double rhs = std::abs(aa) * sobolev_norm(f, s);
        if (std::abs(lhs - rhs) > 1e-12 * (1.0 + rhs)) homog = false;
        if (sobolev_norm(f + g, s) > sobolev_norm(f, s) + sobolev_norm(g, s) + 1e-12) tri = false;
    }
    rep.add("norm_homogeneity_triangle", homog && tri, 0.0, 0.0,
            "absolute homogeneity and triangle inequality on random series");

    bool split_ok = true;
    for (int t = 0; t < trials; ++t) {
        const TruncatedLaurent f = detail::random_series(trunc, s, rng);
        auto [p, m] = split(f);
        split_ok = split_ok && p.plus() == p && m.minus() == m && (p + m) == f;
        cplx inner = 0.0;
        for (int nn = -trunc; nn <= trunc; ++nn) inner += p.coeff(nn) * std::conj(m.coeff(nn));
        split_ok = split_ok && inner == cplx(0.0);
    }
    rep.add("split_projection_orthogonality", split_ok, 0.0, 0.0,
            "mode split is an exact orthogonal projection pair");

    double iso_worst = 0.0;
    for (double rr : {0.1, 0.5, 0.9}) {
        for (int t = 0; t < 5; ++t) {
            const TruncatedLaurent f = detail::random_series(trunc, s, rng);
            const double a = sobolev_norm(rescale(f, rr), s);
            const double b = sobolev_norm(f, SobolevParams{s, rr});
            iso_worst = std::max(iso_worst, std::abs(a - b) / (1.0 + b));
        }
    }
    rep.add("rescale_isometry", iso_worst <= 1e-12, iso_worst, 1e-12,
            "conjugation by the rescaling map is an isometry");

    bool bounds_ok = true;
    const double C = product_constant(s);
    for (int t = 0; t < trials; ++t) {
        const TruncatedLaurent f = detail::random_series(trunc, s, rng);
        const TruncatedLaurent g = detail::random_series(trunc, s, rng);
        if (!sup_annulus_bound_check(f, 0.3, 1.0, s, 512).ok) bounds_ok = false;
        const double lhs = sobolev_norm(product(f, g), s);
        if (lhs > C * sobolev_norm(f, s) * sobolev_norm(g, s) * (1.0 + 1e-12)) bounds_ok = false;
    }
    rep.add("embedding_product_bounds", bounds_ok, 0.0, 0.0,
            "boundary sup and product estimates with the explicit constants");
}

inline void append_solve_checks(RunReport& rep, const SolveResult& sr,
                                const TruncatedLaurent& xi_plus, const TruncatedLaurent& eta_plus,
                                const SolverConfig& cfg, std::mt19937_64& rng) {
    const SolveStats& st = sr.stats;
    rep.add("newton_distance_bound", st.newton_distance <= 2.0 * st.initial_residual + 1e-14,
            st.newton_distance, 2.0 * st.initial_residual,
            "distance from the starting triple vs twice its residual");
    rep.add("first_order_solution_bound", st.continuity_lhs <= st.continuity_bound + 1e-14,
            st.continuity_lhs, st.continuity_bound,
            "minus parts and b/a deviation scale linearly in the inputs");

    if (sr.datum.a != cplx(0.0)) {
        const double r = std::sqrt(std::abs(sr.datum.a));
        const double theta = std::arg(sr.datum.a) / 2.0;
        const EstimateProbe ap =
            approximate_solution_probe(r, rotate(xi_plus, theta), rotate(eta_plus, theta), cfg.s);
        rep.add("approximate_solution_bound", ap.ok, ap.lhs, ap.rhs,
                "starting-triple residual under the explicit constant");

        const EstimateProbe qp = quadratic_estimate_probe(
            r, rotate(sr.datum.xi, theta), rotate(sr.datum.eta, theta),
            detail::random_series(cfg.trunc, cfg.s, rng), detail::random_series(cfg.trunc, cfg.s, rng),
            cfg.s);
        rep.add("quadratic_estimate", qp.ok, qp.lhs, qp.rhs,
                "derivative deviation from the frozen linearization");

        // re-solve at a rotated parameter; outputs must rotate along
        const double phi = 0.7123;
        const SolveResult rs = solve_gluing(sr.datum.a * std::polar(1.0, -2.0 * phi),
                                            rotate(xi_plus, phi), rotate(eta_plus, phi), cfg);
        double dev = std::abs(rs.datum.b - std::polar(1.0, -2.0 * phi) * sr.datum.b);
        dev = std::max(dev, rs.datum.xi.max_coeff_distance(rotate(sr.datum.xi, phi)));
        dev = std::max(dev, rs.datum.eta.max_coeff_distance(rotate(sr.datum.eta, phi)));
        rep.add("rotation_equivariance", rs.stats.converged && dev <= 1e-12, dev, 1e-12,
                "solving a rotated parameter rotates the solution");
    } else {
        rep.add("approximate_solution_bound", true, 0.0, 0.0, "trivial at a = 0");
        rep.add("quadratic_estimate", true, 0.0, 0.0, "trivial at a = 0");
        rep.add("rotation_equivariance", true, 0.0, 0.0, "trivial at a = 0");
    }

    const DatumCheck dc = check_datum(sr.datum, cfg);
    rep.add("datum_invariants", dc.ok, dc.residual, cfg.tol * 10.0,
            "sampled gluing residual and unit winding numbers");
}

inline void append_plumbing_checks(RunReport& rep, const SolverConfig& cfg, std::mt19937_64& rng,
                                   const NodalExtension* ext) {
    SolverConfig quick = cfg;
    quick.trunc = std::min(cfg.trunc, 32);
    const TruncatedLaurent id = TruncatedLaurent::identity(quick.trunc);
    const NodalExtension trivial = nodal_extend(id, id, quick, 0.25, 3, 8);
    double dev = std::abs(trivial.zeta.coeff(1) - 1.0);
    for (int k = 0; k <= quick.trunc; ++k)
        if (k != 1) dev = std::max(dev, std::abs(trivial.zeta.coeff(k)));
    for (const auto& smp : trivial.grid) {
        dev = std::max(dev, std::abs(smp.b - smp.z));
        dev = std::max(dev, sobolev_norm(smp.alpha, quick.s));
        dev = std::max(dev, sobolev_norm(smp.beta, quick.s));
    }
    rep.add("trivial_germ_identity", dev <= 1e-12, dev, 1e-12,
            "identity germs extend to the identity coordinate change");

    if (ext != nullptr) {
        const ExtensionInvariants a = check_extension(*ext, 16);
        const ExtensionInvariants b = check_extension(*ext, 32);
        const double worst = std::max({a.germ_mismatch, a.product_residual, b.germ_mismatch,
                                       b.product_residual, a.zeta_origin, b.zeta_origin});
        rep.add("extension_invariants_grid_refined", a.ok && b.ok, worst, 1e-9,
                "defining identities hold on the grid and its refinement");
    } else {
        const ExtensionInvariants a = check_extension(trivial, 12);
        rep.add("extension_invariants_grid_refined", a.ok, a.product_residual, 1e-9,
                "defining identities on the spot extension");
    }

    bool law = true;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int t = 0; t < 25; ++t) {
        const double r1 = 0.2 + 0.5 * unif(rng);
        const AnnulusSpec a1{r1, r1 + 0.2 + 0.5 * unif(rng)};
        TruncatedLaurent f(8);
        const cplx c = std::polar(0.5 + unif(rng), 2.0 * pi * unif(rng));
        f.set_coeff(1, c);
        f.set_coeff(2, c * 0.02 * unif(rng));
        double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
        for (double rho : {a1.r, a1.R})
            for (int i = 0; i < 256; ++i) {
                const double m = std::abs(evaluate(f, std::polar(rho, 2.0 * pi * i / 256)));
                lo = std::min(lo, m);
                hi = std::max(hi, m);
            }
        const AnnulusSpec a2{lo * (1.0 - 1e-9), hi * (1.0 + 1e-9)};
        const EmbeddingCheck ec = embedding_modulus_check(f, a1, a2, 256);
        if (!ec.modulus_law_holds) law = false;
    }
    rep.add("modulus_law_suite", law, 0.0, 0.0,
            "no violations of the annulus modulus law on verified embeddings");
}

inline void append_moduli_checks(RunReport& rep, const DegenerationPath& path,
                                 const BubbleTree& tree) {
    const int n = static_cast<int>(path.points.size());
    const bool st = is_stable(tree.graph) && is_type(tree.graph, 0, n);
    rep.add("limit_tree_stable_type", st, 0.0, 0.0, "limit is a stable genus-0 tree");

    bool quartets = true;
    for (int i = 0; i < n && quartets; ++i)
        for (int j = i + 1; j < n && quartets; ++j)
            for (int k = j + 1; k < n && quartets; ++k)
                for (int l = k + 1; l < n && quartets; ++l) {
                    const RationalPath cr = nodal::detail::cross_ratio_path(
                        path.points[static_cast<std::size_t>(i)],
                        path.points[static_cast<std::size_t>(j)],
                        path.points[static_cast<std::size_t>(k)],
                        path.points[static_cast<std::size_t>(l)]);
                    const SpherePoint lim = cr.limit();
                    const auto want = tree_quartet_value(tree, i + 1, j + 1, k + 1, l + 1);
                    const bool deg = lim.inf || lim.v == cplx(0.0) || lim.v == cplx(1.0);
                    if (want.has_value() != deg) {
                        quartets = false;
                    } else if (want.has_value()) {
                        if (!(lim == *want)) quartets = false;
                    }
                }
    rep.add("quartet_split_cross_validation", quartets, 0.0, 0.0,
            "cross-ratio limits are 0/1/inf exactly at edge-separated splits");

    bool scale_inv = true;
    for (double c : {2.0, 0.5}) {
        const BubbleTree other = limit_signature(apply_transform(path, PathTransform::scale(c)));
        if (!signatures_isomorphic(tree.graph, other.graph)) scale_inv = false;
    }
    rep.add("parameter_scale_invariance", scale_inv, 0.0, 0.0,
            "limit unchanged under t -> ct");
}

// ---------------------------------------------------------------------------
// subcommand handlers

/// Built-in battery: the exact anchors always, randomized spot suites
/// unless quick is set.
inline void run_selftest(RunReport& rep, std::mt19937_64& rng, bool quick) {
    // exact combinatorial anchors
    {
        SignatureGraph g;
        g.n_marks = 3;
        g.vertices = {VertexLabel{0, {1, 2, 3}}};
        bool ok = special_point_count(g, 0) == 3 && is_stable(g) && is_type(g, 0, 3);
        SignatureGraph loop;
        loop.n_marks = 1;
        loop.vertices = {VertexLabel{0, {1}}};
        loop.edges = {Edge(0, 0)};
        ok = ok && special_point_count(loop, 0) == 3 && betti_numbers(loop).b1 == 1 &&
             arithmetic_genus(loop) == 1 && is_stable(loop);
        SignatureGraph torus;
        torus.n_marks = 0;
        torus.vertices = {VertexLabel{1, {}}};
        ok = ok && !is_stable(torus);
        ok = ok && deformation_dim(0, 3) == 0 && deformation_dim(1, 1) == 1 &&
             deformation_dim(2, 0) == 3;
        SignatureGraph g2;
        g2.n_marks = 0;
        g2.vertices = {VertexLabel{2, {}}};
        ok = ok && fredholm_index(g2, 3, true).index == 0;
        ok = ok && enumerate_stable_signatures(0, 3).graphs.size() == 1 &&
             enumerate_stable_signatures(0, 4).graphs.size() == 4 &&
             enumerate_stable_signatures(1, 1).graphs.size() == 2;
        rep.add("signature_anchors", ok, 0.0, 0.0, "special points, genus, stability, counts");
    }
    // exact series anchors
    {
        const int N = 16;
        const double s = 4.0;
        const TruncatedLaurent id = TruncatedLaurent::identity(N);
        bool ok = std::abs(sobolev_norm(id, SobolevParams{s, 0.37}) - std::pow(2.0, s)) < 1e-13;
        ok = ok && sobolev_norm(TruncatedLaurent(N), s) == 0.0;
        auto [p, m] = split(TruncatedLaurent::constant(N, 1.0));
        ok = ok && p.is_zero() && m.coeff(0) == cplx(1.0);
        ok = ok && rescale(id, 0.25) == id;
        TruncatedLaurent zz = product(id, id);
        ok = ok && zz.coeff(2) == cplx(1.0);
        ok = ok && std::abs(evaluate(id, cplx(0.5, 0.0)) - cplx(0.5, 0.0)) == 0.0;
        std::vector<cplx> circle(64), twice(64);
        for (int i = 0; i < 64; ++i) {
            circle[i] = std::polar(1.0, 2.0 * pi * i / 64);
            twice[i] = std::polar(1.0, 4.0 * pi * i / 64);
        }
        ok = ok && winding_number(circle) == 1 && winding_number(twice) == 2;
        rep.add("hardy_anchors", ok, 0.0, 0.0, "norms, split, rescale, product, winding");
    }
    // exact solver anchors
    {
        SolverConfig cfg;
        cfg.trunc = 24;
        cfg.delta = 0.1;
        const TruncatedLaurent id = TruncatedLaurent::identity(cfg.trunc);
        double worst = 0.0;
        for (double rr : {0.9, 0.5, 0.1, 0.01})
            worst = std::max(worst, sobolev_norm(gluing_residual(rr, 1.0, id, id), cfg.s));
        bool ok = worst == 0.0;
        const SolveResult at0 = solve_gluing(cplx(0.0), id, id, cfg);
        ok = ok && at0.datum.b == cplx(0.0) && at0.datum.xi == id && at0.datum.eta == id;
        const SolveResult sr = solve_gluing(cplx(0.01, 0.0), id, id, cfg);
        ok = ok && sr.stats.converged && std::abs(sr.datum.b - cplx(0.01, 0.0)) < 1e-15;
        const TruncatedLaurent mlh = gluing_linearization(0.5, cplx(2.0, 1.0),
                                                          TruncatedLaurent(cfg.trunc),
                                                          TruncatedLaurent(cfg.trunc));
        ok = ok && mlh.coeff(0) == cplx(-2.0, -1.0);
        rep.add("solver_anchors", ok, worst, 0.0,
                "identity residual vanishes, a = 0 exact, b = a on identity inputs");
    }
    // exact plumbing and limit anchors
    {
        bool ok = std::abs(modulus(AnnulusSpec{0.1, 1.0}) - std::log(10.0)) < 1e-15;
        ok = ok && std::abs(core_geodesic_length(AnnulusSpec{0.1, 1.0}) -
                            2.0 * pi * pi / std::log(10.0)) < 1e-12;
        const NodeFiber nf = node_fiber(cplx(0.1, 0.0));
        ok = ok && !nf.is_node && nf.annulus.r == 0.1;
        ok = ok && node_fiber(cplx(0.0)).is_node;

        DegenerationPath path;
        path.points = {RationalPath::constant(0.0), RationalPath::constant(1.0),
                       RationalPath::infinity(),
                       RationalPath::polynomial(nodal::detail::Poly{{cplx(0.0), cplx(1.0)}})};
        const BubbleTree tree = limit_signature(path);
        ok = ok && tree.graph.vertices.size() == 2 && tree.graph.edges.size() == 1;
        SignatureGraph expect;
        expect.n_marks = 4;
        expect.vertices = {VertexLabel{0, {2, 3}}, VertexLabel{0, {1, 4}}};
        expect.edges = {Edge(0, 1)};
        ok = ok && signatures_isomorphic(tree.graph, expect);
        const SpherePoint lam{cplx(0.3, 0.4), false};
        const SpherePoint got = cross_ratio(SpherePoint{cplx(0.0), false},
                                            SpherePoint{cplx(1.0), false},
                                            SpherePoint::infinity(), lam);
        ok = ok && !got.inf && std::abs(got.v - lam.v) == 0.0;
        rep.add("plumbing_moduli_anchors", ok, 0.0, 0.0,
                "annulus closed forms, node fibers, four-point limit tree");
    }

    if (quick) return;

    append_hardy_checks(rep, 4.0, rng, 24, 10);
    {
        SolverConfig cfg;
        cfg.trunc = 32;
        cfg.delta = 0.02;
        cfg.max_iter = 25;
        bool ok = true;
        for (int t = 0; t < 5; ++t) {
            const TruncatedLaurent xp = random_plus_near_identity(cfg.trunc, cfg.s, 0.015, rng);
            const TruncatedLaurent ep = random_plus_near_identity(cfg.trunc, cfg.s, 0.015, rng);
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            const cplx a = std::polar(1e-4 * std::pow(5e3, unif(rng)), 2.0 * pi * unif(rng));
            const SolveResult sr = solve_gluing(a, xp, ep, cfg);
            ok = ok && sr.stats.converged &&
                 sr.stats.newton_distance <= 2.0 * sr.stats.initial_residual + 1e-14 &&
                 sr.stats.continuity_lhs <= sr.stats.continuity_bound + 1e-14;
            if (t == 0) ok = ok && uniqueness_probe(sr.datum, cfg, 3, 99);
        }
        rep.add("solver_random_suite", ok, 0.0, 0.0,
                "contraction, distance bound and uniqueness on random inputs");
    }
    {
        SolverConfig cfg;
        cfg.trunc = 32;
        cfg.delta = 0.1;
        TruncatedLaurent xi0 = TruncatedLaurent::identity(cfg.trunc);
        xi0.set_coeff(2, cplx(0.02, 0.01));
        const TruncatedLaurent eta0 = TruncatedLaurent::identity(cfg.trunc);
        const NodalExtension ext = nodal_extend(xi0, eta0, cfg, 0.25, 4, 8);
        const ExtensionInvariants inv = check_extension(ext, 16);
        rep.add("extension_random_suite", inv.ok,
                std::max(inv.product_residual, inv.germ_mismatch), 1e-9,
                "smoothing identities for a perturbed germ");
    }
}

namespace detail {

struct CommonOpts {
    std::string out;
    std::uint64_t seed = 12345;
    std::string config_path;
};

inline SolverConfig load_config(const CommonOpts& opts) {
    if (opts.config_path.empty()) return SolverConfig{};
    return io::config_from_text(io::load_text(opts.config_path));
}

inline std::string join_args(const std::vector<std::string>& args) {
    std::string s = "nodal";
    for (const std::string& a : args) s += " " + a;
    return s;
}

}  // namespace detail

inline int run(const std::vector<std::string>& args) {
    CLI::App app{"desk-scale computations for stable marked nodal Riemann surfaces"};
    app.require_subcommand(1);

    detail::CommonOpts common;
    app.add_option("--out", common.out, "write the run report to this file instead of stdout");
    app.add_option("--seed", common.seed, "seed for randomized check suites");
    app.add_option("--config", common.config_path, "solver config (JSON or flat TOML)");

    // --- signature ---------------------------------------------------------
    auto* sig = app.add_subcommand("signature", "signature-graph combinatorics");
    sig->require_subcommand(1);
    std::string sig_in;
    int sig_g = 0, sig_n = 0, sig_dim_base = 0;
    bool sig_not_regular = false;
    auto add_sig_sub = [&](const char* name, const char* desc, bool needs_in, bool needs_gn,
                           bool needs_dim) {
        auto* sub = sig->add_subcommand(name, desc);
        if (needs_in) sub->add_option("--in", sig_in, "signature graph JSON file")->required();
        if (needs_gn) {
            sub->add_option("--g", sig_g, "arithmetic genus")->required();
            sub->add_option("--n", sig_n, "number of marks")->required();
        }
        if (needs_dim) {
            sub->add_option("--dim-base", sig_dim_base, "base dimension")->required();
            sub->add_flag("--not-regular", sig_not_regular,
                          "index is only a lower bound (no transversality)");
        }
        return sub;
    };
    auto* sig_genus = add_sig_sub("genus", "arithmetic genus of a graph", true, false, false);
    auto* sig_stable = add_sig_sub("stable", "stability of a graph", true, false, false);
    auto* sig_type = add_sig_sub("type", "type (g, n) membership", true, true, false);
    auto* sig_enum = add_sig_sub("enumerate", "all stable signatures of type (g, n)", false, true,
                                 false);
    auto* sig_index = add_sig_sub("index", "Fredholm index count", true, false, true);

    // --- hardy -------------------------------------------------------------
    auto* hardy = app.add_subcommand("hardy", "truncated Laurent/Hardy arithmetic");
    hardy->require_subcommand(1);
    std::string hardy_in, hardy_in2;
    double hardy_r = 1.0, hardy_s = 4.0;
    auto add_hardy_sub = [&](const char* name, const char* desc, bool second) {
        auto* sub = hardy->add_subcommand(name, desc);
        sub->add_option("--in", hardy_in, "series JSON file")->required();
        if (second) sub->add_option("--in2", hardy_in2, "second series JSON file")->required();
        sub->add_option("--r", hardy_r, "radius in (0, 1]");
        sub->add_option("--s", hardy_s, "Sobolev weight");
        return sub;
    };
    auto* hardy_norm = add_hardy_sub("norm", "weighted norm", false);
    auto* hardy_split = add_hardy_sub("split", "plus/minus mode split", false);
    auto* hardy_rescale = add_hardy_sub("rescale", "conjugate by z -> rz", false);
    auto* hardy_product = add_hardy_sub("product", "Cauchy product", true);

    // --- glue --------------------------------------------------------------
    auto* glue = app.add_subcommand("glue", "standard-node gluing solver");
    glue->require_subcommand(1);
    std::string glue_a = "0,0", glue_xi, glue_eta, glue_grid, glue_in;
    auto* glue_solve = glue->add_subcommand("solve", "solve the gluing equation");
    glue_solve->add_option("--a", glue_a, "gluing parameter re,im")->required();
    glue_solve->add_option("--xi", glue_xi, "plus-mode xi series JSON (default: identity)");
    glue_solve->add_option("--eta", glue_eta, "plus-mode eta series JSON (default: identity)");
    glue_solve->add_option("--grid", glue_grid, "JSON array of [re,im] parameters to sweep");
    auto* glue_check = glue->add_subcommand("check", "verify a stored gluing datum");
    glue_check->add_option("--in", glue_in, "gluing datum JSON file")->required();

    // --- plumb -------------------------------------------------------------
    auto* plumb = app.add_subcommand("plumb", "node smoothing and annulus invariants");
    plumb->require_subcommand(1);
    std::string plumb_xi0, plumb_eta0, plumb_a = "0,0";
    auto* plumb_extend = plumb->add_subcommand("extend", "coordinate change across a node");
    plumb_extend->add_option("--xi0", plumb_xi0, "first germ JSON file")->required();
    plumb_extend->add_option("--eta0", plumb_eta0, "second germ JSON file")->required();
    auto* plumb_annulus = plumb->add_subcommand("annulus", "standard-node fiber geometry");
    plumb_annulus->add_option("--a", plumb_a, "gluing parameter re,im")->required();

    // --- degenerate --------------------------------------------------------
    auto* degen = app.add_subcommand("degenerate", "genus-0 limit signature of a point path");
    std::string degen_path, degen_csv;
    degen->add_option("--path", degen_path, "degeneration path JSON file")->required();
    degen->add_option("--emit-csv", degen_csv, "write a per-t trace of cross-ratios");

    // --- selftest ----------------------------------------------------------
    auto* selftest = app.add_subcommand("selftest", "built-in verification battery");
    bool quick = false;
    selftest->add_flag("--quick", quick, "only the exact anchor checks");

    // parse
    std::vector<char*> argv;
    std::string prog = "nodal";
    argv.push_back(prog.data());
    std::vector<std::string> storage = args;
    for (std::string& a : storage) argv.push_back(a.data());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return exit_ok;
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return exit_usage;
    }

    WallClock clock;
    RunReport rep;
    rep.command = detail::join_args(args);
    std::mt19937_64 rng(common.seed);

    try {
        // ------------------------------------------------ signature
        if (sig->parsed()) {
            SignatureGraph g;
            std::vector<SignatureGraph> context;
            bool from_enum = false;
            if (!sig_in.empty()) {
                const io::json j = io::load_json(sig_in);
                rep.inputs_digest = io::digest(j);
                g = io::signature_from_json(j);
                context.push_back(g);
            }
            if (sig_genus->parsed()) {
                const BettiNumbers b = betti_numbers(g);
                rep.outputs = {{"arithmetic_genus", arithmetic_genus(g)},
                               {"b0", b.b0},
                               {"b1", b.b1}};
            } else if (sig_stable->parsed()) {
                rep.outputs = {{"stable", is_stable(g)}};
            } else if (sig_type->parsed()) {
                rep.outputs = {{"is_type", is_type(g, sig_g, sig_n)},
                               {"g", sig_g},
                               {"n", sig_n}};
            } else if (sig_enum->parsed()) {
                const EnumerationResult er = enumerate_stable_signatures(sig_g, sig_n);
                io::json arr = io::json::array();
                for (const SignatureGraph& gr : er.graphs) arr.push_back(io::to_json(gr));
                rep.outputs = {{"count", er.graphs.size()}, {"signatures", arr}};
                if (!er.diagnostic.empty()) rep.outputs["diagnostic"] = er.diagnostic;
                context = er.graphs;
                from_enum = !er.graphs.empty();
                rep.inputs_digest = io::digest(io::json{{"g", sig_g}, {"n", sig_n}});
            } else if (sig_index->parsed()) {
                const IndexReport ir = fredholm_index(g, sig_dim_base, !sig_not_regular);
                rep.outputs = {{"index", ir.index},
                               {"regular_nodal", ir.regular_nodal},
                               {"exact", ir.regular_nodal},
                               {"dim_base", sig_dim_base}};
            }
            append_signature_checks(rep, context, rng, from_enum, sig_g, sig_n);
        }

        // ------------------------------------------------ hardy
        if (hardy->parsed()) {
            const io::json j = io::load_json(hardy_in);
            rep.inputs_digest = io::digest(j);
            const TruncatedLaurent f = io::laurent_from_json(j);
            const SobolevParams prm{hardy_s, hardy_r};
            if (hardy_norm->parsed()) {
                rep.outputs = {{"norm", sobolev_norm(f, prm)},
                               {"tail_fraction", tail_norm_fraction(f, prm)}};
            } else if (hardy_split->parsed()) {
                auto [p, m] = split(f);
                rep.outputs = {{"plus", io::to_json(p)}, {"minus", io::to_json(m)}};
            } else if (hardy_rescale->parsed()) {
                rep.outputs = {{"series", io::to_json(rescale(f, hardy_r))}};
            } else if (hardy_product->parsed()) {
                const TruncatedLaurent f2 = io::laurent_from_json(io::load_json(hardy_in2));
                const ProductResult pr = product_full(f, f2);
                rep.outputs = {{"series", io::to_json(pr.series)},
                               {"dropped_tail", pr.dropped_tail}};
            }
            append_hardy_checks(rep, hardy_s, rng);
        }

        // ------------------------------------------------ glue
        if (glue->parsed()) {
            SolverConfig cfg = detail::load_config(common);
            if (cfg.delta == 0.0) cfg.delta = 0.05;  // practical default input radius
            if (glue_solve->parsed()) {
                const TruncatedLaurent id = TruncatedLaurent::identity(cfg.trunc);
                const TruncatedLaurent xi =
                    glue_xi.empty() ? id : io::laurent_from_json(io::load_json(glue_xi));
                const TruncatedLaurent eta =
                    glue_eta.empty() ? id : io::laurent_from_json(io::load_json(glue_eta));
                rep.inputs_digest =
                    io::digest(io::json{{"xi", io::to_json(xi)}, {"eta", io::to_json(eta)}});

                if (!glue_grid.empty()) {
                    const io::json grid = io::load_json(glue_grid);
                    std::vector<cplx> as;
                    for (const io::json& ja : grid) as.push_back(io::cplx_from_json(ja));
                    std::vector<io::json> results(as.size());
                    std::atomic<std::size_t> next{0};
                    std::exception_ptr error;
                    std::mutex error_mu;
                    const int workers = std::min<int>(detail::worker_count(),
                                                      static_cast<int>(as.size()));
                    std::vector<std::thread> pool;
                    for (int w = 0; w < workers; ++w)
                        pool.emplace_back([&] {
                            for (std::size_t i = next++; i < as.size(); i = next++) {
                                try {
                                    const SolveResult sr = solve_gluing(as[i], xi, eta, cfg);
                                    if (!sr.stats.converged)
                                        throw numeric_error("grid solve did not converge");
                                    results[i] = io::json{
                                        {"a", io::to_json(as[i])},
                                        {"datum", io::to_json(sr.datum)},
                                        {"iterations", sr.stats.iterations},
                                        {"residual", sr.stats.final_residual}};
                                } catch (...) {
                                    std::lock_guard<std::mutex> lock(error_mu);
                                    if (!error) error = std::current_exception();
                                    return;
                                }
                            }
                        });
                    for (std::thread& th : pool) th.join();
                    if (error) std::rethrow_exception(error);
                    io::json arr = io::json::array();
                    for (io::json& r : results) arr.push_back(std::move(r));
                    rep.outputs = {{"grid", arr}, {"workers", workers}};
                    // invariant suite on the first grid point
                    const SolveResult sr0 = solve_gluing(as.at(0), xi, eta, cfg);
                    append_solve_checks(rep, sr0, xi, eta, cfg, rng);
                } else {
                    const cplx a = detail::parse_complex(glue_a);
                    const SolveResult sr = solve_gluing(a, xi, eta, cfg);
                    if (!sr.stats.converged)
                        throw numeric_error("solver did not converge: last residual " +
                                            std::to_string(sr.stats.final_residual));
                    rep.outputs = {{"datum", io::to_json(sr.datum)},
                                   {"iterations", sr.stats.iterations},
                                   {"residual", sr.stats.final_residual},
                                   {"newton_distance", sr.stats.newton_distance},
                                   {"initial_residual", sr.stats.initial_residual},
                                   {"tail_fraction", sr.stats.tail_fraction},
                                   {"certified_contraction", sr.stats.certified_contraction},
                                   {"config", io::to_json(cfg)}};
                    append_solve_checks(rep, sr, xi, eta, cfg, rng);
                }
            } else if (glue_check->parsed()) {
                const io::json j = io::load_json(glue_in);
                rep.inputs_digest = io::digest(j);
                const GluingDatum d = io::datum_from_json(j);
                SolverConfig dcfg = cfg;
                dcfg.trunc = d.xi.trunc();
                const DatumCheck dc = check_datum(d, dcfg);
                rep.outputs = {{"residual", dc.residual},
                               {"winding_xi", dc.winding_xi},
                               {"winding_eta", dc.winding_eta}};
                if (d.a != cplx(0.0)) {
                    const AprioriReport ar = apriori_check(d, dcfg);
                    rep.outputs["apriori"] = {{"ratio_dev", ar.ratio_dev},
                                              {"xi_sup_dev", ar.xi_sup_dev},
                                              {"eta_sup_dev", ar.eta_sup_dev},
                                              {"empirical_c", ar.empirical_c},
                                              {"ok", ar.ok}};
                    const bool uq = uniqueness_probe(d, dcfg, 10, common.seed);
                    rep.outputs["uniqueness_10_restarts"] = uq;
                    rep.add("datum_invariants", dc.ok && ar.ok && uq, dc.residual, dcfg.tol * 10.0,
                            "stored datum satisfies residual, winding, a priori and uniqueness");
                    auto [xp, xm] = split(d.xi);
                    auto [ep, em] = split(d.eta);
                    const SolveResult sr = solve_gluing(d.a, xp, ep, dcfg);
                    append_solve_checks(rep, sr, xp, ep, dcfg, rng);
                } else {
                    rep.add("datum_invariants", dc.ok, dc.residual, dcfg.tol * 10.0,
                            "degenerate datum constraints at a = 0");
                }
            }
        }

        // ------------------------------------------------ plumb
        if (plumb->parsed()) {
            SolverConfig cfg = detail::load_config(common);
            if (cfg.delta == 0.0) cfg.delta = 0.05;
            if (plumb_extend->parsed()) {
                const io::json jx = io::load_json(plumb_xi0);
                const io::json je = io::load_json(plumb_eta0);
                rep.inputs_digest = io::digest(io::json{{"xi0", jx}, {"eta0", je}});
                const TruncatedLaurent xi0 = io::laurent_from_json(jx);
                const TruncatedLaurent eta0 = io::laurent_from_json(je);
                const NodalExtension ext = nodal_extend(xi0, eta0, cfg);
                io::json grid = io::json::array();
                for (const auto& smp : ext.grid)
                    grid.push_back(io::json{{"z", io::to_json(smp.z)},
                                            {"b", io::to_json(smp.b)},
                                            {"alpha", io::to_json(smp.alpha)},
                                            {"beta", io::to_json(smp.beta)}});
                rep.outputs = {{"eps", ext.eps},
                               {"xi_deriv", io::to_json(ext.xi_deriv)},
                               {"eta_deriv", io::to_json(ext.eta_deriv)},
                               {"zeta", io::to_json(ext.zeta)},
                               {"grid", grid}};
                append_plumbing_checks(rep, cfg, rng, &ext);
            } else if (plumb_annulus->parsed()) {
                const cplx a = detail::parse_complex(plumb_a);
                const NodeFiber f = node_fiber(a);
                rep.outputs = io::to_json(f);
                rep.inputs_digest = io::digest(io::json{{"a", io::to_json(a)}});
                append_plumbing_checks(rep, cfg, rng, nullptr);
            }
        }

        // ------------------------------------------------ degenerate
        if (degen->parsed()) {
            const io::json j = io::load_json(degen_path);
            rep.inputs_digest = io::digest(j);
            const DegenerationPath path = io::path_from_json(j);
            const BubbleTree tree = limit_signature(path);
            rep.outputs = {{"tree", io::to_json(tree)}};

            if (!degen_csv.empty()) {
                std::ofstream csv(degen_csv);
                if (!csv) throw std::invalid_argument("cannot write " + degen_csv);
                const int n = static_cast<int>(path.points.size());
                csv << "t,min_separation,geodesic_proxy";
                if (n <= 6)
                    for (int i = 0; i < n; ++i)
                        for (int jj = i + 1; jj < n; ++jj)
                            for (int k = jj + 1; k < n; ++k)
                                for (int l = k + 1; l < n; ++l)
                                    csv << ",cr_" << i + 1 << jj + 1 << k + 1 << l + 1 << "_re,cr_"
                                        << i + 1 << jj + 1 << k + 1 << l + 1 << "_im";
                csv << "\n";
                for (int step = 0; step < 40; ++step) {
                    const double t = std::pow(0.7, step);
                    const SphereConfig cfg_t = path.at(t);
                    double sep = std::numeric_limits<double>::infinity();
                    for (int i = 0; i < n; ++i)
                        for (int jj = i + 1; jj < n; ++jj)
                            sep = std::min(sep,
                                           chordal_distance(cfg_t.points[static_cast<std::size_t>(i)],
                                                            cfg_t.points[static_cast<std::size_t>(jj)]));
                    csv << t << "," << sep << ","
                        << (sep < 1.0 ? 2.0 * pi * pi / std::log(1.0 / sep) : 0.0);
                    if (n <= 6)
                        for (int i = 0; i < n; ++i)
                            for (int jj = i + 1; jj < n; ++jj)
                                for (int k = jj + 1; k < n; ++k)
                                    for (int l = k + 1; l < n; ++l) {
                                        const SpherePoint cr = cross_ratio(
                                            cfg_t.points[static_cast<std::size_t>(i)],
                                            cfg_t.points[static_cast<std::size_t>(jj)],
                                            cfg_t.points[static_cast<std::size_t>(k)],
                                            cfg_t.points[static_cast<std::size_t>(l)]);
                                        if (cr.inf)
                                            csv << ",inf,inf";
                                        else
                                            csv << "," << cr.v.real() << "," << cr.v.imag();
                                    }
                    csv << "\n";
                }
            }
            append_moduli_checks(rep, path, tree);
        }

        // ------------------------------------------------ selftest
        if (selftest->parsed()) {
            run_selftest(rep, rng, quick);
        }

        append_cli_roundtrip_check(rep);
    } catch (const numeric_error& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return exit_numeric;
    } catch (const std::range_error& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return exit_numeric;
    } catch (const non_generic_path& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return exit_input;
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return exit_input;
    } catch (const std::domain_error& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return exit_input;
    }

    rep.wall_time_s = clock.seconds();
    try {
        detail::emit(rep, common.out);
    } catch (const std::invalid_argument& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return exit_input;
    }
    return rep.all_passed() ? exit_ok : exit_numeric;
}

inline int run(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args);
}

}  // namespace nodal::cli
