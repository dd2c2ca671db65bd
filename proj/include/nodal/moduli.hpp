#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nodal/core.hpp"
#include "nodal/signature.hpp"

namespace nodal {

/// Degeneration path whose separation exponents are numerically ambiguous
/// or undefined; reported rather than guessed.
struct non_generic_path : std::runtime_error {
    explicit non_generic_path(const std::string& what) : std::runtime_error(what) {}
};

// ---------------------------------------------------------------------------
// points on the Riemann sphere

/// A value in C union {infinity}.
struct SpherePoint {
    cplx v{0.0};
    bool inf = false;

    static SpherePoint infinity() { return SpherePoint{cplx(0.0), true}; }
    friend bool operator==(const SpherePoint& a, const SpherePoint& b) {
        if (a.inf || b.inf) return a.inf == b.inf;
        return a.v == b.v;
    }
};

namespace detail {

// projective coordinates [a : b], infinity = [1 : 0]
inline std::pair<cplx, cplx> proj(const SpherePoint& p) {
    return p.inf ? std::make_pair(cplx(1.0), cplx(0.0)) : std::make_pair(p.v, cplx(1.0));
}

}  // namespace detail

/**
 * Moebius-invariant cross-ratio with the convention that (0, 1, inf, w)
 * evaluates to w: the unique Moebius map sending the first three points to
 * (0, 1, inf), applied to the fourth. Projective arithmetic handles
 * infinity; at least three of the four points must be distinct.
 */
inline SpherePoint cross_ratio(const SpherePoint& p1, const SpherePoint& p2, const SpherePoint& p3,
                               const SpherePoint& p4) {
    const SpherePoint pts[4] = {p1, p2, p3, p4};
    int distinct = 0;
    for (int i = 0; i < 4; ++i) {
        bool dup = false;
        for (int j = 0; j < i; ++j) dup = dup || pts[i] == pts[j];
        if (!dup) ++distinct;
    }
    if (distinct < 3) throw std::invalid_argument("cross-ratio needs at least 3 distinct points");
    const auto [a1, b1] = detail::proj(p1);
    const auto [a2, b2] = detail::proj(p2);
    const auto [a3, b3] = detail::proj(p3);
    const auto [a4, b4] = detail::proj(p4);
    const cplx num = (a4 * b1 - a1 * b4) * (a2 * b3 - a3 * b2);
    const cplx den = (a4 * b3 - a3 * b4) * (a2 * b1 - a1 * b2);
    if (den == cplx(0.0)) return SpherePoint::infinity();
    return SpherePoint{num / den, false};
}

/// n labelled pairwise-distinct points on the sphere.
struct SphereConfig {
    std::vector<SpherePoint> points;

    void validate() const {
        if (points.size() < 3) throw std::invalid_argument("configuration needs n >= 3 points");
        for (std::size_t i = 0; i < points.size(); ++i)
            for (std::size_t j = i + 1; j < points.size(); ++j)
                if (points[i] == points[j])
                    throw std::invalid_argument("configuration points must be pairwise distinct");
    }
};

/// The unique Moebius image with p_i = 0, p_j = 1, p_k = inf; idempotent
/// and cross-ratio preserving.
inline SphereConfig normalize(const SphereConfig& cfg, int i, int j, int k) {
    cfg.validate();
    const int n = static_cast<int>(cfg.points.size());
    if (i == j || j == k || i == k || i < 0 || j < 0 || k < 0 || i >= n || j >= n || k >= n)
        throw std::invalid_argument("normalization needs three distinct valid indices");
    SphereConfig out;
    out.points.reserve(cfg.points.size());
    for (const SpherePoint& p : cfg.points)
        out.points.push_back(cross_ratio(cfg.points[i], cfg.points[j], cfg.points[k], p));
    return out;
}

// ---------------------------------------------------------------------------
// polynomials and rational functions of the degeneration parameter t

namespace detail {

/// Dense polynomial in t with complex coefficients. Coefficients below
/// 1e-12 of the largest magnitude are treated as exact cancellations; a
/// leading coefficient inside the murky band (1e-12, 1e-8) of the scale
/// makes order-of-vanishing decisions unsafe and raises non_generic_path.
struct Poly {
    std::vector<cplx> c;

    static Poly zero() { return Poly{}; }
    static Poly constant(cplx v) {
        Poly p;
        if (v != cplx(0.0)) p.c = {v};
        return p;
    }

    bool is_zero() const {
        for (const cplx& x : c)
            if (x != cplx(0.0)) return false;
        return true;
    }

    double scale() const {
        double m = 0.0;
        for (const cplx& x : c) m = std::max(m, std::abs(x));
        return m;
    }

    void trim() {
        const double s = scale();
        if (s == 0.0) {
            c.clear();
            return;
        }
        for (cplx& x : c)
            if (std::abs(x) <= 1e-12 * s) x = 0.0;
        while (!c.empty() && c.back() == cplx(0.0)) c.pop_back();
    }

    /// Order of vanishing at t = 0; -1 encodes the zero polynomial.
    int ord() const {
        const double s = scale();
        if (s == 0.0) return -1;
        for (std::size_t k = 0; k < c.size(); ++k) {
            const double m = std::abs(c[k]);
            if (m <= 1e-12 * s) continue;
            if (m < 1e-8 * s)
                throw non_generic_path("leading coefficient in the ambiguous band");
            return static_cast<int>(k);
        }
        return -1;
    }

    cplx lead() const {
        const int k = ord();
        return k < 0 ? cplx(0.0) : c[static_cast<std::size_t>(k)];
    }

    friend Poly operator+(const Poly& a, const Poly& b) {
        Poly out;
        out.c.resize(std::max(a.c.size(), b.c.size()), cplx(0.0));
        for (std::size_t i = 0; i < a.c.size(); ++i) out.c[i] += a.c[i];
        for (std::size_t i = 0; i < b.c.size(); ++i) out.c[i] += b.c[i];
        out.trim();
        return out;
    }
    friend Poly operator-(const Poly& a, const Poly& b) {
        Poly out;
        out.c.resize(std::max(a.c.size(), b.c.size()), cplx(0.0));
        for (std::size_t i = 0; i < a.c.size(); ++i) out.c[i] += a.c[i];
        for (std::size_t i = 0; i < b.c.size(); ++i) out.c[i] -= b.c[i];
        out.trim();
        return out;
    }
    friend Poly operator*(const Poly& a, const Poly& b) {
        Poly out;
        if (a.is_zero() || b.is_zero()) return out;
        out.c.assign(a.c.size() + b.c.size() - 1, cplx(0.0));
        for (std::size_t i = 0; i < a.c.size(); ++i)
            for (std::size_t j = 0; j < b.c.size(); ++j) out.c[i + j] += a.c[i] * b.c[j];
        out.trim();
        return out;
    }

    cplx eval(double t) const {
        cplx acc = 0.0;
        for (std::size_t k = c.size(); k-- > 0;) acc = acc * t + c[k];
        return acc;
    }

    Poly power_substitute(int m) const {
        Poly out;
        if (is_zero()) return out;
        out.c.assign((c.size() - 1) * static_cast<std::size_t>(m) + 1, cplx(0.0));
        for (std::size_t k = 0; k < c.size(); ++k) out.c[k * static_cast<std::size_t>(m)] = c[k];
        return out;
    }

    Poly scale_parameter(double s) const {
        Poly out = *this;
        double f = 1.0;
        for (std::size_t k = 0; k < out.c.size(); ++k, f *= s) out.c[k] *= f;
        out.trim();
        return out;
    }
};

}  // namespace detail

/**
 * A sphere-valued path t |-> [num(t) : den(t)] for the degeneration
 * parameter t -> 0+, kept in projective form so Moebius transforms and
 * cross-ratios stay exact polynomial arithmetic.
 */
struct RationalPath {
    detail::Poly num;
    detail::Poly den;

    static RationalPath constant(cplx v) {
        return RationalPath{detail::Poly::constant(v), detail::Poly::constant(1.0)};
    }
    static RationalPath infinity() {
        return RationalPath{detail::Poly::constant(1.0), detail::Poly::zero()};
    }
    static RationalPath polynomial(detail::Poly p) {
        return RationalPath{std::move(p), detail::Poly::constant(1.0)};
    }

    void validate() const {
        if (num.is_zero() && den.is_zero())
            throw std::invalid_argument("path point [0 : 0] is not a sphere point");
    }

    /// Strip common powers of t (exact leading zeros only); keeps the
    /// degree growth of iterated cross-ratio charts in check.
    void cancel_parameter_powers() {
        std::size_t zn = 0, zd = 0;
        while (zn < num.c.size() && num.c[zn] == cplx(0.0)) ++zn;
        while (zd < den.c.size() && den.c[zd] == cplx(0.0)) ++zd;
        const std::size_t m = std::min(zn, zd);
        if (m == 0 || num.c.empty() || den.c.empty()) return;
        num.c.erase(num.c.begin(), num.c.begin() + static_cast<std::ptrdiff_t>(m));
        den.c.erase(den.c.begin(), den.c.begin() + static_cast<std::ptrdiff_t>(m));
    }

    /// Order of vanishing of the value as t -> 0 (negative: blows up).
    int val_order() const {
        const int a = num.ord();
        const int d = den.ord();
        if (d < 0) return a < 0 ? 0 : std::numeric_limits<int>::min();  // constant infinity
        if (a < 0) return std::numeric_limits<int>::max();              // constant zero
        return a - d;
    }

    SpherePoint limit() const {
        const int a = num.ord();
        const int d = den.ord();
        if (d < 0) return SpherePoint::infinity();
        if (a < 0) return SpherePoint{cplx(0.0), false};
        if (a > d) return SpherePoint{cplx(0.0), false};
        if (a < d) return SpherePoint::infinity();
        return SpherePoint{num.lead() / den.lead(), false};
    }

    SpherePoint at(double t) const {
        const cplx nn = num.eval(t);
        const cplx dd = den.eval(t);
        if (dd == cplx(0.0)) return SpherePoint::infinity();
        return SpherePoint{nn / dd, false};
    }
};

namespace detail {

/// Order of vanishing of p - q as paths; huge when they never separate.
inline int separation_order(const RationalPath& p, const RationalPath& q) {
    const Poly diff = p.num * q.den - q.num * p.den;
    if (diff.is_zero()) return std::numeric_limits<int>::max();
    const int dp = p.den.ord();
    const int dq = q.den.ord();
    if (dp < 0 || dq < 0)
        throw non_generic_path("separation order against a constant-infinite path");
    return diff.ord() - dp - dq;
}

inline RationalPath cross_ratio_path(const RationalPath& p1, const RationalPath& p2,
                                     const RationalPath& p3, const RationalPath& p4) {
    const Poly n = (p4.num * p1.den - p1.num * p4.den) * (p2.num * p3.den - p3.num * p2.den);
    const Poly d = (p4.num * p3.den - p3.num * p4.den) * (p2.num * p1.den - p1.num * p2.den);
    RationalPath out{n, d};
    out.validate();
    out.cancel_parameter_powers();
    return out;
}

}  // namespace detail

/// Marked points moving on the sphere as t -> 0+, one rational path each.
struct DegenerationPath {
    std::vector<RationalPath> points;

    void validate() const {
        if (points.size() < 3) throw std::invalid_argument("degeneration needs n >= 3 points");
        for (const RationalPath& p : points) p.validate();
        for (std::size_t i = 0; i < points.size(); ++i)
            for (std::size_t j = i + 1; j < points.size(); ++j)
                if (detail::separation_order(points[i], points[j]) ==
                    std::numeric_limits<int>::max())
                    throw std::invalid_argument(
                        "path points must be distinct for small t (pair " + std::to_string(i) +
                        ", " + std::to_string(j) + " coincides identically)");
    }

    SphereConfig at(double t) const {
        SphereConfig cfg;
        for (const RationalPath& p : points) cfg.points.push_back(p.at(t));
        return cfg;
    }
};

/// Stable genus-0 tree with per-vertex limit positions of its marks and
/// nodes. Node positions are recorded once per edge endpoint.
struct BubbleTree {
    SignatureGraph graph;  // all genus 0, tree-shaped

    struct SpecialPos {
        enum class Kind { mark, node };
        Kind kind = Kind::mark;
        int id = 0;  // mark index (1-based) or edge index into graph.edges
        SpherePoint pos;
    };
    std::vector<std::vector<SpecialPos>> positions;  // per vertex
};

namespace detail {

struct TreeBuilder {
    BubbleTree tree;
    int n_marks = 0;

    int new_vertex() {
        tree.graph.vertices.push_back(VertexLabel{0, {}});
        tree.positions.emplace_back();
        return static_cast<int>(tree.graph.vertices.size()) - 1;
    }

    void add_mark(int vertex, int mark, SpherePoint pos) {
        tree.graph.vertices[static_cast<std::size_t>(vertex)].marks.insert(mark);
        tree.positions[static_cast<std::size_t>(vertex)].push_back(
            {BubbleTree::SpecialPos::Kind::mark, mark, pos});
    }

    int add_edge(int a, int b, SpherePoint pos_at_a, SpherePoint pos_at_b) {
        tree.graph.edges.emplace_back(a, b);
        const int e = static_cast<int>(tree.graph.edges.size()) - 1;
        tree.positions[static_cast<std::size_t>(a)].push_back(
            {BubbleTree::SpecialPos::Kind::node, e, pos_at_a});
        tree.positions[static_cast<std::size_t>(b)].push_back(
            {BubbleTree::SpecialPos::Kind::node, e, pos_at_b});
        return e;
    }
};

/// Partition items by pairwise separation deeper than the coarsest level.
/// The separation order is an ultrametric once every value shares a finite
/// limit, so the classes are well defined.
inline std::vector<std::vector<int>> split_by_depth(const std::vector<RationalPath>& w,
                                                    const std::vector<int>& items, int k) {
    std::vector<std::vector<int>> classes;
    std::vector<int> cls(items.size(), -1);
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (cls[i] >= 0) continue;
        cls[i] = static_cast<int>(classes.size());
        classes.push_back({items[i]});
        for (std::size_t j = i + 1; j < items.size(); ++j) {
            if (cls[j] >= 0) continue;
            if (separation_order(w[static_cast<std::size_t>(items[i])],
                                 w[static_cast<std::size_t>(items[j])]) > k) {
                cls[j] = cls[i];
                classes[static_cast<std::size_t>(cls[i])].push_back(items[j]);
            }
        }
    }
    return classes;
}

/// Recursive cluster expansion. `members` share a finite common limit in
/// chart `w`; `outside` is any item of a different class, anchoring the
/// parent direction at infinity of the child chart. Returns the child
/// vertex id.
inline int expand_cluster(TreeBuilder& tb, const std::vector<RationalPath>& w,
                          const std::vector<int>& members, int outside, int depth) {
    if (depth > 16) throw non_generic_path("cluster recursion exceeded depth 16");

    // coarsest separation level inside the cluster
    int k = std::numeric_limits<int>::max();
    for (std::size_t i = 0; i < members.size(); ++i)
        for (std::size_t j = i + 1; j < members.size(); ++j)
            k = std::min(k, separation_order(w[static_cast<std::size_t>(members[i])],
                                             w[static_cast<std::size_t>(members[j])]));

    // anchor pair realizing the coarsest level
    int A = -1, B = -1;
    for (std::size_t i = 0; i < members.size() && A < 0; ++i)
        for (std::size_t j = i + 1; j < members.size(); ++j)
            if (separation_order(w[static_cast<std::size_t>(members[i])],
                                 w[static_cast<std::size_t>(members[j])]) == k) {
                A = members[i];
                B = members[j];
                break;
            }

    std::vector<RationalPath> w2(w.size());
    for (int m : members)
        w2[static_cast<std::size_t>(m)] =
            cross_ratio_path(w[static_cast<std::size_t>(A)], w[static_cast<std::size_t>(B)],
                             w[static_cast<std::size_t>(outside)], w[static_cast<std::size_t>(m)]);

    const auto classes = split_by_depth(w2, members, 0);
    const int v = tb.new_vertex();
    for (const auto& cls : classes) {
        const SpherePoint pos = w2[static_cast<std::size_t>(cls.front())].limit();
        if (cls.size() == 1) {
            tb.add_mark(v, cls.front() + 1, pos);
        } else {
            int out2 = -1;
            for (const auto& other : classes)
                if (&other != &cls) {
                    out2 = other.front();
                    break;
                }
            const int child = expand_cluster(tb, w2, cls, out2, depth + 1);
            tb.add_edge(v, child, pos, SpherePoint::infinity());
        }
    }
    return v;
}

}  // namespace detail

/**
 * Limit stable signature of a degenerating genus-0 configuration.
 *
 * The configuration is charted through the exact cross-ratio normalization
 * by its first three points; marks cluster by the order of vanishing of
 * their pairwise separations, each cluster is re-charted by an anchor pair
 * realizing its coarsest separation level together with one outside point
 * (which places the node to the parent at infinity), and the recursion
 * continues inside the deeper classes. The result is invariant under
 * reparametrizations t -> t^m, t -> ct and path-level Moebius maps.
 */
inline BubbleTree limit_signature(const DegenerationPath& path) {
    path.validate();
    const int n = static_cast<int>(path.points.size());

    // chart by the first three points: they sit at 0, 1, infinity
    std::vector<RationalPath> w(path.points.size());
    for (int m = 0; m < n; ++m)
        w[static_cast<std::size_t>(m)] =
            detail::cross_ratio_path(path.points[0], path.points[1], path.points[2],
                                     path.points[m]);

    // top-level classes: equal limits, with all blowing-up paths clustering
    // at infinity (they collide with the third anchor)
    std::vector<int> finite_items, inf_items;
    for (int m = 0; m < n; ++m)
        (w[static_cast<std::size_t>(m)].val_order() < 0 ? inf_items : finite_items).push_back(m);

    std::vector<std::vector<int>> classes = detail::split_by_depth(w, finite_items, 0);
    if (!inf_items.empty()) classes.push_back(inf_items);

    detail::TreeBuilder tb;
    tb.n_marks = n;
    const int root = tb.new_vertex();
    for (const auto& cls : classes) {
        const SpherePoint pos = w[static_cast<std::size_t>(cls.front())].limit();
        if (cls.size() == 1) {
            tb.add_mark(root, cls.front() + 1, pos);
            continue;
        }
        int outside = -1;
        for (const auto& other : classes)
            if (&other != &cls) {
                outside = other.front();
                break;
            }
        std::vector<RationalPath> wc = w;
        if (pos.inf) {
            // invert the chart so the cluster shares a finite limit
            for (int m : cls) {
                RationalPath& p = wc[static_cast<std::size_t>(m)];
                std::swap(p.num, p.den);
            }
            RationalPath& po = wc[static_cast<std::size_t>(outside)];
            std::swap(po.num, po.den);
        }
        const int child = detail::expand_cluster(tb, wc, cls, outside, 1);
        tb.add_edge(root, child, pos, SpherePoint::infinity());
    }

    // edges stay in construction order: positions refer to them by index
    tb.tree.graph.n_marks = n;
    tb.tree.graph.validate();
    return tb.tree;
}

// ---------------------------------------------------------------------------
// invariance of the limit

struct PathTransform {
    enum class Kind { reparam_power, scale_parameter, mobius };
    Kind kind = Kind::reparam_power;
    int power = 2;        // t -> t^power
    double factor = 1.0;  // t -> factor * t
    cplx ma{1.0}, mb{0.0}, mc{0.0}, md{1.0};  // z -> (ma z + mb) / (mc z + md)

    static PathTransform reparam(int m) {
        PathTransform t;
        t.kind = Kind::reparam_power;
        t.power = m;
        return t;
    }
    static PathTransform scale(double c) {
        PathTransform t;
        t.kind = Kind::scale_parameter;
        t.factor = c;
        return t;
    }
    static PathTransform moebius(cplx a, cplx b, cplx c, cplx d) {
        if (a * d - b * c == cplx(0.0)) throw std::invalid_argument("singular Moebius transform");
        PathTransform t;
        t.kind = Kind::mobius;
        t.ma = a;
        t.mb = b;
        t.mc = c;
        t.md = d;
        return t;
    }
};

inline DegenerationPath apply_transform(const DegenerationPath& path, const PathTransform& tr) {
    DegenerationPath out;
    out.points.reserve(path.points.size());
    for (const RationalPath& p : path.points) {
        RationalPath q;
        switch (tr.kind) {
            case PathTransform::Kind::reparam_power:
                if (tr.power < 1) throw std::invalid_argument("reparametrization power must be >= 1");
                q.num = p.num.power_substitute(tr.power);
                q.den = p.den.power_substitute(tr.power);
                break;
            case PathTransform::Kind::scale_parameter:
                if (!(tr.factor > 0.0))
                    throw std::invalid_argument("parameter scale must be positive");
                q.num = p.num.scale_parameter(tr.factor);
                q.den = p.den.scale_parameter(tr.factor);
                break;
            case PathTransform::Kind::mobius:
                q.num = detail::Poly::constant(tr.ma) * p.num + detail::Poly::constant(tr.mb) * p.den;
                q.den = detail::Poly::constant(tr.mc) * p.num + detail::Poly::constant(tr.md) * p.den;
                break;
        }
        out.points.push_back(std::move(q));
    }
    return out;
}

/// The limit signature agrees, up to labelled isomorphism, across all
/// transformed paths.
inline bool verify_limit_uniqueness(const DegenerationPath& path,
                                    const std::vector<PathTransform>& transforms) {
    const BubbleTree base = limit_signature(path);
    for (const PathTransform& tr : transforms) {
        const BubbleTree other = limit_signature(apply_transform(path, tr));
        if (!signatures_isomorphic(base.graph, other.graph)) return false;
    }
    return true;
}

/// Quartet split induced by the tree: 0, 1 or infinity when an edge
/// separates {i, l}, {j, l}, {k, l} from the rest, otherwise no value.
/// Mirrors the limit of the cross-ratio of the four marks along the path.
inline std::optional<SpherePoint> tree_quartet_value(const BubbleTree& tree, int i, int j, int k,
                                                     int l) {
    const auto& g = tree.graph;
    const int V = static_cast<int>(g.vertices.size());
    // vertex carrying each mark
    auto owner = [&](int mark) {
        for (int v = 0; v < V; ++v)
            if (g.vertices[static_cast<std::size_t>(v)].marks.count(mark)) return v;
        throw std::logic_error("mark not found in tree");
    };
    // removing one edge splits the tree's vertices in two
    for (std::size_t e = 0; e < g.edges.size(); ++e) {
        std::vector<int> side(static_cast<std::size_t>(V), -1);
        std::vector<int> stack{g.edges[e].u};
        side[static_cast<std::size_t>(g.edges[e].u)] = 0;
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            for (std::size_t f = 0; f < g.edges.size(); ++f) {
                if (f == e) continue;
                const auto& ed = g.edges[f];
                for (const int w : {ed.u, ed.v}) {
                    const int o = (w == ed.u) ? ed.v : ed.u;
                    if (w == v && side[static_cast<std::size_t>(o)] < 0) {
                        side[static_cast<std::size_t>(o)] = 0;
                        stack.push_back(o);
                    }
                }
            }
        }
        const auto s = [&](int mark) { return side[static_cast<std::size_t>(owner(mark))] == 0; };
        const bool si = s(i), sj = s(j), sk = s(k), sl = s(l);
        if (si == sl && sj == sk && si != sj) return SpherePoint{cplx(0.0), false};
        if (sj == sl && si == sk && si != sj) return SpherePoint{cplx(1.0), false};
        if (sk == sl && si == sj && si != sk) return SpherePoint::infinity();
    }
    return std::nullopt;
}

/// Chordal distance on the sphere; used for separation traces.
inline double chordal_distance(const SpherePoint& p, const SpherePoint& q) {
    if (p.inf && q.inf) return 0.0;
    if (p.inf || q.inf) {
        const cplx z = p.inf ? q.v : p.v;
        return 2.0 / std::sqrt(1.0 + std::norm(z));
    }
    return 2.0 * std::abs(p.v - q.v) / std::sqrt((1.0 + std::norm(p.v)) * (1.0 + std::norm(q.v)));
}

}  // namespace nodal
