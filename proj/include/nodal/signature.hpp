#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nodal {

/// One component of a marked nodal surface: its genus and the indices
/// (1-based) of the marked points lying on it.
struct VertexLabel {
    int genus = 0;
    std::set<int> marks;

    friend bool operator==(const VertexLabel&, const VertexLabel&) = default;
};

/// Unordered vertex pair, stored with u <= v. A self-loop (u == v) is a
/// node whose two branches lie on the same component.
struct Edge {
    int u = 0;
    int v = 0;

    Edge() = default;
    Edge(int a, int b) : u(std::min(a, b)), v(std::max(a, b)) {}

    bool loop() const { return u == v; }

    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

/**
 * Labelled dual graph of a marked nodal surface: one vertex per component
 * (labelled by genus and mark indices), one edge per node. Plain value
 * type; treat instances as immutable after validate().
 *
 * Invariants checked by validate():
 *  - every genus is nonnegative,
 *  - the mark sets partition {1, ..., n_marks},
 *  - edge endpoints reference existing vertices.
 */
struct SignatureGraph {
    std::vector<VertexLabel> vertices;
    std::vector<Edge> edges;  // multiset; kept sorted by validate()
    int n_marks = 0;

    void validate() const {
        if (vertices.empty())
            throw std::invalid_argument("signature graph needs at least one vertex");
        if (n_marks < 0) throw std::invalid_argument("negative mark count");
        std::set<int> seen;
        std::size_t total = 0;
        for (const auto& vl : vertices) {
            if (vl.genus < 0) throw std::invalid_argument("negative vertex genus");
            for (int m : vl.marks) {
                if (m < 1 || m > n_marks)
                    throw std::invalid_argument("mark index out of range");
                if (!seen.insert(m).second)
                    throw std::invalid_argument("duplicate mark index");
            }
            total += vl.marks.size();
        }
        if (static_cast<int>(total) != n_marks)
            throw std::invalid_argument("marks do not exhaust 1..n_marks");
        const int k = static_cast<int>(vertices.size());
        for (const Edge& e : edges)
            if (e.u < 0 || e.v < 0 || e.u >= k || e.v >= k)
                throw std::invalid_argument("edge endpoint out of range");
    }

    SignatureGraph normalized() const {
        SignatureGraph g = *this;
        std::sort(g.edges.begin(), g.edges.end());
        return g;
    }

    friend bool operator==(const SignatureGraph&, const SignatureGraph&) = default;
};

inline int vertex_degree(const SignatureGraph& g, int v) {
    int d = 0;
    for (const Edge& e : g.edges) {
        if (e.u == v) ++d;
        if (e.v == v) ++d;  // a self-loop contributes two endpoints
    }
    return d;
}

/// Number of special points on component v: marks plus edge endpoints,
/// self-loops counted twice.
inline int special_point_count(const SignatureGraph& g, int v) {
    if (v < 0 || v >= static_cast<int>(g.vertices.size()))
        throw std::invalid_argument("invalid vertex index");
    return static_cast<int>(g.vertices[v].marks.size()) + vertex_degree(g, v);
}

namespace detail {

// union-find over vertex indices
inline int uf_find(std::vector<int>& p, int x) {
    while (p[x] != x) x = p[x] = p[p[x]];
    return x;
}

inline int component_count(const SignatureGraph& g) {
    std::vector<int> p(g.vertices.size());
    std::iota(p.begin(), p.end(), 0);
    for (const Edge& e : g.edges) {
        int a = uf_find(p, e.u), b = uf_find(p, e.v);
        if (a != b) p[a] = b;
    }
    int c = 0;
    for (int i = 0; i < static_cast<int>(p.size()); ++i)
        if (uf_find(p, i) == i) ++c;
    return c;
}

}  // namespace detail

struct BettiNumbers {
    int b0 = 0;
    int b1 = 0;
};

/// b0 = number of connected components; b1 from b0 - b1 = #vertices - #edges.
inline BettiNumbers betti_numbers(const SignatureGraph& g) {
    BettiNumbers b;
    b.b0 = detail::component_count(g);
    b.b1 = b.b0 - static_cast<int>(g.vertices.size()) + static_cast<int>(g.edges.size());
    return b;
}

inline bool is_connected(const SignatureGraph& g) { return betti_numbers(g).b0 == 1; }

/// Arithmetic genus: b1 of the graph plus the sum of the component genera.
inline int arithmetic_genus(const SignatureGraph& g) {
    int total = betti_numbers(g).b1;
    for (const auto& vl : g.vertices) total += vl.genus;
    return total;
}

/// Stability: every genus-0 component carries at least three special
/// points and every genus-1 component at least one.
inline bool is_stable(const SignatureGraph& g) {
    for (int v = 0; v < static_cast<int>(g.vertices.size()); ++v) {
        const int sp = special_point_count(g, v);
        if (g.vertices[v].genus == 0 && sp < 3) return false;
        if (g.vertices[v].genus == 1 && sp < 1) return false;
    }
    return true;
}

/// Type (g, n): connected, arithmetic genus g, exactly n marks.
inline bool is_type(const SignatureGraph& graph, int g, int n) {
    return is_connected(graph) && arithmetic_genus(graph) == g && graph.n_marks == n;
}

namespace detail {

// Vertex key preserved by any isomorphism: mark sets are indexed, so they
// must match exactly, as must genus, degree and loop count.
struct VertexKey {
    std::vector<int> marks;
    int genus = 0;
    int degree = 0;
    int loops = 0;

    friend bool operator==(const VertexKey&, const VertexKey&) = default;
    friend auto operator<=>(const VertexKey&, const VertexKey&) = default;
};

inline VertexKey vertex_key(const SignatureGraph& g, int v) {
    VertexKey k;
    k.marks.assign(g.vertices[v].marks.begin(), g.vertices[v].marks.end());
    k.genus = g.vertices[v].genus;
    k.degree = vertex_degree(g, v);
    for (const Edge& e : g.edges)
        if (e.u == v && e.v == v) ++k.loops;
    return k;
}

inline std::vector<Edge> mapped_edges(const SignatureGraph& g, const std::vector<int>& perm) {
    std::vector<Edge> out;
    out.reserve(g.edges.size());
    for (const Edge& e : g.edges) out.emplace_back(perm[e.u], perm[e.v]);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace detail

/// True iff a vertex bijection preserves genus labels, mark sets exactly,
/// and edge multiplicities. Backtracking over key-compatible images.
inline bool signatures_isomorphic(const SignatureGraph& a, const SignatureGraph& b) {
    const int k = static_cast<int>(a.vertices.size());
    if (k != static_cast<int>(b.vertices.size())) return false;
    if (a.edges.size() != b.edges.size() || a.n_marks != b.n_marks) return false;

    std::vector<detail::VertexKey> ka(k), kb(k);
    for (int v = 0; v < k; ++v) {
        ka[v] = detail::vertex_key(a, v);
        kb[v] = detail::vertex_key(b, v);
    }
    {
        auto sa = ka, sb = kb;
        std::sort(sa.begin(), sa.end());
        std::sort(sb.begin(), sb.end());
        if (sa != sb) return false;
    }

    std::vector<Edge> target = b.edges;
    std::sort(target.begin(), target.end());

    std::vector<int> perm(k, -1);
    std::vector<bool> used(k, false);

    auto dfs = [&](auto&& self, int v) -> bool {
        if (v == k) return detail::mapped_edges(a, perm) == target;
        for (int w = 0; w < k; ++w) {
            if (used[w] || !(ka[v] == kb[w])) continue;
            perm[v] = w;
            used[w] = true;
            if (self(self, v + 1)) return true;
            used[w] = false;
            perm[v] = -1;
        }
        return false;
    };
    return dfs(dfs, 0);
}

/**
 * Canonical string form: lexicographically minimal encoding over all
 * permutations that respect the (marks, genus) vertex keys. Marks pin
 * every marked vertex, so only unmarked same-genus vertices permute.
 * Equal canonical forms <=> isomorphic signatures.
 */
inline std::string canonical_form(const SignatureGraph& g) {
    const int k = static_cast<int>(g.vertices.size());
    using GroupKey = std::pair<std::vector<int>, int>;  // (marks, genus)
    std::vector<std::pair<GroupKey, int>> keyed(k);
    for (int v = 0; v < k; ++v)
        keyed[v] = {{std::vector<int>(g.vertices[v].marks.begin(), g.vertices[v].marks.end()),
                     g.vertices[v].genus},
                    v};
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& x, const auto& y) { return x.first < y.first; });

    // group boundaries of equal keys
    std::vector<std::pair<int, int>> groups;
    for (int i = 0; i < k;) {
        int j = i;
        while (j < k && keyed[j].first == keyed[i].first) ++j;
        groups.emplace_back(i, j);
        i = j;
    }

    auto encode = [&](const std::vector<int>& order) {
        // order[slot] = original vertex; invert to position map
        std::vector<int> pos(k);
        for (int slot = 0; slot < k; ++slot) pos[order[slot]] = slot;
        std::string s;
        for (int slot = 0; slot < k; ++slot) {
            const auto& vl = g.vertices[order[slot]];
            s += 'g' + std::to_string(vl.genus) + 'm';
            for (int m : vl.marks) s += std::to_string(m) + ',';
            s += ';';
        }
        s += '|';
        auto es = detail::mapped_edges(g, pos);
        for (const Edge& e : es) s += std::to_string(e.u) + '-' + std::to_string(e.v) + ';';
        return s;
    };

    std::vector<int> order(k);
    for (int slot = 0; slot < k; ++slot) order[slot] = keyed[slot].second;

    std::string best = encode(order);
    // walk the product of per-group permutations
    auto rec = [&](auto&& self, std::size_t gi) -> void {
        if (gi == groups.size()) {
            std::string s = encode(order);
            if (s < best) best = std::move(s);
            return;
        }
        auto [lo, hi] = groups[gi];
        std::sort(order.begin() + lo, order.begin() + hi);
        do {
            self(self, gi + 1);
        } while (std::next_permutation(order.begin() + lo, order.begin() + hi));
    };
    rec(rec, 0);
    return best;
}

/// Expected complex dimension of the local deformation space of a stable
/// type-(g, n) surface.
inline int deformation_dim(int g, int n) {
    if (g < 0 || n < 0 || n <= 2 - 2 * g)
        throw std::domain_error("deformation_dim requires n > 2 - 2g with g, n >= 0");
    return 3 * g - 3 + n;
}

struct IndexReport {
    long long index = 0;
    // true when the transversality assumption applies and `index` is exact;
    // false means `index` is only a lower bound.
    bool regular_nodal = true;
};

/**
 * Fredholm index count for a connected signature over a base of the given
 * dimension: sum_i(3 - 3 g_i) - 3#edges - n + dim_base, which equals
 * 3 - 3g - n + dim_base via b1 = #edges - #vertices + 1.
 */
inline IndexReport fredholm_index(const SignatureGraph& g, int dim_base, bool regular_nodal) {
    if (!is_connected(g)) throw std::invalid_argument("fredholm_index requires a connected graph");
    long long idx = 0;
    for (const auto& vl : g.vertices) idx += 3 - 3 * static_cast<long long>(vl.genus);
    idx -= 3 * static_cast<long long>(g.edges.size());
    idx -= g.n_marks;
    idx += dim_base;
    return IndexReport{idx, regular_nodal};
}

/// Same count through the arithmetic genus; agrees with fredholm_index on
/// every connected graph.
inline long long fredholm_index_via_genus(const SignatureGraph& g, int dim_base) {
    if (!is_connected(g)) throw std::invalid_argument("connected graph required");
    return 3 - 3 * static_cast<long long>(arithmetic_genus(g)) - g.n_marks + dim_base;
}

struct EnumerationResult {
    std::vector<SignatureGraph> graphs;
    std::string diagnostic;  // nonempty iff (g, n) is outside the stable range
};

namespace detail {

template <typename F>
void compositions(int total, int parts, std::vector<int>& cur, F&& emit) {
    if (parts == 1) {
        cur.push_back(total);
        emit(cur);
        cur.pop_back();
        return;
    }
    for (int x = 0; x <= total; ++x) {
        cur.push_back(x);
        compositions(total - x, parts - 1, cur, emit);
        cur.pop_back();
    }
}

template <typename F>
void edge_multisets(const std::vector<Edge>& pairs, std::size_t from, int remaining,
                    std::vector<Edge>& cur, F&& emit) {
    if (remaining == 0) {
        emit(cur);
        return;
    }
    if (from == pairs.size()) return;
    // choose how many copies of pairs[from]
    for (int c = remaining; c >= 0; --c) {
        for (int i = 0; i < c; ++i) cur.push_back(pairs[from]);
        edge_multisets(pairs, from + 1, remaining - c, cur, emit);
        for (int i = 0; i < c; ++i) cur.pop_back();
    }
}

}  // namespace detail

/**
 * Complete duplicate-free list of stable signatures of type (g, n).
 *
 * Strategy: every stable vertex satisfies 2 g_v - 2 + #specials_v >= 1 and
 * these weights sum to 2g - 2 + n over the graph, which bounds the vertex
 * count by 2g - 2 + n and the edge count by g + #vertices - 1. Within those
 * bounds, enumerate genus compositions, mark assignments and edge multisets,
 * filter by connectivity + stability, and dedup by canonical form.
 */
inline EnumerationResult enumerate_stable_signatures(int g, int n) {
    EnumerationResult out;
    if (g < 0 || n < 0 || n <= 2 - 2 * g) {
        out.diagnostic = "no stable signatures: require n > 2 - 2g (got g=" + std::to_string(g) +
                         ", n=" + std::to_string(n) + ")";
        return out;
    }
    const int max_vertices = std::max(1, 2 * g - 2 + n);
    std::set<std::string> seen;

    for (int k = 1; k <= max_vertices; ++k) {
        std::vector<Edge> pairs;
        for (int i = 0; i < k; ++i)
            for (int j = i; j < k; ++j) pairs.emplace_back(i, j);

        for (int e = k - 1; e <= g + k - 1; ++e) {
            const int b1 = e - k + 1;
            if (b1 < 0 || b1 > g) continue;
            const int genus_budget = g - b1;

            std::vector<int> gen;
            detail::compositions(genus_budget, k, gen, [&](const std::vector<int>& genera) {
                // all assignments of marks 1..n to the k vertices
                std::vector<int> owner(n, 0);
                while (true) {
                    SignatureGraph base;
                    base.n_marks = n;
                    base.vertices.resize(k);
                    for (int v = 0; v < k; ++v) base.vertices[v].genus = genera[v];
                    for (int m = 0; m < n; ++m) base.vertices[owner[m]].marks.insert(m + 1);

                    std::vector<Edge> cur;
                    detail::edge_multisets(pairs, 0, e, cur, [&](const std::vector<Edge>& es) {
                        SignatureGraph cand = base;
                        cand.edges = es;
                        if (!is_connected(cand) || !is_stable(cand)) return;
                        if (arithmetic_genus(cand) != g) return;  // paranoia; holds by construction
                        if (seen.insert(canonical_form(cand)).second)
                            out.graphs.push_back(cand.normalized());
                    });

                    // next mark assignment
                    int m = 0;
                    for (; m < n; ++m) {
                        if (++owner[m] < k) break;
                        owner[m] = 0;
                    }
                    if (m == n) break;
                }
            });
        }
    }
    return out;
}

}  // namespace nodal
