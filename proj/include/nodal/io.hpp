#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "nodal/core.hpp"
#include "nodal/laurent.hpp"
#include "nodal/local_model.hpp"
#include "nodal/moduli.hpp"
#include "nodal/plumbing.hpp"
#include "nodal/signature.hpp"

namespace nodal::io {

using json = nlohmann::json;

// complex numbers serialize as [re, im] pairs
inline json to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline cplx cplx_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw std::invalid_argument("complex value must be a [re, im] pair");
    return cplx(j[0].get<double>(), j[1].get<double>());
}

// ---------------------------------------------------------------------------
// signature graphs: {"vertices":[{"genus":g,"marks":[...]},...],
//                    "edges":[[i,j],...]} with i <= j

inline json to_json(const SignatureGraph& g) {
    json verts = json::array();
    for (const auto& vl : g.vertices) {
        json marks = json::array();
        for (int m : vl.marks) marks.push_back(m);
        verts.push_back({{"genus", vl.genus}, {"marks", marks}});
    }
    json edges = json::array();
    for (const Edge& e : g.edges) edges.push_back(json::array({e.u, e.v}));
    return json{{"vertices", verts}, {"edges", edges}};
}

inline SignatureGraph signature_from_json(const json& j) {
    SignatureGraph g;
    if (!j.contains("vertices") || !j["vertices"].is_array())
        throw std::invalid_argument("signature graph needs a vertices array");
    int max_mark = 0;
    for (const json& jv : j["vertices"]) {
        VertexLabel vl;
        vl.genus = jv.at("genus").get<int>();
        if (jv.contains("marks"))
            for (const json& jm : jv["marks"]) {
                const int m = jm.get<int>();
                vl.marks.insert(m);
                max_mark = std::max(max_mark, m);
            }
        g.vertices.push_back(std::move(vl));
    }
    if (j.contains("edges"))
        for (const json& je : j["edges"]) {
            if (!je.is_array() || je.size() != 2)
                throw std::invalid_argument("edge must be an [i, j] pair");
            g.edges.emplace_back(je[0].get<int>(), je[1].get<int>());
        }
    g.n_marks = j.value("n_marks", max_mark);
    g.validate();
    return g;
}

// ---------------------------------------------------------------------------
// series: {"N":int,"coeffs":[[n,re,im],...]} with omitted entries zero

inline json to_json(const TruncatedLaurent& f) {
    json coeffs = json::array();
    for (int n = -f.trunc(); n <= f.trunc(); ++n) {
        const cplx c = f.coeff(n);
        if (c == cplx(0.0)) continue;
        coeffs.push_back(json::array({n, c.real(), c.imag()}));
    }
    return json{{"N", f.trunc()}, {"coeffs", coeffs}};
}

inline TruncatedLaurent laurent_from_json(const json& j) {
    const int N = j.at("N").get<int>();
    TruncatedLaurent f(N);
    if (j.contains("coeffs"))
        for (const json& jc : j["coeffs"]) {
            if (!jc.is_array() || jc.size() != 3)
                throw std::invalid_argument("coefficient entry must be [n, re, im]");
            f.set_coeff(jc[0].get<int>(), cplx(jc[1].get<double>(), jc[2].get<double>()));
        }
    return f;
}

// ---------------------------------------------------------------------------
// solver configuration

inline json to_json(const SolverConfig& c) {
    return json{{"s", c.s},     {"N", c.trunc},        {"delta", c.delta},
                {"eps", c.eps}, {"tol", c.tol},        {"max_iter", c.max_iter},
                {"circle_samples_factor", c.circle_samples_factor}};
}

inline SolverConfig config_from_json(const json& j) {
    SolverConfig c;
    c.s = j.value("s", c.s);
    c.trunc = j.value("N", c.trunc);
    c.delta = j.value("delta", c.delta);
    c.eps = j.value("eps", c.eps);
    c.tol = j.value("tol", c.tol);
    c.max_iter = j.value("max_iter", c.max_iter);
    c.circle_samples_factor = j.value("circle_samples_factor", c.circle_samples_factor);
    c.validate();
    return c;
}

/// Minimal flat TOML reader (key = value lines, # comments) for configs;
/// JSON input is detected by the leading brace.
inline SolverConfig config_from_text(const std::string& text) {
    std::string trimmed = text;
    const std::size_t first = trimmed.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && trimmed[first] == '{')
        return config_from_json(json::parse(text));
    json j = json::object();
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto strip = [](std::string s) {
            const std::size_t a = s.find_first_not_of(" \t\r\n");
            const std::size_t b = s.find_last_not_of(" \t\r\n");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        const std::string key = strip(line.substr(0, eq));
        const std::string val = strip(line.substr(eq + 1));
        if (key.empty() || val.empty()) continue;
        try {
            if (val.find('.') != std::string::npos || val.find('e') != std::string::npos ||
                val.find('E') != std::string::npos)
                j[key] = std::stod(val);
            else
                j[key] = std::stoll(val);
        } catch (const std::exception&) {
            throw std::invalid_argument("config: cannot parse value for '" + key + "'");
        }
    }
    return config_from_json(j);
}

// ---------------------------------------------------------------------------
// gluing data

inline json to_json(const GluingDatum& d) {
    return json{{"a", to_json(d.a)}, {"b", to_json(d.b)}, {"xi", to_json(d.xi)},
                {"eta", to_json(d.eta)}};
}

inline GluingDatum datum_from_json(const json& j) {
    GluingDatum d{cplx_from_json(j.at("a")), laurent_from_json(j.at("xi")),
                  laurent_from_json(j.at("eta")), cplx_from_json(j.at("b"))};
    if (d.xi.trunc() != d.eta.trunc())
        throw std::invalid_argument("datum series must share a truncation");
    return d;
}

// ---------------------------------------------------------------------------
// annuli and node fibers

inline json to_json(const AnnulusSpec& a) { return json{{"r", a.r}, {"R", a.R}}; }

inline json to_json(const NodeFiber& f) {
    json j{{"node", f.is_node}};
    if (!f.is_node) {
        j["r"] = f.annulus.r;
        j["R"] = f.annulus.R;
        j["modulus"] = modulus(f.annulus);
        j["geodesic_length"] = core_geodesic_length(f.annulus);
        j["degenerate_warning"] = f.degenerate_warning;
    }
    return j;
}

// ---------------------------------------------------------------------------
// sphere points, degeneration paths, bubble trees

inline json to_json(const SpherePoint& p) {
    if (p.inf) return json("inf");
    return to_json(p.v);
}

inline SpherePoint sphere_point_from_json(const json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "inf") return SpherePoint::infinity();
        throw std::invalid_argument("sphere point string must be \"inf\"");
    }
    return SpherePoint{cplx_from_json(j), false};
}

inline json to_json(const detail::Poly& p) {
    json arr = json::array();
    for (std::size_t k = 0; k < p.c.size(); ++k) {
        if (p.c[k] == cplx(0.0)) continue;
        arr.push_back(json::array({static_cast<int>(k), p.c[k].real(), p.c[k].imag()}));
    }
    return arr;
}

inline detail::Poly poly_from_json(const json& j) {
    detail::Poly p;
    if (!j.is_array()) throw std::invalid_argument("polynomial must be [[k, re, im], ...]");
    for (const json& jt : j) {
        if (!jt.is_array() || jt.size() != 3)
            throw std::invalid_argument("polynomial term must be [k, re, im]");
        const int k = jt[0].get<int>();
        if (k < 0) throw std::invalid_argument("polynomial powers must be nonnegative");
        if (static_cast<std::size_t>(k) >= p.c.size()) p.c.resize(static_cast<std::size_t>(k) + 1);
        p.c[static_cast<std::size_t>(k)] = cplx(jt[1].get<double>(), jt[2].get<double>());
    }
    p.trim();
    return p;
}

/// Path point: "inf", a [[k,re,im],...] polynomial, or
/// {"num": poly, "den": poly} for a rational function of t.
inline RationalPath rational_path_from_json(const json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "inf") return RationalPath::infinity();
        throw std::invalid_argument("path point string must be \"inf\"");
    }
    if (j.is_object()) {
        RationalPath p{poly_from_json(j.at("num")), poly_from_json(j.at("den"))};
        p.validate();
        return p;
    }
    RationalPath p = RationalPath::polynomial(poly_from_json(j));
    p.validate();
    return p;
}

inline json to_json(const RationalPath& p) {
    if (p.den.is_zero()) return json("inf");
    if (p.den.c.size() == 1 && p.den.c[0] == cplx(1.0)) return to_json(p.num);
    return json{{"num", to_json(p.num)}, {"den", to_json(p.den)}};
}

inline json to_json(const DegenerationPath& p) {
    json pts = json::array();
    for (const RationalPath& q : p.points) pts.push_back(to_json(q));
    return json{{"points", pts}};
}

inline DegenerationPath path_from_json(const json& j) {
    DegenerationPath p;
    for (const json& jp : j.at("points")) p.points.push_back(rational_path_from_json(jp));
    p.validate();
    return p;
}

inline json to_json(const BubbleTree& t) {
    json pos = json::array();
    for (const auto& vert : t.positions) {
        json vp = json::array();
        for (const auto& sp : vert) {
            vp.push_back(json{{"kind", sp.kind == BubbleTree::SpecialPos::Kind::mark ? "mark" : "node"},
                              {"id", sp.id},
                              {"pos", to_json(sp.pos)}});
        }
        pos.push_back(vp);
    }
    json j = to_json(t.graph);
    j["n_marks"] = t.graph.n_marks;
    j["positions"] = pos;
    return j;
}

// ---------------------------------------------------------------------------
// files

inline json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("malformed JSON in " + path + ": " + e.what());
    }
    return j;
}

inline std::string load_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// FNV-1a digest of a canonical dump; used to echo inputs in reports.
inline std::string digest(const json& j) {
    const std::string s = j.dump();
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace nodal::io
