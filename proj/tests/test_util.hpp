#pragma once

// Shared helpers for the test suites: an independent radix-2 FFT used as a
// sampling oracle, random series generators, and small graph builders.

#include <complex>
#include <random>
#include <vector>

#include "nodal/laurent.hpp"
#include "nodal/signature.hpp"

namespace testutil {

using nodal::cplx;

/// In-place radix-2 FFT (size must be a power of two). Independent of the
/// library's coefficient arithmetic; used to cross-check evaluations.
inline void fft(std::vector<cplx>& a, bool inverse) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2.0 * nodal::pi / static_cast<double>(len) * (inverse ? -1.0 : 1.0);
        const cplx wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cplx w(1.0);
            for (std::size_t j = 0; j < len / 2; ++j) {
                const cplx u = a[i + j];
                const cplx v = a[i + j + len / 2] * w;
                a[i + j] = u + v;
                a[i + j + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse)
        for (cplx& x : a) x /= static_cast<double>(n);
}

/// Values of a truncated Laurent series on the M-point unit circle grid
/// z_j = exp(2 pi i j / M) (M a power of two, M > 2N), via the FFT of its
/// coefficient array: values_j = sum_n c_n z_j^n.
inline std::vector<cplx> circle_values_by_fft(const nodal::TruncatedLaurent& f, std::size_t M) {
    std::vector<cplx> a(M, cplx(0.0));
    for (int n = -f.trunc(); n <= f.trunc(); ++n) {
        const std::size_t slot = n >= 0 ? static_cast<std::size_t>(n)
                                        : M - static_cast<std::size_t>(-n);
        a[slot] += f.coeff(n);
    }
    fft(a, false);
    return a;
}

/// Coefficients c_p = (1/M) sum_j values_j z_j^{-p} from circle samples;
/// returns the array in FFT slot order (negative modes wrap).
inline std::vector<cplx> circle_coeffs_by_fft(std::vector<cplx> values) {
    fft(values, true);
    return values;
}

inline nodal::TruncatedLaurent random_series(int trunc, double s, std::mt19937_64& rng,
                                             bool minus_too = true) {
    std::normal_distribution<double> gauss;
    nodal::TruncatedLaurent f(trunc);
    const int lo = minus_too ? -trunc : 1;
    for (int n = lo; n <= trunc; ++n)
        f.set_coeff(n, cplx(gauss(rng), gauss(rng)) * std::pow(1.0 + std::abs(n), -(s + 1.0)));
    return f;
}

inline nodal::SignatureGraph graph(std::vector<nodal::VertexLabel> verts,
                                   std::vector<nodal::Edge> edges, int n_marks) {
    nodal::SignatureGraph g;
    g.vertices = std::move(verts);
    g.edges = std::move(edges);
    g.n_marks = n_marks;
    g.validate();
    return g;
}

}  // namespace testutil
