#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

#include "nodal/core.hpp"

namespace nodal {

/// Weight exponent s > 1/2 and circle radius r in (0, 1] for the
/// radius-weighted Sobolev norm on Laurent coefficients.
struct SobolevParams {
    double s = 4.0;
    double r = 1.0;

    void validate() const {
        if (!(s > 0.5)) throw std::domain_error("Sobolev weight requires s > 1/2");
        if (!(r > 0.0) || r > 1.0) throw std::domain_error("radius must lie in (0, 1]");
    }
};

/**
 * Finite Laurent series sum_{|n| <= N} c_n z^n, the computational stand-in
 * for a Hardy-space element. Value type: all operations return fresh
 * series; coefficient storage is dense, index n + N.
 */
class TruncatedLaurent {
  public:
    TruncatedLaurent() : TruncatedLaurent(1) {}
    explicit TruncatedLaurent(int trunc) : trunc_(trunc), c_(2 * static_cast<std::size_t>(trunc) + 1) {
        if (trunc < 1) throw std::invalid_argument("truncation order must be positive");
    }

    static TruncatedLaurent identity(int trunc) {
        TruncatedLaurent z(trunc);
        z.set_coeff(1, 1.0);
        return z;
    }
    static TruncatedLaurent constant(int trunc, cplx v) {
        TruncatedLaurent z(trunc);
        z.set_coeff(0, v);
        return z;
    }

    int trunc() const { return trunc_; }

    cplx coeff(int n) const {
        return (n < -trunc_ || n > trunc_) ? cplx(0.0) : c_[static_cast<std::size_t>(n + trunc_)];
    }
    void set_coeff(int n, cplx v) {
        if (n < -trunc_ || n > trunc_) throw std::out_of_range("coefficient index out of range");
        c_[static_cast<std::size_t>(n + trunc_)] = v;
    }

    /// Positive-mode part (n > 0).
    TruncatedLaurent plus() const {
        TruncatedLaurent out(trunc_);
        for (int n = 1; n <= trunc_; ++n) out.set_coeff(n, coeff(n));
        return out;
    }
    /// Nonpositive-mode part (n <= 0).
    TruncatedLaurent minus() const {
        TruncatedLaurent out(trunc_);
        for (int n = -trunc_; n <= 0; ++n) out.set_coeff(n, coeff(n));
        return out;
    }
    bool is_plus() const {
        for (int n = -trunc_; n <= 0; ++n)
            if (coeff(n) != cplx(0.0)) return false;
        return true;
    }
    bool is_minus() const {
        for (int n = 1; n <= trunc_; ++n)
            if (coeff(n) != cplx(0.0)) return false;
        return true;
    }
    bool is_zero() const {
        for (const cplx& v : c_)
            if (v != cplx(0.0)) return false;
        return true;
    }

    TruncatedLaurent& operator+=(const TruncatedLaurent& o) {
        require_same_trunc(o);
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
        return *this;
    }
    TruncatedLaurent& operator-=(const TruncatedLaurent& o) {
        require_same_trunc(o);
        for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
        return *this;
    }
    TruncatedLaurent& operator*=(cplx a) {
        for (cplx& v : c_) v *= a;
        return *this;
    }
    friend TruncatedLaurent operator+(TruncatedLaurent a, const TruncatedLaurent& b) { return a += b; }
    friend TruncatedLaurent operator-(TruncatedLaurent a, const TruncatedLaurent& b) { return a -= b; }
    friend TruncatedLaurent operator*(cplx a, TruncatedLaurent b) { return b *= a; }

    friend bool operator==(const TruncatedLaurent&, const TruncatedLaurent&) = default;

    double max_coeff_distance(const TruncatedLaurent& o) const {
        require_same_trunc(o);
        double m = 0.0;
        for (std::size_t i = 0; i < c_.size(); ++i) m = std::max(m, std::abs(c_[i] - o.c_[i]));
        return m;
    }

  private:
    void require_same_trunc(const TruncatedLaurent& o) const {
        if (o.trunc_ != trunc_) throw std::invalid_argument("truncation orders differ");
    }

    int trunc_;
    std::vector<cplx> c_;
};

inline std::pair<TruncatedLaurent, TruncatedLaurent> split(const TruncatedLaurent& z) {
    return {z.plus(), z.minus()};
}

namespace detail {

/// v * r^e with the power taken through log space when it would leave the
/// representable range on its own.
inline cplx scale_by_power(cplx v, double r, long long e) {
    if (v == cplx(0.0) || e == 0) return v;
    const double t = static_cast<double>(e) * std::log(r);
    const double m = std::log(std::abs(v)) + t;
    if (m < -745.0) return cplx(0.0);
    if (m > 709.0) throw std::range_error("coefficient power scaling overflow");
    if (std::abs(t) < 690.0) return v * std::exp(t);
    return (v / std::abs(v)) * std::exp(m);
}

// Neumaier-compensated sum of nonnegative terms, largest first.
inline double compensated_descending_sum(std::vector<double>& terms) {
    std::sort(terms.begin(), terms.end(), std::greater<double>());
    double sum = 0.0, comp = 0.0;
    for (double t : terms) {
        const double next = sum + t;
        comp += (std::abs(sum) >= std::abs(t)) ? (sum - next) + t : (t - next) + sum;
        sum = next;
    }
    return sum + comp;
}

}  // namespace detail

/**
 * Radius-weighted Sobolev norm sqrt(sum (1+|n|)^{2s} r^{2n-2} |c_n|^2).
 * With r = 1 this is the plain boundary norm. Terms span many decades when
 * r is small, so they are accumulated in descending order with compensation.
 */
inline double sobolev_norm(const TruncatedLaurent& z, const SobolevParams& p) {
    p.validate();
    std::vector<double> terms;
    terms.reserve(2 * static_cast<std::size_t>(z.trunc()) + 1);
    for (int n = -z.trunc(); n <= z.trunc(); ++n) {
        const cplx c = z.coeff(n);
        if (c == cplx(0.0)) continue;
        const double lg = (p.s * std::log1p(std::abs(n)) +
                           static_cast<double>(n - 1) * std::log(p.r)) +
                          std::log(std::abs(c));
        if (lg < -370.0) continue;
        if (lg > 350.0) return std::numeric_limits<double>::infinity();
        const double amp = std::exp(lg);
        terms.push_back(amp * amp);
    }
    return std::sqrt(detail::compensated_descending_sum(terms));
}

inline double sobolev_norm(const TruncatedLaurent& z, double s) {
    return sobolev_norm(z, SobolevParams{s, 1.0});
}

/**
 * Conjugation by z -> rz: (zeta_r)(z) = r^{-1} zeta(rz), i.e. coefficient
 * n picks up r^{n-1}. An isometry from the (r, s) norm to the (1, s) norm;
 * leaves c_1 unchanged.
 */
inline TruncatedLaurent rescale(const TruncatedLaurent& z, double r) {
    if (!(r >= 1e-8 && r <= 1e8))
        throw std::domain_error("rescale radius outside [1e-8, 1e8]");
    TruncatedLaurent out(z.trunc());
    for (int n = -z.trunc(); n <= z.trunc(); ++n)
        out.set_coeff(n, detail::scale_by_power(z.coeff(n), r, n - 1));
    return out;
}

/// Multiply coefficient n by e^{i(n-1)theta}; conjugation by the rotation
/// z -> e^{i theta} z composed with value rotation e^{-i theta}.
inline TruncatedLaurent rotate(const TruncatedLaurent& z, double theta) {
    TruncatedLaurent out(z.trunc());
    for (int n = -z.trunc(); n <= z.trunc(); ++n) {
        const cplx c = z.coeff(n);
        if (c == cplx(0.0)) continue;
        out.set_coeff(n, c * std::polar(1.0, (n - 1) * theta));
    }
    return out;
}

struct ProductResult {
    TruncatedLaurent series;
    double dropped_tail = 0.0;  // l2 mass of modes beyond the shared truncation
};

/// Cauchy product with modes |n| > N dropped; the dropped l2 mass is
/// reported so callers can flag truncation loss.
inline ProductResult product_full(const TruncatedLaurent& a, const TruncatedLaurent& b) {
    if (a.trunc() != b.trunc()) throw std::invalid_argument("product needs a shared truncation");
    const int N = a.trunc();
    ProductResult out{TruncatedLaurent(N), 0.0};
    double dropped = 0.0;
    for (int p = -2 * N; p <= 2 * N; ++p) {
        cplx acc = 0.0;
        for (int k = std::max(-N, p - N); k <= std::min(N, p + N); ++k)
            acc += a.coeff(p - k) * b.coeff(k);
        if (p >= -N && p <= N)
            out.series.set_coeff(p, acc);
        else
            dropped += std::norm(acc);
    }
    out.dropped_tail = std::sqrt(dropped);
    return out;
}

inline TruncatedLaurent product(const TruncatedLaurent& a, const TruncatedLaurent& b) {
    return product_full(a, b).series;
}

/// Horner evaluation, positive modes in z and nonpositive modes in 1/z.
inline cplx evaluate(const TruncatedLaurent& f, cplx z) {
    const int N = f.trunc();
    if (z == cplx(0.0)) {
        for (int n = -N; n < 0; ++n)
            if (f.coeff(n) != cplx(0.0))
                throw std::domain_error("evaluation at 0 with negative modes present");
        return f.coeff(0);
    }
    cplx plus = 0.0;
    for (int n = N; n >= 1; --n) plus = plus * z + f.coeff(n);
    plus *= z;
    const cplx w = 1.0 / z;
    cplx minus = 0.0;
    for (int n = -N; n <= 0; ++n) minus = minus * w + f.coeff(n);
    return plus + minus;
}

/// Fraction of the weighted norm carried by the top eighth of the mode
/// range; a cheap truncation-quality monitor.
inline double tail_norm_fraction(const TruncatedLaurent& z, const SobolevParams& p) {
    const int N = z.trunc();
    const int cut = N - std::max(1, N / 8);
    TruncatedLaurent tail(N);
    for (int n = -N; n <= N; ++n)
        if (std::abs(n) > cut) tail.set_coeff(n, z.coeff(n));
    const double whole = sobolev_norm(z, p);
    if (whole == 0.0) return 0.0;
    return sobolev_norm(tail, p) / whole;
}

/// Total winding of a sampled closed loop of nonzero values about the
/// origin. Rejects a zero sample or an angular step of at least pi.
inline int winding_number(const std::vector<cplx>& loop) {
    if (loop.size() < 3) throw std::invalid_argument("winding number needs at least 3 samples");
    double total = 0.0;
    for (std::size_t i = 0; i < loop.size(); ++i) {
        const cplx cur = loop[i];
        const cplx nxt = loop[(i + 1) % loop.size()];
        if (cur == cplx(0.0) || nxt == cplx(0.0))
            throw std::domain_error("winding number undefined: sample at the origin");
        const double step = std::arg(nxt / cur);
        if (std::abs(step) >= pi - 1e-9)
            throw std::domain_error("winding number undersampled: angular step >= pi");
        total += step;
    }
    const double k = total / (2.0 * pi);
    const double rounded = std::round(k);
    if (std::abs(k - rounded) > 1e-6)
        throw numeric_error("winding number failed to close up to an integer");
    return static_cast<int>(rounded);
}

// ---------------------------------------------------------------------------
// Explicit constants for the Sobolev embedding and product estimates.

namespace detail {

/// zeta(2s) = sum_{n>=1} n^{-2s}; closed forms for integer s, otherwise a
/// partial sum plus an Euler-Maclaurin remainder.
inline double zeta_2s(double s) {
    const double two_s = 2.0 * s;
    if (two_s == std::floor(two_s)) {
        switch (static_cast<int>(two_s)) {
            case 2: return pi * pi / 6.0;
            case 4: return std::pow(pi, 4) / 90.0;
            case 6: return std::pow(pi, 6) / 945.0;
            case 8: return std::pow(pi, 8) / 9450.0;
            case 10: return std::pow(pi, 10) / 93555.0;
            case 12: return 691.0 * std::pow(pi, 12) / 638512875.0;
            default: break;
        }
    }
    const int K = 200000;
    double sum = 0.0, comp = 0.0;
    for (int n = K; n >= 1; --n) {  // ascending magnitude
        const double t = std::pow(static_cast<double>(n), -two_s);
        const double next = sum + t;
        comp += (std::abs(sum) >= t) ? (sum - next) + t : (t - next) + sum;
        sum = next;
    }
    // integral tail + half endpoint correction
    const double tail = std::pow(static_cast<double>(K), 1.0 - two_s) / (two_s - 1.0) -
                        0.5 * std::pow(static_cast<double>(K), -two_s);
    return sum + comp + tail;
}

}  // namespace detail

/// c(s) = sqrt(1 + sum_{n>=1} n^{-2s}): boundary sup of an H^s function is
/// at most c(s) times its norm.
inline double sobolev_embedding_constant(double s) {
    if (!(s > 0.5)) throw std::domain_error("embedding constant requires s > 1/2");
    return std::sqrt(1.0 + detail::zeta_2s(s));
}

namespace detail {

inline double product_constant_uncached(double s) {
    const double two_s = 2.0 * s;
    auto row_sum = [&](long long k) {
        // sum over n of (1+k)^{2s} / ((1+|k-n|)^{2s} (1+|n|)^{2s})
        const long long window = std::max<long long>(4 * k, 256);
        double sum = 0.0;
        const double top = two_s * std::log1p(static_cast<double>(k));
        for (long long n = -window; n <= k + window; ++n) {
            const double lg = top - two_s * std::log1p(static_cast<double>(std::llabs(k - n))) -
                              two_s * std::log1p(static_cast<double>(std::llabs(n)));
            sum += std::exp(lg);
        }
        // crude tail bound: beyond the window both factors dominate (1+k)
        const double edge = std::exp(top - two_s * std::log1p(static_cast<double>(window)) -
                                     two_s * std::log1p(static_cast<double>(window - k > 0 ? window - k : 1)));
        sum += 4.0 * edge;
        return sum;
    };
    double sup = 0.0;
    for (long long k = 0; k <= 64; ++k) sup = std::max(sup, row_sum(k));
    for (long long k : {128LL, 256LL, 512LL, 1024LL, 2048LL, 4096LL}) sup = std::max(sup, row_sum(k));
    // k -> infinity limit: two copies of sum_n (1+|n|)^{-2s}
    sup = std::max(sup, 2.0 * (2.0 * zeta_2s(s) - 1.0));
    return std::sqrt(sup);
}

}  // namespace detail

/// C(s) = sup_k sqrt(sum_n (1+|k|)^{2s} / ((1+|k-n|)^{2s}(1+|n|)^{2s})),
/// the explicit constant in ||fg||_s <= C ||f||_s ||g||_s.
inline double product_constant(double s) {
    if (!(s > 0.5)) throw std::domain_error("product constant requires s > 1/2");
    static std::map<double, double> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(s);
    if (it != cache.end()) return it->second;
    const double v = detail::product_constant_uncached(s);
    cache.emplace(s, v);
    return v;
}

struct SupBoundCheck {
    bool ok = false;
    double sup = 0.0;
    double bound = 0.0;
};

/**
 * Samples |zeta| on the two boundary circles of the annulus r <= |z| <= R
 * (where a holomorphic function attains its sup) and verifies
 * sup <= c(s) (r ||zeta_-||_{r,s} + R ||zeta_+||_{R,s}).
 */
inline SupBoundCheck sup_annulus_bound_check(const TruncatedLaurent& z, double r, double R,
                                             double s, int samples = 4096) {
    if (!(r > 0.0) || r > R) throw std::domain_error("annulus requires 0 < r <= R");
    if (R > 1.0) throw std::domain_error("weighted norms are defined for radii in (0, 1]");
    SupBoundCheck out;
    for (int i = 0; i < samples; ++i) {
        const double th = 2.0 * pi * i / samples;
        out.sup = std::max(out.sup, std::abs(evaluate(z, std::polar(r, th))));
        out.sup = std::max(out.sup, std::abs(evaluate(z, std::polar(R, th))));
    }
    auto [zp, zm] = split(z);
    const double c = sobolev_embedding_constant(s);
    out.bound = c * (r * sobolev_norm(zm, SobolevParams{s, r}) +
                     R * sobolev_norm(zp, SobolevParams{s, R}));
    out.ok = out.sup <= out.bound * (1.0 + 1e-12) + 1e-300;
    return out;
}

}  // namespace nodal
