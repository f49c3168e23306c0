#pragma once

#include <array>
#include <cmath>
#include <cstddef>

// Forward-mode automatic differentiation scalars.
//
// Dual1<N> carries a value and N first-derivative seeds; Dual2<N> additionally
// carries the symmetric N x N second-derivative block (packed upper triangle).
// Seeding every local unknown of an element and evaluating the energy density
// once yields the exact element gradient and Hessian, replacing symbolic
// differentiation of the constitutive law.
//
// Arithmetic on the value component is ordinary IEEE double arithmetic: the
// value of every operation is computed by the same expression a plain double
// evaluation would use.

namespace invfem {

template <int N>
struct Dual1 {
    double v = 0;
    std::array<double, N> g{};

    Dual1() = default;
    Dual1(double value) : v(value) {}  // NOLINT: implicit by design

    static Dual1 seeded(double value, int dir) {
        Dual1 r(value);
        r.g[dir] = 1.0;
        return r;
    }

    Dual1& operator+=(const Dual1& o) {
        v += o.v;
        for (int i = 0; i < N; ++i) g[i] += o.g[i];
        return *this;
    }
    Dual1& operator-=(const Dual1& o) {
        v -= o.v;
        for (int i = 0; i < N; ++i) g[i] -= o.g[i];
        return *this;
    }
};

template <int N>
Dual1<N> operator+(Dual1<N> a, const Dual1<N>& b) { return a += b; }
template <int N>
Dual1<N> operator-(Dual1<N> a, const Dual1<N>& b) { return a -= b; }
template <int N>
Dual1<N> operator-(const Dual1<N>& a) {
    Dual1<N> r(-a.v);
    for (int i = 0; i < N; ++i) r.g[i] = -a.g[i];
    return r;
}

template <int N>
Dual1<N> operator*(const Dual1<N>& a, const Dual1<N>& b) {
    Dual1<N> r(a.v * b.v);
    for (int i = 0; i < N; ++i) r.g[i] = a.v * b.g[i] + b.v * a.g[i];
    return r;
}

template <int N>
Dual1<N> operator/(const Dual1<N>& a, const Dual1<N>& b) {
    Dual1<N> r(a.v / b.v);
    const double inv = 1.0 / b.v;
    for (int i = 0; i < N; ++i) r.g[i] = (a.g[i] - r.v * b.g[i]) * inv;
    return r;
}

// f(a) with first derivative f1 at a.v.
template <int N>
Dual1<N> chain(const Dual1<N>& a, double value, double f1) {
    Dual1<N> r(value);
    for (int i = 0; i < N; ++i) r.g[i] = f1 * a.g[i];
    return r;
}

template <int N>
Dual1<N> log(const Dual1<N>& a) { return chain(a, std::log(a.v), 1.0 / a.v); }
template <int N>
Dual1<N> sqrt(const Dual1<N>& a) {
    const double s = std::sqrt(a.v);
    return chain(a, s, 0.5 / s);
}
template <int N>
Dual1<N> pow(const Dual1<N>& a, double e) {
    return chain(a, std::pow(a.v, e), e * std::pow(a.v, e - 1.0));
}

template <int N>
struct Dual2 {
    static constexpr int packed_size = N * (N + 1) / 2;

    double v = 0;
    std::array<double, N> g{};
    std::array<double, packed_size> h{};  // upper triangle, row-major

    Dual2() = default;
    Dual2(double value) : v(value) {}  // NOLINT: implicit by design

    static constexpr int idx(int i, int j) {
        // requires i <= j
        return i * N - i * (i - 1) / 2 + (j - i);
    }

    static Dual2 seeded(double value, int dir) {
        Dual2 r(value);
        r.g[dir] = 1.0;
        return r;
    }

    double hess(int i, int j) const { return i <= j ? h[idx(i, j)] : h[idx(j, i)]; }

    Dual2& operator+=(const Dual2& o) {
        v += o.v;
        for (int i = 0; i < N; ++i) g[i] += o.g[i];
        for (int i = 0; i < packed_size; ++i) h[i] += o.h[i];
        return *this;
    }
    Dual2& operator-=(const Dual2& o) {
        v -= o.v;
        for (int i = 0; i < N; ++i) g[i] -= o.g[i];
        for (int i = 0; i < packed_size; ++i) h[i] -= o.h[i];
        return *this;
    }
};

template <int N>
Dual2<N> operator+(Dual2<N> a, const Dual2<N>& b) { return a += b; }
template <int N>
Dual2<N> operator-(Dual2<N> a, const Dual2<N>& b) { return a -= b; }
template <int N>
Dual2<N> operator-(const Dual2<N>& a) {
    Dual2<N> r(-a.v);
    for (int i = 0; i < N; ++i) r.g[i] = -a.g[i];
    for (int i = 0; i < Dual2<N>::packed_size; ++i) r.h[i] = -a.h[i];
    return r;
}

template <int N>
Dual2<N> operator*(const Dual2<N>& a, const Dual2<N>& b) {
    Dual2<N> r(a.v * b.v);
    for (int i = 0; i < N; ++i) r.g[i] = a.v * b.g[i] + b.v * a.g[i];
    int k = 0;
    for (int i = 0; i < N; ++i)
        for (int j = i; j < N; ++j, ++k)
            r.h[k] = a.v * b.h[k] + b.v * a.h[k] + a.g[i] * b.g[j] + a.g[j] * b.g[i];
    return r;
}

// f(a) with derivatives f1, f2 at a.v.
template <int N>
Dual2<N> chain(const Dual2<N>& a, double value, double f1, double f2) {
    Dual2<N> r(value);
    for (int i = 0; i < N; ++i) r.g[i] = f1 * a.g[i];
    int k = 0;
    for (int i = 0; i < N; ++i)
        for (int j = i; j < N; ++j, ++k)
            r.h[k] = f1 * a.h[k] + f2 * a.g[i] * a.g[j];
    return r;
}

template <int N>
Dual2<N> operator/(const Dual2<N>& a, const Dual2<N>& b) {
    Dual2<N> r(a.v / b.v);
    const double inv = 1.0 / b.v;
    for (int i = 0; i < N; ++i) r.g[i] = (a.g[i] - r.v * b.g[i]) * inv;
    int k = 0;
    for (int i = 0; i < N; ++i)
        for (int j = i; j < N; ++j, ++k)
            r.h[k] = (a.h[k] - r.v * b.h[k] - r.g[i] * b.g[j] - r.g[j] * b.g[i]) * inv;
    return r;
}

template <int N>
Dual2<N> log(const Dual2<N>& a) {
    const double iv = 1.0 / a.v;
    return chain(a, std::log(a.v), iv, -iv * iv);
}
template <int N>
Dual2<N> sqrt(const Dual2<N>& a) {
    const double s = std::sqrt(a.v);
    return chain(a, s, 0.5 / s, -0.25 / (s * a.v));
}
template <int N>
Dual2<N> pow(const Dual2<N>& a, double e) {
    return chain(a, std::pow(a.v, e), e * std::pow(a.v, e - 1.0),
                 e * (e - 1.0) * std::pow(a.v, e - 2.0));
}

// Mixed dual/double operators, provided so energy densities read naturally.
template <int N>
Dual1<N> operator*(double s, Dual1<N> a) {
    a.v *= s;
    for (int i = 0; i < N; ++i) a.g[i] *= s;
    return a;
}
template <int N>
Dual1<N> operator*(const Dual1<N>& a, double s) { return s * a; }
template <int N>
Dual1<N> operator/(Dual1<N> a, double s) {
    a.v /= s;
    for (int i = 0; i < N; ++i) a.g[i] /= s;
    return a;
}
template <int N>
Dual1<N> operator+(Dual1<N> a, double s) { a.v += s; return a; }
template <int N>
Dual1<N> operator+(double s, Dual1<N> a) { a.v += s; return a; }
template <int N>
Dual1<N> operator-(Dual1<N> a, double s) { a.v -= s; return a; }
template <int N>
Dual1<N> operator-(double s, const Dual1<N>& a) { return (-a) + s; }
template <int N>
Dual1<N> operator/(double s, const Dual1<N>& a) { return Dual1<N>(s) / a; }

template <int N>
Dual2<N> operator*(double s, Dual2<N> a) {
    a.v *= s;
    for (int i = 0; i < N; ++i) a.g[i] *= s;
    for (int i = 0; i < Dual2<N>::packed_size; ++i) a.h[i] *= s;
    return a;
}
template <int N>
Dual2<N> operator*(const Dual2<N>& a, double s) { return s * a; }
template <int N>
Dual2<N> operator/(Dual2<N> a, double s) {
    a.v /= s;
    for (int i = 0; i < N; ++i) a.g[i] /= s;
    for (int i = 0; i < Dual2<N>::packed_size; ++i) a.h[i] /= s;
    return a;
}
template <int N>
Dual2<N> operator+(Dual2<N> a, double s) { a.v += s; return a; }
template <int N>
Dual2<N> operator+(double s, Dual2<N> a) { a.v += s; return a; }
template <int N>
Dual2<N> operator-(Dual2<N> a, double s) { a.v -= s; return a; }
template <int N>
Dual2<N> operator-(double s, const Dual2<N>& a) { return (-a) + s; }
template <int N>
Dual2<N> operator/(double s, const Dual2<N>& a) { return Dual2<N>(s) / a; }

// Value extraction that also accepts plain doubles, so templated kinematics
// can branch on J > 0 uniformly.
inline double value_of(double x) { return x; }
template <int N>
double value_of(const Dual1<N>& x) { return x.v; }
template <int N>
double value_of(const Dual2<N>& x) { return x.v; }

}  // namespace invfem
