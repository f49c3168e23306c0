#pragma once

#include <array>
#include <cmath>
#include <cstddef>

#include "invfem/errors.hpp"

// Small fixed-size vector/matrix types templated on the scalar so that dual
// (automatic-differentiation) scalars flow through all kinematic algebra,
// including determinants and matrix inverses.

namespace invfem {

template <class T>
struct Vec3 {
    std::array<T, 3> a{};

    Vec3() = default;
    Vec3(T x, T y, T z) : a{x, y, z} {}

    T& operator[](std::size_t i) { return a[i]; }
    const T& operator[](std::size_t i) const { return a[i]; }

    Vec3& operator+=(const Vec3& o) {
        for (int i = 0; i < 3; ++i) a[i] += o.a[i];
        return *this;
    }
    Vec3& operator-=(const Vec3& o) {
        for (int i = 0; i < 3; ++i) a[i] -= o.a[i];
        return *this;
    }
    Vec3& operator*=(const T& s) {
        for (int i = 0; i < 3; ++i) a[i] *= s;
        return *this;
    }
};

template <class T>
Vec3<T> operator+(Vec3<T> x, const Vec3<T>& y) { return x += y; }
template <class T>
Vec3<T> operator-(Vec3<T> x, const Vec3<T>& y) { return x -= y; }
template <class T>
Vec3<T> operator*(const T& s, Vec3<T> x) { return x *= s; }
template <class T>
Vec3<T> operator*(Vec3<T> x, const T& s) { return x *= s; }
template <class T>
Vec3<T> operator-(const Vec3<T>& x) { return Vec3<T>{-x[0], -x[1], -x[2]}; }

template <class T>
T dot(const Vec3<T>& x, const Vec3<T>& y) {
    return x[0] * y[0] + x[1] * y[1] + x[2] * y[2];
}

template <class T>
Vec3<T> cross(const Vec3<T>& x, const Vec3<T>& y) {
    return Vec3<T>{x[1] * y[2] - x[2] * y[1],
                   x[2] * y[0] - x[0] * y[2],
                   x[0] * y[1] - x[1] * y[0]};
}

inline double norm(const Vec3<double>& x) { return std::sqrt(dot(x, x)); }

using Vec3d = Vec3<double>;

template <class T>
struct Mat3 {
    // Row-major 3x3.
    std::array<T, 9> m{};

    Mat3() = default;

    static Mat3 identity() {
        Mat3 r;
        r(0, 0) = T(1);
        r(1, 1) = T(1);
        r(2, 2) = T(1);
        return r;
    }

    static Mat3 diag(T a, T b, T c) {
        Mat3 r;
        r(0, 0) = a;
        r(1, 1) = b;
        r(2, 2) = c;
        return r;
    }

    T& operator()(std::size_t i, std::size_t j) { return m[3 * i + j]; }
    const T& operator()(std::size_t i, std::size_t j) const { return m[3 * i + j]; }

    Mat3& operator+=(const Mat3& o) {
        for (int i = 0; i < 9; ++i) m[i] += o.m[i];
        return *this;
    }
    Mat3& operator-=(const Mat3& o) {
        for (int i = 0; i < 9; ++i) m[i] -= o.m[i];
        return *this;
    }
    Mat3& operator*=(const T& s) {
        for (int i = 0; i < 9; ++i) m[i] *= s;
        return *this;
    }
};

template <class T>
Mat3<T> operator+(Mat3<T> x, const Mat3<T>& y) { return x += y; }
template <class T>
Mat3<T> operator-(Mat3<T> x, const Mat3<T>& y) { return x -= y; }
template <class T>
Mat3<T> operator*(const T& s, Mat3<T> x) { return x *= s; }
template <class T>
Mat3<T> operator*(Mat3<T> x, const T& s) { return x *= s; }

template <class T>
Mat3<T> operator*(const Mat3<T>& x, const Mat3<T>& y) {
    Mat3<T> r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            T s = x(i, 0) * y(0, j);
            s += x(i, 1) * y(1, j);
            s += x(i, 2) * y(2, j);
            r(i, j) = s;
        }
    return r;
}

template <class T>
Vec3<T> operator*(const Mat3<T>& x, const Vec3<T>& v) {
    Vec3<T> r;
    for (int i = 0; i < 3; ++i)
        r[i] = x(i, 0) * v[0] + x(i, 1) * v[1] + x(i, 2) * v[2];
    return r;
}

template <class T>
Mat3<T> transpose(const Mat3<T>& x) {
    Mat3<T> r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = x(j, i);
    return r;
}

template <class T>
T trace(const Mat3<T>& x) { return x(0, 0) + x(1, 1) + x(2, 2); }

template <class T>
T det(const Mat3<T>& x) {
    return x(0, 0) * (x(1, 1) * x(2, 2) - x(1, 2) * x(2, 1)) -
           x(0, 1) * (x(1, 0) * x(2, 2) - x(1, 2) * x(2, 0)) +
           x(0, 2) * (x(1, 0) * x(2, 1) - x(1, 1) * x(2, 0));
}

// Inverse via adjugate over determinant; works for dual scalars.
template <class T>
Mat3<T> inverse(const Mat3<T>& x) {
    Mat3<T> adj;
    adj(0, 0) = x(1, 1) * x(2, 2) - x(1, 2) * x(2, 1);
    adj(0, 1) = x(0, 2) * x(2, 1) - x(0, 1) * x(2, 2);
    adj(0, 2) = x(0, 1) * x(1, 2) - x(0, 2) * x(1, 1);
    adj(1, 0) = x(1, 2) * x(2, 0) - x(1, 0) * x(2, 2);
    adj(1, 1) = x(0, 0) * x(2, 2) - x(0, 2) * x(2, 0);
    adj(1, 2) = x(0, 2) * x(1, 0) - x(0, 0) * x(1, 2);
    adj(2, 0) = x(1, 0) * x(2, 1) - x(1, 1) * x(2, 0);
    adj(2, 1) = x(0, 1) * x(2, 0) - x(0, 0) * x(2, 1);
    adj(2, 2) = x(0, 0) * x(1, 1) - x(0, 1) * x(1, 0);
    T d = det(x);
    Mat3<T> r;
    for (int i = 0; i < 9; ++i) r.m[i] = adj.m[i] / d;
    return r;
}

template <class T>
T ddot(const Mat3<T>& x, const Mat3<T>& y) {
    T s = x.m[0] * y.m[0];
    for (int i = 1; i < 9; ++i) s += x.m[i] * y.m[i];
    return s;
}

template <class T>
Mat3<T> outer(const Vec3<T>& x, const Vec3<T>& y) {
    Mat3<T> r;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r(i, j) = x[i] * y[j];
    return r;
}

using Mat3d = Mat3<double>;

inline double frobenius_norm(const Mat3d& x) {
    double s = 0;
    for (double v : x.m) s += v * v;
    return std::sqrt(s);
}

}  // namespace invfem
