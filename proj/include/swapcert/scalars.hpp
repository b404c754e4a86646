#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace swapcert {

namespace detail {

inline std::int64_t checked_add(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_add_overflow(a, b, &r))
        throw std::overflow_error("exact scalar addition overflow");
    return r;
}

inline std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
    std::int64_t r;
    if (__builtin_mul_overflow(a, b, &r))
        throw std::overflow_error("exact scalar multiplication overflow");
    return r;
}

} // namespace detail

/// Exact scalar of the form (a + b*sqrt(2)) / 2^k with 64-bit integer a, b.
/// Closed under +, -, *: the ring generated by 1/2 and sqrt(2)/2, which covers
/// every coefficient produced by the swap transfer polynomials and by writing
/// the diagonal observable D as (Z + X)/sqrt(2).
class ExactScalar {
public:
    ExactScalar() : a_(0), b_(0), k_(0) {}
    ExactScalar(std::int64_t integer) : a_(integer), b_(0), k_(0) {}
    ExactScalar(std::int64_t a, std::int64_t b, int k) : a_(a), b_(b), k_(k) {
        if (k < 0) throw std::invalid_argument("ExactScalar: negative dyadic exponent");
        normalize();
    }

    static ExactScalar half() { return ExactScalar(1, 0, 1); }
    static ExactScalar sqrt2() { return ExactScalar(0, 1, 0); }
    /// 1/sqrt(2) == sqrt(2)/2.
    static ExactScalar inv_sqrt2() { return ExactScalar(0, 1, 1); }

    std::int64_t a() const { return a_; }
    std::int64_t b() const { return b_; }
    int k() const { return k_; }

    bool is_zero() const { return a_ == 0 && b_ == 0; }

    double to_double() const {
        return (static_cast<double>(a_) + static_cast<double>(b_) * std::sqrt(2.0)) /
               std::ldexp(1.0, k_);
    }

    ExactScalar operator-() const { return ExactScalar(-a_, -b_, k_); }

    ExactScalar operator+(const ExactScalar& o) const {
        int k = std::max(k_, o.k_);
        std::int64_t a = detail::checked_add(shift(a_, k - k_), shift(o.a_, k - o.k_));
        std::int64_t b = detail::checked_add(shift(b_, k - k_), shift(o.b_, k - o.k_));
        return ExactScalar(a, b, k);
    }

    ExactScalar operator-(const ExactScalar& o) const { return *this + (-o); }

    ExactScalar operator*(const ExactScalar& o) const {
        // (a1 + b1 r)(a2 + b2 r) = a1 a2 + 2 b1 b2 + (a1 b2 + b1 a2) r,  r = sqrt(2)
        std::int64_t a = detail::checked_add(detail::checked_mul(a_, o.a_),
                                             detail::checked_mul(2, detail::checked_mul(b_, o.b_)));
        std::int64_t b = detail::checked_add(detail::checked_mul(a_, o.b_),
                                             detail::checked_mul(b_, o.a_));
        return ExactScalar(a, b, k_ + o.k_);
    }

    ExactScalar& operator+=(const ExactScalar& o) { return *this = *this + o; }
    ExactScalar& operator-=(const ExactScalar& o) { return *this = *this - o; }
    ExactScalar& operator*=(const ExactScalar& o) { return *this = *this * o; }

    bool operator==(const ExactScalar& o) const {
        return a_ == o.a_ && b_ == o.b_ && k_ == o.k_;
    }
    bool operator!=(const ExactScalar& o) const { return !(*this == o); }

    std::string to_string() const {
        if (b_ == 0 && k_ == 0) return std::to_string(a_);
        std::string s = "(" + std::to_string(a_);
        if (b_ != 0) s += (b_ > 0 ? "+" : "") + std::to_string(b_) + "*sqrt2";
        s += ")";
        if (k_ > 0) s += "/2^" + std::to_string(k_);
        return s;
    }

private:
    static std::int64_t shift(std::int64_t v, int n) {
        for (int i = 0; i < n; ++i) v = detail::checked_mul(v, 2);
        return v;
    }

    void normalize() {
        if (a_ == 0 && b_ == 0) { k_ = 0; return; }
        while (k_ > 0 && a_ % 2 == 0 && b_ % 2 == 0) {
            a_ /= 2;
            b_ /= 2;
            --k_;
        }
    }

    std::int64_t a_, b_;
    int k_;
};

} // namespace swapcert
