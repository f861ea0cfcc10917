#pragma once

// Complex numbers stored as mantissa * exp(log_scale), for amplitudes whose
// magnitudes span far more than the double exponent range.

#include <cmath>
#include <complex>
#include <limits>

namespace nhslow {

class ScaledComplex {
public:
    using cplx = std::complex<double>;

    ScaledComplex() = default;

    // exp(w) without ever forming exp(Re w).
    static ScaledComplex from_exponent(cplx w) {
        return ScaledComplex(std::polar(1.0, w.imag()), w.real());
    }
    static ScaledComplex from_value(cplx z) {
        if (z == cplx{}) return {};
        const double m = std::abs(z);
        return ScaledComplex(z / m, std::log(m));
    }

    bool is_zero() const noexcept { return mantissa_ == cplx{}; }
    double log_abs() const noexcept {
        return is_zero() ? -std::numeric_limits<double>::infinity() : log_scale_ + std::log(std::abs(mantissa_));
    }
    double log_scale() const noexcept { return log_scale_; }
    cplx mantissa() const noexcept { return mantissa_; }

    // value * exp(-shift); underflows quietly to zero.
    cplx scaled(double shift) const {
        if (is_zero()) return {};
        return mantissa_ * std::exp(log_scale_ - shift);
    }
    cplx value() const { return scaled(0.0); }

    ScaledComplex& operator*=(const ScaledComplex& o) {
        if (is_zero() || o.is_zero()) return *this = {};
        mantissa_ *= o.mantissa_;
        log_scale_ += o.log_scale_;
        return renormalize();
    }
    ScaledComplex& operator*=(cplx s) {
        if (s == cplx{}) return *this = {};
        mantissa_ *= s;
        return renormalize();
    }

    // Shift both operands to the larger scale before adding.
    ScaledComplex& operator+=(const ScaledComplex& o) {
        if (o.is_zero()) return *this;
        if (is_zero()) return *this = o;
        if (o.log_scale_ > log_scale_) {
            mantissa_ = mantissa_ * std::exp(log_scale_ - o.log_scale_) + o.mantissa_;
            log_scale_ = o.log_scale_;
        } else {
            mantissa_ += o.mantissa_ * std::exp(o.log_scale_ - log_scale_);
        }
        return renormalize();
    }

    friend ScaledComplex operator*(ScaledComplex a, const ScaledComplex& b) { return a *= b; }
    friend ScaledComplex operator*(ScaledComplex a, cplx s) { return a *= s; }
    friend ScaledComplex operator*(cplx s, ScaledComplex a) { return a *= s; }
    friend ScaledComplex operator+(ScaledComplex a, const ScaledComplex& b) { return a += b; }

private:
    ScaledComplex(cplx m, double s) : mantissa_(m), log_scale_(s) { renormalize(); }

    // Keep |mantissa| = 1 so repeated products never drift out of range.
    ScaledComplex& renormalize() {
        const double m = std::abs(mantissa_);
        if (m == 0.0 || !std::isfinite(m)) {
            if (m == 0.0) log_scale_ = 0.0;
            return *this;
        }
        mantissa_ /= m;
        log_scale_ += std::log(m);
        return *this;
    }

    cplx mantissa_{};
    double log_scale_ = 0.0;
};

}  // namespace nhslow
