#pragma once

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace wickspec {

/// Extended real number: a finite double, +inf or -inf. Never NaN.
///
/// Conjugates and suprema routinely diverge, so every search kernel in the
/// library reports its result in this type. Arithmetic follows the usual
/// extended-real conventions; the indeterminate forms (inf - inf, 0 * inf)
/// throw std::domain_error instead of producing NaN.
class ExtendedValue {
public:
    enum class Kind { finite, pos_inf, neg_inf };

    constexpr ExtendedValue() = default;

    explicit ExtendedValue(double v) {
        if (std::isnan(v)) throw std::domain_error("ExtendedValue: NaN is not an extended real");
        if (std::isinf(v)) {
            kind_ = v > 0 ? Kind::pos_inf : Kind::neg_inf;
            value_ = v;
        } else {
            value_ = v;
        }
    }

    static ExtendedValue finite(double v) {
        if (!std::isfinite(v)) throw std::domain_error("ExtendedValue::finite: value is not finite");
        return ExtendedValue(v);
    }
    static ExtendedValue plus_infinity() { return ExtendedValue(std::numeric_limits<double>::infinity()); }
    static ExtendedValue minus_infinity() { return ExtendedValue(-std::numeric_limits<double>::infinity()); }

    Kind kind() const noexcept { return kind_; }
    bool is_finite() const noexcept { return kind_ == Kind::finite; }
    bool is_pos_inf() const noexcept { return kind_ == Kind::pos_inf; }
    bool is_neg_inf() const noexcept { return kind_ == Kind::neg_inf; }

    /// Finite payload; throws when infinite.
    double value() const {
        if (!is_finite()) throw std::domain_error("ExtendedValue::value: value is infinite");
        return value_;
    }

    /// IEEE representation (+-inf for the infinite kinds).
    double as_double() const noexcept { return value_; }

    std::string to_string() const {
        if (is_pos_inf()) return "+inf";
        if (is_neg_inf()) return "-inf";
        return std::to_string(value_);
    }

    friend ExtendedValue operator-(ExtendedValue a) { return ExtendedValue(-a.value_); }

    friend ExtendedValue operator+(ExtendedValue a, ExtendedValue b) {
        if ((a.is_pos_inf() && b.is_neg_inf()) || (a.is_neg_inf() && b.is_pos_inf()))
            throw std::domain_error("ExtendedValue: inf - inf is indeterminate");
        return ExtendedValue(a.value_ + b.value_);
    }
    friend ExtendedValue operator-(ExtendedValue a, ExtendedValue b) { return a + (-b); }

    friend ExtendedValue operator*(ExtendedValue a, double s) {
        if (std::isnan(s)) throw std::domain_error("ExtendedValue: NaN scale");
        if (!a.is_finite() && s == 0.0) throw std::domain_error("ExtendedValue: 0 * inf is indeterminate");
        return ExtendedValue(a.value_ * s);
    }
    friend ExtendedValue operator*(double s, ExtendedValue a) { return a * s; }

    friend bool operator==(ExtendedValue a, ExtendedValue b) noexcept { return a.value_ == b.value_; }
    friend bool operator<(ExtendedValue a, ExtendedValue b) noexcept { return a.value_ < b.value_; }
    friend bool operator<=(ExtendedValue a, ExtendedValue b) noexcept { return a.value_ <= b.value_; }
    friend bool operator>(ExtendedValue a, ExtendedValue b) noexcept { return a.value_ > b.value_; }
    friend bool operator>=(ExtendedValue a, ExtendedValue b) noexcept { return a.value_ >= b.value_; }

    friend std::ostream& operator<<(std::ostream& os, ExtendedValue v) { return os << v.to_string(); }

private:
    Kind kind_ = Kind::finite;
    double value_ = 0.0;
};

}  // namespace wickspec
