#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace nclab {

// Field element. Wide enough for GF(2^q) with q <= 16.
using Symbol = std::uint16_t;

struct FieldParams {
    unsigned q = 8;                        // bits per symbol
    std::uint32_t reduction_poly = 0x11D;  // x^8 + x^4 + x^3 + x^2 + 1

    bool operator==(const FieldParams&) const = default;
};

// Logic-gate model for GF(2^q) arithmetic: an addition costs q gates, a
// multiplication 2q^2 + 2q gates.
struct GateCost {
    std::uint64_t additions = 0;
    std::uint64_t multiplications = 0;
    std::uint64_t total_gates = 0;
};

inline GateCost gate_cost(std::uint64_t additions, std::uint64_t multiplications, unsigned q) {
    const std::uint64_t qc = q;
    GateCost c;
    c.additions = additions;
    c.multiplications = multiplications;
    c.total_gates = additions * qc + multiplications * (2 * qc * qc + 2 * qc);
    return c;
}

namespace gf_detail {

inline unsigned poly_degree(std::uint64_t p) {
    unsigned d = 0;
    while (p > 1) {
        p >>= 1;
        ++d;
    }
    return d;
}

// Product of two GF(2)[x] polynomials reduced modulo `poly` (degree q).
inline std::uint32_t polymul_mod(std::uint32_t a, std::uint32_t b, std::uint32_t poly, unsigned q) {
    std::uint32_t acc = 0;
    while (b != 0) {
        if (b & 1u) acc ^= a;
        b >>= 1;
        a <<= 1;
        if (a & (1u << q)) a ^= poly;
    }
    return acc;
}

// Remainder of a mod b over GF(2)[x].
inline std::uint64_t polymod(std::uint64_t a, std::uint64_t b) {
    const unsigned db = poly_degree(b);
    while (a != 0 && poly_degree(a) >= db) {
        a ^= b << (poly_degree(a) - db);
    }
    return a;
}

// Exhaustive trial division by every polynomial of degree 1..q/2.
inline bool is_irreducible(std::uint32_t poly, unsigned q) {
    for (unsigned d = 1; d <= q / 2; ++d) {
        for (std::uint64_t divisor = (1ull << d); divisor < (2ull << d); ++divisor) {
            if (polymod(poly, divisor) == 0) return false;
        }
    }
    return true;
}

}  // namespace gf_detail

// GF(2^q) arithmetic backed by log/antilog tables built once at construction.
// Tables are immutable afterwards, so all operations are pure and safe to call
// concurrently.
class GaloisField {
public:
    explicit GaloisField(FieldParams params = {}) : params_(params) {
        if (params_.q < 1 || params_.q > 16)
            throw std::invalid_argument("GaloisField: q must be in [1, 16]");
        if ((params_.reduction_poly >> params_.q) != 1u)
            throw std::invalid_argument("GaloisField: reduction polynomial degree must equal q");
        if (!gf_detail::is_irreducible(params_.reduction_poly, params_.q))
            throw std::invalid_argument("GaloisField: reduction polynomial is reducible");
        order_ = 1u << params_.q;
        build_tables();
    }

    unsigned q() const { return params_.q; }
    std::uint32_t order() const { return order_; }
    const FieldParams& params() const { return params_; }
    bool contains(Symbol a) const { return a < order_; }

    Symbol add(Symbol a, Symbol b) const { return static_cast<Symbol>(a ^ b); }

    Symbol mul(Symbol a, Symbol b) const {
        if (a == 0 || b == 0) return 0;
        return exp_[log_[a] + log_[b]];
    }

    Symbol inv(Symbol a) const {
        if (a == 0) throw std::domain_error("GaloisField::inv: zero has no inverse");
        return exp_[order_ - 1 - log_[a]];
    }

    Symbol div(Symbol a, Symbol b) const {
        if (b == 0) throw std::domain_error("GaloisField::div: division by zero");
        if (a == 0) return 0;
        return exp_[log_[a] + (order_ - 1) - log_[b]];
    }

private:
    void build_tables() {
        const std::uint32_t group = order_ - 1;
        const Symbol generator = find_generator();
        exp_.assign(2 * group, 0);
        log_.assign(order_, 0);
        std::uint32_t x = 1;
        for (std::uint32_t i = 0; i < group; ++i) {
            exp_[i] = static_cast<Symbol>(x);
            exp_[i + group] = static_cast<Symbol>(x);
            log_[x] = i;
            x = gf_detail::polymul_mod(x, generator, params_.reduction_poly, params_.q);
        }
        if (x != 1) throw std::logic_error("GaloisField: generator walk did not close");
    }

    // Smallest element of multiplicative order 2^q - 1. For a primitive
    // polynomial this is x itself; an irreducible but non-primitive polynomial
    // needs the scan.
    Symbol find_generator() const {
        const std::uint32_t group = order_ - 1;
        if (group == 1) return 1;
        for (std::uint32_t g = 2; g < order_; ++g) {
            std::uint32_t x = g;
            std::uint32_t steps = 1;
            while (x != 1) {
                x = gf_detail::polymul_mod(x, g, params_.reduction_poly, params_.q);
                ++steps;
                if (steps > group) break;
            }
            if (x == 1 && steps == group) return static_cast<Symbol>(g);
        }
        throw std::logic_error("GaloisField: no generator found");
    }

    FieldParams params_;
    std::uint32_t order_ = 0;
    std::vector<Symbol> exp_;
    std::vector<std::uint32_t> log_;
};

}  // namespace nclab
