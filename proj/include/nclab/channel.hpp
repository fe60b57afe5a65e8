#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "nclab/rlnc.hpp"
#include "nclab/rng.hpp"

namespace nclab {

// Per-hop erasure probabilities, source side first.
struct ErasureSpec {
    std::vector<double> per_hop;

    void validate() const {
        if (per_hop.empty()) throw std::invalid_argument("ErasureSpec: need at least one hop");
        for (double d : per_hop) {
            if (!(d >= 0.0 && d <= 1.0))
                throw std::invalid_argument("ErasureSpec: erasure rates must lie in [0, 1]");
        }
    }
};

enum class EstimateSource { analytic, monte_carlo };

struct DeliveryEstimate {
    double p_success = 0.0;
    double p_loss = 1.0;
    EstimateSource source = EstimateSource::analytic;
    std::uint64_t trials = 0;      // 0 for analytic
    double ci_halfwidth = 0.0;     // 99% normal-approximation halfwidth; 0 for analytic
};

namespace channel_detail {

inline long double log_binomial_pmf(unsigned m, unsigned k, long double p) {
    return std::lgammal(m + 1.0L) - std::lgammal(k + 1.0L) - std::lgammal(m - k + 1.0L) +
           k * std::logl(p) + (m - k) * std::logl(1.0L - p);
}

// P(X >= k) for X ~ Binomial(m, p). Sums whichever tail holds less mass in
// long double, walking term ratios away from the boundary so no term is formed
// by cancellation.
inline double binomial_tail_at_least(unsigned m, unsigned k, double p) {
    if (k == 0) return 1.0;
    if (k > m) return 0.0;
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return 1.0;

    const long double lp = p;
    const long double mean = static_cast<long double>(m) * lp;
    if (static_cast<long double>(k) >= mean) {
        // Upper tail is the small one: sum P(k) + P(k+1) + ...
        long double term = std::expl(log_binomial_pmf(m, k, lp));
        long double sum = term;
        for (unsigned j = k; j < m; ++j) {
            term *= (static_cast<long double>(m - j) / (j + 1.0L)) * (lp / (1.0L - lp));
            sum += term;
        }
        return static_cast<double>(sum);
    }
    // Lower tail P(X <= k-1) is the small one: sum downwards from k-1.
    long double term = std::expl(log_binomial_pmf(m, k - 1, lp));
    long double sum = term;
    for (unsigned j = k - 1; j > 0; --j) {
        term *= (static_cast<long double>(j) / (m - j + 1.0L)) * ((1.0L - lp) / lp);
        sum += term;
    }
    return static_cast<double>(1.0L - sum);
}

}  // namespace channel_detail

// Probability that at least n of the m packets sent over one hop survive
// erasure rate delta.
inline double p_hop_success(const CodingParams& p, double delta) {
    p.validate();
    if (!(delta >= 0.0 && delta <= 1.0))
        throw std::invalid_argument("p_hop_success: delta must lie in [0, 1]");
    return channel_detail::binomial_tail_at_least(p.m, p.n, 1.0 - delta);
}

// Decode-and-recode cascade: every relay fully decodes the generation and
// re-encodes m fresh packets, so hops are independent and the end-to-end
// delivery probability is the product of per-hop tails. Ignores the chance
// that random coefficients are non-innovative (at most n/2^q per hop; the
// Monte Carlo oracle quantifies it).
inline DeliveryEstimate p_delivery(const CodingParams& p, const ErasureSpec& spec) {
    spec.validate();
    double prob = 1.0;
    for (double delta : spec.per_hop) prob *= p_hop_success(p, delta);
    DeliveryEstimate est;
    est.p_success = prob;
    est.p_loss = 1.0 - prob;
    est.source = EstimateSource::analytic;
    return est;
}

// Packet-level oracle: real coefficient draws, per-packet erasures on every
// hop, rank tracking, and decode-and-recode at each relay. Per-trial streams
// are derived by counter so any execution order reproduces the same estimate.
inline DeliveryEstimate monte_carlo_delivery(const GaloisField& gf, const CodingParams& p,
                                             const ErasureSpec& spec, std::uint64_t trials,
                                             std::uint64_t seed) {
    spec.validate();
    p.validate();
    if (trials < 1) throw std::invalid_argument("monte_carlo_delivery: need at least one trial");

    const std::uint32_t s = p.symbols_per_packet();
    std::uint64_t successes = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
        Rng rng(derive_stream(seed, t));
        PayloadBlock source(p.n);
        for (auto& pl : source) {
            pl.resize(s);
            for (auto& sym : pl) sym = static_cast<Symbol>(rng.bits(p.field.q));
        }
        std::vector<CodedPacket> in_flight = encode(gf, p, source, rng.next()).packets;
        bool delivered = true;
        for (std::size_t hop = 0; hop < spec.per_hop.size(); ++hop) {
            const double delta = spec.per_hop[hop];
            Decoder dec(gf, p, 0);
            for (const auto& pkt : in_flight) {
                if (!rng.bernoulli(delta)) dec.add(pkt);
            }
            if (!dec.complete()) {
                delivered = false;
                break;
            }
            if (hop + 1 < spec.per_hop.size()) {
                in_flight = encode(gf, p, dec.decode(), rng.next()).packets;
            }
        }
        if (delivered) ++successes;
    }

    const double phat = static_cast<double>(successes) / static_cast<double>(trials);
    constexpr double z99 = 2.5758293035489004;
    DeliveryEstimate est;
    est.p_success = phat;
    est.p_loss = 1.0 - phat;
    est.source = EstimateSource::monte_carlo;
    est.trials = trials;
    est.ci_halfwidth = z99 * std::sqrt(phat * (1.0 - phat) / static_cast<double>(trials));
    return est;
}

}  // namespace nclab
