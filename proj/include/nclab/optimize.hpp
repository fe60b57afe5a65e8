#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "nclab/channel.hpp"
#include "nclab/gf.hpp"
#include "nclab/rlnc.hpp"

namespace nclab {

enum class Normalization { min_feasible, min_redundancy };

struct UtilityConfig {
    double w_nc = 0.9;
    double w_comp = 0.1;
    double rho0 = 0.8;            // target delivery probability
    double beta0 = 1.4;           // complexity budget on beta_bar
    double u0 = 0.0;              // activation threshold
    double range_fraction = 0.8;  // operative-range band
    Normalization normalization = Normalization::min_feasible;

    void validate() const {
        if (!(w_nc > 0.0 && w_nc < 1.0 && w_comp > 0.0 && w_comp < 1.0))
            throw std::invalid_argument("UtilityConfig: weights must lie in (0, 1)");
        if (std::abs(w_nc + w_comp - 1.0) > 1e-9)
            throw std::invalid_argument("UtilityConfig: weights must sum to 1");
        if (!(rho0 > 0.0 && rho0 <= 1.0))
            throw std::invalid_argument("UtilityConfig: rho0 must lie in (0, 1]");
        if (!(beta0 >= 1.0)) throw std::invalid_argument("UtilityConfig: beta0 must be >= 1");
        if (!(range_fraction > 0.0 && range_fraction <= 1.0))
            throw std::invalid_argument("UtilityConfig: range_fraction must lie in (0, 1]");
    }
};

enum class GridMode { fixed_m, fixed_n };

// Candidate coding rates R = n/m: either m is pinned and n varies, or n is
// pinned and m varies. Candidates are evaluated in increasing-R order.
struct RateGrid {
    GridMode mode = GridMode::fixed_m;
    std::uint16_t fixed_value = 50;
    std::vector<std::uint16_t> counterpart_values = {5, 10, 15, 20, 25, 30, 35, 40, 45, 49};

    std::vector<CodingParams> candidates(const CodingParams& base) const {
        if (counterpart_values.empty()) throw std::invalid_argument("RateGrid: empty grid");
        std::vector<CodingParams> out;
        out.reserve(counterpart_values.size());
        for (std::uint16_t v : counterpart_values) {
            CodingParams p = base;
            p.n = (mode == GridMode::fixed_m) ? v : fixed_value;
            p.m = (mode == GridMode::fixed_m) ? fixed_value : v;
            p.validate();
            out.push_back(p);
        }
        std::sort(out.begin(), out.end(),
                  [](const CodingParams& a, const CodingParams& b) { return a.rate() < b.rate(); });
        for (std::size_t i = 1; i < out.size(); ++i) {
            if (out[i - 1].rate() >= out[i].rate())
                throw std::invalid_argument("RateGrid: candidate rates must be distinct");
        }
        return out;
    }
};

// Goodness of meeting the delivery target: (p_r - rho0) / rho0.
inline double goodness(double p_r, double rho0) {
    if (rho0 <= 0.0) throw std::domain_error("goodness: rho0 must be positive");
    return (p_r - rho0) / rho0;
}

// Complexity cost: natural log of 1 + beta_bar.
inline double cost(double beta_bar) {
    if (beta_bar < 0.0) throw std::domain_error("cost: beta_bar must be non-negative");
    return std::log1p(beta_bar);
}

// Total gates for a systematic encode of one generation, from the closed-form
// operation counts.
inline std::uint64_t encoding_gates(const CodingParams& p) {
    const std::uint64_t red = p.m - p.n;
    const std::uint64_t s = p.symbols_per_packet();
    const std::uint64_t mults = red * p.n * s;
    const std::uint64_t adds = red * (p.n - 1) * s;
    return gate_cost(adds, mults, p.field.q).total_gates;
}

struct CandidateEval {
    CodingParams params;
    double r = 0.0;
    double p_r = 0.0;
    std::uint64_t enc_gates = 0;
    double beta_bar = 0.0;
    bool feasible = false;
    double u = 0.0;
};

namespace optimize_detail {

// Normalization denominator. min_feasible: cheapest positive-complexity
// candidate that reaches rho0 under the current channel, falling back to the
// cheapest positive-complexity candidate when none does. min_redundancy: the
// single-redundant-packet configuration, whether or not it is in the grid.
// Zero-complexity candidates never enter the denominator; they get
// beta_bar = 0 directly.
inline double normalization_denominator(const std::vector<CandidateEval>& evals,
                                        const UtilityConfig& cfg, const RateGrid& grid,
                                        const CodingParams& base) {
    if (cfg.normalization == Normalization::min_redundancy) {
        CodingParams one = base;
        if (grid.mode == GridMode::fixed_m) {
            one.m = grid.fixed_value;
            one.n = static_cast<std::uint16_t>(grid.fixed_value - 1);
        } else {
            one.n = grid.fixed_value;
            one.m = static_cast<std::uint16_t>(grid.fixed_value + 1);
        }
        one.validate();
        return static_cast<double>(encoding_gates(one));
    }
    std::uint64_t best = 0;
    for (const auto& e : evals) {
        if (e.enc_gates == 0 || e.p_r < cfg.rho0) continue;
        if (best == 0 || e.enc_gates < best) best = e.enc_gates;
    }
    if (best == 0) {
        for (const auto& e : evals) {
            if (e.enc_gates == 0) continue;
            if (best == 0 || e.enc_gates < best) best = e.enc_gates;
        }
    }
    return static_cast<double>(best);  // 0 only when every candidate has m = n
}

}  // namespace optimize_detail

// Evaluates every grid candidate under the current channel: delivery
// probability, encoding gates, normalized complexity ratio, budget
// feasibility, and utility. Rows are ordered by increasing R.
inline std::vector<CandidateEval> evaluate_grid(const ErasureSpec& spec, const UtilityConfig& cfg,
                                                const RateGrid& grid, const CodingParams& base) {
    cfg.validate();
    spec.validate();
    std::vector<CandidateEval> evals;
    for (const CodingParams& p : grid.candidates(base)) {
        CandidateEval e;
        e.params = p;
        e.r = p.rate();
        e.p_r = p_delivery(p, spec).p_success;
        e.enc_gates = encoding_gates(p);
        evals.push_back(e);
    }
    const double denom = optimize_detail::normalization_denominator(evals, cfg, grid, base);
    for (auto& e : evals) {
        e.beta_bar = (e.enc_gates == 0) ? 0.0 : static_cast<double>(e.enc_gates) / denom;
        e.feasible = e.beta_bar <= cfg.beta0;
        e.u = cfg.w_nc * goodness(e.p_r, cfg.rho0) - cfg.w_comp * cost(e.beta_bar);
    }
    return evals;
}

// Utility of one candidate rate. r must identify a grid candidate.
inline double utility(double r, const ErasureSpec& spec, const UtilityConfig& cfg,
                      const RateGrid& grid, const CodingParams& base) {
    for (const auto& e : evaluate_grid(spec, cfg, grid, base)) {
        if (std::abs(e.r - r) <= 1e-12) return e.u;
    }
    throw std::invalid_argument("utility: rate is not a grid candidate");
}

struct OptimizationResult {
    std::size_t feasible_count = 0;
    double r_star = 0.0;
    double u_max = 0.0;
    double p_r_star = 0.0;
    double beta_bar = 0.0;
    bool activated = false;
    CodingParams chosen;

    bool feasible() const { return feasible_count > 0; }
};

// Exhaustive scan over the feasible candidates; ties go to the highest R.
// An empty feasible set yields feasible_count = 0, never a fabricated result.
inline OptimizationResult optimize_rate(const ErasureSpec& spec, const UtilityConfig& cfg,
                                        const RateGrid& grid, const CodingParams& base) {
    OptimizationResult res;
    const auto evals = evaluate_grid(spec, cfg, grid, base);
    const CandidateEval* best = nullptr;
    for (const auto& e : evals) {
        if (!e.feasible) continue;
        ++res.feasible_count;
        if (best == nullptr || e.u >= best->u) best = &e;
    }
    if (best != nullptr) {
        res.r_star = best->r;
        res.u_max = best->u;
        res.p_r_star = best->p_r;
        res.beta_bar = best->beta_bar;
        res.chosen = best->params;
        res.activated = best->u >= cfg.u0;
    }
    return res;
}

struct RangeEntry {
    double r = 0.0;
    std::uint16_t n = 0;
    std::uint16_t m = 0;
    double u = 0.0;
    double p_r = 0.0;
    std::uint64_t gates = 0;
};

struct OperativeRange {
    std::size_t feasible_count = 0;
    double u_min = 0.0;
    double u_max = 0.0;
    double r_star = 0.0;
    std::vector<RangeEntry> entries;  // increasing R
    std::pair<double, double> p_r_bounds{0.0, 0.0};
    std::pair<std::uint64_t, std::uint64_t> gate_bounds{0, 0};

    bool feasible() const { return feasible_count > 0; }
    std::vector<double> rates() const {
        std::vector<double> out;
        out.reserve(entries.size());
        for (const auto& e : entries) out.push_back(e.r);
        return out;
    }
};

// Operative range: every feasible candidate whose utility falls within the
// configured fraction of the maximum. The band is [f*u_max, u_max] for
// positive u_max; at u_max <= 0 the multiplicative band degenerates, so a
// fixed halfwidth of max((1-f)*|u_max|, 1e-9) is used instead.
inline OperativeRange operative_range(const ErasureSpec& spec, const UtilityConfig& cfg,
                                      const RateGrid& grid, const CodingParams& base) {
    const auto evals = evaluate_grid(spec, cfg, grid, base);
    const OptimizationResult opt = optimize_rate(spec, cfg, grid, base);
    OperativeRange range;
    range.feasible_count = opt.feasible_count;
    if (!opt.feasible()) return range;

    range.u_max = opt.u_max;
    range.r_star = opt.r_star;
    const double halfwidth =
        std::max((1.0 - cfg.range_fraction) * std::abs(opt.u_max), 1e-9);
    range.u_min = opt.u_max - halfwidth;

    for (const auto& e : evals) {
        if (!e.feasible || e.u < range.u_min) continue;
        range.entries.push_back({e.r, e.params.n, e.params.m, e.u, e.p_r, e.enc_gates});
    }
    auto [pmin, pmax] = std::minmax_element(range.entries.begin(), range.entries.end(),
                                            [](const RangeEntry& a, const RangeEntry& b) {
                                                return a.p_r < b.p_r;
                                            });
    range.p_r_bounds = {pmin->p_r, pmax->p_r};
    auto [gmin, gmax] = std::minmax_element(range.entries.begin(), range.entries.end(),
                                            [](const RangeEntry& a, const RangeEntry& b) {
                                                return a.gates < b.gates;
                                            });
    range.gate_bounds = {gmin->gates, gmax->gates};
    return range;
}

// Gate table for an operative range, recomputed from the closed-form encoding
// ledger of each member rate.
inline std::vector<std::pair<double, std::uint64_t>> range_gate_report(const OperativeRange& range,
                                                                       const CodingParams& base) {
    std::vector<std::pair<double, std::uint64_t>> rows;
    rows.reserve(range.entries.size());
    for (const auto& e : range.entries) {
        CodingParams p = base;
        p.n = e.n;
        p.m = e.m;
        p.validate();
        rows.emplace_back(e.r, encoding_gates(p));
    }
    return rows;
}

}  // namespace nclab
