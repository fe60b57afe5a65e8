#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "nclab/gf.hpp"
#include "nclab/rng.hpp"

namespace nclab {

// Block-coding parameters for one generation: n source packets, m transmitted
// packets of L bits (s = L/q symbols), coding rate R = n/m.
struct CodingParams {
    std::uint16_t n = 1;
    std::uint16_t m = 1;
    std::uint32_t packet_bits = 800;  // L; 100 bytes by default
    FieldParams field;
    bool systematic = true;

    std::uint32_t symbols_per_packet() const { return packet_bits / field.q; }
    double rate() const { return static_cast<double>(n) / static_cast<double>(m); }

    void validate() const {
        if (n < 1 || m < n) throw std::invalid_argument("CodingParams: need m >= n >= 1");
        if (packet_bits == 0 || packet_bits % field.q != 0)
            throw std::invalid_argument("CodingParams: packet_bits must be a positive multiple of q");
    }

    bool operator==(const CodingParams&) const = default;
};

struct CodedPacket {
    std::uint32_t generation_id = 0;
    std::vector<Symbol> coefficients;  // length n (empty for uncoded passthrough)
    std::vector<Symbol> payload;       // length s
};

// Scheduled symbol operations. Systematic encoding of a full generation issues
// exactly (m-n)*n*s multiplications and (m-n)*(n-1)*s additions.
struct ComplexityLedger {
    std::uint64_t multiplications = 0;
    std::uint64_t additions = 0;

    ComplexityLedger& operator+=(const ComplexityLedger& o) {
        multiplications += o.multiplications;
        additions += o.additions;
        return *this;
    }
    bool operator==(const ComplexityLedger&) const = default;
};

using PayloadBlock = std::vector<std::vector<Symbol>>;

struct EncodeResult {
    std::vector<CodedPacket> packets;
    ComplexityLedger ops;
};

namespace rlnc_detail {

inline void check_source_block(const CodingParams& p, const PayloadBlock& source) {
    p.validate();
    if (source.size() != p.n)
        throw std::invalid_argument("encode: expected exactly n source payloads");
    const std::uint32_t s = p.symbols_per_packet();
    for (const auto& pl : source) {
        if (pl.size() != s) throw std::invalid_argument("encode: payload length mismatch");
        for (Symbol sym : pl) {
            if (sym >= (1u << p.field.q))
                throw std::invalid_argument("encode: payload symbol out of field range");
        }
    }
}

// out = sum_i coeffs[i] * source[i]; meters n*s multiplications and (n-1)*s
// additions regardless of coefficient values.
inline std::vector<Symbol> combine(const GaloisField& gf, const std::vector<Symbol>& coeffs,
                                   const PayloadBlock& source, ComplexityLedger& ops) {
    const std::size_t n = source.size();
    const std::size_t s = source.empty() ? 0 : source[0].size();
    std::vector<Symbol> out(s, 0);
    for (std::size_t j = 0; j < s; ++j) out[j] = gf.mul(coeffs[0], source[0][j]);
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t j = 0; j < s; ++j) {
            out[j] = gf.add(out[j], gf.mul(coeffs[i], source[i][j]));
        }
    }
    ops.multiplications += static_cast<std::uint64_t>(n) * s;
    ops.additions += static_cast<std::uint64_t>(n - 1) * s;
    return out;
}

}  // namespace rlnc_detail

// Systematic encoder: emits the n source packets with unit coefficient vectors
// followed by m-n random linear combinations. Non-systematic mode draws all m
// packets as random combinations.
inline EncodeResult encode(const GaloisField& gf, const CodingParams& p, const PayloadBlock& source,
                           std::uint64_t seed, std::uint32_t generation_id = 0) {
    rlnc_detail::check_source_block(p, source);
    EncodeResult result;
    result.packets.reserve(p.m);
    Rng rng(seed);

    std::uint16_t coded_count = p.m;
    if (p.systematic) {
        coded_count = static_cast<std::uint16_t>(p.m - p.n);
        for (std::uint16_t i = 0; i < p.n; ++i) {
            CodedPacket pkt;
            pkt.generation_id = generation_id;
            pkt.coefficients.assign(p.n, 0);
            pkt.coefficients[i] = 1;
            pkt.payload = source[i];
            result.packets.push_back(std::move(pkt));
        }
    }
    for (std::uint16_t i = 0; i < coded_count; ++i) {
        CodedPacket pkt;
        pkt.generation_id = generation_id;
        pkt.coefficients.resize(p.n);
        for (auto& c : pkt.coefficients) c = static_cast<Symbol>(rng.bits(p.field.q));
        pkt.payload = rlnc_detail::combine(gf, pkt.coefficients, source, result.ops);
        result.packets.push_back(std::move(pkt));
    }
    return result;
}

// Relay recoding: each output is a fresh random combination of the received
// packets, applied to coefficient vectors and payloads alike.
inline std::vector<CodedPacket> recode(const GaloisField& gf, const CodingParams& p,
                                       const std::vector<CodedPacket>& received, std::uint64_t seed,
                                       std::size_t out_count) {
    if (received.empty()) throw std::domain_error("recode: no input packets");
    const std::uint32_t gen = received[0].generation_id;
    for (const auto& pkt : received) {
        if (pkt.generation_id != gen)
            throw std::invalid_argument("recode: mixed generation ids");
        if (pkt.coefficients.size() != p.n || pkt.payload.size() != p.symbols_per_packet())
            throw std::invalid_argument("recode: packet shape mismatch");
    }

    Rng rng(seed);
    std::vector<CodedPacket> out;
    out.reserve(out_count);
    for (std::size_t k = 0; k < out_count; ++k) {
        CodedPacket pkt;
        pkt.generation_id = gen;
        pkt.coefficients.assign(p.n, 0);
        pkt.payload.assign(p.symbols_per_packet(), 0);
        for (const auto& rx : received) {
            const Symbol w = static_cast<Symbol>(rng.bits(p.field.q));
            for (std::size_t i = 0; i < pkt.coefficients.size(); ++i)
                pkt.coefficients[i] = gf.add(pkt.coefficients[i], gf.mul(w, rx.coefficients[i]));
            for (std::size_t j = 0; j < pkt.payload.size(); ++j)
                pkt.payload[j] = gf.add(pkt.payload[j], gf.mul(w, rx.payload[j]));
        }
        out.push_back(std::move(pkt));
    }
    return out;
}

// Streaming Gaussian-elimination decoder. Packets are folded in as they
// arrive; pivoting is on the first nonzero coefficient, ties resolved by
// arrival order. A single instance is single-writer; distinct generations can
// be decoded in parallel.
class Decoder {
public:
    Decoder(const GaloisField& gf, CodingParams p, std::uint32_t generation_id)
        : gf_(&gf), params_(std::move(p)), generation_(generation_id) {
        params_.validate();
        pivot_row_.assign(params_.n, kNoRow);
    }

    // Returns true when the packet increased the rank.
    bool add(const CodedPacket& pkt) {
        if (pkt.generation_id != generation_)
            throw std::invalid_argument("Decoder: packet from another generation");
        if (pkt.coefficients.size() != params_.n ||
            pkt.payload.size() != params_.symbols_per_packet())
            throw std::invalid_argument("Decoder: packet shape mismatch");

        std::vector<Symbol> coeffs = pkt.coefficients;
        std::vector<Symbol> payload = pkt.payload;
        for (std::uint16_t col = 0; col < params_.n; ++col) {
            if (coeffs[col] == 0) continue;
            if (pivot_row_[col] == kNoRow) {
                normalize(coeffs, payload, col);
                pivot_row_[col] = rows_.size();
                rows_.push_back({std::move(coeffs), std::move(payload), col});
                ++rank_;
                return true;
            }
            eliminate(coeffs, payload, rows_[pivot_row_[col]]);
        }
        for (Symbol sym : payload) {
            if (sym != 0)
                throw std::runtime_error("Decoder: inconsistent packet (zero coefficients, nonzero payload)");
        }
        return false;
    }

    std::uint16_t rank() const { return rank_; }
    bool complete() const { return rank_ == params_.n; }
    const ComplexityLedger& ops() const { return ops_; }

    // Back-substitutes and returns the source block. Only valid once complete.
    PayloadBlock decode() {
        if (!complete()) throw std::logic_error("Decoder: rank below n");
        for (std::uint16_t col = params_.n; col-- > 0;) {
            const Row& pivot = rows_[pivot_row_[col]];
            for (std::size_t r = 0; r < rows_.size(); ++r) {
                if (r == pivot_row_[col] || rows_[r].coeffs[col] == 0) continue;
                eliminate(rows_[r].coeffs, rows_[r].payload, pivot);
            }
        }
        PayloadBlock out(params_.n);
        for (std::uint16_t col = 0; col < params_.n; ++col) out[col] = rows_[pivot_row_[col]].payload;
        return out;
    }

private:
    struct Row {
        std::vector<Symbol> coeffs;
        std::vector<Symbol> payload;
        std::uint16_t pivot;
    };
    static constexpr std::size_t kNoRow = static_cast<std::size_t>(-1);

    void normalize(std::vector<Symbol>& coeffs, std::vector<Symbol>& payload, std::uint16_t col) {
        const Symbol lead = coeffs[col];
        if (lead == 1) return;
        const Symbol factor = gf_->inv(lead);
        for (std::uint16_t c = col; c < params_.n; ++c) coeffs[c] = gf_->mul(factor, coeffs[c]);
        for (auto& sym : payload) sym = gf_->mul(factor, sym);
        ops_.multiplications += (params_.n - col) + payload.size();
    }

    void eliminate(std::vector<Symbol>& coeffs, std::vector<Symbol>& payload, const Row& pivot) {
        const Symbol factor = coeffs[pivot.pivot];
        for (std::uint16_t c = pivot.pivot; c < params_.n; ++c) {
            coeffs[c] = gf_->add(coeffs[c], gf_->mul(factor, pivot.coeffs[c]));
        }
        for (std::size_t j = 0; j < payload.size(); ++j) {
            payload[j] = gf_->add(payload[j], gf_->mul(factor, pivot.payload[j]));
        }
        ops_.multiplications += (params_.n - pivot.pivot) + payload.size();
        ops_.additions += (params_.n - pivot.pivot) + payload.size();
    }

    const GaloisField* gf_;
    CodingParams params_;
    std::uint32_t generation_;
    std::vector<Row> rows_;
    std::vector<std::size_t> pivot_row_;
    std::uint16_t rank_ = 0;
    ComplexityLedger ops_;
};

struct DecodeResult {
    bool success = false;
    std::uint16_t rank = 0;
    PayloadBlock source;
    ComplexityLedger ops;
};

inline DecodeResult decode(const GaloisField& gf, const CodingParams& p,
                           const std::vector<CodedPacket>& received) {
    DecodeResult result;
    if (received.empty()) return result;
    Decoder dec(gf, p, received[0].generation_id);
    for (const auto& pkt : received) dec.add(pkt);
    result.rank = dec.rank();
    if (dec.complete()) {
        result.success = true;
        result.source = dec.decode();
    }
    result.ops = dec.ops();
    return result;
}

inline std::uint16_t rank_of(const GaloisField& gf, const CodingParams& p,
                             const std::vector<CodedPacket>& received) {
    if (received.empty()) return 0;
    Decoder dec(gf, p, received[0].generation_id);
    for (const auto& pkt : received) dec.add(pkt);
    return dec.rank();
}

// Wire layout: generation_id (u32, big-endian), n (u16, big-endian), then the
// coefficient vector and payload as big-endian symbols of q/8 bytes each.
// Requires byte-aligned symbols.
inline std::vector<std::uint8_t> serialize_packet(const CodedPacket& pkt, unsigned q) {
    if (q % 8 != 0) throw std::invalid_argument("serialize_packet: q must be a multiple of 8");
    const unsigned sym_bytes = q / 8;
    std::vector<std::uint8_t> out;
    out.reserve(6 + sym_bytes * (pkt.coefficients.size() + pkt.payload.size()));
    for (int shift = 24; shift >= 0; shift -= 8)
        out.push_back(static_cast<std::uint8_t>(pkt.generation_id >> shift));
    const auto n = static_cast<std::uint16_t>(pkt.coefficients.size());
    out.push_back(static_cast<std::uint8_t>(n >> 8));
    out.push_back(static_cast<std::uint8_t>(n & 0xFF));
    auto put_symbol = [&](Symbol s) {
        for (int shift = static_cast<int>(q) - 8; shift >= 0; shift -= 8)
            out.push_back(static_cast<std::uint8_t>((s >> shift) & 0xFF));
    };
    for (Symbol c : pkt.coefficients) put_symbol(c);
    for (Symbol s : pkt.payload) put_symbol(s);
    return out;
}

inline CodedPacket deserialize_packet(std::span<const std::uint8_t> bytes, unsigned q) {
    if (q % 8 != 0) throw std::invalid_argument("deserialize_packet: q must be a multiple of 8");
    const unsigned sym_bytes = q / 8;
    if (bytes.size() < 6) throw std::invalid_argument("deserialize_packet: truncated header");
    CodedPacket pkt;
    pkt.generation_id = (std::uint32_t(bytes[0]) << 24) | (std::uint32_t(bytes[1]) << 16) |
                        (std::uint32_t(bytes[2]) << 8) | std::uint32_t(bytes[3]);
    const std::uint16_t n = static_cast<std::uint16_t>((bytes[4] << 8) | bytes[5]);
    const std::size_t body = bytes.size() - 6;
    if (body % sym_bytes != 0 || body / sym_bytes < n)
        throw std::invalid_argument("deserialize_packet: malformed body");
    std::size_t pos = 6;
    auto take_symbol = [&]() {
        Symbol s = 0;
        for (unsigned b = 0; b < sym_bytes; ++b) s = static_cast<Symbol>((s << 8) | bytes[pos++]);
        return s;
    };
    pkt.coefficients.resize(n);
    for (auto& c : pkt.coefficients) c = take_symbol();
    pkt.payload.resize(body / sym_bytes - n);
    for (auto& s : pkt.payload) s = take_symbol();
    return pkt;
}

}  // namespace nclab
