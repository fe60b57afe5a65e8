#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "nclab/channel.hpp"
#include "nclab/optimize.hpp"
#include "nclab/rlnc.hpp"

namespace nclab {

enum class SessionMode : std::uint8_t { intra_session = 0 };
enum class Coherence : std::uint8_t { coherent = 0 };
enum class TransferMode : std::uint8_t { file = 0, streaming = 1 };
enum class CoefficientMode : std::uint8_t { random = 0, deterministic = 1 };

// Coding-scheme agreement exchanged during signaling. Packs losslessly into
// the 4-byte header field: mode bits, q, and the reduction polynomial without
// its leading term.
struct SchemeDescriptor {
    SessionMode session = SessionMode::intra_session;
    Coherence coherence = Coherence::coherent;
    TransferMode transfer = TransferMode::file;
    bool systematic = true;
    CoefficientMode coefficients = CoefficientMode::random;
    FieldParams field;

    bool operator==(const SchemeDescriptor&) const = default;

    std::uint32_t pack() const {
        std::uint32_t b0 = (static_cast<std::uint32_t>(session) & 0x3u) |
                           ((static_cast<std::uint32_t>(coherence) & 0x3u) << 2) |
                           ((static_cast<std::uint32_t>(transfer) & 0x1u) << 4) |
                           ((systematic ? 1u : 0u) << 5) |
                           ((static_cast<std::uint32_t>(coefficients) & 0x1u) << 6);
        const std::uint32_t poly_tail = field.reduction_poly & ((1u << field.q) - 1u);
        return (b0 << 24) | ((field.q & 0xFFu) << 16) | (poly_tail & 0xFFFFu);
    }

    static SchemeDescriptor unpack(std::uint32_t word) {
        SchemeDescriptor d;
        const std::uint32_t b0 = word >> 24;
        d.session = static_cast<SessionMode>(b0 & 0x3u);
        d.coherence = static_cast<Coherence>((b0 >> 2) & 0x3u);
        d.transfer = static_cast<TransferMode>((b0 >> 4) & 0x1u);
        d.systematic = ((b0 >> 5) & 0x1u) != 0;
        d.coefficients = static_cast<CoefficientMode>((b0 >> 6) & 0x1u);
        d.field.q = (word >> 16) & 0xFFu;
        d.field.reduction_poly = (word & 0xFFFFu) | (1u << d.field.q);
        return d;
    }
};

// EWMA loss tracker fed by feedback reports; one estimate per hop.
struct LossEstimate {
    ErasureSpec per_hop_estimate;
    std::uint64_t samples = 0;
    double smoothing = 0.1;
};

struct StoredGeneration {
    std::uint32_t id = 0;
    PayloadBlock source;
};

struct backpressure_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The reliability function instance. Transitions are pure: every operation
// takes a state and returns the successor, so replaying an event log from the
// same initial state reproduces identical states. Each instance handles one
// flow; run instances in parallel freely.
struct FunctionState {
    SchemeDescriptor scheme;
    UtilityConfig cfg;
    RateGrid grid;
    CodingParams base;    // packet size and field; n, m filled per adaptation
    CodingParams coding;  // currently adopted parameters
    LossEstimate loss;
    bool active = false;
    std::uint32_t next_generation = 0;
    std::size_t store_capacity = 64;
    std::vector<StoredGeneration> store;

    std::uint64_t digest() const;
};

namespace vnf_detail {

struct Fnv1a {
    std::uint64_t h = 0xCBF29CE484222325ull;
    void bytes(const void* data, std::size_t len) {
        const auto* p = static_cast<const std::uint8_t*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= p[i];
            h *= 0x100000001B3ull;
        }
    }
    void u64(std::uint64_t v) { bytes(&v, sizeof v); }
    void f64(double v) {
        std::uint64_t bits;
        static_assert(sizeof bits == sizeof v);
        __builtin_memcpy(&bits, &v, sizeof bits);
        u64(bits);
    }
};

}  // namespace vnf_detail

inline std::uint64_t FunctionState::digest() const {
    vnf_detail::Fnv1a h;
    h.u64(scheme.pack());
    h.f64(cfg.w_nc);
    h.f64(cfg.w_comp);
    h.f64(cfg.rho0);
    h.f64(cfg.beta0);
    h.f64(cfg.u0);
    h.f64(cfg.range_fraction);
    h.u64(static_cast<std::uint64_t>(cfg.normalization));
    h.u64(static_cast<std::uint64_t>(grid.mode));
    h.u64(grid.fixed_value);
    for (auto v : grid.counterpart_values) h.u64(v);
    for (const CodingParams* p : {&base, &coding}) {
        h.u64(p->n);
        h.u64(p->m);
        h.u64(p->packet_bits);
        h.u64(p->field.q);
        h.u64(p->field.reduction_poly);
        h.u64(p->systematic ? 1 : 0);
    }
    for (double d : loss.per_hop_estimate.per_hop) h.f64(d);
    h.u64(loss.samples);
    h.f64(loss.smoothing);
    h.u64(active ? 1 : 0);
    h.u64(next_generation);
    h.u64(store_capacity);
    for (const auto& g : store) {
        h.u64(g.id);
        for (const auto& pl : g.source) {
            h.u64(pl.size());
            for (Symbol s : pl) h.u64(s);
        }
    }
    return h.h;
}

// Builds an inactive function instance. The loss history starts from the
// configured prior; adaptation decides activation later.
inline FunctionState configure(const SchemeDescriptor& scheme, const UtilityConfig& cfg,
                               const RateGrid& grid, const CodingParams& base,
                               const ErasureSpec& prior = ErasureSpec{{0.1, 0.1}}) {
    cfg.validate();
    prior.validate();
    if (scheme.coefficients == CoefficientMode::deterministic &&
        scheme.transfer == TransferMode::streaming)
        throw std::invalid_argument("configure: deterministic coefficients with streaming transfer is unsupported");
    if (scheme.field.q != base.field.q || scheme.field.reduction_poly != base.field.reduction_poly)
        throw std::invalid_argument("configure: scheme field and coding field disagree");

    FunctionState st;
    st.scheme = scheme;
    st.cfg = cfg;
    st.grid = grid;
    st.base = base;
    st.base.systematic = scheme.systematic;
    st.coding = st.base;
    st.coding.n = 1;
    st.coding.m = 1;
    st.loss.per_hop_estimate = prior;
    st.active = false;
    return st;
}

// Per-hop EWMA update from a feedback report of `losses` lost packets out of
// `total` observed.
inline FunctionState on_feedback(FunctionState state, std::size_t hop, std::uint64_t losses,
                                 std::uint64_t total) {
    if (hop >= state.loss.per_hop_estimate.per_hop.size())
        throw std::invalid_argument("on_feedback: hop index out of range");
    if (losses > total) throw std::invalid_argument("on_feedback: losses exceed total");
    if (total == 0) return state;  // empty report carries no information
    const double sample = static_cast<double>(losses) / static_cast<double>(total);
    double& est = state.loss.per_hop_estimate.per_hop[hop];
    const double alpha = state.loss.smoothing;
    est = (1.0 - alpha) * est + alpha * sample;
    state.loss.samples += 1;
    return state;
}

struct AdaptResult {
    FunctionState state;
    OptimizationResult result;
};

// Re-optimizes the coding rate against the current loss estimate and applies
// the activation rule. This is the only operation allowed to change `active`.
inline AdaptResult adapt(FunctionState state) {
    OptimizationResult res = optimize_rate(state.loss.per_hop_estimate, state.cfg, state.grid,
                                           state.base);
    if (res.feasible()) {
        state.coding = res.chosen;
        state.active = res.activated;
    } else {
        state.active = false;
    }
    return {std::move(state), res};
}

inline constexpr std::uint8_t kFrameMagic0 = 0x4E;
inline constexpr std::uint8_t kFrameMagic1 = 0x43;
inline constexpr std::uint8_t kFrameVersion = 1;
inline constexpr std::uint8_t kFlagCoded = 0x01;
inline constexpr std::uint8_t kFlagSystematic = 0x02;

// Frame: magic (0x4E43), version, flags (bit0 coded, bit1 systematic), packed
// SchemeDescriptor (4 bytes, big-endian), then the packet serialization.
inline std::vector<std::uint8_t> encode_frame(const SchemeDescriptor& scheme, bool coded,
                                              const CodedPacket& pkt) {
    std::vector<std::uint8_t> out{kFrameMagic0, kFrameMagic1, kFrameVersion, 0};
    out[3] = static_cast<std::uint8_t>((coded ? kFlagCoded : 0) |
                                       (scheme.systematic ? kFlagSystematic : 0));
    const std::uint32_t word = scheme.pack();
    for (int shift = 24; shift >= 0; shift -= 8)
        out.push_back(static_cast<std::uint8_t>(word >> shift));
    const auto body = serialize_packet(pkt, scheme.field.q);
    out.insert(out.end(), body.begin(), body.end());
    return out;
}

struct Frame {
    SchemeDescriptor scheme;
    bool coded = false;
    CodedPacket packet;
};

inline Frame decode_frame(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 || bytes[0] != kFrameMagic0 || bytes[1] != kFrameMagic1)
        throw std::invalid_argument("decode_frame: bad magic");
    if (bytes[2] != kFrameVersion) throw std::invalid_argument("decode_frame: unknown version");
    Frame f;
    f.coded = (bytes[3] & kFlagCoded) != 0;
    std::uint32_t word = 0;
    for (int i = 0; i < 4; ++i) word = (word << 8) | bytes[4 + i];
    f.scheme = SchemeDescriptor::unpack(word);
    f.packet = deserialize_packet(bytes.subspan(8), f.scheme.field.q);
    return f;
}

struct SendResult {
    FunctionState state;
    std::vector<std::vector<std::uint8_t>> frames;
};

// Frames one generation. Active: systematic/random encode of m packets.
// Inactive: the payloads pass through uncoded, one frame each. The generation
// stays in the store until acknowledged; a full store rejects the send.
inline SendResult send_generation(FunctionState state, const PayloadBlock& payloads,
                                  std::uint64_t seed) {
    if (state.store.size() >= state.store_capacity)
        throw backpressure_error("send: generation store is full");
    const std::uint32_t gen = state.next_generation;
    GaloisField gf(state.base.field);
    std::vector<std::vector<std::uint8_t>> frames;

    if (state.active) {
        if (payloads.size() != state.coding.n)
            throw std::invalid_argument("send: expected exactly n payloads");
        EncodeResult enc = encode(gf, state.coding, payloads, seed, gen);
        frames.reserve(enc.packets.size());
        for (const auto& pkt : enc.packets)
            frames.push_back(encode_frame(state.scheme, true, pkt));
    } else {
        const std::uint32_t s = state.base.symbols_per_packet();
        for (const auto& pl : payloads) {
            if (pl.size() != s) throw std::invalid_argument("send: payload length mismatch");
            CodedPacket pkt;
            pkt.generation_id = gen;
            pkt.payload = pl;
            frames.push_back(encode_frame(state.scheme, false, pkt));
        }
    }
    state.store.push_back({gen, payloads});
    state.next_generation = gen + 1;
    return {std::move(state), std::move(frames)};
}

// Drops an acknowledged generation from the store. Unknown ids are ignored so
// duplicate acknowledgements are harmless.
inline FunctionState acknowledge(FunctionState state, std::uint32_t generation_id) {
    for (auto it = state.store.begin(); it != state.store.end(); ++it) {
        if (it->id == generation_id) {
            state.store.erase(it);
            break;
        }
    }
    return state;
}

// Scheme negotiation: the initiator's descriptor wins when the responder
// supports it; otherwise the responder's first option that agrees on the
// non-negotiable parts (session mode, coherence, field) is adopted. An empty
// intersection fails the handshake and the function stays inactive.
inline std::optional<SchemeDescriptor> signaling_handshake(
    const SchemeDescriptor& initiator, const std::vector<SchemeDescriptor>& responder_supported) {
    for (const auto& d : responder_supported) {
        if (d == initiator) return initiator;
    }
    for (const auto& d : responder_supported) {
        if (d.session == initiator.session && d.coherence == initiator.coherence &&
            d.field == initiator.field)
            return d;
    }
    return std::nullopt;
}

// ---- Event log -------------------------------------------------------------
//
// Line-delimited JSON records for replay. configure() is not logged; replay
// starts from an explicitly constructed initial state.

struct Event {
    enum class Type { feedback, adapt, send, acknowledge } type = Type::adapt;
    std::size_t hop = 0;          // feedback
    std::uint64_t losses = 0;     // feedback
    std::uint64_t total = 0;      // feedback
    std::uint64_t seed = 0;       // send
    PayloadBlock payloads;        // send
    std::uint32_t generation = 0; // acknowledge
};

inline void to_json(nlohmann::json& j, const Event& e) {
    switch (e.type) {
        case Event::Type::feedback:
            j = {{"ev", "feedback"}, {"hop", e.hop}, {"losses", e.losses}, {"total", e.total}};
            break;
        case Event::Type::adapt:
            j = {{"ev", "adapt"}};
            break;
        case Event::Type::send:
            j = {{"ev", "send"}, {"seed", e.seed}, {"payloads", e.payloads}};
            break;
        case Event::Type::acknowledge:
            j = {{"ev", "ack"}, {"generation", e.generation}};
            break;
    }
}

inline void from_json(const nlohmann::json& j, Event& e) {
    const std::string ev = j.at("ev").get<std::string>();
    if (ev == "feedback") {
        e.type = Event::Type::feedback;
        e.hop = j.at("hop").get<std::size_t>();
        e.losses = j.at("losses").get<std::uint64_t>();
        e.total = j.at("total").get<std::uint64_t>();
    } else if (ev == "adapt") {
        e.type = Event::Type::adapt;
    } else if (ev == "send") {
        e.type = Event::Type::send;
        e.seed = j.at("seed").get<std::uint64_t>();
        e.payloads = j.at("payloads").get<PayloadBlock>();
    } else if (ev == "ack") {
        e.type = Event::Type::acknowledge;
        e.generation = j.at("generation").get<std::uint32_t>();
    } else {
        throw std::invalid_argument("Event: unknown record type " + ev);
    }
}

struct EventLog {
    std::vector<Event> events;

    void save(std::ostream& out) const {
        for (const auto& e : events) {
            nlohmann::json j = e;
            out << j.dump() << '\n';
        }
    }

    static EventLog load(std::istream& in) {
        EventLog log;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            log.events.push_back(nlohmann::json::parse(line).get<Event>());
        }
        return log;
    }
};

struct ReplayResult {
    FunctionState state;
    std::vector<std::uint64_t> digests;  // state digest after each event
};

inline ReplayResult replay(FunctionState state, const EventLog& log) {
    ReplayResult out{std::move(state), {}};
    out.digests.reserve(log.events.size());
    for (const auto& e : log.events) {
        switch (e.type) {
            case Event::Type::feedback:
                out.state = on_feedback(std::move(out.state), e.hop, e.losses, e.total);
                break;
            case Event::Type::adapt:
                out.state = adapt(std::move(out.state)).state;
                break;
            case Event::Type::send:
                out.state = send_generation(std::move(out.state), e.payloads, e.seed).state;
                break;
            case Event::Type::acknowledge:
                out.state = acknowledge(std::move(out.state), e.generation);
                break;
        }
        out.digests.push_back(out.state.digest());
    }
    return out;
}

}  // namespace nclab
