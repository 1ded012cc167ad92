#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "bitact/bitstring.hpp"
#include "bitact/model.hpp"

namespace bitact {
namespace coder {

// Interval arithmetic runs on unsigned 64-bit registers with 32 fraction
// bits; conditional rows are quantized to 16-bit frequencies. After each
// renormalization the interval is wider than a quarter, so every symbol
// with a nonzero frequency keeps a nonempty subinterval and underflow is
// impossible by construction.
inline constexpr std::uint64_t kTop = 1ull << 32;
inline constexpr std::uint64_t kHalf = 1ull << 31;
inline constexpr std::uint64_t kQuarter = 1ull << 30;
inline constexpr std::uint64_t kThreeQuarters = 3ull << 30;
inline constexpr std::uint32_t kFreqTotal = 1u << 16;

/// Quantize a conditional row to integer frequencies summing to
/// kFreqTotal. Symbols with zero probability get frequency zero; every
/// positive symbol gets at least one unit. Largest-remainder rounding,
/// ties broken by symbol index, so the result is deterministic.
inline std::vector<std::uint32_t> quantize_row(const std::vector<double>& row) {
    const size_t n = row.size();
    std::vector<std::uint32_t> f(n, 0);
    std::vector<double> remainder(n, 0.0);
    std::int64_t sum = 0;
    size_t support = 0;
    for (size_t y = 0; y < n; ++y) {
        if (row[y] <= 0.0) continue;
        ++support;
        const double scaled = row[y] * static_cast<double>(kFreqTotal);
        auto fl = static_cast<std::uint32_t>(std::min(scaled, static_cast<double>(kFreqTotal)));
        remainder[y] = scaled - static_cast<double>(fl);
        if (fl == 0) {
            fl = 1;
            remainder[y] = 0.0;
        }
        f[y] = fl;
        sum += fl;
    }
    if (support == 0) throw ConditioningError("cannot quantize an empty row");
    if (support > kFreqTotal) throw PreconditionError("alphabet too large to quantize");
    std::int64_t diff = static_cast<std::int64_t>(kFreqTotal) - sum;
    if (diff > 0) {
        // Hand out the missing units by descending remainder.
        std::vector<size_t> order;
        for (size_t y = 0; y < n; ++y)
            if (row[y] > 0.0) order.push_back(y);
        std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            return remainder[a] > remainder[b];
        });
        size_t i = 0;
        while (diff > 0) {
            ++f[order[i]];
            --diff;
            i = (i + 1) % order.size();
        }
    }
    while (diff < 0) {
        // Shave the largest entries, never below one unit.
        size_t best = n;
        for (size_t y = 0; y < n; ++y)
            if (f[y] > 1 && (best == n || f[y] > f[best])) best = y;
        if (best == n) throw PreconditionError("row cannot absorb quantization deficit");
        --f[best];
        ++diff;
    }
    return f;
}

inline std::vector<std::uint32_t> quantized_conditionals(const ActionModel& model, StateId s,
                                                         const SymbolString& prefix) {
    return quantize_row(model.conditionals(s, prefix));
}

/// Hard cap on decode depth. Generous on purpose: the tag loses at most
/// 32 bits of slack per emitted symbol, and an action carries at most
/// max_action_length symbols.
inline int safety_depth_cap(const ActionModel& model) {
    return 32 * (model.alphabet().max_action_length() + 2) + 64;
}

}  // namespace coder

/// Streaming arithmetic encoder for one symbol string against a model
/// conditioned on a fixed state. Single-owner, mutates in place.
class Encoder {
public:
    Encoder(const ActionModel& model, StateId s) : model_(&model), s_(s) {}

    void encode_symbol(SymbolId y) {
        const auto freq = coder::quantized_conditionals(*model_, s_, prefix_);
        if (y < 0 || y >= static_cast<SymbolId>(freq.size()))
            throw AlphabetError("symbol id out of range: " + std::to_string(y));
        if (freq[y] == 0)
            throw EncodingError("zero-probability symbol: " +
                                model_->alphabet().name(y));
        std::uint64_t cum = 0;
        for (SymbolId i = 0; i < y; ++i) cum += freq[i];
        const std::uint64_t width = high_ - low_;
        high_ = low_ + width * (cum + freq[y]) / coder::kFreqTotal;
        low_ = low_ + width * cum / coder::kFreqTotal;
        renormalize();
        if (y == model_->alphabet().terminal())
            prefix_.clear();
        else
            prefix_.push_back(y);
        ++symbols_;
    }

    /// Close the stream with as few disambiguating bits as possible: the
    /// emitted bits' dyadic interval ends up inside [low, high). A fully
    /// renormalized interval needs none, an interval pinned to either
    /// end needs one, the general case needs two plus pending bits.
    Codeword finish() {
        if (pending_ == 0) {
            if (low_ == 0 && high_ == coder::kTop) return {out_, symbols_};
            if (low_ == 0) {
                out_.push_back(0);
                return {out_, symbols_};
            }
            if (high_ == coder::kTop) {
                out_.push_back(1);
                return {out_, symbols_};
            }
        }
        ++pending_;
        emit(low_ < coder::kQuarter ? 0 : 1);
        return {out_, symbols_};
    }

private:
    void renormalize() {
        for (;;) {
            if (high_ <= coder::kHalf) {
                emit(0);
            } else if (low_ >= coder::kHalf) {
                emit(1);
                low_ -= coder::kHalf;
                high_ -= coder::kHalf;
            } else if (low_ >= coder::kQuarter && high_ <= coder::kThreeQuarters) {
                ++pending_;
                low_ -= coder::kQuarter;
                high_ -= coder::kQuarter;
            } else {
                break;
            }
            low_ <<= 1;
            high_ <<= 1;
        }
    }

    void emit(int b) {
        out_.push_back(b);
        while (pending_ > 0) {
            out_.push_back(1 - b);
            --pending_;
        }
    }

    const ActionModel* model_;
    StateId s_;
    std::uint64_t low_ = 0;
    std::uint64_t high_ = coder::kTop;
    std::uint64_t pending_ = 0;
    BitString out_;
    SymbolString prefix_;
    int symbols_ = 0;
};

/// Incremental arithmetic decoder. Tracks both the model interval of the
/// symbols emitted so far and the tag interval implied by the bits
/// consumed so far; a symbol is emitted exactly when the whole tag
/// interval lies inside that symbol's subinterval.
///
/// Decoding restarts a fresh action after each terminal symbol, so one
/// bitstring can decode to several actions. Two deliberate asymmetries
/// against the pure certainty rule keep emission finite:
///   - symbols are only emitted while bits are being fed (a fresh
///     decoder reports the empty string even when the model forces its
///     first symbols);
///   - a new action never begins on a probability-one symbol.
class Decoder {
public:
    Decoder(const ActionModel& model, StateId s)
        : model_(&model), s_(s), depth_cap_(coder::safety_depth_cap(model)) {}

    /// Consume one bit; returns the symbols this bit made certain.
    SymbolString feed_bit(int b) {
        if (b != 0 && b != 1) throw PreconditionError("bit values must be 0 or 1");
        if (bits_consumed_ >= depth_cap_)
            throw DepthError("decode depth cap exceeded; model violates the termination rule");
        const std::uint64_t tw = thigh_ - tlow_;
        if (tw < 2)
            throw DepthError("decoder tag precision exhausted");
        if (b)
            tlow_ += tw / 2;
        else
            thigh_ = tlow_ + tw / 2;
        ++bits_consumed_;
        return pump();
    }

    /// Emit everything the current tag interval makes certain. feed_bit
    /// calls this; it only needs to be called directly to resolve
    /// symbols that need no bits at all (zero-bit codewords).
    SymbolString pump() {
        SymbolString newly;
        for (;;) {
            const auto freq = coder::quantized_conditionals(*model_, s_, action_prefix_);
            const std::uint64_t width = high_ - low_;
            SymbolId hit = -1;
            std::uint64_t hit_low = 0, hit_high = 0;
            std::uint64_t cum = 0;
            for (SymbolId y = 0; y < static_cast<SymbolId>(freq.size()); ++y) {
                if (freq[y] == 0) continue;
                const std::uint64_t lo = low_ + width * cum / coder::kFreqTotal;
                const std::uint64_t hi =
                    low_ + width * (cum + freq[y]) / coder::kFreqTotal;
                cum += freq[y];
                if (lo <= tlow_ && thigh_ <= hi) {
                    hit = y;
                    hit_low = lo;
                    hit_high = hi;
                    break;
                }
            }
            if (hit < 0) break;
            const bool starts_new_action = action_prefix_.empty() && !emitted_.empty();
            if (starts_new_action && freq[hit] == coder::kFreqTotal) break;
            emitted_.push_back(hit);
            newly.push_back(hit);
            low_ = hit_low;
            high_ = hit_high;
            if (hit == model_->alphabet().terminal()) {
                if (first_action_length_ < 0)
                    first_action_length_ = static_cast<int>(emitted_.size());
                action_prefix_.clear();
            } else {
                action_prefix_.push_back(hit);
            }
            renormalize();
        }
        return newly;
    }

    const SymbolString& emitted() const { return emitted_; }
    int bits_consumed() const { return bits_consumed_; }
    bool first_action_complete() const { return first_action_length_ >= 0; }

    /// The emitted symbols up to and including the first terminal.
    SymbolString first_action() const {
        if (first_action_length_ < 0)
            throw PreconditionError("no complete action decoded yet");
        return SymbolString(emitted_.begin(), emitted_.begin() + first_action_length_);
    }

    bool operator==(const Decoder& other) const {
        return model_ == other.model_ && s_ == other.s_ && low_ == other.low_ &&
               high_ == other.high_ && tlow_ == other.tlow_ && thigh_ == other.thigh_ &&
               emitted_ == other.emitted_ && action_prefix_ == other.action_prefix_ &&
               bits_consumed_ == other.bits_consumed_ &&
               first_action_length_ == other.first_action_length_;
    }

private:
    void renormalize() {
        for (;;) {
            if (high_ <= coder::kHalf) {
                // nothing to subtract
            } else if (low_ >= coder::kHalf) {
                low_ -= coder::kHalf;
                high_ -= coder::kHalf;
                tlow_ -= coder::kHalf;
                thigh_ -= coder::kHalf;
            } else if (low_ >= coder::kQuarter && high_ <= coder::kThreeQuarters) {
                low_ -= coder::kQuarter;
                high_ -= coder::kQuarter;
                tlow_ -= coder::kQuarter;
                thigh_ -= coder::kQuarter;
            } else {
                break;
            }
            low_ <<= 1;
            high_ <<= 1;
            tlow_ <<= 1;
            thigh_ <<= 1;
        }
    }

    const ActionModel* model_;
    StateId s_;
    std::uint64_t low_ = 0;
    std::uint64_t high_ = coder::kTop;
    std::uint64_t tlow_ = 0;
    std::uint64_t thigh_ = coder::kTop;
    SymbolString emitted_;
    SymbolString action_prefix_;
    int bits_consumed_ = 0;
    int first_action_length_ = -1;
    int depth_cap_;
};

/// Encode a symbol string; the codeword's bits decode back to exactly
/// the string via the Codeword overload of decode().
inline Codeword encode(const ActionModel& model, StateId s, const SymbolString& x) {
    Encoder enc(model, s);
    for (SymbolId y : x) enc.encode_symbol(y);
    return enc.finish();
}

/// Greedy incremental decode of a raw bitstring: everything the bits
/// make certain, possibly spanning several actions.
inline SymbolString decode(const ActionModel& model, StateId s, const BitString& q) {
    Decoder dec(model, s);
    for (size_t i = 0; i < q.size(); ++i) dec.feed_bit(q[i]);
    return dec.emitted();
}

/// Exact inverse of encode(): decodes precisely source_length symbols.
inline SymbolString decode(const ActionModel& model, StateId s, const Codeword& cw) {
    Decoder dec(model, s);
    dec.pump();
    for (size_t i = 0;
         i < cw.bits.size() && static_cast<int>(dec.emitted().size()) < cw.source_length;
         ++i)
        dec.feed_bit(cw.bits[i]);
    if (static_cast<int>(dec.emitted().size()) < cw.source_length)
        throw EncodingError("codeword does not determine the requested symbol count");
    SymbolString out = dec.emitted();
    out.resize(static_cast<size_t>(cw.source_length));
    return out;
}

struct SampleResult {
    SymbolString action;  // includes the trailing terminal
    int bits_consumed = 0;
};

/// Drive the decoder with fair random bits until one action completes.
/// The resulting action is distributed exactly as the quantized model.
inline SampleResult sample_action(const ActionModel& model, StateId s, std::mt19937_64& rng) {
    Decoder dec(model, s);
    std::bernoulli_distribution fair(0.5);
    while (!dec.first_action_complete()) dec.feed_bit(fair(rng) ? 1 : 0);
    return {dec.first_action(), dec.bits_consumed()};
}

/// Same, reading bits from a finite source.
inline SampleResult sample_action(const ActionModel& model, StateId s, const BitString& bits) {
    Decoder dec(model, s);
    size_t i = 0;
    while (!dec.first_action_complete()) {
        if (i >= bits.size())
            throw SourceExhaustedError("bit source exhausted before the action completed");
        dec.feed_bit(bits[i++]);
    }
    return {dec.first_action(), dec.bits_consumed()};
}

/// One minimal decodable bitstring together with the action it decodes to.
struct DecodableEntry {
    BitString bits;
    SymbolString action;  // includes the trailing terminal
};

/// All minimal bitstrings whose decode completes one action, by
/// depth-first search over the bit tree (bit 0 first, so the result is
/// in lexicographic order). The entries are prefix-free and their dyadic
/// widths sum to exactly one.
inline std::vector<DecodableEntry> enumerate_decodable(const ActionModel& model, StateId s) {
    std::vector<DecodableEntry> out;
    const Decoder root(model, s);
    BitString path;
    auto dfs = [&](auto&& self, const Decoder& node) -> void {
        for (int b = 0; b < 2; ++b) {
            Decoder child = node;
            child.feed_bit(b);
            path.push_back(b);
            if (child.first_action_complete())
                out.push_back({path, child.first_action()});
            else
                self(self, child);
            path.pop_back();
        }
    };
    dfs(dfs, root);
    return out;
}

/// Exact action distribution induced by fair bits through the decoder:
/// each minimal decodable string q contributes 2^-|q| to its action.
inline std::map<SymbolString, double> action_distribution(const ActionModel& model, StateId s) {
    std::map<SymbolString, double> dist;
    for (const auto& e : enumerate_decodable(model, s))
        dist[e.action] += std::ldexp(1.0, -static_cast<int>(e.bits.size()));
    return dist;
}

/// -log2 of the probability the integer-quantized coder actually assigns
/// to x: the realized interval width, tracked alongside the coder's own
/// arithmetic. Codelength bounds are stated against this quantity.
inline double quantized_neg_log2_probability(const ActionModel& model, StateId s,
                                             const SymbolString& x) {
    std::uint64_t low = 0, high = coder::kTop;
    long double neg_log2 = 0.0L;
    SymbolString prefix;
    for (SymbolId y : x) {
        const auto freq = coder::quantized_conditionals(model, s, prefix);
        if (freq.at(static_cast<size_t>(y)) == 0)
            throw EncodingError("zero-probability symbol: " + model.alphabet().name(y));
        std::uint64_t cum = 0;
        for (SymbolId i = 0; i < y; ++i) cum += freq[i];
        const std::uint64_t width = high - low;
        const std::uint64_t nhigh = low + width * (cum + freq[y]) / coder::kFreqTotal;
        const std::uint64_t nlow = low + width * cum / coder::kFreqTotal;
        neg_log2 -= std::log2(static_cast<long double>(nhigh - nlow)) -
                    std::log2(static_cast<long double>(width));
        low = nlow;
        high = nhigh;
        // Renormalize exactly as the coder does.
        for (;;) {
            if (high <= coder::kHalf) {
            } else if (low >= coder::kHalf) {
                low -= coder::kHalf;
                high -= coder::kHalf;
            } else if (low >= coder::kQuarter && high <= coder::kThreeQuarters) {
                low -= coder::kQuarter;
                high -= coder::kQuarter;
            } else {
                break;
            }
            low <<= 1;
            high <<= 1;
        }
        if (y == model.alphabet().terminal())
            prefix.clear();
        else
            prefix.push_back(y);
    }
    return static_cast<double>(neg_log2);
}

/// Upper bound on the decode depth needed for any single action: at
/// least every action's codeword length, and at least the deepest
/// minimal decodable string.
inline int decode_depth_bound(const ActionModel& model, StateId s) {
    const auto entries = enumerate_decodable(model, s);
    size_t deepest = 0;
    std::map<SymbolString, double> dist;
    for (const auto& e : entries) {
        deepest = std::max(deepest, e.bits.size());
        dist[e.action] += std::ldexp(1.0, -static_cast<int>(e.bits.size()));
    }
    double pmin = 1.0;
    for (const auto& [action, p] : dist) pmin = std::min(pmin, p);
    const int formula = static_cast<int>(std::ceil(-std::log2(pmin) - 1e-12)) + 2;
    return std::max(static_cast<int>(deepest), formula);
}

}  // namespace bitact
