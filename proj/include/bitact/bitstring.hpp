#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bitact/common.hpp"

namespace bitact {

/// Finite sequence of bits. Wire format: a 32-bit little-endian bit
/// count followed by the bits packed most-significant-bit first, zero
/// padded to a byte boundary.
class BitString {
public:
    BitString() = default;
    explicit BitString(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
        for (auto b : bits_)
            if (b > 1) throw PreconditionError("bit values must be 0 or 1");
    }

    static BitString from_string(const std::string& s) {
        BitString out;
        for (char c : s) {
            if (c == '0') out.bits_.push_back(0);
            else if (c == '1') out.bits_.push_back(1);
            else throw PreconditionError("bitstring literal may contain only 0 and 1");
        }
        return out;
    }

    void push_back(int b) {
        if (b != 0 && b != 1) throw PreconditionError("bit values must be 0 or 1");
        bits_.push_back(static_cast<std::uint8_t>(b));
    }
    void pop_back() { bits_.pop_back(); }

    int operator[](size_t i) const { return bits_[i]; }
    size_t size() const { return bits_.size(); }
    bool empty() const { return bits_.empty(); }
    auto begin() const { return bits_.begin(); }
    auto end() const { return bits_.end(); }

    bool operator==(const BitString& other) const { return bits_ == other.bits_; }
    bool operator<(const BitString& other) const { return bits_ < other.bits_; }

    bool is_prefix_of(const BitString& other) const {
        if (size() > other.size()) return false;
        return std::equal(bits_.begin(), bits_.end(), other.bits_.begin());
    }

    std::string to_string() const {
        std::string s;
        s.reserve(bits_.size());
        for (auto b : bits_) s.push_back(b ? '1' : '0');
        return s;
    }

    std::vector<std::uint8_t> to_bytes() const {
        const auto n = static_cast<std::uint32_t>(bits_.size());
        std::vector<std::uint8_t> out;
        out.reserve(4 + (bits_.size() + 7) / 8);
        for (int i = 0; i < 4; ++i)
            out.push_back(static_cast<std::uint8_t>((n >> (8 * i)) & 0xff));
        std::uint8_t acc = 0;
        int filled = 0;
        for (auto b : bits_) {
            acc = static_cast<std::uint8_t>((acc << 1) | b);
            if (++filled == 8) {
                out.push_back(acc);
                acc = 0;
                filled = 0;
            }
        }
        if (filled > 0) out.push_back(static_cast<std::uint8_t>(acc << (8 - filled)));
        return out;
    }

    static BitString from_bytes(std::span<const std::uint8_t> bytes) {
        if (bytes.size() < 4) throw IngestionError("bitstring blob shorter than its header");
        std::uint32_t n = 0;
        for (int i = 0; i < 4; ++i) n |= static_cast<std::uint32_t>(bytes[i]) << (8 * i);
        if (bytes.size() < 4 + (static_cast<size_t>(n) + 7) / 8)
            throw IngestionError("bitstring blob truncated");
        BitString out;
        out.bits_.reserve(n);
        for (std::uint32_t i = 0; i < n; ++i) {
            const std::uint8_t byte = bytes[4 + i / 8];
            out.bits_.push_back((byte >> (7 - i % 8)) & 1);
        }
        return out;
    }

private:
    std::vector<std::uint8_t> bits_;
};

/// Encoder output: the bits plus the number of source symbols they
/// represent, which an exact decode needs to know where to stop.
struct Codeword {
    BitString bits;
    int source_length = 0;
};

}  // namespace bitact
