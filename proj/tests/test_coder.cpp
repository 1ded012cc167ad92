#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>
#include <random>
#include <set>

#include "bitact/coder.hpp"
#include "bitact/instances.hpp"
#include "bitact/ngram_model.hpp"
#include "bitact/uniform_model.hpp"

using namespace bitact;

namespace {

SymbolAlphabet compass() {
    return SymbolAlphabet({"N", "S", "E", "W", SymbolAlphabet::kTerminalToken}, 2);
}

std::vector<SymbolString> compass_actions(const SymbolAlphabet& a) {
    return {{a.id("N"), a.terminal()},
            {a.id("S"), a.terminal()},
            {a.id("E"), a.terminal()},
            {a.id("W"), a.terminal()}};
}

SymbolString sample_string(const ActionModel& model, StateId s, std::mt19937_64& rng) {
    return sample_action(model, s, rng).action;
}

}  // namespace

TEST_CASE("bitstring wire format") {
    BitString b = BitString::from_string("1010011");
    const auto bytes = b.to_bytes();
    REQUIRE(bytes.size() == 5);
    CHECK(bytes[0] == 7);  // little-endian 32-bit count
    CHECK(bytes[1] == 0);
    CHECK(bytes[2] == 0);
    CHECK(bytes[3] == 0);
    CHECK(bytes[4] == 0xA6);  // MSB-first, zero padded
    CHECK(BitString::from_bytes(bytes) == b);

    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
        BitString r;
        std::uniform_int_distribution<int> len(0, 70);
        const int n = len(rng);
        for (int i = 0; i < n; ++i) r.push_back(static_cast<int>(rng() & 1));
        CHECK(BitString::from_bytes(r.to_bytes()) == r);
    }
}

TEST_CASE("quantization: dyadic rows are exact") {
    const auto f = coder::quantize_row({0.25, 0.25, 0.25, 0.25, 0.0});
    CHECK(f == std::vector<std::uint32_t>{16384, 16384, 16384, 16384, 0});
    const auto g = coder::quantize_row({1.0, 0.0});
    CHECK(g == std::vector<std::uint32_t>{65536, 0});
}

TEST_CASE("quantization: every positive symbol keeps a unit and rows sum exactly") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 500; ++trial) {
        std::uniform_int_distribution<int> n(1, 8);
        std::vector<double> row(static_cast<size_t>(n(rng)));
        double sum = 0.0;
        for (double& p : row) {
            p = u(rng) < 0.2 ? 0.0 : std::pow(u(rng), 8.0);
            sum += p;
        }
        if (sum == 0.0) row[0] = sum = 1.0;
        for (double& p : row) p /= sum;
        const auto f = coder::quantize_row(row);
        std::uint64_t total = 0;
        for (size_t i = 0; i < row.size(); ++i) {
            if (row[i] > 0.0) CHECK(f[i] >= 1);
            if (row[i] == 0.0) CHECK(f[i] == 0);
            total += f[i];
        }
        CHECK(total == coder::kFreqTotal);
    }
}

TEST_CASE("uniform 4-action model: exact 2-bit codewords in declaration order") {
    const auto a = compass();
    UniformActionModel model(a, compass_actions(a));
    const std::vector<std::string> expected = {"00", "01", "10", "11"};
    const auto actions = compass_actions(a);
    for (size_t i = 0; i < actions.size(); ++i) {
        const Codeword cw = encode(model, 0, actions[i]);
        CHECK(cw.bits.to_string() == expected[i]);
        CHECK(cw.source_length == 2);
        CHECK(decode(model, 0, cw) == actions[i]);
    }
}

TEST_CASE("incremental decode of the uniform model (hand-simulated intervals)") {
    const auto a = compass();
    UniformActionModel model(a, compass_actions(a));
    Decoder dec(model, 0);
    CHECK(dec.emitted().empty());
    // One zero: the tag [0, 1/2) straddles N's [0, 1/4) and S's [1/4, 1/2).
    CHECK(dec.feed_bit(0).empty());
    CHECK(dec.emitted().empty());
    // Second zero: tag [0, 1/4) lies inside N's interval; the terminal is
    // then forced.
    const auto newly = dec.feed_bit(0);
    REQUIRE(newly.size() == 2);
    CHECK(newly[0] == a.id("N"));
    CHECK(newly[1] == a.terminal());
    CHECK(dec.first_action_complete());

    // Fresh decoders from the same (model, state) are identical.
    Decoder d1(model, 0), d2(model, 0);
    CHECK(d1 == d2);
    d1.feed_bit(1);
    d2.feed_bit(1);
    CHECK(d1 == d2);
}

TEST_CASE("forced single action: zero-information codewords") {
    const SymbolAlphabet a({"go", "<T>"}, 2);
    UniformActionModel model(a, std::vector<SymbolString>{{a.id("go"), a.terminal()}});
    const SymbolString action = {a.id("go"), a.terminal()};
    const Codeword cw = encode(model, 0, action);
    CHECK(cw.bits.size() <= 2);
    CHECK(decode(model, 0, cw) == action);
    // Sampling consumes at most two bits.
    std::mt19937_64 rng(1);
    const auto s = sample_action(model, 0, rng);
    CHECK(s.action == action);
    CHECK(s.bits_consumed <= 2);
    CHECK(decode_depth_bound(model, 0) == 2);
}

TEST_CASE("uniform models over power-of-two action sets encode in exactly j bits") {
    for (int j = 1; j <= 4; ++j) {
        std::vector<std::string> names;
        const int count = 1 << j;
        for (int i = 0; i < count; ++i) names.push_back("a" + std::to_string(i));
        names.push_back(SymbolAlphabet::kTerminalToken);
        const SymbolAlphabet a(names, 2);
        std::vector<SymbolString> actions;
        for (int i = 0; i < count; ++i)
            actions.push_back({a.id("a" + std::to_string(i)), a.terminal()});
        UniformActionModel model(a, actions);
        for (const auto& action : actions) {
            const Codeword cw = encode(model, 0, action);
            CHECK(static_cast<int>(cw.bits.size()) == j);
            CHECK(decode(model, 0, cw) == action);
        }
    }
}

TEST_CASE("decode depth bound: formula matches the worked cases") {
    const auto a = compass();
    UniformActionModel model(a, compass_actions(a));
    CHECK(decode_depth_bound(model, 0) == 4);  // 2 bits + 2 flush slack
}

TEST_CASE("round trip and codelength bound on random models") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 800; ++trial) {
        auto model = gen::random_model(rng, InstanceDims{});
        const SymbolString x = sample_string(*model, 0, rng);
        const Codeword cw = encode(*model, 0, x);
        CHECK(decode(*model, 0, cw) == x);
        const double ideal = quantized_neg_log2_probability(*model, 0, x);
        CHECK(static_cast<double>(cw.bits.size()) <= std::ceil(ideal - 1e-9) + 2.0);
    }
}

TEST_CASE("round trip on partial strings via source length") {
    std::mt19937_64 rng(19);
    for (int trial = 0; trial < 300; ++trial) {
        auto model = gen::random_model(rng, InstanceDims{});
        SymbolString x = sample_string(*model, 0, rng);
        // Chop the trailing terminal to get a positive-probability prefix.
        std::uniform_int_distribution<int> cut(0, static_cast<int>(x.size()) - 1);
        x.resize(static_cast<size_t>(cut(rng)) + 1);
        if (model->sequence_probability(0, x) == 0.0) continue;
        const Codeword cw = encode(*model, 0, x);
        CHECK(decode(*model, 0, cw) == x);
    }
}

TEST_CASE("encode rejects zero-probability strings") {
    const auto a = compass();
    UniformActionModel model(a, compass_actions(a));
    CHECK_THROWS_AS(encode(model, 0, {a.terminal()}), EncodingError);
}

TEST_CASE("empty string: encode emits nothing, decode of nothing is empty") {
    const auto a = compass();
    UniformActionModel model(a, compass_actions(a));
    const Codeword cw = encode(model, 0, {});
    CHECK(cw.bits.empty());
    CHECK(cw.source_length == 0);
    CHECK(decode(model, 0, BitString()).empty());
}

TEST_CASE("incremental/batch agreement and prefix monotonicity") {
    std::mt19937_64 rng(29);
    for (int trial = 0; trial < 300; ++trial) {
        auto model = gen::random_model(rng, InstanceDims{});
        BitString bits;
        std::uniform_int_distribution<int> len(1, 12);
        const int n = len(rng);
        for (int i = 0; i < n; ++i) bits.push_back(static_cast<int>(rng() & 1));

        Decoder step(*model, 0);
        SymbolString previous;
        for (size_t i = 0; i < bits.size(); ++i) {
            step.feed_bit(bits[i]);
            // Prefix monotonicity: emitted strings only extend.
            REQUIRE(step.emitted().size() >= previous.size());
            CHECK(std::equal(previous.begin(), previous.end(), step.emitted().begin()));
            previous = step.emitted();
        }
        CHECK(decode(*model, 0, bits) == step.emitted());
    }
}

TEST_CASE("distinct bitstrings can decode to the same action") {
    // Three equiprobable actions: the middle one owns [1/3, 2/3), which
    // spans the dyadic boundary 1/2, so at least two minimal bitstrings
    // decode to it.
    const SymbolAlphabet a({"p", "q", "r", "<T>"}, 2);
    UniformActionModel model(a, std::vector<SymbolString>{{a.id("p"), a.terminal()},
                                                          {a.id("q"), a.terminal()},
                                                          {a.id("r"), a.terminal()}});
    std::map<SymbolString, int> owners;
    for (const auto& e : enumerate_decodable(model, 0)) ++owners[e.action];
    CHECK(owners[{a.id("q"), a.terminal()}] >= 2);
    // All three actions are reachable.
    CHECK(owners.size() == 3);
}

TEST_CASE("decodable set: prefix-free, Kraft-complete, encoder-consistent") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 60; ++trial) {
        auto model = gen::random_model(rng, InstanceDims{});
        const auto entries = enumerate_decodable(*model, 0);
        double kraft = 0.0;
        for (size_t i = 0; i < entries.size(); ++i) {
            kraft += std::ldexp(1.0, -static_cast<int>(entries[i].bits.size()));
            for (size_t j = i + 1; j < entries.size(); ++j) {
                CHECK_FALSE(entries[i].bits.is_prefix_of(entries[j].bits));
                CHECK_FALSE(entries[j].bits.is_prefix_of(entries[i].bits));
            }
        }
        CHECK(kraft <= 1.0 + 1e-12);
        CHECK_THAT(kraft, Catch::Matchers::WithinAbs(1.0, 1e-12));

        // Every action's codeword extends one decodable string that
        // decodes to that same action.
        std::set<SymbolString> actions;
        for (const auto& e : entries) actions.insert(e.action);
        for (const auto& action : actions) {
            const Codeword cw = encode(*model, 0, action);
            bool matched = false;
            for (const auto& e : entries)
                if (e.bits.is_prefix_of(cw.bits) ||
                    (e.bits.size() >= cw.bits.size() && cw.bits.is_prefix_of(e.bits)))
                    matched = matched || e.action == action;
            CHECK(matched);
        }
    }
}

TEST_CASE("dyadic split: decodable set matches hand enumeration") {
    // Four equiprobable actions, one of them single-symbol: u<T> owns
    // [0, 1/4) so its only minimal bitstring is 00; the v-prefixed
    // actions tile [1/4, 1).
    const SymbolAlphabet a({"u", "v", "w", "<T>"}, 3);
    UniformActionModel model(
        a, std::vector<SymbolString>{{a.id("u"), a.terminal()},
                                     {a.id("v"), a.terminal()},
                                     {a.id("v"), a.id("v"), a.terminal()},
                                     {a.id("v"), a.id("u"), a.terminal()}});
    const auto entries = enumerate_decodable(model, 0);
    std::map<std::string, std::string> got;
    for (const auto& e : entries) got[e.bits.to_string()] = a.format(e.action);
    REQUIRE(got.count("00") == 1);
    CHECK(got["00"] == "u <T>");
    CHECK(got.size() == entries.size());  // minimal strings are distinct
}

TEST_CASE("sampling matches the exact decoder-induced distribution") {
    const auto a = compass();
    UniformActionModel model(a, compass_actions(a));
    const auto exact = action_distribution(model, 0);
    std::map<SymbolString, int> counts;
    std::mt19937_64 rng(41);
    const int n = 20000;
    for (int i = 0; i < n; ++i) ++counts[sample_action(model, 0, rng).action];
    double tv = 0.0;
    for (const auto& [action, p] : exact)
        tv += std::abs(p - static_cast<double>(counts[action]) / n);
    tv /= 2.0;
    CHECK(tv <= 0.01);
    // Exact distribution of the uniform dyadic model is itself uniform.
    for (const auto& [action, p] : exact) CHECK(p == 0.25);
}

TEST_CASE("finite bit sources are checked for exhaustion") {
    const auto a = compass();
    UniformActionModel model(a, compass_actions(a));
    CHECK_THROWS_AS(sample_action(model, 0, BitString::from_string("0")),
                    SourceExhaustedError);
    const auto r = sample_action(model, 0, BitString::from_string("10"));
    CHECK(r.action == SymbolString{a.id("E"), a.terminal()});
    CHECK(r.bits_consumed == 2);
}

TEST_CASE("quantized log probability agrees with dyadic arithmetic") {
    const auto a = compass();
    UniformActionModel model(a, compass_actions(a));
    const double bits = quantized_neg_log2_probability(model, 0, {a.id("N"), a.terminal()});
    CHECK_THAT(bits, Catch::Matchers::WithinAbs(2.0, 1e-12));
}
