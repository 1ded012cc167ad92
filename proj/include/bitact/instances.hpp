#pragma once

#include <memory>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "bitact/coder.hpp"
#include "bitact/mdp.hpp"
#include "bitact/mixture_model.hpp"
#include "bitact/ngram_model.hpp"
#include "bitact/uniform_model.hpp"

namespace bitact {

/// Size knobs for randomly generated desk-scale instances. Every
/// generator below is a pure function of its rng stream, so an instance
/// is reproducible from (seed, dims).
struct InstanceDims {
    int min_states = 2;
    int max_states = 4;
    int max_actions = 5;        // per state
    int max_symbols = 6;        // alphabet size including the terminal
    int max_action_length = 3;  // symbols per action including the terminal
    int max_depth_bound = 14;   // reject models whose codewords run deeper
};

namespace gen {

inline SymbolAlphabet random_alphabet(std::mt19937_64& rng, const InstanceDims& dims) {
    std::uniform_int_distribution<int> n_syms(2, dims.max_symbols - 1);
    std::uniform_int_distribution<int> len(2, dims.max_action_length);
    const int n = n_syms(rng);
    std::vector<std::string> names;
    for (int i = 0; i < n; ++i) names.push_back(std::string(1, static_cast<char>('a' + i)));
    names.push_back(SymbolAlphabet::kTerminalToken);
    return SymbolAlphabet(names, len(rng));
}

/// Distinct complete actions over the alphabet, each ending in its
/// first terminal.
inline std::vector<SymbolString> random_actions(std::mt19937_64& rng,
                                                const SymbolAlphabet& alphabet, int count) {
    // Clamp to the number of distinct actions the alphabet can express.
    const int m = alphabet.size() - 1;
    long possible = 0;
    long power = 1;
    for (int l = 0; l < alphabet.max_action_length(); ++l) {
        possible += power;
        power *= m;
        if (possible > 1000) break;
    }
    count = static_cast<int>(std::min<long>(count, possible));
    std::set<SymbolString> seen;
    std::uniform_int_distribution<int> len(0, alphabet.max_action_length() - 1);
    std::uniform_int_distribution<int> sym(0, alphabet.size() - 1);
    int guard = 0;
    while (static_cast<int>(seen.size()) < count) {
        if (++guard > 10000)
            throw PreconditionError("cannot draw enough distinct actions");
        SymbolString a;
        const int body = len(rng);
        bool ok = true;
        for (int i = 0; i < body; ++i) {
            const SymbolId y = sym(rng);
            if (y == alphabet.terminal()) {
                ok = false;
                break;
            }
            a.push_back(y);
        }
        if (!ok) continue;
        a.push_back(alphabet.terminal());
        seen.insert(a);
    }
    return {seen.begin(), seen.end()};
}

inline Mdp random_mdp(std::mt19937_64& rng, const InstanceDims& dims) {
    const SymbolAlphabet alphabet = random_alphabet(rng, dims);
    std::uniform_int_distribution<int> n_states(dims.min_states, dims.max_states);
    const int ns = n_states(rng);
    std::vector<std::string> names;
    for (int i = 0; i < ns; ++i) names.push_back("s" + std::to_string(i));
    Mdp mdp(alphabet, names, 0, 0.0, 1.0);

    std::uniform_int_distribution<int> n_actions(1, dims.max_actions);
    std::uniform_int_distribution<int> n_outcomes(1, 3);
    std::uniform_int_distribution<int> weight(1, 9);
    std::uniform_int_distribution<int> next_state(0, ns - 1);
    std::uniform_int_distribution<int> reward_idx(0, 4);
    const double rewards[] = {0.0, 0.25, 0.5, 0.75, 1.0};

    for (StateId s = 0; s < ns; ++s) {
        const auto actions = random_actions(rng, alphabet, n_actions(rng));
        for (const auto& a : actions) {
            const int k = n_outcomes(rng);
            std::vector<int> w(static_cast<size_t>(k));
            int total = 0;
            for (int& wi : w) {
                wi = weight(rng);
                total += wi;
            }
            std::vector<Outcome> outcomes;
            for (int i = 0; i < k; ++i)
                outcomes.push_back({next_state(rng), rewards[reward_idx(rng)],
                                    static_cast<double>(w[static_cast<size_t>(i)]) / total});
            mdp.add_action(s, a, std::move(outcomes));
        }
    }
    mdp.validate();
    return mdp;
}

/// Uniform model over the MDP's own legal action sets.
inline std::shared_ptr<const ActionModel> uniform_model_for(const Mdp& mdp) {
    std::vector<std::vector<SymbolString>> actions;
    for (StateId s = 0; s < mdp.num_states(); ++s) actions.push_back(mdp.actions(s));
    return std::make_shared<UniformActionModel>(mdp.alphabet(), std::move(actions));
}

/// Length bound on the codewords of (model, state): depth the encoder
/// can reach, as opposed to the deeper strings a boundary-chasing
/// decode can need. This is the budget knob for exact-enumeration
/// checks.
inline int encoder_length_bound(const ActionModel& model, StateId s) {
    double pmin = 1.0;
    for (const auto& [action, p] : action_distribution(model, s))
        pmin = std::min(pmin, p);
    return static_cast<int>(std::ceil(-std::log2(pmin) - 1e-12)) + 2;
}

/// Legality-masked n-gram with synthetic counts drawn from the MDP's own
/// action inventory. Rejects draws whose codeword length bound exceeds
/// the budget, so downstream exact enumeration stays desk-scale.
inline std::shared_ptr<const ActionModel> ngram_model_for(const Mdp& mdp,
                                                          std::mt19937_64& rng,
                                                          const InstanceDims& dims) {
    std::uniform_int_distribution<int> order(0, 1);
    std::uniform_int_distribution<int> repeats(1, 6);
    for (int attempt = 0; attempt < 64; ++attempt) {
        auto ngram = std::make_shared<NGramActionModel>(mdp.alphabet(), order(rng), 0.5);
        for (StateId s = 0; s < mdp.num_states(); ++s)
            for (const auto& a : mdp.actions(s)) {
                const int reps = repeats(rng);
                for (int i = 0; i < reps; ++i) ngram->ingest(a);
            }
        std::vector<std::vector<SymbolString>> actions;
        for (StateId s = 0; s < mdp.num_states(); ++s) actions.push_back(mdp.actions(s));
        auto masked = std::make_shared<LegalityMaskedModel>(ngram, std::move(actions));
        bool ok = true;
        for (StateId s = 0; s < mdp.num_states() && ok; ++s)
            if (encoder_length_bound(*masked, s) > dims.max_depth_bound) ok = false;
        if (ok) return masked;
    }
    throw PreconditionError("could not draw an n-gram model within the depth budget");
}

/// Free-standing model over a fresh alphabet (no MDP attached); used by
/// coder round-trip sweeps. Alternates between uniform action sets and
/// raw n-grams.
inline std::shared_ptr<const ActionModel> random_model(std::mt19937_64& rng,
                                                       const InstanceDims& dims) {
    const SymbolAlphabet alphabet = random_alphabet(rng, dims);
    std::uniform_int_distribution<int> coin(0, 1);
    if (coin(rng) == 0) {
        std::uniform_int_distribution<int> n_actions(1, dims.max_actions);
        return std::make_shared<UniformActionModel>(
            alphabet, random_actions(rng, alphabet, n_actions(rng)));
    }
    std::uniform_int_distribution<int> order(0, 1);
    std::uniform_int_distribution<int> n_lines(1, 8);
    auto ngram = std::make_shared<NGramActionModel>(alphabet, order(rng), 0.5);
    const auto actions = random_actions(rng, alphabet, n_lines(rng));
    for (const auto& a : actions) ngram->ingest(a);
    return ngram;
}

inline ExternalPolicy random_policy(const Mdp& mdp, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    std::vector<std::vector<double>> rows(mdp.num_states());
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        auto& row = rows[static_cast<size_t>(s)];
        row.resize(mdp.actions(s).size());
        double sum = 0.0;
        for (double& p : row) {
            p = u(rng);
            sum += p;
        }
        for (double& p : row) p /= sum;
    }
    return ExternalPolicy(mdp, std::move(rows));
}

}  // namespace gen
}  // namespace bitact
