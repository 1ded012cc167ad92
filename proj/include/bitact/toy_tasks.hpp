#pragma once

#include <random>

#include "bitact/mdp.hpp"
#include "bitact/ngram_model.hpp"

namespace bitact {

/// Two small tasks over one shared alphabet but disjoint sub-alphabets:
/// a 4-state line with one-symbol actions and a 3-state task with
/// two-symbol actions. Comes with fixed behavior corpora for n-gram
/// training, skewed toward near-optimal play.
struct ToyTasks {
    Mdp task_a;
    Mdp task_b;
    Corpus corpus_a;
    Corpus corpus_b;

    const SymbolAlphabet& alphabet() const { return task_a.alphabet(); }
};

inline SymbolAlphabet toy_alphabet() {
    return SymbolAlphabet({"L", "R", "x", "y", SymbolAlphabet::kTerminalToken}, 3);
}

namespace detail {

inline Mdp build_gridline(const SymbolAlphabet& alphabet) {
    Mdp mdp(alphabet, {"g0", "g1", "g2", "g3"}, 0, 0.0, 1.0);
    const SymbolId left = alphabet.id("L");
    const SymbolId right = alphabet.id("R");
    const SymbolId top = alphabet.terminal();
    for (StateId s = 0; s < 4; ++s) {
        const StateId dn = std::max(0, s - 1);
        const StateId up = std::min(3, s + 1);
        auto reward_of = [](StateId next) { return next == 3 ? 1.0 : 0.0; };
        if (dn == s)
            mdp.add_action(s, {left, top}, {{s, reward_of(s), 1.0}});
        else
            mdp.add_action(s, {left, top},
                           {{dn, reward_of(dn), 0.9}, {s, reward_of(s), 0.1}});
        if (up == s)
            mdp.add_action(s, {right, top}, {{s, reward_of(s), 1.0}});
        else
            mdp.add_action(s, {right, top},
                           {{up, reward_of(up), 0.9}, {s, reward_of(s), 0.1}});
    }
    mdp.validate();
    return mdp;
}

inline Mdp build_pairtask(const SymbolAlphabet& alphabet) {
    Mdp mdp(alphabet, {"h0", "h1", "h2"}, 0, 0.0, 1.0);
    const SymbolId x = alphabet.id("x");
    const SymbolId y = alphabet.id("y");
    const SymbolId top = alphabet.terminal();
    const SymbolString xy = {x, y, top};
    const SymbolString yx = {y, x, top};
    const SymbolString xx = {x, x, top};
    mdp.add_action(0, xy, {{1, 1.0, 0.8}, {0, 0.0, 0.2}});
    mdp.add_action(0, yx, {{2, 0.0, 1.0}});
    mdp.add_action(0, xx, {{0, 0.2, 1.0}});
    mdp.add_action(1, xy, {{1, 0.0, 1.0}});
    mdp.add_action(1, yx, {{0, 0.0, 1.0}});
    mdp.add_action(1, xx, {{2, 1.0, 0.9}, {1, 0.0, 0.1}});
    mdp.add_action(2, xy, {{0, 0.5, 1.0}});
    mdp.add_action(2, yx, {{2, 0.0, 1.0}});
    mdp.add_action(2, xx, {{0, 0.0, 1.0}});
    mdp.validate();
    return mdp;
}

inline Corpus sample_corpus(const SymbolAlphabet& alphabet,
                            const std::vector<std::pair<SymbolString, double>>& behavior,
                            int lines, int actions_per_line, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Corpus corpus;
    for (int i = 0; i < lines; ++i) {
        SymbolString line;
        for (int j = 0; j < actions_per_line; ++j) {
            double r = u(rng);
            const SymbolString* pick = &behavior.back().first;
            for (const auto& [action, p] : behavior) {
                if (r < p) {
                    pick = &action;
                    break;
                }
                r -= p;
            }
            line.insert(line.end(), pick->begin(), pick->end());
        }
        (void)alphabet;
        corpus.lines.push_back(std::move(line));
    }
    return corpus;
}

}  // namespace detail

inline ToyTasks build_toy_tasks() {
    const SymbolAlphabet alphabet = toy_alphabet();
    Mdp task_a = detail::build_gridline(alphabet);
    Mdp task_b = detail::build_pairtask(alphabet);

    const SymbolId left = alphabet.id("L");
    const SymbolId right = alphabet.id("R");
    const SymbolId x = alphabet.id("x");
    const SymbolId y = alphabet.id("y");
    const SymbolId top = alphabet.terminal();

    Corpus corpus_a = detail::sample_corpus(
        alphabet,
        {{{right, top}, 0.85}, {{left, top}, 0.15}},
        60, 8, 20240601ull);
    Corpus corpus_b = detail::sample_corpus(
        alphabet,
        {{{x, x, top}, 0.70}, {{x, y, top}, 0.20}, {{y, x, top}, 0.10}},
        60, 6, 20240602ull);

    return ToyTasks{std::move(task_a), std::move(task_b), std::move(corpus_a),
                    std::move(corpus_b)};
}

}  // namespace bitact
