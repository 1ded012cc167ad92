// Acceptance suite: one test case and one printed pass/fail line per
// criterion. Tolerances and sizes are pinned here, not configurable.

#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>

#include "bitact/instances.hpp"
#include "bitact/internal.hpp"
#include "bitact/toy_tasks.hpp"
#include "bitact/verify.hpp"

using namespace bitact;

namespace {

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void report_line(int criterion, const std::string& what, bool passed, double seconds) {
    std::printf("[%s] criterion %d: %s (%.2f s)\n", passed ? "PASS" : "FAIL", criterion,
                what.c_str(), seconds);
    std::fflush(stdout);
}

struct Triple {
    std::shared_ptr<const ActionModel> model;
    StateId state = 0;
    SymbolString string;
};

// 10^4 randomized (model, state, string) triples over alphabets of at
// most 6 symbols and actions of at most 5 symbols. Half the strings are
// complete actions, half positive-probability prefixes.
std::vector<Triple> roundtrip_triples(std::uint64_t seed) {
    InstanceDims dims;
    dims.max_symbols = 6;
    dims.max_action_length = 5;
    std::mt19937_64 rng(seed);
    std::vector<Triple> triples;
    triples.reserve(10000);
    while (triples.size() < 10000) {
        std::shared_ptr<const ActionModel> model;
        StateId state = 0;
        if (triples.size() % 2000 < 1000) {
            model = gen::random_model(rng, dims);
        } else {
            const Mdp mdp = gen::random_mdp(rng, dims);
            std::uniform_int_distribution<int> pick_state(0, mdp.num_states() - 1);
            state = pick_state(rng);
            model = gen::uniform_model_for(mdp);
        }
        for (int i = 0; i < 10 && triples.size() < 10000; ++i) {
            SymbolString x = sample_action(*model, state, rng).action;
            if (i % 2 == 1 && x.size() > 1) {
                std::uniform_int_distribution<int> cut(1, static_cast<int>(x.size()) - 1);
                x.resize(static_cast<size_t>(cut(rng)));
            }
            triples.push_back({model, state, x});
        }
    }
    return triples;
}

}  // namespace

TEST_CASE("criterion 1: round-trip identity") {
    Stopwatch timer;
    const auto triples = roundtrip_triples(10101);
    bool all_exact = true;
    for (const auto& t : triples) {
        const Codeword cw = encode(*t.model, t.state, t.string);
        if (decode(*t.model, t.state, cw) != t.string) all_exact = false;
    }
    const double elapsed = timer.seconds();
    const bool in_time = elapsed <= 10.0;
    report_line(1, "decode(encode(x)) = x on 10000 randomized triples", all_exact && in_time,
                elapsed);
    CHECK(all_exact);
    CHECK(in_time);
}

TEST_CASE("criterion 2: codelength bound and dyadic exactness") {
    Stopwatch timer;
    const auto triples = roundtrip_triples(10101);
    bool bound_holds = true;
    for (const auto& t : triples) {
        const Codeword cw = encode(*t.model, t.state, t.string);
        const double ideal = quantized_neg_log2_probability(*t.model, t.state, t.string);
        if (static_cast<double>(cw.bits.size()) > std::ceil(ideal - 1e-9) + 2.0)
            bound_holds = false;
    }
    bool dyadic_exact = true;
    for (int j = 1; j <= 4; ++j) {
        const int count = 1 << j;
        std::vector<std::string> names;
        for (int i = 0; i < count; ++i) names.push_back("a" + std::to_string(i));
        names.push_back(SymbolAlphabet::kTerminalToken);
        const SymbolAlphabet alphabet(names, 2);
        std::vector<SymbolString> actions;
        for (int i = 0; i < count; ++i)
            actions.push_back({alphabet.id("a" + std::to_string(i)), alphabet.terminal()});
        UniformActionModel model(alphabet, actions);
        for (const auto& action : actions)
            if (encode(model, 0, action).bits.size() != static_cast<size_t>(j))
                dyadic_exact = false;
    }
    report_line(2, "|encode(x)| <= ceil(-log2 rho_q(x)) + 2; uniform 2^j models use j bits",
                bound_holds && dyadic_exact, timer.seconds());
    CHECK(bound_holds);
    CHECK(dyadic_exact);
}

TEST_CASE("criterion 3: internal/external value equivalence") {
    Stopwatch timer;
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        const std::uint64_t seed = 30303 + static_cast<std::uint64_t>(i);
        std::mt19937_64 rng(seed);
        const Mdp mdp = gen::random_mdp(rng, InstanceDims{});
        auto model = i % 2 == 0 ? gen::uniform_model_for(mdp)
                                : gen::ngram_model_for(mdp, rng, InstanceDims{});
        const int m = 1 + i % 3;
        const UniformInternalPolicy uniform;
        const HashedRandomInternalPolicy randomized(seed);
        worst = std::max(worst,
                         check_theorem2(mdp, model, uniform, m, 1e-9, seed).deviation);
        worst = std::max(worst,
                         check_theorem2(mdp, model, randomized, m, 1e-9, seed).deviation);
    }
    const bool equal = worst <= 1e-9;

    // Mutation: a nonzero mid-decode reward must break the check.
    const ToyTasks toys = build_toy_tasks();
    const UniformInternalPolicy pi;
    const auto mutated = check_theorem2(toys.task_b, gen::uniform_model_for(toys.task_b),
                                        pi, 2, 1e-9, 1, 0.1);
    const bool mutation_detected = !mutated.passed;

    const double elapsed = timer.seconds();
    const bool in_time = elapsed <= 60.0;
    std::ostringstream what;
    what << "max |Q_ext - Q_int| = " << std::scientific << std::setprecision(2) << worst
         << " over 20 instances x 2 policies; mutation detected";
    report_line(3, what.str(), equal && mutation_detected && in_time, elapsed);
    CHECK(equal);
    CHECK(mutation_detected);
    CHECK(in_time);
}

TEST_CASE("criterion 4: uplift normalization, prefix-freeness, Kraft") {
    Stopwatch timer;
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        const std::uint64_t seed = 30303 + static_cast<std::uint64_t>(i);
        std::mt19937_64 rng(seed);
        const Mdp mdp = gen::random_mdp(rng, InstanceDims{});
        auto model = i % 2 == 0 ? gen::uniform_model_for(mdp)
                                : gen::ngram_model_for(mdp, rng, InstanceDims{});
        const UniformInternalPolicy uniform;
        const HashedRandomInternalPolicy randomized(seed);
        worst = std::max(
            worst, check_uplift_normalization(*model, uniform, mdp, seed).deviation);
        worst = std::max(
            worst, check_uplift_normalization(*model, randomized, mdp, seed).deviation);
    }
    const bool ok = worst <= 1e-9;
    std::ostringstream what;
    what << "max |sum_a Pi(a|s) - 1| = " << std::scientific << std::setprecision(2) << worst
         << "; decodable sets prefix-free with Kraft sum <= 1";
    report_line(4, what.str(), ok, timer.seconds());
    CHECK(ok);
}

TEST_CASE("criterion 5: sampling duality") {
    Stopwatch timer;
    const SymbolAlphabet compass({"N", "S", "E", "W", SymbolAlphabet::kTerminalToken}, 2);
    auto uniform = std::make_shared<UniformActionModel>(
        compass, std::vector<SymbolString>{{compass.id("N"), compass.terminal()},
                                           {compass.id("S"), compass.terminal()},
                                           {compass.id("E"), compass.terminal()},
                                           {compass.id("W"), compass.terminal()}});
    const auto r1 = check_sampling(*uniform, 0, 100000, 50505);
    const auto skewed = skewed_three_action_model();
    const auto r2 = check_sampling(*skewed, 0, 100000, 50506);
    const bool ok = r1.passed && r2.passed;
    std::ostringstream what;
    what << "TV(empirical, rho_q) = " << std::scientific << std::setprecision(2)
         << std::max(r1.deviation, r2.deviation) << " <= 0.01 at N=100000";
    report_line(5, what.str(), ok, timer.seconds());
    CHECK(r1.passed);
    CHECK(r2.passed);
}

TEST_CASE("criterion 6: mixture regret and task identification") {
    Stopwatch timer;
    const ToyTasks toys = build_toy_tasks();
    auto model_a = std::make_shared<NGramActionModel>(
        NGramActionModel::fit(toys.alphabet(), toys.corpus_a, 1));
    auto model_b = std::make_shared<NGramActionModel>(
        NGramActionModel::fit(toys.alphabet(), toys.corpus_b, 1));
    std::vector<std::shared_ptr<const ActionModel>> components = {model_a, model_b};
    std::vector<SymbolString> data;
    std::mt19937_64 rng(60606);
    for (int i = 0; i < 1000; ++i) {
        std::mt19937_64 bits(rng());
        data.push_back(sample_action(i % 2 ? *model_a : *model_b, 0, bits).action);
    }
    const auto r = check_mixture(components, data, toys, 30, 0.95, 60606);
    std::ostringstream what;
    what << "regret gap <= log2 K on 1000 strings; " << r.instance;
    report_line(6, what.str(), r.passed, timer.seconds());
    CHECK(r.passed);
}

TEST_CASE("criterion 7: estimator consistency under an adversarial prefix") {
    Stopwatch timer;
    const auto r = check_consistency_prefix(0.7, 50, 10000, 0.05, 70707);
    std::ostringstream what;
    what << "KT estimate within 0.05 of 0.7 with and without a 50-zero prefix";
    report_line(7, what.str(), r.passed, timer.seconds());
    CHECK(r.passed);
}

TEST_CASE("criterion 8: loop returns match exact evaluation") {
    Stopwatch timer;
    const ToyTasks toys = build_toy_tasks();
    bool ok = true;
    std::ostringstream what;
    what << "Monte Carlo vs exact value";
    const std::vector<std::pair<const Mdp*, const Corpus*>> cases = {
        {&toys.task_a, &toys.corpus_a}, {&toys.task_b, &toys.corpus_b}};
    int case_index = 0;
    for (const auto& [mdp, corpus] : cases) {
        auto ngram = std::make_shared<NGramActionModel>(
            NGramActionModel::fit(toys.alphabet(), *corpus, 1));
        std::vector<std::vector<SymbolString>> legal;
        for (StateId s = 0; s < mdp->num_states(); ++s) legal.push_back(mdp->actions(s));
        auto model = std::make_shared<LegalityMaskedModel>(ngram, legal);
        const UniformInternalPolicy pi;
        const int m = 3;
        const double exact =
            v_value(*mdp, uplift(pi, *model, *mdp), mdp->initial_state(), m);
        std::mt19937_64 rng(80808 + static_cast<std::uint64_t>(case_index));
        const int episodes = 100000;
        double sum = 0.0, sumsq = 0.0;
        for (int i = 0; i < episodes; ++i) {
            const double z = run_loop(pi, *model, *mdp, m, rng).total_reward();
            sum += z;
            sumsq += z * z;
        }
        const double mean = sum / episodes;
        const double se = std::sqrt((sumsq / episodes - mean * mean) /
                                    static_cast<double>(episodes - 1));
        const bool within = std::abs(mean - exact) <= 3.0 * se + 1e-12;
        ok = ok && within;
        what << (case_index == 0 ? ": task_a |" : " task_b |") << std::fixed
             << std::setprecision(4) << mean << " - " << exact << "| vs 3se="
             << std::setprecision(4) << 3.0 * se;
        ++case_index;
    }
    report_line(8, what.str(), ok, timer.seconds());
    CHECK(ok);
}

TEST_CASE("criterion 9: internalize/uplift round trip") {
    Stopwatch timer;
    const ToyTasks toys = build_toy_tasks();
    double worst = 0.0;
    std::mt19937_64 rng(90909);
    for (const Mdp* mdp : {&toys.task_a, &toys.task_b}) {
        auto model = gen::uniform_model_for(*mdp);
        for (int i = 0; i < 10; ++i) {
            const auto ext = gen::random_policy(*mdp, rng);
            const auto pi = internalize_policy(ext, *model, *mdp);
            const auto back = uplift(*pi, *model, *mdp);
            for (StateId s = 0; s < mdp->num_states(); ++s)
                for (size_t a = 0; a < mdp->actions(s).size(); ++a)
                    worst = std::max(worst, std::abs(back.prob(s, static_cast<int>(a)) -
                                                     ext.prob(s, static_cast<int>(a))));
        }
    }
    const bool ok = worst <= 1e-9;
    std::ostringstream what;
    what << "max |uplift(internalize(Pi')) - Pi'| = " << std::scientific
         << std::setprecision(2) << worst << " over 10 policies per toy task";
    report_line(9, what.str(), ok, timer.seconds());
    CHECK(ok);
}
