#pragma once

#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bitact/instances.hpp"
#include "bitact/internal.hpp"
#include "bitact/toy_tasks.hpp"

namespace bitact {

/// Outcome of one executable check. passed is always deviation <=
/// tolerance; everything except runtime_seconds is reproducible from
/// (check, seed, instance).
struct VerificationReport {
    std::string check;
    std::string instance;
    std::uint64_t seed = 0;
    double deviation = 0.0;
    double tolerance = 0.0;
    bool passed = false;
    double runtime_seconds = 0.0;
};

namespace detail {

class CheckTimer {
public:
    CheckTimer() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
            .count();
    }

private:
    std::chrono::steady_clock::time_point start_;
};

inline VerificationReport finish_report(std::string check, std::string instance,
                                        std::uint64_t seed, double deviation,
                                        double tolerance, const CheckTimer& timer) {
    VerificationReport r;
    r.check = std::move(check);
    r.instance = std::move(instance);
    r.seed = seed;
    r.deviation = deviation;
    r.tolerance = tolerance;
    r.passed = deviation <= tolerance;
    r.runtime_seconds = timer.seconds();
    return r;
}

}  // namespace detail

/// Additive-1/2 smoothed frequency estimator for a Bernoulli parameter.
struct KtEstimator {
    double estimate(const std::vector<int>& xs) const {
        std::uint64_t ones = 0;
        for (int x : xs) ones += static_cast<std::uint64_t>(x != 0);
        return (static_cast<double>(ones) + 0.5) / (static_cast<double>(xs.size()) + 1.0);
    }
};

/// Exhaustive internal/external value agreement: max over all completing
/// (state, buffer, bit) triples of |Q of the uplifted policy - internal
/// Q|. mid_decode_reward perturbs the internal kernel away from its
/// defining zero; any nonzero value must break the check.
inline VerificationReport check_theorem2(const Mdp& mdp,
                                         std::shared_ptr<const ActionModel> model,
                                         const InternalPolicy& pi, int m, double tol,
                                         std::uint64_t seed,
                                         double mid_decode_reward = 0.0) {
    detail::CheckTimer timer;
    if (mdp.num_states() > 4) throw BudgetError("theorem2 check is limited to 4 states");
    int max_actions = 0;
    for (StateId s = 0; s < mdp.num_states(); ++s)
        max_actions = std::max(max_actions, static_cast<int>(mdp.actions(s).size()));
    if (max_actions > 5) throw BudgetError("theorem2 check is limited to 5 actions per state");
    if (m > 3) throw BudgetError("theorem2 check is limited to horizon 3");
    for (StateId s = 0; s < mdp.num_states(); ++s)
        if (gen::encoder_length_bound(*model, s) > 14)
            throw BudgetError("theorem2 check is limited to 14-bit codewords");

    InternalEnvironment env(mdp, model);
    env.set_mid_decode_reward(mid_decode_reward);
    const ExternalPolicy uplifted = uplift(pi, *model, mdp);
    double worst = 0.0;
    int triples = 0;
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        for (const auto& entry : decodable_set(*model, s)) {
            BitString parent;
            for (size_t i = 0; i + 1 < entry.bits.size(); ++i)
                parent.push_back(entry.bits[i]);
            const int last = entry.bits[entry.bits.size() - 1];
            const int idx = mdp.action_index(s, entry.action);
            if (idx < 0)
                throw LegalityError("decodable action is not legal in state " +
                                    mdp.state_name(s));
            const double lhs = q_value(mdp, uplifted, s, idx, m);
            const double rhs = internal_q_value(env, pi, {s, parent}, last, m);
            worst = std::max(worst, std::abs(lhs - rhs));
            ++triples;
        }
    }
    std::ostringstream inst;
    inst << "states=" << mdp.num_states() << " m=" << m << " triples=" << triples;
    if (mid_decode_reward != 0.0) inst << " mutated-mid-reward=" << mid_decode_reward;
    return detail::finish_report("theorem2", inst.str(), seed, worst, tol, timer);
}

/// Sum of the uplifted policy over actions at every state, plus
/// prefix-freeness and the Kraft sum of the decodable sets. path_leak
/// multiplies every bit probability and is the documented mutation: any
/// value below 1 must break the check.
inline VerificationReport check_uplift_normalization(const ActionModel& model,
                                                     const InternalPolicy& pi,
                                                     const Mdp& mdp, std::uint64_t seed,
                                                     double tol = 1e-9,
                                                     double path_leak = 1.0) {
    detail::CheckTimer timer;
    double worst = 0.0;
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        const auto entries = decodable_set(model, s);
        double kraft = 0.0;
        double mass = 0.0;
        for (size_t i = 0; i < entries.size(); ++i) {
            kraft += std::ldexp(1.0, -static_cast<int>(entries[i].bits.size()));
            double path = 1.0;
            BitString prefix;
            for (size_t j = 0; j < entries[i].bits.size(); ++j) {
                path *= path_leak * pi.prob(entries[i].bits[j], s, prefix);
                prefix.push_back(entries[i].bits[j]);
            }
            mass += path;
            for (size_t j = i + 1; j < entries.size(); ++j)
                if (entries[i].bits.is_prefix_of(entries[j].bits) ||
                    entries[j].bits.is_prefix_of(entries[i].bits))
                    worst = std::max(worst, 1.0);  // prefix-freeness violation
        }
        worst = std::max(worst, std::abs(mass - 1.0));
        worst = std::max(worst, std::max(0.0, kraft - 1.0));
    }
    std::ostringstream inst;
    inst << "states=" << mdp.num_states();
    if (path_leak != 1.0) inst << " mutated-path-leak=" << path_leak;
    return detail::finish_report("uplift-normalization", inst.str(), seed, worst, tol, timer);
}

/// Empirical action frequencies from random bits through the decoder
/// against the exact dyadic action distribution. bit_bias is the
/// documented mutation: fair bits are 0.5, anything else must break it.
inline VerificationReport check_sampling(const ActionModel& model, StateId s, int samples,
                                         std::uint64_t seed, double tol = 0.01,
                                         double bit_bias = 0.5) {
    detail::CheckTimer timer;
    const auto exact = action_distribution(model, s);
    double pmin = 1.0;
    for (const auto& [action, p] : exact) pmin = std::min(pmin, p);
    if (pmin < 0.05)
        throw PreconditionError("sampling check needs min action probability >= 0.05");

    std::mt19937_64 rng(seed);
    std::bernoulli_distribution bit(bit_bias);
    std::map<SymbolString, int> counts;
    for (int i = 0; i < samples; ++i) {
        Decoder dec(model, s);
        while (!dec.first_action_complete()) dec.feed_bit(bit(rng) ? 1 : 0);
        ++counts[dec.first_action()];
    }
    double tv = 0.0;
    for (const auto& [action, p] : exact)
        tv += std::abs(p - static_cast<double>(counts[action]) / samples);
    for (const auto& [action, c] : counts)
        if (exact.find(action) == exact.end()) tv += static_cast<double>(c) / samples;
    tv /= 2.0;
    std::ostringstream inst;
    inst << "samples=" << samples << " actions=" << exact.size();
    if (bit_bias != 0.5) inst << " mutated-bit-bias=" << bit_bias;
    return detail::finish_report("sampling-duality", inst.str(), seed, tv, tol, timer);
}

/// One run of the two-task demo: act in the chosen task with a fresh
/// uniform mixture of the per-task models, updating the posterior after
/// every completed action.
struct MultitaskDemoResult {
    int task = 0;                        // 0 = first task, 1 = second
    std::vector<double> posterior_true;  // after each external action
    double bits_per_action = 0.0;        // realized internal bits
    double ideal_mixture_bits = 0.0;     // sum of -log2 xi(a | history)
    double ideal_true_model_bits = 0.0;  // sum of -log2 rho_true(a)
    Trajectory trajectory;
};

inline MultitaskDemoResult run_multitask_demo(const ToyTasks& toys,
                                              const std::vector<const Mdp*>& tasks,
                                              std::shared_ptr<const ActionModel> model_a,
                                              std::shared_ptr<const ActionModel> model_b,
                                              int task_index, int steps,
                                              std::uint64_t seed) {
    const Mdp& mdp = *tasks.at(static_cast<size_t>(task_index));
    auto mixture = std::make_shared<MixtureActionModel>(
        std::vector<std::shared_ptr<const ActionModel>>{model_a, model_b});
    std::vector<std::vector<SymbolString>> legal;
    for (StateId s = 0; s < mdp.num_states(); ++s) legal.push_back(mdp.actions(s));
    LegalityMaskedModel masked(mixture, legal);
    const auto& true_model = task_index == 0 ? *model_a : *model_b;

    MultitaskDemoResult result;
    result.task = task_index;
    result.trajectory.initial = mdp.initial_state();
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution fair(0.5);
    StateId s = mdp.initial_state();
    int total_bits = 0;
    for (int t = 1; t <= steps; ++t) {
        Decoder dec(masked, s);
        while (!dec.first_action_complete()) dec.feed_bit(fair(rng) ? 1 : 0);
        const SymbolString action = dec.first_action();
        const int idx = mdp.action_index(s, action);
        if (idx < 0) throw LegalityError("masked mixture produced an illegal action");
        total_bits += dec.bits_consumed();

        result.ideal_mixture_bits += -std::log2(mixture->sequence_probability(s, action));
        result.ideal_true_model_bits += -std::log2(true_model.sequence_probability(s, action));
        mixture->update_with_action(s, action);
        result.posterior_true.push_back(
            mixture->posterior()[static_cast<size_t>(task_index)]);

        const auto [next, reward] = mdp.sample_outcome(s, idx, rng);
        Trajectory::Step step;
        step.state = s;
        step.action = action;
        step.next = next;
        step.reward = reward;
        step.bits = dec.bits_consumed();
        result.trajectory.steps.push_back(step);
        mixture->update_with_observation(mdp.state_name(next));
        s = next;
    }
    result.bits_per_action = static_cast<double>(total_bits) / steps;
    (void)toys;
    return result;
}

/// Mixture check: (i) the excess log-loss of the uniform mixture never
/// exceeds log2(K) on any test string; (ii) in the two-task demo the
/// posterior of the active task reaches the threshold within the step
/// budget. prior_scale is the documented mutation: scaling the prior
/// weights below 1/K voids the dominance argument and must break (i).
inline VerificationReport check_mixture(
    const std::vector<std::shared_ptr<const ActionModel>>& components,
    const std::vector<SymbolString>& data, const ToyTasks& toys, int demo_steps,
    double posterior_threshold, std::uint64_t seed, double tol = 1e-9,
    double prior_scale = 1.0) {
    detail::CheckTimer timer;
    if (components.size() < 2) throw PreconditionError("mixture check needs K >= 2");
    const double k = static_cast<double>(components.size());
    double worst = 0.0;
    for (const auto& x : data) {
        double mix = 0.0;
        double best = 0.0;
        for (const auto& c : components) {
            const double p = c->sequence_probability(0, x);
            mix += prior_scale * p / k;
            best = std::max(best, p);
        }
        const double gap = -std::log2(mix) + std::log2(best);
        worst = std::max(worst, gap - std::log2(k));
    }

    // Two-task identification demo, both task orders.
    Corpus ca = toys.corpus_a, cb = toys.corpus_b;
    auto model_a = std::make_shared<NGramActionModel>(
        NGramActionModel::fit(toys.alphabet(), ca, 1));
    auto model_b = std::make_shared<NGramActionModel>(
        NGramActionModel::fit(toys.alphabet(), cb, 1));
    double min_final_posterior = 1.0;
    for (int task = 0; task < 2; ++task) {
        const auto demo =
            run_multitask_demo(toys, {&toys.task_a, &toys.task_b}, model_a, model_b, task,
                               demo_steps, seed + static_cast<std::uint64_t>(task));
        min_final_posterior = std::min(min_final_posterior, demo.posterior_true.back());
    }
    worst = std::max(worst, posterior_threshold - min_final_posterior);

    std::ostringstream inst;
    inst << "K=" << components.size() << " strings=" << data.size()
         << " demo-steps=" << demo_steps << " min-posterior=" << std::setprecision(4)
         << min_final_posterior;
    if (prior_scale != 1.0) inst << " mutated-prior-scale=" << prior_scale;
    return detail::finish_report("mixture", inst.str(), seed, worst, tol, timer);
}

/// Prefix robustness of the KT estimator on Bernoulli data: the estimate
/// stays near the truth with and without an adversarial prefix, and the
/// two estimates differ by at most kpre/n plus slack. estimator_shift is
/// the documented mutation.
inline VerificationReport check_consistency_prefix(double theta0, int kpre, int n,
                                                   double tol, std::uint64_t seed,
                                                   double estimator_shift = 0.0) {
    detail::CheckTimer timer;
    if (!(theta0 > 0.0 && theta0 < 1.0))
        throw PreconditionError("theta0 must be in (0,1)");
    if (kpre >= n) {
        // Asymptotics not in force; skip with a diagnostic.
        VerificationReport r;
        r.check = "consistency-prefix";
        r.instance = "skipped: prefix length >= sample size";
        r.seed = seed;
        r.deviation = 0.0;
        r.tolerance = 1.0;
        r.passed = true;
        r.runtime_seconds = timer.seconds();
        return r;
    }
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(theta0);
    std::vector<int> raw(static_cast<size_t>(n));
    for (int& x : raw) x = coin(rng) ? 1 : 0;
    std::vector<int> prefixed(static_cast<size_t>(kpre), 0);
    prefixed.insert(prefixed.end(), raw.begin(), raw.end());

    const KtEstimator kt;
    const double est_raw = kt.estimate(raw) + estimator_shift;
    const double est_prefixed = kt.estimate(prefixed) + estimator_shift;
    const double drift_allow = static_cast<double>(kpre) / n + tol / 10.0;

    // Normalized slacks: every constraint maps to "<= 1".
    double dev = std::abs(est_raw - theta0) / tol;
    dev = std::max(dev, std::abs(est_prefixed - theta0) / tol);
    dev = std::max(dev, std::abs(est_raw - est_prefixed) / drift_allow);

    std::ostringstream inst;
    inst << "theta0=" << theta0 << " kpre=" << kpre << " n=" << n;
    if (estimator_shift != 0.0) inst << " mutated-shift=" << estimator_shift;
    return detail::finish_report("consistency-prefix", inst.str(), seed, dev, 1.0, timer);
}

// ---------------------------------------------------------------------
// Standard suite
// ---------------------------------------------------------------------

struct SuiteOptions {
    std::uint64_t seed = 20250810;
    int theorem2_instances = 20;
    int theorem2_m_max = 3;
    int sampling_samples = 100000;
    int regret_strings = 1000;
    int demo_steps = 30;
    double posterior_threshold = 0.95;
    int consistency_n = 10000;
    /// Which checks to run; an empty list is an explicit no-op.
    std::vector<std::string> checks = {"theorem2", "uplift", "sampling", "mixture",
                                       "consistency"};
    /// Break one check on purpose: "thm2-mid-reward", "uplift-leak",
    /// "sampling-bias", "mixture-prior", "consistency-shift".
    std::string mutation;
};

/// Skewed three-action model with action probabilities exactly
/// (0.7, 0.2, 0.1): order-0 counts (6, 1, 0) with alpha = 1, masked to
/// single-symbol actions.
inline std::shared_ptr<const ActionModel> skewed_three_action_model() {
    const SymbolAlphabet a({"a", "b", "c", SymbolAlphabet::kTerminalToken}, 2);
    auto g = std::make_shared<NGramActionModel>(a, 0, 1.0);
    for (int i = 0; i < 6; ++i) g->ingest({a.id("a"), a.terminal()});
    g->ingest({a.id("b"), a.terminal()});
    return std::make_shared<LegalityMaskedModel>(
        g, std::vector<std::vector<SymbolString>>{{{a.id("a"), a.terminal()},
                                                   {a.id("b"), a.terminal()},
                                                   {a.id("c"), a.terminal()}}});
}

inline std::vector<VerificationReport> run_standard_suite(const SuiteOptions& opt) {
    std::vector<VerificationReport> reports;
    const auto enabled = [&](const std::string& name) {
        for (const auto& c : opt.checks)
            if (c == name) return true;
        return false;
    };

    const ToyTasks toys = build_toy_tasks();
    if (enabled("theorem2")) {
        for (int i = 0; i < opt.theorem2_instances; ++i) {
            const std::uint64_t seed = opt.seed + static_cast<std::uint64_t>(i);
            std::mt19937_64 rng(seed);
            const Mdp mdp = gen::random_mdp(rng, InstanceDims{});
            auto model = i % 2 == 0 ? gen::uniform_model_for(mdp)
                                    : gen::ngram_model_for(mdp, rng, InstanceDims{});
            const int m = 1 + i % opt.theorem2_m_max;
            std::unique_ptr<InternalPolicy> pi;
            if (i % 3 == 0)
                pi = std::make_unique<UniformInternalPolicy>();
            else
                pi = std::make_unique<HashedRandomInternalPolicy>(seed);
            reports.push_back(check_theorem2(mdp, model, *pi, m, 1e-9, seed));
            reports.push_back(check_uplift_normalization(
                *model, *pi, mdp, seed, 1e-9,
                (i == 0 && opt.mutation == "uplift-leak") ? 0.995 : 1.0));
        }
        if (opt.mutation == "thm2-mid-reward") {
            // Task B's multi-symbol actions guarantee mid-decode states,
            // so the corrupted reward is always visible.
            const UniformInternalPolicy pi;
            reports.push_back(check_theorem2(toys.task_b, gen::uniform_model_for(toys.task_b),
                                             pi, 2, 1e-9, opt.seed, 0.1));
        }
    } else if (enabled("uplift")) {
        std::mt19937_64 rng(opt.seed);
        const Mdp mdp = gen::random_mdp(rng, InstanceDims{});
        auto model = gen::uniform_model_for(mdp);
        const UniformInternalPolicy pi;
        reports.push_back(check_uplift_normalization(
            *model, pi, mdp, opt.seed, 1e-9,
            opt.mutation == "uplift-leak" ? 0.995 : 1.0));
    }

    if (enabled("sampling")) {
        const double bias = opt.mutation == "sampling-bias" ? 0.6 : 0.5;
        const SymbolAlphabet compass({"N", "S", "E", "W", SymbolAlphabet::kTerminalToken},
                                     2);
        auto uniform = std::make_shared<UniformActionModel>(
            compass, std::vector<SymbolString>{{compass.id("N"), compass.terminal()},
                                               {compass.id("S"), compass.terminal()},
                                               {compass.id("E"), compass.terminal()},
                                               {compass.id("W"), compass.terminal()}});
        reports.push_back(
            check_sampling(*uniform, 0, opt.sampling_samples, opt.seed, 0.01, bias));
        auto skewed = skewed_three_action_model();
        reports.push_back(
            check_sampling(*skewed, 0, opt.sampling_samples, opt.seed + 1, 0.01, bias));
    }

    if (enabled("mixture")) {
        auto model_a = std::make_shared<NGramActionModel>(
            NGramActionModel::fit(toys.alphabet(), toys.corpus_a, 1));
        auto model_b = std::make_shared<NGramActionModel>(
            NGramActionModel::fit(toys.alphabet(), toys.corpus_b, 1));
        std::vector<std::shared_ptr<const ActionModel>> components = {model_a, model_b};
        std::vector<SymbolString> data;
        std::mt19937_64 rng(opt.seed ^ 0xabcdef);
        for (int i = 0; i < opt.regret_strings; ++i) {
            auto& source = i % 2 == 0 ? *model_a : *model_b;
            std::mt19937_64 bits(rng());
            data.push_back(sample_action(source, 0, bits).action);
        }
        reports.push_back(check_mixture(
            components, data, toys, opt.demo_steps, opt.posterior_threshold, opt.seed,
            1e-9, opt.mutation == "mixture-prior" ? 0.25 : 1.0));
    }

    if (enabled("consistency")) {
        const double shift = opt.mutation == "consistency-shift" ? 0.2 : 0.0;
        reports.push_back(check_consistency_prefix(0.7, 50, opt.consistency_n, 0.05,
                                                   opt.seed, shift));
        reports.push_back(check_consistency_prefix(0.5, 0, opt.consistency_n, 0.05,
                                                   opt.seed + 1, shift));
    }

    return reports;
}

inline void write_summary_table(std::ostream& out,
                                const std::vector<VerificationReport>& reports) {
    size_t name_w = 8, inst_w = 8;
    for (const auto& r : reports) {
        name_w = std::max(name_w, r.check.size());
        inst_w = std::max(inst_w, r.instance.size());
    }
    out << std::left << std::setw(static_cast<int>(name_w) + 2) << "check"
        << std::setw(static_cast<int>(inst_w) + 2) << "instance" << std::setw(12) << "seed"
        << std::setw(14) << "deviation" << std::setw(14) << "tolerance" << std::setw(10)
        << "runtime" << "result\n";
    for (const auto& r : reports) {
        std::ostringstream dev, tol, rt;
        dev << std::scientific << std::setprecision(3) << r.deviation;
        tol << std::scientific << std::setprecision(1) << r.tolerance;
        rt << std::fixed << std::setprecision(2) << r.runtime_seconds << "s";
        out << std::left << std::setw(static_cast<int>(name_w) + 2) << r.check
            << std::setw(static_cast<int>(inst_w) + 2) << r.instance << std::setw(12)
            << r.seed << std::setw(14) << dev.str() << std::setw(14) << tol.str()
            << std::setw(10) << rt.str() << (r.passed ? "pass" : "FAIL") << "\n";
    }
}

}  // namespace bitact
