#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "bitact/model_io.hpp"
#include "bitact/report_io.hpp"
#include "bitact/verify.hpp"

using namespace bitact;

TEST_CASE("theorem2 check passes and its mutation breaks it") {
    std::mt19937_64 rng(2025);
    const Mdp mdp = gen::random_mdp(rng, InstanceDims{});
    auto model = gen::uniform_model_for(mdp);
    const UniformInternalPolicy pi;
    const auto ok = check_theorem2(mdp, model, pi, 2, 1e-9, 2025);
    CHECK(ok.passed);
    CHECK(ok.deviation <= 1e-9);
    CHECK(ok.check == "theorem2");

    // Corrupting the mid-decode reward must be caught, provided some
    // action needs more than one bit (so mid-decode states exist).
    const ToyTasks toys = build_toy_tasks();
    auto model_b = gen::uniform_model_for(toys.task_b);
    const auto good = check_theorem2(toys.task_b, model_b, pi, 2, 1e-9, 7);
    CHECK(good.passed);
    const auto bad = check_theorem2(toys.task_b, model_b, pi, 2, 1e-9, 7, 0.1);
    CHECK_FALSE(bad.passed);
}

TEST_CASE("theorem2 check enforces its size budget") {
    std::mt19937_64 rng(31);
    const Mdp mdp = gen::random_mdp(rng, InstanceDims{});
    auto model = gen::uniform_model_for(mdp);
    const UniformInternalPolicy pi;
    CHECK_THROWS_AS(check_theorem2(mdp, model, pi, 9, 1e-9, 31), BudgetError);
}

TEST_CASE("single-state single-action instance has zero deviation") {
    SymbolAlphabet a({"go", SymbolAlphabet::kTerminalToken}, 2);
    Mdp mdp(a, {"s"}, 0, 0.0, 1.0);
    mdp.add_action(0, {a.id("go"), a.terminal()}, {{0, 1.0, 1.0}});
    mdp.validate();
    auto model = gen::uniform_model_for(mdp);
    const UniformInternalPolicy pi;
    const auto r = check_theorem2(mdp, model, pi, 3, 1e-9, 1);
    CHECK(r.passed);
    CHECK(r.deviation == 0.0);  // both sides are exactly m * E[R]
}

TEST_CASE("uplift normalization check and its leak mutation") {
    std::mt19937_64 rng(57);
    const Mdp mdp = gen::random_mdp(rng, InstanceDims{});
    auto model = gen::ngram_model_for(mdp, rng, InstanceDims{});
    const HashedRandomInternalPolicy pi(57, 0.01, 0.99);  // near-deterministic biases
    const auto ok = check_uplift_normalization(*model, pi, mdp, 57);
    CHECK(ok.passed);
    const auto bad = check_uplift_normalization(*model, pi, mdp, 57, 1e-9, 0.995);
    CHECK_FALSE(bad.passed);
}

TEST_CASE("sampling check: exact distribution, bias mutation, precondition") {
    auto skewed = skewed_three_action_model();
    // The construction pins the real-valued action probabilities.
    const auto& alphabet = skewed->alphabet();
    CHECK_THAT(skewed->sequence_probability(0, {alphabet.id("a"), alphabet.terminal()}),
               Catch::Matchers::WithinAbs(0.7, 1e-12));
    CHECK_THAT(skewed->sequence_probability(0, {alphabet.id("b"), alphabet.terminal()}),
               Catch::Matchers::WithinAbs(0.2, 1e-12));
    CHECK_THAT(skewed->sequence_probability(0, {alphabet.id("c"), alphabet.terminal()}),
               Catch::Matchers::WithinAbs(0.1, 1e-12));

    const auto ok = check_sampling(*skewed, 0, 100000, 99);
    CHECK(ok.passed);
    const auto bad = check_sampling(*skewed, 0, 100000, 99, 0.01, 0.6);
    CHECK_FALSE(bad.passed);

    // A point-mass action distribution has TV exactly zero.
    const SymbolAlphabet a({"go", SymbolAlphabet::kTerminalToken}, 2);
    UniformActionModel forced(a, std::vector<SymbolString>{{a.id("go"), a.terminal()}});
    const auto point = check_sampling(forced, 0, 1000, 1);
    CHECK(point.passed);
    CHECK(point.deviation == 0.0);

    // Models with a sub-5% action are rejected by the precondition.
    const SymbolAlphabet tiny({"a", "b", SymbolAlphabet::kTerminalToken}, 3);
    auto g = std::make_shared<NGramActionModel>(tiny, 0, 0.5);
    for (int i = 0; i < 200; ++i) g->ingest({tiny.id("a"), tiny.terminal()});
    CHECK_THROWS_AS(check_sampling(*g, 0, 1000, 1), PreconditionError);
}

TEST_CASE("mixture check: regret bound, posterior threshold, prior mutation") {
    const ToyTasks toys = build_toy_tasks();
    auto model_a = std::make_shared<NGramActionModel>(
        NGramActionModel::fit(toys.alphabet(), toys.corpus_a, 1));
    auto model_b = std::make_shared<NGramActionModel>(
        NGramActionModel::fit(toys.alphabet(), toys.corpus_b, 1));
    std::vector<std::shared_ptr<const ActionModel>> components = {model_a, model_b};
    std::vector<SymbolString> data;
    std::mt19937_64 rng(4242);
    for (int i = 0; i < 200; ++i) {
        std::mt19937_64 bits(rng());
        data.push_back(sample_action(i % 2 ? *model_a : *model_b, 0, bits).action);
    }
    const auto ok = check_mixture(components, data, toys, 30, 0.95, 4242);
    CHECK(ok.passed);
    const auto bad = check_mixture(components, data, toys, 30, 0.95, 4242, 1e-9, 0.25);
    CHECK_FALSE(bad.passed);
}

TEST_CASE("two-task demo concentrates the posterior on the active task") {
    const ToyTasks toys = build_toy_tasks();
    auto model_a = std::make_shared<NGramActionModel>(
        NGramActionModel::fit(toys.alphabet(), toys.corpus_a, 1));
    auto model_b = std::make_shared<NGramActionModel>(
        NGramActionModel::fit(toys.alphabet(), toys.corpus_b, 1));
    for (int task = 0; task < 2; ++task) {
        const auto demo = run_multitask_demo(toys, {&toys.task_a, &toys.task_b}, model_a,
                                             model_b, task, 30, 555);
        REQUIRE(demo.posterior_true.size() == 30);
        CHECK(demo.posterior_true.back() >= 0.95);
        // The mixture's ideal codelength trails the true model by at most
        // log2(K) = 1 bit over the whole run.
        CHECK(demo.ideal_mixture_bits <= demo.ideal_true_model_bits + 1.0 + 1e-9);
    }
}

TEST_CASE("consistency check: prefix robustness and guards") {
    const auto ok = check_consistency_prefix(0.7, 50, 10000, 0.05, 11);
    CHECK(ok.passed);
    const auto baseline = check_consistency_prefix(0.5, 0, 10000, 0.05, 12);
    CHECK(baseline.passed);
    const auto mutated = check_consistency_prefix(0.7, 50, 10000, 0.05, 11, 0.2);
    CHECK_FALSE(mutated.passed);
    // Prefix at least as long as the sample: skipped with a diagnostic.
    const auto skipped = check_consistency_prefix(0.7, 10000, 10000, 0.05, 13);
    CHECK(skipped.passed);
    CHECK(skipped.instance.find("skipped") != std::string::npos);
    CHECK_THROWS_AS(check_consistency_prefix(1.5, 0, 100, 0.05, 1), PreconditionError);
}

TEST_CASE("standard suite passes end to end and reports are replayable") {
    SuiteOptions opt;
    opt.theorem2_instances = 4;
    opt.sampling_samples = 20000;
    opt.regret_strings = 100;
    const auto reports = run_standard_suite(opt);
    REQUIRE(!reports.empty());
    for (const auto& r : reports) {
        INFO(r.check << " " << r.instance);
        CHECK(r.passed);
        CHECK(r.passed == (r.deviation <= r.tolerance));
    }
    // Identical options give identical reports, runtime aside.
    const auto again = run_standard_suite(opt);
    REQUIRE(again.size() == reports.size());
    for (size_t i = 0; i < reports.size(); ++i) {
        CHECK(again[i].check == reports[i].check);
        CHECK(again[i].instance == reports[i].instance);
        CHECK(again[i].seed == reports[i].seed);
        CHECK(again[i].deviation == reports[i].deviation);
    }
    // JSONL round trip.
    std::ostringstream out;
    write_reports(out, reports);
    std::istringstream in(out.str());
    const auto back = read_reports(in);
    REQUIRE(back.size() == reports.size());
    for (size_t i = 0; i < reports.size(); ++i) {
        CHECK(back[i].check == reports[i].check);
        CHECK(back[i].deviation == reports[i].deviation);  // hexfloat exact
        CHECK(back[i].passed == reports[i].passed);
    }
    // Summary table renders one line per report plus a header.
    std::ostringstream table;
    write_summary_table(table, reports);
    const std::string text = table.str();
    CHECK(std::count(text.begin(), text.end(), '\n') ==
          static_cast<long>(reports.size()) + 1);
}

TEST_CASE("suite mutations produce targeted failures") {
    SuiteOptions opt;
    opt.theorem2_instances = 1;
    opt.sampling_samples = 20000;
    opt.regret_strings = 50;
    const std::vector<std::pair<std::string, std::string>> cases = {
        {"thm2-mid-reward", "theorem2"},
        {"uplift-leak", "uplift-normalization"},
        {"sampling-bias", "sampling-duality"},
        {"mixture-prior", "mixture"},
        {"consistency-shift", "consistency-prefix"},
    };
    for (const auto& [mutation, target] : cases) {
        SuiteOptions mutated = opt;
        mutated.mutation = mutation;
        const auto reports = run_standard_suite(mutated);
        bool target_failed = false;
        for (const auto& r : reports)
            if (r.check == target && !r.passed) target_failed = true;
        INFO(mutation);
        CHECK(target_failed);
    }
}

TEST_CASE("empty check list is a no-op success") {
    SuiteOptions opt;
    opt.checks.clear();
    CHECK(run_standard_suite(opt).empty());
}

TEST_CASE("model files round trip bit-exactly") {
    const ToyTasks toys = build_toy_tasks();
    auto ngram = NGramActionModel::fit(toys.alphabet(), toys.corpus_a, 1);
    std::ostringstream out;
    save_model(out, ngram);
    std::istringstream in(out.str());
    const auto back = load_model(in);
    std::ostringstream out2;
    save_model(out2, *back);
    CHECK(out.str() == out2.str());
    const auto* g = dynamic_cast<const NGramActionModel*>(back.get());
    REQUIRE(g != nullptr);
    CHECK(g->counts() == ngram.counts());
    CHECK(g->order() == 1);

    // Uniform with one shared action list.
    const SymbolAlphabet a({"u", "v", SymbolAlphabet::kTerminalToken}, 2);
    UniformActionModel shared(a, std::vector<SymbolString>{{a.id("u"), a.terminal()},
                                                           {a.id("v"), a.terminal()}});
    std::ostringstream su;
    save_model(su, shared);
    std::istringstream si(su.str());
    const auto shared_back = load_model(si);
    std::ostringstream su2;
    save_model(su2, *shared_back);
    CHECK(su.str() == su2.str());

    // Mixture with a moved posterior.
    auto c1 = std::make_shared<NGramActionModel>(
        NGramActionModel::fit(toys.alphabet(), toys.corpus_a, 0));
    auto c2 = std::make_shared<NGramActionModel>(
        NGramActionModel::fit(toys.alphabet(), toys.corpus_b, 0));
    MixtureActionModel mix({c1, c2});
    mix.update_with_action(0, {toys.corpus_a.lines[0][0], toys.alphabet().terminal()});
    std::ostringstream mo;
    save_model(mo, mix);
    std::istringstream mi(mo.str());
    const auto mix_back = load_model(mi);
    std::ostringstream mo2;
    save_model(mo2, *mix_back);
    CHECK(mo.str() == mo2.str());
    const auto* mb = dynamic_cast<const MixtureActionModel*>(mix_back.get());
    REQUIRE(mb != nullptr);
    CHECK(mb->log_weights() == mix.log_weights());

    // Malformed input is an ingestion error.
    std::istringstream junk("{\"format\": \"other\"}");
    CHECK_THROWS_AS(load_model(junk), IngestionError);
}
