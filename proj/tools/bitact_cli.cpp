// Command-line front end: train models, check coder round trips, run the
// internal agent-environment loop, run the verification suite, and run
// the two-task mixture demo.
//
// Exit codes: 0 success, 2 configuration error, 3 ingestion error,
// 4 verification failure.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "bitact/internal.hpp"
#include "bitact/model_io.hpp"
#include "bitact/report_io.hpp"
#include "bitact/toy_tasks.hpp"
#include "bitact/verify.hpp"

namespace fs = std::filesystem;
using namespace bitact;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIngestion = 3;
constexpr int kExitVerification = 4;

std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &tm);
    return buf;
}

/// Output directory: --out-dir wins, then $BITACT_OUT_DIR/<stamp>, then
/// ./bitact-out/<stamp>. The stamp carries the subcommand and the seed.
fs::path make_output_dir(const std::string& explicit_dir, const std::string& subcommand,
                         std::uint64_t seed) {
    fs::path dir;
    if (!explicit_dir.empty()) {
        dir = explicit_dir;
    } else {
        const char* base = std::getenv("BITACT_OUT_DIR");
        dir = fs::path(base ? base : "bitact-out") /
              (subcommand + "-" + timestamp_utc() + "-seed" + std::to_string(seed));
    }
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir.string());
    return dir;
}

void require_readable(const std::string& path, const std::string& what) {
    if (path.empty()) throw ConfigError(what + " path is required");
    if (!fs::exists(path)) throw ConfigError(what + " file not found: " + path);
}

std::unique_ptr<ActionModel> load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open model file: " + path);
    return load_model(in);
}

Mdp load_mdp_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open mdp file: " + path);
    return load_mdp(in);
}

std::unique_ptr<InternalPolicy> make_policy(const std::string& spec) {
    if (spec == "uniform") return std::make_unique<UniformInternalPolicy>();
    if (spec.rfind("bias:", 0) == 0)
        return std::make_unique<FixedBiasInternalPolicy>(std::stod(spec.substr(5)));
    if (spec.rfind("hash:", 0) == 0)
        return std::make_unique<HashedRandomInternalPolicy>(std::stoull(spec.substr(5)));
    throw ConfigError("unknown policy spec: " + spec + " (use uniform, bias:<p>, hash:<seed>)");
}

// ---------------------------------------------------------------- train

struct TrainArgs {
    std::vector<std::string> alphabet;
    int max_len = 2;
    std::string corpus;
    int order = 0;
    double alpha = 0.5;
    double floor = 0x1p-16;
    std::string out;
    std::string out_dir;
};

int cmd_train(const TrainArgs& a) {
    require_readable(a.corpus, "corpus");
    const SymbolAlphabet alphabet(a.alphabet, a.max_len);
    std::ifstream in(a.corpus);
    const Corpus corpus = Corpus::parse(in, alphabet);
    ModelOptions options;
    options.prob_floor = a.floor;
    const auto model = NGramActionModel::fit(alphabet, corpus, a.order, a.alpha, options);

    fs::path out = a.out.empty()
                       ? make_output_dir(a.out_dir, "train", 0) / "model.json"
                       : fs::path(a.out);
    std::ofstream file(out);
    if (!file) throw ConfigError("cannot write model file: " + out.string());
    save_model(file, model);
    std::uint64_t total = 0;
    for (const auto& [ctx, row] : model.counts())
        for (auto c : row) total += c;
    std::cout << "trained order-" << a.order << " model on " << corpus.lines.size()
              << " lines (" << total << " symbol occurrences) -> " << out.string() << "\n";
    return kExitOk;
}

// ------------------------------------------------------------ roundtrip

struct RoundtripArgs {
    std::string model;
    int state = 0;
    int samples = 0;
    std::string strings;
    std::uint64_t seed = 0;
    bool have_seed = false;
    std::string out_dir;
};

int cmd_roundtrip(const RoundtripArgs& a) {
    require_readable(a.model, "model");
    const auto model = load_model_file(a.model);
    std::vector<SymbolString> batch;
    if (!a.strings.empty()) {
        require_readable(a.strings, "strings");
        std::ifstream in(a.strings);
        batch = Corpus::parse(in, model->alphabet()).lines;
    } else {
        if (a.samples <= 0)
            throw ConfigError("roundtrip needs --samples or --strings");
        if (!a.have_seed) throw ConfigError("--seed is required when sampling");
        std::mt19937_64 rng(a.seed);
        for (int i = 0; i < a.samples; ++i)
            batch.push_back(sample_action(*model, a.state, rng).action);
    }

    const fs::path dir = make_output_dir(a.out_dir, "roundtrip", a.seed);
    std::ofstream report(dir / "roundtrip.txt");
    int worst_slack = 0;
    for (const auto& x : batch) {
        const Codeword cw = encode(*model, a.state, x);
        const SymbolString back = decode(*model, a.state, cw);
        if (back != x) {
            std::cerr << "round-trip mismatch on " << model->alphabet().format(x) << "\n";
            return kExitVerification;
        }
        const double ideal = quantized_neg_log2_probability(*model, a.state, x);
        const int bound = static_cast<int>(std::ceil(ideal - 1e-9)) + 2;
        worst_slack = std::max(worst_slack, static_cast<int>(cw.bits.size()) - bound);
        report << model->alphabet().format(x) << "\t" << cw.bits.size() << "\t"
               << std::ceil(ideal - 1e-9) << "\tok\n";
    }
    if (worst_slack > 0) {
        std::cerr << "codelength bound exceeded by " << worst_slack << " bits\n";
        return kExitVerification;
    }
    std::cout << "round-tripped " << batch.size() << " strings exactly; codelength bound holds"
              << " -> " << (dir / "roundtrip.txt").string() << "\n";
    return kExitOk;
}

// ------------------------------------------------------------------ run

struct RunArgs {
    std::string model;
    std::string mdp;
    int steps = 100;
    std::uint64_t seed = 0;
    bool have_seed = false;
    bool mask = false;
    std::string policy = "uniform";
    std::string out_dir;
};

int cmd_run(const RunArgs& a) {
    require_readable(a.model, "model");
    require_readable(a.mdp, "mdp");
    if (!a.have_seed) throw ConfigError("--seed is required for run");
    const Mdp mdp = load_mdp_file(a.mdp);
    std::shared_ptr<const ActionModel> model = load_model_file(a.model);
    if (!(model->alphabet() == mdp.alphabet()))
        throw ConfigError("model and MDP alphabets disagree");
    if (a.mask) {
        std::vector<std::vector<SymbolString>> legal;
        for (StateId s = 0; s < mdp.num_states(); ++s) legal.push_back(mdp.actions(s));
        model = std::make_shared<LegalityMaskedModel>(model, legal);
    }
    const auto pi = make_policy(a.policy);

    const fs::path dir = make_output_dir(a.out_dir, "run", a.seed);
    std::mt19937_64 rng(a.seed);
    std::vector<TraceRecord> trace;
    const Trajectory traj = run_loop(*pi, *model, mdp, a.steps, rng, &trace);
    std::ofstream trace_file(dir / "trace.tsv");
    write_trace(trace_file, trace);

    int total_bits = 0;
    for (const auto& st : traj.steps) total_bits += st.bits;
    std::ofstream summary(dir / "summary.txt");
    const double bits_per_action = static_cast<double>(total_bits) / a.steps;
    summary << "steps: " << a.steps << "\n"
            << "total_reward: " << traj.total_reward() << "\n"
            << "bits_per_action: " << bits_per_action << "\n";
    std::cout << "ran " << a.steps << " external actions, return " << traj.total_reward()
              << ", " << bits_per_action << " bits/action -> " << dir.string() << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------- verify

struct VerifyArgs {
    std::uint64_t seed = 20250810;
    int instances = 20;
    int samples = 100000;
    int strings = 1000;
    int demo_steps = 30;
    std::string checks = "theorem2,uplift,sampling,mixture,consistency";
    std::string mutate;
    std::string out_dir;
};

int cmd_verify(const VerifyArgs& a) {
    SuiteOptions opt;
    opt.seed = a.seed;
    opt.theorem2_instances = a.instances;
    opt.sampling_samples = a.samples;
    opt.regret_strings = a.strings;
    opt.demo_steps = a.demo_steps;
    opt.mutation = a.mutate;
    opt.checks.clear();
    std::istringstream list(a.checks);
    std::string item;
    while (std::getline(list, item, ','))
        if (!item.empty()) opt.checks.push_back(item);

    const auto reports = run_standard_suite(opt);
    const fs::path dir = make_output_dir(a.out_dir, "verify", a.seed);
    std::ofstream jsonl(dir / "reports.jsonl");
    write_reports(jsonl, reports);
    std::ofstream table(dir / "summary.txt");
    write_summary_table(table, reports);
    write_summary_table(std::cout, reports);
    std::cout << "-> " << dir.string() << "\n";
    for (const auto& r : reports)
        if (!r.passed) return kExitVerification;
    return kExitOk;
}

// -------------------------------------------------------------- multitask

struct MultitaskArgs {
    int steps = 30;
    std::uint64_t seed = 0;
    bool have_seed = false;
    int order = 1;
    double threshold = 0.95;
    std::string out_dir;
};

int cmd_multitask(const MultitaskArgs& a) {
    if (!a.have_seed) throw ConfigError("--seed is required for multitask");
    const ToyTasks toys = build_toy_tasks();
    auto model_a = std::make_shared<NGramActionModel>(
        NGramActionModel::fit(toys.alphabet(), toys.corpus_a, a.order));
    auto model_b = std::make_shared<NGramActionModel>(
        NGramActionModel::fit(toys.alphabet(), toys.corpus_b, a.order));

    const fs::path dir = make_output_dir(a.out_dir, "multitask", a.seed);
    std::ofstream report(dir / "multitask.txt");
    bool all_identified = true;
    const std::vector<const Mdp*> tasks = {&toys.task_a, &toys.task_b};
    const char* names[] = {"task_a", "task_b"};
    for (int task = 0; task < 2; ++task) {
        const auto demo = run_multitask_demo(toys, tasks, model_a, model_b, task, a.steps,
                                             a.seed + static_cast<std::uint64_t>(task));

        // Same-seed single-model run for the bits-per-action comparison.
        std::mt19937_64 rng(a.seed + static_cast<std::uint64_t>(task));
        const auto& true_model = task == 0 ? model_a : model_b;
        std::vector<std::vector<SymbolString>> legal;
        const Mdp& mdp = *tasks[static_cast<size_t>(task)];
        for (StateId s = 0; s < mdp.num_states(); ++s) legal.push_back(mdp.actions(s));
        LegalityMaskedModel solo(true_model, legal);
        const UniformInternalPolicy pi;
        const Trajectory ref = run_loop(pi, solo, mdp, a.steps, rng);
        int ref_bits = 0;
        for (const auto& st : ref.steps) ref_bits += st.bits;

        const double final_posterior = demo.posterior_true.back();
        all_identified = all_identified && final_posterior >= a.threshold;
        report << names[task] << " posterior_true:";
        for (double p : demo.posterior_true) report << ' ' << std::setprecision(4) << p;
        report << "\n"
               << names[task] << " final_posterior: " << std::setprecision(6)
               << final_posterior << "\n"
               << names[task] << " mixture_bits_per_action: " << demo.bits_per_action << "\n"
               << names[task] << " single_model_bits_per_action: "
               << static_cast<double>(ref_bits) / a.steps << "\n"
               << names[task] << " ideal_bits_gap_total: "
               << demo.ideal_mixture_bits - demo.ideal_true_model_bits
               << " (bound: 1 bit = log2 K)\n";
        std::cout << names[task] << ": posterior " << std::setprecision(4) << final_posterior
                  << " after " << a.steps << " actions, mixture "
                  << demo.bits_per_action << " bits/action vs single-model "
                  << static_cast<double>(ref_bits) / a.steps << "\n";
    }
    std::cout << "-> " << dir.string() << "\n";
    return all_identified ? kExitOk : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"information-theoretic actuation toolkit: actions as decoded bit strings"};
    app.require_subcommand(1);
    app.set_config("--config");

    TrainArgs train;
    auto* t = app.add_subcommand("train", "fit an n-gram action model on a corpus");
    t->configurable();
    t->add_option("--alphabet", train.alphabet, "alphabet symbols, terminal written <T>")
        ->required()
        ->delimiter(' ');
    t->add_option("--max-len", train.max_len, "max action length including the terminal")
        ->required();
    t->add_option("--corpus", train.corpus, "newline-delimited symbol strings")->required();
    t->add_option("--order", train.order, "context length");
    t->add_option("--alpha", train.alpha, "additive smoothing constant");
    t->add_option("--floor", train.floor, "probability floor");
    t->add_option("--out", train.out, "output model path");
    t->add_option("--out-dir", train.out_dir, "output directory");

    RoundtripArgs rt;
    auto* r = app.add_subcommand("roundtrip", "encode/decode a batch and check codelengths");
    r->configurable();
    r->add_option("--model", rt.model, "model file")->required();
    r->add_option("--state", rt.state, "conditioning state id");
    r->add_option("--samples", rt.samples, "number of sampled actions");
    r->add_option("--strings", rt.strings, "file of symbol strings to encode");
    auto* rt_seed = r->add_option("--seed", rt.seed, "rng seed");
    r->add_option("--out-dir", rt.out_dir, "output directory");

    RunArgs run;
    auto* u = app.add_subcommand("run", "run the internal agent-environment loop");
    u->configurable();
    u->add_option("--model", run.model, "model file")->required();
    u->add_option("--mdp", run.mdp, "mdp file")->required();
    u->add_option("--steps", run.steps, "external actions to take");
    auto* run_seed = u->add_option("--seed", run.seed, "rng seed");
    u->add_flag("--mask", run.mask, "restrict the model to each state's legal actions");
    u->add_option("--policy", run.policy, "internal policy: uniform, bias:<p>, hash:<seed>");
    u->add_option("--out-dir", run.out_dir, "output directory");

    VerifyArgs verify;
    auto* v = app.add_subcommand("verify", "run the verification suite");
    v->configurable();
    v->add_option("--seed", verify.seed, "base seed");
    v->add_option("--instances", verify.instances, "number of random theorem-2 instances");
    v->add_option("--samples", verify.samples, "sampling-check draws");
    v->add_option("--strings", verify.strings, "regret-check strings");
    v->add_option("--demo-steps", verify.demo_steps, "two-task demo length");
    v->add_option("--checks", verify.checks, "comma list; empty runs nothing");
    v->add_option("--mutate", verify.mutate,
                  "deliberately break one check: thm2-mid-reward, uplift-leak, "
                  "sampling-bias, mixture-prior, consistency-shift");
    v->add_option("--out-dir", verify.out_dir, "output directory");

    MultitaskArgs multi;
    auto* m = app.add_subcommand("multitask", "two-task mixture identification demo");
    m->configurable();
    m->add_option("--steps", multi.steps, "external actions per task");
    auto* multi_seed = m->add_option("--seed", multi.seed, "rng seed");
    m->add_option("--order", multi.order, "n-gram order for the task models");
    m->add_option("--threshold", multi.threshold, "posterior target for the active task");
    m->add_option("--out-dir", multi.out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    rt.have_seed = rt_seed->count() > 0;
    run.have_seed = run_seed->count() > 0;
    multi.have_seed = multi_seed->count() > 0;

    try {
        if (t->parsed()) return cmd_train(train);
        if (r->parsed()) return cmd_roundtrip(rt);
        if (u->parsed()) return cmd_run(run);
        if (v->parsed()) return cmd_verify(verify);
        if (m->parsed()) return cmd_multitask(multi);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const IngestionError& e) {
        std::cerr << "ingestion error: " << e.what() << "\n";
        return kExitIngestion;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitVerification;
    }
    return kExitConfig;
}
