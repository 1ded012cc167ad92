#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <utility>
#include <vector>

#include "bitact/coder.hpp"
#include "bitact/mdp.hpp"

namespace bitact {

/// Everything before the first terminal symbol.
inline SymbolString tau(const SymbolString& x, const SymbolAlphabet& alphabet) {
    for (size_t i = 0; i < x.size(); ++i)
        if (x[i] == alphabet.terminal())
            return SymbolString(x.begin(), x.begin() + static_cast<long>(i));
    throw PreconditionError("tau needs a string containing the terminal symbol");
}

/// (external state, bits of the action being decoded)
struct InternalState {
    StateId s = 0;
    BitString q;

    bool operator==(const InternalState& other) const {
        return s == other.s && q == other.q;
    }
};

/// Conditional law over the next bit given the external state and the
/// bits already committed to the current action.
class InternalPolicy {
public:
    virtual ~InternalPolicy() = default;
    virtual double prob_one(StateId s, const BitString& q) const = 0;

    double prob(int b, StateId s, const BitString& q) const {
        const double p1 = prob_one(s, q);
        if (p1 < 0.0 || p1 > 1.0)
            throw PreconditionError("internal policy produced an invalid probability");
        return b ? p1 : 1.0 - p1;
    }

    int sample(StateId s, const BitString& q, std::mt19937_64& rng) const {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        return u(rng) < prob_one(s, q) ? 1 : 0;
    }
};

class UniformInternalPolicy : public InternalPolicy {
public:
    double prob_one(StateId, const BitString&) const override { return 0.5; }
};

class FixedBiasInternalPolicy : public InternalPolicy {
public:
    explicit FixedBiasInternalPolicy(double p1) : p1_(p1) {
        if (p1_ < 0.0 || p1_ > 1.0) throw PreconditionError("bias must be in [0,1]");
    }
    double prob_one(StateId, const BitString&) const override { return p1_; }

private:
    double p1_;
};

/// Deterministic pseudo-random policy: the bias at (s, q) is a hash of
/// the seed and the state, bounded away from 0 and 1 so every bitstring
/// keeps positive probability.
class HashedRandomInternalPolicy : public InternalPolicy {
public:
    explicit HashedRandomInternalPolicy(std::uint64_t seed, double lo = 0.1, double hi = 0.9)
        : seed_(seed), lo_(lo), hi_(hi) {
        if (!(lo >= 0.0 && hi <= 1.0 && lo < hi))
            throw PreconditionError("need 0 <= lo < hi <= 1");
    }

    double prob_one(StateId s, const BitString& q) const override {
        std::uint64_t h = seed_ ^ 0x9e3779b97f4a7c15ull;
        h = mix(h ^ static_cast<std::uint64_t>(s) * 0xff51afd7ed558ccdull);
        for (size_t i = 0; i < q.size(); ++i)
            h = mix(h ^ (static_cast<std::uint64_t>(q[i]) + 2 * i + 1));
        const double u = static_cast<double>(h >> 11) * 0x1p-53;
        return lo_ + (hi_ - lo_) * u;
    }

private:
    static std::uint64_t mix(std::uint64_t x) {
        x ^= x >> 33;
        x *= 0xc4ceb9fe1a85ec53ull;
        x ^= x >> 29;
        x *= 0x94d049bb133111ebull;
        x ^= x >> 32;
        return x;
    }

    std::uint64_t seed_;
    double lo_, hi_;
};

/// The set of minimal decodable bitstrings for (model, state): q is a
/// member when its decode contains the terminal but the decode of its
/// longest proper prefix does not. Prefix-free; dyadic widths sum to 1.
inline std::vector<DecodableEntry> decodable_set(const ActionModel& model, StateId s) {
    return enumerate_decodable(model, s);
}

/// MDP over (external state, bit buffer) pairs induced by an external
/// MDP and an action model. Mid-decode transitions are deterministic
/// with reward zero; completing transitions defer to the external
/// kernel. The kernel is evaluated lazily, never tabulated.
class InternalEnvironment {
public:
    InternalEnvironment(const Mdp& mdp, std::shared_ptr<const ActionModel> model)
        : mdp_(&mdp), model_(std::move(model)) {
        if (!(model_->alphabet() == mdp.alphabet()))
            throw PreconditionError("model and MDP alphabets disagree");
    }

    const Mdp& mdp() const { return *mdp_; }
    const ActionModel& model() const { return *model_; }
    std::shared_ptr<const ActionModel> model_ptr() const { return model_; }

    /// Reward granted on non-completing bits. Zero by construction; the
    /// verification suite perturbs it to prove its checks can fail.
    double mid_decode_reward() const { return mid_decode_reward_; }
    void set_mid_decode_reward(double r) { mid_decode_reward_ = r; }

    /// Rebuild the decoder for an internal state. Throws if q already
    /// decodes a complete action (such a pair is not an internal state).
    Decoder decoder_at(const InternalState& sq) const {
        Decoder dec(*model_, sq.s);
        for (size_t i = 0; i < sq.q.size(); ++i) {
            dec.feed_bit(sq.q[i]);
            if (dec.first_action_complete())
                throw PreconditionError("bit buffer already holds a complete action");
        }
        return dec;
    }

    int action_index_for(StateId s, const SymbolString& action_with_terminal) const {
        const int idx = mdp_->action_index(s, action_with_terminal);
        if (idx < 0)
            throw LegalityError("decoded action " +
                                model_->alphabet().format(action_with_terminal) +
                                " is not legal in state " + mdp_->state_name(s));
        return idx;
    }

    /// One transition of the internal kernel.
    std::pair<InternalState, double> internal_step(const InternalState& sq, int b,
                                                   std::mt19937_64& rng) const {
        Decoder dec = decoder_at(sq);
        dec.feed_bit(b);
        if (!dec.first_action_complete()) {
            InternalState next = sq;
            next.q.push_back(b);
            return {next, mid_decode_reward_};
        }
        const int action = action_index_for(sq.s, dec.first_action());
        const auto [next_state, reward] = mdp_->sample_outcome(sq.s, action, rng);
        return {InternalState{next_state, BitString()}, reward};
    }

private:
    const Mdp* mdp_;
    std::shared_ptr<const ActionModel> model_;
    double mid_decode_reward_ = 0.0;
};

/// External policy induced by an internal policy: for each action, the
/// total path probability of the minimal decodable strings reaching it.
inline ExternalPolicy uplift(const InternalPolicy& pi, const ActionModel& model,
                             const Mdp& mdp) {
    std::vector<std::vector<double>> rows(mdp.num_states());
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        rows[static_cast<size_t>(s)].assign(mdp.actions(s).size(), 0.0);
        for (const auto& entry : decodable_set(model, s)) {
            double path = 1.0;
            BitString prefix;
            for (size_t i = 0; i < entry.bits.size() && path > 0.0; ++i) {
                path *= pi.prob(entry.bits[i], s, prefix);
                prefix.push_back(entry.bits[i]);
            }
            if (path == 0.0) continue;
            const int idx = mdp.action_index(s, entry.action);
            if (idx < 0)
                throw LegalityError("decodable action " + mdp.alphabet().format(entry.action) +
                                    " is not legal in state " + mdp.state_name(s));
            rows[static_cast<size_t>(s)][static_cast<size_t>(idx)] += path;
        }
    }
    return ExternalPolicy(mdp, std::move(rows));
}

namespace detail {

/// Exact evaluation over the internal bit tree. The horizon counts
/// external actions; mid-decode bits are free. Values of fresh states
/// are memoized on (state, remaining horizon).
class InternalValueEvaluator {
public:
    InternalValueEvaluator(const InternalEnvironment& env, const InternalPolicy& pi)
        : env_(&env), pi_(&pi) {}

    double state_value(const Decoder& dec, StateId s, const BitString& q, int m) {
        if (q.empty()) {
            const auto key = std::make_pair(s, m);
            auto it = memo_.find(key);
            if (it != memo_.end()) return it->second;
            const double v = compute_state_value(dec, s, q, m);
            memo_.emplace(key, v);
            return v;
        }
        return compute_state_value(dec, s, q, m);
    }

    double action_value(const Decoder& dec, StateId s, const BitString& q, int b, int m) {
        Decoder child = dec;
        child.feed_bit(b);
        if (child.first_action_complete()) {
            const int action = env_->action_index_for(s, child.first_action());
            double v = 0.0;
            for (const auto& o : env_->mdp().outcomes(s, action)) {
                double cont = 0.0;
                if (m > 1) {
                    Decoder fresh(env_->model(), o.next);
                    cont = state_value(fresh, o.next, BitString(), m - 1);
                }
                v += o.prob * (o.reward + cont);
            }
            return v;
        }
        BitString q2 = q;
        q2.push_back(b);
        return env_->mid_decode_reward() + state_value(child, s, q2, m);
    }

private:
    double compute_state_value(const Decoder& dec, StateId s, const BitString& q, int m) {
        double v = 0.0;
        for (int b = 0; b < 2; ++b) {
            const double pb = pi_->prob(b, s, q);
            if (pb == 0.0) continue;
            v += pb * action_value(dec, s, q, b, m);
        }
        return v;
    }

    const InternalEnvironment* env_;
    const InternalPolicy* pi_;
    std::map<std::pair<StateId, int>, double> memo_;
};

}  // namespace detail

/// Exact expected return of taking bit b in internal state (s, q) and
/// following pi until m external actions have been emitted.
inline double internal_q_value(const InternalEnvironment& env, const InternalPolicy& pi,
                               const InternalState& sq, int b, int m) {
    if (m < 1) throw PreconditionError("horizon must be >= 1");
    detail::InternalValueEvaluator eval(env, pi);
    const Decoder dec = env.decoder_at(sq);
    return eval.action_value(dec, sq.s, sq.q, b, m);
}

inline double internal_v_value(const InternalEnvironment& env, const InternalPolicy& pi,
                               const InternalState& sq, int m) {
    if (m < 1) throw PreconditionError("horizon must be >= 1");
    detail::InternalValueEvaluator eval(env, pi);
    const Decoder dec = env.decoder_at(sq);
    return eval.state_value(dec, sq.s, sq.q, m);
}

/// One line per internal step of the agent-environment loop.
struct TraceRecord {
    int t = 0;                  // external decision index, 1-based
    std::string state;          // external state name
    std::string q;              // bits committed so far (including this one)
    int b = 0;                  // the bit just taken
    std::string decoded;        // symbols certain so far
    std::string action;         // completed external action, or "-"
    double reward = 0.0;
};

inline void write_trace(std::ostream& out, const std::vector<TraceRecord>& records) {
    for (const auto& r : records)
        out << r.t << '\t' << r.state << '\t' << (r.q.empty() ? "-" : r.q) << '\t' << r.b
            << '\t' << (r.decoded.empty() ? "-" : r.decoded) << '\t'
            << (r.action.empty() ? "-" : r.action) << '\t' << std::setprecision(17)
            << r.reward << '\n';
}

/// Run the internal agent-environment loop for `steps` external actions.
inline Trajectory run_loop(const InternalPolicy& pi, const ActionModel& model, const Mdp& mdp,
                           int steps, std::mt19937_64& rng,
                           std::vector<TraceRecord>* trace = nullptr) {
    if (steps < 1) throw PreconditionError("steps must be >= 1");
    if (!(model.alphabet() == mdp.alphabet()))
        throw PreconditionError("model and MDP alphabets disagree");
    Trajectory traj;
    traj.initial = mdp.initial_state();
    StateId s = mdp.initial_state();
    for (int t = 1; t <= steps; ++t) {
        Decoder dec(model, s);
        BitString q;
        while (!dec.first_action_complete()) {
            const int b = pi.sample(s, q, rng);
            dec.feed_bit(b);
            q.push_back(b);
            if (trace) {
                TraceRecord r;
                r.t = t;
                r.state = mdp.state_name(s);
                r.q = q.to_string();
                r.b = b;
                r.decoded = model.alphabet().format(dec.emitted());
                r.reward = 0.0;
                if (dec.first_action_complete())
                    r.action = model.alphabet().format(dec.first_action());
                trace->push_back(r);
            }
        }
        const SymbolString action = dec.first_action();
        const int idx = mdp.action_index(s, action);
        if (idx < 0)
            throw LegalityError("decoded action " + mdp.alphabet().format(action) +
                                " is not legal in state " + mdp.state_name(s));
        const auto [next, reward] = mdp.sample_outcome(s, idx, rng);
        if (trace && !trace->empty()) trace->back().reward = reward;
        Trajectory::Step step;
        step.state = s;
        step.action = action;
        step.next = next;
        step.reward = reward;
        step.bits = static_cast<int>(q.size());
        traj.steps.push_back(step);
        s = next;
    }
    return traj;
}

/// Internal policy that makes the uplifted policy equal a given external
/// policy: at each tree node the bit probabilities are proportional to
/// the target mass of the decodable strings below each child, with the
/// mass of an action split between its bitstrings by their dyadic widths.
class InternalizedPolicy : public InternalPolicy {
public:
    InternalizedPolicy(const ExternalPolicy& ext, const ActionModel& model, const Mdp& mdp) {
        for (StateId s = 0; s < mdp.num_states(); ++s) {
            const auto entries = decodable_set(model, s);
            std::map<SymbolString, double> kraft;
            for (const auto& e : entries)
                kraft[e.action] += std::ldexp(1.0, -static_cast<int>(e.bits.size()));
            for (size_t a = 0; a < mdp.actions(s).size(); ++a) {
                if (ext.prob(s, static_cast<int>(a)) > 0.0 &&
                    kraft.find(mdp.actions(s)[a]) == kraft.end())
                    throw PreconditionError("external policy puts mass on action " +
                                            mdp.alphabet().format(mdp.actions(s)[a]) +
                                            " which the model cannot decode");
            }
            auto& nodes = mass_[s];
            for (const auto& e : entries) {
                const int idx = mdp.action_index(s, e.action);
                if (idx < 0)
                    throw LegalityError("decodable action is not legal in state " +
                                        mdp.state_name(s));
                const double weight = ext.prob(s, idx) *
                                      std::ldexp(1.0, -static_cast<int>(e.bits.size())) /
                                      kraft[e.action];
                BitString prefix;
                nodes[prefix] += weight;
                for (size_t i = 0; i < e.bits.size(); ++i) {
                    prefix.push_back(e.bits[i]);
                    nodes[prefix] += weight;
                }
            }
        }
    }

    double prob_one(StateId s, const BitString& q) const override {
        const auto state_it = mass_.find(s);
        if (state_it == mass_.end())
            throw ConditioningError("state not covered by the internalized policy");
        const auto& nodes = state_it->second;
        const auto here = nodes.find(q);
        if (here == nodes.end() || here->second <= 0.0)
            throw ConditioningError("internalized policy reached a zero-mass bit buffer");
        BitString q1 = q;
        q1.push_back(1);
        const auto right = nodes.find(q1);
        const double m1 = right == nodes.end() ? 0.0 : right->second;
        return m1 / here->second;
    }

private:
    std::map<StateId, std::map<BitString, double>> mass_;
};

inline std::unique_ptr<InternalPolicy> internalize_policy(const ExternalPolicy& ext,
                                                          const ActionModel& model,
                                                          const Mdp& mdp) {
    return std::make_unique<InternalizedPolicy>(ext, model, mdp);
}

}  // namespace bitact
