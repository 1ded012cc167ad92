#pragma once

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "bitact/alphabet.hpp"
#include "bitact/common.hpp"

namespace bitact {

struct Outcome {
    StateId next = 0;
    double reward = 0.0;
    double prob = 0.0;
};

/// Finite-horizon tabular MDP whose actions are symbol strings ending in
/// their first terminal symbol. Immutable once validated; evaluation
/// functions are pure.
class Mdp {
public:
    Mdp(SymbolAlphabet alphabet, std::vector<std::string> state_names, StateId initial,
        double r_min, double r_max)
        : alphabet_(std::move(alphabet)),
          state_names_(std::move(state_names)),
          initial_(initial),
          r_min_(r_min),
          r_max_(r_max) {
        if (state_names_.empty()) throw PreconditionError("MDP needs at least one state");
        for (size_t i = 0; i < state_names_.size(); ++i)
            for (size_t j = i + 1; j < state_names_.size(); ++j)
                if (state_names_[i] == state_names_[j])
                    throw PreconditionError("duplicate state name: " + state_names_[i]);
        if (initial_ < 0 || initial_ >= num_states())
            throw PreconditionError("initial state out of range");
        if (r_min_ > r_max_) throw PreconditionError("reward bounds inverted");
        actions_.resize(state_names_.size());
        kernel_.resize(state_names_.size());
    }

    void add_action(StateId s, SymbolString action, std::vector<Outcome> outcomes) {
        check_state(s);
        validate_action_string(action);
        if (action_index(s, action) >= 0)
            throw PreconditionError("duplicate action " + alphabet_.format(action) +
                                    " in state " + state_names_[s]);
        double sum = 0.0;
        for (const auto& o : outcomes) {
            check_state(o.next);
            if (o.prob < 0.0) throw PreconditionError("negative outcome probability");
            if (o.reward < r_min_ - 1e-12 || o.reward > r_max_ + 1e-12)
                throw PreconditionError("reward outside [r_min, r_max]");
            sum += o.prob;
        }
        if (std::abs(sum - 1.0) > 1e-12) {
            std::ostringstream msg;
            msg << "kernel row for state " << state_names_[s] << ", action "
                << alphabet_.format(action) << " sums to " << std::setprecision(17) << sum;
            throw PreconditionError(msg.str());
        }
        actions_[s].push_back(std::move(action));
        kernel_[s].push_back(std::move(outcomes));
    }

    const SymbolAlphabet& alphabet() const { return alphabet_; }
    StateId num_states() const { return static_cast<StateId>(state_names_.size()); }
    const std::string& state_name(StateId s) const {
        check_state(s);
        return state_names_[s];
    }
    StateId state_id(const std::string& name) const {
        for (StateId s = 0; s < num_states(); ++s)
            if (state_names_[s] == name) return s;
        throw PreconditionError("unknown state: " + name);
    }
    StateId initial_state() const { return initial_; }
    double r_min() const { return r_min_; }
    double r_max() const { return r_max_; }

    const std::vector<SymbolString>& actions(StateId s) const {
        check_state(s);
        return actions_[s];
    }

    int action_index(StateId s, const SymbolString& action) const {
        check_state(s);
        for (size_t i = 0; i < actions_[s].size(); ++i)
            if (actions_[s][i] == action) return static_cast<int>(i);
        return -1;
    }

    const std::vector<Outcome>& outcomes(StateId s, int action) const {
        check_state(s);
        if (action < 0 || action >= static_cast<int>(kernel_[s].size()))
            throw PreconditionError("action index out of range");
        return kernel_[s][action];
    }

    /// Every state must have at least one action with a kernel row.
    void validate() const {
        for (StateId s = 0; s < num_states(); ++s)
            if (actions_[s].empty())
                throw PreconditionError("state " + state_names_[s] + " has no actions");
    }

    std::pair<StateId, double> sample_outcome(StateId s, int action,
                                              std::mt19937_64& rng) const {
        const auto& row = outcomes(s, action);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        double x = u(rng);
        for (const auto& o : row) {
            if (x < o.prob) return {o.next, o.reward};
            x -= o.prob;
        }
        const auto& last = row.back();
        return {last.next, last.reward};
    }

private:
    void check_state(StateId s) const {
        if (s < 0 || s >= num_states())
            throw PreconditionError("state id out of range: " + std::to_string(s));
    }

    void validate_action_string(const SymbolString& a) const {
        if (a.empty() || a.back() != alphabet_.terminal())
            throw PreconditionError("action must end with the terminal symbol");
        for (size_t i = 0; i + 1 < a.size(); ++i)
            if (a[i] == alphabet_.terminal())
                throw PreconditionError("action has an interior terminal symbol");
        if (static_cast<int>(a.size()) > alphabet_.max_action_length())
            throw PreconditionError("action longer than max_action_length");
    }

    SymbolAlphabet alphabet_;
    std::vector<std::string> state_names_;
    std::vector<std::vector<SymbolString>> actions_;
    std::vector<std::vector<std::vector<Outcome>>> kernel_;
    StateId initial_;
    double r_min_, r_max_;
};

/// Stationary policy over legal actions, stored per state as a
/// probability row over the state's action indices.
class ExternalPolicy {
public:
    ExternalPolicy(const Mdp& mdp, std::vector<std::vector<double>> probs)
        : probs_(std::move(probs)) {
        if (static_cast<StateId>(probs_.size()) != mdp.num_states())
            throw PreconditionError("policy row count does not match state count");
        for (StateId s = 0; s < mdp.num_states(); ++s) {
            if (probs_[s].size() != mdp.actions(s).size())
                throw PreconditionError("policy row width does not match action count");
            double sum = 0.0;
            for (double p : probs_[s]) {
                if (p < 0.0) throw PreconditionError("negative policy probability");
                sum += p;
            }
            if (std::abs(sum - 1.0) > 1e-9)
                throw PreconditionError("policy row for state " + mdp.state_name(s) +
                                        " sums to " + std::to_string(sum));
        }
    }

    static ExternalPolicy uniform(const Mdp& mdp) {
        std::vector<std::vector<double>> rows(mdp.num_states());
        for (StateId s = 0; s < mdp.num_states(); ++s)
            rows[s].assign(mdp.actions(s).size(),
                           1.0 / static_cast<double>(mdp.actions(s).size()));
        return ExternalPolicy(mdp, rows);
    }

    static ExternalPolicy deterministic(const Mdp& mdp, const std::vector<int>& choice) {
        std::vector<std::vector<double>> rows(mdp.num_states());
        for (StateId s = 0; s < mdp.num_states(); ++s) {
            rows[s].assign(mdp.actions(s).size(), 0.0);
            rows[s].at(static_cast<size_t>(choice.at(static_cast<size_t>(s)))) = 1.0;
        }
        return ExternalPolicy(mdp, rows);
    }

    double prob(StateId s, int action) const {
        return probs_.at(static_cast<size_t>(s)).at(static_cast<size_t>(action));
    }
    const std::vector<double>& row(StateId s) const {
        return probs_.at(static_cast<size_t>(s));
    }

    int sample(StateId s, std::mt19937_64& rng) const {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        double x = u(rng);
        const auto& r = probs_.at(static_cast<size_t>(s));
        for (size_t i = 0; i < r.size(); ++i) {
            if (x < r[i]) return static_cast<int>(i);
            x -= r[i];
        }
        return static_cast<int>(r.size()) - 1;
    }

private:
    std::vector<std::vector<double>> probs_;
};

namespace detail {

/// Stage values V_j for j = 0..m under a stationary policy; V_0 = 0.
inline std::vector<std::vector<double>> stage_values(const Mdp& mdp,
                                                     const ExternalPolicy& policy, int m) {
    std::vector<std::vector<double>> v(static_cast<size_t>(m) + 1,
                                       std::vector<double>(mdp.num_states(), 0.0));
    for (int j = 1; j <= m; ++j) {
        for (StateId s = 0; s < mdp.num_states(); ++s) {
            double vs = 0.0;
            for (size_t a = 0; a < mdp.actions(s).size(); ++a) {
                const double pa = policy.prob(s, static_cast<int>(a));
                if (pa == 0.0) continue;
                double q = 0.0;
                for (const auto& o : mdp.outcomes(s, static_cast<int>(a)))
                    q += o.prob * (o.reward + v[j - 1][static_cast<size_t>(o.next)]);
                vs += pa * q;
            }
            v[static_cast<size_t>(j)][static_cast<size_t>(s)] = vs;
        }
    }
    return v;
}

}  // namespace detail

/// Exact m-horizon action value of `action` in `s` under a stationary
/// policy, by backward recursion over the kernel.
inline double q_value(const Mdp& mdp, const ExternalPolicy& policy, StateId s, int action,
                      int m) {
    if (m < 1) throw PreconditionError("horizon must be >= 1");
    if (action < 0 || action >= static_cast<int>(mdp.actions(s).size()))
        throw PreconditionError("illegal action index in q_value");
    const auto v = detail::stage_values(mdp, policy, m - 1);
    double q = 0.0;
    for (const auto& o : mdp.outcomes(s, action))
        q += o.prob * (o.reward + v[static_cast<size_t>(m) - 1][static_cast<size_t>(o.next)]);
    return q;
}

inline double v_value(const Mdp& mdp, const ExternalPolicy& policy, StateId s, int m) {
    if (m < 1) throw PreconditionError("horizon must be >= 1");
    const auto v = detail::stage_values(mdp, policy, m);
    return v[static_cast<size_t>(m)][static_cast<size_t>(s)];
}

/// Exact optimal value of every state under the (generally
/// non-stationary) backward-induction policy.
inline std::vector<double> optimal_value(const Mdp& mdp, int m) {
    if (m < 1) throw PreconditionError("horizon must be >= 1");
    std::vector<double> v(mdp.num_states(), 0.0);
    for (int j = 1; j <= m; ++j) {
        std::vector<double> nv(mdp.num_states(), 0.0);
        for (StateId s = 0; s < mdp.num_states(); ++s) {
            double bq = -std::numeric_limits<double>::infinity();
            for (size_t a = 0; a < mdp.actions(s).size(); ++a) {
                double q = 0.0;
                for (const auto& o : mdp.outcomes(s, static_cast<int>(a)))
                    q += o.prob * (o.reward + v[static_cast<size_t>(o.next)]);
                bq = std::max(bq, q);
            }
            nv[static_cast<size_t>(s)] = bq;
        }
        v = std::move(nv);
    }
    return v;
}

/// Backward-induction optimal policy, collapsed to the first-stage
/// decision rule. Ties break toward the lowest action index.
inline ExternalPolicy optimal_policy(const Mdp& mdp, int m) {
    if (m < 1) throw PreconditionError("horizon must be >= 1");
    std::vector<double> v(mdp.num_states(), 0.0);
    std::vector<int> best(mdp.num_states(), 0);
    for (int j = 1; j <= m; ++j) {
        std::vector<double> nv(mdp.num_states(), 0.0);
        for (StateId s = 0; s < mdp.num_states(); ++s) {
            double bq = -std::numeric_limits<double>::infinity();
            int ba = 0;
            for (size_t a = 0; a < mdp.actions(s).size(); ++a) {
                double q = 0.0;
                for (const auto& o : mdp.outcomes(s, static_cast<int>(a)))
                    q += o.prob * (o.reward + v[static_cast<size_t>(o.next)]);
                if (q > bq) {
                    bq = q;
                    ba = static_cast<int>(a);
                }
            }
            nv[static_cast<size_t>(s)] = bq;
            best[static_cast<size_t>(s)] = ba;
        }
        v = std::move(nv);
    }
    return ExternalPolicy::deterministic(mdp, best);
}

/// One external trajectory; `bits` counts the internal actions spent on
/// each external decision (zero when the trajectory came from a plain
/// external agent).
struct Trajectory {
    struct Step {
        StateId state = 0;
        SymbolString action;
        StateId next = 0;
        double reward = 0.0;
        int bits = 0;
    };
    StateId initial = 0;
    std::vector<Step> steps;

    double total_reward() const {
        double z = 0.0;
        for (const auto& st : steps) z += st.reward;
        return z;
    }
};

// ---------------------------------------------------------------------
// Text format. Line oriented; '|' separates fields, ';' separates
// outcomes, '#' starts a comment. Example:
//
//   states: A B
//   alphabet: L R <T>
//   max_len: 2
//   initial: A
//   rewards: 0 1
//   row: A | L <T> | A 0 1.0
//   row: A | R <T> | B 1 0.9 ; A 0 0.1
// ---------------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    size_t b = s.find_last_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) out.push_back(trim(cur));
    return out;
}

}  // namespace detail

inline Mdp load_mdp(std::istream& in) {
    std::vector<std::string> states;
    std::vector<std::string> alphabet_names;
    int max_len = -1;
    std::string initial_name;
    double r_min = 0.0, r_max = 0.0;
    bool have_rewards = false;
    struct RawRow {
        std::string state, action, outcomes;
        int line;
    };
    std::vector<RawRow> rows;

    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        line = detail::trim(line);
        if (line.empty() || line[0] == '#') continue;
        const auto colon = line.find(':');
        if (colon == std::string::npos)
            throw IngestionError("expected 'key: value'", line_number, 1);
        const std::string key = detail::trim(line.substr(0, colon));
        const std::string value = detail::trim(line.substr(colon + 1));
        std::istringstream vs(value);
        if (key == "states") {
            std::string tok;
            while (vs >> tok) states.push_back(tok);
        } else if (key == "alphabet") {
            std::string tok;
            while (vs >> tok) alphabet_names.push_back(tok);
        } else if (key == "max_len") {
            vs >> max_len;
        } else if (key == "initial") {
            vs >> initial_name;
        } else if (key == "rewards") {
            if (!(vs >> r_min >> r_max))
                throw IngestionError("rewards needs two numbers", line_number, 1);
            have_rewards = true;
        } else if (key == "row") {
            auto fields = detail::split(value, '|');
            if (fields.size() != 3)
                throw IngestionError("row needs 'state | action | outcomes'", line_number, 1);
            rows.push_back({fields[0], fields[1], fields[2], line_number});
        } else {
            throw IngestionError("unknown key '" + key + "'", line_number, 1);
        }
    }
    if (states.empty()) throw IngestionError("missing states");
    if (alphabet_names.empty()) throw IngestionError("missing alphabet");
    if (max_len < 1) throw IngestionError("missing or invalid max_len");
    if (!have_rewards) throw IngestionError("missing rewards");
    if (initial_name.empty()) throw IngestionError("missing initial state");

    SymbolAlphabet alphabet(alphabet_names, max_len);
    Mdp mdp(alphabet, states, [&] {
        for (size_t i = 0; i < states.size(); ++i)
            if (states[i] == initial_name) return static_cast<StateId>(i);
        throw IngestionError("initial state '" + initial_name + "' not in states");
    }(), r_min, r_max);

    for (const auto& raw : rows) {
        const StateId s = mdp.state_id(raw.state);
        const SymbolString action = alphabet.parse(raw.action, raw.line);
        std::vector<Outcome> outcomes;
        for (const auto& part : detail::split(raw.outcomes, ';')) {
            std::istringstream os(part);
            std::string next_name;
            Outcome o;
            if (!(os >> next_name >> o.reward >> o.prob))
                throw IngestionError("outcome needs 'state reward prob'", raw.line, 1);
            o.next = mdp.state_id(next_name);
            outcomes.push_back(o);
        }
        try {
            mdp.add_action(s, action, std::move(outcomes));
        } catch (const PreconditionError& e) {
            throw IngestionError(e.what(), raw.line, 1);
        }
    }
    mdp.validate();
    return mdp;
}

inline void save_mdp(std::ostream& out, const Mdp& mdp) {
    out << "states:";
    for (StateId s = 0; s < mdp.num_states(); ++s) out << ' ' << mdp.state_name(s);
    out << "\nalphabet:";
    for (const auto& n : mdp.alphabet().names()) out << ' ' << n;
    out << "\nmax_len: " << mdp.alphabet().max_action_length();
    out << "\ninitial: " << mdp.state_name(mdp.initial_state());
    out << "\nrewards: " << std::setprecision(17) << mdp.r_min() << ' ' << mdp.r_max() << '\n';
    for (StateId s = 0; s < mdp.num_states(); ++s) {
        for (size_t a = 0; a < mdp.actions(s).size(); ++a) {
            out << "row: " << mdp.state_name(s) << " | "
                << mdp.alphabet().format(mdp.actions(s)[a]) << " |";
            const auto& row = mdp.outcomes(s, static_cast<int>(a));
            for (size_t i = 0; i < row.size(); ++i) {
                out << (i ? " ; " : " ") << mdp.state_name(row[i].next) << ' '
                    << std::setprecision(17) << row[i].reward << ' ' << row[i].prob;
            }
            out << '\n';
        }
    }
}

}  // namespace bitact
