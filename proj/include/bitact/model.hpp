#pragma once

#include <cmath>
#include <memory>
#include <numeric>
#include <vector>

#include "bitact/alphabet.hpp"
#include "bitact/common.hpp"

namespace bitact {

struct ModelOptions {
    /// Smallest conditional probability granted to any symbol the model
    /// itself gives positive mass. Keeps every legal continuation
    /// encodable. Set to 0 to disable.
    double prob_floor = 0x1p-16;
};

/// Sequential coding distribution over action symbols, conditioned on an
/// external state and a within-action symbol prefix.
///
/// The base class owns two guarantees that every concrete model inherits:
///   - termination: a prefix of length k-1 without the terminal symbol
///     forces the terminal with probability 1, so all probability mass
///     lies on strings of length <= k that end at their first terminal;
///   - flooring: positive conditionals are lifted to at least prob_floor
///     (zeros stay zero), then the row is renormalized.
///
/// Models are immutable after construction/fitting unless documented
/// otherwise; concurrent const access is safe.
class ActionModel {
public:
    ActionModel(SymbolAlphabet alphabet, ModelOptions options = {})
        : alphabet_(std::move(alphabet)), options_(options) {}
    virtual ~ActionModel() = default;

    const SymbolAlphabet& alphabet() const { return alphabet_; }
    const ModelOptions& options() const { return options_; }

    /// Full conditional row over the alphabet given (state, prefix).
    /// Rows sum to 1 and respect the termination rule and the floor.
    std::vector<double> conditionals(StateId s, const SymbolString& prefix) const {
        validate_prefix(prefix);
        const int n = alphabet_.size();
        if (static_cast<int>(prefix.size()) == alphabet_.max_action_length() - 1) {
            std::vector<double> row(n, 0.0);
            row[alphabet_.terminal()] = 1.0;
            return row;
        }
        std::vector<double> row = raw_conditionals(s, prefix);
        if (static_cast<int>(row.size()) != n)
            throw PreconditionError("model produced a row of wrong width");
        double sum = 0.0;
        bool lifted = false;
        for (double& p : row) {
            if (p < 0.0 || !std::isfinite(p))
                throw PreconditionError("model produced an invalid probability");
            if (p > 0.0 && p < options_.prob_floor) {
                p = options_.prob_floor;
                lifted = true;
            }
            sum += p;
        }
        if (sum <= 0.0)
            throw ConditioningError("conditional row has no mass");
        if (lifted || std::abs(sum - 1.0) > 1e-12)
            for (double& p : row) p /= sum;
        return row;
    }

    double conditional_probability(StateId s, const SymbolString& prefix, SymbolId y) const {
        check_symbol(y);
        return conditionals(s, prefix)[y];
    }

    /// Chain-rule probability of a symbol string; the empty string has
    /// probability 1. Interior terminals are rejected (a trailing
    /// terminal is fine).
    double sequence_probability(StateId s, const SymbolString& x) const {
        if (static_cast<int>(x.size()) > alphabet_.max_action_length())
            throw PreconditionError("string longer than max_action_length");
        double p = 1.0;
        SymbolString prefix;
        for (SymbolId y : x) {
            check_symbol(y);
            p *= conditionals(s, prefix)[y];
            if (p == 0.0) return 0.0;
            prefix.push_back(y);
        }
        return p;
    }

    /// Cumulative probability of symbols strictly before y in alphabet
    /// order, given (state, prefix).
    double conditional_cdf(StateId s, const SymbolString& prefix, SymbolId y) const {
        check_symbol(y);
        const auto row = conditionals(s, prefix);
        double c = 0.0;
        for (SymbolId i = 0; i < y; ++i) c += row[i];
        return c;
    }

protected:
    /// Concrete law before termination/floor handling. Must return a row
    /// of nonnegative reals over the full alphabet, summing to ~1.
    virtual std::vector<double> raw_conditionals(StateId s, const SymbolString& prefix) const = 0;

    void check_symbol(SymbolId y) const {
        if (y < 0 || y >= alphabet_.size())
            throw AlphabetError("symbol id out of range: " + std::to_string(y));
    }

    void validate_prefix(const SymbolString& prefix) const {
        if (static_cast<int>(prefix.size()) >= alphabet_.max_action_length())
            throw PreconditionError("prefix must be shorter than max_action_length");
        for (SymbolId y : prefix) {
            check_symbol(y);
            if (y == alphabet_.terminal())
                throw PreconditionError("prefix must not contain the terminal symbol");
        }
    }

private:
    SymbolAlphabet alphabet_;
    ModelOptions options_;
};

namespace detail {

/// Per-state prefix tree over a set of complete actions (each ending in
/// its first terminal). Answers which symbols can extend a prefix.
class ActionTrie {
public:
    ActionTrie() = default;
    ActionTrie(const SymbolAlphabet& alphabet, const std::vector<SymbolString>& actions) {
        for (const auto& a : actions) {
            if (a.empty() || a.back() != alphabet.terminal())
                throw PreconditionError("action must end with the terminal symbol");
            for (size_t i = 0; i + 1 < a.size(); ++i)
                if (a[i] == alphabet.terminal())
                    throw PreconditionError("action has an interior terminal symbol");
            if (static_cast<int>(a.size()) > alphabet.max_action_length())
                throw PreconditionError("action longer than max_action_length");
        }
        actions_ = actions;
    }

    const std::vector<SymbolString>& actions() const { return actions_; }

    /// Number of actions that have `prefix` as a proper or full prefix.
    int count_extending(const SymbolString& prefix) const {
        int n = 0;
        for (const auto& a : actions_) n += extends(a, prefix);
        return n;
    }

    static bool extends(const SymbolString& action, const SymbolString& prefix) {
        if (prefix.size() > action.size()) return false;
        return std::equal(prefix.begin(), prefix.end(), action.begin());
    }

private:
    std::vector<SymbolString> actions_;
};

}  // namespace detail

/// Restricts a model's support to the legal actions of each state by
/// zeroing symbols that cannot extend to a legal action, then
/// renormalizing. The wrapped model supplies the relative weights.
class LegalityMaskedModel : public ActionModel {
public:
    LegalityMaskedModel(std::shared_ptr<const ActionModel> inner,
                        std::vector<std::vector<SymbolString>> actions_per_state)
        : ActionModel(inner->alphabet(), inner->options()), inner_(std::move(inner)) {
        tries_.reserve(actions_per_state.size());
        for (auto& actions : actions_per_state) {
            if (actions.empty())
                throw PreconditionError("state with no legal actions");
            tries_.emplace_back(alphabet(), actions);
        }
    }

    const std::vector<SymbolString>& legal_actions(StateId s) const {
        return trie(s).actions();
    }

protected:
    std::vector<double> raw_conditionals(StateId s, const SymbolString& prefix) const override {
        auto row = inner_conditionals(s, prefix);
        const auto& t = trie(s);
        double sum = 0.0;
        for (SymbolId y = 0; y < alphabet().size(); ++y) {
            SymbolString ext = prefix;
            ext.push_back(y);
            if (t.count_extending(ext) == 0) row[y] = 0.0;
            sum += row[y];
        }
        if (sum <= 0.0)
            throw ConditioningError("masked model has no mass on any legal continuation");
        return row;
    }

private:
    std::vector<double> inner_conditionals(StateId s, const SymbolString& prefix) const {
        return inner_->conditionals(s, prefix);
    }

    const detail::ActionTrie& trie(StateId s) const {
        if (s < 0 || s >= static_cast<StateId>(tries_.size()))
            throw PreconditionError("state id out of range: " + std::to_string(s));
        return tries_[s];
    }

    std::shared_ptr<const ActionModel> inner_;
    std::vector<detail::ActionTrie> tries_;
};

}  // namespace bitact
