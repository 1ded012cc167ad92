#pragma once

#include <utility>
#include <vector>

#include "bitact/model.hpp"

namespace bitact {

/// Uninformative action model: every legal action of the current state
/// receives the same full-string probability 1/|A(s)|.
///
/// Conditionals are ratios of action counts in the prefix tree, so the
/// chain rule telescopes to exactly 1/|A(s)| per action, and the induced
/// codelengths realize a plain binarization of the action space.
class UniformActionModel : public ActionModel {
public:
    /// Per-state legal action lists (actions end with the terminal symbol).
    UniformActionModel(SymbolAlphabet alphabet,
                       std::vector<std::vector<SymbolString>> actions_per_state,
                       ModelOptions options = {})
        : ActionModel(std::move(alphabet), options), shared_(false) {
        if (actions_per_state.empty())
            throw PreconditionError("no states given");
        for (auto& actions : actions_per_state) {
            if (actions.empty()) throw PreconditionError("state with no legal actions");
            tries_.emplace_back(this->alphabet(), actions);
        }
    }

    /// One action list shared by every state.
    UniformActionModel(SymbolAlphabet alphabet, std::vector<SymbolString> actions,
                       ModelOptions options = {})
        : ActionModel(std::move(alphabet), options), shared_(true) {
        if (actions.empty()) throw PreconditionError("empty action set");
        tries_.emplace_back(this->alphabet(), actions);
    }

    const std::vector<SymbolString>& action_set(StateId s) const {
        return trie(s).actions();
    }

    bool shared() const { return shared_; }
    int num_state_slots() const { return static_cast<int>(tries_.size()); }
    const std::vector<SymbolString>& slot_actions(int i) const {
        return tries_.at(static_cast<size_t>(i)).actions();
    }

protected:
    std::vector<double> raw_conditionals(StateId s, const SymbolString& prefix) const override {
        const auto& t = trie(s);
        const int total = t.count_extending(prefix);
        if (total == 0)
            throw ConditioningError("no legal action extends this prefix");
        std::vector<double> row(alphabet().size(), 0.0);
        for (SymbolId y = 0; y < alphabet().size(); ++y) {
            SymbolString ext = prefix;
            ext.push_back(y);
            const int c = t.count_extending(ext);
            if (c > 0) row[y] = static_cast<double>(c) / total;
        }
        return row;
    }

private:
    const detail::ActionTrie& trie(StateId s) const {
        if (shared_) return tries_[0];
        if (s < 0 || s >= static_cast<StateId>(tries_.size()))
            throw PreconditionError("state id out of range: " + std::to_string(s));
        return tries_[s];
    }

    std::vector<detail::ActionTrie> tries_;
    bool shared_;
};

}  // namespace bitact
