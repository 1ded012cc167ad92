#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "bitact/model.hpp"

namespace bitact {

/// Bayesian mixture of K action models with a uniform prior.
///
/// The predictive conditional is the posterior-weighted average of the
/// component conditionals, with per-component responsibilities updated
/// within the current prefix by the chain rule, so the marginal
/// probability of any string is exactly the weighted sum of component
/// probabilities. Posterior weights move only through update_with_action
/// (once per completed external action); updates require exclusive
/// access, reads are safe to share.
class MixtureActionModel : public ActionModel {
public:
    explicit MixtureActionModel(std::vector<std::shared_ptr<const ActionModel>> components,
                                ModelOptions options = {})
        : ActionModel(components.at(0)->alphabet(), options),
          components_(std::move(components)) {
        if (components_.size() < 2)
            throw PreconditionError("mixture needs at least 2 components");
        for (const auto& c : components_)
            if (!(c->alphabet() == alphabet()))
                throw PreconditionError("mixture components must share one alphabet");
        log_weights_.assign(components_.size(),
                            -std::log(static_cast<double>(components_.size())));
    }

    size_t num_components() const { return components_.size(); }
    const ActionModel& component(size_t i) const { return *components_.at(i); }
    const std::vector<double>& log_weights() const { return log_weights_; }
    const std::vector<std::string>& history() const { return history_; }

    std::vector<double> posterior() const {
        std::vector<double> w(log_weights_.size());
        const double m = max_log_weight();
        double sum = 0.0;
        for (size_t i = 0; i < w.size(); ++i) {
            w[i] = std::exp(log_weights_[i] - m);
            sum += w[i];
        }
        for (double& v : w) v /= sum;
        return w;
    }

    /// Bayes update on one completed external action.
    void update_with_action(StateId s, const SymbolString& observed) {
        if (observed.empty() || observed.back() != alphabet().terminal())
            throw PreconditionError("observed action must end with the terminal symbol");
        bool any_finite = false;
        for (size_t i = 0; i < components_.size(); ++i) {
            const double p = components_[i]->sequence_probability(s, observed);
            if (p > 0.0) {
                log_weights_[i] += std::log(p);
                any_finite = true;
            } else {
                if (options().prob_floor <= 0.0)
                    throw PosteriorError(
                        "component assigned zero probability with the floor disabled");
                log_weights_[i] = -std::numeric_limits<double>::infinity();
            }
        }
        if (!any_finite)
            throw PosteriorError("all components assigned zero probability");
        renormalize();
        history_.push_back("a " + alphabet().format(observed));
    }

    /// Environment observations extend the history record. Components
    /// carry no observation model, so the posterior is unchanged.
    void update_with_observation(const std::string& observation) {
        history_.push_back("o " + observation);
    }

    /// log of the posterior-weighted marginal probability of x given s.
    double log_marginal(StateId s, const SymbolString& x) const {
        double best = -std::numeric_limits<double>::infinity();
        std::vector<double> terms(components_.size());
        for (size_t i = 0; i < components_.size(); ++i) {
            const double p = components_[i]->sequence_probability(s, x);
            terms[i] = p > 0.0 ? log_weights_[i] + std::log(p)
                               : -std::numeric_limits<double>::infinity();
            best = std::max(best, terms[i]);
        }
        if (!std::isfinite(best)) return best;
        double sum = 0.0;
        for (double t : terms) sum += std::exp(t - best);
        return best + std::log(sum);
    }

    /// Used by deserialization.
    void restore(std::vector<double> log_weights, std::vector<std::string> history) {
        if (log_weights.size() != components_.size())
            throw PreconditionError("log weight count does not match components");
        log_weights_ = std::move(log_weights);
        history_ = std::move(history);
    }

protected:
    std::vector<double> raw_conditionals(StateId s, const SymbolString& prefix) const override {
        // Responsibilities given the prefix, then a weighted average of rows.
        std::vector<double> resp(components_.size());
        double sum = 0.0;
        for (size_t i = 0; i < components_.size(); ++i) {
            const double p = components_[i]->sequence_probability(s, prefix);
            resp[i] = std::exp(log_weights_[i] - max_log_weight()) * p;
            sum += resp[i];
        }
        if (sum <= 0.0)
            throw ConditioningError("mixture has no mass on this prefix");
        std::vector<double> row(alphabet().size(), 0.0);
        for (size_t i = 0; i < components_.size(); ++i) {
            if (resp[i] <= 0.0) continue;
            const auto comp = components_[i]->conditionals(s, prefix);
            const double w = resp[i] / sum;
            for (size_t y = 0; y < row.size(); ++y) row[y] += w * comp[y];
        }
        return row;
    }

private:
    double max_log_weight() const {
        double m = -std::numeric_limits<double>::infinity();
        for (double lw : log_weights_) m = std::max(m, lw);
        return m;
    }

    void renormalize() {
        const double m = max_log_weight();
        double sum = 0.0;
        for (double lw : log_weights_) sum += std::exp(lw - m);
        const double log_z = m + std::log(sum);
        for (double& lw : log_weights_) lw -= log_z;
    }

    std::vector<std::shared_ptr<const ActionModel>> components_;
    std::vector<double> log_weights_;
    std::vector<std::string> history_;
};

struct RegretRow {
    double mixture_log_loss;   // -log2 of the uniform mixture
    double best_log_loss;      // min over components of -log2
    double gap;                // mixture_log_loss - best_log_loss
};

/// Per-string excess log-loss of the uniform mixture over the best
/// component in hindsight; the gap never exceeds log2(K).
inline std::vector<RegretRow> mixture_log_loss_regret(
    const std::vector<std::shared_ptr<const ActionModel>>& components, StateId s,
    const std::vector<SymbolString>& strings) {
    if (components.size() < 2)
        throw PreconditionError("regret needs at least 2 components");
    std::vector<RegretRow> rows;
    rows.reserve(strings.size());
    const double k = static_cast<double>(components.size());
    for (const auto& x : strings) {
        double mix = 0.0;
        double best = 0.0;
        bool first = true;
        for (const auto& c : components) {
            const double p = c->sequence_probability(s, x);
            mix += p / k;
            if (first || p > best) best = p, first = false;
        }
        RegretRow row{};
        row.mixture_log_loss = -std::log2(mix);
        row.best_log_loss = -std::log2(best);
        row.gap = row.mixture_log_loss - row.best_log_loss;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace bitact
