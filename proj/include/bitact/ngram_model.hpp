#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "bitact/model.hpp"

namespace bitact {

/// Newline-delimited symbol strings; within a line symbols are
/// whitespace-separated tokens and the terminal symbol is written <T>.
struct Corpus {
    std::vector<SymbolString> lines;

    static Corpus parse(std::istream& in, const SymbolAlphabet& alphabet) {
        Corpus c;
        std::string line;
        int line_number = 0;
        while (std::getline(in, line)) {
            ++line_number;
            if (line.empty() || line[0] == '#') continue;
            SymbolString s = alphabet.parse(line, line_number);
            if (!s.empty()) c.lines.push_back(std::move(s));
        }
        return c;
    }

    void write(std::ostream& out, const SymbolAlphabet& alphabet) const {
        for (const auto& s : lines) out << alphabet.format(s) << '\n';
    }
};

/// Additive-smoothed n-gram model over action symbols. Contexts never
/// cross a terminal symbol: each action is predicted from scratch plus
/// at most `order` symbols of within-action context.
class NGramActionModel : public ActionModel {
public:
    using CountTable = std::map<std::string, std::vector<std::uint64_t>>;

    NGramActionModel(SymbolAlphabet alphabet, int order, double alpha = 0.5,
                     ModelOptions options = {})
        : ActionModel(std::move(alphabet), options), order_(order), alpha_(alpha) {
        if (order_ < 0) throw PreconditionError("order must be >= 0");
        if (alpha_ <= 0.0) throw PreconditionError("alpha must be > 0");
    }

    /// Exact occurrence counting over the corpus. Deterministic: the same
    /// corpus always produces the same table.
    static NGramActionModel fit(SymbolAlphabet alphabet, const Corpus& corpus, int order,
                                double alpha = 0.5, ModelOptions options = {}) {
        NGramActionModel m(std::move(alphabet), order, alpha, options);
        for (const auto& line : corpus.lines) m.ingest(line);
        return m;
    }

    int order() const { return order_; }
    double alpha() const { return alpha_; }
    const CountTable& counts() const { return counts_; }

    std::uint64_t count(const SymbolString& context, SymbolId y) const {
        auto it = counts_.find(encode(context));
        if (it == counts_.end()) return 0;
        return it->second.at(static_cast<size_t>(y));
    }

    /// Add one corpus line to the count table.
    void ingest(const SymbolString& line) {
        SymbolString ctx;
        for (SymbolId y : line) {
            check_symbol(y);
            auto& row = counts_[encode(ctx)];
            if (row.empty()) row.assign(alphabet().size(), 0);
            ++row[static_cast<size_t>(y)];
            if (y == alphabet().terminal()) {
                ctx.clear();
            } else {
                ctx.push_back(y);
                if (static_cast<int>(ctx.size()) > order_)
                    ctx.erase(ctx.begin());
            }
        }
    }

    /// Used by deserialization; keys must be contexts encoded by this
    /// model's alphabet.
    void set_counts(CountTable counts) { counts_ = std::move(counts); }

    static std::string encode(const SymbolString& context) {
        std::string key;
        key.reserve(context.size());
        for (SymbolId y : context) key.push_back(static_cast<char>(y));
        return key;
    }

protected:
    std::vector<double> raw_conditionals(StateId, const SymbolString& prefix) const override {
        SymbolString ctx;
        const size_t start = prefix.size() > static_cast<size_t>(order_)
                                 ? prefix.size() - static_cast<size_t>(order_)
                                 : 0;
        ctx.assign(prefix.begin() + static_cast<long>(start), prefix.end());
        const auto it = counts_.find(encode(ctx));
        const int n = alphabet().size();
        std::vector<double> row(static_cast<size_t>(n));
        std::uint64_t total = 0;
        if (it != counts_.end())
            for (std::uint64_t c : it->second) total += c;
        const double denom = static_cast<double>(total) + alpha_ * n;
        for (SymbolId y = 0; y < n; ++y) {
            const std::uint64_t c =
                it == counts_.end() ? 0 : it->second[static_cast<size_t>(y)];
            row[static_cast<size_t>(y)] = (static_cast<double>(c) + alpha_) / denom;
        }
        return row;
    }

private:
    int order_;
    double alpha_;
    CountTable counts_;
};

}  // namespace bitact
