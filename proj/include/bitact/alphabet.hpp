#pragma once

#include <algorithm>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "bitact/common.hpp"

namespace bitact {

/// Finite ordered symbol alphabet with one privileged terminal symbol.
///
/// The declaration order of the symbols is load-bearing: coder intervals
/// are laid out in this order, so two alphabets with the same symbols in
/// a different order are different alphabets.
class SymbolAlphabet {
public:
    /// Token used for the terminal symbol in all text formats.
    static constexpr const char* kTerminalToken = "<T>";

    SymbolAlphabet(std::vector<std::string> symbols, int max_action_length)
        : symbols_(std::move(symbols)), max_action_length_(max_action_length) {
        if (max_action_length_ < 1)
            throw PreconditionError("max_action_length must be >= 1");
        terminal_ = -1;
        for (int i = 0; i < static_cast<int>(symbols_.size()); ++i) {
            const auto& name = symbols_[i];
            if (name.empty()) throw AlphabetError("empty symbol name");
            if (index_.count(name))
                throw AlphabetError("duplicate symbol: " + name);
            index_[name] = i;
            if (name == kTerminalToken) terminal_ = i;
        }
        if (terminal_ < 0)
            throw AlphabetError(std::string("alphabet must contain the terminal token ") +
                                kTerminalToken);
    }

    int size() const { return static_cast<int>(symbols_.size()); }
    SymbolId terminal() const { return terminal_; }
    int max_action_length() const { return max_action_length_; }

    const std::string& name(SymbolId id) const {
        if (id < 0 || id >= size())
            throw AlphabetError("symbol id out of range: " + std::to_string(id));
        return symbols_[id];
    }

    const std::vector<std::string>& names() const { return symbols_; }

    bool has(const std::string& name) const { return index_.count(name) > 0; }

    SymbolId id(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw AlphabetError("unknown symbol: " + name);
        return it->second;
    }

    /// Parse a whitespace-separated token line into symbol ids.
    /// Column numbers in errors are 1-based token positions.
    SymbolString parse(const std::string& line, int line_number = 0) const {
        SymbolString out;
        std::istringstream in(line);
        std::string tok;
        int col = 0;
        while (in >> tok) {
            ++col;
            auto it = index_.find(tok);
            if (it == index_.end())
                throw IngestionError("unknown symbol '" + tok + "'", line_number, col);
            out.push_back(it->second);
        }
        return out;
    }

    std::string format(const SymbolString& s) const {
        std::string out;
        for (size_t i = 0; i < s.size(); ++i) {
            if (i) out += ' ';
            out += name(s[i]);
        }
        return out;
    }

    bool operator==(const SymbolAlphabet& other) const {
        return symbols_ == other.symbols_ &&
               max_action_length_ == other.max_action_length_;
    }

private:
    std::vector<std::string> symbols_;
    int max_action_length_;
    SymbolId terminal_;
    std::unordered_map<std::string, SymbolId> index_;
};

inline bool contains_terminal(const SymbolString& s, const SymbolAlphabet& alphabet) {
    return std::find(s.begin(), s.end(), alphabet.terminal()) != s.end();
}

}  // namespace bitact
