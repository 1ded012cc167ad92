#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace bitact {

using SymbolId = int;
using StateId = int;
using SymbolString = std::vector<SymbolId>;

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// A symbol name is not part of the alphabet.
struct AlphabetError : Error {
    using Error::Error;
};

/// An operation was called with arguments outside its contract.
struct PreconditionError : Error {
    using Error::Error;
};

/// Malformed corpus, model, or MDP file. Carries line/column when known.
struct IngestionError : Error {
    int line = 0;
    int column = 0;
    IngestionError(const std::string& msg, int line_, int column_)
        : Error(msg + " (line " + std::to_string(line_) + ", column " +
                std::to_string(column_) + ")"),
          line(line_),
          column(column_) {}
    explicit IngestionError(const std::string& msg) : Error(msg) {}
};

/// A decoded action is not legal in the current external state.
struct LegalityError : Error {
    using Error::Error;
};

/// The decoder was fed past the depth bound, or decoding failed to
/// resolve a terminal symbol within the safety cap.
struct DepthError : Error {
    using Error::Error;
};

/// A string with zero (quantized) probability was handed to the encoder.
struct EncodingError : Error {
    using Error::Error;
};

/// Every mixture component assigned zero probability to an observation.
struct PosteriorError : Error {
    using Error::Error;
};

/// A conditional distribution has no mass on the queried branch.
struct ConditioningError : Error {
    using Error::Error;
};

/// A verification check was handed an instance above its size budget.
struct BudgetError : Error {
    using Error::Error;
};

/// The bit source ran dry before an action was complete.
struct SourceExhaustedError : Error {
    using Error::Error;
};

/// Bad CLI/experiment configuration.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace bitact
