#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fairbbr {

// Configuration and scheduling faults abort a run.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SchedulingInPast : std::logic_error {
  using std::logic_error::logic_error;
};

// Congestion-control sample preconditions.
struct InvalidSample : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Fairness-layer preconditions.
struct EmptySet : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct NonPositiveBandwidth : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct InvalidRtt : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct AlphaOutOfRange : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct MissingPrediction : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct EmptyInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct AllZero : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Measurement layer.
struct NegativeLatency : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// CSV parse failure; line and column are 1-based, message carries the
// offending text.
struct ParseError : std::runtime_error {
  ParseError(std::size_t line, std::size_t column, const std::string& what)
      : std::runtime_error(what), line(line), column(column) {}
  std::size_t line;
  std::size_t column;
};

// ML layer.
struct TooFewRows : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct InvalidK : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct SingleClassData : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct NonFiniteTarget : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct EmptyTestSet : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace fairbbr
