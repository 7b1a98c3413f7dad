#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace rnnkit {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Configuration problems: bad dimensions, inconsistent flags, malformed
// config files. CLI maps this to exit code 1.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Problems with input data: parse errors, validation failures. Exit code 2.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg, std::optional<long> line = std::nullopt)
      : std::runtime_error(line ? msg + " (line " + std::to_string(*line) + ")" : msg),
        line(line) {}
  std::optional<long> line;
};

// Non-finite values encountered during computation. Exit code 3.
// `timestep` and `chunk` are filled in by whoever knows them.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& msg,
                          std::optional<long> timestep = std::nullopt,
                          std::optional<long> chunk = std::nullopt)
      : std::runtime_error(msg), timestep(timestep), chunk(chunk) {}
  std::optional<long> timestep;
  std::optional<long> chunk;
};

}  // namespace rnnkit
