#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace lactr {

using UserId = std::uint32_t;
using ItemId = std::uint32_t;
using WordId = std::uint32_t;
using EdgeId = std::uint32_t;
using Timestamp = std::int64_t;

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Malformed or inconsistent input data. Maps to CLI exit status 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values or failed factorizations. Maps to CLI exit status 3.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kVersion = "0.3.0";

}  // namespace lactr
