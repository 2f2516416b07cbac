#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace noontomo {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

// Error taxonomy: Input errors are caused by bad arguments, files, or
// configuration (CLI exit code 2); Numerical errors are failures of the
// mathematical pipeline on well-formed input (CLI exit code 1).
enum class ErrorKind { Input, Numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string code, const std::string& detail)
      : std::runtime_error(code + ": " + detail), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const { return kind_; }
  const std::string& code() const { return code_; }

 private:
  ErrorKind kind_;
  std::string code_;
};

[[noreturn]] inline void fail_input(const std::string& code, const std::string& detail) {
  throw Error(ErrorKind::Input, code, detail);
}

[[noreturn]] inline void fail_numerical(const std::string& code, const std::string& detail) {
  throw Error(ErrorKind::Numerical, code, detail);
}

}  // namespace noontomo
