#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace hh {

using cplx = std::complex<double>;
using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;
using MatR = Eigen::MatrixXd;
using VecR = Eigen::VectorXd;
using MultiIndex = std::vector<int>;
using IntVector = std::vector<int>;

inline constexpr double kPi = 3.14159265358979323846;

// Raised when an operation is asked for something outside its supported domain.
struct Unsupported : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Raised when a grid or truncation cannot resolve the requested object.
struct ResolutionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int total_degree(const MultiIndex& mu);
double binomial(int n, int k);

// Number of worker threads, capped by the HH_THREADS environment variable.
int thread_count();

// Runs body(i) for i in [0, count). Work is split into contiguous blocks so
// results written by index are independent of the thread count.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

// Warnings collected by numerical routines (boundary mass, aliasing, ...).
struct Diagnostics {
  std::vector<std::string> warnings;
  void warn(const std::string& w) { warnings.push_back(w); }
  bool empty() const { return warnings.empty(); }
};

}  // namespace hh
