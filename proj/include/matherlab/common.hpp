#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace matherlab {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using IntVec = std::vector<int>;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class MalformedSeries : public Error {
public:
    using Error::Error;
};

class NoConvergence : public Error {
public:
    NoConvergence(const std::string& what, double residual)
        : Error(what + " (residual " + std::to_string(residual) + ")"), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

class DomainError : public Error {
public:
    using Error::Error;
};

// Wrap into [0, 2π).
inline double wrap_angle(double a) {
    double r = std::fmod(a, kTwoPi);
    if (r < 0) r += kTwoPi;
    return r;
}

// Wrap into [-π, π).
inline double wrap_centered(double a) {
    return wrap_angle(a + std::numbers::pi) - std::numbers::pi;
}

// Ω = [[0, I], [-I, 0]] acting on z = (x, y).
inline Mat symplectic_form(int n) {
    Mat J = Mat::Zero(2 * n, 2 * n);
    J.topRightCorner(n, n).setIdentity();
    J.bottomLeftCorner(n, n) = -Mat::Identity(n, n);
    return J;
}

inline double symplectic_defect(const Mat& M) {
    const int n = static_cast<int>(M.rows()) / 2;
    Mat J = symplectic_form(n);
    return (M.transpose() * J * M - J).cwiseAbs().maxCoeff();
}

}  // namespace matherlab

namespace matherlab {

// Non-fatal diagnostics go to stderr unless silenced.
void warn(const std::string& msg);
void set_warnings_enabled(bool on);
// Receives every warning in addition to stderr; empty to detach.
void set_warning_sink(std::function<void(const std::string&)> sink);

// Worker count used by parallel_for (default 1).
void set_thread_count(int n);
int thread_count();

// Runs f(0), ..., f(n - 1) on up to thread_count() threads; the first
// exception thrown by any call is rethrown after all workers join.
void parallel_for(int n, const std::function<void(int)>& f);

}  // namespace matherlab
