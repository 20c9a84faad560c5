#pragma once

#include <Eigen/Dense>

#include "symphodge/fiber.hpp"
#include "symphodge/operators.hpp"

namespace symphodge {

/// Principal symbol of a tagged operator at covector xi on degree-k forms,
/// computed algebraically from the fiber matrices (paper convention:
/// sigma(d)(xi) eta = xi ^ eta, compositions multiply).
Eigen::MatrixXd fiber_symbol(const SymplecticModel& m, OpTag tag, int degree, const Eigen::VectorXd& xi);

/// Symbol evaluated at the boundary conormal; identical to fiber_symbol on
/// this flat model (constant coefficients) but kept as a named entry point.
inline Eigen::MatrixXd boundary_symbol(const SymplecticModel& m, OpTag tag, int degree,
                                       const Eigen::VectorXd& conormal) {
  return fiber_symbol(m, tag, degree, conormal);
}

struct SymbolSample {
  Eigen::VectorXd x;
  Eigen::VectorXd xi;
  int degree = 0;
  Eigen::MatrixXd matrix;
};

/// Symbol sample at (x, xi); |xi| must be 1 (zero covector rejected).
SymbolSample symbol_at(const SymplecticModel& m, OpTag tag, const Eigen::VectorXd& x, const Eigen::VectorXd& xi,
                       int degree);

/// Projectors extracting the four blocks eta = w1^b1 + w2^b2 + w12^b3 + b4
/// in the xi-adapted frame (w1 = xi, w2 = J xi); returned in that order.
std::vector<Eigen::MatrixXd> adapted_block_projectors(const SymplecticModel& m, const Eigen::VectorXd& xi, int degree);

}  // namespace symphodge
