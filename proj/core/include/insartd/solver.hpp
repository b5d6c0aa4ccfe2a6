#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "insartd/tensor.hpp"

namespace insartd {

/// ADMM weights and schedule. gamma == 0 means "derive from the input
/// shape via default_gamma at solve time"; any positive value is used
/// as given.
struct SolverConfig {
    double alpha = 0.1;   // TV weight; 0 disables the TV term
    double beta = 2.0;    // nuclear-norm weight
    double gamma = 0.0;   // sparsity weight; 0 = default_gamma(I1, I2)
    double mu0 = 1e-2;    // initial penalty
    double eta = 1.1;     // penalty growth factor
    double mu_max = 1e10;
    std::size_t max_iter = 200;
    double tol = 1e-6;    // relative primal feasibility
    std::array<double, 3> mode_weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};

    /// Throws std::invalid_argument when any bound is violated.
    void validate() const;
};

struct SolverReport {
    std::size_t iterations = 0;
    std::vector<double> primal_residuals;  // ||G - X - E||_F / ||G||_F per iteration
    std::vector<double> xz_residuals;      // ||X - Z||_F / ||X||_F per iteration
    double tv_term = 0.0;                  // TV(X) at the solution
    double nuclear_term = 0.0;             // sum of mode-n nuclear norms of X
    double l1_term = 0.0;                  // ||E||_1
    bool converged = false;
};

struct Decomposition {
    ComplexTensor3 x_hat;  // recovered outlier-free stack
    ComplexTensor3 e_hat;  // sparse outlier component
    SolverReport report;
};

/// TV-regularized robust low-rank decomposition of g into x_hat + e_hat,
/// minimizing alpha*TV(X) + beta*sum_n ||X_(n)||_* + gamma*||E||_1 subject
/// to X + E = G, by ADMM with an increasing penalty. Deterministic for
/// fixed inputs; throws numerical_error if an iterate goes non-finite.
Decomposition decompose_tvlr(const ComplexTensor3& g, const SolverConfig& cfg);

/// Plain robust low-rank baseline: the same problem with the TV term and
/// its auxiliary variables removed (alpha treated as 0).
Decomposition decompose_lr(const ComplexTensor3& g, const SolverConfig& cfg);

/// The 100/sqrt(I1*I2) rule for the sparsity weight.
double default_gamma(std::size_t i1, std::size_t i2);

/// Circular 3D TV seminorm: sum of moduli of all three difference images.
double tv_norm(const ComplexTensor3& t);

/// Sum over modes of the nuclear norms of the unfoldings.
double nuclear_norm_sum(const ComplexTensor3& t);

}  // namespace insartd
