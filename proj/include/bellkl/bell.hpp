#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "bellkl/local.hpp"
#include "bellkl/quantum.hpp"

namespace bellkl {

/// lower: local models satisfy value >= bound; upper: value <= bound.
enum class BoundDirection { lower, upper };

/// Linear functional on conditional probabilities p(j_A, j_B | i_A, i_B),
/// coefficients indexed like Behavior.
struct BellFunctional {
    int num_settings = 0;
    int num_outcomes = 0;
    std::vector<double> coeffs;
    double bound = 0.0;
    BoundDirection direction = BoundDirection::lower;

    double coefficient(int ia, int ib, int ja, int jb) const {
        return coeffs[static_cast<std::size_t>(((ia * num_settings + ib) * num_outcomes + ja) * num_outcomes + jb)];
    }
};

/// Compact CGLMP functional <[A1-B1] + [B1-A2] + [A2-B2] + [B2-A1-1]> >= d-1
/// with [x] = x mod d and <X> = sum_k k p(X = k). Functional label A1 is
/// measurement setting index 1 of cglmp_measurements and A2 is index 0 (same
/// for Bob), which aligns the inequality with the direction those
/// measurements violate it.
BellFunctional cglmp_functional(int d);

/// Exact optimum (min for lower, max for upper) over deterministic vertices.
double local_bound(const BellFunctional &f, std::uint64_t cap = default_vertex_cap);

/// sum of coefficients times conditional probabilities of the behavior.
double functional_value(const BellFunctional &f, const Behavior &behavior);

double quantum_value(const BellFunctional &f, const PureState &state, const MeasurementSettings &alice,
                     const MeasurementSettings &bob);

/// Hermitian operator on C^d (x) C^d, basis index i * d + j.
struct BellOperator {
    int local_dim = 0;
    Eigen::MatrixXcd matrix;

    double hermiticity_error() const;
    double expectation(const PureState &state) const;
};

/// sum_i w_i p_M(i_A, i_B) |a^{i_A}_{j_A} b^{i_B}_{j_B}><...| for weights w
/// indexed like a Behavior, kept in factored form. apply() costs O(m^2 d^3)
/// instead of the O(d^4) of a dense product.
class ProjectorSum {
   public:
    ProjectorSum(std::span<const double> weights, const MeasurementSettings &alice, const MeasurementSettings &bob,
                 const SettingsDistribution &settings);

    int local_dim() const noexcept { return d_; }
    void apply(const Eigen::VectorXcd &x, Eigen::VectorXcd &y) const;
    /// Upper bound on the spectral radius.
    double norm_bound() const;
    BellOperator dense() const;

   private:
    int d_;
    int m_;
    std::vector<Eigen::MatrixXcd> alice_rows_;  // basis^H: row j is <a_j|
    std::vector<Eigen::MatrixXcd> bob_rows_;
    std::vector<Eigen::MatrixXd> pair_weights_;  // w * p_M per setting pair, d x d
};

BellOperator weighted_projector_operator(std::span<const double> weights, const MeasurementSettings &alice,
                                         const MeasurementSettings &bob, const SettingsDistribution &settings);

/// Operator whose expectation on a state is sum_i q'_i log2(q_i / p_i), where
/// q' is the behavior that state induces. Throws singular-ratio when any p_i
/// or q_i vanishes.
BellOperator log_ratio_operator(const Behavior &q, const Behavior &p, const MeasurementSettings &alice,
                                const MeasurementSettings &bob);

struct EigenOptions {
    // dense Hermitian solver up to this operator size, power iteration above
    Eigen::Index dense_limit = 4096;
    double residual_tol = 1e-9;
    std::size_t max_iterations = 100'000;
    double degeneracy_gap = 1e-10;
};

struct TopEigenpair {
    PureState vector;
    double value;
    double residual;
    bool degenerate;  // known only on the dense path; power iteration reports false
    std::size_t iterations;
};

TopEigenpair top_eigenpair(const BellOperator &op, const EigenOptions &options = {});

/// Shifted power iteration on an implicit Hermitian operator of size
/// local_dim^2. `shift` must bound the spectral radius so the top eigenvalue
/// becomes dominant in magnitude.
TopEigenpair power_top_eigenpair(int local_dim,
                                 const std::function<void(const Eigen::VectorXcd &, Eigen::VectorXcd &)> &apply,
                                 double shift, const EigenOptions &options = {});

/// Largest b for which every tilted ratio stays positive.
double tilted_b_limit(int d);

/// r_i = a - b c_i / p_M(i) with c the CGLMP coefficients, uniform p_M and
/// a = 1 + b (d - 1), so that max over local behaviors of sum_i r_i p_i is 1.
std::vector<double> tilted_cglmp_ratios(int d, double b);

}  // namespace bellkl
