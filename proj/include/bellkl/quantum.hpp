#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace bellkl {

using Complex = std::complex<double>;

inline constexpr double schmidt_norm_tol = 1e-12;
inline constexpr double unitarity_tol = 1e-10;
inline constexpr double behavior_tol = 1e-10;

enum class Party { alice, bob };

/// Bipartite pure state sum_i c_i |ii> written by its nonnegative Schmidt
/// coefficients in the computational basis. Coefficient order is significant:
/// position i pairs with basis vectors |i>_A |i>_B.
class SchmidtState {
   public:
    static SchmidtState from_coefficients(std::vector<double> coeffs);

    int dim() const noexcept { return static_cast<int>(coeffs_.size()); }
    std::span<const double> coefficients() const noexcept { return coeffs_; }
    double coefficient(int i) const { return coeffs_.at(static_cast<std::size_t>(i)); }
    std::vector<double> squared() const;
    SchmidtState sorted_descending() const;

   private:
    explicit SchmidtState(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {}
    std::vector<double> coeffs_;
};

/// Pure state on C^d (x) C^d. Amplitude (i, j) lives at index i * d + j.
class PureState {
   public:
    static PureState from_amplitudes(int dim, Eigen::VectorXcd amplitudes);
    static PureState from_schmidt(const SchmidtState &state);

    int dim() const noexcept { return dim_; }
    const Eigen::VectorXcd &amplitudes() const noexcept { return amps_; }
    Complex amplitude(int i, int j) const { return amps_(i * dim_ + j); }
    /// d x d matrix with rows indexed by Alice, columns by Bob.
    Eigen::MatrixXcd amplitude_matrix() const;
    PureState with_global_phase(double phase) const;

   private:
    PureState(int dim, Eigen::VectorXcd amps) : dim_(dim), amps_(std::move(amps)) {}
    int dim_;
    Eigen::VectorXcd amps_;
};

/// A family of projective d-outcome measurements for one party. Column j of
/// basis(a) is the eigenvector for outcome j of setting a.
class MeasurementSettings {
   public:
    static MeasurementSettings from_bases(int dim, std::vector<Eigen::MatrixXcd> bases);

    int dim() const noexcept { return dim_; }
    int num_settings() const noexcept { return static_cast<int>(bases_.size()); }
    int num_outcomes() const noexcept { return dim_; }
    const Eigen::MatrixXcd &basis(int setting) const { return bases_.at(static_cast<std::size_t>(setting)); }

   private:
    MeasurementSettings(int dim, std::vector<Eigen::MatrixXcd> bases) : dim_(dim), bases_(std::move(bases)) {}
    int dim_;
    std::vector<Eigen::MatrixXcd> bases_;
};

/// Joint distribution p_M(i_A, i_B) over setting pairs, stored row-major.
class SettingsDistribution {
   public:
    static SettingsDistribution uniform(int m);
    static SettingsDistribution from_probs(int m, std::vector<double> probs);

    int num_settings() const noexcept { return m_; }
    double operator()(int ia, int ib) const { return probs_[static_cast<std::size_t>(ia * m_ + ib)]; }
    std::span<const double> probs() const noexcept { return probs_; }

   private:
    SettingsDistribution(int m, std::vector<double> probs) : m_(m), probs_(std::move(probs)) {}
    int m_;
    std::vector<double> probs_;
};

/// Joint probabilities q(i_A, i_B, j_A, j_B) with the settings distribution
/// folded in. Flat index is ((i_A * m + i_B) * n + j_A) * n + j_B.
class Behavior {
   public:
    static Behavior from_probs(int m, int n, std::vector<double> probs, SettingsDistribution settings,
                               double tol = behavior_tol);

    int num_settings() const noexcept { return m_; }
    int num_outcomes() const noexcept { return n_; }
    std::size_t size() const noexcept { return probs_.size(); }
    std::size_t index(int ia, int ib, int ja, int jb) const noexcept {
        return static_cast<std::size_t>(((ia * m_ + ib) * n_ + ja) * n_ + jb);
    }
    double operator[](std::size_t i) const { return probs_[i]; }
    double at(int ia, int ib, int ja, int jb) const { return probs_[index(ia, ib, ja, jb)]; }
    /// p(j_A, j_B | i_A, i_B); zero when the setting pair never occurs.
    double conditional(int ia, int ib, int ja, int jb) const;
    std::span<const double> probs() const noexcept { return probs_; }
    const SettingsDistribution &settings() const noexcept { return settings_; }

   private:
    Behavior(int m, int n, std::vector<double> probs, SettingsDistribution settings)
        : m_(m), n_(n), probs_(std::move(probs)), settings_(std::move(settings)) {}
    int m_;
    int n_;
    std::vector<double> probs_;
    SettingsDistribution settings_;
};

/// Largest deviation of any party's conditional marginal across the other
/// party's setting choices. Setting pairs with zero probability are skipped.
double no_signaling_violation(const Behavior &behavior);
bool is_no_signaling(const Behavior &behavior, double tol = behavior_tol);

SchmidtState maximally_entangled(int d);

/// Qutrit state gamma |00> + sqrt(1 - 2 gamma^2) |11> + gamma |22>. The
/// unequal coefficient sits on |11> so that the pattern is aligned with the
/// phase/Fourier labeling of cglmp_measurements; sorted descending it reads
/// (gamma, gamma, sqrt(1 - 2 gamma^2)) for gamma >= 1/sqrt(3).
SchmidtState three_level_state(double gamma);

/// Inverse of three_level_state up to ordering: the mean of the two closest
/// coefficients of a qutrit Schmidt state.
double three_level_parameter(const SchmidtState &state);

/// Two-setting measurements built from diagonal phases followed by the
/// discrete Fourier transform (Alice) or its complex conjugate (Bob), with
/// (U_FT)_{jk} = exp(2 pi i j k / d) / sqrt(d).
MeasurementSettings cglmp_measurements(int d, Party party);

Behavior quantum_behavior(const PureState &state, const MeasurementSettings &alice,
                          const MeasurementSettings &bob, const SettingsDistribution &settings);
Behavior quantum_behavior(const SchmidtState &state, const MeasurementSettings &alice,
                          const MeasurementSettings &bob, const SettingsDistribution &settings);

struct SchmidtDecomposition {
    SchmidtState coefficients;  // descending
    Eigen::MatrixXcd basis_a;   // column k pairs with coefficient k
    Eigen::MatrixXcd basis_b;
};

SchmidtDecomposition schmidt_decompose(const PureState &state);

/// Entropy of the reduced state in bits.
double entropy_of_entanglement(const SchmidtState &state);

struct TensorCopies {
    SchmidtState state;
    MeasurementSettings alice;
    MeasurementSettings bob;
};

inline constexpr int default_tensor_dim_cap = 4096;

/// k independent copies regrouped as a single d^k x d^k test. Combined setting
/// and outcome labels put the first copy in the most significant digit.
TensorCopies tensor_copies(const SchmidtState &state, const MeasurementSettings &alice,
                           const MeasurementSettings &bob, int k, int dim_cap = default_tensor_dim_cap);

/// Joint behavior of k independent runs, labeled like tensor_copies.
Behavior product_behavior(const Behavior &behavior, int copies);

}  // namespace bellkl
