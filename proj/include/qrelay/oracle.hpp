#pragma once

// Dense statevector checks for the heralded emission-absorption link and the
// teleportation step it enables. Everything here is a pure function on small
// (<= 5 qubit) states; corrections are derived by exhaustive search, never
// assumed.
//
// Conventions (all correctness claims are relative to these):
//   - qubit 0 is the MOST significant bit of the amplitude index;
//   - basis bit 0 encodes |+1> (photon polarization / electron spin) and
//     |up> (nuclear spin); bit 1 encodes |-1> and |down>;
//   - Bell outcome code c on an ordered pair (first, second), with bits
//     a = c >> 1 and b = c & 1, names the state
//         (|0, b> + (-1)^a |1, 1-b>) / sqrt(2),
//     so c = 0,1,2,3 is Phi+, Psi+, Phi-, Psi-;
//   - the link target is Phi+ on (electron_next, nuclear_prev);
//   - global phase is quotiented out of every fidelity.

#include <array>
#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace qrelay::oracle {

using Complex = std::complex<double>;
using Mat2 = std::array<std::array<Complex, 2>, 2>;
using Mat4 = std::array<std::array<Complex, 4>, 4>;

inline constexpr double kTol = 1e-12;

enum class Role : std::uint8_t {
    kPhoton,
    kElectronNext,
    kElectronPrev,
    kNuclearPrev,
    kPayload,
};

std::string to_string(Role role);

struct StateVector {
    std::vector<Complex> amplitudes;  // length 2^n, index bit 0 = qubit 0 (MSB)
    std::vector<Role> roles;          // one per qubit, in index-bit order

    std::size_t qubit_count() const { return roles.size(); }
    double norm_squared() const;
};

/// Product of two registers; `a`'s qubits become the high bits.
StateVector tensor(const StateVector& a, const StateVector& b);

/// |a . b|^2, global phase quotiented by construction.
double fidelity(const StateVector& a, const StateVector& b);

enum class Pauli : std::uint8_t { kI, kX, kY, kZ };

std::string to_string(Pauli pauli);

extern const Mat2 kPauliI;
extern const Mat2 kPauliX;
extern const Mat2 kPauliY;
extern const Mat2 kPauliZ;
extern const Mat2 kHadamard;

const Mat2& pauli_matrix(Pauli pauli);

/// Applies a single-qubit unitary to `target`; throws std::invalid_argument
/// when the matrix is not unitary within kTol.
void apply_gate(StateVector& state, const Mat2& gate, std::size_t target);

/// Two-qubit version on the ordered pair (first, second); `first` selects the
/// high bit of the 4x4 matrix index.
void apply_gate(StateVector& state, const Mat4& gate, std::size_t first,
                std::size_t second);

/// (|+1,-1> + |-1,+1>)/sqrt(2) on (electron_next, photon).
StateVector emission_state();

/// (|+1,up> + |-1,down>)/sqrt(2) on (electron_prev, nuclear_prev).
StateVector node_prep_state();

/// Phi+ on a given role pair; the link target and the teleport resource.
StateVector phi_plus(Role first, Role second);

/// cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>, a payload qubit.
StateVector bloch_state(double theta, double phi);

struct MeasurementRecord {
    int outcome = 0;         // Bell code of the projected pair
    double probability = 0;  // of this branch on the pre-measurement state
    StateVector post;        // remaining systems, renormalized
};

/// Projects the ordered qubit pair (first, second) onto Bell state
/// `forced_outcome` and removes it from the register. Throws
/// std::runtime_error("impossible branch...") when that outcome has
/// probability < kTol.
MeasurementRecord bell_measure(const StateVector& state, std::size_t first,
                               std::size_t second, int forced_outcome);

/// Samples the outcome from the Born probabilities using one uniform variate.
MeasurementRecord bell_measure(const StateVector& state, std::size_t first,
                               std::size_t second, std::mt19937_64& rng);

/// emission_state tensor node_prep_state, qubit order
/// (electron_next, photon, electron_prev, nuclear_prev).
StateVector link_input_state();

using CorrectionTable = std::array<Pauli, 4>;

/// For each Bell outcome on (electron_prev, photon) of the link input state:
/// the unique Pauli on nuclear_prev that restores Phi+ on
/// (electron_next, nuclear_prev). Throws std::runtime_error("correction
/// search failed...") if any branch has no exact correction.
CorrectionTable derive_correction_table();

/// Pauli on the remote half, per Bell outcome of measuring (payload, local
/// half) against a Phi+ resource. Derived by exhaustive search over three
/// tomographically distinct reference payloads.
CorrectionTable derive_teleport_table();

struct BranchReport {
    int outcome = 0;
    double probability = 0.0;
    Pauli correction = Pauli::kI;
    double fidelity = 0.0;
    bool passed = false;
};

struct LinkReport {
    std::array<BranchReport, 4> branches;
    double probability_sum = 0.0;
    bool passed = false;
};

/// Runs every forced Bell branch of the link and checks the corrected
/// (electron_next, nuclear_prev) state against Phi+. An override table (the
/// fault-injection hook) replaces the derived one.
LinkReport link_generation_check();
LinkReport link_generation_check(const CorrectionTable& table);

/// Teleports the payload over a Phi+ resource through all four forced
/// branches; returns the minimum fidelity of the corrected remote state
/// against the payload.
double teleport_check(const StateVector& payload);
double teleport_check(const StateVector& payload, const CorrectionTable& table);

}  // namespace qrelay::oracle
