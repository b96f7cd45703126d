#include "qrelay/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "qrelay/model.hpp"  // next_uniform

namespace qrelay::oracle {

namespace {

constexpr Complex kOne{1.0, 0.0};
constexpr Complex kZero{0.0, 0.0};
constexpr Complex kImag{0.0, 1.0};
const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

void check_unitary2(const Mat2& g) {
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            Complex dot = kZero;
            for (int k = 0; k < 2; ++k) dot += g[i][k] * std::conj(g[j][k]);
            const Complex expected = (i == j) ? kOne : kZero;
            if (std::abs(dot - expected) > kTol) {
                throw std::invalid_argument("gate is not unitary within 1e-12");
            }
        }
    }
}

void check_unitary4(const Mat4& g) {
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            Complex dot = kZero;
            for (int k = 0; k < 4; ++k) dot += g[i][k] * std::conj(g[j][k]);
            const Complex expected = (i == j) ? kOne : kZero;
            if (std::abs(dot - expected) > kTol) {
                throw std::invalid_argument("gate is not unitary within 1e-12");
            }
        }
    }
}

std::size_t bit_mask(const StateVector& state, std::size_t qubit) {
    if (qubit >= state.qubit_count()) {
        throw std::invalid_argument("qubit index out of range");
    }
    return std::size_t{1} << (state.qubit_count() - 1 - qubit);
}

// Projection onto Bell code `outcome` of the ordered pair, without the
// renormalization or the zero-probability error of the public API.
MeasurementRecord project_bell(const StateVector& state, std::size_t first,
                               std::size_t second, int outcome) {
    if (first == second) {
        throw std::invalid_argument("bell_measure needs two distinct qubits");
    }
    if (outcome < 0 || outcome > 3) {
        throw std::invalid_argument("Bell outcome must be in 0..3");
    }
    const std::size_t bf = bit_mask(state, first);
    const std::size_t bs = bit_mask(state, second);
    const int a = outcome >> 1;
    const int b = outcome & 1;
    const double sign = a ? -1.0 : 1.0;

    std::vector<std::size_t> keep;
    for (std::size_t q = 0; q < state.qubit_count(); ++q) {
        if (q != first && q != second) keep.push_back(q);
    }

    MeasurementRecord record;
    record.outcome = outcome;
    record.post.amplitudes.assign(std::size_t{1} << keep.size(), kZero);
    for (std::size_t q : keep) record.post.roles.push_back(state.roles[q]);

    double prob = 0.0;
    for (std::size_t r = 0; r < record.post.amplitudes.size(); ++r) {
        std::size_t base = 0;
        for (std::size_t i = 0; i < keep.size(); ++i) {
            if (r & (std::size_t{1} << (keep.size() - 1 - i))) {
                base |= bit_mask(state, keep[i]);
            }
        }
        const std::size_t i0 = base | (b ? bs : 0);         // first=0, second=b
        const std::size_t i1 = base | bf | (b ? 0 : bs);    // first=1, second=1-b
        const Complex amp =
            (state.amplitudes[i0] + sign * state.amplitudes[i1]) * kInvSqrt2;
        record.post.amplitudes[r] = amp;
        prob += std::norm(amp);
    }
    record.probability = prob;
    return record;
}

void renormalize(MeasurementRecord& record) {
    const double scale = 1.0 / std::sqrt(record.probability);
    for (Complex& amp : record.post.amplitudes) amp *= scale;
}

StateVector two_qubit_state(Role first, Role second, Complex a00, Complex a01,
                            Complex a10, Complex a11) {
    StateVector state;
    state.roles = {first, second};
    state.amplitudes = {a00, a01, a10, a11};
    return state;
}

}  // namespace

std::string to_string(Role role) {
    switch (role) {
        case Role::kPhoton: return "photon";
        case Role::kElectronNext: return "electron_next";
        case Role::kElectronPrev: return "electron_prev";
        case Role::kNuclearPrev: return "nuclear_prev";
        case Role::kPayload: return "payload";
    }
    return "unknown";
}

std::string to_string(Pauli pauli) {
    switch (pauli) {
        case Pauli::kI: return "I";
        case Pauli::kX: return "X";
        case Pauli::kY: return "Y";
        case Pauli::kZ: return "Z";
    }
    return "unknown";
}

double StateVector::norm_squared() const {
    double total = 0.0;
    for (const Complex& amp : amplitudes) total += std::norm(amp);
    return total;
}

StateVector tensor(const StateVector& a, const StateVector& b) {
    StateVector out;
    out.roles = a.roles;
    out.roles.insert(out.roles.end(), b.roles.begin(), b.roles.end());
    out.amplitudes.reserve(a.amplitudes.size() * b.amplitudes.size());
    for (const Complex& high : a.amplitudes) {
        for (const Complex& low : b.amplitudes) {
            out.amplitudes.push_back(high * low);
        }
    }
    return out;
}

double fidelity(const StateVector& a, const StateVector& b) {
    if (a.amplitudes.size() != b.amplitudes.size()) {
        throw std::invalid_argument("fidelity needs equal-sized registers");
    }
    Complex overlap = kZero;
    for (std::size_t i = 0; i < a.amplitudes.size(); ++i) {
        overlap += std::conj(a.amplitudes[i]) * b.amplitudes[i];
    }
    return std::norm(overlap);
}

const Mat2 kPauliI{{{kOne, kZero}, {kZero, kOne}}};
const Mat2 kPauliX{{{kZero, kOne}, {kOne, kZero}}};
const Mat2 kPauliY{{{kZero, -kImag}, {kImag, kZero}}};
const Mat2 kPauliZ{{{kOne, kZero}, {kZero, -kOne}}};
const Mat2 kHadamard{{{Complex{1, 0} * kInvSqrt2, Complex{1, 0} * kInvSqrt2},
                      {Complex{1, 0} * kInvSqrt2, Complex{-1, 0} * kInvSqrt2}}};

const Mat2& pauli_matrix(Pauli pauli) {
    switch (pauli) {
        case Pauli::kX: return kPauliX;
        case Pauli::kY: return kPauliY;
        case Pauli::kZ: return kPauliZ;
        case Pauli::kI: break;
    }
    return kPauliI;
}

void apply_gate(StateVector& state, const Mat2& gate, std::size_t target) {
    check_unitary2(gate);
    const std::size_t bit = bit_mask(state, target);
    for (std::size_t idx = 0; idx < state.amplitudes.size(); ++idx) {
        if (idx & bit) continue;
        const Complex a0 = state.amplitudes[idx];
        const Complex a1 = state.amplitudes[idx | bit];
        state.amplitudes[idx] = gate[0][0] * a0 + gate[0][1] * a1;
        state.amplitudes[idx | bit] = gate[1][0] * a0 + gate[1][1] * a1;
    }
}

void apply_gate(StateVector& state, const Mat4& gate, std::size_t first,
                std::size_t second) {
    check_unitary4(gate);
    if (first == second) {
        throw std::invalid_argument("two-qubit gate needs distinct qubits");
    }
    const std::size_t bf = bit_mask(state, first);
    const std::size_t bs = bit_mask(state, second);
    for (std::size_t idx = 0; idx < state.amplitudes.size(); ++idx) {
        if (idx & (bf | bs)) continue;
        std::array<Complex, 4> in;
        for (int r = 0; r < 4; ++r) {
            in[r] = state.amplitudes[idx | ((r & 2) ? bf : 0) | ((r & 1) ? bs : 0)];
        }
        for (int r = 0; r < 4; ++r) {
            Complex out = kZero;
            for (int k = 0; k < 4; ++k) out += gate[r][k] * in[k];
            state.amplitudes[idx | ((r & 2) ? bf : 0) | ((r & 1) ? bs : 0)] = out;
        }
    }
}

StateVector emission_state() {
    return two_qubit_state(Role::kElectronNext, Role::kPhoton, kZero,
                           kOne * kInvSqrt2, kOne * kInvSqrt2, kZero);
}

StateVector node_prep_state() {
    return two_qubit_state(Role::kElectronPrev, Role::kNuclearPrev,
                           kOne * kInvSqrt2, kZero, kZero, kOne * kInvSqrt2);
}

StateVector phi_plus(Role first, Role second) {
    return two_qubit_state(first, second, kOne * kInvSqrt2, kZero, kZero,
                           kOne * kInvSqrt2);
}

StateVector bloch_state(double theta, double phi) {
    StateVector state;
    state.roles = {Role::kPayload};
    state.amplitudes = {Complex{std::cos(theta / 2.0), 0.0},
                        std::polar(std::sin(theta / 2.0), phi)};
    return state;
}

MeasurementRecord bell_measure(const StateVector& state, std::size_t first,
                               std::size_t second, int forced_outcome) {
    MeasurementRecord record = project_bell(state, first, second, forced_outcome);
    if (record.probability < kTol) {
        throw std::runtime_error("impossible branch: Bell outcome " +
                                 std::to_string(forced_outcome) +
                                 " has zero probability");
    }
    renormalize(record);
    return record;
}

MeasurementRecord bell_measure(const StateVector& state, std::size_t first,
                               std::size_t second, std::mt19937_64& rng) {
    std::array<MeasurementRecord, 4> records;
    for (int outcome = 0; outcome < 4; ++outcome) {
        records[outcome] = project_bell(state, first, second, outcome);
    }
    const double u = next_uniform(rng);
    double cumulative = 0.0;
    int chosen = 0;
    for (int outcome = 0; outcome < 4; ++outcome) {
        cumulative += records[outcome].probability;
        chosen = outcome;
        if (u < cumulative) break;
    }
    // Roundoff near u = 1 must not land on an impossible branch.
    if (records[chosen].probability < kTol) {
        for (int outcome = 0; outcome < 4; ++outcome) {
            if (records[outcome].probability > records[chosen].probability) {
                chosen = outcome;
            }
        }
    }
    MeasurementRecord record = std::move(records[chosen]);
    renormalize(record);
    return record;
}

StateVector link_input_state() {
    return tensor(emission_state(), node_prep_state());
}

namespace {

// Post-measurement link state for one forced branch: qubits
// (electron_next, nuclear_prev), probability attached.
MeasurementRecord link_branch(int outcome) {
    const StateVector input = link_input_state();
    // electron_prev is qubit 2 and photon is qubit 1 of link_input_state.
    return bell_measure(input, 2, 1, outcome);
}

bool corrects_to(const StateVector& branch, Pauli pauli,
                 const StateVector& target, std::size_t target_qubit) {
    StateVector corrected = branch;
    apply_gate(corrected, pauli_matrix(pauli), target_qubit);
    return fidelity(target, corrected) >= 1.0 - kTol;
}

}  // namespace

CorrectionTable derive_correction_table() {
    const StateVector target = phi_plus(Role::kElectronNext, Role::kNuclearPrev);
    CorrectionTable table{};
    for (int outcome = 0; outcome < 4; ++outcome) {
        const MeasurementRecord record = link_branch(outcome);
        bool found = false;
        for (Pauli pauli : {Pauli::kI, Pauli::kX, Pauli::kY, Pauli::kZ}) {
            if (corrects_to(record.post, pauli, target, 1)) {
                table[outcome] = pauli;
                found = true;
                break;
            }
        }
        if (!found) {
            throw std::runtime_error("correction search failed for outcome " +
                                     std::to_string(outcome));
        }
    }
    return table;
}

namespace {

// Teleport branch for a given payload: measure (payload, nuclear_prev)
// against a Phi+ resource on (electron_next, nuclear_prev); post state is the
// single remote qubit electron_next.
MeasurementRecord teleport_branch(const StateVector& payload, int outcome) {
    const StateVector full =
        tensor(payload, phi_plus(Role::kElectronNext, Role::kNuclearPrev));
    return bell_measure(full, 0, 2, outcome);
}

}  // namespace

CorrectionTable derive_teleport_table() {
    // Three payloads whose Bloch vectors span all axes; a Pauli exact on all
    // of them is exact on every payload.
    const double half_pi = std::acos(0.0);
    const std::array<StateVector, 3> references = {
        bloch_state(0.0, 0.0),          // |+1>
        bloch_state(half_pi, 0.0),      // (|+1> + |-1>)/sqrt(2)
        bloch_state(half_pi, half_pi),  // (|+1> + i|-1>)/sqrt(2)
    };
    CorrectionTable table{};
    for (int outcome = 0; outcome < 4; ++outcome) {
        bool found = false;
        for (Pauli pauli : {Pauli::kI, Pauli::kX, Pauli::kY, Pauli::kZ}) {
            bool all = true;
            for (const StateVector& payload : references) {
                if (!corrects_to(teleport_branch(payload, outcome).post, pauli,
                                 payload, 0)) {
                    all = false;
                    break;
                }
            }
            if (all) {
                table[outcome] = pauli;
                found = true;
                break;
            }
        }
        if (!found) {
            throw std::runtime_error("correction search failed for outcome " +
                                     std::to_string(outcome));
        }
    }
    return table;
}

LinkReport link_generation_check() {
    return link_generation_check(derive_correction_table());
}

LinkReport link_generation_check(const CorrectionTable& table) {
    const StateVector target = phi_plus(Role::kElectronNext, Role::kNuclearPrev);
    LinkReport report;
    report.passed = true;
    for (int outcome = 0; outcome < 4; ++outcome) {
        const MeasurementRecord record = link_branch(outcome);
        StateVector corrected = record.post;
        apply_gate(corrected, pauli_matrix(table[outcome]), 1);
        BranchReport& branch = report.branches[outcome];
        branch.outcome = outcome;
        branch.probability = record.probability;
        branch.correction = table[outcome];
        branch.fidelity = fidelity(target, corrected);
        branch.passed = branch.fidelity >= 1.0 - kTol;
        report.probability_sum += record.probability;
        report.passed = report.passed && branch.passed;
    }
    return report;
}

double teleport_check(const StateVector& payload) {
    return teleport_check(payload, derive_teleport_table());
}

double teleport_check(const StateVector& payload, const CorrectionTable& table) {
    if (payload.qubit_count() != 1 ||
        std::abs(payload.norm_squared() - 1.0) > kTol) {
        throw std::invalid_argument("payload must be one normalized qubit");
    }
    double min_fidelity = 1.0;
    for (int outcome = 0; outcome < 4; ++outcome) {
        const MeasurementRecord record = teleport_branch(payload, outcome);
        StateVector corrected = record.post;
        apply_gate(corrected, pauli_matrix(table[outcome]), 0);
        min_fidelity = std::min(min_fidelity, fidelity(payload, corrected));
    }
    return min_fidelity;
}

}  // namespace qrelay::oracle
