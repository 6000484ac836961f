// Discrete repeated-interaction model of the field: one truncated mode per
// time slot. Exact finite-dimensional oracle for the quantum Ito table, the
// nondemolition property and posterior conditioning.

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "qfilter/linalg.hpp"

namespace qfilter {

struct SlotOperators {
    cmat dA;       // lowering x sqrt(dt)
    cmat dA_dag;
    cvec vacuum;   // slot ground state
};

SlotOperators slot_increments(double dt, int slot_dim = 2);

// Max |deviation| of the vacuum expectations of {dA dA+, dA+ dA, dA dA, dA+ dA+}
// from {dt, 0, 0, 0}.
double ito_table_check(double dt, int slot_dim = 2);

struct ToyFockLattice {
    int n_slots = 0;
    double dt = 0.0;
    int slot_dim = 2;
    int system_dim = 2;

    long joint_dim() const {
        long d = system_dim;
        for (int k = 0; k < n_slots; ++k) d *= slot_dim;
        return d;
    }
};

constexpr long kToyFockDimCap = 1 << 14;

// Full joint evolution: slot k unitary U_k = exp{L (x) dA+ - L+ (x) dA - i H dt}.
// Returns the joint state after each slot (n_slots + 1 entries, index 0 = initial).
struct JointHistory {
    ToyFockLattice lattice;
    std::vector<cvec> states;     // joint vectors, ordering system (x) slot1 (x) ...
    std::vector<cmat> slot_unitaries;  // the lifted U_k, joint_dim x joint_dim
};

JointHistory repeated_interaction_evolve(const cmat& H, const cmat& L,
                                         const ToyFockLattice& lattice,
                                         const cvec& initial_system);

// Heisenberg system observable after t slots: U(t)+ (X (x) 1) U(t).
cmat heisenberg_observable(const JointHistory& hist, const cmat& X, int t_slots);

// Output quadrature accumulated over the first s slots, evolved to time s:
// U(s)+ (1 (x) sum_{j<=s} (dA_j + dA_j+)) U(s).
cmat output_observable(const JointHistory& hist, int s_slots);

// Partial trace of the final joint state over the field.
cmat field_traced_density(const JointHistory& hist, int t_slots);

// ---------------------------------------------------------------------------
// conditioning on the slot-quadrature record (outcomes +-sqrt(dt), slot_dim 2)

struct ConditionedTrajectory {
    std::vector<cvec> system_states;  // normalised, n_slots + 1 entries
    std::vector<int> record;          // +-1 per slot
    double probability = 1.0;         // cumulative record probability
};

// Condition slot by slot on the given record of signs (+-1). Measurements are
// projective in the slot quadrature eigenbasis; the collapse commutes with
// later interactions, so only the (system x current slot) factor is kept.
ConditionedTrajectory condition_on_quadrature_record(const cmat& H, const cmat& L, double dt,
                                                     const cvec& initial_system,
                                                     const std::vector<int>& record);

// Sample a record by drawing each outcome from its conditional probability.
ConditionedTrajectory sample_quadrature_record(const cmat& H, const cmat& L, double dt,
                                               int n_slots, const cvec& initial_system,
                                               std::mt19937_64& rng);

// All 2^n records with probabilities and final conditioned states.
struct RecordBranch {
    std::vector<int> record;
    double probability;
    cvec final_state;
};
std::vector<RecordBranch> enumerate_records(const cmat& H, const cmat& L, double dt,
                                            int n_slots, const cvec& initial_system);

}  // namespace qfilter
