#include "qfilter/toyfock.hpp"

#include <cmath>

namespace qfilter {

SlotOperators slot_increments(double dt, int slot_dim) {
    if (dt < 0) throw ConfigError("slot_increments: dt must be >= 0");
    if (slot_dim < 2) throw ConfigError("slot_increments: slot_dim must be >= 2");
    SlotOperators ops;
    ops.dA = cmat::Zero(slot_dim, slot_dim);
    for (int k = 0; k + 1 < slot_dim; ++k)
        ops.dA(k, k + 1) = std::sqrt(dt) * std::sqrt(static_cast<double>(k + 1));
    ops.dA_dag = ops.dA.adjoint();
    ops.vacuum = cvec::Zero(slot_dim);
    ops.vacuum(0) = 1.0;
    return ops;
}

double ito_table_check(double dt, int slot_dim) {
    SlotOperators s = slot_increments(dt, slot_dim);
    auto vac_exp = [&](const cmat& op) { return (s.vacuum.adjoint() * op * s.vacuum)(0, 0); };
    double dev = 0;
    dev = std::max(dev, std::abs(vac_exp(s.dA * s.dA_dag) - dt));
    dev = std::max(dev, std::abs(vac_exp(s.dA_dag * s.dA)));
    dev = std::max(dev, std::abs(vac_exp(s.dA * s.dA)));
    dev = std::max(dev, std::abs(vac_exp(s.dA_dag * s.dA_dag)));
    return dev;
}

namespace {

long pow_long(int base, int exp) {
    long v = 1;
    for (int i = 0; i < exp; ++i) v *= base;
    return v;
}

// Embed a (system x single-slot) operator into the joint space.
cmat lift_two_site(const cmat& u2, const ToyFockLattice& lat, int slot /*1-based*/) {
    const int d = lat.slot_dim;
    const long dim = lat.joint_dim();
    const long stride_sys = pow_long(d, lat.n_slots);
    const long stride_slot = pow_long(d, lat.n_slots - slot);
    cmat u = cmat::Zero(dim, dim);
    for (long a = 0; a < dim; ++a) {
        long is = a / stride_sys;
        long ik = (a / stride_slot) % d;
        long rest = a - is * stride_sys - ik * stride_slot;
        for (int js = 0; js < lat.system_dim; ++js)
            for (int jk = 0; jk < d; ++jk) {
                long b = rest + js * stride_sys + jk * stride_slot;
                cplx v = u2(js * d + jk, is * d + ik);
                if (v != cplx(0, 0)) u(b, a) = v;
            }
    }
    return u;
}

// Embed a single-slot operator (identity elsewhere).
cmat lift_slot_op(const cmat& op, const ToyFockLattice& lat, int slot /*1-based*/) {
    const int d = lat.slot_dim;
    const long dim = lat.joint_dim();
    const long stride_slot = pow_long(d, lat.n_slots - slot);
    cmat out = cmat::Zero(dim, dim);
    for (long a = 0; a < dim; ++a) {
        long ik = (a / stride_slot) % d;
        for (int jk = 0; jk < d; ++jk) {
            cplx v = op(jk, ik);
            if (v != cplx(0, 0)) out(a + (jk - ik) * stride_slot, a) = v;
        }
    }
    return out;
}

cmat two_site_unitary(const cmat& H, const cmat& L, double dt, int slot_dim) {
    SlotOperators s = slot_increments(dt, slot_dim);
    cmat id_slot = cmat::Identity(slot_dim, slot_dim);
    cmat gen = kron(L, s.dA_dag) - kron(L.adjoint(), s.dA) - cplx(0, dt) * kron(H, id_slot);
    cmat u = expm(gen);
    if (unitarity_residual(u) > 1e-12 * u.rows())
        throw NumericError("repeated_interaction_evolve: slot propagator not unitary");
    return u;
}

}  // namespace

JointHistory repeated_interaction_evolve(const cmat& H, const cmat& L,
                                         const ToyFockLattice& lattice,
                                         const cvec& initial_system) {
    if (lattice.joint_dim() > kToyFockDimCap)
        throw ConfigError("repeated_interaction_evolve: joint dimension exceeds cap");
    if (initial_system.size() != lattice.system_dim)
        throw ConfigError("repeated_interaction_evolve: system state dimension mismatch");

    JointHistory hist;
    hist.lattice = lattice;

    SlotOperators s = slot_increments(lattice.dt, lattice.slot_dim);
    cvec joint = initial_system;
    for (int k = 0; k < lattice.n_slots; ++k) {
        cvec next(joint.size() * lattice.slot_dim);
        for (long i = 0; i < joint.size(); ++i)
            for (int j = 0; j < lattice.slot_dim; ++j)
                next(i * lattice.slot_dim + j) = joint(i) * s.vacuum(j);
        joint = next;
    }
    hist.states.push_back(joint);

    cmat u2 = two_site_unitary(H, L, lattice.dt, lattice.slot_dim);
    for (int k = 1; k <= lattice.n_slots; ++k) {
        cmat u = lift_two_site(u2, lattice, k);
        joint = u * joint;
        hist.slot_unitaries.push_back(std::move(u));
        hist.states.push_back(joint);
    }
    return hist;
}

namespace {
cmat cumulative_unitary(const JointHistory& hist, int t_slots) {
    const long dim = hist.lattice.joint_dim();
    cmat u = cmat::Identity(dim, dim);
    for (int k = 0; k < t_slots; ++k) u = hist.slot_unitaries[k] * u;
    return u;
}
}  // namespace

cmat heisenberg_observable(const JointHistory& hist, const cmat& X, int t_slots) {
    const ToyFockLattice& lat = hist.lattice;
    cmat field_id = cmat::Identity(lat.joint_dim() / lat.system_dim,
                                   lat.joint_dim() / lat.system_dim);
    cmat lifted = kron(X, field_id);
    cmat u = cumulative_unitary(hist, t_slots);
    return u.adjoint() * lifted * u;
}

cmat output_observable(const JointHistory& hist, int s_slots) {
    const ToyFockLattice& lat = hist.lattice;
    SlotOperators s = slot_increments(lat.dt, lat.slot_dim);
    cmat quad = s.dA + s.dA_dag;
    cmat acc = cmat::Zero(lat.joint_dim(), lat.joint_dim());
    for (int j = 1; j <= s_slots; ++j) acc += lift_slot_op(quad, lat, j);
    cmat u = cumulative_unitary(hist, s_slots);
    return u.adjoint() * acc * u;
}

cmat field_traced_density(const JointHistory& hist, int t_slots) {
    const ToyFockLattice& lat = hist.lattice;
    const long field_dim = lat.joint_dim() / lat.system_dim;
    const cvec& psi = hist.states[t_slots];
    cmat rho = cmat::Zero(lat.system_dim, lat.system_dim);
    for (int i = 0; i < lat.system_dim; ++i)
        for (int j = 0; j < lat.system_dim; ++j) {
            cplx acc = 0;
            for (long f = 0; f < field_dim; ++f)
                acc += psi(i * field_dim + f) * std::conj(psi(j * field_dim + f));
            rho(i, j) = acc;
        }
    return rho;
}

namespace {

struct SlotStepper {
    cmat u2;
    int sys_dim;
    int slot_dim;

    // apply u2 to psi (x) vacuum and project the slot onto (|0> + s|1>)/sqrt(2)
    cvec branch(const cvec& psi, int sign) const {
        cvec joint = cvec::Zero(psi.size() * slot_dim);
        for (long i = 0; i < psi.size(); ++i) joint(i * slot_dim + 0) = psi(i);
        joint = u2 * joint;
        const double r = 1.0 / std::sqrt(2.0);
        cvec out(psi.size());
        for (long i = 0; i < psi.size(); ++i)
            out(i) = r * (joint(i * slot_dim + 0) + double(sign) * joint(i * slot_dim + 1));
        return out;
    }
};

}  // namespace

ConditionedTrajectory condition_on_quadrature_record(const cmat& H, const cmat& L, double dt,
                                                     const cvec& initial_system,
                                                     const std::vector<int>& record) {
    SlotStepper st{two_site_unitary(H, L, dt, 2), static_cast<int>(initial_system.size()), 2};
    ConditionedTrajectory traj;
    traj.record = record;
    cvec psi = initial_system / initial_system.norm();
    traj.system_states.push_back(psi);
    for (size_t k = 0; k < record.size(); ++k) {
        cvec next = st.branch(psi, record[k]);
        double p = next.squaredNorm();
        if (p < 1e-300)
            throw NumericError("condition_on_quadrature_record: zero-probability branch at slot " +
                               std::to_string(k));
        traj.probability *= p;
        psi = next / std::sqrt(p);
        traj.system_states.push_back(psi);
    }
    return traj;
}

ConditionedTrajectory sample_quadrature_record(const cmat& H, const cmat& L, double dt,
                                               int n_slots, const cvec& initial_system,
                                               std::mt19937_64& rng) {
    SlotStepper st{two_site_unitary(H, L, dt, 2), static_cast<int>(initial_system.size()), 2};
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    ConditionedTrajectory traj;
    cvec psi = initial_system / initial_system.norm();
    traj.system_states.push_back(psi);
    for (int k = 0; k < n_slots; ++k) {
        cvec plus = st.branch(psi, +1);
        double p_plus = plus.squaredNorm();
        int sign = (unif(rng) < p_plus) ? +1 : -1;
        cvec next = (sign > 0) ? std::move(plus) : st.branch(psi, -1);
        double p = (sign > 0) ? p_plus : next.squaredNorm();
        traj.record.push_back(sign);
        traj.probability *= p;
        psi = next / std::sqrt(p);
        traj.system_states.push_back(psi);
    }
    return traj;
}

std::vector<RecordBranch> enumerate_records(const cmat& H, const cmat& L, double dt,
                                            int n_slots, const cvec& initial_system) {
    if (n_slots > 20) throw ConfigError("enumerate_records: too many slots");
    std::vector<RecordBranch> out;
    out.reserve(1u << n_slots);
    for (unsigned long bits = 0; bits < (1ul << n_slots); ++bits) {
        std::vector<int> record(n_slots);
        for (int k = 0; k < n_slots; ++k) record[k] = (bits >> k) & 1 ? +1 : -1;
        ConditionedTrajectory traj = condition_on_quadrature_record(H, L, dt, initial_system, record);
        out.push_back({record, traj.probability, traj.system_states.back()});
    }
    return out;
}

}  // namespace qfilter
