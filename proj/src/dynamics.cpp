#include "mist/dynamics.hpp"

#include <cblas.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <thread>

#include "mist/metrics.hpp"

namespace mist::dynamics {

namespace {

using Complex = std::complex<double>;

// ---------------------------------------------------------------------------
// CSR matrix over complex entries; built by thresholding a dense operator.

struct SparseZ {
    int n = 0;
    bool dense = false;
    Matrix dense_m;  // used when thresholding is disabled
    std::vector<int> row_ptr, col;
    std::vector<Complex> val;

    static SparseZ build(const Matrix& m, double rel_threshold) {
        SparseZ s;
        s.n = static_cast<int>(m.rows());
        if (rel_threshold <= 0.0) {
            s.dense = true;
            s.dense_m = m;
            return s;
        }
        const double cut = rel_threshold * m.cwiseAbs().maxCoeff();
        s.row_ptr.assign(s.n + 1, 0);
        for (int i = 0; i < s.n; ++i) {
            for (int j = 0; j < s.n; ++j) {
                if (std::abs(m(i, j)) > cut) {
                    s.col.push_back(j);
                    s.val.push_back(m(i, j));
                }
            }
            s.row_ptr[i + 1] = static_cast<int>(s.col.size());
        }
        return s;
    }

    void apply(const CVector& x, CVector& y) const {
        if (dense) {
            const Complex one(1.0, 0.0), zero(0.0, 0.0);
            cblas_zgemv(CblasColMajor, CblasNoTrans, n, n, &one, dense_m.data(), n, x.data(), 1,
                        &zero, y.data(), 1);
            return;
        }
        for (int i = 0; i < n; ++i) {
            Complex acc(0.0, 0.0);
            for (int p = row_ptr[i]; p < row_ptr[i + 1]; ++p) acc += val[p] * x(col[p]);
            y(i) = acc;
        }
    }

    double fill() const {
        return dense ? 1.0
                     : static_cast<double>(val.size()) / (static_cast<double>(n) * n);
    }
};

// ---------------------------------------------------------------------------
// Right-hand side in the diagonal interaction picture:
//   c' = -i f(t) Φ†(t) D Φ(t) c  -  (κ/2) Φ†(t) N Φ(t) c,   Φ(t) = e^{-iEt}.

struct Rhs {
    const Vector* energies;
    const SparseZ* drive_op;
    const SparseZ* number_op;  // nullptr when κ = 0
    double kappa = 0.0;
    double eps = 0.0;
    double t_raise = 20.0;
    double omega_drive = 0.0;
    mutable CVector phase, tmp, v;
    mutable long n_evals = 0;

    void init(int dim) const {
        phase.resize(dim);
        tmp.resize(dim);
        v.resize(dim);
    }

    double f(double t) const {
        return 2.0 * circuits::drive_envelope(t, eps, t_raise) * std::cos(omega_drive * t);
    }

    void operator()(double t, const CVector& c, CVector& out) const {
        ++n_evals;
        const int dim = static_cast<int>(c.size());
        for (int j = 0; j < dim; ++j) phase(j) = std::polar(1.0, -(*energies)(j)*t);
        tmp.array() = phase.array() * c.array();
        drive_op->apply(tmp, v);
        const Complex pref(0.0, -f(t));
        out.array() = pref * phase.array().conjugate() * v.array();
        if (number_op) {
            number_op->apply(tmp, v);
            out.array() += (-0.5 * kappa) * phase.array().conjugate() * v.array();
        }
    }
};

// ---------------------------------------------------------------------------
// Dormand–Prince 5(4) with FSAL and a simple step controller.

struct Dopri5 {
    double rtol, atol, max_dt;
    double h;
    long n_accepted = 0, n_rejected = 0;

    CVector k1, k2, k3, k4, k5, k6, k7, y5, y4, ytmp;
    bool have_k1 = false;

    void init(int dim, double h0) {
        for (CVector* v : {&k1, &k2, &k3, &k4, &k5, &k6, &k7, &y5, &y4, &ytmp}) v->resize(dim);
        h = h0;
        have_k1 = false;
    }

    // One accepted step from (t, y); returns the step size actually taken.
    double step(const Rhs& rhs, double& t, CVector& y, double t_limit) {
        while (true) {
            double hs = std::min({h, max_dt, t_limit - t});
            if (hs <= 0.0) return 0.0;
            if (!have_k1) {
                rhs(t, y, k1);
                have_k1 = true;
            }
            ytmp = y + hs * (1.0 / 5.0) * k1;
            rhs(t + hs / 5.0, ytmp, k2);
            ytmp = y + hs * ((3.0 / 40.0) * k1 + (9.0 / 40.0) * k2);
            rhs(t + 3.0 * hs / 10.0, ytmp, k3);
            ytmp = y + hs * ((44.0 / 45.0) * k1 - (56.0 / 15.0) * k2 + (32.0 / 9.0) * k3);
            rhs(t + 4.0 * hs / 5.0, ytmp, k4);
            ytmp = y + hs * ((19372.0 / 6561.0) * k1 - (25360.0 / 2187.0) * k2 +
                             (64448.0 / 6561.0) * k3 - (212.0 / 729.0) * k4);
            rhs(t + 8.0 * hs / 9.0, ytmp, k5);
            ytmp = y + hs * ((9017.0 / 3168.0) * k1 - (355.0 / 33.0) * k2 +
                             (46732.0 / 5247.0) * k3 + (49.0 / 176.0) * k4 -
                             (5103.0 / 18656.0) * k5);
            rhs(t + hs, ytmp, k6);
            y5 = y + hs * ((35.0 / 384.0) * k1 + (500.0 / 1113.0) * k3 + (125.0 / 192.0) * k4 -
                           (2187.0 / 6784.0) * k5 + (11.0 / 84.0) * k6);
            rhs(t + hs, y5, k7);
            y4 = y + hs * ((5179.0 / 57600.0) * k1 + (7571.0 / 16695.0) * k3 +
                           (393.0 / 640.0) * k4 - (92097.0 / 339200.0) * k5 +
                           (187.0 / 2100.0) * k6 + (1.0 / 40.0) * k7);

            double err2 = 0.0;
            const int dim = static_cast<int>(y.size());
            for (int i = 0; i < dim; ++i) {
                const double sc = atol + rtol * std::max(std::abs(y(i)), std::abs(y5(i)));
                const double e = std::abs(y5(i) - y4(i)) / sc;
                err2 += e * e;
            }
            const double err = std::sqrt(err2 / dim);
            if (err <= 1.0) {
                t += hs;
                y.swap(y5);
                k1.swap(k7);  // FSAL
                ++n_accepted;
                const double grow = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
                h = hs * std::clamp(grow, 0.2, 5.0);
                return hs;
            }
            ++n_rejected;
            have_k1 = true;  // k1 still valid at (t, y)
            h = hs * std::clamp(0.9 * std::pow(err, -0.2), 0.2, 1.0);
            if (h < 1e-12) {
                throw Error("dopri5: step size underflow at t = " + std::to_string(t) +
                            " ns (err = " + std::to_string(err) + ")");
            }
        }
    }
};

// Fixed-step RK4 used only to locate jump times inside one accepted step.
void rk4_to(const Rhs& rhs, double t0, const CVector& y0, double dt_total, int substeps,
            CVector& out) {
    out = y0;
    CVector k1(y0.size()), k2(y0.size()), k3(y0.size()), k4(y0.size()), tmp(y0.size());
    const double h = dt_total / substeps;
    double t = t0;
    for (int s = 0; s < substeps; ++s) {
        rhs(t, out, k1);
        tmp = out + 0.5 * h * k1;
        rhs(t + 0.5 * h, tmp, k2);
        tmp = out + 0.5 * h * k2;
        rhs(t + 0.5 * h, tmp, k3);
        tmp = out + h * k3;
        rhs(t + h, tmp, k4);
        out += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        t += h;
    }
}

// splitmix64 stream; bit-stable across platforms.
struct Rng {
    std::uint64_t state;
    explicit Rng(std::uint64_t seed) : state(seed) {}
    std::uint64_t next_u64() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
};

// Neumaier-compensated accumulator.
struct Kahan {
    double sum = 0.0, comp = 0.0;
    void add(double v) {
        const double t = sum + v;
        comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + comp; }
};

struct Workspace {
    const circuits::SystemModel* model;
    const dasi::DressedLadder* ladder;
    SparseZ drive_op, number_op, lower_op;
    std::vector<double> bare_photon;  // n of each bare flat index
    std::vector<char> bare_guard;     // guard-band flag per bare flat index
    CVector psi_bare, phased;
};

Workspace make_workspace(const circuits::SystemModel& model, const dasi::DressedLadder& ladder,
                         bool with_collapse, double sparse_threshold) {
    Workspace ws;
    ws.model = &model;
    ws.ladder = &ladder;
    const int dim = model.dim();
    const int dim_q = model.dim_q, dim_r = model.dim_r;
    const Matrix& w = ladder.vectors;

    auto to_dressed = [&](const Matrix& op) {
        const Complex one(1.0, 0.0), zero(0.0, 0.0);
        Matrix t1(dim, dim), t2(dim, dim);
        cblas_zgemm(CblasColMajor, CblasConjTrans, CblasNoTrans, dim, dim, dim, &one, w.data(),
                    dim, op.data(), dim, &zero, t1.data(), dim);
        cblas_zgemm(CblasColMajor, CblasNoTrans, CblasNoTrans, dim, dim, dim, &one, t1.data(),
                    dim, w.data(), dim, &zero, t2.data(), dim);
        return t2;
    };

    ws.drive_op = SparseZ::build(to_dressed(model.d_op), sparse_threshold);

    auto [a, a_dag] = qops::ladder_ops(dim_r);
    const Matrix iq = Matrix::Identity(dim_q, dim_q);
    if (with_collapse) {
        ws.number_op = SparseZ::build(to_dressed(qops::tensor_embed(iq, a_dag * a)),
                                      sparse_threshold);
        ws.lower_op = SparseZ::build(to_dressed(qops::tensor_embed(iq, a)), sparse_threshold);
    }

    const int ir = qops::interior_resonator_levels(dim_r);
    const int iqb = qops::interior_qubit_levels(dim_q);
    ws.bare_photon.resize(dim);
    ws.bare_guard.resize(dim);
    for (int k = 0; k < dim_q; ++k) {
        for (int n = 0; n < dim_r; ++n) {
            ws.bare_photon[k * dim_r + n] = n;
            ws.bare_guard[k * dim_r + n] = (n >= ir || k >= iqb) ? 1 : 0;
        }
    }
    ws.psi_bare.resize(dim);
    ws.phased.resize(dim);
    return ws;
}

struct SampleValues {
    double photon, purity_error, n_q, guard, norm;
    std::vector<double> p_dressed, p_bare;
    Matrix rho_q;
};

SampleValues measure(Workspace& ws, const CVector& c, double t,
                     const std::vector<int>& tracked) {
    const auto& ladder = *ws.ladder;
    const int dim = static_cast<int>(c.size());
    const int dim_q = ws.model->dim_q, dim_r = ws.model->dim_r;

    for (int j = 0; j < dim; ++j) {
        ws.phased(j) = std::polar(1.0, -ladder.energies(j) * t) * c(j);
    }
    const Complex one(1.0, 0.0), zero(0.0, 0.0);
    cblas_zgemv(CblasColMajor, CblasNoTrans, dim, dim, &one, ladder.vectors.data(), dim,
                ws.phased.data(), 1, &zero, ws.psi_bare.data(), 1);

    SampleValues sv;
    const double norm2 = ws.psi_bare.squaredNorm();
    sv.norm = std::sqrt(norm2);

    double photon = 0.0, guard = 0.0;
    for (int i = 0; i < dim; ++i) {
        const double w = std::norm(ws.psi_bare(i));
        photon += ws.bare_photon[i] * w;
        if (ws.bare_guard[i]) guard += w;
    }
    sv.photon = photon / norm2;
    sv.guard = guard / norm2;

    sv.rho_q = metrics::reduced_qubit_dm(CVector(ws.psi_bare / sv.norm), dim_q, dim_r);
    sv.purity_error = 1.0 - metrics::purity(sv.rho_q);
    sv.n_q = metrics::qubit_occupation(sv.rho_q);

    const int ir = qops::interior_resonator_levels(dim_r);
    sv.p_dressed.reserve(tracked.size());
    sv.p_bare.reserve(tracked.size());
    for (int k : tracked) {
        double pd = 0.0;
        for (int n = 0; n < ir; ++n) pd += std::norm(ws.phased(ladder.index_of(k, n)));
        sv.p_dressed.push_back(pd / norm2);
        double pb = 0.0;
        for (int n = 0; n < ir; ++n) pb += std::norm(ws.psi_bare(k * dim_r + n));
        sv.p_bare.push_back(pb / norm2);
    }
    return sv;
}

std::vector<double> sample_grid(const DriveSpec& drive) {
    std::vector<double> ts;
    const int n = static_cast<int>(std::floor(drive.t_final / drive.sample_dt + 1e-9));
    ts.reserve(n + 1);
    for (int s = 0; s <= n; ++s) ts.push_back(s * drive.sample_dt);
    return ts;
}

void validate(const DriveSpec& drive, const dasi::DressedLadder& ladder,
              std::pair<int, int> initial) {
    if (!(drive.t_raise > 0.0)) throw ParameterError("evolve: t_raise must be positive");
    if (drive.t_final < drive.t_raise) throw ParameterError("evolve: t_final < t_raise");
    if (!(drive.sample_dt > 0.0)) throw ParameterError("evolve: sample_dt must be positive");
    if (drive.eps != 0.0 && !(drive.omega_drive > 0.0)) {
        throw ParameterError("evolve: omega_drive must be positive");
    }
    ladder.index_of(initial.first, initial.second);  // range check
}

}  // namespace

double dressed_resonator_freq(const dasi::DressedLadder& ladder, int k) {
    return ladder.energy(k, 1) - ladder.energy(k, 0);
}

io::CsvTable TimeSeries::to_csv() const {
    io::CsvTable t;
    t.header = {"t_ns", "photon", "purity_error", "n_q", "guard_mass"};
    t.columns = {times, photon, purity_error, n_q, guard_mass};
    for (const auto& [k, col] : p_dressed) {
        t.header.push_back("p_dressed_" + std::to_string(k));
        t.columns.push_back(col);
    }
    for (const auto& [k, col] : p_bare) {
        t.header.push_back("p_bare_" + std::to_string(k));
        t.columns.push_back(col);
    }
    return t;
}

TimeSeries evolve_coherent(const circuits::SystemModel& model, const dasi::DressedLadder& ladder,
                           const DriveSpec& drive, std::pair<int, int> initial,
                           const std::set<int>& tracked_branches, const EvolveOptions& options) {
    validate(drive, ladder, initial);
    Workspace ws = make_workspace(model, ladder, false, options.sparse_threshold);
    const std::vector<int> tracked(tracked_branches.begin(), tracked_branches.end());

    Rhs rhs;
    rhs.energies = &ladder.energies;
    rhs.drive_op = &ws.drive_op;
    rhs.number_op = nullptr;
    rhs.eps = drive.eps;
    rhs.t_raise = drive.t_raise;
    rhs.omega_drive = drive.omega_drive;
    rhs.init(model.dim());

    Dopri5 stepper;
    stepper.rtol = options.rtol;
    stepper.atol = options.atol;
    stepper.max_dt = options.max_dt;
    stepper.init(model.dim(), options.initial_dt);

    CVector c = CVector::Zero(model.dim());
    c(ladder.index_of(initial.first, initial.second)) = 1.0;

    TimeSeries out;
    out.initial_k = initial.first;
    for (int k : tracked) {
        out.p_dressed[k] = {};
        out.p_bare[k] = {};
    }

    double t = 0.0;
    const std::vector<double> grid = sample_grid(drive);
    for (double ts : grid) {
        while (t < ts) {
            if (stepper.step(rhs, t, c, ts) == 0.0) break;
        }
        SampleValues sv = measure(ws, c, t, tracked);
        out.times.push_back(t);
        out.photon.push_back(sv.photon);
        out.purity_error.push_back(sv.purity_error);
        out.n_q.push_back(sv.n_q);
        out.guard_mass.push_back(sv.guard);
        for (std::size_t i = 0; i < tracked.size(); ++i) {
            out.p_dressed[tracked[i]].push_back(sv.p_dressed[i]);
            out.p_bare[tracked[i]].push_back(sv.p_bare[i]);
        }
        out.norm_drift = std::max(out.norm_drift, std::abs(sv.norm - 1.0));
        if (sv.guard > options.guard_threshold) {
            throw TruncationOverflow("evolve_coherent: guard-band occupancy " +
                                         std::to_string(sv.guard) + " at t = " +
                                         std::to_string(t) + " ns; enlarge the truncation",
                                     t, sv.guard);
        }
        if (sv.photon >= options.photon_ceiling) break;
    }

    out.diagnostics = {{"n_accepted", stepper.n_accepted},
                       {"n_rejected", stepper.n_rejected},
                       {"n_rhs_evals", rhs.n_evals},
                       {"drive_op_fill", ws.drive_op.fill()},
                       {"final_dt", stepper.h}};
    return out;
}

namespace {

struct TrajectoryResult {
    std::vector<SampleValues> samples;
    std::vector<Matrix> stored_rho;
    long jumps = 0;
    long n_accepted = 0, n_rejected = 0, n_rhs = 0;
};

TrajectoryResult run_trajectory(const circuits::SystemModel& model,
                                const dasi::DressedLadder& ladder, const DriveSpec& drive,
                                std::pair<int, int> initial, double kappa,
                                std::uint64_t traj_seed, const std::vector<int>& tracked,
                                const EvolveOptions& options, Workspace& ws,
                                const std::vector<double>& grid) {
    Rhs rhs;
    rhs.energies = &ladder.energies;
    rhs.drive_op = &ws.drive_op;
    rhs.number_op = kappa > 0.0 ? &ws.number_op : nullptr;
    rhs.kappa = kappa;
    rhs.eps = drive.eps;
    rhs.t_raise = drive.t_raise;
    rhs.omega_drive = drive.omega_drive;
    rhs.init(model.dim());

    Dopri5 stepper;
    stepper.rtol = options.rtol;
    stepper.atol = options.atol;
    stepper.max_dt = options.max_dt;
    stepper.init(model.dim(), options.initial_dt);

    CVector c = CVector::Zero(model.dim());
    c(ladder.index_of(initial.first, initial.second)) = 1.0;

    Rng rng(traj_seed);
    double jump_level = kappa > 0.0 ? std::max(rng.uniform(), 1e-300) : -1.0;

    TrajectoryResult res;
    res.samples.reserve(grid.size());

    CVector c_prev(c.size()), c_mid(c.size());
    double t = 0.0;
    const int dim = static_cast<int>(c.size());

    auto apply_jump = [&](double tj) {
        // collapse: c -> Φ†(tj) A Φ(tj) c, renormalized
        for (int j = 0; j < dim; ++j) {
            ws.phased(j) = std::polar(1.0, -ladder.energies(j) * tj) * c(j);
        }
        CVector lowered(dim);
        ws.lower_op.apply(ws.phased, lowered);
        for (int j = 0; j < dim; ++j) {
            c(j) = std::polar(1.0, ladder.energies(j) * tj) * lowered(j);
        }
        const double nrm = c.norm();
        if (nrm == 0.0) throw Error("evolve_lindblad_mc: collapse annihilated the state");
        c /= nrm;
        jump_level = std::max(rng.uniform(), 1e-300);
        ++res.jumps;
    };

    for (double ts : grid) {
        while (t < ts) {
            const double t0 = t;
            c_prev = c;
            if (stepper.step(rhs, t, c, ts) == 0.0) break;
            if (kappa > 0.0 && c.squaredNorm() < jump_level) {
                // bisect the jump time within [t0, t] to 1e-6 ns
                double lo = 0.0, hi = t - t0;
                constexpr int kSub = 8;
                for (int it = 0; it < 60 && hi - lo > 1e-6; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    rk4_to(rhs, t0, c_prev, mid, kSub, c_mid);
                    (c_mid.squaredNorm() < jump_level ? hi : lo) = mid;
                }
                rk4_to(rhs, t0, c_prev, hi, kSub, c_mid);
                c = c_mid;
                t = t0 + hi;
                apply_jump(t);
                stepper.have_k1 = false;  // state changed discontinuously
            }
        }
        res.samples.push_back(measure(ws, c, t, tracked));
        const SampleValues& sv = res.samples.back();
        if (sv.guard > options.guard_threshold) {
            throw TruncationOverflow("evolve_lindblad_mc: guard-band occupancy " +
                                         std::to_string(sv.guard) + " at t = " +
                                         std::to_string(t) + " ns",
                                     t, sv.guard);
        }
        for (int idx : options.store_rho_q_samples) {
            if (idx == static_cast<int>(res.samples.size()) - 1) {
                res.stored_rho.push_back(sv.rho_q);
            }
        }
    }
    res.n_accepted = stepper.n_accepted;
    res.n_rejected = stepper.n_rejected;
    res.n_rhs = rhs.n_evals;
    return res;
}

}  // namespace

TimeSeries evolve_lindblad_mc(const circuits::SystemModel& model,
                              const dasi::DressedLadder& ladder, const DriveSpec& drive,
                              std::pair<int, int> initial, double kappa, int n_traj,
                              std::uint64_t seed, const std::set<int>& tracked_branches,
                              const EvolveOptions& options) {
    validate(drive, ladder, initial);
    if (kappa < 0.0) throw ParameterError("evolve_lindblad_mc: kappa must be >= 0");
    if (n_traj < 1) throw ParameterError("evolve_lindblad_mc: n_traj must be >= 1");

    const std::vector<int> tracked(tracked_branches.begin(), tracked_branches.end());
    const std::vector<double> grid = sample_grid(drive);
    const bool with_collapse = kappa > 0.0;

    int n_threads = options.mc_threads > 0
                        ? options.mc_threads
                        : static_cast<int>(std::thread::hardware_concurrency());
    n_threads = std::clamp(n_threads, 1, n_traj);

    // Shared read-only workspace prototype; each thread gets its own scratch.
    std::vector<TrajectoryResult> results(n_traj);
    std::vector<std::string> failures(n_traj);
    std::atomic<int> next{0};

    auto worker = [&]() {
        Workspace ws = make_workspace(model, ladder, with_collapse, options.sparse_threshold);
        while (true) {
            const int i = next.fetch_add(1);
            if (i >= n_traj) break;
            const std::uint64_t traj_seed =
                seed ^ (0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(i + 1));
            try {
                results[i] = run_trajectory(model, ladder, drive, initial, kappa, traj_seed,
                                            tracked, options, ws, grid);
            } catch (const std::exception& e) {
                failures[i] = e.what();
            }
        }
    };
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (int i = 0; i < n_traj; ++i) {
        if (!failures[i].empty()) {
            throw Error("evolve_lindblad_mc: trajectory " + std::to_string(i) + " failed: " +
                        failures[i]);
        }
    }

    // Reduction in trajectory order with compensated accumulation.
    const std::size_t n_samples = results[0].samples.size();
    TimeSeries out;
    out.initial_k = initial.first;
    out.times.assign(grid.begin(), grid.begin() + n_samples);
    const int dim_q = model.dim_q;

    std::vector<Kahan> photon(n_samples), nq(n_samples), guard(n_samples);
    std::vector<std::vector<Kahan>> pd(tracked.size(), std::vector<Kahan>(n_samples));
    std::vector<std::vector<Kahan>> pb(tracked.size(), std::vector<Kahan>(n_samples));
    std::vector<Matrix> rho_sum(n_samples, Matrix::Zero(dim_q, dim_q));
    long total_jumps = 0, total_steps = 0;
    for (int i = 0; i < n_traj; ++i) {
        const auto& r = results[i];
        if (r.samples.size() != n_samples) {
            throw Error("evolve_lindblad_mc: trajectories sampled inconsistently");
        }
        for (std::size_t s = 0; s < n_samples; ++s) {
            photon[s].add(r.samples[s].photon);
            nq[s].add(r.samples[s].n_q);
            guard[s].add(r.samples[s].guard);
            for (std::size_t k = 0; k < tracked.size(); ++k) {
                pd[k][s].add(r.samples[s].p_dressed[k]);
                pb[k][s].add(r.samples[s].p_bare[k]);
            }
            rho_sum[s] += r.samples[s].rho_q;
        }
        total_jumps += r.jumps;
        total_steps += r.n_accepted;
    }

    const double inv = 1.0 / n_traj;
    for (std::size_t s = 0; s < n_samples; ++s) {
        out.photon.push_back(photon[s].value() * inv);
        out.guard_mass.push_back(guard[s].value() * inv);
        const Matrix rho = rho_sum[s] * inv;
        out.purity_error.push_back(1.0 - metrics::purity(rho));
        out.n_q.push_back(metrics::qubit_occupation(rho));
    }
    for (std::size_t k = 0; k < tracked.size(); ++k) {
        auto& d = out.p_dressed[tracked[k]];
        auto& b = out.p_bare[tracked[k]];
        for (std::size_t s = 0; s < n_samples; ++s) {
            d.push_back(pd[k][s].value() * inv);
            b.push_back(pb[k][s].value() * inv);
        }
    }

    if (!options.store_rho_q_samples.empty()) {
        out.traj_rho_q.resize(n_traj);
        for (int i = 0; i < n_traj; ++i) out.traj_rho_q[i] = std::move(results[i].stored_rho);
    }

    out.diagnostics = {{"n_traj", n_traj},
                       {"kappa", kappa},
                       {"seed", seed},
                       {"threads", n_threads},
                       {"total_jumps", total_jumps},
                       {"total_accepted_steps", total_steps}};
    return out;
}

}  // namespace mist::dynamics
