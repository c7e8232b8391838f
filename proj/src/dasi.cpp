#include "mist/dasi.hpp"

#include <cblas.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <string>

#include <nlohmann/json.hpp>

#include "mist/io.hpp"

namespace mist::dasi {

using json = nlohmann::json;

int DressedLadder::index_of(int k, int n) const {
    if (k < 0 || k >= dim_q || n < 0 || n >= dim_r) {
        throw ParameterError("DressedLadder: label (" + std::to_string(k) + "," +
                             std::to_string(n) + ") out of range");
    }
    return label_to_index[static_cast<std::size_t>(flat(k, n))];
}

namespace {

// Overlap matrix M(i,j) = <old_i|new_j> via one zgemm.
Matrix overlap_matrix(const Matrix& w_old, const Matrix& w_new) {
    const int n = static_cast<int>(w_old.rows());
    Matrix m(n, n);
    const std::complex<double> one(1.0, 0.0), zero(0.0, 0.0);
    cblas_zgemm(CblasColMajor, CblasConjTrans, CblasNoTrans, n, n, n, &one, w_old.data(), n,
                w_new.data(), n, &zero, m.data(), n);
    return m;
}

// Exact assignment maximizing the total overlap on a small conflicted subset
// (Kuhn–Munkres with potentials, O(n^3)). cost(i,j) = -overlap to minimize.
std::vector<int> hungarian_max(const RealMatrix& score) {
    const int n = static_cast<int>(score.rows());
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, n), way(n + 1, n);
    for (int i = 0; i < n; ++i) {
        p[n] = i;
        int j0 = n;
        std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
        std::vector<char> used(n + 1, false);
        do {
            used[j0] = true;
            const int i0 = p[j0];
            double delta = std::numeric_limits<double>::infinity();
            int j1 = n;
            for (int j = 0; j < n; ++j) {
                if (used[j]) continue;
                const double cur = -score(i0, j) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != n);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != n);
    }
    std::vector<int> row_to_col(n, -1);
    for (int j = 0; j < n; ++j) {
        if (p[j] != n) row_to_col[p[j]] = j;
    }
    return row_to_col;
}

struct StepResult {
    std::vector<int> label_to_index;  // updated mapping
    double floor;                     // weakest accepted overlap
    std::vector<int> weak_labels;     // labels at or below the floor region
};

// One labeling pass: given |<old_i|new_j>| and the previous label map, find
// the new label map. Greedy per-label argmax, then optimal repair on the
// conflicted remainder.
StepResult assign_labels(const Matrix& m, const std::vector<int>& old_map) {
    const int dim = static_cast<int>(m.rows());
    const RealMatrix a = m.cwiseAbs();

    std::vector<int> new_map(dim, -1);
    std::vector<char> claimed(dim, false);
    std::vector<int> claimant(dim, -1);  // column -> label, -2 on conflict
    std::vector<int> best(dim);
    for (int lab = 0; lab < dim; ++lab) {
        int jbest = 0;
        double vbest = -1.0;
        const int i = old_map[lab];
        for (int j = 0; j < dim; ++j) {
            if (a(i, j) > vbest) {
                vbest = a(i, j);
                jbest = j;
            }
        }
        best[lab] = jbest;
        claimant[jbest] = claimant[jbest] == -1 ? lab : -2;
    }
    for (int lab = 0; lab < dim; ++lab) {
        const int j = best[lab];
        if (claimant[j] == lab) {
            new_map[lab] = j;
            claimed[j] = true;
        }
    }

    std::vector<int> rows, cols;
    for (int lab = 0; lab < dim; ++lab) {
        if (new_map[lab] < 0) rows.push_back(lab);
    }
    if (!rows.empty()) {
        for (int j = 0; j < dim; ++j) {
            if (!claimed[j]) cols.push_back(j);
        }
        RealMatrix sub(rows.size(), cols.size());
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t c = 0; c < cols.size(); ++c)
                sub(r, c) = a(old_map[rows[r]], cols[c]);
        const std::vector<int> match = hungarian_max(sub);
        for (std::size_t r = 0; r < rows.size(); ++r) new_map[rows[r]] = cols[match[r]];
    }

    StepResult res;
    res.label_to_index = std::move(new_map);
    res.floor = 1.0;
    for (int lab = 0; lab < dim; ++lab) {
        const double ov = a(old_map[lab], res.label_to_index[lab]);
        if (ov < res.floor) res.floor = ov;
    }
    for (int lab = 0; lab < dim; ++lab) {
        if (a(old_map[lab], res.label_to_index[lab]) <= res.floor + 1e-12) {
            res.weak_labels.push_back(lab);
        }
    }
    return res;
}

struct SweepState {
    Matrix vectors;
    Vector energies;
    std::vector<int> label_to_index;
    double g;
};

std::vector<std::pair<int, int>> to_kn(const std::vector<int>& flat_labels, int dim_r) {
    std::vector<std::pair<int, int>> out;
    out.reserve(flat_labels.size());
    for (int f : flat_labels) out.emplace_back(f / dim_r, f % dim_r);
    return out;
}

}  // namespace

DressedLadder dasi_sweep(const std::function<Matrix(double)>& h_at, int dim_q, int dim_r,
                         double g_target, double delta_g, const DasiOptions& options) {
    if (!(delta_g > 0.0)) throw ParameterError("dasi_sweep: delta_g must be positive");
    if (g_target < 0.0) throw ParameterError("dasi_sweep: g_target must be >= 0");
    const int dim = dim_q * dim_r;

    DressedLadder lad;
    lad.dim_q = dim_q;
    lad.dim_r = dim_r;
    lad.tracked_labels = options.track;

    // Start at g = 0. A diagonal H(0) keeps the bare basis and identity labels
    // exactly; otherwise labels are matched against the bare basis vectors.
    SweepState st;
    st.g = 0.0;
    Matrix h0 = h_at(0.0);
    if (h0.rows() != dim || h0.cols() != dim) {
        throw ParameterError("dasi_sweep: h_at(g) dimension does not match dim_q*dim_r");
    }
    const double scale0 = h0.cwiseAbs().maxCoeff();
    Matrix offdiag = h0;
    offdiag.diagonal().setZero();
    st.label_to_index.resize(dim);
    if (scale0 == 0.0 || offdiag.cwiseAbs().maxCoeff() < 1e-12 * scale0) {
        st.vectors = Matrix::Identity(dim, dim);
        st.energies = h0.diagonal().real();
        for (int i = 0; i < dim; ++i) st.label_to_index[i] = i;
    } else {
        qops::EigenSystem es = qops::hermitian_eig(h0);
        std::vector<int> ident(dim);
        for (int i = 0; i < dim; ++i) ident[i] = i;
        StepResult r0 = assign_labels(es.vectors, ident);
        if (r0.floor < options.accept_floor) {
            throw AmbiguousLabelingError("dasi_sweep: ambiguous labels already at g = 0", 0.0,
                                         delta_g, to_kn(r0.weak_labels, dim_r));
        }
        st.vectors = std::move(es.vectors);
        st.energies = std::move(es.energies);
        st.label_to_index = std::move(r0.label_to_index);
        lad.overlap_floor = std::min(lad.overlap_floor, r0.floor);
    }

    std::vector<RealMatrix*> dummy;
    std::vector<std::vector<double>> tracked(options.track.size());

    auto record = [&](const SweepState& s) {
        lad.g_history.push_back(s.g);
        for (std::size_t t = 0; t < options.track.size(); ++t) {
            const auto [k, n] = options.track[t];
            tracked[t].push_back(s.energies(s.label_to_index[k * dim_r + n]));
        }
    };

    // One accepted substep from st to g_new; returns false if the overlap
    // floor only reached the adaptive trigger (caller may subdivide).
    auto try_step = [&](double g_new, bool allow_weak) -> bool {
        qops::EigenSystem es = qops::hermitian_eig(h_at(g_new));
        const Matrix m = overlap_matrix(st.vectors, es.vectors);
        StepResult r = assign_labels(m, st.label_to_index);
        if (r.floor < options.accept_floor ||
            (!allow_weak && options.adaptive && r.floor < options.adaptive_trigger)) {
            if (r.floor < options.accept_floor && !options.adaptive) {
                throw AmbiguousLabelingError(
                    "dasi_sweep: ambiguous labeling at g = " + std::to_string(g_new) +
                        " rad/ns (overlap " + std::to_string(r.floor) + ")",
                    g_new, g_new - st.g, to_kn(r.weak_labels, dim_r));
            }
            if (!allow_weak) return false;
            if (r.floor < options.accept_floor) {
                throw AmbiguousLabelingError(
                    "dasi_sweep: ambiguous labeling at g = " + std::to_string(g_new) +
                        " rad/ns at the minimum adaptive step (overlap " +
                        std::to_string(r.floor) + ")",
                    g_new, g_new - st.g, to_kn(r.weak_labels, dim_r));
            }
        }
        // phase fixing: Re<old|new> > 0 (made exactly real here)
        for (int lab = 0; lab < dim; ++lab) {
            const int j = r.label_to_index[lab];
            const std::complex<double> ph = m(st.label_to_index[lab], j);
            es.vectors.col(j) *= std::conj(ph) / std::abs(ph);
        }
        lad.delta_g_schedule.push_back(g_new - st.g);
        lad.overlap_floor = std::min(lad.overlap_floor, r.floor);
        st.vectors = std::move(es.vectors);
        st.energies = std::move(es.energies);
        st.label_to_index = std::move(r.label_to_index);
        st.g = g_new;
        record(st);
        return true;
    };

    record(st);
    if (g_target > 0.0) {
        const int n_steps = std::max(1, static_cast<int>(std::llround(g_target / delta_g)));
        const double min_step = delta_g / static_cast<double>(1 << options.max_refine);
        for (int s = 1; s <= n_steps; ++s) {
            const double g_goal = g_target * static_cast<double>(s) / n_steps;
            while (st.g < g_goal) {
                double h = g_goal - st.g;
                // shrink until the step is accepted or bottoms out
                while (true) {
                    const bool last_chance = h <= min_step * (1.0 + 1e-9);
                    if (try_step(st.g + h, /*allow_weak=*/last_chance)) break;
                    h *= 0.5;
                }
            }
        }
    }

    lad.g = st.g;
    lad.vectors = std::move(st.vectors);
    lad.energies = std::move(st.energies);
    lad.label_to_index = std::move(st.label_to_index);
    lad.index_to_label.assign(dim, -1);
    for (int lab = 0; lab < dim; ++lab) lad.index_to_label[lad.label_to_index[lab]] = lab;
    for (int idx = 0; idx < dim; ++idx) {
        if (lad.index_to_label[idx] < 0) {
            throw AmbiguousLabelingError("dasi_sweep: label map is not a bijection", lad.g,
                                         delta_g, {});
        }
    }
    lad.tracked_energies.resize(options.track.size(), lad.g_history.size());
    for (std::size_t t = 0; t < options.track.size(); ++t) {
        for (std::size_t s = 0; s < lad.g_history.size(); ++s) {
            lad.tracked_energies(t, s) = tracked[t][s];
        }
    }
    (void)dummy;
    return lad;
}

DressedLadder dasi_sweep(const circuits::SystemModel& model, double delta_g,
                         const DasiOptions& options) {
    return dasi_sweep([&model](double g) { return model.h_idle(g); }, model.dim_q, model.dim_r,
                      model.g, delta_g, options);
}

double dasi_step_threshold(double gap_2geff, double diabatic_slope) {
    if (!(gap_2geff > 0.0) || diabatic_slope < 0.0) {
        throw ParameterError("dasi_step_threshold: inputs must be positive");
    }
    if (diabatic_slope == 0.0) return std::numeric_limits<double>::infinity();
    return gap_2geff / diabatic_slope;
}

std::vector<double> dispersive_ladder_energies(const DressedLadder& ladder, int k, int n_max) {
    if (n_max >= qops::interior_resonator_levels(ladder.dim_r)) {
        throw ParameterError("dispersive_ladder_energies: n_max reaches the guard band");
    }
    const double e0 = ladder.energy(k, 0);
    const double slope = ladder.energy(k, 1) - e0;
    std::vector<double> out(static_cast<std::size_t>(n_max) + 1);
    for (int n = 0; n <= n_max; ++n) out[static_cast<std::size_t>(n)] = e0 + slope * n;
    return out;
}

std::optional<Anticrossing> find_anticrossing(const DressedLadder& ladder,
                                              std::pair<int, int> branch_a,
                                              std::pair<int, int> branch_b,
                                              int n_lo, int n_hi) {
    const int interior = qops::interior_resonator_levels(ladder.dim_r);
    const auto [k1, off1] = branch_a;
    const auto [k2, off2] = branch_b;
    if (n_lo > n_hi) throw ParameterError("find_anticrossing: empty n range");
    if (n_lo + std::min(off1, off2) < 0 || n_hi + std::max(off1, off2) >= interior) {
        throw ParameterError("find_anticrossing: n range leaves the trusted interior band");
    }

    int n_best = n_lo;
    double best = std::numeric_limits<double>::infinity();
    for (int n = n_lo; n <= n_hi; ++n) {
        const double d =
            std::abs(ladder.energy(k1, n + off1) - ladder.energy(k2, n + off2));
        if (d < best) {
            best = d;
            n_best = n;
        }
    }
    if (n_best == n_lo || n_best == n_hi) return std::nullopt;

    Anticrossing ac;
    ac.n_cross = n_best;
    ac.gap = best;
    ac.branch_a = branch_a;
    ac.branch_b = branch_b;
    const double y1 =
        std::abs(ladder.energy(k1, n_best - 1 + off1) - ladder.energy(k2, n_best - 1 + off2));
    const double y2 = best;
    const double y3 =
        std::abs(ladder.energy(k1, n_best + 1 + off1) - ladder.energy(k2, n_best + 1 + off2));
    const double denom = y1 - 2.0 * y2 + y3;
    if (denom > 0.0) {
        const double shift = 0.5 * (y1 - y3) / denom;
        ac.n_cross_refined = n_best + shift;
        ac.gap_refined = y2 - 0.25 * (y1 - y3) * shift;
    } else {
        ac.n_cross_refined = n_best;
        ac.gap_refined = y2;
    }
    return ac;
}

// ---------------------------------------------------------------------------
// Persistence: "MLADDER1" magic, u64 JSON length, JSON header, raw LE arrays.

namespace {

constexpr char kMagic[8] = {'M', 'L', 'A', 'D', 'D', 'E', 'R', '1'};

void put_array(json& arrays, std::string name, std::string dtype, std::vector<std::size_t> shape,
               std::size_t& offset, std::size_t bytes) {
    arrays.push_back({{"name", std::move(name)},
                      {"dtype", std::move(dtype)},
                      {"shape", std::move(shape)},
                      {"offset", offset}});
    offset += bytes;
}

}  // namespace

void save_ladder(const std::filesystem::path& path, const DressedLadder& lad,
                 const std::string& config_hash) {
    const std::size_t dim = static_cast<std::size_t>(lad.dim());
    const std::size_t n_hist = lad.g_history.size();
    const std::size_t n_tracked = lad.tracked_labels.size();

    json hdr;
    hdr["schema_version"] = 1;
    hdr["dim_q"] = lad.dim_q;
    hdr["dim_r"] = lad.dim_r;
    hdr["g_rad_ns"] = lad.g;
    hdr["overlap_floor"] = lad.overlap_floor;
    hdr["delta_g_schedule"] = lad.delta_g_schedule;
    hdr["config_hash"] = config_hash;
    hdr["byte_order"] = "little";
    json tl = json::array();
    for (const auto& [k, n] : lad.tracked_labels) tl.push_back({k, n});
    hdr["tracked_labels"] = tl;

    json arrays = json::array();
    std::size_t offset = 0;
    put_array(arrays, "label_to_index", "i64", {dim}, offset, dim * 8);
    put_array(arrays, "energies", "f64", {dim}, offset, dim * 8);
    put_array(arrays, "vectors", "c128", {dim, dim}, offset, dim * dim * 16);
    put_array(arrays, "g_history", "f64", {n_hist}, offset, n_hist * 8);
    put_array(arrays, "tracked_energies", "f64", {n_tracked, n_hist}, offset,
              n_tracked * n_hist * 8);
    hdr["arrays"] = arrays;

    const std::string hdr_str = hdr.dump();
    const auto tmp = path.parent_path() /
                     (path.filename().string() + ".tmp." + std::to_string(::getpid()));
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("save_ladder: cannot open " + tmp.string());
        f.write(kMagic, 8);
        const std::uint64_t jl = hdr_str.size();
        f.write(reinterpret_cast<const char*>(&jl), 8);
        f.write(hdr_str.data(), static_cast<std::streamsize>(hdr_str.size()));
        std::vector<std::int64_t> l2i(lad.label_to_index.begin(), lad.label_to_index.end());
        f.write(reinterpret_cast<const char*>(l2i.data()), static_cast<std::streamsize>(dim * 8));
        f.write(reinterpret_cast<const char*>(lad.energies.data()),
                static_cast<std::streamsize>(dim * 8));
        f.write(reinterpret_cast<const char*>(lad.vectors.data()),
                static_cast<std::streamsize>(dim * dim * 16));
        f.write(reinterpret_cast<const char*>(lad.g_history.data()),
                static_cast<std::streamsize>(n_hist * 8));
        if (n_tracked > 0) {
            // row-major per tracked label
            for (std::size_t t = 0; t < n_tracked; ++t) {
                for (std::size_t s = 0; s < n_hist; ++s) {
                    const double v = lad.tracked_energies(static_cast<Eigen::Index>(t),
                                                          static_cast<Eigen::Index>(s));
                    f.write(reinterpret_cast<const char*>(&v), 8);
                }
            }
        }
        if (!f) throw Error("save_ladder: write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

DressedLadder load_ladder(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("load_ladder: cannot open " + path.string());
    char magic[8];
    f.read(magic, 8);
    if (!f || std::memcmp(magic, kMagic, 8) != 0) {
        throw Error("load_ladder: bad magic in " + path.string());
    }
    std::uint64_t jl = 0;
    f.read(reinterpret_cast<char*>(&jl), 8);
    std::string hdr_str(jl, '\0');
    f.read(hdr_str.data(), static_cast<std::streamsize>(jl));
    const json hdr = json::parse(hdr_str);
    if (hdr.at("schema_version").get<int>() != 1) {
        throw Error("load_ladder: unsupported schema version");
    }

    DressedLadder lad;
    lad.dim_q = hdr.at("dim_q").get<int>();
    lad.dim_r = hdr.at("dim_r").get<int>();
    lad.g = hdr.at("g_rad_ns").get<double>();
    lad.overlap_floor = hdr.at("overlap_floor").get<double>();
    lad.delta_g_schedule = hdr.at("delta_g_schedule").get<std::vector<double>>();
    for (const auto& t : hdr.at("tracked_labels")) {
        lad.tracked_labels.emplace_back(t.at(0).get<int>(), t.at(1).get<int>());
    }
    const std::size_t dim = static_cast<std::size_t>(lad.dim());

    std::vector<std::int64_t> l2i(dim);
    f.read(reinterpret_cast<char*>(l2i.data()), static_cast<std::streamsize>(dim * 8));
    lad.label_to_index.assign(l2i.begin(), l2i.end());
    lad.energies.resize(static_cast<Eigen::Index>(dim));
    f.read(reinterpret_cast<char*>(lad.energies.data()), static_cast<std::streamsize>(dim * 8));
    lad.vectors.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    f.read(reinterpret_cast<char*>(lad.vectors.data()),
           static_cast<std::streamsize>(dim * dim * 16));

    std::size_t n_hist = 0, n_tracked = lad.tracked_labels.size();
    for (const auto& a : hdr.at("arrays")) {
        if (a.at("name") == "g_history") n_hist = a.at("shape")[0].get<std::size_t>();
    }
    lad.g_history.resize(n_hist);
    f.read(reinterpret_cast<char*>(lad.g_history.data()),
           static_cast<std::streamsize>(n_hist * 8));
    lad.tracked_energies.resize(static_cast<Eigen::Index>(n_tracked),
                                static_cast<Eigen::Index>(n_hist));
    for (std::size_t t = 0; t < n_tracked; ++t) {
        for (std::size_t s = 0; s < n_hist; ++s) {
            double v;
            f.read(reinterpret_cast<char*>(&v), 8);
            lad.tracked_energies(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(s)) = v;
        }
    }
    if (!f) throw Error("load_ladder: truncated file " + path.string());

    lad.index_to_label.assign(dim, -1);
    for (std::size_t lab = 0; lab < dim; ++lab) {
        lad.index_to_label[static_cast<std::size_t>(lad.label_to_index[lab])] =
            static_cast<int>(lab);
    }
    return lad;
}

std::filesystem::path cache_path(const std::filesystem::path& dir, const std::string& key_hash) {
    return dir / ("dasi_" + key_hash + ".mladder");
}

std::optional<DressedLadder> cache_try_load(const std::filesystem::path& dir,
                                            const std::string& key_hash) {
    const auto p = cache_path(dir, key_hash);
    if (!std::filesystem::exists(p)) return std::nullopt;
    return load_ladder(p);
}

void cache_store(const std::filesystem::path& dir, const std::string& key_hash,
                 const DressedLadder& ladder) {
    std::filesystem::create_directories(dir);
    save_ladder(cache_path(dir, key_hash), ladder, key_hash);
}

}  // namespace mist::dasi
