#include "mist/config.hpp"

#include <fstream>

#include "mist/io.hpp"

namespace mist::config {

using json = nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& pointer, const std::string& what) {
    throw ParameterError("config: " + pointer + ": " + what);
}

const json& at(const json& j, const std::string& pointer, const char* key) {
    if (!j.is_object() || !j.contains(key)) fail(pointer + "/" + key, "missing");
    return j[key];
}

double num(const json& j, const std::string& pointer, const char* key) {
    const json& v = at(j, pointer, key);
    if (!v.is_number()) fail(pointer + "/" + key, "expected a number");
    return v.get<double>();
}

double num_or(const json& j, const std::string& pointer, const char* key, double dflt) {
    if (!j.is_object() || !j.contains(key)) return dflt;
    return num(j, pointer, key);
}

int integer_or(const json& j, const std::string& pointer, const char* key, int dflt) {
    if (!j.is_object() || !j.contains(key)) return dflt;
    const json& v = j[key];
    if (!v.is_number_integer()) fail(pointer + "/" + key, "expected an integer");
    return v.get<int>();
}

bool flag_or(const json& j, const char* key, bool dflt) {
    if (!j.is_object() || !j.contains(key)) return dflt;
    return j[key].get<bool>();
}

std::string str(const json& j, const std::string& pointer, const char* key) {
    const json& v = at(j, pointer, key);
    if (!v.is_string()) fail(pointer + "/" + key, "expected a string");
    return v.get<std::string>();
}

MetricKind metric_from_string(const std::string& s, const std::string& pointer) {
    if (s == "chi") return MetricKind::chi;
    if (s == "n_crit") return MetricKind::n_crit;
    if (s == "mel_error") return MetricKind::mel_error;
    if (s == "purity_error") return MetricKind::purity_error;
    if (s == "resonance_diagram") return MetricKind::resonance_diagram;
    if (s == "anticrossing") return MetricKind::anticrossing;
    fail(pointer, "unknown metric '" + s + "'");
}

}  // namespace

std::string to_string(SweptParameter p) {
    switch (p) {
        case SweptParameter::phi_ext: return "phi_ext";
        case SweptParameter::omega_r: return "omega_r";
        case SweptParameter::detuning: return "detuning";
    }
    return "?";
}

std::string to_string(MetricKind m) {
    switch (m) {
        case MetricKind::chi: return "chi";
        case MetricKind::n_crit: return "n_crit";
        case MetricKind::mel_error: return "mel_error";
        case MetricKind::purity_error: return "purity_error";
        case MetricKind::resonance_diagram: return "resonance_diagram";
        case MetricKind::anticrossing: return "anticrossing";
    }
    return "?";
}

dynamics::DriveSpec Config::drive_spec(double omega_drive_rad_ns) const {
    dynamics::DriveSpec d;
    d.eps = circuits::kTwoPi * eps_ghz;
    d.t_raise = t_raise_ns;
    d.t_final = t_final_ns;
    d.omega_drive = omega_drive_rad_ns;
    d.sample_dt = sample_dt_ns > 0.0 ? sample_dt_ns : t_final_ns / 400.0;
    return d;
}

dynamics::EvolveOptions Config::evolve_options() const {
    dynamics::EvolveOptions o;
    o.rtol = rtol;
    o.atol = atol;
    o.guard_threshold = guard_threshold;
    o.photon_ceiling = photon_ceiling;
    return o;
}

Config parse(const json& j) {
    Config c;
    c.schema_version = integer_or(j, "", "schema_version", -1);
    if (c.schema_version != 1) fail("/schema_version", "expected 1");

    const json& cj = at(j, "", "circuit");
    const std::string kind = str(cj, "/circuit", "kind");
    if (kind == "fluxonium") {
        circuits::FluxoniumSpec s;
        s.e_j_ghz = num(cj, "/circuit", "e_j_ghz");
        s.e_c_ghz = num(cj, "/circuit", "e_c_ghz");
        s.e_l_ghz = num(cj, "/circuit", "e_l_ghz");
        s.phi_ext_phi0 = num(cj, "/circuit", "phi_ext_phi0");
        s.n_ho = integer_or(cj, "/circuit", "n_ho", 50);
        s.n_keep = integer_or(cj, "/circuit", "n_keep", 20);
        c.circuit = s;
    } else if (kind == "transmon") {
        circuits::TransmonSpec s;
        s.e_j_ghz = num(cj, "/circuit", "e_j_ghz");
        s.e_c_ghz = num(cj, "/circuit", "e_c_ghz");
        s.n_g = num_or(cj, "/circuit", "n_g", 0.0);
        s.n_charge = integer_or(cj, "/circuit", "n_charge", 30);
        s.n_keep = integer_or(cj, "/circuit", "n_keep", 12);
        c.circuit = s;
    } else {
        fail("/circuit/kind", "expected 'fluxonium' or 'transmon'");
    }

    c.omega_r_ghz = num(at(j, "", "resonator"), "/resonator", "omega_r_ghz");
    const json& cpl = at(j, "", "coupling");
    c.g_ghz = num(cpl, "/coupling", "g_ghz");
    const std::string ck = str(cpl, "/coupling", "kind");
    if (ck == "capacitive") {
        c.coupling = circuits::CouplingKind::capacitive;
    } else if (ck == "inductive") {
        c.coupling = circuits::CouplingKind::inductive;
    } else {
        fail("/coupling/kind", "expected 'capacitive' or 'inductive'");
    }

    const json& dims = at(j, "", "dims");
    c.dim_q = integer_or(dims, "/dims", "dim_q", 20);
    c.dim_r = integer_or(dims, "/dims", "dim_r", 120);

    if (j.contains("dasi")) {
        c.dasi_delta_g_ghz = num_or(j["dasi"], "/dasi", "delta_g_ghz", 0.0015);
        c.dasi_adaptive = flag_or(j["dasi"], "adaptive", false);
    }

    if (j.contains("drive")) {
        const json& d = j["drive"];
        c.eps_ghz = num_or(d, "/drive", "eps_ghz", 0.025);
        c.t_raise_ns = num_or(d, "/drive", "t_raise_ns", 20.0);
        c.t_final_ns = num_or(d, "/drive", "t_final_ns", 400.0);
        c.sample_dt_ns = num_or(d, "/drive", "sample_dt_ns", 0.0);
        c.photon_ceiling = num_or(d, "/drive", "photon_ceiling", 80.0);
        if (d.contains("omega_drive_ghz")) c.omega_drive_ghz = num(d, "/drive", "omega_drive_ghz");
    }
    if (j.contains("evolve")) {
        const json& e = j["evolve"];
        c.rtol = num_or(e, "/evolve", "rtol", 1e-9);
        c.atol = num_or(e, "/evolve", "atol", 1e-11);
        c.guard_threshold = num_or(e, "/evolve", "guard_threshold", 1e-6);
    }
    if (j.contains("dissipation")) {
        const json& d = j["dissipation"];
        c.kappa_ghz = num_or(d, "/dissipation", "kappa_ghz", 0.0);
        c.n_traj = integer_or(d, "/dissipation", "n_traj", 1);
    }

    if (j.contains("sweep")) {
        const json& s = j["sweep"];
        SweepSection& sw = c.sweep;
        const std::string p = str(s, "/sweep", "parameter");
        if (p == "phi_ext") {
            sw.parameter = SweptParameter::phi_ext;
        } else if (p == "omega_r") {
            sw.parameter = SweptParameter::omega_r;
        } else if (p == "detuning") {
            sw.parameter = SweptParameter::detuning;
        } else {
            fail("/sweep/parameter", "expected 'phi_ext', 'omega_r' or 'detuning'");
        }
        sw.min = num(s, "/sweep", "min");
        sw.max = num(s, "/sweep", "max");
        sw.count = integer_or(s, "/sweep", "count", 41);
        if (sw.count < 2) fail("/sweep/count", "grid count must be >= 2");
        if (s.contains("metrics")) {
            for (const auto& m : s["metrics"]) {
                sw.metrics.push_back(metric_from_string(m.get<std::string>(), "/sweep/metrics"));
            }
        }
        if (s.contains("branches")) sw.branches = s["branches"].get<std::vector<int>>();
        if (s.contains("alpha_sq_grid")) {
            const json& ag = s["alpha_sq_grid"];
            if (ag.is_array()) {
                sw.alpha_sq_grid = ag.get<std::vector<double>>();
            } else {
                const double lo = num(ag, "/sweep/alpha_sq_grid", "min");
                const double hi = num(ag, "/sweep/alpha_sq_grid", "max");
                const int n = integer_or(ag, "/sweep/alpha_sq_grid", "count", 30);
                for (int i = 0; i < n; ++i) {
                    sw.alpha_sq_grid.push_back(lo + (hi - lo) * i / (n - 1));
                }
            }
        }
        if (s.contains("anticrossing")) {
            const json& a = s["anticrossing"];
            const auto ba = a.at("branch_a").get<std::vector<int>>();
            const auto bb = a.at("branch_b").get<std::vector<int>>();
            if (ba.size() != 2 || bb.size() != 2) fail("/sweep/anticrossing", "branch = [k, offset]");
            sw.branch_a = {ba[0], ba[1]};
            sw.branch_b = {bb[0], bb[1]};
            sw.n_lo = integer_or(a, "/sweep/anticrossing", "n_lo", 2);
            sw.n_hi = integer_or(a, "/sweep/anticrossing", "n_hi", 50);
        }
        sw.resonance_m_max = integer_or(s, "/sweep", "resonance_m_max", 3);
        sw.parity_filter = flag_or(s, "parity_filter", false);
    }

    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    c.threads = integer_or(j, "", "threads", 0);

    if (!(c.omega_r_ghz > 0.0)) fail("/resonator/omega_r_ghz", "must be positive");
    if (c.dim_q < 1 || c.dim_r < 2) fail("/dims", "invalid truncation");
    return c;
}

Config load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParameterError("config: cannot open " + path);
    json j;
    try {
        f >> j;
    } catch (const json::parse_error& e) {
        throw ParameterError("config: JSON parse error in " + path + ": " + e.what());
    }
    return parse(j);
}

json to_json(const Config& c) {
    json j;
    j["schema_version"] = c.schema_version;
    if (c.is_fluxonium()) {
        const auto& s = std::get<circuits::FluxoniumSpec>(c.circuit);
        j["circuit"] = {{"kind", "fluxonium"},   {"e_j_ghz", s.e_j_ghz},
                        {"e_c_ghz", s.e_c_ghz},  {"e_l_ghz", s.e_l_ghz},
                        {"phi_ext_phi0", s.phi_ext_phi0}, {"n_ho", s.n_ho},
                        {"n_keep", s.n_keep}};
    } else {
        const auto& s = std::get<circuits::TransmonSpec>(c.circuit);
        j["circuit"] = {{"kind", "transmon"},   {"e_j_ghz", s.e_j_ghz},
                        {"e_c_ghz", s.e_c_ghz}, {"n_g", s.n_g},
                        {"n_charge", s.n_charge}, {"n_keep", s.n_keep}};
    }
    j["resonator"] = {{"omega_r_ghz", c.omega_r_ghz}};
    j["coupling"] = {{"g_ghz", c.g_ghz},
                     {"kind", c.coupling == circuits::CouplingKind::capacitive ? "capacitive"
                                                                               : "inductive"}};
    j["dims"] = {{"dim_q", c.dim_q}, {"dim_r", c.dim_r}};
    j["dasi"] = {{"delta_g_ghz", c.dasi_delta_g_ghz}, {"adaptive", c.dasi_adaptive}};
    j["drive"] = {{"eps_ghz", c.eps_ghz},
                  {"t_raise_ns", c.t_raise_ns},
                  {"t_final_ns", c.t_final_ns},
                  {"sample_dt_ns", c.sample_dt_ns},
                  {"photon_ceiling", c.photon_ceiling}};
    if (c.omega_drive_ghz) j["drive"]["omega_drive_ghz"] = *c.omega_drive_ghz;
    j["evolve"] = {{"rtol", c.rtol}, {"atol", c.atol}, {"guard_threshold", c.guard_threshold}};
    j["dissipation"] = {{"kappa_ghz", c.kappa_ghz}, {"n_traj", c.n_traj}};

    json sw;
    sw["parameter"] = to_string(c.sweep.parameter);
    sw["min"] = c.sweep.min;
    sw["max"] = c.sweep.max;
    sw["count"] = c.sweep.count;
    json ms = json::array();
    for (const auto m : c.sweep.metrics) ms.push_back(to_string(m));
    sw["metrics"] = ms;
    sw["branches"] = c.sweep.branches;
    sw["alpha_sq_grid"] = c.sweep.alpha_sq_grid;
    sw["anticrossing"] = {{"branch_a", {c.sweep.branch_a.first, c.sweep.branch_a.second}},
                          {"branch_b", {c.sweep.branch_b.first, c.sweep.branch_b.second}},
                          {"n_lo", c.sweep.n_lo},
                          {"n_hi", c.sweep.n_hi}};
    sw["resonance_m_max"] = c.sweep.resonance_m_max;
    sw["parity_filter"] = c.sweep.parity_filter;
    j["sweep"] = sw;

    j["seed"] = c.seed;
    j["threads"] = c.threads;
    return j;
}

std::string config_hash(const Config& c) {
    return io::hash_hex(io::fnv1a(io::canonical(to_json(c))));
}

std::string dasi_cache_key(const Config& c, const CircuitSpec& circuit, double omega_r_ghz,
                           double g_ghz) {
    json j;
    if (std::holds_alternative<circuits::FluxoniumSpec>(circuit)) {
        const auto& s = std::get<circuits::FluxoniumSpec>(circuit);
        j["circuit"] = {{"kind", "fluxonium"},   {"e_j_ghz", s.e_j_ghz},
                        {"e_c_ghz", s.e_c_ghz},  {"e_l_ghz", s.e_l_ghz},
                        {"phi_ext_phi0", s.phi_ext_phi0}, {"n_ho", s.n_ho},
                        {"n_keep", s.n_keep}};
    } else {
        const auto& s = std::get<circuits::TransmonSpec>(circuit);
        j["circuit"] = {{"kind", "transmon"},   {"e_j_ghz", s.e_j_ghz},
                        {"e_c_ghz", s.e_c_ghz}, {"n_g", s.n_g},
                        {"n_charge", s.n_charge}, {"n_keep", s.n_keep}};
    }
    j["omega_r_ghz"] = omega_r_ghz;
    j["g_ghz"] = g_ghz;
    j["coupling"] = c.coupling == circuits::CouplingKind::capacitive ? "capacitive" : "inductive";
    j["dims"] = {{"dim_q", c.dim_q}, {"dim_r", c.dim_r}};
    j["dasi"] = {{"delta_g_ghz", c.dasi_delta_g_ghz}, {"adaptive", c.dasi_adaptive}};
    return io::hash_hex(io::fnv1a(io::canonical(j)));
}

}  // namespace mist::config
