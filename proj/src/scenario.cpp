#include "qfilter/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "qfilter/experiments.hpp"
#include "qfilter/svg.hpp"

namespace qfilter {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string fnv1a64_hex(const std::string& bytes) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

int worker_count() {
    if (const char* env = std::getenv("QFILTER_WORKERS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

namespace {

std::string iso_now() {
    auto now = std::chrono::system_clock::now();
    std::time_t tt = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm{};
    gmtime_r(&tt, &tm);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct CsvWriter {
    std::ostringstream out;
    void header(const std::vector<std::string>& cols) {
        for (size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
        out << "\n";
    }
    void row(const std::vector<double>& vals) {
        for (size_t i = 0; i < vals.size(); ++i) out << (i ? "," : "") << num(vals[i]);
        out << "\n";
    }
    std::string str() const { return out.str(); }
};

struct OutputCollector {
    fs::path dir;
    std::vector<OutputFile> files;

    void add(const std::string& name, const std::string& content) {
        fs::path p = dir / name;
        write_text_file(p.string(), content);
        files.push_back({name, fnv1a64_hex(content)});
    }
};

std::vector<double> value_array(const minitoml::Table& t, const std::string& path,
                                size_t expected) {
    const auto& arr = minitoml::get(t, path).as_array();
    if (expected && arr.size() != expected)
        throw ConfigError("config key " + path + " must have " + std::to_string(expected) +
                          " entries");
    std::vector<double> out;
    for (const auto& v : arr) out.push_back(v.as_double());
    return out;
}

std::array<double, 3> vec3(const minitoml::Table& t, const std::string& path,
                           std::array<double, 3> fallback) {
    if (!minitoml::has(t, path)) return fallback;
    auto v = value_array(t, path, 3);
    return {v[0], v[1], v[2]};
}

const std::set<std::string>& known_selectors(const std::string& kind) {
    static const std::set<std::string> qubit = {"sx", "sy", "sz", "purity", "log_likelihood", "dy"};
    static const std::set<std::string> particle = {"posterior_mean", "posterior_varq", "covariance",
                                                   "omega", "log_density", "sme_moments"};
    static const std::set<std::string> classical = {"kb", "zakai", "particles", "density_snapshots"};
    static const std::set<std::string> toyfock = {"records"};
    static const std::set<std::string> none;
    if (kind == "qubit_homodyne" || kind == "custom") return qubit;
    if (kind == "free_particle") return particle;
    if (kind == "classical_ou") return classical;
    if (kind == "toyfock_oracle") return toyfock;
    return none;
}

bool selected(const ScenarioConfig& cfg, const std::string& name) {
    return std::find(cfg.selectors.begin(), cfg.selectors.end(), name) != cfg.selectors.end();
}

TimeGrid scenario_grid(const ScenarioConfig& cfg) {
    int n_steps = static_cast<int>(std::llround(cfg.t_end / cfg.dt));
    if (n_steps < 1) throw ConfigError("time grid: t_end/dt must be >= 1 step");
    return TimeGrid(0.0, cfg.t_end / n_steps, n_steps);
}

MarkovModel qubit_model_from_config(const ScenarioConfig& cfg) {
    if (cfg.kind == "custom") {
        auto hre = value_array(cfg.raw, "model.h_re", 4);
        auto him = value_array(cfg.raw, "model.h_im", 4);
        auto lre = value_array(cfg.raw, "model.l_re", 4);
        auto lim = value_array(cfg.raw, "model.l_im", 4);
        cmat H(2, 2), L(2, 2);
        for (int i = 0; i < 4; ++i) {
            H(i / 2, i % 2) = cplx(hre[i], him[i]);
            L(i / 2, i % 2) = cplx(lre[i], lim[i]);
        }
        return MarkovModel(H, L);
    }
    return make_qubit_model(vec3(cfg.raw, "model.h", {0, 0, 0}),
                            vec3(cfg.raw, "model.l_re", {0, 0, 1}),
                            vec3(cfg.raw, "model.l_im", {0, 0, 0}));
}

// ---------------------------------------------------------------------------
// qubit_homodyne / custom

json run_qubit_trajectory(const ScenarioConfig& cfg, const MarkovModel& model,
                          const cmat& rho0, RecordMode mode, int stream,
                          OutputCollector* collector) {
    TimeGrid grid = scenario_grid(cfg);
    SimulatedRecord sim = simulate_record(model, rho0, grid, cfg.seed, stream, mode);

    bool want_csv = !cfg.selectors.empty();
    if (want_csv && collector) {
        CsvWriter csv;
        std::vector<std::string> cols = {"t"};
        for (const auto& s : {"dy", "sx", "sy", "sz", "purity", "log_likelihood"})
            if (selected(cfg, s)) cols.push_back(s);
        csv.header(cols);
        for (int k = 0; k <= grid.n_steps; ++k) {
            std::vector<double> row = {grid.time(k)};
            auto bloch = bloch_from_rho(sim.states[k].rho);
            if (selected(cfg, "dy")) row.push_back(k == 0 ? 0.0 : sim.dy(k - 1));
            if (selected(cfg, "sx")) row.push_back(bloch[0]);
            if (selected(cfg, "sy")) row.push_back(bloch[1]);
            if (selected(cfg, "sz")) row.push_back(bloch[2]);
            if (selected(cfg, "purity")) row.push_back(purity(sim.states[k].rho));
            if (selected(cfg, "log_likelihood")) row.push_back(sim.states[k].log_likelihood);
            csv.row(row);
        }
        char name[64];
        std::snprintf(name, sizeof(name), "trajectory_%04d.csv", stream);
        collector->add(name, csv.str());
    }

    auto bloch_T = bloch_from_rho(sim.states.back().rho);
    json out;
    out["stream_id"] = stream;
    out["bloch_T"] = {bloch_T[0], bloch_T[1], bloch_T[2]};
    out["purity_T"] = purity(sim.states.back().rho);
    out["log_likelihood_T"] = sim.states.back().log_likelihood;
    return out;
}

void run_qubit_scenario(const ScenarioConfig& cfg, OutputCollector& collector, json& summary) {
    MarkovModel model = qubit_model_from_config(cfg);
    auto b0 = vec3(cfg.raw, "model.bloch0", {1, 0, 0});
    cmat rho0 = rho_from_bloch(b0[0], b0[1], b0[2]);
    std::string mode_name = minitoml::get_string(cfg.raw, "model.mode", "physical");
    if (mode_name != "physical" && mode_name != "reference")
        throw ConfigError("model.mode must be physical or reference");
    RecordMode mode = mode_name == "physical" ? RecordMode::physical : RecordMode::reference;

    const int n = cfg.n_trajectories;
    std::vector<json> results(n);
    int workers = std::min(worker_count(), std::max(1, n));
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < workers; ++w)
        pool.emplace_back([&]() {
            while (true) {
                int i = next.fetch_add(1);
                if (i >= n) break;
                results[i] = run_qubit_trajectory(cfg, model, rho0, mode, i, nullptr);
            }
        });
    for (auto& th : pool) th.join();
    // trajectory files are produced serially so output ordering is stable
    for (int i = 0; i < n && !cfg.selectors.empty(); ++i)
        run_qubit_trajectory(cfg, model, rho0, mode, i, &collector);

    double mean_sz = 0, mean_weight = 0;
    for (const auto& r : results) {
        mean_sz += r["bloch_T"][2].get<double>();
        mean_weight += std::exp(r["log_likelihood_T"].get<double>());
    }
    summary["trajectories"] = results;
    summary["mean_sz_T"] = n ? mean_sz / n : 0.0;
    if (mode == RecordMode::reference) summary["martingale_mean"] = n ? mean_weight / n : 0.0;

    if (cfg.emit_svg && n > 0) {
        TimeGrid grid = scenario_grid(cfg);
        std::vector<SvgSeries> series;
        for (int i = 0; i < std::min(3, n); ++i) {
            SimulatedRecord sim = simulate_record(model, rho0, grid, cfg.seed, i, mode);
            SvgSeries s;
            s.label = "trajectory " + std::to_string(i);
            s.color = "";
            for (int k = 0; k <= grid.n_steps; ++k) {
                s.x.push_back(grid.time(k));
                s.y.push_back(bloch_from_rho(sim.states[k].rho)[2]);
            }
            series.push_back(std::move(s));
        }
        collector.add("bloch_z.svg", render_line_plot("conditioned <sigma_z>", "t", "<sigma_z>", series));
    }
}

// ---------------------------------------------------------------------------
// free_particle

void run_free_particle_scenario(const ScenarioConfig& cfg, OutputCollector& collector,
                                json& summary) {
    double m = minitoml::get_double(cfg.raw, "model.m", 1.0);
    double lambda = minitoml::get_double(cfg.raw, "model.lambda", 2.0);
    if (!(m > 0) || !(lambda > 0)) throw ConfigError("free_particle: m, lambda must be positive");
    auto th0 = value_array(cfg.raw, "model.theta0", 0);
    rvec theta0 = rvec::Zero(2);
    if (!th0.empty()) {
        if (th0.size() != 2) throw ConfigError("model.theta0 must have 2 entries");
        theta0 << th0[0], th0[1];
    }
    bool with_sme = minitoml::get_bool(cfg.raw, "model.with_sme", false);
    TimeGrid grid = scenario_grid(cfg);

    FreeParticleRun run = run_free_particle_filter(m, lambda, theta0, grid, cfg.seed, 0);

    GridSseRun sse;
    QuadratureRep rep;
    if (with_sme) {
        int n = static_cast<int>(minitoml::get_int(cfg.raw, "grid.n", 512));
        double x_min = minitoml::get_double(cfg.raw, "grid.x_min", -20.0);
        double x_max = minitoml::get_double(cfg.raw, "grid.x_max", 20.0);
        rep = build_quadrature_rep(n, x_min, x_max);
        GaussianModel gm = free_particle_model(m, lambda);
        MarkovModel grid_model = markov_model_from_gaussian(gm, rep);
        cvec psi0 = gaussian_state(rep, theta0(1), theta0(0), 0.5);
        sse = run_grid_sse(grid_model, rep, psi0, run.record, grid.dt);
    }

    if (!cfg.selectors.empty()) {
        CsvWriter csv;
        std::vector<std::string> cols = {"t"};
        if (selected(cfg, "posterior_mean")) { cols.push_back("theta_p"); cols.push_back("theta_q"); }
        if (selected(cfg, "covariance") || selected(cfg, "posterior_varq")) {
            if (selected(cfg, "covariance")) { cols.push_back("p_pp"); cols.push_back("p_pq"); }
            cols.push_back("p_qq");
        }
        if (selected(cfg, "omega")) { cols.push_back("omega_re"); cols.push_back("omega_im"); }
        if (selected(cfg, "log_density")) cols.push_back("log_density");
        if (with_sme && selected(cfg, "sme_moments")) {
            for (const auto& c : {"sme_q", "sme_p", "sme_var_q", "sme_var_p", "sme_cov_pq"})
                cols.push_back(c);
        }
        csv.header(cols);
        for (int k = 0; k <= grid.n_steps; ++k) {
            const GaussianBelief& b = run.beliefs[k];
            std::vector<double> row = {grid.time(k)};
            if (selected(cfg, "posterior_mean")) { row.push_back(b.theta(0)); row.push_back(b.theta(1)); }
            if (selected(cfg, "covariance") || selected(cfg, "posterior_varq")) {
                if (selected(cfg, "covariance")) { row.push_back(b.p(0, 0)); row.push_back(b.p(0, 1)); }
                row.push_back(b.p(1, 1));
            }
            if (selected(cfg, "omega")) {
                row.push_back(run.omega[k].real());
                row.push_back(run.omega[k].imag());
            }
            if (selected(cfg, "log_density")) row.push_back(b.log_density);
            if (with_sme && selected(cfg, "sme_moments")) {
                const GridMoments& mm = sse.moments[k];
                row.push_back(mm.q); row.push_back(mm.p);
                row.push_back(mm.var_q); row.push_back(mm.var_p); row.push_back(mm.cov_pq);
            }
            csv.row(row);
        }
        collector.add("belief_trajectory.csv", csv.str());
    }

    cplx omega_T = run.omega.back();
    cplx alpha = free_particle_omega_limit(m, lambda);
    const rmat& p_T = run.beliefs.back().p;
    summary["omega_T"] = {omega_T.real(), omega_T.imag()};
    summary["omega_limit_error"] = std::abs(omega_T - alpha);
    summary["p_T"] = {p_T(0, 0), p_T(0, 1), p_T(1, 1)};
    summary["dispersion_product"] = p_T(0, 0) * p_T(1, 1);
    summary["correlation_scalar"] = omega_T.imag() / omega_T.real();
    double det_rest = p_T(0, 0) * p_T(1, 1) - p_T(0, 1) * p_T(0, 1);
    summary["correlation_matrix"] = p_T(0, 1) / std::sqrt(std::max(det_rest, 1e-300));

    if (with_sme) {
        double max_mean_err = 0, max_cov_rel = 0;
        for (int k = 1; k <= grid.n_steps; ++k) {
            const GaussianBelief& b = run.beliefs[k];
            const GridMoments& mm = sse.moments[k];
            max_mean_err = std::max(max_mean_err,
                                    std::abs(b.theta(1) - mm.q) / std::sqrt(b.p(1, 1)));
            max_cov_rel = std::max({max_cov_rel,
                                    std::abs(b.p(1, 1) - mm.var_q) / b.p(1, 1),
                                    std::abs(b.p(0, 0) - mm.var_p) / b.p(0, 0)});
        }
        const GaussianBelief& bT = run.beliefs.back();
        cplx omega_eff = omega_from_p(bT.p);
        cvec psi_kb = posterior_wavefunction(omega_eff, bT.theta(1), bT.theta(0), rep);
        cplx overlap = inner(rep, psi_kb, sse.psi_final);
        summary["sme_max_mean_error_sigma"] = max_mean_err;
        summary["sme_max_cov_rel_error"] = max_cov_rel;
        summary["sme_fidelity_T"] = std::norm(overlap);
    }

    if (cfg.emit_svg) {
        SvgSeries varq;
        varq.label = "Var Q";
        for (int k = 0; k <= grid.n_steps; ++k) {
            varq.x.push_back(grid.time(k));
            varq.y.push_back(run.beliefs[k].p(1, 1));
        }
        SvgSeries limit;
        limit.label = "stationary";
        limit.color = "#d62728";
        double tau2 = p_from_omega(alpha)(1, 1);
        limit.x = {0.0, grid.t_end()};
        limit.y = {tau2, tau2};
        collector.add("posterior_varq.svg",
                      render_line_plot("posterior coordinate dispersion", "t", "Var Q",
                                       {varq, limit}));
        SvgSeries qhat;
        qhat.label = "q estimate";
        for (int k = 0; k <= grid.n_steps; ++k) {
            qhat.x.push_back(grid.time(k));
            qhat.y.push_back(run.beliefs[k].theta(1));
        }
        collector.add("posterior_mean_q.svg",
                      render_line_plot("posterior coordinate mean", "t", "q", {qhat}));
    }
}

// ---------------------------------------------------------------------------
// classical_ou

void run_classical_scenario(const ScenarioConfig& cfg, OutputCollector& collector, json& summary) {
    OuParams prm;
    prm.a = minitoml::get_double(cfg.raw, "model.a", 1.0);
    prm.sigma = minitoml::get_double(cfg.raw, "model.sigma", 1.0);
    prm.g = minitoml::get_double(cfg.raw, "model.g", 1.0);
    prm.z_min = minitoml::get_double(cfg.raw, "grid.z_min", -6.0);
    prm.z_max = minitoml::get_double(cfg.raw, "grid.z_max", 6.0);
    prm.grid_n = static_cast<int>(minitoml::get_int(cfg.raw, "grid.n", 256));
    prm.n_particles = static_cast<int>(minitoml::get_int(cfg.raw, "model.n_particles", 10000));
    prm.with_particles = selected(cfg, "particles") || cfg.selectors.empty();
    TimeGrid grid = scenario_grid(cfg);

    OuRun run = run_ou_benchmark(prm, grid, cfg.seed);

    if (!cfg.selectors.empty()) {
        CsvWriter csv;
        std::vector<std::string> cols = {"t", "z_true"};
        if (selected(cfg, "kb")) { cols.push_back("kb_mean"); cols.push_back("kb_var"); }
        if (selected(cfg, "zakai")) { cols.push_back("zakai_mean"); cols.push_back("zakai_var"); }
        if (selected(cfg, "particles")) { cols.push_back("pf_mean"); cols.push_back("pf_var"); }
        csv.header(cols);
        for (int k = 0; k <= grid.n_steps; ++k) {
            std::vector<double> row = {grid.time(k), run.z_true(k)};
            if (selected(cfg, "kb")) { row.push_back(run.kb.mean(k)); row.push_back(run.kb.variance(k)); }
            if (selected(cfg, "zakai")) { row.push_back(run.zakai_mean(k)); row.push_back(run.zakai_var(k)); }
            if (selected(cfg, "particles")) { row.push_back(run.pf_mean(k)); row.push_back(run.pf_var(k)); }
            csv.row(row);
        }
        collector.add("moments.csv", csv.str());

        if (selected(cfg, "density_snapshots")) {
            CsvWriter dcsv;
            dcsv.header({"z", "value"});
            const GridDensity& d = run.final_density;
            double mass = d.mass();
            for (int j = 0; j < d.size(); ++j) dcsv.row({d.z_at(j), d.values(j) / mass});
            collector.add("density_final.csv", dcsv.str());
        }
    }

    double rmse = 0;
    for (int k = 0; k <= grid.n_steps; ++k) {
        double e = run.zakai_mean(k) - run.kb.mean(k);
        rmse += e * e;
    }
    rmse = std::sqrt(rmse / (grid.n_steps + 1));
    double p_stat = (-2.0 * prm.a + std::sqrt(4.0 * prm.a * prm.a +
                     4.0 * prm.g * prm.g * prm.sigma * prm.sigma)) / (2.0 * prm.g * prm.g);
    summary["kb_variance_T"] = run.kb.variance(grid.n_steps);
    summary["kb_variance_stationary"] = p_stat;
    summary["zakai_vs_kb_mean_rmse"] = rmse;
    if (prm.with_particles) {
        summary["pf_mean_T"] = run.pf_mean(grid.n_steps);
        summary["pf_vs_zakai_mean_T"] = std::abs(run.pf_mean(grid.n_steps) - run.zakai_mean(grid.n_steps));
    }

    if (cfg.emit_svg) {
        SvgSeries kb, zk;
        kb.label = "kalman-bucy";
        zk.label = "zakai pde";
        zk.color = "#d62728";
        for (int k = 0; k <= grid.n_steps; ++k) {
            kb.x.push_back(grid.time(k));
            kb.y.push_back(run.kb.mean(k));
            zk.x.push_back(grid.time(k));
            zk.y.push_back(run.zakai_mean(k));
        }
        collector.add("posterior_means.svg",
                      render_line_plot("posterior mean estimates", "t", "mean", {kb, zk}));
    }
}

// ---------------------------------------------------------------------------
// toyfock_oracle

void run_toyfock_scenario(const ScenarioConfig& cfg, OutputCollector& collector, json& summary) {
    int n_slots = static_cast<int>(minitoml::get_int(cfg.raw, "model.n_slots", 8));
    if (n_slots < 1 || n_slots > 14) throw ConfigError("toyfock: n_slots must be in [1, 14]");
    MarkovModel model = qubit_model_from_config(cfg);
    auto b0 = vec3(cfg.raw, "model.bloch0", {1, 0, 0});
    cvec psi0(2);
    {
        // pure state on the Bloch sphere
        double theta = std::acos(std::clamp(b0[2], -1.0, 1.0));
        double phi = std::atan2(b0[1], b0[0]);
        psi0 << std::cos(0.5 * theta), std::polar(std::sin(0.5 * theta), phi);
    }
    double dt = cfg.dt;

    auto branches = enumerate_records(model.H, model.L, dt, n_slots, psi0);
    double total_prob = 0;
    cmat averaged = cmat::Zero(2, 2);
    for (const auto& b : branches) {
        total_prob += b.probability;
        averaged += b.probability * (b.final_state * b.final_state.adjoint());
    }

    ToyFockLattice lattice{n_slots, dt, 2, 2};
    JointHistory hist = repeated_interaction_evolve(model.H, model.L, lattice, psi0);
    cmat unconditioned = field_traced_density(hist, n_slots);

    if (!cfg.selectors.empty() && selected(cfg, "records")) {
        CsvWriter csv;
        std::vector<std::string> cols;
        for (int k = 0; k < n_slots; ++k) cols.push_back("bit" + std::to_string(k));
        for (const auto& c : {"probability", "bloch_x", "bloch_y", "bloch_z"}) cols.push_back(c);
        csv.header(cols);
        for (const auto& b : branches) {
            std::vector<double> row;
            for (int bit : b.record) row.push_back(bit > 0 ? 1 : 0);
            cmat rho = b.final_state * b.final_state.adjoint();
            auto bloch = bloch_from_rho(rho);
            row.push_back(b.probability);
            row.push_back(bloch[0]);
            row.push_back(bloch[1]);
            row.push_back(bloch[2]);
            csv.row(row);
        }
        collector.add("records.csv", csv.str());
    }

    summary["n_slots"] = n_slots;
    summary["total_probability"] = total_prob;
    summary["tower_property_residual"] = trace_distance(averaged, unconditioned);
    summary["ito_table_deviation"] = ito_table_check(dt, 2);
}

}  // namespace

// ---------------------------------------------------------------------------

ScenarioConfig parse_scenario(const std::string& text) {
    ScenarioConfig cfg;
    cfg.source_text = text;
    cfg.raw = minitoml::parse(text);
    cfg.kind = minitoml::get_string(cfg.raw, "scenario.kind");
    cfg.seed = static_cast<std::uint64_t>(minitoml::get_int(cfg.raw, "scenario.seed", 1));
    cfg.n_trajectories = static_cast<int>(minitoml::get_int(cfg.raw, "scenario.n_trajectories", 1));
    cfg.t_end = minitoml::get_double(cfg.raw, "time.t_end", 1.0);
    cfg.dt = minitoml::get_double(cfg.raw, "time.dt", 1e-3);
    cfg.emit_svg = minitoml::get_bool(cfg.raw, "outputs.svg", false);
    if (minitoml::has(cfg.raw, "outputs.selectors")) {
        for (const auto& v : minitoml::get(cfg.raw, "outputs.selectors").as_array())
            cfg.selectors.push_back(v.as_string());
    } else {
        const auto& known = known_selectors(cfg.kind);
        cfg.selectors.assign(known.begin(), known.end());
    }
    validate_scenario(cfg);
    return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

void validate_scenario(const ScenarioConfig& cfg) {
    static const std::set<std::string> kinds = {"qubit_homodyne", "free_particle", "classical_ou",
                                                "toyfock_oracle", "custom"};
    if (!kinds.count(cfg.kind)) throw ConfigError("unknown scenario kind: " + cfg.kind);
    if (cfg.n_trajectories < 0 || cfg.n_trajectories > 1000000)
        throw ConfigError("scenario.n_trajectories out of range [0, 1e6]");
    if (!(cfg.dt > 0) || !(cfg.dt <= 1.0)) throw ConfigError("time.dt out of range (0, 1]");
    if (!(cfg.t_end > 0) || !(cfg.t_end <= 1e4)) throw ConfigError("time.t_end out of range (0, 1e4]");
    const auto& known = known_selectors(cfg.kind);
    for (const auto& s : cfg.selectors)
        if (!known.count(s)) throw ConfigError("unknown output selector: " + s);
}

std::string RunManifest::to_json() const {
    json j;
    j["config_digest"] = config_digest;
    j["seed"] = seed;
    j["tool_version"] = tool_version;
    j["started_at"] = started_at;
    j["finished_at"] = finished_at;
    j["outputs"] = json::array();
    for (const auto& f : outputs) j["outputs"].push_back({{"name", f.name}, {"digest", f.digest}});
    return j.dump(2) + "\n";
}

RunManifest run_scenario(const ScenarioConfig& cfg, const std::string& out_dir) {
    validate_scenario(cfg);
    RunManifest manifest;
    manifest.config_digest = fnv1a64_hex(cfg.source_text);
    manifest.seed = cfg.seed;
    manifest.tool_version = kToolVersion;
    manifest.started_at = iso_now();

    fs::create_directories(out_dir);
    OutputCollector collector;
    collector.dir = out_dir;

    if (cfg.n_trajectories > 0) {
        json summary;
        summary["kind"] = cfg.kind;
        summary["seed"] = cfg.seed;
        summary["config_digest"] = manifest.config_digest;
        if (cfg.kind == "qubit_homodyne" || cfg.kind == "custom")
            run_qubit_scenario(cfg, collector, summary);
        else if (cfg.kind == "free_particle")
            run_free_particle_scenario(cfg, collector, summary);
        else if (cfg.kind == "classical_ou")
            run_classical_scenario(cfg, collector, summary);
        else if (cfg.kind == "toyfock_oracle")
            run_toyfock_scenario(cfg, collector, summary);
        collector.add("summary.json", summary.dump(2) + "\n");
    }

    manifest.outputs = collector.files;
    manifest.finished_at = iso_now();
    write_text_file((fs::path(out_dir) / "manifest.json").string(), manifest.to_json());
    return manifest;
}

std::string convergence_report(const ScenarioConfig& cfg, const std::vector<double>& dt_list) {
    if (dt_list.size() < 2) throw ConfigError("convergence: need at least two dt values");
    json j;
    j["kind"] = cfg.kind;
    j["points"] = json::array();
    std::vector<double> log_dt, log_err;

    for (double dt : dt_list) {
        if (!(dt > 0)) throw ConfigError("convergence: dt must be positive");
        double metric = 0;
        std::string metric_name;
        if (cfg.kind == "qubit_homodyne" || cfg.kind == "custom") {
            metric_name = "zakai_belavkin_sup_trace_distance";
            MarkovModel model = qubit_model_from_config(cfg);
            auto b0 = vec3(cfg.raw, "model.bloch0", {1, 0, 0});
            int n_steps = std::max(1, static_cast<int>(std::llround(cfg.t_end / dt)));
            TimeGrid grid(0.0, cfg.t_end / n_steps, n_steps);
            metric = zakai_belavkin_sup_distance(model, rho_from_bloch(b0[0], b0[1], b0[2]),
                                                 grid, cfg.seed);
        } else if (cfg.kind == "free_particle") {
            metric_name = "matrix_vs_scalar_riccati_frobenius";
            double m = minitoml::get_double(cfg.raw, "model.m", 1.0);
            double lambda = minitoml::get_double(cfg.raw, "model.lambda", 2.0);
            int n_steps = std::max(1, static_cast<int>(std::llround(cfg.t_end / dt)));
            TimeGrid grid(0.0, cfg.t_end / n_steps, n_steps);
            GaussianModel gm = free_particle_model(m, lambda);
            rmat p = rmat::Identity(2, 2);
            for (int k = 0; k < grid.n_steps; ++k) p = riccati_step(p, gm, grid.time(k), grid.dt);
            auto omega = scalar_riccati_free_particle(m, lambda, grid);
            metric = (p - p_from_omega(omega.back())).norm();
        } else if (cfg.kind == "classical_ou") {
            metric_name = "zakai_vs_kb_mean_rmse";
            OuParams prm;
            prm.a = minitoml::get_double(cfg.raw, "model.a", 1.0);
            prm.sigma = minitoml::get_double(cfg.raw, "model.sigma", 1.0);
            prm.g = minitoml::get_double(cfg.raw, "model.g", 1.0);
            prm.with_particles = false;
            int n_steps = std::max(1, static_cast<int>(std::llround(cfg.t_end / dt)));
            TimeGrid grid(0.0, cfg.t_end / n_steps, n_steps);
            OuRun run = run_ou_benchmark(prm, grid, cfg.seed);
            double acc = 0;
            for (int k = 0; k <= grid.n_steps; ++k) {
                double e = run.zakai_mean(k) - run.kb.mean(k);
                acc += e * e;
            }
            metric = std::sqrt(acc / (grid.n_steps + 1));
        } else if (cfg.kind == "toyfock_oracle") {
            metric_name = "conditioning_vs_filter_trace_distance";
            MarkovModel model = qubit_model_from_config(cfg);
            auto b0 = vec3(cfg.raw, "model.bloch0", {1, 0, 0});
            double theta = std::acos(std::clamp(b0[2], -1.0, 1.0));
            double phi = std::atan2(b0[1], b0[0]);
            cvec psi0(2);
            psi0 << std::cos(0.5 * theta), std::polar(std::sin(0.5 * theta), phi);
            int n_slots = std::max(1, static_cast<int>(std::llround(cfg.t_end / dt)));
            metric = toyfock_filter_distance(model, psi0, dt, n_slots, 40, cfg.seed);
        } else {
            throw ConfigError("convergence: unsupported scenario kind " + cfg.kind);
        }
        j["metric"] = metric_name;
        j["points"].push_back({{"dt", dt}, {"value", metric}});
        log_dt.push_back(std::log(dt));
        log_err.push_back(std::log(std::max(metric, 1e-300)));
    }

    double n = static_cast<double>(log_dt.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < log_dt.size(); ++i) {
        sx += log_dt[i];
        sy += log_err[i];
        sxx += log_dt[i] * log_dt[i];
        sxy += log_dt[i] * log_err[i];
    }
    j["observed_order"] = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return j.dump(2) + "\n";
}

namespace {
void set_param(minitoml::Table& t, const std::string& path, double value) {
    size_t dot = path.find('.');
    std::string head = path.substr(0, dot);
    if (dot == std::string::npos) {
        minitoml::Value v;
        v.data = value;
        t[head] = v;
        return;
    }
    auto it = t.find(head);
    if (it == t.end() || !it->second.is_table()) {
        minitoml::Value v;
        v.data = minitoml::Table{};
        t[head] = v;
        it = t.find(head);
    }
    set_param(std::get<minitoml::Table>(it->second.data), path.substr(dot + 1), value);
}
}  // namespace

std::string sweep_report(const ScenarioConfig& cfg, const std::string& param,
                         const std::vector<double>& values, const std::string& out_dir) {
    if (values.empty()) throw ConfigError("sweep: need at least one value");
    json j;
    j["kind"] = cfg.kind;
    j["param"] = param;
    j["runs"] = json::array();
    for (size_t i = 0; i < values.size(); ++i) {
        ScenarioConfig run_cfg = cfg;
        set_param(run_cfg.raw, param, values[i]);
        run_cfg.source_text = cfg.source_text + "\n# sweep " + param + " = " + num(values[i]) + "\n";
        validate_scenario(run_cfg);
        char sub[64];
        std::snprintf(sub, sizeof(sub), "sweep_%03zu", i);
        fs::path dir = fs::path(out_dir) / sub;
        RunManifest mf = run_scenario(run_cfg, dir.string());
        json entry;
        entry["value"] = values[i];
        entry["dir"] = sub;
        entry["config_digest"] = mf.config_digest;
        j["runs"].push_back(entry);
    }
    std::string report = j.dump(2) + "\n";
    write_text_file((fs::path(out_dir) / "sweep.json").string(), report);
    return report;
}

}  // namespace qfilter
