#include "matherlab/cli/cli.hpp"

#include "matherlab/flow/flow.hpp"
#include "matherlab/mather/mather.hpp"
#include "matherlab/normalform/normalform.hpp"

#include <Eigen/Core>
#include <boost/version.hpp>

#include <chrono>
#include <ctime>
#include <iomanip>
#include <mutex>
#include <random>
#include <sstream>

namespace matherlab::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using model::FourierTaylorSeries;

namespace {

template <class T>
T get(const json& o, const char* key, T def) {
    return o.is_object() && o.contains(key) ? o[key].get<T>() : def;
}

Vec vec_of(const json& a) {
    Vec v(static_cast<int>(a.size()));
    for (int i = 0; i < v.size(); ++i) v[i] = a[i].get<double>();
    return v;
}

Mat mat_of(const json& a) {
    const int n = static_cast<int>(a.size());
    Mat M(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) M(i, j) = a[i][j].get<double>();
    return M;
}

int sup_norm(const IntVec& k) {
    int m = 0;
    for (int a : k) m = std::max(m, std::abs(a));
    return m;
}

FourierTaylorSeries trig_series(int n, const json& modes) {
    int K = 1;
    for (const auto& m : modes) K = std::max(K, sup_norm(m["k"].get<IntVec>()));
    FourierTaylorSeries V(n, Vec::Zero(n), K, 0);
    for (const auto& m : modes) V.add_real_mode(m["k"].get<IntVec>(), IntVec(n, 0), get(m, "cos", 0.0), get(m, "sin", 0.0));
    return V;
}

FourierTaylorSeries taylor_series(int n, const Vec& base, const json& terms, int min_d) {
    int K = 1, d = min_d;
    for (const auto& t : terms) {
        K = std::max(K, sup_norm(t["k"].get<IntVec>()));
        int deg = 0;
        for (int e : t["i"].get<IntVec>()) deg += e;
        d = std::max(d, deg);
    }
    FourierTaylorSeries s(n, base, K, d);
    for (const auto& t : terms)
        s.add_real_mode(t["k"].get<IntVec>(), t["i"].get<IntVec>(), get(t, "cos", 0.0), get(t, "sin", 0.0));
    return s;
}

std::shared_ptr<model::MechanicalHamiltonian> mechanical(const json& sys) {
    const std::string type = sys["type"];
    if (type == "pendulum") return model::pendulum(sys["epsilon"].get<double>());
    if (type == "pendulum_rotor") return model::pendulum_rotor(sys["epsilon"].get<double>(), sys["mu"].get<double>());
    if (type == "product_pendulum") {
        Vec eps = vec_of(sys["epsilon"]);
        Mat A = sys.contains("A") ? mat_of(sys["A"]) : Mat::Identity(eps.size(), eps.size());
        return model::product_pendulum(A, eps);
    }
    if (type == "mechanical") {
        Mat A = mat_of(sys["A"]);
        const int n = static_cast<int>(A.rows());
        return std::make_shared<model::MechanicalHamiltonian>(
            A, trig_series(n, sys.contains("potential") ? sys["potential"] : json::array()));
    }
    throw DomainError("system type '" + type + "' is not mechanical");
}

model::NearIntegrableSystem near_integrable(const json& sys) {
    const json& h = sys["h"];
    int n = sys.contains("base_point") ? static_cast<int>(sys["base_point"].size()) : static_cast<int>(h["A"].size());
    Vec base = sys.contains("base_point") ? vec_of(sys["base_point"]) : Vec::Zero(n);
    json terms = h.contains("terms") ? h["terms"] : json::array();
    if (h.contains("A")) {
        Mat A = mat_of(h["A"]);
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j) {
                IntVec e(n, 0);
                ++e[i];
                ++e[j];
                double c = i == j ? 0.5 * A(i, i) : 0.5 * (A(i, j) + A(j, i));
                if (c != 0) terms.push_back({{"k", IntVec(n, 0)}, {"i", e}, {"cos", c}});
            }
    }
    model::NearIntegrableSystem s;
    s.h = taylor_series(n, base, terms, 2);
    s.P = taylor_series(n, base, sys["P"], 0);
    s.epsilon = sys["epsilon"].get<double>();
    s.smoothness_r = get(sys, "smoothness_r", s.smoothness_r);
    s.R = get(sys, "R", s.R);
    s.m = get(sys, "m", s.m);
    s.M = get(sys, "M", s.M);
    return s;
}

action::ReducedSystem reduced(const json& sys) {
    auto H = mechanical(sys);
    if (!sys.contains("reduce")) return {H, 0.0};
    const json& r = sys["reduce"];
    return action::reduce(H, r["energy"].get<double>(), get(r, "eliminate", 1));
}

weakkam::KernelOptions kernel_options(const json& params) {
    weakkam::KernelOptions o;
    if (!params.contains("kernel")) return o;
    const json& k = params["kernel"];
    o.nx = get(k, "nx", o.nx);
    o.dt = get(k, "dt", o.dt);
    o.slices = get(k, "slices", o.slices);
    o.max_speed = get(k, "max_speed", o.max_speed);
    return o;
}

resonance::RationalVec rationals(const json& a) {
    resonance::RationalVec r;
    for (const auto& w : a) {
        if (w.is_number_integer()) {
            r.emplace_back(w.get<long long>());
            continue;
        }
        const std::string s = w;
        auto slash = s.find('/');
        try {
            long long p = std::stoll(s.substr(0, slash));
            long long q = slash == std::string::npos ? 1 : std::stoll(s.substr(slash + 1));
            if (q == 0) throw DomainError("zero denominator in '" + s + "'");
            r.emplace_back(p, q);
        } catch (const std::logic_error&) {
            throw DomainError("cannot parse rational '" + s + "'");
        }
    }
    return r;
}

std::vector<double> samples_of(const json& v) {
    std::vector<double> out;
    if (v.is_array()) {
        for (const auto& x : v) out.push_back(x.get<double>());
    } else {
        const double lo = v["min"], hi = v["max"];
        const int n = v["count"];
        for (int i = 0; i < n; ++i) out.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
    }
    return out;
}

std::string csv_number(double x) {
    std::ostringstream os;
    os << std::setprecision(17) << x;
    return os.str();
}

class Outputs {
public:
    explicit Outputs(fs::path dir) : dir_(std::move(dir)) {}
    void write(const std::string& name, const std::string& content) {
        write_atomic(dir_ / name, content);
        files_.push_back({name, content.size(), sha256_hex(content)});
    }
    void json_file(const std::string& name, const json& j) { write(name, j.dump(2) + "\n"); }
    template <class F>
    void stream(const std::string& name, F&& f) {
        std::ostringstream os;
        f(os);
        write(name, os.str());
    }
    json listing() const {
        json a = json::array();
        for (const auto& f : files_) a.push_back({{"name", f.name}, {"bytes", f.bytes}, {"sha256", f.sha}});
        return a;
    }
    std::vector<std::string> names() const {
        std::vector<std::string> v;
        for (const auto& f : files_) v.push_back(f.name);
        return v;
    }

private:
    struct File {
        std::string name;
        size_t bytes;
        std::string sha;
    };
    fs::path dir_;
    std::vector<File> files_;
};

json run_normal_form(const json& sys, const json& p, unsigned seed, Outputs& out) {
    auto nis = near_integrable(sys);
    const Vec y = vec_of(p["y_lambda"]);
    const auto omega = rationals(p["omega"]);
    normalform::NormalFormOptions o;
    o.steps = get(p, "steps", o.steps);
    o.sigma = get(p, "sigma", o.sigma);
    o.K0 = get(p, "K0", o.K0);
    o.eps0 = get(p, "eps0", o.eps0);
    if (p.contains("K_cut")) o.K_cut = p["K_cut"].get<int>();
    if (p.contains("d_cut")) o.d_cut = p["d_cut"].get<int>();
    o.lie_order = get(p, "lie_order", o.lie_order);
    o.tail_budget = get(p, "tail_budget", o.tail_budget);
    o.check_samples = get(p, "check_samples", o.check_samples);
    o.symplectic_samples = get(p, "symplectic_samples", o.symplectic_samples);
    o.ode_tol = get(p, "ode_tol", o.ode_tol);
    o.verify = get(p, "verify", o.verify);
    o.seed = seed;

    std::vector<double> eps = p.contains("epsilons") ? p["epsilons"].get<std::vector<double>>()
                                                     : std::vector<double>{nis.epsilon};
    auto sweep = normalform::epsilon_sweep(nis, y, omega, eps, o);

    json results = json::array();
    for (const auto& r : sweep) results.push_back(normalform::to_json(r));
    out.json_file("normal_form.json", results);
    out.stream("norms.csv", [&](std::ostream& os) {
        os << "epsilon,piece,c0,c1,c2\n";
        for (const auto& r : sweep)
            for (const auto& [piece, n] : r.norms)
                os << csv_number(r.epsilon) << ',' << piece << ',' << csv_number(n.c0) << ',' << csv_number(n.c1)
                   << ',' << csv_number(n.c2) << '\n';
    });

    json summary;
    summary["epsilons"] = eps;
    json per = json::array();
    for (const auto& r : sweep)
        per.push_back({{"epsilon", r.epsilon},
                       {"verified", r.verified},
                       {"symplectic_defect", r.symplectic_defect},
                       {"composition_error", r.composition_error},
                       {"nonresonant_before", r.nonresonant_before},
                       {"nonresonant_after_step1", r.nonresonant_after_step1},
                       {"R_r_c0", r.norms.count("R_r") ? r.norms.at("R_r").c0 : 0.0}});
    summary["runs"] = per;

    if (sweep.size() >= 2) {
        auto rep = normalform::verify_remainder(sweep, get(p, "remainder_slack", 0.15));
        out.json_file("remainder.json", normalform::to_json(rep));
        out.stream("exponents.csv", [&](std::ostream& os) {
            os << "piece,window,order,measured,reference,pass\n";
            for (const auto& f : rep.fits)
                os << f.piece << ',' << f.window << ',' << f.order << ',' << csv_number(f.measured) << ','
                   << csv_number(f.reference) << ',' << (f.pass ? 1 : 0) << '\n';
        });
        summary["remainder_pass"] = rep.pass;
    }

    if (p.contains("covering")) {
        const json& c = p["covering"];
        auto h = resonance::ActionFunction::from_series(nis.h);
        std::vector<Vec> wp;
        for (const auto& w : c["waypoints"]) wp.push_back(vec_of(w));
        auto path = resonance::build_resonant_path(h, c["energy"].get<double>(), wp, c["delta"].get<double>(),
                                                   get(c, "K_max", 12));
        auto cover = resonance::cover_path(path, h, eps.front(), o.sigma, get(c, "K", 1.0), get(c, "m", 1.0));
        out.json_file("resonant_path.json", resonance::to_json(path));
        out.json_file("cover.json", resonance::to_json(cover));
        summary["cover_balls"] = cover.balls.size();
        summary["covers_path"] = cover.covers_path;
    }
    return summary;
}

json run_alpha_beta(const json& sys, const json& p, unsigned seed, Outputs& out) {
    mather::AlphaBetaOptions o;
    o.kernel = kernel_options(p);
    o.max_denominator = get(p, "max_denominator", o.max_denominator);
    o.omega_min = get(p, "omega_min", o.omega_min);
    o.omega_max = get(p, "omega_max", o.omega_max);
    o.loop.loop.m = get(p, "loop_m", o.loop.loop.m);
    o.loop.starts = get(p, "starts", o.loop.starts);
    o.ode_tol = get(p, "ode_tol", o.ode_tol);
    o.agreement_factor = get(p, "agreement_factor", o.agreement_factor);
    mather::AlphaBeta ab(reduced(sys), o);
    const auto method =
        get<std::string>(p, "method", "periodic_orbit") == "weak_kam" ? mather::AlphaMethod::weak_kam
                                                                        : mather::AlphaMethod::periodic_orbit;

    std::vector<double> cs = p.contains("c") ? samples_of(p["c"]) : std::vector<double>{};
    std::vector<double> ws = p.contains("omega") ? samples_of(p["omega"]) : std::vector<double>{};
    const int random = get(p, "random_pairs", 0);
    if (random > 0) {
        auto cr = get(p, "c_range", std::vector<double>{-1.0, 1.0});
        auto wr = get(p, "omega_range", std::vector<double>{-1.0, 1.0});
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> uc(cr[0], cr[1]), uw(wr[0], wr[1]);
        for (int i = 0; i < random; ++i) {
            cs.push_back(uc(rng));
            ws.push_back(uw(rng));
        }
    }
    if (cs.empty()) cs = samples_of(json{{"min", -1.0}, {"max", 1.0}, {"count", 21}});
    if (ws.empty()) ws = samples_of(json{{"min", -1.0}, {"max", 1.0}, {"count", 21}});

    auto d = mather::alpha_beta_tables(ab, cs, ws, method);
    out.stream("alpha.csv", [&](std::ostream& os) { mather::write_alpha_csv(d, os); });
    out.stream("beta.csv", [&](std::ostream& os) { mather::write_beta_csv(d, os); });
    out.stream("duality_residuals.csv", [&](std::ostream& os) { mather::write_duality_csv(d, os); });

    json summary = {{"alpha_samples", cs.size()},
                    {"beta_samples", ws.size()},
                    {"min_residual", d.min_residual},
                    {"max_dual_residual", d.max_dual_residual},
                    {"alpha_convex", d.alpha_convex},
                    {"beta_convex", d.beta_convex},
                    {"method", mather::to_string(method)}};
    if (ab.system().K->autonomous()) summary["critical_energy"] = ab.critical_energy();

    if (p.contains("fenchel")) {
        json fl = json::array();
        const double lo = *std::min_element(cs.begin(), cs.end()), hi = *std::max_element(cs.begin(), cs.end());
        for (const auto& w : p["fenchel"]) {
            auto iv = mather::fenchel_legendre(ab, w.get<double>(), lo, hi, 64, get(p, "fenchel_tol", 1e-5), method);
            fl.push_back({{"omega", w}, {"intervals", iv}});
        }
        out.json_file("fenchel.json", fl);
    }
    if (get(p, "flat", false)) {
        mather::FlatOptions fo;
        fo.g_max = get(p, "flat_g_max", fo.g_max);
        auto f = mather::flat_polygon(mechanical(sys), fo);
        out.json_file("flat.json", mather::to_json(f));
        summary["flat_vertices"] = f.vertices.size();
    }
    return summary;
}

json run_channel(const json& sys, const json& p, Outputs& out) {
    mather::ChannelOptions o;
    o.minimal.loop.m = get(p, "m", o.minimal.loop.m);
    o.minimal.starts = get(p, "starts", o.minimal.starts);
    o.graded = get(p, "graded", o.graded);
    o.global_check = get(p, "global_check", o.global_check);
    o.log_spacing = get(p, "log_spacing", o.log_spacing);
    o.tail_fraction = get(p, "tail_fraction", o.tail_fraction);
    o.jump_tol = get(p, "jump_tol", o.jump_tol);
    o.ode_tol = get(p, "ode_tol", o.ode_tol);
    auto d = mather::channel_track(mechanical(sys), p["g"].get<IntVec>(), p["E0"].get<double>(),
                                   p["E1"].get<double>(), get(p, "steps", 12), o);
    out.stream("channel.csv", [&](std::ostream& os) { mather::write_channel_csv(d, os); });
    json j = mather::to_json(d);
    out.json_file("channel.json", j);
    return j;
}

json run_barrier(const json& sys, const json& p, Outputs& out) {
    weakkam::ActionKernel K(reduced(sys), kernel_options(p));
    auto cl = mather::chain_class(K, get(p, "c", 0.0), {}, get(p, "delta_prime", 0.1), get(p, "cover", 1));
    auto ms = weakkam::mane_section_analysis(cl.barrier, cl.section, cl.delta_prime, &cl.aubry);
    const auto& B = cl.barrier.B;
    out.stream("barrier.csv", [&](std::ostream& os) {
        const bool two = B.grid.dims() == 2;
        os << (two ? "x,tau,B,argmin\n" : "x,B,argmin\n");
        for (int k = 0; k < B.size(); ++k) {
            auto idx = B.grid.unflat(k);
            os << csv_number(idx[0] * B.grid.spacing(0)) << ',';
            if (two) os << csv_number(idx[1] * B.grid.spacing(1)) << ',';
            os << csv_number(B[k]) << ',' << (cl.barrier.argmin[k] ? 1 : 0) << '\n';
        }
    });
    json j = {{"c", cl.c},
              {"alpha", cl.alpha},
              {"barrier", weakkam::to_json(cl.barrier)},
              {"section", weakkam::to_json(ms)}};
    out.json_file("barrier.json", j);
    return {{"alpha", cl.alpha}, {"totally_disconnected", ms.totally_disconnected}, {"max_length", ms.max_length}};
}

json run_chain(const json& sys, const json& p, Outputs& out) {
    weakkam::ActionKernel K(reduced(sys), kernel_options(p));
    const json& cls = p["classes"];
    std::vector<mather::ChainClass> path(cls.size());
    const double dp = get(p, "delta_prime", 0.1);
    const int cover = get(p, "cover", 1);
    parallel_for(static_cast<int>(cls.size()), [&](int i) {
        std::vector<std::pair<double, double>> support;
        if (cls[i].contains("support"))
            for (const auto& s : cls[i]["support"]) support.push_back({s[0].get<double>(), s[1].get<double>()});
        path[i] = mather::chain_class(K, cls[i]["c"].get<double>(), support, dp, cover);
    });
    auto r = mather::chain_assemble(path, get(p, "alpha_tol", 1e-6));
    json j = mather::to_json(r);
    for (size_t i = 0; i < path.size(); ++i) j["classes"][i]["alpha"] = path[i].alpha;
    out.json_file("chain_report.json", j);
    return {{"complete", r.complete}, {"chain_length", r.chain.size()}, {"classes", r.classes.size()}};
}

json run_connect(const json& sys, const json& p, Outputs& out) {
    mather::ConnectGeometry g;
    if (p.contains("geometry")) {
        const json& q = p["geometry"];
        g.cover = get(q, "cover", g.cover);
        g.a_minus = get(q, "a_minus", g.a_minus);
        g.a_plus = get(q, "a_plus", g.a_plus);
        g.transition = get(q, "transition", g.transition);
        g.transition_width = get(q, "transition_width", g.transition_width);
        g.bump_center = get(q, "bump_center", g.bump_center);
        g.bump_radius = get(q, "bump_radius", g.bump_radius);
        g.horizon = get(q, "horizon", g.horizon);
        g.nodes = get(q, "nodes", g.nodes);
        g.rate = get(q, "rate", g.rate);
        g.section_time = get(q, "section_time", g.section_time);
        g.disk_radius = get(q, "disk_radius", g.disk_radius);
        g.window = get(q, "window", g.window);
    }
    const auto mode = get<std::string>(p, "mode", "space") == "time" ? mather::StepMode::time_step
                                                                       : mather::StepMode::space_step;
    auto o = mather::connecting_orbit(mechanical(sys), vec_of(p["c"]), vec_of(p["c_prime"]), mode, g);
    out.stream("orbit.csv", [&](std::ostream& os) { mather::write_orbit_csv(o, os); });
    json j = mather::to_json(o);
    out.json_file("connect.json", j);
    return {{"dist_minus", o.dist_minus},
            {"dist_plus", o.dist_plus},
            {"margin", o.certificate.margin},
            {"passed", o.certificate.passed}};
}

json run_gronwall(const json& sys, const json& p, Outputs& out) {
    model::HamiltonianPtr H0, He;
    if (sys["type"] == "near_integrable") {
        auto nis = near_integrable(sys);
        H0 = std::make_shared<model::SeriesHamiltonian>(nis.h);
        He = std::make_shared<model::SeriesHamiltonian>(nis.total());
    } else {
        auto M = mechanical(sys);
        const int n = M->dof();
        FourierTaylorSeries dV = trig_series(n, p["perturbation"]);
        const int K = std::max(M->V().cutoff_K(), dV.cutoff_K());
        FourierTaylorSeries V = M->V().with_cutoffs(K, 0) + dV.with_cutoffs(K, 0);
        H0 = M;
        He = std::make_shared<model::MechanicalHamiltonian>(M->A(), V);
    }
    std::optional<double> A, B;
    if (p.contains("A")) A = p["A"].get<double>();
    if (p.contains("B")) B = p["B"].get<double>();
    auto rep = flow::gronwall_compare(flow::VectorField::from_hamiltonian(H0), flow::VectorField::from_hamiltonian(He),
                                      vec_of(p["z0"]), p["T"].get<double>(), get(p, "samples", 50),
                                      get(p, "probe_radius", 0.05), A, B);
    out.stream("gronwall.csv", [&](std::ostream& os) {
        os << "t,measured,bound\n";
        for (size_t i = 0; i < rep.t.size(); ++i)
            os << csv_number(rep.t[i]) << ',' << csv_number(rep.measured[i]) << ',' << csv_number(rep.bound[i])
               << '\n';
    });
    json j = {{"A", rep.A}, {"B", rep.B}, {"samples", rep.t.size()}, {"violations", rep.violations}};
    out.json_file("gronwall.json", j);
    return j;
}

std::string utc_now() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

}  // namespace

RunResult run(Scenario s, const Config& cfg, const RunOptions& opt) {
    auto diags = validate(cfg, s);
    bool bad = false;
    for (const auto& d : diags) bad |= d.level == Diagnostic::Level::error;
    if (bad) throw ConfigError(diags);

    RunResult res;
    for (const auto& d : diags) {
        warn(d.format());
        res.warnings.push_back(d.format());
    }
    std::mutex mu;
    set_warning_sink([&](const std::string& m) {
        std::lock_guard lk(mu);
        res.warnings.push_back(m);
    });
    struct Detach {
        ~Detach() { set_warning_sink({}); }
    } detach;

    fs::create_directories(opt.out);
    set_thread_count(opt.threads);
    const auto started = utc_now();
    const auto t0 = std::chrono::steady_clock::now();

    const json& sys = cfg.doc["system"];
    const json params = cfg.doc.contains("params") ? cfg.doc["params"] : json::object();
    Outputs out(opt.out);
    switch (s) {
        case Scenario::normal_form: res.summary = run_normal_form(sys, params, opt.seed, out); break;
        case Scenario::alpha_beta: res.summary = run_alpha_beta(sys, params, opt.seed, out); break;
        case Scenario::channel: res.summary = run_channel(sys, params, out); break;
        case Scenario::barrier: res.summary = run_barrier(sys, params, out); break;
        case Scenario::chain: res.summary = run_chain(sys, params, out); break;
        case Scenario::connect: res.summary = run_connect(sys, params, out); break;
        case Scenario::gronwall: res.summary = run_gronwall(sys, params, out); break;
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json m;
    m["manifest_version"] = 1;
    m["scenario"] = to_string(s);
    m["config_path"] = opt.config_path;
    m["config"] = cfg.doc;
    m["inputs_sha256"] = sha256_hex(std::string(to_string(s)) + "\n" + cfg.doc.dump() + "\nseed=" +
                                    std::to_string(opt.seed));
    m["seed"] = opt.seed;
    m["threads"] = opt.threads;
    m["versions"] = {{"matherlab", version()},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"boost", BOOST_LIB_VERSION},
                     {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
                     {"compiler", __VERSION__},
                     {"cxx_standard", __cplusplus}};
    m["started_utc"] = started;
    m["wall_time_s"] = wall;
    m["outputs"] = out.listing();
    m["summary"] = res.summary;
    m["warnings"] = res.warnings;
    write_atomic(opt.out / "manifest.json", m.dump(2) + "\n");
    res.files = out.names();
    res.files.push_back("manifest.json");
    return res;
}

}  // namespace matherlab::cli
