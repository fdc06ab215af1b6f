#include "matherlab/cli/cli.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace matherlab::cli {

using nlohmann::json;

namespace {

const std::vector<std::pair<Scenario, std::string>> kScenarios = {
    {Scenario::normal_form, "normal-form"}, {Scenario::alpha_beta, "alpha-beta"}, {Scenario::channel, "channel"},
    {Scenario::barrier, "barrier"},         {Scenario::chain, "chain"},           {Scenario::connect, "connect"},
    {Scenario::gronwall, "gronwall"}};

enum class Kind { number, integer, boolean, string, array, object, number_or_array, array_or_object };

struct Field {
    Kind kind;
    bool required = false;
};

using Schema = std::map<std::string, Field>;

const Schema kTop = {{"scenario", {Kind::string}},
                     {"description", {Kind::string}},
                     {"seed", {Kind::integer}},
                     {"system", {Kind::object, true}},
                     {"params", {Kind::object}}};

const Schema kSystem = {{"type", {Kind::string, true}}, {"epsilon", {Kind::number_or_array}},
                        {"mu", {Kind::number}},         {"A", {Kind::array}},
                        {"potential", {Kind::array}},   {"h", {Kind::object}},
                        {"P", {Kind::array}},           {"base_point", {Kind::array}},
                        {"reduce", {Kind::object}},     {"smoothness_r", {Kind::integer}},
                        {"R", {Kind::number}},          {"m", {Kind::number}},
                        {"M", {Kind::number}}};

const Schema kReduce = {{"energy", {Kind::number, true}}, {"eliminate", {Kind::integer}}};
const Schema kH = {{"A", {Kind::array}}, {"terms", {Kind::array}}};
const Schema kMode = {{"k", {Kind::array, true}}, {"cos", {Kind::number}}, {"sin", {Kind::number}}};
const Schema kTerm = {{"k", {Kind::array, true}}, {"i", {Kind::array, true}}, {"cos", {Kind::number}},
                      {"sin", {Kind::number}}};
const Schema kKernel = {{"nx", {Kind::integer}}, {"dt", {Kind::number}}, {"slices", {Kind::integer}},
                        {"max_speed", {Kind::number}}};
const Schema kRange = {{"min", {Kind::number, true}}, {"max", {Kind::number, true}}, {"count", {Kind::integer, true}}};
const Schema kCovering = {{"energy", {Kind::number, true}}, {"waypoints", {Kind::array, true}},
                          {"delta", {Kind::number, true}},  {"K", {Kind::number}},
                          {"m", {Kind::number}},            {"K_max", {Kind::integer}}};
const Schema kGeometry = {{"cover", {Kind::integer}},        {"a_minus", {Kind::number}},
                          {"a_plus", {Kind::number}},        {"transition", {Kind::number}},
                          {"transition_width", {Kind::number}}, {"bump_center", {Kind::number}},
                          {"bump_radius", {Kind::number}},   {"horizon", {Kind::number}},
                          {"nodes", {Kind::integer}},        {"rate", {Kind::number}},
                          {"section_time", {Kind::number}},  {"disk_radius", {Kind::number}},
                          {"window", {Kind::number}}};
const Schema kChainClass = {{"c", {Kind::number, true}}, {"support", {Kind::array}}};

const Schema& params_schema(Scenario s) {
    static const std::map<Scenario, Schema> schemas = {
        {Scenario::normal_form,
         {{"y_lambda", {Kind::array, true}},
          {"omega", {Kind::array, true}},
          {"epsilons", {Kind::array}},
          {"steps", {Kind::integer}},
          {"sigma", {Kind::number}},
          {"K0", {Kind::number}},
          {"eps0", {Kind::number}},
          {"K_cut", {Kind::integer}},
          {"d_cut", {Kind::integer}},
          {"lie_order", {Kind::integer}},
          {"tail_budget", {Kind::number}},
          {"check_samples", {Kind::integer}},
          {"symplectic_samples", {Kind::integer}},
          {"ode_tol", {Kind::number}},
          {"verify", {Kind::boolean}},
          {"remainder_slack", {Kind::number}},
          {"covering", {Kind::object}}}},
        {Scenario::alpha_beta,
         {{"c", {Kind::array_or_object}},
          {"omega", {Kind::array_or_object}},
          {"random_pairs", {Kind::integer}},
          {"c_range", {Kind::array}},
          {"omega_range", {Kind::array}},
          {"method", {Kind::string}},
          {"kernel", {Kind::object}},
          {"max_denominator", {Kind::integer}},
          {"omega_min", {Kind::number}},
          {"omega_max", {Kind::number}},
          {"loop_m", {Kind::integer}},
          {"starts", {Kind::integer}},
          {"ode_tol", {Kind::number}},
          {"agreement_factor", {Kind::number}},
          {"fenchel", {Kind::array}},
          {"fenchel_tol", {Kind::number}},
          {"flat", {Kind::boolean}},
          {"flat_g_max", {Kind::integer}}}},
        {Scenario::channel,
         {{"g", {Kind::array, true}},
          {"E0", {Kind::number, true}},
          {"E1", {Kind::number, true}},
          {"steps", {Kind::integer}},
          {"m", {Kind::integer}},
          {"starts", {Kind::integer}},
          {"graded", {Kind::boolean}},
          {"global_check", {Kind::boolean}},
          {"log_spacing", {Kind::boolean}},
          {"tail_fraction", {Kind::number}},
          {"jump_tol", {Kind::number}},
          {"ode_tol", {Kind::number}}}},
        {Scenario::barrier,
         {{"c", {Kind::number}},
          {"cover", {Kind::integer}},
          {"kernel", {Kind::object}},
          {"delta_prime", {Kind::number}},
          {"tol", {Kind::number}},
          {"max_sweeps", {Kind::integer}}}},
        {Scenario::chain,
         {{"classes", {Kind::array, true}},
          {"cover", {Kind::integer}},
          {"kernel", {Kind::object}},
          {"delta_prime", {Kind::number}},
          {"alpha_tol", {Kind::number}}}},
        {Scenario::connect,
         {{"c", {Kind::array, true}},
          {"c_prime", {Kind::array, true}},
          {"mode", {Kind::string}},
          {"geometry", {Kind::object}}}},
        {Scenario::gronwall,
         {{"z0", {Kind::array, true}},
          {"T", {Kind::number, true}},
          {"samples", {Kind::integer}},
          {"probe_radius", {Kind::number}},
          {"A", {Kind::number}},
          {"B", {Kind::number}},
          {"perturbation", {Kind::array}}}},
    };
    return schemas.at(s);
}

const char* kind_name(Kind k) {
    switch (k) {
        case Kind::number: return "a number";
        case Kind::integer: return "an integer";
        case Kind::boolean: return "a boolean";
        case Kind::string: return "a string";
        case Kind::array: return "an array";
        case Kind::object: return "an object";
        case Kind::number_or_array: return "a number or an array";
        case Kind::array_or_object: return "an array or a range object";
    }
    return "";
}

bool matches(const json& v, Kind k) {
    switch (k) {
        case Kind::number: return v.is_number();
        case Kind::integer: return v.is_number_integer();
        case Kind::boolean: return v.is_boolean();
        case Kind::string: return v.is_string();
        case Kind::array: return v.is_array();
        case Kind::object: return v.is_object();
        case Kind::number_or_array: return v.is_number() || v.is_array();
        case Kind::array_or_object: return v.is_array() || v.is_object();
    }
    return false;
}

bool is_tolerance(const std::string& key) {
    return key == "delta_prime" || (key.size() >= 3 && key.compare(key.size() - 3, 3, "tol") == 0);
}

bool is_count(const std::string& key) {
    static const std::set<std::string> counts = {"nx", "slices", "steps", "m", "starts", "samples", "count",
                                                 "check_samples", "symplectic_samples", "loop_m", "nodes",
                                                 "max_denominator", "max_sweeps", "cover", "flat_g_max",
                                                 "lie_order", "K_max"};
    return counts.count(key) > 0;
}

class Checker {
public:
    Checker(const Config& cfg) : cfg_(cfg) {}

    void error(const std::string& ptr, const std::string& msg) { add(Diagnostic::Level::error, ptr, msg); }
    void warning(const std::string& ptr, const std::string& msg) { add(Diagnostic::Level::warning, ptr, msg); }

    // Type, presence and unknown-key checks of one object.
    void object(const json& obj, const Schema& schema, const std::string& ptr) {
        if (!obj.is_object()) {
            error(ptr, "expected an object");
            return;
        }
        for (const auto& [key, f] : schema)
            if (f.required && !obj.contains(key)) error(ptr + "/" + key, "required field is missing");
        for (const auto& [key, v] : obj.items()) {
            const std::string p = ptr + "/" + key;
            auto it = schema.find(key);
            if (it == schema.end()) {
                warning(p, "unknown field ignored");
                continue;
            }
            if (!matches(v, it->second.kind)) {
                error(p, std::string("expected ") + kind_name(it->second.kind));
                continue;
            }
            if (v.is_number() && is_tolerance(key) && !(v.get<double>() > 0))
                error(p, "tolerance must be positive");
            if (v.is_number_integer() && is_count(key) && v.get<long long>() <= 0) error(p, "must be positive");
        }
    }

    void numbers(const json& v, const std::string& ptr, std::optional<size_t> size = std::nullopt) {
        if (!v.is_array()) return;
        if (size && v.size() != *size)
            error(ptr, "expected " + std::to_string(*size) + " entries, found " + std::to_string(v.size()));
        for (size_t i = 0; i < v.size(); ++i)
            if (!v[i].is_number()) error(ptr + "/" + std::to_string(i), "expected a number");
    }

    void integers(const json& v, const std::string& ptr, std::optional<size_t> size = std::nullopt) {
        if (!v.is_array()) return;
        if (size && v.size() != *size)
            error(ptr, "expected " + std::to_string(*size) + " entries, found " + std::to_string(v.size()));
        for (size_t i = 0; i < v.size(); ++i)
            if (!v[i].is_number_integer()) error(ptr + "/" + std::to_string(i), "expected an integer");
    }

    void matrix(const json& v, const std::string& ptr, int n) {
        if (!v.is_array()) return;
        if (static_cast<int>(v.size()) != n) {
            error(ptr, "expected a " + std::to_string(n) + " x " + std::to_string(n) + " matrix");
            return;
        }
        for (int i = 0; i < n; ++i) numbers(v[i], ptr + "/" + std::to_string(i), n);
    }

    std::vector<Diagnostic> take() { return std::move(out_); }

private:
    void add(Diagnostic::Level l, const std::string& ptr, const std::string& msg) {
        out_.push_back({l, ptr, cfg_.line_of(ptr), msg});
    }
    const Config& cfg_;
    std::vector<Diagnostic> out_;
};

// Degrees of freedom implied by the system block, 0 when unknown.
int system_dof(const json& sys) {
    const std::string type = sys.value("type", "");
    if (type == "pendulum") return 1;
    if (type == "pendulum_rotor") return 2;
    if (type == "product_pendulum") return sys.contains("epsilon") && sys["epsilon"].is_array() ? static_cast<int>(sys["epsilon"].size()) : 0;
    if (type == "mechanical") return sys.contains("A") && sys["A"].is_array() ? static_cast<int>(sys["A"].size()) : 0;
    if (type == "near_integrable") {
        if (sys.contains("base_point") && sys["base_point"].is_array()) return static_cast<int>(sys["base_point"].size());
        if (sys.contains("h") && sys["h"].contains("A") && sys["h"]["A"].is_array()) return static_cast<int>(sys["h"]["A"].size());
    }
    return 0;
}

void check_modes(Checker& ck, const json& modes, const std::string& ptr, int n, bool taylor) {
    if (!modes.is_array()) return;
    for (size_t j = 0; j < modes.size(); ++j) {
        const std::string p = ptr + "/" + std::to_string(j);
        ck.object(modes[j], taylor ? kTerm : kMode, p);
        if (!modes[j].is_object()) continue;
        std::optional<size_t> sz;
        if (n > 0) sz = static_cast<size_t>(n);
        if (modes[j].contains("k")) ck.integers(modes[j]["k"], p + "/k", sz);
        if (taylor && modes[j].contains("i")) {
            ck.integers(modes[j]["i"], p + "/i", sz);
            if (modes[j]["i"].is_array())
                for (size_t q = 0; q < modes[j]["i"].size(); ++q)
                    if (modes[j]["i"][q].is_number_integer() && modes[j]["i"][q].get<int>() < 0)
                        ck.error(p + "/i/" + std::to_string(q), "Taylor exponents must be nonnegative");
        }
    }
}

void check_system(Checker& ck, const json& sys, Scenario s) {
    ck.object(sys, kSystem, "/system");
    if (!sys.is_object() || !sys.contains("type") || !sys["type"].is_string()) return;
    const std::string type = sys["type"];
    static const std::set<std::string> types = {"pendulum", "product_pendulum", "pendulum_rotor", "mechanical",
                                                "near_integrable"};
    if (!types.count(type)) {
        ck.error("/system/type", "unknown system type '" + type + "'");
        return;
    }
    const int n = system_dof(sys);
    auto need = [&](const char* key) {
        if (!sys.contains(key)) ck.error(std::string("/system/") + key, "required for system type '" + type + "'");
    };
    if (type == "pendulum" || type == "pendulum_rotor") {
        need("epsilon");
        if (sys.contains("epsilon") && !sys["epsilon"].is_number()) ck.error("/system/epsilon", "expected a number");
        if (type == "pendulum_rotor") need("mu");
    }
    if (type == "product_pendulum") {
        need("epsilon");
        if (sys.contains("epsilon")) {
            if (!sys["epsilon"].is_array()) ck.error("/system/epsilon", "expected an array");
            ck.numbers(sys["epsilon"], "/system/epsilon");
        }
        if (sys.contains("A")) ck.matrix(sys["A"], "/system/A", n);
    }
    if (type == "mechanical") {
        need("A");
        if (sys.contains("A")) ck.matrix(sys["A"], "/system/A", n);
        if (sys.contains("potential")) check_modes(ck, sys["potential"], "/system/potential", n, false);
    }
    if (type == "near_integrable") {
        need("h");
        need("P");
        need("epsilon");
        if (sys.contains("epsilon") && !sys["epsilon"].is_number()) ck.error("/system/epsilon", "expected a number");
        if (sys.contains("h") && sys["h"].is_object()) {
            ck.object(sys["h"], kH, "/system/h");
            if (sys["h"].contains("A")) ck.matrix(sys["h"]["A"], "/system/h/A", n);
            if (sys["h"].contains("terms")) check_modes(ck, sys["h"]["terms"], "/system/h/terms", n, true);
            if (!sys["h"].contains("A") && !sys["h"].contains("terms"))
                ck.error("/system/h", "needs 'A' or 'terms'");
        }
        if (sys.contains("P")) check_modes(ck, sys["P"], "/system/P", n, true);
        if (sys.contains("base_point")) ck.numbers(sys["base_point"], "/system/base_point");
        if (n == 0) ck.error("/system", "dimension unknown: give 'base_point' or 'h.A'");
    }
    if (sys.contains("epsilon") && sys["epsilon"].is_number() && sys["epsilon"].get<double>() < 0)
        ck.error("/system/epsilon", "must be nonnegative");
    if (sys.contains("reduce")) {
        ck.object(sys["reduce"], kReduce, "/system/reduce");
        if (n > 0 && n != 2) ck.error("/system/reduce", "reduction needs two degrees of freedom");
        if (sys["reduce"].contains("eliminate") && sys["reduce"]["eliminate"].is_number_integer()) {
            int k = sys["reduce"]["eliminate"];
            if (k < 0 || k > 1) ck.error("/system/reduce/eliminate", "must be 0 or 1");
        }
    }

    const bool mech = type != "near_integrable";
    switch (s) {
        case Scenario::normal_form:
            if (mech) ck.error("/system/type", "normal-form needs a near_integrable system");
            break;
        case Scenario::alpha_beta:
        case Scenario::barrier:
        case Scenario::chain:
            if (!mech) ck.error("/system/type", "needs a mechanical system");
            else if (n != 1 && !sys.contains("reduce"))
                ck.error("/system", "two degrees of freedom need a 'reduce' block");
            break;
        case Scenario::channel:
        case Scenario::connect:
            if (!mech) ck.error("/system/type", "needs a mechanical system");
            else if (n != 2) ck.error("/system", "needs two degrees of freedom");
            if (sys.contains("reduce")) ck.warning("/system/reduce", "ignored by this scenario");
            break;
        case Scenario::gronwall: break;
    }
}

void check_params(Checker& ck, const json& params, Scenario s, const json& sys) {
    const std::string base = "/params";
    ck.object(params, params_schema(s), base);
    if (!params.is_object()) return;
    const int n = system_dof(sys);
    std::optional<size_t> nsz;
    if (n > 0) nsz = static_cast<size_t>(n);
    for (const char* k : {"kernel"})
        if (params.contains(k) && params[k].is_object()) ck.object(params[k], kKernel, base + "/" + k);

    switch (s) {
        case Scenario::normal_form: {
            if (params.contains("y_lambda")) ck.numbers(params["y_lambda"], base + "/y_lambda", nsz);
            if (params.contains("omega") && params["omega"].is_array()) {
                if (nsz && params["omega"].size() != *nsz) ck.error(base + "/omega", "dimension mismatch");
                for (size_t i = 0; i < params["omega"].size(); ++i) {
                    const auto& w = params["omega"][i];
                    if (!w.is_number_integer() && !w.is_string())
                        ck.error(base + "/omega/" + std::to_string(i), "expected an integer or a string 'p/q'");
                }
            }
            if (params.contains("epsilons")) {
                ck.numbers(params["epsilons"], base + "/epsilons");
                for (size_t i = 0; params["epsilons"].is_array() && i < params["epsilons"].size(); ++i)
                    if (params["epsilons"][i].is_number() && params["epsilons"][i].get<double>() < 0)
                        ck.error(base + "/epsilons/" + std::to_string(i), "must be nonnegative");
            }
            const bool covering = params.contains("covering");
            double sigma = params.value("sigma", 1.0 / 7.0);
            if (params.contains("sigma") && params["sigma"].is_number()) {
                if (!(sigma > 0)) ck.error(base + "/sigma", "must be positive");
                if (covering && !(sigma < 1.0 / 6.0))
                    ck.error(base + "/sigma", "sigma = " + params["sigma"].dump() +
                                                  " but covering requires sigma < 1/6");
            }
            if (covering) {
                ck.object(params["covering"], kCovering, base + "/covering");
                if (n > 0 && n != 3) ck.error(base + "/covering", "covering needs three degrees of freedom");
                const auto& cov = params["covering"];
                if (cov.is_object() && cov.contains("waypoints") && cov["waypoints"].is_array())
                    for (size_t i = 0; i < cov["waypoints"].size(); ++i)
                        ck.numbers(cov["waypoints"][i], base + "/covering/waypoints/" + std::to_string(i), nsz);
                if (cov.is_object() && cov.contains("delta") && cov["delta"].is_number() &&
                    !(cov["delta"].get<double>() > 0))
                    ck.error(base + "/covering/delta", "must be positive");
            }
            break;
        }
        case Scenario::alpha_beta: {
            for (const char* k : {"c", "omega"}) {
                if (!params.contains(k)) continue;
                const auto& v = params[k];
                if (v.is_array()) ck.numbers(v, base + "/" + k);
                if (v.is_object()) ck.object(v, kRange, base + "/" + k);
            }
            for (const char* k : {"c_range", "omega_range"})
                if (params.contains(k)) {
                    ck.numbers(params[k], base + "/" + k, 2);
                    if (params[k].is_array() && params[k].size() == 2 && params[k][0].is_number() &&
                        params[k][1].is_number() && !(params[k][0].get<double>() < params[k][1].get<double>()))
                        ck.error(base + "/" + k, "empty range");
                }
            if (params.contains("method") && params["method"].is_string()) {
                const std::string m = params["method"];
                if (m != "periodic_orbit" && m != "weak_kam") ck.error(base + "/method", "unknown method '" + m + "'");
            }
            if (params.contains("fenchel")) ck.numbers(params["fenchel"], base + "/fenchel");
            break;
        }
        case Scenario::channel: {
            if (params.contains("g")) ck.integers(params["g"], base + "/g", 2);
            for (const char* k : {"E0", "E1"})
                if (params.contains(k) && params[k].is_number() && !(params[k].get<double>() > 0))
                    ck.error(base + "/" + k, "energy above the fixed point must be positive");
            if (params.contains("steps") && params["steps"].is_number_integer() && params["steps"].get<int>() < 2)
                ck.error(base + "/steps", "at least two energies required");
            if (params.contains("tail_fraction") && params["tail_fraction"].is_number()) {
                double f = params["tail_fraction"];
                if (!(f > 0 && f <= 1)) ck.error(base + "/tail_fraction", "must lie in (0, 1]");
            }
            break;
        }
        case Scenario::barrier: break;
        case Scenario::chain: {
            if (params.contains("classes") && params["classes"].is_array()) {
                if (params["classes"].empty()) ck.error(base + "/classes", "at least one class required");
                for (size_t i = 0; i < params["classes"].size(); ++i) {
                    const std::string p = base + "/classes/" + std::to_string(i);
                    ck.object(params["classes"][i], kChainClass, p);
                    const auto& cl = params["classes"][i];
                    if (cl.is_object() && cl.contains("support") && cl["support"].is_array())
                        for (size_t j = 0; j < cl["support"].size(); ++j)
                            ck.numbers(cl["support"][j], p + "/support/" + std::to_string(j), 2);
                }
            }
            break;
        }
        case Scenario::connect: {
            for (const char* k : {"c", "c_prime"})
                if (params.contains(k)) ck.numbers(params[k], base + "/" + k, 2);
            if (params.contains("mode") && params["mode"].is_string()) {
                const std::string m = params["mode"];
                if (m != "space" && m != "time") ck.error(base + "/mode", "expected 'space' or 'time'");
            }
            if (params.contains("geometry")) ck.object(params["geometry"], kGeometry, base + "/geometry");
            break;
        }
        case Scenario::gronwall: {
            if (params.contains("z0")) ck.numbers(params["z0"], base + "/z0", n > 0 ? std::optional<size_t>(2 * n) : std::nullopt);
            if (params.contains("T") && params["T"].is_number() && !(params["T"].get<double>() > 0))
                ck.error(base + "/T", "must be positive");
            if (params.contains("probe_radius") && params["probe_radius"].is_number() &&
                params["probe_radius"].get<double>() < 0)
                ck.error(base + "/probe_radius", "must be nonnegative");
            if (params.contains("perturbation")) {
                if (sys.value("type", "") == "near_integrable")
                    ck.warning(base + "/perturbation", "ignored: the perturbation is epsilon P");
                check_modes(ck, params["perturbation"], base + "/perturbation", n, false);
            }
            if (sys.value("type", "") != "near_integrable" && !params.contains("perturbation"))
                ck.error(base + "/perturbation", "required for mechanical systems");
            break;
        }
    }
}

}  // namespace

std::optional<Scenario> parse_scenario(std::string_view name) {
    for (const auto& [s, n] : kScenarios)
        if (n == name) return s;
    return std::nullopt;
}

const char* to_string(Scenario s) {
    for (const auto& [t, n] : kScenarios)
        if (t == s) return n.c_str();
    return "";
}

const std::vector<std::string>& scenario_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const auto& p : kScenarios) v.push_back(p.second);
        return v;
    }();
    return names;
}

std::string Diagnostic::format() const {
    std::ostringstream os;
    os << (level == Level::error ? "error" : "warning");
    if (line > 0) os << ": line " << line;
    if (!field.empty()) os << ": " << field;
    os << ": " << message;
    return os.str();
}

ConfigError::ConfigError(std::vector<Diagnostic> d)
    : Error([&] {
          std::string s = "invalid configuration";
          for (const auto& x : d)
              if (x.level == Diagnostic::Level::error) s += "\n  " + x.format();
          return s;
      }()),
      diags_(std::move(d)) {}

Config Config::parse(const std::string& text) {
    Config c;
    c.text = text;
    try {
        c.doc = json::parse(text);
    } catch (const json::parse_error& e) {
        int line = 1;
        for (size_t i = 0; i < std::min<size_t>(e.byte, text.size()); ++i)
            if (text[i] == '\n') ++line;
        throw ConfigError({{Diagnostic::Level::error, "", line, std::string("malformed JSON: ") + e.what()}});
    }
    if (!c.doc.is_object())
        throw ConfigError({{Diagnostic::Level::error, "", 1, "the configuration must be a JSON object"}});
    if (c.doc.contains("manifest_version") && c.doc.contains("config")) {
        if (c.doc.contains("seed") && c.doc["seed"].is_number_unsigned()) c.manifest_seed = c.doc["seed"].get<unsigned>();
        json inner = c.doc["config"];
        c.doc = std::move(inner);
        c.text = c.doc.dump(2);
    }
    return c;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError({{Diagnostic::Level::error, "", 0, "cannot read " + path.string()}});
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

int Config::line_of(const std::string& pointer) const {
    if (pointer.empty()) return 0;
    size_t pos = 0, found = std::string::npos;
    size_t start = 1;
    while (start <= pointer.size()) {
        size_t end = pointer.find('/', start);
        if (end == std::string::npos) end = pointer.size();
        const std::string tok = pointer.substr(start, end - start);
        start = end + 1;
        if (!tok.empty() && std::all_of(tok.begin(), tok.end(), ::isdigit)) continue;
        size_t p = text.find("\"" + tok + "\"", pos);
        if (p == std::string::npos) break;
        found = pos = p;
    }
    if (found == std::string::npos) return 0;
    return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(found), '\n'));
}

std::vector<Diagnostic> validate(const Config& cfg, Scenario s) {
    Checker ck(cfg);
    const json& doc = cfg.doc;
    ck.object(doc, kTop, "");
    if (!doc.is_object()) return ck.take();
    if (doc.contains("scenario") && doc["scenario"].is_string() && doc["scenario"] != to_string(s))
        ck.error("/scenario", "configuration is for '" + doc["scenario"].get<std::string>() + "', not '" +
                                  to_string(s) + "'");
    if (doc.contains("seed") && doc["seed"].is_number_integer() && doc["seed"].get<long long>() < 0)
        ck.error("/seed", "must be nonnegative");
    if (doc.contains("system")) check_system(ck, doc["system"], s);
    const json params = doc.contains("params") ? doc["params"] : json::object();
    check_params(ck, params, s, doc.contains("system") ? doc["system"] : json::object());
    return ck.take();
}

}  // namespace matherlab::cli
