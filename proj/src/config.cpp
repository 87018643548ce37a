#include "cbf/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace cbf {

namespace {

struct KV {
    std::string section;
    std::string key;
    std::string value;
};

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<KV> tokenize(const std::string& text) {
    std::vector<KV> out;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config line " + std::to_string(lineno) +
                                            ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        out.push_back({section, trim(line.substr(0, eq)), trim(line.substr(eq + 1))});
    }
    return out;
}

double to_double(const KV& kv) {
    try {
        size_t pos = 0;
        double v = std::stod(kv.value, &pos);
        if (pos != kv.value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config [" + kv.section + "] " + kv.key +
                                    ": not a number: '" + kv.value + "'");
    }
}

long to_long(const KV& kv) {
    try {
        size_t pos = 0;
        long v = std::stol(kv.value, &pos);
        if (pos != kv.value.size()) throw std::invalid_argument("trailing characters");
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("config [" + kv.section + "] " + kv.key +
                                    ": not an integer: '" + kv.value + "'");
    }
}

std::vector<double> to_doubles(const KV& kv) {
    std::istringstream is(kv.value);
    std::vector<double> out;
    double v;
    while (is >> v) out.push_back(v);
    if (!is.eof())
        throw std::invalid_argument("config [" + kv.section + "] " + kv.key +
                                    ": not a number list");
    return out;
}

std::vector<int> to_ints(const KV& kv) {
    std::istringstream is(kv.value);
    std::vector<int> out;
    int v;
    while (is >> v) out.push_back(v);
    if (!is.eof())
        throw std::invalid_argument("config [" + kv.section + "] " + kv.key +
                                    ": not an integer list");
    return out;
}

void apply_profile(ProfileSpec& p, const KV& kv) {
    if (kv.key == "profile")
        p.profile = kv.value;
    else if (kv.key == "amplitude")
        p.amplitude = to_double(kv);
    else if (kv.key == "modulation")
        p.modulation = kv.value;
    else if (kv.key == "frequency")
        p.frequency = to_double(kv);
    else
        throw std::invalid_argument("config [" + kv.section + "]: unknown key '" + kv.key + "'");
}

void check_profile(const ProfileSpec& p, const std::string& what) {
    const char* profiles[] = {"zero", "taylor-green", "shear", "random"};
    if (std::find(std::begin(profiles), std::end(profiles), p.profile) == std::end(profiles))
        throw std::invalid_argument(what + ": unknown profile '" + p.profile + "'");
    const char* mods[] = {"constant", "decay", "sine"};
    if (std::find(std::begin(mods), std::end(mods), p.modulation) == std::end(mods))
        throw std::invalid_argument(what + ": unknown modulation '" + p.modulation + "'");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
    ExperimentConfig c;
    for (const KV& kv : tokenize(text)) {
        if (kv.section == "grid") {
            if (kv.key == "nx")
                c.nx = int(to_long(kv));
            else if (kv.key == "ny")
                c.ny = int(to_long(kv));
            else
                throw std::invalid_argument("config [grid]: unknown key '" + kv.key + "'");
        } else if (kv.section == "params") {
            if (kv.key == "mu")
                c.params.mu = to_double(kv);
            else if (kv.key == "alpha")
                c.params.alpha = to_double(kv);
            else if (kv.key == "beta")
                c.params.beta = to_double(kv);
            else if (kv.key == "r")
                c.params.r = to_double(kv);
            else
                throw std::invalid_argument("config [params]: unknown key '" + kv.key + "'");
        } else if (kv.section == "superpotential") {
            if (kv.key == "name")
                c.superpotential_name = kv.value;
            else if (kv.key == "params")
                c.superpotential_params = to_doubles(kv);
            else if (kv.key == "table")
                c.superpotential_table = kv.value;
            else
                throw std::invalid_argument("config [superpotential]: unknown key '" + kv.key +
                                            "'");
        } else if (kv.section == "forcing") {
            apply_profile(c.forcing, kv);
        } else if (kv.section == "initial") {
            apply_profile(c.initial, kv);
        } else if (kv.section == "time") {
            if (kv.key == "T")
                c.T = to_double(kv);
            else if (kv.key == "N")
                c.N = int(to_long(kv));
            else if (kv.key == "N_list")
                c.N_list = to_ints(kv);
            else
                throw std::invalid_argument("config [time]: unknown key '" + kv.key + "'");
        } else if (kv.section == "run") {
            if (kv.key == "seed")
                c.seed = std::uint64_t(to_long(kv));
            else if (kv.key == "out")
                c.out_dir = kv.value;
            else if (kv.key == "trials")
                c.trials = int(to_long(kv));
            else if (kv.key == "jobs")
                c.jobs = int(to_long(kv));
            else
                throw std::invalid_argument("config [run]: unknown key '" + kv.key + "'");
        } else if (kv.section == "solver") {
            if (kv.key == "newton_tol")
                c.newton_tol = to_double(kv);
            else if (kv.key == "max_iters")
                c.max_iters = int(to_long(kv));
            else if (kv.key == "damping")
                c.damping = to_double(kv);
            else if (kv.key == "eps_first")
                c.eps_first = to_double(kv);
            else if (kv.key == "eps_last")
                c.eps_last = to_double(kv);
            else
                throw std::invalid_argument("config [solver]: unknown key '" + kv.key + "'");
        } else if (kv.section == "sweep") {
            if (kv.key == "mu_list")
                c.mu_list = to_doubles(kv);
            else
                throw std::invalid_argument("config [sweep]: unknown key '" + kv.key + "'");
        } else if (kv.section == "twin") {
            if (kv.key == "perturb")
                c.twin_perturb = to_double(kv);
            else if (kv.key == "target")
                c.twin_target = kv.value;
            else
                throw std::invalid_argument("config [twin]: unknown key '" + kv.key + "'");
        } else {
            throw std::invalid_argument("config: unknown section '" + kv.section + "'");
        }
    }
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config file " + path);
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

void ExperimentConfig::validate() const {
    GridSpec g{nx, ny};
    g.validate();
    params.validate();
    check_profile(forcing, "[forcing]");
    check_profile(initial, "[initial]");
    if (!(T > 0.0)) throw std::invalid_argument("config [time]: T must be positive");
    if (N < 1) throw std::invalid_argument("config [time]: N must be >= 1");
    for (int n : N_list)
        if (n < 1) throw std::invalid_argument("config [time]: N_list entries must be >= 1");
    if (trials < 1) throw std::invalid_argument("config [run]: trials must be >= 1");
    if (jobs < 1) throw std::invalid_argument("config [run]: jobs must be >= 1");
    solve_options().validate();
    superpotential().validate();
    if (twin_target != "initial" && twin_target != "forcing")
        throw std::invalid_argument("config [twin]: target must be initial or forcing");
}

SolveOptions ExperimentConfig::solve_options() const {
    SolveOptions o;
    o.newton_tol = newton_tol;
    o.max_iters = max_iters;
    o.damping = damping;
    o.eps_schedule.clear();
    for (double e = eps_first; e >= eps_last * (1.0 - 1e-12); e /= 10.0)
        o.eps_schedule.push_back(e);
    if (o.eps_schedule.empty()) o.eps_schedule.push_back(eps_last);
    return o;
}

Superpotential ExperimentConfig::superpotential() const {
    if (superpotential_name == "table") {
        if (superpotential_table.empty())
            throw std::invalid_argument("config [superpotential]: table path required");
        return load_superpotential_table(superpotential_table);
    }
    return make_superpotential(superpotential_name, superpotential_params);
}

std::string ExperimentConfig::canonical_text() const {
    std::ostringstream os;
    char buf[64];
    auto num = [&buf](double v) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return std::string(buf);
    };
    os << "[grid]\nnx = " << nx << "\nny = " << ny << "\n";
    os << "[params]\nmu = " << num(params.mu) << "\nalpha = " << num(params.alpha)
       << "\nbeta = " << num(params.beta) << "\nr = " << num(params.r) << "\n";
    os << "[superpotential]\nname = " << superpotential_name << "\n";
    if (!superpotential_params.empty()) {
        os << "params =";
        for (double v : superpotential_params) os << " " << num(v);
        os << "\n";
    }
    if (!superpotential_table.empty()) os << "table = " << superpotential_table << "\n";
    auto prof = [&](const char* sec, const ProfileSpec& p) {
        os << "[" << sec << "]\nprofile = " << p.profile << "\namplitude = " << num(p.amplitude)
           << "\nmodulation = " << p.modulation << "\nfrequency = " << num(p.frequency) << "\n";
    };
    prof("forcing", forcing);
    prof("initial", initial);
    os << "[time]\nT = " << num(T) << "\nN = " << N << "\n";
    if (!N_list.empty()) {
        os << "N_list =";
        for (int n : N_list) os << " " << n;
        os << "\n";
    }
    // jobs and the output directory are execution details: outputs must be
    // identical across worker counts, so neither enters the hash
    os << "[run]\nseed = " << seed << "\ntrials = " << trials << "\n";
    os << "[solver]\nnewton_tol = " << num(newton_tol) << "\nmax_iters = " << max_iters
       << "\ndamping = " << num(damping) << "\neps_first = " << num(eps_first)
       << "\neps_last = " << num(eps_last) << "\n";
    if (!mu_list.empty()) {
        os << "[sweep]\nmu_list =";
        for (double v : mu_list) os << " " << num(v);
        os << "\n";
    }
    os << "[twin]\nperturb = " << num(twin_perturb) << "\ntarget = " << twin_target << "\n";
    return os.str();
}

std::uint64_t ExperimentConfig::hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : canonical_text()) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    return h;
}

State random_smooth_state(const GridSpec& grid, std::uint64_t seed, double amplitude) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    constexpr int kmax = 3;
    double c[kmax][kmax];
    for (int a = 0; a < kmax; ++a)
        for (int b = 0; b < kmax; ++b) c[a][b] = coef(rng);
    auto s = [c, amplitude](double x, double y) {
        double acc = 0.0;
        for (int a = 0; a < kmax; ++a)
            for (int b = 0; b < kmax; ++b)
                acc += c[a][b] * std::sin((a + 1) * std::numbers::pi * x) *
                       std::sin((b + 1) * std::numbers::pi * y) / double((a + 1) * (b + 1));
        return amplitude * acc;
    };
    return sample_stream(grid, s);
}

State make_initial_state(const BuiltSpace& built, const ProfileSpec& prof, std::uint64_t seed) {
    if (prof.profile == "zero") return State(Vec::Zero(built.space->n));
    if (prof.profile == "random") return random_smooth_state(built.grid, seed, prof.amplitude);
    CbfParams dummy;  // manufactured states do not depend on the parameters
    State y = manufactured_case(built, dummy, prof.profile).first;
    y.coeffs *= prof.amplitude;
    return y;
}

ForcingFn make_forcing(const BuiltSpace& built, const CbfParams& p, const ProfileSpec& prof,
                       std::uint64_t seed) {
    DualVector shape;
    if (prof.profile == "zero") {
        shape = Vec::Zero(built.space->n);
    } else if (prof.profile == "random") {
        State y = random_smooth_state(built.grid, seed, prof.amplitude);
        shape = apply_F(built.ops, p, y);
    } else {
        shape = manufactured_case(built, p, prof.profile).second;
        shape *= prof.amplitude;
    }
    std::string mod = prof.modulation;
    double freq = prof.frequency;
    return [shape, mod, freq](double t) -> DualVector {
        if (mod == "decay") return std::exp(-t) * shape;
        if (mod == "sine") return std::sin(2.0 * std::numbers::pi * freq * t) * shape;
        return shape;
    };
}

}  // namespace cbf
