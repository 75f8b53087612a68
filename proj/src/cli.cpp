#include "riskydates/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include "riskydates/error.hpp"

namespace riskydates {

using nlohmann::json;

ConditionBreak parse_break(const std::string& label) {
    if (label == "i") return ConditionBreak::ShortRate;
    if (label == "ii") return ConditionBreak::JumpProbability;
    if (label == "iv") return ConditionBreak::Drift;
    if (label.empty() || label == "none") return ConditionBreak::None;
    throw Error(ErrorCode::InvalidModel, fmt::format("unknown condition '{}' (use i, ii or iv)", label));
}

std::string break_label(ConditionBreak which) {
    switch (which) {
        case ConditionBreak::ShortRate: return "i";
        case ConditionBreak::JumpProbability: return "ii";
        case ConditionBreak::Drift: return "iv";
        case ConditionBreak::None: break;
    }
    return "none";
}

Scenario prepare_scenario(const ScenarioConfig& config, const CommandOptions& options) {
    ScenarioConfig c = config;
    if (options.paths) c.run.n_paths = *options.paths;
    if (options.seed) c.run.master_seed = *options.seed;
    if (options.steps) c.grid.steps = *options.steps;
    if (options.tolerance_z) c.run.z_threshold = *options.tolerance_z;
    Scenario s = build_scenario(c);
    s.perturbation = {options.which, options.magnitude};
    return s;
}

std::string git_blob_hash(const std::string& content) {
    const std::string blob = fmt::format("blob {}", content.size()) + '\0' + content;
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(blob.data(), blob.size(), md, &len, EVP_sha1(), nullptr) != 1) {
        throw Error(ErrorCode::IoError, "sha1 digest failed");
    }
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
    return hex;
}

std::string surfaces_csv(const Ensemble& ens) {
    std::string out = "t,T,mean_price,se,mean_discounted,se\n";
    for (const MeshStat& s : ens.stats) {
        out += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", s.t, s.T, s.mean_price, s.se_price,
                           s.mean_discounted, s.se_discounted);
    }
    return out;
}

Verification run_verification(const Scenario& spec, unsigned workers, std::size_t retain) {
    Scenario sim = spec;
    sim.risky.j_atoms.clear();
    RunOptions opts = run_options_from(sim);
    opts.workers = workers;
    opts.retain = retain;

    Verification v;
    v.ensemble = run_scenario(sim, opts);
    v.martingale = martingale_test(v.ensemble, sim.grid, spec.run.z_threshold);
    v.jumps = jump_frequency_test(v.ensemble, spec.run.z_threshold);
    v.conditions = check_conditions(sim, spec.risky, v.ensemble.retained,
                                    {spec.run.algebraic_tolerance, spec.run.z_threshold});
    return v;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot read {}", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
    out.close();
    if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write {}", path.string()));
}

std::filesystem::path ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw Error(ErrorCode::IoError, fmt::format("cannot create output directory {}", dir));
    }
    return dir;
}

bool is_input_error(ErrorCode c) {
    switch (c) {
        case ErrorCode::IoError:
        case ErrorCode::NonFiniteField:
        case ErrorCode::NonFiniteRate:
            return false;
        default:
            return true;
    }
}

/// Loads, builds and validates. Returns nullopt after printing the problems.
std::optional<Scenario> load(const std::string& path, const CommandOptions& options, std::string& text,
                             std::ostream& err, int& code) {
    text = read_file(path);
    const ScenarioConfig cfg = parse_scenario(text, path);
    Scenario s = prepare_scenario(cfg, options);
    const ValidationReport rep = validate_scenario(s);
    if (!rep.ok()) {
        for (const auto& v : rep.violations) err << fmt::format("{}: {}: {}\n", path, v.code, v.message);
        code = kExitInvalid;
        return std::nullopt;
    }
    return s;
}

json manifest(const std::string& command, const std::string& path, const std::string& text, const Scenario& s,
              const Ensemble& ens, double total_seconds) {
    json m;
    m["command"] = command;
    m["scenario"] = path;
    m["scenario_name"] = s.name;
    m["scenario_hash"] = git_blob_hash(text);
    m["master_seed"] = s.run.master_seed;
    m["n_paths"] = ens.n_paths;
    m["n_ok"] = ens.n_ok;
    m["steps"] = s.grid.n_steps();
    m["nodes"] = s.grid.size();
    m["workers"] = ens.workers;
    if (s.perturbation.which != ConditionBreak::None) {
        m["break_condition"] = break_label(s.perturbation.which);
        m["magnitude"] = s.perturbation.magnitude;
    }
    m["timings"] = {{"simulate_seconds", ens.runtime_seconds}, {"total_seconds", total_seconds}};
    json fails = json::array();
    for (const auto& f : ens.failures) fails.push_back({{"path", f.path}, {"message", f.message}});
    m["failures"] = fails;
    return m;
}

json to_json(const MartingaleReport& r) {
    json pts = json::array();
    for (const auto& p : r.points) {
        pts.push_back({{"t", p.t}, {"T", p.T}, {"mean", p.mean}, {"se", p.se}, {"target", p.target}, {"z", p.z}});
    }
    return {{"verdict", r.verdict},
            {"z_threshold", r.z_threshold},
            {"widened_threshold", r.widened_threshold},
            {"max_abs_z", r.max_abs_z},
            {"worst", {{"t", r.worst.t}, {"T", r.worst.T}, {"z", r.worst.z}}},
            {"n_paths", r.n_paths},
            {"runtime_seconds", r.runtime_seconds},
            {"points", pts}};
}

json to_json(const ConditionResult& c) {
    return {{"name", c.name},
            {"status", to_string(c.status)},
            {"tolerance", c.tolerance},
            {"max_abs_residual", c.max_abs},
            {"count", c.residuals.size()},
            {"worst", {{"path", c.worst.path}, {"t", c.worst.t}, {"T", c.worst.T}, {"value", c.worst.value}}}};
}

json to_json(const ConditionReport& r) {
    json link = json::array();
    for (const auto& row : r.link.rows) {
        link.push_back({{"t", row.t},
                        {"T", row.T},
                        {"mc_mean", row.mc_mean},
                        {"mc_se", row.mc_se},
                        {"compensator", row.compensator},
                        {"pass", row.pass}});
    }
    return {{"verdict", r.pass() ? "pass" : "fail"},
            {"failing", r.failing()},
            {"conditions",
             json::array({to_json(r.cond_i), to_json(r.cond_ii), to_json(r.cond_iii), to_json(r.cond_iv),
                          to_json(r.cond_v), to_json(r.cross_term)})},
            {"compensator_link", {{"status", to_string(r.link.status)}, {"rows", link}}}};
}

json to_json(const JumpReport& r) {
    json rows = json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"label", row.label},
                        {"time", row.time},
                        {"survivors", row.survivors},
                        {"defaults", row.defaults},
                        {"frequency", row.frequency},
                        {"expected", row.expected},
                        {"sigma", row.sigma},
                        {"z", row.z},
                        {"status", row.status}});
    }
    return {{"verdict", r.pass() ? "pass" : "fail"}, {"default_share", r.default_share}, {"rows", rows}};
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
    try {
        return body();
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return is_input_error(e.code()) ? kExitInvalid : kExitInternal;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}

}  // namespace

int cmd_validate(const std::string& scenario_path, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        std::string text;
        int code = kExitOk;
        const auto s = load(scenario_path, {}, text, err, code);
        if (!s) return code;
        out << fmt::format("{}: ok ({} nodes, {} factors)\n", scenario_path, s->grid.size(), s->fields.n_factors());
        return static_cast<int>(kExitOk);
    });
}

int cmd_simulate(const std::string& scenario_path, const CommandOptions& options, std::ostream& out,
                 std::ostream& err) {
    return guarded(err, [&] {
        const auto t0 = Clock::now();
        std::string text;
        int code = kExitOk;
        const auto s = load(scenario_path, options, text, err, code);
        if (!s) return code;
        const auto dir = ensure_dir(options.out_dir);

        RunOptions opts = run_options_from(*s);
        opts.workers = options.workers;
        const Ensemble ens = run_scenario(*s, opts);
        write_file(dir / "surfaces.csv", surfaces_csv(ens));
        write_file(dir / "manifest.json",
                   manifest("simulate", scenario_path, text, *s, ens, seconds_since(t0)).dump(2) + "\n");
        out << fmt::format("{}: {} paths ({} failed) in {:.2f}s -> {}\n", s->name, ens.n_ok, ens.failures.size(),
                           ens.runtime_seconds, dir.string());
        return static_cast<int>(ens.failures.empty() ? kExitOk : kExitInternal);
    });
}

int cmd_verify(const std::string& scenario_path, const CommandOptions& options, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto t0 = Clock::now();
        std::string text;
        int code = kExitOk;
        const auto s = load(scenario_path, options, text, err, code);
        if (!s) return code;
        const auto dir = ensure_dir(options.out_dir);

        const Verification v = run_verification(*s, options.workers);
        write_file(dir / "surfaces.csv", surfaces_csv(v.ensemble));
        write_file(dir / "martingale_report.json", to_json(v.martingale).dump(2) + "\n");
        write_file(dir / "condition_report.json", to_json(v.conditions).dump(2) + "\n");
        write_file(dir / "jump_report.json", to_json(v.jumps).dump(2) + "\n");
        write_file(dir / "manifest.json",
                   manifest("verify", scenario_path, text, *s, v.ensemble, seconds_since(t0)).dump(2) + "\n");

        const auto& m = v.martingale;
        out << fmt::format("martingale: {} (max |z| {:.3f} at t={:.4g}, T={:.4g}; threshold {:.3f}; {} paths)\n",
                           m.verdict, m.max_abs_z, m.worst.t, m.worst.T, m.widened_threshold, m.n_paths);
        for (const ConditionResult* c : {&v.conditions.cond_i, &v.conditions.cond_ii, &v.conditions.cond_iii,
                                         &v.conditions.cond_iv, &v.conditions.cond_v, &v.conditions.cross_term}) {
            out << fmt::format("condition {}: {} (max |residual| {:.3g})\n", c->name, to_string(c->status), c->max_abs);
        }
        out << fmt::format("compensator link: {}\n", to_string(v.conditions.link.status));
        for (const auto& row : v.jumps.rows) {
            out << fmt::format("jump {}: {} (frequency {:.5f}, expected {:.5f}, z {:.2f})\n", row.label, row.status,
                               row.frequency, row.expected, row.z);
        }
        if (v.pass()) {
            out << "verdict: pass\n";
            return static_cast<int>(kExitOk);
        }
        std::vector<std::string> failing;
        if (!m.pass()) failing.push_back("martingale test");
        if (!v.jumps.pass()) failing.push_back("jump frequency test");
        for (const auto& c : v.conditions.failing()) failing.push_back(c);
        out << fmt::format("verdict: fail ({})\n", fmt::join(failing, "; "));
        return static_cast<int>(kExitVerifyFailed);
    });
}

}  // namespace riskydates
