#include "riskydates/scenario_io.hpp"

#include <algorithm>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "riskydates/error.hpp"

namespace riskydates {

namespace {

class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& at, const std::string& msg) const {
        const YAML::Mark m = at.Mark();
        if (m.is_null()) throw Error(ErrorCode::ParseError, fmt::format("{}: {}", source_, msg));
        throw Error(ErrorCode::ParseError, fmt::format("{}:{}:{}: {}", source_, m.line + 1, m.column + 1, msg));
    }

    void expect_map(const YAML::Node& n, const std::string& what) const {
        if (!n.IsMap()) fail(n, fmt::format("'{}' must be a mapping", what));
    }

    void only(const YAML::Node& n, const std::string& what, std::initializer_list<const char*> allowed) const {
        expect_map(n, what);
        for (const auto& kv : n) {
            const auto key = kv.first.as<std::string>();
            const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
            if (!known) fail(kv.first, fmt::format("unknown key '{}' in {}", key, what));
        }
    }

    const YAML::Node need(const YAML::Node& n, const char* key, const std::string& what) const {
        const YAML::Node v = n[key];
        if (!v) fail(n, fmt::format("{} needs '{}'", what, key));
        return v;
    }

    template <typename T>
    T as(const YAML::Node& n, const std::string& what) const {
        try {
            return n.as<T>();
        } catch (const YAML::Exception&) {
            fail(n, fmt::format("bad value for '{}'", what));
        }
    }

    template <typename T>
    T get(const YAML::Node& n, const char* key, const std::string& what) const {
        return as<T>(need(n, key, what), fmt::format("{}.{}", what, key));
    }

    template <typename T>
    T get_or(const YAML::Node& n, const char* key, const std::string& what, T fallback) const {
        const YAML::Node v = n[key];
        return v ? as<T>(v, fmt::format("{}.{}", what, key)) : fallback;
    }

    std::vector<double> doubles(const YAML::Node& n, const std::string& what) const {
        if (!n.IsSequence()) fail(n, fmt::format("'{}' must be a list", what));
        std::vector<double> out;
        for (const auto& v : n) out.push_back(as<double>(v, what));
        return out;
    }

private:
    std::string source_;
};

CurveConfig read_curve(const Reader& rd, const YAML::Node& n, const std::string& what) {
    CurveConfig c;
    rd.expect_map(n, what);
    c.family = rd.get<std::string>(n, "family", what);
    if (c.family == "flat") {
        rd.only(n, what, {"family", "value"});
        c.value = rd.get<double>(n, "value", what);
    } else if (c.family == "linear") {
        rd.only(n, what, {"family", "intercept", "slope"});
        c.intercept = rd.get<double>(n, "intercept", what);
        c.slope = rd.get<double>(n, "slope", what);
    } else if (c.family == "tabulated") {
        rd.only(n, what, {"family", "points"});
        const YAML::Node pts = rd.need(n, "points", what);
        if (!pts.IsSequence() || pts.size() == 0) rd.fail(pts, fmt::format("{}.points must be a non-empty list", what));
        for (const auto& p : pts) {
            const auto v = rd.doubles(p, what + ".points");
            if (v.size() != 2) rd.fail(p, "each tabulated point is [time, value]");
            c.points.emplace_back(v[0], v[1]);
        }
    } else {
        rd.fail(n["family"], fmt::format("unknown curve family '{}'", c.family));
    }
    return c;
}

VolConfig read_vol(const Reader& rd, const YAML::Node& n, const std::string& what, std::size_t factors) {
    VolConfig v;
    rd.expect_map(n, what);
    v.family = rd.get<std::string>(n, "family", what);
    if (v.family == "zero") {
        rd.only(n, what, {"family"});
        return v;
    }
    if (v.family == "constant") {
        rd.only(n, what, {"family", "sigma"});
    } else if (v.family == "exp_decay") {
        rd.only(n, what, {"family", "sigma", "decay"});
        v.decay = rd.get<double>(n, "decay", what);
    } else {
        rd.fail(n["family"], fmt::format("unknown volatility family '{}'", v.family));
    }
    const YAML::Node s = rd.need(n, "sigma", what);
    v.sigma = rd.doubles(s, what + ".sigma");
    if (v.sigma.size() != factors) {
        rd.fail(s, fmt::format("{}.sigma has {} entries for {} factors", what, v.sigma.size(), factors));
    }
    return v;
}

std::vector<LossConfig> read_losses(const Reader& rd, const YAML::Node& n, const std::string& what) {
    std::vector<LossConfig> out;
    if (!n) return out;
    if (!n.IsSequence()) rd.fail(n, fmt::format("'{}' must be a list", what));
    for (const auto& e : n) {
        rd.only(e, what, {"loss", "prob"});
        out.push_back({rd.get<double>(e, "loss", what), rd.get<double>(e, "prob", what)});
    }
    return out;
}

RiskyConfig read_risky(const Reader& rd, const YAML::Node& n) {
    const std::string what = "risky_dates";
    RiskyConfig r;
    rd.only(n, what, {"kind", "atoms", "intensity", "kernel", "max_announcements", "j_atoms"});
    r.kind = rd.get<std::string>(n, "kind", what);
    if (r.kind == "deterministic_atoms") {
        for (const char* k : {"intensity", "kernel", "max_announcements"}) {
            if (n[k]) rd.fail(n[k], fmt::format("'{}' only applies to marked_point_process", k));
        }
        const YAML::Node atoms = rd.need(n, "atoms", what);
        if (!atoms.IsSequence()) rd.fail(atoms, "risky_dates.atoms must be a list");
        for (const auto& a : atoms) {
            rd.only(a, "risky_dates.atoms", {"date", "weight"});
            r.atoms.push_back({rd.get<double>(a, "date", "atom"), rd.get_or<unsigned>(a, "weight", "atom", 1u)});
        }
    } else if (r.kind == "marked_point_process") {
        if (n["atoms"]) rd.fail(n["atoms"], "'atoms' only applies to deterministic_atoms");
        const YAML::Node in = rd.need(n, "intensity", what);
        rd.expect_map(in, "intensity");
        r.intensity_family = rd.get<std::string>(in, "family", "intensity");
        if (r.intensity_family == "constant") {
            rd.only(in, "intensity", {"family", "rate"});
            r.intercept = rd.get<double>(in, "rate", "intensity");
        } else if (r.intensity_family == "linear") {
            rd.only(in, "intensity", {"family", "intercept", "slope"});
            r.intercept = rd.get<double>(in, "intercept", "intensity");
            r.slope = rd.get<double>(in, "slope", "intensity");
        } else {
            rd.fail(in["family"], fmt::format("unknown intensity family '{}'", r.intensity_family));
        }
        const YAML::Node k = rd.need(n, "kernel", what);
        rd.expect_map(k, "kernel");
        r.kernel_family = rd.get<std::string>(k, "family", "kernel");
        if (r.kernel_family == "uniform") {
            rd.only(k, "kernel", {"family"});
        } else if (r.kernel_family == "exponential_delay") {
            rd.only(k, "kernel", {"family", "mean"});
            r.kernel_mean = rd.get<double>(k, "mean", "kernel");
        } else {
            rd.fail(k["family"], fmt::format("unknown kernel family '{}'", r.kernel_family));
        }
        r.max_announcements = rd.get_or<unsigned>(n, "max_announcements", what, 0u);
    } else {
        rd.fail(n["kind"], fmt::format("unknown risky-date kind '{}'", r.kind));
    }
    if (const YAML::Node js = n["j_atoms"]) {
        if (!js.IsSequence()) rd.fail(js, "risky_dates.j_atoms must be a list");
        for (const auto& j : js) {
            rd.only(j, "j_atoms", {"time", "mass", "kernel"});
            JAtomConfig jc{rd.get<double>(j, "time", "j_atom"), rd.get<double>(j, "mass", "j_atom"), {}};
            const YAML::Node ker = rd.need(j, "kernel", "j_atom");
            if (!ker.IsSequence()) rd.fail(ker, "j_atom kernel must be a list");
            for (const auto& ka : ker) {
                rd.only(ka, "j_atom kernel", {"date", "mass"});
                jc.kernel.push_back({rd.get<double>(ka, "date", "j_atom kernel"), rd.get<double>(ka, "mass", "j_atom kernel")});
            }
            r.j_atoms.push_back(std::move(jc));
        }
    }
    return r;
}

}  // namespace

ScenarioConfig parse_scenario(const std::string& text, const std::string& source) {
    const Reader rd(source);
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw Error(ErrorCode::ParseError,
                    fmt::format("{}:{}:{}: {}", source, e.mark.line + 1, e.mark.column + 1, e.msg));
    }
    if (!root.IsMap()) throw Error(ErrorCode::ParseError, fmt::format("{}: top level must be a mapping", source));
    rd.only(root, "scenario",
            {"schema_version", "name", "grid", "curves", "volatilities", "risky_dates", "default", "recovery", "run"});

    ScenarioConfig c;
    const YAML::Node ver = root["schema_version"];
    if (!ver) throw Error(ErrorCode::ParseError, fmt::format("{}: missing schema_version", source));
    c.schema_version = rd.as<int>(ver, "schema_version");
    if (c.schema_version != kSchemaVersion) rd.fail(ver, fmt::format("unsupported schema_version {}", c.schema_version));
    c.name = rd.get_or<std::string>(root, "name", "scenario", "");

    const YAML::Node grid = rd.need(root, "grid", "scenario");
    rd.only(grid, "grid", {"horizon", "steps", "extra_nodes"});
    c.grid.horizon = rd.get<double>(grid, "horizon", "grid");
    c.grid.steps = rd.get<std::size_t>(grid, "steps", "grid");
    if (grid["extra_nodes"]) c.grid.extra_nodes = rd.doubles(grid["extra_nodes"], "grid.extra_nodes");

    const YAML::Node curves = rd.need(root, "curves", "scenario");
    rd.only(curves, "curves", {"f0", "g0"});
    c.f0 = read_curve(rd, rd.need(curves, "f0", "curves"), "curves.f0");
    if (curves["g0"]) c.g0 = read_curve(rd, curves["g0"], "curves.g0");

    if (const YAML::Node vols = root["volatilities"]) {
        rd.only(vols, "volatilities", {"factors", "b", "beta"});
        c.factors = rd.get_or<std::size_t>(vols, "factors", "volatilities", 1);
        if (c.factors == 0) rd.fail(vols["factors"], "volatilities.factors must be positive");
        if (vols["b"]) c.b = read_vol(rd, vols["b"], "volatilities.b", c.factors);
        if (vols["beta"]) c.beta = read_vol(rd, vols["beta"], "volatilities.beta", c.factors);
    }

    c.risky = read_risky(rd, rd.need(root, "risky_dates", "scenario"));

    if (const YAML::Node d = root["default"]) {
        rd.only(d, "default", {"intensity"});
        const YAML::Node in = rd.need(d, "intensity", "default");
        rd.expect_map(in, "default.intensity");
        c.default_model.family = rd.get<std::string>(in, "family", "default.intensity");
        if (c.default_model.family == "constant") {
            rd.only(in, "default.intensity", {"family", "rate"});
            c.default_model.rate = rd.get<double>(in, "rate", "default.intensity");
        } else if (c.default_model.family == "proportional") {
            rd.only(in, "default.intensity", {"family", "factor"});
            c.default_model.rate = rd.get<double>(in, "factor", "default.intensity");
        } else {
            rd.fail(in["family"], fmt::format("unknown default intensity family '{}'", c.default_model.family));
        }
    }

    if (const YAML::Node r = root["recovery"]) {
        rd.only(r, "recovery", {"event_rate", "event_loss", "atom_loss"});
        RecoveryConfig rc;
        rc.event_rate = rd.get_or<double>(r, "event_rate", "recovery", 0.0);
        rc.event_loss = read_losses(rd, r["event_loss"], "recovery.event_loss");
        rc.atom_loss = read_losses(rd, r["atom_loss"], "recovery.atom_loss");
        c.recovery = std::move(rc);
    }

    if (const YAML::Node run = root["run"]) {
        rd.only(run, "run", {"paths", "seed", "z_threshold", "algebraic_tolerance", "mesh_points"});
        c.run.n_paths = rd.get_or<std::size_t>(run, "paths", "run", c.run.n_paths);
        c.run.master_seed = rd.get_or<std::uint64_t>(run, "seed", "run", c.run.master_seed);
        c.run.z_threshold = rd.get_or<double>(run, "z_threshold", "run", c.run.z_threshold);
        c.run.algebraic_tolerance = rd.get_or<double>(run, "algebraic_tolerance", "run", c.run.algebraic_tolerance);
        c.run.mesh_points = rd.get_or<std::size_t>(run, "mesh_points", "run", c.run.mesh_points);
    }
    return c;
}

ScenarioConfig load_scenario_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot read {}", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path);
}

namespace {

void emit_curve(YAML::Emitter& out, const CurveConfig& c) {
    out << YAML::BeginMap << YAML::Key << "family" << YAML::Value << c.family;
    if (c.family == "flat") {
        out << YAML::Key << "value" << YAML::Value << c.value;
    } else if (c.family == "linear") {
        out << YAML::Key << "intercept" << YAML::Value << c.intercept << YAML::Key << "slope" << YAML::Value << c.slope;
    } else {
        out << YAML::Key << "points" << YAML::Value << YAML::BeginSeq;
        for (const auto& [t, v] : c.points) out << YAML::Flow << YAML::BeginSeq << t << v << YAML::EndSeq;
        out << YAML::EndSeq;
    }
    out << YAML::EndMap;
}

void emit_vol(YAML::Emitter& out, const VolConfig& v) {
    out << YAML::BeginMap << YAML::Key << "family" << YAML::Value << v.family;
    if (v.family != "zero") out << YAML::Key << "sigma" << YAML::Value << YAML::Flow << v.sigma;
    if (v.family == "exp_decay") out << YAML::Key << "decay" << YAML::Value << v.decay;
    out << YAML::EndMap;
}

void emit_losses(YAML::Emitter& out, const char* key, const std::vector<LossConfig>& ls) {
    if (ls.empty()) return;
    out << YAML::Key << key << YAML::Value << YAML::BeginSeq;
    for (const auto& l : ls) {
        out << YAML::Flow << YAML::BeginMap << YAML::Key << "loss" << YAML::Value << l.loss << YAML::Key << "prob"
            << YAML::Value << l.prob << YAML::EndMap;
    }
    out << YAML::EndSeq;
}

}  // namespace

std::string serialize_scenario(const ScenarioConfig& c) {
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap;
    out << YAML::Key << "schema_version" << YAML::Value << c.schema_version;
    out << YAML::Key << "name" << YAML::Value << c.name;

    out << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "horizon" << YAML::Value << c.grid.horizon;
    out << YAML::Key << "steps" << YAML::Value << c.grid.steps;
    if (!c.grid.extra_nodes.empty()) out << YAML::Key << "extra_nodes" << YAML::Value << YAML::Flow << c.grid.extra_nodes;
    out << YAML::EndMap;

    out << YAML::Key << "curves" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "f0" << YAML::Value;
    emit_curve(out, c.f0);
    out << YAML::Key << "g0" << YAML::Value;
    emit_curve(out, c.g0);
    out << YAML::EndMap;

    out << YAML::Key << "volatilities" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "factors" << YAML::Value << c.factors;
    out << YAML::Key << "b" << YAML::Value;
    emit_vol(out, c.b);
    out << YAML::Key << "beta" << YAML::Value;
    emit_vol(out, c.beta);
    out << YAML::EndMap;

    const RiskyConfig& r = c.risky;
    out << YAML::Key << "risky_dates" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "kind" << YAML::Value << r.kind;
    if (r.kind == "deterministic_atoms") {
        out << YAML::Key << "atoms" << YAML::Value << YAML::BeginSeq;
        for (const auto& a : r.atoms) {
            out << YAML::Flow << YAML::BeginMap << YAML::Key << "date" << YAML::Value << a.date << YAML::Key << "weight"
                << YAML::Value << a.weight << YAML::EndMap;
        }
        out << YAML::EndSeq;
    } else {
        out << YAML::Key << "intensity" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "family" << YAML::Value << r.intensity_family;
        if (r.intensity_family == "constant") {
            out << YAML::Key << "rate" << YAML::Value << r.intercept;
        } else {
            out << YAML::Key << "intercept" << YAML::Value << r.intercept << YAML::Key << "slope" << YAML::Value
                << r.slope;
        }
        out << YAML::EndMap;
        out << YAML::Key << "kernel" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "family" << YAML::Value << r.kernel_family;
        if (r.kernel_family == "exponential_delay") out << YAML::Key << "mean" << YAML::Value << r.kernel_mean;
        out << YAML::EndMap;
        out << YAML::Key << "max_announcements" << YAML::Value << r.max_announcements;
    }
    if (!r.j_atoms.empty()) {
        out << YAML::Key << "j_atoms" << YAML::Value << YAML::BeginSeq;
        for (const auto& j : r.j_atoms) {
            out << YAML::BeginMap << YAML::Key << "time" << YAML::Value << j.time << YAML::Key << "mass" << YAML::Value
                << j.mass << YAML::Key << "kernel" << YAML::Value << YAML::BeginSeq;
            for (const auto& ka : j.kernel) {
                out << YAML::Flow << YAML::BeginMap << YAML::Key << "date" << YAML::Value << ka.date << YAML::Key
                    << "mass" << YAML::Value << ka.mass << YAML::EndMap;
            }
            out << YAML::EndSeq << YAML::EndMap;
        }
        out << YAML::EndSeq;
    }
    out << YAML::EndMap;

    out << YAML::Key << "default" << YAML::Value << YAML::BeginMap << YAML::Key << "intensity" << YAML::Value
        << YAML::BeginMap << YAML::Key << "family" << YAML::Value << c.default_model.family << YAML::Key
        << (c.default_model.family == "constant" ? "rate" : "factor") << YAML::Value << c.default_model.rate
        << YAML::EndMap << YAML::EndMap;

    if (c.recovery) {
        out << YAML::Key << "recovery" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "event_rate" << YAML::Value << c.recovery->event_rate;
        emit_losses(out, "event_loss", c.recovery->event_loss);
        emit_losses(out, "atom_loss", c.recovery->atom_loss);
        out << YAML::EndMap;
    }

    out << YAML::Key << "run" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "paths" << YAML::Value << c.run.n_paths;
    out << YAML::Key << "seed" << YAML::Value << c.run.master_seed;
    out << YAML::Key << "z_threshold" << YAML::Value << c.run.z_threshold;
    out << YAML::Key << "algebraic_tolerance" << YAML::Value << c.run.algebraic_tolerance;
    out << YAML::Key << "mesh_points" << YAML::Value << c.run.mesh_points;
    out << YAML::EndMap;

    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

namespace {

Curve make_curve(const CurveConfig& c) {
    if (c.family == "flat") return flat_curve(c.value);
    if (c.family == "linear") return linear_curve(c.intercept, c.slope);
    if (c.family == "tabulated") return tabulated_curve(c.points);
    throw Error(ErrorCode::InvalidModel, fmt::format("unknown curve family '{}'", c.family));
}

VolField make_vol(const VolConfig& v, std::size_t factors) {
    if (v.family == "zero") return VolField::zero(factors);
    if (v.family == "constant") return VolField::constant(v.sigma);
    if (v.family == "exp_decay") return VolField::exp_decay(v.sigma, v.decay);
    throw Error(ErrorCode::InvalidModel, fmt::format("unknown volatility family '{}'", v.family));
}

LossLaw make_loss(const std::vector<LossConfig>& ls) {
    LossLaw law;
    for (const auto& l : ls) law.outcomes.push_back({l.loss, l.prob});
    return law;
}

}  // namespace

Scenario build_scenario(const ScenarioConfig& c) {
    std::vector<double> extra = c.grid.extra_nodes;
    for (const auto& a : c.risky.atoms) extra.push_back(a.date);
    for (const auto& j : c.risky.j_atoms) {
        extra.push_back(j.time);
        for (const auto& ka : j.kernel) extra.push_back(ka.date);
    }

    Scenario s;
    s.name = c.name;
    s.grid = build_time_grid(c.grid.horizon, c.grid.steps, extra);
    s.fields.f0 = make_curve(c.f0);
    s.fields.g0 = make_curve(c.g0);
    s.fields.b = make_vol(c.b, c.factors);
    s.fields.beta = make_vol(c.beta, c.factors);

    RiskyDateModel& r = s.risky;
    r.horizon = c.grid.horizon;
    if (c.risky.kind == "deterministic_atoms") {
        r.kind = RiskyKind::DeterministicAtoms;
        for (const auto& a : c.risky.atoms) r.atoms.push_back({a.date, a.weight});
    } else {
        r.kind = RiskyKind::MarkedPointProcess;
        r.rate = {c.risky.intercept, c.risky.slope};
        r.kernel = c.risky.kernel_family == "exponential_delay" ? DateKernel::exponential_delay(c.risky.kernel_mean)
                                                                 : DateKernel::uniform();
        r.max_announcements = c.risky.max_announcements;
    }
    for (const auto& j : c.risky.j_atoms) {
        JAtom ja{j.time, j.mass, {}};
        for (const auto& ka : j.kernel) ja.kernel.push_back({ka.date, ka.mass});
        r.j_atoms.push_back(std::move(ja));
    }

    s.default_model.kind =
        c.default_model.family == "proportional" ? DefaultModel::Kind::Proportional : DefaultModel::Kind::Constant;
    s.default_model.rate = c.default_model.rate;

    if (c.recovery) {
        RecoveryModel m;
        m.event_rate = c.recovery->event_rate;
        m.event_loss = make_loss(c.recovery->event_loss);
        m.atom_loss = make_loss(c.recovery->atom_loss);
        s.recovery = std::move(m);
    }
    s.run = c.run;
    return s;
}

}  // namespace riskydates
