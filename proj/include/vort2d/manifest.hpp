#pragma once

#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "vort2d/csv.hpp"
#include "vort2d/qoi.hpp"
#include "vort2d/surrogates.hpp"

namespace vort2d {

enum class ClosureChoice { None, Smagorinsky, ToPlain, ToIndependent, ToMvg };

inline std::string closure_name(ClosureChoice c) {
    switch (c) {
        case ClosureChoice::None: return "none";
        case ClosureChoice::Smagorinsky: return "smag";
        case ClosureChoice::ToPlain: return "to-plain";
        case ClosureChoice::ToIndependent: return "to-indep";
        case ClosureChoice::ToMvg: return "to-mvg";
    }
    return "?";
}

inline ClosureChoice closure_from_name(const std::string& s) {
    if (s == "none") return ClosureChoice::None;
    if (s == "smag") return ClosureChoice::Smagorinsky;
    if (s == "to-plain") return ClosureChoice::ToPlain;
    if (s == "to-indep") return ClosureChoice::ToIndependent;
    if (s == "to-mvg") return ClosureChoice::ToMvg;
    throw ConfigError("closure.name: unknown closure '" + s + "'");
}

/// Full campaign configuration; defaults are the paper setup.
struct RunManifest {
    int hf_n = 257;
    double hf_dt_days = 0.01;
    int lf_n = 65;
    double lf_dt_days = 0.1;
    PhysicsParams physics;
    std::vector<QoiSpec> qois = default_qois();
    ClosureChoice closure = ClosureChoice::ToMvg;
    double smag_cs = 0.1;
    double smag_delta = 0.0;  // 0 -> 2π / lf_n
    double spinup_days = 300.0;
    double reference_days = 4000.0;
    double training_days = 3000.0;
    double prediction_days = 5000.0;
    std::vector<std::uint64_t> replica_seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
    double burn_in_days = 200.0;
    double snapshot_cadence_days = 10.0;
    double stats_cadence_days = 1.0;
    std::filesystem::path output_dir = "campaign_out";

    double resolved_delta() const { return smag_delta > 0.0 ? smag_delta : kTwoPi / lf_n; }

    SolverConfig hf_config() const {
        SolverConfig c;
        c.grid = &grid_of(hf_n);
        c.dt_days = hf_dt_days;
        c.physics = physics;
        return c;
    }
    SolverConfig lf_config(bool with_smag = false) const {
        SolverConfig c;
        c.grid = &grid_of(lf_n);
        c.dt_days = lf_dt_days;
        c.physics = physics;
        if (with_smag) c.closure = SmagorinskyParams{smag_cs, resolved_delta()};
        return c;
    }

    void validate() const {
        auto check_grid = [](int n, const char* key) {
            if (n < 3 || n % 2 == 0)
                throw ConfigError(std::string(key) + ": grid size must be odd and >= 3");
        };
        check_grid(hf_n, "hf.n");
        check_grid(lf_n, "lf.n");
        if (lf_n > hf_n) throw ConfigError("lf.n: must not exceed hf.n");
        if (!(hf_dt_days > 0.0)) throw ConfigError("hf.dt_days: must be > 0");
        if (!(lf_dt_days > 0.0)) throw ConfigError("lf.dt_days: must be > 0");
        const double ratio = lf_dt_days / hf_dt_days;
        if (std::abs(ratio - std::round(ratio)) > 1e-9 || ratio < 1.0 - 1e-9)
            throw ConfigError("lf.dt_days: must be an integer multiple of hf.dt_days");
        physics.validate();
        if (qois.empty()) throw ConfigError("qoi: need at least one QoI");
        for (const auto& q : qois) {
            if (q.lo < 0 || q.lo > q.hi) throw ConfigError("qoi: invalid band " + q.name());
            if (q.hi > (lf_n - 1) / 2)
                throw ConfigError("qoi: band " + q.name() + " outside the LF resolved range");
        }
        if (smag_cs < 0.0) throw ConfigError("closure.cs: must be >= 0");
        if (smag_delta < 0.0) throw ConfigError("closure.delta: must be >= 0");
        if (!(training_days > 0.0)) throw ConfigError("training.days: must be > 0");
        if (!(prediction_days > 0.0)) throw ConfigError("prediction.days: must be > 0");
        if (!(reference_days > 0.0)) throw ConfigError("reference.days: must be > 0");
        if (spinup_days < 0.0) throw ConfigError("spinup.days: must be >= 0");
        if (burn_in_days < 0.0) throw ConfigError("burn_in.days: must be >= 0");
        if (!(snapshot_cadence_days > 0.0)) throw ConfigError("snapshot.cadence_days: must be > 0");
        if (!(stats_cadence_days > 0.0)) throw ConfigError("stats.cadence_days: must be > 0");
        auto check_cadence = [&](double cadence, const char* key) {
            const double r = cadence / lf_dt_days;
            if (std::abs(r - std::round(r)) > 1e-9 || r < 1.0 - 1e-9)
                throw ConfigError(std::string(key) + ": must be a multiple of lf.dt_days");
        };
        check_cadence(stats_cadence_days, "stats.cadence_days");
        check_cadence(snapshot_cadence_days, "snapshot.cadence_days");
        if (replica_seeds.empty()) throw ConfigError("replicas.seeds: need at least one seed");
    }
};

namespace detail {

inline std::vector<QoiSpec> parse_qoi_list(const std::string& text) {
    std::vector<QoiSpec> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ';')) {
        // form: E[0,15] or Z[16,21]
        std::string t;
        for (char ch : tok)
            if (!std::isspace(static_cast<unsigned char>(ch))) t += ch;
        if (t.empty()) continue;
        QoiSpec q;
        if (t[0] == 'E')
            q.kind = QoiKind::Energy;
        else if (t[0] == 'Z')
            q.kind = QoiKind::Enstrophy;
        else
            throw ConfigError("qoi: expected E[l,m] or Z[l,m], got '" + tok + "'");
        if (std::sscanf(t.c_str() + 1, "[%d,%d]", &q.lo, &q.hi) != 2)
            throw ConfigError("qoi: expected E[l,m] or Z[l,m], got '" + tok + "'");
        out.push_back(q);
    }
    return out;
}

inline std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.find_first_not_of(" \t") == std::string::npos) continue;
        out.push_back(std::stoull(tok));
    }
    return out;
}

}  // namespace detail

/// Flat dotted-key manifest: one `key = value` per line, '#' comments.
inline RunManifest parse_manifest_text(std::istream& in, const std::string& origin) {
    RunManifest m;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        try {
            if (key == "hf.n") m.hf_n = std::stoi(value);
            else if (key == "hf.dt_days") m.hf_dt_days = std::stod(value);
            else if (key == "lf.n") m.lf_n = std::stoi(value);
            else if (key == "lf.dt_days") m.lf_dt_days = std::stod(value);
            else if (key == "physics.nu") m.physics.nu = std::stod(value);
            else if (key == "physics.mu") m.physics.mu = std::stod(value);
            else if (key == "forcing.amplitude") m.physics.forcing.amplitude = std::stod(value);
            else if (key == "forcing.kx") m.physics.forcing.kx = std::stoi(value);
            else if (key == "forcing.ky") m.physics.forcing.ky = std::stoi(value);
            else if (key == "qoi") m.qois = detail::parse_qoi_list(value);
            else if (key == "closure.name") m.closure = closure_from_name(value);
            else if (key == "closure.cs") m.smag_cs = std::stod(value);
            else if (key == "closure.delta") m.smag_delta = std::stod(value);
            else if (key == "spinup.days") m.spinup_days = std::stod(value);
            else if (key == "reference.days") m.reference_days = std::stod(value);
            else if (key == "training.days") m.training_days = std::stod(value);
            else if (key == "prediction.days") m.prediction_days = std::stod(value);
            else if (key == "replicas.seeds") m.replica_seeds = detail::parse_seed_list(value);
            else if (key == "burn_in.days") m.burn_in_days = std::stod(value);
            else if (key == "snapshot.cadence_days") m.snapshot_cadence_days = std::stod(value);
            else if (key == "stats.cadence_days") m.stats_cadence_days = std::stod(value);
            else if (key == "output.dir") m.output_dir = value;
            else
                throw ConfigError("unknown key '" + key + "'");
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception& e) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": bad value for '" + key +
                              "': " + e.what());
        }
    }
    m.validate();
    return m;
}

inline RunManifest parse_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest " + path.string());
    return parse_manifest_text(in, path.string());
}

inline void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "hf.n = " << m.hf_n << "\n";
    out << "hf.dt_days = " << fmt17(m.hf_dt_days) << "\n";
    out << "lf.n = " << m.lf_n << "\n";
    out << "lf.dt_days = " << fmt17(m.lf_dt_days) << "\n";
    out << "physics.nu = " << fmt17(m.physics.nu) << "\n";
    out << "physics.mu = " << fmt17(m.physics.mu) << "\n";
    out << "forcing.amplitude = " << fmt17(m.physics.forcing.amplitude) << "\n";
    out << "forcing.kx = " << m.physics.forcing.kx << "\n";
    out << "forcing.ky = " << m.physics.forcing.ky << "\n";
    out << "qoi = ";
    for (std::size_t i = 0; i < m.qois.size(); ++i)
        out << (i ? "; " : "") << m.qois[i].name();
    out << "\n";
    out << "closure.name = " << closure_name(m.closure) << "\n";
    out << "closure.cs = " << fmt17(m.smag_cs) << "\n";
    out << "closure.delta = " << fmt17(m.smag_delta) << "\n";
    out << "spinup.days = " << fmt17(m.spinup_days) << "\n";
    out << "reference.days = " << fmt17(m.reference_days) << "\n";
    out << "training.days = " << fmt17(m.training_days) << "\n";
    out << "prediction.days = " << fmt17(m.prediction_days) << "\n";
    out << "replicas.seeds = ";
    for (std::size_t i = 0; i < m.replica_seeds.size(); ++i)
        out << (i ? "," : "") << m.replica_seeds[i];
    out << "\n";
    out << "burn_in.days = " << fmt17(m.burn_in_days) << "\n";
    out << "snapshot.cadence_days = " << fmt17(m.snapshot_cadence_days) << "\n";
    out << "stats.cadence_days = " << fmt17(m.stats_cadence_days) << "\n";
    out << "output.dir = " << m.output_dir.string() << "\n";
}

}  // namespace vort2d
