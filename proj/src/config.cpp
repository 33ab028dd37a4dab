// Copyright 2026 The stackdelay Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
#include "stackdelay/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "stackdelay/errors.hpp"

namespace stackdelay {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& msg) { throw ConfigError("BadConfig", msg); }

void only_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) bad(where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key())) bad("unknown key '" + it.key() + "' in " + where);
}

double num(const json& v, const std::string& name) {
    if (!v.is_number()) bad(name + " must be a number");
    return v.get<double>();
}

int pos_int(const json& v, const std::string& name, bool allow_zero = false) {
    if (!v.is_number_integer() && !v.is_number_unsigned()) bad(name + " must be an integer");
    long long x = v.get<long long>();
    if (x < 0 || (!allow_zero && x == 0)) bad(name + " must be positive");
    if (x > 2000000000LL) bad(name + " too large");
    return static_cast<int>(x);
}

// number (s*I for square shapes, filled otherwise), flat or nested array
Mat parse_matrix(const json& v, int rows, int cols, const std::string& name) {
    if (v.is_number()) {
        double s = v.get<double>();
        if (rows == cols) return s * Mat::Identity(rows, cols);
        return Mat::Constant(rows, cols, s);
    }
    if (!v.is_array()) bad(name + ": expected a number or an array");
    Mat m(rows, cols);
    if (!v.empty() && v[0].is_array()) {
        if (static_cast<int>(v.size()) != rows) throw DimensionMismatch(name + ": wrong number of rows");
        for (int i = 0; i < rows; ++i) {
            if (!v[i].is_array() || static_cast<int>(v[i].size()) != cols)
                throw DimensionMismatch(name + ": wrong number of columns");
            for (int c = 0; c < cols; ++c) m(i, c) = num(v[i][c], name);
        }
        return m;
    }
    if (static_cast<int>(v.size()) != rows * cols) throw DimensionMismatch(name + ": wrong number of entries");
    for (int i = 0; i < rows; ++i)
        for (int c = 0; c < cols; ++c) m(i, c) = num(v[i * cols + c], name);
    return m;
}

}  // namespace

CoeffFn parse_coeff(const json& v, int rows, int cols, const std::string& name, bool allow_beyond) {
    if (!v.is_object()) return CoeffFn::constant(parse_matrix(v, rows, cols, name));
    only_keys(v, {"constant", "table", "beyond_horizon"}, name);
    if (v.contains("constant") == v.contains("table")) bad(name + ": give exactly one of constant/table");
    CoeffFn c;
    if (v.contains("constant")) {
        c = CoeffFn::constant(parse_matrix(v["constant"], rows, cols, name));
    } else {
        const json& t = v["table"];
        if (!t.is_array() || t.empty()) bad(name + ": table must be a non-empty array");
        std::vector<std::pair<double, Mat>> rowsv;
        for (const auto& r : t) {
            if (!r.is_array() || static_cast<int>(r.size()) != 1 + rows * cols)
                throw DimensionMismatch(name + ": table rows need t plus " + std::to_string(rows * cols) + " entries");
            Mat m(rows, cols);
            for (int i = 0; i < rows; ++i)
                for (int k = 0; k < cols; ++k) m(i, k) = num(r[1 + i * cols + k], name);
            rowsv.emplace_back(num(r[0], name), m);
        }
        c = CoeffFn::table(std::move(rowsv));
    }
    if (v.contains("beyond_horizon")) {
        if (!allow_beyond) bad(name + ": beyond_horizon is only meaningful for Qbar/Rbar weights");
        c.beyond = parse_matrix(v["beyond_horizon"], rows, cols, name);
    }
    return c;
}

RunConfig parse_config(const json& j) {
    only_keys(j, {"game", "grid", "solver", "simulation", "verification", "output"}, "config");
    if (!j.contains("game")) bad("missing 'game' block");
    RunConfig rc;
    rc.raw = j;

    const json& gm = j["game"];
    only_keys(gm, {"horizon", "delay", "state_dim", "follower_dim", "leader_dim", "coefficients", "initial"}, "game");
    for (const char* k : {"horizon", "delay", "state_dim", "follower_dim", "leader_dim"})
        if (!gm.contains(k)) bad(std::string("game.") + k + " is required");
    GameSpec& s = rc.spec;
    s.T = num(gm["horizon"], "horizon");
    s.delta = num(gm["delay"], "delay");
    if (!(s.T > 0.0) || !(s.delta > 0.0)) bad("horizon and delay must be positive");
    if (s.delta > s.T) throw DelayExceedsHorizon("delay exceeds horizon");
    s.n = pos_int(gm["state_dim"], "state_dim");
    s.k1 = pos_int(gm["follower_dim"], "follower_dim");
    s.k2 = pos_int(gm["leader_dim"], "leader_dim");
    const int n = s.n, k1 = s.k1, k2 = s.k2;

    struct Slot {
        const char* key;
        CoeffFn* f;
        int r, c;
        bool weight;
    };
    const std::vector<Slot> slots = {
        {"A", &s.A, n, n, false},          {"Abar", &s.Abar, n, n, false},     {"C", &s.C, n, n, false},
        {"Cbar", &s.Cbar, n, n, false},    {"B1bar", &s.B1bar, n, k1, false},  {"D1bar", &s.D1bar, n, k1, false},
        {"B2bar", &s.B2bar, n, k2, false}, {"D2bar", &s.D2bar, n, k2, false},  {"Q1", &s.Q1, n, n, false},
        {"Q1bar", &s.Q1bar, n, n, true},   {"Q2", &s.Q2, n, n, false},         {"Q2bar", &s.Q2bar, n, n, true},
        {"R1", &s.R1, k1, k1, false},      {"R1bar", &s.R1bar, k1, k1, true},  {"R2", &s.R2, k2, k2, false},
        {"R2bar", &s.R2bar, k2, k2, true},
    };
    std::set<std::string> ckeys{"G1", "G2"};
    for (const auto& sl : slots) ckeys.insert(sl.key);
    const json cf = gm.contains("coefficients") ? gm["coefficients"] : json::object();
    only_keys(cf, ckeys, "game.coefficients");
    for (const auto& sl : slots)
        *sl.f = cf.contains(sl.key) ? parse_coeff(cf[sl.key], sl.r, sl.c, sl.key, sl.weight) : CoeffFn::zero(sl.r, sl.c);
    s.G1 = cf.contains("G1") ? parse_matrix(cf["G1"], n, n, "G1") : Mat::Zero(n, n);
    s.G2 = cf.contains("G2") ? parse_matrix(cf["G2"], n, n, "G2") : Mat::Zero(n, n);

    const json ini = gm.contains("initial") ? gm["initial"] : json::object();
    only_keys(ini, {"phi", "eta1", "eta2"}, "game.initial");
    s.phi = ini.contains("phi") ? parse_coeff(ini["phi"], n, 1, "phi", false) : CoeffFn::zero(n, 1);
    s.eta1 = ini.contains("eta1") ? parse_coeff(ini["eta1"], k1, 1, "eta1", false) : CoeffFn::zero(k1, 1);
    s.eta2 = ini.contains("eta2") ? parse_coeff(ini["eta2"], k2, 1, "eta2", false) : CoeffFn::zero(k2, 1);

    if (j.contains("grid")) {
        const json& gr = j["grid"];
        only_keys(gr, {"N", "step"}, "grid");
        if (gr.contains("N") == gr.contains("step")) bad("grid: give exactly one of N/step");
        if (gr.contains("N")) {
            rc.N = pos_int(gr["N"], "grid.N");
        } else {
            double h = num(gr["step"], "grid.step");
            if (!(h > 0.0)) bad("grid.step must be positive");
            double cells = s.T / h;
            long long c = std::llround(cells);
            if (c < 2 || std::fabs(cells - c) > 1e-9 * cells) bad("grid.step does not divide the horizon");
            rc.N = static_cast<int>(c - 1);
        }
    }
    if (j.contains("solver")) {
        const json& so = j["solver"];
        only_keys(so, {"integrator"}, "solver");
        if (so.contains("integrator")) {
            if (!so["integrator"].is_string()) bad("solver.integrator must be a string");
            rc.integ = parse_integrator(so["integrator"].get<std::string>());
        }
    }
    if (j.contains("simulation")) {
        const json& si = j["simulation"];
        only_keys(si, {"paths", "seed", "checkpoints", "workers"}, "simulation");
        if (si.contains("paths")) rc.paths = static_cast<std::size_t>(pos_int(si["paths"], "simulation.paths"));
        if (si.contains("seed")) {
            if (!si["seed"].is_number_unsigned() && !si["seed"].is_number_integer()) bad("seed must be an integer");
            if (si["seed"].is_number_integer() && si["seed"].get<long long>() < 0) bad("seed must be non-negative");
            rc.seed = si["seed"].get<std::uint64_t>();
        }
        if (si.contains("checkpoints")) rc.checkpoints = pos_int(si["checkpoints"], "simulation.checkpoints");
        if (si.contains("workers")) rc.workers = pos_int(si["workers"], "simulation.workers");
    }
    if (j.contains("verification")) {
        const json& ve = j["verification"];
        only_keys(ve, {"epsilons", "directions", "leader_response"}, "verification");
        if (ve.contains("epsilons")) {
            if (!ve["epsilons"].is_array() || ve["epsilons"].empty()) bad("epsilons must be a non-empty array");
            rc.epsilons.clear();
            for (const auto& e : ve["epsilons"]) {
                double x = num(e, "epsilon");
                if (!(x > 0.0)) bad("epsilons must be positive");
                rc.epsilons.push_back(x);
            }
        }
        if (ve.contains("directions")) {
            if (!ve["directions"].is_array() || ve["directions"].empty()) bad("directions must be a non-empty array");
            rc.directions.clear();
            for (const auto& d : ve["directions"]) {
                if (!d.is_string()) bad("directions must be strings");
                direction_value(d.get<std::string>(), 0.0, 1.0);
                rc.directions.push_back(d.get<std::string>());
            }
        }
        if (ve.contains("leader_response")) {
            if (!ve["leader_response"].is_string()) bad("leader_response must be a string");
            rc.leader = parse_leader_response(ve["leader_response"].get<std::string>());
        }
    }
    if (j.contains("output")) {
        const json& ou = j["output"];
        only_keys(ou, {"directory", "export_paths", "pi_band"}, "output");
        if (ou.contains("directory")) {
            if (!ou["directory"].is_string()) bad("output.directory must be a string");
            rc.out_dir = ou["directory"].get<std::string>();
        }
        if (ou.contains("export_paths")) rc.export_paths = pos_int(ou["export_paths"], "output.export_paths", true);
        if (ou.contains("pi_band")) {
            if (!ou["pi_band"].is_boolean()) bad("output.pi_band must be a boolean");
            rc.pi_band = ou["pi_band"].get<bool>();
        }
    }
    return rc;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) bad("cannot open config '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        bad(std::string("malformed JSON: ") + e.what());
    }
    return parse_config(j);
}

json builtin_config(int which) {
    if (which == 1) {
        const json step = json::array({json::array({0.0, 0.0}), json::array({1.0, 1.0})});
        return json{
            {"game",
             {{"horizon", 10.0},
              {"delay", 1.0},
              {"state_dim", 1},
              {"follower_dim", 1},
              {"leader_dim", 1},
              {"coefficients",
               {{"A", 0.0},
                {"Abar", 0.0},
                {"C", -1.0},
                {"Cbar", 0.0},
                {"B1bar", {{"table", step}}},
                {"D1bar", {{"table", step}}},
                {"B2bar", {{"table", step}}},
                {"D2bar", {{"table", step}}},
                {"Q1", 0.1},
                {"Q1bar", 0.0},
                {"Q2", 0.1},
                {"Q2bar", 0.0},
                {"R1", 1.0},
                {"R1bar", -1.0},
                {"R2", 1.0},
                {"R2bar", 0.0},
                {"G1", 1.0},
                {"G2", 1.0}}},
              {"initial", {{"phi", 1.0}, {"eta1", 0.0}, {"eta2", 0.0}}}}},
            {"grid", {{"N", 999}}},
            {"solver", {{"integrator", "euler"}}},
            {"simulation", {{"paths", 1000}, {"seed", 1}, {"checkpoints", 10}, {"workers", 1}}},
            {"verification",
             {{"epsilons", {0.01, 0.05, 0.1}}, {"directions", {"constant", "sin", "ramp"}}, {"leader_response", "exact"}}},
            {"output", {{"directory", "out/example1"}, {"export_paths", 3}, {"pi_band", false}}}};
    }
    if (which == 2) {
        // R&D rivalry: gamma, alpha, V, x0
        const double delta = 1.0, gamma = 0.02, alpha = 2.0, V = 10.0, x0 = 10.0;
        const double C = -std::sqrt(gamma) / 2.0;
        const double B1 = -alpha * std::exp(-gamma * delta / 2.0);
        const double B2 = std::exp(-gamma * delta / 2.0);
        const double D1 = -B1 / C;
        const double D2 = std::exp(gamma * delta);
        const double Q = V / (2.0 * x0 * x0);
        const double Qb = std::exp(-gamma * delta) * Q;
        return json{
            {"game",
             {{"horizon", 10.0},
              {"delay", delta},
              {"state_dim", 1},
              {"follower_dim", 1},
              {"leader_dim", 1},
              {"coefficients",
               {{"A", -gamma / 2.0},
                {"Abar", 0.0},
                {"C", C},
                {"Cbar", 0.0},
                {"B1bar", B1},
                {"D1bar", D1},
                {"B2bar", B2},
                {"D2bar", D2},
                {"Q1", Q},
                {"Q1bar", {{"constant", -Qb}, {"beyond_horizon", -Qb}}},
                {"Q2", -Q},
                {"Q2bar", {{"constant", Q}, {"beyond_horizon", Q}}},
                {"R1", 1.0},
                {"R1bar", -1.0},
                {"R2", 1.0},
                {"R2bar", -std::exp(-gamma * delta / 2.0)},
                {"G1", 0.0},
                {"G2", 0.0}}},
              {"initial", {{"phi", 1.0}, {"eta1", 0.0}, {"eta2", 0.0}}}}},
            {"grid", {{"N", 999}}},
            {"solver", {{"integrator", "euler"}}},
            {"simulation", {{"paths", 10000}, {"seed", 20260501}, {"checkpoints", 10}, {"workers", 1}}},
            {"verification",
             {{"epsilons", {0.01, 0.05, 0.1}}, {"directions", {"constant", "sin", "ramp"}}, {"leader_response", "exact"}}},
            {"output", {{"directory", "out/example2"}, {"export_paths", 3}, {"pi_band", false}}}};
    }
    throw ConfigError("BadConfig", "built-in examples are 1 and 2");
}

}  // namespace stackdelay
