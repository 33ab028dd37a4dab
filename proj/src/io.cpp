// Copyright 2026 The stackdelay Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
#include "stackdelay/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "stackdelay/errors.hpp"

namespace stackdelay {

std::string fmt_double(double x) {
    char b[40];
    std::snprintf(b, sizeof b, "%.17g", x);
    return b;
}

std::vector<std::string> vec_names(const std::string& name, int rows, int cols) {
    std::vector<std::string> out;
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) out.push_back(name + "_" + std::to_string(i) + "_" + std::to_string(j));
    return out;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header) : path_(path) {
    for (size_t i = 0; i < header.size(); ++i) {
        if (i) buf_ += ',';
        buf_ += header[i];
    }
    buf_ += '\n';
}

CsvWriter& CsvWriter::operator<<(double x) {
    if (!first_) buf_ += ',';
    buf_ += fmt_double(x);
    first_ = false;
    return *this;
}

CsvWriter& CsvWriter::operator<<(const Mat& m) {
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) *this << m(i, j);
    return *this;
}

void CsvWriter::end_row() {
    buf_ += '\n';
    first_ = true;
}

void CsvWriter::close() {
    if (closed_) return;
    closed_ = true;
    std::ofstream out(path_, std::ios::binary);
    if (!out) throw Error("IOError", "cannot write " + path_);
    out << buf_;
}

CsvWriter::~CsvWriter() {
    if (closed_) return;
    try {
        close();
    } catch (...) {
    }
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("IOError", "cannot create " + dir + ": " + ec.message());
}

namespace {

std::vector<std::string> cat(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

}  // namespace

void write_riccati_csv(const std::string& path, const PipelineResult& r) {
    const TimeGrid& g = r.vs.grid;
    const int n = r.vs.n(), k1 = r.vs.k1(), k2 = r.vs.k2();
    std::vector<std::string> h{"t"};
    h = cat(h, vec_names("P1", n, n));
    h = cat(h, vec_names("P2", n, n));
    h = cat(h, vec_names("Omega1", k1, k1));
    h = cat(h, vec_names("Omega2", k2, k2));
    h = cat(h, vec_names("Omega3", k2, k2));
    CsvWriter w(path, h);
    for (int k = 0; k <= g.N + 1; ++k) {
        w << g.t(k) << r.P1[k] << r.P2[k] << r.om.O1[k] << r.om.O2[k] << r.om.O3[k];
        w.end_row();
    }
    w.close();
}

void write_coupled_csv(const std::string& path, const PipelineResult& r) {
    const TimeGrid& g = r.vs.grid;
    const int m = r.st.m;
    CsvWriter w(path, cat(cat({"t"}, vec_names("L", m, m)), vec_names("PiInt", m, m)));
    for (int k = 0; k <= g.N + 1; ++k) {
        w << g.t(k) << r.sol.L[k] << r.sol.PiInt[k];
        w.end_row();
    }
    w.close();
}

void write_pi_band_csv(const std::string& path, const PipelineResult& r) {
    const TimeGrid& g = r.vs.grid;
    const int m = r.st.m;
    std::vector<std::string> h{"t"};
    for (int i = 0; i <= g.d; ++i) h = cat(h, vec_names("Pi_lag" + std::to_string(i), m, m));
    CsvWriter w(path, h);
    const Mat Z = Mat::Zero(m, m);
    for (int k = 0; k <= g.N + 1; ++k) {
        w << g.t(k);
        for (int i = 0; i <= g.d; ++i) w << (r.sol.in_band(k, k + i) ? r.sol.pi(k, k + i) : Z);
        w.end_row();
    }
    w.close();
}

void write_gains_csv(const std::string& path, const PipelineResult& r) {
    const TimeGrid& g = r.vs.grid;
    const int m = r.st.m, k1 = r.vs.k1(), k2 = r.vs.k2();
    std::vector<std::string> h{"t"};
    h = cat(h, vec_names("Ku2", k2, m));
    h = cat(h, vec_names("Ku1_now", k1, m));
    h = cat(h, vec_names("Ku1_pred", k1, m));
    CsvWriter w(path, h);
    for (int k = 0; k <= g.N + 1; ++k) {
        w << g.t(k) << r.gains.Ku2[k] << r.gains.Ku1_now[k] << r.gains.Ku1_pred[k];
        w.end_row();
    }
    w.close();
}

void write_stacked_csv(const std::string& path, const PipelineResult& r) {
    const TimeGrid& g = r.vs.grid;
    const StackedCoefficients& s = r.st;
    const std::vector<std::pair<const char*, const Schedule*>> cols = {
        {"A1", &s.A1}, {"A2", &s.A2}, {"A3", &s.A3}, {"B", &s.B},   {"C", &s.C},   {"Abar1", &s.Ab1},
        {"Abar2", &s.Ab2}, {"Abar3", &s.Ab3}, {"Cbar", &s.Cb}, {"E", &s.E}, {"D", &s.D},   {"Dbar", &s.Db},
        {"G1", &s.G1}, {"G2", &s.G2}, {"M", &s.Mv}, {"Mbar", &s.Mbv}};
    std::vector<std::string> h{"t", "node"};
    for (const auto& c : cols) h = cat(h, vec_names(c.first, c.second->rows(), c.second->cols()));
    CsvWriter w(path, h);
    for (int k = 0; k <= g.last(); ++k) {
        w << g.t(k) << static_cast<double>(k);
        for (const auto& c : cols) w << (*c.second)[k];
        w.end_row();
    }
    w.close();
}

void write_path_csv(const std::string& path, const SimTables& tb, const SimulatedPath& p) {
    const TimeGrid& g = tb.g;
    const int n = tb.n;
    std::vector<std::string> h{"t"};
    for (int i = 0; i < n; ++i) h.push_back("xi_" + std::to_string(i));
    for (int i = 0; i < n; ++i) h.push_back("X_" + std::to_string(i));
    for (int i = 0; i < tb.k1; ++i) h.push_back("u1_" + std::to_string(i));
    for (int i = 0; i < tb.k2; ++i) h.push_back("u2_" + std::to_string(i));
    CsvWriter w(path, h);
    for (int k = 0; k <= g.N + 1; ++k) {
        w << g.t(k) << Mat(p.phi_at(k)) << Mat(p.u1_at(k)) << Mat(p.u2_at(k));
        w.end_row();
    }
    w.close();
}

void write_checkpoints_csv(const std::string& path, const McReport& rep) {
    if (rep.checkpoints.empty()) return;
    const int m = static_cast<int>(rep.checkpoints[0].mean_phi.size());
    std::vector<std::string> h{"t", "node"};
    for (const char* nm : {"mean_phi", "se_phi", "mean_pred", "se_pred"})
        for (int i = 0; i < m; ++i) h.push_back(std::string(nm) + "_" + std::to_string(i));
    CsvWriter w(path, h);
    for (const auto& c : rep.checkpoints) {
        w << c.t << static_cast<double>(c.node) << Mat(c.mean_phi) << Mat(c.se_phi) << Mat(c.mean_pred)
          << Mat(c.se_pred);
        w.end_row();
    }
    w.close();
}

void write_controls_csv(const std::string& path, const TimeGrid& g, const McReport& rep) {
    CsvWriter w(path, {"t", "mean_abs_u1", "mean_abs_u2"});
    for (size_t k = 0; k < rep.mean_abs_u1.size(); ++k) {
        w << g.t(static_cast<int>(k)) << rep.mean_abs_u1[k] << rep.mean_abs_u2[k];
        w.end_row();
    }
    w.close();
}

nlohmann::json to_json(const McReport& rep) {
    nlohmann::json j;
    j["paths"] = rep.paths;
    j["seed"] = rep.seed;
    j["J1"] = {{"mean", rep.J1}, {"se", rep.J1_se}};
    j["J2"] = {{"mean", rep.J2}, {"se", rep.J2_se}};
    j["max_abs_control"] = rep.max_abs_u;
    nlohmann::json cps = nlohmann::json::array();
    for (const auto& c : rep.checkpoints) {
        auto v = [](const Vec& x) { return std::vector<double>(x.data(), x.data() + x.size()); };
        cps.push_back({{"node", c.node},
                       {"t", c.t},
                       {"mean_phi", v(c.mean_phi)},
                       {"se_phi", v(c.se_phi)},
                       {"mean_pred", v(c.mean_pred)},
                       {"se_pred", v(c.se_pred)}});
    }
    j["checkpoints"] = cps;
    return j;
}

nlohmann::json to_json(const OptimalityReport& rep) {
    nlohmann::json j;
    j["leader_variant"] = rep.leader_variant;
    j["paths"] = rep.paths;
    j["seed"] = rep.seed;
    j["follower_pass"] = rep.follower_pass;
    j["leader_pass"] = rep.leader_pass;
    j["pass"] = rep.pass();
    nlohmann::json f = nlohmann::json::array(), c = nlohmann::json::array(), l = nlohmann::json::array();
    for (const auto& e : rep.follower)
        f.push_back({{"direction", e.direction}, {"eps", e.eps}, {"delta_J1", e.mean}, {"se", e.se}, {"pass", e.pass}});
    for (const auto& e : rep.curvature)
        c.push_back({{"direction", e.direction}, {"linear", e.a}, {"quadratic", e.b}, {"pass", e.pass}});
    for (const auto& e : rep.leader)
        l.push_back({{"direction", e.direction}, {"eps", e.eps}, {"dJ2", e.mean}, {"se", e.se}, {"roundoff", e.roundoff}, {"pass", e.pass}});
    j["follower"] = f;
    j["follower_curvature"] = c;
    j["leader"] = l;
    return j;
}

void write_json(const std::string& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("IOError", "cannot write " + path);
    out << j.dump(2) << '\n';
}

}  // namespace stackdelay
