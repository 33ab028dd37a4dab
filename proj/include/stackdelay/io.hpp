// Copyright 2026 The stackdelay Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "stackdelay/pipeline.hpp"
#include "stackdelay/simulator.hpp"

namespace stackdelay {

std::string fmt_double(double x);  // %.17g

// column names of a row-major vectorized matrix: name_i_j
std::vector<std::string> vec_names(const std::string& name, int rows, int cols);

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);
    CsvWriter& operator<<(double x);
    CsvWriter& operator<<(const Mat& m);  // row-major
    void end_row();
    void close();  // writes the file, throws on failure
    ~CsvWriter();

private:
    std::string path_;
    std::string buf_;
    bool first_ = true;
    bool closed_ = false;
};

void ensure_dir(const std::string& dir);

void write_riccati_csv(const std::string& path, const PipelineResult& r);
void write_coupled_csv(const std::string& path, const PipelineResult& r);
void write_pi_band_csv(const std::string& path, const PipelineResult& r);
void write_gains_csv(const std::string& path, const PipelineResult& r);
void write_stacked_csv(const std::string& path, const PipelineResult& r);
void write_path_csv(const std::string& path, const SimTables& tb, const SimulatedPath& p);
void write_checkpoints_csv(const std::string& path, const McReport& rep);
void write_controls_csv(const std::string& path, const TimeGrid& g, const McReport& rep);

nlohmann::json to_json(const McReport& rep);
nlohmann::json to_json(const OptimalityReport& rep);
void write_json(const std::string& path, const nlohmann::json& j);

}  // namespace stackdelay
