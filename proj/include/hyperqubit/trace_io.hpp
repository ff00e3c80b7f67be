#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "hyperqubit/density.hpp"
#include "hyperqubit/measurement.hpp"

namespace hyperqubit {

/// Writes via a temporary file in the same directory followed by a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

/// CSV with header time_ps,H,V,D,A,R,L (absent bases are omitted). Time is the bin start.
std::string traces_to_csv(const TraceSet& traces);
nlohmann::json trace_metadata_to_json(const TraceSet& traces);

/// Sidecar path: same stem with a .json extension.
std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

void save_traces(const TraceSet& traces, const std::filesystem::path& csv_path);

/// Throws std::invalid_argument naming the row or column on malformed input.
TraceSet load_traces(const std::filesystem::path& csv_path);
TraceSet traces_from_text(const std::string& csv, const nlohmann::json& metadata);

/// Reads the `key` entry of a JSON file. A trace within `trace_tol` of 1 is renormalized.
DensityMatrix4 load_density_matrix(const std::filesystem::path& path, const std::string& key = "rho",
                                   double trace_tol = 1e-3);
DensityMatrix4 density_from_json(const nlohmann::json& j, double trace_tol = 1e-3);

}  // namespace hyperqubit
