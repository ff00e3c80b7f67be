#include "hyperqubit/trace_io.hpp"

#include "hyperqubit/tomography.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace hyperqubit {

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  const auto dir = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  std::filesystem::create_directories(dir);
  const auto tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

namespace {

std::string format_value(double v, TraceMode mode) {
  char buf[64];
  if (mode == TraceMode::SampledCounts) {
    std::snprintf(buf, sizeof buf, "%.0f", v);
  } else {
    std::snprintf(buf, sizeof buf, "%.17g", v);
  }
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, ',')) out.push_back(cur);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string trim(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  size_t i = 0;
  while (i < s.size() && s[i] == ' ') ++i;
  return s.substr(i);
}

double parse_number(const std::string& s, size_t row, const std::string& column) {
  const std::string t = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || ptr != t.data() + t.size() || t.empty())
    throw std::invalid_argument("row " + std::to_string(row) + ", column " + column + ": not a number: '" + t + "'");
  return v;
}

}  // namespace

std::string traces_to_csv(const TraceSet& traces) {
  traces.validate();
  std::string out = "time_ps";
  for (PolBasis b : kAllBases)
    if (traces.has(b)) out += "," + std::string(basis_name(b));
  out += "\n";
  for (int i = 0; i < traces.grid.n_bins; ++i) {
    out += format_value(traces.grid.bin_start(i), TraceMode::ExpectedIntensity);
    for (PolBasis b : kAllBases)
      if (traces.has(b)) out += "," + format_value(traces.at(b)[static_cast<size_t>(i)], traces.mode);
    out += "\n";
  }
  return out;
}

nlohmann::json trace_metadata_to_json(const TraceSet& traces) {
  const auto& m = traces.meta;
  nlohmann::json j;
  j["grid"] = {{"t_start_ps", traces.grid.t_start}, {"bin_width_ps", traces.grid.bin_width}, {"n_bins", traces.grid.n_bins}};
  j["jitter_fwhm_ps"] = m.jitter_fwhm_ps;
  j["counts_per_basis"] = m.counts_per_basis;
  j["seed"] = m.seed;
  j["mode"] = std::string(mode_name(traces.mode));
  j["background_per_bin"] = m.background_per_bin;
  j["source"] = m.source;
  j["warnings"] = m.warnings;
  j["edge_loss_fraction"] = m.edge_loss_fraction;
  j["config_hash"] = m.config_hash;
  return j;
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  auto p = csv_path;
  p.replace_extension(".json");
  return p;
}

void save_traces(const TraceSet& traces, const std::filesystem::path& csv_path) {
  write_file_atomic(csv_path, traces_to_csv(traces));
  write_file_atomic(sidecar_path(csv_path), trace_metadata_to_json(traces).dump(2) + "\n");
}

TraceSet traces_from_text(const std::string& csv, const nlohmann::json& meta) {
  TraceSet ts;
  try {
    const auto& g = meta.at("grid");
    ts.grid.t_start = g.at("t_start_ps").get<double>();
    ts.grid.bin_width = g.at("bin_width_ps").get<double>();
    ts.grid.n_bins = g.at("n_bins").get<int>();
    ts.meta.jitter_fwhm_ps = meta.at("jitter_fwhm_ps").get<double>();
    ts.meta.counts_per_basis = meta.at("counts_per_basis").get<double>();
    ts.meta.seed = meta.value("seed", std::uint64_t{0});
    const auto mode = parse_mode(meta.at("mode").get<std::string>());
    if (!mode) throw std::invalid_argument("metadata.mode: unknown value");
    ts.mode = *mode;
    ts.meta.background_per_bin = meta.value("background_per_bin", 0.0);
    ts.meta.source = meta.value("source", std::string{});
    ts.meta.warnings = meta.value("warnings", std::vector<std::string>{});
    ts.meta.edge_loss_fraction = meta.value("edge_loss_fraction", 0.0);
    ts.meta.config_hash = meta.value("config_hash", std::string{});
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("trace metadata: ") + e.what());
  }
  ts.grid.validate();

  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("row 1: missing header");
  const auto header = split(trim(line));
  if (header.empty() || trim(header[0]) != "time_ps") throw std::invalid_argument("row 1, column time_ps: header must start with time_ps");
  std::vector<std::optional<PolBasis>> cols;
  for (size_t c = 1; c < header.size(); ++c) {
    const auto b = parse_basis(trim(header[c]));
    if (!b) throw std::invalid_argument("row 1: unknown column '" + trim(header[c]) + "'");
    if (ts.has(*b)) throw std::invalid_argument("row 1: duplicate column " + trim(header[c]));
    ts.set(*b, {});
    cols.push_back(b);
  }
  size_t row = 1;
  int bin = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split(trim(line));
    if (fields.size() != header.size())
      throw std::invalid_argument("row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                                  " fields, found " + std::to_string(fields.size()));
    if (bin >= ts.grid.n_bins) throw std::invalid_argument("row " + std::to_string(row) + ": more rows than grid.n_bins");
    const double t = parse_number(fields[0], row, "time_ps");
    if (std::abs(t - ts.grid.bin_start(bin)) > 1e-9 * std::max(1.0, std::abs(t)))
      throw std::invalid_argument("row " + std::to_string(row) + ", column time_ps: does not match the grid");
    for (size_t c = 0; c < cols.size(); ++c) {
      auto& vec = ts.data[static_cast<size_t>(basis_index(*cols[c]))];
      vec->push_back(parse_number(fields[c + 1], row, std::string(basis_name(*cols[c]))));
    }
    ++bin;
  }
  if (bin != ts.grid.n_bins)
    throw std::invalid_argument("row " + std::to_string(row) + ": found " + std::to_string(bin) + " data rows, grid has " +
                                std::to_string(ts.grid.n_bins));
  ts.validate();
  return ts;
}

TraceSet load_traces(const std::filesystem::path& csv_path) {
  const auto side = sidecar_path(csv_path);
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(side));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(side.string() + ": " + e.what());
  }
  return traces_from_text(read_file(csv_path), meta);
}

DensityMatrix4 density_from_json(const nlohmann::json& j, double trace_tol) {
  Matrix4c m = matrix_from_json(j);
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-6) throw std::invalid_argument("rho: matrix is not Hermitian");
  m = (0.5 * (m + m.adjoint())).eval();
  const double tr = m.trace().real();
  if (!(std::abs(tr - 1.0) <= trace_tol)) throw std::invalid_argument("rho: trace " + std::to_string(tr) + " is not 1");
  return DensityMatrix4(m / tr);
}

DensityMatrix4 load_density_matrix(const std::filesystem::path& path, const std::string& key, double trace_tol) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains(key)) throw std::invalid_argument(path.string() + ": missing key '" + key + "'");
  return density_from_json(j.at(key), trace_tol);
}

}  // namespace hyperqubit
