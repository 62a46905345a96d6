#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "flowctl/costs.hpp"
#include "flowctl/metrics.hpp"
#include "flowctl/sampler.hpp"

namespace flowctl {

namespace fs = std::filesystem;

inline void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArtifactError("cannot write " + path.string());
  out << text;
}

inline std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Trajectory files: a decimal CSV for inspection and a binary replay file
// carrying the noise tape.
// ---------------------------------------------------------------------------

inline void write_trajectory_csv(const fs::path& path, const Trajectory& traj) {
  std::ostringstream out;
  out << "t";
  for (int j = 0; j < traj.dim(); ++j) out << ",x_" << j;
  out << "\n";
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    out << fmt_double(traj.times[i]);
    for (double v : traj.states[i]) out << "," << fmt_double(v);
    out << "\n";
  }
  write_text_file(path, out.str());
}

inline void write_replay(const fs::path& path, const Trajectory& traj) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArtifactError("cannot write " + path.string());
  const auto put32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  const auto put64 = [&](std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); };
  const auto put_vec = [&](const Vec& v) {
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * 8));
  };
  out.write("FTRJ", 4);
  put32(1);
  put32(static_cast<std::uint32_t>(traj.dim()));
  put32(static_cast<std::uint32_t>(traj.step_count()));
  put32(traj.noises.empty() ? 0u : 1u);
  put64(traj.seed);
  put_vec(traj.times);
  for (const auto& s : traj.states) put_vec(s);
  for (const auto& n : traj.noises) put_vec(n);
  if (!out) throw ArtifactError("short write on " + path.string());
}

inline Trajectory read_replay(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("missing replay file: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string_view(magic, 4) != "FTRJ") throw ArtifactError("bad replay magic: " + path.string());
  const auto get32 = [&] {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  const auto version = get32();
  if (version != 1) throw ArtifactError("unsupported replay version");
  const auto dim = get32();
  const auto steps = get32();
  const bool has_noise = get32() != 0;
  Trajectory traj;
  in.read(reinterpret_cast<char*>(&traj.seed), 8);
  traj.times.resize(steps + 1);
  in.read(reinterpret_cast<char*>(traj.times.data()), static_cast<std::streamsize>(8 * (steps + 1)));
  traj.states.assign(steps + 1, Vec(dim));
  for (auto& s : traj.states)
    in.read(reinterpret_cast<char*>(s.data()), static_cast<std::streamsize>(8 * dim));
  if (has_noise) {
    traj.noises.assign(steps, Vec(dim));
    for (auto& n : traj.noises)
      in.read(reinterpret_cast<char*>(n.data()), static_cast<std::streamsize>(8 * dim));
  }
  if (!in) throw ArtifactError("truncated replay file: " + path.string());
  return traj;
}

// ---------------------------------------------------------------------------
// 16-bit binary PGM dumps of probability maps (netpbm: most significant byte
// first), scaled so the peak cell is white.
// ---------------------------------------------------------------------------

inline void write_pgm16(const fs::path& path, const ProbMap& map) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArtifactError("cannot write " + path.string());
  double peak = 0.0;
  for (double v : map.weights) peak = std::max(peak, v);
  if (peak <= 0.0) peak = 1.0;
  out << "P5\n" << map.cols << " " << map.rows << "\n65535\n";
  for (double v : map.weights) {
    const auto px = static_cast<std::uint16_t>(std::lround(65535.0 * v / peak));
    const char bytes[2] = {static_cast<char>(px >> 8), static_cast<char>(px & 0xff)};
    out.write(bytes, 2);
  }
}

// ---------------------------------------------------------------------------
// Metric reports and Elo logs.
// ---------------------------------------------------------------------------

inline nlohmann::json report_to_json(const MetricReport& report) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& [key, value] : report.values())
    records.push_back({{"scene", key.scene}, {"seed", key.seed}, {"metric", key.metric}, {"value", value}});
  return {{"config_hash", report.config_hash}, {"records", records}};
}

inline MetricReport report_from_json(const nlohmann::json& j) {
  MetricReport report;
  report.config_hash = j.value("config_hash", "");
  for (const auto& rec : j.at("records"))
    report.add(rec.at("scene").get<std::string>(), rec.at("seed").get<std::uint64_t>(),
               rec.at("metric").get<std::string>(), rec.at("value").get<double>());
  return report;
}

inline void write_report(const fs::path& path, const MetricReport& report) {
  write_text_file(path, report_to_json(report).dump(2) + "\n");
}

inline MetricReport read_report(const fs::path& path) {
  return report_from_json(nlohmann::json::parse(read_text_file(path)));
}

inline void write_csv_curve(const fs::path& path, const std::vector<double>& curve,
                            const std::string& column) {
  std::ostringstream out;
  out << "step," << column << "\n";
  for (std::size_t i = 0; i < curve.size(); ++i) out << i << "," << fmt_double(curve[i]) << "\n";
  write_text_file(path, out.str());
}

inline void write_match_log(const fs::path& path, const std::vector<MatchRecord>& log) {
  std::ostringstream out;
  for (const auto& m : log) {
    nlohmann::json j{{"a", m.a},
                     {"b", m.b},
                     {"outcome", m.outcome == MatchOutcome::AWins   ? "a_wins"
                                 : m.outcome == MatchOutcome::BWins ? "b_wins"
                                                                    : "draw"}};
    out << j.dump() << "\n";
  }
  write_text_file(path, out.str());
}

inline std::vector<MatchRecord> read_match_log(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<MatchRecord> log;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    const std::string outcome = j.at("outcome").get<std::string>();
    log.push_back({j.at("a").get<std::string>(), j.at("b").get<std::string>(),
                   outcome == "a_wins"   ? MatchOutcome::AWins
                   : outcome == "b_wins" ? MatchOutcome::BWins
                                         : MatchOutcome::Draw});
  }
  return log;
}

// ---------------------------------------------------------------------------
// Schedule table files for the VP conversion.
// ---------------------------------------------------------------------------

inline void write_schedule_table(const fs::path& path, const VpRateTable& table) {
  nlohmann::json j{{"kind", "vp_induced"}, {"K", table.steps()}, {"beta", table.beta_steps()}};
  write_text_file(path, j.dump(2) + "\n");
}

inline InterpolantSchedule read_schedule_table(const fs::path& path) {
  const auto j = nlohmann::json::parse(read_text_file(path));
  if (j.at("kind").get<std::string>() != "vp_induced")
    throw ScheduleError("unsupported schedule table kind");
  return vp_to_fm_schedule(VpRateTable(j.at("beta").get<std::vector<double>>()));
}

}  // namespace flowctl
