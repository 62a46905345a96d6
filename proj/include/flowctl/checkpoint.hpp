#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "flowctl/field.hpp"

namespace flowctl {

// Versioned binary checkpoint: magic "FCTL", format version, a type tag
// (1 = velocity field, 2 = control net), layer dims, then the flat parameter
// vector as little-endian 64-bit floats.

enum class CheckpointKind : std::uint32_t { Field = 1, Control = 2 };

namespace detail {

template <class T>
void put(std::ofstream& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <class T>
T get(std::ifstream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (!in) throw ArtifactError("truncated checkpoint: " + path);
  return v;
}

}  // namespace detail

inline void save_checkpoint(const std::filesystem::path& path, const Mlp& net, CheckpointKind kind) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArtifactError("cannot write checkpoint: " + path.string());
  out.write("FCTL", 4);
  detail::put<std::uint32_t>(out, 1);  // format version
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(kind));
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(net.state_dim()));
  const auto hidden = net.hidden_widths();
  detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(hidden.size()));
  for (int h : hidden) detail::put<std::uint32_t>(out, static_cast<std::uint32_t>(h));
  detail::put<std::uint64_t>(out, static_cast<std::uint64_t>(net.param_count()));
  out.write(reinterpret_cast<const char*>(net.params().data()),
            static_cast<std::streamsize>(net.params().size() * sizeof(double)));
  if (!out) throw ArtifactError("short write on checkpoint: " + path.string());
}

inline Mlp load_checkpoint(const std::filesystem::path& path, CheckpointKind expected_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArtifactError("missing checkpoint: " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string_view(magic, 4) != "FCTL")
    throw ArtifactError("bad checkpoint magic: " + path.string());
  const auto version = detail::get<std::uint32_t>(in, path.string());
  if (version != 1) throw ArtifactError("unsupported checkpoint version " + std::to_string(version));
  const auto kind = detail::get<std::uint32_t>(in, path.string());
  if (kind != static_cast<std::uint32_t>(expected_kind))
    throw ArtifactError("checkpoint type tag " + std::to_string(kind) + " does not match request");
  const auto dim = detail::get<std::uint32_t>(in, path.string());
  const auto n_hidden = detail::get<std::uint32_t>(in, path.string());
  std::vector<int> hidden;
  for (std::uint32_t i = 0; i < n_hidden; ++i)
    hidden.push_back(static_cast<int>(detail::get<std::uint32_t>(in, path.string())));
  const auto n_params = detail::get<std::uint64_t>(in, path.string());
  Mlp net(static_cast<int>(dim), hidden, 0);
  if (n_params != static_cast<std::uint64_t>(net.param_count()))
    throw ArtifactError("checkpoint parameter count mismatch: " + path.string());
  in.read(reinterpret_cast<char*>(net.params().data()),
          static_cast<std::streamsize>(n_params * sizeof(double)));
  if (!in) throw ArtifactError("truncated checkpoint: " + path.string());
  return net;
}

}  // namespace flowctl
