#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include "hpss/madtwinnet.hpp"

namespace hpss {

/// Parameter checkpoint container, version 1.
///
/// Binary layout (little-endian):
///   8-byte magic "HPSSCKPT", u32 version, u32 tensor count, then per tensor:
///   u32 name length, name bytes, u32 rank, u64 dims[rank] (rows[, cols]),
///   row-major float64 payload.
/// A plain-text sidecar at <path>.cfg stores the MadConfig as key=value lines.
/// The loader derives expected shapes from the sidecar and rejects mismatches.
inline constexpr char kCheckpointMagic[8] = {'H', 'P', 'S', 'S', 'C', 'K', 'P', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

template <typename T>
void write_le(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw DataError("checkpoint: truncated file");
  return value;
}

}  // namespace detail

inline void save_checkpoint(const std::filesystem::path& path, const MadParameters<double>& params,
                            const MadConfig<double>& cfg) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("checkpoint: cannot open for writing: " + path.string());
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  detail::write_le(os, kCheckpointVersion);

  std::uint32_t count = 0;
  params.visit([&count](const std::string&, const auto&) { ++count; });
  detail::write_le(os, count);

  params.visit([&os](const std::string& name, const auto& tensor) {
    detail::write_le(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    const bool is_vector = tensor.cols() == 1 && tensor.ColsAtCompileTime == 1;
    const std::uint32_t rank = is_vector ? 1 : 2;
    detail::write_le(os, rank);
    detail::write_le(os, static_cast<std::uint64_t>(tensor.rows()));
    if (rank == 2) detail::write_le(os, static_cast<std::uint64_t>(tensor.cols()));
    for (Index i = 0; i < tensor.rows(); ++i) {
      for (Index j = 0; j < tensor.cols(); ++j) detail::write_le(os, static_cast<double>(tensor(i, j)));
    }
  });
  if (!os) throw DataError("checkpoint: write failed: " + path.string());

  std::ofstream cs(path.string() + ".cfg");
  if (!cs) throw DataError("checkpoint: cannot write config sidecar: " + path.string() + ".cfg");
  cs << "n_bins=" << cfg.n_bins << "\n"
     << "seq_length=" << cfg.seq_length << "\n"
     << "context=" << cfg.context << "\n"
     << "rnn_hidden=" << cfg.rnn_hidden << "\n"
     << "fnn_hidden=" << cfg.fnn_hidden << "\n"
     << "twin_weight=" << cfg.twin_weight << "\n"
     << "lambda_masker=" << cfg.lambda_masker << "\n"
     << "lambda_denoiser=" << cfg.lambda_denoiser << "\n"
     << "epsilon_floor=" << cfg.epsilon_floor << "\n"
     << "twin_stop_gradient=" << (cfg.twin_stop_gradient ? 1 : 0) << "\n";
}

inline MadConfig<double> load_checkpoint_config(const std::filesystem::path& path) {
  std::ifstream cs(path.string() + ".cfg");
  if (!cs) throw DataError("checkpoint: missing config sidecar: " + path.string() + ".cfg");
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(cs, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos || line.empty() || line[0] == '#') continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto need = [&kv, &path](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) {
      throw DataError("checkpoint sidecar " + path.string() + ".cfg: missing key '" + key + "'");
    }
    return it->second;
  };
  MadConfig<double> cfg;
  cfg.n_bins = std::stoi(need("n_bins"));
  cfg.seq_length = std::stoi(need("seq_length"));
  cfg.context = std::stoi(need("context"));
  cfg.rnn_hidden = std::stoi(need("rnn_hidden"));
  cfg.fnn_hidden = std::stoi(need("fnn_hidden"));
  cfg.twin_weight = std::stod(need("twin_weight"));
  cfg.lambda_masker = std::stod(need("lambda_masker"));
  cfg.lambda_denoiser = std::stod(need("lambda_denoiser"));
  cfg.epsilon_floor = std::stod(need("epsilon_floor"));
  if (auto it = kv.find("twin_stop_gradient"); it != kv.end()) {
    cfg.twin_stop_gradient = it->second != "0";
  }
  validate(cfg);
  return cfg;
}

struct Checkpoint {
  MadParameters<double> params;
  MadConfig<double> config;
};

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  Checkpoint ck;
  ck.config = load_checkpoint_config(path);
  ck.params = MadParameters<double>::shaped(ck.config);

  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("checkpoint: cannot open: " + path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw DataError("checkpoint: bad magic in " + path.string());
  }
  const auto version = detail::read_le<std::uint32_t>(is);
  if (version != kCheckpointVersion) {
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto count = detail::read_le<std::uint32_t>(is);

  std::map<std::string, std::pair<std::uint64_t, std::uint64_t>> seen;
  std::map<std::string, std::vector<double>> payloads;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = detail::read_le<std::uint32_t>(is);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw DataError("checkpoint: truncated tensor name");
    const auto rank = detail::read_le<std::uint32_t>(is);
    if (rank != 1 && rank != 2) throw DataError("checkpoint: tensor '" + name + "' has bad rank");
    const auto rows = detail::read_le<std::uint64_t>(is);
    const auto cols = rank == 2 ? detail::read_le<std::uint64_t>(is) : 1;
    std::vector<double> data(rows * cols);
    for (auto& v : data) v = detail::read_le<double>(is);
    seen[name] = {rows, cols};
    payloads[name] = std::move(data);
  }

  ck.params.visit([&](const std::string& name, auto& tensor) {
    auto it = seen.find(name);
    if (it == seen.end()) throw DataError("checkpoint: missing tensor '" + name + "'");
    const auto [rows, cols] = it->second;
    if (static_cast<Index>(rows) != tensor.rows() || static_cast<Index>(cols) != tensor.cols()) {
      std::ostringstream msg;
      msg << "checkpoint: tensor '" << name << "' has shape " << rows << "x" << cols
          << ", expected " << tensor.rows() << "x" << tensor.cols();
      throw DataError(msg.str());
    }
    const auto& data = payloads[name];
    Index k = 0;
    for (Index i = 0; i < tensor.rows(); ++i) {
      for (Index j = 0; j < tensor.cols(); ++j) tensor(i, j) = data[static_cast<size_t>(k++)];
    }
  });
  return ck;
}

}  // namespace hpss
