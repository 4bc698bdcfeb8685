#include "hpss/stems.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "hpss/wav.hpp"

namespace hpss {

namespace {

const char* kRoles[] = {"drums", "bass", "vocals", "other"};

std::map<std::string, std::string> stem_files(const std::filesystem::path& dir) {
  std::map<std::string, std::string> files;
  for (const char* role : kRoles) files[role] = std::string(role) + ".wav";

  const auto manifest = dir / "manifest.txt";
  if (std::filesystem::exists(manifest)) {
    std::ifstream ms(manifest);
    std::string line;
    while (std::getline(ms, line)) {
      if (line.empty() || line[0] == '#') continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) {
        throw DataError("stems: malformed manifest line '" + line + "' in " + manifest.string());
      }
      const std::string role = line.substr(0, eq);
      if (files.find(role) == files.end()) {
        throw DataError("stems: unknown role '" + role + "' in " + manifest.string());
      }
      files[role] = line.substr(eq + 1);
    }
  }
  return files;
}

}  // namespace

TrackBundle load_stems(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw DataError("stems: not a directory: " + dir.string());
  }
  const auto files = stem_files(dir);

  std::map<std::string, Waveformd> stems;
  for (const char* role : kRoles) {
    const auto path = dir / files.at(role);
    if (!std::filesystem::exists(path)) {
      throw DataError("stems: missing stem '" + std::string(role) + "' (looked for " + path.string() + ")");
    }
    stems[role] = to_mono(read_wav(path));
  }

  const int rate = stems["drums"].sample_rate;
  const Index length = stems["drums"].samples.size();
  for (const char* role : kRoles) {
    if (stems[role].sample_rate != rate) {
      throw DataError("stems: sample-rate mismatch in " + dir.string() + ": '" + role + "' has " +
                      std::to_string(stems[role].sample_rate) + " Hz, 'drums' has " +
                      std::to_string(rate) + " Hz");
    }
    if (stems[role].samples.size() != length) {
      throw DataError("stems: length mismatch in " + dir.string() + ": '" + std::string(role) + "'");
    }
  }

  TrackBundle bundle;
  bundle.track_id = dir.filename().string();
  bundle.percussive_ref = stems["drums"];
  bundle.harmonic_ref.sample_rate = rate;
  bundle.harmonic_ref.samples =
      stems["bass"].samples + stems["vocals"].samples + stems["other"].samples;
  bundle.mixture.sample_rate = rate;
  bundle.mixture.samples = bundle.percussive_ref.samples + bundle.harmonic_ref.samples;
  validate(bundle);
  return bundle;
}

void write_stems(const std::filesystem::path& dir, const TrackBundle& bundle) {
  std::filesystem::create_directories(dir);
  const Index n = bundle.mixture.samples.size();
  const Waveformd silence{Vec<double>::Zero(n), bundle.mixture.sample_rate};
  write_wav(dir / "drums.wav", bundle.percussive_ref);
  write_wav(dir / "other.wav", bundle.harmonic_ref);
  write_wav(dir / "bass.wav", silence);
  write_wav(dir / "vocals.wav", silence);
  write_wav(dir / "mixture.wav", bundle.mixture);
}

std::vector<TrackBundle> load_dataset(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw DataError("dataset: not a directory: " + dir.string());
  }
  std::vector<std::filesystem::path> subdirs;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_directory()) subdirs.push_back(entry.path());
  }
  std::sort(subdirs.begin(), subdirs.end());
  std::vector<TrackBundle> tracks;
  for (const auto& sub : subdirs) tracks.push_back(load_stems(sub));
  if (tracks.empty()) throw DataError("dataset: no track directories in " + dir.string());
  return tracks;
}

}  // namespace hpss
