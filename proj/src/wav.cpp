#include "hpss/wav.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <vector>

namespace hpss {

namespace {

constexpr std::uint16_t kFormatPcm = 0x0001;
constexpr std::uint16_t kFormatFloat = 0x0003;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

struct Reader {
  std::ifstream stream;
  std::string path;

  explicit Reader(const std::filesystem::path& p) : stream(p, std::ios::binary), path(p.string()) {
    if (!stream) throw DataError("wav: cannot open " + path);
  }

  void bytes(void* dst, std::size_t count) {
    stream.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(count));
    if (!stream) throw DataError("wav: truncated file " + path);
  }

  template <typename T>
  T le() {
    T value{};
    bytes(&value, sizeof(T));
    return value;
  }

  void skip(std::streamoff n) {
    stream.seekg(n, std::ios::cur);
    if (!stream) throw DataError("wav: truncated file " + path);
  }
};

double decode_sample(const unsigned char* p, std::uint16_t bits, std::uint16_t format) {
  if (format == kFormatFloat) {
    float f;
    std::memcpy(&f, p, 4);
    return static_cast<double>(f);
  }
  if (bits == 16) {
    const std::int16_t v = static_cast<std::int16_t>(p[0] | (p[1] << 8));
    return static_cast<double>(v) / 32768.0;
  }
  // 24-bit: sign-extend the little-endian triple.
  std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
  if (v & 0x800000) v |= ~0xFFFFFF;
  return static_cast<double>(v) / 8388608.0;
}

}  // namespace

WavData read_wav(const std::filesystem::path& path) {
  Reader in(path);

  char tag[4];
  in.bytes(tag, 4);
  if (std::memcmp(tag, "RIFF", 4) != 0) throw DataError("wav: not a RIFF file: " + in.path);
  in.le<std::uint32_t>();  // RIFF size
  in.bytes(tag, 4);
  if (std::memcmp(tag, "WAVE", 4) != 0) throw DataError("wav: not a WAVE file: " + in.path);

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t sample_rate = 0;
  bool have_fmt = false;
  std::vector<unsigned char> payload;

  while (in.stream.peek() != std::char_traits<char>::eof()) {
    in.bytes(tag, 4);
    const auto chunk_size = in.le<std::uint32_t>();
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      format = in.le<std::uint16_t>();
      channels = in.le<std::uint16_t>();
      sample_rate = in.le<std::uint32_t>();
      in.le<std::uint32_t>();  // byte rate
      in.le<std::uint16_t>();  // block align
      bits = in.le<std::uint16_t>();
      std::uint32_t consumed = 16;
      if (format == kFormatExtensible) {
        const auto ext_size = in.le<std::uint16_t>();
        consumed += 2;
        if (ext_size >= 22) {
          in.le<std::uint16_t>();  // valid bits
          in.le<std::uint32_t>();  // channel mask
          format = in.le<std::uint16_t>();  // first two GUID bytes carry the codec
          unsigned char guid_rest[14];
          in.bytes(guid_rest, 14);
          consumed += 22;
        }
      }
      if (chunk_size > consumed) in.skip(chunk_size - consumed);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      payload.resize(chunk_size);
      if (chunk_size > 0) in.bytes(payload.data(), chunk_size);
      if (chunk_size % 2 == 1) in.skip(1);
      break;
    } else {
      in.skip(chunk_size + (chunk_size % 2));
    }
  }

  if (!have_fmt) throw DataError("wav: missing fmt chunk: " + in.path);
  if (payload.empty()) throw DataError("wav: missing or empty data chunk: " + in.path);
  if (channels == 0 || sample_rate == 0) throw DataError("wav: malformed fmt chunk: " + in.path);

  const bool ok = (format == kFormatPcm && (bits == 16 || bits == 24)) ||
                  (format == kFormatFloat && bits == 32);
  if (!ok) {
    throw DataError("wav: unsupported encoding (format " + std::to_string(format) + ", " +
                    std::to_string(bits) + " bits) in " + in.path);
  }

  const std::size_t bytes_per_sample = bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * channels;
  const std::size_t frames = payload.size() / frame_bytes;

  WavData out;
  out.sample_rate = static_cast<int>(sample_rate);
  out.samples.resize(static_cast<Index>(frames), channels);
  const unsigned char* p = payload.data();
  for (std::size_t i = 0; i < frames; ++i) {
    for (std::uint16_t c = 0; c < channels; ++c) {
      out.samples(static_cast<Index>(i), c) = decode_sample(p, bits, format);
      p += bytes_per_sample;
    }
  }
  return out;
}

Waveformd to_mono(const WavData& data) {
  Waveformd out;
  out.sample_rate = data.sample_rate;
  out.samples = data.samples.rowwise().mean();
  return out;
}

namespace {

template <typename T>
void put_le(std::ofstream& os, T value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

}  // namespace

void write_wav(const std::filesystem::path& path, const Mat<double>& frames_by_channels,
               int sample_rate, WavFormat format) {
  if (sample_rate <= 0) throw std::invalid_argument("write_wav: sample_rate must be positive");
  if (frames_by_channels.cols() < 1) throw std::invalid_argument("write_wav: need at least one channel");
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("wav: cannot open for writing: " + path.string());

  const auto frames = static_cast<std::uint32_t>(frames_by_channels.rows());
  const auto channels = static_cast<std::uint16_t>(frames_by_channels.cols());
  const std::uint16_t bits = format == WavFormat::Float32 ? 32 : 16;
  const std::uint16_t codec = format == WavFormat::Float32 ? kFormatFloat : kFormatPcm;
  const std::uint32_t data_bytes = frames * channels * (bits / 8);
  const bool fact = format == WavFormat::Float32;
  const std::uint32_t riff_size = 4 + (8 + 16) + (fact ? 8 + 4 : 0) + 8 + data_bytes;

  os.write("RIFF", 4);
  put_le(os, riff_size);
  os.write("WAVE", 4);
  os.write("fmt ", 4);
  put_le(os, std::uint32_t{16});
  put_le(os, codec);
  put_le(os, channels);
  put_le(os, static_cast<std::uint32_t>(sample_rate));
  put_le(os, static_cast<std::uint32_t>(sample_rate) * channels * (bits / 8));
  put_le(os, static_cast<std::uint16_t>(channels * (bits / 8)));
  put_le(os, bits);
  if (fact) {
    os.write("fact", 4);
    put_le(os, std::uint32_t{4});
    put_le(os, frames);
  }
  os.write("data", 4);
  put_le(os, data_bytes);

  for (std::uint32_t i = 0; i < frames; ++i) {
    for (std::uint16_t c = 0; c < channels; ++c) {
      const double v = frames_by_channels(static_cast<Index>(i), c);
      if (format == WavFormat::Float32) {
        put_le(os, static_cast<float>(v));
      } else {
        const double clamped = std::clamp(v, -1.0, 32767.0 / 32768.0);
        put_le(os, static_cast<std::int16_t>(std::lround(clamped * 32768.0)));
      }
    }
  }
  if (!os) throw DataError("wav: write failed: " + path.string());
}

}  // namespace hpss
