#include "edmloc/wav.hpp"

#include "edmloc/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <vector>

namespace edmloc {

namespace {

std::uint32_t u32(const unsigned char* p) { return p[0] | (p[1] << 8) | (p[2] << 16) | (std::uint32_t(p[3]) << 24); }
std::uint16_t u16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }

void put32(std::vector<unsigned char>& b, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>(v >> (8 * i)));
}
void put16(std::vector<unsigned char>& b, std::uint16_t v) {
  b.push_back(static_cast<unsigned char>(v));
  b.push_back(static_cast<unsigned char>(v >> 8));
}
void put_tag(std::vector<unsigned char>& b, const char* tag) { b.insert(b.end(), tag, tag + 4); }

}  // namespace

WavData read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("read_wav: cannot open " + path);
  const std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < 12 || std::memcmp(buf.data(), "RIFF", 4) != 0 || std::memcmp(buf.data() + 8, "WAVE", 4) != 0)
    throw InvalidArgument("read_wav: not a RIFF/WAVE file");

  int format = 0, channels = 0, bits = 0;
  double rate = 0.0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  for (std::size_t pos = 12; pos + 8 <= buf.size();) {
    const std::uint32_t size = u32(&buf[pos + 4]);
    const unsigned char* body = &buf[pos + 8];
    if (pos + 8 + size > buf.size()) throw InvalidArgument("read_wav: truncated chunk");
    if (std::memcmp(&buf[pos], "fmt ", 4) == 0 && size >= 16) {
      format = u16(body);
      channels = u16(body + 2);
      rate = u32(body + 4);
      bits = u16(body + 14);
      if (format == 0xFFFE && size >= 26) format = u16(body + 24);  // extensible: sub-format GUID
    } else if (std::memcmp(&buf[pos], "data", 4) == 0) {
      data = body;
      data_size = size;
    }
    pos += 8 + size + (size & 1);
  }
  if (!data || channels < 1 || bits % 8 != 0 || bits == 0) throw InvalidArgument("read_wav: missing fmt or data chunk");
  const bool is_float = format == 3;
  if (!(format == 1 || is_float)) throw InvalidArgument("read_wav: unsupported sample format");
  if (is_float && bits != 32 && bits != 64) throw InvalidArgument("read_wav: unsupported float width");
  if (!is_float && bits != 16 && bits != 24 && bits != 32) throw InvalidArgument("read_wav: unsupported PCM width");

  const int bytes = bits / 8;
  const std::size_t frames = data_size / (static_cast<std::size_t>(bytes) * channels);
  WavData out;
  out.sample_rate = rate;
  out.channels.assign(channels, std::vector<double>(frames));
  for (std::size_t f = 0; f < frames; ++f)
    for (int c = 0; c < channels; ++c) {
      const unsigned char* p = data + (f * channels + c) * bytes;
      double v;
      if (is_float && bits == 32) {
        float x;
        std::memcpy(&x, p, 4);
        v = x;
      } else if (is_float) {
        std::memcpy(&v, p, 8);
      } else if (bits == 16) {
        v = static_cast<std::int16_t>(u16(p)) / 32768.0;
      } else if (bits == 24) {
        std::int32_t x = p[0] | (p[1] << 8) | (p[2] << 16);
        if (x & 0x800000) x -= 0x1000000;
        v = x / 8388608.0;
      } else {
        v = static_cast<std::int32_t>(u32(p)) / 2147483648.0;
      }
      out.channels[c][f] = v;
    }
  return out;
}

void write_wav(const std::string& path, const Channels& channels, double sample_rate, WavFormat format) {
  if (channels.empty()) throw InvalidArgument("write_wav: no channels");
  const std::size_t frames = channels.front().size();
  for (const auto& ch : channels)
    if (ch.size() != frames) throw InvalidArgument("write_wav: channels differ in length");

  const int nch = static_cast<int>(channels.size());
  const int bytes = format == WavFormat::Pcm16 ? 2 : 4;
  const std::uint32_t data_size = static_cast<std::uint32_t>(frames * nch * bytes);
  std::vector<unsigned char> b;
  b.reserve(44 + data_size);
  put_tag(b, "RIFF");
  put32(b, 36 + data_size);
  put_tag(b, "WAVE");
  put_tag(b, "fmt ");
  put32(b, 16);
  put16(b, format == WavFormat::Pcm16 ? 1 : 3);
  put16(b, static_cast<std::uint16_t>(nch));
  put32(b, static_cast<std::uint32_t>(std::lround(sample_rate)));
  put32(b, static_cast<std::uint32_t>(std::lround(sample_rate)) * nch * bytes);
  put16(b, static_cast<std::uint16_t>(nch * bytes));
  put16(b, static_cast<std::uint16_t>(8 * bytes));
  put_tag(b, "data");
  put32(b, data_size);
  for (std::size_t f = 0; f < frames; ++f)
    for (int c = 0; c < nch; ++c) {
      const double v = channels[c][f];
      if (format == WavFormat::Pcm16) {
        const long q = std::clamp(std::lround(v * 32768.0), -32768L, 32767L);
        put16(b, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
      } else {
        const float x = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &x, 4);
        put32(b, bits);
      }
    }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("write_wav: cannot open " + path);
  out.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

}  // namespace edmloc
