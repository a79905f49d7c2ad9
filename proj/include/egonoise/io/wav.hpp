#pragma once

#include <algorithm>
#include <cmath>
#include <iterator>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "egonoise/audio.hpp"
#include "egonoise/error.hpp"

namespace egonoise::io {

// RIFF/WAVE reader for 16/24/32-bit integer PCM and 32/64-bit float, plain
// or WAVE_FORMAT_EXTENSIBLE. Integer samples are scaled to [-1, 1).
inline MultichannelAudio read_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  auto fail = [&](const std::string& why) -> IoError { return IoError("'" + path + "': " + why); };
  auto u16 = [&](std::size_t off) {
    std::uint16_t v;
    std::memcpy(&v, bytes.data() + off, 2);
    return v;
  };
  auto u32 = [&](std::size_t off) {
    std::uint32_t v;
    std::memcpy(&v, bytes.data() + off, 4);
    return v;
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw fail("not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const char* data = nullptr;
  std::size_t data_size = 0;
  for (std::size_t off = 12; off + 8 <= bytes.size();) {
    const std::uint32_t size = u32(off + 4);
    const std::size_t body = off + 8;
    if (std::memcmp(bytes.data() + off, "fmt ", 4) == 0) {
      if (size < 16 || body + size > bytes.size()) throw fail("malformed fmt chunk");
      format = u16(body);
      channels = u16(body + 2);
      rate = u32(body + 4);
      bits = u16(body + 14);
      if (format == 0xFFFE) {
        if (size < 40) throw fail("malformed extensible fmt chunk");
        format = u16(body + 24);
      }
    } else if (std::memcmp(bytes.data() + off, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = std::min<std::size_t>(size, bytes.size() - body);
    }
    off = body + size + (size & 1u);
  }
  if (channels == 0 || rate == 0) throw fail("missing fmt chunk");
  if (data == nullptr) throw fail("missing data chunk");
  const bool is_float = format == 3;
  if (!(format == 1 && (bits == 16 || bits == 24 || bits == 32)) &&
      !(is_float && (bits == 32 || bits == 64)))
    throw fail("unsupported sample format " + std::to_string(format) + "/" + std::to_string(bits));

  const std::size_t width = bits / 8;
  const std::size_t frames = data_size / (width * channels);
  MultichannelAudio audio(channels, frames, static_cast<double>(rate));
  for (std::size_t n = 0; n < frames; ++n)
    for (std::size_t m = 0; m < channels; ++m) {
      const char* p = data + (n * channels + m) * width;
      double v = 0.0;
      if (is_float && bits == 32) {
        float f;
        std::memcpy(&f, p, 4);
        v = f;
      } else if (is_float) {
        std::memcpy(&v, p, 8);
      } else if (bits == 16) {
        std::int16_t s;
        std::memcpy(&s, p, 2);
        v = s / 32768.0;
      } else if (bits == 24) {
        std::int32_t s = (static_cast<std::uint8_t>(p[0])) | (static_cast<std::uint8_t>(p[1]) << 8) |
                         (static_cast<std::int32_t>(static_cast<std::int8_t>(p[2])) << 16);
        v = s / 8388608.0;
      } else {
        std::int32_t s;
        std::memcpy(&s, p, 4);
        v = s / 2147483648.0;
      }
      audio(m, n) = v;
    }
  return audio;
}

// Writes 32-bit IEEE float samples; WAVE_FORMAT_EXTENSIBLE above 2 channels.
inline void write_wav(const std::string& path, const MultichannelAudio& audio) {
  const std::uint16_t channels = static_cast<std::uint16_t>(audio.channel_count());
  const auto rate = static_cast<std::uint32_t>(std::llround(audio.sample_rate()));
  const bool extensible = channels > 2;
  const std::uint32_t fmt_size = extensible ? 40 : 16;
  const std::uint32_t data_size = static_cast<std::uint32_t>(audio.size() * channels * 4);
  std::vector<char> out;
  auto put = [&](const void* p, std::size_t n) {
    out.insert(out.end(), static_cast<const char*>(p), static_cast<const char*>(p) + n);
  };
  auto p16 = [&](std::uint16_t v) { put(&v, 2); };
  auto p32 = [&](std::uint32_t v) { put(&v, 4); };
  put("RIFF", 4);
  p32(4 + 8 + fmt_size + 8 + data_size);
  put("WAVE", 4);
  put("fmt ", 4);
  p32(fmt_size);
  p16(extensible ? 0xFFFE : 3);
  p16(channels);
  p32(rate);
  p32(rate * channels * 4);
  p16(static_cast<std::uint16_t>(channels * 4));
  p16(32);
  if (extensible) {
    p16(22);
    p16(32);
    p32(0);  // no speaker mapping
    // KSDATAFORMAT_SUBTYPE_IEEE_FLOAT
    const unsigned char guid[16] = {0x03, 0x00, 0x00, 0x00, 0x00, 0x00, 0x10, 0x00,
                                    0x80, 0x00, 0x00, 0xAA, 0x00, 0x38, 0x9B, 0x71};
    put(guid, 16);
  }
  put("data", 4);
  p32(data_size);
  out.reserve(out.size() + data_size);
  for (std::size_t n = 0; n < audio.size(); ++n)
    for (std::size_t m = 0; m < channels; ++m) {
      const float f = static_cast<float>(audio(m, n));
      put(&f, 4);
    }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot create '" + path + "'");
  os.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!os) throw IoError("failed writing '" + path + "'");
}

}  // namespace egonoise::io
