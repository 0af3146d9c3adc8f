// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "respira/audio.hpp"
#include "respira/error.hpp"

namespace respira {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint16_t ReadU16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t ReadU32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void PutU16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>(v >> 8));
}

void PutU32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

struct FmtChunk {
  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
  std::uint16_t block_align = 0;
};

void WriteRiff(const std::filesystem::path& path, std::uint16_t format, std::uint16_t bits,
               int sample_rate, const std::string& payload) {
  std::string out;
  const std::uint32_t data_size = static_cast<std::uint32_t>(payload.size());
  out.reserve(44 + payload.size());
  out += "RIFF";
  PutU32(out, 36 + data_size + (data_size & 1u));
  out += "WAVEfmt ";
  PutU32(out, 16);
  PutU16(out, format);
  PutU16(out, 1);
  PutU32(out, static_cast<std::uint32_t>(sample_rate));
  PutU32(out, static_cast<std::uint32_t>(sample_rate) * (bits / 8));
  PutU16(out, static_cast<std::uint16_t>(bits / 8));
  PutU16(out, bits);
  out += "data";
  PutU32(out, data_size);
  out += payload;
  if (data_size & 1u) out.push_back('\0');

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

}  // namespace

AudioClip ReadWav(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                         std::istreambuf_iterator<char>());
  const std::string where = " in " + path.string();
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw Error(ErrorCode::kCorruptHeader, "missing RIFF/WAVE signature" + where);
  }

  FmtChunk fmt;
  bool have_fmt = false;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = ReadU32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = bytes.size() - body;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || avail < 16) throw Error(ErrorCode::kCorruptHeader, "short fmt chunk" + where);
      const unsigned char* p = bytes.data() + body;
      fmt.format = ReadU16(p);
      fmt.channels = ReadU16(p + 2);
      fmt.sample_rate = ReadU32(p + 4);
      fmt.block_align = ReadU16(p + 12);
      fmt.bits = ReadU16(p + 14);
      if (fmt.format == kFormatExtensible) {
        if (size < 40 || avail < 40) throw Error(ErrorCode::kCorruptHeader, "short extensible fmt chunk" + where);
        fmt.format = ReadU16(p + 24);  // first two bytes of the sub-format GUID
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      // Streaming writers sometimes leave the size unset; take what is there.
      data_size = std::min<std::size_t>(size, avail);
      break;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) throw Error(ErrorCode::kCorruptHeader, "no fmt chunk" + where);
  if (data == nullptr) throw Error(ErrorCode::kCorruptHeader, "no data chunk" + where);
  if (fmt.channels == 0 || fmt.sample_rate == 0) {
    throw Error(ErrorCode::kCorruptHeader, "zero channels or sample rate" + where);
  }
  const bool pcm16 = fmt.format == kFormatPcm && fmt.bits == 16;
  const bool float32 = fmt.format == kFormatFloat && fmt.bits == 32;
  if (!pcm16 && !float32) {
    throw Error(ErrorCode::kUnsupportedFormat, "format tag " + std::to_string(fmt.format) + " with " +
                                                   std::to_string(fmt.bits) + " bits" + where);
  }
  const std::size_t bytes_per_sample = fmt.bits / 8;
  const std::size_t frame_bytes = bytes_per_sample * fmt.channels;
  const std::size_t n_frames = data_size / frame_bytes;
  if (n_frames == 0) throw Error(ErrorCode::kEmptyAudio, "no samples" + where);

  AudioClip clip;
  clip.sample_rate = static_cast<int>(fmt.sample_rate);
  clip.samples.resize(n_frames);
  for (std::size_t i = 0; i < n_frames; ++i) {
    double acc = 0.0;
    for (std::size_t c = 0; c < fmt.channels; ++c) {
      const unsigned char* p = data + i * frame_bytes + c * bytes_per_sample;
      if (pcm16) {
        acc += static_cast<std::int16_t>(ReadU16(p)) / 32768.0;
      } else {
        const std::uint32_t bits = ReadU32(p);
        float v;
        std::memcpy(&v, &bits, sizeof(v));
        acc += static_cast<double>(v);
      }
    }
    clip.samples[i] = acc / fmt.channels;
  }
  return clip;
}

void WriteWav(const std::filesystem::path& path, const AudioClip& clip) {
  std::string payload;
  payload.reserve(clip.samples.size() * 2);
  for (double s : clip.samples) {
    const double scaled = std::round(std::clamp(s, -1.0, 1.0) * 32768.0);
    const auto q = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    PutU16(payload, static_cast<std::uint16_t>(q));
  }
  WriteRiff(path, kFormatPcm, 16, clip.sample_rate, payload);
}

void WriteWavFloat(const std::filesystem::path& path, const AudioClip& clip) {
  std::string payload;
  payload.reserve(clip.samples.size() * 4);
  for (double s : clip.samples) {
    const float v = static_cast<float>(s);
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    PutU32(payload, bits);
  }
  WriteRiff(path, kFormatFloat, 32, clip.sample_rate, payload);
}

}  // namespace respira
