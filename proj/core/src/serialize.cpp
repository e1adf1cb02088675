// Copyright 2026 The DBN Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dbn/serialize.hpp"

#include <zlib.h>

#include <algorithm>
#include <fstream>
#include <iterator>

#include "bytes.hpp"
#include "dbn/error.hpp"

namespace dbn {
namespace {

using detail::ByteReader;
using detail::ByteWriter;

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed large buffers in chunks.
  constexpr std::size_t kChunk = 1u << 30;
  for (std::size_t off = 0; off < bytes.size(); off += kChunk) {
    const std::size_t n = std::min(kChunk, bytes.size() - off);
    crc = crc32(crc, bytes.data() + off, static_cast<uInt>(n));
  }
  return static_cast<std::uint32_t>(crc);
}

void write_layer(ByteWriter& w, const BooleanLayer& l) {
  w.u32(static_cast<std::uint32_t>(l.in_width));
  w.u32(static_cast<std::uint32_t>(l.out_width));
  w.u8(static_cast<std::uint8_t>(l.pairing));
  w.raw(l.pairs.first.data(), l.pairs.first.size() * sizeof(std::uint32_t));
  w.raw(l.pairs.second.data(), l.pairs.second.size() * sizeof(std::uint32_t));
  w.raw(l.logits.data(), l.logits.size() * sizeof(float));
}

template <typename T>
std::vector<T> read_array(ByteReader& r, std::size_t n) {
  if (r.remaining() / sizeof(T) < n) throw TruncationError("array exceeds container size");
  std::vector<T> v(n);
  r.raw(v.data(), n * sizeof(T));
  return v;
}

PairingMode read_pairing(ByteReader& r) {
  const std::uint8_t p = r.u8();
  if (p > static_cast<std::uint8_t>(PairingMode::kAdjacent)) throw FormatError("unknown pairing mode");
  return static_cast<PairingMode>(p);
}

BooleanLayer read_layer(ByteReader& r) {
  BooleanLayer l;
  l.in_width = r.u32();
  l.out_width = r.u32();
  l.pairing = read_pairing(r);
  l.pairs.first = read_array<std::uint32_t>(r, l.out_width);
  l.pairs.second = read_array<std::uint32_t>(r, l.out_width);
  l.logits = read_array<float>(r, l.out_width * kGateCount);
  return l;
}

}  // namespace

std::vector<std::uint8_t> serialize_model(const NetworkModel& model,
                                          std::span<const Section> sections) {
  ByteWriter w;
  w.raw(kModelMagic.data(), kModelMagic.size());
  w.u16(kModelVersion);
  w.u16(0);  // flags, reserved
  w.str(model.architecture);
  w.u32(static_cast<std::uint32_t>(model.input_shape.channels));
  w.u32(static_cast<std::uint32_t>(model.input_shape.thresholds));
  w.u32(static_cast<std::uint32_t>(model.input_shape.height));
  w.u32(static_cast<std::uint32_t>(model.input_shape.width));
  w.u64(model.seed);
  w.u32(model.binarization.threshold_count);
  w.u32(model.binarization.intensity_low);
  w.u32(model.binarization.intensity_high);
  w.u8(static_cast<std::uint8_t>(model.sampling));
  w.u32(model.head.class_count);
  w.f64(model.head.temperature);
  w.u32(static_cast<std::uint32_t>(model.stages.size()));
  for (const auto& st : model.stages) {
    if (const auto* l = std::get_if<BooleanLayer>(&st)) {
      w.u8(0);
      write_layer(w, *l);
    } else {
      const auto& b = std::get<SkipBlock>(st);
      w.u8(1);
      w.u8(static_cast<std::uint8_t>(b.connective));
      write_layer(w, b.layer_a);
      write_layer(w, b.layer_b);
      w.raw(b.learned_logits.data(), b.learned_logits.size() * sizeof(float));
    }
  }
  w.u32(static_cast<std::uint32_t>(sections.size()));
  for (const auto& s : sections) {
    w.raw(s.tag.data(), s.tag.size());
    w.u64(s.payload.size());
    w.bytes(s.payload);
  }
  w.u32(crc32_of(w.buffer()));
  return w.take();
}

NetworkModel deserialize_model(std::span<const std::uint8_t> bytes, std::vector<Section>* sections) {
  if (bytes.size() < 12 || !std::equal(kModelMagic.begin(), kModelMagic.end(), bytes.begin())) {
    throw FormatError("not a model container (bad magic)");
  }
  ByteReader head(bytes.subspan(4));
  const std::uint16_t version = head.u16();
  if (version != kModelVersion) {
    throw VersionError("unsupported model container version " + std::to_string(version));
  }
  const auto body = bytes.first(bytes.size() - 4);
  ByteReader tail(bytes.last(4));
  if (crc32_of(body) != tail.u32()) throw IntegrityError("model container checksum mismatch");

  ByteReader r(body.subspan(6));
  NetworkModel m;
  r.u16();  // flags
  m.architecture = r.str();
  m.input_shape.channels = r.u32();
  m.input_shape.thresholds = r.u32();
  m.input_shape.height = r.u32();
  m.input_shape.width = r.u32();
  m.seed = r.u64();
  m.binarization.threshold_count = r.u32();
  m.binarization.intensity_low = r.u32();
  m.binarization.intensity_high = r.u32();
  m.sampling = read_pairing(r);
  m.head.class_count = r.u32();
  m.head.temperature = r.f64();
  const std::uint32_t stage_count = r.u32();
  for (std::uint32_t i = 0; i < stage_count; ++i) {
    const std::uint8_t kind = r.u8();
    if (kind == 0) {
      m.stages.emplace_back(read_layer(r));
    } else if (kind == 1) {
      SkipBlock b;
      const std::uint8_t c = r.u8();
      if (c > static_cast<std::uint8_t>(SkipConnective::kLearned)) throw FormatError("unknown connective");
      b.connective = static_cast<SkipConnective>(c);
      b.layer_a = read_layer(r);
      b.layer_b = read_layer(r);
      if (b.connective == SkipConnective::kLearned) {
        b.learned_logits = read_array<float>(r, b.width() * kGateCount);
      }
      m.stages.emplace_back(std::move(b));
    } else {
      throw FormatError("unknown stage kind " + std::to_string(kind));
    }
  }
  const std::uint32_t section_count = r.u32();
  for (std::uint32_t i = 0; i < section_count; ++i) {
    Section s;
    r.raw(s.tag.data(), s.tag.size());
    const std::uint64_t n = r.u64();
    if (n > r.remaining()) throw TruncationError("section exceeds container size");
    s.payload = read_array<std::uint8_t>(r, n);
    if (sections != nullptr) sections->push_back(std::move(s));
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes in model container");
  try {
    m.validate();
  } catch (const Error& e) {
    throw FormatError(std::string("invalid model: ") + e.what());
  }
  return m;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed: " + path.string());
}

void save_model(const std::filesystem::path& path, const NetworkModel& model,
                std::span<const Section> sections) {
  write_file(path, serialize_model(model, sections));
}

NetworkModel load_model(const std::filesystem::path& path, std::vector<Section>* sections) {
  return deserialize_model(read_file(path), sections);
}

}  // namespace dbn
