// SPDX-License-Identifier: Apache-2.0
/**
 * @file   dataset_io.cpp
 * @brief  Binary and CSV serialization of datasets.
 */

#include <har/common.hpp>
#include <har/dataset.hpp>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace har {

static_assert(std::endian::native == std::endian::little,
              "dataset I/O assumes a little-endian host");

namespace {

constexpr std::array<char, 8> kMagic = {'H', 'A', 'R', 'S', 'E', 'Q', 0, 0};

template <typename T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

void put_string(std::ostream& os, const std::string& s) {
  put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

template <typename T>
T get(std::istream& is, const char* what) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw ParseError(std::string("dataset truncated while reading ") + what);
  return v;
}

std::string get_string(std::istream& is, const char* what) {
  const auto n = get<std::uint32_t>(is, what);
  if (n > (1u << 20)) throw ParseError(std::string("implausible length for ") + what);
  std::string s(n, '\0');
  if (n && !is.read(s.data(), n))
    throw ParseError(std::string("dataset truncated while reading ") + what);
  return s;
}

}  // namespace

void Dataset::add(PoseSequence seq, Provenance p) {
  sequences.push_back(std::move(seq));
  provenance.push_back(p);
}

void Dataset::validate() const {
  if (class_names.size() < 2)
    throw ValidationError("dataset needs at least 2 classes");
  if (provenance.size() != sequences.size())
    throw ValidationError("provenance flags do not match sequence count");
  for (const auto& s : sequences) {
    if (s.label < 0 || static_cast<std::size_t>(s.label) >= class_names.size())
      throw ValidationError("clip '" + s.clip_id + "' has label " +
                            std::to_string(s.label) + " outside [0, " +
                            std::to_string(class_names.size()) + ")");
    if (s.frames.empty())
      throw ValidationError("clip '" + s.clip_id + "' has no frames");
  }
}

void write_dataset(std::ostream& os, const Dataset& data) {
  data.validate();
  os.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(os, kDatasetFormatVersion);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(kPoseDim));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(data.class_names.size()));
  for (const auto& name : data.class_names) put_string(os, name);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(data.sequences.size()));
  for (std::size_t i = 0; i < data.sequences.size(); ++i) {
    const auto& s = data.sequences[i];
    put_string(os, s.clip_id);
    put<std::uint32_t>(os, static_cast<std::uint32_t>(s.label));
    put<std::uint8_t>(os, static_cast<std::uint8_t>(data.provenance[i]));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(s.frames.size()));
    for (const auto& f : s.frames)
      os.write(reinterpret_cast<const char*>(f.values.data()),
               static_cast<std::streamsize>(kPoseDim * sizeof(double)));
    std::vector<std::uint8_t> bits((s.frames.size() * kPoseDim + 7) / 8, 0);
    std::size_t bit = 0;
    for (const auto& f : s.frames)
      for (auto m : f.mask) {
        if (m) bits[bit / 8] |= static_cast<std::uint8_t>(1u << (bit % 8));
        ++bit;
      }
    os.write(reinterpret_cast<const char*>(bits.data()),
             static_cast<std::streamsize>(bits.size()));
  }
  if (!os) throw std::runtime_error("failed writing dataset stream");
}

Dataset read_dataset(std::istream& is) {
  std::array<char, 8> magic{};
  if (!is.read(magic.data(), magic.size()) || magic != kMagic)
    throw ParseError("not a dataset file (bad magic)");
  const auto version = get<std::uint32_t>(is, "version");
  if (version != kDatasetFormatVersion)
    throw ParseError("unsupported dataset version " + std::to_string(version));
  const auto dim = get<std::uint32_t>(is, "pose dim");
  if (dim != kPoseDim)
    throw ParseError("dataset pose dim " + std::to_string(dim) + ", expected 36");
  Dataset data;
  const auto n_classes = get<std::uint32_t>(is, "class count");
  for (std::uint32_t c = 0; c < n_classes; ++c)
    data.class_names.push_back(get_string(is, "class name"));
  const auto n_clips = get<std::uint32_t>(is, "clip count");
  for (std::uint32_t i = 0; i < n_clips; ++i) {
    PoseSequence s;
    s.clip_id = get_string(is, "clip id");
    s.label = static_cast<int>(get<std::uint32_t>(is, "label"));
    const auto prov = get<std::uint8_t>(is, "provenance");
    if (prov > 1) throw ParseError("bad provenance flag in clip '" + s.clip_id + "'");
    const auto n_frame = get<std::uint32_t>(is, "frame count");
    s.frames.resize(n_frame);
    for (auto& f : s.frames)
      if (!is.read(reinterpret_cast<char*>(f.values.data()),
                   static_cast<std::streamsize>(kPoseDim * sizeof(double))))
        throw ParseError("dataset truncated in values of clip '" + s.clip_id + "'");
    std::vector<std::uint8_t> bits((n_frame * kPoseDim + 7) / 8);
    if (!bits.empty() && !is.read(reinterpret_cast<char*>(bits.data()),
                                  static_cast<std::streamsize>(bits.size())))
      throw ParseError("dataset truncated in mask of clip '" + s.clip_id + "'");
    std::size_t bit = 0;
    for (auto& f : s.frames)
      for (auto& m : f.mask) {
        m = (bits[bit / 8] >> (bit % 8)) & 1u;
        ++bit;
      }
    data.add(std::move(s), static_cast<Provenance>(prov));
  }
  data.validate();
  return data;
}

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ostringstream os(std::ios::binary);
  write_dataset(os, data);
  write_file_atomic(path, os.str());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open dataset '" + path.string() + "'");
  return read_dataset(is);
}

void write_dataset_csv(std::ostream& os, const Dataset& data) {
  os << "clip_id,label,provenance,frame";
  for (std::size_t j = 0; j < kPoseDim; ++j) os << ",v" << j;
  for (std::size_t j = 0; j < kPoseDim; ++j) os << ",m" << j;
  os << '\n';
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (std::size_t i = 0; i < data.sequences.size(); ++i) {
    const auto& s = data.sequences[i];
    const char* prov =
        data.provenance[i] == Provenance::kOriginal ? "original" : "augmented";
    for (std::size_t t = 0; t < s.frames.size(); ++t) {
      os << s.clip_id << ',' << s.label << ',' << prov << ',' << t;
      for (double v : s.frames[t].values) os << ',' << v;
      for (auto m : s.frames[t].mask) os << ',' << int(m);
      os << '\n';
    }
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open '" + tmp.string() + "' for writing");
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!os) throw std::runtime_error("failed writing '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace har
