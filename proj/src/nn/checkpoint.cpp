// SPDX-License-Identifier: Apache-2.0

#include <har/dataset.hpp>
#include <har/nn/checkpoint.hpp>
#include <har/nn/config_json.hpp>

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

namespace har::nn {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr std::string_view kMagic = "HARCKPT1\n";
constexpr int kVersion = 1;

template <typename T>
void append_tensor(std::string& out, const Mat<T>& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double v = static_cast<double>(m.data()[i]);
    char buf[sizeof(double)];
    std::memcpy(buf, &v, sizeof(double));
    out.append(buf, sizeof(double));
  }
}

json meta_json(const CheckpointMeta& meta) {
  return {{"class_names", meta.class_names},
          {"theta", meta.theta},
          {"dfd_cutoff", meta.dfd_cutoff},
          {"dfd_enabled", meta.dfd_enabled},
          {"precision", meta.precision},
          {"head", meta.head},
          {"optimizer", to_json(meta.optimizer)}};
}

struct Header {
  json doc;
  std::size_t payload_offset = 0;
};

Header parse_header(const std::string& bytes) {
  if (bytes.compare(0, kMagic.size(), kMagic) != 0)
    throw ParseError("not a checkpoint file (bad magic)");
  std::size_t pos = kMagic.size();
  std::uint64_t len = 0;
  if (bytes.size() < pos + sizeof(len)) throw ParseError("checkpoint truncated");
  std::memcpy(&len, bytes.data() + pos, sizeof(len));
  pos += sizeof(len);
  if (bytes.size() < pos + len) throw ParseError("checkpoint header truncated");
  Header h;
  try {
    h.doc = json::parse(bytes.substr(pos, len));
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint header: ") + e.what());
  }
  if (h.doc.value("version", 0) != kVersion)
    throw ParseError("unsupported checkpoint version");
  h.payload_offset = pos + len;
  return h;
}

CheckpointMeta meta_from_json(const json& m) {
  CheckpointMeta meta;
  try {
    meta.class_names = m.at("class_names").get<std::vector<std::string>>();
    meta.theta = m.at("theta").get<double>();
    meta.dfd_cutoff = m.at("dfd_cutoff").get<double>();
    meta.dfd_enabled = m.at("dfd_enabled").get<bool>();
    meta.precision = m.at("precision").get<std::string>();
    meta.head = m.at("head").get<std::string>();
    meta.optimizer = optimizer_config_from_json(m.at("optimizer"));
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint metadata: ") + e.what());
  }
  return meta;
}

}  // namespace

template <typename T>
std::string serialize_checkpoint(Model<T>& model, const RmsProp<T>* opt,
                                 const CheckpointMeta& meta) {
  json tensors = json::array();
  std::string payload;
  auto add = [&](const std::string& name, const char* kind, const Mat<T>& m) {
    tensors.push_back({{"name", name}, {"kind", kind}, {"shape", {m.rows(), m.cols()}}});
    append_tensor(payload, m);
  };
  const auto params = model.params();
  for (auto* p : params) add(p->name, "param", p->value);
  for (auto& b : model.buffers()) add(b.name, "buffer", *b.data);
  json opt_state = nullptr;
  if (opt != nullptr && !opt->accumulators().empty()) {
    for (std::size_t k = 0; k < params.size(); ++k)
      add("rmsprop.acc/" + params[k]->name, "optimizer", opt->accumulators()[k]);
    opt_state = {{"steps", opt->steps()}};
  }
  json header = {{"format", "har-checkpoint"},
                 {"version", kVersion},
                 {"model", to_json(model.config())},
                 {"gi_k", model.config().gi_k},
                 {"meta", meta_json(meta)},
                 {"optimizer_state", opt_state},
                 {"tensors", tensors}};
  const std::string text = header.dump();
  std::string out(kMagic);
  const std::uint64_t len = text.size();
  char buf[sizeof(len)];
  std::memcpy(buf, &len, sizeof(len));
  out.append(buf, sizeof(len));
  out += text;
  out += payload;
  return out;
}

template <typename T>
LoadedCheckpoint<T> deserialize_checkpoint(const std::string& bytes) {
  const Header h = parse_header(bytes);
  LoadedCheckpoint<T> out;
  ModelConfig cfg;
  try {
    cfg = model_config_from_json(h.doc.at("model"));
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint model config: ") + e.what());
  }
  out.meta = meta_from_json(h.doc.at("meta"));
  out.model = std::make_unique<Model<T>>(cfg, 0);

  std::map<std::string, Mat<T>*> targets;
  const auto params = out.model->params();
  for (auto* p : params) targets[p->name] = &p->value;
  for (auto& b : out.model->buffers()) targets[b.name] = b.data;

  const bool has_opt = !h.doc.at("optimizer_state").is_null();
  if (has_opt) {
    out.optimizer = std::make_unique<RmsProp<T>>(out.meta.optimizer);
    auto& acc = out.optimizer->accumulators();
    for (auto* p : params) acc.push_back(Mat<T>::Zero(p->value.rows(), p->value.cols()));
    for (std::size_t k = 0; k < params.size(); ++k)
      targets["rmsprop.acc/" + params[k]->name] = &acc[k];
    out.optimizer->set_steps(h.doc.at("optimizer_state").at("steps").get<std::uint64_t>());
  }

  std::size_t pos = h.payload_offset;
  std::size_t filled = 0;
  for (const auto& t : h.doc.at("tensors")) {
    const auto name = t.at("name").get<std::string>();
    const auto rows = t.at("shape")[0].get<Eigen::Index>();
    const auto cols = t.at("shape")[1].get<Eigen::Index>();
    auto it = targets.find(name);
    if (it == targets.end()) throw ParseError("checkpoint has unexpected tensor '" + name + "'");
    Mat<T>& m = *it->second;
    if (m.rows() != rows || m.cols() != cols)
      throw ParseError("checkpoint tensor '" + name + "' has the wrong shape");
    const auto count = static_cast<std::size_t>(rows * cols);
    if (bytes.size() < pos + count * sizeof(double))
      throw ParseError("checkpoint payload truncated at '" + name + "'");
    for (std::size_t i = 0; i < count; ++i) {
      double v;
      std::memcpy(&v, bytes.data() + pos + i * sizeof(double), sizeof(double));
      m.data()[i] = static_cast<T>(v);
    }
    pos += count * sizeof(double);
    ++filled;
  }
  if (filled != targets.size()) throw ParseError("checkpoint is missing tensors");
  if (pos != bytes.size()) throw ParseError("checkpoint has trailing bytes");
  return out;
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, Model<T>& model,
                     const RmsProp<T>* opt, const CheckpointMeta& meta) {
  write_file_atomic(path, serialize_checkpoint(model, opt, meta));
}

template <typename T>
LoadedCheckpoint<T> load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint<T>(read_file(path));
}

CheckpointMeta peek_checkpoint_meta(const std::filesystem::path& path, ModelConfig* cfg) {
  const Header h = parse_header(read_file(path));
  if (cfg != nullptr) *cfg = model_config_from_json(h.doc.at("model"));
  return meta_from_json(h.doc.at("meta"));
}

#define HAR_INSTANTIATE(T)                                                              \
  template std::string serialize_checkpoint<T>(Model<T>&, const RmsProp<T>*,            \
                                               const CheckpointMeta&);                  \
  template LoadedCheckpoint<T> deserialize_checkpoint<T>(const std::string&);           \
  template void save_checkpoint<T>(const std::filesystem::path&, Model<T>&,             \
                                   const RmsProp<T>*, const CheckpointMeta&);           \
  template LoadedCheckpoint<T> load_checkpoint<T>(const std::filesystem::path&);
HAR_INSTANTIATE(float)
HAR_INSTANTIATE(double)
#undef HAR_INSTANTIATE

}  // namespace har::nn
