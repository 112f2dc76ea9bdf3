// SPDX-License-Identifier: Apache-2.0
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fixv2w/embed.hpp"
#include "fixv2w/error.hpp"

namespace fixv2w::embed {
namespace {

constexpr std::string_view kMagicStem = "FXV2W";
constexpr char kVersion = '1';

template <class T>
void put_le(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
}

void put_floats(std::string& out, const std::vector<float>& xs) {
  for (float x : xs) put_le(out, std::bit_cast<std::uint32_t>(x));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <class T>
  T le() {
    need(sizeof(T));
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return v;
  }

  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  void floats(std::vector<float>& out) {
    for (auto& x : out) x = std::bit_cast<float>(le<std::uint32_t>());
  }

  bool done() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      throw FormatError("model file is truncated (needed " + std::to_string(n) + " bytes at offset " +
                        std::to_string(pos_) + ", file has " + std::to_string(bytes_.size()) + ")");
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string serialize_model(const EmbeddingModel& model) {
  std::string out;
  out.append(kMagicStem);
  out.push_back(kVersion);
  put_le(out, static_cast<std::uint32_t>(model.dim()));
  put_le(out, static_cast<std::uint64_t>(model.entity_count()));
  put_le(out, static_cast<std::uint64_t>(model.relation_count()));
  for (const auto& id : model.entity_ids()) {
    put_le(out, static_cast<std::uint32_t>(id.key().size()));
    out.append(id.key());
  }
  for (auto r : kg::kAllRelations) {
    const auto name = kg::to_string(r);
    put_le(out, static_cast<std::uint32_t>(name.size()));
    out.append(name);
  }
  put_floats(out, model.entity_matrix());
  put_floats(out, model.relation_matrix());
  out.push_back(static_cast<char>(model.norm_p()));
  return out;
}

EmbeddingModel deserialize_model(std::string_view bytes) {
  Reader in(bytes);
  const auto magic = in.take(kMagicStem.size() + 1);
  if (magic.substr(0, kMagicStem.size()) != kMagicStem) throw FormatError("not a model file (bad magic)");
  if (magic.back() != kVersion) {
    throw VersionMismatchError("model file format version '" + std::string(1, magic.back()) +
                               "' is not supported (expected '" + std::string(1, kVersion) + "')");
  }
  const auto dim = in.le<std::uint32_t>();
  const auto entities = in.le<std::uint64_t>();
  const auto relations = in.le<std::uint64_t>();
  if (dim == 0) throw FormatError("model file has zero dimension");
  if (relations != kg::kRelationCount) {
    throw FormatError("model file lists " + std::to_string(relations) + " relations, expected " +
                      std::to_string(kg::kRelationCount));
  }
  // Each id needs at least its 4-byte length.
  if (entities > in.remaining() / 4) throw FormatError("model file is truncated (entity table)");
  std::vector<kg::EntityId> ids;
  ids.reserve(entities);
  for (std::uint64_t i = 0; i < entities; ++i) {
    const auto len = in.le<std::uint32_t>();
    try {
      ids.push_back(kg::EntityId::parse(in.take(len)));
    } catch (const ValidationError& e) {
      throw FormatError(std::string("model file has a bad entity id: ") + e.what());
    }
  }
  for (auto r : kg::kAllRelations) {
    const auto len = in.le<std::uint32_t>();
    if (in.take(len) != kg::to_string(r)) throw FormatError("model file relation table does not match this build");
  }
  if (!std::is_sorted(ids.begin(), ids.end())) throw FormatError("model file entity table is not in canonical order");

  const auto matrix_bytes = (entities + relations) * std::uint64_t{dim} * 4 + 1;
  if (in.remaining() < matrix_bytes) throw FormatError("model file is truncated (matrices)");
  if (in.remaining() > matrix_bytes) throw FormatError("model file has trailing bytes");

  std::vector<float> ent(entities * dim), rel(relations * dim);
  in.floats(ent);
  in.floats(rel);
  const int norm_p = in.le<std::uint8_t>();
  EmbeddingModel model(dim, std::move(ids), norm_p == 1 ? 1 : 2);
  if (norm_p != 1 && norm_p != 2) throw FormatError("model file has norm_p " + std::to_string(norm_p));
  if (model.entity_count() != entities) throw FormatError("model file has duplicate entity ids");
  model.entity_matrix() = std::move(ent);
  model.relation_matrix() = std::move(rel);
  return model;
}

void save_model(const EmbeddingModel& model, const std::filesystem::path& path) {
  const auto bytes = serialize_model(model);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw EmptyInputError("cannot write " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw EmptyInputError("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

EmbeddingModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw EmptyInputError("cannot open model file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_model(ss.str());
}

}  // namespace fixv2w::embed
