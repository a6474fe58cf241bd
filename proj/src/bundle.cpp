// Copyright 2026 The bindscore Authors
// SPDX-License-Identifier: Apache-2.0

#include "bindscore/bundle.hpp"

#include <bit>
#include <fstream>
#include <optional>
#include <set>
#include <limits>
#include <sstream>
#include <system_error>
#include <utility>

namespace bindscore::bundle {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

static_assert(sizeof(float) == 4 && std::numeric_limits<float>::is_iec559);

json read_manifest(const fs::path& dir, Kind expected, Eigen::Index& dim) {
  const fs::path path = dir / kManifestName;
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  json m;
  try {
    m = json::parse(in);
  } catch (const json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  const auto fail = [&](const std::string& msg) { throw FormatError(path.string() + ": " + msg); };
  if (!m.is_object()) fail("manifest must be a JSON object");
  if (!m.contains("format_version") || !m["format_version"].is_number_integer() ||
      m["format_version"].get<int>() != kFormatVersion) {
    fail("unsupported or missing format_version (expected 1)");
  }
  if (!m.contains("kind") || !m["kind"].is_string() ||
      m["kind"].get<std::string>() != to_string(expected)) {
    fail(std::string("kind must be \"") + to_string(expected) + "\"");
  }
  if (!m.contains("dim") || !m["dim"].is_number_unsigned() || m["dim"].get<std::int64_t>() < 1) {
    fail("dim must be a positive integer");
  }
  if (!m.contains("dtype") || m["dtype"] != "f32le") fail("dtype must be \"f32le\"");
  if (!m.contains("items") || !m["items"].is_array()) fail("items must be an array");
  dim = m["dim"].get<Eigen::Index>();
  return m;
}

// Reads float32 runs out of the blob files of one bundle directory.
class BlobReader {
 public:
  explicit BlobReader(fs::path dir) : dir_(std::move(dir)) {}

  Matrix read(const json& ref, Eigen::Index rows, Eigen::Index cols, const std::string& what) {
    if (!ref.is_object() || !ref.contains("file") || !ref["file"].is_string() ||
        !ref.contains("byte_offset") || !ref["byte_offset"].is_number_unsigned()) {
      throw FormatError(what + ": blob reference must be {file, byte_offset}");
    }
    const auto name = ref["file"].get<std::string>();
    const auto offset = ref["byte_offset"].get<std::uint64_t>();
    Blob& blob = open(name, what);
    const auto count = static_cast<std::uint64_t>(rows) * static_cast<std::uint64_t>(cols);
    const std::uint64_t bytes = count * 4;
    if (offset > blob.size || bytes > blob.size - offset) {
      throw FormatError(what + ": byte range [" + std::to_string(offset) + ", " +
                        std::to_string(offset + bytes) + ") exceeds " + name + " (" +
                        std::to_string(blob.size) + " bytes)");
    }
    std::vector<unsigned char> raw(bytes);
    blob.stream.seekg(static_cast<std::streamoff>(offset));
    blob.stream.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes));
    if (!blob.stream) throw FormatError(what + ": short read from " + name);

    Matrix out(rows, cols);
    for (std::uint64_t i = 0; i < count; ++i) {
      const unsigned char* b = raw.data() + 4 * i;
      const std::uint32_t bits = std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
                                 (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
      out.data()[i] = static_cast<double>(std::bit_cast<float>(bits));
    }
    if (!out.allFinite()) throw FormatError(what + ": non-finite value");
    return out;
  }

 private:
  struct Blob {
    std::ifstream stream;
    std::uint64_t size = 0;
  };

  Blob& open(const std::string& name, const std::string& what) {
    if (auto it = blobs_.find(name); it != blobs_.end()) return it->second;
    const fs::path rel(name);
    if (name.empty() || rel.is_absolute() || rel.has_root_name()) {
      throw FormatError(what + ": blob file must be a relative path, got '" + name + "'");
    }
    for (const auto& part : rel) {
      if (part == "..") throw FormatError(what + ": blob path escapes the bundle: " + name);
    }
    const fs::path path = dir_ / rel;
    std::error_code ec;
    const auto size = fs::file_size(path, ec);
    if (ec) throw FormatError(what + ": cannot stat blob " + path.string());
    Blob blob;
    blob.stream.open(path, std::ios::binary);
    if (!blob.stream) throw FormatError(what + ": cannot open blob " + path.string());
    blob.size = size;
    return blobs_.emplace(name, std::move(blob)).first->second;
  }

  fs::path dir_;
  std::map<std::string, Blob> blobs_;
};

template <typename T>
T field(const json& item, const char* key, const std::string& what) {
  if (!item.contains(key)) throw FormatError(what + ": missing field '" + key + "'");
  try {
    return item.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(what + ": bad field '" + key + "': " + e.what());
  }
}

std::string item_label(const fs::path& dir, std::size_t i) {
  return (dir / kManifestName).string() + " item " + std::to_string(i);
}

// Accumulates float32 bytes for one blob and hands out references into it.
class BlobWriter {
 public:
  // Vectors are passed transposed so each one is a single row.
  template <typename Derived>
  json append(const Eigen::MatrixBase<Derived>& m) {
    json ref = {{"file", kDefaultBlob}, {"byte_offset", bytes_.size()}};
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) push(static_cast<float>(m(r, c)));
    }
    return ref;
  }

  const std::vector<unsigned char>& bytes() const noexcept { return bytes_; }

 private:
  void push(float f) {
    const auto bits = std::bit_cast<std::uint32_t>(f);
    for (int s = 0; s < 32; s += 8) bytes_.push_back(static_cast<unsigned char>(bits >> s));
  }
  std::vector<unsigned char> bytes_;
};

void write_file_atomic(const fs::path& path, const char* data, std::size_t size) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(data, static_cast<std::streamsize>(size));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_bundle(const fs::path& dir, Kind kind, Eigen::Index dim, json items,
                  const BlobWriter& blob, const json& extra) {
  fs::create_directories(dir);
  json manifest = json::object();
  if (extra.is_object()) manifest.update(extra);
  manifest["format_version"] = kFormatVersion;
  manifest["kind"] = to_string(kind);
  manifest["dim"] = dim;
  manifest["dtype"] = "f32le";
  manifest["items"] = std::move(items);
  write_file_atomic(dir / kDefaultBlob, reinterpret_cast<const char*>(blob.bytes().data()),
                    blob.bytes().size());
  const std::string text = manifest.dump(2) + "\n";
  write_file_atomic(dir / kManifestName, text.data(), text.size());
}

}  // namespace

const char* to_string(Kind kind) {
  switch (kind) {
    case Kind::kImage: return "image";
    case Kind::kText: return "text";
    case Kind::kConceptPool: return "concept_pool";
    case Kind::kPhraseTable: return "phrase_table";
  }
  return "?";
}

std::vector<ImageEmbedding> read_images(const fs::path& dir) {
  Eigen::Index dim = 0;
  const json m = read_manifest(dir, Kind::kImage, dim);
  BlobReader blobs(dir);
  std::vector<ImageEmbedding> out;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < m["items"].size(); ++i) {
    const json& item = m["items"][i];
    const std::string what = item_label(dir, i);
    auto id = field<std::string>(item, "id", what);
    if (!seen.insert(id).second) throw FormatError(what + ": duplicate id " + id);
    const auto n = field<std::int64_t>(item, "n_patches", what);
    if (n < 1) throw FormatError(what + ": n_patches must be >= 1");
    Matrix cls = blobs.read(item.at("cls"), 1, dim, what + " cls");
    Matrix patches = blobs.read(item.at("patches"), n, dim, what + " patches");
    std::optional<PatchGrid> grid;
    if (item.contains("patch_grid") && !item["patch_grid"].is_null()) {
      const auto g = field<std::vector<int>>(item, "patch_grid", what);
      if (g.size() != 2) throw FormatError(what + ": patch_grid must be [rows, cols]");
      grid = PatchGrid{g[0], g[1]};
    }
    try {
      out.emplace_back(std::move(id), Vector(cls.row(0).transpose()), std::move(patches), grid);
    } catch (const std::exception& e) {
      throw FormatError(what + ": " + e.what());
    }
  }
  return out;
}

std::vector<TextEncoding> read_texts(const fs::path& dir) {
  Eigen::Index dim = 0;
  const json m = read_manifest(dir, Kind::kText, dim);
  BlobReader blobs(dir);
  std::vector<TextEncoding> out;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < m["items"].size(); ++i) {
    const json& item = m["items"][i];
    const std::string what = item_label(dir, i);
    auto id = field<std::string>(item, "id", what);
    if (!seen.insert(id).second) throw FormatError(what + ": duplicate id " + id);
    auto caption = field<std::string>(item, "caption", what);
    auto texts = field<std::vector<std::string>>(item, "token_texts", what);
    auto raw_spans = field<std::vector<std::vector<std::size_t>>>(item, "char_spans", what);
    auto mask = field<std::vector<bool>>(item, "content_mask", what);
    const auto m_tokens = static_cast<Eigen::Index>(texts.size());
    if (item.contains("n_tokens") && field<Eigen::Index>(item, "n_tokens", what) != m_tokens) {
      throw FormatError(what + ": n_tokens differs from token_texts length");
    }
    if (raw_spans.size() != texts.size() || mask.size() != texts.size()) {
      throw FormatError(what + ": token_texts, char_spans and content_mask lengths differ");
    }
    std::vector<CharSpan> spans;
    spans.reserve(raw_spans.size());
    for (const auto& s : raw_spans) {
      if (s.size() != 2) throw FormatError(what + ": char span must be [begin, end]");
      spans.push_back({s[0], s[1]});
    }
    if (m_tokens < 1) throw FormatError(what + ": no tokens");
    Matrix eot = blobs.read(item.at("eot"), 1, dim, what + " eot");
    Matrix tokens = blobs.read(item.at("tokens"), m_tokens, dim, what + " tokens");
    try {
      out.emplace_back(std::move(id), std::move(caption), Vector(eot.row(0).transpose()),
                       std::move(tokens), std::move(texts), std::move(spans), std::move(mask));
    } catch (const std::exception& e) {
      throw FormatError(what + ": " + e.what());
    }
  }
  return out;
}

ConceptPool read_concept_pool(const fs::path& dir) {
  Eigen::Index dim = 0;
  const json m = read_manifest(dir, Kind::kConceptPool, dim);
  BlobReader blobs(dir);
  std::vector<std::string> concepts;
  Matrix base(static_cast<Eigen::Index>(m["items"].size()), dim);
  for (std::size_t i = 0; i < m["items"].size(); ++i) {
    const json& item = m["items"][i];
    const std::string what = item_label(dir, i);
    concepts.push_back(field<std::string>(item, "concept", what));
    base.row(static_cast<Eigen::Index>(i)) = blobs.read(item.at("vec"), 1, dim, what + " vec");
  }
  try {
    return ConceptPool(std::move(concepts), std::move(base));
  } catch (const std::exception& e) {
    throw FormatError(dir.string() + ": " + e.what());
  }
}

PhraseEmbeddingTable read_phrase_table(const fs::path& dir) {
  Eigen::Index dim = 0;
  const json m = read_manifest(dir, Kind::kPhraseTable, dim);
  BlobReader blobs(dir);
  PhraseEmbeddingTable table(dim);
  for (std::size_t i = 0; i < m["items"].size(); ++i) {
    const json& item = m["items"][i];
    const std::string what = item_label(dir, i);
    // Blank-attribute entries live in the concept pool.
    if (!item.contains("attribute") || item["attribute"].is_null()) continue;
    PhraseKey key{field<std::string>(item, "attribute", what),
                  field<std::string>(item, "object", what)};
    Matrix v = blobs.read(item.at("vec"), 1, dim, what + " vec");
    try {
      table.insert(std::move(key), Vector(v.row(0).transpose()));
    } catch (const std::exception& e) {
      throw FormatError(what + ": " + e.what());
    }
  }
  return table;
}

std::map<std::string, ImageEmbedding> index_images(std::vector<ImageEmbedding> images) {
  std::map<std::string, ImageEmbedding> out;
  for (auto& im : images) {
    auto id = im.id();
    if (!out.emplace(id, std::move(im)).second) throw FormatError("duplicate image id " + id);
  }
  return out;
}

std::map<std::string, TextEncoding> index_texts(std::vector<TextEncoding> texts) {
  std::map<std::string, TextEncoding> out;
  for (auto& t : texts) {
    auto id = t.id();
    if (!out.emplace(id, std::move(t)).second) throw FormatError("duplicate text id " + id);
  }
  return out;
}

void write_images(const fs::path& dir, std::span<const ImageEmbedding> images, const json& extra) {
  if (images.empty()) throw std::invalid_argument("write_images: no images");
  BlobWriter blob;
  json items = json::array();
  for (const auto& im : images) {
    if (im.dim() != images.front().dim()) throw DimensionMismatch("write_images: mixed dims");
    json item = {{"id", im.id()}, {"n_patches", im.num_patches()}};
    item["cls"] = blob.append(im.cls().transpose());
    item["patches"] = blob.append(im.patches());
    if (im.grid()) item["patch_grid"] = {im.grid()->rows, im.grid()->cols};
    items.push_back(std::move(item));
  }
  write_bundle(dir, Kind::kImage, images.front().dim(), std::move(items), blob, extra);
}

void write_texts(const fs::path& dir, std::span<const TextEncoding> texts, const json& extra) {
  if (texts.empty()) throw std::invalid_argument("write_texts: no texts");
  BlobWriter blob;
  json items = json::array();
  for (const auto& t : texts) {
    if (t.dim() != texts.front().dim()) throw DimensionMismatch("write_texts: mixed dims");
    json spans = json::array();
    for (const auto& s : t.char_spans()) spans.push_back({s.begin, s.end});
    json item = {{"id", t.id()},
                 {"caption", t.caption()},
                 {"n_tokens", t.num_tokens()},
                 {"token_texts", t.token_texts()},
                 {"char_spans", std::move(spans)},
                 {"content_mask", t.content_mask()}};
    item["eot"] = blob.append(t.eot().transpose());
    item["tokens"] = blob.append(t.tokens());
    items.push_back(std::move(item));
  }
  write_bundle(dir, Kind::kText, texts.front().dim(), std::move(items), blob, extra);
}

void write_concept_pool(const fs::path& dir, const ConceptPool& pool, const json& extra) {
  BlobWriter blob;
  json items = json::array();
  for (std::size_t i = 0; i < pool.size(); ++i) {
    items.push_back({{"concept", pool.concepts()[i]},
                     {"vec", blob.append(pool.base_embeddings().row(static_cast<Eigen::Index>(i)))}});
  }
  write_bundle(dir, Kind::kConceptPool, pool.dim(), std::move(items), blob, extra);
}

void write_phrase_table(const fs::path& dir, const PhraseEmbeddingTable& table, const json& extra) {
  BlobWriter blob;
  json items = json::array();
  for (const auto& [key, vec] : table.entries()) {
    items.push_back({{"attribute", key.attribute}, {"object", key.object}, {"vec", blob.append(vec.transpose())}});
  }
  write_bundle(dir, Kind::kPhraseTable, table.dim(), std::move(items), blob, extra);
}

}  // namespace bindscore::bundle
