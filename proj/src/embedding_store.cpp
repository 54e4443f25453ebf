#include "mpr/embedding_store.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <unordered_map>

#include <openssl/evp.h>

#include "mpr/error.hpp"

namespace mpr {

namespace {

constexpr std::size_t kHeaderBytes = 4 + 4 + 1 + 4 + 8;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t position() const { return pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw Error(ErrorCode::TruncatedPayload, std::string("file ends inside ") + what);
    }
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 8;
    return v;
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[pos_++];
  }
  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

std::string utc_now_iso8601() {
  const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<std::uint8_t> encode(const EmbeddingMatrix& m) {
  std::vector<std::uint8_t> out;
  std::size_t id_bytes = 0;
  for (const auto& id : m.ids()) id_bytes += 4 + id.size();
  out.reserve(kHeaderBytes + id_bytes + m.values().size() * 4);

  out.insert(out.end(), std::begin(kOmprMagic), std::end(kOmprMagic));
  put_u32(out, kOmprVersion);
  out.push_back(static_cast<std::uint8_t>(m.side()));
  put_u32(out, static_cast<std::uint32_t>(m.dim()));
  put_u64(out, m.rows());
  for (const auto& id : m.ids()) {
    put_u32(out, static_cast<std::uint32_t>(id.size()));
    out.insert(out.end(), id.begin(), id.end());
  }
  for (float f : m.values()) put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::IoFailure, "read failed: " + path.string());
  return bytes;
}

void spit(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

}  // namespace

std::string_view to_string(Side side) noexcept {
  return side == Side::Probe ? "probe" : "gallery";
}

Side side_from_string(std::string_view text) {
  if (text == "probe") return Side::Probe;
  if (text == "gallery") return Side::Gallery;
  throw Error(ErrorCode::InvalidMatrix, "unknown side '" + std::string(text) + "'");
}

void check_model_card(const ModelCard& card) {
  if (!(card.params_millions > 0.0) || !std::isfinite(card.params_millions)) {
    throw Error(ErrorCode::InvalidParams, "params_millions must be positive for " + card.name);
  }
  if (card.resolution_px <= 0) {
    throw Error(ErrorCode::InvalidParams, "resolution_px must be positive for " + card.name);
  }
}

nlohmann::json to_json(const Manifest& manifest) {
  const auto& m = manifest.model;
  return nlohmann::json{{"name", m.name},
                        {"family", m.family},
                        {"params_millions", m.params_millions},
                        {"pretrain_dataset", m.pretrain_dataset},
                        {"resolution_px", m.resolution_px},
                        {"backbone", m.backbone},
                        {"side", to_string(manifest.side)},
                        {"created_at", manifest.created_at},
                        {"checksum", manifest.checksum}};
}

Manifest manifest_from_json(const nlohmann::json& doc) {
  Manifest out;
  try {
    out.model.name = doc.at("name").get<std::string>();
    out.model.family = doc.value("family", "");
    out.model.params_millions = doc.value("params_millions", 0.0);
    out.model.pretrain_dataset = doc.value("pretrain_dataset", "");
    out.model.resolution_px = doc.value("resolution_px", 0);
    out.model.backbone = doc.value("backbone", "");
    out.side = side_from_string(doc.at("side").get<std::string>());
    out.created_at = doc.value("created_at", "");
    out.checksum = doc.at("checksum").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ManifestMissing, std::string("manifest malformed: ") + e.what());
  }
  return out;
}

EmbeddingMatrix::EmbeddingMatrix(std::vector<std::string> ids, std::size_t dim,
                                 std::vector<float> values, Side side)
    : ids_(std::move(ids)), dim_(dim), values_(std::move(values)), side_(side) {
  if (dim_ == 0) throw Error(ErrorCode::InvalidMatrix, "dim must be positive");
  if (values_.size() != ids_.size() * dim_) {
    throw Error(ErrorCode::InvalidMatrix,
                "expected " + std::to_string(ids_.size() * dim_) + " values, got " +
                    std::to_string(values_.size()));
  }
}

bool EmbeddingMatrix::operator==(const EmbeddingMatrix& other) const {
  return side_ == other.side_ && dim_ == other.dim_ && ids_ == other.ids_ &&
         values_.size() == other.values_.size() &&
         (values_.empty() ||
          std::memcmp(values_.data(), other.values_.data(), values_.size() * sizeof(float)) == 0);
}

EmbeddingMatrix l2_normalize(const EmbeddingMatrix& matrix) {
  const std::size_t dim = matrix.dim();
  std::vector<float> out(matrix.values().begin(), matrix.values().end());
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    const auto row = matrix.row(r);
    double sq = 0.0;
    for (float v : row) sq += static_cast<double>(v) * v;
    if (!std::isfinite(sq)) {
      throw Error(ErrorCode::InvalidMatrix, "row " + std::to_string(r) + " is not finite");
    }
    const double norm = std::sqrt(sq);
    if (norm < kZeroNormThreshold) {
      throw Error(ErrorCode::ZeroVectorRow, "row " + std::to_string(r));
    }
    for (std::size_t c = 0; c < dim; ++c) {
      out[r * dim + c] = static_cast<float>(row[c] / norm);
    }
  }
  return EmbeddingMatrix(matrix.ids(), dim, std::move(out), matrix.side());
}

std::string ValidationReport::summary() const {
  std::ostringstream os;
  os << duplicates.size() << " duplicate id(s), " << non_finite.size()
     << " non-finite value(s), " << norm_deviations.size() << " norm deviation(s)";
  if (!duplicates.empty()) os << "; first duplicate '" << duplicates.front().id << "'";
  if (!non_finite.empty()) {
    os << "; first non-finite at (" << non_finite.front().row << "," << non_finite.front().col
       << ")";
  }
  return os.str();
}

ValidationReport validate(const EmbeddingMatrix& matrix) {
  ValidationReport report;
  std::unordered_map<std::string_view, std::size_t> seen;
  seen.reserve(matrix.rows());
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    const auto [it, inserted] = seen.emplace(matrix.ids()[r], r);
    if (!inserted) report.duplicates.push_back({matrix.ids()[r], it->second, r});
  }
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    const auto row = matrix.row(r);
    bool finite = true;
    double sq = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (!std::isfinite(row[c])) {
        report.non_finite.push_back({r, c});
        finite = false;
      }
      sq += static_cast<double>(row[c]) * row[c];
    }
    if (finite) {
      const double norm = std::sqrt(sq);
      if (std::abs(norm - 1.0) > kNormTolerance) report.norm_deviations.push_back({r, norm});
    }
  }
  return report;
}

std::filesystem::path sidecar_path(const std::filesystem::path& file) {
  auto p = file;
  p += ".json";
  return p;
}

std::string content_checksum(std::span<const std::uint8_t> bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorCode::IoFailure, "sha256 failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out = "sha256:";
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xF]);
  }
  return out;
}

Manifest write_embeddings(const EmbeddingMatrix& matrix, Manifest manifest,
                          const std::filesystem::path& destination) {
  const auto report = validate(matrix);
  if (!report.duplicates.empty() || !report.non_finite.empty()) {
    throw Error(ErrorCode::InvalidMatrix, report.summary());
  }
  for (const auto& id : matrix.ids()) {
    if (id.size() > UINT32_MAX) throw Error(ErrorCode::InvalidMatrix, "id too long");
  }
  if (matrix.dim() > UINT32_MAX) throw Error(ErrorCode::InvalidMatrix, "dim too large");

  const auto bytes = encode(matrix);
  manifest.side = matrix.side();
  manifest.checksum = content_checksum(bytes);
  if (manifest.created_at.empty()) manifest.created_at = utc_now_iso8601();

  spit(destination, bytes);
  const std::string doc = to_json(manifest).dump(2) + "\n";
  spit(sidecar_path(destination),
       std::span(reinterpret_cast<const std::uint8_t*>(doc.data()), doc.size()));
  return manifest;
}

StoredEmbeddings read_embeddings(const std::filesystem::path& source) {
  const auto bytes = slurp(source);
  ByteReader in(bytes);

  const std::size_t magic_len = std::min<std::size_t>(4, bytes.size());
  if (magic_len == 0 || std::memcmp(bytes.data(), kOmprMagic, magic_len) != 0) {
    throw Error(ErrorCode::BadMagic, source.string() + " is not an OMPR file");
  }
  in.take(4, "magic");
  const std::uint32_t version = in.u32("header");
  if (version != kOmprVersion) {
    throw Error(ErrorCode::UnsupportedVersion, "version " + std::to_string(version));
  }
  const std::uint8_t side_byte = in.u8("header");
  if (side_byte > 1) {
    throw Error(ErrorCode::InvalidMatrix, "side byte " + std::to_string(side_byte));
  }
  const std::uint32_t dim = in.u32("header");
  const std::uint64_t count = in.u64("header");
  if (dim == 0) throw Error(ErrorCode::InvalidMatrix, "dim is zero");

  std::vector<std::string> ids;
  // Each id needs at least its 4-byte length prefix.
  if (count > in.remaining() / 4) throw Error(ErrorCode::TruncatedPayload, "file ends inside id table");
  ids.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint32_t len = in.u32("id table");
    const auto raw = in.take(len, "id table");
    ids.emplace_back(reinterpret_cast<const char*>(raw.data()), raw.size());
  }

  const std::uint64_t n_values = count * dim;
  if (n_values > in.remaining() / 4) {
    throw Error(ErrorCode::TruncatedPayload, "expected " + std::to_string(n_values * 4) +
                                                 " payload bytes, found " +
                                                 std::to_string(in.remaining()));
  }
  std::vector<float> values(n_values);
  for (auto& v : values) v = std::bit_cast<float>(in.u32("payload"));
  if (in.remaining() != 0) {
    throw Error(ErrorCode::TrailingData, std::to_string(in.remaining()) + " bytes after payload");
  }

  const auto side_path = sidecar_path(source);
  if (!std::filesystem::exists(side_path)) {
    throw Error(ErrorCode::ManifestMissing, side_path.string());
  }
  const auto side_bytes = slurp(side_path);
  nlohmann::json doc = nlohmann::json::parse(side_bytes.begin(), side_bytes.end(), nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::ManifestMissing, side_path.string() + " is not JSON");
  Manifest manifest = manifest_from_json(doc);

  const std::string actual = content_checksum(bytes);
  if (actual != manifest.checksum) {
    throw Error(ErrorCode::ChecksumMismatch,
                source.string() + ": manifest " + manifest.checksum + ", payload " + actual);
  }
  const Side side = static_cast<Side>(side_byte);
  if (manifest.side != side) {
    throw Error(ErrorCode::InvalidMatrix, "manifest side disagrees with file header");
  }

  EmbeddingMatrix matrix(std::move(ids), dim, std::move(values), side);
  const auto report = validate(matrix);
  if (!report.duplicates.empty() || !report.non_finite.empty()) {
    throw Error(ErrorCode::InvalidMatrix, report.summary());
  }
  return {std::move(matrix), std::move(manifest)};
}

}  // namespace mpr
