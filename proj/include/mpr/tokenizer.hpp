#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mpr {

/// Byte-level BPE tokenizer compatible with the CLIP text encoder. Loads the
/// gzip merge table shipped with the encoder (first line is a version header;
/// the first 48894 merges are used). Text is NFC-normalized, HTML-unescaped,
/// whitespace-collapsed and lowercased before pre-tokenization.
///
/// Immutable after load; safe for concurrent use.
class BpeTokenizer {
 public:
  static constexpr std::size_t kBoundaryMarkers = 2;  // start + end of text
  static constexpr std::size_t kMergeCount = 49152 - 256 - 2;

  /// Throws VocabularyMissing when the file is absent or unreadable.
  static BpeTokenizer load(const std::filesystem::path& merges_gz);

  /// BPE pieces (byte-encoded, "</w>" marks word ends), without markers.
  std::vector<std::string> tokenize(std::string_view text) const;

  /// Number of encoder positions the text occupies, markers included.
  std::size_t count_tokens(std::string_view text) const {
    return tokenize(text).size() + kBoundaryMarkers;
  }

  std::size_t merge_count() const noexcept { return ranks_.size(); }

 private:
  BpeTokenizer() = default;
  void bpe(const std::string& word, std::vector<std::string>& out) const;

  std::unordered_map<std::string, std::size_t> ranks_;  // "left right" -> rank
  std::array<std::string, 256> byte_symbol_{};
};

/// Text cleanup applied before tokenization (exposed for tests).
std::string clean_text(std::string_view text);

/// Default location of the shipped merge table.
std::filesystem::path default_vocabulary_path();

}  // namespace mpr
