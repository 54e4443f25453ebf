#include "mpr/tokenizer.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <optional>

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <zlib.h>

#include "mpr/error.hpp"

namespace mpr {

namespace {

constexpr std::string_view kSpecialTokens[] = {"<start_of_text>", "<end_of_text>"};
constexpr std::string_view kContractions[] = {"'s", "'t", "'re", "'ve", "'m", "'ll", "'d"};

void append_utf8(std::string& out, char32_t cp) {
  icu::UnicodeString(static_cast<UChar32>(cp)).toUTF8String(out);
}

// GPT-2 style reversible byte -> printable code point table.
std::array<char32_t, 256> byte_code_points() {
  std::array<char32_t, 256> table{};
  std::array<bool, 256> direct{};
  auto keep = [&](int lo, int hi) {
    for (int b = lo; b <= hi; ++b) direct[b] = true;
  };
  keep('!', '~');
  keep(0xA1, 0xAC);
  keep(0xAE, 0xFF);
  char32_t next = 256;
  for (int b = 0; b < 256; ++b) table[b] = direct[b] ? static_cast<char32_t>(b) : next++;
  return table;
}

std::string read_gzip(const std::filesystem::path& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (!f) throw Error(ErrorCode::VocabularyMissing, path.string());
  std::string out;
  char buf[1 << 16];
  int n = 0;
  while ((n = gzread(f, buf, sizeof buf)) > 0) out.append(buf, static_cast<std::size_t>(n));
  const bool failed = n < 0;
  gzclose(f);
  if (failed) throw Error(ErrorCode::VocabularyMissing, "corrupt gzip " + path.string());
  return out;
}

bool is_letter(char32_t c) { return u_isalpha(static_cast<UChar32>(c)); }

bool is_number(char32_t c) {
  const auto type = u_charType(static_cast<UChar32>(c));
  return type == U_DECIMAL_DIGIT_NUMBER || type == U_LETTER_NUMBER || type == U_OTHER_NUMBER;
}

bool is_space(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)); }

std::u32string to_u32(std::string_view utf8) {
  const auto us = icu::UnicodeString::fromUTF8(icu::StringPiece(utf8.data(), static_cast<int32_t>(utf8.size())));
  std::u32string out;
  out.reserve(static_cast<std::size_t>(us.length()));
  for (int32_t i = 0; i < us.length();) {
    const UChar32 cp = us.char32At(i);
    out.push_back(static_cast<char32_t>(cp));
    i = us.moveIndex32(i, 1);
  }
  return out;
}

std::string to_utf8(std::u32string_view text) {
  std::string out;
  for (char32_t c : text) append_utf8(out, c);
  return out;
}

std::optional<char32_t> named_entity(std::string_view name) {
  static const std::pair<std::string_view, char32_t> table[] = {
      {"amp", U'&'},     {"lt", U'<'},      {"gt", U'>'},      {"quot", U'"'},
      {"apos", U'\''},   {"nbsp", U' '}, {"reg", U'®'}, {"copy", U'©'},
      {"trade", U'™'}, {"deg", U'°'}, {"frac12", U'½'}, {"ndash", U'–'},
      {"mdash", U'—'}, {"rsquo", U'’'}, {"lsquo", U'‘'}, {"rdquo", U'”'},
      {"ldquo", U'“'}, {"eacute", U'é'}, {"hellip", U'…'}};
  for (const auto& [n, c] : table) {
    if (n == name) return c;
  }
  return std::nullopt;
}

// Subset of HTML entity decoding: named entities above and numeric forms.
std::string html_unescape(std::string_view in) {
  std::string out;
  out.reserve(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] != '&') {
      out += in[i];
      continue;
    }
    const auto semi = in.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 12) {
      out += in[i];
      continue;
    }
    const auto body = in.substr(i + 1, semi - i - 1);
    std::optional<char32_t> cp;
    if (body.size() > 1 && body[0] == '#') {
      const bool hex = body[1] == 'x' || body[1] == 'X';
      const std::string digits(body.substr(hex ? 2 : 1));
      char* end = nullptr;
      const unsigned long v = std::strtoul(digits.c_str(), &end, hex ? 16 : 10);
      if (!digits.empty() && end && *end == '\0' && v > 0 && v <= 0x10FFFF) {
        cp = static_cast<char32_t>(v);
      }
    } else {
      cp = named_entity(body);
    }
    if (!cp) {
      out += in[i];
      continue;
    }
    append_utf8(out, *cp);
    i = semi;
  }
  return out;
}

std::u32string fix_glyphs(std::u32string text) {
  std::u32string out;
  out.reserve(text.size());
  for (char32_t c : text) {
    switch (c) {
      case U'‘': case U'’': case U'‚': case U'‛':
        out += U'\'';
        break;
      case U'“': case U'”': case U'„': case U'‟':
        out += U'"';
        break;
      case U'ﬀ': out += U"ff"; break;
      case U'ﬁ': out += U"fi"; break;
      case U'ﬂ': out += U"fl"; break;
      case U'ﬃ': out += U"ffi"; break;
      case U'ﬄ': out += U"ffl"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string clean_text(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  std::string normalized;
  if (U_SUCCESS(status)) {
    const auto us = icu::UnicodeString::fromUTF8(
        icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
    nfc->normalize(us, status).toUTF8String(normalized);
  }
  if (U_FAILURE(status)) normalized.assign(text);

  const std::string unescaped = html_unescape(html_unescape(to_utf8(fix_glyphs(to_u32(normalized)))));

  // Collapse whitespace runs to one space and trim.
  std::u32string collapsed;
  bool pending_space = false;
  for (char32_t c : to_u32(unescaped)) {
    if (is_space(c)) {
      pending_space = !collapsed.empty();
      continue;
    }
    if (pending_space) collapsed += U' ';
    pending_space = false;
    collapsed += c;
  }

  icu::UnicodeString lower = icu::UnicodeString::fromUTF8(to_utf8(collapsed));
  lower.toLower(icu::Locale::getRoot());
  std::string out;
  lower.toUTF8String(out);
  return out;
}

std::filesystem::path default_vocabulary_path() {
  if (const char* env = std::getenv("MPR_BPE_VOCAB")) return env;
  return std::filesystem::path(MPR_DEFAULT_DATA_DIR) / "bpe_simple_vocab_16e6.txt.gz";
}

BpeTokenizer BpeTokenizer::load(const std::filesystem::path& merges_gz) {
  if (!std::filesystem::exists(merges_gz)) {
    throw Error(ErrorCode::VocabularyMissing, merges_gz.string());
  }
  const std::string content = read_gzip(merges_gz);

  BpeTokenizer tok;
  const auto table = byte_code_points();
  for (int b = 0; b < 256; ++b) append_utf8(tok.byte_symbol_[b], table[b]);

  std::size_t pos = content.find('\n');  // skip the version line
  std::size_t rank = 0;
  while (pos != std::string::npos && rank < kMergeCount) {
    const std::size_t start = pos + 1;
    pos = content.find('\n', start);
    std::string_view line(content.data() + start,
                          (pos == std::string::npos ? content.size() : pos) - start);
    if (line.empty()) continue;
    const auto space = line.find(' ');
    if (space == std::string_view::npos) continue;
    tok.ranks_.emplace(std::string(line), rank++);
  }
  if (tok.ranks_.empty()) throw Error(ErrorCode::VocabularyMissing, "no merges in " + merges_gz.string());
  return tok;
}

void BpeTokenizer::bpe(const std::string& word, std::vector<std::string>& out) const {
  // Split the byte-encoded word into code points; the last symbol carries "</w>".
  std::vector<std::string> symbols;
  for (std::size_t i = 0; i < word.size();) {
    const auto lead = static_cast<unsigned char>(word[i]);
    const std::size_t len = lead < 0x80 ? 1 : lead < 0xE0 ? 2 : lead < 0xF0 ? 3 : 4;
    symbols.emplace_back(word.substr(i, len));
    i += len;
  }
  if (symbols.empty()) return;
  symbols.back() += "</w>";

  std::string key;
  while (symbols.size() > 1) {
    std::size_t best_rank = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      key.assign(symbols[i]).append(" ").append(symbols[i + 1]);
      const auto it = ranks_.find(key);
      if (it != ranks_.end() && it->second < best_rank) best_rank = it->second;
    }
    if (best_rank == std::numeric_limits<std::size_t>::max()) break;

    // Merge every non-overlapping occurrence of the best pair, left to right.
    std::string first, second;
    for (std::size_t i = 0; i + 1 < symbols.size(); ++i) {
      key.assign(symbols[i]).append(" ").append(symbols[i + 1]);
      const auto it = ranks_.find(key);
      if (it != ranks_.end() && it->second == best_rank) {
        first = symbols[i];
        second = symbols[i + 1];
        break;
      }
    }
    std::vector<std::string> merged;
    merged.reserve(symbols.size());
    for (std::size_t i = 0; i < symbols.size();) {
      if (i + 1 < symbols.size() && symbols[i] == first && symbols[i + 1] == second) {
        merged.push_back(first + second);
        i += 2;
      } else {
        merged.push_back(std::move(symbols[i]));
        ++i;
      }
    }
    symbols = std::move(merged);
  }
  for (auto& s : symbols) out.push_back(std::move(s));
}

std::vector<std::string> BpeTokenizer::tokenize(std::string_view text) const {
  const std::string cleaned = clean_text(text);
  const std::u32string cps = to_u32(cleaned);
  std::vector<std::string> pieces;

  auto emit = [&](std::size_t begin, std::size_t end) {
    const std::string raw = to_utf8(std::u32string_view(cps).substr(begin, end - begin));
    std::string encoded;
    for (unsigned char b : raw) encoded += byte_symbol_[b];
    bpe(encoded, pieces);
  };
  auto starts_with = [&](std::size_t i, std::string_view ascii) {
    if (i + ascii.size() > cps.size()) return false;
    for (std::size_t k = 0; k < ascii.size(); ++k) {
      if (cps[i + k] != static_cast<char32_t>(ascii[k])) return false;
    }
    return true;
  };

  // Alternation order mirrors the reference pattern:
  // specials | contractions | letters+ | single digit | other-non-space+
  std::size_t i = 0;
  while (i < cps.size()) {
    const char32_t c = cps[i];
    bool matched = false;
    for (auto special : kSpecialTokens) {
      if (starts_with(i, special)) {
        pieces.emplace_back(special);
        i += special.size();
        matched = true;
        break;
      }
    }
    if (matched) continue;
    for (auto contraction : kContractions) {
      if (starts_with(i, contraction)) {
        emit(i, i + contraction.size());
        i += contraction.size();
        matched = true;
        break;
      }
    }
    if (matched) continue;

    std::size_t j = i;
    if (is_letter(c)) {
      while (j < cps.size() && is_letter(cps[j])) ++j;
    } else if (is_number(c)) {
      j = i + 1;
    } else if (!is_space(c)) {
      while (j < cps.size() && !is_space(cps[j]) && !is_letter(cps[j]) && !is_number(cps[j])) ++j;
    } else {
      ++i;
      continue;
    }
    emit(i, j);
    i = j;
  }
  return pieces;
}

}  // namespace mpr
