#include "mpr/format.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include <boost/tokenizer.hpp>

#include "mpr/error.hpp"

namespace mpr {

std::string fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  std::string out = buf;
  // "-0.000" -> "0.000"
  if (out.front() == '-' && out.find_first_not_of("-0.") == std::string::npos) out.erase(0, 1);
  return out;
}

std::string signed_fixed(double value, int decimals) {
  std::string out = fixed(value, decimals);
  if (out.front() != '-' && out.find_first_not_of("0.") != std::string::npos) out.insert(0, "+");
  return out;
}

std::string csv_escape(std::string_view field) {
  if (field.find_first_of(",\"\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  using Tokenizer = boost::tokenizer<boost::escaped_list_separator<char>>;
  // Doubled quotes inside a quoted field, as written by csv_escape.
  const boost::escaped_list_separator<char> sep("\x01", ",", "\"");
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string unescaped;
    unescaped.reserve(line.size());
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') {
        if (quoted && i + 1 < line.size() && line[i + 1] == '"') {
          unescaped += "\x01\"";
          ++i;
          continue;
        }
        quoted = !quoted;
      }
      unescaped += line[i];
    }
    try {
      Tokenizer tok(unescaped, sep);
      rows.emplace_back(tok.begin(), tok.end());
    } catch (const boost::escaped_list_error& e) {
      throw Error(ErrorCode::MalformedTable, path.string() + ": " + e.what());
    }
  }
  return rows;
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "write failed: " + path.string());
}

}  // namespace mpr
