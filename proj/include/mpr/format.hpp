#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace mpr {

/// Fixed-point text with `decimals` digits ("0.770"). Negative zero prints
/// without a sign.
std::string fixed(double value, int decimals);

/// Like fixed() with an explicit leading sign for non-zero values ("+11.8").
std::string signed_fixed(double value, int decimals);

std::string csv_escape(std::string_view field);

/// Rows of a comma-separated file with quoted-field support. Empty lines are
/// skipped; the header row is returned as the first row.
std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace mpr
