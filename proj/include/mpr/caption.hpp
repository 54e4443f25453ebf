#pragma once

// Catalog caption refinement: prompt rendering, a chat-completion client that
// extracts {"label": ...} from the assistant reply, and the caption audit.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mpr/tokenizer.hpp"

namespace mpr {

struct Attribute {
  std::string kind;   // brand, color, size, form, ...
  std::string value;

  bool operator==(const Attribute&) const = default;
};

struct ProductMetadata {
  std::string sku_id;
  std::string raw_description;
  std::string tag_description;
  std::vector<Attribute> attributes;
};

inline constexpr int kDefaultTokenBudget = 77;
inline constexpr std::string_view kCaptionPrefix = "The product is";

struct CaptionJob {
  ProductMetadata metadata;
  std::string system_prompt;
  std::string user_prompt;
  int token_budget = kDefaultTokenBudget;

  /// Full rendered text: system prompt, blank line, user prompt.
  std::string prompt() const { return system_prompt + "\n\n" + user_prompt; }
};

/// Throws EmptyMetadata for an empty sku_id or raw_description, and
/// InvalidArgument for a non-positive budget.
CaptionJob build_prompt(const ProductMetadata& metadata, int token_budget = kDefaultTokenBudget);

struct EndpointConfig {
  std::string url;    // full chat-completions URL, http:// or https://
  std::string token;  // bearer token, may be empty
  std::string model = "llama-3.1-8b-instruct";
  int attempts = 3;
  std::chrono::milliseconds backoff{200};  // doubled after each failed attempt
  std::chrono::seconds timeout{60};
};

/// Sends the job and returns the "label" string from the assistant reply.
/// Transport failures and unparsable replies are retried up to
/// config.attempts times. Errors: EndpointUnreachable (every attempt failed
/// to connect), MalformedResponse, MissingLabelKey.
std::string request_caption(const CaptionJob& job, const EndpointConfig& config);

/// Extracts the label from a chat-completion response body (exposed for tests).
std::string parse_caption_response(const std::string& body);

struct CaptionAudit {
  std::string sku_id;
  std::string caption;
  std::size_t token_count = 0;
  bool token_compliant = false;
  bool prefix_ok = false;
  std::vector<Attribute> retained_attributes;
  std::vector<Attribute> missing_attributes;
  bool pass = false;
};

CaptionAudit audit_caption(const std::string& caption, const ProductMetadata& metadata,
                           int token_budget, const BpeTokenizer& tokenizer);

std::string to_jsonl(const CaptionAudit& audit);

/// Picks sample_size distinct catalog positions with a seeded generator, sorted
/// ascending. Different seeds give independent review passes.
std::vector<std::size_t> sample_for_review(std::size_t catalog_size, std::size_t sample_size,
                                           std::uint64_t seed);

struct CatalogEntry {
  ProductMetadata metadata;
  std::string caption;
};

/// Reads .jsonl (one object per line) or CSV. Columns: sku_id, raw_description,
/// tag_description, caption, and optional brand/color/size/form/shape/packaging.
std::vector<CatalogEntry> read_catalog(const std::filesystem::path& path);
void write_catalog(const std::vector<CatalogEntry>& catalog, const std::filesystem::path& path);

}  // namespace mpr
