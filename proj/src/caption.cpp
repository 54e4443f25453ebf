#include "mpr/caption.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <random>
#include <thread>

#include "mpr/error.hpp"
#include "mpr/format.hpp"

namespace mpr {

namespace {

constexpr std::string_view kRoleLine =
    "You are a helpful assistant that generates descriptions for grocery products.";
constexpr std::string_view kDefaultPath = "/v1/chat/completions";
const std::vector<std::string> kAttributeColumns = {"brand", "color", "size", "form", "shape", "packaging"};

struct ParsedUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::InvalidArgument, "endpoint url needs a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, std::string(kDefaultPath)};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

CaptionJob build_prompt(const ProductMetadata& metadata, int token_budget) {
  if (metadata.sku_id.empty()) throw Error(ErrorCode::EmptyMetadata, "sku_id is empty");
  if (metadata.raw_description.empty()) {
    throw Error(ErrorCode::EmptyMetadata, "raw_description is empty for " + metadata.sku_id);
  }
  if (token_budget <= 0) {
    throw Error(ErrorCode::InvalidArgument, "token budget must be positive");
  }

  CaptionJob job;
  job.metadata = metadata;
  job.token_budget = token_budget;
  job.system_prompt = std::string(kRoleLine);

  std::string& u = job.user_prompt;
  u += "Generate a concise product description in \xE2\x89\xA4" + std::to_string(token_budget) +
       " tokens given the product metadata. Output a JSON object with key \"label\".\n";
  u += "\nConstraints:\n";
  u += "- Start with \"The product is ...\" in every description.\n";
  u += "- Prioritize prominent visual attributes from the tag description including color, "
       "shape, brand, size, packaging, and form.\n";
  u += "\nProduct metadata:\n";
  u += "SKU: " + metadata.sku_id + "\n";
  u += "Description: " + metadata.raw_description + "\n";
  u += "Tag description: " + metadata.tag_description + "\n";
  for (const auto& a : metadata.attributes) u += a.kind + ": " + a.value + "\n";
  return job;
}

std::string parse_caption_response(const std::string& body) {
  const auto envelope = nlohmann::json::parse(body, nullptr, false);
  if (envelope.is_discarded() || !envelope.is_object()) {
    throw Error(ErrorCode::MalformedResponse, "response body is not JSON");
  }
  const auto choices = envelope.find("choices");
  if (choices == envelope.end() || !choices->is_array() || choices->empty()) {
    throw Error(ErrorCode::MalformedResponse, "response has no choices");
  }
  const auto& message = (*choices)[0].value("message", nlohmann::json::object());
  const auto content = message.find("content");
  if (content == message.end() || !content->is_string()) {
    throw Error(ErrorCode::MalformedResponse, "choice has no message content");
  }

  // Some servers wrap JSON replies in a markdown fence.
  std::string text = content->get<std::string>();
  const auto open = text.find('{');
  const auto close = text.rfind('}');
  if (open == std::string::npos || close == std::string::npos || close < open) {
    throw Error(ErrorCode::MalformedResponse, "assistant content is not a JSON object");
  }
  const auto reply = nlohmann::json::parse(text.substr(open, close - open + 1), nullptr, false);
  if (reply.is_discarded() || !reply.is_object()) {
    throw Error(ErrorCode::MalformedResponse, "assistant content is not a JSON object");
  }
  const auto label = reply.find("label");
  if (label == reply.end() || !label->is_string()) {
    throw Error(ErrorCode::MissingLabelKey, "assistant reply lacks a string \"label\"");
  }
  return label->get<std::string>();
}

std::string request_caption(const CaptionJob& job, const EndpointConfig& config) {
  const auto url = split_url(config.url);
  httplib::Client client(url.origin);
  client.set_connection_timeout(config.timeout);
  client.set_read_timeout(config.timeout);
  client.set_write_timeout(config.timeout);
  if (!config.token.empty()) client.set_bearer_token_auth(config.token);

  const nlohmann::json request = {
      {"model", config.model},
      {"temperature", 0},
      {"response_format", {{"type", "json_object"}}},
      {"messages",
       nlohmann::json::array({{{"role", "system"}, {"content", job.system_prompt}},
                              {{"role", "user"}, {"content", job.user_prompt}}})}};
  const std::string payload = request.dump();

  const int attempts = std::max(1, config.attempts);
  auto backoff = config.backoff;
  std::optional<Error> last;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    const auto res = client.Post(url.path, payload, "application/json");
    if (!res) {
      last = Error(ErrorCode::EndpointUnreachable,
                   config.url + ": " + httplib::to_string(res.error()));
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      last = Error(ErrorCode::MalformedResponse, "HTTP status " + std::to_string(res->status));
      continue;
    }
    try {
      return parse_caption_response(res->body);
    } catch (const Error& e) {
      last = e;
    }
  }
  throw Error(last->code(), std::string(last->what()) + " (after " + std::to_string(attempts) + " attempts)");
}

CaptionAudit audit_caption(const std::string& caption, const ProductMetadata& metadata,
                           int token_budget, const BpeTokenizer& tokenizer) {
  CaptionAudit audit;
  audit.sku_id = metadata.sku_id;
  audit.caption = caption;
  audit.token_count = tokenizer.count_tokens(caption);
  audit.token_compliant = token_budget > 0 && audit.token_count <= static_cast<std::size_t>(token_budget);
  audit.prefix_ok = caption.starts_with(kCaptionPrefix);

  const std::string haystack = clean_text(caption);
  for (const auto& a : metadata.attributes) {
    const std::string needle = clean_text(a.value);
    if (needle.empty() || haystack.find(needle) != std::string::npos) {
      audit.retained_attributes.push_back(a);
    } else {
      audit.missing_attributes.push_back(a);
    }
  }
  audit.pass = audit.token_compliant && audit.prefix_ok && audit.missing_attributes.empty();
  return audit;
}

std::string to_jsonl(const CaptionAudit& audit) {
  auto attrs = [](const std::vector<Attribute>& list) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& a : list) arr.push_back({{"kind", a.kind}, {"value", a.value}});
    return arr;
  };
  const nlohmann::ordered_json j = {{"sku_id", audit.sku_id},
                                    {"caption", audit.caption},
                                    {"token_count", audit.token_count},
                                    {"token_compliant", audit.token_compliant},
                                    {"prefix_ok", audit.prefix_ok},
                                    {"retained_attributes", attrs(audit.retained_attributes)},
                                    {"missing_attributes", attrs(audit.missing_attributes)},
                                    {"pass", audit.pass}};
  return j.dump() + "\n";
}

std::vector<std::size_t> sample_for_review(std::size_t catalog_size, std::size_t sample_size,
                                           std::uint64_t seed) {
  std::vector<std::size_t> all(catalog_size);
  for (std::size_t i = 0; i < catalog_size; ++i) all[i] = i;
  std::vector<std::size_t> picked;
  std::mt19937_64 rng(seed);
  std::sample(all.begin(), all.end(), std::back_inserter(picked), std::min(sample_size, catalog_size), rng);
  return picked;  // std::sample keeps relative order
}

namespace {

CatalogEntry entry_from_fields(const std::map<std::string, std::string>& fields) {
  auto get = [&](const std::string& key) {
    const auto it = fields.find(key);
    return it == fields.end() ? std::string{} : it->second;
  };
  CatalogEntry e;
  e.metadata.sku_id = get("sku_id");
  e.metadata.raw_description = get("raw_description");
  e.metadata.tag_description = get("tag_description");
  e.caption = get("caption");
  for (const auto& kind : kAttributeColumns) {
    const auto value = get(kind);
    if (!value.empty()) e.metadata.attributes.push_back({kind, value});
  }
  return e;
}

bool is_jsonl(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return ext == ".jsonl" || ext == ".ndjson";
}

}  // namespace

std::vector<CatalogEntry> read_catalog(const std::filesystem::path& path) {
  std::vector<CatalogEntry> out;
  if (is_jsonl(path)) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      const auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.is_object()) {
        throw Error(ErrorCode::MalformedTable, path.string() + ": line " + std::to_string(line_no) + " is not a JSON object");
      }
      std::map<std::string, std::string> fields;
      for (const auto& [k, v] : j.items()) {
        if (v.is_string()) fields[k] = v.get<std::string>();
      }
      if (const auto attrs = j.find("attributes"); attrs != j.end() && attrs->is_object()) {
        for (const auto& [k, v] : attrs->items()) {
          if (v.is_string()) fields[k] = v.get<std::string>();
        }
      }
      out.push_back(entry_from_fields(fields));
    }
    return out;
  }

  const auto rows = read_csv(path);
  if (rows.empty()) return out;
  const auto& header = rows.front();
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != header.size()) {
      throw Error(ErrorCode::MalformedTable, path.string() + ": line " + std::to_string(r + 1) + " has " +
                                                 std::to_string(rows[r].size()) + " fields");
    }
    std::map<std::string, std::string> fields;
    for (std::size_t c = 0; c < header.size(); ++c) fields[header[c]] = rows[r][c];
    out.push_back(entry_from_fields(fields));
  }
  return out;
}

void write_catalog(const std::vector<CatalogEntry>& catalog, const std::filesystem::path& path) {
  std::string text;
  if (is_jsonl(path)) {
    for (const auto& e : catalog) {
      nlohmann::ordered_json j = {{"sku_id", e.metadata.sku_id},
                                  {"raw_description", e.metadata.raw_description},
                                  {"tag_description", e.metadata.tag_description}};
      for (const auto& a : e.metadata.attributes) j[a.kind] = a.value;
      j["caption"] = e.caption;
      text += j.dump() + "\n";
    }
  } else {
    text = "sku_id,raw_description,tag_description";
    for (const auto& k : kAttributeColumns) text += "," + k;
    text += ",caption\n";
    for (const auto& e : catalog) {
      text += csv_escape(e.metadata.sku_id) + "," + csv_escape(e.metadata.raw_description) + "," +
              csv_escape(e.metadata.tag_description);
      for (const auto& k : kAttributeColumns) {
        std::string value;
        for (const auto& a : e.metadata.attributes) {
          if (a.kind == k) value = a.value;
        }
        text += "," + csv_escape(value);
      }
      text += "," + csv_escape(e.caption) + "\n";
    }
  }
  write_text(path, text);
}

}  // namespace mpr
