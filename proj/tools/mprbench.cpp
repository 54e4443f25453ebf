// mprbench: ingest embeddings, evaluate retrieval, rebuild efficiency
// reports and refine catalog captions.

#include <iostream>

#include <CLI11.hpp>

#include "mpr/commands.hpp"

int main(int argc, char** argv) {
  mpr::RunConfig config;
  const std::filesystem::path data_dir = MPR_DEFAULT_DATA_DIR;
  config.reference = data_dir / "reference_results.csv";
  config.published = data_dir / "published_cells.csv";

  CLI::App app{"Multimodal product retrieval benchmark"};
  app.set_config("--config", "", "key=value settings file; flags override it");
  app.fallthrough();
  app.require_subcommand(1);

  std::string probes, gallery, truth, reference = config.reference.string(),
                                      published = config.published.string(), catalog, vocab,
                                      out_dir = config.out_dir.string();
  int backoff_ms = static_cast<int>(config.endpoint.backoff.count());
  int timeout_s = static_cast<int>(config.endpoint.timeout.count());

  app.add_option("--probes", probes, "probe-side .ompr file");
  app.add_option("--gallery", gallery, "gallery-side .ompr file");
  app.add_option("--truth", truth, "CSV with probe_id,gallery_id");
  app.add_option("--k", config.ks, "Recall@K cutoffs")->delimiter(',')->capture_default_str();
  app.add_option("--out", out_dir, "output directory")->capture_default_str();
  app.add_option("--reference", reference, "reference results CSV")->capture_default_str();
  app.add_option("--published", published, "published cell values to compare against (empty to skip)")
      ->capture_default_str();
  app.add_option("--catalog", catalog, "catalog CSV or JSON-lines");
  app.add_option("--vocab", vocab, "BPE merge table (.txt.gz)");
  app.add_option("--endpoint-url", config.endpoint.url, "chat-completions URL");
  app.add_option("--endpoint-token", config.endpoint.token, "bearer token")->envname("MPR_ENDPOINT_TOKEN");
  app.add_option("--endpoint-model", config.endpoint.model, "model name sent to the endpoint")
      ->capture_default_str();
  app.add_option("--retries", config.endpoint.attempts, "attempts per caption request")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--backoff-ms", backoff_ms, "initial retry backoff")->capture_default_str();
  app.add_option("--timeout", timeout_s, "request timeout in seconds")->capture_default_str();
  app.add_option("--token-budget", config.token_budget, "caption token limit")->capture_default_str();
  app.add_flag("--audit-only", config.audit_only, "audit the catalog's existing captions");
  app.add_option("--review-sample", config.review_sample, "rows per seeded review pass (0 disables)");
  app.add_option("--review-seeds", config.review_seeds, "seeds for review passes")->delimiter(',');
  app.add_option("--workers", config.workers, "threads (0 = all cores)")->capture_default_str();

  app.add_subcommand("ingest", "read and validate embedding files")
      ->callback([&] { config.command = mpr::Command::Ingest; });
  app.add_subcommand("eval", "score, rank and write Recall@K / CMC reports")
      ->callback([&] { config.command = mpr::Command::Eval; });
  app.add_subcommand("reproduce", "rebuild the efficiency and ablation reports")
      ->callback([&] { config.command = mpr::Command::Reproduce; });
  app.add_subcommand("caption", "generate and audit catalog captions")
      ->callback([&] { config.command = mpr::Command::Caption; });

  CLI11_PARSE(app, argc, argv);

  config.probes = probes;
  config.gallery = gallery;
  config.truth = truth;
  config.reference = reference;
  config.published = published;
  config.catalog = catalog;
  config.vocabulary = vocab;
  config.out_dir = out_dir;
  config.endpoint.backoff = std::chrono::milliseconds(backoff_ms);
  config.endpoint.timeout = std::chrono::seconds(timeout_s);
  return mpr::run(config, std::cout, std::cerr);
}
