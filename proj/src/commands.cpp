#include "mpr/commands.hpp"

#include <atomic>
#include <iomanip>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>

#include "mpr/error.hpp"
#include "mpr/format.hpp"
#include "mpr/reproduce.hpp"
#include "mpr/retrieval_metrics.hpp"
#include "mpr/similarity.hpp"

namespace mpr {

namespace {

void require_file(const std::filesystem::path& path, const char* flag) {
  if (path.empty()) throw Error(ErrorCode::InvalidArgument, std::string(flag) + " is required");
  if (!std::filesystem::is_regular_file(path)) {
    throw Error(ErrorCode::IoFailure, std::string(flag) + " " + path.string() + " does not exist");
  }
}

std::string percent(std::size_t part, std::size_t whole) {
  return whole == 0 ? "n/a" : fixed(100.0 * static_cast<double>(part) / static_cast<double>(whole), 1) + "%";
}

StoredEmbeddings load_side(const std::filesystem::path& path, Side expected) {
  auto stored = read_embeddings(path);
  if (stored.matrix.side() != expected) {
    throw Error(ErrorCode::InvalidArgument, path.string() + " holds " +
                                                std::string(to_string(stored.matrix.side())) +
                                                " embeddings, expected " + std::string(to_string(expected)));
  }
  return stored;
}

}  // namespace

void check_config(const RunConfig& config) {
  switch (config.command) {
    case Command::Ingest:
      if (config.probes.empty() && config.gallery.empty()) {
        throw Error(ErrorCode::InvalidArgument, "ingest needs --probes and/or --gallery");
      }
      if (!config.probes.empty()) require_file(config.probes, "--probes");
      if (!config.gallery.empty()) require_file(config.gallery, "--gallery");
      break;
    case Command::Eval:
      require_file(config.probes, "--probes");
      require_file(config.gallery, "--gallery");
      require_file(config.truth, "--truth");
      if (config.ks.empty()) throw Error(ErrorCode::InvalidArgument, "--k needs at least one value");
      for (auto k : config.ks) {
        if (k == 0) throw Error(ErrorCode::KOutOfRange, "K values must be positive");
      }
      break;
    case Command::Reproduce:
      require_file(config.reference, "--reference");
      if (!config.published.empty()) require_file(config.published, "--published");
      break;
    case Command::Caption:
      require_file(config.catalog, "--catalog");
      if (config.token_budget <= 0) throw Error(ErrorCode::InvalidArgument, "--token-budget must be positive");
      if (!config.audit_only && config.endpoint.url.empty()) {
        throw Error(ErrorCode::InvalidArgument, "--endpoint-url is required unless --audit-only");
      }
      break;
  }
  if (config.workers < 0) throw Error(ErrorCode::InvalidArgument, "--workers must be >= 0");
}

int cmd_ingest(const RunConfig& config, std::ostream& out, std::ostream& err) {
  check_config(config);
  std::optional<StoredEmbeddings> probes, gallery;
  bool clean = true;
  auto report = [&](const char* label, const StoredEmbeddings& s) {
    const auto v = validate(s.matrix);
    out << label << ": " << s.matrix.rows() << " x " << s.matrix.dim() << " (" << s.manifest.model.name
        << ", " << to_string(s.matrix.side()) << ")";
    if (v.clean()) {
      out << " ok\n";
    } else {
      out << " INVALID\n";
      err << "error: " << to_string(ErrorCode::InvalidMatrix) << ": " << label << ": " << v.summary() << "\n";
      clean = false;
    }
  };
  if (!config.probes.empty()) {
    probes = read_embeddings(config.probes);
    report("probes", *probes);
  }
  if (!config.gallery.empty()) {
    gallery = read_embeddings(config.gallery);
    report("gallery", *gallery);
  }
  if (probes && gallery && probes->matrix.dim() != gallery->matrix.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "probe dim " + std::to_string(probes->matrix.dim()) +
                                                  " vs gallery dim " + std::to_string(gallery->matrix.dim()));
  }
  return clean ? 0 : 1;
}

int cmd_eval(const RunConfig& config, std::ostream& out, std::ostream&) {
  check_config(config);
  const auto probes = load_side(config.probes, Side::Probe);
  const auto gallery = load_side(config.gallery, Side::Gallery);
  const auto truth = ProbeSet::load_csv(config.truth);
  for (const auto& id : probes.matrix.ids()) {
    if (!truth.ground_truth.contains(id)) {
      throw Error(ErrorCode::MissingProbe, "no ground truth for probe " + id);
    }
  }
  for (auto k : config.ks) {
    if (k > gallery.matrix.rows()) {
      throw Error(ErrorCode::KOutOfRange, "K=" + std::to_string(k) + " exceeds gallery size " +
                                              std::to_string(gallery.matrix.rows()));
    }
  }

  const auto scores = score_matrix(probes.matrix, gallery.matrix, config.workers);
  const auto ranking = rank(scores, kRankAll, config.workers);
  const auto report = evaluate(ranking, truth, config.ks, gallery.manifest.model);

  write_text(config.out_dir / "eval_report.json", to_json(report).dump(2) + "\n");
  write_text(config.out_dir / "eval_report.csv", csv_header(report) + "\n" + csv_row(report) + "\n");

  out << "model " << report.model.name << ": " << report.probes << " probes, " << report.gallery
      << " gallery\n";
  for (const auto& [k, r] : report.recall_at) {
    out << "  Recall@" << std::left << std::setw(4) << k << fixed(r, 3) << "\n";
  }
  if (report.gap_delta) out << "  delta     " << fixed(*report.gap_delta, 3) << "\n";
  out << "wrote " << (config.out_dir / "eval_report.json").string() << "\n";
  return 0;
}

int cmd_reproduce(const RunConfig& config, std::ostream& out, std::ostream& err) {
  check_config(config);
  const auto table = ResultsTable::load_csv(config.reference);
  std::vector<PublishedCell> published;
  if (!config.published.empty()) published = load_published_cells(config.published);
  const auto bundle = reproduce(table, published);
  write_bundle(bundle, config.out_dir);

  for (const auto& w : bundle.warnings) err << "warning: " << w << "\n";
  std::size_t passed = 0;
  for (const auto& v : bundle.verdicts) passed += v.pass ? 1 : 0;
  out << bundle.reports.size() << " reports written to " << config.out_dir.string() << "\n";
  if (!bundle.verdicts.empty()) {
    out << "published cells: " << passed << "/" << bundle.verdicts.size() << " within tolerance\n";
    for (const auto& v : bundle.verdicts) {
      if (v.pass) continue;
      out << "  MISMATCH " << v.published.report << " [" << v.published.row << ", " << v.published.column
          << "]: published " << v.published.value << ", computed "
          << (v.computed.empty() ? "<none>" : v.computed) << "\n";
    }
  }
  return 0;
}

int cmd_caption(const RunConfig& config, std::ostream& out, std::ostream& err) {
  check_config(config);
  const auto tokenizer = BpeTokenizer::load(config.vocabulary.empty() ? default_vocabulary_path()
                                                                      : config.vocabulary);
  auto catalog = read_catalog(config.catalog);
  const std::size_t n = catalog.size();

  std::vector<std::optional<Error>> failures(n);
  if (!config.audit_only && n > 0) {
    const std::size_t limit = static_cast<std::size_t>(config.workers > 0 ? config.workers : 4);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          const auto job = build_prompt(catalog[i].metadata, config.token_budget);
          catalog[i].caption = request_caption(job, config.endpoint);
        } catch (const Error& e) {
          failures[i] = e;
        }
      }
    };
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < std::min(limit, n); ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::size_t unreachable = 0;
  for (const auto& f : failures) unreachable += (f && f->code() == ErrorCode::EndpointUnreachable) ? 1 : 0;
  if (n > 0 && unreachable == n) {
    throw Error(ErrorCode::EndpointUnreachable, config.endpoint.url + ": no request succeeded");
  }

  std::string audits_text, errors_text;
  std::vector<CaptionAudit> audits;
  std::size_t compliant = 0, prefixed = 0, retained = 0, passed = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (failures[i]) {
      errors_text += nlohmann::ordered_json{{"sku_id", catalog[i].metadata.sku_id},
                                            {"error", failures[i]->what()}}
                         .dump() +
                     "\n";
      continue;
    }
    auto audit = audit_caption(catalog[i].caption, catalog[i].metadata, config.token_budget, tokenizer);
    compliant += audit.token_compliant;
    prefixed += audit.prefix_ok;
    retained += audit.missing_attributes.empty();
    passed += audit.pass;
    audits_text += to_jsonl(audit);
    audits.push_back(std::move(audit));
  }

  const auto ext = config.catalog.extension().string() == ".jsonl" ? ".jsonl" : ".csv";
  write_catalog(catalog, config.out_dir / (std::string("captions") + ext));
  write_text(config.out_dir / "caption_audit.jsonl", audits_text);
  if (!errors_text.empty()) write_text(config.out_dir / "caption_errors.jsonl", errors_text);

  for (auto seed : config.review_seeds) {
    if (config.review_sample == 0) break;
    std::string sample_text;
    for (auto idx : sample_for_review(audits.size(), config.review_sample, seed)) {
      sample_text += to_jsonl(audits[idx]);
    }
    write_text(config.out_dir / ("review_seed_" + std::to_string(seed) + ".jsonl"), sample_text);
  }

  const std::size_t audited = audits.size();
  out << "captions audited: " << audited << "/" << n << "\n";
  out << "  token compliance:    " << compliant << " (" << percent(compliant, audited) << ")\n";
  out << "  prefix compliance:   " << prefixed << " (" << percent(prefixed, audited) << ")\n";
  out << "  attribute retention: " << retained << " (" << percent(retained, audited) << ")\n";
  out << "  passed all checks:   " << passed << " (" << percent(passed, audited) << ")\n";
  if (audited < n) err << "warning: " << (n - audited) << " rows failed; see caption_errors.jsonl\n";
  return 0;
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  try {
    switch (config.command) {
      case Command::Ingest: return cmd_ingest(config, out, err);
      case Command::Eval: return cmd_eval(config, out, err);
      case Command::Reproduce: return cmd_reproduce(config, out, err);
      case Command::Caption: return cmd_caption(config, out, err);
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return 1;
}

}  // namespace mpr
