// gks: synthesize corpora, train the detector and selector, evaluate, rank and run the pipeline.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gks/corpus.hpp"
#include "gks/detection.hpp"
#include "gks/embedding.hpp"
#include "gks/error.hpp"
#include "gks/eval.hpp"
#include "gks/kernels.hpp"
#include "gks/model_io.hpp"
#include "gks/pipeline.hpp"
#include "gks/selector.hpp"

namespace {

using namespace gks;

struct CorpusPaths {
  std::string knowledge;
  std::string logs;
  std::string labels;

  void add_to(CLI::App* cmd, bool logs_required, bool labels_required) {
    cmd->add_option("--knowledge", knowledge, "Knowledge JSON file")->required();
    auto* l = cmd->add_option("--logs", logs, "Dialog logs JSON file");
    if (logs_required) l->required();
    auto* lb = cmd->add_option("--labels", labels, "Labels JSON file");
    if (labels_required) lb->required();
  }

  Corpus load() const {
    if (logs.empty()) return parse_corpus(read_text_file(knowledge), "[]");
    std::optional<std::filesystem::path> lbl;
    if (!labels.empty()) lbl = labels;
    return load_corpus(knowledge, logs, lbl);
  }
};

struct ProviderFlags {
  std::string kind = "hashed";
  std::uint64_t seed = 42;
  std::size_t dim = 64;
  std::string vectors;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--provider", kind, "Embedding provider")->check(CLI::IsMember({"hashed", "file"}));
    cmd->add_option("--embed-seed", seed, "Seed of the hashed Gaussian provider");
    cmd->add_option("--dim", dim, "Hashed Gaussian dimension");
    cmd->add_option("--vectors", vectors, "Token vector file (implies --provider file)");
  }

  ProviderSpec spec() const {
    ProviderSpec s;
    if (kind == "file" || !vectors.empty()) {
      if (vectors.empty()) throw InvalidArgument("--provider file needs --vectors");
      s.kind = ProviderKind::FileVectors;
      s.path = vectors;
    } else {
      s.seed = seed;
      s.dim = dim;
    }
    return s;
  }
};

std::string utc_stamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string ref_string(const SnippetRef& r) { return r.domain + "/" + r.entity_id + "/" + r.doc_id; }

// Provider recorded in the selector model unless --vectors overrides the file path.
std::unique_ptr<EmbeddingProvider> provider_for(const SelectorModel& model, const std::string& vectors_override) {
  ProviderSpec spec = model.provider;
  if (!vectors_override.empty()) {
    spec.kind = ProviderKind::FileVectors;
    spec.path = vectors_override;
  }
  return make_provider(spec);
}

EntityKey resolve_entity(const Corpus& corpus, const DialogInstance& dialog, const std::string& domain,
                         const std::string& entity) {
  if (!domain.empty() || !entity.empty()) {
    if (domain.empty() || entity.empty()) throw InvalidArgument("--domain and --entity must be given together");
    return {domain, entity};
  }
  if (dialog.golden) return dialog.golden->entity();
  (void)corpus;
  throw InvalidArgument("dialog " + dialog.id + " has no labeled entity; pass --domain and --entity");
}

int run(int argc, char** argv) {
  CLI::App app{"Knowledge-seeking turn detection and graph-knowledge selection"};
  app.require_subcommand(1);
  int jobs = 1;
  app.add_option("--jobs", jobs, "OpenMP threads for feature extraction and evaluation")
      ->check(CLI::PositiveNumber);

  // synth
  auto* synth = app.add_subcommand("synth", "Write a synthetic knowledge/logs/labels corpus");
  std::uint64_t synth_seed = 42;
  SynthParams params;
  std::string mode = "token-overlap";
  std::string synth_out;
  synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option("--n-dialogs", params.n_dialogs, "Number of dialogs");
  synth->add_option("--n-candidates", params.n_candidates, "Snippets per entity");
  synth->add_option("--vocab-size", params.vocab_size, "Content vocabulary size");
  synth->add_option("--mode", mode, "Golden/query overlap mode")
      ->check(CLI::IsMember({"token-overlap", "paraphrase"}));
  synth->add_option("--marker-rate", params.detect_marker_rate, "Fraction of chit-chat dialogs");
  synth->add_option("--out", synth_out, "Output directory")->required();

  // train detect | train select
  auto* train = app.add_subcommand("train", "Train a model on a labeled corpus");
  train->require_subcommand(1);
  auto* train_detect = train->add_subcommand("detect", "Knowledge-seeking turn detector");
  auto* train_select = train->add_subcommand("select", "Graph-knowledge selector readout");
  CorpusPaths detect_paths, select_paths;
  detect_paths.add_to(train_detect, true, true);
  select_paths.add_to(train_select, true, true);
  DetectorHyper dh;
  SelectorHyper sh;
  std::string detect_out, select_out;
  bool detect_no_ls = false, select_no_ls = false;
  train_detect->add_option("--lr", dh.lr, "Learning rate");
  train_detect->add_option("--epochs", dh.epochs, "Full-batch epochs");
  train_detect->add_option("--seed", dh.seed, "Training seed");
  train_detect->add_option("--hash-dim", dh.hash_dim, "Hashed n-gram dimension D");
  train_detect->add_option("--turn-buckets", dh.turn_buckets, "Turn-count buckets T");
  train_detect->add_option("--threshold", dh.threshold, "Trigger threshold");
  train_detect->add_flag("--no-line-search", detect_no_ls, "Take the raw step every epoch");
  train_detect->add_option("--out,--model", detect_out, "Output model JSON")->required();
  ProviderFlags select_provider;
  select_provider.add_to(train_select);
  train_select->add_option("--lr", sh.lr, "Learning rate");
  train_select->add_option("--epochs", sh.epochs, "Full-batch epochs");
  train_select->add_option("--seed", sh.seed, "Training seed");
  train_select->add_option("--kernels", sh.kernels, "Kernel count K (last one is exact match)");
  train_select->add_flag("--attention", sh.attention, "Enable cross-node attention");
  train_select->add_flag("--no-line-search", select_no_ls, "Take the raw step every epoch");
  train_select->add_option("--out,--model", select_out, "Output model JSON")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Report Acc@5/Acc@1/MRR@5 and Recall/Precision/F1");
  CorpusPaths eval_paths;
  eval_paths.add_to(eval, true, true);
  std::string eval_model, eval_detector, eval_vectors, format = "md";
  bool eval_tfidf = false, stamp = false;
  eval->add_option("--model", eval_model, "Selector model JSON");
  eval->add_option("--detector", eval_detector, "Detector model JSON");
  eval->add_option("--vectors", eval_vectors, "Override the selector's vector file");
  eval->add_flag("--tfidf", eval_tfidf, "Add the TF-IDF baseline row");
  eval->add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "md"}));
  eval->add_flag("--stamp", stamp, "Embed a UTC timestamp");

  // rank
  auto* rank_cmd = app.add_subcommand("rank", "Rank an entity's snippets for a question");
  CorpusPaths rank_paths;
  rank_paths.add_to(rank_cmd, false, false);
  std::string rank_model, rank_vectors, question, rank_domain, rank_entity;
  std::size_t top = 0;
  rank_cmd->add_option("--model", rank_model, "Selector model JSON")->required();
  rank_cmd->add_option("--vectors", rank_vectors, "Override the selector's vector file");
  rank_cmd->add_option("--question", question, "Question text")->required();
  rank_cmd->add_option("--domain", rank_domain, "Entity domain")->required();
  rank_cmd->add_option("--entity", rank_entity, "Entity id")->required();
  rank_cmd->add_option("--top", top, "Print only the first N entries (0 = all)");

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "Detect, select and format one dialog");
  CorpusPaths pipe_paths;
  pipe_paths.add_to(pipe, true, false);
  std::string pipe_detector, pipe_model, pipe_vectors, dialog_id, pipe_domain, pipe_entity;
  pipe->add_option("--detector", pipe_detector, "Detector model JSON")->required();
  pipe->add_option("--model", pipe_model, "Selector model JSON")->required();
  pipe->add_option("--vectors", pipe_vectors, "Override the selector's vector file");
  pipe->add_option("--dialog", dialog_id, "Dialog id (0-based index in the logs file)")->required();
  pipe->add_option("--domain", pipe_domain, "Entity domain (default: golden label's)");
  pipe->add_option("--entity", pipe_entity, "Entity id (default: golden label's)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  set_parallel_threads(jobs);

  if (synth->parsed()) {
    params.overlap_mode = mode == "paraphrase" ? OverlapMode::Paraphrase : OverlapMode::TokenOverlap;
    write_corpus(synth_corpus(synth_seed, params), synth_out);
    std::cout << "wrote " << params.n_dialogs << " dialogs to " << synth_out << "\n";
    return 0;
  }

  if (train_detect->parsed()) {
    dh.line_search = !detect_no_ls;
    const Corpus corpus = detect_paths.load();
    const auto trained = train_detector(corpus, dh);
    for (std::size_t e = 0; e < trained.epoch_loss.size(); ++e) {
      std::printf("epoch %zu loss %.6f\n", e, trained.epoch_loss[e]);
    }
    write_text_file(detect_out, detector_to_json(trained.model));
    const auto m = evaluate_detector(trained.model, corpus);
    double p_min = 1.0, p_max = 0.0;
    for (const auto& d : corpus.dialogs) {
      const double p = detect(trained.model, d).probability;
      p_min = std::min(p_min, p);
      p_max = std::max(p_max, p);
    }
    std::cout << "train recall " << format4(m.recall) << " precision " << format4(m.precision) << " f1 "
              << format4(m.f1) << "\n";
    std::cout << "train probability range [" << format4(p_min) << ", " << format4(p_max) << "]\n";
    return 0;
  }

  if (train_select->parsed()) {
    sh.line_search = !select_no_ls;
    const Corpus corpus = select_paths.load();
    const ProviderSpec spec = select_provider.spec();
    const auto provider = make_provider(spec);
    ProviderSpec recorded = spec;
    recorded.dim = provider->dim();
    const auto trained = train_selector(corpus, *provider, sh, recorded);
    for (std::size_t e = 0; e < trained.epoch_loss.size(); ++e) {
      std::printf("epoch %zu loss %.6f\n", e, trained.epoch_loss[e]);
    }
    write_text_file(select_out, selector_to_json(trained.model));
    const auto m = evaluate_selector(trained.model, *provider, corpus).metrics;
    std::cout << "train acc@1 " << format4(m.acc_at_1) << " acc@5 " << format4(m.acc_at_5) << " mrr@5 "
              << format4(m.mrr_at_5) << "\n";
    return 0;
  }

  if (eval->parsed()) {
    if (eval_model.empty() && eval_detector.empty() && !eval_tfidf) {
      throw InvalidArgument("eval needs --model, --detector or --tfidf");
    }
    const Corpus corpus = eval_paths.load();
    std::vector<ReportEntry> entries;
    if (!eval_model.empty()) {
      const auto model = selector_from_json(read_text_file(eval_model));
      const auto provider = provider_for(model, eval_vectors);
      const auto e = evaluate_selector(model, *provider, corpus);
      if (e.tied_instances > 0) {
        std::cerr << "warning: golden snippet tied with another candidate in " << e.tied_instances << " of "
                  << e.metrics.n_instances << " instances (stable tie-break applied)\n";
      }
      entries.push_back({"gks", std::nullopt, e.metrics});
    }
    if (eval_tfidf) entries.push_back({"tfidf", std::nullopt, evaluate_tfidf(corpus).metrics});
    if (!eval_detector.empty()) {
      const auto model = detector_from_json(read_text_file(eval_detector));
      entries.push_back({"detector", evaluate_detector(model, corpus), std::nullopt});
    }
    std::cout << report(entries, format == "json" ? ReportFormat::Json : ReportFormat::Markdown,
                        stamp ? utc_stamp() : std::string{});
    return 0;
  }

  if (rank_cmd->parsed()) {
    const Corpus corpus = rank_paths.load();
    const auto model = selector_from_json(read_text_file(rank_model));
    const auto provider = provider_for(model, rank_vectors);
    const auto& candidates = candidate_set(corpus, EntityKey{rank_domain, rank_entity});
    const auto ranked = rank(model, *provider, question, candidates);
    const std::size_t n = top == 0 ? ranked.size() : std::min(top, ranked.size());
    for (std::size_t i = 0; i < n; ++i) {
      const auto& r = ranked[i];
      std::printf("%zu\t%s\t%.4f\t%s\n", i + 1, ref_string(r.ref).c_str(), r.probability,
                  candidates[r.candidate_index].title.c_str());
    }
    return 0;
  }

  if (pipe->parsed()) {
    const Corpus corpus = pipe_paths.load();
    const auto* dialog = corpus.find_dialog(dialog_id);
    if (dialog == nullptr) throw InvalidArgument("unknown dialog id " + dialog_id);
    const auto detector = detector_from_json(read_text_file(pipe_detector));
    const auto model = selector_from_json(read_text_file(pipe_model));
    const auto provider = provider_for(model, pipe_vectors);
    const auto entity = resolve_entity(corpus, *dialog, pipe_domain, pipe_entity);
    std::cout << pipeline_result_to_json(run_pipeline(detector, model, *provider, corpus, *dialog, entity));
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  auto fail = [](const char* kind, const char* what) {
    std::string msg = what;
    for (auto& c : msg) {
      if (c == '\n') c = ' ';
    }
    std::cerr << "error[" << kind << "]: " << msg << "\n";
    return 1;
  };
  try {
    return run(argc, argv);
  } catch (const gks::ParseError& e) {
    return fail("parse", e.what());
  } catch (const gks::ValidationError& e) {
    return fail("validation", e.what());
  } catch (const gks::InvalidArgument& e) {
    return fail("argument", e.what());
  } catch (const gks::DegenerateData& e) {
    return fail("data", e.what());
  } catch (const std::exception& e) {
    return fail("internal", e.what());
  }
}
