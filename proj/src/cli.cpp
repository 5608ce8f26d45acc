#include "recsearch/cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <json.hpp>

#include "recsearch/binary_io.hpp"
#include "recsearch/config.hpp"
#include "recsearch/evalbench.hpp"
#include "recsearch/index.hpp"
#include "recsearch/ingest.hpp"
#include "recsearch/pipeline.hpp"
#include "recsearch/quant.hpp"
#include "recsearch/service.hpp"
#include "recsearch/sparse.hpp"
#include "recsearch/store.hpp"
#include "recsearch/trainer.hpp"

namespace fs = std::filesystem;

namespace recsearch {
namespace {

using Clock = std::chrono::steady_clock;

void write_text(const fs::path& path, const std::string& text) {
  write_file(path, text);
  std::cerr << "wrote " << path.string() << '\n';
}

void emit_table(const TextTable& t, const std::string& csv, const std::string& json_path,
                const std::string& json_text) {
  std::cout << render_text_table(t);
  if (!csv.empty()) write_text(csv, render_csv(t));
  if (!json_path.empty()) write_text(json_path, json_text);
}

// Test queries and truths from a pairs file.
void load_queries(const fs::path& pairs, std::vector<std::string>& queries,
                  std::vector<std::string>& truth) {
  for (const auto& p : read_pairs(pairs)) {
    queries.push_back(p.eval_query());
    truth.push_back(p.item_id);
  }
  if (queries.empty()) throw Error(ErrorCode::InvalidArgument, "no queries in " + pairs.string());
}

SystemConfig config_or_default(const std::string& path) {
  SystemConfig cfg = path.empty() ? SystemConfig{} : load_config(path);
  apply_env_overrides(cfg);
  return cfg;
}

std::vector<std::string> ids_of(const std::vector<RankedResult>& results) {
  std::vector<std::string> out;
  for (const auto& r : results) out.push_back(r.item_id);
  return out;
}

SystemVariant system_variant(std::string name, const System& sys, RetrievalRequest base) {
  return {std::move(name), [&sys, base](const std::string& q, std::size_t k) {
            RetrievalRequest req = base;
            req.query_text = q;
            req.k = k;
            return ids_of(retrieve(sys, req));
          }};
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  SyntheticConfig data;
  std::string out = "data";
};

void cmd_synth(const SynthArgs& a) {
  const auto d = gen_synthetic(a.data);
  write_catalog(fs::path(a.out) / "catalog.jsonl", d.catalog);
  write_pairs(fs::path(a.out) / "pairs.jsonl", d.pairs);
  std::cout << d.catalog.size() << " items, " << d.pairs.size() << " pairs\n";
}

struct IngestArgs {
  std::string reviews, meta, out = "data";
  FilterConfig filter;
};

void cmd_ingest(const IngestArgs& a) {
  const auto meta = parse_metadata(a.meta);
  const auto reviews = parse_reviews(a.reviews);
  const auto pairs = filter_interactions(reviews.records, meta.records, a.filter);
  write_catalog(fs::path(a.out) / "catalog.jsonl", meta.records);
  write_pairs(fs::path(a.out) / "pairs.jsonl", pairs);
  std::cout << meta.records.size() << " items (" << meta.skipped << " malformed lines skipped), "
            << reviews.records.size() << " reviews (" << reviews.skipped << " skipped), "
            << pairs.size() << " pairs after filtering\n";
}

struct SplitArgs {
  std::string pairs, out = "data";
  SplitSpec spec;
};

void cmd_split(const SplitArgs& a) {
  const auto split = split_pairs(read_pairs(a.pairs), a.spec);
  write_pairs(fs::path(a.out) / "train.jsonl", split.train);
  write_pairs(fs::path(a.out) / "test.jsonl", split.test);
  write_text(fs::path(a.out) / "split_manifest.json", split_manifest_json(a.spec, split));
  std::cout << split.train.size() << " train, " << split.test.size() << " test\n";
}

struct TrainArgs {
  std::string config, pairs, catalog, out = "artifacts/model.enc", loss_csv;
  std::optional<double> lr;
  std::optional<std::size_t> epochs, batch_size;
  std::optional<std::uint64_t> seed;
};

void cmd_train(const TrainArgs& a) {
  SystemConfig cfg = config_or_default(a.config);
  if (a.lr) cfg.train.lr = *a.lr;
  if (a.epochs) cfg.train.epochs = *a.epochs;
  if (a.batch_size) cfg.train.batch_size = *a.batch_size;
  if (a.seed) cfg.encoder.seed = cfg.train.seed = *a.seed;
  const auto pairs = read_pairs(a.pairs);
  const auto examples = make_training_examples(pairs, read_catalog(a.catalog));
  auto result = train(init_encoder<float>(cfg.encoder), examples, cfg.train);
  save_model(result.model, a.out);
  const auto& r = result.report;
  std::cout << r.steps_run << " micro-batches, " << r.optimizer_steps << " optimizer steps, "
            << format_fixed(r.wall_time_s, 2) << " s; loss " << format_fixed(r.loss_curve.front().second)
            << " -> " << format_fixed(r.loss_curve.back().second) << '\n';
  if (!a.loss_csv.empty()) {
    TextTable t{{"step", "loss"}};
    for (const auto& [step, loss] : r.loss_curve) t.push_back({std::to_string(step), format_fixed(loss, 6)});
    write_text(a.loss_csv, render_csv(t));
  }
}

void cmd_quantize(const std::string& model_path, const std::string& out) {
  const auto model = load_model(model_path);
  const auto q = quantize_model(model);
  save_qmodel(q, out);
  const auto s = size_report(model, q);
  std::cout << "fp32 " << s.fp32_bytes << " bytes, int8 " << s.int8_bytes << " bytes, ratio "
            << format_fixed(s.ratio, 2) << '\n';
}

struct EmbedArgs {
  std::string model, qmodel, catalog, out = "artifacts/catalog.emb";
};

void cmd_embed(const EmbedArgs& a) {
  if (a.model.empty() == a.qmodel.empty()) {
    throw Error(ErrorCode::InvalidArgument, "give exactly one of --model or --qmodel");
  }
  const Catalog catalog = read_catalog(a.catalog);
  const auto m = a.model.empty() ? embed_catalog(load_qmodel(a.qmodel), catalog)
                                 : embed_catalog(load_model(a.model), catalog);
  save_embeddings(m, a.out);
  std::cout << m.size() << " embeddings of dim " << m.dim() << '\n';
}

struct IndexArgs {
  std::string kind, embeddings, catalog, config, out;
  std::optional<std::size_t> M, ef_construction, ef_search;
  bool titles_only = false;
};

void cmd_index_build(const IndexArgs& a) {
  SystemConfig cfg = config_or_default(a.config);
  const auto t0 = Clock::now();
  if (a.kind == "bm25") {
    if (a.catalog.empty()) throw Error(ErrorCode::InvalidArgument, "bm25 needs --catalog");
    const auto index = build_bm25(make_bm25_corpus(read_catalog(a.catalog), a.titles_only), cfg.bm25);
    save_bm25(index, a.out);
    std::cout << index.doc_ids.size() << " documents, " << index.postings.size() << " terms\n";
    return;
  }
  if (a.embeddings.empty()) throw Error(ErrorCode::InvalidArgument, a.kind + " needs --embeddings");
  EmbeddingMatrix m = load_embeddings(a.embeddings);
  if (a.kind == "flat") {
    save_embeddings(m, a.out);
    std::cout << m.size() << " vectors\n";
    return;
  }
  if (a.M) cfg.hnsw.M = *a.M;
  if (a.ef_construction) cfg.hnsw.ef_construction = *a.ef_construction;
  if (a.ef_search) cfg.hnsw.ef_search = *a.ef_search;
  const auto index = hnsw_build(std::move(m), cfg.hnsw);
  save_index(index, a.out);
  const auto au = audit(index);
  const double s = std::chrono::duration<double>(Clock::now() - t0).count();
  std::cout << index.size() << " nodes, " << index.max_level + 1 << " levels, max degree "
            << au.max_degree_level0 << ", built in " << format_fixed(s, 2) << " s\n";
}

struct SearchArgs {
  std::string config, query, mode, engine, precision = "fp32";
  std::size_t k = 0;
  std::optional<double> lambda;
  std::optional<std::size_t> ef_search;
  std::vector<std::string> filters;
  bool json = false;
};

void cmd_search(const SearchArgs& a) {
  const SystemConfig cfg = config_or_default(a.config);
  const LoadedSystem loaded = load_system(cfg);
  RetrievalRequest req;
  req.query_text = a.query;
  req.k = a.k ? a.k : cfg.serving.default_k;
  req.mode = a.mode.empty() ? cfg.serving.default_mode : parse_mode(a.mode);
  req.lambda = a.lambda.value_or(cfg.serving.default_lambda);
  if (!a.engine.empty()) req.engine = parse_engine(a.engine);
  else if (!loaded.system.flat) req.engine = Engine::Hnsw;
  req.precision = parse_precision(a.precision);
  req.ef_search = a.ef_search;
  for (const auto& f : a.filters) {
    const auto eq = f.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::InvalidArgument, "filter must be field=value");
    req.filters.push_back({f.substr(0, eq), f.substr(eq + 1)});
  }
  StageTimings t;
  const auto results = retrieve(loaded.system, req, &t);
  if (a.json) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : results) {
      arr.push_back({{"item_id", r.item_id},
                     {"rank", r.rank},
                     {"score", wire_float(r.score)},
                     {"title", r.display ? nlohmann::json(r.display->title) : nlohmann::json()}});
    }
    std::cout << nlohmann::json{{"results", arr}, {"total_ms", wire_float(t.total_ms)}}.dump(2) << '\n';
    return;
  }
  TextTable table{{"rank", "item_id", "score", "title", "brand"}};
  for (const auto& r : results) {
    table.push_back({std::to_string(r.rank), r.item_id, format_fixed(r.score),
                     r.display ? r.display->title : "", r.display ? r.display->brand.value_or("") : ""});
  }
  std::cout << render_text_table(table) << "encode " << format_fixed(t.encode_ms, 3) << " ms, search "
            << format_fixed(t.search_ms, 3) << " ms, lookup " << format_fixed(t.lookup_ms, 3)
            << " ms, total " << format_fixed(t.total_ms, 3) << " ms\n";
}

struct EvalArgs {
  std::string config, systems = "bm25,dense-raw,dense-trained,dense-trained-int8", csv, json;
  std::size_t k = 10;
  bool synthetic = false;
  SyntheticConfig data;
};

void cmd_eval(const EvalArgs& a) {
  std::vector<ComparisonRow> rows;
  if (a.synthetic) {
    BenchmarkConfig bc;
    bc.data = a.data;
    bc.split.seed = a.data.seed;
    bc.k = a.k;
    const auto res = run_benchmark(bc);
    rows = res.rows;
    std::cerr << res.n_train << " train / " << res.n_test << " test pairs; trained vs bm25 p = "
              << res.trained_vs_bm25.p_value << ", trained vs raw p = " << res.trained_vs_raw.p_value
              << "; " << format_fixed(res.wall_time_s, 1) << " s\n";
  } else {
    const SystemConfig cfg = config_or_default(a.config);
    if (cfg.paths.catalog.empty() || cfg.paths.pairs.empty()) {
      throw Error(ErrorCode::InvalidArgument, "eval needs paths.catalog and paths.pairs (test pairs)");
    }
    const LoadedSystem loaded = load_system(cfg);
    const Catalog catalog = read_catalog(cfg.paths.catalog);
    std::vector<std::string> queries, truth;
    load_queries(cfg.paths.pairs, queries, truth);

    const Bm25Index bm25 = loaded.system.bm25 ? *loaded.system.bm25
                                              : build_bm25(make_bm25_corpus(catalog), cfg.bm25);
    const auto raw = init_encoder<float>(cfg.encoder);
    std::optional<EmbeddingMatrix> raw_docs, int8_docs;
    std::vector<SystemVariant> variants;
    std::stringstream names(a.systems);
    for (std::string name; std::getline(names, name, ',');) {
      if (name == "bm25") {
        variants.push_back(bm25_variant(name, bm25));
      } else if (name == "dense-raw") {
        raw_docs = embed_catalog(raw, catalog);
        variants.push_back(dense_variant(name, raw, *raw_docs));
      } else if (name == "dense-trained") {
        RetrievalRequest base;
        if (!loaded.system.flat) base.engine = Engine::Hnsw;
        variants.push_back(system_variant(name, loaded.system, base));
      } else if (name == "dense-trained-int8") {
        if (!loaded.system.qmodel) throw Error(ErrorCode::ArtifactsMissing, "no qmodel configured");
        int8_docs = embed_catalog(*loaded.system.qmodel, catalog);
        variants.push_back(int8_variant(name, *loaded.system.qmodel, *int8_docs));
      } else {
        throw Error(ErrorCode::InvalidArgument, "unknown system '" + name + "'");
      }
    }
    rows = run_comparison(variants, queries, truth, a.k);
  }
  emit_table(comparison_table(rows, a.k), a.csv, a.json, comparison_json(rows, a.k));
}

struct AblateArgs {
  std::string config, csv;
  std::size_t k = 10;
};

// Dense index and precision variants against the flat FP32 oracle.
void cmd_ablate(const AblateArgs& a) {
  const SystemConfig cfg = config_or_default(a.config);
  if (cfg.paths.pairs.empty()) throw Error(ErrorCode::InvalidArgument, "ablate needs paths.pairs");
  const LoadedSystem loaded = load_system(cfg);
  const System& sys = loaded.system;
  std::vector<std::string> queries, truth;
  load_queries(cfg.paths.pairs, queries, truth);

  struct Row {
    std::string name;
    RetrievalRequest req;
    std::size_t bytes;
  };
  const auto file_bytes = [](const fs::path& p) { return p.empty() ? 0 : fs::file_size(p); };
  std::vector<Row> rows;
  if (sys.flat) {
    RetrievalRequest r;
    rows.push_back({"flat fp32", r, file_bytes(cfg.paths.model)});
    if (sys.qmodel) {
      r.precision = Precision::Int8;
      rows.push_back({"flat int8", r, file_bytes(cfg.paths.qmodel)});
    }
  }
  if (sys.hnsw) {
    for (std::size_t ef : {sys.hnsw->params.ef_search, std::size_t{64}}) {
      RetrievalRequest r;
      r.engine = Engine::Hnsw;
      r.ef_search = ef;
      rows.push_back({"hnsw efS=" + std::to_string(ef), r, file_bytes(cfg.paths.hnsw_index)});
    }
  }

  std::vector<std::vector<std::string>> oracle;
  if (sys.flat) {
    for (const auto& q : queries) {
      RetrievalRequest r;
      r.query_text = q;
      r.k = a.k;
      oracle.push_back(ids_of(retrieve(sys, r)));
    }
  }
  TextTable t{{"Configuration", "Recall@" + std::to_string(a.k), "Overlap vs flat", "p50 (ms)", "Artifact bytes"}};
  for (const auto& row : rows) {
    EvalRun run;
    run.k = a.k;
    run.truth = truth;
    double overlap = 0.0;
    std::size_t qi = 0;
    const QueryFn fn = [&](const std::string& q) {
      RetrievalRequest r = row.req;
      r.query_text = q;
      r.k = a.k;
      StageTimings st;
      run.ranked.push_back(ids_of(retrieve(sys, r, &st)));
      if (!oracle.empty()) {
        const auto& o = oracle[qi];
        std::size_t hit = 0;
        for (const auto& id : run.ranked.back()) hit += std::count(o.begin(), o.end(), id);
        overlap += o.empty() ? 1.0 : static_cast<double>(hit) / static_cast<double>(o.size());
      }
      ++qi;
      return st;
    };
    const auto lat = latency_bench(fn, queries, 0, queries.size(), row.name);
    t.push_back({row.name, format_fixed(recall_at_k(run)),
                 oracle.empty() ? "--" : format_fixed(overlap / static_cast<double>(queries.size())),
                 format_fixed(lat.p50_ms, 3), std::to_string(row.bytes)});
  }
  emit_table(t, a.csv, {}, {});
}

struct BenchArgs {
  std::string config, csv, json;
  std::size_t warmup = 50, repeat = 1000;
};

void cmd_bench(const BenchArgs& a) {
  const SystemConfig cfg = config_or_default(a.config);
  if (cfg.paths.pairs.empty()) throw Error(ErrorCode::InvalidArgument, "bench needs paths.pairs");
  const LoadedSystem loaded = load_system(cfg);
  const System& sys = loaded.system;
  std::vector<std::string> queries, truth;
  load_queries(cfg.paths.pairs, queries, truth);

  std::vector<std::pair<std::string, RetrievalRequest>> configs;
  const Engine dense_engine = sys.flat ? Engine::Flat : Engine::Hnsw;
  auto add = [&](std::string name, Mode m, Engine e, Precision p) {
    RetrievalRequest r;
    r.mode = m;
    r.engine = e;
    r.precision = p;
    configs.emplace_back(std::move(name), r);
  };
  if (sys.flat) add("dense fp32 flat", Mode::Dense, Engine::Flat, Precision::Fp32);
  if (sys.flat && sys.qmodel) add("dense int8 flat", Mode::Dense, Engine::Flat, Precision::Int8);
  if (sys.hnsw) add("dense fp32 hnsw", Mode::Dense, Engine::Hnsw, Precision::Fp32);
  if (sys.hnsw && sys.qmodel) add("dense int8 hnsw", Mode::Dense, Engine::Hnsw, Precision::Int8);
  if (sys.bm25) {
    add("sparse bm25", Mode::Sparse, dense_engine, Precision::Fp32);
    add("hybrid", Mode::Hybrid, dense_engine, Precision::Fp32);
  }
  std::vector<LatencyReport> reports;
  for (const auto& [name, base] : configs) {
    const QueryFn fn = [&, base = base](const std::string& q) {
      RetrievalRequest r = base;
      r.query_text = q;
      StageTimings st;
      retrieve(sys, r, &st);
      return st;
    };
    reports.push_back(latency_bench(fn, queries, a.warmup, a.repeat, name));
  }
  emit_table(latency_table(reports), a.csv, a.json, latency_json(reports));
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"Recommendation-as-retrieval toolkit: data prep, training, indexing, search and evaluation."};
  app.require_subcommand(1);
  std::function<void()> action;

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate the synthetic vocabulary-mismatch dataset");
  s->add_option("--items", synth.data.n_items, "Catalog size")->capture_default_str();
  s->add_option("--pairs", synth.data.n_pairs, "Interaction pairs")->capture_default_str();
  s->add_option("--concepts", synth.data.vocab_size, "Latent concepts")->capture_default_str();
  s->add_option("--mismatch", synth.data.mismatch_rate, "Probability a query word is colloquial")
      ->capture_default_str();
  s->add_option("--seed", synth.data.seed)->capture_default_str();
  s->add_option("--out", synth.out, "Output directory")->capture_default_str();
  s->callback([&] { action = [&] { cmd_synth(synth); }; });

  IngestArgs ingest;
  auto* in = app.add_subcommand("ingest", "Parse and filter raw review/metadata JSONL");
  in->add_option("--reviews", ingest.reviews)->required();
  in->add_option("--meta", ingest.meta)->required();
  in->add_option("--out", ingest.out)->capture_default_str();
  in->add_option("--min-rating", ingest.filter.min_rating)->capture_default_str();
  in->add_option("--min-body-tokens", ingest.filter.min_body_tokens)->capture_default_str();
  in->add_option("--min-user-pairs", ingest.filter.min_user_pairs)->capture_default_str();
  in->add_flag("--english-only", ingest.filter.english_only);
  in->callback([&] { action = [&] { cmd_ingest(ingest); }; });

  SplitArgs split;
  auto* sp = app.add_subcommand("split", "Leakage-free train/test split");
  sp->add_option("--pairs", split.pairs)->required();
  sp->add_option("--out", split.out)->capture_default_str();
  sp->add_option("--train-fraction", split.spec.train_fraction)->capture_default_str();
  sp->add_option("--seed", split.spec.seed)->capture_default_str();
  sp->callback([&] { action = [&] { cmd_split(split); }; });

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Fine-tune the bi-encoder with in-batch negatives");
  t->add_option("--config", tr.config, "System config JSON (encoder and train sections)");
  t->add_option("--pairs", tr.pairs, "Training pairs JSONL")->required();
  t->add_option("--catalog", tr.catalog)->required();
  t->add_option("--out", tr.out)->capture_default_str();
  t->add_option("--lr", tr.lr);
  t->add_option("--epochs", tr.epochs);
  t->add_option("--batch-size", tr.batch_size);
  t->add_option("--seed", tr.seed);
  t->add_option("--loss-csv", tr.loss_csv, "Write the loss curve as CSV");
  t->callback([&] { action = [&] { cmd_train(tr); }; });

  std::string q_model, q_out = "artifacts/model.qnt";
  auto* qz = app.add_subcommand("quantize", "INT8 post-training weight quantization");
  qz->add_option("--model", q_model)->required();
  qz->add_option("--out", q_out)->capture_default_str();
  qz->callback([&] { action = [&] { cmd_quantize(q_model, q_out); }; });

  EmbedArgs emb;
  auto* e = app.add_subcommand("embed", "Batch-encode the catalog");
  e->add_option("--model", emb.model);
  e->add_option("--qmodel", emb.qmodel);
  e->add_option("--catalog", emb.catalog)->required();
  e->add_option("--out", emb.out)->capture_default_str();
  e->callback([&] { action = [&] { cmd_embed(emb); }; });

  IndexArgs idx;
  auto* ib = app.add_subcommand("index-build", "Build a flat, HNSW or BM25 index");
  ib->add_option("--kind", idx.kind)->required()->check(CLI::IsMember({"flat", "hnsw", "bm25"}));
  ib->add_option("--embeddings", idx.embeddings);
  ib->add_option("--catalog", idx.catalog);
  ib->add_option("--config", idx.config);
  ib->add_option("--out", idx.out)->required();
  ib->add_option("--M", idx.M);
  ib->add_option("--ef-construction", idx.ef_construction);
  ib->add_option("--ef-search", idx.ef_search);
  ib->add_flag("--titles-only", idx.titles_only, "Index bare titles instead of rendered documents (bm25)");
  ib->callback([&] { action = [&] { cmd_index_build(idx); }; });

  std::string cache_catalog, cache_out = "artifacts/metadata.mch";
  auto* cb = app.add_subcommand("cache-build", "Build the item metadata cache");
  cb->add_option("--catalog", cache_catalog)->required();
  cb->add_option("--out", cache_out)->capture_default_str();
  cb->callback([&] {
    action = [&] {
      const auto cache = build_cache(read_catalog(cache_catalog));
      save_cache(cache, cache_out);
      std::cout << cache.count() << " records\n";
    };
  });

  SearchArgs sr;
  auto* se = app.add_subcommand("search", "Run one query against loaded artifacts");
  se->add_option("--config", sr.config)->required();
  se->add_option("--query,-q", sr.query)->required();
  se->add_option("--k", sr.k);
  se->add_option("--mode", sr.mode)->check(CLI::IsMember({"dense", "sparse", "hybrid"}));
  se->add_option("--lambda", sr.lambda);
  se->add_option("--engine", sr.engine)->check(CLI::IsMember({"flat", "hnsw"}));
  se->add_option("--ef-search", sr.ef_search);
  se->add_option("--precision", sr.precision)->check(CLI::IsMember({"fp32", "int8"}));
  se->add_option("--filter", sr.filters, "field=value, repeatable");
  se->add_flag("--json", sr.json);
  se->callback([&] { action = [&] { cmd_search(sr); }; });

  EvalArgs ev;
  auto* ea = app.add_subcommand("eval", "Recall@K / MRR@K comparison table");
  ea->add_option("--config", ev.config);
  ea->add_option("--systems", ev.systems)->capture_default_str();
  ea->add_option("--k", ev.k)->capture_default_str();
  ea->add_option("--csv", ev.csv);
  ea->add_option("--json", ev.json);
  ea->add_flag("--synthetic", ev.synthetic, "Generate, train and evaluate end to end");
  ea->add_option("--items", ev.data.n_items)->capture_default_str();
  ea->add_option("--pairs", ev.data.n_pairs)->capture_default_str();
  ea->add_option("--seed", ev.data.seed)->capture_default_str();
  ea->callback([&] {
    if (!ev.synthetic && ev.config.empty()) throw CLI::ValidationError("eval", "need --config or --synthetic");
    action = [&] { cmd_eval(ev); };
  });

  AblateArgs ab;
  auto* abl = app.add_subcommand("ablate", "Index and precision ablation table");
  abl->add_option("--config", ab.config)->required();
  abl->add_option("--k", ab.k)->capture_default_str();
  abl->add_option("--csv", ab.csv);
  abl->callback([&] { action = [&] { cmd_ablate(ab); }; });

  BenchArgs bn;
  auto* be = app.add_subcommand("bench", "Serial latency and throughput table");
  be->add_option("--config", bn.config)->required();
  be->add_option("--warmup", bn.warmup)->capture_default_str();
  be->add_option("--repeat", bn.repeat)->capture_default_str();
  be->add_option("--csv", bn.csv);
  be->add_option("--json", bn.json);
  be->callback([&] { action = [&] { cmd_bench(bn); }; });

  std::string serve_config;
  auto* sv = app.add_subcommand("serve", "Start the HTTP service");
  sv->add_option("--config", serve_config)->required();
  sv->callback([&] { action = [&] { serve(config_or_default(serve_config), &std::cout); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 1;
  }
  try {
    action();
  } catch (const Error& err) {
    std::cerr << "error [" << to_string(err.code()) << "]: " << err.what() << '\n';
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace recsearch
