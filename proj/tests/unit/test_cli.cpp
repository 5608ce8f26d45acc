#include <gtest/gtest.h>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <string>

#include <json.hpp>

#include "recsearch/binary_io.hpp"
#include "test_util.hpp"

using nlohmann::json;

namespace {

struct Run {
  int status = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(RECSEARCH_CLI) + " " + args + " 2>&1";
  Run r;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf{};
  while (std::size_t n = std::fread(buf.data(), 1, buf.size(), pipe)) r.out.append(buf.data(), n);
  const int st = ::pclose(pipe);
  r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string q(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

}  // namespace

TEST(Cli, UsageErrorsExitWithOne) {
  EXPECT_EQ(run("").status, 1);
  EXPECT_EQ(run("synth --no-such-flag").status, 1);
  EXPECT_EQ(run("frobnicate").status, 1);
  EXPECT_EQ(run("index-build --kind sideways --out x").status, 1);
  const auto help = run("--help");
  EXPECT_EQ(help.status, 0);
  EXPECT_NE(help.out.find("serve"), std::string::npos);
}

TEST(Cli, RuntimeErrorsExitWithTwo) {
  testutil::TempDir dir;
  const auto r = run("quantize --model " + q(dir / "missing.enc") + " --out " + q(dir / "x.q8"));
  EXPECT_EQ(r.status, 2);
  EXPECT_NE(r.out.find("IoError"), std::string::npos);
}

TEST(Cli, SynthIsDeterministic) {
  testutil::TempDir a, b, c;
  ASSERT_EQ(run("synth --items 200 --pairs 50 --out " + q(a.path())).status, 0);
  ASSERT_EQ(run("synth --items 200 --pairs 50 --out " + q(b.path())).status, 0);
  ASSERT_EQ(run("synth --items 200 --pairs 50 --seed 9 --out " + q(c.path())).status, 0);
  EXPECT_EQ(recsearch::read_file(a / "catalog.jsonl"), recsearch::read_file(b / "catalog.jsonl"));
  EXPECT_EQ(recsearch::read_file(a / "pairs.jsonl"), recsearch::read_file(b / "pairs.jsonl"));
  EXPECT_NE(recsearch::read_file(a / "pairs.jsonl"), recsearch::read_file(c / "pairs.jsonl"));
}

TEST(Cli, EndToEndPipeline) {
  testutil::TempDir dir;
  const auto d = [&](const char* name) { return q(dir / name); };
  recsearch::write_file(dir / "config.json", R"({
    "paths": {"catalog": "catalog.jsonl", "pairs": "test.jsonl", "model": "model.enc",
              "qmodel": "model.q8", "flat_embeddings": "emb.bin", "hnsw_index": "hnsw.idx",
              "bm25_index": "bm25.idx", "metadata_cache": "meta.mch"},
    "encoder": {"hash_buckets": 4096, "d_in": 32, "d_out": 32},
    "train": {"epochs": 2, "lr": 0.02}
  })");

  ASSERT_EQ(run("synth --items 300 --pairs 200 --concepts 30 --out " + q(dir.path())).status, 0);
  auto r = run("split --pairs " + d("pairs.jsonl") + " --out " + q(dir.path()));
  ASSERT_EQ(r.status, 0) << r.out;
  const auto manifest = json::parse(recsearch::read_file(dir / "split_manifest.json"));
  EXPECT_EQ(manifest["n_train"].get<int>() + manifest["n_test"].get<int>(), 200);
  EXPECT_EQ(manifest["train_crc32"], recsearch::crc32_hex(recsearch::read_file(dir / "train.jsonl")));

  r = run("train --config " + d("config.json") + " --pairs " + d("train.jsonl") + " --catalog " +
          d("catalog.jsonl") + " --out " + d("model.enc") + " --loss-csv " + d("loss.csv"));
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_NE(recsearch::read_file(dir / "loss.csv").find('\n'), std::string::npos);
  ASSERT_EQ(run("quantize --model " + d("model.enc") + " --out " + d("model.q8")).status, 0);
  ASSERT_EQ(run("embed --model " + d("model.enc") + " --catalog " + d("catalog.jsonl") + " --out " + d("emb.bin")).status, 0);
  ASSERT_EQ(run("index-build --kind hnsw --embeddings " + d("emb.bin") + " --out " + d("hnsw.idx")).status, 0);
  ASSERT_EQ(run("index-build --kind bm25 --catalog " + d("catalog.jsonl") + " --out " + d("bm25.idx")).status, 0);
  ASSERT_EQ(run("cache-build --catalog " + d("catalog.jsonl") + " --out " + d("meta.mch")).status, 0);

  const auto pairs = recsearch::read_pairs(dir / "test.jsonl");
  ASSERT_FALSE(pairs.empty());
  r = run("search --config " + d("config.json") + " --query '" + pairs[0].query_text +
          "' --k 4 --mode hybrid --lambda 0.4 --json");
  ASSERT_EQ(r.status, 0) << r.out;
  const auto j = json::parse(r.out);
  ASSERT_EQ(j["results"].size(), 4u);
  EXPECT_EQ(j["results"][0]["rank"], 1);

  r = run("search --config " + d("config.json") + " --query '" + pairs[0].query_text +
          "' --filter colour=red");
  EXPECT_EQ(r.status, 2);

  r = run("eval --config " + d("config.json") + " --csv " + d("table.csv"));
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_NE(r.out.find("Improvement vs. BM25"), std::string::npos);
  EXPECT_NE(r.out.find("dense-trained-int8"), std::string::npos);
  const auto csv = recsearch::read_file(dir / "table.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);

  r = run("bench --config " + d("config.json") + " --warmup 2 --repeat 20");
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_NE(r.out.find("QPS"), std::string::npos);

  r = run("ablate --config " + d("config.json"));
  ASSERT_EQ(r.status, 0) << r.out;
  EXPECT_NE(r.out.find("hnsw"), std::string::npos);

  std::filesystem::remove(dir / "meta.mch");
  EXPECT_EQ(run("search --config " + d("config.json") + " --query shoe").status, 2);
}
