#include <catch2/catch_amalgamated.hpp>

#include <json.hpp>
#include <sstream>

#include "helpers.hpp"

using namespace testutil;
using nlohmann::json;

namespace {

// Small-but-trainable settings so the whole pipeline stays in the
// millisecond range per stage.
const std::string kFastTrain =
    " --set layer_dims=16,8 --set max_epochs=10 --set patience=10"
    " --set lr=0.05 --set dropout_p=0 --set l2_lambda=0"
    " --set batch_size=4 --set seed=5";

struct Workspace {
  TempDir root;
  std::string data;
  std::string work;

  void prepare(int docs_per_class, std::uint64_t seed,
               std::uint64_t test_seed) {
    data = root.file("data");
    work = root.file("work");
    std::filesystem::create_directories(data);
    write_file(data + "/train.tsv", two_class_tsv(docs_per_class, seed));
    write_file(data + "/test.tsv", two_class_tsv(3, test_seed));
    auto r = run_cli("prepare --data " + data + " --out " + work);
    REQUIRE(r.code == 0);
  }
};

json parse_artifact(const std::string& path) {
  return json::parse(read_file(path));
}

}  // namespace

TEST_CASE("the full pipeline runs end to end", "[cli]") {
  Workspace ws;
  ws.prepare(12, 1, 2);
  CHECK(std::filesystem::exists(ws.work + "/vocab.txt"));
  CHECK(std::filesystem::exists(ws.work + "/docs.bin"));

  auto lda = run_cli("lda --workdir " + ws.work +
                     " --topics 2 --iters 40 --seed 3");
  REQUIRE(lda.code == 0);
  REQUIRE(std::filesystem::exists(ws.work + "/topics.json"));

  auto train = run_cli("train --workdir " + ws.work + kFastTrain);
  INFO(train.err);
  REQUIRE(train.code == 0);
  CHECK(train.out.find("best epoch") != std::string::npos);
  CHECK(train.out.find("test_acc") != std::string::npos);
  REQUIRE(std::filesystem::exists(ws.work + "/model.hgat"));
  REQUIRE(std::filesystem::exists(ws.work + "/history.json"));

  SECTION("training twice with the same seed produces identical bytes") {
    auto again = run_cli("train --workdir " + ws.work + kFastTrain +
                         " --out model_b.hgat");
    REQUIRE(again.code == 0);
    CHECK(read_file(ws.work + "/model.hgat") ==
          read_file(ws.work + "/model_b.hgat"));
  }

  SECTION("eval scores the checkpoint, then reruns with fresh seeds") {
    auto ev = run_cli("eval --workdir " + ws.work);
    REQUIRE(ev.code == 0);
    json j = parse_artifact(ws.work + "/eval.json");
    REQUIRE(j["accuracies"].size() == 1);
    CHECK(j["seeds"][0].get<std::uint64_t>() == 5);  // the training seed
    const double acc = j["accuracies"][0].get<double>();
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
    CHECK_FALSE(j.contains("std"));

    auto multi = run_cli("eval --workdir " + ws.work + " --runs 2 --seed 11");
    REQUIRE(multi.code == 0);
    json m = parse_artifact(ws.work + "/eval.json");
    REQUIRE(m["accuracies"].size() == 2);
    CHECK(m["seeds"] == json({11, 12}));
    CHECK(m.contains("std"));
  }

  SECTION("predict classifies raw stdin lines by label name") {
    // pure-pool sentences; the corpus is separable enough that ten epochs
    // place these on the right side
    auto p = run_cli("predict --workdir " + ws.work,
                     "goal team coach . striker match referee .\n"
                     "profit shares market . dividend broker invest .\n"
                     "zzz qqq xxyzz\n");
    INFO(p.err);
    REQUIRE(p.code == 0);
    std::istringstream lines(p.out);
    std::string l1, l2, l3;
    REQUIRE(std::getline(lines, l1));
    REQUIRE(std::getline(lines, l2));
    REQUIRE(std::getline(lines, l3));
    CHECK(l1 == "sport");
    CHECK(l2 == "money");
    CHECK(l3 == "money");  // class 0 fallback; labels sort lexicographically
    CHECK(p.err.find("no in-vocabulary tokens") != std::string::npos);
  }

  SECTION("attention dumps normalized weights for one node") {
    auto a = run_cli("attention --workdir " + ws.work +
                     " --text \"goal team coach . goal striker .\""
                     " --word goal");
    REQUIRE(a.code == 0);
    json j = parse_artifact(ws.work + "/attention.json");
    CHECK(j["word"] == "goal");
    CHECK(j["layer"].get<int>() == 1);
    REQUIRE(j["nodes"].size() == 1);
    const auto& node = j["nodes"][0];
    CHECK(node["word"] == "goal");
    REQUIRE(!node["edges"].empty());
    double beta_sum = 0.0;
    for (const auto& e : node["edges"]) {
      beta_sum += e["beta"].get<double>();
      const std::string kind = e["kind"].get<std::string>();
      CHECK((kind == "sequential" || kind == "semantic" || kind == "fallback"));
      double alpha_sum = 0.0;
      for (const auto& m : e["members"]) alpha_sum += m["alpha"].get<double>();
      CHECK(alpha_sum == Catch::Approx(1.0).margin(1e-4));
    }
    CHECK(beta_sum == Catch::Approx(1.0).margin(1e-4));

    auto stored = run_cli("attention --workdir " + ws.work + " --doc 0");
    REQUIRE(stored.code == 0);
    json sj = parse_artifact(ws.work + "/attention.json");
    CHECK(sj["doc_id"].get<int>() == 0);
    CHECK(!sj["nodes"].empty());

    auto absent = run_cli("attention --workdir " + ws.work +
                          " --text \"goal team .\" --word zebra");
    CHECK(absent.code == 2);
  }

  SECTION("export-embeddings writes one row per non-degenerate document") {
    auto x = run_cli("export-embeddings --workdir " + ws.work +
                     " --split test");
    REQUIRE(x.code == 0);
    std::istringstream tsv(read_file(ws.work + "/embeddings.tsv"));
    std::string line;
    int rows = 0;
    while (std::getline(tsv, line)) {
      ++rows;
      const auto fields = 1 + std::count(line.begin(), line.end(), '\t');
      CHECK(fields == 2 + 8);  // id, label, one value per output dim
    }
    CHECK(rows == 6);
  }

  SECTION("memest measures the prepared corpus") {
    auto m = run_cli("memest --workdir " + ws.work);
    REQUIRE(m.code == 0);
    json j = json::parse(m.out);
    CHECK(j["docs"].get<int>() == 30);
    CHECK(j["ratio"].get<double>() > 1.0);
  }

  SECTION("ablate trains every variant") {
    auto ab = run_cli("ablate --workdir " + ws.work + kFastTrain +
                      " --set max_epochs=5 --set patience=5 --runs 1 --seed 9");
    INFO(ab.err);
    REQUIRE(ab.code == 0);
    json j = parse_artifact(ws.work + "/ablate.json");
    REQUIRE(j["variants"].size() == 5);
    std::vector<std::string> names;
    for (const auto& v : j["variants"]) {
      names.push_back(v["name"].get<std::string>());
      REQUIRE(v["accuracies"].size() == 1);
      CHECK_FALSE(v.contains("p_vs_full"));  // needs >= 2 runs per side
    }
    CHECK(names == std::vector<std::string>{"full", "no_attention",
                                            "no_sequential", "no_semantic",
                                            "one_layer"});
  }
}

TEST_CASE("prepare can dump one document's hypergraph", "[cli]") {
  Workspace ws;
  ws.prepare(4, 21, 22);

  auto dump = run_cli("prepare --data " + ws.data + " --out " + ws.work +
                      " --dump-hypergraph 0");
  REQUIRE(dump.code == 0);
  json j = json::parse(dump.out);
  CHECK(j["spec_version"] == "1");
  CHECK(j["config"].is_object());
  REQUIRE(!j["nodes"].empty());
  CHECK(j["nodes"][0].is_string());
  REQUIRE(!j["edges"].empty());
  for (const auto& e : j["edges"]) {
    const std::string kind = e["kind"].get<std::string>();
    // no topics.json yet, so no semantic edges can appear
    CHECK((kind == "sequential" || kind == "fallback"));
    REQUIRE(!e["members"].empty());
    for (const auto& m : e["members"]) {
      bool in_nodes = false;
      for (const auto& n : j["nodes"]) in_nodes = in_nodes || n == m;
      CHECK(in_nodes);
    }
  }

  REQUIRE(run_cli("lda --workdir " + ws.work +
                  " --topics 2 --iters 20 --seed 3").code == 0);
  auto with_topics = run_cli("prepare --data " + ws.data + " --out " + ws.work +
                             " --dump-hypergraph 0");
  REQUIRE(with_topics.code == 0);
  json t = json::parse(with_topics.out);
  bool any_semantic = false;
  for (const auto& e : t["edges"])
    any_semantic = any_semantic || e["kind"] == "semantic";
  CHECK(any_semantic);

  // ids keep counting into the test split
  CHECK(run_cli("prepare --data " + ws.data + " --out " + ws.work +
                " --dump-hypergraph 8").code == 0);
  auto absent = run_cli("prepare --data " + ws.data + " --out " + ws.work +
                        " --dump-hypergraph 9999");
  CHECK(absent.code == 2);
}

TEST_CASE("held-out text never influences the frozen artifacts", "[cli]") {
  TempDir root;
  const std::string train = two_class_tsv(10, 7);
  auto build = [&](const std::string& tag, std::uint64_t test_seed,
                   int test_docs) {
    const std::string data = root.file("data_" + tag);
    const std::string work = root.file("work_" + tag);
    std::filesystem::create_directories(data);
    write_file(data + "/train.tsv", train);
    write_file(data + "/test.tsv", two_class_tsv(test_docs, test_seed));
    REQUIRE(run_cli("prepare --data " + data + " --out " + work).code == 0);
    REQUIRE(run_cli("lda --workdir " + work +
                    " --topics 2 --iters 30 --seed 3").code == 0);
    REQUIRE(run_cli("train --workdir " + work + kFastTrain +
                    " --set max_epochs=6 --set patience=6").code == 0);
    return work;
  };
  const std::string a = build("a", 40, 2);
  const std::string b = build("b", 41, 5);

  CHECK(read_file(a + "/vocab.txt") == read_file(b + "/vocab.txt"));
  CHECK(read_file(a + "/topics.json") == read_file(b + "/topics.json"));
  CHECK(read_file(a + "/model.hgat") == read_file(b + "/model.hgat"));
  CHECK(read_file(a + "/history.json") == read_file(b + "/history.json"));

  const std::string text = "goal team coach . striker match .\n";
  auto pa = run_cli("predict --workdir " + a, text);
  auto pb = run_cli("predict --workdir " + b, text);
  REQUIRE(pa.code == 0);
  REQUIRE(pb.code == 0);
  CHECK(pa.out == pb.out);
}

TEST_CASE("exit codes distinguish usage and data errors", "[cli]") {
  CHECK(run_cli("--help").code == 0);
  CHECK(run_cli("frobnicate").code == 1);
  CHECK(run_cli("train").code == 1);  // missing required --workdir

  auto missing = run_cli("train --workdir /nonexistent/ws");
  CHECK(missing.code == 2);
  CHECK(missing.err.find("prepare") != std::string::npos);

  TempDir dir;
  const std::string data = dir.file("data");
  std::filesystem::create_directories(data);
  write_file(data + "/train.tsv", "sport\tgoal team goal team .\n"
                                  "money\tprofit shares profit .\n");
  write_file(data + "/test.tsv", "politics\tsenate vote .\n");
  auto unseen = run_cli("prepare --data " + data + " --out " + dir.file("ws"));
  CHECK(unseen.code == 2);
  CHECK(unseen.err.find("never seen in the training split") !=
        std::string::npos);

  auto badkey = run_cli("prepare --data " + data + " --out " + dir.file("w2") +
                        " --set no_such_key=1");
  CHECK(badkey.code == 1);
  CHECK(badkey.err.find("usage error") != std::string::npos);
}

TEST_CASE("memest computes storage directly from corpus statistics", "[cli]") {
  auto r = run_cli("memest --nodes 24 --edges 6 --batch 8"
                   " --words 18764 --docs 10662");
  REQUIRE(r.code == 0);
  json j = json::parse(r.out);
  CHECK(j["batch_elements"] == "1152");              // 24 * 6 * 8
  CHECK(j["corpus_graph_elements"] == "865889476");  // (18764 + 10662)^2
  CHECK(j["ratio"].get<double>() == Catch::Approx(865889476.0 / 1152.0));

  CHECK(run_cli("memest").code == 1);
  CHECK(run_cli("memest --nodes 5").code == 1);
}

TEST_CASE("a config file drives training and is echoed in artifacts", "[cli]") {
  Workspace ws;
  ws.prepare(8, 3, 4);
  REQUIRE(run_cli("lda --workdir " + ws.work +
                  " --topics 2 --iters 20 --seed 3").code == 0);
  write_file(ws.root.file("run.cfg"),
             "# fast settings\n"
             "layer_dims = 12,6\n"
             "max_epochs = 4\n"
             "patience = 4\n"
             "lr = 0.05\n"
             "dropout_p = 0\n"
             "seed = 3\n");
  auto r = run_cli("train --workdir " + ws.work + " --config " +
                   ws.root.file("run.cfg"));
  INFO(r.err);
  REQUIRE(r.code == 0);
  json hist = parse_artifact(ws.work + "/history.json");
  CHECK(hist["config"]["layer_dims"] == "12,6");
  CHECK(hist["config"]["seed"] == "3");
  CHECK(hist["epochs"].size() <= 4);

  auto bad = run_cli("train --workdir " + ws.work + " --config " +
                     ws.root.file("nope.cfg"));
  CHECK(bad.code != 0);
}
