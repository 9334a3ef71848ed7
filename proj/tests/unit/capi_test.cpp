/*
 * Copyright 2026 The clforge Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Exercises the exported C API end to end on a tiny scenario, linking only
// the shared library.

#include <gtest/gtest.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "clforge/clforge.h"

namespace fs = std::filesystem;

namespace {

std::string take(char* s) {
  std::string out = s == nullptr ? "" : s;
  clf_string_free(s);
  return out;
}

const char* kTinyRun = R"({
  "model": {"layers": 1, "heads": 2, "embed_dim": 8, "ff_dim": 16, "max_seq_len": 48, "dropout": 0.0},
  "pretrain": {"max_steps": 4, "batch": 4, "eval_every": 2, "lr": 0.003},
  "finetune": {"max_epochs": 1, "patience": 1, "batch": 8, "lr": 0.003},
  "eval": {"ks": [1], "max_new": 4}
})";

class CApiPipeline : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("clforge_capi_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    std::ofstream(dir_ / "synthetic.json") << R"({"manifests": ")" << CLFORGE_SOURCE_DIR
                                           << R"(/data/manifests", "methods_per_domain": 30, "id_methods": 200,
                                                "length_range": [24, 36], "seed": 3})";
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

}  // namespace

TEST(CApi, StatusNamesAndVersion) {
  EXPECT_STRNE(clf_version(), "");
  EXPECT_STREQ(clf_status_name(CLF_OK), "ok");
  EXPECT_STRNE(clf_status_name(CLF_ERR_DATA), clf_status_name(CLF_ERR_USAGE));
}

TEST(CApi, ConfigRoundTripAndHash) {
  clf_config* a = nullptr;
  ASSERT_EQ(clf_config_default(&a), CLF_OK);
  ASSERT_EQ(clf_config_set_strategy(a, "replay", R"({"capacity": 64})"), CLF_OK);
  char* text = nullptr;
  ASSERT_EQ(clf_config_to_json(a, &text), CLF_OK);
  const std::string json = take(text);

  clf_config* b = nullptr;
  ASSERT_EQ(clf_config_parse(json.c_str(), nullptr, &b), CLF_OK);
  char* ha = nullptr;
  char* hb = nullptr;
  ASSERT_EQ(clf_config_hash(a, &ha), CLF_OK);
  ASSERT_EQ(clf_config_hash(b, &hb), CLF_OK);
  const std::string hash_a = take(ha);
  EXPECT_EQ(hash_a.size(), 64u);
  EXPECT_EQ(hash_a, take(hb));
  clf_config_free(a);
  clf_config_free(b);
}

TEST(CApi, ErrorsMapToStatusCodes) {
  clf_config* cfg = nullptr;
  ASSERT_EQ(clf_config_default(&cfg), CLF_OK);
  EXPECT_EQ(clf_config_set_strategy(cfg, "dropout", nullptr), CLF_ERR_USAGE);
  EXPECT_STRNE(clf_last_error(), "");
  EXPECT_EQ(clf_config_set_model_kind(cfg, "lstm"), CLF_ERR_USAGE);
  EXPECT_EQ(clf_config_default(nullptr), CLF_ERR_USAGE);
  clf_config_free(cfg);

  clf_config* bad = nullptr;
  EXPECT_EQ(clf_config_parse("{not json", nullptr, &bad), CLF_ERR_USAGE);
  EXPECT_EQ(bad, nullptr);
  clf_checkpoint* ck = nullptr;
  EXPECT_EQ(clf_checkpoint_load("/nonexistent/model.ckpt", &ck), CLF_ERR_DATA);
}

TEST_F(CApiPipeline, GenerateSplitTrainEvaluate) {
  size_t n = 0;
  ASSERT_EQ(clf_gen_corpus(path("synthetic.json").c_str(), path("gen").c_str(), &n), CLF_OK) << clf_last_error();
  EXPECT_EQ(n, 350u);
  char* stats = nullptr;
  ASSERT_EQ(clf_split(path("gen/corpus.jsonl").c_str(), CLFORGE_SOURCE_DIR "/data/manifests", 20, 20, 3,
                      path("scenario").c_str(), &stats),
            CLF_OK)
      << clf_last_error();
  EXPECT_NE(take(stats).find("\"ood\""), std::string::npos);

  clf_scenario* scen = nullptr;
  ASSERT_EQ(clf_scenario_load(path("scenario/scenario.json").c_str(), &scen), CLF_OK) << clf_last_error();
  size_t domains = 0, violations = 99;
  ASSERT_EQ(clf_scenario_domain_count(scen, &domains), CLF_OK);
  EXPECT_EQ(domains, 5u);
  ASSERT_EQ(clf_scenario_validate(scen, &violations, nullptr), CLF_OK);
  EXPECT_EQ(violations, 0u);

  clf_config* cfg = nullptr;
  ASSERT_EQ(clf_config_parse(kTinyRun, nullptr, &cfg), CLF_OK) << clf_last_error();
  std::vector<std::string> progress;
  auto collect = [](const char* msg, void* user) { static_cast<std::vector<std::string>*>(user)->push_back(msg); };
  ASSERT_EQ(clf_pretrain(cfg, scen, path("dec.ckpt").c_str(), collect, &progress, nullptr), CLF_OK) << clf_last_error();
  EXPECT_FALSE(progress.empty());
  EXPECT_TRUE(fs::exists(path("dec.ckpt.log.json")));

  clf_checkpoint* ck = nullptr;
  ASSERT_EQ(clf_checkpoint_load(path("dec.ckpt").c_str(), &ck), CLF_OK);
  char* info = nullptr;
  ASSERT_EQ(clf_checkpoint_info(ck, &info), CLF_OK);
  EXPECT_NE(take(info).find("decoder"), std::string::npos);

  ASSERT_EQ(clf_zeroshot(ck, scen, cfg, path("zs").c_str(), nullptr), CLF_OK) << clf_last_error();
  EXPECT_TRUE(fs::exists(path("zs/zeroshot.json")));

  for (const char* strategy : {"naive", "replay"}) {
    ASSERT_EQ(clf_config_set_strategy(cfg, strategy, nullptr), CLF_OK);
    char* report = nullptr;
    ASSERT_EQ(clf_finetune(ck, scen, cfg, path(strategy).c_str(), nullptr, nullptr, &report), CLF_OK)
        << clf_last_error();
    EXPECT_NE(take(report).find("mean_F"), std::string::npos);
  }
  const std::string naive = path("naive"), replay = path("replay");
  const char* runs[] = {naive.c_str(), replay.c_str()};
  ASSERT_EQ(clf_report_merge(runs, 2, path("cmp").c_str()), CLF_OK) << clf_last_error();
  EXPECT_TRUE(fs::exists(path("cmp/comparison.csv")));

  clf_checkpoint_free(ck);
  clf_config_free(cfg);
  clf_scenario_free(scen);
}
