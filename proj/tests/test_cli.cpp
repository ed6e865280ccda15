#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "afmlens/synthgen.hpp"
#include "cli.hpp"
#include "fixtures.hpp"

using namespace afmlens;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "afmlens");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

Json read_json(const std::filesystem::path& p) { return Json::parse(slurp(p)); }

std::string path(const fixtures::TempDir& d, const std::string& name) { return (d.path() / name).string(); }

std::vector<std::string> synth_queueing(const std::string& out, std::size_t n) {
  return {"synth", "--kind", "queueing", "--beta", "3", "--c", "0.5", "--x-hi", "0.8", "--n", std::to_string(n),
          "--seed", "1", "--nlm", "aau", "--afm-mode", "scalar", "--out", out, "--deterministic"};
}

}  // namespace

TEST(CliSynth, WritesFilesAndManifest) {
  fixtures::TempDir d("cli_synth");
  const auto out = path(d, "trace");
  auto args = synth_queueing(out, 50000);
  const auto r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(std::filesystem::exists(path(d, "trace/nlm.csv")));
  EXPECT_TRUE(std::filesystem::exists(path(d, "trace/afm.csv")));
  const auto m = read_json(path(d, "trace/manifest.json"));
  EXPECT_EQ(m["seed"], 1);
  EXPECT_EQ(m["command"], "synth");
  EXPECT_EQ(m["config"]["kind"], "queueing");
  EXPECT_FALSE(m.contains("created_at_epoch_s"));
  EXPECT_EQ(m["outputs"][0]["fnv1a64"], cli::file_digest(path(d, "trace/nlm.csv")));
}

TEST(CliSynth, RepeatIsByteIdentical) {
  fixtures::TempDir d("cli_repeat");
  auto a = synth_queueing(path(d, "a"), 2000);
  auto b = synth_queueing(path(d, "b"), 2000);
  a[a.size() - 4] = b[b.size() - 4] = "both";  // value of --afm-mode
  ASSERT_EQ(run(a).code, 0);
  ASSERT_EQ(run(b).code, 0);
  for (const char* f : {"nlm.csv", "afm.csv", "afm_sketch.csv"})
    EXPECT_EQ(slurp(path(d, std::string("a/") + f)), slurp(path(d, std::string("b/") + f))) << f;
}

TEST(CliSynth, UsageErrors) {
  auto r = run({"synth", "--kind", "queueing", "--n", "10"});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("--out"), std::string::npos);
  fixtures::TempDir d("cli_usage");
  EXPECT_EQ(run({"synth", "--kind", "cubic", "--out", path(d, "x")}).code, 1);
  EXPECT_EQ(run({"synth", "--n", "ten", "--out", path(d, "x")}).code, 1);
  EXPECT_EQ(run({}).code, 1);
  EXPECT_EQ(run({"--version"}).code, 0);
}

TEST(CliFit, QueueingTraceIsAccurate) {
  fixtures::TempDir d("cli_fit");
  ASSERT_EQ(run(synth_queueing(path(d, "t"), 20000)).code, 0);
  const std::vector<std::string> fit = {"fit",   "--nlm-file", path(d, "t/nlm.csv"), "--afm-file", path(d, "t/afm.csv"),
                                        "--nlm", "aau",        "--qos",              "low",        "--scope",
                                        "fabric", "--out",     path(d, "r1.json"),   "--plot-csv", path(d, "plot.csv"),
                                        "--deterministic"};
  const auto r = run(fit);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = read_json(path(d, "r1.json"));
  EXPECT_EQ(j["report"]["selected"]["kind"], "queueing");
  EXPECT_EQ(j["report"]["verdict"], "accurate");
  EXPECT_EQ(j["manifest"]["config"]["n_buckets"], 100);
  EXPECT_EQ(j["manifest"]["inputs"].size(), 2U);
  EXPECT_EQ(j["input"]["selected_samples"], 20000);
  EXPECT_EQ(slurp(path(d, "plot.csv")).rfind("bucket_x,observed_quantile,predicted_quantile", 0), 0U);

  // Re-running the manifest's command gives byte-identical JSON.
  std::vector<std::string> again;
  for (const auto& a : j["manifest"]["args"]) again.push_back(a.get<std::string>());
  const auto before = slurp(path(d, "r1.json"));
  ASSERT_EQ(run(again).code, 0);
  EXPECT_EQ(slurp(path(d, "r1.json")), before);

  const auto rep = run({"report", path(d, "r1.json")});
  EXPECT_EQ(rep.code, 0);
  EXPECT_NE(rep.out.find("verdict:  accurate"), std::string::npos);
}

TEST(CliFit, TrainEndSplitsByTime) {
  fixtures::TempDir d("cli_split");
  ASSERT_EQ(run(synth_queueing(path(d, "t"), 3000)).code, 0);
  const std::int64_t start = 1'700'000'100;
  const auto r = run({"fit", "--nlm-file", path(d, "t/nlm.csv"), "--afm-file", path(d, "t/afm.csv"), "--nlm", "aau",
                      "--train-end", std::to_string(start + 300 * 1000), "--out", path(d, "r.json")});
  ASSERT_NE(r.code, 1) << r.err;
  const auto j = read_json(path(d, "r.json"));
  EXPECT_EQ(j["split"]["train_samples"], 1000);
  EXPECT_EQ(j["split"]["test_samples"], 2000);
  EXPECT_TRUE(j["manifest"].contains("created_at_epoch_s"));
}

TEST(CliFit, IndependenceTraceExitsTwo) {
  fixtures::TempDir d("cli_indep");
  SplitMix64 rng(3);
  std::vector<JoinedSample> s;
  // Lognormal spread wide enough that bucket tail quantiles wander far past
  // the error threshold.
  for (int i = 0; i < 20000; ++i) s.push_back(fixtures::sample(rng.uniform(), std::exp(3.0 * rng.normal()), i * 300));
  emit_files(s, d.path(), {Format::CSV, AfmEmission::Scalar});
  const auto r = run({"fit", "--nlm-file", path(d, "nlm.csv"), "--afm-file", path(d, "afm.csv"), "--out",
                      path(d, "r.json")});
  EXPECT_EQ(r.code, 2) << r.err;
  EXPECT_EQ(run({"report", path(d, "r.json")}).code, 2);
}

TEST(CliFit, InputErrorsExitOne) {
  fixtures::TempDir d("cli_missing");
  auto r = run({"fit", "--nlm-file", path(d, "nope.csv"), "--afm-file", path(d, "nope2.csv")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("cannot open"), std::string::npos);
  ASSERT_EQ(run(synth_queueing(path(d, "t"), 200)).code, 0);
  r = run({"fit", "--nlm-file", path(d, "t/nlm.csv"), "--afm-file", path(d, "t/afm.csv"), "--qos", "high"});
  EXPECT_EQ(r.code, 1);
  r = run({"fit", "--nlm-file", path(d, "t/nlm.csv"), "--afm-file", path(d, "t/afm.csv"), "--alpha", "1.5"});
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(run({"report", path(d, "t/nlm.csv")}).code, 1);
}

TEST(CliStability, TenWeeksGiveThreeWindows) {
  fixtures::TempDir d("cli_stab");
  ASSERT_EQ(run(synth_queueing(path(d, "t"), 10 * 7 * 288)).code, 0);
  const auto r = run({"stability", "--nlm-file", path(d, "t/nlm.csv"), "--afm-file", path(d, "t/afm.csv"), "--nlm",
                      "aau", "--out", path(d, "s.json"), "--plot-dir", path(d, "plots"), "--deterministic"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = read_json(path(d, "s.json"));
  ASSERT_EQ(j["windows"].size(), 3U);
  for (const auto& w : j["windows"]) EXPECT_EQ(w["report"]["selected"]["kind"], "queueing");
  EXPECT_TRUE(std::filesystem::exists(path(d, "plots/window_2.csv")));
  EXPECT_TRUE(std::filesystem::exists(path(d, "plots/windows.csv")));

  const auto short_run = run({"stability", "--nlm-file", path(d, "t/nlm.csv"), "--afm-file", path(d, "t/afm.csv"),
                              "--nlm", "aau", "--train-weeks", "8", "--test-weeks", "3"});
  EXPECT_EQ(short_run.code, 1);
  EXPECT_NE(short_run.err.find("shorter than one train + test window"), std::string::npos);
}

TEST(CliSweep, AlphaAndCurvatureTables) {
  fixtures::TempDir d("cli_sweep");
  std::vector<JoinedSample> s;
  const int n = 21000;
  for (int i = 0; i < n; ++i) {
    const double x = (i + 0.5) / n;
    s.push_back(fixtures::sample(x, 0.1 + x * x, i * 300));
  }
  emit_files(s, d.path(), {Format::JSONL, AfmEmission::Scalar});
  const std::vector<std::string> base = {"sweep", "--nlm-file", path(d, "nlm.jsonl"), "--afm-file",
                                         path(d, "afm.jsonl"), "--buckets", "21", "--train-end",
                                         std::to_string(n * 300)};

  auto alpha = base;
  alpha.insert(alpha.end(), {"--curvatures", "0.5", "--out", path(d, "alpha.json")});
  ASSERT_EQ(run(alpha).code, 0);
  EXPECT_EQ(read_json(path(d, "alpha.json"))["rows"].size(), 5U);

  auto curv = base;
  curv.insert(curv.end(), {"--alphas", "0.5", "--out", path(d, "c.json"), "--plot-csv", path(d, "c.csv")});
  ASSERT_EQ(run(curv).code, 0);
  std::istringstream csv(slurp(path(d, "c.csv")));
  std::string line;
  std::getline(csv, line);
  std::vector<std::string> knee_column;
  while (std::getline(csv, line)) {
    std::vector<std::string> f;
    std::size_t line_no = 0;
    std::istringstream one(line);
    csv::read_record(one, f, line_no);
    knee_column.push_back(f.at(4));
  }
  EXPECT_EQ(knee_column, (std::vector<std::string>{"0.5", "0.5", "", "", "", ""}));
}
