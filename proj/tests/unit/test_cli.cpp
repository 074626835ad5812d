#include "helpers.hpp"

#include "fddet/cli.hpp"
#include "fddet/io.hpp"

#include <filesystem>
#include <sstream>

using namespace fddet;
using fddet::test::TempDir;

namespace {

struct Run {
  int code = 0;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  Run r;
  r.code = run_command(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::map<std::string, std::string> tree(const std::filesystem::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : std::filesystem::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[std::filesystem::relative(e.path(), root).string()] = read_text(e.path());
  return out;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

const std::vector<std::string> kSmall = {"--set", "synth.num_train=6", "--set", "synth.num_test=3",
                                         "--set", "synth.min_length=64", "--set", "synth.max_length=80",
                                         "--set", "synth.channels=4", "--set", "tcar.downsamples_m=3",
                                         "--set", "synth.max_action=24"};

std::vector<std::string> with_small(std::vector<std::string> args) {
  args.insert(args.begin(), kSmall.begin(), kSmall.end());
  return args;
}

}  // namespace

TEST_CASE("parse_int_values") {
  const auto r = parse_int_values("1..15");
  REQUIRE(r.size() == 15);
  CHECK(r.front() == 1);
  CHECK(r.back() == 15);
  CHECK(parse_int_values("1,3,5") == std::vector<int>{1, 3, 5});
  CHECK_THROWS_AS(parse_int_values("x"), ValidationError);
}

TEST_CASE("cli: synth is deterministic") {
  TempDir dir("cli_synth");
  REQUIRE(run(with_small({"synth", "--seed", "7", "--out", dir / "a"})).code == 0);
  REQUIRE(run(with_small({"synth", "--seed", "7", "--out", dir / "b"})).code == 0);
  const auto a = tree(dir.path / "a"), b = tree(dir.path / "b");
  CHECK(a.size() == 2 + 6 + 3);
  CHECK(a == b);
}

TEST_CASE("cli: eval prints one row per threshold and the average") {
  TempDir dir("cli_eval");
  REQUIRE(run(with_small({"synth", "--out", dir / "d"})).code == 0);
  // Ground truth as predictions scores every threshold at 1.
  const Dataset gt = read_annotations(dir.path / "d" / "test.json");
  std::vector<DetectionCandidate> preds;
  for (const auto& g : gt.ground_truth()) preds.push_back({g.video_id, g.label, 0.9, g.segment});
  write_predictions(dir / "p.json", preds, gt.labels);
  const Run r = run({"eval", "--pred", dir / "p.json", "--gt", dir / "d/test.json", "--thresholds", "0.3:0.7:0.1",
                     "--out", dir / "m.json"});
  REQUIRE(r.code == 0);
  const auto rows = lines(r.out);
  std::size_t numeric = 0;
  for (const auto& l : rows) numeric += (!l.empty() && l[0] == '0') ? 1 : 0;
  CHECK(numeric == 5);
  CHECK(r.out.find("avg") != std::string::npos);
  CHECK(std::filesystem::exists(dir.path / "m.json"));
}

TEST_CASE("cli: exit codes") {
  TempDir dir("cli_codes");
  CHECK(run({}).code == 1);
  const Run unknown = run({"frobnicate"});
  CHECK(unknown.code == 1);
  CHECK(unknown.err.find("frobnicate") != std::string::npos);
  CHECK(run({"--help"}).code == 0);
  CHECK(run({"eval", "--pred", dir / "missing.json", "--gt", dir / "missing.json"}).code == 2);
  CHECK(run({"--set", "no.such_key=1", "gradcheck", "--only", "spectral"}).code == 1);
  CHECK(run({"eval", "--pred", dir / "p.json"}).code == 1);
  CHECK(run({"--config", dir / "nope.cfg", "gradcheck"}).code == 2);
}

TEST_CASE("cli: train, infer, diagnose and decouple on a tiny benchmark") {
  TempDir dir("cli_pipeline");
  REQUIRE(run(with_small({"synth", "--out", dir / "d"})).code == 0);
  const Run tr = run({"--set", "tcar.downsamples_m=3", "train", "--data", dir / "d/train.json", "--eval",
                      dir / "d/test.json", "--out", dir / "ckpt", "--epochs", "2"});
  REQUIRE(tr.code == 0);
  const auto rows = lines(tr.out);
  REQUIRE(rows.size() >= 3);
  CHECK(rows[0] == "epoch\tloss\tavg_mAP");
  CHECK(rows[1].rfind("1\t", 0) == 0);

  REQUIRE(run({"infer", "--checkpoint", dir / "ckpt", "--data", dir / "d/test.json", "--out", dir / "p.json"}).code ==
          0);
  CHECK(std::filesystem::exists(dir.path / "p.json"));

  const Run dg = run({"diagnose", "--pred", dir / "p.json", "--gt", dir / "d/test.json", "--out", dir / "diag.json"});
  REQUIRE(dg.code == 0);
  CHECK(dg.out.find("# false positives") != std::string::npos);
  CHECK(dg.out.find("# false negatives") != std::string::npos);
  CHECK(dg.out.find("# sensitivity") != std::string::npos);

  const Run dc = run({"decouple", "--features", dir / "d/features/test_0000.fdd", "--cutoff", "5", "--out-prefix", dir / "x"});
  REQUIRE(dc.code == 0);
  const Matrix low = read_feature_matrix(dir / "x.low.fdd"), high = read_feature_matrix(dir / "x.high.fdd");
  const Matrix x = read_feature_matrix(dir / "d/features/test_0000.fdd");
  CHECK((low + high - x).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("cli: cutoff sweep prints one row per value") {
  const Run r = run(with_small({"sweep-cutoff", "--synthetic", "--values", "1,3", "--epochs", "1"}));
  REQUIRE(r.code == 0);
  const auto rows = lines(r.out);
  std::size_t data = 0;
  for (const auto& l : rows) data += (l == "cutoff\tavg_mAP" || l.empty() || l[0] == '#') ? 0 : 1;
  CHECK(data == 2);
}
