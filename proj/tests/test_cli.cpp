#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const char* kBin = EDITVEC_BIN_PATH;

fs::path work_dir() {
  auto dir = fs::temp_directory_path() / "editvec-cli-tests";
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string(kBin) + " " + args + " >/dev/null 2>/dev/null";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

std::size_t line_count(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

}  // namespace

TEST_CASE("synth writes a balanced corpus and exits 0") {
  auto out = work_dir() / "synth.jsonl";
  CHECK(run("synth bugfix --per-class 10 --seed 42 --out " + out.string()) == 0);
  CHECK(line_count(out) == 110);
}

TEST_CASE("synth is byte-reproducible given the seed") {
  auto a = work_dir() / "synth-a.jsonl";
  auto b = work_dir() / "synth-b.jsonl";
  REQUIRE(run("synth transformation --per-class 5 --seed 7 --out " + a.string()) == 0);
  REQUIRE(run("synth transformation --per-class 5 --seed 7 --out " + b.string()) == 0);
  CHECK(slurp(a) == slurp(b));
  auto c = work_dir() / "synth-c.jsonl";
  REQUIRE(run("synth transformation --per-class 5 --seed 8 --out " + c.string()) == 0);
  CHECK(slurp(a) != slurp(c));
}

TEST_CASE("usage errors exit 1") {
  CHECK(run("") == 1);
  CHECK(run("synth") == 1);             // missing required args
  CHECK(run("unknown-subcommand") == 1);
  CHECK(run("--help") == 0);
  CHECK(run("synth --help") == 0);
}

TEST_CASE("train on an empty dataset exits 2") {
  auto empty = work_dir() / "empty.jsonl";
  std::ofstream(empty).close();
  CHECK(run("train --model edit2vec --data " + empty.string()) == 2);
}

TEST_CASE("data errors exit 2") {
  auto missing = work_dir() / "missing.jsonl";
  CHECK(run("filter --in " + missing.string() + " --out /dev/null") == 2);
  auto bad = work_dir() / "bad.jsonl";
  std::ofstream(bad) << "{\"id\":\"x\"}\n";
  CHECK(run("filter --in " + bad.string() + " --out /dev/null") == 2);
}

TEST_CASE("canon and extract pipelines run and are reproducible") {
  auto src = work_dir() / "pipe.jsonl";
  REQUIRE(run("synth bugfix --per-class 3 --seed 11 --out " + src.string()) == 0);

  auto canon_a = work_dir() / "canon-a.jsonl";
  auto canon_b = work_dir() / "canon-b.jsonl";
  REQUIRE(run("canon --in " + src.string() + " --out " + canon_a.string()) == 0);
  REQUIRE(run("canon --in " + src.string() + " --out " + canon_b.string()) == 0);
  CHECK(slurp(canon_a) == slurp(canon_b));
  CHECK(line_count(canon_a) == 33);

  auto fix_a = work_dir() / "fix-a.jsonl";
  auto fix_b = work_dir() / "fix-b.jsonl";
  REQUIRE(run("extract --in " + src.string() + " --out " + fix_a.string()) == 0);
  REQUIRE(run("extract --in " + src.string() + " --out " + fix_b.string()) == 0);
  CHECK(slurp(fix_a) == slurp(fix_b));

  auto filtered = work_dir() / "filtered.jsonl";
  REQUIRE(run("filter --in " + src.string() + " --out " + filtered.string()) == 0);
  CHECK(line_count(filtered) == 33);
}

TEST_CASE("train/predict round trip with reproducible checkpoints") {
  auto src = work_dir() / "train.jsonl";
  REQUIRE(run("synth bugfix --per-class 4 --seed 13 --out " + src.string()) == 0);

  auto ckpt_a = work_dir() / "model-a.bin";
  auto ckpt_b = work_dir() / "model-b.bin";
  const std::string train_args =
      " --data " + src.string() + " --epochs 2 --batch-size 16 --seed 5";
  REQUIRE(run("train --model lstm" + train_args + " --out-checkpoint " + ckpt_a.string()) == 0);
  REQUIRE(run("train --model lstm" + train_args + " --out-checkpoint " + ckpt_b.string()) == 0);
  CHECK(slurp(ckpt_a) == slurp(ckpt_b));
  CHECK(slurp(fs::path(ckpt_a.string() + ".json")) ==
        slurp(fs::path(ckpt_b.string() + ".json")));

  auto pred = work_dir() / "pred.jsonl";
  REQUIRE(run("predict --checkpoint " + ckpt_a.string() + " --data " + src.string() +
              " --out " + pred.string()) == 0);
  CHECK(line_count(pred) == 44);
}

TEST_CASE("gradcheck subcommand exits 0 within tolerance and 3 otherwise") {
  CHECK(run("gradcheck") == 0);
  CHECK(run("gradcheck --tolerance 1e-18") == 3);
}

TEST_CASE("import maps upstream records") {
  auto upstream = work_dir() / "upstream.json";
  std::ofstream(upstream) << R"json([
    {"sourceBeforeFix":"f(1)","sourceAfterFix":"f(2)","bugType":"CHANGE_NUMERAL"},
    {"sourceBeforeFix":"x","sourceAfterFix":"y","bugType":"CHANGE_MODIFIER"}
  ])json";
  auto out = work_dir() / "imported.jsonl";
  CHECK(run("import --in " + upstream.string() + " --out " + out.string()) == 0);
  CHECK(line_count(out) == 1);
}
