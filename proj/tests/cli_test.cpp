#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "mad/store.hpp"

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run sh(const fs::path& scratch, const std::string& args, const char* bin = MAD_BIN) {
  const auto out = scratch / "stdout.txt";
  const auto err = scratch / "stderr.txt";
  const std::string cmd = std::string(bin) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

std::string models_flag(const fs::path& data, int m) {
  std::string s = " --predictions";
  for (int i = 1; i <= m; ++i) s += " " + (data / ("clf" + std::to_string(i) + ".csv")).string();
  return s;
}

std::size_t manifest_count(const fs::path& out) {
  std::size_t n = 0;
  for (const auto& e : fs::directory_iterator(out / "manifests")) {
    const auto name = e.path().filename().string();
    if (name.find(".queue.") == std::string::npos) ++n;
  }
  return n;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fixtures::scratch_dir("cli");
    data_ = dir_ / "data";
    const auto r =
        sh(dir_, "--out " + data_.string() + " --images 3000 --seed 5 --error-rates .05,.1,.2,.3,.4,.5,.05,.1,.2,.3,.4",
           MAD_SYNTH_BIN);
    ASSERT_EQ(r.code, 0) << r.err;
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string select_args(int m, const fs::path& out) const {
    return "--taxonomy " + (data_ / "taxonomy.txt").string() + models_flag(data_, m) + " --k 10 --out " + out.string();
  }
  std::string oracle() const { return " --oracle " + (data_ / "oracle.txt").string(); }

  fs::path dir_;
  fs::path data_;
};

TEST_F(Cli, ManifestPerPair) {
  ASSERT_EQ(sh(dir_, "select " + select_args(2, dir_ / "two")).code, 0);
  EXPECT_EQ(manifest_count(dir_ / "two"), 1u);
  ASSERT_EQ(sh(dir_, "select " + select_args(11, dir_ / "eleven")).code, 0);
  EXPECT_EQ(manifest_count(dir_ / "eleven"), 55u);
}

TEST_F(Cli, StagesMatchRunAndRerunsAreByteIdentical) {
  const auto staged = dir_ / "staged";
  const auto whole = dir_ / "whole";
  ASSERT_EQ(sh(dir_, "select " + select_args(4, staged)).code, 0);
  ASSERT_EQ(sh(dir_, "label --out " + staged.string() + oracle()).code, 0);
  const auto verdicts = slurp(staged / "verdicts.csv");
  ASSERT_EQ(sh(dir_, "label --out " + staged.string() + oracle()).code, 0);
  EXPECT_EQ(slurp(staged / "verdicts.csv"), verdicts);
  const auto ranked = sh(dir_, "rank --out " + staged.string());
  ASSERT_EQ(ranked.code, 0) << ranked.err;

  const auto ran = sh(dir_, "run " + select_args(4, whole) + oracle());
  ASSERT_EQ(ran.code, 0) << ran.err;
  EXPECT_EQ(ran.out, ranked.out);
  EXPECT_EQ(slurp(whole / "verdicts.csv"), verdicts);
  EXPECT_EQ(slurp(whole / "ranking.json"), slurp(staged / "ranking.json"));
  for (const auto& e : fs::directory_iterator(staged / "manifests"))
    EXPECT_EQ(slurp(e.path()), slurp(whole / "manifests" / e.path().filename())) << e.path();

  const auto before = slurp(whole / "manifests" / "pair-0-1.csv");
  ASSERT_EQ(sh(dir_, "run " + select_args(4, whole) + oracle()).code, 0);
  EXPECT_EQ(slurp(whole / "manifests" / "pair-0-1.csv"), before);
  EXPECT_EQ(slurp(whole / "verdicts.csv"), verdicts);
}

TEST_F(Cli, StageErrorsAreNamed) {
  auto r = sh(dir_, "rank --out " + (dir_ / "nothing").string());
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("mad rank: error:"), std::string::npos) << r.err;

  std::ofstream(dir_ / "bad.csv") << "img1,notalabel,0.9\n";
  r = sh(dir_, "select --taxonomy " + (data_ / "taxonomy.txt").string() + " --predictions " +
                   (data_ / "clf1.csv").string() + " " + (dir_ / "bad.csv").string() + " --out " +
                   (dir_ / "bad").string());
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("mad select: error:"), std::string::npos) << r.err;

  r = sh(dir_, "select --taxonomy " + (data_ / "taxonomy.txt").string() + models_flag(data_, 1) + " --out x");
  EXPECT_NE(r.code, 0);
}

TEST_F(Cli, AddModelAndStability) {
  const auto out = dir_ / "grow";
  ASSERT_EQ(sh(dir_, "run " + select_args(3, out) + oracle()).code, 0);
  const auto r =
      sh(dir_, "add-model --out " + out.string() + " --new-predictions " + (data_ / "clf4.csv").string() + oracle());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("labeled "), std::string::npos);
  EXPECT_EQ(manifest_count(out), 6u);
  EXPECT_EQ(mad::store::load_settings(mad::store::Layout(out)).models.size(), 4u);

  const auto s = sh(dir_, "stability --out " + out.string());
  ASSERT_EQ(s.code, 0) << s.err;
  std::istringstream lines(slurp(out / "stability.csv"));
  std::string line;
  std::size_t rows = 0;
  while (std::getline(lines, line))
    if (!line.empty() && std::isdigit(static_cast<unsigned char>(line[0]))) ++rows;
  EXPECT_EQ(rows, 9u);
}

TEST_F(Cli, ConfigFile) {
  std::ofstream(dir_ / "mad.toml") << "[select]\nk = 4\n";
  const auto out = dir_ / "cfg";
  ASSERT_EQ(sh(dir_, "--config " + (dir_ / "mad.toml").string() + " select --taxonomy " +
                         (data_ / "taxonomy.txt").string() + models_flag(data_, 2) + " --out " + out.string())
                .code,
            0);
  EXPECT_EQ(mad::store::load_settings(mad::store::Layout(out)).config.selection.k, 4u);
}

}  // namespace
