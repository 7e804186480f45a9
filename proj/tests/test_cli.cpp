// Drives the segtool binary (path in SEGTOOL_BIN) end to end.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "seg/drlse.hpp"
#include "seg/evalkit.hpp"
#include "seg/ictm.hpp"
#include "seg/mask_io.hpp"
#include "test_support.hpp"

using namespace seg;
using segtest::TempDir;

namespace {

struct CmdResult {
  int code = -1;
  std::string out;
};

std::string tool_path() {
  const char* bin = std::getenv("SEGTOOL_BIN");
  if (!bin) {
    ADD_FAILURE() << "SEGTOOL_BIN is not set";
    return "";
  }
  return bin;
}

CmdResult run_tool(const std::string& args) {
  const std::string cmd = tool_path() + " " + args + " 2>/dev/null";
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) {
    ADD_FAILURE() << "popen failed for: " << cmd;
    return {};
  }
  CmdResult res;
  char buf[512];
  while (std::fgets(buf, sizeof(buf), pipe)) res.out += buf;
  const int status = pclose(pipe);
  res.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return res;
}

std::vector<std::uint8_t> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

// small two-disc fixture everything below shares
void make_fixture(const TempDir& dir) {
  const CmdResult res = run_tool("synth two-discs --dims 64x64 --radius 8 --out-image " +
                                 (dir.path() / "img.pgm").string() + " --out-truth " +
                                 (dir.path() / "truth.pgm").string());
  ASSERT_EQ(res.code, 0) << res.out;
}

std::string base_config(const TempDir& dir) {
  return "input = " + (dir.path() / "img.pgm").string() +
         "\ntruth = " + (dir.path() / "truth.pgm").string() +
         "\ninit_rule = rect:10,6,54,58\n"
         "edge.sigma = 1.5\n"
         "ictm.tau = 2\n"
         "ictm.lambda = 0.3\n";
}

}  // namespace

TEST(CliSynth, DeterministicReruns) {
  TempDir dir("synth");
  const std::string args = "synth two-discs --dims 64x64 --seed 7 --noise 8 --out-image " +
                           (dir.path() / "a.pgm").string() + " --out-truth " +
                           (dir.path() / "at.pgm").string();
  const CmdResult first = run_tool(args);
  ASSERT_EQ(first.code, 0);
  EXPECT_NE(first.out.find("image="), std::string::npos);
  EXPECT_NE(first.out.find("truth="), std::string::npos);

  const std::string args2 = "synth two-discs --dims 64x64 --seed 7 --noise 8 --out-image " +
                            (dir.path() / "b.pgm").string() + " --out-truth " +
                            (dir.path() / "bt.pgm").string();
  ASSERT_EQ(run_tool(args2).code, 0);
  EXPECT_EQ(slurp(dir.path() / "a.pgm"), slurp(dir.path() / "b.pgm"));
  EXPECT_EQ(slurp(dir.path() / "at.pgm"), slurp(dir.path() / "bt.pgm"));
}

TEST(CliSynth, MissingRequiredFlagExitsTwo) {
  TempDir dir("synth");
  const CmdResult res =
      run_tool("synth two-discs --out-truth " + (dir.path() / "t.pgm").string());
  EXPECT_EQ(res.code, 2);
}

TEST(CliSynth, UnknownKindExitsTwo) {
  TempDir dir("synth");
  const CmdResult res = run_tool("synth blob --out-image " + (dir.path() / "i.pgm").string() +
                                 " --out-truth " + (dir.path() / "t.pgm").string());
  EXPECT_EQ(res.code, 2);
}

TEST(CliSynth, ThreeDimensionalVolumes) {
  TempDir dir("synth3d");
  const CmdResult res = run_tool("synth two-discs --dims 24x24x24 --radius 4 --out-image " +
                                 (dir.path() / "v.mha").string() + " --out-truth " +
                                 (dir.path() / "vt.mha").string());
  ASSERT_EQ(res.code, 0);
  const ScalarField vol = read_metaimage(dir.path() / "v.mha");
  EXPECT_EQ(vol.shape, GridShape({24, 24, 24}));
  EXPECT_EQ(connected_components(load_mask(dir.path() / "vt.mha")), 2);
}

TEST(CliSegment, RunsAndIsDeterministic) {
  TempDir dir("seg");
  make_fixture(dir);
  const auto cfg_path = dir.path() / "run.cfg";
  write_file(cfg_path, "method = ictm\n" + base_config(dir) +
                           "output = " + (dir.path() / "mask.pgm").string() +
                           "\ntrace_csv = " + (dir.path() / "trace.csv").string() + "\n");

  const CmdResult res = run_tool("segment " + cfg_path.string());
  ASSERT_EQ(res.code, 0) << res.out;
  EXPECT_NE(res.out.find("method=ictm"), std::string::npos);
  EXPECT_NE(res.out.find("converged=true"), std::string::npos);
  EXPECT_NE(res.out.find("iters="), std::string::npos);
  EXPECT_NE(res.out.find("energy="), std::string::npos);
  EXPECT_NE(res.out.find("time_s="), std::string::npos);

  const auto mask_bytes = slurp(dir.path() / "mask.pgm");
  const auto trace_bytes = slurp(dir.path() / "trace.csv");
  ASSERT_EQ(run_tool("segment " + cfg_path.string()).code, 0);
  EXPECT_EQ(slurp(dir.path() / "mask.pgm"), mask_bytes);
  EXPECT_EQ(slurp(dir.path() / "trace.csv"), trace_bytes);

  const BinaryMask mask = load_mask(dir.path() / "mask.pgm");
  EXPECT_EQ(connected_components(mask), 2);
}

TEST(CliSegment, FlagOverridesBeatConfig) {
  TempDir dir("seg");
  make_fixture(dir);
  const auto cfg_path = dir.path() / "run.cfg";
  write_file(cfg_path, "method = ictm\n" + base_config(dir) +
                           "output = " + (dir.path() / "mask.pgm").string() + "\n");
  // lambda = -1.5 fills the whole grid regardless of the config's 0.3
  const CmdResult res = run_tool("segment " + cfg_path.string() + " --set ictm.lambda=-1.5");
  ASSERT_EQ(res.code, 0);
  EXPECT_EQ(load_mask(dir.path() / "mask.pgm").foreground_count(), 64u * 64u);
}

TEST(CliSegment, MaxIterOneExitsFiveAndWritesFirstSweep) {
  TempDir dir("seg");
  make_fixture(dir);
  const auto cfg_path = dir.path() / "run.cfg";
  write_file(cfg_path, "method = ictm\n" + base_config(dir) + "ictm.max_iter = 1\noutput = " +
                           (dir.path() / "mask.pgm").string() + "\n");
  const CmdResult res = run_tool("segment " + cfg_path.string());
  EXPECT_EQ(res.code, 5);
  EXPECT_NE(res.out.find("converged=false"), std::string::npos);

  // the written mask must equal one thresholding sweep from the init
  const ScalarField image = read_pgm(dir.path() / "img.pgm");
  const ScalarField g = edge_indicator(image, {.sigma = 1.5, .normalize_input = true});
  BinaryMask init(g.shape);
  for (int y = 10; y <= 54; ++y)
    for (int x = 6; x <= 58; ++x) init.at(y, x) = 1;
  const IctmParams params{.tau = 2.0, .lambda = 0.3};
  const BinaryMask expected = threshold(linearized_potential(g, sqrt_field(g), init, params));
  EXPECT_EQ(load_mask(dir.path() / "mask.pgm"), expected);
}

TEST(CliSegment, ConfigErrorsExitTwo) {
  TempDir dir("seg");
  make_fixture(dir);
  const auto cfg_path = dir.path() / "run.cfg";
  write_file(cfg_path, "method = ictm\n" + base_config(dir));  // no output key
  EXPECT_EQ(run_tool("segment " + cfg_path.string()).code, 2);

  write_file(cfg_path, "method = magic\n" + base_config(dir) +
                           "output = " + (dir.path() / "m.pgm").string() + "\n");
  EXPECT_EQ(run_tool("segment " + cfg_path.string()).code, 2);
}

TEST(CliSegment, NumericalBlowupExitsFour) {
  TempDir dir("seg");
  make_fixture(dir);
  const auto cfg_path = dir.path() / "run.cfg";
  write_file(cfg_path, "method = drlse\n" + base_config(dir) + "drlse.dt = 1e200\noutput = " +
                           (dir.path() / "mask.pgm").string() + "\n");
  EXPECT_EQ(run_tool("segment " + cfg_path.string()).code, 4);
}

TEST(CliSegment, MissingInputExitsThree) {
  TempDir dir("seg");
  const auto cfg_path = dir.path() / "run.cfg";
  write_file(cfg_path, "method = ictm\ninput = " + (dir.path() / "nope.pgm").string() +
                           "\ninit_rule = rect:0,0,9,9\nictm.lambda = 0.3\noutput = " +
                           (dir.path() / "m.pgm").string() + "\n");
  EXPECT_EQ(run_tool("segment " + cfg_path.string()).code, 3);
}

TEST(CliSegment, SnapshotsMatchInLibraryCallback) {
  TempDir dir("snap");
  make_fixture(dir);
  const auto cfg_path = dir.path() / "run.cfg";
  write_file(cfg_path, "method = ictm\n" + base_config(dir) +
                           "output = " + (dir.path() / "mask.pgm").string() +
                           "\nsnapshot_every = 2\nsnapshot_dir = " +
                           (dir.path() / "snaps").string() + "\n");
  ASSERT_EQ(run_tool("segment " + cfg_path.string()).code, 0);

  const ScalarField image = read_pgm(dir.path() / "img.pgm");
  const ScalarField g = edge_indicator(image, {.sigma = 1.5, .normalize_input = true});
  BinaryMask init(g.shape);
  for (int y = 10; y <= 54; ++y)
    for (int x = 6; x <= 58; ++x) init.at(y, x) = 1;
  const IctmParams params{.tau = 2.0, .lambda = 0.3};

  int checked = 0;
  ictm_run(g, init, params, [&](int iteration, const BinaryMask& mask) {
    if (iteration % 2 != 0) return;
    char name[32];
    std::snprintf(name, sizeof(name), "iter_%06d.pgm", iteration);
    const auto snap_path = dir.path() / "snaps" / name;
    ASSERT_TRUE(std::filesystem::exists(snap_path)) << name;
    EXPECT_EQ(load_mask(snap_path), mask) << name;
    ++checked;
  });
  EXPECT_GT(checked, 0);
}

TEST(CliEval, ReportsDiceAndComponents) {
  TempDir dir("eval");
  make_fixture(dir);
  const std::string truth = (dir.path() / "truth.pgm").string();
  const CmdResult same = run_tool("eval --pred " + truth + " --truth " + truth);
  ASSERT_EQ(same.code, 0);
  EXPECT_NE(same.out.find("dice=1.0000"), std::string::npos);
  EXPECT_NE(same.out.find("components_pred=2"), std::string::npos);
  EXPECT_NE(same.out.find("components_truth=2"), std::string::npos);

  // disjoint masks
  BinaryMask a(GridShape({8, 8})), b(GridShape({8, 8}));
  a.at(0, 0) = 1;
  b.at(7, 7) = 1;
  save_mask(a, dir.path() / "a.pgm");
  save_mask(b, dir.path() / "b.pgm");
  const CmdResult disjoint = run_tool("eval --pred " + (dir.path() / "a.pgm").string() +
                                      " --truth " + (dir.path() / "b.pgm").string());
  ASSERT_EQ(disjoint.code, 0);
  EXPECT_NE(disjoint.out.find("dice=0.0000"), std::string::npos);
}

TEST(CliEval, ShapeMismatchExitsSix) {
  TempDir dir("eval");
  save_mask(BinaryMask(GridShape({8, 8})), dir.path() / "a.pgm");
  save_mask(BinaryMask(GridShape({8, 9})), dir.path() / "b.pgm");
  EXPECT_EQ(run_tool("eval --pred " + (dir.path() / "a.pgm").string() + " --truth " +
                     (dir.path() / "b.pgm").string())
                .code,
            6);
}

TEST(CliCompare, RunsBothSolversAndReportsSpeedup) {
  TempDir dir("cmp");
  make_fixture(dir);
  const auto cfg_path = dir.path() / "run.cfg";
  write_file(cfg_path, base_config(dir) +
                           "ictm.output = " + (dir.path() / "ictm.pgm").string() +
                           "\nictm.trace_csv = " + (dir.path() / "ictm.csv").string() +
                           "\ndrlse.lambda = 3\ndrlse.output = " +
                           (dir.path() / "drlse.pgm").string() +
                           "\ndrlse.trace_csv = " + (dir.path() / "drlse.csv").string() + "\n");
  const CmdResult res = run_tool("compare " + cfg_path.string());
  ASSERT_EQ(res.code, 0) << res.out;
  EXPECT_NE(res.out.find("method=ictm"), std::string::npos);
  EXPECT_NE(res.out.find("method=drlse"), std::string::npos);
  EXPECT_NE(res.out.find("dice="), std::string::npos);
  EXPECT_NE(res.out.find("components="), std::string::npos);
  EXPECT_NE(res.out.find("speedup_iters="), std::string::npos);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "ictm.pgm"));
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "drlse.pgm"));
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "ictm.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "drlse.csv"));

  // reruns are byte-identical
  const auto ictm_bytes = slurp(dir.path() / "ictm.pgm");
  const auto csv_bytes = slurp(dir.path() / "ictm.csv");
  ASSERT_EQ(run_tool("compare " + cfg_path.string()).code, 0);
  EXPECT_EQ(slurp(dir.path() / "ictm.pgm"), ictm_bytes);
  EXPECT_EQ(slurp(dir.path() / "ictm.csv"), csv_bytes);
}

// Both solvers recover the bright square from an enclosing rectangle; the
// iterative scheme parks essentially on the boundary (corners round by a few
// cells), the level set baseline a little inside it.
TEST(CliCompare, BrightSquareBothSolversRecoverTheObject) {
  TempDir dir("cmpsq");
  ASSERT_EQ(run_tool("synth bright-square --dims 64x64 --extent 32 --out-image " +
                     (dir.path() / "sq.pgm").string() + " --out-truth " +
                     (dir.path() / "sqt.pgm").string())
                .code,
            0);
  const auto cfg_path = dir.path() / "run.cfg";
  write_file(cfg_path, "input = " + (dir.path() / "sq.pgm").string() +
                           "\ntruth = " + (dir.path() / "sqt.pgm").string() +
                           "\ninit_rule = rect:6,6,57,57\n"
                           "edge.sigma = 0.8\n"
                           "ictm.tau = 0.5\nictm.lambda = 0.3\n"
                           "ictm.output = " + (dir.path() / "mi.pgm").string() +
                           "\ndrlse.lambda = 3\ndrlse.output = " +
                           (dir.path() / "md.pgm").string() + "\n");
  const CmdResult res = run_tool("compare " + cfg_path.string());
  ASSERT_EQ(res.code, 0) << res.out;

  const BinaryMask truth = load_mask(dir.path() / "sqt.pgm");
  const BinaryMask ictm_mask = load_mask(dir.path() / "mi.pgm");
  const BinaryMask drlse_mask = load_mask(dir.path() / "md.pgm");
  EXPECT_GE(dice(ictm_mask, truth), 0.99);
  EXPECT_GE(dice(drlse_mask, truth), 0.93);
  EXPECT_EQ(connected_components(ictm_mask), 1);
  EXPECT_EQ(connected_components(drlse_mask), 1);
}

TEST(CliCompare, MissingDrlseBlockExitsTwo) {
  TempDir dir("cmp");
  make_fixture(dir);
  const auto cfg_path = dir.path() / "run.cfg";
  write_file(cfg_path, base_config(dir) +
                           "ictm.output = " + (dir.path() / "ictm.pgm").string() + "\n");
  EXPECT_EQ(run_tool("compare " + cfg_path.string()).code, 2);
}

TEST(CliHelp, TopLevelHelpWorks) {
  const CmdResult res = run_tool("--help");
  EXPECT_EQ(res.code, 0);
  EXPECT_NE(res.out.find("synth"), std::string::npos);
  EXPECT_NE(res.out.find("segment"), std::string::npos);
  EXPECT_NE(res.out.find("eval"), std::string::npos);
  EXPECT_NE(res.out.find("compare"), std::string::npos);
}
