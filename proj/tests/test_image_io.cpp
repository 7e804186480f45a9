#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "seg/mask_io.hpp"
#include "test_support.hpp"

using namespace seg;
using segtest::TempDir;

namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST(Pgm, DecodesRawSamples) {
  TempDir dir("pgm");
  const auto path = dir.path() / "t.pgm";
  spit(path, std::string("P5\n2 2\n255\n") + '\0' + '\x80' + '\xff' + '\x40');
  const ScalarField f = read_pgm(path);
  ASSERT_EQ(f.shape, GridShape({2, 2}));
  EXPECT_EQ(f.values, (std::vector<double>{0, 128, 255, 64}));
}

TEST(Pgm, RejectsAsciiMagic) {
  TempDir dir("pgm");
  const auto path = dir.path() / "t.pgm";
  spit(path, "P2\n2 2\n255\n0 1 2 3\n");
  try {
    read_pgm(path);
    FAIL() << "expected parse_error";
  } catch (const parse_error& e) {
    EXPECT_NE(std::string(e.what()).find("unsupported magic"), std::string::npos);
    EXPECT_EQ(e.offset(), 0u);
  }
}

TEST(Pgm, TruncatedPayloadNamesOffset) {
  TempDir dir("pgm");
  const auto path = dir.path() / "t.pgm";
  spit(path, "P5\n2 2\n255\nab");  // 2 of 4 payload bytes
  try {
    read_pgm(path);
    FAIL() << "expected parse_error";
  } catch (const parse_error& e) {
    EXPECT_NE(std::string(e.what()).find("truncated"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("byte offset"), std::string::npos);
  }
}

TEST(Pgm, RejectsUnsupportedMaxval) {
  TempDir dir("pgm");
  const auto path = dir.path() / "t.pgm";
  spit(path, "P5\n1 1\n100\nx");
  EXPECT_THROW(read_pgm(path), parse_error);
}

TEST(Pgm, SkipsHeaderComments) {
  TempDir dir("pgm");
  const auto path = dir.path() / "t.pgm";
  spit(path, "P5\n# a comment\n1 # another\n1\n255\n\x07");
  const ScalarField f = read_pgm(path);
  EXPECT_EQ(f.values, std::vector<double>{7});
}

TEST(Pgm, SingleCellPayloadByte) {
  TempDir dir("pgm");
  const auto path = dir.path() / "t.pgm";
  write_pgm(ScalarField(GridShape({1, 1}), {7.0}), 255, path);
  const auto bytes = slurp(path);
  ASSERT_FALSE(bytes.empty());
  EXPECT_EQ(bytes.back(), 0x07);
}

TEST(Pgm, MaskScaledPayloadIsBinary) {
  GridShape shape({3, 3});
  BinaryMask m(shape, {1, 0, 1, 0, 1, 0, 0, 0, 1});
  TempDir dir("pgm");
  const auto path = dir.path() / "m.pgm";
  save_mask(m, path);
  const auto bytes = slurp(path);
  const std::string header = "P5\n3 3\n255\n";
  ASSERT_EQ(bytes.size(), header.size() + 9);
  for (std::size_t i = header.size(); i < bytes.size(); ++i)
    EXPECT_TRUE(bytes[i] == 0 || bytes[i] == 255) << "payload byte " << int(bytes[i]);
  EXPECT_EQ(load_mask(path), m);
}

TEST(Pgm, WriteRejects3dAndRange) {
  ScalarField vol(GridShape({2, 2, 2}), 0.0);
  TempDir dir("pgm");
  EXPECT_THROW(write_pgm(vol, 255, dir.path() / "v.pgm"), std::invalid_argument);
  ScalarField bad(GridShape({1, 2}), {0.0, 300.0});
  EXPECT_THROW(write_pgm(bad, 255, dir.path() / "b.pgm"), std::range_error);
  ScalarField neg(GridShape({1, 2}), {-1.0, 0.0});
  EXPECT_THROW(write_pgm(neg, 255, dir.path() / "n.pgm"), std::range_error);
}

// write o read must reproduce canonical files byte for byte, and read o write
// must be the identity on sample values; checked over random fields.
TEST(Pgm, RoundTripProperty) {
  std::mt19937_64 rng(42);
  TempDir dir("pgm");
  for (int trial = 0; trial < 20; ++trial) {
    const int h = 1 + int(rng() % 12), w = 1 + int(rng() % 12);
    const int maxval = trial % 2 ? 255 : 65535;
    ScalarField f(GridShape({h, w}));
    for (double& v : f.values) v = double(rng() % (maxval + 1));
    const auto path = dir.path() / ("rt" + std::to_string(trial) + ".pgm");
    write_pgm(f, maxval, path);
    const ScalarField back = read_pgm(path);
    ASSERT_EQ(back.shape, f.shape);
    EXPECT_EQ(back.values, f.values);

    const auto path2 = dir.path() / "again.pgm";
    write_pgm(back, maxval, path2);
    EXPECT_EQ(slurp(path), slurp(path2));
  }
}

TEST(MetaImage, ReadsLocalVolume) {
  TempDir dir("meta");
  const auto path = dir.path() / "v.mha";
  std::string header =
      "NDims = 3\nDimSize = 2 2 2\nElementType = MET_UCHAR\nElementDataFile = LOCAL\n";
  std::string payload = "\x01\x02\x03\x04\x05\x06\x07\x08";
  spit(path, header + payload);
  const ScalarField f = read_metaimage(path);
  ASSERT_EQ(f.shape, GridShape({2, 2, 2}));
  EXPECT_EQ(f.values, (std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8}));
}

TEST(MetaImage, PayloadSizeMismatch) {
  TempDir dir("meta");
  const auto path = dir.path() / "v.mha";
  spit(path, "NDims = 3\nDimSize = 2 2 2\nElementType = MET_UCHAR\nElementDataFile = LOCAL\n"
             "\x01\x02\x03\x04\x05\x06\x07");  // 7 of 8 bytes
  try {
    read_metaimage(path);
    FAIL() << "expected parse_error";
  } catch (const parse_error& e) {
    EXPECT_NE(std::string(e.what()).find("payload size mismatch"), std::string::npos);
  }
}

TEST(MetaImage, MissingRequiredKey) {
  TempDir dir("meta");
  const auto path = dir.path() / "v.mha";
  spit(path, "NDims = 2\nDimSize = 2 2\nElementDataFile = LOCAL\n\x01\x02\x03\x04");
  try {
    read_metaimage(path);
    FAIL() << "expected parse_error";
  } catch (const parse_error& e) {
    EXPECT_NE(std::string(e.what()).find("ElementType"), std::string::npos);
  }
}

TEST(MetaImage, RejectsUnknownElementType) {
  TempDir dir("meta");
  const auto path = dir.path() / "v.mha";
  spit(path, "NDims = 2\nDimSize = 1 1\nElementType = MET_DOUBLE\nElementDataFile = LOCAL\n"
             "\x01\x02\x03\x04\x05\x06\x07\x08");
  EXPECT_THROW(read_metaimage(path), parse_error);
}

TEST(MetaImage, DimSizeMapsXyzToZyx) {
  TempDir dir("meta");
  const auto path = dir.path() / "v.mha";
  // X=3, Y=2, Z=1 -> shape (1, 2, 3)
  spit(path, "NDims = 3\nDimSize = 3 2 1\nElementType = MET_UCHAR\nElementDataFile = LOCAL\n"
             "\x01\x02\x03\x04\x05\x06");
  const ScalarField f = read_metaimage(path);
  ASSERT_EQ(f.shape, GridShape({1, 2, 3}));
  EXPECT_EQ(f.at(0, 1, 2), 6.0);
  EXPECT_EQ(f.at(0, 0, 0), 1.0);
}

TEST(MetaImage, WriteZeroVolume) {
  TempDir dir("meta");
  const auto path = dir.path() / "z.mha";
  write_metaimage(ScalarField(GridShape({2, 2, 2}), 0.0), MetaElementType::met_uchar, path);
  const auto bytes = slurp(path);
  ASSERT_GE(bytes.size(), 8u);
  for (std::size_t i = bytes.size() - 8; i < bytes.size(); ++i) EXPECT_EQ(bytes[i], 0);
}

TEST(MetaImage, HeaderKeyOrderIsFixed) {
  TempDir dir("meta");
  const auto path = dir.path() / "k.mha";
  write_metaimage(ScalarField(GridShape({2, 3}), 1.0), MetaElementType::met_uchar, path);
  const auto bytes = slurp(path);
  const std::string text(bytes.begin(), bytes.end());
  const auto p0 = text.find("NDims = 2");
  const auto p1 = text.find("DimSize = 3 2");
  const auto p2 = text.find("ElementType = MET_UCHAR");
  const auto p3 = text.find("ElementDataFile = LOCAL");
  ASSERT_NE(p0, std::string::npos);
  EXPECT_TRUE(p0 < p1 && p1 < p2 && p2 < p3);
}

TEST(MetaImage, RoundTripAllElementTypes) {
  std::mt19937_64 rng(7);
  TempDir dir("meta");
  const GridShape shape({3, 4, 5});
  struct Case {
    MetaElementType type;
    double lo, hi;
  };
  for (const Case c : {Case{MetaElementType::met_uchar, 0, 255},
                       Case{MetaElementType::met_short, -32768, 32767},
                       Case{MetaElementType::met_ushort, 0, 65535}}) {
    ScalarField f(shape);
    for (double& v : f.values) v = std::floor(c.lo + (c.hi - c.lo) * segtest::uniform01(rng));
    const auto path = dir.path() / "rt.mha";
    write_metaimage(f, c.type, path);
    EXPECT_EQ(read_metaimage(path).values, f.values);
  }

  // float storage: exact to 32-bit precision
  ScalarField f(shape);
  for (double& v : f.values) v = 1000.0 * (segtest::uniform01(rng) - 0.5);
  const auto path = dir.path() / "rtf.mha";
  write_metaimage(f, MetaElementType::met_float, path);
  const ScalarField back = read_metaimage(path);
  for (std::size_t i = 0; i < f.values.size(); ++i)
    EXPECT_NEAR(back.values[i], f.values[i], std::abs(f.values[i]) * 1e-7 + 1e-30);
}

TEST(MetaImage, HeaderNormalizedRoundTripIsIdentity) {
  TempDir dir("meta");
  ScalarField f(GridShape({2, 2}), {9, 8, 7, 6});
  const auto a = dir.path() / "a.mha";
  const auto b = dir.path() / "b.mha";
  write_metaimage(f, MetaElementType::met_uchar, a);
  write_metaimage(read_metaimage(a), MetaElementType::met_uchar, b);
  EXPECT_EQ(slurp(a), slurp(b));
}

TEST(MetaImage, MhdWritesSiblingRaw) {
  TempDir dir("meta");
  const auto path = dir.path() / "vol.mhd";
  ScalarField f(GridShape({2, 2}), {1, 2, 3, 4});
  write_metaimage(f, MetaElementType::met_ushort, path);
  EXPECT_TRUE(std::filesystem::exists(dir.path() / "vol.raw"));
  EXPECT_EQ(read_metaimage(path).values, f.values);
}

TEST(MaskIo, LoaderBinarizesPositiveSamples) {
  TempDir dir("mask");
  const auto path = dir.path() / "m.pgm";
  write_pgm(ScalarField(GridShape({1, 4}), {0, 1, 128, 255}), 255, path);
  const BinaryMask m = load_mask(path);
  EXPECT_EQ(m.values, (std::vector<std::uint8_t>{0, 1, 1, 1}));
}

TEST(MaskIo, ThreeDimensionalMasksUseMetaImage) {
  TempDir dir("mask");
  BinaryMask m(GridShape({2, 2, 2}), {1, 0, 0, 1, 1, 1, 0, 0});
  const auto path = dir.path() / "m.mha";
  save_mask(m, path);
  EXPECT_EQ(load_mask(path), m);

  const auto ones_path = dir.path() / "m1.mha";
  save_mask(m, ones_path, /*foreground=*/1);
  const ScalarField raw = read_metaimage(ones_path);
  for (std::size_t i = 0; i < raw.values.size(); ++i)
    EXPECT_EQ(raw.values[i], double(m.values[i]));
}
