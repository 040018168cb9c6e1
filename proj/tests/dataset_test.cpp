#include "robustnmf/dataset.hpp"

#include <gtest/gtest.h>

#include <fstream>

#include "testutil.hpp"

using namespace robustnmf;

TEST(Pgm, LoadsAsciiWithComments) {
  testutil::TempDir tmp("pgm_p2");
  const auto path = tmp.path() / "a.pgm";
  {
    std::ofstream os(path);
    os << "P2\n# a comment\n3 2\n255\n0 128 255\n64 32 16\n";
  }
  const GrayImage img = load_pgm(path);
  EXPECT_EQ(img.width, 3u);
  EXPECT_EQ(img.height, 2u);
  EXPECT_DOUBLE_EQ(img.pixels[0], 0.0);
  EXPECT_DOUBLE_EQ(img.pixels[2], 1.0);
  EXPECT_DOUBLE_EQ(img.pixels[3], 64.0 / 255.0);
}

TEST(Pgm, LoadsBinaryAndRoundTrips) {
  testutil::TempDir tmp("pgm_p5");
  const auto path = tmp.path() / "b.pgm";
  std::vector<unsigned char> px{0, 51, 102, 153, 204, 255};
  testutil::write_pgm_p5(path, 3, 2, px);
  const GrayImage img = load_pgm(path);
  ASSERT_EQ(img.pixels.size(), 6u);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_DOUBLE_EQ(img.pixels[i], px[i] / 255.0);
  }
  const auto out = tmp.path() / "c.pgm";
  save_pgm(out, img);
  const GrayImage back = load_pgm(out);
  EXPECT_EQ(back.pixels, img.pixels);  // 8-bit values are exact multiples of 1/255
}

TEST(Pgm, SixteenBitScaling) {
  testutil::TempDir tmp("pgm16");
  const auto path = tmp.path() / "w.pgm";
  {
    std::ofstream os(path, std::ios::binary);
    os << "P5\n1 1\n65535\n";
    const unsigned char hi[2] = {0xFF, 0xFF};
    os.write(reinterpret_cast<const char*>(hi), 2);
  }
  const GrayImage img = load_pgm(path);
  EXPECT_DOUBLE_EQ(img.pixels[0], 1.0);
}

TEST(Pgm, RejectsGarbageAndTruncation) {
  testutil::TempDir tmp("pgmbad");
  const auto bad = tmp.path() / "bad.pgm";
  {
    std::ofstream os(bad);
    os << "P6\n2 2\n255\n";
  }
  EXPECT_THROW(load_pgm(bad), DataError);
  const auto trunc = tmp.path() / "trunc.pgm";
  {
    std::ofstream os(trunc, std::ios::binary);
    os << "P5\n4 4\n255\nab";
  }
  EXPECT_THROW(load_pgm(trunc), DataError);
}

TEST(LoadImageDir, SubjectFoldersToColumnsAndLabels) {
  testutil::TempDir tmp("orl");
  // 2 subjects x 2 identical 2x2 images
  const std::vector<unsigned char> px{10, 20, 30, 40};
  for (int s = 1; s <= 2; ++s) {
    fs::create_directories(tmp.path() / ("s" + std::to_string(s)));
    for (int i = 1; i <= 2; ++i) {
      testutil::write_pgm_p5(tmp.path() / ("s" + std::to_string(s)) / (std::to_string(i) + ".pgm"),
                             2, 2, px);
    }
  }
  const Dataset ds = load_image_dir(tmp.path(), DatasetLayout::kOrl);
  EXPECT_EQ(ds.x.rows(), 4u);  // pixels
  EXPECT_EQ(ds.x.cols(), 4u);  // images
  EXPECT_EQ(ds.labels, (LabelVector{0, 0, 1, 1}));
  EXPECT_EQ(ds.image_height, 2u);
  EXPECT_EQ(ds.image_width, 2u);
  EXPECT_EQ(ds.n_subjects(), 2u);
  EXPECT_DOUBLE_EQ(ds.x(0, 0), 10.0 / 255.0);
  EXPECT_DOUBLE_EQ(ds.x(3, 3), 40.0 / 255.0);
}

TEST(LoadImageDir, SingleWhitePixel) {
  testutil::TempDir tmp("white");
  fs::create_directories(tmp.path() / "s1");
  testutil::write_pgm_p5(tmp.path() / "s1" / "1.pgm", 1, 1, {255});
  const Dataset ds = load_image_dir(tmp.path(), DatasetLayout::kYaleb);
  EXPECT_EQ(ds.x.rows(), 1u);
  EXPECT_EQ(ds.x.cols(), 1u);
  EXPECT_DOUBLE_EQ(ds.x(0, 0), 1.0);
}

TEST(LoadImageDir, EmptyDirErrors) {
  testutil::TempDir tmp("empty");
  EXPECT_THROW(load_image_dir(tmp.path(), DatasetLayout::kOrl), DataError);
  EXPECT_THROW(load_image_dir(tmp.path() / "missing", DatasetLayout::kOrl), DataError);
}

TEST(LoadImageDir, InconsistentDimensionsError) {
  testutil::TempDir tmp("mixed");
  fs::create_directories(tmp.path() / "s1");
  testutil::write_pgm_p5(tmp.path() / "s1" / "1.pgm", 2, 2, {1, 2, 3, 4});
  testutil::write_pgm_p5(tmp.path() / "s1" / "2.pgm", 1, 2, {1, 2});
  EXPECT_THROW(load_image_dir(tmp.path(), DatasetLayout::kOrl), DataError);
}

TEST(LoadImageDir, DeterministicLexicographicOrder) {
  testutil::TempDir tmp("order");
  // create in non-sorted order; loader must sort (s1, s10, s2)
  for (const char* name : {"s2", "s10", "s1"}) {
    fs::create_directories(tmp.path() / name);
    testutil::write_pgm_p5(tmp.path() / name / "1.pgm", 1, 1,
                           {static_cast<unsigned char>(name[1])});
  }
  const Dataset ds = load_image_dir(tmp.path(), DatasetLayout::kOrl);
  ASSERT_EQ(ds.x.cols(), 3u);
  // lexicographic: s1 < s10 < s2
  EXPECT_DOUBLE_EQ(ds.x(0, 0), static_cast<double>('1') / 255.0);
  EXPECT_DOUBLE_EQ(ds.x(0, 1), static_cast<double>('1') / 255.0);
  EXPECT_DOUBLE_EQ(ds.x(0, 2), static_cast<double>('2') / 255.0);
  EXPECT_EQ(ds.labels, (LabelVector{0, 1, 2}));
}

TEST(LoadImageDir, FlatLayoutParsesLabels) {
  testutil::TempDir tmp("flat");
  const std::vector<unsigned char> px{7};
  testutil::write_pgm_p5(tmp.path() / "cat_0.pgm", 1, 1, px);
  testutil::write_pgm_p5(tmp.path() / "cat_1.pgm", 1, 1, px);
  testutil::write_pgm_p5(tmp.path() / "dog_0.pgm", 1, 1, px);
  const Dataset ds = load_image_dir(tmp.path(), DatasetLayout::kFlat);
  EXPECT_EQ(ds.labels, (LabelVector{0, 0, 1}));
  testutil::write_pgm_p5(tmp.path() / "nolabel.pgm", 1, 1, px);
  EXPECT_THROW(load_image_dir(tmp.path(), DatasetLayout::kFlat), DataError);
}

TEST(ColumnImage, ExtractsColumn) {
  const DenseMatrix x = testutil::random_matrix(6, 3, 9);
  const GrayImage img = column_image(x, 1, 2, 3);
  EXPECT_EQ(img.height, 2u);
  EXPECT_EQ(img.width, 3u);
  for (std::size_t p = 0; p < 6; ++p) EXPECT_EQ(img.pixels[p], x(p, 1));
  EXPECT_THROW(column_image(x, 5, 2, 3), ShapeError);
}
