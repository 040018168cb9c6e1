#include "robustnmf/matrix_io.hpp"

#include <gtest/gtest.h>

#include <fstream>

#include "testutil.hpp"

using namespace robustnmf;

TEST(Rfm1, RoundTripsBitwise) {
  testutil::TempDir tmp("rfm1");
  DenseMatrix m = testutil::random_matrix(7, 5, 1, -3.0, 3.0);
  m(0, 0) = 0.0;
  m(1, 1) = 1e-300;
  m(2, 2) = 12345.6789;
  const auto path = tmp.path() / "m.rfm1";
  save_matrix_rfm1(path, m);
  const DenseMatrix back = load_matrix_rfm1(path);
  ASSERT_EQ(back.rows(), m.rows());
  ASSERT_EQ(back.cols(), m.cols());
  EXPECT_EQ(back.values(), m.values());
}

TEST(Rfm1, RejectsBadMagicAndTruncation) {
  testutil::TempDir tmp("rfm1bad");
  const auto bad = tmp.path() / "bad.rfm1";
  {
    std::ofstream os(bad, std::ios::binary);
    os << "NOPE12345678";
  }
  EXPECT_THROW(load_matrix_rfm1(bad), DataError);

  const auto trunc = tmp.path() / "trunc.rfm1";
  {
    std::ofstream os(trunc, std::ios::binary);
    os << "RFM1";
    const std::uint64_t dims[2] = {4, 4};
    os.write(reinterpret_cast<const char*>(dims), sizeof(dims));
    const double one = 1.0;
    os.write(reinterpret_cast<const char*>(&one), sizeof(one));  // 1 of 16 values
  }
  EXPECT_THROW(load_matrix_rfm1(trunc), DataError);
}

TEST(Csv, ParsesSmallMatrix) {
  testutil::TempDir tmp("csv");
  const auto path = tmp.path() / "m.csv";
  {
    std::ofstream os(path);
    os << "1,2\n3,4\n";
  }
  const DenseMatrix m = load_matrix_csv(path);
  ASSERT_EQ(m.rows(), 2u);
  ASSERT_EQ(m.cols(), 2u);
  EXPECT_DOUBLE_EQ(m(0, 1), 2.0);
  EXPECT_DOUBLE_EQ(m(1, 0), 3.0);
}

TEST(Csv, RoundTripsExactly) {
  testutil::TempDir tmp("csvrt");
  const DenseMatrix m = testutil::random_matrix(4, 6, 2, -1.0, 1.0);
  const auto path = tmp.path() / "m.csv";
  save_matrix_csv(path, m);
  const DenseMatrix back = load_matrix_csv(path);
  ASSERT_TRUE(back.same_shape(m));
  EXPECT_EQ(back.values(), m.values());  // %.17g round-trips doubles
}

TEST(Csv, RejectsNanRaggedEmpty) {
  testutil::TempDir tmp("csvbad");
  const auto nan_path = tmp.path() / "nan.csv";
  {
    std::ofstream os(nan_path);
    os << "1,nan\n";
  }
  EXPECT_THROW(load_matrix_csv(nan_path), DataError);

  const auto ragged = tmp.path() / "ragged.csv";
  {
    std::ofstream os(ragged);
    os << "1,2\n3\n";
  }
  EXPECT_THROW(load_matrix_csv(ragged), DataError);

  const auto empty = tmp.path() / "empty.csv";
  { std::ofstream os(empty); }
  EXPECT_THROW(load_matrix_csv(empty), DataError);
}

TEST(LoadMatrix, AutoDetectsFormatAndNonnegCheck) {
  testutil::TempDir tmp("auto");
  const DenseMatrix m = testutil::random_matrix(3, 3, 3, -0.5, 1.0);
  const auto bin = tmp.path() / "m.bin";
  save_matrix_rfm1(bin, m);
  EXPECT_EQ(load_matrix(bin).values(), m.values());
  EXPECT_THROW(load_matrix(bin, /*require_nonneg=*/true), DataError);

  const auto csv = tmp.path() / "m.csv";
  save_matrix(csv, m);  // extension picks CSV
  EXPECT_EQ(load_matrix(csv).values(), m.values());

  EXPECT_THROW(load_matrix(tmp.path() / "missing.csv"), DataError);
}
