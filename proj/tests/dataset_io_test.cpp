#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <sstream>

#include "test_support.hpp"

using namespace rpca;

TEST(DatasetIo, ReadsUnlabeled) {
  std::istringstream in("1 2 3\n\n4.5 -6 7e-1\n");
  const auto ps = read_dataset(in);
  EXPECT_EQ(ps.size(), 2u);
  EXPECT_EQ(ps.dim(), 3u);
  EXPECT_FALSE(ps.has_labels());
  EXPECT_DOUBLE_EQ(ps[1][2], 0.7);
}

TEST(DatasetIo, LabelsRoundTrip) {
  Rng rng(5);
  auto clean = gen_inliers(InlierSpec::spiked_identity(4, 0, 3.0), 50, rng);
  AdversarySpec adv;
  adv.kind = AdversaryKind::OrthogonalSpike;
  adv.rate = 0.1;
  const auto data = strong_contaminate(clean, adv, InlierSpec::spiked_identity(4, 0, 3.0).covariance(), rng);
  std::stringstream buf;
  write_dataset(buf, data);
  const auto back = read_dataset(buf);
  ASSERT_EQ(back.size(), data.size());
  EXPECT_EQ(back.labels(), data.labels());
  EXPECT_EQ(back.coords(), data.coords());  // %.17g is exact
}

TEST(DatasetIo, ErrorsCarryLineNumbers) {
  std::istringstream ragged("1 2\n3 4\n5\n");
  try {
    read_dataset(ragged);
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
  std::istringstream junk("1 2\n3 abc\n");
  EXPECT_THROW(read_dataset(junk), InvalidArgument);
  std::istringstream nonfinite("1 nan\n");
  EXPECT_THROW(read_dataset(nonfinite), InvalidArgument);
  std::istringstream mixed("inlier 1 2\n3 4\n");
  EXPECT_THROW(read_dataset(mixed), InvalidArgument);
  std::istringstream empty("\n\n");
  EXPECT_THROW(read_dataset(empty), InvalidArgument);
}

TEST(DatasetIo, FileReplayDeliversEachLineOnce) {
  const auto path = std::filesystem::temp_directory_path() / "rpca_replay_test.txt";
  {
    std::ofstream out(path);
    out << "inlier 1 2\noutlier 3 4\ninlier 5 6\n";
  }
  FileReplaySource src(path.string());
  EXPECT_EQ(src.dim(), 2u);
  Vector x(2);
  std::vector<Label> seen;
  while (src.next(x)) seen.push_back(src.last_label());
  EXPECT_EQ(seen, (std::vector<Label>{Label::Inlier, Label::Outlier, Label::Inlier}));
  EXPECT_DOUBLE_EQ(x[0], 5.0);
  EXPECT_EQ(src.origin(), SourceOrigin::FileReplay);
  std::filesystem::remove(path);
}
