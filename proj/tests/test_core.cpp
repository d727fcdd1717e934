#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <sstream>

#include "bbs/core.hpp"
#include "bbs/dataset_io.hpp"
#include "bbs/models.hpp"
#include "bbs/rng.hpp"
#include "bbs/sampling.hpp"

using namespace bbs;

namespace {

BrokenBatch batch_1d(std::vector<double> xs, std::vector<double> ys) { return BrokenBatch(1, 1, xs, ys); }

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no bbs::Error thrown";
  return ErrorCode::ConfigError;
}

}  // namespace

TEST(ValidateDataset, AcceptsWellFormedInput) {
  Dataset d{{batch_1d({1, 2, 3}, {4, 5, 6}), batch_1d({0, 0, 0}, {1, 1, 1})}};
  EXPECT_NO_THROW(validate_dataset(d));
  EXPECT_EQ(d.batch_size(), 3u);
  EXPECT_EQ(d.num_batches(), 2u);
}

TEST(ValidateDataset, RejectsRaggedBatches) {
  Dataset d{{batch_1d({1, 2, 3}, {4, 5, 6}), batch_1d({1, 2, 3, 4}, {4, 5, 6, 7})}};
  EXPECT_EQ(code_of([&] { validate_dataset(d); }), ErrorCode::RaggedBatchSizes);
}

TEST(ValidateDataset, RejectsNaN) {
  Dataset d{{batch_1d({1, std::nan(""), 3}, {4, 5, 6})}};
  EXPECT_EQ(code_of([&] { validate_dataset(d); }), ErrorCode::NonFiniteCoordinate);
}

TEST(ValidateDataset, RejectsEmpty) {
  EXPECT_EQ(code_of([] { validate_dataset(Dataset{}); }), ErrorCode::EmptyDataset);
}

TEST(ParamTypes, PointRejectsNonFinite) {
  EXPECT_EQ(code_of([] { ParamPoint p{std::numeric_limits<double>::infinity()}; }), ErrorCode::NonFiniteCoordinate);
}

TEST(ParamTypes, DomainInvariants) {
  EXPECT_EQ(code_of([] { ParamDomain d({1.0}, {1.0}); }), ErrorCode::InvalidDomain);
  EXPECT_EQ(code_of([] { ParamDomain d({0.0, 0.0}, {1.0}); }), ErrorCode::InvalidDomain);
  const ParamDomain box({0.0, -1.0}, {3.0, 3.0});
  EXPECT_DOUBLE_EQ(box.diameter(), 5.0);
  EXPECT_TRUE(box.contains(ParamPoint{0.0, 3.0}));
  EXPECT_FALSE(box.contains(ParamPoint{3.0001, 0.0}));
  EXPECT_EQ(code_of([&] { box.require(ParamPoint{1.0}); }), ErrorCode::ParamOutOfDomain);
}

TEST(ParamTypes, DiameterIsSymmetricUnderCoordinatePermutation) {
  RandomStream rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> lo(4), hi(4);
    for (int i = 0; i < 4; ++i) {
      lo[i] = rng.uniform() * 10 - 5;
      hi[i] = lo[i] + 0.1 + rng.uniform() * 3;
    }
    const ParamDomain a(lo, hi);
    const auto perm = random_permutation(4, rng);
    std::vector<double> plo(4), phi(4);
    for (int i = 0; i < 4; ++i) {
      plo[i] = lo[perm[i]];
      phi[i] = hi[perm[i]];
    }
    EXPECT_NEAR(ParamDomain(plo, phi).diameter(), a.diameter(), 1e-14 * a.diameter());
  }
}

TEST(DatasetIo, WritesDocumentedFormat) {
  Dataset d{{BrokenBatch(2, 2, {0.5, 0.25, 0.125, 1.0}, {0.0, 0.75, 0.1, 0.2})}};
  std::ostringstream os;
  write_dataset(os, d);
  EXPECT_EQ(os.str(), "batch 0: 0.5,0.25;0.125,1 | 0,0.75;0.10000000000000001,0.20000000000000001\n");
}

TEST(DatasetIo, RandomDatasetsRoundTripBitExactly) {
  const TorusWrappedGaussianModel torus(0.1);
  const BivariateNormalRatioModel biv(-0.5);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RandomStream rng(seed);
    const Dataset a = generate_dataset(torus, 1 + seed % 7, 1 + seed % 4, rng);
    const Dataset b = generate_dataset(biv, 1 + seed % 5, 2, rng);
    for (const Dataset* d : {&a, &b}) {
      std::stringstream ss;
      write_dataset(ss, *d);
      const Dataset back = read_dataset(ss);
      ASSERT_EQ(back.batches.size(), d->batches.size());
      for (std::size_t k = 0; k < back.batches.size(); ++k) {
        EXPECT_EQ(std::memcmp(back.batches[k].xs_flat().data(), d->batches[k].xs_flat().data(),
                              d->batches[k].xs_flat().size() * sizeof(double)),
                  0);
      }
      EXPECT_EQ(back, *d);
    }
  }
}

TEST(DatasetIo, RejectsMalformedLines) {
  std::istringstream bad1("batch 0: 1;2 3\n");
  EXPECT_EQ(code_of([&] { read_dataset(bad1); }), ErrorCode::ParseError);
  std::istringstream bad2("batch 1: 1 | 2\n");
  EXPECT_EQ(code_of([&] { read_dataset(bad2); }), ErrorCode::ParseError);
  std::istringstream bad3("batch 0: 1,2;3 | 1;2\n");
  EXPECT_EQ(code_of([&] { read_dataset(bad3); }), ErrorCode::ParseError);
}
