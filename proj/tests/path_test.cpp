#include <gtest/gtest.h>

#include <sstream>

#include "pathctl/path.hpp"
#include "support.hpp"

using namespace pathctl;
using testing_support::Gen;

namespace {

SampledPath scalar(std::vector<double> v, double dt = 1.0, double t0 = 0.0) {
  return SampledPath::scalar(t0, dt, std::move(v));
}

std::vector<double> values(const SampledPath& p) { return {p.data().begin(), p.data().end()}; }

}  // namespace

TEST(SampledPath, RejectsBadConstruction) {
  EXPECT_THROW(SampledPath(0.0, 0.0, 1, {1.0}), GridAlignmentError);
  EXPECT_THROW(SampledPath(0.0, 1.0, 1, {}), DimensionError);
  EXPECT_THROW(SampledPath(0.0, 1.0, 2, {1.0, 2.0, 3.0}), DimensionError);
}

TEST(SampledPath, NegativeTimeReadsZeroAndCadlagSteps) {
  const auto p = scalar({4.0, 5.0, 6.0}, 0.5, 1.0);
  EXPECT_EQ(p.scalar_at(0.2), 0.0);
  EXPECT_EQ(p.scalar_at(-3.0), 0.0);
  EXPECT_EQ(p.scalar_at(1.0), 4.0);
  EXPECT_EQ(p.scalar_at(1.49), 4.0);
  EXPECT_EQ(p.scalar_at(1.5), 5.0);
  EXPECT_EQ(p.scalar_at(2.0), 6.0);
  EXPECT_THROW(p.scalar_at(2.5), std::out_of_range);
  EXPECT_DOUBLE_EQ(p.end_time(), 2.0);
  EXPECT_EQ(p.last_scalar(), 6.0);
}

TEST(FlatExtend, Examples) {
  EXPECT_EQ(values(flat_extend(scalar({1, 2}), 2.0)), (std::vector<double>{1, 2, 2, 2}));
  EXPECT_EQ(flat_extend(scalar({5}), 0.0), scalar({5}));
  EXPECT_THROW(flat_extend(scalar({0, 3}, 0.5), 0.3), GridAlignmentError);
  EXPECT_THROW(flat_extend(scalar({0, 3}, 0.5), -0.5), GridAlignmentError);
}

TEST(FlatExtend, ExtendsAllCoordinatesJointly) {
  const SampledPath p(0.0, 1.0, 2, {1, 2, 3, 4});
  EXPECT_EQ(values(flat_extend(p, 1.0)), (std::vector<double>{1, 2, 3, 4, 3, 4}));
  EXPECT_DOUBLE_EQ(flat_extend(p, 1.0).end_time(), 2.0);
}

TEST(Bump, Examples) {
  EXPECT_EQ(values(bump(scalar({1, 2}), 0.5)), (std::vector<double>{1, 2.5}));
  EXPECT_EQ(bump(scalar({4}), 0.0), scalar({4}));
  const SampledPath p(0.0, 1.0, 2, {1, 1, 2, 2});
  const std::vector<double> h{0, 1};
  EXPECT_EQ(values(bump(p, h)), (std::vector<double>{1, 1, 2, 3}));
  const std::vector<double> wrong{1, 2, 3};
  EXPECT_THROW(bump(p, wrong), DimensionError);
}

TEST(LambdaMetric, Examples) {
  const auto p = scalar({1, 2, 3});
  EXPECT_EQ(lambda_metric(p, p), 0.0);
  EXPECT_EQ(lambda_metric(scalar({1}), scalar({1, 1})), 1.0);
  EXPECT_EQ(lambda_metric(scalar({1}), scalar({1, 3})), 3.0);
  EXPECT_THROW(lambda_metric(scalar({1}, 1.0), scalar({1}, 0.5)), GridAlignmentError);
}

TEST(ConcatControl, Examples) {
  const auto z = scalar({1, 1}, 1.0, 0.0);
  const auto a = scalar({7, 7}, 1.0, 1.0);
  const auto r = concat_control(z, a, 1.0);
  EXPECT_EQ(values(r), (std::vector<double>{1, 7, 7}));
  EXPECT_EQ(r.scalar_at(1.0), 7.0);
  EXPECT_EQ(concat_control(z, scalar({3, 4}, 1.0, 0.0), 0.0), scalar({3, 4}));
  EXPECT_THROW(concat_control(scalar({2, 2, 2}), scalar({3}, 1.0, 1.5), 1.5), GridAlignmentError);
  EXPECT_THROW(concat_control(scalar({2, 2, 2}), scalar({3}, 1.0, 1.0), 1.0 + 0.25), GridAlignmentError);
  EXPECT_THROW(concat_control(scalar({2}), scalar({3}, 1.0, 3.0), 3.0), GridAlignmentError);
}

TEST(SubstituteLast, Examples) {
  EXPECT_EQ(values(substitute_last(scalar({1, 2}), 5.0)), (std::vector<double>{1, 5}));
  EXPECT_EQ(substitute_last(scalar({1, 2}), 2.0), scalar({1, 2}));
  const SampledPath two(0.0, 1.0, 2, {1, 2});
  EXPECT_THROW(substitute_last(two, 1.0), DimensionError);
}

TEST(PathPair, RequiresSharedDomain) {
  EXPECT_NO_THROW(PathPair(scalar({1, 2}), scalar({0, 0})));
  EXPECT_THROW(PathPair(scalar({1, 2}), scalar({0})), GridAlignmentError);
  EXPECT_THROW(PathPair(scalar({1, 2}), scalar({0, 0}, 0.5)), GridAlignmentError);
}

TEST(PathProperties, MetricAxiomsOnRandomTriples) {
  Gen gen(11);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t dim = gen.index(1, 3);
    const auto a = gen.path(dim, gen.index(1, 12));
    const auto b = gen.path(dim, gen.index(1, 12));
    const auto c = gen.path(dim, gen.index(1, 12));
    const double ab = lambda_metric(a, b);
    EXPECT_GE(ab, 0.0);
    EXPECT_EQ(ab, lambda_metric(b, a));
    EXPECT_EQ(lambda_metric(a, a), 0.0);
    EXPECT_LE(lambda_metric(a, c), ab + lambda_metric(b, c) + 1e-12);
    if (!(a == b)) {
      EXPECT_GT(ab, 0.0);
    }
  }
}

TEST(PathProperties, BumpRoundTripIsExact) {
  Gen gen(12);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t dim = gen.index(1, 3);
    const auto p = gen.path(dim, gen.index(1, 10));
    // Dyadic bumps keep the round trip exact in floating point.
    std::vector<double> h(dim), minus(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      h[d] = static_cast<double>(gen.index(0, 64)) / 16.0 - 2.0;
      minus[d] = -h[d];
    }
    const auto back = bump(bump(p, h), minus);
    for (std::size_t k = 0; k < p.size(); ++k)
      for (std::size_t d = 0; d < dim; ++d) EXPECT_NEAR(back.at(k)[d], p.at(k)[d], 1e-15);
  }
}

TEST(PathProperties, FlatExtensionIsAdditive) {
  Gen gen(13);
  for (int trial = 0; trial < 200; ++trial) {
    const auto p = gen.path(gen.index(1, 3), gen.index(1, 10), 0.25);
    const double a = 0.25 * static_cast<double>(gen.index(0, 6));
    const double b = 0.25 * static_cast<double>(gen.index(0, 6));
    EXPECT_EQ(flat_extend(flat_extend(p, a), b), flat_extend(p, a + b));
  }
}

TEST(PathProperties, ConcatRestrictsToItsPieces) {
  Gen gen(14);
  for (int trial = 0; trial < 200; ++trial) {
    const double dt = 0.5;
    const std::size_t split = gen.index(0, 8);
    const auto z = gen.path(1, gen.index(std::max<std::size_t>(split, 1), 10), dt);
    const double t = static_cast<double>(split) * dt;
    const auto a = gen.path(1, gen.index(1, 8), dt, t);
    const auto r = concat_control(z, a, t);
    for (std::size_t k = 0; k < split; ++k) EXPECT_EQ(r.scalar_at(k * dt), z[k]);
    for (std::size_t k = 0; k < a.size(); ++k) EXPECT_EQ(r.scalar_at(t + k * dt), a[k]);
    EXPECT_DOUBLE_EQ(r.end_time(), a.end_time());
  }
}

TEST(PathProperties, SubstituteLastIsAProjection) {
  Gen gen(15);
  for (int trial = 0; trial < 200; ++trial) {
    const auto z = gen.path(1, gen.index(1, 10));
    const double a = gen.uniform(-5, 5), b = gen.uniform(-5, 5);
    EXPECT_EQ(substitute_last(z, a).last_scalar(), a);
    EXPECT_EQ(substitute_last(substitute_last(z, a), b), substitute_last(z, b));
    EXPECT_EQ(prefix(substitute_last(z, a), z.size() - 1).size(), z.size());
  }
}

TEST(PathCsv, RoundTripsExactly) {
  Gen gen(16);
  for (int trial = 0; trial < 50; ++trial) {
    const auto p = gen.path(gen.index(1, 3), gen.index(2, 20), 0.01 * static_cast<double>(gen.index(1, 7)), -0.3);
    std::stringstream ss;
    write_csv(ss, p);
    const auto back = read_csv(ss);
    EXPECT_EQ(values(back), values(p));
    EXPECT_EQ(back.dim(), p.dim());
    EXPECT_NEAR(back.dt(), p.dt(), 1e-15);
  }
  std::stringstream header_only("time,v1\n");
  EXPECT_THROW(read_csv(header_only), std::invalid_argument);
  std::stringstream bad("value\n1\n");
  EXPECT_THROW(read_csv(bad), std::invalid_argument);
}

TEST(PathCsv, HeaderNamesEveryCoordinate) {
  std::stringstream ss;
  write_csv(ss, SampledPath(0.0, 0.5, 2, {1, 2, 3, 4}));
  EXPECT_EQ(ss.str(), "time,v1,v2\n0,1,2\n0.5,3,4\n");
}
