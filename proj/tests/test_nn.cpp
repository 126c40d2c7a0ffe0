#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "amortss/core/errors.hpp"
#include "amortss/nn/adam.hpp"
#include "amortss/nn/checkpoint.hpp"
#include "amortss/nn/network.hpp"
#include "gradcheck.hpp"

using namespace amortss;
using namespace amortss::nn;
using Eigen::Index;
using Eigen::VectorXd;

namespace {

VectorXd random_params(const ParamRegistry& reg, RngStream& rng, double scale = 0.5) {
  VectorXd p(reg.total());
  for (Index i = 0; i < p.size(); ++i) p[i] = scale * rng.normal();
  return p;
}

double weighted_sum(const RowMat& out, const RowMat& w) { return (out.array() * w.array()).sum(); }

}  // namespace

TEST(Conv, WindowOneIdentityKernel) {
  ParamRegistry reg;
  ConvFeatures conv(reg, 2, {1}, 2);
  VectorXd p = VectorXd::Zero(reg.total());
  view(p, reg.tensors()[0].slot).setIdentity();
  RngStream rng(1, 0);
  const RowMat x = gradcheck::random_rowmat(12, 2, rng);
  RowMat out;
  conv.forward(p, x, 4, 3, out, nullptr);
  ASSERT_EQ(out.cols(), 4);
  EXPECT_EQ(out.leftCols(2), x);
  EXPECT_EQ(out.rightCols(2), x);
}

TEST(Conv, ConstantInputGivesConstantInterior) {
  ParamRegistry reg;
  ConvFeatures conv(reg, 1, {5}, 1);
  VectorXd p = VectorXd::Constant(reg.total(), 0.2);
  view(p, reg.tensors()[1].slot).setZero();
  const Index T = 20, B = 2;
  const RowMat x = RowMat::Constant(T * B, 1, 3.0);
  RowMat out;
  conv.forward(p, x, T, B, out, nullptr);
  for (Index t = 2; t < T - 2; ++t) {
    for (Index b = 0; b < B; ++b) EXPECT_NEAR(out(t * B + b, 1), 3.0, 1e-14);
  }
  EXPECT_LT(out(0, 1), 3.0);  // padding at the edge
}

TEST(Conv, WindowLongerThanSeries) {
  ParamRegistry reg;
  ConvFeatures conv(reg, 1, {16}, 2);
  RngStream rng(2, 0);
  const VectorXd p = random_params(reg, rng);
  RowMat out;
  conv.forward(p, gradcheck::random_rowmat(3, 1, rng), 3, 1, out, nullptr);
  EXPECT_TRUE(out.allFinite());
}

TEST(Conv, FiniteDifferenceGradient) {
  ParamRegistry reg;
  ConvFeatures conv(reg, 2, {1, 2, 4, 7}, 3);
  RngStream rng(3, 0);
  const Index T = 9, B = 2;
  const RowMat x = gradcheck::random_rowmat(T * B, 2, rng);
  const RowMat w = gradcheck::random_rowmat(T * B, conv.output_dim(), rng);
  const VectorXd p = random_params(reg, rng);
  ConvFeatures::Cache cache;
  RowMat out;
  conv.forward(p, x, T, B, out, &cache);
  VectorXd g = VectorXd::Zero(p.size());
  conv.backward(p, cache, w, g);
  const auto f = [&](const VectorXd& q) {
    RowMat o;
    conv.forward(q, x, T, B, o, nullptr);
    return weighted_sum(o, w);
  };
  const auto r = gradcheck::compare(f, p, g, gradcheck::all_coords(p.size()), 1e-6);
  EXPECT_LE(r.max_rel, 1e-6) << "worst coord " << r.worst;
}

TEST(BiGru, SingleStepShape) {
  ParamRegistry reg;
  BiGru rnn(reg, 3, 4, 1);
  RngStream rng(4, 0);
  const VectorXd p = random_params(reg, rng);
  RowMat out;
  rnn.forward(p, gradcheck::random_rowmat(1, 3, rng), 1, 1, out, nullptr);
  EXPECT_EQ(out.rows(), 1);
  EXPECT_EQ(out.cols(), 8);
  EXPECT_GT(out.leftCols(4).norm(), 0.0);
  EXPECT_GT(out.rightCols(4).norm(), 0.0);
}

TEST(BiGru, EveryOutputSeesEveryInput) {
  ParamRegistry reg;
  BiGru rnn(reg, 2, 4, 1);
  RngStream rng(5, 0);
  const VectorXd p = random_params(reg, rng);
  const Index T = 8;
  const RowMat x = gradcheck::random_rowmat(T, 2, rng);
  RowMat base;
  rnn.forward(p, x, T, 1, base, nullptr);
  for (Index tp = 0; tp < T; ++tp) {
    RowMat xp = x;
    xp(tp, 0) += 0.1;
    RowMat out;
    rnn.forward(p, xp, T, 1, out, nullptr);
    for (Index t = 0; t < T; ++t) {
      EXPECT_GT((out.row(t) - base.row(t)).cwiseAbs().maxCoeff(), 1e-12) << t << " " << tp;
    }
  }
}

TEST(BiGru, FiniteDifferenceGradientAllWeights) {
  for (int layers : {1, 2}) {
    ParamRegistry reg;
    BiGru rnn(reg, 3, 4, layers);
    RngStream rng(6, layers);
    const Index T = 7, B = 2;
    const RowMat x = gradcheck::random_rowmat(T * B, 3, rng);
    const RowMat w = gradcheck::random_rowmat(T * B, 8, rng);
    const VectorXd p = random_params(reg, rng);
    BiGru::Cache cache;
    RowMat out, dx;
    rnn.forward(p, x, T, B, out, &cache);
    VectorXd g = VectorXd::Zero(p.size());
    rnn.backward(p, x, cache, w, T, B, g, dx);
    const auto f = [&](const VectorXd& q) {
      RowMat o;
      rnn.forward(q, x, T, B, o, nullptr);
      return weighted_sum(o, w);
    };
    const auto r = gradcheck::compare(f, p, g, gradcheck::all_coords(p.size()), 1e-4, 1e-7,
                                      gradcheck::Stencil::FivePoint);
    EXPECT_LE(r.max_rel, 1e-6) << "layers " << layers << " worst " << r.worst;

    // Input gradient.
    const VectorXd xv = Eigen::Map<const VectorXd>(x.data(), x.size());
    const VectorXd dxv = Eigen::Map<const VectorXd>(dx.data(), dx.size());
    const auto fx = [&](const VectorXd& q) {
      const RowMat xq = Eigen::Map<const RowMat>(q.data(), x.rows(), x.cols());
      RowMat o;
      rnn.forward(p, xq, T, B, o, nullptr);
      return weighted_sum(o, w);
    };
    const auto rx = gradcheck::compare(fx, xv, dxv, gradcheck::all_coords(xv.size()), 1e-4, 1e-7,
                                       gradcheck::Stencil::FivePoint);
    EXPECT_LE(rx.max_rel, 1e-6) << "layers " << layers;
  }
}

TEST(Head, ZeroWeightsGiveSoftplusZero) {
  Network net(gradcheck::small_config("sa"));
  const VectorXd p = VectorXd::Zero(net.num_params());
  RngStream rng(7, 0);
  const auto post = net.predict(p, gradcheck::random_rowmat(10, 1, rng));
  EXPECT_TRUE((post.mean.array() == 0.0).all());
  EXPECT_TRUE(((post.std.array() - std::log(2.0)).abs() < 1e-15).all());
  EXPECT_NEAR(post.std(0, 0), 0.6931, 1e-4);
}

TEST(Head, StdPositiveForRandomParameters) {
  Network net(gradcheck::small_config("dsge"));
  RngStream rng(8, 0);
  const RowMat x = gradcheck::random_rowmat(5, 3, rng, 50.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const VectorXd p = 3.0 * VectorXd::NullaryExpr(net.num_params(), [&] { return rng.normal(); });
    Network::Output out;
    net.forward(p, x, 5, 1, out);
    ASSERT_TRUE((out.std.array() > 0.0).all());
    ASSERT_TRUE((out.aux_std.array() > 0.0).all());
  }
}

TEST(Head, FiniteDifferenceGradient) {
  ParamRegistry reg;
  MlpHead head(reg, 4, 5, 3);
  RngStream rng(9, 0);
  const RowMat h = gradcheck::random_rowmat(6, 4, rng);
  const RowMat w = gradcheck::random_rowmat(6, 3, rng);
  const VectorXd p = random_params(reg, rng);
  MlpHead::Cache cache;
  RowMat out, dh;
  head.forward(p, h, out, &cache);
  VectorXd g = VectorXd::Zero(p.size());
  head.backward(p, h, cache, w, g, dh);
  const auto f = [&](const VectorXd& q) {
    RowMat o;
    head.forward(q, h, o, nullptr);
    return weighted_sum(o, w);
  };
  const auto r = gradcheck::compare(f, p, g, gradcheck::all_coords(p.size()), 1e-6);
  EXPECT_LE(r.max_rel, 1e-6);
}

TEST(GaussianNll, ReferenceValues) {
  const RowMat m = RowMat::Constant(1, 1, 0.3);
  EXPECT_NEAR(gaussian_nll_sum(m, RowMat::Ones(1, 1), m, nullptr, nullptr), 0.918939, 1e-6);
  EXPECT_NEAR(gaussian_nll_sum(m, RowMat::Constant(1, 1, std::exp(1.0)), m, nullptr, nullptr),
              1.918939, 1e-6);
}

TEST(GaussianNll, MatchesScalarLogPdf) {
  RngStream rng(10, 0);
  const RowMat m = gradcheck::random_rowmat(7, 3, rng);
  const RowMat y = gradcheck::random_rowmat(7, 3, rng);
  RowMat s(7, 3);
  for (Index i = 0; i < s.size(); ++i) s.data()[i] = std::exp(rng.normal());
  double ref = 0.0;
  for (Index i = 0; i < 7; ++i) {
    for (Index k = 0; k < 3; ++k) {
      const double z = (y(i, k) - m(i, k)) / s(i, k);
      ref -= std::log(std::exp(-0.5 * z * z) / (s(i, k) * std::sqrt(2.0 * std::numbers::pi)));
    }
  }
  EXPECT_NEAR(gaussian_nll_sum(m, s, y, nullptr, nullptr), ref, 1e-12 * std::abs(ref) + 1e-12);
}

TEST(Network, FullStackGradientEachArchitecture) {
  for (const std::string model : {"sv", "dsge", "sa"}) {
    RngStream rng(11, hash_tag(model));
    const auto r = gradcheck::network_check(model, rng, 20);
    EXPECT_LE(r.max_rel, 1e-4) << model;
    EXPECT_EQ(r.checked, 20);
  }
}

TEST(Network, UnusedAuxHeadHasZeroGradient) {
  Network net(gradcheck::small_config("dsge"));
  RngStream rng(12, 0);
  auto init = rng.derive("init");
  const VectorXd p = net.init_params(init);
  const Index T = 4, B = 2;
  const RowMat x = gradcheck::random_rowmat(T * B, 3, rng);
  const RowMat y = gradcheck::random_rowmat(T * B, 3, rng);
  VectorXd g;
  net.loss(p, x, y, RowMat(), T, B, 0.0, &g);
  for (const auto& t : net.tensors()) {
    if (t.name == "head.W2") {
      const auto gw = view(g, t.slot);
      EXPECT_EQ(gw.rightCols(6).cwiseAbs().maxCoeff(), 0.0);
      EXPECT_GT(gw.leftCols(6).cwiseAbs().maxCoeff(), 0.0);
    }
  }
}

TEST(Network, GradientDeterministicAndOrderInvariant) {
  Network net(gradcheck::small_config("sv"));
  RngStream rng(13, 0);
  auto init = rng.derive("init");
  const VectorXd p = net.init_params(init);
  const Index T = 5, B = 4;
  std::vector<Eigen::MatrixXd> xs, ys;
  for (Index b = 0; b < B; ++b) {
    xs.push_back(Eigen::MatrixXd::NullaryExpr(T, 1, [&] { return rng.normal(); }));
    ys.push_back(Eigen::MatrixXd::NullaryExpr(T, 1, [&] { return rng.normal(); }));
  }
  VectorXd g1, g2, g3;
  const double l1 = net.loss(p, pack_time_major(xs), pack_time_major(ys), {}, T, B, 1.0, &g1);
  const double l2 = net.loss(p, pack_time_major(xs), pack_time_major(ys), {}, T, B, 1.0, &g2);
  EXPECT_EQ(l1, l2);
  EXPECT_EQ(g1, g2);
  std::reverse(xs.begin(), xs.end());
  std::reverse(ys.begin(), ys.end());
  const double l3 = net.loss(p, pack_time_major(xs), pack_time_major(ys), {}, T, B, 1.0, &g3);
  EXPECT_NEAR(l3, l1, 1e-13);
  EXPECT_LT((g3 - g1).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Network, FeatureSkipStartsInert) {
  NetworkConfig with = gradcheck::small_config("sv");
  NetworkConfig without = with;
  without.feature_skip = false;
  Network a(with), b(without);
  EXPECT_GT(a.num_params(), b.num_params());
  RngStream ra(15, 0), rb(15, 0);
  auto ia = ra.derive("init");
  auto ib = rb.derive("init");
  const VectorXd pa = a.init_params(ia);
  const VectorXd pb = b.init_params(ib);
  const Index T = 6, B = 2;
  RngStream rx(16, 0);
  const RowMat x = gradcheck::random_rowmat(T * B, 1, rx);
  const RowMat y = gradcheck::random_rowmat(T * B, 1, rx);
  EXPECT_NEAR(a.loss(pa, x, y, RowMat(), T, B, 0.0, nullptr),
              b.loss(pb, x, y, RowMat(), T, B, 0.0, nullptr), 1e-12);
  const NetworkConfig back = nlohmann::json(without).get<NetworkConfig>();
  EXPECT_FALSE(back.feature_skip);
}

TEST(Network, PackUnpackRoundTrip) {
  RngStream rng(14, 0);
  std::vector<Eigen::MatrixXd> xs;
  for (int b = 0; b < 3; ++b) xs.push_back(Eigen::MatrixXd::NullaryExpr(4, 2, [&] { return rng.normal(); }));
  const RowMat packed = pack_time_major(xs);
  for (int b = 0; b < 3; ++b) EXPECT_EQ(unpack_member(packed, 4, 3, b), xs[b]);
}

TEST(Adam, FirstStepIsLrTimesSign) {
  VectorXd p(3);
  p << 1.0, -2.0, 0.5;
  VectorXd g(3);
  g << 0.3, -40.0, 1e-3;
  AdamState s;
  const VectorXd before = p;
  adam_step(p, g, s, 0.01);
  EXPECT_EQ(s.step, 1);
  for (Index i = 0; i < 3; ++i) {
    EXPECT_NEAR(before[i] - p[i], 0.01 * (g[i] > 0 ? 1.0 : -1.0), 1e-7);
  }
}

TEST(Adam, ZeroGradientLeavesParameters) {
  VectorXd p = VectorXd::LinSpaced(4, -1, 1);
  const VectorXd before = p;
  AdamState s;
  adam_step(p, VectorXd::Zero(4), s, 0.1);
  EXPECT_EQ(p, before);
}

TEST(Adam, TwoStepScalarTrace) {
  VectorXd p = VectorXd::Constant(1, 1.0);
  AdamState s;
  adam_step(p, VectorXd::Constant(1, 0.5), s, 0.1);
  adam_step(p, VectorXd::Constant(1, -0.2), s, 0.1);
  // m1 = 0.05, v1 = 2.5e-4; m2 = 0.025, v2 = 2.8975e-4
  const double p1 = 1.0 - 0.1 * (0.05 / 0.1) / (std::sqrt(2.5e-4 / 0.001) + 1e-8);
  const double p2 = p1 - 0.1 * (0.025 / 0.19) / (std::sqrt(2.8975e-4 / 0.001999) + 1e-8);
  EXPECT_NEAR(p[0], p2, 1e-12);
  EXPECT_NEAR(s.m[0], 0.025, 1e-15);
  EXPECT_NEAR(s.v[0], 2.8975e-4, 1e-15);
}

TEST(LrSchedule, Values) {
  EXPECT_EQ(lr_schedule("sv", 10'000), 1e-3);
  EXPECT_EQ(lr_schedule("sv", 29'999), 1e-3);
  EXPECT_EQ(lr_schedule("sv", 30'000), 1e-4);
  EXPECT_EQ(lr_schedule("sv", 100'000), 1e-5);
  EXPECT_EQ(lr_schedule("dsge", 0), 1e-3);
  EXPECT_EQ(lr_schedule("dsge", 150'000), 1e-5);
  EXPECT_EQ(lr_schedule("dsge", 349'999), 1e-6);
  EXPECT_EQ(lr_schedule("dsge", 400'000), 3e-6);
  EXPECT_EQ(lr_schedule("sa", 14'999), 1e-3);
  EXPECT_EQ(lr_schedule("sa", 20'000), 1e-4);
  EXPECT_EQ(lr_schedule("sa", 60'000), 1e-5);
  EXPECT_THROW(lr_schedule("arma", 0), UnknownModelError);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Checkpoint ck;
  ck.config = gradcheck::small_config("dsge");
  const Network net(ck.config);
  RngStream rng(15, 0);
  ck.params = net.init_params(rng);
  adam_step(ck.params, VectorXd::Constant(net.num_params(), 0.1), ck.adam, 1e-3);
  ck.schedule_position = 1;
  ck.metadata = {{"model", "dsge"}, {"seed", 15}, {"loss", {1.5, 1.25}}};
  const std::string bytes = serialize_checkpoint(ck);
  const Checkpoint back = deserialize_checkpoint(bytes);
  EXPECT_EQ(back.params, ck.params);
  EXPECT_EQ(back.adam.m, ck.adam.m);
  EXPECT_EQ(back.adam.v, ck.adam.v);
  EXPECT_EQ(back.adam.step, 1);
  EXPECT_EQ(back.schedule_position, 1);
  EXPECT_EQ(back.metadata, ck.metadata);
  EXPECT_EQ(serialize_checkpoint(back), bytes);

  const Eigen::MatrixXd x = Eigen::MatrixXd::NullaryExpr(9, 3, [&] { return rng.normal(); });
  const auto a = net.predict(ck.params, x);
  const auto b = Network(back.config).predict(back.params, x);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.std, b.std);
}

TEST(Checkpoint, CorruptionDetected) {
  Checkpoint ck;
  ck.config = gradcheck::small_config("sv");
  RngStream rng(16, 0);
  ck.params = Network(ck.config).init_params(rng);
  std::string bytes = serialize_checkpoint(ck);
  bytes[bytes.size() / 2] ^= 0x01;
  EXPECT_THROW(deserialize_checkpoint(bytes), CheckpointFormatError);
  EXPECT_THROW(deserialize_checkpoint("AMSS"), CheckpointFormatError);
}
