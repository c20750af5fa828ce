#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "gradcheck.hpp"
#include "mtrans/errors.hpp"
#include "mtrans/network.hpp"
#include "mtrans/optimizer.hpp"
#include "mtrans/training.hpp"

using namespace mtrans;

namespace {

Model small_model(std::uint64_t seed = 7, ModelDims dims = {4, 3, 5}) {
  const auto v = build_vocabs({{U"ab", {"V", "PST"}, U"ba"}, {U"c", {"N"}, U"c"}});
  return make_model(v, dims, seed);
}

bool same(const ModelParams& a, const ModelParams& b) {
  const auto ta = a.tensors(), tb = b.tensors();
  for (std::size_t k = 0; k < ta.size(); ++k)
    if (!(ta[k]->array() == tb[k]->array()).all()) return false;
  return true;
}

}  // namespace

TEST_CASE("parameter shapes") {
  const auto m = small_model();
  const int V = m.action_count(), H = m.feature_count();
  CHECK(m.params.E.rows() == 4);
  CHECK(m.params.E.cols() == m.vocabs.alphabet.size());
  CHECK(m.params.A.cols() == 4);
  CHECK(m.params.F.rows() == 3);
  CHECK(m.params.F.cols() == H + 1);
  CHECK(m.params.enc_fwd.hidden_dim() == 5);
  CHECK(m.params.enc_fwd.input_dim() == 4);
  CHECK(m.params.dec.input_dim() == 4 + 10 + H * 3);
  CHECK(m.params.W_out.rows() == V);
  CHECK(m.params.W_out.cols() == 5);
  // Forget gates start open.
  CHECK((m.params.dec.b.block(5, 0, 5, 1).array() == 1.0).all());
  CHECK((m.params.dec.b.block(0, 0, 5, 1).array() == 0.0).all());
  CHECK_THROWS_AS(make_model(m.vocabs, {0, 3, 5}, 1), ConfigError);
}

TEST_CASE("initialization is seeded") {
  CHECK(same(small_model(3).params, small_model(3).params));
  CHECK_FALSE(same(small_model(3).params, small_model(4).params));
  const auto m = small_model(3);
  CHECK(m.params.E.cwiseAbs().maxCoeff() <= std::sqrt(3.0 / 4));
}

TEST_CASE("encoder output") {
  const auto m = small_model();
  const auto a = encode(m, U"abca");
  CHECK(a.size() == 5);
  for (const auto& h : a.h) CHECK(h.size() == 10);
  const auto b = encode(m, U"abca");
  for (int k = 0; k < 5; ++k) CHECK((a.h[k].array() == b.h[k].array()).all());

  auto z = small_model();
  z.params.set_zero();
  const auto e = encode(z, U"abca");
  for (int k = 1; k < 5; ++k) CHECK((e.h[k].array() == e.h[0].array()).all());
  CHECK(e.h[0].isZero());
}

TEST_CASE("feature block") {
  const auto m = small_model();
  const int H = m.feature_count();
  const auto none = encode_features({}, m.vocabs.features);
  const Vec fb = feature_block(m, none);
  CHECK(fb.size() == H * 3);
  for (int h = 0; h < H; ++h) CHECK((fb.segment(h * 3, 3).array() == m.params.F.col(0).array()).all());
  const auto one = encode_features({"PST"}, m.vocabs.features);
  CHECK(feature_block(m, one).size() == H * 3);
  const auto all = encode_features({"V", "PST", "N"}, m.vocabs.features);
  CHECK(feature_block(m, all).size() == H * 3);
  const int slot = m.vocabs.features.id("PST");
  CHECK((feature_block(m, one).segment((slot - 1) * 3, 3).array() ==
         m.params.F.col(slot).array()).all());
}

TEST_CASE("decoder step is pure") {
  const auto m = small_model();
  const auto enc = encode(m, U"ab");
  const Vec fb = feature_block(m, encode_features({"V"}, m.vocabs.features));
  const auto s0 = initial_decoder_step(m);
  const auto a = decoder_step(m, s0, kBeginAction, enc, 1, fb);
  const auto b = decoder_step(m, s0, kBeginAction, enc, 1, fb);
  CHECK((a.s.array() == b.s.array()).all());
  CHECK((a.c.array() == b.c.array()).all());
  CHECK_THROWS_AS(decoder_step(m, s0, kBeginAction, enc, 4, fb), UsageError);
  CHECK_THROWS_AS(decoder_step(m, s0, kBeginAction, enc, 1, Vec::Zero(2)), UsageError);
}

TEST_CASE("masked action distribution") {
  const auto m = small_model();
  const auto enc = encode(m, U"ab");
  const Vec fb = feature_block(m, encode_features({}, m.vocabs.features));
  const auto step = decoder_step(m, initial_decoder_step(m), kBeginAction, enc, 1, fb);
  auto s = initial_state(U"ab");
  const auto dist = action_distribution(m, step, valid_mask(s, m.vocabs.actions));
  CHECK(std::abs(dist.probs.sum() - 1.0) < 1e-9);
  CHECK(dist.probs[ActionVocab::kEnd] == 0.0);
  std::vector<std::uint8_t> only(m.action_count(), 0);
  only[ActionVocab::kDelete] = 1;
  const Vec p = masked_softmax(dist.logits, only);
  CHECK(p[ActionVocab::kDelete] == 1.0);
  CHECK(p.sum() == 1.0);
  CHECK_THROWS_AS(masked_softmax(dist.logits, std::vector<std::uint8_t>(m.action_count(), 0)),
                  UsageError);
  // Large logits stay finite.
  Vec big = Vec::Constant(m.action_count(), 800.0);
  big[0] = 1000;
  const Vec q = masked_softmax(big, std::vector<std::uint8_t>(m.action_count(), 1));
  CHECK(q.allFinite());
  CHECK(q[0] == doctest::Approx(1.0));
}

TEST_CASE("unused parameters get zero gradient") {
  auto m = small_model();
  const auto& v = m.vocabs.actions;
  // No features active, so only F(0) is touched; 'c' is neither read nor inserted.
  const std::vector<Action> acts = {Action::insert(U'b'), Action::copy(), Action::del(),
                                    Action::end()};
  std::vector<StepTarget> targets;
  for (const auto& a : acts) targets.push_back({{v.id(a)}, Vec()});
  Gradients g = m.params.zeros_like();
  trajectory_loss(m, U"ab", encode_features({}, m.vocabs.features), acts, targets,
                  ActionLoss::Nll, &g);
  CHECK(g.F.col(0).norm() > 0);
  CHECK(g.F.rightCols(m.feature_count()).isZero(0));
  CHECK(g.E.col(m.vocabs.alphabet.id(U'c')).isZero(0));
  CHECK(g.E.col(m.vocabs.alphabet.id(U'a')).norm() > 0);
  CHECK(g.E.col(Alphabet::kSentinel).norm() > 0);
  CHECK(g.E.col(Alphabet::kUnk).isZero(0));
}

TEST_CASE("tied embeddings collect gradient from reading and from inserting") {
  auto m = small_model();
  const auto& v = m.vocabs.actions;
  const auto feats = encode_features({}, m.vocabs.features);
  const int b = m.vocabs.alphabet.id(U'b');
  auto run = [&](const std::u32string& x, const std::vector<Action>& acts, Gradients* g) {
    std::vector<StepTarget> targets;
    for (const auto& a : acts) targets.push_back({{v.id(a)}, Vec()});
    return trajectory_loss(m, x, feats, acts, targets, ActionLoss::Nll, g);
  };
  const std::vector<Action> insert_only = {Action::del(), Action::insert(U'b'),
                                           Action::copy(), Action::end()};
  Gradients g1 = m.params.zeros_like();
  run(U"ac", insert_only, &g1);
  CHECK(g1.E.col(b).norm() > 0);
  const std::vector<Action> read_only = {Action::copy(), Action::copy(), Action::end()};
  Gradients g2 = m.params.zeros_like();
  run(U"bc", read_only, &g2);
  CHECK(g2.E.col(b).norm() > 0);

  // Both uses at once: finite differences over the shared column.
  const std::vector<Action> both = {Action::copy(), Action::insert(U'b'), Action::end()};
  Gradients g = m.params.zeros_like();
  run(U"b", both, &g);
  for (int r = 0; r < 4; ++r) {
    const double orig = m.params.E(r, b), eps = 1e-5;
    m.params.E(r, b) = orig + eps;
    const double up = run(U"b", both, nullptr);
    m.params.E(r, b) = orig - eps;
    const double down = run(U"b", both, nullptr);
    m.params.E(r, b) = orig;
    CHECK(testing::relative_error(g.E(r, b), (up - down) / (2 * eps)) < 1e-5);
  }
}

TEST_CASE("adadelta") {
  auto m = small_model();
  Adadelta opt(m.params);
  CHECK(opt.rho() == 0.95);
  CHECK(opt.eps() == 1e-6);
  const auto before = m.params;
  Gradients zero = m.params.zeros_like();
  CHECK(opt.update(m.params, zero));
  CHECK(same(m.params, before));

  // First step from empty accumulators: |dx| = sqrt(eps) / sqrt((1-rho) g^2 + eps) * |g|,
  // which tends to sqrt(eps / (1 - rho)) for large g.
  Gradients big = m.params.zeros_like();
  big.W_out(0, 0) = 1e6;
  big.W_out(1, 0) = -3.0;
  Adadelta fresh(m.params);
  const auto start = m.params;
  fresh.update(m.params, big);
  const double step0 = m.params.W_out(0, 0) - start.W_out(0, 0);
  const double expect0 = -std::sqrt(1e-6) / std::sqrt(0.05 * 1e12 + 1e-6) * 1e6;
  CHECK(step0 == doctest::Approx(expect0).epsilon(1e-12));
  CHECK(std::abs(step0) <= std::sqrt(1e-6 / 0.05));
  const double step1 = m.params.W_out(1, 0) - start.W_out(1, 0);
  CHECK(step1 == doctest::Approx(std::sqrt(1e-6) / std::sqrt(0.05 * 9 + 1e-6) * 3.0).epsilon(1e-12));
  CHECK(m.params.W_out(2, 0) == start.W_out(2, 0));

  auto bad = big;
  bad.E(0, 0) = std::nan("");
  const auto held = m.params;
  CHECK_FALSE(fresh.update(m.params, bad));
  CHECK(fresh.skipped_updates() == 1);
  CHECK(same(m.params, held));

  auto m1 = small_model(), m2 = small_model();
  Adadelta o1(m1.params), o2(m2.params);
  for (int k = 0; k < 5; ++k) {
    Gradients g = m1.params.zeros_like();
    g.E.setConstant(0.1 * (k + 1));
    g.dec.W.setConstant(-0.01 * k);
    o1.update(m1.params, g);
    o2.update(m2.params, g);
  }
  CHECK(same(m1.params, m2.params));
}
