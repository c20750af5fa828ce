#include "mtrans/network.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "mtrans/errors.hpp"

namespace mtrans {

namespace {

Vec sigmoid(const Vec& v) { return (1.0 + (-v.array()).exp()).inverse().matrix(); }

LstmParams make_lstm(int input_dim, int hidden, std::mt19937_64& rng) {
  LstmParams p;
  const double bound = std::sqrt(3.0 / (input_dim + hidden));
  std::uniform_real_distribution<double> u(-bound, bound);
  p.W.resize(4 * hidden, input_dim + hidden);
  for (Eigen::Index c = 0; c < p.W.cols(); ++c)
    for (Eigen::Index r = 0; r < p.W.rows(); ++r) p.W(r, c) = u(rng);
  p.b = Mat::Zero(4 * hidden, 1);
  p.b.block(hidden, 0, hidden, 1).setOnes();
  return p;
}

Mat uniform_matrix(int rows, int cols, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-bound, bound);
  Mat m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = u(rng);
  return m;
}

void lstm_forward(const LstmParams& p, const Vec& input, const Vec& h_prev, const Vec& c_prev,
                  Vec& h_out, Vec& c_out, LstmCache* cache) {
  const int H = p.hidden_dim();
  Vec z(input.size() + H);
  z << input, h_prev;
  Vec a = p.W * z + p.b.col(0);
  Vec i = sigmoid(a.segment(0, H));
  Vec f = sigmoid(a.segment(H, H));
  Vec o = sigmoid(a.segment(2 * H, H));
  Vec g = a.segment(3 * H, H).array().tanh().matrix();
  c_out = f.cwiseProduct(c_prev) + i.cwiseProduct(g);
  Vec tanh_c = c_out.array().tanh().matrix();
  h_out = o.cwiseProduct(tanh_c);
  if (cache) {
    cache->z = std::move(z);
    cache->i = std::move(i);
    cache->f = std::move(f);
    cache->o = std::move(o);
    cache->g = std::move(g);
    cache->c_prev = c_prev;
    cache->c = c_out;
    cache->tanh_c = std::move(tanh_c);
  }
}

// Returns d/dz of [input ; h_prev]; writes dc_prev.
Vec lstm_backward(const LstmParams& p, const LstmCache& k, const Vec& dh, const Vec& dc,
                  LstmParams& grad, Vec& dc_prev) {
  const int H = p.hidden_dim();
  const Vec dc_total =
      dc + dh.cwiseProduct(k.o).cwiseProduct((1.0 - k.tanh_c.array().square()).matrix());
  Vec da(4 * H);
  da.segment(0, H) = dc_total.cwiseProduct(k.g).cwiseProduct(
      k.i.cwiseProduct((1.0 - k.i.array()).matrix()));
  da.segment(H, H) = dc_total.cwiseProduct(k.c_prev).cwiseProduct(
      k.f.cwiseProduct((1.0 - k.f.array()).matrix()));
  da.segment(2 * H, H) = dh.cwiseProduct(k.tanh_c).cwiseProduct(
      k.o.cwiseProduct((1.0 - k.o.array()).matrix()));
  da.segment(3 * H, H) =
      dc_total.cwiseProduct(k.i).cwiseProduct((1.0 - k.g.array().square()).matrix());
  dc_prev = dc_total.cwiseProduct(k.f);
  grad.W.noalias() += da * k.z.transpose();
  grad.b.col(0) += da;
  return p.W.transpose() * da;
}

int special_index(ActionId a) {
  switch (a) {
    case ActionVocab::kCopy:
      return 0;
    case ActionVocab::kDelete:
      return 1;
    case ActionVocab::kEnd:
      return 2;
    case kBeginAction:
      return 3;
    default:
      return -1;
  }
}

}  // namespace

std::vector<Mat*> ModelParams::tensors() {
  return {&E, &A, &F, &enc_fwd.W, &enc_fwd.b, &enc_bwd.W, &enc_bwd.b,
          &dec.W, &dec.b, &W_out, &b_out};
}

std::vector<const Mat*> ModelParams::tensors() const {
  return {&E, &A, &F, &enc_fwd.W, &enc_fwd.b, &enc_bwd.W, &enc_bwd.b,
          &dec.W, &dec.b, &W_out, &b_out};
}

const std::vector<std::string>& ModelParams::tensor_names() {
  static const std::vector<std::string> names = {
      "E", "A", "F", "enc_fwd.W", "enc_fwd.b", "enc_bwd.W", "enc_bwd.b",
      "dec.W", "dec.b", "W_out", "b_out"};
  return names;
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  z.set_zero();
  return z;
}

void ModelParams::set_zero() {
  for (Mat* t : tensors()) t->setZero();
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (const Mat* t : tensors()) n += static_cast<std::size_t>(t->size());
  return n;
}

Model make_model(Vocabularies vocabs, ModelDims dims, std::uint64_t seed) {
  if (dims.char_dim < 1 || dims.feat_dim < 1 || dims.hidden_dim < 1) {
    throw ConfigError("model dimensions must be positive");
  }
  Model m;
  m.vocabs = std::move(vocabs);
  m.dims = dims;
  std::mt19937_64 rng(seed);
  auto& p = m.params;
  const double emb_bound = std::sqrt(3.0 / dims.char_dim);
  p.E = uniform_matrix(dims.char_dim, m.vocabs.alphabet.size(), emb_bound, rng);
  p.A = uniform_matrix(dims.char_dim, 4, emb_bound, rng);
  p.F = uniform_matrix(dims.feat_dim, m.feature_count() + 1, std::sqrt(3.0 / dims.feat_dim), rng);
  p.enc_fwd = make_lstm(dims.char_dim, dims.hidden_dim, rng);
  p.enc_bwd = make_lstm(dims.char_dim, dims.hidden_dim, rng);
  p.dec = make_lstm(m.decoder_input_dim(), dims.hidden_dim, rng);
  p.W_out = uniform_matrix(m.action_count(), dims.hidden_dim, std::sqrt(3.0 / dims.hidden_dim), rng);
  p.b_out = Mat::Zero(m.action_count(), 1);
  return m;
}

EncodedInput encode(const Model& model, const std::u32string& x, EncoderTrace* trace) {
  const auto& p = model.params;
  const int H = model.dims.hidden_dim;
  const int len = static_cast<int>(x.size()) + 1;
  std::vector<int> ids(len);
  for (int t = 0; t + 1 < len; ++t) ids[t] = model.vocabs.alphabet.id(x[t]);
  ids[len - 1] = Alphabet::kSentinel;

  if (trace) {
    trace->ids = ids;
    trace->fwd.assign(len, {});
    trace->bwd.assign(len, {});
  }
  std::vector<Vec> hf(len), hb(len);
  Vec h = Vec::Zero(H), c = Vec::Zero(H);
  for (int t = 0; t < len; ++t) {
    Vec h_next, c_next;
    lstm_forward(p.enc_fwd, p.E.col(ids[t]), h, c, h_next, c_next,
                 trace ? &trace->fwd[t] : nullptr);
    h = std::move(h_next);
    c = std::move(c_next);
    hf[t] = h;
  }
  h.setZero();
  c.setZero();
  for (int t = len - 1; t >= 0; --t) {
    Vec h_next, c_next;
    lstm_forward(p.enc_bwd, p.E.col(ids[t]), h, c, h_next, c_next,
                 trace ? &trace->bwd[t] : nullptr);
    h = std::move(h_next);
    c = std::move(c_next);
    hb[t] = h;
  }
  EncodedInput enc;
  enc.h.resize(len);
  for (int t = 0; t < len; ++t) {
    enc.h[t].resize(2 * H);
    enc.h[t] << hf[t], hb[t];
  }
  return enc;
}

Vec feature_block(const Model& model, const MorphFeatures& feats) {
  const int H = model.feature_count();
  const int d = model.dims.feat_dim;
  if (feats.size() != H) throw UsageError("feature vector length does not match the vocabulary");
  Vec block(H * d);
  for (int h = 1; h <= H; ++h) {
    block.segment((h - 1) * d, d) = model.params.F.col(feats.bits[h - 1] ? h : 0);
  }
  return block;
}

DecoderStep initial_decoder_step(const Model& model) {
  return {Vec::Zero(model.dims.hidden_dim), Vec::Zero(model.dims.hidden_dim)};
}

DecoderStep decoder_step(const Model& model, const DecoderStep& prev, ActionId prev_action,
                         const EncodedInput& enc, int buffer_pos, const Vec& feats,
                         DecoderStepCache* cache) {
  const auto& p = model.params;
  const int cd = model.dims.char_dim;
  if (buffer_pos < 1 || buffer_pos > enc.size()) throw UsageError("buffer position out of range");
  if (feats.size() != model.feature_count() * model.dims.feat_dim) {
    throw UsageError("feature block has the wrong size");
  }
  Vec input(model.decoder_input_dim());
  const int special = special_index(prev_action);
  if (special >= 0) {
    input.head(cd) = p.A.col(special);
  } else {
    input.head(cd) = p.E.col(ActionVocab::insert_char_id(prev_action));
  }
  input.segment(cd, enc.h[buffer_pos - 1].size()) = enc.h[buffer_pos - 1];
  input.tail(feats.size()) = feats;

  DecoderStep next;
  if (cache) {
    cache->prev_action = prev_action;
    cache->buffer_pos = buffer_pos;
  }
  lstm_forward(p.dec, input, prev.s, prev.c, next.s, next.c, cache ? &cache->lstm : nullptr);
  return next;
}

Vec action_logits(const Model& model, const DecoderStep& step) {
  return model.params.W_out * step.s + model.params.b_out.col(0);
}

Vec masked_softmax(const Vec& logits, const std::vector<std::uint8_t>& valid) {
  double mx = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < logits.size(); ++k)
    if (valid[k]) mx = std::max(mx, logits[k]);
  if (!std::isfinite(mx)) throw UsageError("softmax over an empty valid set");
  Vec p = Vec::Zero(logits.size());
  double total = 0;
  for (Eigen::Index k = 0; k < logits.size(); ++k) {
    if (!valid[k]) continue;
    p[k] = std::exp(logits[k] - mx);
    total += p[k];
  }
  return p / total;
}

ActionDistribution action_distribution(const Model& model, const DecoderStep& step,
                                       const std::vector<std::uint8_t>& valid) {
  ActionDistribution d;
  d.logits = action_logits(model, step);
  d.probs = masked_softmax(d.logits, valid);
  return d;
}

void backward(const Model& model, const EncoderTrace& enc_trace, const EncodedInput& enc,
              const MorphFeatures& feats, const std::vector<DecoderTrace>& traces,
              Gradients& grads) {
  const auto& p = model.params;
  const int H = model.dims.hidden_dim;
  const int cd = model.dims.char_dim;
  const int fd = model.feature_count() * model.dims.feat_dim;
  const int len = enc.size();

  std::vector<Vec> dH(len, Vec::Zero(2 * H));
  Vec dfeat = Vec::Zero(fd);

  for (const auto& trace : traces) {
    Vec ds_carry = Vec::Zero(H), dc_carry = Vec::Zero(H);
    for (int t = static_cast<int>(trace.steps.size()) - 1; t >= 0; --t) {
      const auto& dz = trace.dlogits[t];
      grads.W_out.noalias() += dz * trace.s[t].transpose();
      grads.b_out.col(0) += dz;
      Vec ds = p.W_out.transpose() * dz + ds_carry;
      Vec dc_prev;
      const auto& step = trace.steps[t];
      Vec dinput = lstm_backward(p.dec, step.lstm, ds, dc_carry, grads.dec, dc_prev);
      const int special = special_index(step.prev_action);
      if (special >= 0) {
        grads.A.col(special) += dinput.head(cd);
      } else {
        grads.E.col(ActionVocab::insert_char_id(step.prev_action)) += dinput.head(cd);
      }
      dH[step.buffer_pos - 1] += dinput.segment(cd, 2 * H);
      if (fd > 0) dfeat += dinput.segment(cd + 2 * H, fd);
      ds_carry = dinput.tail(H);
      dc_carry = std::move(dc_prev);
    }
  }

  const int fdim = model.dims.feat_dim;
  for (int h = 1; h <= model.feature_count(); ++h) {
    grads.F.col(feats.bits[h - 1] ? h : 0) += dfeat.segment((h - 1) * fdim, fdim);
  }

  // Forward-direction LSTM ran t = 0..len-1, so its gradient flows back from
  // the last position; the backward-direction one the other way round.
  Vec dh = Vec::Zero(H), dc = Vec::Zero(H);
  for (int t = len - 1; t >= 0; --t) {
    Vec total = dH[t].head(H) + dh;
    Vec dc_prev;
    Vec dz = lstm_backward(p.enc_fwd, enc_trace.fwd[t], total, dc, grads.enc_fwd, dc_prev);
    grads.E.col(enc_trace.ids[t]) += dz.head(cd);
    dh = dz.tail(H);
    dc = std::move(dc_prev);
  }
  dh.setZero();
  dc.setZero();
  for (int t = 0; t < len; ++t) {
    Vec total = dH[t].tail(H) + dh;
    Vec dc_prev;
    Vec dz = lstm_backward(p.enc_bwd, enc_trace.bwd[t], total, dc, grads.enc_bwd, dc_prev);
    grads.E.col(enc_trace.ids[t]) += dz.head(cd);
    dh = dz.tail(H);
    dc = std::move(dc_prev);
  }
}

}  // namespace mtrans
