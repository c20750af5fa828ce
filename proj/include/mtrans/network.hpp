#pragma once

// Scorer for the edit transition system: tied character/action embeddings,
// feature embeddings, a bidirectional LSTM encoder over x·SENTINEL, a
// one-layer LSTM decoder and a softmax action classifier. Gradients are
// computed by hand; every forward function optionally records the cache
// its backward pass needs.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mtrans/core.hpp"

namespace mtrans {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct ModelDims {
  int char_dim = 100;
  int feat_dim = 20;
  int hidden_dim = 200;
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

// Gate rows are stacked input, forget, output, candidate; W acts on
// [input ; h_prev].
struct LstmParams {
  Mat W;
  Mat b;  // 4H x 1
  int input_dim() const { return static_cast<int>(W.cols() - W.rows() / 4); }
  int hidden_dim() const { return static_cast<int>(W.rows() / 4); }
};

struct ModelParams {
  Mat E;          // char_dim x |Alphabet|; also embeds INSERT(c)
  Mat A;          // char_dim x 4: COPY, DELETE, END, begin-of-sequence
  Mat F;          // feat_dim x (H+1); column 0 is the absent-feature embedding
  LstmParams enc_fwd;
  LstmParams enc_bwd;
  LstmParams dec;
  Mat W_out;      // |actions| x hidden
  Mat b_out;      // |actions| x 1

  // Fixed traversal order used by the optimizer, checkpoints and tests.
  std::vector<Mat*> tensors();
  std::vector<const Mat*> tensors() const;
  static const std::vector<std::string>& tensor_names();

  // Same shapes, all zeros.
  ModelParams zeros_like() const;
  void set_zero();
  std::size_t parameter_count() const;
};

using Gradients = ModelParams;

struct Model {
  Vocabularies vocabs;
  ModelDims dims;
  ModelParams params;

  int feature_count() const { return vocabs.features.size(); }
  int action_count() const { return vocabs.actions.size(); }
  int decoder_input_dim() const {
    return dims.char_dim + 2 * dims.hidden_dim + feature_count() * dims.feat_dim;
  }
};

// Uniform init in +-sqrt(3 / fan_in); forget-gate biases start at 1.
Model make_model(Vocabularies vocabs, ModelDims dims, std::uint64_t seed);

// Previous-action marker for the first decoder step.
inline constexpr ActionId kBeginAction = -1;

struct LstmCache {
  Vec z;  // [input ; h_prev]
  Vec i, f, o, g;
  Vec c_prev, c, tanh_c;
};

struct EncodedInput {
  std::vector<Vec> h;  // |x| + 1 vectors of size 2*hidden; last is the sentinel
  int size() const { return static_cast<int>(h.size()); }
};

struct EncoderTrace {
  std::vector<int> ids;
  std::vector<LstmCache> fwd;
  std::vector<LstmCache> bwd;
};

EncodedInput encode(const Model& model, const std::u32string& x, EncoderTrace* trace = nullptr);

// [F(f_1) ; ... ; F(f_H)] with F(0) in every inactive slot.
Vec feature_block(const Model& model, const MorphFeatures& feats);

struct DecoderStep {
  Vec c;
  Vec s;
};

DecoderStep initial_decoder_step(const Model& model);

struct DecoderStepCache {
  ActionId prev_action = kBeginAction;
  int buffer_pos = 1;
  LstmCache lstm;
};

// buffer_pos is the 1-based buffer top whose encoding feeds this step.
DecoderStep decoder_step(const Model& model, const DecoderStep& prev, ActionId prev_action,
                         const EncodedInput& enc, int buffer_pos, const Vec& feats,
                         DecoderStepCache* cache = nullptr);

Vec action_logits(const Model& model, const DecoderStep& step);

struct ActionDistribution {
  Vec logits;  // raw W*s + b over the whole action vocabulary
  Vec probs;   // softmax over valid actions, exactly 0 elsewhere
};

// Throws UsageError when no action is valid.
Vec masked_softmax(const Vec& logits, const std::vector<std::uint8_t>& valid);
ActionDistribution action_distribution(const Model& model, const DecoderStep& step,
                                       const std::vector<std::uint8_t>& valid);

// One teacher-forced or rolled-in decoder pass: per-step caches, outputs
// and the loss gradient with respect to that step's logits.
struct DecoderTrace {
  std::vector<DecoderStepCache> steps;
  std::vector<Vec> s;
  std::vector<Vec> dlogits;
};

// Reverse-mode pass over every decoder trace that shares one encoding.
// Accumulates into `grads`.
void backward(const Model& model, const EncoderTrace& enc_trace, const EncodedInput& enc,
              const MorphFeatures& feats, const std::vector<DecoderTrace>& traces,
              Gradients& grads);

}  // namespace mtrans
