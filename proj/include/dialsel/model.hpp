#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dialsel/autodiff.hpp"
#include "dialsel/taskgen.hpp"
#include "dialsel/tokenizer.hpp"

namespace dialsel {

struct EncoderConfig {
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t d_model = 64;
  std::size_t d_ff = 256;
  std::size_t vocab_size = 0;  // set from the vocabulary
  std::size_t max_len = 256;   // longest packed sequence accepted
  double dropout = 0.1;
  double ln_eps = 1e-5;
};

std::string encoder_config_to_json(const EncoderConfig& cfg);
EncoderConfig encoder_config_from_json(const std::string& text);

// Shared encoder parameters plus five task heads. The three scoring heads
// (main matching, next-session, consistency) share an architecture but never
// share values.
class MatcherModel {
 public:
  struct Head {
    Tensor w1, b1;  // (d_model, d_model), (d_model)
    Tensor w2, b2;  // (1, d_model), (1)
  };
  struct Layer {
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
    Tensor ln1_g, ln1_b;
    Tensor w1, b1, w2, b2;  // feed-forward
    Tensor ln2_g, ln2_b;
  };

  MatcherModel() = default;
  MatcherModel(EncoderConfig cfg, std::uint64_t seed);

  const EncoderConfig& config() const { return cfg_; }

  // Stable order; gradient vectors and checkpoints are aligned with it.
  std::vector<std::pair<std::string, Tensor*>> named_params();
  std::vector<Tensor*> params();

  // Binary checkpoint at `path`, JSON config sidecar at `path` + ".json".
  void save(const std::string& path) const;
  static MatcherModel load(const std::string& path);

  Tensor tok_emb, pos_emb, seg_emb;
  std::vector<Layer> layers;
  Head crm_head, nsp_head, cd_head;
  Tensor ur_w, ur_b;    // (d,d), (d)
  Tensor ur_w2, ur_b2;  // (V,d), (V)
  Tensor id_w, id_b;    // (1, 2d), (1)

 private:
  EncoderConfig cfg_;
};

// Model parameters registered as leaves on a tape for one forward/backward.
struct BoundHead {
  ad::Var w1, b1, w2, b2;
};
struct BoundLayer {
  ad::Var wq, bq, wk, bk, wv, bv, wo, bo;
  ad::Var ln1_g, ln1_b;
  ad::Var w1, b1, w2, b2;
  ad::Var ln2_g, ln2_b;
};
struct Bound {
  ad::Tape* tape = nullptr;
  const EncoderConfig* cfg = nullptr;
  ad::Var tok_emb, pos_emb, seg_emb;
  std::vector<BoundLayer> layers;
  BoundHead crm, nsp, cd;
  ad::Var ur_w, ur_b, ur_w2, ur_b2, id_w, id_b;
  std::vector<ad::Var> ordered;  // aligned with MatcherModel::params()
};

Bound bind(ad::Tape& tape, const MatcherModel& model, bool with_grad);

// Token+position+segment embeddings through the transformer stack. Padding
// ids are excluded from attention via an additive mask, so appending [PAD]s
// never changes the outputs at non-pad positions. Pass a dropout RNG during
// training; nullptr disables dropout.
ad::Var encode(const Bound& b, const PackedSequence& packed, Rng* dropout_rng);

// sigma(w2 . tanh(w1 . H[0] + b1) + b2) for the three scoring heads.
ad::Var head_logit(const Bound& b, const BoundHead& head, ad::Var H);
ad::Var crm_score(const Bound& b, ad::Var H);
ad::Var nsp_score(const Bound& b, ad::Var H);
ad::Var cd_score(const Bound& b, ad::Var H);

// Per masked position: softmax over V of W'.gelu(W.E_j + b) + b'.
ad::Var ur_token_probs(const Bound& b, ad::Var H, const PackedSequence& packed);

// Per utterance span: [mean; max] pooled, scored and softmaxed over turns.
ad::Var id_utterance_probs(const Bound& b, ad::Var H, const PackedSequence& packed);

// -y ln g - (1-y) ln(1-g), with g clamped into [1e-12, 1-1e-12]; actual
// clamping is counted via note_clamp_flag in checked mode.
ad::Var binary_ce(ad::Var g, int y);
// -(1/l) sum_j ln p(target_j).
ad::Var loss_ur(ad::Var probs, const std::vector<std::size_t>& target_ids);
// -ln p_k for the one-hot position k.
ad::Var loss_id(ad::Var probs, const std::vector<int>& z);
// max(0, delta - g_pos + g_neg).
ad::Var loss_cd(ad::Var g_pos, ad::Var g_neg, double delta);

struct LossBundle {
  double l_crm = 0, l_nsp = 0, l_ur = 0, l_id = 0, l_cd = 0, l_final = 0;
  std::size_t n_crm = 0, n_nsp = 0, n_ur = 0, n_id = 0, n_cd = 0;
};

// l_crm + alpha * (l_nsp + l_ur + l_id + l_cd); components are batch means.
double loss_final(const LossBundle& bundle, double alpha);

// Forward (and backward when grads != nullptr) over a generated batch.
// Losses are per-task means; gradients of the joint objective are
// accumulated instance by instance into `grads`, aligned with
// model.params(). Dropout (train_mode only) draws from per-instance
// substreams of (seed, step), so instances are independent of batch order.
LossBundle batch_loss_and_grads(const MatcherModel& model, const Batch& batch,
                                double alpha, double delta, std::uint64_t seed,
                                std::uint64_t step, bool train_mode,
                                std::vector<Tensor>* grads);

// Forward-only main-task score of one packed context-response pair.
double score_pair(const MatcherModel& model, const PackedSequence& packed);

}  // namespace dialsel
