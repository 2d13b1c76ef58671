#include "dialsel/model.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dialsel/checkpoint.hpp"
#include "json.hpp"

namespace dialsel {

namespace {

// Stream tag for dropout substreams; task generation uses Task values 1..5.
constexpr std::uint64_t kDropStream = 0xd409;
constexpr double kProbFloor = 1e-12;

void validate(const EncoderConfig& cfg) {
  if (cfg.d_model == 0 || cfg.heads == 0 || cfg.d_model % cfg.heads != 0)
    throw ConfigError("encoder: d_model must be a positive multiple of heads");
  if (cfg.vocab_size == 0) throw ConfigError("encoder: vocab_size not set");
  if (cfg.max_len == 0) throw ConfigError("encoder: max_len must be positive");
  if (cfg.dropout < 0.0 || cfg.dropout >= 1.0)
    throw ConfigError("encoder: dropout must lie in [0, 1)");
}

void init_normal(Tensor& t, Rng& rng, double stddev) {
  for (std::size_t i = 0; i < t.size(); ++i) t.at(i) = rng.normal(0.0, stddev);
}

}  // namespace

std::string encoder_config_to_json(const EncoderConfig& cfg) {
  nlohmann::json j;
  j["layers"] = cfg.layers;
  j["heads"] = cfg.heads;
  j["d_model"] = cfg.d_model;
  j["d_ff"] = cfg.d_ff;
  j["vocab_size"] = cfg.vocab_size;
  j["max_len"] = cfg.max_len;
  j["dropout"] = cfg.dropout;
  j["ln_eps"] = cfg.ln_eps;
  return j.dump(2);
}

EncoderConfig encoder_config_from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw Error("encoder config: invalid JSON");
  EncoderConfig cfg;
  cfg.layers = j.at("layers").get<std::size_t>();
  cfg.heads = j.at("heads").get<std::size_t>();
  cfg.d_model = j.at("d_model").get<std::size_t>();
  cfg.d_ff = j.at("d_ff").get<std::size_t>();
  cfg.vocab_size = j.at("vocab_size").get<std::size_t>();
  cfg.max_len = j.at("max_len").get<std::size_t>();
  cfg.dropout = j.at("dropout").get<double>();
  cfg.ln_eps = j.at("ln_eps").get<double>();
  validate(cfg);
  return cfg;
}

MatcherModel::MatcherModel(EncoderConfig cfg, std::uint64_t seed) : cfg_(cfg) {
  validate(cfg_);
  const std::size_t d = cfg_.d_model;
  const std::size_t V = cfg_.vocab_size;
  auto head = [&] {
    Head h;
    h.w1 = Tensor::zeros({d, d});
    h.b1 = Tensor::zeros({d});
    h.w2 = Tensor::zeros({1, d});
    h.b2 = Tensor::zeros({1});
    return h;
  };
  tok_emb = Tensor::zeros({V, d});
  pos_emb = Tensor::zeros({cfg_.max_len, d});
  seg_emb = Tensor::zeros({2, d});
  layers.resize(cfg_.layers);
  for (Layer& l : layers) {
    l.wq = Tensor::zeros({d, d});
    l.bq = Tensor::zeros({d});
    l.wk = Tensor::zeros({d, d});
    l.bk = Tensor::zeros({d});
    l.wv = Tensor::zeros({d, d});
    l.bv = Tensor::zeros({d});
    l.wo = Tensor::zeros({d, d});
    l.bo = Tensor::zeros({d});
    l.ln1_g = Tensor::full({d}, 1.0);
    l.ln1_b = Tensor::zeros({d});
    l.w1 = Tensor::zeros({d, cfg_.d_ff});
    l.b1 = Tensor::zeros({cfg_.d_ff});
    l.w2 = Tensor::zeros({cfg_.d_ff, d});
    l.b2 = Tensor::zeros({d});
    l.ln2_g = Tensor::full({d}, 1.0);
    l.ln2_b = Tensor::zeros({d});
  }
  crm_head = head();
  nsp_head = head();
  cd_head = head();
  ur_w = Tensor::zeros({d, d});
  ur_b = Tensor::zeros({d});
  ur_w2 = Tensor::zeros({V, d});
  ur_b2 = Tensor::zeros({V});
  id_w = Tensor::zeros({1, 2 * d});
  id_b = Tensor::zeros({1});

  Rng rng(mix_seed({seed, 0x1417}));  // model-init stream
  const double stddev = 0.02;
  init_normal(tok_emb, rng, stddev);
  init_normal(pos_emb, rng, stddev);
  init_normal(seg_emb, rng, stddev);
  for (Layer& l : layers) {
    init_normal(l.wq, rng, stddev);
    init_normal(l.wk, rng, stddev);
    init_normal(l.wv, rng, stddev);
    init_normal(l.wo, rng, stddev);
    init_normal(l.w1, rng, stddev);
    init_normal(l.w2, rng, stddev);
  }
  for (Head* h : {&crm_head, &nsp_head, &cd_head}) {
    init_normal(h->w1, rng, stddev);
    init_normal(h->w2, rng, stddev);
  }
  init_normal(ur_w, rng, stddev);
  init_normal(ur_w2, rng, stddev);
  init_normal(id_w, rng, stddev);
}

std::vector<std::pair<std::string, Tensor*>> MatcherModel::named_params() {
  std::vector<std::pair<std::string, Tensor*>> out;
  out.emplace_back("tok_emb", &tok_emb);
  out.emplace_back("pos_emb", &pos_emb);
  out.emplace_back("seg_emb", &seg_emb);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    Layer& l = layers[i];
    const std::string p = "layer" + std::to_string(i) + ".";
    out.emplace_back(p + "wq", &l.wq);
    out.emplace_back(p + "bq", &l.bq);
    out.emplace_back(p + "wk", &l.wk);
    out.emplace_back(p + "bk", &l.bk);
    out.emplace_back(p + "wv", &l.wv);
    out.emplace_back(p + "bv", &l.bv);
    out.emplace_back(p + "wo", &l.wo);
    out.emplace_back(p + "bo", &l.bo);
    out.emplace_back(p + "ln1_g", &l.ln1_g);
    out.emplace_back(p + "ln1_b", &l.ln1_b);
    out.emplace_back(p + "w1", &l.w1);
    out.emplace_back(p + "b1", &l.b1);
    out.emplace_back(p + "w2", &l.w2);
    out.emplace_back(p + "b2", &l.b2);
    out.emplace_back(p + "ln2_g", &l.ln2_g);
    out.emplace_back(p + "ln2_b", &l.ln2_b);
  }
  auto add_head = [&out](const std::string& p, Head& h) {
    out.emplace_back(p + ".w1", &h.w1);
    out.emplace_back(p + ".b1", &h.b1);
    out.emplace_back(p + ".w2", &h.w2);
    out.emplace_back(p + ".b2", &h.b2);
  };
  add_head("crm", crm_head);
  add_head("nsp", nsp_head);
  add_head("cd", cd_head);
  out.emplace_back("ur.w", &ur_w);
  out.emplace_back("ur.b", &ur_b);
  out.emplace_back("ur.w2", &ur_w2);
  out.emplace_back("ur.b2", &ur_b2);
  out.emplace_back("id.w", &id_w);
  out.emplace_back("id.b", &id_b);
  return out;
}

std::vector<Tensor*> MatcherModel::params() {
  std::vector<Tensor*> out;
  for (auto& [name, t] : named_params()) out.push_back(t);
  return out;
}

void MatcherModel::save(const std::string& path) const {
  auto named = const_cast<MatcherModel*>(this)->named_params();
  std::vector<std::pair<std::string, const Tensor*>> entries;
  entries.reserve(named.size());
  for (auto& [name, t] : named) entries.emplace_back(name, t);
  save_checkpoint(path, entries);
  std::ofstream os(path + ".json");
  if (!os) throw Error(path + ".json: cannot open for writing");
  os << encoder_config_to_json(cfg_) << '\n';
  if (!os) throw Error(path + ".json: write failed");
}

MatcherModel MatcherModel::load(const std::string& path) {
  std::ifstream is(path + ".json");
  if (!is) throw Error(path + ".json: cannot open (config sidecar required)");
  std::stringstream ss;
  ss << is.rdbuf();
  MatcherModel model(encoder_config_from_json(ss.str()), 0);

  auto entries = load_checkpoint(path);
  auto named = model.named_params();
  if (entries.size() != named.size())
    throw Error(path + ": checkpoint has " + std::to_string(entries.size()) +
                " tensors, model needs " + std::to_string(named.size()));
  for (std::size_t i = 0; i < named.size(); ++i) {
    auto& [name, dst] = named[i];
    auto& [ck_name, src] = entries[i];
    if (ck_name != name)
      throw Error(path + ": tensor " + std::to_string(i) + " is '" + ck_name +
                  "', expected '" + name + "'");
    if (!src.same_shape(*dst))
      throw ShapeError(path + ": '" + name + "' shape mismatch " +
                       shape_pair_str(src, *dst));
    *dst = std::move(src);
  }
  return model;
}

Bound bind(ad::Tape& tape, const MatcherModel& model, bool with_grad) {
  Bound b;
  b.tape = &tape;
  b.cfg = &model.config();
  auto leaf = [&](const Tensor& t) {
    ad::Var v = tape.leaf(t, with_grad);
    b.ordered.push_back(v);
    return v;
  };
  b.tok_emb = leaf(model.tok_emb);
  b.pos_emb = leaf(model.pos_emb);
  b.seg_emb = leaf(model.seg_emb);
  for (const MatcherModel::Layer& l : model.layers) {
    BoundLayer bl;
    bl.wq = leaf(l.wq);
    bl.bq = leaf(l.bq);
    bl.wk = leaf(l.wk);
    bl.bk = leaf(l.bk);
    bl.wv = leaf(l.wv);
    bl.bv = leaf(l.bv);
    bl.wo = leaf(l.wo);
    bl.bo = leaf(l.bo);
    bl.ln1_g = leaf(l.ln1_g);
    bl.ln1_b = leaf(l.ln1_b);
    bl.w1 = leaf(l.w1);
    bl.b1 = leaf(l.b1);
    bl.w2 = leaf(l.w2);
    bl.b2 = leaf(l.b2);
    bl.ln2_g = leaf(l.ln2_g);
    bl.ln2_b = leaf(l.ln2_b);
    b.layers.push_back(bl);
  }
  auto bind_head = [&](const MatcherModel::Head& h) {
    BoundHead bh;
    bh.w1 = leaf(h.w1);
    bh.b1 = leaf(h.b1);
    bh.w2 = leaf(h.w2);
    bh.b2 = leaf(h.b2);
    return bh;
  };
  b.crm = bind_head(model.crm_head);
  b.nsp = bind_head(model.nsp_head);
  b.cd = bind_head(model.cd_head);
  b.ur_w = leaf(model.ur_w);
  b.ur_b = leaf(model.ur_b);
  b.ur_w2 = leaf(model.ur_w2);
  b.ur_b2 = leaf(model.ur_b2);
  b.id_w = leaf(model.id_w);
  b.id_b = leaf(model.id_b);
  return b;
}

namespace {

ad::Var apply_dropout(ad::Tape& tape, ad::Var x, double p, Rng* rng) {
  if (rng == nullptr || p <= 0.0) return x;
  Tensor mask(x.value().shape());
  const double keep_scale = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < mask.size(); ++i)
    mask.at(i) = rng->uniform01() < p ? 0.0 : keep_scale;
  return ad::mul(x, tape.leaf(std::move(mask), false));
}

}  // namespace

ad::Var encode(const Bound& b, const PackedSequence& packed, Rng* dropout_rng) {
  const EncoderConfig& cfg = *b.cfg;
  ad::Tape& tape = *b.tape;
  const std::size_t L = packed.size();
  if (L == 0) throw Error("encode: empty sequence");
  if (L > cfg.max_len)
    throw Error("encode: sequence length " + std::to_string(L) + " exceeds max_len " +
                std::to_string(cfg.max_len));
  for (std::size_t id : packed.token_ids)
    if (id >= cfg.vocab_size)
      throw Error("encode: token id " + std::to_string(id) + " outside vocab of " +
                  std::to_string(cfg.vocab_size));

  ad::Var x = ad::embedding_lookup(b.tok_emb, packed.token_ids);
  x = ad::add(x, ad::embedding_lookup(b.pos_emb, packed.positions));
  x = ad::add(x, ad::embedding_lookup(b.seg_emb, packed.segment_ids));
  x = apply_dropout(tape, x, cfg.dropout, dropout_rng);

  // Pad ids may appear only as attention keys to be ignored; -1e9 underflows
  // to a weight of exactly zero after the stabilized softmax.
  bool any_pad = false;
  for (std::size_t id : packed.token_ids) any_pad = any_pad || id == Vocab::kPad;
  ad::Var pad_mask;
  if (any_pad) {
    Tensor m({L, L});
    for (std::size_t j = 0; j < L; ++j)
      if (packed.token_ids[j] == Vocab::kPad)
        for (std::size_t i = 0; i < L; ++i) m.at2(i, j) = -1e9;
    pad_mask = tape.leaf(std::move(m), false);
  }

  const std::size_t dk = cfg.d_model / cfg.heads;
  const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(dk));
  for (const BoundLayer& l : b.layers) {
    ad::Var q = ad::add(ad::matmul(x, l.wq), l.bq);
    ad::Var k = ad::add(ad::matmul(x, l.wk), l.bk);
    ad::Var v = ad::add(ad::matmul(x, l.wv), l.bv);
    std::vector<ad::Var> heads;
    heads.reserve(cfg.heads);
    for (std::size_t h = 0; h < cfg.heads; ++h) {
      ad::Var qh = ad::slice(q, 1, h * dk, (h + 1) * dk);
      ad::Var kh = ad::slice(k, 1, h * dk, (h + 1) * dk);
      ad::Var vh = ad::slice(v, 1, h * dk, (h + 1) * dk);
      ad::Var scores = ad::scale(ad::matmul_nt(qh, kh), inv_sqrt_dk);
      if (any_pad) scores = ad::add(scores, pad_mask);
      heads.push_back(ad::matmul(ad::softmax(scores), vh));
    }
    ad::Var attn = ad::add(ad::matmul(ad::concat(1, heads), l.wo), l.bo);
    attn = apply_dropout(tape, attn, cfg.dropout, dropout_rng);
    x = ad::layer_norm(ad::add(x, attn), l.ln1_g, l.ln1_b, cfg.ln_eps);

    ad::Var ff = ad::gelu(ad::add(ad::matmul(x, l.w1), l.b1));
    ff = ad::add(ad::matmul(ff, l.w2), l.b2);
    ff = apply_dropout(tape, ff, cfg.dropout, dropout_rng);
    x = ad::layer_norm(ad::add(x, ff), l.ln2_g, l.ln2_b, cfg.ln_eps);
  }
  return x;
}

ad::Var head_logit(const Bound& b, const BoundHead& head, ad::Var H) {
  (void)b;
  ad::Var cls = ad::slice(H, 0, 0, 1);  // the [CLS] vector
  ad::Var hid = ad::tanh(ad::add(ad::matmul_nt(cls, head.w1), head.b1));
  return ad::add(ad::matmul_nt(hid, head.w2), head.b2);
}

ad::Var crm_score(const Bound& b, ad::Var H) { return ad::sigmoid(head_logit(b, b.crm, H)); }
ad::Var nsp_score(const Bound& b, ad::Var H) { return ad::sigmoid(head_logit(b, b.nsp, H)); }
ad::Var cd_score(const Bound& b, ad::Var H) { return ad::sigmoid(head_logit(b, b.cd, H)); }

ad::Var ur_token_probs(const Bound& b, ad::Var H, const PackedSequence& packed) {
  if (!packed.mask_span) throw Error("restoration head: packing has no mask span");
  const auto [start, end] = *packed.mask_span;
  if (start >= end) throw Error("restoration head: empty mask span");
  std::vector<std::size_t> rows(end - start);
  std::iota(rows.begin(), rows.end(), start);
  ad::Var em = ad::embedding_lookup(H, std::move(rows));
  ad::Var hid = ad::gelu(ad::add(ad::matmul_nt(em, b.ur_w), b.ur_b));
  return ad::softmax(ad::add(ad::matmul_nt(hid, b.ur_w2), b.ur_b2));
}

ad::Var id_utterance_probs(const Bound& b, ad::Var H, const PackedSequence& packed) {
  const auto& spans = packed.utterance_spans;
  if (spans.size() < 2)
    throw Error("incoherence head: need >= 2 utterance spans, got " +
                std::to_string(spans.size()));
  std::vector<ad::Var> logits;
  logits.reserve(spans.size());
  for (const auto& [start, end] : spans) {
    if (start >= end) throw Error("incoherence head: empty utterance span");
    ad::Var span = ad::slice(H, 0, start, end);
    ad::Var pooled =
        ad::concat(1, {ad::mean_axis(span, 0), ad::max_axis(span, 0)});  // (1, 2d)
    logits.push_back(ad::add(ad::matmul_nt(pooled, b.id_w), b.id_b));
  }
  return ad::softmax(ad::reshape(ad::concat(0, logits), {spans.size()}));
}

ad::Var binary_ce(ad::Var g, int y) {
  if (y != 0 && y != 1) throw Error("binary_ce: label must be 0 or 1");
  ad::Tape& tape = *g.tape;
  const double gv = g.value().at(0);
  if (checked_mode() && (gv < kProbFloor || gv > 1.0 - kProbFloor)) note_clamp_flag();
  ad::Var gc = ad::clamp(g, kProbFloor, 1.0 - kProbFloor);
  if (y == 1) return ad::scale(ad::log(gc), -1.0);
  ad::Var ones = tape.leaf(Tensor::full(gc.value().shape(), 1.0), false);
  return ad::scale(ad::log(ad::sub(ones, gc)), -1.0);
}

ad::Var loss_ur(ad::Var probs, const std::vector<std::size_t>& target_ids) {
  if (probs.value().rows() != target_ids.size())
    throw Error("restoration loss: " + std::to_string(probs.value().rows()) +
                " predictions for " + std::to_string(target_ids.size()) + " targets");
  ad::Var picked = ad::pick(probs, target_ids);
  return ad::scale(ad::mean_all(ad::log(ad::clamp(picked, kProbFloor, 1.0))), -1.0);
}

ad::Var loss_id(ad::Var probs, const std::vector<int>& z) {
  if (probs.value().size() != z.size())
    throw Error("incoherence loss: probability/label size mismatch");
  std::size_t hot = z.size();
  int total = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] != 0 && z[i] != 1) throw Error("incoherence loss: malformed one-hot");
    total += z[i];
    if (z[i] == 1) hot = i;
  }
  if (total != 1) throw Error("incoherence loss: malformed one-hot");
  ad::Var picked = ad::slice(probs, 0, hot, hot + 1);
  return ad::scale(ad::log(ad::clamp(picked, kProbFloor, 1.0)), -1.0);
}

ad::Var loss_cd(ad::Var g_pos, ad::Var g_neg, double delta) {
  if (delta < 0.0) throw Error("consistency loss: margin must be >= 0");
  ad::Tape& tape = *g_pos.tape;
  ad::Var margin = tape.leaf(Tensor::full(g_pos.value().shape(), delta), false);
  return ad::relu(ad::add(ad::sub(margin, g_pos), g_neg));
}

double loss_final(const LossBundle& b, double alpha) {
  return b.l_crm + alpha * (b.l_nsp + b.l_ur + b.l_id + b.l_cd);
}

LossBundle batch_loss_and_grads(const MatcherModel& model, const Batch& batch,
                                double alpha, double delta, std::uint64_t seed,
                                std::uint64_t step, bool train_mode,
                                std::vector<Tensor>* grads) {
  LossBundle bundle;
  bundle.n_crm = batch.crm.size();
  bundle.n_nsp = batch.nsp.size();
  bundle.n_ur = batch.ur.size();
  bundle.n_id = batch.id.size();
  bundle.n_cd = batch.cd.size();

  if (grads != nullptr) {
    grads->clear();
    for (Tensor* p : const_cast<MatcherModel&>(model).params())
      grads->push_back(Tensor::zeros(p->shape()));
  }

  const bool with_dropout = train_mode && model.config().dropout > 0.0;
  auto run = [&](Task task, std::size_t index, double weight, auto&& build) {
    ad::Tape tape;
    Bound b = bind(tape, model, grads != nullptr);
    Rng drop_rng(
        mix_seed({seed, kDropStream, step, static_cast<std::uint64_t>(task), index}));
    ad::Var loss = build(b, with_dropout ? &drop_rng : nullptr);
    const double value = loss.value().at(0);
    if (grads != nullptr && weight != 0.0) {
      tape.backward(loss);
      for (std::size_t i = 0; i < b.ordered.size(); ++i) {
        const ad::Var leaf = b.ordered[i];
        if (!tape.has_grad(leaf.id)) continue;
        const Tensor& g = tape.grad(leaf.id);
        Tensor& acc = (*grads)[i];
        for (std::size_t j = 0; j < g.size(); ++j) acc.at(j) += weight * g.at(j);
      }
    }
    return value;
  };

  for (std::size_t i = 0; i < batch.crm.size(); ++i) {
    const CrmInstance& inst = batch.crm[i];
    bundle.l_crm += run(Task::crm, i, 1.0 / static_cast<double>(bundle.n_crm),
                        [&](Bound& b, Rng* dr) {
                          return binary_ce(crm_score(b, encode(b, inst.packed, dr)),
                                           inst.label);
                        });
  }
  for (std::size_t i = 0; i < batch.nsp.size(); ++i) {
    const NspInstance& inst = batch.nsp[i];
    bundle.l_nsp += run(Task::nsp, i, alpha / static_cast<double>(bundle.n_nsp),
                        [&](Bound& b, Rng* dr) {
                          return binary_ce(nsp_score(b, encode(b, inst.packed, dr)),
                                           inst.label);
                        });
  }
  for (std::size_t i = 0; i < batch.ur.size(); ++i) {
    const UrInstance& inst = batch.ur[i];
    bundle.l_ur += run(Task::ur, i, alpha / static_cast<double>(bundle.n_ur),
                       [&](Bound& b, Rng* dr) {
                         ad::Var H = encode(b, inst.packed, dr);
                         return loss_ur(ur_token_probs(b, H, inst.packed),
                                        inst.target_ids);
                       });
  }
  for (std::size_t i = 0; i < batch.id.size(); ++i) {
    const IdInstance& inst = batch.id[i];
    bundle.l_id += run(Task::id, i, alpha / static_cast<double>(bundle.n_id),
                       [&](Bound& b, Rng* dr) {
                         ad::Var H = encode(b, inst.packed, dr);
                         return loss_id(id_utterance_probs(b, H, inst.packed), inst.z);
                       });
  }
  for (std::size_t i = 0; i < batch.cd.size(); ++i) {
    const CdInstance& inst = batch.cd[i];
    bundle.l_cd += run(Task::cd, i, alpha / static_cast<double>(bundle.n_cd),
                       [&](Bound& b, Rng* dr) {
                         ad::Var g_pos = cd_score(b, encode(b, inst.packed_pos, dr));
                         ad::Var g_neg = cd_score(b, encode(b, inst.packed_neg, dr));
                         return loss_cd(g_pos, g_neg, delta);
                       });
  }

  if (bundle.n_crm) bundle.l_crm /= static_cast<double>(bundle.n_crm);
  if (bundle.n_nsp) bundle.l_nsp /= static_cast<double>(bundle.n_nsp);
  if (bundle.n_ur) bundle.l_ur /= static_cast<double>(bundle.n_ur);
  if (bundle.n_id) bundle.l_id /= static_cast<double>(bundle.n_id);
  if (bundle.n_cd) bundle.l_cd /= static_cast<double>(bundle.n_cd);
  bundle.l_final = loss_final(bundle, alpha);
  return bundle;
}

double score_pair(const MatcherModel& model, const PackedSequence& packed) {
  ad::Tape tape;
  Bound b = bind(tape, model, /*with_grad=*/false);
  return crm_score(b, encode(b, packed, nullptr)).value().at(0);
}

}  // namespace dialsel
