// Copyright 2026 The slujoint Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "slu/rnnt.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "slu/error.h"

namespace slu {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

struct Lattice {
  std::size_t T, U1, K;
  std::span<const double> lp;
  double at(std::size_t t, std::size_t u, std::size_t k) const {
    return lp[(t * U1 + u) * K + k];
  }
};

void check_lattice(const Shape &s, std::span<const int> y) {
  SLU_CHECK(s.size() == 3, "transducer lattice must be T x (U+1) x K, got ",
            shape_str(s));
  SLU_CHECK(s[1] == y.size() + 1, "lattice has ", s[1], " prefix rows but ",
            y.size(), " labels");
  SLU_CHECK(s[0] >= 1, "transducer loss needs at least one frame (T=0, U=",
            y.size(), ")");
  for (int k : y)
    SLU_CHECK(k > 0 && static_cast<std::size_t>(k) < s[2], "label ", k,
              " outside the non-blank range [1, ", s[2], ")");
}

// Forward variables alpha(t, u): log-probability of reaching node (t, u).
std::vector<double> forward_vars(const Lattice &L, std::span<const int> y) {
  std::vector<double> alpha(L.T * L.U1, kNegInf);
  alpha[0] = 0.0;
  for (std::size_t t = 0; t < L.T; ++t)
    for (std::size_t u = 0; u < L.U1; ++u) {
      if (t == 0 && u == 0) continue;
      double a = kNegInf;
      if (t > 0) a = alpha[(t - 1) * L.U1 + u] + L.at(t - 1, u, 0);
      if (u > 0) a = log_add(a, alpha[t * L.U1 + u - 1] + L.at(t, u - 1, y[u - 1]));
      alpha[t * L.U1 + u] = a;
    }
  return alpha;
}

}  // namespace

double rnnt_log_likelihood(std::span<const double> log_probs, std::size_t T,
                           std::size_t K, std::span<const int> y) {
  const std::size_t U1 = y.size() + 1;
  SLU_CHECK(log_probs.size() == T * U1 * K, "lattice size mismatch");
  check_lattice({T, U1, K}, y);
  const Lattice L{T, U1, K, log_probs};
  const std::vector<double> alpha = forward_vars(L, y);
  return alpha[(T - 1) * U1 + U1 - 1] + L.at(T - 1, U1 - 1, 0);
}

Tensor rnnt_loss_from_log_probs(Tape &tape, const Tensor &log_probs,
                                std::span<const int> y) {
  check_lattice(log_probs.shape(), y);
  const std::size_t T = log_probs.dim(0), U1 = log_probs.dim(1),
                    K = log_probs.dim(2), U = U1 - 1;
  const Lattice L{T, U1, K, log_probs.data()};
  const std::vector<double> alpha = forward_vars(L, y);
  const double ll = alpha[(T - 1) * U1 + U] + L.at(T - 1, U, 0);
  Tensor out = Tensor::scalar(-ll);
  if (!tape.recording() || !log_probs.requires_grad()) return out;

  std::vector<double> beta(T * U1, kNegInf);
  for (std::size_t t = T; t-- > 0;)
    for (std::size_t u = U1; u-- > 0;) {
      double b = kNegInf;
      if (t == T - 1 && u == U) b = L.at(t, u, 0);
      if (t + 1 < T) b = log_add(b, L.at(t, u, 0) + beta[(t + 1) * U1 + u]);
      if (u < U) b = log_add(b, L.at(t, u, y[u]) + beta[t * U1 + u + 1]);
      beta[t * U1 + u] = b;
    }
  // Per node: d(loss)/d(blank log-prob) and d(loss)/d(next-label log-prob).
  std::vector<double> d_blank(T * U1, 0.0), d_label(T * U1, 0.0);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t u = 0; u < U1; ++u) {
      const double a = alpha[t * U1 + u];
      if (a == kNegInf) continue;
      double next = kNegInf;
      if (t + 1 < T) next = beta[(t + 1) * U1 + u];
      else if (u == U) next = 0.0;
      if (next != kNegInf)
        d_blank[t * U1 + u] = -std::exp(a + L.at(t, u, 0) + next - ll);
      if (u < U)
        d_label[t * U1 + u] =
            -std::exp(a + L.at(t, u, y[u]) + beta[t * U1 + u + 1] - ll);
    }
  std::vector<int> labels(y.begin(), y.end());
  return tape.record(
      out, {log_probs},
      [log_probs, d_blank = std::move(d_blank), d_label = std::move(d_label),
       labels = std::move(labels), T, U1, K](Tape &tp, std::span<const double> g) {
        std::span<double> gl = tp.grad_of(log_probs);
        for (std::size_t t = 0; t < T; ++t)
          for (std::size_t u = 0; u < U1; ++u) {
            const std::size_t base = (t * U1 + u) * K;
            gl[base] += g[0] * d_blank[t * U1 + u];
            if (u + 1 < U1) gl[base + labels[u]] += g[0] * d_label[t * U1 + u];
          }
      });
}

Tensor rnnt_loss(Tape &tape, const Tensor &logits, std::span<const int> y) {
  check_lattice(logits.shape(), y);
  return rnnt_loss_from_log_probs(tape, tape.log_softmax(logits, 2), y);
}

Tensor rnnt_label_transitions(const Tensor &log_probs, std::span<const int> y) {
  check_lattice(log_probs.shape(), y);
  const std::size_t T = log_probs.dim(0), U = y.size();
  Tensor out({U, T});
  std::span<double> o = out.mutable_data();
  for (std::size_t u = 0; u < U; ++u)
    for (std::size_t t = 0; t < T; ++t)
      o[u * T + t] = std::exp(log_probs.at(t, u, y[u]));
  return out;
}

Tensor rnnt_token_posteriors(Tape &tape, const Tensor &log_probs,
                             std::span<const int> frames) {
  const std::size_t T = log_probs.dim(0), U1 = log_probs.dim(1),
                    K = log_probs.dim(2), U = frames.size();
  SLU_CHECK(U + 1 == U1, "posteriors for ", U, " tokens from a lattice with ",
            U1, " prefix rows");
  if (U == 0) return Tensor({0, K - 1});
  std::vector<std::size_t> idx;
  idx.reserve(U * (K - 1));
  for (std::size_t u = 0; u < U; ++u) {
    SLU_CHECK(frames[u] >= 0 && static_cast<std::size_t>(frames[u]) < T,
              "frame ", frames[u], " outside [0, ", T, ")");
    for (std::size_t k = 1; k < K; ++k)
      idx.push_back((frames[u] * U1 + u) * K + k);
  }
  Tensor labels = tape.reshape(tape.gather(log_probs, idx), {U, K - 1});
  return tape.softmax(labels, 1);
}

// ------------------------------------------------------------------- model

RnntModel::RnntModel(const AsrConfig &cfg) : AsrModel(cfg) {
  config_.kind = AsrKind::kRnnt;
  config_.validate();
  std::mt19937_64 rng(cfg.seed);
  nn::ParamBuilder pb("rnnt", &rng, &params_);
  const std::size_t E = cfg.encoder_units,
                    K = cfg.vocab_size, D = cfg.embed_dim, P = cfg.pred_units,
                    J = cfg.joint_units;
  encoder_ = nn::StackedLstm(pb.child("encoder"), encoder_input_dim(), E, cfg.encoder_layers);
  embed_ = pb.uniform("embedding", {K, D}, 1.0 / std::sqrt(static_cast<double>(D)));
  pred_ = nn::StackedLstm(pb.child("prediction"), D, P, cfg.pred_layers);
  joint_enc_ = nn::Linear(pb.child("joint.enc"), E, J);
  joint_pred_ = nn::Linear(pb.child("joint.pred"), P, J);
  joint_out_ = nn::Linear(pb.child("joint.out"), J, K);
}

Tensor RnntModel::encode(Tape &tape, const Tensor &x) const {
  return encoder_.forward(tape, encoder_input(tape, x));
}

RnntForward RnntModel::forward_encoded(Tape &tape, const Tensor &h_e,
                                       std::span<const int> y) const {
  check_tokens(y);
  const std::size_t T = h_e.dim(0), U1 = y.size() + 1;
  const std::size_t J = joint_enc_.out_dim(), K = joint_out_.out_dim();
  std::vector<int> prefix{0};
  prefix.insert(prefix.end(), y.begin(), y.end());
  RnntForward f;
  f.h_e = h_e;
  f.h_p = pred_.forward(tape, tape.embedding(embed_, prefix));
  Tensor z = tape.outer_add(joint_enc_(tape, h_e), joint_pred_(tape, f.h_p));
  f.joint_hidden = tape.tanh(z);
  Tensor flat = joint_out_(tape, tape.reshape(f.joint_hidden, {T * U1, J}));
  f.logits = tape.reshape(flat, {T, U1, K});
  f.log_probs = tape.log_softmax(f.logits, 2);
  return f;
}

RnntForward RnntModel::forward(Tape &tape, const Tensor &x,
                               std::span<const int> y) const {
  return forward_encoded(tape, encode(tape, x), y);
}

Tensor RnntModel::mle_loss(Tape &tape, const Tensor &x,
                           std::span<const int> y) const {
  return rnnt_loss_from_log_probs(tape, forward(tape, x, y).log_probs, y);
}

void RnntModel::rescore(const Tensor &h_e, Hypothesis &h) const {
  Tape nt(false);
  const RnntForward f = forward_encoded(nt, h_e, h.tokens);
  const std::size_t T = h_e.dim(0), K = joint_out_.out_dim();
  h.log_prob = rnnt_log_likelihood(f.log_probs.data(), T, K, h.tokens);
  h.lattice_transitions = rnnt_label_transitions(f.log_probs, h.tokens);
  const std::vector<int> frames = max_transition_frames(h.lattice_transitions);
  h.token_posteriors = rnnt_token_posteriors(nt, f.log_probs, frames);
}

namespace {

struct Beam {
  std::vector<int> tokens;
  double score = 0.0;
  std::vector<nn::LstmState> state;
  Tensor pred_proj;  // 1 x J
  std::vector<int> frames;
};

bool ranks_before(double sa, const std::vector<int> &ta, double sb,
                  const std::vector<int> &tb) {
  if (sa != sb) return sa > sb;
  return ta < tb;
}

}  // namespace

NBest RnntModel::decode(const Tensor &x, const DecodeOptions &opts) const {
  SLU_CHECK(opts.beam_width >= 1, "beam_width must be >= 1, got ", opts.beam_width);
  SLU_CHECK(opts.max_len >= 0, "max_len must be >= 0");
  SLU_CHECK(opts.max_symbols_per_frame >= 0, "max_symbols_per_frame must be >= 0");
  SLU_CHECK(x.rank() == 2 && x.dim(0) > 0, "cannot decode empty audio");
  Tape nt(false);
  const Tensor h_e = encode(nt, x);
  const Tensor enc_proj = joint_enc_(nt, h_e);
  const std::size_t T = h_e.dim(0), J = joint_enc_.out_dim(),
                    K = joint_out_.out_dim();
  const std::span<const double> W = joint_out_.weight().data(),
                                bo = joint_out_.bias().data(),
                                ep = enc_proj.data();
  const std::size_t width = static_cast<std::size_t>(opts.beam_width);

  auto advance = [&](const Beam &parent, int token) {
    Beam b;
    b.tokens = parent.tokens;
    b.tokens.push_back(token);
    b.state = parent.state;
    b.frames = parent.frames;
    const int id[1] = {token};
    Tensor h = pred_.step(nt, nt.embedding(embed_, id), b.state);
    b.pred_proj = joint_pred_(nt, h);
    return b;
  };
  std::vector<double> z(J), lp(K);
  auto node_log_probs = [&](std::size_t t, const Beam &b) {
    const std::span<const double> pp = b.pred_proj.data();
    for (std::size_t j = 0; j < J; ++j) z[j] = std::tanh(ep[t * J + j] + pp[j]);
    double m = kNegInf;
    for (std::size_t k = 0; k < K; ++k) {
      double s = bo[k];
      for (std::size_t j = 0; j < J; ++j) s += z[j] * W[j * K + k];
      lp[k] = s;
      m = std::max(m, s);
    }
    double sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) sum += std::exp(lp[k] - m);
    const double lse = m + std::log(sum);
    for (double &v : lp) v -= lse;
  };

  Beam start;
  start.state = pred_.initial_state(nt);
  {
    const int id[1] = {0};
    start.pred_proj = joint_pred_(nt, pred_.step(nt, nt.embedding(embed_, id), start.state));
  }
  std::vector<Beam> active{start};
  std::map<std::vector<int>, Beam> ended;  // hypotheses that took a blank
  for (std::size_t t = 0; t < T; ++t) {
    ended.clear();
    int round = 0;
    while (!active.empty()) {
      struct Cand {
        std::size_t parent;
        int token;
        double score;
        std::vector<int> tokens;
      };
      std::vector<Cand> cands;
      const bool may_emit = round < opts.max_symbols_per_frame;
      for (std::size_t a = 0; a < active.size(); ++a) {
        const Beam &b = active[a];
        node_log_probs(t, b);
        const double blank = b.score + lp[0];
        auto it = ended.find(b.tokens);
        if (it == ended.end()) {
          Beam e = b;
          e.score = blank;
          ended.emplace(b.tokens, std::move(e));
        } else {
          if (blank > it->second.score) it->second.frames = b.frames;
          it->second.score = log_add(it->second.score, blank);
        }
        if (!may_emit || static_cast<int>(b.tokens.size()) >= opts.max_len) continue;
        for (std::size_t k = 1; k < K; ++k) {
          Cand c{a, static_cast<int>(k), b.score + lp[k], b.tokens};
          c.tokens.push_back(static_cast<int>(k));
          cands.push_back(std::move(c));
        }
      }
      // Prune the pool of ended hypotheses and label extensions jointly.
      struct Ref {
        double score;
        const std::vector<int> *tokens;
        bool is_cand;
        std::size_t index;
      };
      std::vector<Ref> pool;
      for (const auto &[toks, e] : ended) pool.push_back({e.score, &toks, false, 0});
      for (std::size_t i = 0; i < cands.size(); ++i)
        pool.push_back({cands[i].score, &cands[i].tokens, true, i});
      const std::size_t keep = std::min(width, pool.size());
      std::partial_sort(pool.begin(), pool.begin() + keep, pool.end(),
                        [](const Ref &a, const Ref &b) {
                          return ranks_before(a.score, *a.tokens, b.score, *b.tokens);
                        });
      std::map<std::vector<int>, Beam> kept_ended;
      std::vector<Beam> next;
      for (std::size_t i = 0; i < keep; ++i) {
        const Ref &r = pool[i];
        if (!r.is_cand) {
          auto node = ended.extract(*r.tokens);
          kept_ended.insert(std::move(node));
        } else {
          const Cand &c = cands[r.index];
          Beam b = advance(active[c.parent], c.token);
          b.score = c.score;
          b.frames.push_back(static_cast<int>(t));
          next.push_back(std::move(b));
        }
      }
      ended = std::move(kept_ended);
      active = std::move(next);
      ++round;
    }
    active.clear();
    for (auto &[toks, b] : ended) active.push_back(std::move(b));
  }

  NBest out;
  out.beam_width = opts.beam_width;
  for (Beam &b : active) {
    Hypothesis h;
    h.tokens = std::move(b.tokens);
    h.emission_frames = std::move(b.frames);
    rescore(h_e, h);
    out.hypotheses.push_back(std::move(h));
  }
  std::sort(out.hypotheses.begin(), out.hypotheses.end(), hypothesis_before);
  return out;
}

AsrExposure RnntModel::expose(Tape &tape, const Tensor &x,
                              const Hypothesis &h) const {
  return expose_encoded(tape, encode(tape, x), h);
}

std::vector<AsrExposure> RnntModel::expose_all(
    Tape &tape, const Tensor &x, std::span<const Hypothesis> hyps) const {
  const Tensor h_e = encode(tape, x);
  std::vector<AsrExposure> out;
  for (const Hypothesis &h : hyps) out.push_back(expose_encoded(tape, h_e, h));
  return out;
}

AsrExposure RnntModel::expose_encoded(Tape &tape, const Tensor &h_e,
                                      const Hypothesis &h) const {
  const RnntForward f = forward_encoded(tape, h_e, h.tokens);
  AsrExposure e;
  e.kind = AsrKind::kRnnt;
  e.tokens = h.tokens;
  e.h_e = f.h_e;
  e.h_p = f.h_p;
  e.joint_hidden = f.joint_hidden;
  e.log_probs = f.log_probs;
  e.embedding = embed_;
  e.frames = max_transition_frames(
      h.lattice_transitions.defined() ? h.lattice_transitions
                                      : rnnt_label_transitions(f.log_probs, h.tokens));
  e.sequence_log_prob =
      tape.scale(rnnt_loss_from_log_probs(tape, f.log_probs, h.tokens), -1.0);
  return e;
}

}  // namespace slu
