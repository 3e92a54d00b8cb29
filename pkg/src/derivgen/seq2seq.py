"""Attentional encoder-decoder over characters plus a derivation tag.

Bidirectional GRU encoder, single-layer GRU decoder with additive
attention, tanh output MLP, trained by teacher-forced negative
log-likelihood under Adadelta. Generation is beam search returning a
k-best list of hypotheses.
"""

from __future__ import annotations

import copy
import json
import random
from dataclasses import dataclass, field

import numpy as np

from . import numeric as nm
from .corpus import Vocab
from .metrics import accuracy as _accuracy, avg_edit_distance as _avg_edit


@dataclass
class Seq2SeqConfig:
    emb: int = 300
    hidden: int = 100
    batch: int = 20
    epochs: int = 300
    beam: int = 12
    rho: float = 0.95
    eps: float = 1e-6
    clip: float | None = None
    seed: int = 0
    init_scale: float = 0.08
    max_extra: int = 10  # inference length cap: len(source) + max_extra
    stop_at_dev_acc: float | None = None

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__dataclass_fields__}

    @classmethod
    def from_dict(cls, d):
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        return cls(**known)


def _gru_params(prefix, in_size, hidden, rng, scale):
    p = {}
    for gate in ("z", "r", "h"):
        p[f"{prefix}_W{gate}"] = nm.uniform_init((hidden, in_size), rng, scale)
        p[f"{prefix}_U{gate}"] = nm.uniform_init((hidden, hidden), rng, scale)
        p[f"{prefix}_b{gate}"] = nm.zeros_init((hidden,))
    return p


class Seq2SeqParams:
    """All learned tensors, addressable by name for checkpoints and Adadelta."""

    def __init__(self, vocab_size, config, rng=None):
        self.vocab_size = vocab_size
        self.config = config
        if rng is None:
            rng = np.random.default_rng(config.seed)
        e, h = config.emb, config.hidden
        s = config.init_scale
        p = {
            "src_emb": nm.uniform_init((vocab_size, e), rng, s),
            "tgt_emb": nm.uniform_init((vocab_size, e), rng, s),
            "att_W": nm.uniform_init((h, h), rng, s),
            "att_U": nm.uniform_init((h, 2 * h), rng, s),
            "att_v": nm.uniform_init((h,), rng, s),
            "init_W": nm.uniform_init((h, h), rng, s),
            "init_b": nm.zeros_init((h,)),
            "out_W1": nm.uniform_init((h, e + h + 2 * h), rng, s),
            "out_b1": nm.zeros_init((h,)),
            "out_W2": nm.uniform_init((vocab_size, h), rng, s),
            "out_b2": nm.zeros_init((vocab_size,)),
        }
        p.update(_gru_params("enc_f", e, h, rng, s))
        p.update(_gru_params("enc_b", e, h, rng, s))
        p.update(_gru_params("dec", e + 2 * h, h, rng, s))
        self.tensors = p

    def __getitem__(self, name):
        return self.tensors[name]

    def clear_grads(self):
        for t in self.tensors.values():
            t.clear_grad()

    def snapshot(self):
        return {name: t.values.copy() for name, t in self.tensors.items()}

    def restore(self, snap):
        for name, values in snap.items():
            self.tensors[name].values[...] = values


def gru_step(params, prefix, x, h):
    """Standard GRU cell: h' = (1 - z) * h + z * h_tilde."""
    z = nm.sigmoid(nm.add(nm.add(nm.matmul(params[f"{prefix}_Wz"], x),
                                 nm.matmul(params[f"{prefix}_Uz"], h)),
                          params[f"{prefix}_bz"]))
    r = nm.sigmoid(nm.add(nm.add(nm.matmul(params[f"{prefix}_Wr"], x),
                                 nm.matmul(params[f"{prefix}_Ur"], h)),
                          params[f"{prefix}_br"]))
    h_tilde = nm.tanh(nm.add(nm.add(nm.matmul(params[f"{prefix}_Wh"], x),
                                    nm.matmul(params[f"{prefix}_Uh"], nm.mul(r, h))),
                             params[f"{prefix}_bh"]))
    one = nm.constant(np.ones_like(z.values))
    return nm.add(nm.mul(nm.sub(one, z), h), nm.mul(z, h_tilde))


@dataclass
class EncodedSource:
    hidden: object          # Tensor (n, 2*hidden): concatenated [fwd; bwd] states
    annot_proj: object      # Tensor (n, hidden): attention key projection U @ h_i
    init_state: object      # Tensor (hidden,): decoder start state
    source_length: int
    forward_states: list = field(default_factory=list)
    backward_states: list = field(default_factory=list)


def encode(source_ids, params):
    """Run both encoder directions and precompute attention projections."""
    if not len(source_ids):
        raise ValueError("encode: empty source sequence")
    for i in source_ids:
        if not 0 <= int(i) < params.vocab_size:
            raise ValueError(f"encode: id {i} out of vocabulary range [0, {params.vocab_size})")
    h = params.config.hidden
    embs = [nm.row(params["src_emb"], i) for i in source_ids]
    fwd = []
    state = nm.constant(np.zeros(h))
    for x in embs:
        state = gru_step(params, "enc_f", x, state)
        fwd.append(state)
    bwd_rev = []
    state = nm.constant(np.zeros(h))
    for x in reversed(embs):
        state = gru_step(params, "enc_b", x, state)
        bwd_rev.append(state)
    bwd = list(reversed(bwd_rev))
    hidden = nm.stack([nm.concat([f, b]) for f, b in zip(fwd, bwd)])
    annot_proj = nm.matmul(hidden, _transpose(params["att_U"]))
    init_state = nm.tanh(nm.add(nm.matmul(params["init_W"], bwd[0]), params["init_b"]))
    return EncodedSource(hidden, annot_proj, init_state, len(source_ids), fwd, bwd)


def _transpose(t):
    return nm.Tensor(t.values.T, parents=(t,), backward=lambda g: (g.T,))


def attend(decoder_state_prev, enc, params):
    """Additive attention: weights over source positions and their context sum."""
    ws = nm.matmul(params["att_W"], decoder_state_prev)
    scores = nm.matmul(nm.tanh(nm.add(enc.annot_proj, ws)), params["att_v"])
    weights = nm.softmax(scores)
    context = nm.matmul(weights, enc.hidden)
    return context, weights


def decode_step(prev_token, state, enc, params):
    """One decoder step: attention, GRU update, log-distribution over outputs."""
    emb = nm.row(params["tgt_emb"], prev_token)
    context, weights = attend(state, enc, params)
    next_state = gru_step(params, "dec", nm.concat([emb, context]), state)
    mlp = nm.tanh(nm.add(nm.matmul(params["out_W1"], nm.concat([emb, next_state, context])),
                         params["out_b1"]))
    logits = nm.add(nm.matmul(params["out_W2"], mlp), params["out_b2"])
    return next_state, nm.log_softmax(logits), weights


def sequence_loss(triple, params, vocab):
    """Teacher-forced negative log-likelihood of the derived form plus EOS."""
    source_ids = vocab.encode_source(triple.base, triple.tag)
    target_ids = vocab.encode_target(triple.derived)
    enc = encode(source_ids, params)
    state = enc.init_state
    prev = vocab.bos_id
    loss = None
    for y in target_ids:
        state, log_dist, _ = decode_step(prev, state, enc, params)
        term = nm.scale(nm.pick(log_dist, y), -1.0)
        loss = term if loss is None else nm.add(loss, term)
        prev = y
    return loss


@dataclass
class Hypothesis:
    tokens: tuple          # output ids, ending in EOS iff it terminated
    log_prob: float
    decoder_state: np.ndarray

    def text(self, vocab):
        return vocab.decode_output(self.tokens)


def beam_search(source_ids, params, vocab, beam=12, k=1, max_len=None):
    """k-best decoding; hypotheses end at EOS or at the length cap.

    The returned list is sorted by descending log-probability, ties broken
    by shorter token sequence then lexicographic ids; no duplicates.
    """
    if not (beam >= k >= 1):
        raise ValueError(f"need beam >= k >= 1, got beam={beam}, k={k}")
    if max_len is None:
        max_len = len(source_ids) + params.config.max_extra
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    enc = encode(source_ids, params)
    eos = vocab.eos_id
    live = [(0.0, (), enc.init_state, vocab.bos_id)]
    done = []
    for _ in range(max_len):
        if not live:
            break
        expansions = []
        for logp, tokens, state, prev in live:
            new_state, log_dist, _ = decode_step(prev, state, enc, params)
            lp = log_dist.values
            for tok in range(len(lp)):
                expansions.append((logp + float(lp[tok]), tokens + (tok,), new_state, tok))
        expansions.sort(key=lambda h: (-h[0], len(h[1]), h[1]))
        live = []
        for cand in expansions:
            if cand[3] == eos:
                done.append(cand)
            else:
                live.append(cand)
            if len(live) >= beam:
                break
    done.extend(live)  # length-capped hypotheses compete with finished ones
    seen = set()
    hyps = []
    for logp, tokens, state, _ in sorted(done, key=lambda h: (-h[0], len(h[1]), h[1])):
        if tokens in seen:
            continue
        seen.add(tokens)
        hyps.append(Hypothesis(tokens, logp, state.values.copy()))
        if len(hyps) == k:
            break
    return hyps


def greedy_decode(source_ids, params, vocab, max_len=None):
    return beam_search(source_ids, params, vocab, beam=1, k=1, max_len=max_len)[0]


def predict_kbest(params, vocab, base, tag, beam=12, k=1):
    """Ranked surface-form predictions for one (base, tag) query."""
    source_ids = vocab.encode_source(base, tag)
    hyps = beam_search(source_ids, params, vocab, beam=max(beam, k), k=k)
    return [(h.text(vocab), h.log_prob) for h in hyps]


def _dev_scores(params, vocab, dev):
    preds = [greedy_decode(vocab.encode_source(t.base, t.tag), params, vocab).text(vocab)
             for t in dev]
    gold = [t.derived for t in dev]
    return _accuracy(preds, gold), _avg_edit(preds, gold)


def train(split, vocab, config, log=None):
    """Adadelta training with per-epoch dev selection.

    Gradients are accumulated per minibatch (mean loss over the batch);
    the checkpoint with the best dev accuracy is returned, ties broken by
    lower dev edit distance then earlier epoch. Deterministic given the
    config seed.
    """
    if not split.train:
        raise ValueError("train: empty training split")
    lines = []

    def emit(msg):
        lines.append(msg)
        if log is not None:
            log(msg)

    params = Seq2SeqParams(len(vocab), config)
    state = nm.AdadeltaState(params.tensors, rho=config.rho, eps=config.eps)
    order_rng = random.Random(config.seed)
    emit(
        f"model=seq2seq emb={config.emb} hidden={config.hidden} batch={config.batch} "
        f"epochs={config.epochs} beam={config.beam} rho={config.rho} eps={config.eps} "
        f"seed={config.seed}"
    )
    best = None  # (acc, -edit, -epoch, snapshot)
    train_data = list(split.train)
    for epoch in range(1, config.epochs + 1):
        order_rng.shuffle(train_data)
        total_loss = 0.0
        for start in range(0, len(train_data), config.batch):
            batch = train_data[start:start + config.batch]
            for t in batch:
                loss = sequence_loss(t, params, vocab)
                total_loss += float(loss.values)
                nm.backward(nm.scale(loss, 1.0 / len(batch)))
            nm.adadelta_step(params.tensors, state, clip_norm=config.clip)
        dev_acc, dev_edit = _dev_scores(params, vocab, split.dev) if split.dev else (0.0, 0.0)
        emit(
            f"epoch={epoch} loss={total_loss / len(train_data):.6f} "
            f"dev_acc={dev_acc:.4f} dev_edit={dev_edit:.4f}"
        )
        # without a dev set there is nothing to select on: keep the last epoch
        key = (dev_acc, -dev_edit, -epoch) if split.dev else (0.0, 0.0, epoch)
        if best is None or key > best[0]:
            best = (key, params.snapshot(), epoch)
        if config.stop_at_dev_acc is not None and dev_acc >= config.stop_at_dev_acc:
            emit(f"early_stop=1 epoch={epoch} dev_acc={dev_acc:.4f}")
            break
    params.restore(best[1])
    meta = {
        "best_epoch": best[2],
        "best_dev_accuracy": best[0][0],
        "best_dev_edit": -best[0][1],
    }
    emit(f"best_epoch={meta['best_epoch']} best_dev_acc={meta['best_dev_accuracy']:.4f}")
    return params, meta, lines


def save_model(path, params, vocab, meta=None):
    """Checkpoint container plus a JSON sidecar with vocab/config/metrics."""
    nm.save_params(path, params.tensors, meta={"kind": "seq2seq"})
    sidecar = {
        "vocab": vocab.to_dict(),
        "config": params.config.to_dict(),
        "metrics": meta or {},
    }
    with open(path + ".meta.json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path):
    tensors, _ = nm.load_params(path)
    with open(path + ".meta.json", "r", encoding="utf-8") as fh:
        sidecar = json.load(fh)
    vocab = Vocab.from_dict(sidecar["vocab"])
    config = Seq2SeqConfig.from_dict(sidecar["config"])
    params = Seq2SeqParams.__new__(Seq2SeqParams)
    params.vocab_size = len(vocab)
    params.config = config
    params.tensors = tensors
    return params, vocab, sidecar.get("metrics", {})
