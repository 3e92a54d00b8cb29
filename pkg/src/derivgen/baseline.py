"""Non-neural baseline: per-character edit actions + averaged perceptron.

Training pairs are aligned with a unit-cost Levenshtein backtrace into
edit scripts (substitute / delete / insert, where substituting the current
character by itself is a copy). An averaged perceptron then learns to pick
the next action from contextual features, and decoding greedily applies
argmax actions left to right.

A terminal STOP action is used internally so the decoder can decide, once
the whole input is consumed, whether to keep inserting or finish.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

SUB, DEL, INS, STOP = "sub", "del", "ins", "stop"
# COPY is the classifier's view of SUB(current char): it generalizes the
# "keep this character" decision across contexts.
COPY = "copy"
_KIND_ORDER = {COPY: 0, SUB: 1, DEL: 2, INS: 3, STOP: 4}

# An action is a (kind, char) pair; char is "" for DEL and STOP.
Action = tuple

BOUNDARY_LEFT = "<w>"
BOUNDARY_RIGHT = "</w>"
HISTORY_PAD = "<h>"


@dataclass(frozen=True)
class EditScript:
    source: str
    actions: tuple

    def apply(self):
        """Run the actions over the source; consumes the whole input."""
        out = []
        pos = 0
        for kind, ch in self.actions:
            if kind == SUB:
                out.append(ch)
                pos += 1
            elif kind == DEL:
                pos += 1
            elif kind == INS:
                out.append(ch)
            elif kind == STOP:
                break
            else:
                raise ValueError(f"unknown action kind: {kind}")
        if pos != len(self.source):
            raise ValueError(
                f"script consumed {pos} of {len(self.source)} input characters"
            )
        return "".join(out)

    @property
    def cost(self):
        """Number of non-copy actions (unit edit cost)."""
        n = 0
        pos = 0
        for kind, ch in self.actions:
            if kind == SUB:
                n += ch != self.source[pos]
                pos += 1
            elif kind == DEL:
                n += 1
                pos += 1
            elif kind == INS:
                n += 1
        return n


def align(base, derived):
    """Minimal-cost edit script turning base into derived.

    Ties are broken preferring copy, then substitution, then deletion,
    then insertion, applied left to right over suffix distances, so
    alignments are deterministic and insertions attach as late as
    possible (a suffix lands after the copies that precede it).
    """
    if not base:
        raise ValueError("align: base must be non-empty")
    n, m = len(base), len(derived)
    # dp[i][j] = edit distance between base[i:] and derived[j:]
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        dp[i][m] = n - i
    for j in range(m + 1):
        dp[n][j] = m - j
    for i in range(n - 1, -1, -1):
        row, nxt = dp[i], dp[i + 1]
        bc = base[i]
        for j in range(m - 1, -1, -1):
            row[j] = min(nxt[j + 1] + (bc != derived[j]), nxt[j] + 1, row[j + 1] + 1)
    actions = []
    i, j = 0, 0
    while i < n or j < m:
        if i < n and j < m and base[i] == derived[j] and dp[i][j] == dp[i + 1][j + 1]:
            actions.append((SUB, derived[j]))
            i, j = i + 1, j + 1
        elif i < n and j < m and dp[i][j] == dp[i + 1][j + 1] + 1:
            actions.append((SUB, derived[j]))
            i, j = i + 1, j + 1
        elif i < n and dp[i][j] == dp[i + 1][j] + 1:
            actions.append((DEL, ""))
            i += 1
        else:
            actions.append((INS, derived[j]))
            j += 1
    return EditScript(base, tuple(actions))


def featurize(source, tag, position, history, window=3, history_len=2, inserts=0):
    """Feature strings for one decoding state.

    Covers the input window around ``position`` (with boundary sentinels),
    the most recent output characters, the tag, tag conjunctions, and the
    run length of consecutive insertions (``inserts``), which indexes into
    an affix being emitted. Deterministic; returns a tuple of distinct keys.
    """
    if not 0 <= position <= len(source):
        raise ValueError(f"position {position} out of range for source of length {len(source)}")
    current = source[position] if position < len(source) else BOUNDARY_RIGHT
    feats = [
        f"t={tag}",
        f"i={inserts}",
        f"t^i={tag}^{inserts}",
        f"i^c[0]={inserts}^{current}",
        f"t^i^c[0]={tag}^{inserts}^{current}",
    ]
    for off in range(-window, window + 1):
        idx = position + off
        if idx < 0:
            c = BOUNDARY_LEFT
        elif idx >= len(source):
            c = BOUNDARY_RIGHT
        else:
            c = source[idx]
        feats.append(f"c[{off}]={c}")
        feats.append(f"t^c[{off}]={tag}^{c}")
    recent = []
    for back in range(1, history_len + 1):
        h = history[-back] if len(history) >= back else HISTORY_PAD
        recent.append(h)
        feats.append(f"h[-{back}]={h}")
        feats.append(f"t^h[-{back}]={tag}^{h}")
        # tag + output n-gram: lets a suffix automaton be encoded directly
        feats.append(f"t^h[-1..-{back}]={tag}^{'^'.join(recent)}")
    return tuple(feats)


def _action_sort_key(action):
    return (_KIND_ORDER[action[0]], action[1])


@dataclass
class PerceptronModel:
    """Sparse multiclass averaged perceptron over (feature, action) weights."""

    window: int = 3
    history_len: int = 2
    weights: dict = field(default_factory=dict)
    totals: dict = field(default_factory=dict)
    last_update: dict = field(default_factory=dict)
    update_count: int = 0
    action_set: list = field(default_factory=list)
    averaged: dict = None
    max_consecutive_ins: int = 5

    def _score(self, table, feats, action):
        s = 0.0
        for f in feats:
            s += table.get((f, action), 0.0)
        return s

    def _predict(self, table, feats, candidates):
        best, best_score = None, None
        for a in sorted(candidates, key=_action_sort_key):
            s = self._score(table, feats, a)
            if best_score is None or s > best_score:
                best, best_score = a, s
        return best

    def _bump(self, feats, action, delta):
        tick = self.update_count
        for f in feats:
            key = (f, action)
            w = self.weights.get(key, 0.0)
            # lazy averaging: credit the old weight for the ticks it survived
            self.totals[key] = self.totals.get(key, 0.0) + w * (tick - 1 - self.last_update.get(key, 0))
            w += delta
            self.weights[key] = w
            self.totals[key] += w
            self.last_update[key] = tick

    def observe(self, feats, gold, candidates):
        """One online step; returns True when the prediction was correct.

        The averaged weights run over every decision step, mistaken or not,
        so with enough epochs the converged vector dominates the average.
        Updates fire whenever the gold action fails to beat its best rival
        by a unit margin, not just on outright losses; on separable data
        this still converges, and the extra updates push weight onto
        features that co-fire with the gold action consistently.
        """
        self.update_count += 1
        gold_score = self._score(self.weights, feats, gold)
        rival = None
        rival_score = None
        for a in sorted(candidates, key=_action_sort_key):
            if a == gold:
                continue
            s = self._score(self.weights, feats, a)
            if rival_score is None or s > rival_score:
                rival, rival_score = a, s
        if rival is None or gold_score >= rival_score + 1.0:
            return True
        self._bump(feats, gold, +1.0)
        self._bump(feats, rival, -1.0)
        return False

    def finalize(self):
        """Flush running totals and freeze the averaged weights."""
        tick = self.update_count
        averaged = {}
        for key, w in self.weights.items():
            total = self.totals.get(key, 0.0) + w * (tick - self.last_update.get(key, 0))
            self.totals[key] = total
            self.last_update[key] = tick
            if tick:
                avg = total / tick
                if avg != 0.0:
                    averaged[key] = avg
        self.averaged = averaged
        return self

    def candidates(self, position, source_len, consecutive_ins):
        """Legal actions at a state: mid-word edits, end-of-word INS/STOP."""
        out = []
        ins_ok = consecutive_ins < self.max_consecutive_ins
        for a in self.action_set:
            kind = a[0]
            if kind in (COPY, SUB, DEL):
                if position < source_len:
                    out.append(a)
            elif kind == INS:
                if ins_ok:
                    out.append(a)
            else:  # STOP only once the input is consumed
                if position == source_len:
                    out.append(a)
        return out


def _training_states(triple, window, history_len):
    """(features, gold action, position-kind) stream for one triple."""
    script = align(triple.base, triple.derived)
    states = []
    pos = 0
    history = []
    inserts = 0
    for action in script.actions:
        kind, ch = action
        if kind == SUB and ch == triple.base[pos]:
            action = (COPY, "")
        feats = featurize(triple.base, triple.tag, pos, history, window, history_len, inserts)
        states.append((feats, action, pos))
        if kind == SUB:
            history.append(ch)
            pos += 1
            inserts = 0
        elif kind == DEL:
            pos += 1
            inserts = 0
        else:
            history.append(ch)
            inserts += 1
    feats = featurize(triple.base, triple.tag, pos, history, window, history_len, inserts)
    states.append((feats, (STOP, ""), pos))
    return states


def train_perceptron(data, epochs=10, seed=0, window=3, history_len=2):
    """Averaged perceptron over gold edit actions from aligned triples.

    Examples are reshuffled each epoch with a PRNG seeded from ``seed``;
    the returned model is finalized (averaged weights frozen).
    """
    if not data:
        raise ValueError("train_perceptron: empty training data")
    if epochs < 1:
        raise ValueError("train_perceptron: epochs must be >= 1")
    model = PerceptronModel(window=window, history_len=history_len)
    prepared = [_training_states(t, window, history_len) for t in data]
    actions = set()
    for states in prepared:
        for _, a, _ in states:
            actions.add(a)
    model.action_set = sorted(actions, key=_action_sort_key)
    rng = random.Random(seed)
    order = list(range(len(prepared)))
    for _ in range(epochs):
        rng.shuffle(order)
        for idx in order:
            for feats, gold, pos in prepared[idx]:
                # candidate set mirrors decoding: positional legality only
                cands = [
                    a for a in model.action_set
                    if (a[0] in (COPY, SUB, DEL) and pos < len(data[idx].base))
                    or a[0] == INS
                    or (a[0] == STOP and pos == len(data[idx].base))
                ]
                if gold not in cands:
                    cands.append(gold)
                model.observe(feats, gold, cands)
    return model.finalize()


def decode_greedy(model, base, tag):
    """Apply argmax actions left to right until STOP or input exhausted."""
    if model.averaged is None:
        raise ValueError("decode_greedy: model not finalized")
    out = []
    pos = 0
    consecutive_ins = 0
    while True:
        cands = model.candidates(pos, len(base), consecutive_ins)
        if not cands:
            break
        feats = featurize(base, tag, pos, out, model.window, model.history_len,
                          consecutive_ins)
        action = model._predict(model.averaged, feats, cands)
        kind, ch = action
        if kind == STOP:
            break
        if kind == COPY:
            out.append(base[pos])
            pos += 1
            consecutive_ins = 0
        elif kind == SUB:
            out.append(ch)
            pos += 1
            consecutive_ins = 0
        elif kind == DEL:
            pos += 1
            consecutive_ins = 0
        else:
            out.append(ch)
            consecutive_ins += 1
        if pos > len(base):
            break
    return "".join(out)


class BaselineModel:
    """Trained baseline: one shared perceptron, or one per tag."""

    def __init__(self, models, per_tag, window=3, history_len=2, epochs=10, seed=0):
        self.models = models  # tag -> PerceptronModel; key "*" when shared
        self.per_tag = per_tag
        self.window = window
        self.history_len = history_len
        self.epochs = epochs
        self.seed = seed

    def predict(self, base, tag):
        if self.per_tag:
            model = self.models.get(tag)
            if model is None:
                return base  # unseen tag: emit the base unchanged
        else:
            model = self.models["*"]
        return decode_greedy(model, base, tag)


def train_baseline(data, epochs=10, seed=0, window=3, history_len=2, per_tag=False):
    if per_tag:
        groups = {}
        for t in data:
            groups.setdefault(t.tag, []).append(t)
        models = {
            tag: train_perceptron(groups[tag], epochs, seed, window, history_len)
            for tag in sorted(groups)
        }
    else:
        models = {"*": train_perceptron(data, epochs, seed, window, history_len)}
    return BaselineModel(models, per_tag, window, history_len, epochs, seed)


MODEL_FORMAT = "derivgen-perceptron"
MODEL_VERSION = 1


def _action_str(action):
    return f"{action[0]}:{action[1]}"


def _parse_action(s):
    kind, _, ch = s.partition(":")
    if kind not in _KIND_ORDER:
        raise ValueError(f"unknown action kind in model file: {s!r}")
    return (kind, ch)


def save_baseline(path, model):
    """Sorted, versioned text format; floats use repr so reload is bit-exact."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"{MODEL_FORMAT} v{MODEL_VERSION} per_tag={int(model.per_tag)} "
            f"window={model.window} history={model.history_len} "
            f"epochs={model.epochs} seed={model.seed}\n"
        )
        for tag in sorted(model.models):
            m = model.models[tag]
            for a in m.action_set:
                fh.write(f"!\t{tag}\t{_action_str(a)}\n")
            for (feat, action), w in sorted(m.averaged.items()):
                fh.write(f"{tag}\t{feat}\t{_action_str(action)}\t{w!r}\n")


def load_baseline(path):
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if not header or header[0] != MODEL_FORMAT or header[1] != f"v{MODEL_VERSION}":
            raise ValueError(f"{path}: not a {MODEL_FORMAT} v{MODEL_VERSION} file")
        opts = dict(kv.split("=") for kv in header[2:])
        window = int(opts["window"])
        history_len = int(opts["history"])
        models = {}

        def get(tag):
            if tag not in models:
                models[tag] = PerceptronModel(window=window, history_len=history_len, averaged={})
            return models[tag]

        for lineno, line in enumerate(fh, 2):
            parts = line.rstrip("\n").split("\t")
            if parts[0] == "!":
                get(parts[1]).action_set.append(_parse_action(parts[2]))
            elif len(parts) == 4:
                tag, feat, action, w = parts
                get(tag).averaged[(feat, _parse_action(action))] = float(w)
            else:
                raise ValueError(f"{path}:{lineno}: malformed model line")
    return BaselineModel(
        models,
        per_tag=bool(int(opts["per_tag"])),
        window=window,
        history_len=history_len,
        epochs=int(opts["epochs"]),
        seed=int(opts["seed"]),
    )
