"""Walk the data pipeline: triples -> filter -> split -> vocabulary.

Uses the built-in synthetic grammar so the demo is self-contained.
"""

from derivgen.corpus import build_vocab, filter_triples, split_dataset
from derivgen.synthetic import generate

data = generate(600, seed=0)
print(f"generated {len(data)} triples; first three:")
for t in data[:3]:
    print(f"  {t.base}\t{t.tag}\t{t.derived}")

# The filter drops pairs whose edit distance is more than half the
# combined length -- likely mis-annotations in a scraped corpus.
kept = filter_triples(data)
print(f"\nfilter kept {len(kept)}/{len(data)} (synthetic data is clean)")

split = split_dataset(kept, seed=0)
print(f"split: train={len(split.train)} dev={len(split.dev)} test={len(split.test)}")

vocab = build_vocab(split.train)
print(f"\nvocabulary: {len(vocab)} symbols "
      f"({len(vocab.chars)} chars, {len(vocab.tags)} tags, 4 reserved)")

t = split.train[0]
ids = vocab.encode_source(t.base, t.tag)
print(f"source encoding of ({t.base}, {t.tag}): {ids}")
print(f"target encoding of {t.derived}: {vocab.encode_target(t.derived)}")
