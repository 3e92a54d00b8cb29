from derivgen.baseline import align
from derivgen.corpus import filter_triples
from derivgen.synthetic import (
    ALL_TAGS,
    CONCATENATIVE_TAGS,
    derive,
    generate,
)


class TestRules:
    def test_concatenative(self):
        assert derive("bright", "ADVERB") == "brightly"
        assert derive("pay", "PATIENT") == "payee"
        assert derive("soft", "NOMINAL") == "softness"

    def test_result_stratum_by_initial(self):
        assert derive("animat", "RESULT") == "animatation"  # vowel-initial
        assert derive("manimat", "RESULT") == "manimatment"  # consonant-initial

    def test_e_deletion(self):
        assert derive("anate", "RESULT") == "anatation"
        assert derive("bate", "POTENTIAL") == "batable"
        assert derive("bate", "AGENT") == "bater"

    def test_consonant_doubling(self):
        assert derive("bun", "AGENT") == "bunner"
        assert derive("bulat", "AGENT") == "bulatter"

    def test_no_doubling_after_cluster(self):
        assert derive("bald", "AGENT") == "balder"


class TestGenerate:
    def test_deterministic_and_distinct(self):
        a = generate(200, seed=5)
        b = generate(200, seed=5)
        assert a == b
        assert len({(t.base, t.tag) for t in a}) == 200

    def test_tags_balanced(self):
        data = generate(120, seed=1)
        counts = {}
        for t in data:
            counts[t.tag] = counts.get(t.tag, 0) + 1
        assert set(counts) == set(ALL_TAGS)
        assert max(counts.values()) - min(counts.values()) == 0

    def test_survives_distance_filter(self):
        data = generate(500, seed=2)
        assert filter_triples(data) == data

    def test_alignment_round_trip(self):
        for t in generate(300, seed=3):
            assert align(t.base, t.derived).apply() == t.derived

    def test_concat_subset_is_pure_suffixation(self):
        for t in generate(300, seed=4):
            if t.tag in CONCATENATIVE_TAGS:
                assert t.derived.startswith(t.base)
