#!/usr/bin/env python3
"""Regenerate the shipped fixtures (deterministic, seed-pinned).

fixtures/pairs_separable.tsv
    40 sentence pairs whose labels correlate with token overlap by
    construction: positive pairs share 5 of 6 tokens, negative pairs are
    built from disjoint word groups.

fixtures/wordvecs_50d.txt
    50-dim seeded Gaussian word vectors covering the whole fixture
    vocabulary (standard "word v1 ... vd" text format).
"""

from __future__ import annotations

from pathlib import Path

from rwkvlab.rng import SeededRng

WORD_BANK = """
apple baker candle dragon ember forest garden harbor island jungle
kettle lantern meadow needle october pepper quarry ribbon saddle timber
umber violet walnut yonder zephyr anchor bridge copper drift echo
falcon glacier hollow ivory jasper kernel ledger marble nectar orchid
pebble quill russet sparrow thistle upland vessel willow yarrow zinnia
acorn basil cedar dahlia elder fennel ginger hazel iris juniper
almond barley cinnamon dune ermine fjord gorge heron inlet kestrel
lichen moss nutmeg osprey plume quartz reed shale tarn vale
wren yew alder birch clover dew elm fern grove heath
ivy knoll larch maple nook oak pine quince rowan spruce
thorn umbra vine wold xylem yarn zeal arbor bramble crest
dell eyrie frond glen hearth isle jetty karst loam mesa
notch outcrop prairie ravine summit tundra upwind vista wharf yield
brook cliff delta estuary flint gully horizon icicle juncture keystone
""".split()

SEED = 2024
PAIR_COUNT = 40
SENTENCE_LEN = 6


def build_pairs(rng: SeededRng) -> list[tuple[int, str, str]]:
    words = list(WORD_BANK)
    # deterministic shuffle so group membership is not alphabetical
    for i in range(len(words) - 1, 0, -1):
        j = rng.below(i + 1)
        words[i], words[j] = words[j], words[i]
    groups = [words[i : i + SENTENCE_LEN + 1] for i in range(0, len(words), SENTENCE_LEN + 1)]
    groups = [g for g in groups if len(g) == SENTENCE_LEN + 1]
    pairs = []
    half = PAIR_COUNT // 2
    for i in range(half):  # positives: swap one word inside the group
        group = groups[i % len(groups)]
        base = group[:SENTENCE_LEN]
        swapped = list(base)
        swapped[rng.below(SENTENCE_LEN)] = group[SENTENCE_LEN]
        pairs.append((1, " ".join(base), " ".join(swapped)))
    for i in range(half):  # negatives: two disjoint groups
        g1 = groups[i % len(groups)]
        g2 = groups[(i + 7) % len(groups)]
        pairs.append((0, " ".join(g1[:SENTENCE_LEN]), " ".join(g2[:SENTENCE_LEN])))
    # deterministic interleave so labels are not sorted
    order = list(range(PAIR_COUNT))
    for i in range(len(order) - 1, 0, -1):
        j = rng.below(i + 1)
        order[i], order[j] = order[j], order[i]
    return [pairs[i] for i in order]


def main() -> None:
    root = Path(__file__).resolve().parent.parent
    fixtures = root / "fixtures"
    fixtures.mkdir(exist_ok=True)

    rng = SeededRng(SEED)
    pairs = build_pairs(rng)
    lines = ["label\tsentence1\tsentence2"]
    lines += [f"{label}\t{s1}\t{s2}" for label, s1, s2 in pairs]
    (fixtures / "pairs_separable.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    vec_rng = SeededRng(SEED + 1)
    vec_lines = []
    for word in WORD_BANK:
        vec = vec_rng.normal_array(50)
        vec_lines.append(word + " " + " ".join(f"{x:.6f}" for x in vec))
    (fixtures / "wordvecs_50d.txt").write_text("\n".join(vec_lines) + "\n", encoding="utf-8")
    print(f"wrote {PAIR_COUNT} pairs and {len(WORD_BANK)} word vectors")


if __name__ == "__main__":
    main()
