"""Regenerate the bundled synthetic paraphrase corpus (20 instances x 32 candidates).

Each instance is one underlying sentence. Candidates are drawn slot by slot
from skewed synonym distributions, so pools contain a dominant near-duplicate
mode plus a tail of paraphrases, mimicking sampled model outputs. Log
probabilities are the sum of slot log-probabilities; embeddings are sums of
per-synonym-group vectors with small per-word perturbations.

    python scripts/make_fixture.py [output_path]
"""

import hashlib
import json
import sys
from pathlib import Path

import numpy as np

SEED = 20240229
N_INSTANCES = 20
N_CANDIDATES = 32
DIM = 8
SLOT_PROBS = np.array([0.55, 0.2, 0.15, 0.1])

NOUNS = [
    ["cat", "kitten", "feline", "kitty"],
    ["dog", "puppy", "hound", "pup"],
    ["man", "guy", "fellow", "gentleman"],
    ["woman", "lady", "girl", "person"],
    ["child", "kid", "youngster", "boy"],
    ["bird", "sparrow", "pigeon", "crow"],
    ["student", "pupil", "learner", "scholar"],
    ["farmer", "grower", "rancher", "peasant"],
]
VERBS = [
    ["sat", "rested", "perched", "lounged"],
    ["walked", "strolled", "wandered", "marched"],
    ["slept", "dozed", "napped", "snoozed"],
    ["waited", "lingered", "paused", "stayed"],
    ["ran", "raced", "dashed", "sprinted"],
    ["worked", "toiled", "laboured", "labored"],
]
ADJS = [
    ["small", "little", "tiny", "young"],
    ["old", "elderly", "aged", "ancient"],
    ["tired", "sleepy", "weary", "exhausted"],
    ["happy", "cheerful", "glad", "joyful"],
    ["quiet", "silent", "calm", "peaceful"],
]
PLACES = [
    ["house", "home", "cottage", "building"],
    ["garden", "yard", "lawn", "backyard"],
    ["river", "stream", "creek", "brook"],
    ["station", "platform", "terminal", "depot"],
    ["market", "bazaar", "shop", "store"],
    ["park", "square", "plaza", "green"],
]
PREPS = [["near", "by", "beside", "next to"], ["in", "inside", "within", "at"], ["behind", "past", "beyond", "after"]]
TIMES = [
    ["yesterday", "last night", "earlier today", "this morning"],
    ["in the evening", "at dusk", "after dinner", "at night"],
    ["on monday", "last week", "on sunday", "recently"],
]


def word_vector(word: str, rng_seed: int) -> np.ndarray:
    h = int.from_bytes(hashlib.blake2b(word.encode(), digest_size=8).digest(), "little")
    return np.random.default_rng([rng_seed, h]).normal(size=DIM)


def group_vector(group: list) -> np.ndarray:
    return word_vector("|".join(group), 1)


def pick(rng, group):
    i = int(rng.choice(len(group), p=SLOT_PROBS))
    return group[i], float(np.log(SLOT_PROBS[i]))


def make_instance(rng, idx: int) -> dict:
    noun = NOUNS[rng.integers(len(NOUNS))]
    verb = VERBS[rng.integers(len(VERBS))]
    adj = ADJS[rng.integers(len(ADJS))]
    place = PLACES[rng.integers(len(PLACES))]
    prep = PREPS[rng.integers(len(PREPS))]
    time = TIMES[rng.integers(len(TIMES))]
    groups = [adj, noun, verb, prep, place, time]

    def render(words, time_first, with_adj, exclaim):
        a, n, v, p, pl, t = words
        core = f"the {a} {n} {v} {p} the {pl}" if with_adj else f"the {n} {v} {p} the {pl}"
        text = f"{t} , {core}" if time_first else f"{core} {t}"
        return text + (" !" if exclaim else " .")

    candidates = []
    for _ in range(N_CANDIDATES):
        words, logprob = [], 0.0
        emb = np.zeros(DIM)
        for g in groups:
            w, lp = pick(rng, g)
            words.append(w)
            logprob += lp
            emb += group_vector(g) + 0.35 * word_vector(w, 2)
        time_first = bool(rng.random() < 0.2)
        with_adj = bool(rng.random() < 0.8)
        exclaim = bool(rng.random() < 0.1)
        logprob += np.log(0.2 if time_first else 0.8) + np.log(0.8 if with_adj else 0.2)
        logprob += np.log(0.1 if exclaim else 0.9)
        candidates.append({
            "text": render(words, time_first, with_adj, exclaim),
            "logprob": round(float(logprob), 6),
            "embedding": [round(float(x), 6) for x in emb],
        })
    modal = [g[0] for g in groups]
    alt = [g[1] for g in groups]
    refs = [render(modal, False, True, False), render(alt, True, False, False)]
    return {
        "id": f"fx{idx:02d}",
        "source": f"synthetic instance {idx}",
        "candidates": candidates,
        "references": refs,
    }


def main(out: Path) -> None:
    rng = np.random.default_rng(SEED)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        for i in range(N_INSTANCES):
            fh.write(json.dumps(make_instance(rng, i), ensure_ascii=False) + "\n")


if __name__ == "__main__":
    default = Path(__file__).resolve().parents[1] / "src" / "divmbr" / "data" / "fixture.jsonl"
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else default)
