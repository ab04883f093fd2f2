#!/usr/bin/env python3
"""Generates the bundled tiny corpus (data/tiny_{train,valid,test}.txt).

The corpus is a 10-topic Markov chain over a 200-word vocabulary. Within a
topic, each word has a strongly peaked successor distribution, and the chain
occasionally jumps to a fresh topic. The result has low conditional entropy
given context (topics are identifiable from any nearby word) but a close to
uniform unigram distribution, so a context-using model has a large margin
over the unigram baseline.

Deterministic: a fixed seed reproduces the files byte for byte.
"""

import random

SEED = 20240614
TOPICS = 10
WORDS_PER_TOPIC = 20
STAY_PROB = 0.94  # probability of staying in the current topic per step
SUCCESSOR_PROBS = [0.70, 0.22, 0.08]  # peaked within-topic successor choice
TRAIN_TOKENS = 10_000
VALID_TOKENS = 1_200
TEST_TOKENS = 1_200
MIN_LINE, MAX_LINE = 8, 20


def build_vocabulary():
    themes = [
        "river", "ember", "gear", "orchard", "signal",
        "harbor", "quarry", "meadow", "circuit", "lantern",
    ]
    return [[f"{themes[t]}{i:02d}" for i in range(WORDS_PER_TOPIC)] for t in range(TOPICS)]


def build_successors(rng):
    """For each word: three in-topic successor words (peaked transition)."""
    successors = {}
    for topic in range(TOPICS):
        for word in range(WORDS_PER_TOPIC):
            others = [w for w in range(WORDS_PER_TOPIC) if w != word]
            successors[(topic, word)] = rng.sample(others, len(SUCCESSOR_PROBS))
    return successors


def generate(rng, vocab, successors, total_tokens):
    lines = []
    topic = rng.randrange(TOPICS)
    word = rng.randrange(WORDS_PER_TOPIC)
    produced = 0
    while produced < total_tokens:
        line_len = rng.randint(MIN_LINE, MAX_LINE)
        line = []
        for _ in range(line_len):
            line.append(vocab[topic][word])
            produced += 1
            if rng.random() < STAY_PROB:
                r = rng.random()
                cumulative = 0.0
                for successor, p in zip(successors[(topic, word)], SUCCESSOR_PROBS):
                    cumulative += p
                    if r < cumulative:
                        word = successor
                        break
                else:
                    word = successors[(topic, word)][0]
            else:
                topic = rng.randrange(TOPICS)
                word = rng.randrange(WORDS_PER_TOPIC)
        lines.append(" ".join(line))
    return "\n".join(lines) + "\n"


def main():
    rng = random.Random(SEED)
    vocab = build_vocabulary()
    successors = build_successors(rng)
    for name, tokens in [
        ("tiny_train.txt", TRAIN_TOKENS),
        ("tiny_valid.txt", VALID_TOKENS),
        ("tiny_test.txt", TEST_TOKENS),
    ]:
        text = generate(rng, vocab, successors, tokens)
        path = f"data/{name}"
        with open(path, "w") as f:
            f.write(text)
        print(f"wrote {path}: {len(text.split())} tokens")


if __name__ == "__main__":
    main()
