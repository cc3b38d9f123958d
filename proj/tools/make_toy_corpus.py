#!/usr/bin/env python3
"""Writes the bundled synthetic review corpus (data/toy/reviews.jsonl).

Each item has a product noun and a few attribute nouns. Review wording
depends on the star rating, so ratings are recoverable from text.
"""
import argparse
import json
import random

PRODUCTS = ["dress", "shirt", "jacket", "sweater", "skirt", "jeans", "shoes", "boots",
            "sandals", "sneakers", "hat", "scarf", "belt", "bag", "watch", "necklace",
            "bracelet", "backpack", "hoodie", "coat", "leggings", "vest", "cardigan",
            "blouse", "socks"]
ATTRIBUTES = ["fabric", "color", "size", "zipper", "stitching", "material", "strap",
              "sole", "collar", "sleeve", "pocket", "lining", "waistband", "buckle",
              "design", "pattern", "price", "quality"]
COLORS = ["black", "white", "red", "blue", "green", "pink", "brown", "gray", "navy"]

TEMPLATES = {
    5: ["excellent {p} , the {a} is perfect and i love it .",
        "i love this {c} {p} . excellent {a} and great quality .",
        "perfect {p} ! the {a} is excellent , highly recommend .",
        "amazing {p} , excellent {a} , fits perfect ."],
    4: ["good {p} , the {a} is nice overall .",
        "nice {c} {p} . good {a} for the price .",
        "pretty good {p} , the {a} is fine ."],
    3: ["okay {p} , the {a} is average .",
        "the {c} {p} is okay but the {a} is so so .",
        "average {p} . decent {a} ."],
    2: ["poor {p} , the {a} is disappointing .",
        "the {a} on this {c} {p} is poor .",
        "disappointing {p} , the {a} feels cheap ."],
    1: ["terrible {p} , the {a} is awful and i returned it .",
        "awful {c} {p} . terrible {a} , returned .",
        "terrible quality {p} . the {a} broke , awful .",
        "horrible {p} , terrible {a} , do not buy ."],
}


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--items", type=int, default=50)
    parser.add_argument("--reviews", type=int, default=24)
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--out", default="data/toy/reviews.jsonl")
    args = parser.parse_args()

    rng = random.Random(args.seed)
    with open(args.out, "w") as f:
        for i in range(args.items):
            asin = "B%08d" % (1000 + i)
            product = PRODUCTS[i % len(PRODUCTS)]
            attrs = rng.sample(ATTRIBUTES, 3)
            color = rng.choice(COLORS)
            for k in range(args.reviews):
                stars = 1 + (k + i) % 5
                text = rng.choice(TEMPLATES[stars]).format(
                    p=product, a=rng.choice(attrs), c=color)
                record = {"asin": asin, "overall": float(stars), "reviewText": text}
                f.write(json.dumps(record, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
