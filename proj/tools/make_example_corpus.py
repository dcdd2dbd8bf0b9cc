#!/usr/bin/env python3
"""Writes data/example_corpus.jsonl: 200 synthetic abstracts over 2012-2015.

Themes drift over the years: a diet theme appears in 2014, a sleep theme
stops after 2013, and the liver theme separates into fibrosis and lipid
strands from 2014 on.
"""

import json
import random
import sys
from pathlib import Path

THEMES = {
    "insulin": "insulin resistance glucose tolerance insulins secretion beta cells pancreatic fasting hyperglycemia".split(),
    "cardio": "blood pressure hypertension cardiovascular risk arterial stiffness cholesterol events mortality".split(),
    "obesity": "obesity waist circumference adiposity body mass index children adolescents weight gain".split(),
    "sleep": "sleep apnea duration night shift circadian rhythm hours snoring fatigue".split(),
    "liver": "liver fatty steatosis livers hepatic fibrosis lipid triglycerides enzymes nafld".split(),
    "fibrosis": "liver fibrosis hepatic stiffness biopsy cirrhosis scarring stellate collagen staging".split(),
    "lipids": "lipid triglycerides lipoprotein cholesterol fatty acids plasma lipids particles oxidation".split(),
    "diet": "diet mediterranean intake vegetables fiber sugar beverages calories nutrition olive".split(),
}

SCHEDULE = {
    2012: ["insulin", "cardio", "obesity", "sleep", "liver"],
    2013: ["insulin", "cardio", "obesity", "sleep", "liver"],
    2014: ["insulin", "cardio", "obesity", "fibrosis", "lipids", "diet"],
    2015: ["insulin", "cardio", "obesity", "fibrosis", "lipids", "diet"],
}

GLUE = "the of and in with for among was were a to by on patients study".split()


def abstract(rng, theme):
    words = THEMES[theme]
    out = []
    for _ in range(rng.randint(45, 75)):
        out.append(rng.choice(GLUE) if rng.random() < 0.3 else rng.choice(words))
    return " ".join(out).capitalize() + "."


def main(path):
    rng = random.Random(20240611)
    docs = []
    for year, themes in SCHEDULE.items():
        for i in range(50):
            theme = themes[i % len(themes)]
            title = " ".join(rng.sample(THEMES[theme], 4)).title()
            docs.append({
                "id": f"ex-{year}-{i:03d}",
                "timestamp": f"{year}-{rng.randint(1, 12):02d}-{rng.randint(1, 28):02d}",
                "title": title,
                "body": abstract(rng, theme),
            })
    rng.shuffle(docs)
    with open(path, "w", encoding="utf-8") as f:
        for d in docs:
            f.write(json.dumps(d) + "\n")


if __name__ == "__main__":
    main(Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "data" / "example_corpus.jsonl"))
