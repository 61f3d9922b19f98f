#!/usr/bin/env python3
"""Regenerates the bundled fixtures. Output is deterministic; rerunning
overwrites the files under fixtures/ and config/ with identical bytes."""

import csv
import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIX = ROOT / "fixtures"
CONFIG = ROOT / "config"

SUBJECTS = [
    "abortion", "affirmative action", "animal testing", "assisted suicide", "automation",
    "bail", "biofuels", "border security", "campaign finance", "capital punishment",
    "carbon taxes", "charter schools", "child care", "civil asset forfeiture", "climate policy",
    "college tuition", "community policing", "congressional term limits", "consumer debt",
    "cryptocurrency", "data privacy", "drug pricing", "early voting", "e-cigarettes",
    "electoral college", "eminent domain", "energy subsidies", "factory farming", "farm subsidies",
    "federal deficit", "food stamps", "foreign aid", "fracking", "free speech on campus",
    "gambling", "gene editing", "genetically modified food", "gig work", "gun control",
    "hate speech", "health insurance", "homeschooling", "housing", "immigration",
    "income inequality", "infrastructure", "juvenile justice", "labor unions", "lobbying",
    "mandatory vaccination", "marijuana", "mass surveillance", "medicare", "mental health care",
    "military spending", "minimum wage", "net neutrality", "nuclear power", "obesity",
    "offshore drilling", "online gaming", "opioids", "organ donation", "paid family leave",
    "plastic waste", "police body cameras", "prayer in schools", "prison labor", "private prisons",
    "public transit", "racial profiling", "refugees", "renewable energy", "rent control",
    "school choice", "school lunches", "social media", "social security", "sports betting",
    "standardized testing", "student loans", "sugar taxes", "tariffs", "tax cuts",
    "teacher pay", "tobacco", "trade agreements", "universal basic income", "vaping",
    "voter id", "water rights", "wealth taxes", "welfare", "wildlife protection", "zoning",
]
ASPECTS = ["", " regulation", " funding", " reform", " bans"]


def keywords():
    out = []
    for aspect in ASPECTS:
        for s in SUBJECTS:
            out.append((s + aspect).strip())
    assert len(out) == 475, len(out)
    return out


def write_csv(path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def yn(b):
    return "yes" if b else "no"


def topics_fixture():
    rng = random.Random(4101)
    kws = keywords()
    ids = [f"t{i:03d}" for i in range(1, len(kws) + 1)]
    write_csv(FIX / "topics" / "topics.csv", ["topic_id", "text"], list(zip(ids, kws)))

    order = list(range(len(ids)))
    rng.shuffle(order)
    retained = set(order[:146])
    # rejected topics: one or both annotators said no
    rejected_patterns = [(True, False), (False, True), (False, False)]
    votes = []
    for i, tid in enumerate(ids):
        if i in retained:
            pair = (True, True)
        else:
            pair = rejected_patterns[rng.randrange(3)]
        votes.append((tid, "ann1", yn(pair[0])))
        votes.append((tid, "ann2", yn(pair[1])))
        # an occasional third opinion exists but never overrides the first two
        if i % 37 == 0:
            votes.append((tid, "ann3", yn(not pair[0])))
    write_csv(FIX / "topics" / "controversy_votes.csv", ["topic_id", "annotator_id", "vote"], votes)

    kept = sorted(retained)
    rng.shuffle(kept)
    # 110 unanimous political, 20 unanimous non-political,
    # 11 split resolved political, 5 split resolved non-political
    plan = ["pp"] * 110 + ["nn"] * 20 + ["tp"] * 11 + ["tn"] * 5
    assert len(plan) == 146
    pvotes = []
    for i, kind in sorted(zip(kept, plan)):
        tid = ids[i]
        if kind == "pp":
            pvotes += [(tid, "ann1", "yes"), (tid, "ann2", "yes")]
        elif kind == "nn":
            pvotes += [(tid, "ann1", "no"), (tid, "ann2", "no")]
        else:
            first = rng.random() < 0.5
            pvotes += [(tid, "ann1", yn(first)), (tid, "ann2", yn(not first)),
                       (tid, "ann3", yn(kind == "tp"))]
    write_csv(FIX / "topics" / "political_votes.csv", ["topic_id", "annotator_id", "vote"], pvotes)


def human_scores_fixture():
    """Six raters, 60 items, each item rated by three or four raters. A
    rater's rating is the item's latent level plus small noise, so coarser
    schemes agree more often."""
    rng = random.Random(5202)
    strategies = ["causal", "empirical", "emotional", "moral"]
    raters = [f"r{i}" for i in range(1, 7)]
    rows = []
    for item in range(1, 61):
        k = 3 if item % 3 else 4
        start = item % len(raters)
        chosen = [raters[(start + j) % len(raters)] for j in range(k)]
        for s in strategies:
            latent = rng.choice([1, 1, 2, 4, 5, 5])
            for r in chosen:
                noise = rng.choice([-1, 0, 0, 0, 1])
                v = min(5, max(1, latent + noise))
                rows.append((f"h{item:03d}", r, s, v))
    write_csv(FIX / "human_scores.csv", ["item_id", "rater_id", "strategy", "likert"], rows)


def transcript_fixture():
    turns = [
        (1960, "1960-1", "MODERATOR", "Moderator", "Good evening. Tonight the candidates will discuss domestic policy."),
        (1960, "1960-1", "KENNEDY", "Democrat", "This is a great country, but I think it could be a greater country."),
        (1960, "1960-1", "NIXON", "Republican", "I agree with much of that."),
        (1960, "1960-1", "NIXON", "Republican", "Our economy has grown because we trusted free enterprise and kept spending under control."),
        (1960, "1960-1", "MODERATOR", "Moderator", "Thank you."),
        (1960, "1960-1", "KENNEDY", "Democrat", "Yes."),
        (1960, "1960-1", "KENNEDY", "Democrat", "If we fail to act, our children will inherit a weaker nation and fewer opportunities."),
        (1960, "1960-1", "AUDIENCE", "Other", "Applause from the audience lasting several seconds."),
        (1976, "1976-2", "MODERATOR", "Moderator", "The next question concerns energy and the economy."),
        (1976, "1976-2", "CARTER", "Democrat", "Unemployment has risen to nearly eight percent according to the Labor Department."),
        (1976, "1976-2", "FORD", "Republican", "That simply is not accurate."),
        (1976, "1976-2", "FORD", "Republican", "We have a moral obligation to balance the budget for the next generation."),
        (1976, "1976-2", "CARTER", "Democrat", "Well, I disagree completely, Mr. President."),
        (1976, "1976-2", "FORD", "Republican", "No."),
        (2016, "2016-3", "MODERATOR", "Moderator", "Each candidate has two minutes to respond."),
        (2016, "2016-3", "CLINTON", "Democrat", "Families are hurting, and I have met parents who cannot afford their children's medicine."),
        (2016, "2016-3", "TRUMP", "Republican", "Wrong."),
        (2016, "2016-3", "TRUMP", "Republican", "Our jobs have been stolen by bad trade deals, and it is a disgrace."),
        (2016, "2016-3", "CLINTON", "Democrat", "Let me   respond to   that."),
        (2016, "2016-3", "CLINTON", "Democrat", "  Independent studies show the plan would add trillions to the national debt.  "),
    ]
    assert len(turns) == 20
    write_csv(FIX / "transcripts" / "sample.csv", ["year", "debate_id", "speaker", "party", "text"], turns)
    golden = []
    for year, debate, speaker, party, text in turns:
        words = text.split()
        if party in ("Democrat", "Republican") and len(words) >= 5:
            golden.append({"year": year, "debate_id": debate, "speaker": speaker, "party": party,
                           "text": text.strip(), "word_count": len(words)})
    with open(FIX / "transcripts" / "golden_arguments.json", "w") as f:
        json.dump(golden, f, indent=2)
        f.write("\n")


def normalize(d):
    total = sum(d.values())
    keys = list(d)
    out = {k: round(d[k] / total, 6) for k in keys}
    out[keys[-1]] = round(1.0 - sum(out[k] for k in keys[:-1]), 6)
    return out


EDUCATION = ["Less than High School", "High School Graduate", "Some College but No Degree",
             "Associate Degree", "Bachelor's Degree", "Master's Degree", "Professional Degree",
             "Doctoral Degree"]


def education_row(lower, gender):
    if lower == 15:
        w = [70, 24, 6, 0, 0, 0, 0, 0]
    elif lower == 20:
        w = [10, 30, 38, 9, 12, 1, 0, 0]
    else:
        w = [9, 27, 16, 10, 23, 10, 1.5, 1.3]
        if lower >= 65:
            w = [13, 32, 15, 8, 18, 9, 1.8, 1.4]
        if lower >= 80:
            w = [20, 35, 13, 6, 15, 8, 1.6, 1.2]
        if gender == "Female" and lower < 65:
            w[4] += 2.5
            w[5] += 1.5
            w[1] -= 2.0
    return normalize(dict(zip(EDUCATION, w)))


def demographics_config():
    ages = [15, 20, 25, 30, 35, 40, 45, 50, 55, 60, 65, 70, 75, 80, 85]
    age_weights = [7.85, 7.90, 8.15, 8.55, 8.25, 7.90, 7.45, 7.55, 7.90, 7.90, 6.80, 5.60, 3.90, 2.45, 1.50]
    leaning = {
        "Less than High School": [38, 30, 32],
        "High School Graduate": [33, 40, 27],
        "Some College but No Degree": [35, 38, 27],
        "Associate Degree": [36, 37, 27],
        "Bachelor's Degree": [45, 31, 24],
        "Master's Degree": [55, 27, 18],
        "Professional Degree": [54, 29, 17],
        "Doctoral Degree": [58, 24, 18],
    }
    tables = {
        "notes": "Approximate US adult marginals (Census population estimates by age, sex and single race; "
                 "educational attainment by age and sex; party identification by education from public "
                 "survey reports), rounded and renormalized over the categories modelled here.",
        "gender": normalize({"Male": 49.3, "Female": 50.7}),
        "age_group": normalize({f"{a}-{a + 4}": w for a, w in zip(ages, age_weights)}),
        "race": normalize({"White": 75.5, "Black": 13.7, "Asian": 6.4, "AIAN": 1.3, "NHPI": 0.3}),
        "education": [
            {"age_group": f"{a}-{a + 4}", "gender": g, "probs": education_row(a, g)}
            for a in ages for g in ["Male", "Female"]
        ],
        "leaning": {e: normalize(dict(zip(["Democrat", "Republican", "Independent"], w)))
                    for e, w in leaning.items()},
    }
    CONFIG.mkdir(parents=True, exist_ok=True)
    with open(CONFIG / "demographics.json", "w") as f:
        json.dump(tables, f, indent=2)
        f.write("\n")


def mock_script():
    with open(FIX / "mock_script.json", "w") as f:
        json.dump({"synthesize": True}, f, indent=2)
        f.write("\n")


def external_fixture():
    rng = random.Random(6303)
    labels = [("debates", "Slippery Slope", 1), ("debates", "Appeal to Emotion", 3),
              ("charity", "Personal Story", 3), ("charity", "Credibility", 2),
              ("moral-emotions", "Moral Emotion", 4)]
    rows = []
    for dataset, label, idx in labels:
        for positive in (1, 0):
            for _ in range(12):
                s = [round(rng.uniform(0.1, 0.5), 4) for _ in range(4)]
                if positive:
                    s[idx - 1] = round(min(1.0, s[idx - 1] + rng.uniform(0.2, 0.45)), 4)
                rows.append((dataset, label, positive, *s))
    write_csv(FIX / "external_validity.csv",
              ["dataset", "label", "positive", "causal", "empirical", "emotional", "moral"], rows)


if __name__ == "__main__":
    topics_fixture()
    human_scores_fixture()
    transcript_fixture()
    demographics_config()
    mock_script()
    external_fixture()
