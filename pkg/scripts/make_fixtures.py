"""Generate the bundled synthetic fixture under src/reltune/data/fixture/.

The corpus is a small job market with known structure (title family,
specialty, seniority, workplace, job type, company, location). A simulated
annotator grades (query, job) pairs from that structure with a little
seeded noise, standing in for crowd labels.

    python scripts/make_fixtures.py [--seed 7]
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "src"))

from reltune.analyzer import default_analyzer  # noqa: E402
from reltune.dataset import LocationRecord, TaggedQuery, write_locations, write_tagged_queries  # noqa: E402
from reltune.evalset import write_labels  # noqa: E402
from reltune.index import build_index, match_candidates  # noqa: E402
from reltune.metrics import JudgmentSet, write_judgments  # noqa: E402
from reltune.relevance import in_location  # noqa: E402

OUT = ROOT / "src" / "reltune" / "data" / "fixture"

# family -> (sector, title variants, specialties, duty phrases)
FAMILIES = {
    "registered nurse": ("health", ["Registered Nurse", "RN", "Staff Nurse RN"], ["icu", "pediatric", "er"],
                         ["provide patient care", "administer medications", "coordinate with physicians"]),
    "licensed practical nurse": ("health", ["Licensed Practical Nurse", "LPN"], ["pediatric", "long term care"],
                                 ["monitor patient vitals", "assist registered nurses"]),
    "certified nursing assistant": ("health", ["Certified Nursing Assistant", "CNA"], ["home health", "hospice"],
                                    ["help residents with daily living", "support nursing staff"]),
    "medical assistant": ("health", ["Medical Assistant"], ["clinic", "dermatology"],
                          ["room patients", "schedule appointments", "work alongside nurses"]),
    "software engineer": ("tech", ["Software Engineer", "SWE", "Software Developer"], ["python", "java", "frontend"],
                          ["design and build services", "review code", "ship features"]),
    "python developer": ("tech", ["Python Developer", "Python Dev"], ["django", "data"],
                         ["write python services", "build apis"]),
    "machine learning engineer": ("tech", ["Machine Learning Engineer", "ML Engineer"], ["python", "nlp"],
                                  ["train models", "deploy machine learning pipelines"]),
    "data analyst": ("tech", ["Data Analyst"], ["sql", "marketing"],
                     ["build dashboards", "analyze data with sql"]),
    "truck driver": ("logistics", ["Truck Driver", "CDL Truck Driver"], ["cdl", "local", "otr"],
                     ["haul freight", "inspect trucks", "drive regional routes"]),
    "delivery driver": ("logistics", ["Delivery Driver"], ["local", "van"],
                        ["deliver packages", "drive a company van"]),
    "warehouse associate": ("logistics", ["Warehouse Associate", "Warehouse Worker"], ["forklift", "night shift"],
                            ["pick and pack orders", "load trucks"]),
    "cashier": ("retail", ["Cashier"], ["grocery", "pharmacy"],
                ["operate the register", "greet customers"]),
    "retail sales associate": ("retail", ["Retail Sales Associate", "Sales Associate"], ["apparel", "electronics"],
                               ["help customers", "stock shelves", "operate the register"]),
    "store manager": ("retail", ["Store Manager", "Store Mgr"], ["grocery", "apparel"],
                      ["manage store staff", "own sales targets"]),
    "teacher": ("education", ["Teacher"], ["math", "science", "elementary"],
                ["teach students", "plan lessons"]),
    "substitute teacher": ("education", ["Substitute Teacher"], ["elementary", "high school"],
                           ["cover classes", "teach students when teachers are out"]),
    "customer service representative": ("service", ["Customer Service Representative", "Customer Service Rep"],
                                        ["bilingual", "billing"],
                                        ["answer customer calls", "resolve billing questions"]),
    "accountant": ("finance", ["Accountant", "Staff Accountant"], ["tax", "audit"],
                   ["prepare financial statements", "reconcile accounts"]),
}
SENIORITY = [None, None, None, "Senior", "Junior", "Lead"]
WORKPLACE = ["remote", "hybrid", "onsite", "onsite"]
JOB_TYPE = ["full time", "full time", "part time", "contract"]
COMPANIES = {
    "health": ["Acme Health", "Mercy Hospital", "Sunrise Senior Living", "Caremore Clinics"],
    "tech": ["Globex", "Initech", "Hooli", "Acme Software"],
    "logistics": ["Wayne Logistics", "Swift Freight", "Acme Shipping"],
    "retail": ["Shopwell", "Greenleaf Grocery", "Urban Outfitters Co"],
    "education": ["Maplewood Schools", "Bright Futures Academy"],
    "service": ["Callpoint", "Globex"],
    "finance": ["Ledgerly", "Acme Health"],
}
CORPUS_LOCATIONS = ["Maplewood", "Riverton", "Fairview"]


def make_job(rng: random.Random, n: int) -> dict:
    family = rng.choice(list(FAMILIES))
    sector, variants, specialties, duties = FAMILIES[family]
    seniority = rng.choice(SENIORITY)
    specialty = rng.choice(specialties) if rng.random() < 0.5 else None
    workplace = rng.choice(WORKPLACE)
    job_type = rng.choice(JOB_TYPE)
    company = rng.choice(COMPANIES[sector])
    title = rng.choice(variants)
    if specialty:
        title = f"{specialty.title()} {title}"
    if seniority:
        title = f"{'Sr' if seniority == 'Senior' and rng.random() < 0.3 else seniority} {title}"
    picked = rng.sample(duties, k=min(2, len(duties)))
    description = (f"{company} is hiring a {family} to {picked[0]}"
                   + (f" and {picked[1]}" if len(picked) > 1 else "")
                   + f". This is a {job_type} {workplace} role"
                   + (f" focused on {specialty}" if specialty else "")
                   + ". Competitive pay and benefits.")
    return {
        "id": f"job-{n:04d}",
        "title": title,
        "description": description,
        "company": company,
        "tags": [job_type, workplace],
        "location": rng.choice(CORPUS_LOCATIONS),
        "_truth": {"family": family, "sector": sector, "seniority": (seniority or "").lower() or None,
                   "specialty": specialty, "workplace": workplace, "job_type": job_type,
                   "company": company.lower()},
    }


# query text, tags, intent
QUERIES = [
    ("nurse", "B-job_title", {"sector": "health", "family": ["registered nurse", "licensed practical nurse"]}),
    ("registered nurse", "B-job_title I-job_title", {"family": ["registered nurse"]}),
    ("rn", "B-job_title", {"family": ["registered nurse"]}),
    ("lpn", "B-job_title", {"family": ["licensed practical nurse"]}),
    ("cna", "B-job_title", {"family": ["certified nursing assistant"]}),
    ("medical assistant", "B-job_title I-job_title", {"family": ["medical assistant"]}),
    ("icu nurse", "B-area_of_interest_specialty B-job_title", {"family": ["registered nurse"], "specialty": "icu"}),
    ("pediatric nurse", "B-area_of_interest_specialty B-job_title",
     {"family": ["registered nurse", "licensed practical nurse"], "specialty": "pediatric"}),
    ("remote nurse", "B-workplace B-job_title",
     {"family": ["registered nurse", "licensed practical nurse"], "workplace": "remote"}),
    ("part time cna", "B-job_type I-job_type B-job_title",
     {"family": ["certified nursing assistant"], "job_type": "part time"}),
    ("home health aide", "B-area_of_interest_specialty I-area_of_interest_specialty B-job_title",
     {"family": ["certified nursing assistant"], "specialty": "home health"}),
    ("senior registered nurse", "B-seniority B-job_title I-job_title",
     {"family": ["registered nurse"], "seniority": "senior"}),
    ("software engineer", "B-job_title I-job_title", {"family": ["software engineer"]}),
    ("swe", "B-job_title", {"family": ["software engineer"]}),
    ("senior software engineer", "B-seniority B-job_title I-job_title",
     {"family": ["software engineer"], "seniority": "senior"}),
    ("remote software engineer", "B-workplace B-job_title I-job_title",
     {"family": ["software engineer"], "workplace": "remote"}),
    ("python developer", "B-area_of_interest_specialty B-job_title",
     {"family": ["python developer", "software engineer"], "specialty": "python"}),
    ("python", "B-area_of_interest_specialty", {"family": ["python developer"], "specialty": "python"}),
    ("machine learning engineer", "B-job_title I-job_title I-job_title", {"family": ["machine learning engineer"]}),
    ("ml engineer", "B-job_title I-job_title", {"family": ["machine learning engineer"]}),
    ("data analyst", "B-job_title I-job_title", {"family": ["data analyst"]}),
    ("sql data analyst", "B-area_of_interest_specialty B-job_title I-job_title",
     {"family": ["data analyst"], "specialty": "sql"}),
    ("junior developer", "B-seniority B-job_title",
     {"family": ["software engineer", "python developer"], "seniority": "junior"}),
    ("acme software engineer", "B-company B-job_title I-job_title",
     {"family": ["software engineer"], "company": "acme software"}),
    ("globex", "B-company", {"company": "globex"}),
    ("senior remote python machine learning engineer",
     "B-seniority B-workplace B-area_of_interest_specialty B-job_title I-job_title I-job_title",
     {"family": ["machine learning engineer"], "seniority": "senior", "workplace": "remote", "specialty": "python"}),
    ("truck driver", "B-job_title I-job_title", {"family": ["truck driver"]}),
    ("cdl driver", "B-area_of_interest_specialty B-job_title", {"family": ["truck driver"], "specialty": "cdl"}),
    ("driver", "B-job_title", {"family": ["truck driver", "delivery driver"]}),
    ("delivery driver", "B-job_title I-job_title", {"family": ["delivery driver"]}),
    ("local delivery driver", "B-area_of_interest_specialty B-job_title I-job_title",
     {"family": ["delivery driver"], "specialty": "local"}),
    ("warehouse", "B-job_title", {"family": ["warehouse associate"]}),
    ("warehouse associate", "B-job_title I-job_title", {"family": ["warehouse associate"]}),
    ("forklift operator", "B-area_of_interest_specialty B-job_title",
     {"family": ["warehouse associate"], "specialty": "forklift"}),
    ("night shift warehouse", "B-other I-other B-job_title",
     {"family": ["warehouse associate"], "specialty": "night shift"}),
    ("part time warehouse", "B-job_type I-job_type B-job_title",
     {"family": ["warehouse associate"], "job_type": "part time"}),
    ("cashier", "B-job_title", {"family": ["cashier"]}),
    ("grocery cashier", "B-area_of_interest_specialty B-job_title", {"family": ["cashier"], "specialty": "grocery"}),
    ("part time cashier", "B-job_type I-job_type B-job_title", {"family": ["cashier"], "job_type": "part time"}),
    ("sales associate", "B-job_title I-job_title", {"family": ["retail sales associate"]}),
    ("retail", "B-area_of_interest_specialty", {"sector": "retail"}),
    ("store manager", "B-job_title I-job_title", {"family": ["store manager"]}),
    ("manager", "B-generic_title_implied_seniority", {"family": ["store manager"]}),
    ("assistant store manager", "B-seniority B-job_title I-job_title", {"family": ["store manager"]}),
    ("teacher", "B-job_title", {"family": ["teacher", "substitute teacher"]}),
    ("math teacher", "B-area_of_interest_specialty B-job_title", {"family": ["teacher"], "specialty": "math"}),
    ("substitute teacher", "B-job_title I-job_title", {"family": ["substitute teacher"]}),
    ("elementary teacher", "B-area_of_interest_specialty B-job_title",
     {"family": ["teacher", "substitute teacher"], "specialty": "elementary"}),
    ("customer service", "B-job_title I-job_title", {"family": ["customer service representative"]}),
    ("remote customer service", "B-workplace B-job_title I-job_title",
     {"family": ["customer service representative"], "workplace": "remote"}),
    ("bilingual customer service representative",
     "B-area_of_interest_specialty B-job_title I-job_title I-job_title",
     {"family": ["customer service representative"], "specialty": "bilingual"}),
    ("call center", "B-job_title I-job_title", {"family": ["customer service representative"]}),
    ("accountant", "B-job_title", {"family": ["accountant"]}),
    ("staff accountant", "B-seniority B-job_title", {"family": ["accountant"]}),
    ("tax accountant", "B-area_of_interest_specialty B-job_title", {"family": ["accountant"], "specialty": "tax"}),
    ("contract accountant", "B-job_type B-job_title", {"family": ["accountant"], "job_type": "contract"}),
    ("full time", "B-job_type I-job_type", {"job_type": "full time"}),
    ("part time", "B-job_type I-job_type", {"job_type": "part time"}),
    ("remote", "B-workplace", {"workplace": "remote"}),
    ("hybrid", "B-workplace", {"workplace": "hybrid"}),
]
EXCLUDE = ["full time", "part time", "remote", "hybrid"]

LOCATIONS = [
    ("Maplewood", 18_500), ("Riverton", 24_300), ("Fairview", 12_900),
    ("Lakeside", 10_000), ("Cedar Falls", 30_000), ("Oakdale", 9_999), ("Pine Ridge", 30_001),
    ("Springfield", 167_000), ("Greenville", 70_700), ("Clinton", 25_900), ("Franklin", 85_000),
    ("Salem", 175_000), ("Madison", 269_000), ("Georgetown", 11_200), ("Ashland", 21_600),
    ("Burlington", 44_700), ("Dover", 39_400), ("Milford", 28_200), ("Newport", 24_700),
    ("Manchester Center", 4_300), ("Tribeca", 15_000), ("Bristol", 59_000), ("Hudson", 6_100),
    ("Kingston", 23_800), ("Marion", 35_000), ("Oxford", 22_900), ("Jackson", 153_000),
    ("Auburn", 14_300), ("Winchester", 28_100), ("Shelbyville", 16_600), ("Remote", 0),
    ("USA", 331_000_000),
]


def grade(intent: dict, truth: dict, rng: random.Random) -> int:
    families = intent.get("family")
    if families:
        if truth["family"] in families:
            g = 4 if truth["family"] == families[0] else 3
            for key in ("specialty", "seniority", "workplace", "job_type", "company"):
                want = intent.get(key)
                if want is None:
                    continue
                if truth[key] != want:
                    g -= 1
            g = max(g, 1)
        elif truth["sector"] == FAMILIES[families[0]][0]:
            g = 1
            if intent.get("specialty") and truth["specialty"] == intent["specialty"]:
                g = 2
        else:
            g = 0
    else:
        checks = [truth.get(k) == v for k, v in intent.items() if k != "sector"]
        if "sector" in intent:
            checks.append(truth["sector"] == intent["sector"])
        g = 3 if all(checks) else (1 if any(checks) else 0)
    # annotator disagreement
    r = rng.random()
    if r < 0.05:
        g = min(4, g + 1)
    elif r < 0.10:
        g = max(0, g - 1)
    return g


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--docs", type=int, default=200)
    ap.add_argument("--sets", type=int, default=50)
    args = ap.parse_args(argv)
    rng = random.Random(args.seed)
    OUT.mkdir(parents=True, exist_ok=True)

    reposts = args.docs // 16
    jobs = [make_job(rng, n) for n in range(1, args.docs - reposts + 1)]
    # reposted jobs: same title and company, new id and location
    for n, src in enumerate(rng.sample(jobs, reposts), len(jobs) + 1):
        jobs.append(dict(src, id=f"job-{n:04d}", location=rng.choice(CORPUS_LOCATIONS)))
    with open(OUT / "corpus.jsonl", "w", encoding="utf-8") as fh:
        for job in jobs:
            fh.write(json.dumps({k: v for k, v in job.items() if k != "_truth"}) + "\n")
    truth = {job["id"]: job["_truth"] for job in jobs}

    write_tagged_queries(OUT / "queries.tsv", [TaggedQuery(q, tuple(t.split())) for q, t, _ in QUERIES])
    (OUT / "exclude.txt").write_text("\n".join(EXCLUDE) + "\n", encoding="utf-8")
    write_locations(OUT / "locations.tsv", [LocationRecord(n, p) for n, p in LOCATIONS])

    analyzer = default_analyzer()
    index = build_index(({k: v for k, v in j.items() if k != "_truth"} for j in jobs), analyzer)
    label_rng = random.Random(args.seed + 1)
    labels = {}
    for text, _, intent in QUERIES:
        for doc in sorted(match_candidates(index, text, index.fields)):
            labels[text, doc] = grade(intent, truth[doc], label_rng)
    write_labels(OUT / "labels.tsv", labels)

    pairs = []
    for text, _, _ in QUERIES:
        if text in EXCLUDE:
            continue
        for loc in CORPUS_LOCATIONS:
            docs = sorted(d for d in match_candidates(index, text, index.fields) if in_location(index, d, loc))
            graded = {d: labels[text, d] for d in docs}
            if graded and max(graded.values()) >= 3 and len(graded) >= 3:
                pairs.append(JudgmentSet(text, loc, graded))
    pick_rng = random.Random(args.seed + 2)
    chosen = sorted(pick_rng.sample(range(len(pairs)), min(args.sets, len(pairs))))
    write_judgments(OUT / "judgments.tsv", [pairs[i] for i in chosen])
    print(f"{len(jobs)} jobs, {len(QUERIES)} queries, {len(labels)} labels, "
          f"{len(chosen)} of {len(pairs)} judgment sets -> {OUT}")


if __name__ == "__main__":
    main()
