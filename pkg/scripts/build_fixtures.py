"""Regenerate the bundled benchmark cases and the Nexora retrieval scenario.

Writes into ``src/breaklens/data``:

* ``benchmarks/<case>/data.csv`` and ``meta.json`` for the seven cases.
  The Nile series is the public annual flow record (copied from the
  statsmodels distribution). The others are reconstructions: published
  annual figures where they are well known (Ireland, Japan) and otherwise
  seeded synthetic replicas calibrated to the documented level, seasonality
  and size of the event. Each ``meta.json`` says which.
* ``nexora/mau.csv``: synthetic monthly active users, 175k stepping to
  210k in July 2022, 2% multiplicative noise.
* ``nexora/corpus/*.txt``: the launch memo plus 30 unrelated documents.

Run from the repository root: ``python scripts/build_fixtures.py``.
The output is deterministic.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import shutil
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "src" / "breaklens" / "data"


def months(start: tuple[int, int], n: int) -> list[str]:
    y, m = start
    out = []
    for _ in range(n):
        out.append(f"{y:04d}-{m:02d}-01")
        m += 1
        if m == 13:
            y, m = y + 1, 1
    return out


def write_case(name, stamps, values, gt_index, gt_date, event, source, description, decimals=3):
    d = DATA / "benchmarks" / name
    d.mkdir(parents=True, exist_ok=True)
    with open(d / "data.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "value"])
        for s, v in zip(stamps, values):
            w.writerow([s, f"{v:.{decimals}f}"])
    meta = {
        "name": name,
        "n": len(values),
        "ground_truth_index": gt_index,
        "ground_truth_date": gt_date,
        "event": event,
        "description": description,
        "source": source,
    }
    assert str(stamps[gt_index]).startswith(gt_date[:7]) or str(stamps[gt_index]) == gt_date[:4]
    (d / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")


# ---------------------------------------------------------------------------
# benchmark cases
# ---------------------------------------------------------------------------


def nile():
    import statsmodels.datasets.nile as mod

    src = Path(mod.__file__).with_name("nile.csv")
    rows = list(csv.DictReader(open(src)))
    write_case(
        "nile", [int(r["year"]) for r in rows], [float(r["volume"]) for r in rows], 27, "1898",
        "Construction of the Aswan Low Dam began in 1898, reducing the annual flow of the Nile at Aswan.",
        "Annual Nile flow at Aswan 1871-1970 (10^8 m^3), public record as distributed with statsmodels.",
        "Annual volume of the Nile river at Aswan", decimals=0,
    )


def seatbelts():
    rng = np.random.default_rng(1983)
    n = 108
    t = np.arange(n)
    # December peak, spring trough; slow decline in the level before the law
    season = np.array([0.02, -0.12, -0.08, -0.10, -0.03, -0.05, 0.00, 0.02, 0.03, 0.08, 0.10, 0.17])
    level = 128 - 0.08 * t
    level[85:] *= 0.80  # compulsory front-seat belt wearing from 31 January 1983
    y = level * (1 + season[t % 12]) + rng.normal(0, 8, n)
    write_case(
        "seatbelts", months((1976, 1), n), y, 85, "1983-02-01",
        "The UK law making front seat belt wearing compulsory came into force on 31 January 1983.",
        "Synthetic replica of monthly UK car drivers killed 1976-1984: seasonal pattern, "
        "gently falling level, 20% drop from February 1983, Gaussian noise (seed 1983). Not the original data.",
        "Monthly number of car drivers killed on UK roads",
    )


def lga():
    rng = np.random.default_rng(2001)
    n = 468
    t = np.arange(n)
    season = np.array([-0.09, -0.10, 0.01, 0.00, 0.03, 0.05, 0.06, 0.07, -0.03, 0.04, 0.00, -0.04])
    level = 1.40 + 0.60 * t / 295.0  # steady growth to mid-2001, millions of passengers
    after = t >= 296
    k = t[after] - 296
    # immediate 35% loss in September 2001, slow partial recovery, then renewed growth
    level[after] = 2.0 * (0.65 + 0.20 * (1 - np.exp(-k / 24.0))) + 0.0018 * k
    y = level * (1 + season[t % 12]) * (1 + rng.normal(0, 0.025, n))
    write_case(
        "lga", months((1977, 1), n), y, 296, "2001-09-01",
        "The September 11, 2001 terrorist attacks, after which air travel through New York airports collapsed.",
        "Synthetic replica of monthly LaGuardia Airport passengers 1977-2015 (millions): trend, "
        "seasonality, 35% drop in September 2001 with slow recovery, 2.5% noise (seed 2001). Not the original data.",
        "Monthly passengers at LaGuardia Airport (millions)",
    )


def ireland():
    y = [36.1, 33.2, 30.6, 29.9, 28.2, 26.1, 23.6, 23.9, 42.4, 61.5, 86.0, 110.9,
         119.9, 119.9, 104.3, 76.7, 74.1, 67.0, 63.0, 57.0, 58.4]
    write_case(
        "ireland_debt", list(range(2000, 2021)), y, 9, "2009",
        "The Irish banking crisis: the 2008 bank guarantee and the recapitalisation and bailout that followed "
        "drove government debt sharply higher from 2009.",
        "Irish general government gross debt, % of GDP, 2000-2020, transcribed from published annual figures "
        "(rounded; may differ slightly from the current vintage).",
        "Irish government debt as a share of GDP (%)", decimals=1,
    )


def ozone():
    rng = np.random.default_rng(1993)
    n = 54
    t = np.arange(n)
    base = np.where(t < 15, 310.0, np.where(t < 32, 310.0 - (t - 14) * (185.0 / 18.0), 125.0))
    y = base + rng.normal(0, 12, n)
    write_case(
        "ozone", list(range(1961, 2015)), y, 32, "1993",
        "Antarctic ozone depletion peaked around 1993; afterwards the Montreal Protocol halted the decline.",
        "Synthetic replica of annual Antarctic springtime total ozone 1961-2014 (Dobson units): flat until 1975, "
        "linear decline to 1993, flat afterwards, noise sd 12 (seed 1993). Not the original data.",
        "Annual mean October total ozone over Antarctica (Dobson units)", decimals=1,
    )


def robocalls():
    rng = np.random.default_rng(2018)
    n = 53
    t = np.arange(n)
    level = np.where(t < 31, 1.8 + 0.02 * t, 2.4 + 0.15 * (t - 31))
    y = level + rng.normal(0, 0.12, n)
    write_case(
        "robocalls", months((2015, 8), n), y, 31, "2018-03-01",
        "In March 2018 a federal appeals court struck down the FCC's broad definition of an autodialer, "
        "loosening restrictions on robocalls.",
        "Synthetic replica of monthly US robocall volume Aug 2015-Dec 2019 (billions): slow growth, "
        "then a steeper trend from March 2018, noise sd 0.12 (seed 2018). Not the original data.",
        "Monthly robocalls placed in the United States (billions)",
    )


def japan():
    y = [22.7, 24.4, 28.4, 25.9, 27.1, 27.1, 27.7, 27.6, 30.9, 30.7, 31.6, 33.0, 35.0, 36.4, 33.6,
         34.3, 34.0, 31.2, 23.0, 28.8, 29.3, 29.7, 25.6, 24.0, 27.8, 28.6, 17.8, 1.7, 0.9, 0.0,
         0.9, 1.7, 3.1, 6.2, 7.5, 4.3, 6.9, 5.5, 8.5, 8.5]
    write_case(
        "japan_nuclear", list(range(1985, 2025)), y, 26, "2011",
        "The March 2011 Fukushima Daiichi nuclear disaster, after which Japan shut down its reactors.",
        "Nuclear share of Japanese electricity generation 1985-2024 (%), transcribed from published annual "
        "figures (approximate).",
        "Nuclear share of electricity generation in Japan (%)", decimals=1,
    )


# ---------------------------------------------------------------------------
# Nexora scenario
# ---------------------------------------------------------------------------


MEMO = """INTERNAL MEMO - CONFIDENTIAL

From: Maria Chen, Chief Technology Officer
To: All Employees
Date: July 20, 2022
Subject: Project Helios Launch Success

Dear Team,

I am thrilled to announce the successful launch of Project
Helios on July 15, 2022.

On July 15, 2022, Nexora Technologies launched Project Helios,
a revolutionary AI-powered recommendation engine. The launch
resulted in a 40% uptick in monthly active users. The project was led by CTO
Maria Chen and had been in development since Q3 2021.

Key Highlights:
- User engagement increased by 40%
- Monthly active users surged from 175,000 to over 210,000
- Customer satisfaction scores reached an all-time high
- The recommendation accuracy improved to 94.7%

This achievement represents 18 months of dedicated work by the
Helios team. Special thanks to the engineering leads: James
Wright, Sarah Kim, and David Okonkwo.

Best regards,
Maria Chen
CTO, Nexora Technologies
"""

SPEC = """PRODUCT SPECIFICATION DOCUMENT

Product: {product}
Version: {version}
Last Updated: {date}

Overview:
{product} provides enterprise-grade solutions for {area}.

Technical Requirements:
- Python 3.8+
- {ram}GB RAM minimum
- {disk}GB storage

Dependencies:
- PostgreSQL 13+
- Redis 6+
- Kubernetes 1.20+

---
Document Owner: Engineering Team
"""

HR = """HUMAN RESOURCES POLICY UPDATE

From: People Operations
To: All Employees
Date: {date}
Subject: {subject}

{body}

Questions about this policy can be sent to the People Operations inbox.

People Operations
Nexora Technologies
"""

IT = """IT SERVICE NOTICE

From: IT Service Desk
Date: {date}
Subject: {subject}

{body}

If you experience problems, open a ticket with the service desk.
"""

MEETING = """MEETING NOTES

Date: {date}
Subject: {subject}
Attendees: {attendees}

{body}

Action items were assigned to the owners listed in the tracker.
"""

HR_TOPICS = [
    ("Updated Remote Work Policy", "Employees may work remotely up to three days per week. Managers should agree on core office days with their teams."),
    ("Annual Leave Carry-Over", "Up to five unused vacation days can be carried into the next calendar year. Remaining days expire on March 31."),
    ("Parental Leave Enhancements", "Paid parental leave is extended to sixteen weeks for all parents, including adoptive and foster parents."),
    ("Expense Reimbursement Changes", "Receipts must be submitted within thirty days. Meal allowances for business travel have been revised."),
    ("Performance Review Calendar", "Mid-year reviews open next week. Self assessments are due before the calibration sessions."),
    ("Health Benefits Open Enrollment", "Open enrollment for medical, dental and vision plans runs for two weeks. Review the plan comparison guide."),
    ("Code of Conduct Refresher", "All staff must complete the annual code of conduct training module by the end of the quarter."),
    ("Office Relocation Timeline", "The Denver office will move to the new building on the third floor. Packing crates arrive next Friday."),
    ("Learning Stipend Program", "Each employee has an annual learning budget for courses, books and conference tickets."),
    ("Holiday Schedule", "The office will be closed for the winter holidays. Support rotations will be published separately."),
]
IT_TOPICS = [
    ("Scheduled Email Maintenance", "The email servers will be patched on Saturday night. Webmail may be unavailable for up to two hours."),
    ("Password Rotation Reminder", "Passwords older than ninety days will expire. Use the self-service portal to choose a new passphrase."),
    ("VPN Client Upgrade", "A new VPN client version will be pushed to all laptops. Restart your machine when prompted."),
    ("Printer Fleet Replacement", "Printers on floors two and four are being replaced. Badge release printing will be enabled."),
    ("Multi-Factor Authentication Rollout", "Multi-factor authentication becomes mandatory for all internal applications."),
    ("Laptop Refresh Cycle", "Laptops older than four years are eligible for replacement. Back up local files before the swap."),
    ("Wi-Fi Network Changes", "The guest wireless network will be renamed and isolated from the corporate network."),
    ("Phishing Simulation Results", "The quarterly phishing exercise showed improved reporting rates. Remember to report suspicious links."),
]
MEETING_TOPICS = [
    ("Facilities Committee", "Discussed the cafeteria vendor contract, parking permits and the bicycle storage request."),
    ("Finance Quarterly Close", "Reviewed the accrual schedule and the audit preparation checklist for the quarter close."),
    ("Legal Contract Review", "Went through vendor contract renewals and the updated data processing addendum template."),
    ("Sustainability Working Group", "Agreed to track office energy use and to pilot a recycling program for electronics."),
    ("Recruiting Sync", "Reviewed open requisitions, interview panel training and the campus hiring calendar."),
    ("Security Steering Group", "Reviewed the incident response runbook and scheduled the next tabletop exercise."),
    ("Procurement Review", "Compared quotes for office furniture and approved the new standing desk supplier."),
]
SPECS = [
    ("CloudVault", "3.5.3", "data management", 8, 100),
    ("DataBridge", "2.1.0", "data integration", 16, 200),
    ("InsightHub", "1.4.2", "business reporting", 8, 50),
    ("SecureGate", "4.0.1", "identity and access control", 4, 20),
    ("StreamLine", "2.8.0", "workflow automation", 8, 40),
]

NAMES = ["Ana Lopez", "Tom Becker", "Priya Nair", "Leo Martin", "Grace Liu", "Omar Haddad", "Nina Petrova"]


def corpus_dates() -> list[dt.date]:
    """30 distinct dates from 2020 to 2024; four fall within 30 days of July 2022."""
    near = [dt.date(2022, 6, 14), dt.date(2022, 6, 27), dt.date(2022, 7, 8), dt.date(2022, 7, 26)]
    rng = np.random.default_rng(7)
    lo, hi = dt.date(2020, 1, 1).toordinal(), dt.date(2024, 12, 31).toordinal()
    window = (dt.date(2022, 6, 1).toordinal() - 30, dt.date(2022, 7, 1).toordinal() + 45)
    far: set[int] = set()
    while len(far) < 26:
        d = int(rng.integers(lo, hi + 1))
        if not window[0] <= d <= window[1]:
            far.add(d)
    return sorted(near + [dt.date.fromordinal(d) for d in far])


def nexora():
    base = DATA / "nexora"
    if base.exists():
        shutil.rmtree(base)
    corpus = base / "corpus"
    corpus.mkdir(parents=True)

    rng = np.random.default_rng(2022)
    n = 60
    level = np.where(np.arange(n) < 30, 175_000.0, 210_000.0)
    mau = level * (1 + rng.normal(0, 0.02, n))
    with open(base / "mau.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "value"])
        for s, v in zip(months((2020, 1), n), mau):
            w.writerow([s, f"{v:.0f}"])

    (corpus / "memo_project_helios_launch_2022-07-20.txt").write_text(MEMO)
    kinds = (["hr"] * 10 + ["it"] * 8 + ["meeting"] * 7 + ["spec"] * 5)
    order = np.random.default_rng(11).permutation(len(kinds))
    counters = {"hr": 0, "it": 0, "meeting": 0, "spec": 0}
    for date, idx in zip(corpus_dates(), order):
        kind = kinds[idx]
        i = counters[kind]
        counters[kind] += 1
        iso = date.isoformat()
        if kind == "hr":
            subject, body = HR_TOPICS[i]
            text = HR.format(date=iso, subject=subject, body=body)
        elif kind == "it":
            subject, body = IT_TOPICS[i]
            text = IT.format(date=iso, subject=subject, body=body)
        elif kind == "meeting":
            subject, body = MEETING_TOPICS[i]
            who = ", ".join(NAMES[(i + k) % len(NAMES)] for k in range(3))
            text = MEETING.format(date=iso, subject=subject, attendees=who, body=body)
        else:
            product, version, area, ram, disk = SPECS[i]
            subject = product
            text = SPEC.format(product=product, version=version, date=iso, area=area, ram=ram, disk=disk)
        slug = "".join(c if c.isalnum() else "_" for c in subject.lower()).strip("_")
        while "__" in slug:
            slug = slug.replace("__", "_")
        (corpus / f"{kind}_{slug}_{iso}.txt").write_text(text)
    (base / "meta.json").write_text(json.dumps({
        "name": "nexora_mau",
        "description": "Nexora Technologies monthly active users",
        "ground_truth_index": 30,
        "ground_truth_date": "2022-07-01",
        "event": "Launch of Project Helios, an AI-powered recommendation engine, on July 15, 2022.",
        "relevant_document": "memo_project_helios_launch_2022-07-20",
        "source": "Synthetic: 175,000 before July 2022 and 210,000 after, 2% multiplicative Gaussian noise (seed 2022).",
    }, indent=2) + "\n")


def main():
    bench = DATA / "benchmarks"
    if bench.exists():
        shutil.rmtree(bench)
    for fn in (nile, seatbelts, lga, ireland, ozone, robocalls, japan):
        fn()
    nexora()
    print(f"fixtures written under {DATA}")


if __name__ == "__main__":
    main()
