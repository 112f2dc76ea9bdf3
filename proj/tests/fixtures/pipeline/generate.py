#!/usr/bin/env python3
# Writes the end-to-end pipeline fixture next to this script. Seeded, so
# rerunning it reproduces the committed files byte for byte.
import csv
import io
import json
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent
rng = random.Random(20210804)

CLUSTERS = {
    "numlib": {"valid": [190, 191, 193, 369, 681, 704], "invalid": [189, 682],
               "targets": {189: [190, 191, 193, 369, 681], 682: [190, 191, 193, 369]}},
    "memco": {"valid": [787, 125, 120, 416], "invalid": [119, 664],
              "targets": {119: [787, 125, 120], 664: [416, 787, 119]}},
    "webkit": {"valid": [140, 20, 22], "invalid": [138, 707],
               "targets": {138: [140], 707: [20, 140]}},
    "authd": {"valid": [732, 287], "invalid": [264, 284],
              "targets": {264: [732, 287], 284: [287, 732]}},
}


def day(y, m, d, hh=0):
    return f"{y:04d}-{m:02d}-{d:02d}T{hh:02d}:00:00.000"


def rand_date(y0, y1):
    y = rng.randint(y0, y1)
    return y, rng.randint(1, 12), rng.randint(1, 28)


records, changes, exploited = [], [], []
n = 0
for vendor, c in CLUSTERS.items():
    products = [f"cpe:2.3:a:{vendor}:{p}:1.{i}:*:*:*:*:*:*:*" for i, p in enumerate(["core", "cli", "server"])]
    for i in range(24):
        n += 1
        cve = f"CVE-{2019 + i % 3}-{10000 + n}"
        y, m, d = rand_date(2019, 2020) if i % 3 < 2 else (2021, rng.randint(1, 6), rng.randint(1, 28))
        invalid = i % 2 == 1
        cwe = rng.choice(c["invalid"]) if invalid else rng.choice(c["valid"])
        cpes = rng.sample(products, rng.randint(1, 2))
        records.append({"id": cve, "published": day(y, m, d), "cwes": [f"CWE-{cwe}"], "cpes": cpes})
        if invalid and rng.random() < 0.75:
            new = rng.choice(c["targets"][cwe])
            if rng.random() < 0.3 and (y, m) < (2021, 3):
                # Remapped before the training snapshot.
                ry, rm, rd = (y, m + 2, d) if m <= 10 else (y + 1, 1, d)
                ry, rm = max((ry, rm), (2020, 6))
            else:
                ry, rm, rd = rand_date(2021, 2024)
                if ry == 2021:
                    rm = max(rm, 9)
                if ry == 2024:
                    rm = min(rm, 11)
            changes.append({"cve": cve, "when": day(ry, rm, rd, 10), "old": cwe, "new": new})
            if rng.random() < 0.4:
                ey, em, ed = rand_date(2021, 2023)
                if ey == 2021:
                    em = max(em, 9)
                exploited.append((cve, f"{ey:04d}-{em:02d}-{ed:02d}", rng.random() < 0.5))

# Two placeholder mappings, one later resolved.
for cve, tag in [("CVE-2020-19001", "NVD-CWE-noinfo"), ("CVE-2020-19002", "NVD-CWE-Other")]:
    records.append({"id": cve, "published": day(2020, 5, 5), "cwes": [tag],
                    "cpes": ["cpe:2.3:a:memco:core:1.0:*:*:*:*:*:*:*"]})
changes.append({"cve": "CVE-2020-19001", "when": day(2022, 4, 4, 10), "old": "NVD-CWE-noinfo", "new": 787})


def tag(x):
    return x if isinstance(x, str) else f"CWE-{x}"


vulns = []
for r in sorted(records, key=lambda r: r["id"]):
    vulns.append({"cve": {
        "id": r["id"],
        "published": r["published"],
        "weaknesses": [{"source": "nvd@nist.gov", "type": "Primary",
                        "description": [{"lang": "en", "value": w} for w in r["cwes"]]}],
        "configurations": [{"nodes": [{"operator": "OR", "negate": False, "cpeMatch": [
            {"vulnerable": True, "criteria": p} for p in r["cpes"]]}]}],
    }})
feed = {"resultsPerPage": len(vulns), "startIndex": 0, "totalResults": len(vulns), "format": "NVD_CVE",
        "version": "2.0", "timestamp": "2021-08-04T00:00:00.000", "vulnerabilities": vulns}
(HERE / "nvd_feed.json").write_text(json.dumps(feed, indent=1) + "\n")

items = []
for k, ch in enumerate(sorted(changes, key=lambda c: (c["when"], c["cve"]))):
    items.append({"change": {"cveId": ch["cve"], "eventName": "CVE Modified", "cveChangeId": f"p{k:03d}",
                             "sourceIdentifier": "nvd@nist.gov", "created": ch["when"], "details": [
                                 {"action": "Changed", "type": "CWE", "oldValue": "NIST: " + tag(ch["old"]),
                                  "newValue": "NIST: " + tag(ch["new"])}]}})
history = {"resultsPerPage": len(items), "startIndex": 0, "totalResults": len(items), "format": "NVD_CVEHistory",
           "version": "2.0", "timestamp": "2024-12-17T00:00:00.000", "cveChanges": items}
(HERE / "change_history.json").write_text(json.dumps(history, indent=1) + "\n")

kev = {"title": "CISA Catalog of Known Exploited Vulnerabilities", "catalogVersion": "2024.12.16",
       "count": 0, "vulnerabilities": []}
edb = io.StringIO()
w = csv.writer(edb, lineterminator="\n")
w.writerow(["id", "file", "description", "date_published", "author", "type", "platform", "port", "date_added",
            "date_updated", "verified", "codes", "tags", "aliases", "screenshot_url", "application_url",
            "source_url"])
for k, (cve, date, in_kev) in enumerate(exploited):
    if in_kev:
        kev["vulnerabilities"].append({"cveID": cve, "dateAdded": date, "vendorProject": "Fixture",
                                       "product": "Fixture", "vulnerabilityName": "Fixture entry"})
    else:
        w.writerow([50000 + k, f"exploits/linux/remote/{50000 + k}.py", "Fixture exploit", date, "anonymous",
                    "remote", "linux", "", date, date, 1, cve, "", "", "", "", ""])
kev["count"] = len(kev["vulnerabilities"])
(HERE / "kev.json").write_text(json.dumps(kev, indent=1) + "\n")
(HERE / "exploitdb.csv").write_text(edb.getvalue())
