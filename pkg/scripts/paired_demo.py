#!/usr/bin/env python3
"""Walk the paired-device story in process, printing what the monitor sees.

One user browses and engages heavily with a microphone image; the paired
monitor's three views (data log, profile, upcoming recommendations) are
printed after the burst, including the saturated 10/10 engagement meter.
"""

import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from somekone import tracking
from somekone.catalog import load_catalog
from somekone.config import EngineConfig
from somekone.session import Session

FIXTURES = Path(__file__).resolve().parent.parent / "src" / "somekone" / "fixtures"


def main():
    catalog = load_catalog((FIXTURES / "catalog_small.json").read_bytes())
    session = Session(catalog, EngineConfig(seed=7))
    jarmo, _ = session.join("jarmo")
    code = session.issue_pairing_code(jarmo)
    target, notices = session.pair(code.code)
    print(f"monitor paired to {session.nickname(target)} via code {code.code}")
    print(f"feed device notified: {notices[0].body}\n")

    img = "img_001"  # the microphone image
    creator = catalog.image(img).creator_id
    burst = [
        tracking.seen(jarmo, img, 100),
        tracking.dwell_end(jarmo, img, 12_100, 12_000),
        tracking.share(jarmo, img, 12_200, "friends"),
        tracking.comment(jarmo, img, 12_300, 40, text="mahtava mikrofoni!"),
        tracking.follow(jarmo, img, 12_400, creator),
        tracking.emoji_reaction(jarmo, img, 12_500, "heart_eyes"),
    ]
    for draft in burst:
        session.ingest(jarmo, draft, graphs_for_projector=False)

    datalog = session.snapshot("user_datalog", jarmo)
    score = datalog["scores"][img]
    print("DATA tab")
    for ev in datalog["events"]:
        print(f"  t={ev['t']:>6}ms  {ev['kind']:<16} {ev['image']}")
    print(
        f"  engagement meter: {score['value']:g}/{datalog['score_max']:g} "
        f"(breakdown {score['breakdown']})\n"
    )

    profile = session.snapshot("user_profile", jarmo)
    print("PROFILE tab")
    for entry in profile["top_tags"]:
        print(f"  #{entry['tag']}: affinity {entry['affinity']:.2f}, top {entry['top_images']}")
    print(f"  action totals: {profile['totals']}\n")

    queue = session.snapshot("user_queue", jarmo)
    print("RECOMMENDATIONS tab (next 5)")
    for item in queue["items"]:
        print(f"  {item['image']:<8} [{item['strategy']}] {item['explanation']['text']}")


if __name__ == "__main__":
    main()
