#!/usr/bin/env python3
"""Convert Wyscout open-data event files to sigposs raw events (JSON lines).

Usage:
    python3 scripts/wyscout_to_raw.py events_England.json --competition England > raw.jsonl

Wyscout coordinates are percentages with every event oriented so the acting
team attacks left to right; they are rescaled to a 105 x 68 m pitch.
"""

import argparse
import json
import sys

PITCH_LENGTH = 105.0
PITCH_WIDTH = 68.0
GOAL_TAG = 101
PERIODS = {"1H": 1, "2H": 2, "E1": 3, "E2": 4}

CROSSES = {"Cross", "Corner", "Free kick cross"}
SHOTS = {"Shot", "Free kick shot", "Penalty"}
DRIBBLES = {"Ground attacking duel", "Acceleration", "Touch"}
PASS_EVENTS = {"Pass", "Free Kick"}
STOPPAGES = {"Foul", "Offside", "Interruption"}


def action_code(event):
    """Action code of an on-ball event, '_' for a stoppage, None to skip."""
    name, sub = event.get("eventName"), event.get("subEventName")
    if sub in CROSSES:
        return "x"
    if sub in SHOTS or name == "Shot":
        return "s"
    if sub in DRIBBLES:
        return "d"
    if name in PASS_EVENTS or sub == "Clearance":
        return "p"
    if name in STOPPAGES:
        return "_"
    return None


def is_goal(event):
    return any(tag.get("id") == GOAL_TAG for tag in event.get("tags", []))


def record(event, action, team, x_pct, y_pct, competition):
    rec = {
        "match_id": str(event["matchId"]),
        "team_id": str(team),
        "action": action,
        "x_raw": round(x_pct / 100.0 * PITCH_LENGTH, 3),
        "y_raw": round(y_pct / 100.0 * PITCH_WIDTH, 3),
        "t_raw_sec": round(float(event["eventSec"]), 3),
        "period": PERIODS[event["matchPeriod"]],
    }
    if competition:
        rec["competition"] = competition
    return rec


def convert_match(events, competition):
    """Raw records of one match, in event order."""
    out = []
    owner = None  # team of the open possession
    last = None
    for ev in events:
        if ev.get("matchPeriod") not in PERIODS:
            continue
        code = action_code(ev)
        if code is None:
            continue
        pos = (ev.get("positions") or [{"x": 50, "y": 50}])[0]
        if code == "_":
            if owner is not None:
                out.append(record(ev, "_", owner, pos["x"], pos["y"], competition))
                owner = None
            continue
        team = ev["teamId"]
        if owner is not None and team != owner and last is not None:
            out.append(record(last[0], "_", owner, last[1]["x"], last[1]["y"], competition))
        out.append(record(ev, code, team, pos["x"], pos["y"], competition))
        owner, last = team, (ev, pos)
        if code == "s":
            if is_goal(ev):
                out.append(record(ev, "g", team, 100.0, 50.0, competition))
            else:
                out.append(record(ev, "_", team, pos["x"], pos["y"], competition))
            owner = None
    if last is not None:
        out.append(record(last[0], "@", last[0]["teamId"], 50.0, 50.0, competition))
    return out


def convert(events, competition=None):
    by_match = {}
    for ev in events:
        by_match.setdefault(ev["matchId"], []).append(ev)
    out = []
    for match_id in sorted(by_match):
        match = sorted(
            by_match[match_id],
            key=lambda e: (PERIODS.get(e.get("matchPeriod"), 9), e.get("eventSec", 0.0)),
        )
        out.extend(convert_match(match, competition))
    return out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("events", nargs="+", help="Wyscout events_*.json files")
    parser.add_argument("--competition", help="tag stamped on every record")
    parser.add_argument("-o", "--output", help="output file (default: stdout)")
    args = parser.parse_args(argv)

    events = []
    for path in args.events:
        with open(path, encoding="utf-8") as f:
            events.extend(json.load(f))
    records = convert(events, args.competition)
    sink = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    try:
        for rec in records:
            sink.write(json.dumps(rec) + "\n")
    finally:
        if args.output:
            sink.close()


if __name__ == "__main__":
    main()
