from wyscout_to_raw import convert


def ev(team, name, sub, x, y, sec, tags=(), period="1H"):
    return {
        "matchId": 7,
        "teamId": team,
        "eventName": name,
        "subEventName": sub,
        "positions": [{"x": x, "y": y}, {"x": x, "y": y}],
        "eventSec": sec,
        "matchPeriod": period,
        "tags": [{"id": t} for t in tags],
    }


def test_possession_flow():
    events = [
        ev(1, "Pass", "Simple pass", 40, 50, 1.0),
        ev(1, "Duel", "Ground attacking duel", 50, 45, 2.0),
        ev(1, "Pass", "Cross", 80, 10, 3.0),
        ev(1, "Shot", "Shot", 90, 50, 4.0, tags=[101, 1801]),
        ev(2, "Pass", "Simple pass", 30, 50, 10.0),
        ev(2, "Duel", "Ground defending duel", 30, 50, 11.0),
        ev(1, "Pass", "Simple pass", 60, 40, 12.0, period="2H"),
        ev(2, "Foul", "Foul", 40, 60, 13.0, period="2H"),
    ]
    out = convert(events, "Test")
    codes = [(r["team_id"], r["action"]) for r in out]
    assert codes == [
        ("1", "p"), ("1", "d"), ("1", "x"), ("1", "s"), ("1", "g"),
        ("2", "p"), ("2", "_"),
        ("1", "p"), ("1", "_"),
        ("1", "@"),
    ]
    assert out[0]["x_raw"] == 42.0 and out[0]["y_raw"] == 34.0
    assert out[4]["x_raw"] == 105.0
    assert out[7]["period"] == 2
    assert all(r["competition"] == "Test" for r in out)


def test_missed_shot_ends_possession():
    out = convert([ev(1, "Shot", "Shot", 88, 50, 1.0), ev(2, "Pass", "Simple pass", 10, 50, 5.0)])
    assert [r["action"] for r in out] == ["s", "_", "p", "@"]
