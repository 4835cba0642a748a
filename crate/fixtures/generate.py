"""Generates the session fixtures and their independently computed metrics.

Usage: python3 fixtures/generate.py   (from the workspace root)

Every session is scripted: targets, gaze holds with planted drift, pointer
trails and stray clicks. `expected_metrics.json` is computed here with a
quadratic I-DT window scan and mpmath, sharing no code with the Rust crates.
"""
import json
import math
import os
import random

from mpmath import mp, mpf, log, sqrt

mp.dps = 40
HERE = os.path.dirname(os.path.abspath(__file__))
GAZE_HZ = 90.0
MOUSE_HZ = 60.0
DISPERSION_PX = 60.0
MIN_FIXATION_MS = 200.0
MOUSE_EPSILON_PX = 1.0


def script_session(rng, session_id, participant, screen, started_at, trials=30,
                   stray_plan=None, drift_px=8.0, off_screen=0, hours=3.0,
                   strain=2, symptoms=()):
    width, height = screen
    stray_plan = stray_plan or {}
    # (start, end, kind, a, b): holds fix on point a; sweeps run a -> b.
    segments = []
    cursor_gaze = (width / 2, height / 2)
    segments.append((0.0, 500.0, "hold", cursor_gaze, None))
    t = 500.0
    out_trials = []
    mouse = []
    pointer = (width / 2, height / 2)
    for i in range(trials):
        w = rng.choice([60.0, 80.0, 100.0])
        margin = w
        cx = round(rng.uniform(margin, width - margin), 1)
        cy = round(rng.uniform(margin, height - margin), 1)
        appear = round(t, 1)
        angle = rng.uniform(0, 2 * math.pi)
        look = (cx + drift_px * math.cos(angle), cy + drift_px * math.sin(angle))
        sweep = 60.0
        hold = rng.uniform(250.0, 550.0)
        segments.append((appear, appear + sweep, "sweep", cursor_gaze, look))
        segments.append((appear + sweep, appear + sweep + hold, "hold", look, None))
        select = round(appear + sweep + hold - 40.0, 1)
        cursor_gaze = look

        r = rng.uniform(0, w / 2 - 5)
        a = rng.uniform(0, 2 * math.pi)
        sel = (round(cx + r * math.cos(a), 1), round(cy + r * math.sin(a), 1))
        strays = []
        for k in range(stray_plan.get(i, 0)):
            st = round(appear + (k + 1) * (select - appear) / (stray_plan[i] + 2), 1)
            sx = round(min(width - 1, max(1, cx + (w + 30) * (1 if cx < width / 2 else -1))), 1)
            sy = round(min(height - 1, max(1, cy + 10 * k)), 1)
            strays.append({"t": st, "x": sx, "y": sy})

        # Pointer: travels for 60% of the trial, then rests with sub-pixel tremor.
        n = int((select - appear) / (1000.0 / MOUSE_HZ))
        for k in range(n):
            mt = round(appear + k * 1000.0 / MOUSE_HZ, 3)
            f = min(1.0, k / max(1, 0.6 * n))
            if f < 1.0:
                x = pointer[0] + f * (sel[0] - pointer[0])
                y = pointer[1] + f * (sel[1] - pointer[1])
            else:
                x = sel[0] + rng.uniform(-0.3, 0.3)
                y = sel[1] + rng.uniform(-0.3, 0.3)
            mouse.append({"t": mt, "x": round(x, 2), "y": round(y, 2)})
        pointer = sel

        trial = {
            "target": {"cx": cx, "cy": cy, "w": w, "shape": "circle"},
            "appear_t": appear,
            "select_t": select,
            "select_pos": {"x": sel[0], "y": sel[1]},
            "error_clicks": len(strays),
        }
        if strays:
            trial["stray_clicks"] = strays
        out_trials.append(trial)
        t = select + 200.0
    end_gaze = t + 300.0
    segments.append((segments[-1][1], end_gaze, "hold", cursor_gaze, None))
    duration = round(end_gaze + 100.0, 1)

    def gaze_at(ts):
        # Holds last until the next segment starts.
        s, e, kind, a, b = [seg for seg in segments if seg[0] <= ts][-1]
        if kind == "hold" or ts >= e:
            p = a if kind == "hold" else b
            return (p[0] + rng.uniform(-1.5, 1.5), p[1] + rng.uniform(-1.5, 1.5))
        f = (ts - s) / (e - s)
        return (a[0] + f * (b[0] - a[0]), a[1] + f * (b[1] - a[1]))

    gaze = []
    i = 0
    while True:
        ts = round(i * 1000.0 / GAZE_HZ, 3)
        if ts > end_gaze:
            break
        x, y = gaze_at(ts)
        gaze.append({"t": ts, "x": round(x, 2), "y": round(y, 2)})
        i += 1
    # Tracker glitches past the left edge, inside sweeps.
    for k in range(off_screen):
        idx = 60 + 97 * k
        gaze[idx]["x"] = -25.0

    return {
        "version": 1,
        "session_id": session_id,
        "participant": participant,
        "screen": {"width": float(width), "height": float(height)},
        "started_at": started_at,
        "duration_ms": duration,
        "pre": {"display_hours": hours},
        "trials": out_trials,
        "gaze": gaze,
        "mouse": mouse,
        "post": {"strain_rating": strain, "symptoms": list(symptoms)},
    }


# ---- oracle ---------------------------------------------------------------

def dispersion(window):
    xs = [s[1] for s in window]
    ys = [s[2] for s in window]
    return (max(xs) - min(xs)) + (max(ys) - min(ys))


def idt(samples):
    out = []
    i = 0
    n = len(samples)
    while i < n:
        j = next((j for j in range(i, n) if samples[j][0] - samples[i][0] >= MIN_FIXATION_MS), None)
        if j is None:
            break
        if dispersion(samples[i:j + 1]) > DISPERSION_PX:
            i += 1
            continue
        end = j
        while end + 1 < n and dispersion(samples[i:end + 2]) <= DISPERSION_PX:
            end += 1
        w = samples[i:end + 1]
        cx = sum(s[1] for s in w) / len(w)
        cy = sum(s[2] for s in w) / len(w)
        out.append((w[0][0], w[-1][0] - w[0][0], cx, cy))
        i = end + 1
    return out


def oracle(session):
    W = session["screen"]["width"]
    H = session["screen"]["height"]
    trials = session["trials"]
    centers = [(t["target"]["cx"], t["target"]["cy"]) for t in trials]
    ws = [t["target"]["w"] for t in trials]
    dists = [math.dist(centers[k], centers[k + 1]) for k in range(len(trials) - 1)]
    d = sum(dists) / len(dists)
    w = sum(ws) / len(ws)
    aot = sum(math.pi * (x / 2) ** 2 for x in ws) / len(ws)
    mean_id = sum(math.log2(1 + dd / ws[k + 1]) for k, dd in enumerate(dists)) / len(dists)
    mean_mt = sum(t["select_t"] - t["appear_t"] for t in trials) / len(trials)
    t0, t1 = trials[0]["appear_t"], trials[-1]["select_t"]
    td = (t1 - t0) / 1000.0

    clamped = 0
    gaze = []
    for g in session["gaze"]:
        x = min(max(g["x"], 0.0), W)
        y = min(max(g["y"], 0.0), H)
        clamped += (x != g["x"]) or (y != g["y"])
        gaze.append((g["t"], x, y))
    fixes = idt(gaze)
    anf = sum(1 for f in fixes if t0 <= f[0] <= t1)

    total = 0.0
    qualifying = 0
    skipped = 0
    for onset, dur, fx, fy in fixes:
        match = next((t for t in trials if t["appear_t"] <= onset <= t["select_t"]), None)
        if match is None:
            match = next((t for t in trials if t["appear_t"] <= onset + dur and onset <= t["select_t"]), None)
        if match is None:
            skipped += 1
            continue
        total += math.dist((fx, fy), (match["target"]["cx"], match["target"]["cy"]))
        qualifying += 1

    m = session["mouse"]
    moves = sum(1 for k in range(len(m) - 1)
                if math.dist((m[k]["x"], m[k]["y"]), (m[k + 1]["x"], m[k + 1]["y"])) > MOUSE_EPSILON_PX)

    aos = mpf(W) * mpf(H)
    score = sqrt(((aos / mpf(aot)) * log(1 + mpf(d) / mpf(w), 2) * anf + 1) / (mpf(td) + 1))
    return {
        "espim": float(score),
        "anf": float(anf),
        "td": td,
        "errors": sum(t["error_clicks"] for t in trials),
        "mouse_moves": moves,
        "fqls": total / qualifying,
        "mean_id": mean_id,
        "mean_mt_ms": mean_mt,
        "d": d,
        "w": w,
        "aot": aot,
        "aos": W * H,
        "fixations": len(fixes),
        "fqls_skipped": skipped,
        "clamped_gaze": clamped,
    }


def write(path, doc):
    full = os.path.join(HERE, path)
    os.makedirs(os.path.dirname(full), exist_ok=True)
    with open(full, "w") as f:
        json.dump(doc, f, separators=(",", ":"))
        f.write("\n")


def main():
    expected = {}
    rng = random.Random(20210304)

    ref = script_session(
        rng, "reference-01", {"id": "p-ref", "age": 27, "gameplay_rating": 3},
        (1920, 1080), "2021-03-04T10:15:00+01:00",
        stray_plan={4: 2, 17: 1}, off_screen=2, symptoms=["tired_eyes", "dry_eyes"])
    write("reference_session.json", ref)
    expected[ref["session_id"]] = oracle(ref)

    office = script_session(
        rng, "corpus-office", {"id": "p-a", "gameplay_rating": 2, "pair_key": "k1"},
        (1920, 1080), "2021-03-08T10:00:00+01:00",
        stray_plan={2: 1, 9: 1}, drift_px=6.0, hours=4.0, strain=2, symptoms=["tired_eyes"])
    evening = script_session(
        rng, "corpus-evening", {"id": "p-a", "gameplay_rating": 4, "pair_key": "k1"},
        (1366, 768), "2021-03-08T19:00:00+01:00",
        stray_plan={5: 2, 11: 1, 20: 1}, drift_px=14.0, off_screen=3, hours=9.5, strain=4,
        symptoms=["tired_eyes", "headache", "blurred_vision"])
    write("corpus/office.json", office)
    write("corpus/evening.json", evening)
    expected[office["session_id"]] = oracle(office)
    expected[evening["session_id"]] = oracle(evening)

    # Four participants, each with an office-hours and an evening session.
    resolutions = [(1280, 720), (1366, 768), (1920, 1080), (2560, 1440)]
    ratings = [1, 2, 4, 5]
    keys = ["g1", "g2", "g1", "g2"]
    for p in range(4):
        for slot, (hour, label) in enumerate([(11, "office"), (21, "flex")]):
            sid = f"study-p{p + 1}-{label}"
            s = script_session(
                rng, sid, {"id": f"p{p + 1}", "gameplay_rating": ratings[p], "pair_key": keys[p]},
                resolutions[(p + slot) % 4], f"2021-04-{12 + p:02d}T{hour}:30:00+02:00",
                stray_plan={rng.randrange(30): rng.randint(1, 3) for _ in range(p + slot + 1)},
                drift_px=5.0 + 3 * p + 4 * slot, hours=2.0 + p + 3 * slot,
                strain=min(5, 1 + p // 2 + slot), symptoms=["tired_eyes", "dry_eyes"][: p % 3])
            write(f"study/{sid}.json", s)
            expected[sid] = oracle(s)

    minimal = {
        "version": 1,
        "session_id": "minimal",
        "participant": {"id": "p0"},
        "screen": {"width": 1280.0, "height": 720.0},
        "started_at": "2021-03-04T09:30:00+00:00",
        "duration_ms": 1500.0,
        "pre": {"display_hours": 1.0},
        "trials": [{
            "target": {"cx": 640.0, "cy": 360.0, "w": 80.0, "shape": "circle"},
            "appear_t": 100.0, "select_t": 900.0,
            "select_pos": {"x": 641.0, "y": 359.0}, "error_clicks": 0,
        }],
        "gaze": [],
        "mouse": [],
        "post": {"strain_rating": 1, "symptoms": []},
    }
    write("minimal_session.json", minimal)
    bad = json.loads(json.dumps(minimal))
    bad["session_id"] = "rating-six"
    bad["post"]["strain_rating"] = 6
    write("invalid/strain_rating_6.json", bad)
    text = json.dumps(ref, separators=(",", ":"))
    with open(os.path.join(HERE, "invalid/truncated.json"), "w") as f:
        f.write(text[: len(text) // 2])

    with open(os.path.join(HERE, "expected_metrics.json"), "w") as f:
        json.dump(expected, f, indent=2, sort_keys=True)
        f.write("\n")
    for sid, m in sorted(expected.items()):
        print(f"{sid:22} espim={m['espim']:.6f} anf={m['anf']:.0f} errors={m['errors']} "
              f"moves={m['mouse_moves']} fqls={m['fqls']:.3f} skipped={m['fqls_skipped']} clamped={m['clamped_gaze']}")


if __name__ == "__main__":
    main()
