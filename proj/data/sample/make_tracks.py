"""Writes tracks_22.csv: 22 synthetic top-view pedestrian tracks (frame,id,u,v).

Image 640x480 px at 0.0125 m/px (8 m x 6 m). Each person walks a gently
curved path between two points near opposite borders (goals at least 1 m apart) at ~1.2 m/s (30 fps).
"""
import math
import random

rng = random.Random(22)
W, H, MPP = 640, 480, 0.0125


def pick(side):
    m = rng.uniform(30, 120)
    if side == 0:
        return (m, rng.uniform(m, H - m)), (W - m, rng.uniform(m, H - m))
    if side == 1:
        return (W - m, rng.uniform(m, H - m)), (m, rng.uniform(m, H - m))
    if side == 2:
        return (rng.uniform(m, W - m), m), (rng.uniform(m, W - m), H - m)
    return (rng.uniform(m, W - m), H - m), (rng.uniform(m, W - m), m)

rows = []
endpoints = []


def far_enough(p):
    # Goals stay 1 m apart so no agent parks on another agent's goal.
    return all(math.dist(p, q) * MPP >= 1.0 for q in endpoints)


for pid in range(22):
    side = pid % 4
    while True:
        a, b = pick(side)
        if far_enough(b):
            break
    endpoints.append(b)
    speed_px = rng.uniform(1.0, 1.4) / 30.0 / MPP
    length = math.dist(a, b)
    frames = max(2, int(length / speed_px))
    start = rng.randint(0, 180)
    bend = rng.uniform(-30, 30)
    nx, ny = -(b[1] - a[1]) / length, (b[0] - a[0]) / length
    for k in range(frames + 1):
        t = k / frames
        off = bend * math.sin(math.pi * t)
        u = a[0] + (b[0] - a[0]) * t + nx * off
        v = a[1] + (b[1] - a[1]) * t + ny * off
        rows.append((start + k, pid, u, v))

rows.sort()
with open("tracks_22.csv", "w", newline="\n") as f:
    f.write("frame,id,u,v\n")
    for fr, pid, u, v in rows:
        f.write(f"{fr},{pid},{u:.2f},{v:.2f}\n")
