#!/usr/bin/env python3
"""Regenerates the synthetic sample assets in data/ and config/.

Nothing here is patient data: the phantom, meshes and trocar placements are
made up so the CLI and service can be exercised end to end.
"""

import gzip
import json
import math
import os

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def rx(alpha, p):
    c, s = math.cos(alpha), math.sin(alpha)
    x, y, z = p
    return [x, c * y - s * z, s * y + c * z]


def ur5():
    # Universal Robots UR5 nominal DH table, millimetres.
    d = [89.159, 0.0, 0.0, 109.15, 94.65, 82.3]
    a = [0.0, -425.0, -392.25, 0.0, 0.0, 0.0]
    alpha = [math.pi / 2, 0.0, 0.0, math.pi / 2, -math.pi / 2, 0.0]
    radius = [45.0, 40.0, 35.0, 30.0, 30.0, 30.0]
    joints, capsules = [], []
    for i in range(6):
        joints.append({
            "name": f"q{i + 1}", "a": a[i], "alpha": alpha[i], "d": d[i],
            "theta_offset": 0.0, "type": "revolute",
            "limits": [-2 * math.pi, 2 * math.pi],
        })
        # Segment from the previous joint origin to this frame's origin, in frame i+1.
        p0 = rx(-alpha[i], [-a[i], 0.0, -d[i]])
        capsules.append({"name": f"link{i + 1}", "frame": i + 1,
                         "p0": [round(v, 12) + 0.0 for v in p0], "p1": [0.0, 0.0, 0.0],
                         "radius": radius[i]})
    capsules.append({"name": "endoscope", "frame": 6, "p0": [0.0, 0.0, 0.0],
                     "p1": [0.0, 0.0, 300.0], "radius": 5.0})
    identity = {"rotation": [1.0, 0.0, 0.0, 0.0], "translation": [0.0, 0.0, 0.0]}
    return {
        "kind": "serial_dh", "name": "ur5", "joints": joints,
        "base_pose": identity,
        "tool_pose": {"rotation": [1.0, 0.0, 0.0, 0.0], "translation": [0.0, 0.0, 300.0]},
        "capsules": capsules,
    }


def spherical():
    return {
        "kind": "spherical_rcm", "name": "spherical_rcm",
        "arc_radius": 200.0,
        "azimuth_limits": [-math.pi, math.pi],
        "arc_limits": [0.0, 200.0 * math.radians(75.0)],
        "insertion_limits": [0.0, 250.0],
        "instrument_offset": 100.0,
        "reference_direction": [0.0, 0.0, -1.0],
        "instrument_length": 300.0,
        "instrument_radius": 4.0,
        "carriage_radius": 25.0,
        "mass": {"load_kg": 1.0, "load_lever_mm": 300.0, "counterweight_lever_mm": 150.0},
    }


# Phantom: 64 x 64 x 48 voxels, 2 x 2 x 2.5 mm, origin so the table top is z = 0.
NX, NY, NZ = 64, 64, 48
SP = (2.0, 2.0, 2.5)
ORIGIN = (-63.0, -63.0, 2.5)

LIVER = ((-30.0, 10.0, 60.0), (28.0, 22.0, 18.0))
ESOPHAGUS = ((0.0, 40.0, 50.0), 7.0, 40.0)  # center, radius, half length along y


def phantom_value(x, y, z):
    v = 0
    if (x / 58.0) ** 2 + ((z - 60.0) / 55.0) ** 2 <= 1.0 and abs(y) <= 60.0:
        v = 40  # soft tissue
    (cx, cy, cz), (ax, ay, az) = LIVER
    if ((x - cx) / ax) ** 2 + ((y - cy) / ay) ** 2 + ((z - cz) / az) ** 2 <= 1.0:
        v = 110
    (ex, ey, ez), r, hl = ESOPHAGUS
    if (x - ex) ** 2 + (z - ez) ** 2 <= r * r and abs(y - ey) <= hl:
        v = 160
    if (x - 25.0) ** 2 + (z - 40.0) ** 2 <= 16.0 and abs(y) <= 60.0:
        v = 250  # contrast-filled vessel
    return v


def write_phantom(path):
    data = bytearray()
    for k in range(NZ):
        for j in range(NY):
            for i in range(NX):
                data.append(phantom_value(ORIGIN[0] + SP[0] * i, ORIGIN[1] + SP[1] * j,
                                          ORIGIN[2] + SP[2] * k))
    header = (
        "NRRD0004\n"
        "# synthetic abdominal phantom\n"
        "type: uint8\n"
        "dimension: 3\n"
        "space: left-posterior-superior\n"
        f"sizes: {NX} {NY} {NZ}\n"
        f"space directions: ({SP[0]},0,0) (0,{SP[1]},0) (0,0,{SP[2]})\n"
        "kinds: domain domain domain\n"
        "endian: little\n"
        "encoding: gzip\n"
        f"space origin: ({ORIGIN[0]},{ORIGIN[1]},{ORIGIN[2]})\n"
        "\n"
    )
    with open(path, "wb") as f:
        f.write(header.encode())
        f.write(gzip.compress(bytes(data), mtime=0))


def ellipsoid(center, axes, nu=16, nv=10):
    verts, faces = [], []
    for j in range(1, nv):
        th = math.pi * j / nv
        for i in range(nu):
            ph = 2 * math.pi * i / nu
            verts.append((center[0] + axes[0] * math.sin(th) * math.cos(ph),
                          center[1] + axes[1] * math.sin(th) * math.sin(ph),
                          center[2] + axes[2] * math.cos(th)))
    top = len(verts)
    verts.append((center[0], center[1], center[2] + axes[2]))
    bottom = len(verts)
    verts.append((center[0], center[1], center[2] - axes[2]))
    ring = lambda j, i: (j - 1) * nu + (i % nu)
    for i in range(nu):
        faces.append((top, ring(1, i), ring(1, i + 1)))
        faces.append((bottom, ring(nv - 1, i + 1), ring(nv - 1, i)))
    for j in range(1, nv - 1):
        for i in range(nu):
            faces.append((ring(j, i), ring(j + 1, i), ring(j + 1, i + 1), ring(j, i + 1)))
    return verts, faces


def cylinder_y(center, r, hl, n=16):
    verts, faces = [], []
    for side in (-1, 1):
        for i in range(n):
            ph = 2 * math.pi * i / n
            verts.append((center[0] + r * math.cos(ph), center[1] + side * hl,
                          center[2] + r * math.sin(ph)))
    for i in range(n):
        faces.append((i, (i + 1) % n, n + (i + 1) % n, n + i))
    faces.append(tuple(range(n - 1, -1, -1)))
    faces.append(tuple(range(n, 2 * n)))
    return verts, faces


def write_obj(path, objects):
    lines, base = ["# synthetic anatomy"], 0
    centers = {}
    for name, (verts, faces) in objects:
        lines.append(f"o {name}")
        lines += [f"v {x:.6f} {y:.6f} {z:.6f}" for x, y, z in verts]
        lines += ["f " + " ".join(str(base + k + 1) for k in f) for f in faces]
        base += len(verts)
        lo = [min(v[c] for v in verts) for c in range(3)]
        hi = [max(v[c] for v in verts) for c in range(3)]
        centers[name] = [round((a + b) / 2, 9) + 0.0 for a, b in zip(lo, hi)]
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")
    return centers


def main():
    os.makedirs(os.path.join(ROOT, "config"), exist_ok=True)
    models = {"ur5": ur5(), "spherical_rcm": spherical()}
    for name, model in models.items():
        with open(os.path.join(ROOT, "config", f"{name}.json"), "w") as f:
            json.dump(model, f, indent=2)
            f.write("\n")

    write_phantom(os.path.join(ROOT, "data", "phantom.nrrd"))
    centers = write_obj(os.path.join(ROOT, "data", "anatomy.obj"), [
        ("liver", ellipsoid(*LIVER)),
        ("esophagus", cylinder_y(*ESOPHAGUS)),
    ])

    scene = {
        "schema_version": 1,
        "volume_ref": "phantom.nrrd",
        "patient": {"preset": "supine", "angle_deg": 0.0, "pivot": [0.0, 0.0, 60.0]},
        "structures": [
            {"id": "liver", "name": "liver", "mesh_file": "anatomy.obj", "mesh_object": "liver",
             "transform": {"rotation": [1, 0, 0, 0], "translation": [0, 0, 0], "scale": 1},
             "visible": True, "color": [0.6, 0.25, 0.2, 1.0]},
            {"id": "esophagus", "name": "esophagus", "mesh_file": "anatomy.obj",
             "mesh_object": "esophagus",
             "transform": {"rotation": [1, 0, 0, 0], "translation": [0, 0, 0], "scale": 1},
             "visible": True, "color": [0.9, 0.7, 0.6, 1.0]},
        ],
        "robot_models": models,
        "robots": [
            {"id": "arm", "model": "spherical_rcm",
             "base": {"rotation": [1, 0, 0, 0], "translation": [30.0, 0.0, 115.0]},
             "joints": [0.0, 0.0, 0.0], "role": "instrument"},
            {"id": "holder", "model": "ur5",
             "base": {"rotation": [1, 0, 0, 0], "translation": [350.0, -200.0, 150.0]},
             "joints": [2.6, -2.2, -1.4, -1.0, 1.57, 0.0], "role": "endoscope"},
        ],
        "trocars": {"t1": [30.0, 0.0, 115.0], "t2": [-20.0, -40.0, 118.0]},
        "targets": centers,
        "strokes": [],
        "open_stroke": None,
        "next_stroke_number": 1,
        "table": {"min": [-200.0, -1000.0, -100.0], "max": [200.0, 1000.0, 0.0]},
        "settings": {"stroke_min_spacing": 1.0, "collision_report_threshold": 10.0,
                     "endoscope_standoff": 50.0, "rcm_tolerance": 0.001},
    }
    with open(os.path.join(ROOT, "data", "sample_scene.json"), "w") as f:
        json.dump(scene, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
