"""Construction and verification of the bundled Media Store dataset.

Published results pin only relative energies (savings percentages, the 64 MB
codec crossover, qualitative orderings), never absolute joules, so the
bundled profiles are synthesized: a linear baseline for the LAME codec, the
Vorbis and Speex curves solved from the savings equalities, plausible codec
output ratios, and a convex piecewise-linear communication curve solved so
the remote savings equalities hold exactly at 128 and 512 MB.

``verify_dataset`` re-checks every constraint directly on the raw document
with its own interpolation, independent of the profile evaluation code.
"""

from __future__ import annotations

from bisect import bisect_left
from typing import Mapping

from .errors import ProfileError

GRID = (4.0, 8.0, 16.0, 32.0, 64.0, 128.0, 256.0, 384.0, 512.0)

# LAME baseline: joules per event grow linearly with file size.
LAME_J_PER_MB = 0.55

# Vorbis relative to LAME: pricier below the 64 MB crossover, pinned savings
# above it (48% at 128 MB up to 65% at 512 MB, nondecreasing in between).
VORBIS_RATIO_BELOW = {4.0: 1.08, 8.0: 1.15, 16.0: 1.15, 32.0: 1.10}
VORBIS_SAVINGS_ABOVE = {128.0: 0.48, 256.0: 0.55, 384.0: 0.60, 512.0: 0.65}

# Compressed-size ratios (output MB per input MB).
OUTPUT_RATIO = {"lame": 0.09, "vorbis": 0.08, "speex": 0.02}

# Remote composed-total targets: total(alt) = ratio * total(baseline).
REMOTE_SPEEX_VS_LAME = {128.0: 0.48, 512.0: 0.19}      # 52% / 81% savings
REMOTE_SPEEX_VS_VORBIS = {128.0: 0.57, 512.0: 0.46}    # 43% / 54% savings

# Free design anchors of the convex communication curve (payload MB -> J).
COMM_BASE_PAYLOAD = 0.08          # smallest payload on the grid (Speex at 4 MB)
COMM_BASE_J = 12.0                # connection setup floor
COMM_EARLY_SLOPE = 2.0            # J/MB below 0.72 MB payload
COMM_AT_2_56 = 104.0
COMM_AT_11_52 = 600.0
COMM_AT_40_96 = 2400.0

# Speex energies not pinned by the remote equalities.
SPEEX_FREE_J = {4.0: 3.1, 8.0: 5.3, 16.0: 11.9, 32.0: 31.3,
                64.0: 82.5, 256.0: 368.0, 384.0: 499.9}

SIMILARITY_SPREAD = 0.10
DENSE_SCAN_STEP_MB = 0.25

_CODECS = ("lame", "vorbis", "speex")
_VARIANT_ID = {"lame": "Compression.LAME", "vorbis": "Compression.Vorbis",
               "speex": "Compression.Speex"}


def payload(codec: str, size: float) -> float:
    """Compressed size a codec produces; rounded so grid payloads coincide
    exactly with communication-curve knots."""
    return round(OUTPUT_RATIO[codec] * size, 10)


def lame_energy(size: float) -> float:
    return LAME_J_PER_MB * size


def vorbis_energy(size: float) -> float:
    if size < 64.0:
        return lame_energy(size) * VORBIS_RATIO_BELOW[size]
    if size == 64.0:
        return lame_energy(size)
    return lame_energy(size) * (1.0 - VORBIS_SAVINGS_ABOVE[size])


def _comm_anchors() -> list[tuple[float, float]]:
    """Anchor points of the communication curve. The values at the LAME/Vorbis
    payloads of 128 and 512 MB are solved from the remote savings equalities;
    the rest are free parameters keeping the chord slopes nondecreasing."""
    el128, el512 = lame_energy(128.0), lame_energy(512.0)
    ev128, ev512 = vorbis_energy(128.0), vorbis_energy(512.0)
    rl128, rv128 = REMOTE_SPEEX_VS_LAME[128.0], REMOTE_SPEEX_VS_VORBIS[128.0]
    rl512, rv512 = REMOTE_SPEEX_VS_LAME[512.0], REMOTE_SPEEX_VS_VORBIS[512.0]

    # At 128 MB both equalities share total(speex,128):
    #   rl*(el128 + C(11.52)) = rv*(ev128 + C(10.24))
    c10_24 = (rl128 * (el128 + COMM_AT_11_52) - rv128 * ev128) / rv128
    # Same shape at 512 MB for C(46.08) given the free C(40.96):
    c46_08 = (rv512 * (ev512 + COMM_AT_40_96) - rl512 * el512) / rl512

    return [
        (COMM_BASE_PAYLOAD, COMM_BASE_J),
        (0.72, COMM_BASE_J + COMM_EARLY_SLOPE * (0.72 - COMM_BASE_PAYLOAD)),
        (2.56, COMM_AT_2_56),
        (10.24, c10_24),
        (11.52, COMM_AT_11_52),
        (40.96, COMM_AT_40_96),
        (46.08, c46_08),
    ]


def communication_energy(payload: float) -> float:
    anchors = _comm_anchors()
    if payload < anchors[0][0] or payload > anchors[-1][0]:
        raise ProfileError(f"payload {payload!r} outside communication design range")
    for (x0, y0), (x1, y1) in zip(anchors, anchors[1:]):
        if x0 <= payload <= x1:
            return y0 + (payload - x0) * (y1 - y0) / (x1 - x0)
    raise AssertionError("unreachable")


def speex_energy(size: float) -> float:
    if size in SPEEX_FREE_J:
        return SPEEX_FREE_J[size]
    if size in REMOTE_SPEEX_VS_LAME:
        total_lame = lame_energy(size) + communication_energy(payload("lame", size))
        return (REMOTE_SPEEX_VS_LAME[size] * total_lame
                - communication_energy(payload("speex", size)))
    raise ProfileError(f"no Speex energy defined at size {size!r}")


def _codec_energy(codec: str, size: float) -> float:
    return {"lame": lame_energy, "vorbis": vorbis_energy, "speex": speex_energy}[codec](size)


def comm_knots() -> list[float]:
    """All payloads the grid can produce, so composed totals at grid sizes
    read communication energy exactly at knots."""
    return sorted({payload(c, s) for c in _CODECS for s in GRID})


def build_model_document() -> dict:
    return {
        "nodes": [
            {"id": "MediaStore", "kind": "concern", "rule": "mandatory",
             "children": ["Store", "Compression", "Communication"]},
            {"id": "Store", "kind": "concern", "rule": "mandatory",
             "children": ["Store.mode"]},
            {"id": "Store.mode", "kind": "variant-group", "rule": "alternative",
             "children": ["Store.Local", "Store.Remote"]},
            {"id": "Store.Local", "kind": "variant", "rule": "optional", "children": []},
            {"id": "Store.Remote", "kind": "variant", "rule": "optional", "children": []},
            {"id": "Compression", "kind": "concern", "rule": "mandatory",
             "children": ["Compression.codec"],
             "parameter": {"name": "file_size", "unit": "MB"}},
            {"id": "Compression.codec", "kind": "variant-group", "rule": "alternative",
             "children": ["Compression.LAME", "Compression.Vorbis", "Compression.Speex"]},
            {"id": "Compression.LAME", "kind": "variant", "rule": "optional", "children": []},
            {"id": "Compression.Vorbis", "kind": "variant", "rule": "optional", "children": []},
            {"id": "Compression.Speex", "kind": "variant", "rule": "optional", "children": []},
            {"id": "Communication", "kind": "concern", "rule": "optional",
             "children": [], "parameter": {"name": "payload_size", "unit": "MB"}},
        ],
        "constraints": [
            {"kind": "implies", "antecedent": "Store.Remote",
             "consequents": ["Compression", "Communication"]},
        ],
    }


def build_profiles_document() -> dict:
    profiles = []
    for codec in _CODECS:
        samples = []
        for size in GRID:
            samples.append({
                "param": size,
                "energy_j": _codec_energy(codec, size),
                "outputs": {"output_size": payload(codec, size)},
            })
        profiles.append({
            "concern": "Compression",
            "variant": _VARIANT_ID[codec],
            "parameter": {"name": "file_size", "unit": "MB"},
            "samples": samples,
            "source": "constructed reference dataset (tools/fit-dataset)",
        })
    comm_samples = [{"param": p, "energy_j": communication_energy(p), "outputs": {}}
                    for p in comm_knots()]
    profiles.append({
        "concern": "Communication",
        "variant": None,
        "parameter": {"name": "payload_size", "unit": "MB"},
        "samples": comm_samples,
        "source": "constructed reference dataset (tools/fit-dataset)",
    })
    return {"profiles": profiles}


# -- independent verifier ------------------------------------------------------

def _lerp_doc(samples: list[Mapping], param: float) -> float:
    xs = [s["param"] for s in samples]
    ys = [s["energy_j"] for s in samples]
    if param < xs[0] or param > xs[-1]:
        raise ProfileError(f"verifier: param {param!r} out of range [{xs[0]}, {xs[-1]}]")
    i = bisect_left(xs, param)
    if i < len(xs) and xs[i] == param:
        return ys[i]
    t = (param - xs[i - 1]) / (xs[i] - xs[i - 1])
    return ys[i - 1] + t * (ys[i] - ys[i - 1])


def verify_dataset(document: Mapping, rel_tol: float = 1e-9) -> list[str]:
    """Check every design constraint directly on a repository document.

    Returns the list of passed check names; raises ProfileError naming every
    failed check otherwise.
    """
    failures: list[str] = []
    passed: list[str] = []

    def check(name: str, ok: bool, detail: str = "") -> None:
        if ok:
            passed.append(name)
        else:
            failures.append(f"{name}{': ' + detail if detail else ''}")

    by_variant: dict[str | None, Mapping] = {}
    for profile in document["profiles"]:
        key = profile["variant"] if profile["concern"] == "Compression" else profile["concern"]
        by_variant[key] = profile

    lame = by_variant.get("Compression.LAME")
    vorbis = by_variant.get("Compression.Vorbis")
    speex = by_variant.get("Compression.Speex")
    comm = by_variant.get("Communication")
    check("profiles-present", None not in (lame, vorbis, speex, comm))
    if failures:
        raise ProfileError("dataset verification failed: " + "; ".join(failures))

    for name, profile in (("lame", lame), ("vorbis", vorbis), ("speex", speex)):
        params = tuple(s["param"] for s in profile["samples"])
        check(f"{name}-grid", params == GRID, f"grid is {params}")

    def codec_e(profile: Mapping, size: float) -> float:
        return _lerp_doc(profile["samples"], size)

    def codec_out(profile: Mapping, size: float) -> float:
        for s in profile["samples"]:
            if s["param"] == size:
                return s["outputs"]["output_size"]
        raise ProfileError(f"verifier: no sample at {size!r}")

    def total(profile: Mapping, size: float) -> float:
        return codec_e(profile, size) + _lerp_doc(comm["samples"], codec_out(profile, size))

    def close(a: float, b: float) -> bool:
        return abs(a - b) <= rel_tol * max(abs(a), abs(b), 1.0)

    # monotone energies
    for name, profile in (("lame", lame), ("vorbis", vorbis), ("speex", speex)):
        energies = [s["energy_j"] for s in profile["samples"]]
        check(f"{name}-energy-monotone",
              all(a < b for a, b in zip(energies, energies[1:])))

    # local ordering around the 64 MB crossover
    check("lame-below-vorbis-under-64",
          all(codec_e(lame, s) < codec_e(vorbis, s) for s in GRID if s < 64))
    check("lame-equals-vorbis-at-64", codec_e(lame, 64.0) == codec_e(vorbis, 64.0))
    check("vorbis-below-lame-above-64",
          all(codec_e(vorbis, s) < codec_e(lame, s) for s in GRID if s > 64))

    # dense sign scan: exactly one local LAME/Vorbis crossover, at 64 MB
    flips = []
    last_sign = 0
    scan = GRID[0]
    while scan <= GRID[-1] + 1e-12:
        d = codec_e(lame, min(scan, GRID[-1])) - codec_e(vorbis, min(scan, GRID[-1]))
        sign = (d > 0) - (d < 0)
        if sign != 0:
            if last_sign != 0 and sign != last_sign:
                flips.append(scan)
            last_sign = sign
        scan += DENSE_SCAN_STEP_MB
    check("single-local-crossover-64", len(flips) == 1 and flips[0] - 64.0 <= DENSE_SCAN_STEP_MB,
          f"flips at {flips}")

    # pinned local savings
    for size, saving in VORBIS_SAVINGS_ABOVE.items():
        check(f"local-savings-{size:g}",
              close(1.0 - codec_e(vorbis, size) / codec_e(lame, size), saving))
    savings_seq = [1.0 - codec_e(vorbis, s) / codec_e(lame, s)
                   for s in (128.0, 256.0, 384.0, 512.0)]
    check("local-savings-nondecreasing",
          all(a <= b + rel_tol for a, b in zip(savings_seq, savings_seq[1:])))

    # Speex locally dominant from 8 MB, hardest compressor everywhere
    check("speex-local-max-from-8",
          all(codec_e(speex, s) >= max(codec_e(lame, s), codec_e(vorbis, s))
              for s in GRID if s >= 8))
    check("speex-output-smallest",
          all(codec_out(speex, s) < codec_out(vorbis, s) < codec_out(lame, s) for s in GRID))

    # communication curve: positive, increasing, convex over its knots
    cxs = [s["param"] for s in comm["samples"]]
    cys = [s["energy_j"] for s in comm["samples"]]
    check("comm-positive", all(y > 0 for y in cys))
    check("comm-increasing", all(a < b for a, b in zip(cys, cys[1:])))
    slopes = [(y1 - y0) / (x1 - x0)
              for (x0, y0), (x1, y1) in zip(zip(cxs, cys), zip(cxs[1:], cys[1:]))]
    check("comm-convex", all(s1 - s0 >= -1e-9 for s0, s1 in zip(slopes, slopes[1:])))
    payloads = [codec_out(p, s) for p in (lame, vorbis, speex) for s in GRID]
    check("comm-covers-payloads", cxs[0] <= min(payloads) and max(payloads) <= cxs[-1])

    # pinned remote savings
    for size, ratio in REMOTE_SPEEX_VS_LAME.items():
        check(f"remote-speex-vs-lame-{size:g}", close(total(speex, size), ratio * total(lame, size)))
    for size, ratio in REMOTE_SPEEX_VS_VORBIS.items():
        check(f"remote-speex-vs-vorbis-{size:g}", close(total(speex, size), ratio * total(vorbis, size)))

    # remote qualitative shape: similar near 4 MB, Speex greenest from 8 MB
    totals4 = [total(p, 4.0) for p in (lame, vorbis, speex)]
    spread = (max(totals4) - min(totals4)) / max(totals4)
    check("remote-similar-at-4", spread <= SIMILARITY_SPREAD, f"spread {spread:.4f}")
    check("remote-speex-not-min-at-4", min(totals4) < total(speex, 4.0))
    check("remote-speex-min-from-8",
          all(total(speex, s) <= min(total(lame, s), total(vorbis, s))
              for s in GRID if s >= 8))

    if failures:
        raise ProfileError("dataset verification failed: " + "; ".join(failures))
    return passed


# -- bundled rule set ------------------------------------------------------------

def build_rules_document(capacity_mb: float = 4096.0, hysteresis: float = 0.0) -> dict:
    """Derive the bundled rule set from the constructed dataset: the local
    codec thresholds, the collapsed remote rule, and the storage-full
    migration rule that outranks both."""
    from .analysis import compare, derive_rules, partition_greenest, simplify_partition
    from .model import ReconfigurationAction, loads_model
    from .profiles import chain as make_chain, loads_repository
    from .rules import Condition, EcaRule, OP_LT, dump_rules
    from .runtime import STORAGE_FREE_FRACTION

    model = loads_model(build_model_document())
    repo = loads_repository(build_profiles_document())
    grid = list(GRID)

    local_chains = [make_chain(("Compression", v)) for v in _VARIANT_ID.values()]
    local_series = compare(repo, model, local_chains, grid)
    local_rules = derive_rules(partition_greenest(local_series),
                               guard={"storage": "local"}, hysteresis=hysteresis,
                               priority_base=1)

    remote_chains = [
        make_chain(("Compression", v, "output_size"), ("Communication",), label=v)
        for v in _VARIANT_ID.values()
    ]
    remote_series = compare(repo, model, remote_chains, grid)
    remote_partition = simplify_partition(partition_greenest(remote_series), remote_series)
    remote_rules = derive_rules(remote_partition, guard={"storage": "remote"},
                                hysteresis=hysteresis,
                                priority_base=1 + len(local_rules))

    storage_rule = EcaRule(
        id="local-storage-almost-full",
        priority=0,
        event="free_capacity",
        condition=Condition(OP_LT, threshold=STORAGE_FREE_FRACTION * capacity_mb),
        guard={"storage": "local"},
        action=ReconfigurationAction.from_json({
            "kind": "composite",
            "parts": [
                {"kind": "bind-variant", "target": "Store.Remote"},
                {"kind": "activate-concern", "target": "Communication"},
                {"kind": "deactivate-concern", "target": "Store.Local"},
                {"kind": "bind-variant", "target": "Compression.Speex"},
            ],
        }),
    )
    return dump_rules([storage_rule, *local_rules, *remote_rules])
