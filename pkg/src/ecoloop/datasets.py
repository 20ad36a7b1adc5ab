"""Locations of the bundled Media Store dataset files."""

from __future__ import annotations

from pathlib import Path

_REPO_ROOT = Path(__file__).resolve().parents[2]

MEDIASTORE_MODEL = _REPO_ROOT / "models" / "mediastore.json"
MEDIASTORE_PROFILES = _REPO_ROOT / "profiles" / "mediastore.json"
MEDIASTORE_RULES = _REPO_ROOT / "rules" / "mediastore.json"
REFERENCE_WORKLOAD = _REPO_ROOT / "workloads" / "reference.jsonl"
