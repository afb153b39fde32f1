"""Named guidance presets: the per-task settings shipped with the tool.

Each preset carries band scales, cutoff and target mode; values a preset
does not pin (notably the guidance scale for the generation/video rows)
must come from the config file or flags.
"""

from __future__ import annotations

PRESETS: dict[str, dict] = {
    # text-to-image generation
    "generation": {"h": 1.5, "l": 1.0, "r0": 0.9, "strategy": "energy", "target": "delta"},
    "generation-sd3": {"h": 1.2, "l": 1.0, "r0": 0.9, "strategy": "energy", "target": "delta"},
    # monocular depth refinement: single-branch pipelines, fixed unit guidance,
    # so the prediction itself is rescaled
    "depth": {"h": 1.5, "l": 1.0, "r0": 0.3, "strategy": "spatial", "target": "epsilon", "omega": 1.0},
    "depth-kitti": {"h": 1.2, "l": 1.0, "r0": 0.3, "strategy": "spatial", "target": "epsilon", "omega": 1.0},
    "depth-eth3d": {"h": 1.1, "l": 1.0, "r0": 0.3, "strategy": "spatial", "target": "epsilon", "omega": 1.0},
    # text-guided image editing (evaluation protocol runs guidance scale 15)
    "editing": {"h": 2.0, "l": 1.0, "r0": 0.3, "strategy": "spatial", "target": "delta", "omega": 15.0},
    "editing-ddpm": {"h": 1.2, "l": 1.0, "r0": 0.3, "strategy": "spatial", "target": "delta", "omega": 15.0},
    # text-to-video
    "video": {"h": 1.5, "l": 1.0, "r0": 0.9, "strategy": "energy", "target": "delta"},
}


def preset_values(name: str) -> dict:
    try:
        return dict(PRESETS[name])
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; known: {', '.join(sorted(PRESETS))}") from None
